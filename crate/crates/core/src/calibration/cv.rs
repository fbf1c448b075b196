use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::CalibrationDataset;
use super::lsq::fit_polynomial;
use super::model::{CalibratedModel, FitMetadata, PolynomialModel, SignalUnits};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::units::rmse;

/// Orders whose mean test RMSE is within this many newtons of the best are
/// considered tied; the lowest such order is selected.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Fold index of every sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    k: usize,
    fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }
}

/// Shuffles `len` sample indices with `rng` and cuts them into `k`
/// contiguous folds whose sizes differ by at most one.
pub fn kfold_split_with<R: Rng + ?Sized>(
    len: usize,
    k: usize,
    rng: &mut R,
) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Usage(format!("k-fold needs k >= 2, got {k}")));
    }
    if len < k {
        return Err(Error::Usage(format!(
            "cannot split {len} samples into {k} folds"
        )));
    }
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(rng);
    let (base, extra) = (len / k, len % k);
    let mut fold_of = vec![0; len];
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &idx in &order[pos..pos + size] {
            fold_of[idx] = fold;
        }
        pos += size;
    }
    Ok(FoldAssignment { k, fold_of })
}

/// Deterministic k-fold assignment for `seed`.
pub fn kfold_split(len: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    kfold_split_with(len, k, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOptions {
    pub orders: Vec<usize>,
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Use only fold 0 as the test fold in each repeat instead of rotating
    /// through all of them.
    pub first_fold_only: bool,
    pub execution: Execution,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            orders: (1..=5).collect(),
            k: 5,
            repeats: 20,
            seed: 0,
            first_fold_only: false,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderErrors {
    pub order: usize,
    pub train_rmse: f64,
    pub test_rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub orders: Vec<OrderErrors>,
    pub selected_order: usize,
    pub repeats: usize,
    pub folds: usize,
    pub first_fold_only: bool,
}

impl FitReport {
    pub fn errors_for(&self, order: usize) -> Option<&OrderErrors> {
        self.orders.iter().find(|e| e.order == order)
    }

    /// Table of mean train/test RMSE per order, best order marked with `*`.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "# {} repeat(s) x {} fold(s){}\norder  train_rmse_n  test_rmse_n\n",
            self.repeats,
            self.folds,
            if self.first_fold_only {
                ", fold 0 only"
            } else {
                ""
            }
        );
        for e in &self.orders {
            let mark = if e.order == self.selected_order {
                " *"
            } else {
                ""
            };
            out.push_str(&format!(
                "{:>5}  {:>12.6}  {:>11.6}{mark}\n",
                e.order, e.train_rmse, e.test_rmse
            ));
        }
        out
    }
}

fn validate(dataset: &CalibrationDataset, opts: &CvOptions) -> Result<()> {
    if opts.orders.is_empty() {
        return Err(Error::Usage("no model orders requested".into()));
    }
    if let Some(&o) = opts.orders.iter().find(|&&o| o == 0) {
        return Err(Error::Usage(format!("model order must be >= 1, got {o}")));
    }
    if opts.repeats == 0 {
        return Err(Error::Usage("repeats must be >= 1".into()));
    }
    let n = dataset.len();
    let mut orders = opts.orders.clone();
    orders.sort_unstable();
    if let Some(&order) = orders.iter().find(|&&o| n < o + 1) {
        return Err(Error::Underdetermined {
            order,
            needed: order + 1,
            rows: n,
        });
    }
    if opts.k < 2 {
        return Err(Error::Usage(format!("k-fold needs k >= 2, got {}", opts.k)));
    }
    if n < opts.k {
        return Err(Error::Usage(format!(
            "cannot split {n} samples into {} folds",
            opts.k
        )));
    }
    // the largest fold is held out, leaving the smallest training set
    let min_train = n - n.div_ceil(opts.k);
    if let Some(&order) = orders.iter().find(|&&o| min_train < o + 1) {
        return Err(Error::Underdetermined {
            order,
            needed: order + 1,
            rows: min_train,
        });
    }
    Ok(())
}

/// Per-order (train, test) RMSE averaged over the test folds of one repeat.
fn run_repeat(
    dataset: &CalibrationDataset,
    opts: &CvOptions,
    repeat: usize,
) -> Result<Vec<(f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(repeat as u64);
    let folds = kfold_split_with(dataset.len(), opts.k, &mut rng)?;
    let test_folds: Vec<usize> = if opts.first_fold_only {
        vec![0]
    } else {
        (0..opts.k).collect()
    };

    let mut sums = vec![(0.0, 0.0); opts.orders.len()];
    for &fold in &test_folds {
        let (train_v, train_f) = dataset.select(&folds.train_indices(fold));
        let (test_v, test_f) = dataset.select(&folds.test_indices(fold));
        for (slot, &order) in sums.iter_mut().zip(&opts.orders) {
            let model = fit_polynomial(&train_v, &train_f, order).map_err(|e| {
                e.with_context(format!("repeat {repeat}, test fold {fold}, order {order}"))
            })?;
            let predict = |vs: &[f64]| vs.iter().map(|&v| model.eval(v)).collect::<Vec<_>>();
            slot.0 += rmse(&predict(&train_v), &train_f)?;
            slot.1 += rmse(&predict(&test_v), &test_f)?;
        }
    }
    let n = test_folds.len() as f64;
    Ok(sums.into_iter().map(|(tr, te)| (tr / n, te / n)).collect())
}

/// Repeated k-fold cross-validation over the requested polynomial orders.
///
/// Every repeat reshuffles the folds (seeded from `seed` and the repeat
/// index), fits each order on the training folds and scores both sets.
/// Repeats run under `opts.execution`; averaging happens in repeat order so
/// the result does not depend on the execution strategy.
pub fn cross_validate(dataset: &CalibrationDataset, opts: &CvOptions) -> Result<FitReport> {
    validate(dataset, opts)?;
    let per_repeat = opts
        .execution
        .try_map(opts.repeats, |r| run_repeat(dataset, opts, r))?;

    let reps = opts.repeats as f64;
    let orders: Vec<OrderErrors> = opts
        .orders
        .iter()
        .enumerate()
        .map(|(i, &order)| {
            let (tr, te) = per_repeat
                .iter()
                .fold((0.0, 0.0), |(a, b), rep| (a + rep[i].0, b + rep[i].1));
            OrderErrors {
                order,
                train_rmse: tr / reps,
                test_rmse: te / reps,
            }
        })
        .collect();

    let best = orders
        .iter()
        .map(|e| e.test_rmse)
        .fold(f64::INFINITY, f64::min);
    let selected_order = orders
        .iter()
        .filter(|e| e.test_rmse <= best + TIE_TOLERANCE)
        .map(|e| e.order)
        .min()
        .expect("at least one order");

    Ok(FitReport {
        orders,
        selected_order,
        repeats: opts.repeats,
        folds: opts.k,
        first_fold_only: opts.first_fold_only,
    })
}

/// Cross-validation report plus the selected order refitted on all samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub report: FitReport,
    pub model: CalibratedModel,
}

pub fn calibrate(
    dataset: &CalibrationDataset,
    opts: &CvOptions,
    signal_units: SignalUnits,
) -> Result<Calibration> {
    let report = cross_validate(dataset, opts)?;
    let model: PolynomialModel =
        fit_polynomial(&dataset.signals(), &dataset.forces(), report.selected_order)
            .map_err(|e| e.with_context("final fit on the full dataset"))?;
    let fit = FitMetadata {
        seed: opts.seed,
        repeats: opts.repeats,
        folds: opts.k,
        first_fold_only: opts.first_fold_only,
        selected_order: report.selected_order,
        samples: dataset.len(),
        orders: report.orders.clone(),
    };
    Ok(Calibration {
        report,
        model: CalibratedModel {
            model,
            signal_units,
            fit: Some(fit),
        },
    })
}
