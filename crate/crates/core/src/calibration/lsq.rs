use crate::error::{Error, Result};

use super::model::PolynomialModel;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Usage("matrix rows have different lengths".into()));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Aᵀ·r
    pub fn transpose_mul_vec(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, ri) in r.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * ri;
            }
        }
        out
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|a| a.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Vandermonde design matrix: row i is [1, vᵢ, vᵢ², …, vᵢⁿ].
///
/// Any number of rows is accepted; [`least_squares_fit`] rejects systems with
/// fewer rows than columns.
pub fn build_design_matrix(signals: &[f64], order: usize) -> Result<Matrix> {
    if order == 0 {
        return Err(Error::Usage("polynomial order must be >= 1".into()));
    }
    if let Some(bad) = signals.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite signal {bad}")));
    }
    let cols = order + 1;
    let mut data = Vec::with_capacity(signals.len() * cols);
    for &v in signals {
        let mut p = 1.0;
        for _ in 0..cols {
            data.push(p);
            p *= v;
        }
    }
    Ok(Matrix {
        rows: signals.len(),
        cols,
        data,
    })
}

// Column j is treated as dependent once its Householder pivot falls below
// this fraction of the column's original norm.
const RANK_TOL: f64 = 1e-10;

/// Minimizes ‖A·x − y‖₂ with a Householder QR factorization.
///
/// Equivalent to the normal-equations solution (AᵀA)⁻¹Aᵀy without forming
/// AᵀA. Rank deficiency is reported as [`Error::SingularFit`] with the
/// polynomial order the matrix corresponds to (columns − 1).
pub fn least_squares_fit(a: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (a.rows, a.cols);
    let order = n.saturating_sub(1);
    if y.len() != m {
        return Err(Error::Usage(format!(
            "least squares: {} rows but {} targets",
            m,
            y.len()
        )));
    }
    if n == 0 {
        return Err(Error::Usage("least squares: matrix has no columns".into()));
    }
    if m < n {
        return Err(Error::Underdetermined {
            order,
            needed: n,
            rows: m,
        });
    }
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite target {bad}")));
    }

    let col_norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| a.get(i, j).powi(2)).sum::<f64>().sqrt())
        .collect();
    let mut r = a.data.clone();
    let mut b = y.to_vec();
    let at = |i: usize, j: usize| i * n + j;
    let mut v = vec![0.0; m];

    for j in 0..n {
        let norm = (j..m).map(|i| r[at(i, j)].powi(2)).sum::<f64>().sqrt();
        if norm <= RANK_TOL * col_norms[j] || norm == 0.0 {
            return Err(Error::SingularFit { order });
        }
        let alpha = if r[at(j, j)] > 0.0 { -norm } else { norm };
        for i in j..m {
            v[i] = r[at(i, j)];
        }
        v[j] -= alpha;
        let v_norm_sq: f64 = (j..m).map(|i| v[i] * v[i]).sum();
        for k in j..n {
            let s: f64 = (j..m).map(|i| v[i] * r[at(i, k)]).sum();
            let f = 2.0 * s / v_norm_sq;
            for i in j..m {
                r[at(i, k)] -= f * v[i];
            }
        }
        let s: f64 = (j..m).map(|i| v[i] * b[i]).sum();
        let f = 2.0 * s / v_norm_sq;
        for i in j..m {
            b[i] -= f * v[i];
        }
    }

    let mut x = vec![0.0; n];
    for j in (0..n).rev() {
        let tail: f64 = ((j + 1)..n).map(|k| r[at(j, k)] * x[k]).sum();
        x[j] = (b[j] - tail) / r[at(j, j)];
    }
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::SingularFit { order });
    }
    Ok(x)
}

/// Builds the design matrix for `order` and solves for the coefficients.
pub fn fit_polynomial(signals: &[f64], forces: &[f64], order: usize) -> Result<PolynomialModel> {
    let a = build_design_matrix(signals, order)?;
    PolynomialModel::new(least_squares_fit(&a, forces)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_matrix_examples() {
        assert_eq!(
            build_design_matrix(&[2.0], 1).unwrap().to_rows(),
            vec![vec![1.0, 2.0]]
        );
        let a = build_design_matrix(&[1.0, 3.0], 2).unwrap();
        assert_eq!(a.to_rows(), vec![vec![1.0, 1.0, 1.0], vec![1.0, 3.0, 9.0]]);
        let a = build_design_matrix(&[0.0], 3).unwrap();
        assert_eq!(a.to_rows(), vec![vec![1.0, 0.0, 0.0, 0.0]]);
        let a = build_design_matrix(&[1.0, 3.0], 2).unwrap();
        assert!(matches!(
            least_squares_fit(&a, &[0.0, 1.0]),
            Err(Error::Underdetermined {
                order: 2,
                needed: 3,
                rows: 2
            })
        ));
        assert!(build_design_matrix(&[1.0, f64::NAN], 1).is_err());
        assert!(build_design_matrix(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn exact_line_is_recovered() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        let f: Vec<f64> = v.iter().map(|x| 1.0 + 2.0 * x).collect();
        let c = least_squares_fit(&build_design_matrix(&v, 1).unwrap(), &f).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_signals_are_singular_for_high_orders() {
        let v = [1.0, 1.0, 2.0, 2.0, 2.0];
        let f = [0.1, 0.1, 0.2, 0.2, 0.2];
        fit_polynomial(&v, &f, 1).unwrap();
        assert!(matches!(
            fit_polynomial(&v, &f, 2),
            Err(Error::SingularFit { order: 2 })
        ));
    }

    #[test]
    fn residual_is_orthogonal_to_columns() {
        let v: Vec<f64> = (0..40).map(|i| i as f64 * 0.3).collect();
        let f: Vec<f64> = v
            .iter()
            .enumerate()
            .map(|(i, x)| 0.1 * x + if i % 2 == 0 { 0.05 } else { -0.03 })
            .collect();
        for order in 1..=5 {
            let a = build_design_matrix(&v, order).unwrap();
            let x = least_squares_fit(&a, &f).unwrap();
            let resid: Vec<f64> = a.mul_vec(&x).iter().zip(&f).map(|(p, t)| p - t).collect();
            let g = a.transpose_mul_vec(&resid);
            let scale = a.norm_inf() * f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(
                g.iter().all(|gi| gi.abs() <= 1e-8 * scale),
                "order {order}: {g:?}"
            );
        }
    }
}
