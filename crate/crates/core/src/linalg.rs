//! Dense non-Hermitian eigendecomposition with residual checks and
//! biorthogonal dual vectors.

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default bound on `max_s |H v_s - E_s v_s| / |H|_F`.
pub const EIG_RESIDUAL_TOL: f64 = 1e-8;
/// Dual-basis condition number above which a decomposition is treated as
/// numerically defective.
pub const DEFECTIVE_COND: f64 = 1e8;

/// `H = V diag(E) V^-1` with unit-norm columns of `V`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<Complex64>,
    pub right: Mat<Complex64>,
    /// `V^-1`; row `s` is the left eigenvector dual to column `s` of `right`.
    pub dual: Mat<Complex64>,
    /// `|V|_F |V^-1|_F / n`, equal to 1 for a unitary `V`.
    pub cond: f64,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_defective(&self) -> bool {
        !(self.cond.is_finite() && self.cond <= DEFECTIVE_COND)
    }

    /// Expansion coefficients `c = V^-1 psi`, so that `psi = sum_s c_s v_s`.
    pub fn coefficients(&self, psi: &[Complex64]) -> Vec<Complex64> {
        mat_vec(self.dual.as_ref(), psi)
    }

    /// `sum_s c_s v_s`.
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        mat_vec(self.right.as_ref(), coeffs)
    }
}

/// Full eigendecomposition of a square complex matrix.
///
/// Fails if any relative residual exceeds [`EIG_RESIDUAL_TOL`].
pub fn eig(h: MatRef<'_, Complex64>) -> Result<EigenDecomposition> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(Error::InvalidArgument(format!("matrix is {}x{}, not square", n, h.ncols())));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let evd = h.eigen().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let values: Vec<Complex64> = evd.S().column_vector().iter().copied().collect();
    let mut right = evd.U().to_owned();
    for j in 0..n {
        let norm = right.col(j).norm_l2();
        if norm == 0.0 {
            return Err(Error::Eigen(format!("zero eigenvector {j}")));
        }
        for i in 0..n {
            right[(i, j)] /= norm;
        }
    }
    let worst = max_relative_residual(h, &values, right.as_ref());
    if worst > EIG_RESIDUAL_TOL {
        return Err(Error::Residual { residual: worst, tol: EIG_RESIDUAL_TOL });
    }
    let dual = right.partial_piv_lu().inverse();
    let cond = right.norm_l2() * dual.norm_l2() / n as f64;
    Ok(EigenDecomposition { values, right, dual, cond })
}

/// `max_s |H v_s - E_s v_s| / |H|_F` for unit-norm columns `v_s`.
pub fn max_relative_residual(h: MatRef<'_, Complex64>, values: &[Complex64], vecs: MatRef<'_, Complex64>) -> f64 {
    let hv = h * vecs;
    let scale = h.norm_l2().max(f64::MIN_POSITIVE);
    let mut worst = 0f64;
    for (s, &e) in values.iter().enumerate() {
        let mut r2 = 0.0;
        for i in 0..h.nrows() {
            r2 += (hv[(i, s)] - e * vecs[(i, s)]).norm_sqr();
        }
        worst = worst.max(r2.sqrt() / scale);
    }
    worst
}

pub fn mat_vec(a: MatRef<'_, Complex64>, x: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(a.ncols(), x.len());
    let mut out = vec![Complex64::new(0.0, 0.0); a.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == Complex64::new(0.0, 0.0) {
            continue;
        }
        let col = a.col(j);
        for (i, o) in out.iter_mut().enumerate() {
            *o += col[i] * xj;
        }
    }
    out
}

pub fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize) -> Mat<Complex64> {
        Mat::from_fn(n, n, |i, j| {
            let s = (i + j) as f64;
            Complex64::new((0.3 * s).cos() / (1.0 + s), -0.1 * ((i * j) as f64 * 0.7).sin().abs())
        })
    }

    #[test]
    fn reconstructs_matrix() {
        let h = test_matrix(12);
        let d = eig(h.as_ref()).unwrap();
        let diag = Mat::from_fn(12, 12, |i, j| if i == j { d.values[i] } else { Complex64::new(0.0, 0.0) });
        let back = &(&d.right * &diag) * &d.dual;
        assert!((&back - &h).norm_l2() < 1e-10);
        assert!(!d.is_defective());
    }

    #[test]
    fn coefficients_invert_synthesis() {
        let h = test_matrix(7);
        let d = eig(h.as_ref()).unwrap();
        let psi: Vec<Complex64> = (0..7).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let back = d.synthesize(&d.coefficients(&psi));
        for (a, b) in psi.iter().zip(&back) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_square() {
        let m = Mat::<Complex64>::zeros(2, 3);
        assert!(eig(m.as_ref()).is_err());
    }
}
