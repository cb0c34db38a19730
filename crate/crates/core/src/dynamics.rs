//! Non-Hermitian time evolution `i d/dt psi = H psi` in the two-excitation
//! sector, the equal-time pair correlator and eigenstate projections.
//!
//! The spectral propagator expands `psi(0)` in right eigenvectors through
//! the dual basis. When the decomposition is too ill-conditioned for that
//! to be trusted, evolution falls back to a matrix-free Taylor integrator.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{coupling_matrix, CouplingKernel};
use crate::lattice::LatticeSpec;
use crate::linalg::{self, EigenDecomposition, DEFECTIVE_COND};
use crate::twoexc::{PairBasis, PairSector};

/// Truncation target of one Taylor step, relative to the state norm.
pub const TAYLOR_TOL: f64 = 1e-15;
const TAYLOR_MAX_ORDER: usize = 60;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    pub norms: Vec<f64>,
}

impl Trajectory {
    fn from_states(times: &[f64], states: Vec<Vec<Complex64>>) -> Self {
        let norms = states.iter().map(|s| linalg::norm(s)).collect();
        Self { times: times.to_vec(), states, norms }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagator {
    Spectral,
    Taylor,
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if times[0] < 0.0 || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("times must be finite and nonnegative".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("time grid must be nondecreasing".into()));
    }
    Ok(())
}

/// Uniform grid on `[0, t_max]` with `samples` points, merged with any
/// extra `marks` inside the range.
pub fn time_grid(t_max: f64, samples: usize, marks: &[f64]) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || samples < 2 {
        return Err(Error::InvalidArgument(format!("time grid needs t_max > 0 and >= 2 samples, got {t_max}, {samples}")));
    }
    let mut t: Vec<f64> = (0..samples).map(|k| t_max * k as f64 / (samples - 1) as f64).collect();
    t.extend(marks.iter().copied().filter(|&m| (0.0..=t_max).contains(&m)));
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * t_max);
    Ok(t)
}

/// `|i, i + (l, l)>`; `site` defaults to the one placing the pair across
/// the array centre.
pub fn initial_pair_state(lattice: &LatticeSpec, site: Option<usize>, ell: usize) -> Result<Vec<Complex64>> {
    let l = lattice.size();
    if ell == 0 || ell >= l {
        return Err(Error::InvalidArgument(format!("separation {ell} does not fit an {l}x{l} array")));
    }
    let (ix, iy) = match site {
        Some(i) => lattice.coords(i)?,
        None => ((l - 1 - ell) / 2, (l - 1 - ell) / 2),
    };
    let i = lattice.index(ix, iy)?;
    let j = lattice.index(ix + ell, iy + ell)?;
    let basis = PairBasis::new(lattice.num_sites());
    let mut psi = vec![Complex64::new(0.0, 0.0); basis.dim()];
    psi[basis.index(i, j)] = Complex64::new(1.0, 0.0);
    Ok(psi)
}

/// Matrix-free action of the two-excitation Hamiltonian.
///
/// With `Psi` the symmetric site matrix of the pair amplitudes,
/// `(H psi)_ab = (G Psi)_ab + (G Psi)_ba`.
pub struct PairOperator {
    basis: PairBasis,
    g: Mat<Complex64>,
    bound: f64,
}

impl PairOperator {
    pub fn new(lattice: &LatticeSpec, kernel: CouplingKernel) -> Result<Self> {
        let g = coupling_matrix(lattice, kernel)?;
        let n = g.nrows();
        let row_sum = (0..n).map(|i| (0..n).map(|j| g[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
        Ok(Self { basis: PairBasis::new(n), g, bound: 2.0 * row_sum })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Upper bound on the operator 2-norm.
    pub fn norm_bound(&self) -> f64 {
        self.bound
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = self.basis.num_sites();
        let mut m = Mat::<Complex64>::zeros(n, n);
        for (p, &c) in psi.iter().enumerate() {
            let (i, j) = self.basis.pair(p);
            m[(i, j)] = c;
            m[(j, i)] = c;
        }
        let gm = &self.g * &m;
        (0..self.basis.dim())
            .map(|p| {
                let (a, b) = self.basis.pair(p);
                gm[(a, b)] + gm[(b, a)]
            })
            .collect()
    }
}

/// Taylor integration with steps of length at most `1 / |H|`.
pub fn taylor_evolve(
    apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
    norm_bound: f64,
    psi0: &[Complex64],
    times: &[f64],
) -> Result<Trajectory> {
    check_times(times)?;
    let h_max = 1.0 / norm_bound.max(1e-12);
    let mut psi = psi0.to_vec();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        while target - t > 0.0 {
            let h = (target - t).min(h_max);
            psi = taylor_step(&apply, &psi, h)?;
            t = if target - t <= h_max { target } else { t + h };
        }
        out.push(psi.clone());
    }
    Ok(Trajectory::from_states(times, out))
}

fn taylor_step(apply: &impl Fn(&[Complex64]) -> Vec<Complex64>, psi: &[Complex64], h: f64) -> Result<Vec<Complex64>> {
    let scale = linalg::norm(psi).max(f64::MIN_POSITIVE);
    let mut term = psi.to_vec();
    let mut acc = psi.to_vec();
    for k in 1..=TAYLOR_MAX_ORDER {
        let f = Complex64::new(0.0, -h / k as f64);
        term = apply(&term).into_iter().map(|z| z * f).collect();
        for (a, t) in acc.iter_mut().zip(&term) {
            *a += t;
        }
        if linalg::norm(&term) < TAYLOR_TOL * scale {
            return Ok(acc);
        }
    }
    Err(Error::Eigen(format!("Taylor series did not converge in {TAYLOR_MAX_ORDER} terms")))
}

fn phases(values: &[Complex64], coeffs: &[Complex64], t: f64) -> Vec<Complex64> {
    values.iter().zip(coeffs).map(|(e, c)| c * (Complex64::new(0.0, -t) * e).exp()).collect()
}

/// `psi(t) = sum_s c_s e^{-i E_s t} v_s` from a symmetry-blocked sector.
pub fn spectral_evolve(sector: &PairSector, psi0: &[Complex64], times: &[f64]) -> Result<Trajectory> {
    check_times(times)?;
    check_dim(psi0.len(), sector.num_states())?;
    let energies = sector.energies();
    let coeffs = sector.coefficients(psi0);
    let states = times.iter().map(|&t| sector.synthesize(&phases(&energies, &coeffs, t))).collect();
    Ok(Trajectory::from_states(times, states))
}

fn check_dim(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::InvalidArgument(format!("state has dimension {got}, expected {want}")));
    }
    Ok(())
}

/// Evolves in the two-excitation sector of `sector.lattice`, spectrally
/// when the dual basis is well conditioned and by Taylor steps otherwise.
pub fn evolve(sector: &PairSector, psi0: &[Complex64], times: &[f64]) -> Result<(Trajectory, Propagator)> {
    if sector.cond() <= DEFECTIVE_COND {
        return Ok((spectral_evolve(sector, psi0, times)?, Propagator::Spectral));
    }
    log::warn!("dual basis condition {:.3e} above {DEFECTIVE_COND:.0e}; integrating directly", sector.cond());
    check_dim(psi0.len(), sector.num_states())?;
    let op = PairOperator::new(&sector.lattice, sector.kernel)?;
    Ok((taylor_evolve(|v| op.apply(v), op.norm_bound(), psi0, times)?, Propagator::Taylor))
}

/// Evolution under an explicit dense matrix.
pub fn evolve_matrix(h: &Mat<Complex64>, psi0: &[Complex64], times: &[f64]) -> Result<(Trajectory, Propagator)> {
    check_times(times)?;
    check_dim(psi0.len(), h.nrows())?;
    let d = linalg::eig(h.as_ref())?;
    if !d.is_defective() {
        let coeffs = d.coefficients(psi0);
        let states = times.iter().map(|&t| d.synthesize(&phases(&d.values, &coeffs, t))).collect();
        return Ok((Trajectory::from_states(times, states), Propagator::Spectral));
    }
    log::warn!("dual basis condition {:.3e} above {DEFECTIVE_COND:.0e}; integrating directly", d.cond);
    let bound = (0..h.nrows()).map(|i| (0..h.ncols()).map(|j| h[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
    let traj = taylor_evolve(|v| linalg::mat_vec(h.as_ref(), v), bound, psi0, times)?;
    Ok((traj, Propagator::Taylor))
}

/// `C_l = sum_i <n_i n_{i+(l,l)}> / <psi|psi>`.
pub fn correlator(state: &[Complex64], lattice: &LatticeSpec, ell: usize) -> Result<f64> {
    let basis = PairBasis::new(lattice.num_sites());
    check_dim(state.len(), basis.dim())?;
    if ell == 0 {
        return Err(Error::InvalidArgument("correlator separation must be >= 1".into()));
    }
    let total: f64 = state.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return Err(Error::InvalidArgument("zero-norm state".into()));
    }
    let l = lattice.size();
    let mut acc = 0.0;
    for iy in 0..l.saturating_sub(ell) {
        for ix in 0..l - ell {
            let i = lattice.index(ix, iy)?;
            let j = lattice.index(ix + ell, iy + ell)?;
            acc += state[basis.index(i, j)].norm_sqr();
        }
    }
    Ok(acc / total)
}

/// Weights `|c_s|^2 / sum |c|^2` of the expansion `psi = sum_s c_s v_s`
/// over unit-norm right eigenvectors, with `c = V^-1 psi`.
pub fn eigen_projections(psi: &[Complex64], coefficients: impl FnOnce(&[Complex64]) -> Vec<Complex64>, cond: f64) -> Vec<f64> {
    if cond > DEFECTIVE_COND {
        log::warn!("projection weights unreliable: dual basis condition {cond:.3e}");
    }
    let c = coefficients(psi);
    let total: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    c.iter().map(|z| z.norm_sqr() / total.max(f64::MIN_POSITIVE)).collect()
}

pub fn sector_projections(psi: &[Complex64], sector: &PairSector) -> Vec<f64> {
    eigen_projections(psi, |v| sector.coefficients(v), sector.cond())
}

pub fn decomposition_projections(psi: &[Complex64], d: &EigenDecomposition) -> Vec<f64> {
    eigen_projections(psi, |v| d.coefficients(v), d.cond)
}
