//! Hardcore-boson impurity model: lattice Green's function of the unbound
//! pair, bound-state energies and relative-coordinate wavefunctions.
//!
//! The Brillouin-zone integral is replaced by the offset-grid sum
//! `(1/N_q) sum_q`. Samples inside the divergence annulus are left out of
//! every sum: their energies are dominated by the truncation of the
//! lattice sum and would otherwise plant spurious poles inside the gap.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{GapOptions, Interval};
use crate::dispersion::Dispersion;
use crate::error::{Error, Result};
use crate::lattice::Momentum2;
use crate::twoexc::{scattering_continuum, PairContinuum, RelCoordBasis};

/// Smallest accepted distance between an evaluation energy and a pole.
pub const POLE_TOL: f64 = 1e-6;
/// Bisection stops once the bracket is this narrow.
pub const BISECTION_RESOLUTION: f64 = 1e-13;

/// Pair continuum of one `(K, k0d)` together with its gap.
#[derive(Debug, Clone)]
pub struct ImpurityModel {
    pub continuum: PairContinuum,
    pub gap: Option<Interval>,
    /// Unmasked `(flat index, energy)` samples.
    kept: Vec<(usize, f64)>,
}

impl ImpurityModel {
    pub fn new(disp: &Dispersion, k: Momentum2, grid_n: usize, opts: &GapOptions) -> Result<Self> {
        let continuum = scattering_continuum(disp, k, grid_n, opts.annulus_cells)?;
        let gap = continuum.gap(opts);
        let kept = continuum
            .values
            .iter()
            .zip(&continuum.mask)
            .enumerate()
            .filter(|(_, (_, &m))| !m)
            .map(|(i, (&v, _))| (i, v))
            .collect();
        Ok(Self { continuum, gap, kept })
    }

    pub fn k(&self) -> Momentum2 {
        self.continuum.k
    }

    /// `F(E) = (1/N_q) sum_q 1 / (E - e(K, q))`, i.e. `G0(0, E)`.
    pub fn f(&self, e: f64) -> f64 {
        self.kept.iter().map(|(_, v)| 1.0 / (e - v)).sum::<f64>() / self.kept.len() as f64
    }

    fn check_poles(&self, e: f64) -> Result<()> {
        let Some(&(i, v)) = self.kept.iter().min_by(|a, b| (e - a.1).abs().total_cmp(&(e - b.1).abs())) else {
            return Err(Error::NotEnoughData("every continuum sample is masked".into()));
        };
        if (e - v).abs() < POLE_TOL {
            let n = self.continuum.n;
            return Err(Error::PoleProximity {
                energy: e,
                distance: (e - v).abs(),
                qx: self.continuum.axis[i / n],
                qy: self.continuum.axis[i % n],
            });
        }
        Ok(())
    }

    /// Free pair Green's function `G0(r, E)`.
    pub fn g0(&self, r: (i64, i64), e: f64) -> Result<Complex64> {
        self.check_poles(e)?;
        let n = self.continuum.n;
        let axis = &self.continuum.axis;
        let acc: Complex64 = self
            .kept
            .iter()
            .map(|&(i, v)| Complex64::from_polar(1.0 / (e - v), axis[i / n] * r.0 as f64 + axis[i % n] * r.1 as f64))
            .sum();
        Ok(acc / self.kept.len() as f64)
    }

    /// `G0(r, E)` for every vector of `basis`, by separable transforms.
    pub fn g0_on(&self, basis: &RelCoordBasis, e: f64) -> Result<Vec<Complex64>> {
        self.check_poles(e)?;
        let n = self.continuum.n;
        let axis = &self.continuum.axis;
        let mut w = Mat::<f64>::zeros(n, n);
        for &(i, v) in &self.kept {
            w[(i / n, i % n)] = 1.0 / (e - v);
        }
        let m = basis.l_r() as i64 - 1;
        let nx = (2 * m + 1) as usize;
        let ny = (m + 1) as usize;
        let cx = Mat::<f64>::from_fn(nx, n, |a, i| (axis[i] * (a as i64 - m) as f64).cos());
        let sx = Mat::<f64>::from_fn(nx, n, |a, i| (axis[i] * (a as i64 - m) as f64).sin());
        let cy = Mat::<f64>::from_fn(n, ny, |j, b| (axis[j] * b as f64).cos());
        let sy = Mat::<f64>::from_fn(n, ny, |j, b| (axis[j] * b as f64).sin());
        let cw = &cx * &w;
        let sw = &sx * &w;
        let re = &(&cw * &cy) - &(&sw * &sy);
        let im = &(&sw * &cy) + &(&cw * &sy);
        let norm = self.kept.len() as f64;
        Ok(basis
            .vectors()
            .iter()
            .map(|&(x, y)| {
                let (a, b) = ((x + m) as usize, y as usize);
                Complex64::new(re[(a, b)], im[(a, b)]) / norm
            })
            .collect())
    }

    /// Root of `F` inside the gap by bisection; `None` without a gap or
    /// a sign change.
    pub fn bound_state_energy(&self) -> Result<Option<f64>> {
        let Some(gap) = self.gap else { return Ok(None) };
        if gap.width() < 10.0 * BISECTION_RESOLUTION {
            return Err(Error::GapTooNarrow { width: gap.width() });
        }
        // the gap edges are sampled energies, i.e. poles of F
        let pad = (1e-3 * gap.width()).min(1e-9);
        let (mut lo, mut hi) = (gap.lo + pad, gap.hi - pad);
        let (flo, fhi) = (self.f(lo), self.f(hi));
        if !(flo > 0.0 && fhi < 0.0) {
            return Ok(None);
        }
        while hi - lo > BISECTION_RESOLUTION {
            let mid = 0.5 * (lo + hi);
            if self.f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(0.5 * (lo + hi)))
    }

    pub fn bound_state(&self, l_r: usize) -> Result<Option<BoundStateSolution>> {
        let Some(energy) = self.bound_state_energy()? else { return Ok(None) };
        let basis = RelCoordBasis::new(l_r)?;
        let wavefunction = self.g0_on(&basis, energy)?;
        let total: f64 = wavefunction.iter().map(|z| z.norm_sqr()).sum();
        let p: Vec<f64> = wavefunction.iter().map(|z| z.norm_sqr() / total).collect();
        let mean_separation = p.iter().enumerate().map(|(i, pi)| pi * basis.norm(i)).sum();
        Ok(Some(BoundStateSolution { k: self.k(), energy, vectors: basis.vectors().to_vec(), wavefunction, p, mean_separation }))
    }
}

/// Bound pair in the relative coordinate, on the half plane without `r = 0`
/// (where the hardcore wavefunction `G0(0, E_BS)` vanishes).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundStateSolution {
    pub k: Momentum2,
    pub energy: f64,
    pub vectors: Vec<(i64, i64)>,
    /// Unnormalized `G0(r, E_BS)`.
    pub wavefunction: Vec<Complex64>,
    /// `|G0|^2` normalized to unit sum.
    pub p: Vec<f64>,
    pub mean_separation: f64,
}

impl BoundStateSolution {
    pub fn p_at(&self, r: (i64, i64)) -> f64 {
        self.vectors
            .iter()
            .position(|&v| v == r || v == (-r.0, -r.1))
            .map_or(0.0, |i| self.p[i])
    }
}

pub fn two_exc_gap(disp: &Dispersion, k: Momentum2, grid_n: usize, opts: &GapOptions) -> Result<Option<Interval>> {
    Ok(ImpurityModel::new(disp, k, grid_n, opts)?.gap)
}

pub fn bound_state_energy(disp: &Dispersion, k: Momentum2, grid_n: usize, opts: &GapOptions) -> Result<Option<f64>> {
    ImpurityModel::new(disp, k, grid_n, opts)?.bound_state_energy()
}

pub fn bound_state(
    disp: &Dispersion,
    k: Momentum2,
    grid_n: usize,
    l_r: usize,
    opts: &GapOptions,
) -> Result<Option<BoundStateSolution>> {
    ImpurityModel::new(disp, k, grid_n, opts)?.bound_state(l_r)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationRow {
    pub k0d: f64,
    pub energy: Option<f64>,
    pub mean_separation: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationScan {
    pub k: Momentum2,
    pub rows: Vec<SeparationRow>,
    /// Row index of the smallest `<r>` among rows with a bound state.
    pub argmin: Option<usize>,
}

/// `<r>` of the bound state at `k` for each spacing.
pub fn mean_separation_scan(
    make_disp: impl Fn(f64) -> Result<Dispersion> + Sync,
    k: Momentum2,
    k0d_list: &[f64],
    grid_n: usize,
    l_r: usize,
    opts: &GapOptions,
) -> Result<SeparationScan> {
    let rows: Vec<SeparationRow> = k0d_list
        .par_iter()
        .map(|&k0d| {
            let disp = make_disp(k0d)?;
            let bs = ImpurityModel::new(&disp, k, grid_n, opts)?.bound_state(l_r)?;
            Ok(SeparationRow {
                k0d,
                energy: bs.as_ref().map(|b| b.energy),
                mean_separation: bs.map(|b| b.mean_separation),
            })
        })
        .collect::<Result<_>>()?;
    let argmin = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.mean_separation.map(|m| (i, m)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    Ok(SeparationScan { k, rows, argmin })
}
