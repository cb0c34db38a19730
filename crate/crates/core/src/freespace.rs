//! Free-space array with out-of-plane dipoles: the same pipelines as the
//! waveguide case with the `zz` kernel, energies and rates in units of
//! `gamma0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{GapOptions, Interval};
use crate::dispersion::Dispersion;
use crate::error::{Error, Result};
use crate::finitesize::{decay_scaling_in, track_states, DecayScaling, TrackContext, TrackOptions, TrackedPoint, TrackedState};
use crate::impurity::ImpurityModel;
use crate::kernels::{CouplingKernel, FREE_SPACE_SUBRADIANT_LIMIT};
use crate::lattice::{LatticeSpec, Momentum2};
use crate::singleexc::{band_gap_interval, SymmetryPoint};
use crate::twoexc::diagonalize_pair_sector;

const KERNEL: CouplingKernel = CouplingKernel::FreeSpaceZZ;

fn check_window(k0d: f64) -> Result<()> {
    if !(k0d > 0.0 && k0d < FREE_SPACE_SUBRADIANT_LIMIT) {
        return Err(Error::InvalidArgument(format!(
            "k0d = {k0d} outside the subradiant window (0, sqrt(2) pi)"
        )));
    }
    Ok(())
}

fn resonance_of(point: SymmetryPoint) -> Result<TrackedState> {
    match point {
        SymmetryPoint::Gamma => Ok(TrackedState::GammaResonance),
        SymmetryPoint::M => Ok(TrackedState::MResonance),
        SymmetryPoint::X => Err(Error::InvalidArgument("resonance scans are defined at gamma and m".into())),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SrRow {
    pub k0d: f64,
    pub resonance: Option<TrackedPoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SrScan {
    pub point: SymmetryPoint,
    pub l: usize,
    pub rows: Vec<SrRow>,
    /// Row with the smallest resonance decay.
    pub argmin: Option<usize>,
}

impl SrScan {
    pub fn minimum(&self) -> Option<(f64, &TrackedPoint)> {
        self.argmin.and_then(|i| self.rows[i].resonance.as_ref().map(|p| (self.rows[i].k0d, p)))
    }
}

/// Decay of the scattering resonance at `point` for each spacing.
///
/// The free-space continuum has no gap (see [`freespace_no_bs_check`]), so
/// every state competes.
pub fn freespace_sr_scan(point: SymmetryPoint, k0d_list: &[f64], l: usize, opts: &TrackOptions) -> Result<SrScan> {
    let which = [resonance_of(point)?];
    for &k in k0d_list {
        check_window(k)?;
    }
    let mut rows = Vec::with_capacity(k0d_list.len());
    for &k0d in k0d_list {
        let lattice = LatticeSpec::new(l, k0d)?;
        let sector = diagonalize_pair_sector(&lattice, KERNEL)?;
        let ctx = TrackContext::gapless(KERNEL, k0d, opts);
        let resonance = track_states(&sector, &which, &ctx)?.pop().flatten();
        log::info!("k0d = {:.4} pi: resonance decay {:?}", k0d / std::f64::consts::PI, resonance.as_ref().map(|r| r.decay));
        rows.push(SrRow { k0d, resonance });
    }
    let argmin = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.resonance.as_ref().map(|p| (i, p.decay)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    Ok(SrScan { point, l, rows, argmin })
}

/// Size scaling of the free-space resonance at `point`, or of any other
/// tracked state when `which` is given.
pub fn freespace_scaling(k0d: f64, sizes: &[usize], which: &[TrackedState], opts: &TrackOptions) -> Result<Vec<DecayScaling>> {
    check_window(k0d)?;
    decay_scaling_in(&TrackContext::gapless(KERNEL, k0d, opts), sizes, which)
}

/// Resonance tracked at a symmetry point.
pub fn resonance_state(point: SymmetryPoint) -> Result<TrackedState> {
    resonance_of(point)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoBsCheck {
    pub k: Momentum2,
    pub k0d: f64,
    pub gap: Option<Interval>,
    pub bound_state_energy: Option<f64>,
}

impl NoBsCheck {
    pub fn holds(&self) -> bool {
        self.gap.is_none() && self.bound_state_energy.is_none()
    }
}

/// Continuum gap and bound-state root of the free-space pair problem.
pub fn freespace_no_bs_check(k: Momentum2, k0d: f64, grid_n: usize, l_sum: usize, opts: &GapOptions) -> Result<NoBsCheck> {
    check_window(k0d)?;
    let disp = Dispersion::new(KERNEL, k0d, l_sum)?;
    let model = ImpurityModel::new(&disp, k, grid_n, opts)?;
    Ok(NoBsCheck { k, k0d, gap: model.gap, bound_state_energy: model.bound_state_energy()? })
}

/// Single-excitation gap of the free-space dispersion for each spacing.
pub fn freespace_band_gaps(k0d_list: &[f64], grid_n: usize, l_sum: usize, opts: &GapOptions) -> Result<Vec<Option<Interval>>> {
    k0d_list
        .par_iter()
        .map(|&k0d| {
            check_window(k0d)?;
            band_gap_interval(&Dispersion::new(KERNEL, k0d, l_sum)?, grid_n, opts)
        })
        .collect()
}
