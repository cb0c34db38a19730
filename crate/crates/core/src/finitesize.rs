//! Identification of bound, repulsive and resonant two-excitation states in
//! finite arrays, and power-law scaling of their decay rates with `N`.
//!
//! Selection rules:
//! * bound state at `K`: largest overlap with the impurity-model pair
//!   `e^{i K.x_j} G0(x_j - x_i, E_BS)`;
//! * repulsive I / II: lowest-decay in-band state whose relative marginal
//!   carries less than `nodal_mass` on the axes / diagonals;
//! * scattering resonance at `K`: in-band state with the largest weight of
//!   `|K, r>` components with `|r| <= resonance_radius`.
//!
//! "In-band" means outside the continuum gap of the state's COM label
//! whenever that label is `Gamma` or `M`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{powerlaw_fit, relative_marginal, GapOptions, Interval, PowerLawFit};
use crate::dispersion::{Dispersion, DEFAULT_L_SUM};
use crate::error::{Error, Result};
use crate::impurity::ImpurityModel;
use crate::kernels::CouplingKernel;
use crate::lattice::{ComplexEnergy, LatticeSpec, Momentum2};
use crate::singleexc::DEFAULT_GRID_N;
use crate::twoexc::{com_label, diagonalize_pair_sector, short_range_weight, ClassifyThresholds, PairSector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackedState {
    GammaBound,
    MBound,
    RepulsiveI,
    RepulsiveII,
    GammaResonance,
    MResonance,
}

impl TrackedState {
    pub fn name(&self) -> &'static str {
        match self {
            TrackedState::GammaBound => "gamma_bound",
            TrackedState::MBound => "m_bound",
            TrackedState::RepulsiveI => "repulsive_I",
            TrackedState::RepulsiveII => "repulsive_II",
            TrackedState::GammaResonance => "gamma_resonance",
            TrackedState::MResonance => "m_resonance",
        }
    }

    fn momentum(&self) -> Option<Momentum2> {
        match self {
            TrackedState::GammaBound | TrackedState::GammaResonance => Some(Momentum2::gamma()),
            TrackedState::MBound | TrackedState::MResonance => Some(Momentum2::m_point()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackOptions {
    pub grid_n: usize,
    pub l_sum: usize,
    pub gap: GapOptions,
    pub thresholds: ClassifyThresholds,
    pub resonance_radius: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self {
            grid_n: DEFAULT_GRID_N,
            l_sum: DEFAULT_L_SUM,
            gap: GapOptions::default(),
            thresholds: ClassifyThresholds::default(),
            resonance_radius: 1.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackedPoint {
    pub l: usize,
    pub n_atoms: usize,
    pub state: usize,
    pub energy: ComplexEnergy,
    pub decay: f64,
    /// Selection score: ansatz overlap, nodal mass or short-range weight.
    pub score: f64,
}

/// Impurity models at `Gamma` and `M` for one `(kernel, k0d)`.
pub struct TrackContext {
    pub kernel: CouplingKernel,
    pub k0d: f64,
    pub gamma: Option<ImpurityModel>,
    pub m: Option<ImpurityModel>,
    pub opts: TrackOptions,
}

impl TrackContext {
    pub fn new(kernel: CouplingKernel, k0d: f64, opts: &TrackOptions) -> Result<Self> {
        let disp = Dispersion::new(kernel, k0d, opts.l_sum)?;
        let (gamma, m) = rayon::join(
            || ImpurityModel::new(&disp, Momentum2::gamma(), opts.grid_n, &opts.gap),
            || ImpurityModel::new(&disp, Momentum2::m_point(), opts.grid_n, &opts.gap),
        );
        Ok(Self { kernel, k0d, gamma: Some(gamma?), m: Some(m?), opts: *opts })
    }

    /// Context for a continuum known to have no gap: every state is
    /// in-band and no bound state is sought.
    pub fn gapless(kernel: CouplingKernel, k0d: f64, opts: &TrackOptions) -> Self {
        Self { kernel, k0d, gamma: None, m: None, opts: *opts }
    }

    fn model(&self, k: Momentum2) -> Option<&ImpurityModel> {
        if k.norm() < 1e-12 {
            self.gamma.as_ref()
        } else {
            self.m.as_ref()
        }
    }

    fn gap_at(&self, label: Momentum2) -> Option<Interval> {
        let near = |a: Momentum2| label.torus_distance(&a) < 1e-9;
        if near(Momentum2::gamma()) {
            self.gamma.as_ref().and_then(|m| m.gap)
        } else if near(Momentum2::m_point()) {
            self.m.as_ref().and_then(|m| m.gap)
        } else {
            None
        }
    }
}

/// `e^{i K.x_j} G0(x_j - x_i, E)` on the pair basis, normalized.
pub fn bound_state_ansatz(model: &ImpurityModel, energy: f64, lattice: &LatticeSpec) -> Result<Vec<Complex64>> {
    let l = lattice.size() as i64;
    let side = (2 * l - 1) as usize;
    let g: Vec<Complex64> = (0..side * side)
        .into_par_iter()
        .map(|slot| {
            let (rx, ry) = ((slot % side) as i64 - (l - 1), (slot / side) as i64 - (l - 1));
            model.g0((rx, ry), energy)
        })
        .collect::<Result<_>>()?;
    let k = model.k();
    let n = lattice.num_sites();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let (xi, yi) = lattice.coords(i)?;
            let (xj, yj) = lattice.coords(j)?;
            let (rx, ry) = (xj as i64 - xi as i64, yj as i64 - yi as i64);
            let slot = (ry + l - 1) as usize * side + (rx + l - 1) as usize;
            out.push(g[slot] * Complex64::from_polar(1.0, k.kx * xj as f64 + k.ky * yj as f64));
        }
    }
    let norm = crate::linalg::norm(&out);
    if norm == 0.0 {
        return Err(Error::NotEnoughData("bound-state ansatz vanishes on the array".into()));
    }
    out.iter_mut().for_each(|z| *z /= norm);
    Ok(out)
}

fn overlap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr()
}

/// Picks each requested state in one diagonalized sector; `None` where no
/// state satisfies the rule (e.g. no bound state without a gap).
pub fn track_states(sector: &PairSector, which: &[TrackedState], ctx: &TrackContext) -> Result<Vec<Option<TrackedPoint>>> {
    let l = sector.lattice.size();
    let energies = sector.energies();
    let amps: Vec<Vec<Complex64>> = (0..sector.num_states()).into_par_iter().map(|s| sector.amplitudes(s)).collect();
    let decay = |s: usize| -2.0 * energies[s].im;
    let point = |s: usize, score: f64| TrackedPoint {
        l,
        n_atoms: l * l,
        state: s,
        energy: energies[s].into(),
        decay: decay(s),
        score,
    };

    let mut by_decay: Vec<usize> = (0..amps.len()).collect();
    by_decay.sort_by(|&a, &b| decay(a).total_cmp(&decay(b)));
    let in_band = |s: usize| -> bool {
        let (label, _) = com_label(&amps[s], &sector.basis, l);
        !ctx.gap_at(label).is_some_and(|g| g.contains(energies[s].re))
    };

    let mut out = Vec::with_capacity(which.len());
    for &w in which {
        let picked = match w {
            TrackedState::GammaBound | TrackedState::MBound => {
                let model = ctx.model(w.momentum().unwrap());
                match model.map(|m| m.bound_state_energy()).transpose()?.flatten() {
                    None => None,
                    Some(e) => {
                        let model = model.unwrap();
                        let ansatz = bound_state_ansatz(model, e, &sector.lattice)?;
                        amps.par_iter()
                            .enumerate()
                            .map(|(s, v)| (s, overlap(&ansatz, v)))
                            .min_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)))
                            .map(|(s, o)| point(s, o))
                    }
                }
            }
            TrackedState::RepulsiveI | TrackedState::RepulsiveII => {
                let take = ((amps.len() as f64 * ctx.opts.thresholds.repulsive_fraction).ceil() as usize).max(1);
                let mut found = None;
                for &s in &by_decay[..take.min(by_decay.len())] {
                    let m = relative_marginal(&amps[s], &sector.basis, l)?;
                    let mass = if w == TrackedState::RepulsiveI { m.axes_mass() } else { m.diagonal_mass() };
                    if mass < ctx.opts.thresholds.nodal_mass && in_band(s) {
                        found = Some(point(s, mass));
                        break;
                    }
                }
                found
            }
            TrackedState::GammaResonance | TrackedState::MResonance => {
                let k = w.momentum().unwrap();
                let gap = ctx.model(k).and_then(|m| m.gap);
                amps.par_iter()
                    .enumerate()
                    .filter(|(s, _)| !gap.is_some_and(|g| g.contains(energies[*s].re)))
                    .map(|(s, v)| (s, short_range_weight(v, &sector.basis, l, k, ctx.opts.resonance_radius)))
                    .min_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)))
                    .map(|(s, sc)| point(s, sc))
            }
        };
        out.push(picked);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayScaling {
    pub tracked: TrackedState,
    pub kernel: CouplingKernel,
    pub k0d: f64,
    pub points: Vec<TrackedPoint>,
    pub fit: PowerLawFit,
}

/// Decay of each tracked state for every `L`, fitted against `N = L^2`.
///
/// Sizes are diagonalized one after another (each diagonalization already
/// runs in parallel).
pub fn decay_scaling(
    kernel: CouplingKernel,
    k0d: f64,
    sizes: &[usize],
    which: &[TrackedState],
    opts: &TrackOptions,
) -> Result<Vec<DecayScaling>> {
    if sizes.len() < 3 {
        return Err(Error::NotEnoughData(format!("scaling needs at least 3 sizes, got {}", sizes.len())));
    }
    decay_scaling_in(&TrackContext::new(kernel, k0d, opts)?, sizes, which)
}

/// [`decay_scaling`] with a prepared context.
pub fn decay_scaling_in(ctx: &TrackContext, sizes: &[usize], which: &[TrackedState]) -> Result<Vec<DecayScaling>> {
    if sizes.len() < 3 {
        return Err(Error::NotEnoughData(format!("scaling needs at least 3 sizes, got {}", sizes.len())));
    }
    let (kernel, k0d) = (ctx.kernel, ctx.k0d);
    let mut per_size = Vec::with_capacity(sizes.len());
    for &l in sizes {
        let lattice = LatticeSpec::new(l, k0d)?;
        let sector = diagonalize_pair_sector(&lattice, kernel)?;
        log::info!("L = {l}: {} two-excitation states, dual condition {:.2e}", sector.num_states(), sector.cond());
        per_size.push(track_states(&sector, which, ctx)?);
    }
    which
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let points: Vec<TrackedPoint> = per_size
                .iter()
                .zip(sizes)
                .map(|(row, l)| row[k].clone().ok_or_else(|| Error::NotEnoughData(format!("no {} state at L = {l}", w.name()))))
                .collect::<Result<_>>()?;
            let fit = powerlaw_fit(&points.iter().map(|p| (p.n_atoms as f64, p.decay)).collect::<Vec<_>>())?;
            Ok(DecayScaling { tracked: w, kernel, k0d, points, fit })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ansatz_is_exchange_symmetric_and_normalized() {
        // an even grid is mapped onto itself by q -> M - q
        let opts = TrackOptions { grid_n: 120, l_sum: 100, ..Default::default() };
        let ctx = TrackContext::new(CouplingKernel::Waveguide2D, 0.5 * PI, &opts).unwrap();
        let lat = LatticeSpec::new(4, 0.5 * PI).unwrap();
        let m = ctx.m.as_ref().unwrap();
        let e = m.bound_state_energy().unwrap().unwrap();
        let a = bound_state_ansatz(m, e, &lat).unwrap();
        assert!((crate::linalg::norm(&a) - 1.0).abs() < 1e-12);
        // at M the relative function lives on the even sublattice rx + ry
        let basis = crate::twoexc::PairBasis::new(16);
        for (p, z) in a.iter().enumerate() {
            let (i, j) = basis.pair(p);
            let r = lat.displacement(i, j).unwrap();
            if (r.0 + r.1).rem_euclid(2) == 1 {
                assert!(z.norm() < 1e-10, "odd displacement {r:?}: {z}");
            }
        }
    }

    #[test]
    fn tracks_bound_states_on_small_array() {
        let opts = TrackOptions { grid_n: 121, l_sum: 100, ..Default::default() };
        let ctx = TrackContext::new(CouplingKernel::Waveguide2D, 0.52 * PI, &opts).unwrap();
        let lat = LatticeSpec::new(6, 0.52 * PI).unwrap();
        let sector = diagonalize_pair_sector(&lat, CouplingKernel::Waveguide2D).unwrap();
        let which = [TrackedState::GammaBound, TrackedState::MBound, TrackedState::RepulsiveII];
        let got = track_states(&sector, &which, &ctx).unwrap();
        let g = got[0].as_ref().unwrap();
        let m = got[1].as_ref().unwrap();
        assert!(g.score > 0.5 && m.score > 0.3);
        let gap = ctx.gamma.as_ref().unwrap().gap.unwrap();
        assert!(gap.contains(g.energy.re) || g.energy.re > gap.hi);
        assert!(m.decay < g.decay);
        assert!(got[2].as_ref().unwrap().score < 0.05);
    }

    #[test]
    fn scaling_needs_three_sizes() {
        let r = decay_scaling(CouplingKernel::Waveguide2D, 0.52 * PI, &[4, 6], &[TrackedState::GammaBound], &TrackOptions::default());
        assert!(matches!(r, Err(Error::NotEnoughData(_))));
    }
}
