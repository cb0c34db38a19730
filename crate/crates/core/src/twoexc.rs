//! Two-excitation sector: pair-basis Hamiltonian of the finite array, its
//! symmetry-blocked diagonalization, the relative-coordinate Hamiltonian
//! of the infinite array, the unbound continuum and state classification.

use std::collections::HashMap;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{ipr, spectral_gap, GapOptions, Interval, RelMarginal};
use crate::dispersion::Dispersion;
use crate::error::{Error, Result};
use crate::kernels::{green, CouplingKernel, DisplacementTable};
use crate::lattice::{offset_axis, ComplexEnergy, LatticeSpec, Momentum2};
use crate::linalg::{eig, EigenDecomposition};
use crate::singleexc::divergence_mask;
use crate::symmetry::{pair_blocks, Irrep, SparseVec, SymmetryBlock};

/// Largest pair-basis dimension accepted by default (`L = 12`).
pub const DEFAULT_PAIR_CAP: usize = 10296;
/// Smallest relative-coordinate grid accepted.
pub const MIN_L_R: usize = 10;
/// Relative-coordinate grid size used unless configured otherwise.
pub const DEFAULT_L_R: usize = 40;

/// Unordered site pairs `i < j`, ordered lexicographically.
#[derive(Debug, Clone)]
pub struct PairBasis {
    n: usize,
    pairs: Vec<(u32, u32)>,
}

impl PairBasis {
    pub fn new(n: usize) -> Self {
        let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i as u32, j as u32));
            }
        }
        Self { n, pairs }
    }

    pub fn num_sites(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    /// Index of the pair `{i, j}` with `i < j`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    #[inline]
    pub fn pair(&self, p: usize) -> (usize, usize) {
        let (i, j) = self.pairs[p];
        (i as usize, j as usize)
    }

    pub fn checked_index(&self, i: usize, j: usize) -> Result<usize> {
        if i >= self.n || j >= self.n {
            return Err(Error::IndexOutOfRange { index: i.max(j), n: self.n });
        }
        if i == j {
            return Err(Error::InvalidArgument(format!("pair ({i}, {j}) is doubly occupied")));
        }
        Ok(self.index(i.min(j), i.max(j)))
    }
}

/// Site coupling `G_ab` from the displacement table.
#[inline]
fn site_coupling(table: &DisplacementTable, l: usize, a: usize, b: usize) -> Complex64 {
    table.get((a % l).abs_diff(b % l), (a / l).abs_diff(b / l))
}

/// `<ab|H|cd> = G_ac d_bd + G_ad d_bc + G_bc d_ad + G_bd d_ac`.
#[inline]
pub fn pair_element(table: &DisplacementTable, l: usize, (a, b): (usize, usize), (c, d): (usize, usize)) -> Complex64 {
    let mut h = Complex64::new(0.0, 0.0);
    if b == d {
        h += site_coupling(table, l, a, c);
    }
    if b == c {
        h += site_coupling(table, l, a, d);
    }
    if a == d {
        h += site_coupling(table, l, b, c);
    }
    if a == c {
        h += site_coupling(table, l, b, d);
    }
    h
}

pub fn build_pair_hamiltonian(lattice: &LatticeSpec, kernel: CouplingKernel) -> Result<Mat<Complex64>> {
    build_pair_hamiltonian_capped(lattice, kernel, DEFAULT_PAIR_CAP)
}

/// Dense complex-symmetric pair-basis Hamiltonian.
pub fn build_pair_hamiltonian_capped(
    lattice: &LatticeSpec,
    kernel: CouplingKernel,
    cap: usize,
) -> Result<Mat<Complex64>> {
    let basis = PairBasis::new(lattice.num_sites());
    if basis.dim() > cap {
        return Err(Error::SizeCap { dim: basis.dim(), cap });
    }
    let table = DisplacementTable::new(lattice, kernel)?;
    let l = lattice.size();
    Ok(Mat::from_fn(basis.dim(), basis.dim(), |p, q| pair_element(&table, l, basis.pair(p), basis.pair(q))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateClass {
    Bound,
    #[serde(rename = "repulsive_I")]
    RepulsiveI,
    #[serde(rename = "repulsive_II")]
    RepulsiveII,
    ScatteringResonance,
    Continuum,
}

#[derive(Debug, Clone)]
pub struct TwoExcState {
    pub amplitudes: Vec<Complex64>,
    pub energy: ComplexEnergy,
    /// `1 / sum |c_p|^4` over the pair basis.
    pub ipr: f64,
    pub class: StateClass,
}

impl TwoExcState {
    pub fn new(amplitudes: Vec<Complex64>, energy: Complex64) -> Result<Self> {
        let p: Vec<f64> = amplitudes.iter().map(|z| z.norm_sqr()).collect();
        let ipr = ipr(&p)?;
        Ok(Self { amplitudes, energy: energy.into(), ipr, class: StateClass::Continuum })
    }

    pub fn decay(&self) -> f64 {
        self.energy.decay()
    }
}

/// All eigenstates of a pair-basis matrix by one dense decomposition.
pub fn diagonalize_pairs(h: &Mat<Complex64>) -> Result<Vec<TwoExcState>> {
    let d = eig(h.as_ref())?;
    (0..d.dim())
        .map(|s| TwoExcState::new((0..d.dim()).map(|i| d.right[(i, s)]).collect(), d.values[s]))
        .collect()
}

/// Symmetry-blocked eigendecomposition of the two-excitation sector.
///
/// Equivalent to [`diagonalize_pairs`] on [`build_pair_hamiltonian`], at a
/// fraction of the cost; the pair-basis matrix is never formed.
#[derive(Debug, Clone)]
pub struct PairSector {
    pub lattice: LatticeSpec,
    pub kernel: CouplingKernel,
    pub basis: PairBasis,
    pub blocks: Vec<SymmetryBlock>,
    pub decompositions: Vec<Arc<EigenDecomposition>>,
    /// First global state index of each block.
    offsets: Vec<usize>,
}

fn block_matrix(block: &SymmetryBlock, basis: &PairBasis, table: &DisplacementTable, l: usize) -> Mat<Complex64> {
    let m = block.dim();
    let rows: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|a| {
            (0..m)
                .map(|b| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &(p, wp) in &block.columns[a] {
                        let pp = basis.pair(p);
                        for &(q, wq) in &block.columns[b] {
                            let h = pair_element(table, l, pp, basis.pair(q));
                            if h != Complex64::new(0.0, 0.0) {
                                acc += h * (wp * wq);
                            }
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Mat::from_fn(m, m, |a, b| rows[a][b])
}

pub fn diagonalize_pair_sector(lattice: &LatticeSpec, kernel: CouplingKernel) -> Result<PairSector> {
    diagonalize_pair_sector_capped(lattice, kernel, DEFAULT_PAIR_CAP)
}

pub fn diagonalize_pair_sector_capped(
    lattice: &LatticeSpec,
    kernel: CouplingKernel,
    cap: usize,
) -> Result<PairSector> {
    let l = lattice.size();
    let basis = PairBasis::new(lattice.num_sites());
    if basis.dim() > cap {
        return Err(Error::SizeCap { dim: basis.dim(), cap });
    }
    let table = DisplacementTable::new(lattice, kernel)?;
    let blocks = pair_blocks(&basis, l);
    // the second E partner shares the first one's decomposition
    let solved: Vec<Arc<EigenDecomposition>> = blocks[..5]
        .par_iter()
        .map(|b| {
            if b.dim() == 0 {
                return Ok(Arc::new(empty_decomposition()));
            }
            let h = block_matrix(b, &basis, &table, l);
            Ok(Arc::new(eig(h.as_ref())?))
        })
        .collect::<Result<_>>()?;
    let mut decompositions = solved;
    decompositions.push(decompositions[4].clone());
    let mut offsets = Vec::with_capacity(blocks.len());
    let mut acc = 0;
    for b in &blocks {
        offsets.push(acc);
        acc += b.dim();
    }
    Ok(PairSector { lattice: *lattice, kernel, basis, blocks, decompositions, offsets })
}

fn empty_decomposition() -> EigenDecomposition {
    EigenDecomposition { values: Vec::new(), right: Mat::zeros(0, 0), dual: Mat::zeros(0, 0), cond: 1.0 }
}

impl PairSector {
    pub fn num_states(&self) -> usize {
        self.basis.dim()
    }

    /// Eigenvalues in global order (block by block).
    pub fn energies(&self) -> Vec<Complex64> {
        self.decompositions.iter().flat_map(|d| d.values.iter().copied()).collect()
    }

    /// `(block, local index)` of global state `s`.
    pub fn locate(&self, s: usize) -> (usize, usize) {
        let b = self.offsets.partition_point(|&o| o <= s) - 1;
        (b, s - self.offsets[b])
    }

    pub fn irrep_of(&self, s: usize) -> Irrep {
        self.blocks[self.locate(s).0].irrep
    }

    /// Unit-norm right eigenvector of state `s` in the pair basis.
    pub fn amplitudes(&self, s: usize) -> Vec<Complex64> {
        let (b, k) = self.locate(s);
        let d = &self.decompositions[b];
        let mut out = vec![Complex64::new(0.0, 0.0); self.basis.dim()];
        for (a, col) in self.blocks[b].columns.iter().enumerate() {
            let c = d.right[(a, k)];
            for &(p, w) in col {
                out[p] += c * w;
            }
        }
        out
    }

    pub fn state(&self, s: usize) -> Result<TwoExcState> {
        TwoExcState::new(self.amplitudes(s), self.energies()[s])
    }

    pub fn states(&self) -> Result<Vec<TwoExcState>> {
        let e = self.energies();
        (0..self.num_states()).into_par_iter().map(|s| TwoExcState::new(self.amplitudes(s), e[s])).collect()
    }

    /// Largest dual-basis condition number over the blocks.
    pub fn cond(&self) -> f64 {
        self.decompositions.iter().map(|d| d.cond).fold(1.0, f64::max)
    }

    /// Expansion coefficients `psi = sum_s c_s v_s`, in global order.
    pub fn coefficients(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.num_states());
        for (block, d) in self.blocks.iter().zip(&self.decompositions) {
            let proj: Vec<Complex64> = block.columns.iter().map(|c| project(c, psi)).collect();
            if !proj.is_empty() {
                out.extend(d.coefficients(&proj));
            }
        }
        out
    }

    /// `sum_s c_s v_s` for global coefficients `c`.
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.basis.dim()];
        for ((block, d), &off) in self.blocks.iter().zip(&self.decompositions).zip(&self.offsets) {
            if block.dim() == 0 {
                continue;
            }
            let local = d.synthesize(&coeffs[off..off + block.dim()]);
            for (col, c) in block.columns.iter().zip(local) {
                for &(p, w) in col {
                    out[p] += c * w;
                }
            }
        }
        out
    }
}

fn project(col: &SparseVec, psi: &[Complex64]) -> Complex64 {
    col.iter().map(|&(p, w)| psi[p] * w).sum()
}

/// Relative vectors `r` of the half plane, origin excluded.
///
/// `r_y in [0, L_r - 1]`, `r_x in [-(L_r - 1), L_r - 1]`, and on the
/// `r_y = 0` row only `r_x > 0`. Hardcore bosons never share a site, so the
/// amplitude at `r = 0` vanishes identically and the origin carries no
/// degree of freedom.
#[derive(Debug, Clone)]
pub struct RelCoordBasis {
    l_r: usize,
    vecs: Vec<(i64, i64)>,
    lookup: HashMap<(i64, i64), usize>,
}

impl RelCoordBasis {
    pub fn new(l_r: usize) -> Result<Self> {
        if l_r < 2 {
            return Err(Error::InvalidArgument(format!("relative grid {l_r} must be >= 2")));
        }
        let m = l_r as i64 - 1;
        let mut vecs = Vec::new();
        for ry in 0..=m {
            let lo = if ry == 0 { 1 } else { -m };
            for rx in lo..=m {
                vecs.push((rx, ry));
            }
        }
        let lookup = vecs.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        Ok(Self { l_r, vecs, lookup })
    }

    pub fn l_r(&self) -> usize {
        self.l_r
    }

    pub fn dim(&self) -> usize {
        self.vecs.len()
    }

    pub fn vectors(&self) -> &[(i64, i64)] {
        &self.vecs
    }

    /// Index of `r` or of `-r`, whichever lies in the half plane.
    pub fn index(&self, r: (i64, i64)) -> Option<usize> {
        self.lookup.get(&r).or_else(|| self.lookup.get(&(-r.0, -r.1))).copied()
    }

    pub fn norm(&self, i: usize) -> f64 {
        let (x, y) = self.vecs[i];
        ((x * x + y * y) as f64).sqrt()
    }
}

/// Real symmetric relative-coordinate Hamiltonian at total momentum `K`.
///
/// `H[r][r'] = 2 sum_{e = +-1} cos(K.(r + e r')/2) Re G(k0d |r + e r'|)`.
/// Folding the full-plane hopping `2 cos(K.s/2) Re G(|s|)` onto the half
/// plane produces the two `e` terms; `Re G(0)` is zero by the renormalized
/// diagonal. The continuum of this operator is `E(q) + E(K - q)`, matching
/// the impurity solver.
pub fn relative_hamiltonian(k: Momentum2, kernel: CouplingKernel, k0d: f64, l_r: usize) -> Result<Mat<f64>> {
    k.check_bz()?;
    if l_r < MIN_L_R {
        return Err(Error::InvalidArgument(format!("relative grid {l_r} must be >= {MIN_L_R}")));
    }
    let basis = RelCoordBasis::new(l_r)?;
    let m = 2 * (l_r as i64 - 1);
    let side = (2 * m + 1) as usize;
    let mut hop = vec![0.0; side * side];
    for sy in -m..=m {
        for sx in -m..=m {
            if sx == 0 && sy == 0 {
                continue;
            }
            let dist = ((sx * sx + sy * sy) as f64).sqrt();
            let phase = 0.5 * (k.kx * sx as f64 + k.ky * sy as f64);
            hop[(sy + m) as usize * side + (sx + m) as usize] = 2.0 * phase.cos() * green(kernel, k0d * dist)?.re;
        }
    }
    let v = basis.vectors();
    let at = |sx: i64, sy: i64| hop[(sy + m) as usize * side + (sx + m) as usize];
    Ok(Mat::from_fn(basis.dim(), basis.dim(), |a, b| {
        let (r, s) = (v[a], v[b]);
        at(r.0 + s.0, r.1 + s.1) + at(r.0 - s.0, r.1 - s.1)
    }))
}

/// In-gap eigenstate of the relative Hamiltonian.
#[derive(Debug, Clone)]
pub struct RelativeBoundState {
    pub energy: f64,
    pub amplitudes: Vec<f64>,
    pub mean_separation: f64,
}

/// The most compact eigenstate with energy strictly inside `gap`.
///
/// The truncated grid also hosts boundary modes at gap energies; they sit at
/// `|r| ~ L_r` and are rejected by minimal `<r>`.
pub fn relative_bound_state(
    k: Momentum2,
    kernel: CouplingKernel,
    k0d: f64,
    l_r: usize,
    gap: Interval,
) -> Result<Option<RelativeBoundState>> {
    let h = relative_hamiltonian(k, kernel, k0d, l_r)?;
    let basis = RelCoordBasis::new(l_r)?;
    let evd = h.self_adjoint_eigen(faer::Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let vals = evd.S().column_vector();
    let u = evd.U();
    let mut best: Option<RelativeBoundState> = None;
    for s in 0..basis.dim() {
        let e = vals[s];
        if !(e > gap.lo && e < gap.hi) {
            continue;
        }
        let amps: Vec<f64> = (0..basis.dim()).map(|i| u[(i, s)]).collect();
        let mean: f64 = amps.iter().enumerate().map(|(i, a)| a * a * basis.norm(i)).sum();
        if best.as_ref().map_or(true, |b| mean < b.mean_separation) {
            best = Some(RelativeBoundState { energy: e, amplitudes: amps, mean_separation: mean });
        }
    }
    Ok(best)
}

/// Unbound pair energies `Re E(q) + Re E(K - q)` on the offset `n x n` grid.
#[derive(Debug, Clone)]
pub struct PairContinuum {
    pub k: Momentum2,
    pub n: usize,
    pub axis: Vec<f64>,
    /// Row-major in `q_x`.
    pub values: Vec<f64>,
    /// `q` or `K - q` within the divergence annulus.
    pub mask: Vec<bool>,
}

impl PairContinuum {
    /// The largest hole of the attained energies, if any.
    pub fn gap(&self, opts: &GapOptions) -> Option<Interval> {
        spectral_gap(&self.values, &self.mask, self.n, opts)
    }

    /// Range of attained energies (unmasked samples).
    pub fn range(&self) -> Interval {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (v, &m) in self.values.iter().zip(&self.mask) {
            if !m {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
        Interval { lo, hi }
    }
}

pub fn scattering_continuum(disp: &Dispersion, k: Momentum2, n: usize, annulus_cells: f64) -> Result<PairContinuum> {
    k.check_bz()?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("grid size {n} must be >= 2")));
    }
    let axis = offset_axis(n);
    let kx2: Vec<f64> = axis.iter().map(|q| k.kx - q).collect();
    let ky2: Vec<f64> = axis.iter().map(|q| k.ky - q).collect();
    let e1 = disp.energy_grid(&axis, &axis);
    let e2 = disp.energy_grid(&kx2, &ky2);
    let width = annulus_cells * 2.0 * std::f64::consts::PI / n as f64;
    let m1 = divergence_mask(&axis, &axis, disp.k0d(), width);
    let m2 = divergence_mask(&kx2, &ky2, disp.k0d(), width);
    Ok(PairContinuum {
        k,
        n,
        values: e1.iter().zip(&e2).map(|(a, b)| a.re + b.re).collect(),
        mask: m1.iter().zip(&m2).map(|(a, b)| *a || *b).collect(),
        axis,
    })
}

/// Projection `<K, r|psi>` for every oriented displacement `r`, with
/// `|K, r> = N_r^-1/2 sum_{x_j - x_i = r} e^{i K.(x_i + x_j)/2} |i j>`.
///
/// Slot `ry * (2L - 1) + rx + L - 1` holds `r = (rx, ry)`; displacements
/// absent from the array hold zero.
pub fn com_projection(amplitudes: &[Complex64], basis: &PairBasis, l: usize, k: Momentum2) -> Vec<Complex64> {
    let side = 2 * l - 1;
    let mut acc = vec![Complex64::new(0.0, 0.0); side * l];
    let mut count = vec![0u32; side * l];
    for (p, c) in amplitudes.iter().enumerate() {
        let (i, j) = basis.pair(p);
        let (xi, yi, xj, yj) = ((i % l) as i64, (i / l) as i64, (j % l) as i64, (j / l) as i64);
        let slot = (yj - yi) as usize * side + (xj - xi + l as i64 - 1) as usize;
        let phase = -0.5 * (k.kx * (xi + xj) as f64 + k.ky * (yi + yj) as f64);
        acc[slot] += c * Complex64::from_polar(1.0, phase);
        count[slot] += 1;
    }
    acc.iter().zip(&count).map(|(a, &n)| if n > 0 { a / (n as f64).sqrt() } else { *a }).collect()
}

/// Center-of-mass weight `sum_r |<K, r|psi>|^2`.
pub fn com_weight(amplitudes: &[Complex64], basis: &PairBasis, l: usize, k: Momentum2) -> f64 {
    com_projection(amplitudes, basis, l, k).iter().map(|z| z.norm_sqr()).sum()
}

/// `sum_{0 < |r| <= r_c} |<K, r|psi>|^2`: weight of a pair at momentum `K`
/// bound within distance `r_c`.
pub fn short_range_weight(amplitudes: &[Complex64], basis: &PairBasis, l: usize, k: Momentum2, r_c: f64) -> f64 {
    let side = 2 * l - 1;
    com_projection(amplitudes, basis, l, k)
        .iter()
        .enumerate()
        .filter(|(slot, _)| {
            let (rx, ry) = ((slot % side) as f64 - (l - 1) as f64, (slot / side) as f64);
            rx.hypot(ry) <= r_c
        })
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

/// Finite-size momentum `2 pi m / L` with the largest [`com_weight`];
/// ties go to the lexicographically lowest `(kx, ky)`.
pub fn com_label(amplitudes: &[Complex64], basis: &PairBasis, l: usize) -> (Momentum2, f64) {
    let ks = crate::singleexc::finite_momenta(l);
    let mut best = (Momentum2::gamma(), f64::NEG_INFINITY);
    let mut order: Vec<(f64, f64)> = ks.iter().flat_map(|&kx| ks.iter().map(move |&ky| (kx, ky))).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    for (kx, ky) in order {
        let k = Momentum2::new(kx, ky);
        let w = com_weight(amplitudes, basis, l, k);
        if w > best.1 + 1e-10 {
            best = (k, w);
        }
    }
    best
}

/// Classification thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyThresholds {
    /// Scattering resonances: relative IPR in the most localized
    /// `1 - ipr_percentile` fraction of in-band states.
    pub ipr_percentile: f64,
    /// Maximal probability mass on the nodal set of a repulsive state.
    pub nodal_mass: f64,
    /// A bound state must sit this far inside the gap.
    pub gap_margin: f64,
    /// Bound states: relative IPR below this fraction of the number of
    /// relative vectors.
    pub bound_ipr_fraction: f64,
    /// Repulsive states are sought among this lowest-decay fraction.
    pub repulsive_fraction: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        Self { ipr_percentile: 0.99, nodal_mass: 0.05, gap_margin: 1e-3, bound_ipr_fraction: 0.25, repulsive_fraction: 0.1 }
    }
}

/// Labels each state from its energy, decay and relative marginal.
///
/// `gap` is the continuum gap for the momentum the states belong to.
pub fn classify_states(
    states: &[TwoExcState],
    marginals: &[RelMarginal],
    gap: Option<Interval>,
    thresholds: &ClassifyThresholds,
) -> Result<Vec<StateClass>> {
    if states.is_empty() {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    if states.len() != marginals.len() {
        return Err(Error::InvalidArgument("one marginal per state required".into()));
    }
    let in_gap = |e: f64| gap.is_some_and(|g| e > g.lo + thresholds.gap_margin && e < g.hi - thresholds.gap_margin);
    let mut classes = vec![StateClass::Continuum; states.len()];
    let mut band: Vec<usize> = Vec::new();
    for (s, (st, mg)) in states.iter().zip(marginals).enumerate() {
        if in_gap(st.energy.re) {
            if mg.ipr()? < thresholds.bound_ipr_fraction * mg.len() as f64 {
                classes[s] = StateClass::Bound;
            }
        } else {
            band.push(s);
        }
    }
    if band.is_empty() {
        return Ok(classes);
    }
    // repulsive: lowest decays with a suppressed nodal set
    let mut by_decay = band.clone();
    by_decay.sort_by(|&a, &b| states[a].decay().total_cmp(&states[b].decay()));
    let take = ((by_decay.len() as f64 * thresholds.repulsive_fraction).ceil() as usize).max(1);
    for &s in &by_decay[..take] {
        let (m1, m2) = (marginals[s].axes_mass(), marginals[s].diagonal_mass());
        if m1 < thresholds.nodal_mass && m1 <= m2 {
            classes[s] = StateClass::RepulsiveI;
        } else if m2 < thresholds.nodal_mass {
            classes[s] = StateClass::RepulsiveII;
        }
    }
    // scattering resonances: the most localized remaining in-band states
    let mut by_ipr: Vec<(usize, f64)> = band
        .iter()
        .filter(|&&s| classes[s] == StateClass::Continuum)
        .map(|&s| Ok((s, marginals[s].ipr()?)))
        .collect::<Result<_>>()?;
    by_ipr.sort_by(|a, b| a.1.total_cmp(&b.1));
    let n_sr = ((band.len() as f64) * (1.0 - thresholds.ipr_percentile)).floor() as usize;
    let uniform_ipr = marginals[0].len() as f64;
    for &(s, v) in by_ipr.iter().take(n_sr) {
        if v < thresholds.bound_ipr_fraction * uniform_ipr {
            classes[s] = StateClass::ScatteringResonance;
        }
    }
    Ok(classes)
}
