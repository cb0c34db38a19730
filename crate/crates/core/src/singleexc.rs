//! Single-excitation band structure, band gap and finite-array eigenmodes.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{powerlaw_fit, spectral_gap, GapOptions, Interval, PowerLawFit};
use crate::dispersion::{divergence_distance, Dispersion, DEFAULT_L_SUM};
use crate::error::{Error, Result};
use crate::kernels::{coupling_matrix, CouplingKernel};
use crate::lattice::{offset_axis, ComplexEnergy, LatticeSpec, Momentum2};
use crate::linalg::eig;

/// Default BZ grid density for gap and impurity sums.
pub const DEFAULT_GRID_N: usize = 301;
/// Smallest grid accepted by [`band_gap`].
pub const MIN_GAP_GRID: usize = 101;

/// High-symmetry points of the square zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryPoint {
    Gamma,
    X,
    M,
}

impl SymmetryPoint {
    pub fn momentum(&self) -> Momentum2 {
        match self {
            SymmetryPoint::Gamma => Momentum2::gamma(),
            SymmetryPoint::X => Momentum2::x_point(),
            SymmetryPoint::M => Momentum2::m_point(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SymmetryPoint::Gamma => "gamma",
            SymmetryPoint::X => "x",
            SymmetryPoint::M => "m",
        }
    }
}

/// Waveguide dispersion `E(k)` at spacing `k0d` from an `l_sum x l_sum` sum.
pub fn dispersion_td(k: Momentum2, k0d: f64, l_sum: usize) -> Result<ComplexEnergy> {
    let d = Dispersion::new(CouplingKernel::Waveguide2D, k0d, l_sum)?;
    Ok(d.energy(k)?.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSample {
    pub k: Momentum2,
    /// Arc length along the path.
    pub s: f64,
    pub energy: f64,
    pub decay: f64,
    /// Within one path step of a `|k + G| = k0` divergence.
    pub divergent: bool,
}

/// Samples along `Gamma -> X -> M -> Gamma`, `n_pts` per segment including
/// both ends; shared corners appear once.
pub fn band_path(disp: &Dispersion, n_pts: usize) -> Result<Vec<BandSample>> {
    if n_pts < 3 {
        return Err(Error::InvalidArgument(format!("need >= 3 points per segment, got {n_pts}")));
    }
    let corners = [Momentum2::gamma(), Momentum2::x_point(), Momentum2::m_point(), Momentum2::gamma()];
    let mut ks = Vec::with_capacity(3 * (n_pts - 1) + 1);
    let mut arc = Vec::with_capacity(ks.capacity());
    let mut s0 = 0.0;
    let mut min_step = f64::INFINITY;
    for seg in 0..3 {
        let (a, b) = (corners[seg], corners[seg + 1]);
        let len = (b.kx - a.kx).hypot(b.ky - a.ky);
        min_step = min_step.min(len / (n_pts - 1) as f64);
        let first = if seg == 0 { 0 } else { 1 };
        for i in first..n_pts {
            if i == n_pts - 1 {
                ks.push(b);
            } else {
                let t = i as f64 / (n_pts - 1) as f64;
                ks.push(Momentum2::new(a.kx + t * (b.kx - a.kx), a.ky + t * (b.ky - a.ky)));
            }
            arc.push(s0 + len * i as f64 / (n_pts - 1) as f64);
        }
        s0 += len;
    }
    let k0d = disp.k0d();
    Ok(ks
        .par_iter()
        .zip(arc.par_iter())
        .map(|(&k, &s)| {
            let e = disp.energy_unchecked(k);
            BandSample { k, s, energy: e.re, decay: -2.0 * e.im, divergent: divergence_distance(k, k0d) < min_step }
        })
        .collect())
}

/// `Re E` on the offset `n x n` grid together with the divergence mask.
#[derive(Debug, Clone)]
pub struct BandGrid {
    pub n: usize,
    pub axis: Vec<f64>,
    /// Row-major: `values[i * n + j]` at `(axis[i], axis[j])`.
    pub energies: Vec<Complex64>,
    pub mask: Vec<bool>,
}

pub fn band_grid(disp: &Dispersion, n: usize, annulus_cells: f64) -> Result<BandGrid> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("grid size {n} must be >= 2")));
    }
    let axis = offset_axis(n);
    let energies = disp.energy_grid(&axis, &axis);
    let mask = divergence_mask(&axis, &axis, disp.k0d(), annulus_cells * 2.0 * PI / n as f64);
    Ok(BandGrid { n, axis, energies, mask })
}

/// `true` where `(kx[i], ky[j])` lies within `width` of a divergence circle.
pub fn divergence_mask(kx: &[f64], ky: &[f64], k0d: f64, width: f64) -> Vec<bool> {
    let mut mask = Vec::with_capacity(kx.len() * ky.len());
    for &a in kx {
        for &b in ky {
            mask.push(divergence_distance(Momentum2::new(a, b), k0d) < width);
        }
    }
    mask
}

/// Interval of the spectral gap, if any.
///
/// Every cell of the periodic grid attains all energies between its corner
/// values, so the union of cell ranges is the attained band; cells touching
/// the divergence annulus are dropped. The gap is the widest remaining hole
/// inside the energy window. It need not contain `E = 0`: at small spacings
/// the whole gap lies above the bare resonance.
pub fn band_gap_interval(disp: &Dispersion, grid_n: usize, opts: &GapOptions) -> Result<Option<Interval>> {
    if grid_n < MIN_GAP_GRID {
        return Err(Error::InvalidArgument(format!("gap grid {grid_n} must be >= {MIN_GAP_GRID}")));
    }
    let grid = band_grid(disp, grid_n, opts.annulus_cells)?;
    let re: Vec<f64> = grid.energies.iter().map(|e| e.re).collect();
    Ok(spectral_gap(&re, &grid.mask, grid_n, opts))
}

/// Waveguide gap width with default lattice sum and estimator settings.
pub fn band_gap(k0d: f64, grid_n: usize) -> Result<f64> {
    let disp = Dispersion::new(CouplingKernel::Waveguide2D, k0d, DEFAULT_L_SUM)?;
    Ok(band_gap_interval(&disp, grid_n, &GapOptions::default())?.map_or(0.0, |g| g.width()))
}

#[derive(Debug, Clone)]
pub struct FiniteMode {
    pub amplitudes: Vec<Complex64>,
    pub energy: ComplexEnergy,
    pub quasimomentum: Momentum2,
    /// `|<k|v>|^2` at the assigned quasimomentum.
    pub overlap: f64,
}

impl FiniteMode {
    pub fn decay(&self) -> f64 {
        self.energy.decay()
    }
}

/// Momenta `2 pi m / L` folded into `(-pi, pi]`.
pub fn finite_momenta(l: usize) -> Vec<f64> {
    let lo = -((l as i64 - 1) / 2);
    let hi = l as i64 / 2;
    (lo..=hi).map(|m| 2.0 * PI * m as f64 / l as f64).collect()
}

/// Bloch overlaps `|<k|v>|^2` on the `finite_momenta` grid, row-major in kx.
pub fn bloch_overlaps(v: &[Complex64], l: usize) -> Vec<f64> {
    let ks = finite_momenta(l);
    let n = (l * l) as f64;
    let phase: Vec<Vec<Complex64>> =
        ks.iter().map(|&k| (0..l).map(|x| Complex64::from_polar(1.0, -k * x as f64)).collect()).collect();
    let mut out = Vec::with_capacity(l * l);
    // partial transform over x for each row iy
    let mut px = vec![Complex64::new(0.0, 0.0); l * l];
    for (a, ph) in phase.iter().enumerate() {
        for iy in 0..l {
            let mut acc = Complex64::new(0.0, 0.0);
            for ix in 0..l {
                acc += ph[ix] * v[iy * l + ix];
            }
            px[a * l + iy] = acc;
        }
    }
    for a in 0..l {
        for ph in &phase {
            let mut acc = Complex64::new(0.0, 0.0);
            for iy in 0..l {
                acc += ph[iy] * px[a * l + iy];
            }
            out.push(acc.norm_sqr() / n);
        }
    }
    out
}

/// Index of the maximal overlap; ties within `1e-10` go to the first entry,
/// which is the lexicographically lowest `(kx, ky)`.
fn argmax_overlap(ov: &[f64]) -> usize {
    let mut best = 0;
    for (i, &o) in ov.iter().enumerate() {
        if o > ov[best] + 1e-10 {
            best = i;
        }
    }
    best
}

/// All eigenmodes of the coupling matrix labeled by maximal Bloch overlap.
pub fn finite_modes(lattice: &LatticeSpec, kernel: CouplingKernel) -> Result<Vec<FiniteMode>> {
    let h = coupling_matrix(lattice, kernel)?;
    modes_of(&h, lattice.size())
}

fn modes_of(h: &Mat<Complex64>, l: usize) -> Result<Vec<FiniteMode>> {
    let d = eig(h.as_ref())?;
    let ks = finite_momenta(l);
    let n = h.nrows();
    let mut modes: Vec<FiniteMode> = (0..n)
        .map(|s| {
            let amplitudes: Vec<Complex64> = (0..n).map(|i| d.right[(i, s)]).collect();
            let ov = bloch_overlaps(&amplitudes, l);
            let b = argmax_overlap(&ov);
            FiniteMode {
                energy: d.values[s].into(),
                quasimomentum: Momentum2::new(ks[b / l], ks[b % l]),
                overlap: ov[b],
                amplitudes,
            }
        })
        .collect();
    modes.sort_by(|a, b| a.energy.re.total_cmp(&b.energy.re).then(a.energy.im.total_cmp(&b.energy.im)));
    Ok(modes)
}

/// The mode representing quasimomentum `k`: the best overlap among modes
/// labeled `k`, or the largest overlap with `k` if none carries the label.
pub fn mode_at(modes: &[FiniteMode], k: Momentum2, l: usize) -> Option<&FiniteMode> {
    let labeled = modes
        .iter()
        .filter(|m| m.quasimomentum.torus_distance(&k) < 1e-9)
        .max_by(|a, b| a.overlap.total_cmp(&b.overlap));
    labeled.or_else(|| {
        let ks = finite_momenta(l);
        let ia = ks.iter().position(|&q| (Momentum2::new(q, 0.0).torus_distance(&Momentum2::new(k.kx, 0.0))) < 1e-9)?;
        let ib = ks.iter().position(|&q| (Momentum2::new(q, 0.0).torus_distance(&Momentum2::new(k.ky, 0.0))) < 1e-9)?;
        modes.iter().max_by(|a, b| {
            let oa = bloch_overlaps(&a.amplitudes, l)[ia * l + ib];
            let ob = bloch_overlaps(&b.amplitudes, l)[ia * l + ib];
            oa.total_cmp(&ob)
        })
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingResult {
    pub point: SymmetryPoint,
    pub k0d: f64,
    /// `(N, decay)` per size.
    pub points: Vec<(f64, f64)>,
    pub fit: PowerLawFit,
}

/// Power-law fit of the decay of the mode at `point` versus `N = L^2`.
pub fn single_exc_scaling(
    point: SymmetryPoint,
    kernel: CouplingKernel,
    k0d: f64,
    sizes: &[usize],
) -> Result<ScalingResult> {
    if sizes.len() < 3 {
        return Err(Error::NotEnoughData(format!("need >= 3 sizes, got {}", sizes.len())));
    }
    let points: Vec<(f64, f64)> = sizes
        .par_iter()
        .map(|&l| {
            let lat = LatticeSpec::new(l, k0d)?;
            let modes = finite_modes(&lat, kernel)?;
            let m = mode_at(&modes, point.momentum(), l)
                .ok_or_else(|| Error::NotEnoughData(format!("no mode at {} for L = {l}", point.name())))?;
            Ok(((l * l) as f64, m.decay()))
        })
        .collect::<Result<_>>()?;
    let fit = powerlaw_fit(&points)?;
    Ok(ScalingResult { point, k0d, points, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disp(k0d: f64) -> Dispersion {
        Dispersion::new(CouplingKernel::Waveguide2D, k0d, 60).unwrap()
    }

    #[test]
    fn path_hits_corners() {
        let p = band_path(&disp(0.5 * PI), 5).unwrap();
        assert_eq!(p.len(), 13);
        assert_eq!(p[0].k, Momentum2::gamma());
        assert_eq!(p[4].k, Momentum2::x_point());
        assert_eq!(p[8].k, Momentum2::m_point());
        assert_eq!(p[12].k, Momentum2::gamma());
        assert!(p.windows(2).all(|w| w[1].s > w[0].s));
        assert!(band_path(&disp(0.5 * PI), 2).is_err());
    }

    #[test]
    fn path_flags_divergence() {
        let p = band_path(&disp(0.5 * PI), 41).unwrap();
        // |k| = pi/2 is crossed on Gamma-X and on M-Gamma
        assert!(p[..41].iter().any(|s| s.divergent));
        assert!(p[80..].iter().any(|s| s.divergent));
        assert!(!p[40..81].iter().any(|s| s.divergent));
    }

    #[test]
    fn dispersion_is_even() {
        let a = dispersion_td(Momentum2::new(0.3 * PI, 0.7 * PI), 0.5 * PI, 50).unwrap();
        let b = dispersion_td(Momentum2::new(-0.3 * PI, -0.7 * PI), 0.5 * PI, 50).unwrap();
        assert!((a.re - b.re).abs() < 1e-12 && (a.im - b.im).abs() < 1e-12);
    }

    #[test]
    fn gap_grid_precondition() {
        assert!(band_gap(0.5 * PI, 51).is_err());
    }

    #[test]
    fn finite_momenta_grid() {
        assert_eq!(finite_momenta(4).len(), 4);
        assert!((finite_momenta(4)[3] - PI).abs() < 1e-15);
        assert_eq!(finite_momenta(5).len(), 5);
        assert!(finite_momenta(5).iter().all(|k| k.abs() < PI));
    }

    #[test]
    fn bloch_overlap_of_plane_wave() {
        let l = 6;
        let k = finite_momenta(l);
        let (a, b) = (1, 4);
        let v: Vec<Complex64> = (0..l * l)
            .map(|i| Complex64::from_polar(1.0 / l as f64, k[a] * (i % l) as f64 + k[b] * (i / l) as f64))
            .collect();
        let ov = bloch_overlaps(&v, l);
        assert!((ov[a * l + b] - 1.0).abs() < 1e-12);
        assert!((ov.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_lowest_momentum() {
        // standing wave cos(k x): equal weight on +k and -k
        let l = 6;
        let k = finite_momenta(l)[4];
        let raw: Vec<f64> = (0..l * l).map(|i| (k * (i % l) as f64).cos()).collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let v: Vec<Complex64> = raw.iter().map(|x| Complex64::new(x / norm, 0.0)).collect();
        let ov = bloch_overlaps(&v, l);
        let b = argmax_overlap(&ov);
        let ks = finite_momenta(l);
        assert!(ks[b / l] < 0.0 && ks[b % l] == 0.0);
    }

    #[test]
    fn finite_modes_small_array() {
        let lat = LatticeSpec::new(4, 0.52 * PI).unwrap();
        let modes = finite_modes(&lat, CouplingKernel::Waveguide2D).unwrap();
        assert_eq!(modes.len(), 16);
        let total: f64 = modes.iter().map(|m| m.decay()).sum();
        assert!((total - 16.0).abs() < 1e-9);
        for m in &modes {
            assert!(m.decay() > -1e-8);
            let n: f64 = m.amplitudes.iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
            assert!(m.quasimomentum.is_in_bz());
        }
    }

    #[test]
    fn scaling_needs_three_sizes() {
        assert!(single_exc_scaling(SymmetryPoint::M, CouplingKernel::Waveguide2D, 1.0, &[4, 6]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn dispersion_has_point_group_symmetry(kx in -PI..PI, ky in -PI..PI, k0d in 0.2f64..1.4 * PI) {
            let d = Dispersion::new(CouplingKernel::Waveguide2D, k0d, 80).unwrap();
            let e = d.energy(Momentum2::new(kx, ky)).unwrap();
            for (a, b) in [(ky, kx), (-kx, ky), (kx, -ky), (-ky, -kx)] {
                let f = d.energy(Momentum2::new(a, b)).unwrap();
                proptest::prop_assert!((e - f).norm() <= 1e-10 * e.norm().max(1.0));
            }
        }
    }

    fn matched_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
        let mut used = vec![false; b.len()];
        let mut worst = 0f64;
        for x in a {
            let (j, d) = b
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, y)| (j, (x - y).norm()))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .unwrap();
            used[j] = true;
            worst = worst.max(d);
        }
        worst
    }

    #[test]
    fn finite_modes_residuals_and_relabeling() {
        let lat = LatticeSpec::new(5, 0.52 * PI).unwrap();
        let h = coupling_matrix(&lat, CouplingKernel::Waveguide2D).unwrap();
        let n = h.nrows();
        let h_norm = h.norm_l2();
        let modes = finite_modes(&lat, CouplingKernel::Waveguide2D).unwrap();
        for m in &modes {
            let e = Complex64::new(m.energy.re, m.energy.im);
            let hv = crate::linalg::mat_vec(h.as_ref(), &m.amplitudes);
            let r: f64 = hv.iter().zip(&m.amplitudes).map(|(a, v)| (a - e * v).norm_sqr()).sum::<f64>().sqrt();
            assert!(r <= 1e-8 * h_norm, "residual {r}");
        }
        // reverse-and-stride relabeling of the sites
        let perm: Vec<usize> = (0..n).map(|i| (7 * i + 3) % n).collect();
        let hp = Mat::from_fn(n, n, |i, j| h[(perm[i], perm[j])]);
        let a: Vec<Complex64> = modes.iter().map(|m| Complex64::new(m.energy.re, m.energy.im)).collect();
        let b = eig(hp.as_ref()).unwrap().values;
        assert!(matched_distance(&a, &b) < 1e-8);
    }
}
