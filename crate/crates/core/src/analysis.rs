//! Localization measures, log-log power-law fits and spectral-gap
//! detection shared by the single- and two-excitation code.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::twoexc::{PairBasis, RelCoordBasis};

/// Tolerance on `sum p = 1` accepted by [`ipr`].
pub const NORMALIZATION_TOL: f64 = 1e-8;

/// Inverse participation ratio `1 / sum p_r^2` of a probability vector.
///
/// Ranges from 1 (fully localized) to `p.len()` (uniform).
pub fn ipr(probabilities: &[f64]) -> Result<f64> {
    if probabilities.is_empty() {
        return Err(Error::InvalidArgument("empty probability vector".into()));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL || probabilities.iter().any(|&p| p < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "probabilities must be non-negative and sum to 1 (sum = {total})"
        )));
    }
    let s2: f64 = probabilities.iter().map(|p| p * p).sum();
    Ok(1.0 / s2)
}

/// `y ~ A N^exponent` fitted by ordinary least squares in log-log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub stderr: f64,
    pub r_squared: f64,
    /// `ln A`.
    pub intercept: f64,
}

pub fn powerlaw_fit(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::NotEnoughData(format!(
            "power-law fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(n, y)) = points.iter().find(|(n, y)| !(*n > 0.0) || !(*y > 0.0)) {
        return Err(Error::InvalidArgument(format!("non-positive point ({n}, {y}) in log-log fit")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::NotEnoughData("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (ssr / (m - 2.0) / sxx).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    Ok(PowerLawFit { exponent: slope, stderr, r_squared, intercept })
}

/// A closed energy interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, e: f64) -> bool {
        e >= self.lo && e <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Energies attained by a continuous band sampled on a periodic `n x n`
/// grid, as a union of per-cell ranges.
///
/// Each grid cell contributes `[min, max]` of its four corner values (the
/// band is continuous inside a cell, so it attains everything in between).
/// Cells with a masked corner are dropped; masking is how samples next to
/// a divergence are excluded. The returned intervals are merged, sorted
/// and pairwise disjoint.
pub fn attained_ranges(values: &[f64], mask: &[bool], n: usize) -> Vec<Interval> {
    assert_eq!(values.len(), n * n);
    assert_eq!(mask.len(), n * n);
    let mut cells = Vec::with_capacity(n * n);
    for i in 0..n {
        let ip = (i + 1) % n;
        for j in 0..n {
            let jp = (j + 1) % n;
            let idx = [i * n + j, ip * n + j, i * n + jp, ip * n + jp];
            if idx.iter().any(|&k| mask[k]) {
                continue;
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &k in &idx {
                lo = lo.min(values[k]);
                hi = hi.max(values[k]);
            }
            cells.push(Interval { lo, hi });
        }
    }
    merge_intervals(cells)
}

pub fn merge_intervals(mut cells: Vec<Interval>) -> Vec<Interval> {
    cells.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
    let mut merged: Vec<Interval> = Vec::new();
    for c in cells {
        match merged.last_mut() {
            Some(last) if c.lo <= last.hi => last.hi = last.hi.max(c.hi),
            _ => merged.push(c),
        }
    }
    merged
}

/// Empty intervals between consecutive attained ranges.
pub fn holes(ranges: &[Interval]) -> Vec<Interval> {
    ranges.windows(2).map(|w| Interval { lo: w[0].hi, hi: w[1].lo }).collect()
}

/// The widest hole wider than `floor`, if any.
pub fn widest_hole(ranges: &[Interval], floor: f64) -> Option<Interval> {
    holes(ranges)
        .into_iter()
        .filter(|h| h.width() > floor)
        .max_by(|a, b| a.width().total_cmp(&b.width()))
}

/// Knobs of the attained-range gap estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapOptions {
    /// Samples closer than this many grid spacings to a divergence circle
    /// are excluded.
    pub annulus_cells: f64,
    /// Holes narrower than this are ignored.
    pub floor: f64,
    /// Only holes inside `[-window, window]` count; the masked divergence
    /// leaves spurious holes far out in energy.
    pub window: f64,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self { annulus_cells: 2.0, floor: 1e-3, window: 4.0 }
    }
}

/// The widest hole of the attained ranges inside the energy window.
pub fn spectral_gap(values: &[f64], mask: &[bool], n: usize, opts: &GapOptions) -> Option<Interval> {
    let ranges = attained_ranges(values, mask, n);
    holes(&ranges)
        .into_iter()
        .filter(|h| h.width() > opts.floor && h.lo >= -opts.window && h.hi <= opts.window)
        .max_by(|a, b| a.width().total_cmp(&b.width()))
}

/// Relative-coordinate population `p(r)` of a pair state, on the half plane.
#[derive(Debug, Clone)]
pub struct RelMarginal {
    pub basis: RelCoordBasis,
    pub probs: Vec<f64>,
}

impl RelMarginal {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, r: (i64, i64)) -> f64 {
        self.basis.index(r).map_or(0.0, |i| self.probs[i])
    }

    pub fn ipr(&self) -> Result<f64> {
        ipr(&self.probs)
    }

    pub fn mean_separation(&self) -> f64 {
        self.probs.iter().enumerate().map(|(i, p)| p * self.basis.norm(i)).sum()
    }

    fn mass_where(&self, pred: impl Fn(i64, i64) -> bool) -> f64 {
        self.basis
            .vectors()
            .iter()
            .zip(&self.probs)
            .filter(|((x, y), _)| pred(*x, *y))
            .map(|(_, p)| p)
            .sum()
    }

    /// Mass on the axes `r_x = 0` or `r_y = 0`.
    pub fn axes_mass(&self) -> f64 {
        self.mass_where(|x, y| x == 0 || y == 0)
    }

    /// Mass on the diagonals `|r_x| = |r_y|`.
    pub fn diagonal_mass(&self) -> f64 {
        self.mass_where(|x, y| x.abs() == y.abs())
    }
}

/// `p(r) = sum_{x_j - x_i = +-r} |c_ij|^2` for a unit-norm pair state.
pub fn relative_marginal(amplitudes: &[Complex64], pairs: &PairBasis, l: usize) -> Result<RelMarginal> {
    if amplitudes.len() != pairs.dim() {
        return Err(Error::InvalidArgument(format!(
            "state has {} amplitudes, pair basis {}",
            amplitudes.len(),
            pairs.dim()
        )));
    }
    let basis = RelCoordBasis::new(l)?;
    let mut probs = vec![0.0; basis.dim()];
    for (p, c) in amplitudes.iter().enumerate() {
        let (i, j) = pairs.pair(p);
        let r = ((j % l) as i64 - (i % l) as i64, (j / l) as i64 - (i / l) as i64);
        let k = basis.index(r).expect("pair separation lies on the relative grid");
        probs[k] += c.norm_sqr();
    }
    Ok(RelMarginal { basis, probs })
}
