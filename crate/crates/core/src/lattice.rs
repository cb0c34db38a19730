//! Square-array geometry, Brillouin-zone points and complex energies.
//!
//! Lengths are in units of the lattice constant `d`, momenta in units of
//! `1/d`. Sites are indexed row-major with `x` running fastest:
//! `index = iy * L + ix`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of an `L x L` square array with dimensionless spacing `k0d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    l: usize,
    k0d: f64,
}

impl LatticeSpec {
    pub fn new(l: usize, k0d: f64) -> Result<Self> {
        if l < 2 {
            return Err(Error::InvalidArgument(format!("lattice size L = {l} must be >= 2")));
        }
        if !(k0d.is_finite() && k0d > 0.0) {
            return Err(Error::InvalidArgument(format!("k0d = {k0d} must be positive")));
        }
        Ok(Self { l, k0d })
    }

    /// Linear size `L`.
    pub fn size(&self) -> usize {
        self.l
    }

    /// Number of atoms `N = L * L`.
    pub fn num_sites(&self) -> usize {
        self.l * self.l
    }

    pub fn k0d(&self) -> f64 {
        self.k0d
    }

    /// Same geometry at another spacing.
    pub fn with_k0d(&self, k0d: f64) -> Result<Self> {
        Self::new(self.l, k0d)
    }

    pub fn index(&self, ix: usize, iy: usize) -> Result<usize> {
        if ix >= self.l || iy >= self.l {
            return Err(Error::IndexOutOfRange { index: iy * self.l + ix, n: self.num_sites() });
        }
        Ok(iy * self.l + ix)
    }

    /// Integer coordinates `(ix, iy)` of site `i`.
    pub fn coords(&self, i: usize) -> Result<(usize, usize)> {
        if i >= self.num_sites() {
            return Err(Error::IndexOutOfRange { index: i, n: self.num_sites() });
        }
        Ok((i % self.l, i / self.l))
    }

    /// Position of site `i` in units of `d`.
    pub fn position(&self, i: usize) -> Result<(f64, f64)> {
        let (ix, iy) = self.coords(i)?;
        Ok((ix as f64, iy as f64))
    }

    /// Integer displacement `x_j - x_i`.
    pub fn displacement(&self, i: usize, j: usize) -> Result<(i64, i64)> {
        let (ax, ay) = self.coords(i)?;
        let (bx, by) = self.coords(j)?;
        Ok((bx as i64 - ax as i64, by as i64 - ay as i64))
    }

    /// Euclidean distance between sites `i` and `j`, in units of `d`.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        let (dx, dy) = self.displacement(i, j)?;
        Ok(((dx * dx + dy * dy) as f64).sqrt())
    }
}

/// Free-function form of [`LatticeSpec::distance`].
pub fn distance(i: usize, j: usize, lattice: &LatticeSpec) -> Result<f64> {
    lattice.distance(i, j)
}

/// A quasi-momentum `(kx, ky)` in units of `1/d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Momentum2 {
    pub kx: f64,
    pub ky: f64,
}

/// Slack allowed when testing membership of the closed zone `[-pi, pi]^2`.
const BZ_SLACK: f64 = 1e-9;

impl Momentum2 {
    pub const fn new(kx: f64, ky: f64) -> Self {
        Self { kx, ky }
    }

    pub const fn gamma() -> Self {
        Self { kx: 0.0, ky: 0.0 }
    }

    pub const fn x_point() -> Self {
        Self { kx: PI, ky: 0.0 }
    }

    pub const fn m_point() -> Self {
        Self { kx: PI, ky: PI }
    }

    /// Checked constructor: `k` must lie in the closed first zone.
    pub fn in_bz(kx: f64, ky: f64) -> Result<Self> {
        let k = Self::new(kx, ky);
        k.check_bz()?;
        Ok(k)
    }

    pub fn is_in_bz(&self) -> bool {
        self.kx.is_finite()
            && self.ky.is_finite()
            && self.kx.abs() <= PI + BZ_SLACK
            && self.ky.abs() <= PI + BZ_SLACK
    }

    pub fn check_bz(&self) -> Result<()> {
        if self.is_in_bz() {
            Ok(())
        } else {
            Err(Error::OutsideBrillouinZone { kx: self.kx, ky: self.ky })
        }
    }

    pub fn norm(&self) -> f64 {
        self.kx.hypot(self.ky)
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.kx, -self.ky)
    }

    /// `self - other`, folded back into `[-pi, pi)^2`.
    pub fn sub_folded(&self, other: &Self) -> Self {
        Self::new(fold(self.kx - other.kx), fold(self.ky - other.ky))
    }

    /// Distance from `self` to `other` on the reciprocal torus.
    pub fn torus_distance(&self, other: &Self) -> f64 {
        let d = self.sub_folded(other);
        d.norm()
    }
}

impl fmt::Display for Momentum2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}pi, {:.6}pi)", self.kx / PI, self.ky / PI)
    }
}

/// Folds an angle into `[-pi, pi)`.
pub fn fold(k: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let r = (k + PI).rem_euclid(two_pi) - PI;
    if r >= PI {
        r - two_pi
    } else {
        r
    }
}

/// The 1D sample set `{-pi + (i + 1/2) 2 pi / n : i = 0..n}`.
///
/// The half-cell offset keeps samples off the zone boundary and makes the
/// set exactly closed under `k -> -k` (`k_i = -k_{n-1-i}`).
pub fn offset_axis(n: usize) -> Vec<f64> {
    let h = 2.0 * PI / n as f64;
    (0..n).map(|i| -PI + (i as f64 + 0.5) * h).collect()
}

/// Uniform `n x n` grid over the first zone with a half-cell offset.
///
/// Ordering is row-major: point `(i, j)` has `kx = axis[i]`, `ky = axis[j]`
/// and sits at position `i * n + j`.
pub fn enumerate_bz_grid(n: usize) -> Result<Vec<Momentum2>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("grid size {n} must be >= 2")));
    }
    let axis = offset_axis(n);
    let mut out = Vec::with_capacity(n * n);
    for &kx in &axis {
        for &ky in &axis {
            out.push(Momentum2::new(kx, ky));
        }
    }
    Ok(out)
}

/// An eigenvalue `E = re + i im` with `im = -decay / 2`, in units of the
/// kernel rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexEnergy {
    pub re: f64,
    pub im: f64,
}

impl ComplexEnergy {
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    /// Decay rate `-2 Im E`.
    pub fn decay(&self) -> f64 {
        -2.0 * self.im
    }
}

impl From<num_complex::Complex64> for ComplexEnergy {
    fn from(z: num_complex::Complex64) -> Self {
        Self::new(z.re, z.im)
    }
}

impl From<ComplexEnergy> for num_complex::Complex64 {
    fn from(e: ComplexEnergy) -> Self {
        num_complex::Complex64::new(e.re, e.im)
    }
}
