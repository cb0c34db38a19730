//! Thermodynamic-limit single-excitation dispersion from a finite
//! triangle-weighted lattice sum.
//!
//! `E(k) = -i/2 + (2/N) sum_r G(k0d |r|) cos(k.r) (L - |r_x|)(L - r_y)`
//! over the half plane `{r_y = 0, r_x in [1, L-1]} u {r_y in [1, L-1],
//! r_x in [-(L-1), L-1]}`, with `N = L^2`.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{green, CouplingKernel};
use crate::lattice::Momentum2;

/// Lattice size of the dispersion sum used unless configured otherwise.
pub const DEFAULT_L_SUM: usize = 300;
/// Smallest accepted lattice-sum size.
pub const MIN_L_SUM: usize = 50;

/// Precomputed weighted coefficients `c(r) = (2/N) G(k0d|r|) w(r)`.
#[derive(Debug, Clone)]
pub struct Dispersion {
    kernel: CouplingKernel,
    k0d: f64,
    l_sum: usize,
    /// Row `ry`, column `rx + (L - 1)`.
    coeffs: Vec<Complex64>,
}

impl Dispersion {
    pub fn new(kernel: CouplingKernel, k0d: f64, l_sum: usize) -> Result<Self> {
        if l_sum < MIN_L_SUM {
            return Err(Error::InvalidArgument(format!(
                "lattice-sum size {l_sum} must be >= {MIN_L_SUM}"
            )));
        }
        if !(k0d.is_finite() && k0d > 0.0) {
            return Err(Error::InvalidArgument(format!("k0d = {k0d} must be positive")));
        }
        let l = l_sum as i64;
        let width = (2 * l - 1) as usize;
        let norm = 2.0 / (l * l) as f64;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); width * l_sum];
        for ry in 0..l {
            let rx_min = if ry == 0 { 1 } else { -(l - 1) };
            for rx in rx_min..l {
                let dist = ((rx * rx + ry * ry) as f64).sqrt();
                let w = ((l - rx.abs()) * (l - ry)) as f64;
                coeffs[ry as usize * width + (rx + l - 1) as usize] =
                    green(kernel, k0d * dist)? * (norm * w);
            }
        }
        Ok(Self { kernel, k0d, l_sum, coeffs })
    }

    pub fn kernel(&self) -> CouplingKernel {
        self.kernel
    }

    pub fn k0d(&self) -> f64 {
        self.k0d
    }

    pub fn l_sum(&self) -> usize {
        self.l_sum
    }

    /// `E(k)` by direct summation.
    pub fn energy(&self, k: Momentum2) -> Result<Complex64> {
        k.check_bz()?;
        Ok(self.energy_unchecked(k))
    }

    /// `E(k)` for any `k`; the sum is `2 pi`-periodic in each component.
    pub fn energy_unchecked(&self, k: Momentum2) -> Complex64 {
        let l = self.l_sum as i64;
        let width = (2 * l - 1) as usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for ry in 0..l {
            let row = &self.coeffs[ry as usize * width..(ry as usize + 1) * width];
            for (col, c) in row.iter().enumerate() {
                if c.re == 0.0 && c.im == 0.0 {
                    continue;
                }
                let rx = col as i64 - (l - 1);
                acc += c * (k.kx * rx as f64 + k.ky * ry as f64).cos();
            }
        }
        acc + Complex64::new(0.0, -0.5)
    }

    /// `E` on the product grid `kx[i] x ky[j]`, row-major in `i`.
    ///
    /// Uses the separable form `cos(a + b) = cos a cos b - sin a sin b`
    /// so the whole grid costs a handful of dense products.
    pub fn energy_grid(&self, kx: &[f64], ky: &[f64]) -> Vec<Complex64> {
        let l = self.l_sum;
        let width = 2 * l - 1;
        let nx = kx.len();
        let ny = ky.len();
        if nx == 0 || ny == 0 {
            return Vec::new();
        }
        let shift = l as f64 - 1.0;
        let cx = Mat::<f64>::from_fn(nx, width, |i, c| (kx[i] * (c as f64 - shift)).cos());
        let sx = Mat::<f64>::from_fn(nx, width, |i, c| (kx[i] * (c as f64 - shift)).sin());
        let cy_t = Mat::<f64>::from_fn(l, ny, |r, j| (ky[j] * r as f64).cos());
        let sy_t = Mat::<f64>::from_fn(l, ny, |r, j| (ky[j] * r as f64).sin());
        let c_re = Mat::<f64>::from_fn(width, l, |c, r| self.coeffs[r * width + c].re);
        let c_im = Mat::<f64>::from_fn(width, l, |c, r| self.coeffs[r * width + c].im);

        let re = &(&cx * &c_re) * &cy_t - &(&sx * &c_re) * &sy_t;
        let im = &(&cx * &c_im) * &cy_t - &(&sx * &c_im) * &sy_t;
        let mut out = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                out.push(Complex64::new(re[(i, j)], im[(i, j)] - 0.5));
            }
        }
        out
    }
}

/// Distance in k-space from `k` to the nearest divergence circle
/// `|k + G| = k0d`, over reciprocal vectors `G = 2 pi (m, n)`.
pub fn divergence_distance(k: Momentum2, k0d: f64) -> f64 {
    let mut best = f64::INFINITY;
    for m in -2i32..=2 {
        for n in -2i32..=2 {
            let gx = k.kx + 2.0 * PI * m as f64;
            let gy = k.ky + 2.0 * PI * n as f64;
            best = best.min((gx.hypot(gy) - k0d).abs());
        }
    }
    best
}
