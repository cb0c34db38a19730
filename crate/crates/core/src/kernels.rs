//! Photon-mediated coupling functions and the dense coupling matrix.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::specfun::{bessel_j0, bessel_y0};

/// Default cap on the linear dimension of dense single-excitation matrices.
pub const DEFAULT_MATRIX_CAP: usize = 4096;

/// Which Green's function mediates the atom-atom coupling.
///
/// `Waveguide2D` energies are in units of the waveguide decay rate `gamma`,
/// `FreeSpaceZZ` energies in units of the free-space rate `gamma0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CouplingKernel {
    #[serde(rename = "waveguide")]
    Waveguide2D,
    #[serde(rename = "free_space")]
    FreeSpaceZZ,
}

impl CouplingKernel {
    pub fn name(&self) -> &'static str {
        match self {
            CouplingKernel::Waveguide2D => "waveguide",
            CouplingKernel::FreeSpaceZZ => "free_space",
        }
    }

    pub fn rate_unit(&self) -> &'static str {
        match self {
            CouplingKernel::Waveguide2D => "gamma",
            CouplingKernel::FreeSpaceZZ => "gamma0",
        }
    }

    /// `G(z)` at dimensionless distance `z = k0 |x| > 0`.
    pub fn green(&self, z: f64) -> Result<Complex64> {
        green(*self, z)
    }

    /// Diagonal element after removing the divergent Lamb shift.
    pub const fn self_energy(&self) -> Complex64 {
        Complex64::new(0.0, -0.5)
    }
}

/// Coupling function `G(z)` in units of the kernel rate.
///
/// * waveguide: `G(z) = (Y0(z) - i J0(z)) / 2`
/// * free space (zz): `G(z) = 3 e^{iz} (1 - iz - z^2) / (4 z^3)`
///
/// Both diverge at `z = 0`; the on-site value is fixed by
/// [`CouplingKernel::self_energy`] instead.
pub fn green(kernel: CouplingKernel, z: f64) -> Result<Complex64> {
    if z.is_nan() || z <= 0.0 {
        return Err(Error::Domain { func: "green", arg: z });
    }
    Ok(match kernel {
        CouplingKernel::Waveguide2D => Complex64::new(0.5 * bessel_y0(z)?, -0.5 * bessel_j0(z)?),
        CouplingKernel::FreeSpaceZZ => {
            let phase = Complex64::new(z.cos(), z.sin());
            let poly = Complex64::new(1.0 - z * z, -z);
            phase * poly * (0.75 / (z * z * z))
        }
    })
}

/// Collective rate matrix `Gamma_ij = -Im G_ij` is PSD for both kernels;
/// for the waveguide `Gamma_ij = J0(k0 |x_ij|) / 2`.
pub fn dissipator_element(kernel: CouplingKernel, z: f64) -> Result<f64> {
    if z == 0.0 {
        return Ok(0.5);
    }
    Ok(-green(kernel, z)?.im)
}

/// Dense `N x N` complex-symmetric coupling matrix with entries
/// `M_ij = G(k0d |x_i - x_j|)` and `M_ii = -i/2`.
pub fn coupling_matrix(lattice: &LatticeSpec, kernel: CouplingKernel) -> Result<Mat<Complex64>> {
    coupling_matrix_capped(lattice, kernel, DEFAULT_MATRIX_CAP)
}

pub fn coupling_matrix_capped(
    lattice: &LatticeSpec,
    kernel: CouplingKernel,
    cap: usize,
) -> Result<Mat<Complex64>> {
    let n = lattice.num_sites();
    if n > cap {
        return Err(Error::SizeCap { dim: n, cap });
    }
    let table = DisplacementTable::new(lattice, kernel)?;
    let l = lattice.size();
    Ok(Mat::from_fn(n, n, |i, j| {
        let dx = (i % l).abs_diff(j % l);
        let dy = (i / l).abs_diff(j / l);
        table.get(dx, dy)
    }))
}

/// `G` tabulated on the non-negative displacement quadrant `0..L x 0..L`.
///
/// Every pair coupling on an `L x L` lattice depends only on `(|dx|, |dy|)`,
/// so this table replaces repeated Bessel evaluations.
#[derive(Debug, Clone)]
pub struct DisplacementTable {
    l: usize,
    values: Vec<Complex64>,
}

impl DisplacementTable {
    pub fn new(lattice: &LatticeSpec, kernel: CouplingKernel) -> Result<Self> {
        let l = lattice.size();
        let k0d = lattice.k0d();
        let mut values = Vec::with_capacity(l * l);
        for dy in 0..l {
            for dx in 0..l {
                values.push(if dx == 0 && dy == 0 {
                    kernel.self_energy()
                } else {
                    green(kernel, k0d * ((dx * dx + dy * dy) as f64).sqrt())?
                });
            }
        }
        Ok(Self { l, values })
    }

    #[inline]
    pub fn get(&self, dx: usize, dy: usize) -> Complex64 {
        self.values[dy * self.l + dx]
    }
}

/// Largest spacing for which the free-space array keeps a subradiant
/// region inside the first zone.
pub const FREE_SPACE_SUBRADIANT_LIMIT: f64 = std::f64::consts::SQRT_2 * PI;
