//! Bessel functions of integer order 0 and 1 for real arguments.
//!
//! Values come from the rational/asymptotic approximations of the `libm`
//! crate (a port of the musl implementation). The wrappers here only add
//! argument validation; accuracy is checked against an arbitrary-precision
//! series oracle in the test suite.

use crate::error::{Error, Result};

/// First-kind Bessel function `J0(z)` for `z >= 0`.
pub fn bessel_j0(z: f64) -> Result<f64> {
    if z.is_nan() || z < 0.0 {
        return Err(Error::Domain { func: "bessel_j0", arg: z });
    }
    Ok(libm::j0(z))
}

/// Second-kind Bessel function `Y0(z)` for `z > 0`.
pub fn bessel_y0(z: f64) -> Result<f64> {
    if z.is_nan() || z <= 0.0 {
        return Err(Error::Domain { func: "bessel_y0", arg: z });
    }
    Ok(libm::y0(z))
}

/// `J1(z)`; `J0'(z) = -J1(z)`.
pub fn bessel_j1(z: f64) -> Result<f64> {
    if z.is_nan() || z < 0.0 {
        return Err(Error::Domain { func: "bessel_j1", arg: z });
    }
    Ok(libm::j1(z))
}

/// `Y1(z)`; `Y0'(z) = -Y1(z)`.
pub fn bessel_y1(z: f64) -> Result<f64> {
    if z.is_nan() || z <= 0.0 {
        return Err(Error::Domain { func: "bessel_y1", arg: z });
    }
    Ok(libm::y1(z))
}

#[cfg(test)]
mod oracle;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_at_origin() {
        assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_j0(f64::NAN).is_err());
        assert!(bessel_j0(-1.0).is_err());
        assert!(bessel_y0(0.0).is_err());
        assert!(bessel_y0(-2.0).is_err());
        assert!(bessel_y0(f64::NAN).is_err());
    }

    #[test]
    fn y0_diverges_downward() {
        assert!(bessel_y0(1e-4).unwrap() < -5.0);
        assert!(bessel_y0(1e-6).unwrap() < bessel_y0(1e-4).unwrap());
    }

    #[test]
    fn envelope_decay() {
        let mut max = 0f64;
        let mut z = 100.0;
        while z <= 200.0 {
            max = max.max(bessel_j0(z).unwrap().abs());
            z += 0.01;
        }
        assert!(max < 0.09, "max |J0| on [100, 200] = {max}");
    }

    /// `J0 Y0' - J0' Y0 = 2/(pi z)`, relative deviation on a log grid.
    fn wronskian_defect(z: f64) -> f64 {
        let (j0, y0) = (bessel_j0(z).unwrap(), bessel_y0(z).unwrap());
        let (j1, y1) = (bessel_j1(z).unwrap(), bessel_y1(z).unwrap());
        let w = j0 * -y1 + j1 * y0;
        let exact = 2.0 / (std::f64::consts::PI * z);
        (w - exact).abs() / exact
    }

    #[test]
    fn wronskian() {
        let worst = (0..=400).map(|i| wronskian_defect(10f64.powf(-1.0 + 4.0 * i as f64 / 400.0))).fold(0.0, f64::max);
        assert!(worst <= 1e-10, "worst Wronskian defect {worst:.3e}");
    }

    proptest::proptest! {
        #[test]
        fn wronskian_anywhere(z in 0.1f64..1e3) {
            proptest::prop_assert!(wronskian_defect(z) <= 1e-10);
        }
    }
}
