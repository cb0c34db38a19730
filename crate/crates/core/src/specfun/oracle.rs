//! Fixed-point power-series evaluation of J0, J1, Y0, Y1 with exact
//! big-integer arithmetic, checked against the library implementation.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use super::{bessel_j0, bessel_j1, bessel_y0, bessel_y1};

const GUARD_BITS: u64 = 192;
const EULER_GAMMA: &str = "0.5772156649015328606065120900824024310421593359399235988057672348848677267776646709369470632917467495";

/// A fixed-point number `value / 2^bits`.
#[derive(Clone)]
struct Fixed {
    value: BigInt,
    bits: u64,
}

impl Fixed {
    fn one(bits: u64) -> Self {
        Self { value: BigInt::one() << bits, bits }
    }

    fn to_f64(&self) -> f64 {
        // keep 64 significant bits before converting
        let excess = self.value.bits().saturating_sub(64);
        let shift = excess.min(self.bits);
        let head = (&self.value >> shift).to_f64().unwrap();
        head * 2f64.powi(shift as i32 - self.bits as i32)
    }

    fn mul(&self, other: &Fixed) -> Fixed {
        assert_eq!(self.bits, other.bits);
        Fixed { value: (&self.value * &other.value) >> self.bits, bits: self.bits }
    }

    fn add(&self, other: &Fixed) -> Fixed {
        Fixed { value: &self.value + &other.value, bits: self.bits }
    }

    fn sub(&self, other: &Fixed) -> Fixed {
        Fixed { value: &self.value - &other.value, bits: self.bits }
    }

    fn div_int(&self, d: u64) -> Fixed {
        Fixed { value: &self.value / BigInt::from(d), bits: self.bits }
    }

    fn from_decimal(text: &str, bits: u64) -> Fixed {
        let (int, frac) = text.split_once('.').unwrap();
        let digits: BigInt = format!("{int}{frac}").parse().unwrap();
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        Fixed { value: (digits << bits) / scale, bits }
    }
}

/// Exact dyadic decomposition `z = mantissa * 2^exponent`.
fn dyadic(z: f64) -> (BigInt, i64) {
    assert!(z > 0.0 && z.is_finite());
    let bits = z.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (m, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    (BigInt::from(m), e)
}

/// `z^2 / 4` applied to a fixed-point value.
fn times_quarter_z2(x: &BigInt, m2: &BigInt, e: i64) -> BigInt {
    let shift = 2 * e - 2;
    let y = x * m2;
    if shift >= 0 { y << shift as u64 } else { y >> (-shift) as u64 }
}

/// `z / 2` as a fixed-point number.
fn half_z(m: &BigInt, e: i64, bits: u64) -> Fixed {
    let shift = e - 1 + bits as i64;
    let value = if shift >= 0 { m << shift as u64 } else { m >> (-shift) as u64 };
    Fixed { value, bits }
}

/// Working precision: enough to absorb the cancellation between the peak
/// series term (about e^z) and the O(1) result.
fn working_bits(z: f64) -> u64 {
    (z * std::f64::consts::LOG2_E).ceil() as u64 + GUARD_BITS
}

fn atanh_inv(n: u64, bits: u64) -> Fixed {
    // atanh(1/n) = sum 1/((2k+1) n^(2k+1))
    let n2 = n * n;
    let mut power = Fixed::one(bits).div_int(n);
    let mut sum = power.clone();
    let mut k = 1u64;
    loop {
        power = power.div_int(n2);
        if power.value.is_zero() {
            return sum;
        }
        sum = sum.add(&power.div_int(2 * k + 1));
        k += 1;
    }
}

fn atanh_fixed(u: &Fixed) -> Fixed {
    let u2 = u.mul(u);
    let mut power = u.clone();
    let mut sum = u.clone();
    let mut k = 1u64;
    loop {
        power = power.mul(&u2);
        let term = power.div_int(2 * k + 1);
        if term.value.is_zero() {
            return sum;
        }
        sum = sum.add(&term);
        k += 1;
    }
}

fn pi_fixed(bits: u64) -> Fixed {
    // Machin: pi = 16 atan(1/5) - 4 atan(1/239)
    fn atan_inv(n: u64, bits: u64) -> Fixed {
        let n2 = n * n;
        let mut power = Fixed::one(bits).div_int(n);
        let mut sum = power.clone();
        let mut k = 1u64;
        loop {
            power = power.div_int(n2);
            if power.value.is_zero() {
                return sum;
            }
            let term = power.div_int(2 * k + 1);
            sum = if k % 2 == 1 { sum.sub(&term) } else { sum.add(&term) };
            k += 1;
        }
    }
    let a = atan_inv(5, bits);
    let b = atan_inv(239, bits);
    Fixed { value: a.value * 16 - b.value * 4, bits }
}

/// ln(z/2) by binary range reduction and the atanh series.
fn ln_half_z(z: f64, bits: u64) -> Fixed {
    let (m, e) = dyadic(z);
    // z/2 = m * 2^(e-1) = y * 2^p with y in [1, 2)
    let p = m.bits() as i64 - 1 + e - 1;
    let y_num = m.clone();
    let y_den = BigInt::one() << (m.bits() - 1);
    // u = (y - 1)/(y + 1)
    let u = Fixed { value: ((&y_num - &y_den) << bits) / (&y_num + &y_den), bits };
    let ln_y = atanh_fixed(&u);
    let ln2 = atanh_inv(3, bits);
    let ln_y2 = Fixed { value: ln_y.value * 2, bits };
    let ln2x2 = Fixed { value: ln2.value * 2, bits };
    Fixed { value: ln_y2.value + ln2x2.value * BigInt::from(p), bits }
}

struct Series {
    j0: f64,
    j1: f64,
    y0: f64,
    y1: f64,
}

fn series(z: f64) -> Series {
    let bits = working_bits(z);
    let (m, e) = dyadic(z);
    let m2 = &m * &m;
    let one = Fixed::one(bits);

    // J0 terms t_k = (-1)^k (z^2/4)^k / (k!)^2, H_k harmonic numbers
    let mut t = one.value.clone();
    let mut j0 = t.clone();
    let mut harmonic = BigInt::zero();
    let mut s0 = BigInt::zero();
    // J1 terms u_k = (-1)^k (z/2)^(2k+1) / (k!(k+1)!)
    let mut u = half_z(&m, e, bits).value;
    let mut j1 = u.clone();
    // k = 0 weight H_0 + H_1 = 1
    let mut s1 = u.clone();
    let mut k = 1u64;
    loop {
        t = -times_quarter_z2(&t, &m2, e) / BigInt::from(k * k);
        u = -times_quarter_z2(&u, &m2, e) / BigInt::from(k * (k + 1));
        harmonic += &one.value / BigInt::from(k);
        let h_next = &harmonic + &one.value / BigInt::from(k + 1);
        j0 += &t;
        j1 += &u;
        s0 -= (&t * &harmonic) >> bits;
        s1 += (&u * (&harmonic + &h_next)) >> bits;
        if t.is_zero() && u.is_zero() {
            break;
        }
        k += 1;
    }

    let gamma = Fixed::from_decimal(EULER_GAMMA, bits);
    let pi = pi_fixed(bits);
    let ln = ln_half_z(z, bits);
    let j0f = Fixed { value: j0, bits };
    let j1f = Fixed { value: j1, bits };
    let two_over_pi = Fixed { value: (one.value.clone() << (bits + 1)) / &pi.value, bits };

    // Y0 = (2/pi)(ln(z/2) + gamma) J0 + (2/pi) sum (-1)^(k+1) H_k t_k
    let y0 = two_over_pi.mul(&ln.add(&gamma).mul(&j0f).add(&Fixed { value: s0, bits }));

    // Y1 = (2/pi) J1 ln(z/2) - 2/(pi z) - (1/pi) sum (-1)^k (H_k + H_(k+1) - 2 gamma) u_k
    let inv_pi = Fixed { value: (one.value.clone() << bits) / &pi.value, bits };
    let two_gamma_j1 = Fixed { value: gamma.mul(&j1f).value * 2, bits };
    let corr = Fixed { value: s1, bits }.sub(&two_gamma_j1);
    // 2/(pi z) = (1/pi) / (z/2)
    let inv_z_term = Fixed { value: (&inv_pi.value << bits) / &half_z(&m, e, bits).value, bits };
    let y1 = two_over_pi.mul(&j1f.mul(&ln)).sub(&inv_z_term).sub(&inv_pi.mul(&corr));
    Series { j0: j0f.to_f64(), j1: j1f.to_f64(), y0: y0.to_f64(), y1: y1.to_f64() }
}

fn envelope(z: f64) -> f64 {
    (2.0 / (std::f64::consts::PI * z)).sqrt()
}

fn assert_close(name: &str, z: f64, got: f64, want: f64, scale: f64) {
    let err = (got - want).abs();
    assert!(err <= 1e-12 * scale, "{name}({z}) = {got:.17e}, oracle {want:.17e}, error {err:.3e}, allowed {:.3e}", 1e-12 * scale);
}

fn grid() -> Vec<f64> {
    let mut zs: Vec<f64> = (0..=50).map(|i| 10f64.powf(-6.0 + 10.0 * i as f64 / 50.0)).collect();
    zs.extend([0.5, 1.0, 2.0, 2.404825557695773, 3.8317, 5.0, 10.0, 31.4159, 99.9, 1234.5]);
    zs
}

#[test]
fn series_reproduces_reference_values() {
    let s = series(1.0);
    assert!((s.j0 - 0.7651976865579666).abs() < 1e-15);
    assert!((s.y0 - 0.08825696421567696).abs() < 1e-15);
    assert!((series(10.0).y0 - 0.05567116728359939).abs() < 1e-15);
}

#[test]
fn first_kind_matches_series() {
    for z in grid() {
        let s = series(z);
        let scale = |f: f64| f.abs().max(envelope(z).min(1.0));
        assert_close("j0", z, bessel_j0(z).unwrap(), s.j0, scale(s.j0));
        assert_close("j1", z, bessel_j1(z).unwrap(), s.j1, scale(s.j1));
    }
}

#[test]
fn second_kind_matches_series() {
    for z in grid() {
        let s = series(z);
        let scale = |f: f64| f.abs().max(envelope(z).min(1.0));
        assert_close("y0", z, bessel_y0(z).unwrap(), s.y0, scale(s.y0));
        assert_close("y1", z, bessel_y1(z).unwrap(), s.y1, scale(s.y1));
    }
}

#[test]
fn first_zero_of_j0() {
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if series(mid).j0 > 0.0 { lo = mid } else { hi = mid }
    }
    assert!((lo - 2.404825557695773).abs() < 1e-14);
    assert!(bessel_j0(lo).unwrap().abs() < 1e-12);
}
