//! Run configuration: a flat JSON object with snake_case keys.
//!
//! Angle-like values (`k0d`, scan bounds) are either plain numbers in
//! radians or strings with a `pi` suffix, e.g. `"0.52pi"`. The original
//! form is kept so a config round-trips unchanged.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kernels::CouplingKernel;
use crate::lattice::{LatticeSpec, Momentum2};
use crate::singleexc::SymmetryPoint;

/// A dimensionless angle, written either as radians or as a multiple of pi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Radians(f64),
    PiMultiple(f64),
}

impl Angle {
    pub fn pi(x: f64) -> Self {
        Angle::PiMultiple(x)
    }

    pub fn value(&self) -> f64 {
        match *self {
            Angle::Radians(r) => r,
            Angle::PiMultiple(x) => x * PI,
        }
    }
}

impl FromStr for Angle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("cannot parse angle {s:?}; expected a number or Xpi"));
        match s.strip_suffix("pi") {
            Some("") => Ok(Angle::PiMultiple(1.0)),
            Some("-") => Ok(Angle::PiMultiple(-1.0)),
            Some(x) => x.trim().parse::<f64>().ok().filter(|v| v.is_finite()).map(Angle::PiMultiple).ok_or_else(bad),
            None => s.parse::<f64>().ok().filter(|v| v.is_finite()).map(Angle::Radians).ok_or_else(bad),
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Angle::Radians(r) => write!(f, "{r}"),
            Angle::PiMultiple(x) => write!(f, "{x}pi"),
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Angle::Radians(r) => s.serialize_f64(r),
            Angle::PiMultiple(_) => s.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(r) => Ok(Angle::Radians(r)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// A center-of-mass momentum: a named symmetry point or `kx,ky`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentumSpec {
    Point(SymmetryPoint),
    Explicit(Angle, Angle),
}

impl MomentumSpec {
    pub fn momentum(&self) -> Momentum2 {
        match *self {
            MomentumSpec::Point(p) => p.momentum(),
            MomentumSpec::Explicit(x, y) => Momentum2::new(x.value(), y.value()),
        }
    }

    /// The symmetry point this names, if any.
    pub fn point(&self) -> Option<SymmetryPoint> {
        match *self {
            MomentumSpec::Point(p) => Some(p),
            MomentumSpec::Explicit(..) => None,
        }
    }

    pub fn require_point(&self) -> Result<SymmetryPoint> {
        self.point().ok_or_else(|| Error::Config(format!("momentum {self} must be gamma, x or m")))
    }
}

impl FromStr for MomentumSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gamma" | "g" => Ok(MomentumSpec::Point(SymmetryPoint::Gamma)),
            "x" => Ok(MomentumSpec::Point(SymmetryPoint::X)),
            "m" => Ok(MomentumSpec::Point(SymmetryPoint::M)),
            other => {
                let (a, b) = other
                    .split_once(',')
                    .ok_or_else(|| Error::Config(format!("cannot parse momentum {s:?}; expected gamma, x, m or kx,ky")))?;
                Ok(MomentumSpec::Explicit(a.parse()?, b.parse()?))
            }
        }
    }
}

impl fmt::Display for MomentumSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MomentumSpec::Point(p) => f.write_str(p.name()),
            MomentumSpec::Explicit(x, y) => write!(f, "{x},{y}"),
        }
    }
}

impl Serialize for MomentumSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for MomentumSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Every parameter any subcommand reads. Missing keys take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub l: usize,
    pub k0d: Angle,
    pub kernel: CouplingKernel,
    pub grid_n: usize,
    pub l_sum: usize,
    pub l_r: usize,
    pub sizes: Vec<usize>,
    pub k0d_min: Angle,
    pub k0d_max: Angle,
    pub steps: usize,
    pub momentum: MomentumSpec,
    pub points_per_segment: usize,
    pub t_max: f64,
    pub samples: usize,
    pub ell: usize,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            l: 10,
            k0d: Angle::pi(0.5),
            kernel: CouplingKernel::Waveguide2D,
            grid_n: 301,
            l_sum: 300,
            l_r: 40,
            sizes: vec![4, 6, 8, 10],
            k0d_min: Angle::pi(0.3),
            k0d_max: Angle::pi(1.1),
            steps: 41,
            momentum: MomentumSpec::Point(SymmetryPoint::M),
            points_per_segment: 50,
            t_max: 300.0,
            samples: 301,
            ell: 1,
            output: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Pretty JSON with keys in sorted order.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config is always serializable");
        serde_json::to_string_pretty(&value).expect("json value is always serializable")
    }

    pub fn lattice(&self) -> Result<LatticeSpec> {
        LatticeSpec::new(self.l, self.k0d.value())
    }

    /// Evenly spaced spacings from `k0d_min` to `k0d_max` inclusive.
    pub fn k0d_list(&self) -> Vec<f64> {
        linspace(self.k0d_min.value(), self.k0d_max.value(), self.steps)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.l < 2 {
            return fail(format!("l = {} must be >= 2", self.l));
        }
        if !(self.k0d.value() > 0.0) {
            return fail(format!("k0d = {} must be positive", self.k0d));
        }
        if self.steps == 0 {
            return fail("steps must be >= 1".into());
        }
        if self.k0d_max.value() < self.k0d_min.value() {
            return fail(format!("k0d_max = {} is below k0d_min = {}", self.k0d_max, self.k0d_min));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return fail(format!("t_max = {} must be finite and >= 0", self.t_max));
        }
        self.momentum.momentum().check_bz()?;
        if self.samples < 2 {
            return fail("samples must be >= 2".into());
        }
        Ok(())
    }
}

/// `n` evenly spaced values from `lo` to `hi`; a single value is `lo`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
