use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use equipart_core::grid::ZERO_THRESHOLD_C0;
use equipart_core::strip::{DEFAULT_SPACING, DEFAULT_STEP};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Coarsest spacing accepted for grid and strip runs.
pub const MAX_GRID_SPACING: f64 = 1.0 / 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Circle,
    Separable,
    Grid,
    Strip,
    /// Every backend that applies to the domain, with identity checks.
    Verify,
}

impl FromStr for Backend {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "circle" => Ok(Backend::Circle),
            "separable" | "square" => Ok(Backend::Separable),
            "grid" => Ok(Backend::Grid),
            "strip" | "descent" => Ok(Backend::Strip),
            "verify" => Ok(Backend::Verify),
            other => Err(ConfigError(format!("unknown backend `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainConfig {
    Rectangle { width: f64, height: f64 },
    Torus { width: f64, height: f64 },
    Circle { circumference: f64, k: usize },
}

/// Which deformation the strip backend follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionConfig {
    /// The k-th DtN eigenvector (1-based).
    Mode(usize),
    /// Seeded random direction in F.
    Random(u64),
}

impl FromStr for DirectionConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        if let Some(seed) = s.strip_prefix("random") {
            let seed = seed.trim_start_matches(':');
            let seed = if seed.is_empty() { 2024 } else { parse_num(seed)? as u64 };
            return Ok(DirectionConfig::Random(seed));
        }
        let k = parse_num(s)?;
        if k < 1.0 || k.fract() != 0.0 {
            return Err(ConfigError(format!(
                "direction must be a positive integer or `random`, got `{s}`"
            )));
        }
        Ok(DirectionConfig::Mode(k as usize))
    }
}

impl fmt::Display for DirectionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DirectionConfig::Mode(k) => write!(f, "phi{k}"),
            DirectionConfig::Random(seed) => write!(f, "random:{seed}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// `tau = c0 * h` for grid and strip counts.
    pub c0: f64,
    /// Zero threshold for closed-form spectra.
    pub exact_zero: f64,
    /// Criticality tolerance; `None` uses the backend default.
    pub criticality: Option<f64>,
    /// Relative cluster tolerance for closed-form spectra.
    pub cluster: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deformation {
    pub directions: Vec<DirectionConfig>,
    pub t: Vec<f64>,
    pub t0: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub name: String,
    pub backend: Backend,
    pub domain: DomainConfig,
    pub mode: (usize, usize),
    pub h: f64,
    pub thresholds: Thresholds,
    pub deformation: Deformation,
    /// Not part of the hashed configuration.
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn parse_num(s: &str) -> Result<f64, ConfigError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| ConfigError(format!("not a number: `{s}`")))
}

/// Parses `0.01`, `1/120` or `1e-2`.
pub fn parse_spacing(s: &str) -> Result<f64, ConfigError> {
    match s.split_once('/') {
        Some((a, b)) => Ok(parse_num(a)? / parse_num(b)?),
        None => parse_num(s),
    }
}

pub const PRESETS: [&str; 6] = [
    "square-31",
    "square-21",
    "rect-08-31",
    "circle-3",
    "circle-4",
    "hessian-check-31",
];

impl RunConfig {
    pub fn base(backend: Backend) -> Self {
        Self {
            name: "custom".into(),
            backend,
            domain: DomainConfig::Rectangle {
                width: 1.0,
                height: 1.0,
            },
            mode: (3, 1),
            h: 1.0 / 60.0,
            thresholds: Thresholds {
                c0: ZERO_THRESHOLD_C0,
                exact_zero: 1e-9,
                criticality: None,
                cluster: 1e-6,
            },
            deformation: Deformation {
                directions: vec![
                    DirectionConfig::Mode(1),
                    DirectionConfig::Mode(2),
                    DirectionConfig::Mode(3),
                ],
                t: vec![0.0, 0.1],
                t0: DEFAULT_STEP,
                h: DEFAULT_SPACING,
            },
            out: PathBuf::from("out"),
        }
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let mut c = Self::base(Backend::Verify);
        c.name = name.into();
        match name {
            "square-31" => c.h = 1.0 / 120.0,
            "square-21" => {
                c.mode = (2, 1);
                c.h = 1.0 / 120.0;
            }
            "rect-08-31" => {
                c.domain = DomainConfig::Rectangle {
                    width: 1.0,
                    height: 0.8,
                };
                c.h = 1.0 / 120.0;
            }
            "circle-3" | "circle-4" => {
                let k = if name == "circle-3" { 3 } else { 4 };
                c.domain = DomainConfig::Circle {
                    circumference: 2.0 * std::f64::consts::PI,
                    k,
                };
                c.mode = (k, 0);
            }
            "hessian-check-31" => {
                c.backend = Backend::Strip;
                c.deformation.directions = vec![
                    DirectionConfig::Mode(1),
                    DirectionConfig::Mode(3),
                    DirectionConfig::Random(2024),
                ];
                c.deformation.t = vec![0.0, 0.02, 0.1];
            }
            other => {
                return Err(ConfigError(format!(
                    "unknown preset `{other}` (known: {})",
                    PRESETS.join(", ")
                )))
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.thresholds;
        let positive = [
            ("c0", t.c0),
            ("exact zero threshold", t.exact_zero),
            ("cluster tolerance", t.cluster),
            ("t0", self.deformation.t0),
            ("h", self.h),
            ("strip spacing", self.deformation.h),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(ConfigError(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(c) = t.criticality {
            if !(c > 0.0) {
                return Err(ConfigError(format!("criticality tolerance must be positive, got {c}")));
            }
        }
        let grid_like = matches!(self.backend, Backend::Grid | Backend::Verify)
            && !matches!(self.domain, DomainConfig::Circle { .. });
        if grid_like && self.h > MAX_GRID_SPACING * (1.0 + 1e-12) {
            return Err(ConfigError(format!("grid spacing {} is coarser than 1/30", self.h)));
        }
        if matches!(self.backend, Backend::Strip | Backend::Verify)
            && self.deformation.h > MAX_GRID_SPACING * (1.0 + 1e-12)
        {
            return Err(ConfigError(format!(
                "strip spacing {} is coarser than 1/30",
                self.deformation.h
            )));
        }
        match (self.backend, self.domain) {
            (Backend::Circle, DomainConfig::Circle { .. }) | (Backend::Verify, DomainConfig::Circle { .. }) => {}
            (Backend::Circle, _) => return Err(ConfigError("the circle backend needs a circle domain".into())),
            (_, DomainConfig::Circle { .. }) => {
                return Err(ConfigError("circle domains use the circle backend".into()))
            }
            (Backend::Separable | Backend::Strip, DomainConfig::Torus { .. }) => {
                return Err(ConfigError("the torus is only supported by the grid backend".into()))
            }
            _ => {}
        }
        if let DomainConfig::Circle { k, circumference } = self.domain {
            if k < 2 || !(circumference > 0.0) {
                return Err(ConfigError("circle needs k >= 2 and a positive length".into()));
            }
        }
        Ok(())
    }

    /// Canonical JSON of the resolved configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    /// Zero threshold for a discretization with spacing `h`.
    pub fn tau(&self, h: f64) -> f64 {
        self.thresholds.c0 * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacings() {
        assert_eq!(parse_spacing("1/120").unwrap(), 1.0 / 120.0);
        assert_eq!(parse_spacing("0.5").unwrap(), 0.5);
        assert!(parse_spacing("x").is_err());
    }

    #[test]
    fn directions() {
        assert_eq!("2".parse::<DirectionConfig>().unwrap(), DirectionConfig::Mode(2));
        assert_eq!(
            "random:7".parse::<DirectionConfig>().unwrap(),
            DirectionConfig::Random(7)
        );
        assert!("0".parse::<DirectionConfig>().is_err());
    }

    #[test]
    fn presets_validate_and_hash_stably() {
        for p in PRESETS {
            let c = RunConfig::preset(p).unwrap();
            c.validate().unwrap();
            assert_eq!(c.hash(), RunConfig::preset(p).unwrap().hash());
            assert_eq!(c.hash().len(), 64);
        }
        assert_ne!(
            RunConfig::preset("square-31").unwrap().hash(),
            RunConfig::preset("square-21").unwrap().hash()
        );
    }

    #[test]
    fn coarse_grids_are_rejected() {
        let mut c = RunConfig::base(Backend::Grid);
        c.h = 0.1;
        assert!(c.validate().is_err());
        c.h = 1.0 / 30.0;
        assert!(c.validate().is_ok());
        c.thresholds.c0 = 0.0;
        assert!(c.validate().is_err());
    }
}
