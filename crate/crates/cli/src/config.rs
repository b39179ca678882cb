//! Experiment configuration.
//!
//! The file is TOML: `key = value` lines grouped under `[section]` headers.
//!
//! ```toml
//! [automorphism]
//! a = 2
//! b = 1
//! c = 1
//! d = 1
//! l = 0
//! m = 0
//!
//! [sector]
//! n = 1
//! k = 1
//! theta_truncation = 8
//!
//! [correlation]
//! grid = 256
//! n_max = 12
//!
//! [[pairs]]
//! g = [{ re = 1.0, im = 0.0, m = 0, l = 0 }]
//! h = [{ re = 1.0, im = 0.0, m = 0, l = 0 }]
//!
//! [tolerances]
//! band_tol = [1e-3, 1e-2, 5e-2]
//!
//! [norms]
//! base_points = 8
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Every section except `[automorphism]` and `[[pairs]]` is optional.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nilres_core::norms::NormsConfig;
use nilres_core::sector::DEFAULT_N_MAX;
use nilres_core::{PartialHypAuto, SectorFunction, ThetaTerm, Tolerances};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomorphismSpec {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
    #[serde(default)]
    pub l: i64,
    #[serde(default)]
    pub m: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SectorSpec {
    pub n: i64,
    pub k: u32,
    pub theta_truncation: u32,
}

impl Default for SectorSpec {
    fn default() -> Self {
        Self {
            n: 1,
            k: 1,
            theta_truncation: DEFAULT_N_MAX,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationSpec {
    pub grid: usize,
    pub n_max: u32,
}

impl Default for CorrelationSpec {
    fn default() -> Self {
        Self { grid: 256, n_max: 12 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(default = "one")]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    #[serde(default)]
    pub m: i64,
    #[serde(default)]
    pub l: i64,
}

fn one() -> f64 {
    1.0
}

impl TermSpec {
    pub fn term(&self) -> ThetaTerm {
        ThetaTerm::new(Complex64::new(self.re, self.im), self.m, self.l)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub g: Vec<TermSpec>,
    pub h: Vec<TermSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub automorphism: AutomorphismSpec,
    #[serde(default)]
    pub sector: SectorSpec,
    #[serde(default)]
    pub correlation: CorrelationSpec,
    pub pairs: Vec<PairSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub norms: NormsConfig,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("invalid configuration")?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    /// The golden system `(2, 1, 1, 1, 0, 0)`, `K = N = 1`, with the
    /// ground-state atom paired with itself.
    pub fn golden() -> Self {
        let atom = TermSpec { re: 1.0, im: 0.0, m: 0, l: 0 };
        Self {
            automorphism: AutomorphismSpec { a: 2, b: 1, c: 1, d: 1, l: 0, m: 0 },
            sector: SectorSpec::default(),
            correlation: CorrelationSpec::default(),
            pairs: vec![PairSpec { g: vec![atom], h: vec![atom] }],
            tolerances: Tolerances::default(),
            norms: NormsConfig::default(),
            output: OutputSpec::default(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("serializable")
    }

    /// Builds the automorphism; determinant and hyperbolicity errors surface
    /// here, before any computation.
    pub fn automorphism(&self) -> Result<PartialHypAuto> {
        let a = &self.automorphism;
        Ok(PartialHypAuto::build(a.a, a.b, a.c, a.d, a.l, a.m, self.sector.k)?)
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self) -> Result<PartialHypAuto> {
        let auto = self.automorphism()?;
        let grid = self.correlation.grid;
        if grid < 64 || !grid.is_power_of_two() {
            bail!("grid must be a power of two >= 64, got {grid}");
        }
        if grid > nilres_core::transfer::MAX_GRID {
            bail!("grid {grid} exceeds the maximum {}", nilres_core::transfer::MAX_GRID);
        }
        if self.pairs.is_empty() {
            bail!("at least one [[pairs]] entry is required");
        }
        for (i, p) in self.pairs.iter().enumerate() {
            if p.g.is_empty() || p.h.is_empty() {
                bail!("pair {i}: g and h need at least one term");
            }
        }
        self.norms.validate()?;
        for p in &self.pairs {
            self.observables(p)?;
        }
        Ok(auto)
    }

    pub fn observables(&self, pair: &PairSpec) -> Result<(SectorFunction, SectorFunction)> {
        let s = &self.sector;
        let build = |terms: &[TermSpec]| {
            SectorFunction::new(s.n, s.k, terms.iter().map(TermSpec::term).collect(), s.theta_truncation)
        };
        Ok((build(&pair.g)?, build(&pair.h)?))
    }
}
