//! TOML run configuration.
//!
//! ```toml
//! beta = 1.0
//! theta_list = [1.0, 1.618033988749895]
//! max_iter = 500
//! res_tol = 1e-8          # optional
//! out_dir = "out"
//! seed = 7
//!
//! [problem]
//! kind = "random_quadratic"
//! n_s = 40
//! n_y = 40
//! n_x = 30
//! cond = 100.0
//! seed = 1
//!
//! [variant]
//! kind = "linearized"
//! tau = 5.0               # optional, defaults to 1.5 β‖D‖²
//! ```

use std::path::{Path, PathBuf};

use hpe_admm::generators::{ProblemKind, Variant};
use hpe_admm::padmm::{golden_ratio, THETA_SLACK};
use serde::Deserialize;

use crate::error::{io_err, HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    RandomQuadratic { n_s: usize, n_y: usize, n_x: usize, cond: f64, seed: u64 },
    Lasso { m: usize, n: usize, mu: f64, seed: u64 },
    ScalarToy,
}

impl ProblemConfig {
    pub fn kind(&self) -> ProblemKind {
        match *self {
            ProblemConfig::RandomQuadratic { n_s, n_y, n_x, cond, seed } => ProblemKind::RandomQuadratic { n_s, n_y, n_x, cond, seed },
            ProblemConfig::Lasso { m, n, mu, seed } => ProblemKind::Lasso { m, n, mu, seed },
            ProblemConfig::ScalarToy => ProblemKind::ScalarToy,
        }
    }

    /// Named defaults used by `sweep`.
    pub fn named(name: &str, seed: u64) -> Result<Self> {
        match name {
            "random_quadratic" => Ok(ProblemConfig::RandomQuadratic {
                n_s: 40,
                n_y: 40,
                n_x: 30,
                cond: 100.0,
                seed,
            }),
            "lasso" => Ok(ProblemConfig::Lasso {
                m: 20,
                n: 50,
                mu: 0.1,
                seed,
            }),
            "scalar_toy" => Ok(ProblemConfig::ScalarToy),
            other => Err(HarnessError::Config(format!(
                "unknown problem '{other}' (expected random_quadratic, lasso or scalar_toy)"
            ))),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        match *self {
            ProblemConfig::RandomQuadratic { n_s, n_y, n_x, cond, .. } => {
                if n_s == 0 || n_y == 0 || n_x == 0 {
                    return bad("random_quadratic dimensions must be at least 1");
                }
                if n_x > n_s + n_y {
                    return bad("random_quadratic needs n_x <= n_s + n_y for a full-row-rank [C D]");
                }
                if !(cond >= 1.0) || !cond.is_finite() {
                    return bad("cond must be finite and at least 1");
                }
            }
            ProblemConfig::Lasso { m, n, mu, .. } => {
                if m == 0 || n == 0 {
                    return bad("lasso dimensions must be at least 1");
                }
                if !(mu >= 0.0) || !mu.is_finite() {
                    return bad("mu must be finite and nonnegative");
                }
            }
            ProblemConfig::ScalarToy => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VariantConfig {
    Standard,
    Proximal {
        #[serde(default = "one")]
        h_scale: f64,
        #[serde(default = "one")]
        g_scale: f64,
    },
    Linearized {
        #[serde(default)]
        tau: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl VariantConfig {
    pub fn variant(&self) -> Variant {
        match *self {
            VariantConfig::Standard => Variant::Standard,
            VariantConfig::Proximal { h_scale, g_scale } => Variant::Proximal { h_scale, g_scale },
            VariantConfig::Linearized { tau } => Variant::Linearized { tau },
        }
    }

    pub fn named(name: &str) -> Result<Self> {
        match name {
            "standard" => Ok(VariantConfig::Standard),
            "proximal" => Ok(VariantConfig::Proximal {
                h_scale: 1.0,
                g_scale: 1.0,
            }),
            "linearized" => Ok(VariantConfig::Linearized { tau: None }),
            other => Err(HarnessError::Config(format!(
                "unknown variant '{other}' (expected standard, proximal or linearized)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub beta: f64,
    pub theta_list: Vec<f64>,
    pub variant: VariantConfig,
    pub max_iter: usize,
    #[serde(default)]
    pub res_tol: Option<f64>,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let config = Self::from_toml(&text).map_err(|source| HarnessError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Range and shape checks that need no numerics. The linearized
    /// `τ ≥ β‖D‖²` condition is checked once the problem is built.
    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(HarnessError::Config(format!("beta must be positive and finite, got {}", self.beta)));
        }
        if self.theta_list.is_empty() {
            return Err(HarnessError::Config("theta_list is empty".into()));
        }
        let phi = golden_ratio::<f64>();
        for &t in &self.theta_list {
            if !(t > 0.0) || t > phi + THETA_SLACK {
                return Err(HarnessError::Config(format!("theta {t} is outside (0, (1+sqrt 5)/2]")));
            }
        }
        for (i, a) in self.theta_list.iter().enumerate() {
            if self.theta_list[..i].contains(a) {
                return Err(HarnessError::Config(format!("theta {a} is listed twice")));
            }
        }
        if self.max_iter == 0 {
            return Err(HarnessError::Config("max_iter must be at least 1".into()));
        }
        if let Some(t) = self.res_tol {
            if !(t > 0.0) || !t.is_finite() {
                return Err(HarnessError::Config(format!("res_tol must be positive and finite, got {t}")));
            }
        }
        match self.variant {
            VariantConfig::Proximal { h_scale, g_scale } if !(h_scale >= 0.0 && g_scale >= 0.0 && h_scale.is_finite() && g_scale.is_finite()) => {
                Err(HarnessError::Config("proximal scales must be finite and nonnegative".into()))
            }
            VariantConfig::Linearized { tau: Some(t) } if !(t > 0.0) || !t.is_finite() => {
                Err(HarnessError::Config(format!("tau must be positive and finite, got {t}")))
            }
            _ => Ok(()),
        }
    }
}
