//! Declarative experiment configuration (TOML).
//!
//! One file describes the chain and every command's parameters; a run is
//! fully determined by `(config, seed, build)`. Unknown keys are rejected
//! so typos fail loudly. Potentials are declared by basis coefficients:
//!
//! ```toml
//! [chain]
//! kind = "rotator"
//! n = 2
//!
//! [[chain.interaction]]
//! kind = "trigpoly"
//! c0 = 2.0
//! cos = [1.0]
//! ```
//!
//! A single `[[chain.interaction]]` (or `[[chain.pinning]]`) block is
//! broadcast along the chain.

use serde::{Deserialize, Serialize};

use crate::chain::{ChainKind, ChainSpec};
use crate::potentials::{Domain, Potential};
use crate::rotor_lyapunov::CalibConfig;
use crate::sim::decay::{DecayConfig, Family};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config field error: {0}")]
    Field(String),
    #[error("chain build error: {0}")]
    Chain(#[from] crate::chain::ChainError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialBlock {
    pub kind: String,
    #[serde(default)]
    pub c0: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
    /// Full coefficient list `coeffs[d] x^d` for polynomial/mixed kinds.
    #[serde(default)]
    pub coeffs: Vec<f64>,
    #[serde(default)]
    pub shift: f64,
}

impl PotentialBlock {
    pub fn build(&self, domain: Domain) -> Result<Potential, ConfigError> {
        let pot = match self.kind.as_str() {
            "trigpoly" => {
                if domain == Domain::Line {
                    // trig-only potentials are allowed on the line too
                    // (they just cannot certify convexity at infinity).
                    let mut p = Potential::trig(self.c0, self.cos.clone(), self.sin.clone());
                    p.domain = Domain::Line;
                    p
                } else {
                    Potential::trig(self.c0, self.cos.clone(), self.sin.clone())
                }
            }
            "polynomial" => {
                if domain == Domain::Torus {
                    return Err(ConfigError::Field(
                        "polynomial potentials are not periodic; rotator interactions need trigpoly".into(),
                    ));
                }
                Potential::polynomial(&self.coeffs)
            }
            "mixed" => {
                if domain == Domain::Torus {
                    return Err(ConfigError::Field(
                        "mixed potentials are not periodic; rotator interactions need trigpoly".into(),
                    ));
                }
                Potential::mixed(&self.coeffs, self.cos.clone(), self.sin.clone())
            }
            "tabulated" => {
                return Err(ConfigError::Field(
                    "tabulated potentials are rejected: closed-form bases only".into(),
                ))
            }
            other => {
                return Err(ConfigError::Field(format!(
                    "unknown potential kind '{other}' (trigpoly | polynomial | mixed)"
                )))
            }
        };
        Ok(pot.with_shift(self.shift))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainBlock {
    pub kind: String,
    pub n: usize,
    pub interaction: Vec<PotentialBlock>,
    #[serde(default)]
    pub pinning: Vec<PotentialBlock>,
    #[serde(default)]
    pub damping: Vec<bool>,
    #[serde(default)]
    pub temperatures: Vec<f64>,
}

fn broadcast<T: Clone>(v: &[T], want: usize, what: &str) -> Result<Vec<T>, ConfigError> {
    match v.len() {
        1 => Ok(vec![v[0].clone(); want]),
        l if l == want => Ok(v.to_vec()),
        l => Err(ConfigError::Field(format!(
            "{what}: expected 1 or {want} blocks, got {l}"
        ))),
    }
}

impl ChainBlock {
    pub fn build(&self) -> Result<ChainSpec, ConfigError> {
        let kind = match self.kind.as_str() {
            "rotator" => ChainKind::Rotator,
            "oscillator" => ChainKind::Oscillator,
            other => {
                return Err(ConfigError::Field(format!(
                    "unknown chain kind '{other}' (rotator | oscillator)"
                )))
            }
        };
        let n = self.n;
        if n < 2 {
            return Err(ConfigError::Field("chain.n must be >= 2".into()));
        }
        let domain = match kind {
            ChainKind::Rotator => Domain::Torus,
            ChainKind::Oscillator => Domain::Line,
        };
        let interaction = broadcast(&self.interaction, n - 1, "chain.interaction")?
            .iter()
            .map(|b| b.build(domain))
            .collect::<Result<Vec<_>, _>>()?;
        let mut spec = match kind {
            ChainKind::Rotator => {
                if !self.pinning.is_empty() {
                    return Err(ConfigError::Field(
                        "rotator chains take no pinning potentials".into(),
                    ));
                }
                ChainSpec::rotator(n, interaction)?
            }
            ChainKind::Oscillator => {
                let pinning = broadcast(&self.pinning, n, "chain.pinning")?
                    .iter()
                    .map(|b| b.build(Domain::Line))
                    .collect::<Result<Vec<_>, _>>()?;
                ChainSpec::oscillator(n, interaction, pinning)?
            }
        };
        if !self.damping.is_empty() {
            spec = spec.with_damping(broadcast(&self.damping, n, "chain.damping")?)?;
        }
        if !self.temperatures.is_empty() {
            spec = spec.with_temperatures(broadcast(&self.temperatures, n, "chain.temperatures")?)?;
        }
        Ok(spec)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunBlock {
    pub seed: u64,
    pub out_dir: String,
    pub threads: usize,
    pub wall_clock_minutes: f64,
}

impl Default for RunBlock {
    fn default() -> Self {
        RunBlock {
            seed: 0,
            out_dir: "out".into(),
            threads: 0,
            wall_clock_minutes: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateBlock {
    pub grid_points: usize,
    pub floor: f64,
    pub refine_rounds: usize,
}

impl Default for ValidateBlock {
    fn default() -> Self {
        ValidateBlock {
            grid_points: 4096,
            floor: 1e-8,
            refine_rounds: 3,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateBlock {
    pub seed_coeff: f64,
    pub kappa: f64,
    pub growth: f64,
    pub samples_per_decade: usize,
    pub h_lo: f64,
    pub h_hi: f64,
    pub max_rounds: usize,
    pub fixed_a: Vec<f64>,
}

impl Default for CalibrateBlock {
    fn default() -> Self {
        let c = CalibConfig::default();
        CalibrateBlock {
            seed_coeff: c.seed_coeff,
            kappa: c.kappa,
            growth: c.growth,
            samples_per_decade: c.samples_per_decade,
            h_lo: c.h_lo,
            h_hi: c.h_hi,
            max_rounds: c.max_rounds,
            fixed_a: Vec::new(),
        }
    }
}

impl CalibrateBlock {
    pub fn to_config(&self) -> CalibConfig {
        CalibConfig {
            seed_coeff: self.seed_coeff,
            kappa: self.kappa,
            growth: self.growth,
            samples_per_decade: self.samples_per_decade,
            h_lo: self.h_lo,
            h_hi: self.h_hi,
            max_rounds: self.max_rounds,
            fixed_a: if self.fixed_a.is_empty() {
                None
            } else {
                Some(self.fixed_a.clone())
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatrosovBlock {
    /// 0 = derive from the chain classification.
    pub r: usize,
    /// NaN = derive from the chain classification.
    pub q: f64,
    pub eps: f64,
    pub w_max: f64,
    pub levels_per_decade: usize,
    pub budget_per_level: usize,
    pub certify_budget: usize,
    /// Negative-control corruption factor for `matrosov-certify`
    /// (0 = certify the stored tables as-is).
    pub corrupt_phi: f64,
    /// Table directory (relative to out_dir) used by build and certify.
    pub tables_dir: String,
}

impl Default for MatrosovBlock {
    fn default() -> Self {
        MatrosovBlock {
            r: 0,
            q: f64::NAN,
            eps: 1.0,
            w_max: 1e3,
            levels_per_decade: 64,
            budget_per_level: 256,
            certify_budget: 10_000,
            corrupt_phi: 0.0,
            tables_dir: "matrosov".into(),
        }
    }
}

impl MatrosovBlock {
    pub fn to_config(&self) -> crate::matrosov::MatrosovConfig {
        crate::matrosov::MatrosovConfig {
            r: (self.r > 0).then_some(self.r),
            q_threshold: self.q.is_finite().then_some(self.q),
            eps: self.eps,
            w_max: self.w_max,
            levels_per_decade: self.levels_per_decade,
            budget_per_level: self.budget_per_level,
            ..crate::matrosov::MatrosovConfig::default()
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriaBlock {
    pub starts: usize,
    /// When nonzero, run the N=2 brute-force grid cross-check at this
    /// resolution.
    pub brute_grid: usize,
}

impl Default for EquilibriaBlock {
    fn default() -> Self {
        EquilibriaBlock {
            starts: 64,
            brute_grid: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrderStatsBlock {
    pub budget: usize,
    /// 0 = classification threshold + 2.
    pub kmax: usize,
    pub zero_tol: f64,
    pub perturbations: Vec<f64>,
    pub amplitude: f64,
}

impl Default for OrderStatsBlock {
    fn default() -> Self {
        let c = crate::oscillators::OrderStatsConfig::default();
        OrderStatsBlock {
            budget: c.budget,
            kmax: 0,
            zero_tol: c.zero_tol,
            perturbations: c.perturbations,
            amplitude: c.amplitude,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateBlock {
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    pub samples: usize,
    /// Initial energy (rotators: sampled in the given layout).
    pub initial_h: f64,
    /// "sphere" | "split" | "last"
    pub layout: String,
    /// Explicit initial state override.
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Compute the W column (runs a calibration first).
    pub with_w: bool,
}

impl Default for SimulateBlock {
    fn default() -> Self {
        SimulateBlock {
            t_end: 50.0,
            rtol: 1e-10,
            atol: 1e-12,
            samples: 256,
            initial_h: 100.0,
            layout: "split".into(),
            p: Vec::new(),
            q: Vec::new(),
            with_w: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SdeBlock {
    pub t_end: f64,
    pub dt: f64,
    pub ensemble: usize,
    pub samples: usize,
    pub initial_h: f64,
    pub layout: String,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl Default for SdeBlock {
    fn default() -> Self {
        SdeBlock {
            t_end: 10.0,
            dt: 1e-3,
            ensemble: 4,
            samples: 128,
            initial_h: 100.0,
            layout: "split".into(),
            p: Vec::new(),
            q: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayBlock {
    pub h0_list: Vec<f64>,
    pub epsilon: f64,
    pub ensemble: usize,
    pub families: Vec<String>,
    pub t_factor: f64,
    pub rtol: f64,
    pub atol: f64,
    pub samples_per_trajectory: usize,
}

impl Default for DecayBlock {
    fn default() -> Self {
        let c = DecayConfig::default();
        DecayBlock {
            h0_list: c.h0_list,
            epsilon: c.epsilon,
            ensemble: c.ensemble,
            families: vec!["fast_rotor".into(), "spread".into()],
            t_factor: c.t_factor,
            rtol: c.rtol,
            atol: c.atol,
            samples_per_trajectory: c.samples_per_trajectory,
        }
    }
}

impl DecayBlock {
    pub fn to_config(&self, wall_clock_minutes: f64) -> Result<DecayConfig, ConfigError> {
        let families = self
            .families
            .iter()
            .map(|f| match f.as_str() {
                "fast_rotor" => Ok(Family::FastRotor),
                "spread" => Ok(Family::Spread),
                other => Err(ConfigError::Field(format!(
                    "unknown decay family '{other}' (fast_rotor | spread)"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DecayConfig {
            h0_list: self.h0_list.clone(),
            epsilon: self.epsilon,
            ensemble: self.ensemble,
            families,
            t_factor: self.t_factor,
            rtol: self.rtol,
            atol: self.atol,
            samples_per_trajectory: self.samples_per_trajectory,
            wall_clock_minutes: (wall_clock_minutes > 0.0).then_some(wall_clock_minutes),
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorBlock {
    /// Subset of "p1_squared" | "energy" | "rotor_w".
    pub observables: Vec<String>,
    pub dt_list: Vec<f64>,
    pub ensemble: usize,
    pub target_h: f64,
    pub layout: String,
}

impl Default for GeneratorBlock {
    fn default() -> Self {
        GeneratorBlock {
            observables: vec!["p1_squared".into(), "energy".into(), "rotor_w".into()],
            dt_list: vec![0.02, 0.01, 0.005],
            ensemble: 200_000,
            target_h: 1000.0,
            layout: "split".into(),
        }
    }
}

/// The full experiment file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub chain: ChainBlock,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default)]
    pub validate: ValidateBlock,
    #[serde(default)]
    pub calibrate: CalibrateBlock,
    #[serde(default)]
    pub matrosov: MatrosovBlock,
    #[serde(default)]
    pub equilibria: EquilibriaBlock,
    #[serde(default)]
    pub order_stats: OrderStatsBlock,
    #[serde(default)]
    pub simulate: SimulateBlock,
    #[serde(default)]
    pub sde: SdeBlock,
    #[serde(default)]
    pub decay: DecayBlock,
    #[serde(default)]
    pub generator: GeneratorBlock,
}

impl ExperimentConfig {
    pub fn from_str_toml(s: &str) -> Result<Self, ConfigError> {
        toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<(Self, u64), ConfigError> {
        let bytes = std::fs::read(path)?;
        let cfg = Self::from_str_toml(
            std::str::from_utf8(&bytes)
                .map_err(|e| ConfigError::Parse(e.to_string()))?,
        )?;
        Ok((cfg, crate::report::fnv64(&bytes)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROTOR_TOML: &str = r#"
[chain]
kind = "rotator"
n = 3

[[chain.interaction]]
kind = "trigpoly"
c0 = 2.0
cos = [1.0]

[run]
seed = 42
out_dir = "artifacts"
"#;

    #[test]
    fn rotor_config_builds_with_broadcast() {
        let cfg = ExperimentConfig::from_str_toml(ROTOR_TOML).unwrap();
        let spec = cfg.chain.build().unwrap();
        assert_eq!(spec.n(), 3);
        assert_eq!(spec.interactions().len(), 2);
        assert_eq!(cfg.run.seed, 42);
    }

    #[test]
    fn tabulated_potentials_are_rejected() {
        let toml = r#"
[chain]
kind = "rotator"
n = 2

[[chain.interaction]]
kind = "tabulated"
"#;
        let cfg = ExperimentConfig::from_str_toml(toml).unwrap();
        let err = cfg.chain.build().unwrap_err();
        assert!(err.to_string().contains("tabulated"));
    }

    #[test]
    fn unknown_keys_fail_loudly() {
        let toml = r#"
[chain]
kind = "rotator"
n = 2
wibble = 3

[[chain.interaction]]
kind = "trigpoly"
c0 = 2.0
cos = [1.0]
"#;
        assert!(ExperimentConfig::from_str_toml(toml).is_err());
    }

    #[test]
    fn polynomial_interaction_on_torus_rejected() {
        let toml = r#"
[chain]
kind = "rotator"
n = 2

[[chain.interaction]]
kind = "polynomial"
coeffs = [0.0, 0.0, 0.5]
"#;
        let cfg = ExperimentConfig::from_str_toml(toml).unwrap();
        assert!(cfg.chain.build().is_err());
    }

    #[test]
    fn oscillator_with_mixed_pinning() {
        let toml = r#"
[chain]
kind = "oscillator"
n = 2

[[chain.interaction]]
kind = "mixed"
coeffs = [0.0, 0.0, 0.5]
sin = [0.1]

[[chain.pinning]]
kind = "polynomial"
coeffs = [0.0, 0.0, 0.0, 0.0, 1.0]
"#;
        let cfg = ExperimentConfig::from_str_toml(toml).unwrap();
        let spec = cfg.chain.build().unwrap();
        assert_eq!(spec.pinnings().len(), 2);
        let v = &spec.interactions()[0];
        assert!((v.eval_deriv(0.5, 0) - (0.125 + 0.5f64.sin() * 0.1)).abs() < 1e-15);
    }
}
