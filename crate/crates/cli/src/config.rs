use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use polymart::calculus::{Direction, RegimeTag};
use polymart::envelope::{MomentEnvelope, SlowlyVarying};
use polymart::polymodel::{DistSpec, InputDistribution, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::Failure;

/// A named envelope definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvelopeDef {
    Indicator {
        r: f64,
    },
    PowerSingularity {
        #[serde(default = "one")]
        scale: f64,
        r: f64,
        delta: f64,
        #[serde(default)]
        log_power: f64,
    },
    MomentSingularity {
        #[serde(default = "one")]
        scale: f64,
        r: f64,
        exponent: f64,
        #[serde(default)]
        log_power: f64,
    },
    PowerGrowth {
        #[serde(default = "one")]
        scale: f64,
        mu: f64,
        #[serde(default)]
        log_power: f64,
    },
    Tabulated {
        ps: Vec<f64>,
        values: Vec<f64>,
    },
    /// `p ↦ |ξ|_p` of an input law.
    Natural {
        law: DistSpec,
    },
    Scaled {
        of: String,
        factor: f64,
    },
    Product {
        of: Vec<String>,
    },
    /// A built-in catalog entry.
    Catalog {
        name: String,
    },
}

fn one() -> f64 {
    1.0
}

pub const CATALOG: &[&str] = &["ind2", "ind4", "ind6", "ind8", "pgrow05", "pgrow1", "ps_r4", "ps_r6", "ps_r8"];

fn slowly(log_power: f64) -> SlowlyVarying {
    if log_power == 0.0 {
        SlowlyVarying::ONE
    } else {
        SlowlyVarying::LogPower(log_power)
    }
}

/// `indR` = Indicator(R); `pgrow05`, `pgrow1` = `p^μ`; `ps_rR` =
/// `(R − p)^(−1/R)`.
pub fn catalog(name: &str) -> Option<MomentEnvelope> {
    let env = match name {
        "ind2" | "ind4" | "ind6" | "ind8" => MomentEnvelope::indicator(name[3..].parse().ok()?),
        "pgrow05" => MomentEnvelope::power_growth(1.0, 0.5, SlowlyVarying::ONE),
        "pgrow1" => MomentEnvelope::power_growth(1.0, 1.0, SlowlyVarying::ONE),
        "ps_r4" | "ps_r6" | "ps_r8" => {
            let r: f64 = name[4..].parse().ok()?;
            MomentEnvelope::power_singularity(1.0, r, 1.0 / r, SlowlyVarying::ONE)
        }
        _ => return None,
    };
    env.ok()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZetaSection {
    pub regime: RegimeTag,
    #[serde(default = "forward")]
    pub direction: Direction,
    /// Envelope names, one per factor; defaults to the model's input
    /// envelopes.
    #[serde(default)]
    pub inputs: Option<Vec<String>>,
    #[serde(default)]
    pub p_grid: Option<Vec<f64>>,
    /// Multiplies the final bound (values below 1 force violations).
    #[serde(default = "one")]
    pub scale: f64,
}

fn forward() -> Direction {
    Direction::Forward
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    #[default]
    Moments,
    Doob,
    /// Centered polynomial `Σ b(I)·Π(ξ^k − Eξ^k)` against the fitted
    /// dominant-term envelope.
    Diagonal,
    ReverseWindow,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    #[serde(default)]
    pub kind: PlanKind,
    #[serde(default = "default_reps")]
    pub replications: usize,
    #[serde(default)]
    pub p_grid: Option<Vec<f64>>,
    #[serde(default = "default_x_grid")]
    pub x_grid: Vec<f64>,
    #[serde(default = "one_u64")]
    pub seed: u64,
    #[serde(default)]
    pub b_sweep: Option<usize>,
    #[serde(default = "yes")]
    pub fit_tail_rescale: bool,
    /// Envelope name to test against instead of the ζ chain.
    #[serde(default)]
    pub bound: Option<String>,
    #[serde(default = "one")]
    pub tail_norm_factor: f64,
    /// Powers `k_l` for the diagonal kind.
    #[serde(default)]
    pub multiplicities: Option<Vec<usize>>,
    /// `[n_start, big_n]` for the reverse-window kind.
    #[serde(default)]
    pub window: Option<[usize; 2]>,
    /// Replications of the run that fits the diagonal envelope constant.
    #[serde(default = "default_reps")]
    pub pilot_replications: usize,
}

fn default_reps() -> usize {
    100_000
}

fn default_x_grid() -> Vec<f64> {
    vec![5.0, 10.0, 20.0, 50.0]
}

fn one_u64() -> u64 {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SampleFormat {
    #[default]
    Bin,
    Csv,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub csv: Option<bool>,
    #[serde(default)]
    pub sample_format: SampleFormat,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub envelopes: BTreeMap<String, EnvelopeDef>,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub zeta: Option<ZetaSection>,
    #[serde(default)]
    pub plan: Option<PlanSection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl ScenarioConfig {
    /// Reads a scenario, or the configuration embedded in a report.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        let value = match value.get("schema_version") {
            Some(_) => value
                .get("config")
                .filter(|c| !c.is_null())
                .cloned()
                .ok_or_else(|| Failure::config(format!("{}: report carries no configuration", path.display())))?,
            None => value,
        };
        let cfg: Self = serde_json::from_value(value).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        cfg.check_names()?;
        Ok(cfg)
    }

    fn check_names(&self) -> Result<(), Failure> {
        for name in self.envelopes.keys() {
            self.envelope(name)?;
        }
        if let Some(inputs) = self.zeta.as_ref().and_then(|z| z.inputs.as_ref()) {
            for name in inputs {
                self.envelope(name)?;
            }
        }
        if let Some(name) = self.plan.as_ref().and_then(|p| p.bound.as_ref()) {
            self.envelope(name)?;
        }
        Ok(())
    }

    /// Resolves a name against the config, then the catalog.
    pub fn envelope(&self, name: &str) -> Result<MomentEnvelope, Failure> {
        self.resolve(name, 0)
    }

    fn resolve(&self, name: &str, depth: usize) -> Result<MomentEnvelope, Failure> {
        if depth > 32 {
            return Err(Failure::config(format!("envelope '{name}' is defined in terms of itself")));
        }
        let Some(def) = self.envelopes.get(name) else {
            return catalog(name).ok_or_else(|| Failure::config(format!("unknown envelope '{name}'")));
        };
        let built = match def {
            EnvelopeDef::Indicator { r } => MomentEnvelope::indicator(*r),
            EnvelopeDef::PowerSingularity { scale, r, delta, log_power } => {
                MomentEnvelope::power_singularity(*scale, *r, *delta, slowly(*log_power))
            }
            EnvelopeDef::MomentSingularity { scale, r, exponent, log_power } => {
                MomentEnvelope::moment_singularity(*scale, *r, *exponent, slowly(*log_power))
            }
            EnvelopeDef::PowerGrowth { scale, mu, log_power } => MomentEnvelope::power_growth(*scale, *mu, slowly(*log_power)),
            EnvelopeDef::Tabulated { ps, values } => MomentEnvelope::tabulated(ps.clone(), values.clone()),
            EnvelopeDef::Natural { law } => InputDistribution::from_spec(law.clone()).and_then(|l| l.natural_envelope()),
            EnvelopeDef::Scaled { of, factor } => self.resolve(of, depth + 1)?.scaled(*factor),
            EnvelopeDef::Product { of } => {
                let parts = of.iter().map(|n| self.resolve(n, depth + 1)).collect::<Result<Vec<_>, _>>()?;
                MomentEnvelope::product(parts)
            }
            EnvelopeDef::Catalog { name: inner } => {
                return catalog(inner).ok_or_else(|| Failure::config(format!("'{inner}' is not a catalog envelope")));
            }
        };
        built.map_err(|e| Failure::config(format!("envelope '{name}': {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_entries_resolve() {
        for name in CATALOG {
            assert!(catalog(name).is_some(), "{name}");
        }
        assert!(catalog("ind3").is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<ScenarioConfig>(r#"{"plan": {"replicatons": 5}}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
    }

    #[test]
    fn names_resolve_through_the_config() {
        let cfg: ScenarioConfig = serde_json::from_str(
            r#"{"envelopes": {"a": {"form": "scaled", "of": "ind4", "factor": 2.0},
                              "b": {"form": "product", "of": ["a", "a"]},
                              "loop": {"form": "scaled", "of": "loop", "factor": 1.0}}}"#,
        )
        .unwrap();
        assert_eq!(cfg.envelope("b").unwrap().eval(2.0).unwrap(), 4.0);
        assert!(cfg.envelope("loop").is_err());
        assert!(cfg.envelope("nope").is_err());
    }
}
