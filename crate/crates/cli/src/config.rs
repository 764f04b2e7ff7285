//! The experiment config file (TOML) and its command-line overrides.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use vparab::bumps::{BumpProfile, PartitionFamily};
use vparab::grid::{Grid2D, LpExponent};
use vparab::normlab::{OperatorSpec, ProbeConfig, SamplerConfig, UniformOp, VdcConfig};
use vparab::transforms::{EvalOptions, FieldSpec, PieceKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ValidateBumps,
    Opnorm,
    DecayScan,
    VdcScan,
    Uniformity,
    ProbeUnbounded,
    Reconstruct,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ValidateBumps => "validate-bumps",
            Experiment::Opnorm => "opnorm",
            Experiment::DecayScan => "decay-scan",
            Experiment::VdcScan => "vdc-scan",
            Experiment::Uniformity => "uniformity",
            Experiment::ProbeUnbounded => "probe-unbounded",
            Experiment::Reconstruct => "reconstruct",
        }
    }
}

fn default_trials() -> usize {
    16
}

fn default_p() -> LpExponent {
    LpExponent::two()
}

/// One experiment. Sections that a given experiment does not read may be
/// omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Checked against the subcommand when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_p")]
    pub p: LpExponent,
    /// Not part of the experiment: left out of reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid2D>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorSpec>,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub bump: BumpProfile,
    #[serde(default)]
    pub family: PartitionFamily,
    #[serde(default)]
    pub eval: EvalOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validate: Option<ValidateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecaySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vdc: Option<VdcConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniformity: Option<UniformitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstruct: Option<ReconstructSection>,
}

impl ExperimentConfig {
    /// The config used when `validate-bumps` runs without a file.
    pub fn bare(seed: u64) -> Self {
        ExperimentConfig {
            experiment: None,
            seed,
            trials: default_trials(),
            p: default_p(),
            out_dir: None,
            grid: None,
            operator: None,
            sampler: SamplerConfig::default(),
            bump: BumpProfile::default(),
            family: PartitionFamily::default(),
            eval: EvalOptions::default(),
            validate: None,
            decay: None,
            vdc: None,
            uniformity: None,
            probe: None,
            reconstruct: None,
        }
    }
}

fn default_points() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    #[serde(default = "default_points")]
    pub points: usize,
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection {
            points: default_points(),
        }
    }
}

fn abs_kernel() -> PieceKernel {
    PieceKernel::Abs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySection {
    pub field: FieldSpec,
    pub l_min: i32,
    pub l_max: i32,
    #[serde(default = "abs_kernel")]
    pub kernel: PieceKernel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformitySection {
    pub field: FieldSpec,
    pub op: UniformOp,
    pub k_values: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructSection {
    pub field: FieldSpec,
    pub levels: i32,
    pub inputs: usize,
}

/// Command-line values that replace config fields.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Experiment config (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; defaults to the config's `out_dir`, then
    /// `$VPARAB_OUT_DIR`, then `./vparab-out`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// `L^p` exponent, a number >= 1 or `inf`.
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError(e.to_string()))
    }

    /// Applies `ov` and pins `experiment` to `kind`.
    pub fn resolve(mut self, kind: Experiment, ov: &Overrides) -> Result<Self, ConfigError> {
        if let Some(declared) = self.experiment {
            if declared != kind {
                return Err(ConfigError(format!(
                    "config declares experiment `{}` but `{}` was run",
                    declared.name(),
                    kind.name()
                )));
            }
        }
        self.experiment = Some(kind);
        if let Some(s) = ov.seed {
            self.seed = s;
        }
        if let Some(t) = ov.trials {
            self.trials = t;
        }
        if let Some(p) = &ov.p {
            self.p = serde_json::from_value(match p.parse::<f64>() {
                Ok(v) => serde_json::json!(v),
                Err(_) => serde_json::json!(p),
            })
            .map_err(|e| ConfigError(format!("--p {p}: {e}")))?;
        }
        if ov.nx.is_some() || ov.ny.is_some() {
            let g = self
                .grid
                .ok_or_else(|| ConfigError("--nx/--ny need a [grid] section".into()))?;
            self.grid = Some(
                Grid2D::new(
                    g.extent_x(),
                    g.extent_y(),
                    ov.nx.unwrap_or(g.nx()),
                    ov.ny.unwrap_or(g.ny()),
                )
                .map_err(|e| ConfigError(e.to_string()))?,
            );
        }
        if let Some(d) = &ov.out_dir {
            self.out_dir = Some(d.clone());
        }
        Ok(self)
    }

    /// Flag, then config, then `$VPARAB_OUT_DIR`, then `./vparab-out`.
    pub fn output_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os("VPARAB_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("vparab-out"))
    }

    /// The config as embedded in reports: everything but the output path.
    pub fn for_report(&self) -> Self {
        ExperimentConfig {
            out_dir: None,
            ..self.clone()
        }
    }

    pub fn require_grid(&self) -> Result<Grid2D, ConfigError> {
        self.grid.ok_or_else(|| ConfigError("missing [grid] section".into()))
    }

    pub fn require<'a, T>(&self, section: &'a Option<T>, name: &str) -> Result<&'a T, ConfigError> {
        section.as_ref().ok_or_else(|| ConfigError(format!("missing [{name}] section")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
experiment = "opnorm"
seed = 3
trials = 4
p = "inf"

[grid]
extent_x = 8.0
extent_y = 6.283185307179586
nx = 32
ny = 16

[operator]
op = "Msharp"
field = { kind = "steps", values = [0.5, 1.0] }
k_min = -2
k_max = 0

[sampler]
kind = "adversarial"
ascent_steps = 5
"#;

    #[test]
    fn round_trips() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        let again = ExperimentConfig::parse(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.p, LpExponent::Infinity);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::parse("seed = 1\nsed = 2\n").is_err());
        assert!(ExperimentConfig::parse("trials = 2\n").is_err(), "seed is required");
    }

    #[test]
    fn overrides_apply() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        let ov = Overrides {
            seed: Some(9),
            trials: Some(7),
            p: Some("3".into()),
            nx: Some(64),
            ..Default::default()
        };
        let r = c.resolve(Experiment::Opnorm, &ov).unwrap();
        assert_eq!((r.seed, r.trials, r.p), (9, 7, LpExponent::Finite(3.0)));
        assert_eq!(r.grid.unwrap().nx(), 64);
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        assert!(c.resolve(Experiment::DecayScan, &Overrides::default()).is_err());
    }
}
