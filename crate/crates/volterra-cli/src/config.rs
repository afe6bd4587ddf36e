//! Experiment configuration: one TOML file per run, validated field by field
//! before anything executes.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use volterra::{LevyModel, VolterraKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    VerifyCf,
    Localtime,
    Regularity,
    Lnd,
    SolveSde,
    Flow,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::VerifyCf => "verify-cf",
            Self::Localtime => "localtime",
            Self::Regularity => "regularity",
            Self::Lnd => "lnd",
            Self::SolveSde => "solve-sde",
            Self::Flow => "flow",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub replicas: u64,
    #[serde(default)]
    pub emit_svg: bool,
    pub kernel: KernelSpec,
    pub model: ModelSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub cf: Option<CfSpec>,
    #[serde(default)]
    pub localtime: Option<LocaltimeSpec>,
    #[serde(default)]
    pub regularity: Option<RegularitySpec>,
    #[serde(default)]
    pub lnd: Option<LndSpec>,
    #[serde(default)]
    pub sde: Option<SdeSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Constant { t_max: f64 },
    FractionalRl { h: f64, alpha_ref: f64, t_max: f64 },
    Exponential { a: f64, t_max: f64 },
    LogSingular { p: f64, alpha_ref: f64, t_max: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Brownian { sigma: f64, dim: usize },
    StableIso { alpha: f64, c_alpha: f64, dim: usize },
    StableComponentwise { alpha: f64, c_alpha: f64, dim: usize },
    StableLogModified { alpha: f64, dim: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub time_steps: usize,
    pub t_end: f64,
    #[serde(default = "default_space_cells")]
    pub space_cells: usize,
    #[serde(default = "default_space_period")]
    pub space_period: f64,
    #[serde(default = "default_freq_half")]
    pub freq_half: usize,
    #[serde(default = "default_freq_dxi")]
    pub freq_dxi: f64,
}

fn default_space_cells() -> usize {
    1024
}
fn default_space_period() -> f64 {
    4.0 * std::f64::consts::PI
}
fn default_freq_half() -> usize {
    64
}
fn default_freq_dxi() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfSpec {
    pub xi_count: usize,
    pub xi_max: f64,
    pub t_points: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocaltimeSpec {
    pub marks: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularitySpec {
    #[serde(default = "default_p")]
    pub p: u32,
    #[serde(default = "default_fit_lo")]
    pub fit_lo: f64,
    #[serde(default = "default_fit_hi")]
    pub fit_hi: f64,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    pub kappa_for_time: f64,
    pub lags: Vec<f64>,
    #[serde(default = "default_starts")]
    pub starts_per_lag: usize,
}

fn default_p() -> u32 {
    2
}
fn default_fit_lo() -> f64 {
    0.125
}
fn default_fit_hi() -> f64 {
    0.5
}
fn default_bootstrap() -> usize {
    200
}
fn default_starts() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LndSpec {
    pub zeta_values: Vec<f64>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_zeta_search")]
    pub zeta_search: (f64, f64),
    pub alpha: f64,
}

fn default_threshold() -> f64 {
    1e-3
}
fn default_zeta_search() -> (f64, f64) {
    (0.02, 2.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeSpec {
    pub beta: f64,
    pub drift_seed: u64,
    #[serde(default = "default_target_norm")]
    pub target_norm: f64,
    pub marks: usize,
    #[serde(default = "default_gamma_exp")]
    pub gamma_exp: f64,
    #[serde(default = "default_c2_bound")]
    pub c2_bound: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_xi0")]
    pub xi0: f64,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
}

fn default_target_norm() -> f64 {
    0.5
}
fn default_gamma_exp() -> f64 {
    0.55
}
fn default_c2_bound() -> f64 {
    1e4
}
fn default_tol() -> f64 {
    1e-3
}
fn default_xi0() -> f64 {
    0.0
}
fn default_fd_step() -> f64 {
    1e-2
}

impl ExperimentConfig {
    pub fn from_path(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: Self = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.replicas == 0 {
            bail!("replicas must be positive");
        }
        if self.grid.time_steps < 2 {
            bail!("grid.time_steps must be at least 2");
        }
        if !(self.grid.t_end > 0.0) {
            bail!("grid.t_end must be positive");
        }
        self.build_kernel().context("kernel")?;
        self.build_model().context("model")?;
        match self.kind {
            ExperimentKind::VerifyCf => {
                let cf = self.cf.as_ref().context("[cf] section required for verify-cf")?;
                if cf.xi_count == 0 || !(cf.xi_max > 0.0) || cf.t_points.is_empty() {
                    bail!("cf needs xi_count >= 1, xi_max > 0 and nonempty t_points");
                }
                if cf.t_points.iter().any(|&t| !(t > 0.0 && t <= self.grid.t_end)) {
                    bail!("cf.t_points must lie in (0, t_end]");
                }
            }
            ExperimentKind::Localtime => {
                let lt = self
                    .localtime
                    .as_ref()
                    .context("[localtime] section required for localtime")?;
                if lt.marks.len() < 2 {
                    bail!("localtime.marks needs at least two marks");
                }
            }
            ExperimentKind::Regularity => {
                let reg = self
                    .regularity
                    .as_ref()
                    .context("[regularity] section required for regularity")?;
                if reg.p < 2 || reg.p % 2 != 0 {
                    bail!("regularity.p must be an even integer >= 2");
                }
                if reg.lags.len() < 3 {
                    bail!("regularity.lags needs at least three lags");
                }
                if self.replicas < 100 {
                    bail!("regularity needs at least 100 replicas");
                }
            }
            ExperimentKind::Lnd => {
                let lnd = self.lnd.as_ref().context("[lnd] section required for lnd")?;
                if lnd.zeta_values.is_empty() {
                    bail!("lnd.zeta_values must be nonempty");
                }
                if !(lnd.alpha > 0.0 && lnd.alpha <= 2.0) {
                    bail!("lnd.alpha must lie in (0, 2]");
                }
            }
            ExperimentKind::SolveSde | ExperimentKind::Flow => {
                let sde = self.sde.as_ref().context("[sde] section required")?;
                if sde.marks < 2 || !sde.marks.is_power_of_two() {
                    bail!("sde.marks must be a power of two >= 2");
                }
                if !(sde.tol > 0.0) {
                    bail!("sde.tol must be positive");
                }
                if self.grid.time_steps % sde.marks != 0 {
                    bail!("grid.time_steps must be a multiple of sde.marks");
                }
            }
            ExperimentKind::Simulate => {}
        }
        Ok(())
    }

    pub fn build_kernel(&self) -> anyhow::Result<VolterraKernel> {
        let k = match self.kernel {
            KernelSpec::Constant { t_max } => VolterraKernel::constant(t_max),
            KernelSpec::FractionalRl { h, alpha_ref, t_max } => {
                VolterraKernel::fractional_rl(h, alpha_ref, t_max)
            }
            KernelSpec::Exponential { a, t_max } => VolterraKernel::exponential(a, t_max),
            KernelSpec::LogSingular { p, alpha_ref, t_max } => {
                VolterraKernel::log_singular(p, alpha_ref, t_max)
            }
        }?;
        if self.grid.t_end > k.t_max() {
            bail!("grid.t_end {} beyond kernel horizon {}", self.grid.t_end, k.t_max());
        }
        Ok(k)
    }

    pub fn build_model(&self) -> anyhow::Result<LevyModel> {
        Ok(match self.model {
            ModelSpec::Brownian { sigma, dim } => LevyModel::brownian(sigma, dim),
            ModelSpec::StableIso { alpha, c_alpha, dim } => {
                LevyModel::stable_iso(alpha, c_alpha, dim)
            }
            ModelSpec::StableComponentwise { alpha, c_alpha, dim } => {
                LevyModel::stable_componentwise(alpha, c_alpha, dim)
            }
            ModelSpec::StableLogModified { alpha, dim } => {
                LevyModel::stable_log_modified(alpha, dim)
            }
        }?)
    }

    /// Canonical serialized form used for the manifest hash.
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> ExperimentConfig {
        ExperimentConfig {
            kind: ExperimentKind::Simulate,
            seed: 1,
            replicas: 4,
            emit_svg: false,
            kernel: KernelSpec::Constant { t_max: 1.0 },
            model: ModelSpec::Brownian { sigma: 1.0, dim: 1 },
            grid: GridSpec {
                time_steps: 16,
                t_end: 1.0,
                space_cells: default_space_cells(),
                space_period: default_space_period(),
                freq_half: default_freq_half(),
                freq_dxi: default_freq_dxi(),
            },
            cf: None,
            localtime: None,
            regularity: None,
            lnd: None,
            sde: None,
        }
    }

    #[test]
    fn roundtrips_through_toml() {
        let cfg = minimal();
        let text = cfg.canonical_toml();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.canonical_toml(), text);
    }

    #[test]
    fn kind_specific_sections_are_required() {
        let mut cfg = minimal();
        cfg.kind = ExperimentKind::VerifyCf;
        assert!(cfg.validate().is_err());
        cfg.cf = Some(CfSpec { xi_count: 10, xi_max: 4.0, t_points: vec![0.5, 1.0] });
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn rejects_bad_kernel_parameters() {
        let mut cfg = minimal();
        cfg.kernel = KernelSpec::LogSingular { p: 2.0, alpha_ref: 1.0, t_max: 1.5 };
        assert!(cfg.validate().is_err());
    }
}
