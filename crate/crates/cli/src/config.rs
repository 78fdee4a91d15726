//! Experiment configuration (TOML). See `docs/config.md` for the schema.

use serde::Deserialize;

use gkdv_core::nonlinearity::PowerTerm;
use gkdv_core::Nonlinearity;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub nonlinearity: NonlinearityConfig,
    pub validate_nl: Option<ValidateNlConfig>,
    pub profile: Option<ProfileConfig>,
    pub collide: Option<CollideConfig>,
    pub simulate: Option<SimulateConfig>,
    pub perturb: Option<PerturbConfig>,
    pub validate: Option<ValidateConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    /// Pure power `g'(u) = u^kappa`.
    pub kappa: Option<f64>,
    /// Terms `c z^q` of `g₁`.
    pub terms: Option<Vec<TermConfig>>,
    #[serde(default = "default_u_max")]
    pub u_max: f64,
}

fn default_u_max() -> f64 {
    1e3
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub coeff: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateNlConfig {
    /// Amplitudes checked against the moment identities.
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    /// Extra amplitudes drawn log-uniformly from `amplitude_range` with the run seed.
    #[serde(default)]
    pub random_amplitudes: usize,
    #[serde(default = "default_range")]
    pub amplitude_range: [f64; 2],
}

fn default_range() -> [f64; 2] {
    [0.5, 50.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub amplitude: f64,
    pub eta_max: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollideConfig {
    pub a1: f64,
    pub a2: f64,
    pub x1_0: f64,
    pub x2_0: f64,
    pub sigma_step: Option<f64>,
    pub tau_step: Option<f64>,
    /// When set, the assembled field is written at `field_times`.
    pub eps: Option<f64>,
    #[serde(default)]
    pub field_times: Vec<f64>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x0: f64,
    pub length: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonConfig {
    pub amplitude: f64,
    pub position: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceConfig {
    pub mu: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub eps: f64,
    pub grid: GridConfig,
    pub t_end: f64,
    pub dt: Option<f64>,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    pub solitons: Vec<SolitonConfig>,
    #[serde(default)]
    pub clamp_negative: bool,
    #[serde(default = "yes")]
    pub dealias: bool,
    pub force: Option<ForceConfig>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum TailKind {
    Linear,
    Retained,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    pub nx: usize,
    pub nt: usize,
    #[serde(default = "linear")]
    pub model: TailKind,
}

fn linear() -> TailKind {
    TailKind::Linear
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbConfig {
    pub eps: f64,
    pub mu: f64,
    pub alpha: f64,
    pub amplitudes: Vec<f64>,
    pub t_end: f64,
    #[serde(default = "default_n_out")]
    pub n_out: usize,
    pub tail: Option<TailConfig>,
    #[serde(default)]
    pub critical_time: bool,
}

fn default_n_out() -> usize {
    2001
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionConfig {
    pub center: f64,
    pub width: f64,
    #[serde(default)]
    pub tilt: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub eps: f64,
    pub grid: GridConfig,
    pub checkpoints: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub a1: f64,
    pub a2: f64,
    pub x1_0: f64,
    pub x2_0: f64,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_tau_half")]
    pub tau_half: f64,
    #[serde(default = "default_n_times")]
    pub n_times: usize,
    /// Defaults to seven bumps along both paths up to `t_end`.
    pub tests: Option<Vec<TestFunctionConfig>>,
    pub t_end: Option<f64>,
    pub compare: Option<CompareConfig>,
}

fn default_eps() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}

fn default_tau_half() -> f64 {
    10.0
}

fn default_n_times() -> usize {
    41
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

impl NonlinearityConfig {
    pub fn build(&self) -> gkdv_core::Result<Nonlinearity> {
        match (&self.kappa, &self.terms) {
            (Some(k), None) => Nonlinearity::power_law(*k, self.u_max),
            (None, Some(t)) => Nonlinearity::power_sum(
                t.iter().map(|t| PowerTerm::new(t.coeff, t.exponent)).collect(),
                self.u_max,
            ),
            _ => Err(gkdv_core::Error::InvalidInput(
                "[nonlinearity] needs exactly one of `kappa` or `terms`".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys() {
        assert!(Config::parse("[nonlinearity]\nkappa = 2\nbogus = 1\n").is_err());
        let c = Config::parse("[nonlinearity]\nkappa = 2\n[profile]\namplitude = 1\n").unwrap();
        assert_eq!(c.profile.unwrap().amplitude, 1.0);
    }

    #[test]
    fn nonlinearity_needs_one_form() {
        let both = Config::parse(
            "[nonlinearity]\nkappa = 2\nterms = [{ coeff = 1, exponent = 1 }]\n",
        )
        .unwrap();
        assert!(both.nonlinearity.build().is_err());
    }
}
