//! Run configuration: one TOML file selects a scenario and carries its
//! parameters plus the integrator and output settings. Every field has a
//! default except the scenario name, its parameter table, and the output
//! directory, so a parsed config is already fully resolved and re-serializes
//! to a stable manifest.

use crate::error::{Error, Result};
use crate::memory::Forcing;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    LinearString,
    StringKernels,
    NonlinearStringFrf,
    Friction,
    Twofold,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::LinearString => "linear_string",
            ScenarioKind::StringKernels => "string_kernels",
            ScenarioKind::NonlinearStringFrf => "nonlinear_string_frf",
            ScenarioKind::Friction => "friction",
            ScenarioKind::Twofold => "twofold",
        }
    }
}

fn d_c() -> f64 {
    1.0
}
fn d_beta() -> f64 {
    0.03
}
fn d_xi_star() -> f64 {
    0.4
}
fn d_one() -> f64 {
    1.0
}
fn d_n1() -> usize {
    1
}
fn d_n64() -> usize {
    64
}
fn d_k_terms() -> usize {
    200_000
}
fn d_t_min() -> f64 {
    1e-3
}
fn d_t_max() -> f64 {
    3.0
}
fn d_points() -> usize {
    600
}
fn d_frf_points() -> usize {
    33
}
fn d_amp() -> f64 {
    2.5
}
fn d_gamma2() -> f64 {
    2.0
}
fn d_omega_min() -> f64 {
    0.7 * PI
}
fn d_omega_max() -> f64 {
    1.5 * PI
}
fn d_min_periods() -> usize {
    20
}
fn d_max_periods() -> usize {
    600
}
fn d_sweep_dt() -> f64 {
    2e-3
}
fn d_l_plus() -> f64 {
    0.05
}
fn d_sigma50() -> f64 {
    50.0
}
fn d_alpha() -> f64 {
    0.5
}
fn d_v_minus() -> f64 {
    -2.0
}
fn d_v_plus() -> f64 {
    -1.1
}
fn d_sigma10() -> f64 {
    10.0
}
fn d_l_plus3() -> [f64; 3] {
    [0.05, 0.0, 0.0]
}
fn d_friction_y0() -> Vec<f64> {
    vec![0.0, 0.0, 0.0]
}
fn d_twofold_y0() -> Vec<f64> {
    vec![0.0, 1.5, 1.5, 0.2]
}
fn d_mode_free_minus() -> String {
    "free_minus".into()
}
fn d_mode_sliding() -> String {
    "sliding".into()
}
fn d_true() -> bool {
    true
}
fn d_dt() -> f64 {
    1e-3
}
fn d_t_end() -> f64 {
    10.0
}
fn d_stride() -> usize {
    1
}
fn d_event_tol() -> f64 {
    1e-10
}
fn d_h_tol() -> f64 {
    1e-9
}
fn d_lambda_tol() -> f64 {
    1e-9
}
fn d_max_events() -> usize {
    10_000
}
fn d_forcing() -> ForcingConfig {
    ForcingConfig::Step {
        t_jump: 0.0,
        before: 0.0,
        after: 1.0,
    }
}

/// Point-force program applied at the contact.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum ForcingConfig {
    Zero,
    Constant {
        value: f64,
    },
    Harmonic {
        amp: f64,
        omega: f64,
    },
    Step {
        #[serde(default)]
        t_jump: f64,
        #[serde(default)]
        before: f64,
        after: f64,
    },
}

impl ForcingConfig {
    pub fn build(&self) -> Result<Forcing> {
        let f = match *self {
            ForcingConfig::Zero => Forcing::Zero,
            ForcingConfig::Constant { value } => Forcing::Constant(value),
            ForcingConfig::Harmonic { amp, omega } => {
                if !(omega > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "harmonic forcing needs omega > 0, got {omega}"
                    )));
                }
                Forcing::Harmonic { amp, omega }
            }
            ForcingConfig::Step {
                t_jump,
                before,
                after,
            } => Forcing::Step {
                t_jump,
                before,
                after,
            },
        };
        Ok(f)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearStringConfig {
    #[serde(default = "d_c")]
    pub c: f64,
    #[serde(default = "d_xi_star")]
    pub xi_star: f64,
    #[serde(default = "d_n64")]
    pub n_modes: usize,
    /// Initial modal state [z, zdot]; zeros when omitted.
    #[serde(default)]
    pub z0: Option<Vec<f64>>,
    #[serde(default = "d_forcing")]
    pub forcing: ForcingConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StringKernelsConfig {
    #[serde(default = "d_c")]
    pub c: f64,
    #[serde(default = "d_beta")]
    pub beta: f64,
    #[serde(default = "d_xi_star")]
    pub xi_star: f64,
    #[serde(default = "d_n1")]
    pub n_modes: usize,
    #[serde(default)]
    pub nonlinearity: f64,
    /// Wave speed at which the kernel is tabulated; defaults to c.
    #[serde(default)]
    pub cbar: Option<f64>,
    #[serde(default = "d_k_terms")]
    pub k_terms: usize,
    #[serde(default = "d_t_min")]
    pub t_min: f64,
    #[serde(default = "d_t_max")]
    pub t_max: f64,
    #[serde(default = "d_points")]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepDirectionConfig {
    Up,
    Down,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepBackendConfig {
    Kappa,
    FullMemory,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrfConfig {
    #[serde(default = "d_c")]
    pub c: f64,
    #[serde(default = "d_beta")]
    pub beta: f64,
    #[serde(default = "d_xi_star")]
    pub xi_star: f64,
    #[serde(default = "d_n1")]
    pub n_modes: usize,
    #[serde(default = "d_gamma2")]
    pub nonlinearity: f64,
    #[serde(default = "d_amp")]
    pub amplitude: f64,
    #[serde(default = "d_omega_min")]
    pub omega_min: f64,
    #[serde(default = "d_omega_max")]
    pub omega_max: f64,
    #[serde(default = "d_frf_points")]
    pub points: usize,
    #[serde(default = "d_direction_both")]
    pub direction: SweepDirectionConfig,
    #[serde(default = "d_backend_kappa")]
    pub backend: SweepBackendConfig,
    /// Closure gain multiplier for the kappa backend (0 removes the closure).
    #[serde(default = "d_one")]
    pub lplus_scale: f64,
    #[serde(default = "d_sweep_dt")]
    pub dt: f64,
    #[serde(default = "d_min_periods")]
    pub min_periods: usize,
    #[serde(default = "d_max_periods")]
    pub max_periods: usize,
    /// Periods per steadiness window; widen past 1 to accept subharmonic
    /// responses at their envelope amplitude.
    #[serde(default = "d_n1")]
    pub steady_window: usize,
    #[serde(default = "d_steady_span")]
    pub steady_span: usize,
}

fn d_steady_span() -> usize {
    10
}

fn d_direction_both() -> SweepDirectionConfig {
    SweepDirectionConfig::Both
}
fn d_backend_kappa() -> SweepBackendConfig {
    SweepBackendConfig::Kappa
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrictionConfig {
    #[serde(default = "d_l_plus")]
    pub l_plus: f64,
    #[serde(default = "d_sigma50")]
    pub sigma: f64,
    #[serde(default = "d_beta")]
    pub beta: f64,
    #[serde(default = "d_one")]
    pub l_inf: f64,
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    #[serde(default = "d_one")]
    pub v0: f64,
    #[serde(default = "d_friction_y0")]
    pub y0: Vec<f64>,
    #[serde(default = "d_mode_free_minus")]
    pub mode0: String,
    #[serde(default)]
    pub lambda0: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwofoldConfig {
    #[serde(default = "d_v_minus")]
    pub v_minus: f64,
    #[serde(default = "d_v_plus")]
    pub v_plus: f64,
    #[serde(default = "d_sigma10")]
    pub sigma: f64,
    #[serde(default = "d_l_plus3")]
    pub l_plus: [f64; 3],
    #[serde(default = "d_twofold_y0")]
    pub y0: Vec<f64>,
    #[serde(default = "d_mode_sliding")]
    pub mode0: String,
    #[serde(default)]
    pub lambda0: Option<f64>,
    /// Stop at the first exit from sliding (the clamp semantics).
    #[serde(default = "d_true")]
    pub stop_at_exit: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorBlock {
    #[serde(default = "d_dt")]
    pub dt: f64,
    #[serde(default)]
    pub t_start: f64,
    #[serde(default = "d_t_end")]
    pub t_end: f64,
    #[serde(default = "d_stride")]
    pub record_stride: usize,
    #[serde(default = "d_event_tol")]
    pub event_tol: f64,
    #[serde(default = "d_h_tol")]
    pub h_tol: f64,
    #[serde(default = "d_lambda_tol")]
    pub lambda_tol: f64,
    #[serde(default = "d_max_events")]
    pub max_events: usize,
}

impl Default for IntegratorBlock {
    fn default() -> Self {
        Self {
            dt: d_dt(),
            t_start: 0.0,
            t_end: d_t_end(),
            record_stride: d_stride(),
            event_tol: d_event_tol(),
            h_tol: d_h_tol(),
            lambda_tol: d_lambda_tol(),
            max_events: d_max_events(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Run directory, created under the output root.
    pub dir: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_string: Option<LinearStringConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub string_kernels: Option<StringKernelsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinear_string_frf: Option<FrfConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub friction: Option<FrictionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twofold: Option<TwofoldConfig>,
    #[serde(default)]
    pub integrator: IntegratorBlock,
    pub output: OutputBlock,
    /// Summary table written into manifests; accepted and ignored on re-runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<toml::Value>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.check_tables()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// The scenario table must match the scenario name, and no other
    /// scenario table may be present.
    fn check_tables(&self) -> Result<()> {
        let tables: [(&str, bool); 5] = [
            ("linear_string", self.linear_string.is_some()),
            ("string_kernels", self.string_kernels.is_some()),
            ("nonlinear_string_frf", self.nonlinear_string_frf.is_some()),
            ("friction", self.friction.is_some()),
            ("twofold", self.twofold.is_some()),
        ];
        let want = self.scenario.as_str();
        for (name, present) in tables {
            if present && name != want {
                return Err(Error::Config(format!(
                    "scenario is '{want}' but a [{name}] table is present"
                )));
            }
        }
        if !tables.iter().any(|(name, p)| *p && *name == want) {
            return Err(Error::Config(format!(
                "scenario '{want}' needs a [{want}] table"
            )));
        }
        Ok(())
    }
}
