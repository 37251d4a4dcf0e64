//! TOML run configuration. Frequencies are ordinary frequency with the unit
//! in the key name; everything converts to angular units on resolution.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::model::units::{hz, khz};
use crate::model::{thermal_occupation, EnvironmentSpec, Mode, PhysicalParams};
use crate::oracle::{Scheme, TrajectoryConfig};
use crate::spectra::FrequencyGrid;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io { path: PathBuf, message: String },
    Parse(String),
    Invalid { field: String, reason: String },
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Io { path, message } => write!(f, "{}: {message}", path.display()),
            Self::Parse(m) => write!(f, "config parse error: {m}"),
            Self::Invalid { field, reason } => write!(f, "invalid config value `{field}`: {reason}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub detuning_khz: f64,
    pub kappa_khz: f64,
    pub omega_x_khz: f64,
    pub omega_y_khz: f64,
    pub gamma_mx_hz: f64,
    pub gamma_my_hz: f64,
    pub g_x_khz: f64,
    pub g_y_khz: f64,
    pub n_th_x: f64,
    pub n_th_y: f64,
    pub gamma_nx_khz: f64,
    pub gamma_ny_khz: f64,
    pub eta: f64,
    pub omega_lo_khz: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            detuning_khz: -120.0,
            kappa_khz: 57.0,
            omega_x_khz: 132.0,
            omega_y_khz: 117.0,
            gamma_mx_hz: 0.1,
            gamma_my_hz: 0.1,
            g_x_khz: 29.0,
            g_y_khz: 9.0,
            n_th_x: thermal_occupation(khz(132.0), 293.0).unwrap_or(0.0),
            n_th_y: thermal_occupation(khz(117.0), 293.0).unwrap_or(0.0),
            gamma_nx_khz: 8.9,
            gamma_ny_khz: 4.8,
            eta: 0.32,
            omega_lo_khz: 1100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentConfig {
    pub pressure_pa: f64,
    pub temperature_k: f64,
    pub damping_slope_hz_per_pa: f64,
    pub theta_pol_deg: f64,
    pub g_total_khz: f64,
    pub s_rin_per_hz: f64,
    /// Replace damping and bath occupations with the gas-derived values.
    pub apply_gas: bool,
    /// Replace the couplings with those derived from `g_total_khz` and `theta_pol_deg`.
    pub apply_geometry: bool,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        Self {
            pressure_pa: 3e-5,
            temperature_k: 293.0,
            damping_slope_hz_per_pa: 13.0,
            theta_pol_deg: 72.0,
            g_total_khz: 30.0,
            s_rin_per_hz: 2.3e-14,
            apply_gas: false,
            apply_geometry: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub start_khz: f64,
    pub stop_khz: f64,
    pub step_khz: f64,
    /// Largest admissible edge/peak ratio of mechanical spectra.
    pub tail_threshold: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { start_khz: -400.0, stop_khz: 400.0, step_khz: 0.01, tail_threshold: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Any key of `[params]` or `pressure_pa`.
    pub parameter: String,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumOptions {
    /// Direction of the mechanical spectra, degrees from X towards Y.
    pub theta_deg: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { theta_deg: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OccupationOptions {
    pub theta_step_deg: f64,
}

impl Default for OccupationOptions {
    fn default() -> Self {
        Self { theta_step_deg: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub n_peaks: usize,
    /// Two-column CSV (`freq_khz,value`) to fit instead of a model spectrum.
    pub input: Option<PathBuf>,
    /// Fit window in kHz; the whole grid when absent.
    pub window_start_khz: Option<f64>,
    pub window_stop_khz: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { n_peaks: 3, input: None, window_start_khz: None, window_stop_khz: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsymmetryOptions {
    pub mode: Mode,
    pub half_widths: f64,
    pub fit_span: f64,
}

impl Default for AsymmetryOptions {
    fn default() -> Self {
        Self { mode: Mode::X, half_widths: 5.0, fit_span: 12.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetOptions {
    pub include_rin: bool,
}

impl Default for BudgetOptions {
    fn default() -> Self {
        Self { include_rin: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleOptions {
    /// Step as a fraction of the largest admissible step.
    pub dt_fraction: f64,
    pub duration_s: f64,
    pub burn_in_s: f64,
    pub seed: u64,
    pub record_every: usize,
    pub segment_length: usize,
    pub scheme: Scheme,
    pub allow_short: bool,
    /// Comparison band in kHz; derived from the eigenvalues when absent.
    pub band_start_khz: Option<f64>,
    pub band_stop_khz: Option<f64>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            dt_fraction: 0.9,
            duration_s: 4.0,
            burn_in_s: 0.01,
            seed: 0,
            record_every: 16,
            segment_length: 16384,
            scheme: Scheme::ExponentialEuler,
            allow_short: false,
            band_start_khz: None,
            band_stop_khz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: ParamsConfig,
    pub environment: EnvironmentConfig,
    pub grid: GridConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    pub output: OutputConfig,
    pub spectrum: SpectrumOptions,
    pub occupation: OccupationOptions,
    pub fit: FitOptions,
    pub asymmetry: AsymmetryOptions,
    pub budget: BudgetOptions,
    pub oracle: OracleOptions,
}

const SWEEPABLE: &[&str] = &[
    "detuning_khz",
    "kappa_khz",
    "omega_x_khz",
    "omega_y_khz",
    "gamma_mx_hz",
    "gamma_my_hz",
    "g_x_khz",
    "g_y_khz",
    "n_th_x",
    "n_th_y",
    "gamma_nx_khz",
    "gamma_ny_khz",
    "eta",
    "omega_lo_khz",
    "pressure_pa",
];

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.params;
        let positive = [
            ("params.kappa_khz", p.kappa_khz),
            ("params.omega_x_khz", p.omega_x_khz),
            ("params.omega_y_khz", p.omega_y_khz),
        ];
        for (f, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(f, "must be > 0"));
            }
        }
        let non_negative = [
            ("params.gamma_mx_hz", p.gamma_mx_hz),
            ("params.gamma_my_hz", p.gamma_my_hz),
            ("params.g_x_khz", p.g_x_khz),
            ("params.g_y_khz", p.g_y_khz),
            ("params.n_th_x", p.n_th_x),
            ("params.n_th_y", p.n_th_y),
            ("params.gamma_nx_khz", p.gamma_nx_khz),
            ("params.gamma_ny_khz", p.gamma_ny_khz),
            ("params.omega_lo_khz", p.omega_lo_khz),
            ("environment.pressure_pa", self.environment.pressure_pa),
            ("environment.damping_slope_hz_per_pa", self.environment.damping_slope_hz_per_pa),
            ("environment.g_total_khz", self.environment.g_total_khz),
            ("environment.s_rin_per_hz", self.environment.s_rin_per_hz),
        ];
        for (f, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(f, "must be >= 0"));
            }
        }
        if !p.detuning_khz.is_finite() {
            return Err(invalid("params.detuning_khz", "must be finite"));
        }
        if !(p.eta > 0.0 && p.eta <= 1.0) {
            return Err(invalid("params.eta", "must lie in (0, 1]"));
        }
        if !(self.environment.temperature_k > 0.0) {
            return Err(invalid("environment.temperature_k", "must be > 0"));
        }
        if !(0.0..=90.0).contains(&self.environment.theta_pol_deg) {
            return Err(invalid("environment.theta_pol_deg", "must lie in [0, 90]"));
        }
        self.grid()?;
        if !(self.grid.tail_threshold > 0.0) {
            return Err(invalid("grid.tail_threshold", "must be > 0"));
        }
        if let Some(s) = &self.sweep {
            if !SWEEPABLE.contains(&s.parameter.as_str()) {
                return Err(invalid("sweep.parameter", format!("unknown parameter `{}`", s.parameter)));
            }
            sweep_values(s)?;
        }
        if !(1..=3).contains(&self.fit.n_peaks) {
            return Err(invalid("fit.n_peaks", "must be 1, 2 or 3"));
        }
        if !(self.occupation.theta_step_deg > 0.0 && self.occupation.theta_step_deg <= 90.0) {
            return Err(invalid("occupation.theta_step_deg", "must lie in (0, 90]"));
        }
        if !(self.asymmetry.half_widths > 0.0 && self.asymmetry.fit_span > 0.0) {
            return Err(invalid("asymmetry.half_widths", "half_widths and fit_span must be > 0"));
        }
        let o = &self.oracle;
        if !(o.dt_fraction > 0.0 && o.dt_fraction < 1.0) {
            return Err(invalid("oracle.dt_fraction", "must lie in (0, 1)"));
        }
        if !(o.duration_s > 0.0 && o.burn_in_s >= 0.0) {
            return Err(invalid("oracle.duration_s", "duration must be > 0 and burn-in >= 0"));
        }
        if o.record_every == 0 || o.segment_length < 2 {
            return Err(invalid("oracle.segment_length", "record_every must be > 0 and segment_length >= 2"));
        }
        self.resolve().map(|_| ())
    }

    pub fn environment(&self) -> EnvironmentSpec {
        let e = &self.environment;
        EnvironmentSpec {
            pressure: e.pressure_pa,
            temperature: e.temperature_k,
            damping_slope: e.damping_slope_hz_per_pa,
            theta_pol: e.theta_pol_deg.to_radians(),
            g_total: khz(e.g_total_khz),
            s_rin: e.s_rin_per_hz,
        }
    }

    /// Angular-unit parameters at the base operating point.
    pub fn resolve(&self) -> Result<PhysicalParams, ConfigError> {
        resolve_params(&self.params, &self.environment, self.environment())
    }

    /// Parameters at each sweep value, or the base point alone.
    pub fn sweep_points(&self) -> Result<Vec<(f64, PhysicalParams)>, ConfigError> {
        let Some(s) = &self.sweep else {
            return Ok(vec![(f64::NAN, self.resolve()?)]);
        };
        sweep_values(s)?
            .into_iter()
            .map(|v| {
                let mut pc = self.params.clone();
                let mut ec = self.environment.clone();
                set_parameter(&mut pc, &mut ec, &s.parameter, v);
                let env = RunConfig { environment: ec.clone(), ..Default::default() }.environment();
                resolve_params(&pc, &ec, env).map(|p| (v, p))
            })
            .collect()
    }

    pub fn grid(&self) -> Result<FrequencyGrid, ConfigError> {
        let g = &self.grid;
        FrequencyGrid::with_step(khz(g.start_khz), khz(g.stop_khz), khz(g.step_khz))
            .map_err(|e| invalid("grid", e.to_string()))
    }

    pub fn trajectory(&self, p: &PhysicalParams) -> TrajectoryConfig {
        let o = &self.oracle;
        let dt = o.dt_fraction * TrajectoryConfig::max_dt(p);
        TrajectoryConfig {
            dt,
            n_steps: (o.duration_s / dt).round() as usize,
            seed: o.seed,
            burn_in: (o.burn_in_s / dt).round() as usize,
            record_every: o.record_every,
            scheme: o.scheme,
            allow_short: o.allow_short,
            ..Default::default()
        }
        .seed_from_env()
    }
}

fn resolve_params(
    pc: &ParamsConfig,
    ec: &EnvironmentConfig,
    env: EnvironmentSpec,
) -> Result<PhysicalParams, ConfigError> {
    let mut p = PhysicalParams {
        delta: khz(pc.detuning_khz),
        kappa: khz(pc.kappa_khz),
        omega_x0: khz(pc.omega_x_khz),
        omega_y0: khz(pc.omega_y_khz),
        gamma_mx: hz(pc.gamma_mx_hz),
        gamma_my: hz(pc.gamma_my_hz),
        g_x: khz(pc.g_x_khz),
        g_y: khz(pc.g_y_khz),
        n_th_x: pc.n_th_x,
        n_th_y: pc.n_th_y,
        gamma_nx: khz(pc.gamma_nx_khz),
        gamma_ny: khz(pc.gamma_ny_khz),
        eta: pc.eta,
        omega_lo: khz(pc.omega_lo_khz),
    };
    if ec.apply_gas {
        p = p.with_gas(&env).map_err(|e| invalid("environment", e.to_string()))?;
    }
    if ec.apply_geometry {
        p = p.with_geometry(&env).map_err(|e| invalid("environment", e.to_string()))?;
    }
    p.validate().map_err(|e| invalid("params", e.to_string()))?;
    Ok(p)
}

fn set_parameter(p: &mut ParamsConfig, e: &mut EnvironmentConfig, name: &str, v: f64) {
    let slot = match name {
        "detuning_khz" => &mut p.detuning_khz,
        "kappa_khz" => &mut p.kappa_khz,
        "omega_x_khz" => &mut p.omega_x_khz,
        "omega_y_khz" => &mut p.omega_y_khz,
        "gamma_mx_hz" => &mut p.gamma_mx_hz,
        "gamma_my_hz" => &mut p.gamma_my_hz,
        "g_x_khz" => &mut p.g_x_khz,
        "g_y_khz" => &mut p.g_y_khz,
        "n_th_x" => &mut p.n_th_x,
        "n_th_y" => &mut p.n_th_y,
        "gamma_nx_khz" => &mut p.gamma_nx_khz,
        "gamma_ny_khz" => &mut p.gamma_ny_khz,
        "eta" => &mut p.eta,
        "omega_lo_khz" => &mut p.omega_lo_khz,
        "pressure_pa" => &mut e.pressure_pa,
        _ => unreachable!("sweep parameter validated"),
    };
    *slot = v;
}

/// Sweep values from `start` to `stop` inclusive; `step` carries the sign and
/// must divide the range.
pub fn sweep_values(s: &SweepConfig) -> Result<Vec<f64>, ConfigError> {
    if !(s.start.is_finite() && s.stop.is_finite() && s.step.is_finite() && s.step != 0.0) {
        return Err(invalid("sweep.step", "start, stop and a nonzero step must be finite"));
    }
    let n = (s.stop - s.start) / s.step;
    if n < 0.0 {
        return Err(invalid("sweep.step", "sign does not lead from start to stop"));
    }
    let r = n.round();
    if (n - r).abs() > 1e-9 * r.max(1.0) {
        return Err(invalid("sweep.step", format!("does not divide the range ({n} steps)")));
    }
    Ok((0..=r as usize).map(|i| s.start + i as f64 * s.step).collect())
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    RunConfig::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        let p = c.resolve().unwrap();
        assert_eq!(p, PhysicalParams::default());
    }

    #[test]
    fn detuning_override_only() {
        let c = RunConfig::from_toml("[params]\ndetuning_khz = -170.0\n").unwrap();
        let p = c.resolve().unwrap();
        assert_eq!(p.delta, khz(-170.0));
        assert_eq!(p.kappa, PhysicalParams::default().kappa);
    }

    #[test]
    fn negative_kappa_names_the_field() {
        let e = RunConfig::from_toml("[params]\nkappa_khz = -1.0\n").unwrap_err();
        assert!(matches!(&e, ConfigError::Invalid { field, .. } if field == "params.kappa_khz"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_toml("[params]\nkapa_khz = 1.0\n"), Err(ConfigError::Parse(_))));
        assert!(matches!(RunConfig::from_toml("[nonsense]\n"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn sweep_step_must_divide() {
        let bad = "[sweep]\nparameter = \"detuning_khz\"\nstart = -260.0\nstop = -60.0\nstep = 30.0\n";
        assert!(matches!(RunConfig::from_toml(bad), Err(ConfigError::Invalid { field, .. }) if field == "sweep.step"));
        let ok = "[sweep]\nparameter = \"detuning_khz\"\nstart = -260.0\nstop = -60.0\nstep = 50.0\n";
        let c = RunConfig::from_toml(ok).unwrap();
        let pts = c.sweep_points().unwrap();
        assert_eq!(pts.len(), 5);
        assert_eq!(pts[4].1.delta, khz(-60.0));
    }

    #[test]
    fn unknown_sweep_parameter() {
        let bad = "[sweep]\nparameter = \"colour\"\nstart = 0.0\nstop = 1.0\nstep = 1.0\n";
        assert!(
            matches!(RunConfig::from_toml(bad), Err(ConfigError::Invalid { field, .. }) if field == "sweep.parameter")
        );
    }

    #[test]
    fn round_trip() {
        let text = "[params]\ndetuning_khz = -140.0\n[sweep]\nparameter = \"pressure_pa\"\nstart = 1e-4\nstop = 3e-4\nstep = 1e-4\n[fit]\ninput = \"spec.csv\"\n";
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn gas_environment_sets_damping() {
        let c = RunConfig::from_toml("[environment]\npressure_pa = 6e-3\napply_gas = true\n").unwrap();
        let p = c.resolve().unwrap();
        assert!((p.gamma_mx - hz(0.078)).abs() < 1e-12);
    }
}
