//! Physical parameters of the cavity + 2D-oscillator system and the closed-form
//! derivations that feed them (coupling geometry, gas damping, bath occupation,
//! decoherence budget).
//!
//! Every rate and frequency stored here is an angular frequency in rad/s.
//! Conversions from the ordinary-frequency values used in configuration files
//! and CSV output go through [`units`].

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};

/// Physical constants (CODATA, 12 significant digits).
pub mod constants {
    /// Reduced Planck constant, J s.
    pub const HBAR: f64 = 1.054_571_817_65e-34;
    /// Boltzmann constant, J/K.
    pub const K_B: f64 = 1.380_649_000_00e-23;
}

/// Ordinary <-> angular frequency helpers.
pub mod units {
    use std::f64::consts::TAU;

    #[inline]
    pub fn hz(f: f64) -> f64 {
        TAU * f
    }

    #[inline]
    pub fn khz(f: f64) -> f64 {
        TAU * 1e3 * f
    }

    #[inline]
    pub fn to_hz(omega: f64) -> f64 {
        omega / TAU
    }

    #[inline]
    pub fn to_khz(omega: f64) -> f64 {
        omega / (TAU * 1e3)
    }
}

/// One of the two in-plane mechanical modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    X,
    Y,
}

impl Mode {
    pub const BOTH: [Mode; 2] = [Mode::X, Mode::Y];
}

/// Full parameter set of the linearised three-oscillator model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Laser detuning from the cavity, negative for red detuning.
    pub delta: f64,
    /// Cavity amplitude decay rate.
    pub kappa: f64,
    pub omega_x0: f64,
    pub omega_y0: f64,
    pub gamma_mx: f64,
    pub gamma_my: f64,
    pub g_x: f64,
    pub g_y: f64,
    pub n_th_x: f64,
    pub n_th_y: f64,
    /// Extra (pressure independent) heating rates, e.g. photon recoil.
    pub gamma_nx: f64,
    pub gamma_ny: f64,
    /// Total detection efficiency.
    pub eta: f64,
    /// Heterodyne local-oscillator offset.
    pub omega_lo: f64,
}

impl Default for PhysicalParams {
    /// Reference operating point: κ/2π = 57 kHz,
    /// Ω_X/2π = 132 kHz, Ω_Y/2π = 117 kHz, Γ_m/2π = 0.1 Hz, g = 2π·(29, 9) kHz,
    /// plus room-temperature bath, recoil heating of 2π·(8.9, 4.8) kHz,
    /// η = 0.32 and a 1.1 MHz local oscillator.
    fn default() -> Self {
        use units::{hz, khz};
        let omega_x0 = khz(132.0);
        let omega_y0 = khz(117.0);
        Self {
            delta: khz(-120.0),
            kappa: khz(57.0),
            omega_x0,
            omega_y0,
            gamma_mx: hz(0.1),
            gamma_my: hz(0.1),
            g_x: khz(29.0),
            g_y: khz(9.0),
            n_th_x: thermal_occupation(omega_x0, 293.0).unwrap_or(0.0),
            n_th_y: thermal_occupation(omega_y0, 293.0).unwrap_or(0.0),
            gamma_nx: khz(8.9),
            gamma_ny: khz(4.8),
            eta: 0.32,
            omega_lo: khz(1100.0),
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        fn check(field: &'static str, ok: bool, reason: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter { field, reason: reason.to_string() })
            }
        }
        let fields = [
            ("delta", self.delta),
            ("kappa", self.kappa),
            ("omega_x0", self.omega_x0),
            ("omega_y0", self.omega_y0),
            ("gamma_mx", self.gamma_mx),
            ("gamma_my", self.gamma_my),
            ("g_x", self.g_x),
            ("g_y", self.g_y),
            ("n_th_x", self.n_th_x),
            ("n_th_y", self.n_th_y),
            ("gamma_nx", self.gamma_nx),
            ("gamma_ny", self.gamma_ny),
            ("eta", self.eta),
            ("omega_lo", self.omega_lo),
        ];
        for (name, v) in fields {
            check(name, v.is_finite(), "must be finite")?;
        }
        check("kappa", self.kappa > 0.0, "must be > 0")?;
        check("omega_x0", self.omega_x0 > 0.0, "must be > 0")?;
        check("omega_y0", self.omega_y0 > 0.0, "must be > 0")?;
        check("gamma_mx", self.gamma_mx >= 0.0, "must be >= 0")?;
        check("gamma_my", self.gamma_my >= 0.0, "must be >= 0")?;
        check("g_x", self.g_x >= 0.0, "must be >= 0")?;
        check("g_y", self.g_y >= 0.0, "must be >= 0")?;
        check("n_th_x", self.n_th_x >= 0.0, "must be >= 0")?;
        check("n_th_y", self.n_th_y >= 0.0, "must be >= 0")?;
        check("gamma_nx", self.gamma_nx >= 0.0, "must be >= 0")?;
        check("gamma_ny", self.gamma_ny >= 0.0, "must be >= 0")?;
        check("eta", self.eta > 0.0 && self.eta <= 1.0, "must lie in (0, 1]")?;
        Ok(())
    }

    pub fn omega0(&self, mode: Mode) -> f64 {
        match mode {
            Mode::X => self.omega_x0,
            Mode::Y => self.omega_y0,
        }
    }

    pub fn gamma_m(&self, mode: Mode) -> f64 {
        match mode {
            Mode::X => self.gamma_mx,
            Mode::Y => self.gamma_my,
        }
    }

    pub fn g(&self, mode: Mode) -> f64 {
        match mode {
            Mode::X => self.g_x,
            Mode::Y => self.g_y,
        }
    }

    pub fn n_th(&self, mode: Mode) -> f64 {
        match mode {
            Mode::X => self.n_th_x,
            Mode::Y => self.n_th_y,
        }
    }

    pub fn gamma_n(&self, mode: Mode) -> f64 {
        match mode {
            Mode::X => self.gamma_nx,
            Mode::Y => self.gamma_ny,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_couplings(mut self, g_x: f64, g_y: f64) -> Self {
        self.g_x = g_x;
        self.g_y = g_y;
        self
    }

    /// Sets gas damping and bath occupation of both modes from `env`.
    pub fn with_gas(mut self, env: &EnvironmentSpec) -> Result<Self> {
        env.validate()?;
        let gamma = gas_damping(env.pressure, env.damping_slope);
        self.gamma_mx = gamma;
        self.gamma_my = gamma;
        self.n_th_x = thermal_occupation(self.omega_x0, env.temperature)?;
        self.n_th_y = thermal_occupation(self.omega_y0, env.temperature)?;
        Ok(self)
    }

    /// Sets g_x, g_y from the bare scattering rate and polarisation angle in `env`.
    pub fn with_geometry(mut self, env: &EnvironmentSpec) -> Result<Self> {
        let (gx, gy) = derive_couplings(env.g_total, env.theta_pol)?;
        self.g_x = gx;
        self.g_y = gy;
        Ok(self)
    }
}

/// Laboratory conditions from which damping, occupations and couplings derive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    /// Background gas pressure, Pa.
    pub pressure: f64,
    /// Bath temperature, K.
    pub temperature: f64,
    /// Γ_m/(2π P) in Hz/Pa.
    pub damping_slope: f64,
    /// Angle between cavity axis and tweezer polarisation, rad.
    pub theta_pol: f64,
    /// Bare coherent-scattering coupling rate, rad/s.
    pub g_total: f64,
    /// Relative intensity noise S_ε, 1/Hz.
    pub s_rin: f64,
}

impl Default for EnvironmentSpec {
    fn default() -> Self {
        Self {
            pressure: 3e-5,
            temperature: 293.0,
            damping_slope: 13.0,
            theta_pol: 72f64.to_radians(),
            g_total: units::khz(30.0),
            s_rin: 2.3e-14,
        }
    }
}

impl EnvironmentSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.pressure >= 0.0 && self.pressure.is_finite()) {
            return Err(Error::InvalidParameter { field: "pressure", reason: "must be >= 0".into() });
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidParameter { field: "temperature", reason: "must be > 0".into() });
        }
        if !(0.0..=FRAC_PI_2).contains(&self.theta_pol) {
            return Err(Error::InvalidParameter { field: "theta_pol", reason: "must lie in [0, pi/2]".into() });
        }
        if !(self.damping_slope >= 0.0 && self.g_total >= 0.0 && self.s_rin >= 0.0) {
            return Err(Error::InvalidParameter {
                field: "damping_slope/g_total/s_rin",
                reason: "must be >= 0".into(),
            });
        }
        Ok(())
    }
}

/// Projects the bare coupling onto the two mechanical axes:
/// `g_x = g sin²θ`, `g_y = g cosθ sinθ`.
pub fn derive_couplings(g_total: f64, theta_pol: f64) -> Result<(f64, f64)> {
    if !(0.0..=FRAC_PI_2).contains(&theta_pol) {
        return Err(Error::Domain(format!("theta_pol = {theta_pol} outside [0, pi/2]")));
    }
    if !(g_total >= 0.0) {
        return Err(Error::Domain(format!("g_total = {g_total} must be >= 0")));
    }
    let (s, c) = theta_pol.sin_cos();
    Ok((g_total * s * s, g_total * c * s))
}

/// Gas damping rate (rad/s) for a pressure in Pa and slope Γ_m/(2πP) in Hz/Pa.
pub fn gas_damping(pressure: f64, damping_slope: f64) -> f64 {
    TAU * damping_slope * pressure
}

/// Bose–Einstein occupation of a bath mode at angular frequency `omega`.
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("omega = {omega} must be > 0")));
    }
    if !(temperature >= 0.0) {
        return Err(Error::Domain(format!("temperature = {temperature} must be >= 0")));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = constants::HBAR * omega / (constants::K_B * temperature);
    // exp overflows near x = 709; the occupation is already below 1e-300 there.
    if x > 700.0 {
        return Ok(0.0);
    }
    Ok(1.0 / x.exp_m1())
}

/// Parametric heating from laser intensity noise, `0.25 Ω² S_ε` (s⁻¹).
pub fn rin_heating(omega: f64, s_rin: f64) -> f64 {
    0.25 * omega * omega * s_rin
}

/// Decoherence rates acting on one mechanical mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceBudget {
    pub mode: Mode,
    /// n̄_th Γ_m
    pub thermal: f64,
    /// Γ_n (photon recoil and other pressure-independent heating)
    pub recoil: f64,
    /// Γ_RIN, zero unless requested
    pub rin: f64,
    pub total: f64,
    /// 2 g_j, the swap rate compared against `total`
    pub swap_rate: f64,
    /// `2 g_j > total`
    pub coherent: bool,
}

pub fn decoherence_budget(
    params: &PhysicalParams,
    env: &EnvironmentSpec,
    mode: Mode,
    include_rin: bool,
) -> Result<DecoherenceBudget> {
    params.validate()?;
    let thermal = params.n_th(mode) * params.gamma_m(mode);
    let recoil = params.gamma_n(mode);
    let rin = if include_rin { rin_heating(params.omega0(mode), env.s_rin) } else { 0.0 };
    let total = thermal + recoil + rin;
    let swap_rate = 2.0 * params.g(mode);
    Ok(DecoherenceBudget { mode, thermal, recoil, rin, total, swap_rate, coherent: swap_rate > total })
}

/// Wraps an angle into (−π/2, π/2].
pub(crate) fn wrap_half_turn(theta: f64) -> f64 {
    let mut t = theta % PI;
    if t <= -FRAC_PI_2 {
        t += PI;
    } else if t > FRAC_PI_2 {
        t -= PI;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use units::{hz, khz};

    #[test]
    fn couplings_at_measured_geometry() {
        let (gx, gy) = derive_couplings(khz(30.0), 72f64.to_radians()).unwrap();
        // 2 g_X quoted as 2π·54 kHz
        assert!((2.0 * units::to_khz(gx) - 54.0).abs() < 0.5);
        let expect_y = 30.0 * 72f64.to_radians().cos() * 72f64.to_radians().sin();
        assert_relative_eq!(units::to_khz(gy), expect_y, max_relative = 1e-12);
        assert_relative_eq!(units::to_khz(gy), 8.817, epsilon = 1e-3);
    }

    #[test]
    fn couplings_vanish_at_zero_angle() {
        assert_eq!(derive_couplings(khz(10.0), 0.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn couplings_reject_out_of_range_angle() {
        assert!(matches!(derive_couplings(1.0, -0.1), Err(Error::Domain(_))));
        assert!(matches!(derive_couplings(1.0, 1.6), Err(Error::Domain(_))));
    }

    #[test]
    fn gas_damping_values() {
        assert_relative_eq!(gas_damping(6e-3, 13.0), hz(0.078), max_relative = 1e-12);
        assert_eq!(gas_damping(0.0, 13.0), 0.0);
        assert_relative_eq!(gas_damping(1.0, 13.0), hz(13.0), max_relative = 1e-15);
    }

    #[test]
    fn bath_occupation_room_temperature() {
        let n = thermal_occupation(khz(131.6), 293.0).unwrap();
        assert_relative_eq!(n, 4.64e7, max_relative = 2e-3);
    }

    #[test]
    fn bath_occupation_is_one_at_ln2() {
        let t = 10.0;
        let omega = constants::K_B * t * 2f64.ln() / constants::HBAR;
        assert_relative_eq!(thermal_occupation(omega, t).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn bath_occupation_cold_limit() {
        assert_eq!(thermal_occupation(khz(131.6), 0.0).unwrap(), 0.0);
        assert_eq!(thermal_occupation(khz(131.6), 1e-12).unwrap(), 0.0);
        assert!(thermal_occupation(0.0, 1.0).is_err());
    }

    #[test]
    fn recoil_terms_enter_budget() {
        let env = EnvironmentSpec::default();
        let p = PhysicalParams::default().with_gas(&env).unwrap();
        let bx = decoherence_budget(&p, &env, Mode::X, false).unwrap();
        let by = decoherence_budget(&p, &env, Mode::Y, false).unwrap();
        assert_relative_eq!(bx.recoil, khz(8.9));
        assert_relative_eq!(by.recoil, khz(4.8));
        assert_relative_eq!(bx.total, bx.thermal + bx.recoil, max_relative = 1e-15);
        assert_eq!(bx.rin, 0.0);
    }

    #[test]
    fn empty_budget_is_coherent() {
        let env = EnvironmentSpec { s_rin: 0.0, ..Default::default() };
        let p = PhysicalParams {
            gamma_mx: 0.0,
            gamma_my: 0.0,
            gamma_nx: 0.0,
            gamma_ny: 0.0,
            g_x: 1.0,
            ..Default::default()
        };
        let b = decoherence_budget(&p, &env, Mode::X, true).unwrap();
        assert_eq!(b.total, 0.0);
        assert!(b.coherent);
    }

    #[test]
    fn rin_heating_is_negligible() {
        // below 1 Hz for the measured S_ε
        let r = rin_heating(khz(131.6), 2.3e-14);
        assert!(r < 1.0 && r > 0.0);
    }

    #[test]
    fn validation_names_field() {
        let p = PhysicalParams { kappa: -1.0, ..Default::default() };
        match p.validate() {
            Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "kappa"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrap_angles() {
        assert_relative_eq!(wrap_half_turn(PI), 0.0, epsilon = 1e-15);
        assert_relative_eq!(wrap_half_turn(-FRAC_PI_2), FRAC_PI_2, epsilon = 1e-15);
        assert_relative_eq!(wrap_half_turn(0.3 + PI), 0.3, epsilon = 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn coupling_norm_identity(g in 0.0f64..1e6, theta in 0.0f64..FRAC_PI_2) {
                let (gx, gy) = derive_couplings(g, theta).unwrap();
                let s = theta.sin();
                let lhs = gx * gx + gy * gy;
                let rhs = g * g * s * s;
                prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300) + 1e-300);
            }

            #[test]
            fn damping_is_linear(p in 0.0f64..1e3, slope in 0.0f64..100.0) {
                prop_assert_eq!(gas_damping(2.0 * p, slope), 2.0 * gas_damping(p, slope));
            }

            #[test]
            fn occupation_monotone(f in 1e3f64..1e7, t in 1.0f64..400.0) {
                let w = TAU * f;
                let n = thermal_occupation(w, t).unwrap();
                prop_assert!(thermal_occupation(w, t * 1.1).unwrap() >= n);
                prop_assert!(thermal_occupation(w * 1.1, t).unwrap() <= n);
            }

            #[test]
            fn occupation_classical_limit(x in 1e-6f64..0.01) {
                let t = 300.0;
                let w = x * constants::K_B * t / constants::HBAR;
                let n = thermal_occupation(w, t).unwrap();
                prop_assert!((n * x - 1.0).abs() < 0.01);
            }
        }
    }
}
