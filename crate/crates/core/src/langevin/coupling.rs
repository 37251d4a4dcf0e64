use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{decoherence_budget, EnvironmentSpec, Mode, PhysicalParams};

/// Optical-spring frequency and damping of one mode, to second order in `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakCoupling {
    pub omega_eff: f64,
    /// Full energy damping rate; the eigenvalue real part is half of this.
    pub gamma_eff: f64,
}

pub fn weak_coupling_approx(p: &PhysicalParams, mode: Mode) -> WeakCoupling {
    let (g, w0, gm) = (p.g(mode), p.omega0(mode), p.gamma_m(mode));
    let k2 = p.kappa * p.kappa / 4.0;
    let minus = p.delta - w0;
    let plus = p.delta + w0;
    let lm = minus * minus + k2;
    let lp = plus * plus + k2;
    WeakCoupling {
        omega_eff: w0 + g * g * (minus / lm + plus / lp),
        gamma_eff: gm + g * g * (p.kappa / lp - p.kappa / lm),
    }
}

/// Normalised mechanical weights `(X, Y)` of the bright and dark combinations.
///
/// The dark mode is the orthogonal complement of the bright one, so the pair
/// is orthonormal for any ratio of couplings; its overall sign is arbitrary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrightDark {
    pub bright: (f64, f64),
    pub dark: (f64, f64),
}

pub fn bright_dark_decompose(p: &PhysicalParams) -> Result<BrightDark> {
    let norm = p.g_x.hypot(p.g_y);
    if !(norm > 0.0) {
        return Err(Error::Domain("bright/dark modes need g_x² + g_y² > 0".into()));
    }
    let (x, y) = (p.g_x / norm, p.g_y / norm);
    Ok(BrightDark { bright: (x, y), dark: (y, -x) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// `4 g_X ≥ κ` and `4 g_X ≥ Γ_mX`
    pub single_mode_x: bool,
    pub single_mode_y: bool,
    /// `g_X g_Y > κ²/32`
    pub two_mode: bool,
    /// `2 g_j > Γ_th,j` for each mode
    pub coherent_x: bool,
    pub coherent_y: bool,
}

pub fn strong_coupling_thresholds(p: &PhysicalParams, env: &EnvironmentSpec) -> Result<ThresholdReport> {
    p.validate()?;
    let single = |m: Mode| {
        let g4 = 4.0 * p.g(m);
        g4 >= p.kappa && g4 >= p.gamma_m(m)
    };
    let coherent = |m: Mode| decoherence_budget(p, env, m, false).map(|b| b.coherent);
    Ok(ThresholdReport {
        single_mode_x: single(Mode::X),
        single_mode_y: single(Mode::Y),
        two_mode: p.g_x * p.g_y > p.kappa * p.kappa / 32.0,
        coherent_x: coherent(Mode::X)?,
        coherent_y: coherent(Mode::Y)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::langevin::{build_drift_matrix, eigensolve};
    use crate::model::units::khz;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn no_spring_without_coupling() {
        let p = PhysicalParams::default().with_couplings(0.0, 0.0);
        for m in Mode::BOTH {
            let w = weak_coupling_approx(&p, m);
            assert_eq!(w.omega_eff, p.omega0(m));
            assert_eq!(w.gamma_eff, p.gamma_m(m));
        }
    }

    #[test]
    fn spring_cancels_at_zero_detuning() {
        let p = PhysicalParams::default().with_delta(0.0);
        let w = weak_coupling_approx(&p, Mode::X);
        assert_relative_eq!(w.omega_eff, p.omega_x0, max_relative = 1e-15);
        assert_relative_eq!(w.gamma_eff, p.gamma_mx, max_relative = 1e-9);
    }

    #[test]
    fn red_detuning_softens_and_damps() {
        let p = PhysicalParams::default().with_couplings(khz(5.0), khz(5.0)).with_delta(khz(-200.0));
        let w = weak_coupling_approx(&p, Mode::X);
        assert!(w.omega_eff < p.omega_x0);
        assert!(w.gamma_eff > p.gamma_mx);
    }

    #[test]
    fn approx_matches_eigensolve_when_weak() {
        let p = PhysicalParams::default().with_couplings(khz(57.0 / 40.0), khz(57.0 / 40.0)).with_delta(khz(-200.0));
        let s = eigensolve(&build_drift_matrix(&p)).unwrap();
        for m in Mode::BOTH {
            let w = weak_coupling_approx(&p, m);
            let f = s
                .frequencies()
                .into_iter()
                .min_by(|a, b| (a - w.omega_eff).abs().total_cmp(&(b - w.omega_eff).abs()))
                .unwrap();
            assert!((f - w.omega_eff).abs() < 1e-3 * p.omega0(m));
        }
    }

    #[test]
    fn symmetric_bright_dark() {
        let p = PhysicalParams::default().with_couplings(khz(9.0), khz(9.0));
        let bd = bright_dark_decompose(&p).unwrap();
        assert_relative_eq!(bd.bright.0, FRAC_1_SQRT_2, max_relative = 1e-15);
        assert_relative_eq!(bd.dark.0, FRAC_1_SQRT_2, max_relative = 1e-15);
        assert_relative_eq!(bd.dark.1, -FRAC_1_SQRT_2, max_relative = 1e-15);
    }

    #[test]
    fn single_axis_bright_dark() {
        let p = PhysicalParams::default().with_couplings(khz(9.0), 0.0);
        let bd = bright_dark_decompose(&p).unwrap();
        assert_eq!(bd.bright, (1.0, 0.0));
        assert_eq!(bd.dark.0, 0.0);
        assert_eq!(bd.dark.1.abs(), 1.0);
    }

    #[test]
    fn measured_couplings_bright_weights() {
        let p = PhysicalParams::default().with_couplings(khz(27.1), khz(8.82));
        let bd = bright_dark_decompose(&p).unwrap();
        assert!((bd.bright.0 - 0.951).abs() < 1e-3);
        assert!((bd.bright.1 - 0.310).abs() < 1e-3);
    }

    #[test]
    fn bright_dark_orthonormal() {
        for (gx, gy) in [(29.0, 9.0), (1.0, 5.0), (3.0, 3.0)] {
            let p = PhysicalParams::default().with_couplings(khz(gx), khz(gy));
            let bd = bright_dark_decompose(&p).unwrap();
            let dot = bd.bright.0 * bd.dark.0 + bd.bright.1 * bd.dark.1;
            assert!(dot.abs() < 1e-15);
            assert_relative_eq!(bd.dark.0.hypot(bd.dark.1), 1.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn bright_dark_needs_coupling() {
        let p = PhysicalParams::default().with_couplings(0.0, 0.0);
        assert!(bright_dark_decompose(&p).is_err());
    }

    #[test]
    fn threshold_predicates() {
        let env = EnvironmentSpec::default();
        let p = PhysicalParams::default().with_couplings(khz(27.1), khz(8.82));
        let r = strong_coupling_thresholds(&p, &env).unwrap();
        assert!(r.single_mode_x);
        assert!(!r.single_mode_y);
        assert!(r.two_mode);

        let edge = p.with_couplings(p.kappa / 4.0, p.kappa / 8.0);
        assert_eq!(edge.g_x * edge.g_y, p.kappa * p.kappa / 32.0);
        assert!(!strong_coupling_thresholds(&edge, &env).unwrap().two_mode);
    }
}
