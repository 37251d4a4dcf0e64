//! Linearised dynamics: the 6×6 drift matrix, its eigenstructure, dispersion
//! sweeps and the weak/strong coupling diagnostics built on top of them.
//!
//! Operator ordering everywhere is `(a, a†, b_X, b_X†, b_Y, b_Y†)`; the
//! equations of motion read `dV/dt = −D V + V_in`.

mod coupling;
mod dispersion;
mod eigen;

pub use coupling::{
    bright_dark_decompose, strong_coupling_thresholds, weak_coupling_approx, BrightDark, ThresholdReport, WeakCoupling,
};
pub use dispersion::{dispersion, dispersion_sweep, BareCrossing, DispersionCurve, DispersionPoint};
pub use eigen::{eigensolve, BranchLabel, CVector6, Composition, ConjugatePair, EigenSolution};

use nalgebra::Matrix6;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::PhysicalParams;

pub type CMatrix6 = Matrix6<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// The drift matrix **D**.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix(CMatrix6);

impl DriftMatrix {
    pub fn matrix(&self) -> &CMatrix6 {
        &self.0
    }

    /// 1-based entry access, matching the usual row/column labelling of **D**.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row - 1, col - 1)]
    }

    /// `−iΩ·I + D`
    pub fn system_matrix(&self, omega: f64) -> CMatrix6 {
        let mut m = self.0;
        for k in 0..6 {
            m[(k, k)] -= I * omega;
        }
        m
    }

    /// Real part of the trace, `κ + Γ_mX + Γ_mY`.
    pub fn trace_re(&self) -> f64 {
        self.0.trace().re
    }
}

impl From<CMatrix6> for DriftMatrix {
    fn from(m: CMatrix6) -> Self {
        Self(m)
    }
}

pub fn build_drift_matrix(p: &PhysicalParams) -> DriftMatrix {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let (gx, gy) = (p.g_x, p.g_y);
    let mut d = CMatrix6::zeros();

    d[(0, 0)] = c(p.kappa / 2.0, -p.delta);
    d[(1, 1)] = c(p.kappa / 2.0, p.delta);
    for col in [2, 3] {
        d[(0, col)] = c(0.0, -gx);
        d[(1, col)] = c(0.0, gx);
    }
    for col in [4, 5] {
        d[(0, col)] = c(0.0, -gy);
        d[(1, col)] = c(0.0, gy);
    }

    for col in [0, 1] {
        d[(2, col)] = c(0.0, -gx);
        d[(3, col)] = c(0.0, gx);
        d[(4, col)] = c(0.0, -gy);
        d[(5, col)] = c(0.0, gy);
    }
    d[(2, 2)] = c(p.gamma_mx / 2.0, p.omega_x0);
    d[(3, 3)] = c(p.gamma_mx / 2.0, -p.omega_x0);
    d[(4, 4)] = c(p.gamma_my / 2.0, p.omega_y0);
    d[(5, 5)] = c(p.gamma_my / 2.0, -p.omega_y0);

    DriftMatrix(d)
}

/// True iff every eigenvalue of **D** has a strictly positive real part.
pub fn stability_check(d: &DriftMatrix) -> bool {
    match eigen::eigenvalues(d) {
        Ok(ev) => ev.iter().all(|l| l.re > 0.0),
        Err(_) => false,
    }
}

/// Like [`stability_check`] but reports the offending eigenvalue.
pub fn ensure_stable(d: &DriftMatrix) -> Result<()> {
    let ev = eigen::eigenvalues(d)?;
    match ev.iter().min_by(|a, b| a.re.total_cmp(&b.re)) {
        Some(l) if l.re <= 0.0 => Err(Error::Unstable { re: l.re, im: l.im }),
        _ => Ok(()),
    }
}
