//! Stationary spectral densities of the linearised model: output matrix,
//! generic `S_ij`, heterodyne spectrum, mechanical spectra in a rotated frame,
//! occupations, the coldest direction and the commutator sum rule.
//!
//! Spectra are functions of a signed angular frequency. For the heterodyne
//! spectrum that frequency is the offset `Ω − Ω_LO` from the local oscillator.

mod grid;
mod sideband;

pub use grid::FrequencyGrid;
pub use sideband::{
    analyze_sideband_spectrum, analyze_sidebands, classical_reference, filtering_function, sideband_asymmetry,
    SidebandAnalysis, SidebandOptions, SidebandPeak,
};

use nalgebra::Matrix6;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::langevin::{build_drift_matrix, ensure_stable, CMatrix6, DriftMatrix};
use crate::model::{wrap_half_turn, PhysicalParams};

/// Default edge/peak ratio above which a mechanical spectrum is rejected as truncated.
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumKind {
    Heterodyne,
    Saa,
    SadagAdag,
    Sbb,
    SbdagBdag,
    SxyCross,
    /// Generic `S_{i,j}` (1-based).
    Element(usize, usize),
    /// Shot-noise-subtracted heterodyne spectrum times the cavity filtering function.
    Filtered,
    /// Low-frequency sideband expected for classical, symmetric noise.
    ClassicalReference,
    /// Averaged periodogram of a time series.
    Periodogram,
    Synthetic,
}

impl SpectrumKind {
    pub fn as_str(&self) -> String {
        match self {
            SpectrumKind::Heterodyne => "s_out".into(),
            SpectrumKind::Saa => "s_aa".into(),
            SpectrumKind::SadagAdag => "s_adag_adag".into(),
            SpectrumKind::Sbb => "s_bb".into(),
            SpectrumKind::SbdagBdag => "s_bdag_bdag".into(),
            SpectrumKind::SxyCross => "s_xy".into(),
            SpectrumKind::Element(i, j) => format!("s_{i}{j}"),
            SpectrumKind::Filtered => "s_filtered".into(),
            SpectrumKind::ClassicalReference => "s_classical".into(),
            SpectrumKind::Periodogram => "psd".into(),
            SpectrumKind::Synthetic => "synthetic".into(),
        }
    }
}

/// A real spectral density sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub grid: FrequencyGrid,
    pub kind: SpectrumKind,
    pub values: Vec<f64>,
    pub params: Option<PhysicalParams>,
    /// Frame angle for mechanical spectra.
    pub theta: Option<f64>,
}

impl Spectrum {
    pub fn new(grid: FrequencyGrid, kind: SpectrumKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("{} values for a {}-point grid", values.len(), grid.len())));
        }
        Ok(Self { grid, kind, values, params: None, theta: None })
    }

    pub fn with_params(mut self, params: PhysicalParams, theta: Option<f64>) -> Self {
        self.params = Some(params);
        self.theta = theta;
        self
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.grid.to_vec()
    }

    /// `∫ S dΩ / 2π` over the whole grid.
    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn integral_range(&self, lo: f64, hi: f64) -> f64 {
        self.grid.integrate_range(&self.values, lo, hi)
    }

    /// Location and value of the largest sample.
    pub fn peak(&self) -> (f64, f64) {
        let (i, v) =
            self.values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("grids have at least two points");
        (self.grid.at(i), *v)
    }

    /// Largest edge-to-peak magnitude ratio.
    pub fn tail_ratio(&self) -> f64 {
        let peak = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let edge = self.values[0].abs().max(self.values[self.values.len() - 1].abs());
        if peak > 0.0 {
            edge / peak
        } else {
            0.0
        }
    }

    pub fn check_tails(&self, threshold: f64) -> Result<()> {
        let ratio = self.tail_ratio();
        if ratio > threshold {
            Err(Error::GridTooNarrow { ratio, threshold })
        } else {
            Ok(())
        }
    }

    /// Centred moving average over `width` (rad/s). For display only.
    pub fn boxcar(&self, width: f64) -> Spectrum {
        let half = ((width / self.grid.step()) / 2.0).floor() as usize;
        let n = self.values.len();
        let mut prefix = vec![0.0; n + 1];
        for (i, v) in self.values.iter().enumerate() {
            prefix[i + 1] = prefix[i] + v;
        }
        let values = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(half);
                let hi = (i + half).min(n - 1);
                (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
            })
            .collect();
        Spectrum { values, ..self.clone() }
    }
}

/// A complex-valued spectrum, e.g. a cross-spectrum or a raw `S_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    pub grid: FrequencyGrid,
    pub kind: SpectrumKind,
    pub values: Vec<Complex64>,
    pub params: PhysicalParams,
    pub theta: f64,
}

impl ComplexSpectrum {
    pub fn integral(&self) -> Complex64 {
        let re: Vec<f64> = self.values.iter().map(|z| z.re).collect();
        let im: Vec<f64> = self.values.iter().map(|z| z.im).collect();
        Complex64::new(self.grid.integrate(&re), self.grid.integrate(&im))
    }

    pub fn real_part(&self, kind: SpectrumKind) -> Spectrum {
        Spectrum {
            grid: self.grid,
            kind,
            values: self.values.iter().map(|z| z.re).collect(),
            params: Some(self.params),
            theta: Some(self.theta),
        }
    }
}

/// Coefficients of the five non-vanishing input-noise correlators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseWeights {
    /// Cavity vacuum, `κ`.
    pub kappa: f64,
    /// `Γ_mX (n̄_X + 1) + Γ_nX`
    pub x_up: f64,
    /// `Γ_mX n̄_X + Γ_nX`
    pub x_down: f64,
    pub y_up: f64,
    pub y_down: f64,
}

impl NoiseWeights {
    pub fn quantum(p: &PhysicalParams) -> Self {
        let down = |gm: f64, n: f64, gn: f64| gm * n + gn;
        Self {
            kappa: p.kappa,
            x_up: p.gamma_mx * (p.n_th_x + 1.0) + p.gamma_nx,
            x_down: down(p.gamma_mx, p.n_th_x, p.gamma_nx),
            y_up: p.gamma_my * (p.n_th_y + 1.0) + p.gamma_ny,
            y_down: down(p.gamma_my, p.n_th_y, p.gamma_ny),
        }
    }

    /// Classical limit: no cavity vacuum, symmetric `Γ_m n̄ + Γ_n` mechanical noise.
    pub fn classical(p: &PhysicalParams) -> Self {
        let x = p.gamma_mx * p.n_th_x + p.gamma_nx;
        let y = p.gamma_my * p.n_th_y + p.gamma_ny;
        Self { kappa: 0.0, x_up: x, x_down: x, y_up: y, y_down: y }
    }
}

/// Frame rotation and cavity-port scaling applied on the left of the response.
fn rotation(kappa: f64, theta: f64) -> CMatrix6 {
    let (s, c) = theta.sin_cos();
    let sk = kappa.sqrt();
    let r = Matrix6::new(
        sk, 0.0, 0.0, 0.0, 0.0, 0.0, //
        0.0, sk, 0.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, c, 0.0, s, 0.0, //
        0.0, 0.0, 0.0, c, 0.0, s, //
        0.0, 0.0, -s, 0.0, c, 0.0, //
        0.0, 0.0, 0.0, -s, 0.0, c,
    );
    r.map(|x| Complex64::new(x, 0.0))
}

struct OutputMap {
    drift: DriftMatrix,
    rot: CMatrix6,
    inv_sqrt_kappa: f64,
}

impl OutputMap {
    fn new(p: &PhysicalParams, theta: f64) -> Result<Self> {
        p.validate()?;
        let drift = build_drift_matrix(p);
        ensure_stable(&drift)?;
        Ok(Self { drift, rot: rotation(p.kappa, theta), inv_sqrt_kappa: 1.0 / p.kappa.sqrt() })
    }

    fn at(&self, omega: f64) -> Result<CMatrix6> {
        let inv = self.drift.system_matrix(omega).lu().try_inverse().ok_or(Error::Singular { omega })?;
        let mut o = self.rot * inv;
        o[(0, 0)] -= self.inv_sqrt_kappa;
        o[(1, 1)] -= self.inv_sqrt_kappa;
        Ok(o)
    }
}

/// `O(Ω) = R_θ (−iΩ I + D)⁻¹ − diag(1/√κ, 1/√κ, 0, 0, 0, 0)`.
pub fn output_matrix(p: &PhysicalParams, theta: f64, omega: f64) -> Result<CMatrix6> {
    OutputMap::new(p, theta)?.at(omega)
}

/// One term sum of the generic spectrum, zero-based indices.
fn element(om: &CMatrix6, op: &CMatrix6, i: usize, j: usize, w: &NoiseWeights) -> Complex64 {
    om[(i, 0)] * op[(j, 1)] * w.kappa
        + om[(i, 2)] * op[(j, 3)] * w.x_up
        + om[(i, 3)] * op[(j, 2)] * w.x_down
        + om[(i, 4)] * op[(j, 5)] * w.y_up
        + om[(i, 5)] * op[(j, 4)] * w.y_down
}

fn check_index(k: usize) -> Result<usize> {
    if (1..=6).contains(&k) {
        Ok(k - 1)
    } else {
        Err(Error::IndexOutOfRange(k))
    }
}

/// Evaluates several `S_ij` (1-based) at each frequency, sharing the matrix inversions.
pub(crate) fn elements(
    p: &PhysicalParams,
    theta: f64,
    freqs: &[f64],
    pairs: &[(usize, usize)],
    w: &NoiseWeights,
) -> Result<Vec<Vec<Complex64>>> {
    let idx: Vec<(usize, usize)> =
        pairs.iter().map(|&(i, j)| Ok((check_index(i)?, check_index(j)?))).collect::<Result<_>>()?;
    let map = OutputMap::new(p, theta)?;
    let rows: Vec<Vec<Complex64>> = freqs
        .par_iter()
        .map(|&omega| {
            let om = map.at(-omega)?;
            let op = map.at(omega)?;
            Ok(idx.iter().map(|&(i, j)| element(&om, &op, i, j, w)).collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..idx.len()).map(|k| rows.iter().map(|r| r[k]).collect()).collect())
}

pub fn spectrum_ij(
    p: &PhysicalParams,
    theta: f64,
    grid: &FrequencyGrid,
    i: usize,
    j: usize,
) -> Result<ComplexSpectrum> {
    spectrum_ij_weighted(p, theta, grid, i, j, &NoiseWeights::quantum(p))
}

pub fn spectrum_ij_weighted(
    p: &PhysicalParams,
    theta: f64,
    grid: &FrequencyGrid,
    i: usize,
    j: usize,
    w: &NoiseWeights,
) -> Result<ComplexSpectrum> {
    let mut v = elements(p, theta, &grid.to_vec(), &[(i, j)], w)?;
    let kind = match (i, j) {
        (2, 1) => SpectrumKind::Saa,
        (1, 2) => SpectrumKind::SadagAdag,
        (4, 3) => SpectrumKind::Sbb,
        (3, 4) => SpectrumKind::SbdagBdag,
        (6, 3) => SpectrumKind::SxyCross,
        _ => SpectrumKind::Element(i, j),
    };
    Ok(ComplexSpectrum { grid: *grid, kind, values: v.remove(0), params: *p, theta })
}

/// Shot-noise-normalised heterodyne spectrum versus the offset `Ω − Ω_LO`:
/// `η [S_aa(ω) + S_a†a†(ω + 2Ω_LO)] + 1 − η`.
pub fn heterodyne_spectrum(p: &PhysicalParams, grid: &FrequencyGrid) -> Result<Spectrum> {
    let freqs = grid.to_vec();
    let w = NoiseWeights::quantum(p);
    let saa = elements(p, 0.0, &freqs, &[(2, 1)], &w)?.remove(0);
    let shifted: Vec<f64> = freqs.iter().map(|f| f + 2.0 * p.omega_lo).collect();
    let sdd = elements(p, 0.0, &shifted, &[(1, 2)], &w)?.remove(0);
    let values = saa.iter().zip(&sdd).map(|(a, d)| p.eta * (a.re + d.re) + 1.0 - p.eta).collect();
    Ok(Spectrum::new(*grid, SpectrumKind::Heterodyne, values)?.with_params(*p, None))
}

/// `(S_bb, S_b†b†)` along the direction at angle `theta` from X.
pub fn mechanical_spectrum(p: &PhysicalParams, theta: f64, grid: &FrequencyGrid) -> Result<(Spectrum, Spectrum)> {
    mechanical_spectrum_with(p, theta, grid, &NoiseWeights::quantum(p), DEFAULT_TAIL_THRESHOLD)
}

pub fn mechanical_spectrum_with(
    p: &PhysicalParams,
    theta: f64,
    grid: &FrequencyGrid,
    w: &NoiseWeights,
    tail_threshold: f64,
) -> Result<(Spectrum, Spectrum)> {
    let mut v = elements(p, theta, &grid.to_vec(), &[(4, 3), (3, 4)], w)?;
    let mk = |kind, vals: Vec<Complex64>| {
        Spectrum::new(*grid, kind, vals.iter().map(|z| z.re).collect()).map(|s| s.with_params(*p, Some(theta)))
    };
    let bdb = mk(SpectrumKind::SbdagBdag, v.remove(1))?;
    let bb = mk(SpectrumKind::Sbb, v.remove(0))?;
    bb.check_tails(tail_threshold)?;
    bdb.check_tails(tail_threshold)?;
    Ok((bb, bdb))
}

/// `n̄ = ∫ S_bb dΩ/2π` along `theta`.
pub fn occupation(p: &PhysicalParams, theta: f64, grid: &FrequencyGrid) -> Result<f64> {
    Ok(mechanical_spectrum(p, theta, grid)?.0.integral())
}

/// `∫S_b†b† − ∫S_bb − 1`, which vanishes for exact bosonic commutators.
pub fn sum_rule_check(p: &PhysicalParams, theta: f64, grid: &FrequencyGrid) -> Result<f64> {
    let (bb, bdb) = mechanical_spectrum(p, theta, grid)?;
    Ok(bdb.integral() - bb.integral() - 1.0)
}

/// Second moments of the in-plane motion and the direction of least motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColdestAngle {
    /// Angle from X towards Y, in (−π/2, π/2].
    pub theta: f64,
    pub n_min: f64,
    /// Occupation along `theta + π/2`.
    pub n_max: f64,
    pub n_x: f64,
    pub n_y: f64,
    /// `Re ∫ S_XY dΩ/2π`
    pub cross_re: f64,
    pub cross_im: f64,
}

impl ColdestAngle {
    /// `n̄(θ) = n_X cos²θ + n_Y sin²θ + Re C sin 2θ`.
    pub fn occupation_at(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        self.n_x * c * c + self.n_y * s * s + self.cross_re * 2.0 * s * c
    }
}

/// Direction minimising `n̄(θ)`.
///
/// `n̄(θ)` is a sinusoid in `2θ` whose extremum follows from the X/Y
/// occupations and the cross-correlation. Of the two stationary angles the
/// colder one is returned.
pub fn coldest_angle(p: &PhysicalParams, grid: &FrequencyGrid) -> Result<ColdestAngle> {
    let w = NoiseWeights::quantum(p);
    let v = elements(p, 0.0, &grid.to_vec(), &[(4, 3), (6, 5), (6, 3)], &w)?;
    let re = |k: usize| grid.integrate(&v[k].iter().map(|z| z.re).collect::<Vec<_>>());
    let (n_x, n_y) = (re(0), re(1));
    let cross_re = re(2);
    let cross_im = grid.integrate(&v[2].iter().map(|z| z.im).collect::<Vec<_>>());

    let amp = (0.25 * (n_x - n_y).powi(2) + cross_re.powi(2)).sqrt();
    if amp <= 1e-9 * (n_x + n_y).abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Isotropic);
    }
    let mut out = ColdestAngle { theta: 0.0, n_min: 0.0, n_max: 0.0, n_x, n_y, cross_re, cross_im };
    let candidate = wrap_half_turn(0.5 * (-2.0 * cross_re).atan2(n_y - n_x));
    let other = wrap_half_turn(candidate + FRAC_PI_2);
    let (a, b) = (out.occupation_at(candidate), out.occupation_at(other));
    let (theta, n_min, n_max) = if a <= b { (candidate, a, b) } else { (other, b, a) };
    out.theta = theta;
    out.n_min = n_min;
    out.n_max = n_max;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::units::{hz, khz, to_khz};
    use approx::assert_relative_eq;

    fn small_grid() -> FrequencyGrid {
        FrequencyGrid::symmetric(khz(400.0), hz(50.0)).unwrap()
    }

    fn decoupled() -> PhysicalParams {
        PhysicalParams {
            g_x: 0.0,
            g_y: 0.0,
            gamma_mx: khz(1.0),
            gamma_my: khz(1.0),
            gamma_nx: 0.0,
            gamma_ny: 0.0,
            n_th_x: 1e4,
            n_th_y: 2e4,
            ..Default::default()
        }
    }

    #[test]
    fn decoupled_cavity_reflection_is_unitary() {
        let p = decoupled();
        for f in [-300.0, -120.0, 0.0, 57.0, 250.0] {
            let o = output_matrix(&p, 0.0, khz(f)).unwrap();
            assert_relative_eq!(o[(0, 0)].norm_sqr() * p.kappa, 1.0, max_relative = 1e-12);
            assert_eq!(o[(0, 2)], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn decoupled_output_entry() {
        let p = decoupled();
        let w = khz(33.0);
        let o = output_matrix(&p, 0.0, w).unwrap();
        let i = Complex64::new(0.0, 1.0);
        let expect = p.kappa.sqrt() / (-i * w - i * p.delta + p.kappa / 2.0) - 1.0 / p.kappa.sqrt();
        assert_relative_eq!(o[(0, 0)].re, expect.re, max_relative = 1e-12);
        assert_relative_eq!(o[(0, 0)].im, expect.im, max_relative = 1e-12);
    }

    #[test]
    fn quarter_turn_swaps_mechanical_rows() {
        let p = PhysicalParams::default();
        let w = khz(120.0);
        let o0 = output_matrix(&p, 0.0, w).unwrap();
        let o90 = output_matrix(&p, FRAC_PI_2, w).unwrap();
        for c in 0..6 {
            assert!((o90[(2, c)] - o0[(4, c)]).norm() < 1e-12 * o0[(4, c)].norm().max(1e-30));
            assert!((o90[(4, c)] + o0[(2, c)]).norm() < 1e-12 * o0[(2, c)].norm().max(1e-30));
        }
    }

    #[test]
    fn index_range_is_checked() {
        let g = FrequencyGrid::symmetric(khz(1.0), hz(100.0)).unwrap();
        assert!(matches!(spectrum_ij(&decoupled(), 0.0, &g, 0, 1), Err(Error::IndexOutOfRange(0))));
        assert!(matches!(spectrum_ij(&decoupled(), 0.0, &g, 1, 7), Err(Error::IndexOutOfRange(7))));
    }

    #[test]
    fn vacuum_cavity_spectra() {
        let g = FrequencyGrid::symmetric(khz(300.0), khz(1.0)).unwrap();
        let p = decoupled();
        let saa = spectrum_ij(&p, 0.0, &g, 2, 1).unwrap();
        let sdd = spectrum_ij(&p, 0.0, &g, 1, 2).unwrap();
        assert!(saa.values.iter().all(|z| z.norm() < 1e-12));
        assert!(sdd.values.iter().all(|z| (z - 1.0).norm() < 1e-12));
    }

    #[test]
    fn decoupled_lorentzian_occupation() {
        let p = decoupled();
        let g = FrequencyGrid::symmetric(khz(400.0), hz(10.0)).unwrap();
        let n = occupation(&p, 0.0, &g).unwrap();
        assert_relative_eq!(n, 1e4, max_relative = 1e-2);
        let (bb, _) = mechanical_spectrum(&p, 0.0, &g).unwrap();
        assert!((to_khz(bb.peak().0) - 132.0).abs() < 0.02);
    }

    #[test]
    fn unstable_input_is_refused() {
        let mut p = PhysicalParams::default().with_couplings(khz(20.0), 0.0);
        p.delta = p.omega_x0;
        assert!(matches!(heterodyne_spectrum(&p, &small_grid()), Err(Error::Unstable { .. })));
    }

    #[test]
    fn narrow_grid_is_reported() {
        let p = decoupled();
        let g = FrequencyGrid::with_step(khz(131.0), khz(133.0), hz(10.0)).unwrap();
        assert!(matches!(occupation(&p, 0.0, &g), Err(Error::GridTooNarrow { .. })));
    }

    #[test]
    fn no_coupling_is_shot_noise() {
        let p = decoupled();
        let g = FrequencyGrid::symmetric(khz(400.0), khz(1.0)).unwrap();
        let s = heterodyne_spectrum(&p, &g).unwrap();
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn coldest_angle_uncorrelated() {
        let c = coldest_angle(&decoupled(), &FrequencyGrid::default()).unwrap();
        assert!(c.theta.abs() < 1e-9);
        assert!(c.n_min < c.n_max);
    }

    #[test]
    fn isotropic_motion_has_no_coldest_angle() {
        let p = PhysicalParams { n_th_y: 1e4, omega_y0: khz(132.0), ..decoupled() };
        assert!(matches!(coldest_angle(&p, &small_grid()), Err(Error::Isotropic)));
    }

    #[test]
    fn closed_form_matches_rotated_integral() {
        let p = PhysicalParams::default();
        let g = FrequencyGrid::default();
        let c = coldest_angle(&p, &g).unwrap();
        for deg in [-40.0f64, 10.0, 75.0] {
            let t = deg.to_radians();
            let direct = occupation(&p, t, &g).unwrap();
            assert_relative_eq!(c.occupation_at(t), direct, max_relative = 1e-6);
        }
    }

    #[test]
    fn boxcar_preserves_constants() {
        let g = FrequencyGrid::with_step(0.0, 100.0, 1.0).unwrap();
        let s = Spectrum::new(g, SpectrumKind::Synthetic, vec![2.0; 101]).unwrap();
        assert!(s.boxcar(6.0).values.iter().all(|&v| v == 2.0));
    }

    #[test]
    fn classical_weights_drop_vacuum() {
        let p = PhysicalParams::default();
        let w = NoiseWeights::classical(&p);
        assert_eq!(w.kappa, 0.0);
        assert_eq!(w.x_up, w.x_down);
        let q = NoiseWeights::quantum(&p);
        assert_relative_eq!(q.x_up - q.x_down, p.gamma_mx, max_relative = 1e-6);
    }
}
