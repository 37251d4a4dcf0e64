use serde::{Deserialize, Serialize};

use super::{heterodyne_spectrum, FrequencyGrid, Spectrum, SpectrumKind};
use crate::analysis::{fit_lorentzians_in, LorentzianFit, Peak};
use crate::error::{Error, Result};
use crate::langevin::{build_drift_matrix, eigensolve};
use crate::model::{Mode, PhysicalParams};

/// `1 + ((Δ + ω)/(κ/2))²`, the inverse cavity Lorentzian at offset `ω`.
pub fn filtering_function(delta: f64, kappa: f64, omega: f64) -> f64 {
    let x = (delta + omega) / (0.5 * kappa);
    1.0 + x * x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandOptions {
    /// Mode whose sidebands are analysed.
    pub mode: Mode,
    /// Integration region around each fitted centre, in fitted half-widths.
    pub half_widths: f64,
    /// Fit window around each seed, in seed half-widths.
    pub fit_span: f64,
}

impl Default for SidebandOptions {
    fn default() -> Self {
        Self { mode: Mode::X, half_widths: 5.0, fit_span: 12.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidebandPeak {
    pub center: f64,
    pub half_width: f64,
    /// `∫ (S_out − 1) F dΩ/2π` over the integration region.
    pub area: f64,
    pub fit: LorentzianFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidebandAnalysis {
    /// Sideband at positive offset, proportional to `n̄`.
    pub anti_stokes: SidebandPeak,
    /// Sideband at negative offset, proportional to `n̄ + 1`.
    pub stokes: SidebandPeak,
    /// `area(anti-Stokes) / area(Stokes) = n̄/(n̄ + 1)`
    pub ratio: f64,
    pub inferred_n: f64,
    pub reliable: bool,
    pub warnings: Vec<String>,
    pub filtered: Spectrum,
    pub classical_reference: Spectrum,
}

/// Low-frequency sideband expected for classical symmetric noise: the
/// high-frequency sideband (shot noise removed) mirrored to `ω < 0` and
/// weighted by `((κ/2)² + (Δ−ω)²)/((κ/2)² + (Δ+ω)²)`. On `ω ≥ 0` the
/// shot-noise-subtracted input is returned; points whose mirror falls off
/// the grid are zero.
pub fn classical_reference(het: &Spectrum, delta: f64, kappa: f64) -> Spectrum {
    let g = het.grid;
    let k2 = 0.25 * kappa * kappa;
    let values = g
        .points()
        .enumerate()
        .map(|(i, w)| {
            if w >= 0.0 {
                return het.values[i] - 1.0;
            }
            if -w > g.stop() {
                return 0.0;
            }
            let mirrored = het.values[g.index_of(-w)] - 1.0;
            mirrored * (k2 + (delta - w).powi(2)) / (k2 + (delta + w).powi(2))
        })
        .collect();
    Spectrum { grid: g, kind: SpectrumKind::ClassicalReference, values, params: het.params, theta: None }
}

fn filtered(het: &Spectrum, delta: f64, kappa: f64) -> Spectrum {
    let values =
        het.grid.points().zip(&het.values).map(|(w, s)| (s - 1.0) * filtering_function(delta, kappa, w)).collect();
    Spectrum { grid: het.grid, kind: SpectrumKind::Filtered, values, params: het.params, theta: None }
}

fn fit_sideband(
    spec: &Spectrum,
    center: f64,
    width: f64,
    opts: &SidebandOptions,
    warnings: &mut Vec<String>,
) -> Result<SidebandPeak> {
    let g = spec.grid;
    let (lo, hi) = (center - opts.fit_span * width, center + opts.fit_span * width);
    if lo < g.start() || hi > g.stop() {
        warnings.push(format!("fit window around {center:.6e} rad/s leaves the grid"));
    }
    let height = spec.values[g.index_of(center)];
    let seed = Peak { center, half_width: width, area: (height * std::f64::consts::PI * width).max(0.0) };
    let fit = fit_lorentzians_in(spec, lo, hi, 1, Some(&[seed]))?;
    if !fit.converged {
        warnings.push(format!("sideband fit near {center:.6e} rad/s did not converge"));
    }
    let pk = fit.peaks[0];
    let area =
        spec.integral_range(pk.center - opts.half_widths * pk.half_width, pk.center + opts.half_widths * pk.half_width);
    Ok(SidebandPeak { center: pk.center, half_width: pk.half_width, area, fit })
}

/// Sideband thermometry on a shot-noise-normalised heterodyne spectrum.
///
/// `center` and `width` seed the fits of the two sidebands at `±center`.
pub fn analyze_sideband_spectrum(
    het: &Spectrum,
    delta: f64,
    kappa: f64,
    center: f64,
    width: f64,
    opts: &SidebandOptions,
) -> Result<SidebandAnalysis> {
    if !(center > 0.0 && width > 0.0) {
        return Err(Error::InvalidParameter { field: "center/width", reason: "must be > 0".into() });
    }
    let filt = filtered(het, delta, kappa);
    let mut warnings = Vec::new();
    let anti_stokes = fit_sideband(&filt, center, width, opts, &mut warnings)?;
    let stokes = fit_sideband(&filt, -center, width, opts, &mut warnings)?;

    let separation = anti_stokes.center - stokes.center;
    if separation < anti_stokes.half_width + stokes.half_width {
        warnings.push("sidebands overlap".into());
    }
    let ratio = anti_stokes.area / stokes.area;
    if !(ratio > 0.0 && ratio < 1.0) {
        warnings.push(format!("area ratio {ratio} outside (0, 1)"));
    }
    Ok(SidebandAnalysis {
        inferred_n: ratio / (1.0 - ratio),
        ratio,
        reliable: warnings.is_empty(),
        warnings,
        anti_stokes,
        stokes,
        classical_reference: classical_reference(het, delta, kappa),
        filtered: filt,
    })
}

/// Model heterodyne spectrum analysed around the eigenmode with the largest
/// weight on `opts.mode`.
pub fn analyze_sidebands(p: &PhysicalParams, grid: &FrequencyGrid, opts: &SidebandOptions) -> Result<SidebandAnalysis> {
    let sol = eigensolve(&build_drift_matrix(p))?;
    let weight = |c: &crate::langevin::Composition| if opts.mode == Mode::X { c.x } else { c.y };
    let pair =
        sol.pairs.iter().max_by(|a, b| weight(&a.composition).total_cmp(&weight(&b.composition))).expect("three pairs");
    let het = heterodyne_spectrum(p, grid)?;
    let width = pair.half_width().max(2.0 * grid.step());
    analyze_sideband_spectrum(&het, p.delta, p.kappa, pair.frequency(), width, opts)
}

/// `(ratio, inferred n̄)` with default options.
pub fn sideband_asymmetry(p: &PhysicalParams, grid: &FrequencyGrid) -> Result<(f64, f64)> {
    let a = analyze_sidebands(p, grid, &SidebandOptions::default())?;
    Ok((a.ratio, a.inferred_n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::units::{hz, khz};
    use crate::spectra::occupation;

    fn cold_single_mode(gamma_n: f64) -> PhysicalParams {
        let mut p = PhysicalParams::default().with_couplings(khz(5.0), 0.0);
        p.delta = -p.omega_x0;
        p.gamma_mx = 0.0;
        p.gamma_nx = gamma_n;
        p.gamma_ny = 0.0;
        p.gamma_my = hz(0.1);
        p
    }

    #[test]
    fn filter_is_one_on_cavity_resonance() {
        assert_eq!(filtering_function(-5.0, 2.0, 5.0), 1.0);
        assert_eq!(filtering_function(-5.0, 2.0, 6.0), 2.0);
    }

    #[test]
    fn asymmetry_recovers_model_occupation() {
        let grid = FrequencyGrid::default();
        let p = cold_single_mode(khz(2.0));
        let truth = occupation(&p, 0.0, &grid).unwrap();
        let a = analyze_sidebands(&p, &grid, &SidebandOptions::default()).unwrap();
        assert!(a.reliable, "{:?}", a.warnings);
        assert!((a.inferred_n / truth - 1.0).abs() < 0.1, "{} vs {}", a.inferred_n, truth);
    }

    #[test]
    fn hot_limit_is_symmetric() {
        let grid = FrequencyGrid::default();
        let p = cold_single_mode(khz(2000.0));
        let (ratio, _) = sideband_asymmetry(&p, &grid).unwrap();
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn classical_reference_mirrors_with_cavity_weight() {
        let g = FrequencyGrid::symmetric(10.0, 1.0).unwrap();
        let v: Vec<f64> = g.points().map(|w| if w == 3.0 { 3.0 } else { 1.0 }).collect();
        let s = Spectrum::new(g, SpectrumKind::Heterodyne, v).unwrap();
        let r = classical_reference(&s, -3.0, 2.0);
        let at = |w: f64| r.values[g.index_of(w)];
        assert_eq!(at(3.0), 2.0);
        assert_eq!(at(-3.0), 2.0 * (1.0 + 0.0) / (1.0 + 36.0));
        assert_eq!(at(-4.0), 0.0);
    }
}
