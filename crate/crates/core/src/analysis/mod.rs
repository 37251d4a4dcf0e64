//! Lorentzian peak fitting, dispersion points extracted from spectra, and the
//! linear pressure law of the motional peak area.

mod lorentz;

pub use lorentz::{fit_lorentzians, fit_lorentzians_in, seed_peaks, LorentzianFit, Peak};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::langevin::{build_drift_matrix, eigensolve};
use crate::model::{EnvironmentSpec, PhysicalParams};
use crate::spectra::{heterodyne_spectrum, FrequencyGrid, Spectrum};

/// Fitted centres at one detuning, in ascending eigenfrequency order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionFitPoint {
    pub detuning: f64,
    pub centers: Vec<f64>,
    pub half_widths: Vec<f64>,
    /// Eigenfrequencies the centres were matched to (empty without a model).
    pub eigenfrequencies: Vec<f64>,
    /// Eigenvalue real parts of the matched branches.
    pub branch_half_widths: Vec<f64>,
    pub fit: LorentzianFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionExtraction {
    pub points: Vec<DispersionFitPoint>,
    /// Detunings whose fits were dropped, with the reason.
    pub excluded: Vec<(f64, String)>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    match n {
        1 => vec![vec![0]],
        2 => vec![vec![0, 1], vec![1, 0]],
        _ => vec![vec![0, 1, 2], vec![0, 2, 1], vec![1, 0, 2], vec![1, 2, 0], vec![2, 0, 1], vec![2, 1, 0]],
    }
}

/// Assignment of fitted centres to targets minimising the total distance;
/// each centre is used at most once.
fn match_unique(centers: &[f64], targets: &[f64]) -> Vec<usize> {
    permutations(targets.len())
        .into_iter()
        .min_by(|a, b| {
            let cost =
                |p: &Vec<usize>| p.iter().enumerate().map(|(t, &c)| (centers[c] - targets[t]).abs()).sum::<f64>();
            cost(a).total_cmp(&cost(b))
        })
        .expect("at least one permutation")
}

fn extract_one(spec: &Spectrum, n_peaks: usize) -> std::result::Result<DispersionFitPoint, (f64, String)> {
    let detuning = spec.params.map(|p| p.delta).unwrap_or(f64::NAN);
    let fail = |msg: String| (detuning, msg);

    let model = match spec.params {
        Some(p) => {
            let sol = eigensolve(&build_drift_matrix(&p)).map_err(|e| fail(e.to_string()))?;
            let mut pairs: Vec<_> = sol
                .pairs
                .iter()
                .filter(|q| q.frequency() >= spec.grid.start() && q.frequency() <= spec.grid.stop())
                .copied()
                .collect();
            if pairs.len() != n_peaks {
                return Err(fail(format!("{} eigenfrequencies inside the grid, {n_peaks} wanted", pairs.len())));
            }
            pairs.sort_by(|a, b| a.frequency().total_cmp(&b.frequency()));
            Some(pairs)
        }
        None => None,
    };

    let seeds: Option<Vec<Peak>> = model.as_ref().map(|pairs| {
        pairs
            .iter()
            .map(|q| {
                let w = q.half_width().max(spec.grid.step());
                let i = spec.grid.index_of(q.frequency());
                let h = (spec.values[i] - 1.0).max(0.0);
                Peak { center: q.frequency(), half_width: w, area: h * std::f64::consts::PI * w }
            })
            .collect()
    });
    let fit = fit_lorentzians(spec, n_peaks, seeds.as_deref()).map_err(|e| fail(e.to_string()))?;
    if !fit.converged {
        return Err(fail(format!("fit did not converge: {}", fit.warnings.join("; "))));
    }

    let fitted: Vec<f64> = fit.peaks.iter().map(|p| p.center).collect();
    let (eigenfrequencies, branch_half_widths, order) = match &model {
        Some(pairs) => {
            let targets: Vec<f64> = pairs.iter().map(|q| q.frequency()).collect();
            let order = match_unique(&fitted, &targets);
            (targets, pairs.iter().map(|q| q.half_width()).collect(), order)
        }
        None => (Vec::new(), Vec::new(), (0..n_peaks).collect()),
    };
    Ok(DispersionFitPoint {
        detuning,
        centers: order.iter().map(|&k| fit.peaks[k].center).collect(),
        half_widths: order.iter().map(|&k| fit.peaks[k].half_width).collect(),
        eigenfrequencies,
        branch_half_widths,
        fit,
    })
}

/// Fits `n_peaks` Lorentzians to each spectrum of a detuning sweep.
///
/// Spectra carrying a parameter snapshot are seeded from the drift-matrix
/// eigenvalues (centre `Im λ`, half-width `Re λ`) and their centres are
/// matched one-to-one to those eigenfrequencies. Spectra without a snapshot
/// are seeded from local maxima and reported in ascending order.
pub fn extract_dispersion_points(spectra: &[Spectrum], n_peaks: usize) -> DispersionExtraction {
    let results: Vec<_> = spectra.par_iter().map(|s| extract_one(s, n_peaks)).collect();
    let mut out = DispersionExtraction { points: Vec::new(), excluded: Vec::new() };
    for r in results {
        match r {
            Ok(p) => out.points.push(p),
            Err(e) => out.excluded.push(e),
        }
    }
    out
}

/// Ordinary least-squares line through `(pressure, area)` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureFit {
    /// Area per pascal.
    pub slope: f64,
    pub intercept: f64,
    /// Smallest and largest pressure used.
    pub range: (f64, f64),
    pub residuals: Vec<f64>,
}

impl PressureFit {
    /// Damping slope `Γ_m/(2π P)` in Hz/Pa implied by `slope`, given the
    /// model area change per pascal for a unit (1 Hz/Pa) slope.
    pub fn implied_damping_slope(&self, area_per_unit_slope: f64) -> f64 {
        self.slope / area_per_unit_slope
    }
}

pub fn fit_pressure_law(points: &[(f64, f64)]) -> Result<PressureFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!("{} points, at least 3 needed", points.len())));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("all pressures are equal".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    Ok(PressureFit {
        slope,
        intercept,
        range: (lo, hi),
        residuals: points.iter().map(|p| p.1 - (intercept + slope * p.0)).collect(),
    })
}

/// Shot-noise-subtracted area `∫ (S − 1) dΩ/2π` of a heterodyne spectrum.
pub fn peak_area(spec: &Spectrum) -> f64 {
    spec.grid.integrate(&spec.values.iter().map(|v| v - 1.0).collect::<Vec<_>>())
}

/// Model heterodyne peak area at a given pressure.
pub fn model_peak_area(
    base: &PhysicalParams,
    env: &EnvironmentSpec,
    pressure: f64,
    grid: &FrequencyGrid,
) -> Result<f64> {
    let p = base.with_gas(&EnvironmentSpec { pressure, ..*env })?;
    Ok(peak_area(&heterodyne_spectrum(&p, grid)?))
}

/// Area change per pascal for a damping slope of 1 Hz/Pa, from the model at
/// two pressures. Calibration depends on detuning, couplings and `η`.
pub fn area_calibration(
    base: &PhysicalParams,
    env: &EnvironmentSpec,
    grid: &FrequencyGrid,
    pressures: (f64, f64),
) -> Result<f64> {
    let unit = EnvironmentSpec { damping_slope: 1.0, ..*env };
    let a0 = model_peak_area(base, &unit, pressures.0, grid)?;
    let a1 = model_peak_area(base, &unit, pressures.1, grid)?;
    Ok((a1 - a0) / (pressures.1 - pressures.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::units::khz;
    use crate::spectra::SpectrumKind;

    #[test]
    fn exact_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        let f = fit_pressure_law(&pts).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14);
        assert!((f.intercept - 1.0).abs() < 1e-14);
        assert!(f.residuals.iter().all(|r| r.abs() < 1e-14));
        assert_eq!(f.range, (0.0, 4.0));
    }

    #[test]
    fn flat_line() {
        let f = fit_pressure_law(&[(1.0, 3.0), (2.0, 3.0), (5.0, 3.0)]).unwrap();
        assert_eq!(f.slope, 0.0);
    }

    #[test]
    fn needs_three_points() {
        assert!(fit_pressure_law(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
    }

    #[test]
    fn unique_matching() {
        assert_eq!(match_unique(&[1.0, 1.1, 5.0], &[1.05, 1.2, 4.0]), vec![0, 1, 2]);
        assert_eq!(match_unique(&[5.0, 1.0], &[1.0, 5.0]), vec![1, 0]);
    }

    #[test]
    fn synthetic_sweep_without_model() {
        let grid = FrequencyGrid::with_step(khz(100.0), khz(150.0), khz(0.05)).unwrap();
        let peaks = [
            Peak { center: khz(117.0), half_width: khz(0.5), area: 5e3 },
            Peak { center: khz(132.0), half_width: khz(0.5), area: 5e3 },
        ];
        let spectra: Vec<Spectrum> = (0..3)
            .map(|_| {
                let v = grid.points().map(|w| 1.0 + peaks.iter().map(|p| p.value(w)).sum::<f64>()).collect();
                Spectrum::new(grid, SpectrumKind::Synthetic, v).unwrap()
            })
            .collect();
        let ex = extract_dispersion_points(&spectra, 2);
        assert!(ex.excluded.is_empty());
        for p in &ex.points {
            assert!((p.centers[0] - khz(117.0)).abs() < 1e-6 * khz(117.0));
            assert!((p.centers[1] - khz(132.0)).abs() < 1e-6 * khz(132.0));
        }
    }
}
