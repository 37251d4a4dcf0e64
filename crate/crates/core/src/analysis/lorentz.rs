use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectra::{FrequencyGrid, Spectrum, SpectrumKind};

const MAX_ITER: usize = 200;
const STEP_TOL: f64 = 1e-8;
const MIN_WIDTH: f64 = 1e-12;

/// One Lorentzian term `(area/π) · w / ((ω − c)² + w²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub center: f64,
    pub half_width: f64,
    /// Integral over angular frequency, in spectrum units × rad/s.
    pub area: f64,
}

impl Peak {
    pub fn value(&self, omega: f64) -> f64 {
        let d = omega - self.center;
        self.area / PI * self.half_width / (d * d + self.half_width * self.half_width)
    }

    pub fn height(&self) -> f64 {
        self.area / (PI * self.half_width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    /// Peaks in ascending centre order.
    pub peaks: Vec<Peak>,
    pub offset: f64,
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Peaks too close to be told apart, or an ill-conditioned normal matrix.
    pub degenerate: bool,
    pub warnings: Vec<String>,
}

impl LorentzianFit {
    pub fn n_peaks(&self) -> usize {
        self.peaks.len()
    }

    pub fn evaluate(&self, omega: f64) -> f64 {
        self.offset + self.peaks.iter().map(|p| p.value(omega)).sum::<f64>()
    }

    pub fn to_spectrum(&self, grid: &FrequencyGrid) -> Spectrum {
        let values = grid.points().map(|w| self.evaluate(w)).collect();
        Spectrum::new(*grid, SpectrumKind::Synthetic, values).expect("length matches grid")
    }
}

/// Fixed scaling that maps the fit window to `u ∈ [−1, 1]` and the data to O(1).
struct Scale {
    mid: f64,
    half: f64,
    y: f64,
}

impl Scale {
    fn to_params(&self, offset: f64, peaks: &[Peak]) -> DVector<f64> {
        let mut v = Vec::with_capacity(1 + 3 * peaks.len());
        v.push(offset / self.y);
        for p in peaks {
            v.push((p.center - self.mid) / self.half);
            v.push(p.half_width / self.half);
            v.push(p.area / (self.y * self.half));
        }
        DVector::from_vec(v)
    }

    fn unpack(&self, q: &DVector<f64>) -> (f64, Vec<Peak>) {
        let peaks = q.as_slice()[1..]
            .chunks(3)
            .map(|c| Peak {
                center: self.mid + c[0] * self.half,
                half_width: c[1] * self.half,
                area: c[2] * self.y * self.half,
            })
            .collect();
        (q[0] * self.y, peaks)
    }
}

fn residuals(u: &[f64], y: &[f64], q: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        u.len(),
        u.iter().zip(y).map(|(&x, &yy)| {
            let mut m = q[0];
            for c in q.as_slice()[1..].chunks(3) {
                let d = x - c[0];
                m += c[2] / PI * c[1] / (d * d + c[1] * c[1]);
            }
            m - yy
        }),
    )
}

fn jacobian(u: &[f64], q: &DVector<f64>) -> DMatrix<f64> {
    let np = q.len();
    let mut j = DMatrix::zeros(u.len(), np);
    for (r, &x) in u.iter().enumerate() {
        j[(r, 0)] = 1.0;
        for (k, c) in q.as_slice()[1..].chunks(3).enumerate() {
            let (cc, w, a) = (c[0], c[1], c[2]);
            let d = x - cc;
            let den = d * d + w * w;
            let col = 1 + 3 * k;
            j[(r, col)] = a / PI * 2.0 * w * d / (den * den);
            j[(r, col + 1)] = a / PI * (d * d - w * w) / (den * den);
            j[(r, col + 2)] = w / (PI * den);
        }
    }
    j
}

fn project(q: &mut DVector<f64>) {
    for k in 0..(q.len() - 1) / 3 {
        let i = 1 + 3 * k;
        q[i + 1] = q[i + 1].abs().max(MIN_WIDTH);
        q[i + 2] = q[i + 2].max(0.0);
    }
}

fn solve_damped(jtj: &DMatrix<f64>, g: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let mut a = jtj.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
    }
    let rhs = -g;
    match a.clone().cholesky() {
        Some(ch) => Some(ch.solve(&rhs)),
        None => a.lu().solve(&rhs),
    }
}

fn condition(jtj: &DMatrix<f64>) -> f64 {
    let sv = jtj.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Damped Gauss–Newton fit of `offset + Σ peaks` to the samples `(omega, y)`.
fn fit_samples(omega: &[f64], y: &[f64], seeds: &[Peak], offset0: f64) -> LorentzianFit {
    let (lo, hi) = (omega[0], omega[omega.len() - 1]);
    let ymax = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let sc = Scale { mid: 0.5 * (lo + hi), half: 0.5 * (hi - lo), y: ymax };
    let u: Vec<f64> = omega.iter().map(|w| (w - sc.mid) / sc.half).collect();
    let ys: Vec<f64> = y.iter().map(|v| v / sc.y).collect();

    let mut q = sc.to_params(offset0, seeds);
    project(&mut q);
    let mut r = residuals(&u, &ys, &q);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITER {
        iterations += 1;
        let j = jacobian(&u, &q);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut accepted = false;
        while lambda < 1e16 {
            let Some(delta) = solve_damped(&jtj, &g, lambda) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = &q + &delta;
            project(&mut trial);
            let rt = residuals(&u, &ys, &trial);
            let ct = rt.norm_squared();
            if ct.is_finite() && ct <= cost {
                let step = (&trial - &q).norm() / (q.norm() + STEP_TOL);
                q = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if step < STEP_TOL {
                    converged = true;
                }
                break;
            }
            let step = delta.norm() / (q.norm() + STEP_TOL);
            if step < STEP_TOL {
                converged = true;
                break;
            }
            lambda *= 4.0;
        }
        if converged || !accepted {
            break;
        }
    }

    let (offset, mut peaks) = sc.unpack(&q);
    peaks.sort_by(|a, b| a.center.total_cmp(&b.center));
    let mut warnings = Vec::new();
    let mut degenerate = false;
    for w in peaks.windows(2) {
        let sep = w[1].center - w[0].center;
        if sep < 0.5 * (w[0].half_width + w[1].half_width) {
            degenerate = true;
            warnings.push(format!("peaks at {:.6e} and {:.6e} rad/s are not resolved", w[0].center, w[1].center));
        }
    }
    let jac = jacobian(&u, &q);
    if condition(&(jac.transpose() * &jac)) > 1e14 {
        degenerate = true;
        warnings.push("normal matrix is ill-conditioned".into());
    }
    if !converged {
        warnings.push(format!("no convergence after {iterations} iterations"));
    }

    LorentzianFit {
        peaks,
        offset,
        residual_rms: sc.y * (cost / u.len() as f64).sqrt(),
        converged,
        iterations,
        degenerate,
        warnings,
    }
}

/// Seeds from the `n` highest local maxima of a 5-point moving average.
pub fn seed_peaks(omega: &[f64], y: &[f64], n: usize) -> Result<Vec<Peak>> {
    let len = y.len();
    if len < 5 {
        return Err(Error::InsufficientData(format!("{len} samples")));
    }
    let smooth: Vec<f64> = (0..len)
        .map(|i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 2).min(len - 1);
            y[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    let mut sorted = smooth.clone();
    sorted.sort_by(f64::total_cmp);
    let base = sorted[len / 2];

    let mut maxima: Vec<usize> =
        (1..len - 1).filter(|&i| smooth[i] > smooth[i - 1] && smooth[i] >= smooth[i + 1] && smooth[i] > base).collect();
    if maxima.len() < n {
        return Err(Error::Seeding { found: maxima.len(), wanted: n });
    }
    maxima.sort_by(|&a, &b| smooth[b].total_cmp(&smooth[a]));
    maxima.truncate(n);

    let step = (omega[len - 1] - omega[0]) / (len - 1) as f64;
    Ok(maxima
        .into_iter()
        .map(|i| {
            let h = smooth[i] - base;
            let half = base + 0.5 * h;
            let mut l = i;
            while l > 0 && smooth[l] > half {
                l -= 1;
            }
            let mut r = i;
            while r < len - 1 && smooth[r] > half {
                r += 1;
            }
            let w = (0.5 * (omega[r] - omega[l])).max(step);
            Peak { center: omega[i], half_width: w, area: h * PI * w }
        })
        .collect())
}

/// Fits `n_peaks` Lorentzians plus a free offset over the whole spectrum.
pub fn fit_lorentzians(spec: &Spectrum, n_peaks: usize, init: Option<&[Peak]>) -> Result<LorentzianFit> {
    fit_lorentzians_in(spec, spec.grid.start(), spec.grid.stop(), n_peaks, init)
}

/// As [`fit_lorentzians`], restricted to samples in `[lo, hi]`.
pub fn fit_lorentzians_in(
    spec: &Spectrum,
    lo: f64,
    hi: f64,
    n_peaks: usize,
    init: Option<&[Peak]>,
) -> Result<LorentzianFit> {
    if !(1..=3).contains(&n_peaks) {
        return Err(Error::InvalidParameter { field: "n_peaks", reason: "must be 1, 2 or 3".into() });
    }
    let (a, b) = (spec.grid.index_of(lo), spec.grid.index_of(hi));
    if b < a + 3 * n_peaks + 1 {
        return Err(Error::InsufficientData(format!("{} samples in the fit window", b + 1 - a.min(b + 1))));
    }
    let omega: Vec<f64> = (a..=b).map(|i| spec.grid.at(i)).collect();
    let y = &spec.values[a..=b];

    let seeds = match init {
        Some(s) if s.len() == n_peaks => s.to_vec(),
        Some(s) => {
            return Err(Error::InvalidParameter {
                field: "init",
                reason: format!("{} seeds for {n_peaks} peaks", s.len()),
            })
        }
        None => seed_peaks(&omega, y, n_peaks)?,
    };
    let mut edges = [y[0], y[y.len() - 1]];
    edges.sort_by(f64::total_cmp);
    Ok(fit_samples(&omega, y, &seeds, edges[0]))
}
