use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::units::{hz, khz};

/// Uniformly spaced angular-frequency samples, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    start: f64,
    stop: f64,
    n_points: usize,
}

impl FrequencyGrid {
    pub fn new(start: f64, stop: f64, n_points: usize) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if !(start < stop) {
            return Err(Error::InvalidGrid(format!("start {start} must be below stop {stop}")));
        }
        if n_points < 2 {
            return Err(Error::InvalidGrid("need at least two points".into()));
        }
        Ok(Self { start, stop, n_points })
    }

    /// Grid from `start` to `stop` with spacing `step`; the span must be a
    /// whole number of steps (to one part in 10⁶).
    pub fn with_step(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidGrid(format!("step {step} must be > 0")));
        }
        let n = (stop - start) / step;
        let rounded = n.round();
        if (n - rounded).abs() > 1e-6 * rounded.max(1.0) {
            return Err(Error::InvalidGrid(format!("step does not divide the span ({n} steps)")));
        }
        Self::new(start, stop, rounded as usize + 1)
    }

    /// `[−half_span, +half_span]` with spacing `step`.
    pub fn symmetric(half_span: f64, step: f64) -> Result<Self> {
        Self::with_step(-half_span, half_span, step)
    }

    /// Doubles the span and halves the spacing, keeping the centre.
    pub fn refined(&self) -> Self {
        let mid = 0.5 * (self.start + self.stop);
        let half = self.stop - self.start;
        Self { start: mid - half, stop: mid + half, n_points: 4 * (self.n_points - 1) + 1 }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn stop(&self) -> f64 {
        self.stop
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.n_points - 1) as f64
    }

    pub fn at(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.stop
        } else {
            self.start + self.step() * i as f64
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(|i| self.at(i))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.points().collect()
    }

    /// Index of the sample closest to `omega`, clamped to the grid.
    pub fn index_of(&self, omega: f64) -> usize {
        let x = ((omega - self.start) / self.step()).round();
        x.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    /// Trapezoidal `∫ f dΩ / 2π` of samples taken on this grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        trapezoid(values, self.step()) / std::f64::consts::TAU
    }

    /// Trapezoidal `∫ f dΩ / 2π` restricted to `[lo, hi]` (grid-aligned).
    pub fn integrate_range(&self, values: &[f64], lo: f64, hi: f64) -> f64 {
        let (a, b) = (self.index_of(lo), self.index_of(hi));
        if b <= a {
            return 0.0;
        }
        trapezoid(&values[a..=b], self.step()) / std::f64::consts::TAU
    }
}

impl Default for FrequencyGrid {
    /// ±400 kHz at 10 Hz spacing.
    fn default() -> Self {
        Self::symmetric(khz(400.0), hz(10.0)).expect("static grid is valid")
    }
}

pub(crate) fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, mid @ .., last] => step * (0.5 * (first + last) + mid.iter().sum::<f64>()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_grid_shape() {
        let g = FrequencyGrid::default();
        assert_eq!(g.len(), 80_001);
        assert_relative_eq!(g.step(), hz(10.0), max_relative = 1e-12);
        assert_eq!(g.at(40_000), 0.0);
        assert_eq!(g.at(80_000), khz(400.0));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(FrequencyGrid::new(1.0, 1.0, 10).is_err());
        assert!(FrequencyGrid::new(0.0, 1.0, 1).is_err());
        assert!(FrequencyGrid::with_step(0.0, 1.0, 0.3).is_err());
        assert!(FrequencyGrid::with_step(0.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn refinement_doubles_span_halves_step() {
        let g = FrequencyGrid::symmetric(10.0, 1.0).unwrap();
        let r = g.refined();
        assert_eq!(r.start(), -20.0);
        assert_eq!(r.stop(), 20.0);
        assert_relative_eq!(r.step(), 0.5);
    }

    #[test]
    fn trapezoid_is_exact_on_lines() {
        let g = FrequencyGrid::with_step(0.0, 2.0, 0.25).unwrap();
        let v: Vec<f64> = g.points().map(|x| 3.0 * x + 1.0).collect();
        assert_relative_eq!(g.integrate(&v) * std::f64::consts::TAU, 8.0, max_relative = 1e-14);
        assert_relative_eq!(g.integrate_range(&v, 0.0, 1.0) * std::f64::consts::TAU, 2.5, max_relative = 1e-14);
    }

    #[test]
    fn index_lookup_clamps() {
        let g = FrequencyGrid::with_step(0.0, 10.0, 1.0).unwrap();
        assert_eq!(g.index_of(3.4), 3);
        assert_eq!(g.index_of(-5.0), 0);
        assert_eq!(g.index_of(50.0), 10);
    }
}
