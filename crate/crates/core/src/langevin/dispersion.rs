use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eigen::{BranchLabel, CVector6, Composition, EigenSolution};
use super::{build_drift_matrix, eigensolve};
use crate::error::{Error, Result};
use crate::model::{Mode, PhysicalParams};

/// Eigenstructure at one detuning, with pairs reordered into tracked branches.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionPoint {
    pub params: PhysicalParams,
    pub frequencies: [f64; 3],
    pub half_widths: [f64; 3],
    pub compositions: [Composition; 3],
    pub labels: [BranchLabel; 3],
    pub eigenvectors: [CVector6; 3],
    /// `branch_level[k]` is the frequency rank (0 = lowest) of branch `k`.
    pub branch_level: [usize; 3],
    /// Overlap of each branch with its predecessor at the previous detuning.
    pub overlaps: [f64; 3],
    /// Some branch had overlap ≤ 0.5 with every candidate.
    pub ambiguous: bool,
}

impl DispersionPoint {
    pub fn detuning(&self) -> f64 {
        self.params.delta
    }

    /// Branch indices ordered by ascending frequency.
    pub fn levels(&self) -> [usize; 3] {
        let mut out = [0; 3];
        for (k, &l) in self.branch_level.iter().enumerate() {
            out[l] = k;
        }
        out
    }

    pub fn level_frequencies(&self) -> [f64; 3] {
        self.levels().map(|k| self.frequencies[k])
    }
}

/// Crossing of the bare cavity line `|Δ|` with a bare mechanical frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BareCrossing {
    pub mode: Mode,
    /// Detuning at which `−Δ = Ω_j⁰`.
    pub detuning: f64,
    /// Smallest gap between adjacent participating levels near the crossing.
    pub min_gap: f64,
    /// Detuning where `min_gap` occurs.
    pub at_detuning: f64,
    pub avoided: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionCurve {
    pub points: Vec<DispersionPoint>,
}

fn overlap(a: &CVector6, b: &CVector6) -> f64 {
    a.dotc(b).norm()
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn track(prev: &DispersionPoint, sol: &EigenSolution) -> ([usize; 3], [f64; 3]) {
    let mut best = (PERMUTATIONS[0], [0.0; 3], f64::NEG_INFINITY);
    for perm in PERMUTATIONS {
        let ov: [f64; 3] = std::array::from_fn(|k| overlap(&prev.eigenvectors[k], &sol.pairs[perm[k]].eigenvector));
        let total: f64 = ov.iter().sum();
        if total > best.2 {
            best = (perm, ov, total);
        }
    }
    (best.0, best.1)
}

fn point(params: PhysicalParams, sol: &EigenSolution, perm: [usize; 3], overlaps: [f64; 3]) -> DispersionPoint {
    let pick = |k: usize| &sol.pairs[perm[k]];
    DispersionPoint {
        params,
        frequencies: std::array::from_fn(|k| pick(k).frequency()),
        half_widths: std::array::from_fn(|k| pick(k).half_width()),
        compositions: std::array::from_fn(|k| pick(k).composition),
        labels: std::array::from_fn(|k| pick(k).label),
        eigenvectors: std::array::from_fn(|k| pick(k).eigenvector),
        branch_level: perm,
        overlaps,
        ambiguous: overlaps.iter().any(|&o| o <= 0.5),
    }
}

/// Eigensolves every operating point (in parallel) and links the conjugate
/// pairs into three branches by maximal eigenvector overlap.
pub fn dispersion(sweep: &[PhysicalParams]) -> Result<DispersionCurve> {
    if sweep.is_empty() {
        return Err(Error::InsufficientData("empty detuning sweep".into()));
    }
    let rising = sweep.windows(2).all(|w| w[1].delta > w[0].delta);
    let falling = sweep.windows(2).all(|w| w[1].delta < w[0].delta);
    if !(rising || falling) {
        return Err(Error::InvalidParameter {
            field: "delta",
            reason: "sweep must be strictly monotone in detuning".into(),
        });
    }
    for p in sweep {
        p.validate()?;
    }

    let solutions: Vec<EigenSolution> =
        sweep.par_iter().map(|p| eigensolve(&build_drift_matrix(p))).collect::<Result<_>>()?;

    let mut points: Vec<DispersionPoint> = Vec::with_capacity(sweep.len());
    for (p, sol) in sweep.iter().zip(&solutions) {
        let pt = match points.last() {
            None => point(*p, sol, [0, 1, 2], [1.0; 3]),
            Some(prev) => {
                let (perm, ov) = track(prev, sol);
                point(*p, sol, perm, ov)
            }
        };
        points.push(pt);
    }
    Ok(DispersionCurve { points })
}

/// Sweeps the detuning of `base` from `start` to `stop` (inclusive) in steps of `step`.
pub fn dispersion_sweep(base: &PhysicalParams, start: f64, stop: f64, step: f64) -> Result<DispersionCurve> {
    dispersion(&detuning_sweep(base, start, stop, step)?)
}

pub(crate) fn detuning_sweep(base: &PhysicalParams, start: f64, stop: f64, step: f64) -> Result<Vec<PhysicalParams>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::InvalidParameter { field: "step", reason: "must be > 0 with finite bounds".into() });
    }
    let n = ((stop - start).abs() / step + 1e-9).floor() as usize + 1;
    let sign = if stop >= start { 1.0 } else { -1.0 };
    Ok((0..n).map(|i| base.with_delta(start + sign * step * i as f64)).collect())
}

impl DispersionCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn detunings(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.detuning()).collect()
    }

    /// Frequencies of tracked branch `k` across the sweep.
    pub fn branch(&self, k: usize) -> Vec<f64> {
        self.points.iter().map(|p| p.frequencies[k]).collect()
    }

    pub fn ambiguous_points(&self) -> Vec<usize> {
        self.points.iter().enumerate().filter(|(_, p)| p.ambiguous).map(|(i, _)| i).collect()
    }

    /// Largest detuning step in the sweep.
    pub fn max_step(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1].detuning() - w[0].detuning()).abs()).fold(0.0, f64::max)
    }

    /// The point closest to detuning `delta`.
    pub fn nearest(&self, delta: f64) -> Option<&DispersionPoint> {
        self.points.iter().min_by(|a, b| (a.detuning() - delta).abs().total_cmp(&(b.detuning() - delta).abs()))
    }

    /// Classifies every crossing of `|Δ|` with a bare mechanical frequency
    /// inside the swept range.
    ///
    /// Within `κ/2` of the bare crossing, only levels carrying more than half
    /// of their weight in the cavity or in mode `j` take part. The crossing
    /// is avoided if those levels stay more than `min_gap` apart throughout.
    pub fn bare_crossings(&self, min_gap: f64) -> Vec<BareCrossing> {
        let Some(first) = self.points.first() else {
            return Vec::new();
        };
        let (lo, hi) = self
            .points
            .iter()
            .map(|p| -p.detuning())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        let window = first.params.kappa / 2.0;

        let mut out = Vec::new();
        for mode in Mode::BOTH {
            let w0 = first.params.omega0(mode);
            if !(lo..=hi).contains(&w0) {
                continue;
            }
            let mut best = (f64::INFINITY, -w0);
            for p in self.points.iter().filter(|p| (-p.detuning() - w0).abs() <= window) {
                let weight = |k: usize| {
                    let c = p.compositions[k];
                    c.photonic + if mode == Mode::X { c.x } else { c.y }
                };
                let freqs: Vec<f64> =
                    p.levels().into_iter().filter(|&k| weight(k) > 0.5).map(|k| p.frequencies[k]).collect();
                let gap = freqs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
                if gap < best.0 {
                    best = (gap, p.detuning());
                }
            }
            out.push(BareCrossing {
                mode,
                detuning: -w0,
                min_gap: best.0,
                at_detuning: best.1,
                avoided: best.0.is_finite() && best.0 > min_gap,
            });
        }
        out
    }

    /// Number of avoided crossings, with `min_gap` twice the sweep step.
    pub fn avoided_crossings(&self) -> usize {
        let gap = 2.0 * self.max_step();
        self.bare_crossings(gap).iter().filter(|c| c.avoided).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::units::{khz, to_khz};

    fn coupled(gx: f64, gy: f64) -> PhysicalParams {
        PhysicalParams::default().with_couplings(khz(gx), khz(gy))
    }

    fn sweep(p: &PhysicalParams) -> DispersionCurve {
        dispersion_sweep(p, khz(-260.0), khz(-60.0), khz(1.0)).unwrap()
    }

    #[test]
    fn rejects_unsorted_sweep() {
        let p = coupled(9.0, 9.0);
        let s = [p.with_delta(khz(-100.0)), p.with_delta(khz(-120.0)), p.with_delta(khz(-110.0))];
        assert!(dispersion(&s).is_err());
    }

    #[test]
    fn sweep_includes_endpoints() {
        let s = detuning_sweep(&coupled(9.0, 9.0), khz(-260.0), khz(-60.0), khz(2.0)).unwrap();
        assert_eq!(s.len(), 101);
        assert!((to_khz(s[100].delta) + 60.0).abs() < 1e-9);
    }

    #[test]
    fn decoupled_sweep_has_true_crossings_only() {
        let c = sweep(&coupled(0.0, 0.0));
        assert_eq!(c.avoided_crossings(), 0);
        assert_eq!(c.bare_crossings(2.0 * c.max_step()).len(), 2);
    }

    #[test]
    fn vectorial_polaritons_have_two_avoided_crossings() {
        let c = sweep(&coupled(29.0, 9.0));
        assert_eq!(c.avoided_crossings(), 2);
        assert!(c.ambiguous_points().is_empty());
        let mid = c.nearest(khz(-125.0)).unwrap();
        assert_eq!(mid.labels[mid.levels()[1]], BranchLabel::Dark);
    }

    #[test]
    fn single_mode_has_one_avoided_crossing() {
        let c = sweep(&coupled(16.0, 0.0));
        let crossings = c.bare_crossings(2.0 * c.max_step());
        assert_eq!(c.avoided_crossings(), 1);
        let x = crossings.iter().find(|x| x.mode == Mode::X).unwrap();
        assert!(x.avoided);
    }

    #[test]
    fn tracking_follows_decoupled_mode_through_crossing() {
        let c = sweep(&coupled(16.0, 0.0));
        // the pure Y branch keeps its identity across the sweep
        let y_branch = (0..3).find(|&k| c.points[0].compositions[k].y > 0.99).unwrap();
        assert!(c.points.iter().all(|p| p.compositions[y_branch].y > 0.99));
    }

    #[test]
    fn far_detuned_mechanical_branches_are_phononic() {
        let p = coupled(2.0, 2.0).with_delta(khz(-600.0));
        let c = dispersion(&[p]).unwrap();
        let pt = &c.points[0];
        let lv = pt.levels();
        assert!(pt.compositions[lv[0]].phononic() > 0.99);
        assert!(pt.compositions[lv[1]].phononic() > 0.99);
    }
}
