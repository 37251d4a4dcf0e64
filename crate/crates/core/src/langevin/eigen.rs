use nalgebra::{Vector6, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CMatrix6, DriftMatrix};
use crate::error::{Error, Result};

pub type CVector6 = Vector6<Complex64>;

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 100_000;

/// Fraction of an eigenvector's squared norm carried by each oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    pub photonic: f64,
    pub x: f64,
    pub y: f64,
}

impl Composition {
    pub fn of(v: &CVector6) -> Self {
        let w = |i: usize| v[i].norm_sqr() + v[i + 1].norm_sqr();
        let (p, x, y) = (w(0), w(2), w(4));
        let total = p + x + y;
        Self { photonic: p / total, x: x / total, y: y / total }
    }

    pub fn phononic(&self) -> f64 {
        self.x + self.y
    }
}

/// Character of a conjugate pair, assigned by ranking photonic fractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BranchLabel {
    PhotonLike,
    PhononLike,
    Dark,
}

impl BranchLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            BranchLabel::PhotonLike => "photon-like",
            BranchLabel::PhononLike => "phonon-like",
            BranchLabel::Dark => "dark",
        }
    }
}

/// One conjugate pair `(λ, λ*)`, represented by the member with `Im λ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugatePair {
    pub eigenvalue: Complex64,
    /// Unit-norm right eigenvector of `eigenvalue`.
    pub eigenvector: CVector6,
    pub composition: Composition,
    pub label: BranchLabel,
    /// `|λ_partner − λ*| / |λ|`
    pub pairing_error: f64,
}

impl ConjugatePair {
    /// Eigenfrequency, `Im λ`.
    pub fn frequency(&self) -> f64 {
        self.eigenvalue.im
    }

    /// Half-linewidth, `Re λ`.
    pub fn half_width(&self) -> f64 {
        self.eigenvalue.re
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution {
    /// All six eigenvalues in solver order.
    pub eigenvalues: [Complex64; 6],
    /// Unit-norm right eigenvectors, same order as `eigenvalues`.
    pub eigenvectors: [CVector6; 6],
    /// The three conjugate pairs, ascending in frequency.
    pub pairs: [ConjugatePair; 3],
}

impl EigenSolution {
    pub fn frequencies(&self) -> [f64; 3] {
        self.pairs.map(|p| p.frequency())
    }

    pub fn half_widths(&self) -> [f64; 3] {
        self.pairs.map(|p| p.half_width())
    }

    pub fn by_label(&self, label: BranchLabel) -> &ConjugatePair {
        self.pairs.iter().find(|p| p.label == label).expect("every label is assigned exactly once")
    }

    pub fn max_pairing_error(&self) -> f64 {
        self.pairs.iter().map(|p| p.pairing_error).fold(0.0, f64::max)
    }

    pub fn is_stable(&self) -> bool {
        self.eigenvalues.iter().all(|l| l.re > 0.0)
    }
}

pub(super) fn eigenvalues(d: &DriftMatrix) -> Result<[Complex64; 6]> {
    let m = d.matrix();
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Domain("drift matrix has non-finite entries".into()));
    }
    let schur = m.try_schur(SCHUR_EPS, SCHUR_MAX_ITER).ok_or(Error::EigenConvergence)?;
    let ev = schur.eigenvalues().ok_or(Error::EigenConvergence)?;
    Ok(std::array::from_fn(|k| ev[k]))
}

/// Right null vector of `D − λI`, from the smallest singular value.
fn null_vector(m: &CMatrix6, lambda: Complex64) -> Result<CVector6> {
    let mut a = *m;
    for k in 0..6 {
        a[(k, k)] -= lambda;
    }
    let svd = SVD::try_new(a, false, true, SCHUR_EPS, SCHUR_MAX_ITER).ok_or(Error::EigenConvergence)?;
    let v_t = svd.v_t.ok_or(Error::EigenConvergence)?;
    let k = svd.singular_values.imin();
    let v: CVector6 = v_t.row(k).adjoint();
    Ok(v.normalize())
}

fn pair_up(ev: &[Complex64; 6]) -> Vec<(usize, usize, f64)> {
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| ev[b].im.total_cmp(&ev[a].im));
    let mut used = [false; 6];
    let mut pairs = Vec::with_capacity(3);
    for &i in &order {
        if used[i] {
            continue;
        }
        used[i] = true;
        let target = ev[i].conj();
        let j = (0..6)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (ev[a] - target).norm().total_cmp(&(ev[b] - target).norm()))
            .expect("six eigenvalues pair up");
        used[j] = true;
        let scale = ev[i].norm().max(f64::MIN_POSITIVE);
        pairs.push((i, j, (ev[j] - target).norm() / scale));
    }
    pairs
}

fn assign_labels(comp: &[Composition; 3]) -> [BranchLabel; 3] {
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| comp[b].photonic.total_cmp(&comp[a].photonic));
    let mut labels = [BranchLabel::PhononLike; 3];
    labels[idx[0]] = BranchLabel::PhotonLike;
    labels[idx[2]] = BranchLabel::Dark;
    labels
}

/// Eigenvalues, eigenvectors, conjugate pairing and polariton character of **D**.
pub fn eigensolve(d: &DriftMatrix) -> Result<EigenSolution> {
    let ev = eigenvalues(d)?;
    let mut vecs = [CVector6::zeros(); 6];
    for (k, l) in ev.iter().enumerate() {
        vecs[k] = null_vector(d.matrix(), *l)?;
    }

    let mut raw: Vec<(Complex64, CVector6, f64)> =
        pair_up(&ev).into_iter().map(|(i, _, err)| (ev[i], vecs[i], err)).collect();
    raw.sort_by(|a, b| a.0.im.total_cmp(&b.0.im));

    let comps: [Composition; 3] = std::array::from_fn(|k| Composition::of(&raw[k].1));
    let labels = assign_labels(&comps);
    let pairs = std::array::from_fn(|k| ConjugatePair {
        eigenvalue: raw[k].0,
        eigenvector: raw[k].1,
        composition: comps[k],
        label: labels[k],
        pairing_error: raw[k].2,
    });

    Ok(EigenSolution { eigenvalues: ev, eigenvectors: vecs, pairs })
}
