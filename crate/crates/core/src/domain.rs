//! Positivity and non-contractivity domains of (possibly non-positive)
//! affine qubit maps.
//!
//! The positivity domain of a map `L` is the set of states whose image is
//! again a state. Inside it, the non-contractivity domain w.r.t. a
//! quantifier `d` collects the states that admit a partner for which `d`
//! strictly grows under `L`. Membership is certified positively with a
//! witness partner; a negative verdict is budget-bounded and is reported
//! together with the budget spent, so it stays falsifiable.

use rayon::prelude::*;

use crate::consts::{REVIVAL_FLOOR, STATE_TOL};
use crate::quant::QuantifierId;
use crate::qubit::{AffineMap, BlochVector};
use crate::sample::{random_direction, random_state, stream_rng};
use crate::{Error, Result};

/// Whether `r` belongs to the positivity domain of `m`: its image stays a
/// valid state.
pub fn pd_membership(m: &AffineMap, r: BlochVector) -> bool {
    m.apply(r).is_valid_state(STATE_TOL)
}

/// Maximum admissible step `t >= 0` such that `base + t u` stays inside the
/// unit ball and the positivity domain of `m`. Returns `None` when not even
/// `base` qualifies.
fn admissible_radius(m: &AffineMap, base: BlochVector, u: BlochVector) -> Option<f64> {
    // ball constraint: |base + t u|^2 <= 1
    let b2 = base.norm_sq();
    if b2 > 1.0 + STATE_TOL {
        return None;
    }
    let ball_t = {
        let a = u.norm_sq();
        let b = base.dot(&u);
        let disc = b * b + a * (1.0 - b2);
        if a == 0.0 {
            f64::INFINITY
        } else {
            (-b + disc.max(0.0).sqrt()) / a
        }
    };
    // PD constraint: |D(base + t u) + k|^2 <= 1, quadratic in t
    let img0 = m.apply(base);
    if !img0.is_valid_state(STATE_TOL) {
        return None;
    }
    let du = BlochVector::new(m.diag[0] * u.x, m.diag[1] * u.y, m.diag[2] * u.z);
    let a = du.norm_sq();
    let b = img0.dot(&du);
    let c = img0.norm_sq() - 1.0;
    let pd_t = if a == 0.0 {
        f64::INFINITY
    } else {
        let disc = b * b - a * c;
        (-b + disc.max(0.0).sqrt()) / a
    };
    Some(ball_t.min(pd_t).max(0.0))
}

/// Deterministic partner candidates: the antipode pulled into the domain,
/// the preimage of zero, and the 26 sign-combination directions scaled to
/// the domain boundary.
fn deterministic_candidates(m: &AffineMap, r: BlochVector) -> Vec<BlochVector> {
    let mut out = Vec::with_capacity(30);
    // antipode, scaled into the domain along its ray
    if let Some(t) = admissible_radius(m, BlochVector::ZERO, -r) {
        out.push(-r * t.min(1.0));
    }
    // preimage of the Bloch-ball center, a deep interior point
    if let Ok(inv) = m.invert() {
        let center = inv.apply(BlochVector::ZERO);
        if center.norm() <= 1.0 && pd_membership(m, center) {
            out.push(center);
        }
    }
    for i in -1i32..=1 {
        for j in -1i32..=1 {
            for k in -1i32..=1 {
                if i == 0 && j == 0 && k == 0 {
                    continue;
                }
                let u = BlochVector::new(i as f64, j as f64, k as f64).normalized().unwrap();
                if let Some(t) = admissible_radius(m, BlochVector::ZERO, u) {
                    if t > 0.0 {
                        out.push(u * t.min(1.0));
                    }
                }
            }
        }
    }
    out
}

/// Random partner: alternates uniform-ball rejection into the domain with
/// boundary-biased draws (radius in `[0.9, 1]` of the admissible ray),
/// where contractivity violations concentrate.
fn random_partner(m: &AffineMap, rng: &mut impl rand::Rng, boundary_biased: bool) -> Option<BlochVector> {
    if boundary_biased {
        let u = random_direction(rng);
        let t = admissible_radius(m, BlochVector::ZERO, u)?;
        let f = rng.gen_range(0.9..=1.0);
        return Some(u * (t.min(1.0) * f));
    }
    for _ in 0..64 {
        let v = random_state(rng);
        if pd_membership(m, v) {
            return Some(v);
        }
    }
    None
}

/// Outcome of a non-contractivity-domain membership query.
#[derive(Clone, Copy, Debug)]
pub struct NcdOutcome {
    pub member: bool,
    /// Witness partner when membership was certified.
    pub witness: Option<BlochVector>,
    /// Partners actually examined; bounds the strength of a negative verdict.
    pub partners_tested: usize,
}

/// Searches for a partner `s` in the positivity domain with
/// `d(L r, L s) > d(r, s)`. Membership is certified by the witness; `false`
/// only means no witness within `budget` partners.
///
/// Supported quantifiers: the JSD and the two skew divergences.
pub fn ncd_membership(
    m: &AffineMap,
    r: BlochVector,
    q: QuantifierId,
    budget: usize,
    seed: u64,
) -> Result<NcdOutcome> {
    match q {
        QuantifierId::Jsd | QuantifierId::HolevoSkew { .. } | QuantifierId::QuantumSkew { .. } => {
            q.validate()?
        }
        other => return Err(Error::NotNormBased(other.label())),
    }
    if r.norm() > 1.0 + STATE_TOL || !pd_membership(m, r) {
        return Err(Error::OutsidePositivityDomain);
    }
    let img_r = m.apply(r);
    let mut tested = 0usize;
    let mut check = |s: BlochVector| -> Result<bool> {
        tested += 1;
        let before = q.eval_bloch(r, s)?;
        let after = q.eval_bloch(img_r, m.apply(s))?;
        Ok(after - before > REVIVAL_FLOOR)
    };

    for cand in deterministic_candidates(m, r) {
        if check(cand)? {
            return Ok(NcdOutcome { member: true, witness: Some(cand), partners_tested: tested });
        }
    }
    let mut rng = stream_rng(seed, 0);
    for i in 0..budget {
        if let Some(s) = random_partner(m, &mut rng, i % 2 == 0) {
            if check(s)? {
                return Ok(NcdOutcome { member: true, witness: Some(s), partners_tested: tested });
            }
        }
    }
    Ok(NcdOutcome { member: false, witness: None, partners_tested: tested })
}

/// For a unital map with expanding axis `lambda_max > 1`, the pair
/// `(+- 1/lambda_max, 0, 0)` along that axis maps to orthogonal pure states,
/// so the JSD reaches 1 on the images while the preimages give strictly
/// less.
pub fn unital_noncontractive_pair(lambda_max: f64) -> Result<(BlochVector, BlochVector)> {
    if lambda_max <= 1.0 {
        return Err(Error::NotExpanding(lambda_max));
    }
    let r = BlochVector::new(1.0 / lambda_max, 0.0, 0.0);
    Ok((r, -r))
}

/// Class of one section grid point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainLabel {
    OutsideBall,
    NotInPd,
    InPdNotNcd,
    InPdAndNcd,
}

impl DomainLabel {
    pub fn label(&self) -> &'static str {
        match self {
            DomainLabel::OutsideBall => "outside-ball",
            DomainLabel::NotInPd => "not-in-pd",
            DomainLabel::InPdNotNcd => "in-pd-not-ncd",
            DomainLabel::InPdAndNcd => "in-pd-and-ncd",
        }
    }
}

/// Axis selecting the plane of a section.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Plane specification: `axis = offset`.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct SectionPlane {
    pub axis: Axis,
    pub offset: f64,
}

impl SectionPlane {
    /// Embeds section coordinates `(u, v)` into the Bloch ball.
    pub fn embed(&self, u: f64, v: f64) -> BlochVector {
        match self.axis {
            Axis::X => BlochVector::new(self.offset, u, v),
            Axis::Y => BlochVector::new(u, self.offset, v),
            Axis::Z => BlochVector::new(u, v, self.offset),
        }
    }
}

/// Classified section of the Bloch ball.
#[derive(Clone, Debug)]
pub struct DomainSection {
    pub map: AffineMap,
    pub plane: SectionPlane,
    pub resolution: usize,
    /// Row-major labels over the uniform `[-1, 1]^2` grid of `(u, v)`.
    pub labels: Vec<DomainLabel>,
    pub budget_per_point: usize,
}

impl DomainSection {
    /// Section coordinates of grid node `(i, j)`.
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        let step = 2.0 / (self.resolution - 1) as f64;
        (-1.0 + step * i as f64, -1.0 + step * j as f64)
    }

    pub fn label_at(&self, i: usize, j: usize) -> DomainLabel {
        self.labels[i * self.resolution + j]
    }

    pub fn count(&self, which: DomainLabel) -> usize {
        self.labels.iter().filter(|&&l| l == which).count()
    }
}

/// Classifies a plane section at the given resolution (minimum 32). Points
/// are processed in parallel; each draws from its own seeded stream.
pub fn domain_section(
    m: &AffineMap,
    plane: SectionPlane,
    resolution: usize,
    budget: usize,
    seed: u64,
) -> Result<DomainSection> {
    if resolution < 32 {
        return Err(Error::BadResolution(resolution, 32));
    }
    let labels: Vec<DomainLabel> = (0..resolution * resolution)
        .into_par_iter()
        .map(|idx| {
            let i = idx / resolution;
            let j = idx % resolution;
            let step = 2.0 / (resolution - 1) as f64;
            let r = plane.embed(-1.0 + step * i as f64, -1.0 + step * j as f64);
            if r.norm() > 1.0 {
                return DomainLabel::OutsideBall;
            }
            if !pd_membership(m, r) {
                return DomainLabel::NotInPd;
            }
            match ncd_membership(m, r, QuantifierId::Jsd, budget, seed.wrapping_add(idx as u64)) {
                Ok(out) if out.member => DomainLabel::InPdAndNcd,
                _ => DomainLabel::InPdNotNcd,
            }
        })
        .collect();
    Ok(DomainSection { map: *m, plane, resolution, labels, budget_per_point: budget })
}

/// A certified non-contractive pair.
#[derive(Clone, Copy, Debug)]
pub struct NoncontractivePair {
    pub pair: (BlochVector, BlochVector),
    /// `d(L r1, L r2) - d(r1, r2)` of the witness.
    pub gain: f64,
    pub evaluations: usize,
}

/// Searches the positivity domain of a non-positive map for a pair on which
/// the JSD strictly grows: deterministic candidate pairs, then random pairs,
/// then shrinking-step hill climbing from the best pair seen. Errors when
/// the map is positive (contractivity makes the search vacuous).
pub fn find_noncontractive_pair(
    m: &AffineMap,
    budget: usize,
    seed: u64,
) -> Result<Option<NoncontractivePair>> {
    if m.is_positive(STATE_TOL) {
        return Err(Error::PositiveMap);
    }
    let q = QuantifierId::Jsd;
    let mut evals = 0usize;
    let gain_of = |a: BlochVector, b: BlochVector| -> f64 {
        match (q.eval_bloch(a, b), q.eval_bloch(m.apply(a), m.apply(b))) {
            (Ok(before), Ok(after)) => after - before,
            _ => f64::MIN,
        }
    };

    let mut best_gain = f64::MIN;
    let mut best = (BlochVector::ZERO, BlochVector::ZERO);
    let mut consider = |a: BlochVector, b: BlochVector, evals: &mut usize| -> Option<NoncontractivePair> {
        *evals += 1;
        let g = gain_of(a, b);
        if g > best_gain {
            best_gain = g;
            best = (a, b);
        }
        if g > REVIVAL_FLOOR {
            Some(NoncontractivePair { pair: (a, b), gain: g, evaluations: *evals })
        } else {
            None
        }
    };

    // stage 1: deterministic candidates paired among themselves
    let cands = deterministic_candidates(m, BlochVector::ZERO);
    for i in 0..cands.len() {
        for j in (i + 1)..cands.len() {
            if let Some(hit) = consider(cands[i], cands[j], &mut evals) {
                return Ok(Some(hit));
            }
        }
    }

    // stage 2: random pairs, boundary-biased half the time
    let mut rng = stream_rng(seed, 1);
    let random_budget = budget / 2;
    for i in 0..random_budget {
        let (Some(a), Some(b)) = (
            random_partner(m, &mut rng, i % 2 == 0),
            random_partner(m, &mut rng, true),
        ) else {
            continue;
        };
        if let Some(hit) = consider(a, b, &mut evals) {
            return Ok(Some(hit));
        }
    }

    // stage 3: hill climbing from the best pair seen
    let mut step = 0.2;
    let mut current = best;
    let mut current_gain = best_gain;
    let climb_budget = budget.saturating_sub(evals);
    let mut rng = stream_rng(seed, 2);
    for _ in 0..climb_budget {
        let jitter = |v: BlochVector, rng: &mut rand_chacha::ChaCha8Rng, s: f64| {
            let w = v + random_state(rng) * s;
            // project back into ball and PD along the ray from the origin
            match admissible_radius(m, BlochVector::ZERO, w) {
                Some(t) => {
                    let n = w.norm();
                    if n <= t.min(1.0) || n == 0.0 {
                        w
                    } else {
                        w * (t.min(1.0) / n)
                    }
                }
                None => v,
            }
        };
        let a = jitter(current.0, &mut rng, step);
        let b = jitter(current.1, &mut rng, step);
        evals += 1;
        let g = gain_of(a, b);
        if g > current_gain {
            current_gain = g;
            current = (a, b);
            if g > REVIVAL_FLOOR {
                return Ok(Some(NoncontractivePair { pair: (a, b), gain: g, evaluations: evals }));
            }
        } else {
            step *= 0.995;
            if step < 1e-4 {
                step = 0.2;
                current = best;
                current_gain = best_gain;
            }
        }
    }
    Ok(None)
}
