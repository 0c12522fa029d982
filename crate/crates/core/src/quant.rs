//! Distinguishability quantifiers for qubit states.
//!
//! Trace-norm based: trace distance and its biased-ensemble generalization
//! through the Helstrom matrix `Delta = p rho - (1-p) sigma`. Entropic:
//! relative entropy, Jensen-Shannon divergence (JSD), its square root, and
//! the two skewed generalizations (Holevo and quantum skew divergences).
//!
//! All entropies are base 2. Every bounded quantifier evaluates from the
//! three scalar invariants `(|r1|^2, |r2|^2, r1.r2)` of the Bloch pair, which
//! makes evaluation exact under common rotations and cheap inside trajectory
//! sweeps.

use crate::consts::SUPPORT_EPS;
use crate::qubit::{entropy_of_norm_sq, h2, BlochVector, DensityMatrix, HermitianOperator};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Extended-real value of a divergence. Only the relative entropy can be
/// infinite; the tagged representation keeps floating-point specials out of
/// serialized outputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceValue {
    Finite(f64),
    Infinite,
}

impl DivergenceValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            DivergenceValue::Finite(v) => Some(*v),
            DivergenceValue::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, DivergenceValue::Infinite)
    }

    /// Collapses to `f64`, mapping the infinite tag to `f64::INFINITY`.
    /// For internal arithmetic only; never serialized.
    pub fn as_f64(&self) -> f64 {
        match self {
            DivergenceValue::Finite(v) => *v,
            DivergenceValue::Infinite => f64::INFINITY,
        }
    }
}

/// Tagged choice of distinguishability quantifier.
///
/// `Helstrom { bias: 0.5 }` evaluates identically to the trace distance, and
/// both skew divergences at `skew = 0.5` evaluate identically to the JSD.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QuantifierId {
    TraceDistance,
    Helstrom { bias: f64 },
    RelativeEntropy,
    Jsd,
    SqrtJsd,
    HolevoSkew { skew: f64 },
    QuantumSkew { skew: f64 },
}

impl QuantifierId {
    pub fn validate(&self) -> Result<()> {
        match *self {
            QuantifierId::Helstrom { bias } if !(bias > 0.0 && bias < 1.0) => {
                Err(Error::BiasRange(bias))
            }
            QuantifierId::HolevoSkew { skew } | QuantifierId::QuantumSkew { skew }
                if !(skew > 0.0 && skew < 1.0) =>
            {
                Err(Error::SkewRange(skew))
            }
            _ => Ok(()),
        }
    }

    /// Bounded quantifiers take values in `[0, 1]`; only the relative entropy
    /// is unbounded.
    pub fn is_bounded(&self) -> bool {
        !matches!(self, QuantifierId::RelativeEntropy)
    }

    /// Bias or skew parameter, when the quantifier has one.
    pub fn parameter(&self) -> Option<f64> {
        match *self {
            QuantifierId::Helstrom { bias } => Some(bias),
            QuantifierId::HolevoSkew { skew } | QuantifierId::QuantumSkew { skew } => Some(skew),
            _ => None,
        }
    }

    /// Same kind with the bias/skew replaced; identity for parameter-free
    /// quantifiers.
    pub fn with_parameter(&self, v: f64) -> QuantifierId {
        match *self {
            QuantifierId::Helstrom { .. } => QuantifierId::Helstrom { bias: v },
            QuantifierId::HolevoSkew { .. } => QuantifierId::HolevoSkew { skew: v },
            QuantifierId::QuantumSkew { .. } => QuantifierId::QuantumSkew { skew: v },
            other => other,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            QuantifierId::TraceDistance => "td".into(),
            QuantifierId::Helstrom { bias } => format!("helstrom(p={bias})"),
            QuantifierId::RelativeEntropy => "relative-entropy".into(),
            QuantifierId::Jsd => "jsd".into(),
            QuantifierId::SqrtJsd => "sqrt-jsd".into(),
            QuantifierId::HolevoSkew { skew } => format!("holevo-skew(mu={skew})"),
            QuantifierId::QuantumSkew { skew } => format!("quantum-skew(mu={skew})"),
        }
    }

    /// Base kind label without parameters, used to group sweep results.
    pub fn kind_label(&self) -> &'static str {
        match self {
            QuantifierId::TraceDistance => "td",
            QuantifierId::Helstrom { .. } => "helstrom",
            QuantifierId::RelativeEntropy => "relative-entropy",
            QuantifierId::Jsd => "jsd",
            QuantifierId::SqrtJsd => "sqrt-jsd",
            QuantifierId::HolevoSkew { .. } => "holevo-skew",
            QuantifierId::QuantumSkew { .. } => "quantum-skew",
        }
    }

    /// Evaluates the quantifier on two states.
    pub fn evaluate(&self, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<DivergenceValue> {
        self.validate()?;
        if matches!(self, QuantifierId::RelativeEntropy) {
            return relative_entropy(rho, sigma);
        }
        Ok(DivergenceValue::Finite(self.eval_bloch(rho.bloch(), sigma.bloch())?))
    }

    /// Fast path for bounded quantifiers on Bloch vectors.
    pub fn eval_bloch(&self, r1: BlochVector, r2: BlochVector) -> Result<f64> {
        self.validate()?;
        let g = PairGeom::of(r1, r2);
        match *self {
            QuantifierId::TraceDistance => Ok(td_geom(&g)),
            QuantifierId::Helstrom { bias } => Ok(helstrom_geom(bias, &g)),
            QuantifierId::Jsd => Ok(jsd_geom(&g)),
            QuantifierId::SqrtJsd => Ok(jsd_geom(&g).sqrt()),
            QuantifierId::HolevoSkew { skew } => Ok(holevo_geom(skew, &g)),
            QuantifierId::QuantumSkew { skew } => Ok(qskew_geom(skew, &g)),
            QuantifierId::RelativeEntropy => {
                Err(Error::UnboundedQuantifier(self.label()))
            }
        }
    }
}

/// Scalar invariants of a Bloch pair: squared norms and the dot product.
/// Everything any quantifier needs is a function of these three numbers.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PairGeom {
    pub n1: f64,
    pub n2: f64,
    pub dot: f64,
}

impl PairGeom {
    pub fn of(r1: BlochVector, r2: BlochVector) -> Self {
        Self { n1: r1.norm_sq(), n2: r2.norm_sq(), dot: r1.dot(&r2) }
    }
}

pub(crate) fn td_geom(g: &PairGeom) -> f64 {
    0.5 * (g.n1 + g.n2 - 2.0 * g.dot).max(0.0).sqrt()
}

pub(crate) fn helstrom_geom(bias: f64, g: &PairGeom) -> f64 {
    let q = 1.0 - bias;
    let b = 2.0 * bias - 1.0;
    let vsq = bias * bias * g.n1 + q * q * g.n2 - 2.0 * bias * q * g.dot;
    b.abs().max(vsq.max(0.0).sqrt())
}

pub(crate) fn jsd_geom(g: &PairGeom) -> f64 {
    let msq = 0.25 * (g.n1 + g.n2 + 2.0 * g.dot);
    let j = entropy_of_norm_sq(msq)
        - 0.5 * (entropy_of_norm_sq(g.n1) + entropy_of_norm_sq(g.n2));
    j.max(0.0)
}

pub(crate) fn holevo_geom(mu: f64, g: &PairGeom) -> f64 {
    let nu = 1.0 - mu;
    let msq = mu * mu * g.n1 + nu * nu * g.n2 + 2.0 * mu * nu * g.dot;
    let chi = entropy_of_norm_sq(msq)
        - mu * entropy_of_norm_sq(g.n1)
        - nu * entropy_of_norm_sq(g.n2);
    (chi / h2(mu)).max(0.0)
}

/// Relative entropy of a state with entropy `h_rho` and Bloch data
/// `(n_rho_sq, r_rho . r_m)` against the mixture with Bloch norm `nm`.
/// The mixture always dominates the supports that arise in the skew
/// divergence, so the result is finite; `0 log 0 = 0` is applied to
/// vanishing weights.
fn relent_to_mixture(h_rho: f64, dot_rm: f64, nm: f64) -> f64 {
    let (lp, lm, wp, wm);
    if nm < 1e-15 {
        // maximally mixed reference: log eigenvalues are both -1
        lp = -1.0;
        lm = -1.0;
        wp = 0.5;
        wm = 0.5;
    } else {
        let sp = 0.5 * (1.0 + nm);
        let sm = 0.5 * (1.0 - nm);
        let c = (dot_rm / nm).clamp(-1.0, 1.0);
        wp = 0.5 * (1.0 + c);
        wm = 0.5 * (1.0 - c);
        lp = sp.log2();
        lm = if sm > 0.0 { sm.log2() } else { 0.0 };
        if sm <= 0.0 && wm > SUPPORT_EPS {
            // cannot happen for genuine mixtures; keep a conservative answer
            return f64::INFINITY;
        }
    }
    let mut s = -h_rho - wp * lp;
    if wm > 0.0 && nm < 1.0 {
        s -= wm * lm;
    }
    s.max(0.0)
}

pub(crate) fn qskew_geom(mu: f64, g: &PairGeom) -> f64 {
    let nu = 1.0 - mu;
    let msq = (mu * mu * g.n1 + nu * nu * g.n2 + 2.0 * mu * nu * g.dot).max(0.0);
    let nm = msq.sqrt().min(1.0);
    let h1 = entropy_of_norm_sq(g.n1);
    let h2v = entropy_of_norm_sq(g.n2);
    // r_i . r_m from the cached scalars
    let dot1m = mu * g.n1 + nu * g.dot;
    let dot2m = mu * g.dot + nu * g.n2;
    let s1 = relent_to_mixture(h1, dot1m, nm);
    let s2 = relent_to_mixture(h2v, dot2m, nm);
    let c1 = mu / (1.0 / mu).log2();
    let c2 = nu / (1.0 / nu).log2();
    (c1 * s1 + c2 * s2).max(0.0)
}

/// Trace distance `D(rho, sigma) = ||rho - sigma|| / 2`; for qubits this is
/// half the Euclidean distance of the Bloch vectors.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    td_geom(&PairGeom::of(rho.bloch(), sigma.bloch()))
}

/// Probe of translation invariance: whether
/// `||(rho + A) - (sigma + A)||/2` equals `||rho - sigma||/2`. Always true;
/// exposed as a property check.
pub fn td_translation_check(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    a: &HermitianOperator,
) -> bool {
    let lhs = 0.5 * ((rho.operator() + *a) - (sigma.operator() + *a)).trace_norm();
    let rhs = 0.5 * (rho.operator() - sigma.operator()).trace_norm();
    (lhs - rhs).abs() < 1e-12
}

/// Trace norm of the Helstrom matrix `Delta = p rho - (1-p) sigma`.
pub fn helstrom_norm(bias: f64, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    QuantifierId::Helstrom { bias }.eval_bloch(rho.bloch(), sigma.bloch())
}

/// Single-shot discrimination probability `(1 + ||Delta||)/2` for the
/// trace-norm quantifiers (trace distance or Helstrom).
pub fn discrimination_probability(
    q: QuantifierId,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
) -> Result<f64> {
    match q {
        QuantifierId::TraceDistance | QuantifierId::Helstrom { .. } => {
            Ok(0.5 * (1.0 + q.eval_bloch(rho.bloch(), sigma.bloch())?))
        }
        other => Err(Error::NotNormBased(other.label())),
    }
}

/// Quantum relative entropy in base 2; infinite when the support of `rho`
/// is not contained in the support of `sigma` (eigenvalues below
/// [`SUPPORT_EPS`] count as zero support).
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<DivergenceValue> {
    let r1 = rho.bloch();
    let r2 = sigma.bloch();
    let h1 = rho.von_neumann_entropy()?;
    let n2 = r2.norm().min(1.0);
    let sp = 0.5 * (1.0 + n2);
    let sm = 0.5 * (1.0 - n2);
    let (wp, wm) = if n2 < 1e-15 {
        (0.5, 0.5)
    } else {
        let c = (r1.dot(&r2) / n2).clamp(-1.0, 1.0);
        (0.5 * (1.0 + c), 0.5 * (1.0 - c))
    };
    let mut s = -h1;
    for (w, sv) in [(wp, sp), (wm, sm)] {
        if sv < SUPPORT_EPS {
            if w > SUPPORT_EPS {
                return Ok(DivergenceValue::Infinite);
            }
        } else if w > 0.0 {
            s -= w * sv.log2();
        }
    }
    Ok(DivergenceValue::Finite(s.max(0.0)))
}

/// Asymptotic `N`-copy discrimination probability `1 - e^{-N S}`.
///
/// The relative entropy is kept in base 2 everywhere else; since the decay
/// law is a natural exponential, the rate is converted to nats here
/// (factor `ln 2`).
pub fn asymptotic_discrimination(
    n: u32,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
) -> Result<f64> {
    let s = relative_entropy(rho, sigma)?;
    Ok(match s {
        DivergenceValue::Infinite => 1.0,
        DivergenceValue::Finite(bits) => {
            let nats = bits * std::f64::consts::LN_2;
            1.0 - (-(n as f64) * nats).exp()
        }
    })
}

/// Jensen-Shannon divergence
/// `J = H((rho+sigma)/2) - H(rho)/2 - H(sigma)/2`, in `[0, 1]`.
pub fn jsd(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    QuantifierId::Jsd.eval_bloch(rho.bloch(), sigma.bloch())
}

/// Square root of the JSD; a true distance.
pub fn sqrt_jsd(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(jsd(rho, sigma)?.sqrt())
}

/// Holevo skew divergence `K_mu = chi_mu / h(mu)`, in `[0, 1]`.
pub fn holevo_skew(skew: f64, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    QuantifierId::HolevoSkew { skew }.eval_bloch(rho.bloch(), sigma.bloch())
}

/// Quantum skew divergence
/// `S_mu = mu/log(1/mu) S(rho, m) + (1-mu)/log(1/(1-mu)) S(sigma, m)` with
/// `m = mu rho + (1-mu) sigma`; both terms are finite by construction.
pub fn quantum_skew(skew: f64, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    QuantifierId::QuantumSkew { skew }.eval_bloch(rho.bloch(), sigma.bloch())
}

/// Constants `(eta_S, eta_K)` of the triangle-like inequalities for the skew
/// divergences:
/// `eta_K = (8 mu (1-mu) / h(mu)^3)^(1/4)` and
/// `eta_S = log(1/(mu(1-mu))) * (mu(1-mu) / (2 h(mu) log^3 mu log^3(1-mu)))^(1/4)`,
/// logs base 2.
pub fn triangle_constants(skew: f64) -> Result<(f64, f64)> {
    if !(skew > 0.0 && skew < 1.0) {
        return Err(Error::SkewRange(skew));
    }
    let mu = skew;
    let nu = 1.0 - mu;
    let h = h2(mu);
    let eta_k = (8.0 * mu * nu / (h * h * h)).powf(0.25);
    let l1 = mu.log2();
    let l2 = nu.log2();
    let inner = mu * nu / (2.0 * h * l1.powi(3) * l2.powi(3));
    let eta_s = (1.0 / (mu * nu)).log2() * inner.powf(0.25);
    Ok((eta_s, eta_k))
}

/// Checks the two-sided bound `D^2/2 <= J <= D` with slack `-1e-10`.
pub fn jsd_bounds_check(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<(bool, bool)> {
    let g = PairGeom::of(rho.bloch(), sigma.bloch());
    let d = td_geom(&g);
    let j = jsd_geom(&g);
    Ok((j - 0.5 * d * d >= -1e-10, d - j >= -1e-10))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::state_from_bloch;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn rng() -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(11)
    }

    fn ball(rng: &mut impl Rng) -> BlochVector {
        loop {
            let v = BlochVector::new(
                rng.gen_range(-1.0..=1.0),
                rng.gen_range(-1.0..=1.0),
                rng.gen_range(-1.0..=1.0),
            );
            if v.norm_sq() <= 1.0 {
                return v;
            }
        }
    }

    fn xplus() -> DensityMatrix {
        state_from_bloch(BlochVector::new(1.0, 0.0, 0.0))
    }

    fn xminus() -> DensityMatrix {
        state_from_bloch(BlochVector::new(-1.0, 0.0, 0.0))
    }

    #[test]
    fn trace_distance_examples() {
        let rho = state_from_bloch(BlochVector::new(0.2, 0.1, -0.4));
        assert_eq!(trace_distance(&rho, &rho), 0.0);
        assert_relative_eq!(trace_distance(&xplus(), &xminus()), 1.0, max_relative = 1e-15);
        let a = state_from_bloch(BlochVector::new(0.5, 0.0, 0.0));
        let b = state_from_bloch(BlochVector::new(-0.5, 0.0, 0.0));
        assert_relative_eq!(trace_distance(&a, &b), 0.5, max_relative = 1e-14);
        // cross-check through the operator trace norm
        let tn = 0.5 * (a - b).trace_norm();
        assert_relative_eq!(trace_distance(&a, &b), tn, max_relative = 1e-13);
    }

    #[test]
    fn translation_invariance() {
        let mut r = rng();
        for _ in 0..200 {
            let rho = state_from_bloch(ball(&mut r));
            let sigma = state_from_bloch(ball(&mut r));
            let tau = state_from_bloch(ball(&mut r));
            let a = HermitianOperator::from_parts(
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
            );
            assert!(td_translation_check(&rho, &sigma, &a));
            // A = tau - (rho+sigma)/2
            let mid = (rho.operator() + sigma.operator()).scale(0.5);
            assert!(td_translation_check(&rho, &sigma, &(tau.operator() - mid)));
        }
    }

    #[test]
    fn helstrom_examples() {
        assert_relative_eq!(helstrom_norm(0.5, &xplus(), &xminus()).unwrap(), 1.0);
        let rho = state_from_bloch(BlochVector::new(0.3, -0.1, 0.2));
        assert_relative_eq!(helstrom_norm(0.7, &rho, &rho).unwrap(), 0.4, max_relative = 1e-14);
        assert!(helstrom_norm(0.0, &rho, &rho).is_err());
        assert!(helstrom_norm(1.0, &rho, &rho).is_err());
        // value stays within [|2p-1|, 1]
        let mut r = rng();
        for _ in 0..500 {
            let p = r.gen_range(0.05..0.95);
            let a = state_from_bloch(ball(&mut r));
            let b = state_from_bloch(ball(&mut r));
            let v = helstrom_norm(p, &a, &b).unwrap();
            assert!(v >= (2.0 * p - 1.0).abs() - 1e-14 && v <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn helstrom_reduces_to_td_at_even_bias() {
        let mut r = rng();
        for _ in 0..1000 {
            let a = state_from_bloch(ball(&mut r));
            let b = state_from_bloch(ball(&mut r));
            let h = helstrom_norm(0.5, &a, &b).unwrap();
            let d = trace_distance(&a, &b);
            assert!((h - d).abs() < 1e-14);
        }
    }

    #[test]
    fn discrimination_probabilities() {
        let rho = state_from_bloch(BlochVector::new(0.1, 0.0, 0.3));
        assert_relative_eq!(
            discrimination_probability(QuantifierId::TraceDistance, &rho, &rho).unwrap(),
            0.5
        );
        assert_relative_eq!(
            discrimination_probability(QuantifierId::TraceDistance, &xplus(), &xminus()).unwrap(),
            1.0
        );
        assert_relative_eq!(
            discrimination_probability(QuantifierId::Helstrom { bias: 0.7 }, &rho, &rho).unwrap(),
            0.7,
            max_relative = 1e-14
        );
        assert!(discrimination_probability(QuantifierId::Jsd, &rho, &rho).is_err());
    }

    #[test]
    fn relative_entropy_examples() {
        let rho = state_from_bloch(BlochVector::new(0.2, 0.4, -0.1));
        assert_eq!(relative_entropy(&rho, &rho).unwrap().finite().unwrap(), 0.0);

        let z = state_from_bloch(BlochVector::new(0.0, 0.0, 1.0));
        let zm = state_from_bloch(BlochVector::new(0.0, 0.0, -1.0));
        assert!(relative_entropy(&z, &zm).unwrap().is_infinite());

        let a = state_from_bloch(BlochVector::new(0.0, 0.0, 0.5)); // diag(0.75, 0.25)
        let mm = DensityMatrix::maximally_mixed();
        assert_relative_eq!(
            relative_entropy(&a, &mm).unwrap().finite().unwrap(),
            0.18872187554086717,
            max_relative = 1e-12
        );
    }

    #[test]
    fn asymptotic_discrimination_examples() {
        let rho = state_from_bloch(BlochVector::new(0.3, 0.0, 0.0));
        assert_eq!(asymptotic_discrimination(5, &rho, &rho).unwrap(), 0.0);
        let z = state_from_bloch(BlochVector::new(0.0, 0.0, 1.0));
        let zm = state_from_bloch(BlochVector::new(0.0, 0.0, -1.0));
        assert_eq!(asymptotic_discrimination(3, &z, &zm).unwrap(), 1.0);
        let a = state_from_bloch(BlochVector::new(0.0, 0.0, 0.5));
        let mm = DensityMatrix::maximally_mixed();
        assert_relative_eq!(
            asymptotic_discrimination(10, &a, &mm).unwrap(),
            0.7296723019432205,
            max_relative = 1e-10
        );
    }

    #[test]
    fn jsd_examples() {
        let rho = state_from_bloch(BlochVector::new(0.2, 0.4, -0.1));
        assert_eq!(jsd(&rho, &rho).unwrap(), 0.0);
        assert_relative_eq!(jsd(&xplus(), &xminus()).unwrap(), 1.0, max_relative = 1e-12);
        let a = state_from_bloch(BlochVector::new(0.5, 0.0, 0.0));
        let b = state_from_bloch(BlochVector::new(-0.5, 0.0, 0.0));
        assert_relative_eq!(
            jsd(&a, &b).unwrap(),
            0.18872187554086717,
            max_relative = 1e-12
        );
    }

    #[test]
    fn sqrt_jsd_triangle_inequality_sampled() {
        let mut r = rng();
        for _ in 0..20_000 {
            let a = state_from_bloch(ball(&mut r));
            let b = state_from_bloch(ball(&mut r));
            let c = state_from_bloch(ball(&mut r));
            let ab = sqrt_jsd(&a, &b).unwrap();
            let ac = sqrt_jsd(&a, &c).unwrap();
            let cb = sqrt_jsd(&c, &b).unwrap();
            assert!(ab <= ac + cb + 1e-10);
        }
    }

    #[test]
    fn skew_divergences_reduce_to_jsd() {
        let mut r = rng();
        for _ in 0..1000 {
            let a = state_from_bloch(ball(&mut r));
            let b = state_from_bloch(ball(&mut r));
            let j = jsd(&a, &b).unwrap();
            assert!((holevo_skew(0.5, &a, &b).unwrap() - j).abs() < 1e-12);
            assert!((quantum_skew(0.5, &a, &b).unwrap() - j).abs() < 1e-12);
        }
    }

    #[test]
    fn skew_examples() {
        let rho = state_from_bloch(BlochVector::new(0.1, -0.2, 0.4));
        assert_eq!(holevo_skew(0.3, &rho, &rho).unwrap(), 0.0);
        assert_eq!(quantum_skew(0.3, &rho, &rho).unwrap(), 0.0);
        // orthogonal pure states give exactly 1 for any skew
        for mu in [0.1, 0.3, 0.62, 0.9] {
            assert_relative_eq!(
                holevo_skew(mu, &xplus(), &xminus()).unwrap(),
                1.0,
                max_relative = 1e-12
            );
            assert_relative_eq!(
                quantum_skew(mu, &xplus(), &xminus()).unwrap(),
                1.0,
                max_relative = 1e-12
            );
        }
        assert!(holevo_skew(0.0, &rho, &rho).is_err());
        assert!(quantum_skew(1.0, &rho, &rho).is_err());
    }

    #[test]
    fn skew_symmetry_under_parameter_reflection() {
        let mut r = rng();
        for _ in 0..500 {
            let mu = r.gen_range(0.05..0.95);
            let a = state_from_bloch(ball(&mut r));
            let b = state_from_bloch(ball(&mut r));
            let k1 = holevo_skew(mu, &a, &b).unwrap();
            let k2 = holevo_skew(1.0 - mu, &b, &a).unwrap();
            assert!((k1 - k2).abs() < 1e-12);
            let s1 = quantum_skew(mu, &a, &b).unwrap();
            let s2 = quantum_skew(1.0 - mu, &b, &a).unwrap();
            assert!((s1 - s2).abs() < 1e-12);
        }
    }

    #[test]
    fn triangle_constants_values() {
        let (eta_s, eta_k) = triangle_constants(0.5).unwrap();
        assert_relative_eq!(eta_k, 2.0_f64.powf(0.25), max_relative = 1e-12);
        assert_relative_eq!(eta_s, 2.0_f64.powf(0.25), max_relative = 1e-12);
        for mu in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9] {
            let (s, k) = triangle_constants(mu).unwrap();
            assert!(s.is_finite() && s > 0.0);
            assert!(k.is_finite() && k > 0.0);
        }
        assert!(triangle_constants(0.0).is_err());
    }

    #[test]
    fn triangle_like_inequalities_sampled() {
        let mut r = rng();
        let fourth = |x: f64| x.max(0.0).powf(0.25);
        for _ in 0..20_000 {
            let a = state_from_bloch(ball(&mut r));
            let b = state_from_bloch(ball(&mut r));
            let c = state_from_bloch(ball(&mut r));
            // JSD triangle-like bound with the fourth-root constant 2^(1/4)
            let lhs = jsd(&a, &b).unwrap() - jsd(&a, &c).unwrap();
            assert!(lhs <= 2.0_f64.powf(0.25) * fourth(jsd(&c, &b).unwrap()) + 1e-10);
            for mu in [0.25, 0.5, 0.75] {
                let (eta_s, eta_k) = triangle_constants(mu).unwrap();
                let kdiff =
                    holevo_skew(mu, &a, &b).unwrap() - holevo_skew(mu, &a, &c).unwrap();
                assert!(kdiff <= eta_k * fourth(holevo_skew(mu, &c, &b).unwrap()) + 1e-10);
                let sdiff =
                    quantum_skew(mu, &a, &b).unwrap() - quantum_skew(mu, &a, &c).unwrap();
                assert!(sdiff <= eta_s * fourth(quantum_skew(mu, &c, &b).unwrap()) + 1e-10);
            }
        }
    }

    #[test]
    fn jsd_bounds_sampled() {
        let mut r = rng();
        for _ in 0..20_000 {
            let a = state_from_bloch(ball(&mut r));
            let b = state_from_bloch(ball(&mut r));
            let (lo, hi) = jsd_bounds_check(&a, &b).unwrap();
            assert!(lo && hi);
        }
        let rho = state_from_bloch(BlochVector::new(0.3, 0.0, 0.0));
        assert_eq!(jsd_bounds_check(&rho, &rho).unwrap(), (true, true));
        assert_eq!(jsd_bounds_check(&xplus(), &xminus()).unwrap(), (true, true));
    }

    #[test]
    fn contractivity_under_cptp_phase_covariant_maps() {
        use crate::qubit::AffineMap;
        let mut r = rng();
        let quantifiers = [
            QuantifierId::TraceDistance,
            QuantifierId::Helstrom { bias: 0.3 },
            QuantifierId::Jsd,
            QuantifierId::SqrtJsd,
            QuantifierId::HolevoSkew { skew: 0.25 },
            QuantifierId::QuantumSkew { skew: 0.7 },
        ];
        for _ in 0..10_000 {
            // sample (eta_par, eta_perp, kappa_z) satisfying the CP conditions
            let ep: f64 = r.gen_range(-0.95..1.0);
            let kmax = (1.0 - ep).min(1.0 + ep);
            let kz = r.gen_range(-kmax..=kmax);
            let etmax = 0.5 * ((1.0 + ep) * (1.0 + ep) - kz * kz).max(0.0).sqrt();
            let et = r.gen_range(0.0..=etmax);
            let m = AffineMap::new([et, et, ep], [0.0, 0.0, kz]);
            let a = ball(&mut r);
            let b = ball(&mut r);
            for q in quantifiers {
                let before = q.eval_bloch(a, b).unwrap();
                let after = q.eval_bloch(m.apply(a), m.apply(b)).unwrap();
                assert!(after <= before + 1e-10, "{} grew: {before} -> {after}", q.label());
            }
        }
    }

    #[test]
    fn unitary_invariance_under_common_rotation() {
        let mut r = rng();
        let quantifiers = [
            QuantifierId::TraceDistance,
            QuantifierId::Helstrom { bias: 0.61 },
            QuantifierId::Jsd,
            QuantifierId::SqrtJsd,
            QuantifierId::HolevoSkew { skew: 0.4 },
            QuantifierId::QuantumSkew { skew: 0.4 },
        ];
        for _ in 0..500 {
            let a = ball(&mut r);
            let b = ball(&mut r);
            let axis = ball(&mut r);
            let angle = r.gen_range(0.0..std::f64::consts::TAU);
            for q in quantifiers {
                let v0 = q.eval_bloch(a, b).unwrap();
                let v1 = q.eval_bloch(a.rotated(axis, angle), b.rotated(axis, angle)).unwrap();
                assert!((v0 - v1).abs() < 1e-10);
            }
            // relative entropy is rotation-invariant too
            let s0 = relative_entropy(&state_from_bloch(a), &state_from_bloch(b)).unwrap();
            let s1 = relative_entropy(
                &state_from_bloch(a.rotated(axis, angle)),
                &state_from_bloch(b.rotated(axis, angle)),
            )
            .unwrap();
            match (s0, s1) {
                (DivergenceValue::Finite(x), DivergenceValue::Finite(y)) => {
                    assert!((x - y).abs() < 1e-9)
                }
                (x, y) => assert_eq!(x.is_infinite(), y.is_infinite()),
            }
        }
    }

    proptest! {
        #[test]
        fn symmetry_of_symmetric_quantifiers(
            a in proptest::array::uniform3(-0.57f64..0.57),
            b in proptest::array::uniform3(-0.57f64..0.57),
        ) {
            let x = BlochVector::new(a[0], a[1], a[2]);
            let y = BlochVector::new(b[0], b[1], b[2]);
            for q in [QuantifierId::TraceDistance, QuantifierId::Jsd, QuantifierId::SqrtJsd] {
                let v = q.eval_bloch(x, y).unwrap();
                let w = q.eval_bloch(y, x).unwrap();
                prop_assert!((v - w).abs() < 1e-13);
            }
        }
    }
}
