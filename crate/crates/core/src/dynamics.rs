//! Parametric families of phase-covariant qubit dynamical maps with
//! CP/P-divisibility diagnostics.
//!
//! A phase-covariant family is the time-parametric triple
//! `(eta_par(t), eta_perp(t), kappa_z(t))` acting on Bloch vectors as
//! `D = diag(eta_perp, eta_perp, eta_par)`, `k = (0, 0, kappa_z)`.
//! Families start at the identity, are completely positive whenever
//!
//! ```text
//! eta_par +- kappa_z <= 1,    1 + eta_par >= sqrt(4 eta_perp^2 + kappa_z^2),
//! ```
//!
//! and generate a time-local master equation with canonical rates
//!
//! ```text
//! gamma_pm = (eta_par/2) d/dt[(1 +- kappa_z)/eta_par],
//! gamma_z  = (1/4) d/dt ln(eta_par / eta_perp^2).
//! ```
//!
//! CP divisibility holds iff all three rates are nonnegative; P divisibility
//! additionally tolerates `gamma_z < 0` as long as
//! `sqrt(gamma_+ gamma_-) + 2 gamma_z > 0`.

use num_complex::Complex64;

use crate::consts::{CP_TOL, DECOHERENCE_PREFACTOR, FD_STEP, P_DIV_TOL, QUADRATURE_OMEGA_MAX,
                    QUADRATURE_REL_TOL};
use crate::qubit::AffineMap;
use crate::{Error, Result};

/// Analytic time derivatives of a family at one instant.
#[derive(Clone, Copy, Debug)]
pub struct FamilyDerivatives {
    pub eta_par_dot: f64,
    pub eta_perp_dot: f64,
    pub kappa_z_dot: f64,
}

/// A time-parametric phase-covariant family `(eta_par, eta_perp, kappa_z)`.
pub trait PhaseCovariant: Send + Sync {
    fn eta_par(&self, t: f64) -> f64;
    fn eta_perp(&self, t: f64) -> f64;
    fn kappa_z(&self, t: f64) -> f64;

    /// Analytic derivatives when the family has them; rates fall back to
    /// central finite differences otherwise.
    fn derivatives(&self, _t: f64) -> Option<FamilyDerivatives> {
        None
    }

    /// Slack allowed on `Phi_0 = identity`. Families built from exact
    /// exponentials meet `1e-9`; sigmoid-switched families are looser and
    /// declare their own bound.
    fn identity_tolerance(&self) -> f64 {
        1e-9
    }
}

impl<F: PhaseCovariant + ?Sized> PhaseCovariant for &F {
    fn eta_par(&self, t: f64) -> f64 {
        (**self).eta_par(t)
    }
    fn eta_perp(&self, t: f64) -> f64 {
        (**self).eta_perp(t)
    }
    fn kappa_z(&self, t: f64) -> f64 {
        (**self).kappa_z(t)
    }
    fn derivatives(&self, t: f64) -> Option<FamilyDerivatives> {
        (**self).derivatives(t)
    }
    fn identity_tolerance(&self) -> f64 {
        (**self).identity_tolerance()
    }
}

impl PhaseCovariant for Box<dyn PhaseCovariant> {
    fn eta_par(&self, t: f64) -> f64 {
        self.as_ref().eta_par(t)
    }
    fn eta_perp(&self, t: f64) -> f64 {
        self.as_ref().eta_perp(t)
    }
    fn kappa_z(&self, t: f64) -> f64 {
        self.as_ref().kappa_z(t)
    }
    fn derivatives(&self, t: f64) -> Option<FamilyDerivatives> {
        self.as_ref().derivatives(t)
    }
    fn identity_tolerance(&self) -> f64 {
        self.as_ref().identity_tolerance()
    }
}

/// The affine action of `Phi_t`:
/// `D = diag(eta_perp, eta_perp, eta_par)`, `k = (0, 0, kappa_z)`.
pub fn eval_map<F: PhaseCovariant + ?Sized>(family: &F, t: f64) -> AffineMap {
    let ep = family.eta_perp(t);
    AffineMap::new([ep, ep, family.eta_par(t)], [0.0, 0.0, family.kappa_z(t)])
}

/// Canonical master-equation rates at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateTriple {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub gamma_z: f64,
}

impl RateTriple {
    /// CP divisibility at this instant: all rates nonnegative.
    pub fn cp_divisible(&self, tol: f64) -> bool {
        self.gamma_plus >= -tol && self.gamma_minus >= -tol && self.gamma_z >= -tol
    }

    /// The P-divisibility function `sqrt(gamma_+ gamma_-) + 2 gamma_z`;
    /// P divisibility requires `gamma_pm >= 0` and this to be positive.
    pub fn p_div_function(&self) -> f64 {
        (self.gamma_plus.max(0.0) * self.gamma_minus.max(0.0)).sqrt() + 2.0 * self.gamma_z
    }
}

fn derivatives_or_fd<F: PhaseCovariant + ?Sized>(family: &F, t: f64) -> FamilyDerivatives {
    if let Some(d) = family.derivatives(t) {
        return d;
    }
    let h = FD_STEP;
    let t0 = (t - h).max(0.0);
    let t1 = t + h;
    let w = 1.0 / (t1 - t0);
    FamilyDerivatives {
        eta_par_dot: (family.eta_par(t1) - family.eta_par(t0)) * w,
        eta_perp_dot: (family.eta_perp(t1) - family.eta_perp(t0)) * w,
        kappa_z_dot: (family.kappa_z(t1) - family.kappa_z(t0)) * w,
    }
}

/// Rates at time `t`. Requires `eta_par(t) > 0` and `eta_perp(t) > 0`;
/// expanded into ratio form:
/// `gamma_pm = (+- kappa_z' - (1 +- kappa_z) eta_par'/eta_par) / 2`,
/// `gamma_z = (eta_par'/eta_par - 2 eta_perp'/eta_perp) / 4`.
pub fn rates<F: PhaseCovariant + ?Sized>(family: &F, t: f64) -> Result<RateTriple> {
    let ep = family.eta_par(t);
    let et = family.eta_perp(t);
    if ep <= 0.0 || et <= 0.0 {
        return Err(Error::NonpositiveEta(t));
    }
    let d = derivatives_or_fd(family, t);
    let c_par = d.eta_par_dot / ep;
    let c_perp = d.eta_perp_dot / et;
    let k = family.kappa_z(t);
    Ok(RateTriple {
        gamma_plus: 0.5 * (d.kappa_z_dot - (1.0 + k) * c_par),
        gamma_minus: 0.5 * (-d.kappa_z_dot - (1.0 - k) * c_par),
        gamma_z: 0.25 * (c_par - 2.0 * c_perp),
    })
}

/// Complete-positivity check at one instant, to tolerance [`CP_TOL`].
pub fn cp_ok_at<F: PhaseCovariant + ?Sized>(family: &F, t: f64) -> bool {
    let ep = family.eta_par(t);
    let et = family.eta_perp(t);
    let k = family.kappa_z(t);
    ep + k <= 1.0 + CP_TOL
        && ep - k <= 1.0 + CP_TOL
        && 1.0 + ep + CP_TOL >= (4.0 * et * et + k * k).sqrt()
}

/// Complete-positivity conditions evaluated on a grid.
pub fn cp_check<F: PhaseCovariant + ?Sized>(family: &F, grid: &[f64]) -> Vec<bool> {
    grid.iter().map(|&t| cp_ok_at(family, t)).collect()
}

/// Per-instant divisibility classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivisibilityClass {
    CpDivisible,
    PDivisibleOnly,
    /// `sqrt(gamma_+ gamma_-) + 2 gamma_z` within [`P_DIV_TOL`] of zero:
    /// numerics cannot certify the strict inequality either way.
    BoundaryPDivisible,
    NotPDivisible,
    /// `eta_par` or `eta_perp` nonpositive; the time-local generator does not
    /// exist there.
    RatesUndefined,
}

impl DivisibilityClass {
    pub fn label(&self) -> &'static str {
        match self {
            DivisibilityClass::CpDivisible => "cp-divisible",
            DivisibilityClass::PDivisibleOnly => "p-divisible-only",
            DivisibilityClass::BoundaryPDivisible => "boundary-p-divisible",
            DivisibilityClass::NotPDivisible => "not-p-divisible",
            DivisibilityClass::RatesUndefined => "rates-undefined",
        }
    }
}

/// Grid verdict of the divisibility analysis.
#[derive(Clone, Debug)]
pub struct DivisibilityVerdict {
    pub times: Vec<f64>,
    pub classes: Vec<DivisibilityClass>,
    pub rates: Vec<Option<RateTriple>>,
    /// First grid time classified `NotPDivisible`.
    pub first_violation: Option<f64>,
    /// First grid time at which the rates stop existing.
    pub first_undefined: Option<f64>,
}

impl DivisibilityVerdict {
    pub fn p_divisible_everywhere(&self) -> bool {
        self.first_violation.is_none() && self.first_undefined.is_none()
    }
}

fn classify(r: &RateTriple) -> DivisibilityClass {
    if r.gamma_plus < -P_DIV_TOL || r.gamma_minus < -P_DIV_TOL {
        return DivisibilityClass::NotPDivisible;
    }
    if r.cp_divisible(P_DIV_TOL) {
        return DivisibilityClass::CpDivisible;
    }
    let s = r.p_div_function();
    if s > P_DIV_TOL {
        DivisibilityClass::PDivisibleOnly
    } else if s > -P_DIV_TOL {
        DivisibilityClass::BoundaryPDivisible
    } else {
        DivisibilityClass::NotPDivisible
    }
}

/// Classifies every grid point by the rate conditions and records the first
/// strict violation.
pub fn p_div_check<F: PhaseCovariant + ?Sized>(family: &F, grid: &[f64]) -> DivisibilityVerdict {
    let mut classes = Vec::with_capacity(grid.len());
    let mut rate_list = Vec::with_capacity(grid.len());
    let mut first_violation = None;
    let mut first_undefined = None;
    for &t in grid {
        match rates(family, t) {
            Ok(r) => {
                let class = classify(&r);
                if class == DivisibilityClass::NotPDivisible && first_violation.is_none() {
                    first_violation = Some(t);
                }
                classes.push(class);
                rate_list.push(Some(r));
            }
            Err(_) => {
                if first_undefined.is_none() {
                    first_undefined = Some(t);
                }
                classes.push(DivisibilityClass::RatesUndefined);
                rate_list.push(None);
            }
        }
    }
    DivisibilityVerdict {
        times: grid.to_vec(),
        classes,
        rates: rate_list,
        first_violation,
        first_undefined,
    }
}

/// Intermediate map `Phi_{t,s} = Phi_t Phi_s^{-1}` for `t >= s >= 0`.
pub fn intermediate_map<F: PhaseCovariant + ?Sized>(family: &F, s: f64, t: f64) -> Result<AffineMap> {
    if !(s >= 0.0 && t >= s) {
        return Err(Error::TimeOrder(s, t));
    }
    let at_s = eval_map(family, s);
    Ok(eval_map(family, t).compose(&at_s.invert()?))
}

/// Sequential composition: `first` on `[0, switch_time]`, then `second`
/// restarted at the frozen output. The composite is again phase covariant:
/// for `t > t1` the decay functions multiply and
/// `kappa_z(t) = kappa_z2(t - t1) + eta_par2(t - t1) kappa_z1(t1)`.
#[derive(Clone, Debug)]
pub struct ComposedFamily<F1, F2> {
    first: F1,
    second: F2,
    switch_time: f64,
}

impl<F1: PhaseCovariant, F2: PhaseCovariant> ComposedFamily<F1, F2> {
    pub fn first(&self) -> &F1 {
        &self.first
    }
    pub fn second(&self) -> &F2 {
        &self.second
    }
    pub fn switch_time(&self) -> f64 {
        self.switch_time
    }
}

/// Builds the sequential composition; `switch_time` must be positive.
pub fn compose_families<F1: PhaseCovariant, F2: PhaseCovariant>(
    first: F1,
    second: F2,
    switch_time: f64,
) -> Result<ComposedFamily<F1, F2>> {
    if switch_time <= 0.0 {
        return Err(Error::BadSwitchTime(switch_time));
    }
    Ok(ComposedFamily { first, second, switch_time })
}

impl<F1: PhaseCovariant, F2: PhaseCovariant> PhaseCovariant for ComposedFamily<F1, F2> {
    fn eta_par(&self, t: f64) -> f64 {
        if t <= self.switch_time {
            self.first.eta_par(t)
        } else {
            self.second.eta_par(t - self.switch_time) * self.first.eta_par(self.switch_time)
        }
    }

    fn eta_perp(&self, t: f64) -> f64 {
        if t <= self.switch_time {
            self.first.eta_perp(t)
        } else {
            self.second.eta_perp(t - self.switch_time) * self.first.eta_perp(self.switch_time)
        }
    }

    fn kappa_z(&self, t: f64) -> f64 {
        if t <= self.switch_time {
            self.first.kappa_z(t)
        } else {
            let u = t - self.switch_time;
            self.second.kappa_z(u)
                + self.second.eta_par(u) * self.first.kappa_z(self.switch_time)
        }
    }

    fn derivatives(&self, t: f64) -> Option<FamilyDerivatives> {
        if t <= self.switch_time {
            self.first.derivatives(t)
        } else {
            let u = t - self.switch_time;
            let d2 = self.second.derivatives(u)?;
            let ep1 = self.first.eta_par(self.switch_time);
            let et1 = self.first.eta_perp(self.switch_time);
            let k1 = self.first.kappa_z(self.switch_time);
            Some(FamilyDerivatives {
                eta_par_dot: d2.eta_par_dot * ep1,
                eta_perp_dot: d2.eta_perp_dot * et1,
                kappa_z_dot: d2.kappa_z_dot + d2.eta_par_dot * k1,
            })
        }
    }

    fn identity_tolerance(&self) -> f64 {
        self.first.identity_tolerance()
    }
}

/// Constant-rate phase-covariant semigroup. With `c = gamma_+ + gamma_-`:
/// `eta_par = e^{-ct}`, `eta_perp = e^{-(c/2 + 2 gamma_z) t}` and
/// `kappa_z = (gamma_+ - gamma_-)(1 - e^{-ct})/c`.
#[derive(Clone, Copy, Debug)]
pub struct ConstantRateFamily {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub gamma_z: f64,
}

impl ConstantRateFamily {
    pub fn new(gamma_plus: f64, gamma_minus: f64, gamma_z: f64) -> Self {
        Self { gamma_plus, gamma_minus, gamma_z }
    }

    fn total(&self) -> f64 {
        self.gamma_plus + self.gamma_minus
    }
}

impl PhaseCovariant for ConstantRateFamily {
    fn eta_par(&self, t: f64) -> f64 {
        (-self.total() * t).exp()
    }

    fn eta_perp(&self, t: f64) -> f64 {
        (-(0.5 * self.total() + 2.0 * self.gamma_z) * t).exp()
    }

    fn kappa_z(&self, t: f64) -> f64 {
        let c = self.total();
        let d = self.gamma_plus - self.gamma_minus;
        if c.abs() < 1e-300 {
            d * t
        } else {
            d * (1.0 - (-c * t).exp()) / c
        }
    }

    fn derivatives(&self, t: f64) -> Option<FamilyDerivatives> {
        let c = self.total();
        let d = self.gamma_plus - self.gamma_minus;
        Some(FamilyDerivatives {
            eta_par_dot: -c * self.eta_par(t),
            eta_perp_dot: -(0.5 * c + 2.0 * self.gamma_z) * self.eta_perp(t),
            kappa_z_dot: d * (-c * t).exp(),
        })
    }
}

/// Pure-dephasing model driven by a spectral density with exponential
/// cutoff, `J(w) = coupling * w^ohmicity / cutoff^(ohmicity-1) * exp(-w/cutoff)`.
///
/// Coherences evolve as `rho_01 * gamma(t) * exp(-i system_freq t)` with
/// `|gamma(t)| = exp(-Gamma(t))` and the zero-temperature exponent
/// `Gamma(t) = c * integral_0^inf J(w) (1 - cos wt) / w^2 dw`,
/// `c =` [`DECOHERENCE_PREFACTOR`]. Populations are untouched.
#[derive(Clone, Copy, Debug)]
pub struct DephasingModel {
    pub coupling: f64,
    pub ohmicity: f64,
    pub cutoff: f64,
    pub system_freq: f64,
}

impl DephasingModel {
    pub fn new(coupling: f64, ohmicity: f64, cutoff: f64, system_freq: f64) -> Self {
        Self { coupling, ohmicity, cutoff, system_freq }
    }

    pub fn spectral_density(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        self.coupling * omega.powf(self.ohmicity) / self.cutoff.powf(self.ohmicity - 1.0)
            * (-omega / self.cutoff).exp()
    }

    /// Decoherence exponent `Gamma(t)` by adaptive quadrature on
    /// `[0, 50 cutoff]`.
    pub fn decoherence_exponent(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let f = |w: f64| {
            if w <= 0.0 {
                0.0
            } else {
                self.spectral_density(w) * (1.0 - (w * t).cos()) / (w * w)
            }
        };
        DECOHERENCE_PREFACTOR * adaptive_simpson(&f, 0.0, QUADRATURE_OMEGA_MAX * self.cutoff)
    }

    /// Time derivative `Gamma'(t) = c * integral J(w) sin(wt) / w dw`.
    pub fn decoherence_exponent_rate(&self, t: f64) -> f64 {
        let f = |w: f64| {
            if w <= 0.0 {
                0.0
            } else {
                self.spectral_density(w) * (w * t).sin() / w
            }
        };
        DECOHERENCE_PREFACTOR * adaptive_simpson(&f, 0.0, QUADRATURE_OMEGA_MAX * self.cutoff)
    }

    pub fn decoherence_magnitude(&self, t: f64) -> f64 {
        (-self.decoherence_exponent(t)).exp()
    }

    /// Complex decoherence function `gamma(t) e^{-i system_freq t}`.
    pub fn decoherence(&self, t: f64) -> Complex64 {
        Complex64::from_polar(self.decoherence_magnitude(t), -self.system_freq * t)
    }
}

/// Complex decoherence function of the dephasing model.
pub fn dephasing_decoherence(model: &DephasingModel, t: f64) -> Complex64 {
    model.decoherence(t)
}

/// Pure dephasing as a phase-covariant family: `eta_perp = |gamma(t)|`,
/// `eta_par = 1`, `kappa_z = 0`. The `system_freq` rotation is a common
/// z-rotation of both arguments of every quantifier and is dropped from the
/// affine representation.
#[derive(Clone, Copy, Debug)]
pub struct PureDephasingFamily {
    model: DephasingModel,
}

impl PureDephasingFamily {
    pub fn model(&self) -> &DephasingModel {
        &self.model
    }
}

pub fn dephasing_as_family(model: DephasingModel) -> PureDephasingFamily {
    PureDephasingFamily { model }
}

impl PhaseCovariant for PureDephasingFamily {
    fn eta_par(&self, _t: f64) -> f64 {
        1.0
    }

    fn eta_perp(&self, t: f64) -> f64 {
        self.model.decoherence_magnitude(t)
    }

    fn kappa_z(&self, _t: f64) -> f64 {
        0.0
    }

    fn derivatives(&self, t: f64) -> Option<FamilyDerivatives> {
        let mag = self.model.decoherence_magnitude(t);
        Some(FamilyDerivatives {
            eta_par_dot: 0.0,
            eta_perp_dot: -self.model.decoherence_exponent_rate(t) * mag,
            kappa_z_dot: 0.0,
        })
    }
}

/// Parameters of the three-stage piecewise family with sigmoid switching.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CounterexampleParams {
    pub mu1: f64,
    pub mu2: f64,
    pub a_par: f64,
    pub a_perp: f64,
    pub a_kappa: f64,
    pub alpha: f64,
}

impl Default for CounterexampleParams {
    fn default() -> Self {
        Self { mu1: 5.0, mu2: 4.0, a_par: 0.01, a_perp: 1.01, a_kappa: 0.45, alpha: 5.0 }
    }
}

/// Three-stage family in dimensionless time `tau = t/T`:
/// exponential contraction at rate `mu1` on stage one, rate `mu2` on stage
/// two, then a linear ramp `(3 - tau) + A (tau - 2)` scaled by
/// `e^{-mu1-mu2}`; stages are blended by the sigmoid
/// `s(x) = 1/(1 + e^{-alpha x})`. The translation grows as
/// `a_kappa tau` during the contraction stages and then tracks
/// `2 a_kappa` times the longitudinal ramp.
///
/// With `a_perp > 1` the transverse decay turns non-monotonic inside stage
/// three while the map stays completely positive throughout.
#[derive(Clone, Copy, Debug)]
pub struct CounterexampleFamily {
    params: CounterexampleParams,
}

impl CounterexampleFamily {
    pub fn new(params: CounterexampleParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &CounterexampleParams {
        &self.params
    }

    fn sigmoid(&self, x: f64) -> f64 {
        1.0 / (1.0 + (-self.params.alpha * x).exp())
    }

    fn sigmoid_dot(&self, x: f64) -> f64 {
        let s = self.sigmoid(x);
        self.params.alpha * s * (1.0 - s)
    }

    fn eta(&self, tau: f64, a: f64) -> f64 {
        let p = &self.params;
        (-p.mu1 * tau).exp() * self.sigmoid(1.0 - tau)
            + (-p.mu1 - p.mu2 * (tau - 1.0)).exp() * self.sigmoid(tau - 1.0) * self.sigmoid(2.0 - tau)
            + (-p.mu1 - p.mu2).exp() * ((3.0 - tau) + a * (tau - 2.0)) * self.sigmoid(tau - 2.0)
    }

    fn eta_dot(&self, tau: f64, a: f64) -> f64 {
        let p = &self.params;
        let s1 = (-p.mu1 * tau).exp()
            * (-p.mu1 * self.sigmoid(1.0 - tau) - self.sigmoid_dot(1.0 - tau));
        let e2 = (-p.mu1 - p.mu2 * (tau - 1.0)).exp();
        let s2 = e2
            * (-p.mu2 * self.sigmoid(tau - 1.0) * self.sigmoid(2.0 - tau)
                + self.sigmoid_dot(tau - 1.0) * self.sigmoid(2.0 - tau)
                - self.sigmoid(tau - 1.0) * self.sigmoid_dot(2.0 - tau));
        let s3 = (-p.mu1 - p.mu2).exp()
            * ((a - 1.0) * self.sigmoid(tau - 2.0)
                + ((3.0 - tau) + a * (tau - 2.0)) * self.sigmoid_dot(tau - 2.0));
        s1 + s2 + s3
    }
}

pub fn counterexample_family(params: CounterexampleParams) -> CounterexampleFamily {
    CounterexampleFamily::new(params)
}

impl PhaseCovariant for CounterexampleFamily {
    fn eta_par(&self, t: f64) -> f64 {
        self.eta(t, self.params.a_par)
    }

    fn eta_perp(&self, t: f64) -> f64 {
        self.eta(t, self.params.a_perp)
    }

    fn kappa_z(&self, t: f64) -> f64 {
        let p = &self.params;
        p.a_kappa * t * self.sigmoid(2.0 - t)
            + 2.0 * p.a_kappa
                * ((3.0 - t) + p.a_par * (t - 2.0))
                * self.sigmoid(t - 2.0)
    }

    fn derivatives(&self, t: f64) -> Option<FamilyDerivatives> {
        let p = &self.params;
        let kdot = p.a_kappa * (self.sigmoid(2.0 - t) - t * self.sigmoid_dot(2.0 - t))
            + 2.0 * p.a_kappa
                * ((p.a_par - 1.0) * self.sigmoid(t - 2.0)
                    + ((3.0 - t) + p.a_par * (t - 2.0)) * self.sigmoid_dot(t - 2.0));
        Some(FamilyDerivatives {
            eta_par_dot: self.eta_dot(t, p.a_par),
            eta_perp_dot: self.eta_dot(t, p.a_perp),
            kappa_z_dot: kdot,
        })
    }

    /// Sigmoid smoothing leaves `O(e^{-alpha})` residues at `t = 0`.
    fn identity_tolerance(&self) -> f64 {
        (-self.params.alpha).exp()
    }
}

/// RK4 reconstruction of the family functions from its computed rates.
#[derive(Clone, Debug)]
pub struct RateReconstruction {
    pub times: Vec<f64>,
    pub eta_par: Vec<f64>,
    pub eta_perp: Vec<f64>,
    pub kappa_z: Vec<f64>,
    /// Time at which a rate evaluation first failed (`eta` nonpositive at a
    /// stage point), where integration halts; `None` when the full interval
    /// was covered.
    pub halted_at: Option<f64>,
}

impl RateReconstruction {
    /// Maximum absolute reconstruction error over the covered domain.
    pub fn max_error<F: PhaseCovariant + ?Sized>(&self, family: &F) -> f64 {
        let mut err: f64 = 0.0;
        for (i, &t) in self.times.iter().enumerate() {
            err = err.max((self.eta_par[i] - family.eta_par(t)).abs());
            err = err.max((self.eta_perp[i] - family.eta_perp(t)).abs());
            err = err.max((self.kappa_z[i] - family.kappa_z(t)).abs());
        }
        err
    }
}

/// Integrates the master-equation relations
/// `eta_par' = -(g+ + g-) eta_par`,
/// `eta_perp' = -((g+ + g-)/2 + 2 gz) eta_perp`,
/// `kappa_z' = (g+ - g-) - (g+ + g-) kappa_z`
/// with classical RK4 from `t = 0`, halting where rates stop existing.
pub fn reconstruct_from_rates<F: PhaseCovariant + ?Sized>(
    family: &F,
    t_end: f64,
    step: f64,
) -> RateReconstruction {
    let n = (t_end / step).round() as usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut eta_par = Vec::with_capacity(n + 1);
    let mut eta_perp = Vec::with_capacity(n + 1);
    let mut kappa_z = Vec::with_capacity(n + 1);
    let mut y = [family.eta_par(0.0), family.eta_perp(0.0), family.kappa_z(0.0)];
    times.push(0.0);
    eta_par.push(y[0]);
    eta_perp.push(y[1]);
    kappa_z.push(y[2]);
    let mut halted_at = None;

    let f = |t: f64, y: &[f64; 3]| -> Result<[f64; 3]> {
        let r = rates(family, t)?;
        let c = r.gamma_plus + r.gamma_minus;
        let d = r.gamma_plus - r.gamma_minus;
        Ok([-c * y[0], -(0.5 * c + 2.0 * r.gamma_z) * y[1], d - c * y[2]])
    };

    'outer: for i in 0..n {
        let t = i as f64 * step;
        let mut ks = [[0.0; 3]; 4];
        let stages = [(0.0, 0.0), (0.5, 0.5), (0.5, 0.5), (1.0, 1.0)];
        for (j, (dt, dy)) in stages.iter().enumerate() {
            let mut yj = y;
            if j > 0 {
                for c in 0..3 {
                    yj[c] = y[c] + dy * step * ks[j - 1][c];
                }
            }
            match f(t + dt * step, &yj) {
                Ok(k) => ks[j] = k,
                Err(_) => {
                    halted_at = Some(t + dt * step);
                    break 'outer;
                }
            }
        }
        for c in 0..3 {
            y[c] += step / 6.0 * (ks[0][c] + 2.0 * ks[1][c] + 2.0 * ks[2][c] + ks[3][c]);
        }
        times.push((i + 1) as f64 * step);
        eta_par.push(y[0]);
        eta_perp.push(y[1]);
        kappa_z.push(y[2]);
    }

    RateReconstruction { times, eta_par, eta_perp, kappa_z, halted_at }
}

/// Adaptive Simpson quadrature with relative tolerance
/// [`QUADRATURE_REL_TOL`].
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
        }
    }

    // pre-split so oscillatory integrands cannot fool the first estimate
    let pieces = 64;
    let mut total = 0.0;
    let mut rough = 0.0;
    for i in 0..pieces {
        let x0 = a + (b - a) * i as f64 / pieces as f64;
        let x1 = a + (b - a) * (i + 1) as f64 / pieces as f64;
        rough += (x1 - x0) * f(0.5 * (x0 + x1)).abs();
    }
    let tol = (QUADRATURE_REL_TOL * rough).max(1e-16);
    for i in 0..pieces {
        let x0 = a + (b - a) * i as f64 / pieces as f64;
        let x1 = a + (b - a) * (i + 1) as f64 / pieces as f64;
        let fa = f(x0);
        let fb = f(x1);
        let fm = f(0.5 * (x0 + x1));
        let whole = simpson(x0, fa, x1, fb, fm);
        total += recurse(f, x0, fa, x1, fb, fm, whole, tol / pieces as f64, 24);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Exponential test family with analytic derivatives supplied through a
    /// constant-rate construction.
    fn pure_dephasing_exponential(c: f64) -> ConstantRateFamily {
        // gamma_pm = 0, gamma_z = c: eta_perp = e^{-2ct}, eta_par = 1
        ConstantRateFamily::new(0.0, 0.0, c)
    }

    #[test]
    fn eval_map_structure() {
        let fam = pure_dephasing_exponential(0.4);
        let m = eval_map(&fam, 0.0);
        assert_eq!(m, AffineMap::identity());
        let m = eval_map(&fam, 1.0);
        assert_relative_eq!(m.diag[0], (-0.8_f64).exp(), max_relative = 1e-14);
        assert_eq!(m.diag[2], 1.0);
        assert_eq!(m.shift, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn rates_of_exponential_families() {
        // eta_par = 1, eta_perp = e^{-2ct}: gamma_pm = 0, gamma_z = c
        let c = 0.7;
        let fam = pure_dephasing_exponential(c);
        let r = rates(&fam, 0.9).unwrap();
        assert_relative_eq!(r.gamma_plus, 0.0);
        assert_relative_eq!(r.gamma_minus, 0.0);
        assert_relative_eq!(r.gamma_z, c, max_relative = 1e-12);

        // eta_par = eta_perp = e^{-ct}: gamma_pm = c/2, gamma_z = c/4
        let fam = ConstantRateFamily::new(0.5 * c, 0.5 * c, 0.25 * c);
        assert_relative_eq!(fam.eta_par(1.3), (-c * 1.3_f64).exp(), max_relative = 1e-13);
        assert_relative_eq!(fam.eta_perp(1.3), (-c * 1.3_f64).exp(), max_relative = 1e-13);
        let r = rates(&fam, 1.3).unwrap();
        assert_relative_eq!(r.gamma_plus, 0.5 * c, max_relative = 1e-12);
        assert_relative_eq!(r.gamma_minus, 0.5 * c, max_relative = 1e-12);
        assert_relative_eq!(r.gamma_z, 0.25 * c, max_relative = 1e-12);
    }

    #[test]
    fn finite_difference_rates_match_analytic() {
        struct NoDeriv(ConstantRateFamily);
        impl PhaseCovariant for NoDeriv {
            fn eta_par(&self, t: f64) -> f64 {
                self.0.eta_par(t)
            }
            fn eta_perp(&self, t: f64) -> f64 {
                self.0.eta_perp(t)
            }
            fn kappa_z(&self, t: f64) -> f64 {
                self.0.kappa_z(t)
            }
        }
        let fam = ConstantRateFamily::new(0.8, 0.3, 0.2);
        let blind = NoDeriv(fam);
        for t in [0.1, 0.5, 1.7] {
            let a = rates(&fam, t).unwrap();
            let b = rates(&blind, t).unwrap();
            assert!((a.gamma_plus - b.gamma_plus).abs() < 1e-8);
            assert!((a.gamma_minus - b.gamma_minus).abs() < 1e-8);
            assert!((a.gamma_z - b.gamma_z).abs() < 1e-8);
        }
    }

    #[test]
    fn cp_check_examples() {
        let fam = ConstantRateFamily::new(0.5, 0.2, 0.1);
        assert!(cp_ok_at(&fam, 0.0));
        let grid: Vec<f64> = (0..100).map(|i| i as f64 * 0.05).collect();
        assert!(cp_check(&fam, &grid).iter().all(|&b| b));

        // constructed violation: eta_par + kappa_z = 1.1 > 1
        struct Bad;
        impl PhaseCovariant for Bad {
            fn eta_par(&self, _t: f64) -> f64 {
                0.5
            }
            fn eta_perp(&self, _t: f64) -> f64 {
                0.0
            }
            fn kappa_z(&self, _t: f64) -> f64 {
                0.6
            }
        }
        assert!(!cp_ok_at(&Bad, 1.0));
    }

    #[test]
    fn p_div_constant_rates() {
        let fam = ConstantRateFamily::new(0.5, 0.2, 0.1);
        let grid: Vec<f64> = (1..200).map(|i| i as f64 * 0.02).collect();
        let verdict = p_div_check(&fam, &grid);
        assert!(verdict.p_divisible_everywhere());
        assert!(verdict.classes.iter().all(|c| *c == DivisibilityClass::CpDivisible));

        // negative gamma_plus is immediately non-P-divisible
        let bad = ConstantRateFamily::new(-0.1, 0.3, 0.2);
        let verdict = p_div_check(&bad, &grid);
        assert_eq!(verdict.classes[0], DivisibilityClass::NotPDivisible);
        assert_eq!(verdict.first_violation, Some(grid[0]));

        // gamma_z slightly negative but sqrt(g+g-) + 2 gz > 0: P only
        let pdiv = ConstantRateFamily::new(0.4, 0.4, -0.1);
        let verdict = p_div_check(&pdiv, &grid);
        assert!(verdict
            .classes
            .iter()
            .all(|c| *c == DivisibilityClass::PDivisibleOnly));
        assert!(verdict.p_divisible_everywhere());
    }

    #[test]
    fn intermediate_map_examples() {
        let fam = ConstantRateFamily::new(0.5, 0.2, 0.1);
        let id = intermediate_map(&fam, 1.0, 1.0).unwrap();
        for i in 0..3 {
            assert_relative_eq!(id.diag[i], 1.0, max_relative = 1e-12);
            assert!(id.shift[i].abs() < 1e-12);
        }
        let from_zero = intermediate_map(&fam, 0.0, 1.4).unwrap();
        let direct = eval_map(&fam, 1.4);
        for i in 0..3 {
            assert_relative_eq!(from_zero.diag[i], direct.diag[i], max_relative = 1e-12);
            assert!((from_zero.shift[i] - direct.shift[i]).abs() < 1e-12);
        }
        assert!(intermediate_map(&fam, 2.0, 1.0).is_err());
    }

    #[test]
    fn intermediate_map_telescopes() {
        let fam = ConstantRateFamily::new(0.6, 0.1, 0.05);
        let a = intermediate_map(&fam, 0.5, 1.0).unwrap();
        let b = intermediate_map(&fam, 1.0, 1.8).unwrap();
        let c = intermediate_map(&fam, 0.5, 1.8).unwrap();
        let ba = b.compose(&a);
        for i in 0..3 {
            assert!((ba.diag[i] - c.diag[i]).abs() < 1e-10);
            assert!((ba.shift[i] - c.shift[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn composition_matches_affine_composition() {
        let f1 = ConstantRateFamily::new(0.5, 0.2, 0.1);
        let f2 = ConstantRateFamily::new(0.1, 0.6, 0.3);
        let t1 = 0.8;
        let total = compose_families(f1, f2, t1).unwrap();
        for t in [0.2, 0.8, 1.1, 2.3] {
            let expected = if t <= t1 {
                eval_map(&f1, t)
            } else {
                eval_map(&f2, t - t1).compose(&eval_map(&f1, t1))
            };
            let got = eval_map(&total, t);
            for i in 0..3 {
                assert!((got.diag[i] - expected.diag[i]).abs() < 1e-12);
                assert!((got.shift[i] - expected.shift[i]).abs() < 1e-12);
            }
        }
        assert!(compose_families(f1, f2, 0.0).is_err());
    }

    #[test]
    fn composition_is_not_commutative() {
        let f1 = ConstantRateFamily::new(0.9, 0.1, 0.0);
        let f2 = ConstantRateFamily::new(0.0, 0.0, 0.8);
        let t1 = 0.5;
        let a = compose_families(f1, f2, t1).unwrap();
        let b = compose_families(f2, f1, t1).unwrap();
        let t = 1.5;
        let ka = a.kappa_z(t);
        let kb = b.kappa_z(t);
        assert!((ka - kb).abs() > 1e-3, "expected non-commutativity, got {ka} vs {kb}");
    }

    #[test]
    fn identity_family_composition() {
        let f1 = ConstantRateFamily::new(0.5, 0.2, 0.1);
        let id = ConstantRateFamily::new(0.0, 0.0, 0.0);
        let total = compose_families(f1, id, 1.0).unwrap();
        // before the switch: f1; after: frozen at t1
        assert_relative_eq!(total.eta_par(0.7), f1.eta_par(0.7));
        assert_relative_eq!(total.eta_par(2.5), f1.eta_par(1.0), max_relative = 1e-12);
        assert_relative_eq!(total.kappa_z(2.5), f1.kappa_z(1.0), max_relative = 1e-12);
    }

    #[test]
    fn dephasing_quadrature_matches_closed_forms() {
        // s = 3: Gamma(t) = c lam [1 - cos(2 atan t)/(1+t^2)] (unit cutoff)
        let m3 = DephasingModel::new(3.0, 3.0, 1.0, 0.0);
        for t in [0.3_f64, 1.0, 2.0, 5.0, 10.0] {
            let closed = DECOHERENCE_PREFACTOR
                * 3.0
                * (1.0 - (2.0 * t.atan()).cos() / (1.0 + t * t));
            assert_relative_eq!(m3.decoherence_exponent(t), closed, max_relative = 1e-7);
        }
        // s = 2: Gamma(t) = c lam [1 - cos(atan t)/sqrt(1+t^2)]
        let m2 = DephasingModel::new(3.0, 2.0, 1.0, 0.0);
        for t in [0.5_f64, 2.0, 7.0] {
            let closed =
                DECOHERENCE_PREFACTOR * 3.0 * (1.0 - t.atan().cos() / (1.0 + t * t).sqrt());
            assert_relative_eq!(m2.decoherence_exponent(t), closed, max_relative = 1e-7);
        }
        // s = 1: Gamma(t) = c lam ln(1+t^2)/2
        let m1 = DephasingModel::new(3.0, 1.0, 1.0, 0.0);
        for t in [0.5_f64, 2.0] {
            let closed = DECOHERENCE_PREFACTOR * 3.0 * 0.5 * (1.0 + t * t).ln();
            assert_relative_eq!(m1.decoherence_exponent(t), closed, max_relative = 1e-6);
        }
    }

    #[test]
    fn decoherence_function_values() {
        let m = DephasingModel::new(3.0, 3.0, 1.0, 2.0);
        assert_eq!(m.decoherence(0.0), Complex64::new(1.0, 0.0));
        // |gamma| <= 1 and revival for s = 3: minimum near t = sqrt(3)
        let g1 = m.decoherence_magnitude(3.0_f64.sqrt());
        let g2 = m.decoherence_magnitude(10.0);
        assert!(g1 < g2 && g2 < 1.0);
        // phase factor
        let t = 0.7;
        let g = m.decoherence(t);
        assert_relative_eq!(g.arg(), -2.0 * t, max_relative = 1e-10);

        // sub-critical ohmicity: monotone decay
        let m1 = DephasingModel::new(3.0, 1.0, 1.0, 0.0);
        let mut prev = 1.0;
        for i in 1..50 {
            let v = m1.decoherence_magnitude(0.2 * i as f64);
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn dephasing_family_shape() {
        let fam = dephasing_as_family(DephasingModel::new(3.0, 3.0, 1.0, 0.0));
        let m = eval_map(&fam, 1.2);
        assert_eq!(m.diag[2], 1.0);
        assert_eq!(m.shift, [0.0, 0.0, 0.0]);
        assert_relative_eq!(m.diag[0], fam.model().decoherence_magnitude(1.2));
        // populations invariant
        let r = crate::qubit::BlochVector::new(0.0, 0.0, 0.83);
        assert_relative_eq!(m.apply(r).z, 0.83);
        // P divisibility violated exactly where |gamma| grows
        let verdict = p_div_check(&fam, &[1.0, 3.0]);
        assert_eq!(verdict.classes[0], DivisibilityClass::CpDivisible);
        assert_eq!(verdict.classes[1], DivisibilityClass::NotPDivisible);
    }

    #[test]
    fn counterexample_curves() {
        let fam = counterexample_family(CounterexampleParams::default());
        // near-identity at tau = 0 within the sigmoid tolerance e^{-alpha}
        let tol = fam.identity_tolerance();
        assert!((fam.eta_par(0.0) - 1.0).abs() < tol);
        assert!((fam.eta_perp(0.0) - 1.0).abs() < tol);
        assert!(fam.kappa_z(0.0).abs() < tol);

        // frozen stage-three values at tau = 3
        assert_relative_eq!(fam.eta_perp(3.0), 1.2382482032027850e-4, max_relative = 1e-12);
        assert_relative_eq!(fam.eta_par(3.0), 1.2409796549462795e-6, max_relative = 1e-12);
        assert_relative_eq!(fam.kappa_z(3.0), 1.797511308946599e-2, max_relative = 1e-12);
        // consistent with the e^{-mu1-mu2} A plateau up to sigmoid residue
        assert_relative_eq!(
            fam.eta_perp(3.0),
            (-9.0_f64).exp() * 1.01,
            max_relative = 0.02
        );

        // eta_perp revives inside (2.2, 3); eta_par decreases monotonically
        assert!(fam.eta_perp(3.0) > fam.eta_perp(2.5));
        let grid: Vec<f64> = (0..=400).map(|i| i as f64 * 0.01).collect();
        let mut prev = f64::INFINITY;
        for &t in &grid {
            let v = fam.eta_par(t);
            assert!(v <= prev + 1e-12);
            prev = v;
        }

        // analytic derivatives agree with finite differences
        let h = 1e-6;
        for t in [0.3, 1.1, 1.9, 2.4, 3.3] {
            let d = fam.derivatives(t).unwrap();
            let fd = (fam.eta_perp(t + h) - fam.eta_perp(t - h)) / (2.0 * h);
            assert_relative_eq!(d.eta_perp_dot, fd, max_relative = 1e-6, epsilon = 1e-10);
            let fdk = (fam.kappa_z(t + h) - fam.kappa_z(t - h)) / (2.0 * h);
            assert_relative_eq!(d.kappa_z_dot, fdk, max_relative = 1e-6, epsilon = 1e-10);
        }
    }

    #[test]
    fn counterexample_divisibility() {
        let fam = counterexample_family(CounterexampleParams::default());
        let grid: Vec<f64> = (0..4000).map(|i| i as f64 * 4.0 / 3999.0).collect();
        assert!(cp_check(&fam, &grid).iter().all(|&b| b));
        let verdict = p_div_check(&fam, &grid);
        let first = verdict.first_violation.expect("violation expected");
        assert!((first - 2.2).abs() < 0.1, "first violation at {first}");
        // rates stop existing once eta_par crosses zero, shortly after 3
        let undef = verdict.first_undefined.expect("eta_par crosses zero");
        assert!((3.0..3.1).contains(&undef), "rates undefined from {undef}");
        // the generator pole does not precede the divisibility violation
        assert!(first < undef);
    }

    #[test]
    fn counterexample_rate_round_trip() {
        let fam = counterexample_family(CounterexampleParams::default());
        let rec = reconstruct_from_rates(&fam, 4.0, 1e-3);
        // integration halts at the generator pole near tau = 3.01
        let halt = rec.halted_at.expect("pole expected");
        assert!((3.0..3.1).contains(&halt));
        assert!(*rec.times.last().unwrap() >= 3.0);
        let err = rec.max_error(&fam);
        assert!(err < 1e-6, "reconstruction error {err}");
    }

    #[test]
    fn constant_rate_round_trip_full_interval() {
        let fam = ConstantRateFamily::new(0.7, 0.2, 0.15);
        let rec = reconstruct_from_rates(&fam, 4.0, 1e-3);
        assert!(rec.halted_at.is_none());
        let err = rec.max_error(&fam);
        assert!(err < 1e-9, "reconstruction error {err}");
    }
}
