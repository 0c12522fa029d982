//! Exact 2x2 Hermitian linear algebra and Bloch-space geometry.
//!
//! Qubit states are canonically represented by Bloch vectors; density
//! matrices are materialized only where operator formulas demand them. All
//! spectral quantities use the closed-form 2x2 eigenvalue formula
//! `tr/2 +- sqrt((tr/2)^2 - det)`, never an iterative eigensolver.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::consts::{EIG_CLAMP, STATE_TOL};
use crate::{Error, Result};

/// Real three-vector parameterizing a qubit state, `rho = (1 + r . sigma)/2`.
///
/// Physical states fill the closed unit ball; vectors with `|r| > 1` are
/// deliberately representable so that images of non-positive maps can be
/// analyzed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const ZERO: BlochVector = BlochVector { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// State validity: `|r| <= 1 + tol`.
    pub fn is_valid_state(&self, tol: f64) -> bool {
        self.norm() <= 1.0 + tol
    }

    /// Unit vector along `self`; `None` for the zero vector.
    pub fn normalized(&self) -> Option<BlochVector> {
        let n = self.norm();
        if n == 0.0 {
            None
        } else {
            Some(*self * (1.0 / n))
        }
    }

    /// Rotation by `angle` about `axis` (Rodrigues formula). `axis` need not
    /// be normalized.
    pub fn rotated(&self, axis: BlochVector, angle: f64) -> BlochVector {
        let k = axis.normalized().unwrap_or(BlochVector::new(0.0, 0.0, 1.0));
        let (s, c) = angle.sin_cos();
        let kv = BlochVector::new(
            k.y * self.z - k.z * self.y,
            k.z * self.x - k.x * self.z,
            k.x * self.y - k.y * self.x,
        );
        let kd = k.dot(self);
        *self * c + kv * s + k * (kd * (1.0 - c))
    }
}

impl Add for BlochVector {
    type Output = BlochVector;
    fn add(self, o: BlochVector) -> BlochVector {
        BlochVector::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for BlochVector {
    type Output = BlochVector;
    fn sub(self, o: BlochVector) -> BlochVector {
        BlochVector::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for BlochVector {
    type Output = BlochVector;
    fn neg(self) -> BlochVector {
        BlochVector::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for BlochVector {
    type Output = BlochVector;
    fn mul(self, s: f64) -> BlochVector {
        BlochVector::new(self.x * s, self.y * s, self.z * s)
    }
}

/// A 2x2 Hermitian operator, stored as two real diagonal entries plus the
/// complex (0,1) entry. Hermiticity is exact by construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermitianOperator {
    d0: f64,
    d1: f64,
    off_re: f64,
    off_im: f64,
}

impl HermitianOperator {
    pub fn zero() -> Self {
        Self { d0: 0.0, d1: 0.0, off_re: 0.0, off_im: 0.0 }
    }

    pub fn identity() -> Self {
        Self { d0: 1.0, d1: 1.0, off_re: 0.0, off_im: 0.0 }
    }

    /// Builds the operator from raw parts: diagonal `(d0, d1)` and the (0,1)
    /// entry `off_re + i off_im`.
    pub fn from_parts(d0: f64, d1: f64, off_re: f64, off_im: f64) -> Self {
        Self { d0, d1, off_re, off_im }
    }

    /// Validates Hermiticity of a full entry matrix to [`STATE_TOL`].
    pub fn from_entries(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let defect = m[0][0].im.abs().max(m[1][1].im.abs()).max((m[0][1] - m[1][0].conj()).norm());
        if defect > STATE_TOL {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self { d0: m[0][0].re, d1: m[1][1].re, off_re: m[0][1].re, off_im: m[0][1].im })
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        [
            [Complex64::new(self.d0, 0.0), Complex64::new(self.off_re, self.off_im)],
            [Complex64::new(self.off_re, -self.off_im), Complex64::new(self.d1, 0.0)],
        ]
    }

    pub fn trace(&self) -> f64 {
        self.d0 + self.d1
    }

    pub fn det(&self) -> f64 {
        self.d0 * self.d1 - (self.off_re * self.off_re + self.off_im * self.off_im)
    }

    /// Eigenvalues sorted descending, by the closed form
    /// `tr/2 +- sqrt((tr/2)^2 - det)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mid = 0.5 * (self.d0 + self.d1);
        // (d0-d1)^2/4 + |off|^2 is the discriminant written in a form that is
        // nonnegative regardless of rounding.
        let half_gap = 0.5 * (self.d0 - self.d1);
        let disc =
            (half_gap * half_gap + self.off_re * self.off_re + self.off_im * self.off_im).sqrt();
        (mid + disc, mid - disc)
    }

    /// Trace norm `|e0| + |e1|`.
    pub fn trace_norm(&self) -> f64 {
        let (e0, e1) = self.eigenvalues();
        e0.abs() + e1.abs()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { d0: self.d0 * s, d1: self.d1 * s, off_re: self.off_re * s, off_im: self.off_im * s }
    }
}

impl Add for HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, o: HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            d0: self.d0 + o.d0,
            d1: self.d1 + o.d1,
            off_re: self.off_re + o.off_re,
            off_im: self.off_im + o.off_im,
        }
    }
}

impl Sub for HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, o: HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            d0: self.d0 - o.d0,
            d1: self.d1 - o.d1,
            off_re: self.off_re - o.off_re,
            off_im: self.off_im - o.off_im,
        }
    }
}

impl Neg for HermitianOperator {
    type Output = HermitianOperator;
    fn neg(self) -> HermitianOperator {
        self.scale(-1.0)
    }
}

/// A qubit density matrix: Hermitian with unit trace by construction.
/// Positivity is a queryable property, not an invariant, so that images of
/// non-positive maps remain representable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(HermitianOperator);

impl DensityMatrix {
    /// `rho = (1 + r . sigma) / 2`. Accepts `|r| > 1`.
    pub fn from_bloch(r: BlochVector) -> Self {
        DensityMatrix(HermitianOperator {
            d0: 0.5 * (1.0 + r.z),
            d1: 0.5 * (1.0 - r.z),
            off_re: 0.5 * r.x,
            off_im: -0.5 * r.y,
        })
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(HermitianOperator::identity().scale(0.5))
    }

    /// Validates Hermiticity and unit trace.
    pub fn from_entries(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let op = HermitianOperator::from_entries(m)?;
        Self::from_operator(op)
    }

    /// Validates unit trace of a Hermitian operator.
    pub fn from_operator(op: HermitianOperator) -> Result<Self> {
        if (op.trace() - 1.0).abs() > STATE_TOL {
            return Err(Error::NotUnitTrace(op.trace()));
        }
        Ok(DensityMatrix(op))
    }

    /// Inverse of the Bloch parameterization.
    pub fn bloch(&self) -> BlochVector {
        BlochVector::new(2.0 * self.0.off_re, -2.0 * self.0.off_im, self.0.d0 - self.0.d1)
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.0.entries()
    }

    pub fn operator(&self) -> HermitianOperator {
        self.0
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        self.0.eigenvalues()
    }

    /// Both eigenvalues at least `-EIG_CLAMP` (and trace/Hermiticity hold by
    /// construction).
    pub fn is_valid(&self) -> bool {
        self.0.eigenvalues().1 >= -EIG_CLAMP
    }

    /// Von Neumann entropy in base 2, in `[0, 1]` for valid states.
    ///
    /// Eigenvalues in `[-EIG_CLAMP, 0]` are clamped to zero; anything more
    /// negative is rejected.
    pub fn von_neumann_entropy(&self) -> Result<f64> {
        let (e0, e1) = self.0.eigenvalues();
        let mut h = 0.0;
        for e in [e0, e1] {
            if e < -EIG_CLAMP {
                return Err(Error::NegativeEigenvalue(e));
            }
            if e > 0.0 {
                h -= e * e.log2();
            }
        }
        Ok(h.max(0.0))
    }
}

impl From<DensityMatrix> for HermitianOperator {
    fn from(rho: DensityMatrix) -> HermitianOperator {
        rho.0
    }
}

impl Sub for DensityMatrix {
    type Output = HermitianOperator;
    fn sub(self, o: DensityMatrix) -> HermitianOperator {
        self.0 - o.0
    }
}

impl Add<HermitianOperator> for DensityMatrix {
    type Output = HermitianOperator;
    fn add(self, o: HermitianOperator) -> HermitianOperator {
        self.0 + o
    }
}

/// `rho = (1 + r . sigma)/2`; eigenvalues are exactly `(1 +- |r|)/2`.
pub fn state_from_bloch(r: BlochVector) -> DensityMatrix {
    DensityMatrix::from_bloch(r)
}

/// Inverse of [`state_from_bloch`]. The unit-trace precondition is enforced
/// when the [`DensityMatrix`] is constructed from raw entries.
pub fn bloch_from_state(rho: &DensityMatrix) -> BlochVector {
    rho.bloch()
}

/// Eigenvalues of a Hermitian operator, sorted descending.
pub fn eigenvalues_2x2(a: &HermitianOperator) -> (f64, f64) {
    a.eigenvalues()
}

/// Trace norm `|e0| + |e1|` of a Hermitian operator.
pub fn trace_norm(a: &HermitianOperator) -> f64 {
    a.trace_norm()
}

/// Von Neumann entropy of a state, base 2.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    rho.von_neumann_entropy()
}

/// Binary entropy `h(p) = -p log2 p - (1-p) log2(1-p)`, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityRange(p));
    }
    Ok(h2(p))
}

/// Unchecked binary entropy on a pre-clamped argument.
pub(crate) fn h2(p: f64) -> f64 {
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.log2();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).log2();
    }
    h.max(0.0)
}

/// Entropy of a qubit with squared Bloch norm `nsq`: `h((1 - |r|)/2)`.
/// Norms slightly above 1 (roundoff from affine chains) are clamped.
pub(crate) fn entropy_of_norm_sq(nsq: f64) -> f64 {
    let n = nsq.max(0.0).sqrt().min(1.0);
    h2(0.5 * (1.0 - n))
}

/// The action `r -> D r + k` of a trace- and Hermiticity-preserving qubit
/// map, with `D` real diagonal. Non-positive maps are deliberately
/// representable; positivity is a queryable property.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    /// Diagonal of `D`: `(lambda_1, lambda_2, lambda_3)`.
    pub diag: [f64; 3],
    /// Translation `k`.
    pub shift: [f64; 3],
}

impl AffineMap {
    pub fn identity() -> Self {
        Self { diag: [1.0, 1.0, 1.0], shift: [0.0, 0.0, 0.0] }
    }

    pub fn new(diag: [f64; 3], shift: [f64; 3]) -> Self {
        Self { diag, shift }
    }

    pub fn unital(diag: [f64; 3]) -> Self {
        Self { diag, shift: [0.0, 0.0, 0.0] }
    }

    pub fn is_unital(&self, tol: f64) -> bool {
        self.shift.iter().all(|k| k.abs() <= tol)
    }

    /// Componentwise `lambda_i r_i + k_i`.
    pub fn apply(&self, r: BlochVector) -> BlochVector {
        BlochVector::new(
            self.diag[0] * r.x + self.shift[0],
            self.diag[1] * r.y + self.shift[1],
            self.diag[2] * r.z + self.shift[2],
        )
    }

    /// `self` after `inner`: `(D2 D1, D2 k1 + k2)`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        let mut diag = [0.0; 3];
        let mut shift = [0.0; 3];
        for i in 0..3 {
            diag[i] = self.diag[i] * inner.diag[i];
            shift[i] = self.diag[i] * inner.shift[i] + self.shift[i];
        }
        AffineMap { diag, shift }
    }

    /// `(D^-1, -D^-1 k)`; requires all `lambda_i != 0`.
    pub fn invert(&self) -> Result<AffineMap> {
        let mut diag = [0.0; 3];
        let mut shift = [0.0; 3];
        for i in 0..3 {
            if self.diag[i] == 0.0 {
                return Err(Error::SingularMap(i));
            }
            diag[i] = 1.0 / self.diag[i];
            shift[i] = -self.shift[i] / self.diag[i];
        }
        Ok(AffineMap { diag, shift })
    }

    /// Exact maximum of `|D u + k|` over the closed unit ball.
    ///
    /// The maximum of the convex objective is attained on the sphere; with
    /// `b_i = lambda_i^2` and `a_i = lambda_i k_i` the stationarity conditions
    /// reduce to the secular equation `sum a_i^2/(nu - b_i)^2 = 1` with
    /// `nu >= max b_i`, solved by bisection. Axis evaluations serve as a
    /// lower-bound safety net.
    pub fn max_image_norm(&self) -> f64 {
        let b: Vec<f64> = self.diag.iter().map(|l| l * l).collect();
        let a: Vec<f64> = (0..3).map(|i| self.diag[i] * self.shift[i]).collect();
        let bmax = b.iter().cloned().fold(f64::MIN, f64::max);

        let image_norm = |u: [f64; 3]| -> f64 {
            self.apply(BlochVector::new(u[0], u[1], u[2])).norm()
        };

        // lower bounds from the six axis points
        let mut best: f64 = 0.0;
        for i in 0..3 {
            for s in [-1.0, 1.0] {
                let mut u = [0.0; 3];
                u[i] = s;
                best = best.max(image_norm(u));
            }
        }

        let phi = |nu: f64| -> f64 {
            (0..3)
                .map(|i| {
                    if a[i] == 0.0 {
                        0.0
                    } else {
                        let d = nu - b[i];
                        a[i] * a[i] / (d * d)
                    }
                })
                .sum()
        };
        let u_of = |nu: f64| -> [f64; 3] {
            let mut u = [0.0; 3];
            for i in 0..3 {
                if a[i] != 0.0 {
                    u[i] = a[i] / (nu - b[i]);
                }
            }
            u
        };

        let eps = 1e-14 * (1.0 + bmax.abs());
        if phi(bmax + eps) >= 1.0 {
            // unique root of phi(nu) = 1 on (bmax, inf)
            let mut lo = bmax + eps;
            let mut hi = bmax + 1.0 + a.iter().map(|x| x.abs()).sum::<f64>();
            while phi(hi) >= 1.0 {
                hi = bmax + 2.0 * (hi - bmax);
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if phi(mid) >= 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mut u = u_of(0.5 * (lo + hi));
            let n = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
            if n > 0.0 {
                for ui in &mut u {
                    *ui /= n;
                }
            }
            best = best.max(image_norm(u));
        } else {
            // residual mass goes to a top-eigenvalue coordinate
            let mut u = u_of(bmax + eps);
            let m = (1.0 - (u[0] * u[0] + u[1] * u[1] + u[2] * u[2])).max(0.0).sqrt();
            if let Some(top) = (0..3).find(|&i| b[i] == bmax && a[i] == 0.0) {
                u[top] = m;
                best = best.max(image_norm(u));
                u[top] = -m;
                best = best.max(image_norm(u));
            }
        }
        best
    }

    /// Whether every state maps into the (slightly inflated) unit ball.
    pub fn is_positive(&self, tol: f64) -> bool {
        self.max_image_norm() <= 1.0 + tol
    }
}

/// `m2` after `m1`.
pub fn compose_affine(m2: &AffineMap, m1: &AffineMap) -> AffineMap {
    m2.compose(m1)
}

/// Inverse affine map.
pub fn invert_affine(m: &AffineMap) -> Result<AffineMap> {
    m.invert()
}

/// `m.apply(r)` as a free function.
pub fn apply_affine(m: &AffineMap, r: BlochVector) -> BlochVector {
    m.apply(r)
}
