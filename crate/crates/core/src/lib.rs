//! Qubit open-quantum-system toolkit built around state distinguishability.
//!
//! The crate provides, in rough dependency order:
//!
//! - [`qubit`]: exact 2x2 Hermitian linear algebra, Bloch-vector geometry and
//!   the affine (`r -> D r + k`) representation of trace- and
//!   Hermiticity-preserving qubit maps;
//! - [`quant`]: distinguishability quantifiers (trace distance, Helstrom trace
//!   norm, relative entropy, Jensen-Shannon divergence and its square root,
//!   Holevo and quantum skew divergences) together with their bounds and
//!   triangle-like inequality constants;
//! - [`dynamics`]: parametric families of phase-covariant qubit dynamical maps
//!   (pure dephasing with an Ohmic-class spectral density, constant-rate
//!   master equations, a piecewise three-stage family with sigmoid switching,
//!   and compositions), with complete-positivity checks, canonical rates and
//!   P/CP-divisibility verdicts;
//! - [`measure`]: revival detection and the induced memory-effect measures,
//!   including the antipodal / full-pair searches and robustness maps over the
//!   Bloch sphere;
//! - [`domain`]: positivity and non-contractivity domains of (possibly
//!   non-positive) affine maps;
//! - [`sample`]: seeded, stream-splittable random state generation;
//! - [`scenario`]: declarative scenario configs, deterministic execution and
//!   plot-ready emission (CSV tables or a single JSON document).
//!
//! All entropic quantities use logarithms in base 2. Numerical conventions
//! (clamps, noise floors, tolerances) are centralized in [`consts`] and are
//! recorded in the metadata of every emitted record.

use thiserror::Error;

pub mod domain;
pub mod dynamics;
pub mod measure;
pub mod quant;
pub mod qubit;
pub mod sample;
pub mod scenario;

pub use domain::{domain_section, find_noncontractive_pair, ncd_membership, pd_membership,
                 unital_noncontractive_pair, DomainLabel, DomainSection};
pub use dynamics::{cp_check, eval_map, intermediate_map, p_div_check, rates, CounterexampleFamily,
                   CounterexampleParams, DephasingModel, DivisibilityClass, DivisibilityVerdict,
                   PhaseCovariant, PureDephasingFamily, RateTriple};
pub use measure::{nm_measure, pair_trajectory, revival_integral, robustness_map,
                  unital_entropy_measure, unital_jsd_td_identity, PairTrajectory, RevivalReport,
                  SearchConfig};
pub use quant::{jsd, sqrt_jsd, trace_distance, DivergenceValue, QuantifierId};
pub use qubit::{AffineMap, BlochVector, DensityMatrix, HermitianOperator};
pub use scenario::{emit, run_scenario, EmitFormat, ResultRecord, ScenarioConfig};

/// Numerical conventions used across the crate.
///
/// Every emitted [`scenario::ResultRecord`] lists the values in force under
/// `convention.*` metadata keys so that downstream consumers can tell which
/// thresholds a claim like "the measure is zero" was made under.
pub mod consts {
    /// Eigenvalues in `[-EIG_CLAMP, 0]` are treated as exact zeros inside
    /// entropy and logarithm evaluations; anything below is an error.
    pub const EIG_CLAMP: f64 = 1e-10;

    /// Slack allowed on state validity (Bloch norm above 1, trace away from 1,
    /// Hermiticity defects) before a matrix is rejected.
    pub const STATE_TOL: f64 = 1e-9;

    /// Eigenvalues below this threshold count as zero support when deciding
    /// whether a relative entropy is infinite.
    pub const SUPPORT_EPS: f64 = 1e-12;

    /// Tolerance on the complete-positivity inequalities of phase-covariant
    /// maps.
    pub const CP_TOL: f64 = 1e-9;

    /// Half-width of the band around zero in which the P-divisibility
    /// function is classified as "boundary" rather than violated.
    pub const P_DIV_TOL: f64 = 1e-9;

    /// Per-increment noise floor for revival detection: smaller upticks of a
    /// quantifier trajectory are attributed to discretization noise.
    pub const REVIVAL_FLOOR: f64 = 1e-9;

    /// Aggregate threshold below which a memory-effect measure is reported as
    /// zero.
    pub const MEASURE_FLOOR: f64 = 1e-6;

    /// Central finite-difference step used for rates when a family carries no
    /// analytic derivatives.
    pub const FD_STEP: f64 = 1e-5;

    /// Prefactor `c` in the pure-dephasing decoherence exponent
    /// `Gamma(t) = c * integral J(w) (1 - cos wt) / w^2 dw` (zero-temperature
    /// convention).
    pub const DECOHERENCE_PREFACTOR: f64 = 1.0;

    /// Hard upper integration limit for the spectral-density quadrature, in
    /// units of the cutoff frequency.
    pub const QUADRATURE_OMEGA_MAX: f64 = 50.0;

    /// Relative tolerance of the adaptive quadrature.
    pub const QUADRATURE_REL_TOL: f64 = 1e-9;
}

/// Errors shared by all modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian within tolerance (defect {0:.3e})")]
    NotHermitian(f64),
    #[error("trace {0} differs from 1 beyond tolerance")]
    NotUnitTrace(f64),
    #[error("eigenvalue {0:.3e} below the negativity threshold")]
    NegativeEigenvalue(f64),
    #[error("probability {0} outside [0, 1]")]
    ProbabilityRange(f64),
    #[error("bias parameter {0} outside the open interval (0, 1)")]
    BiasRange(f64),
    #[error("skew parameter {0} outside the open interval (0, 1)")]
    SkewRange(f64),
    #[error("affine map is singular along axis {0}")]
    SingularMap(usize),
    #[error("eta_par or eta_perp is nonpositive at t = {0}; rates are undefined there")]
    NonpositiveEta(f64),
    #[error("family is not unital (max |kappa_z| = {0:.3e} on the grid)")]
    NotUnital(f64),
    #[error("expected an expanding axis: lambda_max = {0} is not > 1")]
    NotExpanding(f64),
    #[error("map is positive; a non-contractive pair cannot exist")]
    PositiveMap,
    #[error("state lies outside the positivity domain")]
    OutsidePositivityDomain,
    #[error("quantifier {0} is unbounded; trajectories and measures are undefined for it")]
    UnboundedQuantifier(String),
    #[error("operation requires a trace-norm quantifier, got {0}")]
    NotNormBased(String),
    #[error("initial state must be pure (|r| = 1), got norm {0}")]
    NotPure(f64),
    #[error("switch time must be positive, got {0}")]
    BadSwitchTime(f64),
    #[error("time interval must satisfy t >= s >= 0, got s = {0}, t = {1}")]
    TimeOrder(f64, f64),
    #[error("grid must be sorted and contain at least {0} points")]
    BadGrid(usize),
    #[error("search space is empty")]
    EmptySearch,
    #[error("resolution {0} below the minimum of {1}")]
    BadResolution(usize, usize),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
