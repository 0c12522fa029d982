//! Revival detection and the induced memory-effect measures.
//!
//! The measure of a family under a quantifier `d` is the supremum, over
//! initial pairs (and over the bias/skew parameter where the quantifier has
//! one), of the time-integrated positive part of `d/dt d(rho1(t), rho2(t))`.
//! On a grid this is the sum of positive increments; increments at or below
//! [`REVIVAL_FLOOR`](crate::consts::REVIVAL_FLOOR) count as discretization
//! noise and are ignored, so "the measure is zero" is always a statement at
//! a declared detection threshold.
//!
//! The search runs in two stages: a deterministic golden-angle grid of
//! antipodal pure pairs (optimal pairs of the trace distance are orthogonal,
//! and for unital qubit maps the entropic quantifiers numerically prefer the
//! same pairs), then an optional full search over random, possibly mixed
//! pairs for quantifiers without an optimality theorem.

use rayon::prelude::*;

use crate::consts::{MEASURE_FLOOR, REVIVAL_FLOOR};
use crate::dynamics::{eval_map, PhaseCovariant};
use crate::quant::{helstrom_geom, jsd_geom, qskew_geom, td_geom, PairGeom, QuantifierId};
use crate::qubit::{entropy_of_norm_sq, AffineMap, BlochVector};
use crate::sample::{fibonacci_sphere, random_pair, stream_rng};
use crate::{Error, Result};

/// Time grid plus the quantifier values along one evolved pair.
#[derive(Clone, Debug)]
pub struct PairTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub initial: (BlochVector, BlochVector),
    pub quantifier: QuantifierId,
}

/// One contiguous stretch of counted positive increments.
#[derive(Clone, Copy, Debug)]
pub struct RevivalInterval {
    pub start: f64,
    pub end: f64,
    pub gain: f64,
}

/// Total revival integral together with where it was attained.
#[derive(Clone, Debug)]
pub struct RevivalReport {
    pub quantifier: QuantifierId,
    /// Sum of counted positive increments; equals the sum of interval gains.
    pub total: f64,
    pub intervals: Vec<RevivalInterval>,
    pub argmax_pair: Option<(BlochVector, BlochVector)>,
    /// Bias/skew at which the supremum was attained, when swept.
    pub argmax_parameter: Option<f64>,
    /// Number of initial pairs examined.
    pub pairs_searched: usize,
    /// Largest single increment seen before noise-floor filtering; documents
    /// how far below the detection threshold a "zero" verdict sits.
    pub max_raw_increment: f64,
}

impl RevivalReport {
    /// Whether the measure is zero at the declared thresholds.
    pub fn is_zero(&self) -> bool {
        self.total < MEASURE_FLOOR
    }
}

/// Search budget for [`nm_measure`].
#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Sorted time grid.
    pub grid: Vec<f64>,
    /// Antipodal pure pairs on a golden-angle lattice.
    pub antipodal_directions: usize,
    /// Random (possibly mixed) pairs; 0 skips the full-pair stage.
    pub random_pairs: usize,
    /// Bias/skew sweep values for parameterized quantifiers; when empty the
    /// quantifier's own parameter is used as-is.
    pub parameter_sweep: Vec<f64>,
    /// Golden-section refinement of the swept parameter around the best grid
    /// value (runs only when the coarse sweep finds a nonzero measure).
    pub refine_parameter: bool,
    pub seed: u64,
}

impl SearchConfig {
    pub fn antipodal(grid: Vec<f64>, directions: usize, seed: u64) -> Self {
        Self {
            grid,
            antipodal_directions: directions,
            random_pairs: 0,
            parameter_sweep: Self::default_sweep(),
            refine_parameter: true,
            seed,
        }
    }

    pub fn with_random_pairs(mut self, n: usize) -> Self {
        self.random_pairs = n;
        self
    }

    /// Bias/skew grid `{0.05, 0.10, ..., 0.95}`; endpoints stay strictly
    /// inside `(0, 1)` because the skew normalizations degenerate there.
    pub fn default_sweep() -> Vec<f64> {
        (1..=19).map(|i| i as f64 * 0.05).collect()
    }
}

/// Quantifier values along the evolved pair
/// `(Phi_t r1, Phi_t r2)` on the grid.
pub fn pair_trajectory<F: PhaseCovariant + ?Sized>(
    q: QuantifierId,
    family: &F,
    r1: BlochVector,
    r2: BlochVector,
    grid: &[f64],
) -> Result<PairTrajectory> {
    q.validate()?;
    if !q.is_bounded() {
        return Err(Error::UnboundedQuantifier(q.label()));
    }
    check_grid(grid, 1)?;
    let values = grid
        .iter()
        .map(|&t| {
            let m = eval_map(family, t);
            q.eval_bloch(m.apply(r1), m.apply(r2))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(PairTrajectory { times: grid.to_vec(), values, initial: (r1, r2), quantifier: q })
}

/// Positive-increment integral of one trajectory, with interval bookkeeping.
pub fn revival_integral(traj: &PairTrajectory) -> RevivalReport {
    let mut total = 0.0;
    let mut intervals: Vec<RevivalInterval> = Vec::new();
    let mut max_raw: f64 = 0.0;
    let mut open: Option<(f64, f64, f64)> = None; // (start, end, gain)
    for i in 1..traj.values.len() {
        let inc = traj.values[i] - traj.values[i - 1];
        max_raw = max_raw.max(inc);
        if inc > REVIVAL_FLOOR {
            total += inc;
            open = match open {
                Some((s, _, g)) => Some((s, traj.times[i], g + inc)),
                None => Some((traj.times[i - 1], traj.times[i], inc)),
            };
        } else if let Some((s, e, g)) = open.take() {
            intervals.push(RevivalInterval { start: s, end: e, gain: g });
        }
    }
    if let Some((s, e, g)) = open {
        intervals.push(RevivalInterval { start: s, end: e, gain: g });
    }
    RevivalReport {
        quantifier: traj.quantifier,
        total,
        intervals,
        argmax_pair: Some(traj.initial),
        argmax_parameter: traj.quantifier.parameter(),
        pairs_searched: 1,
        max_raw_increment: max_raw,
    }
}

/// Concrete quantifier with per-parameter constants hoisted out of the inner
/// loop.
#[derive(Clone, Copy, Debug)]
enum Prepared {
    Td,
    Helstrom { bias: f64 },
    Jsd,
    SqrtJsd,
    Holevo { mu: f64, inv_h: f64 },
    QSkew { mu: f64 },
}

impl Prepared {
    fn of(q: QuantifierId) -> Result<Prepared> {
        q.validate()?;
        Ok(match q {
            QuantifierId::TraceDistance => Prepared::Td,
            QuantifierId::Helstrom { bias } => Prepared::Helstrom { bias },
            QuantifierId::Jsd => Prepared::Jsd,
            QuantifierId::SqrtJsd => Prepared::SqrtJsd,
            QuantifierId::HolevoSkew { skew } => {
                Prepared::Holevo { mu: skew, inv_h: 1.0 / crate::qubit::h2(skew) }
            }
            QuantifierId::QuantumSkew { skew } => Prepared::QSkew { mu: skew },
            QuantifierId::RelativeEntropy => {
                return Err(Error::UnboundedQuantifier(q.label()))
            }
        })
    }

    #[inline]
    fn eval(&self, g: &PairGeom) -> f64 {
        match *self {
            Prepared::Td => td_geom(g),
            Prepared::Helstrom { bias } => helstrom_geom(bias, g),
            Prepared::Jsd => jsd_geom(g),
            Prepared::SqrtJsd => jsd_geom(g).sqrt(),
            Prepared::Holevo { mu, inv_h } => {
                let nu = 1.0 - mu;
                let msq = mu * mu * g.n1 + nu * nu * g.n2 + 2.0 * mu * nu * g.dot;
                let chi = entropy_of_norm_sq(msq)
                    - mu * entropy_of_norm_sq(g.n1)
                    - nu * entropy_of_norm_sq(g.n2);
                (chi * inv_h).max(0.0)
            }
            Prepared::QSkew { mu } => qskew_geom(mu, g),
        }
    }
}

/// Per-pair outcome of a fused sweep: revival totals per quantifier slot.
struct PairSweep {
    totals: Vec<f64>,
    max_raw: f64,
}

fn sweep_pair(maps: &[AffineMap], r1: BlochVector, r2: BlochVector, evals: &[Prepared]) -> PairSweep {
    let mut totals = vec![0.0; evals.len()];
    let mut prev = vec![0.0; evals.len()];
    let mut max_raw = f64::MIN;
    for (ti, m) in maps.iter().enumerate() {
        let a = m.apply(r1);
        let b = m.apply(r2);
        let g = PairGeom::of(a, b);
        for (slot, e) in evals.iter().enumerate() {
            let v = e.eval(&g);
            if ti > 0 {
                let inc = v - prev[slot];
                max_raw = max_raw.max(inc);
                if inc > REVIVAL_FLOOR {
                    totals[slot] += inc;
                }
            }
            prev[slot] = v;
        }
    }
    PairSweep { totals, max_raw }
}

/// Best revival per quantifier slot over both search stages.
struct SweepOutcome {
    best_total: Vec<f64>,
    best_pair: Vec<(BlochVector, BlochVector)>,
    pairs_searched: usize,
    max_raw_increment: f64,
}

/// Fused multi-quantifier search: evolves each candidate pair once and
/// accumulates every quantifier's revival along the way. Deterministic for a
/// fixed seed: work items are indexed and random pairs draw from per-index
/// streams.
fn sweep_search<F: PhaseCovariant + ?Sized>(
    family: &F,
    cfg: &SearchConfig,
    evals: &[Prepared],
) -> Result<SweepOutcome> {
    check_grid(&cfg.grid, 2)?;
    if cfg.antipodal_directions == 0 && cfg.random_pairs == 0 {
        return Err(Error::EmptySearch);
    }
    let maps: Vec<AffineMap> = cfg.grid.iter().map(|&t| eval_map(family, t)).collect();

    let antipodal: Vec<(BlochVector, BlochVector)> = fibonacci_sphere(cfg.antipodal_directions)
        .into_iter()
        .map(|u| (u, -u))
        .collect();

    let run_stage = |pairs: &[(BlochVector, BlochVector)]| -> Vec<PairSweep> {
        pairs
            .par_iter()
            .map(|&(a, b)| sweep_pair(&maps, a, b, evals))
            .collect()
    };

    let mut best_total = vec![f64::MIN; evals.len()];
    let mut best_pair = vec![(BlochVector::ZERO, BlochVector::ZERO); evals.len()];
    let mut max_raw = f64::MIN;
    let mut searched = 0usize;

    let mut absorb = |results: Vec<PairSweep>, pairs: &[(BlochVector, BlochVector)]| {
        for (i, res) in results.iter().enumerate() {
            max_raw = max_raw.max(res.max_raw);
            for slot in 0..evals.len() {
                if res.totals[slot] > best_total[slot] {
                    best_total[slot] = res.totals[slot];
                    best_pair[slot] = pairs[i];
                }
            }
        }
    };

    if !antipodal.is_empty() {
        let results = run_stage(&antipodal);
        searched += antipodal.len();
        absorb(results, &antipodal);
    }

    if cfg.random_pairs > 0 {
        let random: Vec<(BlochVector, BlochVector)> = (0..cfg.random_pairs)
            .into_par_iter()
            .map(|i| random_pair(&mut stream_rng(cfg.seed, i as u64)))
            .collect();
        let results = run_stage(&random);
        searched += random.len();
        absorb(results, &random);
    }

    Ok(SweepOutcome {
        best_total,
        best_pair,
        pairs_searched: searched,
        max_raw_increment: if max_raw == f64::MIN { 0.0 } else { max_raw },
    })
}

/// Memory-effect measure of `family` under quantifier `q`: the supremum of
/// the revival integral over the configured pair search, and over the
/// bias/skew sweep when `q` carries a parameter.
pub fn nm_measure<F: PhaseCovariant + ?Sized>(
    q: QuantifierId,
    family: &F,
    cfg: &SearchConfig,
) -> Result<RevivalReport> {
    let candidates: Vec<QuantifierId> = if q.parameter().is_some() && !cfg.parameter_sweep.is_empty()
    {
        cfg.parameter_sweep.iter().map(|&p| q.with_parameter(p)).collect()
    } else {
        vec![q]
    };
    let evals = candidates.iter().map(|&c| Prepared::of(c)).collect::<Result<Vec<_>>>()?;
    let outcome = sweep_search(family, cfg, &evals)?;

    let mut best_slot = 0;
    for slot in 1..candidates.len() {
        if outcome.best_total[slot] > outcome.best_total[best_slot] {
            best_slot = slot;
        }
    }
    let mut total = outcome.best_total[best_slot];
    let mut pair = outcome.best_pair[best_slot];
    let mut param = candidates[best_slot].parameter();
    let mut searched = outcome.pairs_searched;

    // golden-section refinement of the parameter around the best grid value
    if cfg.refine_parameter && candidates.len() > 1 && total > MEASURE_FLOOR {
        let spacing = if candidates.len() >= 2 {
            (candidates[1].parameter().unwrap() - candidates[0].parameter().unwrap()).abs()
        } else {
            0.05
        };
        let center = param.unwrap();
        let mut lo = (center - spacing).max(1e-3);
        let mut hi = (center + spacing).min(1.0 - 1e-3);
        let measure_at = |p: f64| -> Result<(f64, (BlochVector, BlochVector))> {
            let e = [Prepared::of(q.with_parameter(p))?];
            let out = sweep_search(family, cfg, &e)?;
            Ok((out.best_total[0], out.best_pair[0]))
        };
        let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let (mut f1, p1) = measure_at(x1)?;
        let (mut f2, p2) = measure_at(x2)?;
        searched += 2 * outcome.pairs_searched;
        if f1 > total {
            total = f1;
            pair = p1;
            param = Some(x1);
        }
        if f2 > total {
            total = f2;
            pair = p2;
            param = Some(x2);
        }
        for _ in 0..20 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                let (v, pp) = measure_at(x2)?;
                searched += outcome.pairs_searched;
                f2 = v;
                if v > total {
                    total = v;
                    pair = pp;
                    param = Some(x2);
                }
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                let (v, pp) = measure_at(x1)?;
                searched += outcome.pairs_searched;
                f1 = v;
                if v > total {
                    total = v;
                    pair = pp;
                    param = Some(x1);
                }
            }
        }
    }

    // intervals of the winning trajectory
    let winner = match param {
        Some(p) => q.with_parameter(p),
        None => q,
    };
    let mut report = revival_integral(&pair_trajectory(winner, family, pair.0, pair.1, &cfg.grid)?);
    report.quantifier = q;
    report.total = total;
    report.argmax_pair = Some(pair);
    report.argmax_parameter = param;
    report.pairs_searched = searched;
    report.max_raw_increment = outcome.max_raw_increment;
    Ok(report)
}

/// Fused variant used by scenario runs: one pass over the pair budget
/// evaluating several quantifiers at once. Returns one report per entry of
/// `quantifiers`; entries with a parameter are treated as fixed (expand the
/// sweep yourself when needed).
pub fn multi_nm_measure<F: PhaseCovariant + ?Sized>(
    quantifiers: &[QuantifierId],
    family: &F,
    cfg: &SearchConfig,
) -> Result<Vec<RevivalReport>> {
    let evals = quantifiers.iter().map(|&c| Prepared::of(c)).collect::<Result<Vec<_>>>()?;
    let outcome = sweep_search(family, cfg, &evals)?;
    quantifiers
        .iter()
        .enumerate()
        .map(|(slot, &q)| {
            let pair = outcome.best_pair[slot];
            let mut report =
                revival_integral(&pair_trajectory(q, family, pair.0, pair.1, &cfg.grid)?);
            report.total = outcome.best_total[slot];
            report.argmax_pair = Some(pair);
            report.argmax_parameter = q.parameter();
            report.pairs_searched = outcome.pairs_searched;
            report.max_raw_increment = outcome.max_raw_increment;
            Ok(report)
        })
        .collect()
}

/// Entropy-decrease measure for unital families: maximizes, over single
/// initial states, the summed positive increments of `-H(rho(t))`. For
/// unital qubit dynamics this coincides with the JSD pair measure.
pub fn unital_entropy_measure<F: PhaseCovariant + ?Sized>(
    family: &F,
    cfg: &SearchConfig,
) -> Result<RevivalReport> {
    check_grid(&cfg.grid, 2)?;
    require_unital(family, &cfg.grid)?;
    if cfg.antipodal_directions == 0 && cfg.random_pairs == 0 {
        return Err(Error::EmptySearch);
    }
    let maps: Vec<AffineMap> = cfg.grid.iter().map(|&t| eval_map(family, t)).collect();

    let scan = |r: BlochVector| -> (f64, f64) {
        let mut total = 0.0;
        let mut prev = 0.0;
        let mut max_raw = f64::MIN;
        for (ti, m) in maps.iter().enumerate() {
            let v = -entropy_of_norm_sq(m.apply(r).norm_sq());
            if ti > 0 {
                let inc = v - prev;
                max_raw = max_raw.max(inc);
                if inc > REVIVAL_FLOOR {
                    total += inc;
                }
            }
            prev = v;
        }
        (total, max_raw)
    };

    let mut states: Vec<BlochVector> = fibonacci_sphere(cfg.antipodal_directions);
    states.extend(
        (0..cfg.random_pairs).map(|i| crate::sample::random_state(&mut stream_rng(cfg.seed, i as u64))),
    );
    let results: Vec<(f64, f64)> = states.par_iter().map(|&r| scan(r)).collect();

    let mut best = 0usize;
    let mut max_raw = f64::MIN;
    for (i, &(total, raw)) in results.iter().enumerate() {
        max_raw = max_raw.max(raw);
        if total > results[best].0 {
            best = i;
        }
    }
    let r = states[best];
    Ok(RevivalReport {
        quantifier: QuantifierId::Jsd,
        total: results[best].0,
        intervals: Vec::new(),
        argmax_pair: Some((r, -r)),
        argmax_parameter: None,
        pairs_searched: states.len(),
        max_raw_increment: if max_raw == f64::MIN { 0.0 } else { max_raw },
    })
}

/// Maximum deviation, along the evolved antipodal pure pair, between the JSD
/// and its trace-distance form `1 - h((1 - D)/2)` that holds for unital
/// dynamics. The JSD side is evaluated through the operator/eigenvalue
/// route so the two sides are computed independently.
pub fn unital_jsd_td_identity<F: PhaseCovariant + ?Sized>(
    r_pure: BlochVector,
    family: &F,
    grid: &[f64],
) -> Result<f64> {
    check_grid(grid, 1)?;
    if (r_pure.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::NotPure(r_pure.norm()));
    }
    require_unital(family, grid)?;
    let mut max_dev: f64 = 0.0;
    for &t in grid {
        let m = eval_map(family, t);
        let a = crate::qubit::state_from_bloch(m.apply(r_pure));
        let b = crate::qubit::state_from_bloch(m.apply(-r_pure));
        // operator route: entropies from closed-form eigenvalues
        let mix = crate::qubit::DensityMatrix::from_operator(
            (a.operator() + b.operator()).scale(0.5),
        )?;
        let j = mix.von_neumann_entropy()?
            - 0.5 * (a.von_neumann_entropy()? + b.von_neumann_entropy()?);
        // trace-distance route
        let d = 0.5 * (a.operator() - b.operator()).trace_norm();
        let rhs = 1.0 - crate::qubit::h2(0.5 * (1.0 - d));
        max_dev = max_dev.max((j - rhs).abs());
    }
    Ok(max_dev)
}

/// Revival measure for each point of a golden-angle sphere covering, pairing
/// the point with its antipode.
#[derive(Clone, Debug)]
pub struct RobustnessMap {
    pub quantifier: QuantifierId,
    pub directions: Vec<BlochVector>,
    pub totals: Vec<f64>,
    /// Fixed rescaling constant used for the `rescaled` column of emitted
    /// records: `1e-2` for the two distances, `1e-3` for the JSD, otherwise
    /// the maximum of the map.
    pub reference: f64,
}

impl RobustnessMap {
    pub fn rescaled(&self) -> Vec<f64> {
        self.totals.iter().map(|v| v / self.reference).collect()
    }

    pub fn max_total(&self) -> f64 {
        self.totals.iter().cloned().fold(0.0, f64::max)
    }
}

/// Computes the robustness map of the measure under `q` at `resolution`
/// sphere points (minimum 8).
pub fn robustness_map<F: PhaseCovariant + ?Sized>(
    q: QuantifierId,
    family: &F,
    grid: &[f64],
    resolution: usize,
) -> Result<RobustnessMap> {
    if resolution < 8 {
        return Err(Error::BadResolution(resolution, 8));
    }
    check_grid(grid, 2)?;
    let evals = [Prepared::of(q)?];
    let maps: Vec<AffineMap> = grid.iter().map(|&t| eval_map(family, t)).collect();
    let directions = fibonacci_sphere(resolution);
    let totals: Vec<f64> = directions
        .par_iter()
        .map(|&u| sweep_pair(&maps, u, -u, &evals).totals[0])
        .collect();
    let reference = match q {
        QuantifierId::TraceDistance | QuantifierId::SqrtJsd => 1e-2,
        QuantifierId::Jsd => 1e-3,
        _ => totals.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE),
    };
    Ok(RobustnessMap { quantifier: q, directions, totals, reference })
}

fn require_unital<F: PhaseCovariant + ?Sized>(family: &F, grid: &[f64]) -> Result<()> {
    let max_k = grid.iter().map(|&t| family.kappa_z(t).abs()).fold(0.0, f64::max);
    if max_k > 1e-12 {
        return Err(Error::NotUnital(max_k));
    }
    Ok(())
}

fn check_grid(grid: &[f64], min_len: usize) -> Result<()> {
    if grid.len() < min_len || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadGrid(min_len));
    }
    Ok(())
}

/// Uniform grid of `points` values covering `[start, stop]`.
pub fn uniform_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![start];
    }
    let step = (stop - start) / (points - 1) as f64;
    (0..points).map(|i| start + step * i as f64).collect()
}
