//! The random-walk verifier and its Monte Carlo estimators.
//!
//! One step of the walk picks a term uniformly, then a uniform element of
//! that term's subset containing the current string. Starting from a good
//! string this is exactly the simple random walk on `G(H)`. With laziness
//! `p` the walk first stays put with probability `p`.
//!
//! The verifier checks `x_0, ..., x_{T-1}` for badness and makes `T` moves;
//! `x_T` is never inspected.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_rational::Ratio;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bits::Bitstring;
use crate::error::{Error, Result};
use crate::graph::ConfigGraph;
use crate::instance::Hamiltonian;
use crate::rng::{derive_seed, stream_rng};
use crate::stats::Estimate;

pub const MIN_TRIALS: usize = 30;
pub const ESCAPE_LAZINESS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkParams {
    pub steps: u64,
    pub laziness: f64,
    pub trials: usize,
    pub seed: u64,
}

impl WalkParams {
    /// `T = 100 n m`, non-lazy, 1000 trials.
    pub fn for_instance(h: &Hamiltonian) -> Self {
        WalkParams {
            steps: default_steps(h),
            laziness: 0.0,
            trials: 1000,
            seed: 0,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Parameter("step count must be positive".into()));
        }
        check_laziness(self.laziness)?;
        if self.trials == 0 {
            return Err(Error::Parameter("trial count must be positive".into()));
        }
        Ok(())
    }
}

pub fn default_steps(h: &Hamiltonian) -> u64 {
    100 * h.n() as u64 * h.m() as u64
}

fn check_laziness(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Parameter(format!("laziness {p} outside [0, 1)")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRecord {
    Stay,
    Term(usize),
    /// The chosen term does not cover the current string; it is bad.
    Uncovered(usize),
}

/// Raw-index step used by every estimator.
#[inline]
pub(crate) fn step_raw<R: Rng + ?Sized>(h: &Hamiltonian, x: u64, rng: &mut R, laziness: f64) -> (u64, StepRecord) {
    if laziness > 0.0 && rng.random::<f64>() < laziness {
        return (x, StepRecord::Stay);
    }
    let i = rng.random_range(0..h.m());
    match h.subset_at(i, x) {
        None => (x, StepRecord::Uncovered(i)),
        Some(s) => {
            let p = s[rng.random_range(0..s.len())];
            (h.embed(i, x, p), StepRecord::Term(i))
        }
    }
}

pub fn walk_step<R: Rng + ?Sized>(
    h: &Hamiltonian,
    x: &Bitstring,
    rng: &mut R,
    laziness: f64,
) -> Result<(Bitstring, StepRecord)> {
    h.check_string(x)?;
    check_laziness(laziness)?;
    let (y, rec) = step_raw(h, x.value(), rng, laziness);
    Ok((Bitstring::from_raw(h.n(), y), rec))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Outcome {
    Accept,
    Reject { step: u64 },
}

impl Outcome {
    pub fn is_reject(&self) -> bool {
        matches!(self, Outcome::Reject { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    /// Index of the string produced by this move.
    pub step: u64,
    pub record: StepRecord,
    pub string: Bitstring,
    pub bad: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkTrace {
    pub start: Bitstring,
    pub start_bad: bool,
    pub steps: Vec<TraceStep>,
    pub outcome: Outcome,
    pub seed: u64,
    pub trial: u64,
}

/// Step index at which the walk rejects, if it does.
#[inline]
pub(crate) fn run_raw<R: Rng + ?Sized>(h: &Hamiltonian, x0: u64, steps: u64, laziness: f64, rng: &mut R) -> Option<u64> {
    let mut x = x0;
    for t in 0..steps {
        if h.is_bad_index(x) {
            return Some(t);
        }
        x = step_raw(h, x, rng, laziness).0;
    }
    None
}

/// Runs trial number `trial` of the verifier with full bookkeeping.
pub fn verify(h: &Hamiltonian, x0: &Bitstring, params: &WalkParams, trial: u64) -> Result<WalkTrace> {
    h.check_string(x0)?;
    params.check()?;
    let n = h.n();
    let mut rng = stream_rng(params.seed, trial);
    let mut x = x0.value();
    let mut trace = Vec::new();
    let mut outcome = Outcome::Accept;
    for t in 0..params.steps {
        if h.is_bad_index(x) {
            outcome = Outcome::Reject { step: t };
            break;
        }
        let (y, record) = step_raw(h, x, &mut rng, params.laziness);
        x = y;
        trace.push(TraceStep {
            step: t + 1,
            record,
            string: Bitstring::from_raw(n, x),
            bad: h.is_bad_index(x),
        });
    }
    Ok(WalkTrace {
        start: *x0,
        start_bad: h.is_bad_index(x0.value()),
        steps: trace,
        outcome,
        seed: params.seed,
        trial,
    })
}

/// Monte Carlo estimate of the rejection probability. Trial `j` uses
/// stream `j` of `params.seed`, so the result does not depend on threading.
pub fn rejection_probability(h: &Hamiltonian, x0: &Bitstring, params: &WalkParams) -> Result<Estimate> {
    h.check_string(x0)?;
    params.check()?;
    if params.trials < MIN_TRIALS {
        return Err(Error::Parameter(format!(
            "at least {MIN_TRIALS} trials required, got {}",
            params.trials
        )));
    }
    let x = x0.value();
    let rejects: u64 = (0..params.trials as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream_rng(params.seed, j);
            run_raw(h, x, params.steps, params.laziness, &mut rng).is_some() as u64
        })
        .sum();
    Ok(Estimate::from_counts(rejects, params.trials as u64))
}

/// Exact rejection probability by propagating the walk distribution with
/// bad-string mass absorbed at every check.
pub fn exact_rejection_probability(
    h: &Hamiltonian,
    x0: &Bitstring,
    steps: u64,
    laziness: f64,
    max_qubits: usize,
) -> Result<f64> {
    h.check_string(x0)?;
    check_laziness(laziness)?;
    if h.n() > max_qubits {
        return Err(Error::Capacity {
            what: "exact rejection",
            requested: h.n(),
            cap: max_qubits,
        });
    }
    let dim = h.dim();
    let m = h.m() as f64;
    let bad: Vec<bool> = (0..dim as u64).map(|x| h.is_bad_index(x)).collect();
    let mut p = vec![0.0; dim];
    let mut next = vec![0.0; dim];
    p[x0.index()] = 1.0;
    let mut rejected = 0.0;
    for _ in 0..steps {
        next.iter_mut().for_each(|v| *v = 0.0);
        for x in 0..dim {
            let w = p[x];
            if w == 0.0 {
                continue;
            }
            if bad[x] {
                rejected += w;
                continue;
            }
            next[x] += laziness * w;
            let move_w = (1.0 - laziness) * w / m;
            for i in 0..h.m() {
                let s = h.subset_at(i, x as u64).expect("good strings are covered by every term");
                let share = move_w / s.len() as f64;
                for &pat in s {
                    next[h.embed(i, x as u64, pat) as usize] += share;
                }
            }
        }
        std::mem::swap(&mut p, &mut next);
    }
    Ok(rejected.min(1.0))
}

/// Exact one-step distribution of the non-lazy walk from a good string.
pub fn transition_exact(h: &Hamiltonian, x: &Bitstring) -> Result<Vec<(Bitstring, Ratio<BigUint>)>> {
    h.check_string(x)?;
    if h.is_bad_index(x.value()) {
        return Err(Error::BadStringInSet(x.to_string()));
    }
    let mut acc: BTreeMap<u64, Ratio<BigUint>> = BTreeMap::new();
    let m = BigUint::from(h.m());
    for i in 0..h.m() {
        let s = h.subset_at(i, x.value()).expect("good string");
        let share = Ratio::new(BigUint::from(1u32), &m * BigUint::from(s.len()));
        for &p in s {
            *acc.entry(h.embed(i, x.value(), p)).or_insert_with(|| Ratio::from_integer(BigUint::default())) +=
                share.clone();
        }
    }
    Ok(acc
        .into_iter()
        .map(|(y, r)| (Bitstring::from_raw(h.n(), y), r))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub steps: u64,
    /// Smallest estimate over every (instance, start) pair.
    pub min_reject: f64,
    pub mean_reject: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartEstimate {
    pub instance: usize,
    pub start: Bitstring,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub steps: u64,
    pub curve: Vec<CurvePoint>,
    /// Estimates at the calibrated step count.
    pub estimates: Vec<StartEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationParams {
    pub target: f64,
    pub max_steps: u64,
    pub starts_per_instance: usize,
    pub trials: usize,
    pub laziness: f64,
    pub seed: u64,
}

fn sample_starts(h: &Hamiltonian, count: usize, seed: u64) -> Vec<Bitstring> {
    let mut rng = stream_rng(seed, 0);
    (0..count)
        .map(|_| Bitstring::from_raw(h.n(), rng.random_range(0..h.dim() as u64)))
        .collect()
}

fn calibration_round(
    family: &[Hamiltonian],
    starts: &[Vec<Bitstring>],
    steps: u64,
    cp: &CalibrationParams,
) -> Result<Vec<StartEstimate>> {
    let mut out = Vec::new();
    for (a, (h, xs)) in family.iter().zip(starts).enumerate() {
        for (b, x) in xs.iter().enumerate() {
            let params = WalkParams {
                steps,
                laziness: cp.laziness,
                trials: cp.trials,
                seed: derive_seed(derive_seed(cp.seed, a as u64), b as u64 + 1),
            };
            out.push(StartEstimate {
                instance: a,
                start: *x,
                estimate: rejection_probability(h, x, &params)?,
            });
        }
    }
    Ok(out)
}

/// Doubling search `T = 1, 2, 4, ...` for the smallest `T <= max_steps` at
/// which every sampled start of every instance rejects with empirical
/// frequency at least `target`. `max_steps` is tried last if it is not a
/// power of two.
pub fn calibrate_steps(family: &[Hamiltonian], cp: &CalibrationParams) -> Result<Calibration> {
    if family.is_empty() {
        return Err(Error::Parameter("empty instance family".into()));
    }
    if cp.starts_per_instance == 0 || cp.max_steps == 0 {
        return Err(Error::Parameter("need at least one start and one step".into()));
    }
    let starts: Vec<Vec<Bitstring>> = family
        .iter()
        .enumerate()
        .map(|(a, h)| sample_starts(h, cp.starts_per_instance, derive_seed(cp.seed, 1 << 32 | a as u64)))
        .collect();
    let mut curve = Vec::new();
    let mut best = (f64::NEG_INFINITY, 0);
    let mut t = 1u64;
    loop {
        let est = calibration_round(family, &starts, t, cp)?;
        let min = est.iter().map(|e| e.estimate.mean).fold(f64::INFINITY, f64::min);
        let mean = est.iter().map(|e| e.estimate.mean).sum::<f64>() / est.len() as f64;
        curve.push(CurvePoint {
            steps: t,
            min_reject: min,
            mean_reject: mean,
        });
        if min > best.0 {
            best = (min, t);
        }
        if min >= cp.target {
            return Ok(Calibration {
                steps: t,
                curve,
                estimates: est,
            });
        }
        if t >= cp.max_steps {
            break;
        }
        t = (t * 2).min(cp.max_steps);
    }
    Err(Error::Calibration {
        t_max: cp.max_steps,
        target: cp.target,
        best: best.0,
        best_t: best.1,
    })
}

/// Rejection estimates at each step count in `grid`, for plotting.
pub fn rejection_curve(h: &Hamiltonian, x0: &Bitstring, grid: &[u64], base: &WalkParams) -> Result<Vec<(u64, Estimate)>> {
    grid.iter()
        .map(|&t| {
            let p = WalkParams { steps: t, ..*base };
            rejection_probability(h, x0, &p).map(|e| (t, e))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StartDistribution {
    /// Stationary distribution restricted to `S`.
    Restricted,
    Fixed(Bitstring),
}

/// Probability that a lazy walk leaves `S` within `t` steps, i.e. some of
/// `x_1, ..., x_t` lies outside `S`. Laziness is fixed at 1/2.
pub fn escape_probability(
    h: &Hamiltonian,
    set: &BTreeSet<Bitstring>,
    start: StartDistribution,
    t: u64,
    trials: usize,
    seed: u64,
) -> Result<Estimate> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    if trials == 0 {
        return Err(Error::Parameter("trial count must be positive".into()));
    }
    for x in set {
        h.check_string(x)?;
        if h.is_bad_index(x.value()) {
            return Err(Error::BadStringInSet(x.to_string()));
        }
    }
    let members: Vec<u64> = set.iter().map(|x| x.value()).collect();
    let sampler = match start {
        StartDistribution::Fixed(x0) => {
            if !set.contains(&x0) {
                return Err(Error::Parameter(format!("start {x0} is not in the set")));
            }
            None
        }
        StartDistribution::Restricted => {
            let g = ConfigGraph::new(h);
            let degrees = set
                .iter()
                .map(|x| g.neighbors(x).map(|nb| nb.degree))
                .collect::<Result<Vec<_>>>()?;
            let top = degrees.iter().max().cloned().unwrap_or_default();
            let weights: Vec<f64> = degrees.iter().map(|d| crate::graph::ratio_f64(&Ratio::new(d.clone(), top.clone()))).collect();
            Some(WeightedIndex::new(weights).map_err(|e| Error::Parameter(e.to_string()))?)
        }
    };
    let lookup: std::collections::HashSet<u64> = members.iter().copied().collect();
    let escapes: u64 = (0..trials as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream_rng(seed, j);
            let mut x = match (&sampler, start) {
                (Some(w), _) => members[w.sample(&mut rng)],
                (None, StartDistribution::Fixed(x0)) => x0.value(),
                (None, StartDistribution::Restricted) => unreachable!(),
            };
            for _ in 0..t {
                x = step_raw(h, x, &mut rng, ESCAPE_LAZINESS).0;
                if !lookup.contains(&x) {
                    return 1;
                }
            }
            0
        })
        .sum();
    Ok(Estimate::from_counts(escapes, trials as u64))
}

/// `1 - (1 - phi/2)^t`.
pub fn escape_bound(conductance: f64, t: u64) -> f64 {
    1.0 - (1.0 - conductance / 2.0).powf(t as f64)
}

/// Visit frequencies of one long walk over the `steps` strings that follow
/// a discarded burn-in of `burn_in` moves.
pub fn visit_frequencies(
    h: &Hamiltonian,
    x0: &Bitstring,
    burn_in: u64,
    steps: u64,
    laziness: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    h.check_string(x0)?;
    check_laziness(laziness)?;
    if steps == 0 {
        return Err(Error::Parameter("step count must be positive".into()));
    }
    let mut counts = vec![0u64; h.dim()];
    let mut rng = stream_rng(seed, 0);
    let mut x = x0.value();
    for _ in 0..burn_in {
        x = step_raw(h, x, &mut rng, laziness).0;
    }
    for _ in 0..steps {
        x = step_raw(h, x, &mut rng, laziness).0;
        counts[x as usize] += 1;
    }
    Ok(counts.into_iter().map(|c| c as f64 / steps as f64).collect())
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
