//! Low-energy states and weakly expanding sets of good strings.
//!
//! A groundstate of a nearly frustration-free instance is truncated to a
//! "nice" state: no bad strings, every amplitude at least
//! `delta = 1 / sqrt(g |S|)`. Its support `S` has few boundary vertices,
//! and a lazy walk started inside it rarely leaves.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bits::Bitstring;
use crate::error::{Error, Result};
use crate::graph::{ConfigGraph, SelfLoops};
use crate::instance::{normalize, Caps, Hamiltonian};
use crate::rng::derive_seed;
use crate::spectral::{self, Method};
use crate::stats::Estimate;
use crate::walk::{escape_probability, StartDistribution};

/// Entries above `-NEG_TOL` count as non-negative.
pub const NEG_TOL: f64 = 1e-12;
pub const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NiceSet {
    pub set: Vec<Bitstring>,
    /// Dense, supported on `set`, unit norm.
    #[serde(skip)]
    pub psi: Vec<f64>,
    pub delta: f64,
    pub min_amplitude: f64,
    pub frustration: f64,
    /// Members of `set` with a neighbour outside it.
    pub boundary: Vec<Bitstring>,
    pub rounds: usize,
    pub removed_bad: usize,
    pub removed_small: usize,
    /// `1 / (f (1 - m/f - 1/g))`.
    pub bound: f64,
    pub bound_holds: bool,
}

impl NiceSet {
    pub fn set_lookup(&self) -> BTreeSet<Bitstring> {
        self.set.iter().copied().collect()
    }
}

fn check_state(h: &Hamiltonian, psi: &[f64]) -> Result<Vec<f64>> {
    if psi.len() != h.dim() {
        return Err(Error::LengthMismatch {
            expected: h.dim(),
            got: psi.len(),
        });
    }
    if let Some(v) = psi.iter().find(|&&v| v < -NEG_TOL || !v.is_finite()) {
        return Err(Error::Parameter(format!("state has negative or non-finite entry {v}")));
    }
    let norm = psi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(norm));
    }
    Ok(psi.iter().map(|&v| v.max(0.0)).collect())
}

/// Strings of the support of `psi` that are joined to a string outside it.
pub fn boundary_vertices(h: &Hamiltonian, psi: &[f64]) -> Vec<Bitstring> {
    let mut out = Vec::new();
    for x in 0..h.dim() as u64 {
        if psi[x as usize] <= 0.0 {
            continue;
        }
        let leaves = (0..h.m()).any(|i| {
            h.subset_at(i, x)
                .is_some_and(|s| s.iter().any(|&p| psi[h.embed(i, x, p) as usize] <= 0.0))
        });
        if leaves {
            out.push(Bitstring::from_raw(h.n(), x));
        }
    }
    out
}

/// Removes bad strings and amplitudes below `1 / sqrt(g |S|)` until nothing
/// changes, with `|S|` the support of the current candidate state.
pub fn truncate_groundstate(h: &Hamiltonian, psi: &[f64], f: f64, g: f64) -> Result<NiceSet> {
    if !(f > 0.0 && g > 0.0 && f.is_finite() && g.is_finite()) {
        return Err(Error::Parameter(format!("f = {f} and g = {g} must be positive and finite")));
    }
    let denom = 1.0 - h.m() as f64 / f - 1.0 / g;
    if denom <= 0.0 {
        return Err(Error::Parameter(format!("1 - m/f - 1/g = {denom} is not positive")));
    }
    let mut state = check_state(h, psi)?;
    let energy = h.expectation(&state);
    if energy > 1.0 / f + CHECK_TOL {
        return Err(Error::Parameter(format!("state energy {energy} exceeds 1/f = {}", 1.0 / f)));
    }
    let mut rounds = 0;
    let mut removed_bad = 0;
    let mut removed_small = 0;
    let mut delta;
    loop {
        let support = state.iter().filter(|&&v| v > 0.0).count();
        if support == 0 {
            return Err(Error::Degenerate("truncation removed every string".into()));
        }
        delta = 1.0 / (g * support as f64).sqrt();
        let mut changed = false;
        for (x, a) in state.iter_mut().enumerate() {
            if *a <= 0.0 {
                continue;
            }
            if h.is_bad_index(x as u64) {
                removed_bad += 1;
            } else if *a < delta {
                removed_small += 1;
            } else {
                continue;
            }
            *a = 0.0;
            changed = true;
        }
        if !changed {
            break;
        }
        rounds += 1;
        if normalize(&mut state) == 0.0 {
            return Err(Error::Degenerate("truncation removed every string".into()));
        }
    }
    let set: Vec<Bitstring> = (0..h.dim())
        .filter(|&x| state[x] > 0.0)
        .map(|x| Bitstring::from_raw(h.n(), x as u64))
        .collect();
    let min_amplitude = set.iter().map(|x| state[x.index()]).fold(f64::INFINITY, f64::min);
    let frustration = h.expectation(&state).clamp(0.0, 1.0);
    let bound = 1.0 / (f * denom);
    Ok(NiceSet {
        boundary: boundary_vertices(h, &state),
        set,
        psi: state,
        delta,
        min_amplitude,
        frustration,
        rounds,
        removed_bad,
        removed_small,
        bound,
        bound_holds: frustration <= bound + CHECK_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub boundary: Vec<Bitstring>,
}

/// Compares `<psi|H|psi>` with `(1 / (2^k m)) sum_{x in N} psi_x^2`.
pub fn boundary_energy_check(h: &Hamiltonian, psi: &[f64]) -> Result<BoundaryCheck> {
    let state = check_state(h, psi)?;
    let boundary = boundary_vertices(h, &state);
    let lhs = h.expectation(&state);
    let weight: f64 = boundary.iter().map(|x| state[x.index()].powi(2)).sum();
    let rhs = weight / ((1u64 << h.k()) as f64 * h.m() as f64);
    Ok(BoundaryCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - CHECK_TOL,
        boundary,
    })
}

/// A random non-negative unit vector; each entry is zeroed with probability
/// `sparsity`, so supports with non-trivial boundaries are common.
pub fn sample_nonneg_state<R: Rng + ?Sized>(dim: usize, sparsity: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim)
            .map(|_| {
                if rng.random::<f64>() < sparsity {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        if normalize(&mut v) > 0.0 {
            return v;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakSet {
    pub nice: NiceSet,
    pub ground_energy: f64,
    pub epsilon: f64,
    /// `m^2 2^(2k+1) (2^k)! sqrt(epsilon)`.
    pub epsilon_prime: f64,
    /// Set when `epsilon_prime >= 1`: the bound carries no information at
    /// this size.
    pub vacuous: bool,
    #[serde(serialize_with = "ser_big")]
    pub boundary_edges: BigUint,
    pub boundary_ratio: f64,
    pub conductance: f64,
}

fn ser_big<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

pub fn epsilon_prime(h: &Hamiltonian, epsilon: f64) -> f64 {
    let k = h.k();
    let fact: f64 = (1..=(1u64 << k)).map(|j| j as f64).product();
    let m = h.m() as f64;
    m * m * 2f64.powi(2 * k as i32 + 1) * fact * epsilon.sqrt()
}

/// Truncates the oracle groundstate with `f = 1/epsilon`, `g = 1/sqrt(epsilon)`
/// and checks the edge boundary of its support against `epsilon' |S|`.
pub fn find_weak_set(h: &Hamiltonian, epsilon: f64, caps: &Caps) -> Result<WeakSet> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Parameter(format!("epsilon {epsilon} outside (0, 1)")));
    }
    let ground = spectral::ground_energy(h, Method::Dense, caps)?;
    if ground.ground_energy > epsilon + CHECK_TOL {
        return Err(Error::Parameter(format!(
            "ground energy {} exceeds epsilon {epsilon}",
            ground.ground_energy
        )));
    }
    let nice = truncate_groundstate(h, &ground.groundstate, 1.0 / epsilon, 1.0 / epsilon.sqrt())?;
    let set = nice.set_lookup();
    let cut = ConfigGraph::new(h).cut_stats(&set, SelfLoops::Include)?;
    let size = set.len() as f64;
    let boundary_ratio = cut.boundary.to_f64().unwrap_or(f64::INFINITY) / size;
    let eps_prime = epsilon_prime(h, epsilon);
    if boundary_ratio >= eps_prime {
        return Err(Error::LemmaViolation(format!(
            "boundary {} is not below epsilon' |S| = {} * {}",
            cut.boundary, eps_prime, size
        )));
    }
    Ok(WeakSet {
        ground_energy: ground.ground_energy,
        epsilon,
        epsilon_prime: eps_prime,
        vacuous: eps_prime >= 1.0,
        boundary_ratio,
        conductance: cut.conductance_f64(),
        boundary_edges: cut.boundary,
        nice,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodStart {
    pub start: Bitstring,
    pub escape: Estimate,
    /// Stationary-weighted mean of the candidate estimates.
    pub mean_escape: f64,
    pub candidates: usize,
}

/// Estimates the escape probability of a `steps`-step lazy walk from each
/// candidate in `set` (all of it, or a stationary sample of
/// `max_candidates` strings) and returns the best one.
pub fn find_good_start(
    h: &Hamiltonian,
    set: &BTreeSet<Bitstring>,
    steps: u64,
    trials: usize,
    seed: u64,
    max_candidates: usize,
) -> Result<GoodStart> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    if max_candidates == 0 {
        return Err(Error::Parameter("need at least one candidate".into()));
    }
    let members: Vec<Bitstring> = set.iter().copied().collect();
    let g = ConfigGraph::new(h);
    let candidates: Vec<Bitstring> = if members.len() <= max_candidates {
        members
    } else {
        // good strings all have degree M m, so the restricted stationary
        // distribution is uniform
        let mut rng = crate::rng::stream_rng(seed, u64::MAX);
        rand::seq::index::sample(&mut rng, members.len(), max_candidates)
            .into_iter()
            .map(|j| members[j])
            .collect()
    };
    let degrees = candidates
        .iter()
        .map(|x| g.neighbors(x).map(|nb| nb.degree.to_f64().unwrap_or(f64::INFINITY)))
        .collect::<Result<Vec<_>>>()?;
    let estimates = candidates
        .par_iter()
        .enumerate()
        .map(|(j, x)| {
            escape_probability(h, set, StartDistribution::Fixed(*x), steps, trials, derive_seed(seed, j as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = degrees.iter().sum();
    let mean_escape = estimates.iter().zip(&degrees).map(|(e, d)| e.mean * d).sum::<f64>() / total;
    let (best, est) = estimates
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.mean.total_cmp(&b.1.mean).then(a.0.cmp(&b.0)))
        .expect("non-empty");
    if est.mean > mean_escape + CHECK_TOL {
        return Err(Error::LemmaViolation(format!(
            "minimum escape {} exceeds the weighted mean {mean_escape}",
            est.mean
        )));
    }
    Ok(GoodStart {
        start: candidates[best],
        escape: *est,
        mean_escape,
        candidates: candidates.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::rng::stream_rng;

    fn bs(s: &str) -> Bitstring {
        s.parse().unwrap()
    }

    #[test]
    fn hypercube_truncation_keeps_everything() {
        let h = generators::hypercube(4).unwrap();
        let psi = vec![0.25; 16];
        for (f, g) in [(10.0, 10.0), (1e6, 1e3), (100.0, 2.0)] {
            let r = truncate_groundstate(&h, &psi, f, g).unwrap();
            assert_eq!(r.set.len(), 16);
            assert!(r.frustration < 1e-12);
            assert_eq!(r.rounds, 0);
            assert!(r.boundary.is_empty());
        }
    }

    #[test]
    fn ghz_truncation() {
        let h = generators::ghz_chain(4).unwrap();
        let mut psi = vec![0.0; 16];
        psi[0] = 0.5f64.sqrt();
        psi[15] = 0.5f64.sqrt();
        let r = truncate_groundstate(&h, &psi, 100.0, 100.0).unwrap();
        assert_eq!(r.set, vec![bs("0000"), bs("1111")]);
        assert!(r.frustration < 1e-12);
        assert!(r.bound_holds);
    }

    #[test]
    fn truncation_removes_bad_and_small() {
        let h = generators::ghz_chain(2).unwrap();
        // "01" is bad; "11" falls below delta
        let mut psi = vec![0.9, 0.3, 0.0, 0.05];
        normalize(&mut psi);
        let r = truncate_groundstate(&h, &psi, 2.0, 4.0).unwrap();
        assert_eq!(r.set, vec![bs("00")]);
        assert_eq!((r.removed_bad, r.removed_small), (1, 1));
        assert!(r.min_amplitude >= r.delta - 1e-12);
    }

    #[test]
    fn truncation_errors() {
        let h = generators::ghz_chain(2).unwrap();
        let bad_only = vec![0.0, 1.0, 0.0, 0.0];
        assert!(matches!(
            truncate_groundstate(&h, &bad_only, 1.0, 10.0),
            Err(Error::Parameter(_)) | Err(Error::Degenerate(_))
        ));
        let ok = vec![1.0, 0.0, 0.0, 0.0];
        assert!(matches!(truncate_groundstate(&h, &ok, 0.5, 10.0), Err(Error::Parameter(_))));
        assert!(matches!(truncate_groundstate(&h, &[1.0, 1.0, 0.0, 0.0], 10.0, 10.0), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn inconsistent_parameters_rejected() {
        // every string of a one-qubit instance with complementary terms is bad
        let terms = vec![
            crate::LocalTerm::new(vec![0], vec![vec![0]]).unwrap(),
            crate::LocalTerm::new(vec![0], vec![vec![1]]).unwrap(),
        ];
        let h = Hamiltonian::new(1, terms).unwrap();
        let psi = vec![0.5f64.sqrt(); 2];
        // energy 1/2, so f must stay below 2; then m/f > 1
        assert!(truncate_groundstate(&h, &psi, 1.9, 10.0).is_err());
    }

    #[test]
    fn boundary_examples() {
        let h = generators::hypercube(3).unwrap();
        let full = vec![1.0 / 8f64.sqrt(); 8];
        let c = boundary_energy_check(&h, &full).unwrap();
        assert!(c.boundary.is_empty() && c.rhs == 0.0 && c.holds);

        let ghz = generators::ghz_chain(2).unwrap();
        let c = boundary_energy_check(&ghz, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(c.boundary.is_empty());
        assert!(c.lhs.abs() < 1e-12);

        // |000> alone: every qubit term sees a missing partner
        let mut e0 = vec![0.0; 8];
        e0[0] = 1.0;
        let c = boundary_energy_check(&h, &e0).unwrap();
        assert_eq!(c.boundary, vec![bs("000")]);
        assert!((c.lhs - 0.5).abs() < 1e-12);
        assert!((c.rhs - 1.0 / 6.0).abs() < 1e-12);
        assert!(c.holds);
    }

    #[test]
    fn boundary_inequality_on_random_states() {
        let mut rng = stream_rng(17, 0);
        for seed in 0..10 {
            let h = generators::random(6, 2, 6, seed).unwrap();
            for _ in 0..100 {
                let sparsity = rng.random::<f64>() * 0.8;
                let psi = sample_nonneg_state(64, sparsity, &mut rng);
                assert!(boundary_energy_check(&h, &psi).unwrap().holds);
            }
        }
    }

    #[test]
    fn weak_set_frustration_free() {
        let caps = Caps::default();
        let h = generators::hypercube(4).unwrap();
        let w = find_weak_set(&h, 1e-12, &caps).unwrap();
        assert_eq!(w.nice.set.len(), 16);
        assert_eq!(w.conductance, 0.0);
        assert_eq!(w.boundary_edges, BigUint::default());

        let ghz = generators::ghz_chain(4).unwrap();
        let w = find_weak_set(&ghz, 1e-12, &caps).unwrap();
        assert_eq!(w.nice.set, vec![bs("0000"), bs("1111")]);
        assert!(!w.vacuous);
    }

    #[test]
    fn weak_set_on_planted_defect() {
        let caps = Caps::default();
        let h = generators::planted_defect(6, 3).unwrap();
        let e = spectral::min_eigenvalue(&h, &caps).unwrap();
        let w = find_weak_set(&h, e, &caps).unwrap();
        assert!(w.vacuous);
        assert!(w.boundary_ratio < w.epsilon_prime);
        assert!(w.nice.set.iter().all(|x| !h.is_bad_index(x.value())));
        assert!(w.nice.min_amplitude >= w.nice.delta - 1e-12);
        assert!(find_weak_set(&h, e / 10.0, &caps).is_err());
    }

    #[test]
    fn delta_decreases_in_g() {
        let h = generators::hypercube(3).unwrap();
        let psi = vec![1.0 / 8f64.sqrt(); 8];
        let d: Vec<f64> = [2.0, 4.0, 8.0, 100.0]
            .iter()
            .map(|&g| truncate_groundstate(&h, &psi, 100.0, g).unwrap().delta)
            .collect();
        assert!(d.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn good_start_examples() {
        let ghz = generators::ghz_chain(4).unwrap();
        let s: BTreeSet<Bitstring> = [bs("0000")].into();
        let g = find_good_start(&ghz, &s, 100, 200, 1, 64).unwrap();
        assert_eq!(g.start, bs("0000"));
        assert_eq!(g.escape.mean, 0.0);

        let cube = generators::hypercube(4).unwrap();
        let all: BTreeSet<Bitstring> = Bitstring::all(4).collect();
        let g = find_good_start(&cube, &all, 50, 100, 1, 4).unwrap();
        assert_eq!(g.escape.mean, 0.0);
        assert_eq!(g.candidates, 4);
        assert!(find_good_start(&cube, &BTreeSet::new(), 5, 5, 0, 1).is_err());
    }
}
