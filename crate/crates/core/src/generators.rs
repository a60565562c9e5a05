//! Instance families used throughout the tests and the CLI.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::instance::{Caps, Hamiltonian, LocalTerm};
use crate::rng::stream_rng;
use crate::spectral;

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n >= 64 {
        return Err(Error::Parameter(format!("qubit count {n} outside 1..=63")));
    }
    Ok(())
}

/// One `I - |+><+|` term per qubit; the unique groundstate is `|+>^n`.
pub fn hypercube(n: usize) -> Result<Hamiltonian> {
    check_n(n)?;
    let terms = (0..n)
        .map(|q| LocalTerm::new(vec![q], vec![vec![0, 1]]))
        .collect::<Result<Vec<_>>>()?;
    Hamiltonian::new(n, terms)
}

/// Agreement projectors on neighbouring pairs; groundspace spanned by
/// `|0...0>` and `|1...1>`.
pub fn ghz_chain(n: usize) -> Result<Hamiltonian> {
    check_n(n)?;
    if n < 2 {
        return Err(Error::Parameter("ghz chain needs at least 2 qubits".into()));
    }
    let terms = (0..n - 1)
        .map(|q| LocalTerm::new(vec![q, q + 1], vec![vec![0b00], vec![0b11]]))
        .collect::<Result<Vec<_>>>()?;
    Hamiltonian::new(n, terms)
}

fn random_family(n: usize, k: usize, m: usize, seed: u64, allow_uncovered: bool) -> Result<Hamiltonian> {
    check_n(n)?;
    if k == 0 || k > n || k > Caps::default().max_locality {
        return Err(Error::Parameter(format!("locality {k} must lie in 1..=min(n, 6)")));
    }
    if m == 0 {
        return Err(Error::Parameter("need at least one term".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let dim = 1usize << k;
    let mut terms = Vec::with_capacity(m);
    for _ in 0..m {
        let mut qubits = sample(&mut rng, n, k).into_vec();
        qubits.sort_unstable();
        // bin 0 = uncovered; bins 1..=dim are subset labels
        let lo = if allow_uncovered { 0 } else { 1 };
        let mut bins: Vec<Vec<u64>> = vec![Vec::new(); dim + 1];
        for p in 0..dim as u64 {
            bins[rng.random_range(lo..=dim)].push(p);
        }
        let subsets = bins.into_iter().skip(1).filter(|b| !b.is_empty()).collect();
        terms.push(LocalTerm::new(qubits, subsets)?);
    }
    Hamiltonian::new(n, terms)
}

/// Random k-local terms: each local pattern is independently left
/// uncovered or assigned to one of `2^k` subset labels, uniformly.
pub fn random(n: usize, k: usize, m: usize, seed: u64) -> Result<Hamiltonian> {
    random_family(n, k, m, seed, true)
}

/// Like [`random`] but every local pattern is covered, so no string is bad.
pub fn random_covering(n: usize, k: usize, m: usize, seed: u64) -> Result<Hamiltonian> {
    random_family(n, k, m, seed, false)
}

pub const DEFAULT_ATTEMPTS: usize = 1000;

/// Rejection-samples [`random`] until the dense oracle certifies a ground
/// energy of at least `min_energy`.
pub fn frustrated(n: usize, k: usize, m: usize, seed: u64, min_energy: f64) -> Result<Hamiltonian> {
    frustrated_with_budget(n, k, m, seed, min_energy, DEFAULT_ATTEMPTS)
}

pub fn frustrated_with_budget(
    n: usize,
    k: usize,
    m: usize,
    seed: u64,
    min_energy: f64,
    attempts: usize,
) -> Result<Hamiltonian> {
    let caps = Caps::default();
    if n > caps.dense_qubits {
        return Err(Error::Capacity {
            what: "frustrated generator",
            requested: n,
            cap: caps.dense_qubits,
        });
    }
    let mut seeds = stream_rng(seed, 1);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..attempts {
        let h = random(n, k, m, seeds.random())?;
        let e = spectral::min_eigenvalue(&h, &caps)?;
        if e >= min_energy {
            return Ok(h);
        }
        best = best.max(e);
    }
    Err(Error::GeneratorBudget { attempts, best })
}

/// `hypercube(n)` plus one diagonal term on qubits `0..k` that leaves the
/// all-ones pattern uncovered. Frustrated, but only weakly: the defect
/// touches a `2^-k` fraction of strings.
pub fn planted_defect(n: usize, k: usize) -> Result<Hamiltonian> {
    check_n(n)?;
    if k == 0 || k > n || k > Caps::default().max_locality {
        return Err(Error::Parameter(format!("defect locality {k} must lie in 1..=min(n, 6)")));
    }
    let mut terms: Vec<LocalTerm> = (0..n)
        .map(|q| LocalTerm::new(vec![q], vec![vec![0, 1]]))
        .collect::<Result<_>>()?;
    let all_ones = (1u64 << k) - 1;
    let singletons = (0..all_ones).map(|p| vec![p]).collect();
    terms.push(LocalTerm::new((0..k).collect(), singletons)?);
    Hamiltonian::new(n, terms)
}
