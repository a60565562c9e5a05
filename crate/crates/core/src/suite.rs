//! The acceptance battery: ten checks over generated and bundled instances.
//!
//! Every check is deterministic given the seed. `quick` shrinks trial
//! counts and instance sizes so the whole battery runs in seconds.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use crate::bits::Bitstring;
use crate::bundled;
use crate::compile::{
    acceptance_probability, check_nonneg_floor, history_state, kitaev_compile, ma_to_stoqma, optimal_acceptance,
    Gate, Registers, ReversibleCircuit, StoqVerifier,
};
use crate::error::{Error, Result};
use crate::expansion::{boundary_energy_check, sample_nonneg_state};
use crate::generators;
use crate::graph::{ConfigGraph, NeighborSet, SelfLoops};
use crate::instance::{hamiltonian_matrix, term_matrix, Caps, Hamiltonian};
use crate::rng::{derive_seed, stream_rng};
use crate::spectral::{self, Method};
use crate::walk::{
    calibrate_steps, escape_bound, escape_probability, exact_rejection_probability, rejection_probability,
    total_variation, visit_frequencies, CalibrationParams, StartDistribution, WalkParams,
};

pub const DEFAULT_SEED: u64 = 2026;
pub const CRITERIA: u8 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteOptions {
    pub quick: bool,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            quick: false,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    #[serde(skip)]
    pub elapsed: Duration,
}

struct Scale {
    c1_sizes: Vec<usize>,
    c1_trials: usize,
    c1_steps: u64,
    c2_instances: usize,
    c2_starts: usize,
    c2_trials: usize,
    c3_instances: usize,
    c3_states: usize,
    c4_triples: usize,
    c4_trials: usize,
    c5_instances: usize,
    c5_trials: usize,
    c6_max_n: usize,
    c6_steps: u64,
    c7_corpus: usize,
    c8_verifiers: usize,
    c8_witnesses: usize,
}

impl Scale {
    fn new(quick: bool) -> Self {
        if quick {
            Scale {
                c1_sizes: vec![4],
                c1_trials: 200,
                c1_steps: 1000,
                c2_instances: 3,
                c2_starts: 5,
                c2_trials: 200,
                c3_instances: 4,
                c3_states: 50,
                c4_triples: 10,
                c4_trials: 2000,
                c5_instances: 3,
                c5_trials: 2000,
                c6_max_n: 4,
                c6_steps: 200_000,
                c7_corpus: 15,
                c8_verifiers: 100,
                c8_witnesses: 5,
            }
        } else {
            Scale {
                c1_sizes: vec![4, 6, 8],
                c1_trials: 1000,
                c1_steps: 10_000,
                c2_instances: 20,
                c2_starts: 20,
                c2_trials: 1000,
                c3_instances: 20,
                c3_states: 50,
                c4_triples: 50,
                c4_trials: 10_000,
                c5_instances: 10,
                c5_trials: 4000,
                c6_max_n: 6,
                c6_steps: 1_000_000,
                c7_corpus: 60,
                c8_verifiers: 1000,
                c8_witnesses: 10,
            }
        }
    }
}

pub fn criterion_name(id: u8) -> &'static str {
    match id {
        1 => "frustration-free completeness",
        2 => "soundness calibration",
        3 => "boundary energy inequality",
        4 => "escaping bound",
        5 => "exact rejection oracle",
        6 => "stationary distribution",
        7 => "compiler correctness",
        8 => "non-negative witness floor",
        9 => "MA embedding",
        10 => "structural invariants",
        _ => "unknown",
    }
}

pub fn run_criterion(id: u8, opts: &SuiteOptions) -> CriterionResult {
    let scale = Scale::new(opts.quick);
    let seed = derive_seed(opts.seed, id as u64);
    let start = Instant::now();
    let outcome = match id {
        1 => completeness(&scale, seed),
        2 => soundness(&scale, seed),
        3 => boundary_inequality(&scale, seed),
        4 => escaping(&scale, seed),
        5 => exact_oracle(&scale, seed),
        6 => stationary(&scale, seed),
        7 => compiler(&scale, seed),
        8 => nonneg_floor(&scale, seed),
        9 => ma_embedding(),
        10 => structural(),
        _ => Err(Error::Parameter(format!("no criterion {id}"))),
    };
    let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult {
        id,
        name: criterion_name(id),
        pass,
        detail,
        elapsed: start.elapsed(),
    }
}

pub fn run_suite(opts: &SuiteOptions) -> Vec<CriterionResult> {
    (1..=CRITERIA).map(|id| run_criterion(id, opts)).collect()
}

pub fn summary_csv(results: &[CriterionResult]) -> String {
    let mut out = String::from("id,name,pass,detail\n");
    for r in results {
        out.push_str(&format!("{},{},{},\"{}\"\n", r.id, r.name, r.pass, r.detail.replace('"', "'")));
    }
    out
}

type Check = Result<(bool, String)>;

/// String with the largest oracle groundstate amplitude.
fn prover_start(h: &Hamiltonian, caps: &Caps) -> Result<Bitstring> {
    let s = spectral::ground_energy(h, Method::Dense, caps)?;
    let best = (0..h.dim())
        .max_by(|&a, &b| s.groundstate[a].total_cmp(&s.groundstate[b]).then(b.cmp(&a)))
        .expect("non-empty");
    Bitstring::new(h.n(), best as u64)
}

fn completeness(scale: &Scale, seed: u64) -> Check {
    let caps = Caps::default();
    let mut worst = 0u64;
    let mut runs = 0;
    for &n in &scale.c1_sizes {
        for h in [generators::hypercube(n)?, generators::ghz_chain(n)?] {
            let x0 = prover_start(&h, &caps)?;
            let params = WalkParams {
                steps: scale.c1_steps,
                laziness: 0.0,
                trials: scale.c1_trials,
                seed: derive_seed(seed, runs),
            };
            let e = rejection_probability(&h, &x0, &params)?;
            worst = worst.max(e.successes);
            runs += 1;
        }
    }
    Ok((
        worst == 0,
        format!(
            "{runs} instances, {} trials of T = {}: max rejections {worst}",
            scale.c1_trials, scale.c1_steps
        ),
    ))
}

/// Oracle-certified no-instances with ground energy at least 0.05.
pub fn soundness_family(count: usize, seed: u64) -> Result<Vec<Hamiltonian>> {
    (0..count)
        .map(|i| {
            let n = 6 + i % 5;
            generators::frustrated(n, 2, n + 2, derive_seed(seed, i as u64), 0.05)
        })
        .collect()
}

fn soundness(scale: &Scale, seed: u64) -> Check {
    let family = soundness_family(scale.c2_instances, seed)?;
    let cp = CalibrationParams {
        target: 0.5,
        max_steps: 10_000,
        starts_per_instance: scale.c2_starts,
        trials: scale.c2_trials,
        laziness: 0.0,
        seed: derive_seed(seed, 99),
    };
    let cal = calibrate_steps(&family, &cp)?;
    let min_mean = cal.estimates.iter().map(|e| e.estimate.mean).fold(f64::INFINITY, f64::min);
    let min_low = cal.estimates.iter().map(|e| e.estimate.ci_low).fold(f64::INFINITY, f64::min);
    let pass = cal.steps <= 10_000 && min_mean >= 0.5 && min_low > 0.4;
    Ok((
        pass,
        format!(
            "{} instances x {} starts: T = {}, min rejection {min_mean:.3}, min CI low {min_low:.3}",
            family.len(),
            scale.c2_starts,
            cal.steps
        ),
    ))
}

fn boundary_inequality(scale: &Scale, seed: u64) -> Check {
    let caps = Caps::default();
    let mut rng = stream_rng(seed, 0);
    let mut total = 0;
    let mut holds = 0;
    let mut worst_slack = f64::INFINITY;
    for i in 0..scale.c3_instances {
        let n = 4 + i % 5;
        let k = 1 + i % 3;
        let m = rng.random_range(2..=8);
        let h = generators::random(n, k, m, derive_seed(seed, i as u64))?;
        let mat = hamiltonian_matrix(&h, &caps)?;
        for _ in 0..scale.c3_states {
            let sparsity = rng.random::<f64>() * 0.8;
            let psi = sample_nonneg_state(h.dim(), sparsity, &mut rng);
            let c = boundary_energy_check(&h, &psi)?;
            let v = nalgebra::DVector::from_column_slice(&psi);
            let dense_lhs = v.dot(&(&mat * &v));
            total += 1;
            if dense_lhs >= c.rhs - 1e-9 && (dense_lhs - c.lhs).abs() < 1e-9 {
                holds += 1;
            }
            worst_slack = worst_slack.min(dense_lhs - c.rhs);
        }
    }
    Ok((
        holds == total,
        format!("{holds}/{total} states satisfy the inequality, min slack {worst_slack:.3e}"),
    ))
}

/// Instance families with every string good.
fn good_instance(j: usize, seed: u64) -> Result<Hamiltonian> {
    match j % 4 {
        0 => generators::hypercube(3 + (j / 4) % 4),
        1 => generators::random_covering(5, 2, 4, derive_seed(seed, j as u64)),
        2 => generators::random_covering(6, 3, 5, derive_seed(seed, j as u64)),
        _ => generators::hypercube(6),
    }
}

fn escaping(scale: &Scale, seed: u64) -> Check {
    let ts = [1u64, 2, 4, 8, 16, 32];
    let mut rng = stream_rng(seed, 0);
    let mut ok = 0;
    let mut worst = f64::NEG_INFINITY;
    for j in 0..scale.c4_triples {
        let h = good_instance(j, seed)?;
        let n = h.n();
        let set: BTreeSet<Bitstring> = match j % 3 {
            // Hamming ball around a random centre
            0 => {
                let c = rng.random_range(0..h.dim() as u64);
                let r = rng.random_range(0..=n as u32 / 2);
                (0..h.dim() as u64)
                    .filter(|x| (x ^ c).count_ones() <= r)
                    .map(|x| Bitstring::new(n, x))
                    .collect::<Result<_>>()?
            }
            // random subset
            1 => {
                let size = rng.random_range(1..=h.dim() / 2);
                sample(&mut rng, h.dim(), size)
                    .into_iter()
                    .map(|x| Bitstring::new(n, x as u64))
                    .collect::<Result<_>>()?
            }
            // subcube fixing a prefix
            _ => {
                let fixed = rng.random_range(1..=n);
                let prefix = rng.random_range(0..1u64 << fixed);
                (0..h.dim() as u64)
                    .filter(|x| x >> (n - fixed) == prefix)
                    .map(|x| Bitstring::new(n, x))
                    .collect::<Result<_>>()?
            }
        };
        let t = ts[j % ts.len()];
        let phi = ConfigGraph::new(&h).cut_stats(&set, SelfLoops::Include)?.conductance_f64();
        let e = escape_probability(
            &h,
            &set,
            StartDistribution::Restricted,
            t,
            scale.c4_trials,
            derive_seed(seed, 1000 + j as u64),
        )?;
        let bound = escape_bound(phi, t);
        // standard error at the bound itself; the plug-in value vanishes
        // when every walk escapes, which a tight bound makes likely
        let se = (bound * (1.0 - bound) / e.trials as f64).sqrt();
        worst = worst.max(e.mean - bound - 3.0 * se);
        if e.mean <= bound + 3.0 * se {
            ok += 1;
        }
    }
    Ok((
        ok == scale.c4_triples,
        format!(
            "{ok}/{} triples within bound + 3 SE, max excess {worst:.4}",
            scale.c4_triples
        ),
    ))
}

fn exact_oracle(scale: &Scale, seed: u64) -> Check {
    let mut rng = stream_rng(seed, 0);
    let mut ok = 0;
    let mut lines = Vec::new();
    for j in 0..scale.c5_instances {
        let n = 5 + j % 4;
        let h = generators::frustrated(n, 2, n + 1, derive_seed(seed, j as u64), 0.02)?;
        let good: Vec<u64> = (0..h.dim() as u64).filter(|&x| !h.is_bad_index(x)).collect();
        let x0 = if good.is_empty() {
            Bitstring::new(n, 0)?
        } else {
            Bitstring::new(n, good[rng.random_range(0..good.len())])?
        };
        let laziness = if j % 2 == 0 { 0.0 } else { 0.5 };
        // pick the step count whose exact rejection is closest to 1/2
        let mut best = (f64::INFINITY, 1u64, 0.0);
        for t in 1..=64u64 {
            let p = exact_rejection_probability(&h, &x0, t, laziness, 10)?;
            if (p - 0.5).abs() < best.0 {
                best = ((p - 0.5).abs(), t, p);
            }
        }
        let (_, t, exact) = best;
        let params = WalkParams {
            steps: t,
            laziness,
            trials: scale.c5_trials,
            seed: derive_seed(seed, 500 + j as u64),
        };
        let e = rejection_probability(&h, &x0, &params)?;
        if e.contains(exact) {
            ok += 1;
        }
        lines.push(format!("T={t} exact {exact:.4} mc {:.4}", e.mean));
    }
    Ok((
        ok == scale.c5_instances,
        format!("{ok}/{} exact values inside the 95% CI ({})", scale.c5_instances, lines.join("; ")),
    ))
}

/// Bad-free instances whose configuration graph is connected.
fn connected_good_instances(max_n: usize, seed: u64) -> Result<Vec<Hamiltonian>> {
    let mut out = vec![generators::hypercube(max_n.min(4))?];
    if max_n >= 6 {
        out.push(generators::hypercube(6)?);
    }
    for (n, k, m) in [(4usize, 2usize, 3usize), (max_n, 3, max_n - 1)] {
        for attempt in 0..100u64 {
            let h = generators::random_covering(n, k, m, derive_seed(seed, attempt))?;
            let comp = ConfigGraph::new(&h).connected_component(&Bitstring::new(n, 0)?, h.dim())?;
            if comp.members.len() == h.dim() {
                out.push(h);
                break;
            }
        }
    }
    Ok(out)
}

fn stationary(scale: &Scale, seed: u64) -> Check {
    let instances = connected_good_instances(scale.c6_max_n, seed)?;
    let mut worst: f64 = 0.0;
    for (j, h) in instances.iter().enumerate() {
        let g = ConfigGraph::new(h);
        let degrees: Vec<BigUint> = Bitstring::all(h.n())
            .map(|x| g.neighbors(&x).map(|nb| nb.degree))
            .collect::<Result<_>>()?;
        let total: BigUint = degrees.iter().sum();
        let pi: Vec<f64> = degrees
            .iter()
            .map(|d| crate::graph::ratio_f64(&num_rational::Ratio::new(d.clone(), total.clone())))
            .collect();
        let freq = visit_frequencies(h, &Bitstring::new(h.n(), 0)?, 1000, scale.c6_steps, 0.5, derive_seed(seed, j as u64))?;
        worst = worst.max(total_variation(&freq, &pi));
    }
    Ok((
        worst < 0.02,
        format!(
            "{} connected instances, {} steps: max total variation {worst:.4}",
            instances.len(),
            scale.c6_steps
        ),
    ))
}

/// A random verifier with at most `max_wires` wires and `max_gates` gates.
pub fn random_verifier<R: Rng + ?Sized>(rng: &mut R, max_wires: usize, min_gates: usize, max_gates: usize) -> Result<StoqVerifier> {
    let wires = rng.random_range(1..=max_wires);
    let mut cuts = [rng.random_range(0..=wires), rng.random_range(0..=wires), rng.random_range(0..=wires)];
    cuts.sort_unstable();
    let regs = Registers {
        n: cuts[0],
        n_w: cuts[1] - cuts[0],
        n_0: cuts[2] - cuts[1],
        n_plus: wires - cuts[2],
    };
    let count = rng.random_range(min_gates..=max_gates);
    let mut gates = Vec::with_capacity(count);
    for _ in 0..count {
        let arity = rng.random_range(1..=wires.min(3));
        let w = sample(rng, wires, arity).into_vec();
        gates.push(match arity {
            1 => Gate::Not(w[0]),
            2 => Gate::Cnot(w[0], w[1]),
            _ => Gate::Toffoli(w[0], w[1], w[2]),
        });
    }
    StoqVerifier::new(regs, ReversibleCircuit::new(wires, gates)?)
}

/// Verifiers whose wire 0 ends up holding an untouched `|+>` ancilla, so
/// every witness is accepted with certainty.
fn swap_plus_verifier<R: Rng + ?Sized>(rng: &mut R, wires: usize, extra: usize) -> Result<StoqVerifier> {
    let regs = Registers {
        n: 0,
        n_w: wires - 2,
        n_0: 1,
        n_plus: 1,
    };
    let plus = wires - 1;
    let mut gates = Vec::new();
    for _ in 0..extra {
        // scramble wires other than the |+> ancilla
        let w = sample(rng, plus, 2.min(plus)).into_vec();
        gates.push(if w.len() == 2 { Gate::Cnot(w[0], w[1]) } else { Gate::Not(w[0]) });
    }
    gates.extend([Gate::Cnot(0, plus), Gate::Cnot(plus, 0), Gate::Cnot(0, plus)]);
    StoqVerifier::new(regs, ReversibleCircuit::new(wires, gates)?)
}

/// The verifier corpus used by the compiler check: random circuits plus
/// designed ones with perfect completeness. Compiled sizes stay at most
/// 10 qubits.
pub fn verifier_corpus(count: usize, seed: u64) -> Result<Vec<(StoqVerifier, Bitstring)>> {
    let mut rng = stream_rng(seed, 0);
    let mut out = Vec::new();
    let ma = |gates: Vec<Gate>, regs: Registers, output: usize| -> Result<StoqVerifier> {
        ma_to_stoqma(&ReversibleCircuit::new(regs.total(), gates)?, regs, output)
    };
    let one = Registers { n: 0, n_w: 0, n_0: 1, n_plus: 0 };
    out.push(ma(vec![Gate::Not(0)], one, 0)?);
    out.push(ma(vec![], one, 0)?);
    out.push(ma(vec![], Registers { n: 0, n_w: 1, n_0: 0, n_plus: 0 }, 0)?);
    out.push(ma(vec![], Registers { n: 0, n_w: 0, n_0: 0, n_plus: 1 }, 0)?);
    out.push(StoqVerifier::new(
        Registers { n: 0, n_w: 0, n_0: 0, n_plus: 1 },
        ReversibleCircuit::new(1, vec![Gate::Not(0), Gate::Not(0)])?,
    )?);
    while out.len() < count {
        let v = if out.len() % 3 == 0 {
            let wires = rng.random_range(3..=5);
            let extra = rng.random_range(0..=(7 - wires).min(2));
            swap_plus_verifier(&mut rng, wires, extra)?
        } else {
            let v = random_verifier(&mut rng, 5, 1, 8)?;
            if v.wires() + v.circuit().len() > 10 {
                continue;
            }
            v
        };
        out.push(v);
    }
    out.into_iter()
        .map(|v| {
            let n = v.registers().n;
            let x = Bitstring::new(n, rng.random_range(0..1u64 << n))?;
            Ok((v, x))
        })
        .collect()
}

fn compiler(scale: &Scale, seed: u64) -> Check {
    let caps = Caps::default();
    let corpus = verifier_corpus(scale.c7_corpus, seed)?;
    let mut rng = stream_rng(seed, 1);
    let (mut valid, mut iff, mut history) = (0, 0, 0);
    let mut perfect = 0;
    for (v, x) in &corpus {
        let h = kitaev_compile(v, x, &caps)?;
        if h.validate(&caps).is_valid() {
            valid += 1;
        }
        let lambda = spectral::min_eigenvalue(&h, &caps)?;
        let opt = optimal_acceptance(v, x, &caps)?;
        let accepts = (opt.value - 1.0).abs() <= 1e-9;
        perfect += accepts as usize;
        if accepts == (lambda.abs() <= 1e-9) {
            iff += 1;
        }
        let dw = 1usize << v.registers().n_w;
        let random_w = sample_nonneg_state(dw, 0.3, &mut rng);
        let mut signed_w: Vec<f64> = (0..dw).map(|_| rng.random::<f64>() - 0.5).collect();
        let norm = signed_w.iter().map(|a| a * a).sum::<f64>().sqrt();
        signed_w.iter_mut().for_each(|a| *a /= norm);
        let mut ok = true;
        for w in [&opt.witness, &random_w, &signed_w] {
            let acc = acceptance_probability(v, x, w, &caps)?;
            let eta = history_state(v, x, w, &caps)?;
            let f = spectral::frustration(&h, &eta)?;
            ok &= f <= (1.0 - acc) / h.m() as f64 + 1e-9;
        }
        history += ok as usize;
    }
    let total = corpus.len();
    Ok((
        valid == total && iff == total && history == total,
        format!(
            "{total} verifiers ({perfect} with perfect completeness): valid {valid}, zero-energy iff accept {iff}, history bound {history}"
        ),
    ))
}

fn nonneg_floor(scale: &Scale, seed: u64) -> Check {
    let caps = Caps::default();
    let mut rng = stream_rng(seed, 0);
    let mut min = f64::INFINITY;
    let mut pairs = 0;
    for j in 0..scale.c8_verifiers {
        let v = random_verifier(&mut rng, 10, 0, 12)?;
        let n = v.registers().n;
        let x = Bitstring::new(n, rng.random_range(0..1u64 << n))?;
        let r = check_nonneg_floor(&v, &x, scale.c8_witnesses, derive_seed(seed, j as u64), &caps)?;
        min = min.min(r.min_acceptance);
        pairs += r.trials;
    }
    Ok((
        min >= 0.5 - 1e-9,
        format!("{pairs} verifier-witness pairs: min acceptance {min:.6}"),
    ))
}

fn ma_embedding() -> Check {
    let caps = Caps::default();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    // output wire, gates forcing output 1, gates leaving it 0
    let layouts = [
        (Registers { n: 0, n_w: 0, n_0: 1, n_plus: 0 }, 0, vec![Gate::Not(0)], vec![]),
        (
            Registers { n: 2, n_w: 1, n_0: 1, n_plus: 1 },
            3,
            vec![Gate::Cnot(0, 2), Gate::Not(3), Gate::Toffoli(1, 4, 2)],
            vec![Gate::Cnot(0, 2), Gate::Toffoli(1, 4, 2)],
        ),
        (
            Registers { n: 1, n_w: 2, n_0: 2, n_plus: 0 },
            4,
            vec![Gate::Cnot(1, 3), Gate::Cnot(3, 4), Gate::Cnot(1, 3), Gate::Cnot(1, 4), Gate::Not(4)],
            vec![Gate::Cnot(1, 3), Gate::Cnot(3, 4), Gate::Cnot(1, 3), Gate::Cnot(1, 4)],
        ),
    ];
    for (regs, output, yes_gates, no_gates) in layouts {
        let wires = regs.total();
        let yes = ma_to_stoqma(&ReversibleCircuit::new(wires, yes_gates)?, regs, output)?;
        let no = ma_to_stoqma(&ReversibleCircuit::new(wires, no_gates)?, regs, output)?;
        let dw = 1usize << regs.n_w;
        let mut witnesses: Vec<Vec<f64>> = (0..dw)
            .map(|a| (0..dw).map(|b| (a == b) as u8 as f64).collect())
            .collect();
        witnesses.push(vec![1.0 / (dw as f64).sqrt(); dw]);
        for input in 0..1u64 << regs.n {
            let x = Bitstring::new(regs.n, input)?;
            for w in &witnesses {
                worst = worst.max((acceptance_probability(&yes, &x, w, &caps)? - 1.0).abs());
                worst = worst.max((acceptance_probability(&no, &x, w, &caps)? - 0.5).abs());
                cases += 2;
            }
        }
    }
    Ok((
        worst <= 1e-12,
        format!("{cases} runs: max deviation from 1 and 1/2 is {worst:.2e}"),
    ))
}

/// Independent badness test: some term's projector has a zero diagonal
/// entry at the local pattern of `x`.
fn bad_by_matrix(h: &Hamiltonian, x: &Bitstring, mats: &[nalgebra::DMatrix<f64>]) -> bool {
    h.terms().iter().zip(mats).any(|(t, hm)| {
        let p = t.qubits().iter().fold(0usize, |acc, &q| acc << 1 | x.bit(q) as usize);
        (1.0 - hm[(p, p)]).abs() < 1e-12
    })
}

fn structural() -> Check {
    let caps = Caps::default();
    let mut strings = 0;
    let mut failures = Vec::new();
    let mut checked = 0;
    for (name, h) in bundled::instances()? {
        if h.n() > 8 {
            continue;
        }
        checked += 1;
        let g = ConfigGraph::new(&h);
        let total = g.multiplicities().total().clone();
        let bound = crate::graph::degree_bound(&h);
        let mats = h
            .terms()
            .iter()
            .map(|t| term_matrix(t, &caps))
            .collect::<Result<Vec<_>>>()?;
        let sets: Vec<NeighborSet> = Bitstring::all(h.n()).map(|x| g.neighbors(&x)).collect::<Result<_>>()?;
        for x in Bitstring::all(h.n()) {
            strings += 1;
            let nb = &sets[x.index()];
            for i in 0..h.m() {
                if let Some(s) = h.subset_at(i, x.value()) {
                    if g.multiplicities().per_edge(s.len()) * BigUint::from(s.len()) != total {
                        failures.push(format!("{name}: integrality at {x}"));
                    }
                }
            }
            for e in &nb.entries {
                if sets[e.y.index()].multiplicity(&x) != e.multiplicity {
                    failures.push(format!("{name}: asymmetric {x}-{}", e.y));
                }
            }
            if nb.degree > bound || nb.entries.iter().map(|e| &e.multiplicity).sum::<BigUint>() != nb.degree {
                failures.push(format!("{name}: degree at {x}"));
            }
            if g.is_bad(&x)? != bad_by_matrix(&h, &x, &mats) {
                failures.push(format!("{name}: badness at {x}"));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{checked} bundled instances, {strings} strings: all invariants hold")
    } else {
        format!("{} violations, first: {}", failures.len(), failures[0])
    };
    Ok((failures.is_empty(), detail))
}
