//! Stoquastic verifiers built from classical reversible circuits, their
//! exact acceptance probabilities, and the clock construction turning a
//! verifier into a projection uniform stoquastic Hamiltonian.
//!
//! Wire `w` of a `W`-wire register is bit `W - 1 - w` of a basis index, so
//! wire 0 is the leftmost character. Registers are laid out as input,
//! witness, `|0>` ancillas, `|+>` ancillas. A verifier accepts when wire 0
//! measures `|+>`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bits::Bitstring;
use crate::error::{Error, Result};
use crate::expansion::sample_nonneg_state;
use crate::instance::{normalize, Caps, Hamiltonian, LocalTerm};
use crate::rng::stream_rng;

pub const OUTPUT_WIRE: usize = 0;
pub const FLOOR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Value>", into = "Vec<Value>")]
pub enum Gate {
    Not(usize),
    Cnot(usize, usize),
    Toffoli(usize, usize, usize),
}

impl Gate {
    pub fn wires(&self) -> Vec<usize> {
        match *self {
            Gate::Not(t) => vec![t],
            Gate::Cnot(c, t) => vec![c, t],
            Gate::Toffoli(a, b, t) => vec![a, b, t],
        }
    }

    pub fn target(&self) -> usize {
        *self.wires().last().expect("gates act on at least one wire")
    }

    fn controls(&self) -> Vec<usize> {
        let w = self.wires();
        w[..w.len() - 1].to_vec()
    }

    /// Applies the gate to basis index `x` of a `width`-wire register.
    #[inline]
    pub fn apply(&self, x: u64, width: usize) -> u64 {
        let bit = |w: usize| (x >> (width - 1 - w)) & 1 == 1;
        let fire = self.controls().into_iter().all(bit);
        if fire {
            x ^ 1 << (width - 1 - self.target())
        } else {
            x
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Gate::Not(_) => "NOT",
            Gate::Cnot(..) => "CNOT",
            Gate::Toffoli(..) => "TOFFOLI",
        }
    }
}

impl TryFrom<Vec<Value>> for Gate {
    type Error = String;

    fn try_from(v: Vec<Value>) -> std::result::Result<Self, String> {
        let name = v
            .first()
            .and_then(Value::as_str)
            .ok_or_else(|| "gate must start with its name".to_string())?;
        let args = v[1..]
            .iter()
            .map(|a| a.as_u64().map(|w| w as usize).ok_or_else(|| format!("bad wire index {a}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        match (name, args.as_slice()) {
            ("NOT", &[t]) => Ok(Gate::Not(t)),
            ("CNOT", &[c, t]) => Ok(Gate::Cnot(c, t)),
            ("TOFFOLI", &[a, b, t]) => Ok(Gate::Toffoli(a, b, t)),
            _ => Err(format!("unknown gate {name} with {} wires", args.len())),
        }
    }
}

impl From<Gate> for Vec<Value> {
    fn from(g: Gate) -> Self {
        std::iter::once(Value::from(g.name()))
            .chain(g.wires().into_iter().map(Value::from))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReversibleCircuit {
    wires: usize,
    gates: Vec<Gate>,
}

impl ReversibleCircuit {
    pub fn new(wires: usize, gates: Vec<Gate>) -> Result<Self> {
        if wires == 0 || wires > 63 {
            return Err(Error::Circuit(format!("wire count {wires} outside 1..=63")));
        }
        for (j, g) in gates.iter().enumerate() {
            let ws = g.wires();
            if let Some(w) = ws.iter().find(|&&w| w >= wires) {
                return Err(Error::Circuit(format!("gate {j} uses wire {w} of {wires}")));
            }
            let mut sorted = ws.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != ws.len() {
                return Err(Error::Circuit(format!("gate {j} repeats a wire")));
            }
        }
        Ok(ReversibleCircuit { wires, gates })
    }

    pub fn wires(&self) -> usize {
        self.wires
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    #[inline]
    pub fn apply(&self, x: u64) -> u64 {
        self.gates.iter().fold(x, |y, g| g.apply(y, self.wires))
    }

    /// The first `t` gates applied to `x`.
    pub fn apply_prefix(&self, x: u64, t: usize) -> u64 {
        self.gates[..t].iter().fold(x, |y, g| g.apply(y, self.wires))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Registers {
    pub n: usize,
    pub n_w: usize,
    pub n_0: usize,
    pub n_plus: usize,
}

impl Registers {
    pub fn total(&self) -> usize {
        self.n + self.n_w + self.n_0 + self.n_plus
    }

    pub fn witness_range(&self) -> std::ops::Range<usize> {
        self.n..self.n + self.n_w
    }

    pub fn zero_range(&self) -> std::ops::Range<usize> {
        self.n + self.n_w..self.n + self.n_w + self.n_0
    }

    pub fn plus_range(&self) -> std::ops::Range<usize> {
        self.n + self.n_w + self.n_0..self.total()
    }
}

/// `{"wires": W, "registers": {...}, "gates": [["NOT", t], ["CNOT", c, t], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitFile {
    pub wires: usize,
    pub registers: Registers,
    pub gates: Vec<Gate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoqVerifier {
    registers: Registers,
    circuit: ReversibleCircuit,
}

impl StoqVerifier {
    pub fn new(registers: Registers, circuit: ReversibleCircuit) -> Result<Self> {
        if registers.total() != circuit.wires() {
            return Err(Error::Circuit(format!(
                "registers cover {} wires but the circuit has {}",
                registers.total(),
                circuit.wires()
            )));
        }
        Ok(StoqVerifier { registers, circuit })
    }

    pub fn from_file(file: &CircuitFile) -> Result<Self> {
        if file.wires != file.registers.total() {
            return Err(Error::Circuit(format!(
                "\"wires\" is {} but the registers add up to {}",
                file.wires,
                file.registers.total()
            )));
        }
        StoqVerifier::new(file.registers, ReversibleCircuit::new(file.wires, file.gates.clone())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        StoqVerifier::from_file(&serde_json::from_str(text)?)
    }

    pub fn to_file(&self) -> CircuitFile {
        CircuitFile {
            wires: self.circuit.wires(),
            registers: self.registers,
            gates: self.circuit.gates().to_vec(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("circuit serializes")
    }

    pub fn registers(&self) -> &Registers {
        &self.registers
    }

    pub fn circuit(&self) -> &ReversibleCircuit {
        &self.circuit
    }

    pub fn wires(&self) -> usize {
        self.circuit.wires()
    }

    fn check_input(&self, x: &Bitstring) -> Result<()> {
        if x.len() != self.registers.n {
            return Err(Error::LengthMismatch {
                expected: self.registers.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn check_sim(&self, caps: &Caps) -> Result<()> {
        if self.wires() > caps.sim_wires {
            return Err(Error::Capacity {
                what: "circuit simulation",
                requested: self.wires(),
                cap: caps.sim_wires,
            });
        }
        Ok(())
    }

    /// Basis index of input `x`, witness basis state `a`, `|+>` branch `p`.
    fn basis_in(&self, x: u64, a: u64, p: u64) -> u64 {
        let r = &self.registers;
        let x_part = x << (r.n_w + r.n_0 + r.n_plus);
        let a_part = a << (r.n_0 + r.n_plus);
        x_part | a_part | p
    }

    /// `|psi_in> = |x>|witness>|0..0>|+..+>` as a dense vector.
    pub fn input_state(&self, x: &Bitstring, witness: &[f64], caps: &Caps) -> Result<Vec<f64>> {
        self.check_input(x)?;
        self.check_sim(caps)?;
        let r = self.registers;
        check_witness(witness, r.n_w)?;
        let mut psi = vec![0.0; 1 << self.wires()];
        let plus_amp = (0.5f64).powf(r.n_plus as f64 / 2.0);
        for (a, &wa) in witness.iter().enumerate() {
            if wa == 0.0 {
                continue;
            }
            for p in 0..1u64 << r.n_plus {
                psi[self.basis_in(x.value(), a as u64, p) as usize] = wa * plus_amp;
            }
        }
        Ok(psi)
    }

    /// `U |psi_in>` after the first `t` gates.
    pub fn evolve(&self, psi: &[f64], t: usize) -> Vec<f64> {
        let mut out = vec![0.0; psi.len()];
        for (z, &a) in psi.iter().enumerate() {
            if a != 0.0 {
                out[self.circuit.apply_prefix(z as u64, t) as usize] = a;
            }
        }
        out
    }
}

fn check_witness(witness: &[f64], n_w: usize) -> Result<()> {
    if witness.len() != 1 << n_w {
        return Err(Error::LengthMismatch {
            expected: 1 << n_w,
            got: witness.len(),
        });
    }
    let norm = witness.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(norm));
    }
    Ok(())
}

/// `<phi| (|+><+| on wire 0) |phi>` for a dense `width`-wire state.
pub fn plus_weight(phi: &[f64], width: usize) -> f64 {
    let half = 1usize << (width - 1);
    (0..half).map(|r| (phi[r] + phi[r | half]).powi(2)).sum::<f64>() / 2.0
}

pub fn acceptance_probability(v: &StoqVerifier, x: &Bitstring, witness: &[f64], caps: &Caps) -> Result<f64> {
    let psi = v.input_state(x, witness, caps)?;
    let phi = v.evolve(&psi, v.circuit.len());
    Ok(plus_weight(&phi, v.wires()).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalAcceptance {
    pub value: f64,
    /// Unit witness attaining `value`, sign fixed so its entries sum to a
    /// non-negative number.
    pub witness: Vec<f64>,
}

/// The acceptance operator on the witness register,
/// `A_ab = <a_in| U^T Pi_out U |b_in>`.
pub fn acceptance_operator(v: &StoqVerifier, x: &Bitstring, caps: &Caps) -> Result<DMatrix<f64>> {
    v.check_input(x)?;
    v.check_sim(caps)?;
    let r = v.registers;
    if r.n_w > caps.witness_qubits {
        return Err(Error::Capacity {
            what: "witness register",
            requested: r.n_w,
            cap: caps.witness_qubits,
        });
    }
    let width = v.wires();
    let top = 1u64 << (width - 1);
    let dw = 1usize << r.n_w;
    // column of C: wire-0-stripped image of each (a, p); Pi_out pairs images
    // that agree off wire 0, each pair with weight 1/2
    let mut rest_counts: Vec<Vec<(usize, f64)>> = vec![Vec::new(); 1 << (width - 1)];
    for a in 0..dw {
        for p in 0..1u64 << r.n_plus {
            let y = v.circuit.apply(v.basis_in(x.value(), a as u64, p));
            let rest = (y & !top) as usize;
            let slot = &mut rest_counts[rest];
            match slot.iter_mut().find(|(b, _)| *b == a) {
                Some(e) => e.1 += 1.0,
                None => slot.push((a, 1.0)),
            }
        }
    }
    let scale = 0.5 / (1u64 << r.n_plus) as f64;
    let mut m = DMatrix::zeros(dw, dw);
    for slot in rest_counts.iter().filter(|s| !s.is_empty()) {
        for &(a, ca) in slot {
            for &(b, cb) in slot {
                m[(a, b)] += scale * ca * cb;
            }
        }
    }
    Ok(m)
}

pub fn optimal_acceptance(v: &StoqVerifier, x: &Bitstring, caps: &Caps) -> Result<OptimalAcceptance> {
    let a = acceptance_operator(v, x, caps)?;
    let eig = SymmetricEigen::new(a);
    let (j, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|p, q| p.1.total_cmp(q.1))
        .expect("witness space is non-empty");
    let mut witness: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
    if witness.iter().sum::<f64>() < 0.0 {
        witness.iter_mut().for_each(|w| *w = -*w);
    }
    normalize(&mut witness);
    Ok(OptimalAcceptance {
        value: value.clamp(0.0, 1.0),
        witness,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FloorReport {
    pub trials: usize,
    pub min_acceptance: f64,
    pub holds: bool,
}

/// Smallest acceptance over the uniform witness and `trials - 1` random
/// non-negative witnesses.
pub fn check_nonneg_floor(v: &StoqVerifier, x: &Bitstring, trials: usize, seed: u64, caps: &Caps) -> Result<FloorReport> {
    if trials == 0 {
        return Err(Error::Parameter("need at least one trial".into()));
    }
    let dw = 1usize << v.registers.n_w;
    let mut rng = stream_rng(seed, 0);
    let mut min = f64::INFINITY;
    for j in 0..trials {
        let w = if j == 0 {
            vec![1.0 / (dw as f64).sqrt(); dw]
        } else {
            let sparsity = rng.random::<f64>() * 0.9;
            sample_nonneg_state(dw, sparsity, &mut rng)
        };
        min = min.min(acceptance_probability(v, x, &w, caps)?);
    }
    Ok(FloorReport {
        trials,
        min_acceptance: min,
        holds: min >= 0.5 - FLOOR_TOL,
    })
}

/// Embeds an MA verifier: a controlled swap of a fresh `|0>` wire and a
/// fresh `|+>` wire, controlled by the MA output, then a swap bringing the
/// fresh `|0>` wire to wire 0 unless it already is wire 0. The fresh `|0>`
/// wire goes last in the `|0>` register and the fresh `|+>` wire last
/// overall.
pub fn ma_to_stoqma(ma: &ReversibleCircuit, registers: Registers, output: usize) -> Result<StoqVerifier> {
    if registers.total() != ma.wires() {
        return Err(Error::Circuit(format!(
            "registers cover {} wires but the circuit has {}",
            registers.total(),
            ma.wires()
        )));
    }
    if output >= ma.wires() {
        return Err(Error::Circuit(format!("output wire {output} out of range")));
    }
    let zero_end = registers.n + registers.n_w + registers.n_0;
    let remap = |w: usize| if w < zero_end { w } else { w + 1 };
    let mut gates: Vec<Gate> = ma
        .gates()
        .iter()
        .map(|g| match *g {
            Gate::Not(t) => Gate::Not(remap(t)),
            Gate::Cnot(c, t) => Gate::Cnot(remap(c), remap(t)),
            Gate::Toffoli(a, b, t) => Gate::Toffoli(remap(a), remap(b), remap(t)),
        })
        .collect();
    let fresh_zero = zero_end;
    let fresh_plus = ma.wires() + 1;
    let ctrl = remap(output);
    gates.extend([
        Gate::Toffoli(ctrl, fresh_zero, fresh_plus),
        Gate::Toffoli(ctrl, fresh_plus, fresh_zero),
        Gate::Toffoli(ctrl, fresh_zero, fresh_plus),
    ]);
    if fresh_zero != OUTPUT_WIRE {
        gates.extend([
            Gate::Cnot(OUTPUT_WIRE, fresh_zero),
            Gate::Cnot(fresh_zero, OUTPUT_WIRE),
            Gate::Cnot(OUTPUT_WIRE, fresh_zero),
        ]);
    }
    let regs = Registers {
        n_0: registers.n_0 + 1,
        n_plus: registers.n_plus + 1,
        ..registers
    };
    StoqVerifier::new(regs, ReversibleCircuit::new(ma.wires() + 2, gates)?)
}

/// Qubit layout of a compiled instance: data wires, then clock qubits
/// `c_1..c_L`. Clock time `t` is `c_1..c_t = 1`, the rest 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClockLayout {
    pub wires: usize,
    pub steps: usize,
}

impl ClockLayout {
    pub fn qubits(&self) -> usize {
        self.wires + self.steps
    }

    /// Qubit index of clock bit `c_j`, `1 <= j <= L`.
    pub fn clock(&self, j: usize) -> usize {
        self.wires + j - 1
    }

    /// Clock register value at time `t`.
    pub fn clock_value(&self, t: usize) -> u64 {
        ((1u64 << t) - 1) << (self.steps - t)
    }
}

fn singletons(dim: u64, skip: &[u64]) -> Vec<Vec<u64>> {
    (0..dim).filter(|p| !skip.contains(p)).map(|p| vec![p]).collect()
}

/// Clock construction for verifier `v` on input `x`. Terms, in order:
/// clock validity on `(c_j, c_j+1)`, initialization of input and ancilla
/// wires at time 0, one propagation term per gate, and the output check on
/// wire 0 at time `L`.
pub fn kitaev_compile(v: &StoqVerifier, x: &Bitstring, caps: &Caps) -> Result<Hamiltonian> {
    v.check_input(x)?;
    let layout = ClockLayout {
        wires: v.wires(),
        steps: v.circuit.len(),
    };
    let l = layout.steps;
    if l == 0 {
        return Err(Error::Circuit("clock construction needs at least one gate".into()));
    }
    if layout.qubits() > 63 {
        return Err(Error::Capacity {
            what: "compiled qubits",
            requested: layout.qubits(),
            cap: 63,
        });
    }
    let r = v.registers;
    let mut terms = Vec::new();

    for j in 1..l {
        // forbid 01 on (c_j, c_j+1)
        terms.push(LocalTerm::new(vec![layout.clock(j), layout.clock(j + 1)], singletons(4, &[0b01]))?);
    }

    let c1 = layout.clock(1);
    for w in 0..r.n {
        let forbidden = if x.bit(w) { 0b00 } else { 0b10 };
        terms.push(LocalTerm::new(vec![w, c1], singletons(4, &[forbidden]))?);
    }
    for w in r.zero_range() {
        terms.push(LocalTerm::new(vec![w, c1], singletons(4, &[0b10]))?);
    }
    for w in r.plus_range() {
        terms.push(LocalTerm::new(vec![w, c1], vec![vec![0b00, 0b10], vec![0b01], vec![0b11]])?);
    }

    for (idx, gate) in v.circuit.gates().iter().enumerate() {
        terms.push(propagation_term(&layout, idx + 1, gate)?);
    }

    // (I - |+><+|) on wire 0 while c_L = 1
    terms.push(LocalTerm::new(
        vec![OUTPUT_WIRE, layout.clock(l)],
        vec![vec![0b01, 0b11], vec![0b00], vec![0b10]],
    )?);

    let h = Hamiltonian::new(layout.qubits(), terms)?;
    if h.k() > caps.max_locality {
        return Err(Error::Capacity {
            what: "compiled locality",
            requested: h.k(),
            cap: caps.max_locality,
        });
    }
    Ok(h)
}

fn propagation_term(layout: &ClockLayout, t: usize, gate: &Gate) -> Result<LocalTerm> {
    let l = layout.steps;
    // clock qubits and the local patterns for times t-1 (a) and t (b)
    let (clock, a, b): (Vec<usize>, u64, u64) = if l == 1 {
        (vec![layout.clock(1)], 0b0, 0b1)
    } else if t == 1 {
        (vec![layout.clock(1), layout.clock(2)], 0b00, 0b10)
    } else if t == l {
        (vec![layout.clock(l - 1), layout.clock(l)], 0b10, 0b11)
    } else {
        (vec![layout.clock(t - 1), layout.clock(t), layout.clock(t + 1)], 0b100, 0b110)
    };
    let mut data = gate.wires();
    data.sort_unstable();
    let r = data.len();
    let s = clock.len();
    // the gate in local data coordinates
    let local = |w: usize| data.iter().position(|&d| d == w).expect("gate wire");
    let local_gate = match *gate {
        Gate::Not(q) => Gate::Not(local(q)),
        Gate::Cnot(c, q) => Gate::Cnot(local(c), local(q)),
        Gate::Toffoli(c1, c2, q) => Gate::Toffoli(local(c1), local(c2), local(q)),
    };
    let mut subsets = Vec::new();
    for z in 0..1u64 << r {
        subsets.push(vec![z << s | a, local_gate.apply(z, r) << s | b]);
        for c in 0..1u64 << s {
            if c != a && c != b {
                subsets.push(vec![z << s | c]);
            }
        }
    }
    let mut qubits = data;
    qubits.extend(clock);
    LocalTerm::new(qubits, subsets)
}

/// `(1/sqrt(L+1)) sum_t |clock t> (x) U_t...U_1 |psi_in>` on the compiled
/// qubit order.
pub fn history_state(v: &StoqVerifier, x: &Bitstring, witness: &[f64], caps: &Caps) -> Result<Vec<f64>> {
    let layout = ClockLayout {
        wires: v.wires(),
        steps: v.circuit.len(),
    };
    if layout.steps == 0 {
        return Err(Error::Circuit("history state needs at least one gate".into()));
    }
    if layout.qubits() > caps.sim_wires {
        return Err(Error::Capacity {
            what: "history state",
            requested: layout.qubits(),
            cap: caps.sim_wires,
        });
    }
    let psi = v.input_state(x, witness, caps)?;
    let l = layout.steps;
    let norm = 1.0 / ((l + 1) as f64).sqrt();
    let mut eta = vec![0.0; 1 << layout.qubits()];
    for t in 0..=l {
        let clock = layout.clock_value(t);
        for (z, &amp) in psi.iter().enumerate() {
            if amp != 0.0 {
                let y = v.circuit.apply_prefix(z as u64, t);
                eta[(y << l | clock) as usize] += norm * amp;
            }
        }
    }
    Ok(eta)
}
