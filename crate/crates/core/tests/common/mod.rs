//! Brute-force references built straight from the term description, sharing
//! no code with the library beyond reading the instance.

#![allow(dead_code)]

use nalgebra::DMatrix;
use stoqwalk_core::compile::{Gate, StoqVerifier};
use stoqwalk_core::Hamiltonian;

/// Global bit of qubit `q` in an `n`-bit basis index, qubit 0 leftmost.
pub fn bit(x: usize, q: usize, n: usize) -> usize {
    (x >> (n - 1 - q)) & 1
}

/// Dense `P_i` on the full space.
pub fn projector(h: &Hamiltonian, i: usize) -> DMatrix<f64> {
    let n = h.n();
    let dim = 1usize << n;
    let term = &h.terms()[i];
    let q = term.qubits();
    let k = q.len();
    let mut local = DMatrix::<f64>::zeros(1 << k, 1 << k);
    for s in term.subsets() {
        let w = 1.0 / s.len() as f64;
        for &a in s {
            for &b in s {
                local[(a as usize, b as usize)] += w;
            }
        }
    }
    let pattern = |x: usize| -> usize { q.iter().fold(0, |acc, &qq| (acc << 1) | bit(x, qq, n)) };
    let rest = |x: usize| -> usize {
        (0..n).filter(|j| !q.contains(j)).fold(0, |acc, j| (acc << 1) | bit(x, j, n))
    };
    let mut p = DMatrix::<f64>::zeros(dim, dim);
    for x in 0..dim {
        for y in 0..dim {
            if rest(x) == rest(y) {
                p[(x, y)] = local[(pattern(x), pattern(y))];
            }
        }
    }
    p
}

pub fn projectors(h: &Hamiltonian) -> Vec<DMatrix<f64>> {
    (0..h.m()).map(|i| projector(h, i)).collect()
}

/// `(1/m) sum_i (I - P_i)`.
pub fn dense_h(h: &Hamiltonian) -> DMatrix<f64> {
    let dim = 1usize << h.n();
    let mut acc = DMatrix::<f64>::zeros(dim, dim);
    for p in projectors(h) {
        acc += DMatrix::<f64>::identity(dim, dim) - p;
    }
    acc / h.m() as f64
}

/// Some term has `<x|P_i|x> = 0`.
pub fn bad_oracle(ps: &[DMatrix<f64>], x: usize) -> bool {
    ps.iter().any(|p| p[(x, x)] == 0.0)
}

/// Edge count between `x` and `y`: `M * sum_i <x|P_i|y>` with `M = (2^k)!`.
pub fn edge_oracle(ps: &[DMatrix<f64>], k: usize, x: usize, y: usize) -> u64 {
    let big_m: u64 = (1..=(1u64 << k)).product();
    let v: f64 = ps.iter().map(|p| p[(x, y)]).sum::<f64>() * big_m as f64;
    let r = v.round();
    assert!((v - r).abs() < 1e-6 * big_m as f64, "non-integral multiplicity {v}");
    r as u64
}

/// Rejection probability of `steps` checks, absorbing bad mass. The move
/// matrix of the non-lazy walk on good strings is `I - H`.
pub fn absorbed_rejection(h: &Hamiltonian, x0: usize, steps: u64, laziness: f64) -> f64 {
    let dim = 1usize << h.n();
    let ps = projectors(h);
    let bad: Vec<bool> = (0..dim).map(|x| bad_oracle(&ps, x)).collect();
    let hm = dense_h(h);
    let moves = DMatrix::<f64>::identity(dim, dim) * laziness
        + (DMatrix::<f64>::identity(dim, dim) - hm) * (1.0 - laziness);
    let mut p = nalgebra::DVector::<f64>::zeros(dim);
    p[x0] = 1.0;
    let mut rejected = 0.0;
    for _ in 0..steps {
        for x in 0..dim {
            if bad[x] {
                rejected += p[x];
                p[x] = 0.0;
            }
        }
        p = moves.transpose() * p;
    }
    rejected
}

/// Permutation matrix of one gate on `w` wires.
pub fn gate_matrix(g: &Gate, w: usize) -> DMatrix<f64> {
    let dim = 1usize << w;
    let mut u = DMatrix::<f64>::zeros(dim, dim);
    for z in 0..dim {
        let flip = match *g {
            Gate::Not(t) => Some(t),
            Gate::Cnot(c, t) => (bit(z, c, w) == 1).then_some(t),
            Gate::Toffoli(a, b, t) => (bit(z, a, w) == 1 && bit(z, b, w) == 1).then_some(t),
        };
        let out = match flip {
            Some(t) => z ^ (1 << (w - 1 - t)),
            None => z,
        };
        u[(out, z)] = 1.0;
    }
    u
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

fn ket(bits: &[usize]) -> DMatrix<f64> {
    let mut v = DMatrix::<f64>::from_element(1, 1, 1.0);
    for &b in bits {
        let mut e = DMatrix::<f64>::zeros(2, 1);
        e[(b, 0)] = 1.0;
        v = kron(&v, &e);
    }
    v
}

/// `|x> (x) |w> (x) |0..0> (x) |+..+>` via Kronecker products.
pub fn input_state(v: &StoqVerifier, x: &[usize], witness: &[f64]) -> DMatrix<f64> {
    let r = v.registers();
    let plus = DMatrix::<f64>::from_element(2, 1, std::f64::consts::FRAC_1_SQRT_2);
    let mut s = ket(x);
    s = kron(&s, &DMatrix::from_column_slice(witness.len(), 1, witness));
    s = kron(&s, &ket(&vec![0; r.n_0]));
    for _ in 0..r.n_plus {
        s = kron(&s, &plus);
    }
    s
}

/// `|+><+|` on wire 0, identity elsewhere.
pub fn plus_projector(w: usize) -> DMatrix<f64> {
    let pp = DMatrix::<f64>::from_element(2, 2, 0.5);
    kron(&pp, &DMatrix::identity(1 << (w - 1), 1 << (w - 1)))
}

pub fn circuit_matrix(v: &StoqVerifier) -> DMatrix<f64> {
    let w = v.wires();
    let mut u = DMatrix::<f64>::identity(1 << w, 1 << w);
    for g in v.circuit().gates() {
        u = gate_matrix(g, w) * u;
    }
    u
}

pub fn acceptance_oracle(v: &StoqVerifier, x: &[usize], witness: &[f64]) -> f64 {
    let w = v.wires();
    let phi = circuit_matrix(v) * input_state(v, x, witness);
    (phi.transpose() * plus_projector(w) * &phi)[(0, 0)]
}
