//! Projection uniform stoquastic local Hamiltonians.
//!
//! Every local term `H_i = I - P_i` is described by the disjoint families of
//! local basis strings whose subset states span the groundspace of `P_i`.
//! The full Hamiltonian is always `(1/m) * sum_i H_i`.
//!
//! Strings inside a term are indexed in the order of the term's `qubits`
//! list: the first listed qubit is the most significant (leftmost) bit of the
//! local pattern.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bits::Bitstring;
use crate::error::{Error, Result};

/// Largest term accepted syntactically; the configurable locality cap is
/// enforced by [`validate`].
pub const MAX_TERM_QUBITS: usize = 16;

const UNCOVERED: u32 = u32::MAX;
const NUMERIC_CHECK_MAX_K: usize = 8;

/// Size limits shared by the numerical routines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub max_locality: usize,
    pub dense_qubits: usize,
    pub power_qubits: usize,
    pub sim_wires: usize,
    pub witness_qubits: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_locality: 6,
            dense_qubits: 14,
            power_qubits: 20,
            sim_wires: 20,
            witness_qubits: 12,
        }
    }
}

/// A k-local projector term, stored through its groundspace subsets.
#[derive(Clone, PartialEq, Eq)]
pub struct LocalTerm {
    qubits: Vec<usize>,
    subsets: Vec<Vec<u64>>,
    // local pattern -> index into `subsets`, or UNCOVERED
    lookup: Vec<u32>,
}

impl std::fmt::Debug for LocalTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LocalTerm")
            .field("qubits", &self.qubits)
            .field("subsets", &self.subset_strings())
            .finish()
    }
}

impl LocalTerm {
    /// Builds a term from local patterns (integers below `2^k`).
    ///
    /// Only shape is checked here; disjointness and the other instance
    /// invariants are the business of [`validate`].
    pub fn new(qubits: Vec<usize>, subsets: Vec<Vec<u64>>) -> Result<Self> {
        let k = qubits.len();
        if k == 0 {
            return Err(Error::Malformed("term acts on no qubits".into()));
        }
        if k > MAX_TERM_QUBITS {
            return Err(Error::Malformed(format!(
                "term on {k} qubits exceeds the hard limit {MAX_TERM_QUBITS}"
            )));
        }
        let dim = 1u64 << k;
        let mut lookup = vec![UNCOVERED; dim as usize];
        for (j, subset) in subsets.iter().enumerate() {
            for &p in subset {
                if p >= dim {
                    return Err(Error::Malformed(format!("pattern {p} does not fit in {k} bits")));
                }
                if lookup[p as usize] == UNCOVERED {
                    lookup[p as usize] = j as u32;
                }
            }
        }
        Ok(LocalTerm { qubits, subsets, lookup })
    }

    /// Builds a term from k-character strings such as `"01"`.
    pub fn from_strings<S: AsRef<str>>(qubits: Vec<usize>, subsets: &[Vec<S>]) -> Result<Self> {
        let k = qubits.len();
        let mut parsed = Vec::with_capacity(subsets.len());
        for subset in subsets {
            let mut s = Vec::with_capacity(subset.len());
            for text in subset {
                let b: Bitstring = text.as_ref().parse()?;
                if b.len() != k {
                    return Err(Error::Malformed(format!(
                        "string {:?} has length {} but the term acts on {k} qubits",
                        text.as_ref(),
                        b.len()
                    )));
                }
                s.push(b.value());
            }
            parsed.push(s);
        }
        LocalTerm::new(qubits, parsed)
    }

    pub fn k(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn subsets(&self) -> &[Vec<u64>] {
        &self.subsets
    }

    pub fn subset_strings(&self) -> Vec<Vec<String>> {
        let k = self.k();
        self.subsets
            .iter()
            .map(|s| s.iter().map(|&p| Bitstring::from_raw(k, p).to_string()).collect())
            .collect()
    }

    /// Index of the subset containing local pattern `p`.
    #[inline]
    pub fn subset_index(&self, p: u64) -> Option<usize> {
        match self.lookup[p as usize] {
            UNCOVERED => None,
            j => Some(j as usize),
        }
    }

    #[inline]
    pub fn covers(&self, p: u64) -> bool {
        self.lookup[p as usize] != UNCOVERED
    }
}

/// `H = (1/m) * sum_i H_i` on `n` qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hamiltonian {
    n: usize,
    terms: Vec<LocalTerm>,
    // per term: right-shift that brings each term qubit to bit 0
    shifts: Vec<Vec<u32>>,
    // per term: mask of the term's qubits in the global string
    masks: Vec<u64>,
}

impl Hamiltonian {
    /// Builds an instance, rejecting anything that breaks a structural
    /// invariant. The locality cap is not enforced here.
    pub fn new(n: usize, terms: Vec<LocalTerm>) -> Result<Self> {
        let caps = Caps {
            max_locality: MAX_TERM_QUBITS,
            ..Caps::default()
        };
        let h = Self::assemble(n, terms)?;
        let report = validate(&h.to_file(), &caps);
        if !report.is_valid() {
            return Err(Error::Malformed(report.to_string()));
        }
        Ok(h)
    }

    fn assemble(n: usize, terms: Vec<LocalTerm>) -> Result<Self> {
        if n == 0 || n >= 64 {
            return Err(Error::Malformed(format!("qubit count {n} outside 1..=63")));
        }
        if terms.is_empty() {
            return Err(Error::Malformed("instance has no terms".into()));
        }
        let mut shifts = Vec::with_capacity(terms.len());
        let mut masks = Vec::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            let mut s = Vec::with_capacity(t.k());
            let mut mask = 0u64;
            for &q in t.qubits() {
                if q >= n {
                    return Err(Error::Malformed(format!("term {i}: qubit {q} >= n = {n}")));
                }
                let shift = (n - 1 - q) as u32;
                s.push(shift);
                mask |= 1 << shift;
            }
            shifts.push(s);
            masks.push(mask);
        }
        Ok(Hamiltonian { n, terms, shifts, masks })
    }

    /// Parses and fully validates an instance file.
    pub fn from_file(file: &InstanceFile, caps: &Caps) -> Result<Self> {
        let report = validate(file, caps);
        if !report.is_valid() {
            return Err(Error::Malformed(report.to_string()));
        }
        let terms = file
            .terms
            .iter()
            .map(|t| LocalTerm::from_strings(t.qubits.clone(), &t.subsets))
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(file.n, terms)
    }

    pub fn from_json(text: &str, caps: &Caps) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        Self::from_file(&file, caps)
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|t| TermFile {
                    qubits: t.qubits.clone(),
                    subsets: t.subset_strings(),
                })
                .collect(),
        }
    }

    /// Canonical text form (pretty JSON, stable field order).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("instance serializes")
    }

    pub fn validate(&self, caps: &Caps) -> ValidationReport {
        validate(&self.to_file(), caps)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.terms.len()
    }

    /// Largest term locality.
    pub fn k(&self) -> usize {
        self.terms.iter().map(LocalTerm::k).max().unwrap_or(0)
    }

    pub fn terms(&self) -> &[LocalTerm] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn check_string(&self, x: &Bitstring) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Local pattern of term `i` read off global string `x`.
    #[inline]
    pub fn local_pattern(&self, i: usize, x: u64) -> u64 {
        self.shifts[i]
            .iter()
            .fold(0u64, |acc, &s| (acc << 1) | ((x >> s) & 1))
    }

    /// `x` with the qubits of term `i` overwritten by `pattern`.
    #[inline]
    pub fn embed(&self, i: usize, x: u64, pattern: u64) -> u64 {
        let k = self.shifts[i].len();
        let mut y = x & !self.masks[i];
        for (j, &s) in self.shifts[i].iter().enumerate() {
            y |= ((pattern >> (k - 1 - j)) & 1) << s;
        }
        y
    }

    /// `S_i^x` as local patterns, or `None` when term `i` does not cover `x`.
    #[inline]
    pub fn subset_at(&self, i: usize, x: u64) -> Option<&[u64]> {
        let t = &self.terms[i];
        t.subset_index(self.local_pattern(i, x)).map(|j| t.subsets[j].as_slice())
    }

    #[inline]
    pub fn covers(&self, i: usize, x: u64) -> bool {
        self.terms[i].covers(self.local_pattern(i, x))
    }

    /// Raw-index form of the bad-string test.
    #[inline]
    pub fn is_bad_index(&self, x: u64) -> bool {
        (0..self.terms.len()).any(|i| !self.covers(i, x))
    }

    /// `out = H v` without forming the matrix.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        let scale = 1.0 / self.m() as f64;
        out.copy_from_slice(v);
        for i in 0..self.m() {
            for (x, o) in out.iter_mut().enumerate() {
                if let Some(s) = self.subset_at(i, x as u64) {
                    let sum: f64 = s.iter().map(|&p| v[self.embed(i, x as u64, p) as usize]).sum();
                    *o -= scale * sum / s.len() as f64;
                }
            }
        }
    }

    /// `<v|H|v>` for a real vector.
    pub fn expectation(&self, v: &[f64]) -> f64 {
        let mut hv = vec![0.0; v.len()];
        self.apply(v, &mut hv);
        v.iter().zip(&hv).map(|(a, b)| a * b).sum()
    }
}

/// Serialized instance: `{"n": .., "terms": [{"qubits": [..], "subsets": [[..], ..]}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub terms: Vec<TermFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermFile {
    pub qubits: Vec<usize>,
    pub subsets: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NoQubits,
    NoTerms,
    EmptyTerm,
    QubitOutOfRange,
    DuplicateQubit,
    LocalityCap,
    BadString,
    EmptySubset,
    DuplicateString,
    OverlappingSubsets,
    NotProjection,
    PositiveOffDiagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub term: Option<usize>,
    pub kind: ViolationKind,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, term: Option<usize>, kind: ViolationKind, message: String) {
        self.violations.push(Violation { term, kind, message });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (j, v) in self.violations.iter().enumerate() {
            if j > 0 {
                f.write_str("; ")?;
            }
            match v.term {
                Some(i) => write!(f, "term {i}: {}", v.message)?,
                None => f.write_str(&v.message)?,
            }
        }
        Ok(())
    }
}

/// Lists every violated invariant; an empty report means the instance is
/// projection uniform stoquastic within the given caps.
pub fn validate(file: &InstanceFile, caps: &Caps) -> ValidationReport {
    use ViolationKind::*;
    let mut report = ValidationReport::default();
    if file.n == 0 || file.n >= 64 {
        report.push(None, NoQubits, format!("qubit count {} outside 1..=63", file.n));
    }
    if file.terms.is_empty() {
        report.push(None, NoTerms, "instance has no terms".into());
    }
    for (i, t) in file.terms.iter().enumerate() {
        let k = t.qubits.len();
        let at = Some(i);
        if k == 0 {
            report.push(at, EmptyTerm, "term acts on no qubits".into());
            continue;
        }
        let mut seen = HashSet::new();
        for &q in &t.qubits {
            if q >= file.n {
                report.push(at, QubitOutOfRange, format!("qubit {q} >= n = {}", file.n));
            }
            if !seen.insert(q) {
                report.push(at, DuplicateQubit, format!("qubit {q} listed twice"));
            }
        }
        if k > caps.max_locality || k > MAX_TERM_QUBITS {
            report.push(
                at,
                LocalityCap,
                format!("locality {k} exceeds cap {}", caps.max_locality.min(MAX_TERM_QUBITS)),
            );
            continue;
        }
        let mut owner: Vec<Option<usize>> = vec![None; 1 << k];
        let mut shape_ok = true;
        for (j, subset) in t.subsets.iter().enumerate() {
            if subset.is_empty() {
                report.push(at, EmptySubset, format!("subset {j} is empty"));
            }
            let mut local = HashSet::new();
            for s in subset {
                let p = match s.parse::<Bitstring>() {
                    Ok(b) if b.len() == k => b.value() as usize,
                    _ => {
                        report.push(at, BadString, format!("subset {j}: {s:?} is not a {k}-bit string"));
                        shape_ok = false;
                        continue;
                    }
                };
                if !local.insert(p) {
                    report.push(at, DuplicateString, format!("subset {j} lists {s} twice"));
                    continue;
                }
                match owner[p] {
                    Some(other) => report.push(
                        at,
                        OverlappingSubsets,
                        format!("{s} appears in subsets {other} and {j}"),
                    ),
                    None => owner[p] = Some(j),
                }
            }
        }
        // disjoint non-empty subsets already force a stoquastic projection;
        // the numerical check is kept for small terms only
        if shape_ok && k <= NUMERIC_CHECK_MAX_K {
            if let Ok(term) = LocalTerm::from_strings(t.qubits.clone(), &t.subsets) {
                let h = term_matrix_unchecked(&term);
                let h2 = &h * &h;
                let err = (&h2 - &h).abs().max();
                if err > 1e-12 {
                    report.push(at, NotProjection, format!("|H^2 - H| = {err:.3e}"));
                }
                let d = h.nrows();
                let worst = (0..d)
                    .flat_map(|r| (0..d).filter(move |&c| c != r).map(move |c| (r, c)))
                    .map(|(r, c)| h[(r, c)])
                    .fold(f64::NEG_INFINITY, f64::max);
                if worst > 1e-12 {
                    report.push(at, PositiveOffDiagonal, format!("off-diagonal entry {worst:.3e} > 0"));
                }
            }
        }
    }
    report
}

fn term_matrix_unchecked(t: &LocalTerm) -> DMatrix<f64> {
    let d = 1usize << t.k();
    let mut h = DMatrix::<f64>::identity(d, d);
    for s in &t.subsets {
        if s.is_empty() {
            continue;
        }
        let w = 1.0 / s.len() as f64;
        for &a in s {
            for &b in s {
                h[(a as usize, b as usize)] -= w;
            }
        }
    }
    h
}

/// `H_i = I - sum_j |S_ij><S_ij|` as a `2^k x 2^k` matrix.
pub fn term_matrix(t: &LocalTerm, caps: &Caps) -> Result<DMatrix<f64>> {
    if t.k() > caps.max_locality {
        return Err(Error::Capacity {
            what: "term matrix",
            requested: t.k(),
            cap: caps.max_locality,
        });
    }
    Ok(term_matrix_unchecked(t))
}

/// Dense `(1/m) sum_i H_i`.
pub fn hamiltonian_matrix(h: &Hamiltonian, caps: &Caps) -> Result<DMatrix<f64>> {
    if h.n() > caps.dense_qubits {
        return Err(Error::Capacity {
            what: "dense Hamiltonian",
            requested: h.n(),
            cap: caps.dense_qubits,
        });
    }
    let dim = h.dim();
    let scale = 1.0 / h.m() as f64;
    let mut mat = DMatrix::<f64>::identity(dim, dim);
    for i in 0..h.m() {
        for x in 0..dim as u64 {
            if let Some(s) = h.subset_at(i, x) {
                let w = scale / s.len() as f64;
                for &p in s {
                    mat[(x as usize, h.embed(i, x, p) as usize)] -= w;
                }
            }
        }
    }
    Ok(mat)
}

/// Normalizes a vector in place; returns the original norm.
pub(crate) fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|a| *a /= norm);
    }
    norm
}

pub(crate) fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
