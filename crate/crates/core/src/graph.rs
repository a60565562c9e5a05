//! The configuration multigraph `G(H)` on n-bit strings.
//!
//! For every term `i` covering `x`, each `y` in `S_i^x` (including `x`
//! itself) is joined to `x` by `M / |S_i^x|` parallel edges, `M = (2^k)!`
//! with `k` the largest locality in the instance. The graph is never
//! materialized; neighbourhoods are enumerated on demand.
//!
//! `M` overflows every machine integer once `k = 6`, so multiplicities are
//! exact [`BigUint`]s built as the factorial quotient `prod_{j != s} j`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::bits::Bitstring;
use crate::error::{Error, Result};
use crate::instance::Hamiltonian;

/// `(2^k)! / s` for every admissible subset size `s`.
#[derive(Debug, Clone)]
pub struct Multiplicities {
    k: usize,
    full: BigUint,
    quotients: Vec<BigUint>,
}

impl Multiplicities {
    pub fn new(k: usize) -> Self {
        let top = 1u64 << k;
        let full = (1..=top).fold(BigUint::from(1u32), |acc, j| acc * j);
        let quotients = (1..=top)
            .map(|s| {
                (1..=top)
                    .filter(|&j| j != s)
                    .fold(BigUint::from(1u32), |acc, j| acc * j)
            })
            .collect();
        Multiplicities { k, full, quotients }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `M = (2^k)!`.
    pub fn total(&self) -> &BigUint {
        &self.full
    }

    /// `M / s` for `1 <= s <= 2^k`.
    pub fn per_edge(&self, s: usize) -> &BigUint {
        &self.quotients[s - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NeighborEntry {
    pub y: Bitstring,
    #[serde(serialize_with = "ser_big")]
    pub multiplicity: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NeighborSet {
    /// Sorted by `y`; parallel edges from different terms are summed.
    pub entries: Vec<NeighborEntry>,
    #[serde(serialize_with = "ser_big")]
    pub degree: BigUint,
    #[serde(serialize_with = "ser_big")]
    pub self_loops: BigUint,
}

impl NeighborSet {
    pub fn multiplicity(&self, y: &Bitstring) -> BigUint {
        self.entries
            .binary_search_by(|e| e.y.cmp(y))
            .map(|j| self.entries[j].multiplicity.clone())
            .unwrap_or_default()
    }
}

fn ser_big<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfLoops {
    #[default]
    Include,
    Exclude,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutStats {
    pub boundary: BigUint,
    pub volume: BigUint,
    pub conductance: Ratio<BigUint>,
}

impl CutStats {
    pub fn conductance_f64(&self) -> f64 {
        ratio_f64(&self.conductance)
    }
}

pub fn ratio_f64(r: &Ratio<BigUint>) -> f64 {
    let num = r.numer().to_f64().unwrap_or(f64::INFINITY);
    let den = r.denom().to_f64().unwrap_or(f64::INFINITY);
    num / den
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub members: BTreeSet<Bitstring>,
    pub bad: Vec<Bitstring>,
    /// False when the node budget ran out before the closure was complete.
    pub complete: bool,
}

impl Component {
    pub fn has_bad(&self) -> bool {
        !self.bad.is_empty()
    }
}

/// Neighbourhood queries against one instance, with the multiplicity table
/// computed once.
#[derive(Debug, Clone)]
pub struct ConfigGraph<'a> {
    h: &'a Hamiltonian,
    mult: Multiplicities,
}

impl<'a> ConfigGraph<'a> {
    pub fn new(h: &'a Hamiltonian) -> Self {
        ConfigGraph {
            h,
            mult: Multiplicities::new(h.k()),
        }
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        self.h
    }

    pub fn multiplicities(&self) -> &Multiplicities {
        &self.mult
    }

    pub fn neighbors(&self, x: &Bitstring) -> Result<NeighborSet> {
        self.h.check_string(x)?;
        let n = self.h.n();
        let xv = x.value();
        let mut acc: BTreeMap<u64, BigUint> = BTreeMap::new();
        for i in 0..self.h.m() {
            if let Some(s) = self.h.subset_at(i, xv) {
                let w = self.mult.per_edge(s.len());
                for &p in s {
                    *acc.entry(self.h.embed(i, xv, p)).or_default() += w;
                }
            }
        }
        let self_loops = acc.get(&xv).cloned().unwrap_or_default();
        let degree = acc.values().fold(BigUint::zero(), |a, b| a + b);
        let entries = acc
            .into_iter()
            .map(|(y, multiplicity)| NeighborEntry {
                y: Bitstring::from_raw(n, y),
                multiplicity,
            })
            .collect();
        Ok(NeighborSet {
            entries,
            degree,
            self_loops,
        })
    }

    pub fn is_bad(&self, x: &Bitstring) -> Result<bool> {
        is_bad(self.h, x)
    }

    pub fn cut_stats(&self, set: &BTreeSet<Bitstring>, loops: SelfLoops) -> Result<CutStats> {
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut boundary = BigUint::zero();
        let mut volume = BigUint::zero();
        for x in set {
            let nb = self.neighbors(x)?;
            let vol_x = match loops {
                SelfLoops::Include => nb.degree.clone(),
                SelfLoops::Exclude => &nb.degree - &nb.self_loops,
            };
            if vol_x.is_zero() {
                return Err(Error::ZeroDegree(x.to_string()));
            }
            volume += vol_x;
            for e in &nb.entries {
                if !set.contains(&e.y) {
                    boundary += &e.multiplicity;
                }
            }
        }
        let conductance = Ratio::new(boundary.clone(), volume.clone());
        Ok(CutStats {
            boundary,
            volume,
            conductance,
        })
    }

    /// Breadth-first closure of `x` under the neighbour relation.
    pub fn connected_component(&self, x: &Bitstring, node_budget: usize) -> Result<Component> {
        self.h.check_string(x)?;
        if node_budget == 0 {
            return Err(Error::Parameter("node budget must be positive".into()));
        }
        let n = self.h.n();
        let mut seen: BTreeSet<u64> = BTreeSet::new();
        let mut queue = VecDeque::new();
        let mut bad = Vec::new();
        seen.insert(x.value());
        queue.push_back(x.value());
        let mut complete = true;
        'bfs: while let Some(u) = queue.pop_front() {
            if self.h.is_bad_index(u) {
                bad.push(Bitstring::from_raw(n, u));
            }
            for i in 0..self.h.m() {
                let Some(s) = self.h.subset_at(i, u) else { continue };
                for &p in s {
                    let y = self.h.embed(i, u, p);
                    if !seen.contains(&y) {
                        if seen.len() >= node_budget {
                            complete = false;
                            break 'bfs;
                        }
                        seen.insert(y);
                        queue.push_back(y);
                    }
                }
            }
        }
        if !complete {
            // strings discovered but not yet expanded still get their badness checked
            for &u in &queue {
                if self.h.is_bad_index(u) {
                    bad.push(Bitstring::from_raw(n, u));
                }
            }
        }
        bad.sort();
        Ok(Component {
            members: seen.into_iter().map(|v| Bitstring::from_raw(n, v)).collect(),
            bad,
            complete,
        })
    }
}

pub fn neighbors(h: &Hamiltonian, x: &Bitstring) -> Result<NeighborSet> {
    ConfigGraph::new(h).neighbors(x)
}

/// True iff some term's groundspace misses `x` entirely (`<x|P_i|x> = 0`).
pub fn is_bad(h: &Hamiltonian, x: &Bitstring) -> Result<bool> {
    h.check_string(x)?;
    Ok(h.is_bad_index(x.value()))
}

pub fn cut_stats(h: &Hamiltonian, set: &BTreeSet<Bitstring>, loops: SelfLoops) -> Result<CutStats> {
    ConfigGraph::new(h).cut_stats(set, loops)
}

pub fn connected_component(h: &Hamiltonian, x: &Bitstring, node_budget: usize) -> Result<Component> {
    ConfigGraph::new(h).connected_component(x, node_budget)
}

/// Upper bound `m * 2^k * (2^k)!` on any vertex degree.
pub fn degree_bound(h: &Hamiltonian) -> BigUint {
    let mult = Multiplicities::new(h.k());
    mult.total() * BigUint::from(h.m()) * (BigUint::from(1u32) << h.k())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn bs(s: &str) -> Bitstring {
        s.parse().unwrap()
    }

    fn set(items: &[&str]) -> BTreeSet<Bitstring> {
        items.iter().map(|s| bs(s)).collect()
    }

    #[test]
    fn factorial_quotients() {
        let m = Multiplicities::new(2);
        assert_eq!(*m.total(), BigUint::from(24u32));
        assert_eq!(*m.per_edge(1), BigUint::from(24u32));
        assert_eq!(*m.per_edge(3), BigUint::from(8u32));
        let m6 = Multiplicities::new(6);
        for s in 1..=64usize {
            assert_eq!(m6.per_edge(s) * BigUint::from(s), *m6.total());
        }
    }

    #[test]
    fn hypercube_neighbors() {
        let h = generators::hypercube(2).unwrap();
        let nb = neighbors(&h, &bs("00")).unwrap();
        let got: Vec<(String, u32)> = nb
            .entries
            .iter()
            .map(|e| (e.y.to_string(), e.multiplicity.to_u32().unwrap()))
            .collect();
        assert_eq!(got, vec![("00".into(), 2), ("01".into(), 1), ("10".into(), 1)]);
        assert_eq!(nb.degree, BigUint::from(4u32));
        assert_eq!(nb.self_loops, BigUint::from(2u32));
    }

    #[test]
    fn ghz_neighbors_are_self_loops() {
        let h = generators::ghz_chain(2).unwrap();
        let nb = neighbors(&h, &bs("00")).unwrap();
        assert_eq!(nb.entries.len(), 1);
        assert_eq!(nb.entries[0].y, bs("00"));
        assert_eq!(nb.entries[0].multiplicity, BigUint::from(24u32));
        let bad = neighbors(&h, &bs("01")).unwrap();
        assert!(bad.entries.is_empty());
        assert!(bad.degree.is_zero());
    }

    #[test]
    fn badness_examples() {
        let ghz = generators::ghz_chain(2).unwrap();
        assert!(is_bad(&ghz, &bs("01")).unwrap());
        assert!(!is_bad(&ghz, &bs("11")).unwrap());
        let cube = generators::hypercube(5).unwrap();
        assert!(Bitstring::all(5).all(|x| !is_bad(&cube, &x).unwrap()));
        assert!(is_bad(&cube, &bs("0")).is_err());
    }

    #[test]
    fn cut_examples() {
        let cube = generators::hypercube(2).unwrap();
        let whole = cut_stats(&cube, &set(&["00", "01", "10", "11"]), SelfLoops::Include).unwrap();
        assert!(whole.boundary.is_zero());
        assert!(whole.conductance.is_zero());

        let single = cut_stats(&cube, &set(&["00"]), SelfLoops::Include).unwrap();
        assert_eq!(single.boundary, BigUint::from(2u32));
        assert_eq!(single.volume, BigUint::from(4u32));
        assert_eq!(single.conductance, Ratio::new(BigUint::from(1u32), BigUint::from(2u32)));
        assert_eq!(single.conductance_f64(), 0.5);

        let no_loops = cut_stats(&cube, &set(&["00"]), SelfLoops::Exclude).unwrap();
        assert_eq!(no_loops.volume, BigUint::from(2u32));
        assert_eq!(no_loops.conductance_f64(), 1.0);

        let ghz = generators::ghz_chain(2).unwrap();
        let c = cut_stats(&ghz, &set(&["00"]), SelfLoops::Include).unwrap();
        assert!(c.boundary.is_zero());

        assert!(matches!(cut_stats(&ghz, &BTreeSet::new(), SelfLoops::Include), Err(Error::EmptySet)));
        assert!(matches!(
            cut_stats(&ghz, &set(&["00"]), SelfLoops::Exclude),
            Err(Error::ZeroDegree(_))
        ));
    }

    #[test]
    fn bad_vertex_with_no_coverage_has_zero_degree() {
        // "01" is covered by no term at all
        let ghz = generators::ghz_chain(2).unwrap();
        assert!(matches!(
            cut_stats(&ghz, &set(&["01"]), SelfLoops::Include),
            Err(Error::ZeroDegree(_))
        ));
    }

    #[test]
    fn component_examples() {
        let ghz = generators::ghz_chain(4).unwrap();
        let c = connected_component(&ghz, &bs("0000"), 1000).unwrap();
        assert_eq!(c.members, set(&["0000"]));
        assert!(!c.has_bad() && c.complete);

        let cube = generators::hypercube(3).unwrap();
        let c = connected_component(&cube, &bs("000"), 1000).unwrap();
        assert_eq!(c.members.len(), 8);
        assert!(!c.has_bad());

        let partial = connected_component(&cube, &bs("000"), 3).unwrap();
        assert!(!partial.complete);
        assert_eq!(partial.members.len(), 3);
    }

    #[test]
    fn frustrated_components_reach_bad_strings() {
        // a bad-free component would carry a zero-energy subset state
        for seed in 0..3 {
            let h = generators::frustrated(7, 2, 9, seed, 0.05).unwrap();
            for x in Bitstring::all(7) {
                let c = connected_component(&h, &x, 1 << 7).unwrap();
                assert!(c.has_bad(), "seed {seed}, start {x}");
            }
        }
    }

    #[test]
    fn degree_bound_formula() {
        let h = generators::ghz_chain(3).unwrap();
        // m = 2, k = 2: 2 * 4 * 24
        assert_eq!(degree_bound(&h), BigUint::from(192u32));
    }
}
