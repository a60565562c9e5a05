//! Ground-energy oracle and frustration diagnostics.
//!
//! Two routes to the ground energy: a full symmetric eigendecomposition of
//! the dense matrix, and power iteration on the entrywise non-negative
//! operator `I - H` applied matrix-free. Since the spectrum of `H` lies in
//! `[0, 1]`, the top eigenvalue `mu` of `I - H` gives `lambda_min = 1 - mu`.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{hamiltonian_matrix, normalize, Caps, Hamiltonian};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dense,
    Power,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Method::Dense),
            "power" => Ok(Method::Power),
            other => Err(Error::Parameter(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    /// Eigenvalues within this distance of the minimum count as ground.
    pub zero_tol: f64,
    /// Residual `|A v - mu v|` at which power iteration stops.
    pub power_tol: f64,
    pub max_iterations: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            zero_tol: 1e-9,
            power_tol: 1e-10,
            max_iterations: 500_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub ground_energy: f64,
    /// Non-negative unit groundstate.
    pub groundstate: Vec<f64>,
    pub gap: f64,
    pub method: Method,
    /// Eigen-residual of the returned groundstate.
    pub residual: f64,
    pub iterations: usize,
}

pub fn ground_energy(h: &Hamiltonian, method: Method, caps: &Caps) -> Result<Spectrum> {
    ground_energy_with(h, method, caps, &SpectralConfig::default())
}

pub fn ground_energy_with(
    h: &Hamiltonian,
    method: Method,
    caps: &Caps,
    cfg: &SpectralConfig,
) -> Result<Spectrum> {
    match method {
        Method::Dense => dense(h, caps, cfg),
        Method::Power => power(h, caps, cfg),
    }
}

/// Sorted eigenvalues and the eigenvector matrix of the dense Hamiltonian.
fn eigen(h: &Hamiltonian, caps: &Caps) -> Result<(Vec<f64>, nalgebra::DMatrix<f64>)> {
    let mat = hamiltonian_matrix(h, caps)?;
    let eig = SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = eig.eigenvectors.select_columns(&order);
    Ok((values, vectors))
}

/// Smallest eigenvalue only, skipping eigenvectors.
pub fn min_eigenvalue(h: &Hamiltonian, caps: &Caps) -> Result<f64> {
    let mat = hamiltonian_matrix(h, caps)?;
    let vals = mat.symmetric_eigenvalues();
    Ok(vals.iter().copied().fold(f64::INFINITY, f64::min).max(0.0))
}

fn dense(h: &Hamiltonian, caps: &Caps, cfg: &SpectralConfig) -> Result<Spectrum> {
    let (values, vectors) = eigen(h, caps)?;
    let lambda0 = values[0];
    let rank = values.iter().take_while(|&&v| v <= lambda0 + cfg.zero_tol).count();
    let gap = values.get(1).map_or(0.0, |&v| (v - lambda0).max(0.0));

    // P * 1 is a non-negative vector inside the groundspace
    let dim = h.dim();
    let mut psi = vec![0.0; dim];
    for j in 0..rank {
        let col = vectors.column(j);
        let overlap: f64 = col.iter().sum();
        for (p, c) in psi.iter_mut().zip(col.iter()) {
            *p += overlap * c;
        }
    }
    psi.iter_mut().for_each(|a| *a = a.max(0.0));
    if normalize(&mut psi) == 0.0 {
        // all ground vectors orthogonal to the all-ones vector cannot happen
        // for a stoquastic matrix; fall back to the first eigenvector
        psi = vectors.column(0).iter().map(|a| a.abs()).collect();
        normalize(&mut psi);
    }
    let residual = residual(h, &psi, lambda0);
    Ok(Spectrum {
        ground_energy: lambda0.max(0.0),
        groundstate: psi,
        gap,
        method: Method::Dense,
        residual,
        iterations: 0,
    })
}

fn residual(h: &Hamiltonian, psi: &[f64], lambda: f64) -> f64 {
    let mut hv = vec![0.0; psi.len()];
    h.apply(psi, &mut hv);
    hv.iter()
        .zip(psi)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `out = (I - H) v`.
fn apply_shifted(h: &Hamiltonian, v: &[f64], out: &mut [f64]) {
    h.apply(v, out);
    for (o, a) in out.iter_mut().zip(v) {
        *o = a - *o;
    }
}

struct PowerResult {
    mu: f64,
    vector: Vec<f64>,
    residual: f64,
    iterations: usize,
    converged: bool,
}

/// Power iteration for the top eigenpair of `I - H`, optionally restricted to
/// the orthogonal complement of `deflate`.
fn power_iterate(
    h: &Hamiltonian,
    start: Vec<f64>,
    deflate: Option<&[f64]>,
    tol: f64,
    max_iterations: usize,
) -> PowerResult {
    let project = |v: &mut [f64]| {
        if let Some(d) = deflate {
            let c: f64 = v.iter().zip(d).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(d).for_each(|(a, b)| *a -= c * b);
        }
    };
    let mut v = start;
    project(&mut v);
    normalize(&mut v);
    let mut w = vec![0.0; v.len()];
    let mut mu = 0.0;
    let mut res = f64::INFINITY;
    for it in 1..=max_iterations {
        apply_shifted(h, &v, &mut w);
        project(&mut w);
        mu = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        res = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - mu * b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = normalize(&mut w);
        if norm == 0.0 {
            return PowerResult {
                mu: 0.0,
                vector: v,
                residual: 0.0,
                iterations: it,
                converged: true,
            };
        }
        std::mem::swap(&mut v, &mut w);
        if res < tol {
            return PowerResult {
                mu,
                vector: v,
                residual: res,
                iterations: it,
                converged: true,
            };
        }
    }
    PowerResult {
        mu,
        vector: v,
        residual: res,
        iterations: max_iterations,
        converged: false,
    }
}

fn power(h: &Hamiltonian, caps: &Caps, cfg: &SpectralConfig) -> Result<Spectrum> {
    if h.n() > caps.power_qubits {
        return Err(Error::Capacity {
            what: "power iteration",
            requested: h.n(),
            cap: caps.power_qubits,
        });
    }
    let dim = h.dim();
    let top = power_iterate(h, vec![1.0; dim], None, cfg.power_tol, cfg.max_iterations);
    if !top.converged {
        return Err(Error::Convergence {
            iterations: top.iterations,
            residual: top.residual,
        });
    }
    let mut psi = top.vector;
    psi.iter_mut().for_each(|a| *a = a.max(0.0));
    normalize(&mut psi);

    let gap = if dim > 1 {
        // deterministic start with no special alignment to the ground vector
        let start: Vec<f64> = (0..dim)
            .map(|x| 1.0 + ((x as f64 * 0.618_033_988_75).fract() - 0.5))
            .collect();
        let second = power_iterate(h, start, Some(&psi), cfg.power_tol.max(1e-9), cfg.max_iterations);
        (top.mu - second.mu).max(0.0)
    } else {
        0.0
    };

    Ok(Spectrum {
        ground_energy: (1.0 - top.mu).max(0.0),
        groundstate: psi,
        gap,
        method: Method::Power,
        residual: top.residual,
        iterations: top.iterations,
    })
}

/// `<psi|H|psi>` for a unit vector `psi`.
pub fn frustration(h: &Hamiltonian, psi: &[f64]) -> Result<f64> {
    if psi.len() != h.dim() {
        return Err(Error::LengthMismatch {
            expected: h.dim(),
            got: psi.len(),
        });
    }
    let norm = psi.iter().map(|a| a * a).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(norm));
    }
    Ok(h.expectation(psi).clamp(0.0, 1.0))
}

/// Non-negative orthonormal vectors spanning the groundspace, one per
/// connected component of the support graph of the groundspace projector.
pub fn groundspace_decomposition(h: &Hamiltonian, caps: &Caps) -> Result<Vec<Vec<f64>>> {
    groundspace_decomposition_with(h, caps, &SpectralConfig::default())
}

pub fn groundspace_decomposition_with(
    h: &Hamiltonian,
    caps: &Caps,
    cfg: &SpectralConfig,
) -> Result<Vec<Vec<f64>>> {
    let (values, vectors) = eigen(h, caps)?;
    let lambda0 = values[0];
    let rank = values.iter().take_while(|&&v| v <= lambda0 + cfg.zero_tol).count();
    let dim = h.dim();
    let ground = vectors.columns(0, rank);
    let entry = |x: usize, y: usize| -> f64 { ground.row(x).dot(&ground.row(y)) };

    let support: Vec<usize> = (0..dim).filter(|&x| entry(x, x) > cfg.zero_tol).collect();
    let mut parent: Vec<usize> = (0..support.len()).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    for a in 0..support.len() {
        for b in a + 1..support.len() {
            if entry(support[a], support[b]).abs() > cfg.zero_tol {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
    }

    // P * 1 restricted to each component
    let ones_overlap: Vec<f64> = (0..rank).map(|j| ground.column(j).sum()).collect();
    let p_one = |x: usize| -> f64 { (0..rank).map(|j| ground[(x, j)] * ones_overlap[j]).sum() };
    let mut roots: Vec<usize> = Vec::new();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for a in 0..support.len() {
        let r = find(&mut parent, a);
        let slot = match roots.iter().position(|&q| q == r) {
            Some(s) => s,
            None => {
                roots.push(r);
                out.push(vec![0.0; dim]);
                roots.len() - 1
            }
        };
        out[slot][support[a]] = p_one(support[a]).max(0.0);
    }
    for (c, v) in out.iter_mut().enumerate() {
        if normalize(v) == 0.0 {
            return Err(Error::Decomposition(format!("component {c} has no weight on P*1")));
        }
    }

    for (c, v) in out.iter().enumerate() {
        // must lie in the groundspace
        let coeffs: Vec<f64> = (0..rank).map(|j| ground.column(j).dot(&crate::instance::to_dvector(v))).collect();
        let in_space: f64 = coeffs.iter().map(|a| a * a).sum();
        if (in_space - 1.0).abs() > 1e-6 {
            return Err(Error::Decomposition(format!(
                "component {c} leaves the groundspace (captured weight {in_space:.6})"
            )));
        }
    }
    for a in 0..out.len() {
        for b in a + 1..out.len() {
            let ip: f64 = out[a].iter().zip(&out[b]).map(|(x, y)| x * y).sum();
            if ip.abs() > 1e-9 {
                return Err(Error::Decomposition(format!("vectors {a} and {b} overlap by {ip:.3e}")));
            }
        }
    }
    if out.len() != rank {
        return Err(Error::Decomposition(format!(
            "{} components for a groundspace of dimension {rank}",
            out.len()
        )));
    }
    Ok(out)
}
