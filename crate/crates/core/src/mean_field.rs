//! Mean-field approximation of the likelihood.
//!
//! The set function `I ↦ ρ_{I→O}` is replaced by the product form
//! `ρ̂_{I→O} = ∏_{j∈O∖I} 1/b_j`. Plugging it into the forward recursion gives
//! one linear equation in `b` per subset `I ⊆ O`,
//!
//! ```text
//! vol(I, Iᶜ) = Σ_{j∈O∖I} vol(I, j) · b_j
//! ```
//!
//! which is solved in the least-squares sense. The normal equations collapse
//! to a `|O|×|O|` system `S b̂ = z` with, for `u = A_OO·1` and `v = A_OOᶜ·1`,
//!
//! ```text
//! S = Ξ(A_OO + A_OO² − A_OO ⊙ (u1ᵀ + 1uᵀ) + uuᵀ)
//! z = (1ᵀu + 2·1ᵀv)·u − 2·v ⊙ u + 2·(A_OO·v + u)
//! ```
//!
//! where `Ξ` doubles the diagonal. This is `QᵀQ` and `Qᵀr` divided by
//! `2^{|O|−4}`; the common scale does not affect `b̂`. Since
//! `ρ̂_{i→O} ∝ b̂_i`, candidates are ranked by decreasing `b̂`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::EstimationError;
use crate::graph::{Graph, InducedSubgraph, NodeSet};
use crate::ranking::{Order, Ranking};

/// Snapshots up to this size get a dense `S` and a direct factorization.
pub const DENSE_LIMIT: usize = 2000;
/// Below this size `S` and `z` come straight from the enumerated `Q` and `r`.
pub const DIRECT_LIMIT: usize = 3;
/// Largest snapshot accepted by [`brute_force_normal_equations`].
pub const BRUTE_FORCE_CAP: usize = 12;
/// Relative residual `‖Sb̂ − z‖ / ‖z‖` a solve must reach to count as exact.
pub const RESIDUAL_RTOL: f64 = 1e-8;

/// The linear system `S b̂ = z` for one snapshot, indexed by snapshot position.
#[derive(Debug, Clone)]
pub struct MeanFieldSystem {
    pub snapshot: NodeSet,
    pub matrix: SystemMatrix,
    pub z: DVector<f64>,
    /// Degrees inside the snapshot, `u = A_OO·1`.
    pub u: Vec<f64>,
    /// Degrees towards the rest of the graph, `v = A_OOᶜ·1`.
    pub v: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum SystemMatrix {
    Dense(DMatrix<f64>),
    /// `S` kept as the sparse `A_OO` plus the rank-one `uuᵀ`, applied matrix-free.
    Structured(StructuredMatrix),
}

#[derive(Debug, Clone)]
pub struct StructuredMatrix {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    u: Vec<f64>,
}

impl StructuredMatrix {
    fn adjacency_times(&self, x: &[f64], out: &mut [f64]) {
        for (a, o) in out.iter_mut().enumerate() {
            *o = self.targets[self.offsets[a]..self.offsets[a + 1]]
                .iter()
                .map(|&b| x[b])
                .sum();
        }
    }

    /// `diag(S) = 2(u + u²)`.
    pub fn diagonal(&self) -> Vec<f64> {
        self.u.iter().map(|&u| 2.0 * (u + u * u)).collect()
    }

    /// `S·x` in `O(nnz(A_OO) + |O|)`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let k = x.len();
        let mut ax = vec![0.0; k];
        let mut aax = vec![0.0; k];
        let mut aux = vec![0.0; k];
        self.adjacency_times(x, &mut ax);
        self.adjacency_times(&ax, &mut aax);
        let ux: Vec<f64> = self.u.iter().zip(x).map(|(u, x)| u * x).collect();
        self.adjacency_times(&ux, &mut aux);
        let dot: f64 = self.u.iter().zip(x).map(|(u, x)| u * x).sum();
        (0..k)
            .map(|a| {
                let u = self.u[a];
                ax[a] + aax[a] - (u * ax[a] + aux[a]) + u * dot + (u + u * u) * x[a]
            })
            .collect()
    }
}

impl SystemMatrix {
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            SystemMatrix::Dense(m) => m * x,
            SystemMatrix::Structured(s) => DVector::from_vec(s.apply(x.as_slice())),
        }
    }

    /// Dense copy of `S`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            SystemMatrix::Dense(m) => m.clone(),
            SystemMatrix::Structured(s) => {
                let k = s.u.len();
                let mut m = DMatrix::zeros(k, k);
                let mut e = vec![0.0; k];
                for c in 0..k {
                    e[c] = 1.0;
                    for (r, val) in s.apply(&e).into_iter().enumerate() {
                        m[(r, c)] = val;
                    }
                    e[c] = 0.0;
                }
                m
            }
        }
    }

    /// Nonzero entries `(row, col, value)` of `S`, row-major.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let dense = self.to_dense();
        let mut out = Vec::new();
        for r in 0..dense.nrows() {
            for c in 0..dense.ncols() {
                if dense[(r, c)] != 0.0 {
                    out.push((r, c, dense[(r, c)]));
                }
            }
        }
        out
    }
}

pub fn build_system(graph: &Graph, snapshot: &NodeSet) -> Result<MeanFieldSystem, EstimationError> {
    build_system_with_limit(graph, snapshot, DENSE_LIMIT)
}

/// As [`build_system`], switching to the matrix-free form above `dense_limit`.
pub fn build_system_with_limit(
    graph: &Graph,
    snapshot: &NodeSet,
    dense_limit: usize,
) -> Result<MeanFieldSystem, EstimationError> {
    if snapshot.is_empty() {
        return Err(EstimationError::EmptySnapshot);
    }
    graph.check_set(snapshot)?;
    let local = InducedSubgraph::new(graph, snapshot);
    let k = local.len();
    let u: Vec<f64> = (0..k).map(|a| local.degree(a) as f64).collect();
    let v: Vec<f64> = (0..k)
        .map(|a| (graph.degree(local.node(a)) - local.degree(a)) as f64)
        .collect();

    if k <= DIRECT_LIMIT {
        let (s, z) = brute_force_normal_equations(graph, snapshot)?;
        let scale = 2f64.powi(k as i32 - 4);
        return Ok(MeanFieldSystem {
            snapshot: snapshot.clone(),
            matrix: SystemMatrix::Dense(s / scale),
            z: z / scale,
            u,
            v,
        });
    }

    let sum_u: f64 = u.iter().sum();
    let sum_v: f64 = v.iter().sum();
    let z = DVector::from_iterator(
        k,
        (0..k).map(|a| {
            let av: f64 = local.neighbors(a).iter().map(|&b| v[b]).sum();
            (sum_u + 2.0 * sum_v) * u[a] - 2.0 * v[a] * u[a] + 2.0 * (av + u[a])
        }),
    );

    let matrix = if k <= dense_limit {
        let mut s = DMatrix::from_fn(k, k, |a, b| u[a] * u[b]);
        for a in 0..k {
            for &b in local.neighbors(a) {
                s[(a, b)] += 1.0 - (u[a] + u[b]);
            }
        }
        // A_OO²: one count per two-path a – r – b through the snapshot
        for r in 0..k {
            let nbrs = local.neighbors(r);
            for &a in nbrs {
                for &b in nbrs {
                    s[(a, b)] += 1.0;
                }
            }
        }
        for a in 0..k {
            s[(a, a)] *= 2.0;
        }
        SystemMatrix::Dense(s)
    } else {
        let offsets = (0..=k)
            .scan(0, |acc, a| {
                let here = *acc;
                if a < k {
                    *acc += local.degree(a);
                }
                Some(here)
            })
            .collect();
        let targets = (0..k).flat_map(|a| local.neighbors(a).iter().copied()).collect();
        SystemMatrix::Structured(StructuredMatrix {
            offsets,
            targets,
            u: u.clone(),
        })
    };

    Ok(MeanFieldSystem {
        snapshot: snapshot.clone(),
        matrix,
        z,
        u,
        v,
    })
}

/// `S` and `z` from the entrywise degree and two-path expressions:
///
/// ```text
/// S_jj' = deg_{O∖j'}(j)·deg_{O∖j}(j') + vol⁽²⁾_{O∖{j,j'}}(j, j')     (j ≠ j')
/// S_jj  = 2·deg_O(j)·(deg_O(j) + 1)
/// z_j   = [vol(O∖j) + 2·vol((O∖j)ᶜ, O∖j)]·deg_O(j) + 2·vol(adj_O(j), (O∖j)ᶜ)
/// ```
///
/// Built from plain cut-volume queries; used to cross-check [`build_system`].
pub fn build_system_entrywise(
    graph: &Graph,
    snapshot: &NodeSet,
) -> Result<(DMatrix<f64>, DVector<f64>), EstimationError> {
    if snapshot.is_empty() {
        return Err(EstimationError::EmptySnapshot);
    }
    graph.check_set(snapshot)?;
    let members = snapshot.members();
    let k = members.len();
    let without = |drop: &[usize]| NodeSet::new(members.iter().copied().filter(|v| !drop.contains(v)));
    let complement = |set: &NodeSet| NodeSet::new((0..graph.node_count()).filter(|&v| !set.contains(v)));
    let one = NodeSet::singleton;

    let mut s = DMatrix::zeros(k, k);
    let mut z = DVector::zeros(k);
    for (a, &j) in members.iter().enumerate() {
        let deg_o = graph.cut_volume(snapshot, &one(j))? as f64;
        s[(a, a)] = 2.0 * deg_o * (deg_o + 1.0);
        for (b, &jp) in members.iter().enumerate() {
            if a == b {
                continue;
            }
            let left = graph.cut_volume(&without(&[jp]), &one(j))? as f64;
            let right = graph.cut_volume(&without(&[j]), &one(jp))? as f64;
            let paths = graph.two_path_volume(j, jp, &without(&[j, jp]))? as f64;
            s[(a, b)] = left * right + paths;
        }
        let rest = without(&[j]);
        let outside = complement(&rest);
        let inner = graph.cut_volume(&rest, &rest)? as f64;
        let leaving = graph.cut_volume(&outside, &rest)? as f64;
        let nbrs = NodeSet::new(graph.neighbors(j).iter().copied().filter(|&w| snapshot.contains(w)));
        let from_nbrs = graph.cut_volume(&nbrs, &outside)? as f64;
        z[a] = (inner + 2.0 * leaving) * deg_o + 2.0 * from_nbrs;
    }
    Ok((s, z))
}

/// `(QᵀQ, Qᵀr)` by enumerating every row `I ⊆ O`, with
/// `Q_{I,j} = 1{j∉I}·vol(I, j)` and `r_I = vol(I, Iᶜ)`.
pub fn brute_force_normal_equations(
    graph: &Graph,
    snapshot: &NodeSet,
) -> Result<(DMatrix<f64>, DVector<f64>), EstimationError> {
    graph.check_set(snapshot)?;
    let k = snapshot.len();
    if k > BRUTE_FORCE_CAP {
        return Err(EstimationError::TooLarge {
            size: k,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let mut qtq = DMatrix::zeros(k, k);
    let mut qtr = DVector::zeros(k);
    let mut row = vec![0.0; k];
    for mask in 0u64..1 << k {
        let infected = snapshot.subset_from_mask(mask);
        let r = graph.boundary_volume(&infected)? as f64;
        for (a, j) in snapshot.iter().enumerate() {
            row[a] = if infected.contains(j) {
                0.0
            } else {
                graph.cut_volume(&infected, &NodeSet::singleton(j))? as f64
            };
        }
        for a in 0..k {
            if row[a] == 0.0 {
                continue;
            }
            qtr[a] += row[a] * r;
            for b in 0..k {
                qtq[(a, b)] += row[a] * row[b];
            }
        }
    }
    Ok((qtq, qtr))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    Cholesky,
    /// Pseudo-inverse solution for singular or ill-conditioned `S`.
    MinimumNorm,
    ConjugateGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldSolution {
    pub snapshot: NodeSet,
    /// `b̂`, aligned with the snapshot members.
    pub b_hat: Vec<f64>,
    pub method: SolveMethod,
    /// `‖S b̂ − z‖ / ‖z‖` (absolute when `z = 0`).
    pub residual: f64,
    /// Set when `S` was singular or the residual check failed.
    pub degenerate: bool,
}

impl MeanFieldSystem {
    fn relative_residual(&self, b: &DVector<f64>) -> f64 {
        let r = (self.matrix.apply(b) - &self.z).norm();
        let scale = self.z.norm();
        if scale > 0.0 {
            r / scale
        } else {
            r
        }
    }

    pub fn solve(&self) -> MeanFieldSolution {
        let (b, method, singular) = match &self.matrix {
            SystemMatrix::Dense(s) => solve_dense(s, &self.z),
            SystemMatrix::Structured(s) => {
                let (b, converged) = conjugate_gradient(s, &self.z);
                (b, SolveMethod::ConjugateGradient, !converged)
            }
        };
        let residual = self.relative_residual(&b);
        MeanFieldSolution {
            snapshot: self.snapshot.clone(),
            b_hat: b.iter().copied().collect(),
            method,
            residual,
            degenerate: singular || residual > RESIDUAL_RTOL,
        }
    }
}

fn solve_dense(s: &DMatrix<f64>, z: &DVector<f64>) -> (DVector<f64>, SolveMethod, bool) {
    if let Some(chol) = s.clone().cholesky() {
        let b = chol.solve(z);
        let r = (s * &b - z).norm();
        if b.iter().all(|x| x.is_finite()) && r <= RESIDUAL_RTOL * z.norm().max(1.0) {
            return (b, SolveMethod::Cholesky, false);
        }
    }
    let svd = s.clone().svd(true, true);
    let eps = 1e-10 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    let b = svd.solve(z, eps).unwrap_or_else(|_| DVector::zeros(z.len()));
    (b, SolveMethod::MinimumNorm, true)
}

/// Jacobi-preconditioned conjugate gradient on the matrix-free `S`.
fn conjugate_gradient(s: &StructuredMatrix, z: &DVector<f64>) -> (DVector<f64>, bool) {
    let k = z.len();
    let diag: Vec<f64> = s.diagonal().into_iter().map(|d| if d > 0.0 { d } else { 1.0 }).collect();
    let z_norm = z.norm();
    let mut x = vec![0.0; k];
    if z_norm == 0.0 {
        return (DVector::zeros(k), true);
    }
    let mut r: Vec<f64> = z.iter().copied().collect();
    let mut p: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut rz: f64 = r.iter().zip(&p).map(|(a, b)| a * b).sum();
    let tol = 1e-12 * z_norm;
    for _ in 0..10 * k.max(100) {
        let sp = s.apply(&p);
        let curvature: f64 = p.iter().zip(&sp).map(|(a, b)| a * b).sum();
        if curvature <= 0.0 {
            break;
        }
        let alpha = rz / curvature;
        for i in 0..k {
            x[i] += alpha * p[i];
            r[i] -= alpha * sp[i];
        }
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= tol {
            return (DVector::from_vec(x), true);
        }
        let zr: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
        let rz_next: f64 = r.iter().zip(&zr).map(|(a, b)| a * b).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..k {
            p[i] = zr[i] + beta * p[i];
        }
    }
    let converged = (s.apply(&x).iter().zip(z.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sqrt()
        <= RESIDUAL_RTOL * z_norm;
    (DVector::from_vec(x), converged)
}

pub fn mfa_solve(graph: &Graph, snapshot: &NodeSet) -> Result<MeanFieldSolution, EstimationError> {
    Ok(build_system(graph, snapshot)?.solve())
}

/// Candidates by decreasing `b̂`; the top entry is the mean-field estimate.
pub fn mfa_rank(graph: &Graph, snapshot: &NodeSet) -> Result<Ranking, EstimationError> {
    let solution = mfa_solve(graph, snapshot)?;
    Ok(Ranking::from_scores(
        snapshot.iter().zip(solution.b_hat.iter().copied()),
        Order::Descending,
    ))
}
