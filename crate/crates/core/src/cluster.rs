//! Truncated cluster expansion of `e^{θH}` and the Schatten-norm squaring
//! trick for low temperatures.
//!
//! Terms `i, j` are adjacent when their supports share a site. The weight of a
//! connected cluster `S` is fixed by requiring, for every set of terms `S`,
//!
//! ```text
//! e^{θ H_S} = Σ_{T ⊆ S} Π_{C component of T} f(C)
//! ```
//!
//! which is solved by Möbius inversion, `f(S) = Σ_{U⊆S} (−1)^{|S∖U|} e^{θH_U}`.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::model::ChainHamiltonian;
use crate::mpo::Mpo;
use crate::oracle::{self, DenseGuard, DenseOperator, NormKind};

/// Clusters are bitmasks over term indices.
const MAX_TERMS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    #[serde(rename = "L")]
    pub big_l: usize,
    pub theta: C64,
    #[serde(rename = "M")]
    pub m: usize,
    pub x: f64,
}

#[derive(Clone, Debug)]
pub struct ClusterWeight {
    /// Term indices, ascending.
    pub cluster: Vec<usize>,
    pub support: Interval,
    pub weight: DenseOperator,
}

fn check_size(h: &ChainHamiltonian) -> Result<()> {
    if h.terms().len() > MAX_TERMS {
        return Err(Error::invalid(
            "terms",
            format!("cluster expansion supports at most {MAX_TERMS} terms, got {}", h.terms().len()),
        ));
    }
    Ok(())
}

/// `adj[i]` has bit `j` set when terms `i` and `j` share a site (and bit `i`).
fn adjacency(h: &ChainHamiltonian) -> Vec<u64> {
    let t = h.terms();
    (0..t.len())
        .map(|i| {
            (0..t.len())
                .filter(|&j| t[i].support().overlaps(&t[j].support()))
                .fold(0u64, |m, j| m | (1 << j))
        })
        .collect()
}

fn bits(mask: u64) -> Vec<usize> {
    (0..MAX_TERMS).filter(|&i| mask >> i & 1 == 1).collect()
}

fn neighbours(adj: &[u64], mask: u64) -> u64 {
    bits(mask).into_iter().fold(0, |m, i| m | adj[i])
}

fn support_of(h: &ChainHamiltonian, mask: u64) -> Interval {
    bits(mask)
        .into_iter()
        .fold(Interval::empty(), |acc, i| acc.hull(&h.terms()[i].support()))
}

fn is_connected(adj: &[u64], mask: u64) -> bool {
    if mask == 0 {
        return false;
    }
    let mut seen = 1u64 << mask.trailing_zeros();
    loop {
        let grown = neighbours(adj, seen) & mask;
        if grown == seen {
            return seen == mask;
        }
        seen = grown;
    }
}

fn connected_masks(adj: &[u64], max_size: usize) -> Vec<u64> {
    let mut all = BTreeSet::new();
    let mut layer: BTreeSet<u64> = (0..adj.len()).map(|i| 1u64 << i).collect();
    for size in 1..=max_size.min(adj.len()) {
        all.extend(layer.iter().copied());
        if size == max_size {
            break;
        }
        let mut next = BTreeSet::new();
        for &c in &layer {
            let frontier = neighbours(adj, c) & !c;
            for j in bits(frontier) {
                next.insert(c | (1 << j));
            }
        }
        layer = next;
    }
    let mut v: Vec<u64> = all.into_iter().collect();
    v.sort_by_key(|&m| (m.count_ones(), bits(m)));
    v
}

/// Every connected set of at most `max_size` terms, ordered by size then
/// lexicographically.
pub fn connected_clusters(h: &ChainHamiltonian, max_size: usize) -> Result<Vec<Vec<usize>>> {
    if max_size < 1 {
        return Err(Error::invalid("max_size", "must be at least 1"));
    }
    check_size(h)?;
    Ok(connected_masks(&adjacency(h), max_size)
        .into_iter()
        .map(bits)
        .collect())
}

/// `H_U` on its own support hull.
fn dense_part(h: &ChainHamiltonian, mask: u64) -> Result<DenseOperator> {
    let w = support_of(h, mask);
    let mut acc = DenseOperator::zeros(w);
    for i in bits(mask) {
        acc.add_embedded(&h.terms()[i].to_dense_window())?;
    }
    acc.set_hermitian_hint(true);
    Ok(acc)
}

fn submasks(mask: u64) -> impl Iterator<Item = u64> {
    let mut sub = mask;
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let out = sub;
        if sub == 0 {
            done = true;
        } else {
            sub = (sub - 1) & mask;
        }
        Some(out)
    })
}

/// `e^{θ H_U}` for every subset `U` of the given clusters.
struct ExpCache(BTreeMap<u64, DenseOperator>);

impl ExpCache {
    fn build(h: &ChainHamiltonian, clusters: &[u64], theta: C64, guard: DenseGuard) -> Result<Self> {
        let needed: BTreeSet<u64> = clusters.iter().flat_map(|&c| submasks(c)).collect();
        let needed: Vec<u64> = needed.into_iter().collect();
        let ops = needed
            .par_iter()
            .map(|&u| {
                if u == 0 {
                    Ok(DenseOperator::identity(Interval::empty()))
                } else {
                    oracle::expm(&dense_part(h, u)?, theta, guard)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ExpCache(needed.into_iter().zip(ops).collect()))
    }

    fn weight(&self, h: &ChainHamiltonian, mask: u64) -> Result<DenseOperator> {
        let w = support_of(h, mask);
        let n = mask.count_ones();
        let mut acc = DenseOperator::zeros(w);
        for u in submasks(mask) {
            let e = &self.0[&u];
            let sign = if (n - u.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
            acc.add_embedded(&e.scaled(C64::new(sign, 0.0)))?;
        }
        acc.set_hermitian_hint(self.0[&mask].hermitian_hint());
        Ok(acc)
    }
}

pub fn cluster_weight(
    h: &ChainHamiltonian,
    cluster: &[usize],
    theta: C64,
    guard: DenseGuard,
) -> Result<ClusterWeight> {
    check_size(h)?;
    let k = h.terms().len();
    let mut mask = 0u64;
    for &i in cluster {
        if i >= k {
            return Err(Error::invalid("cluster", format!("term index {i} out of range")));
        }
        mask |= 1 << i;
    }
    if !is_connected(&adjacency(h), mask) {
        return Err(Error::invalid("cluster", "terms do not form a connected cluster"));
    }
    let support = support_of(h, mask);
    guard.check(support.len())?;
    let cache = ExpCache::build(h, &[mask], theta, guard)?;
    Ok(ClusterWeight {
        cluster: bits(mask),
        support,
        weight: cache.weight(h, mask)?,
    })
}

/// All weights of connected clusters with fewer than `big_l` terms.
fn weights_below(
    h: &ChainHamiltonian,
    theta: C64,
    big_l: usize,
    guard: DenseGuard,
) -> Result<Vec<(u64, DenseOperator)>> {
    if big_l <= 1 {
        return Ok(Vec::new());
    }
    let masks = connected_masks(&adjacency(h), big_l - 1);
    for &m in &masks {
        guard.check(support_of(h, m).len())?;
    }
    let cache = ExpCache::build(h, &masks, theta, guard)?;
    let ws = masks
        .par_iter()
        .map(|&m| cache.weight(h, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(masks.into_iter().zip(ws).collect())
}

/// `Σ_F Π_{C∈F} f(C)` over families `F` of pairwise non-adjacent connected
/// clusters, each with fewer than `big_l` terms. `big_l > K` gives `e^{θH}`.
pub fn truncated_exp(
    h: &ChainHamiltonian,
    theta: C64,
    big_l: usize,
    guard: DenseGuard,
) -> Result<DenseOperator> {
    if big_l < 1 {
        return Err(Error::invalid("L", "must be at least 1"));
    }
    check_size(h)?;
    guard.check(h.n_sites())?;
    let chain = Interval::chain(h.n_sites());
    let k = h.terms().len();
    let adj = adjacency(h);
    let weights = weights_below(h, theta, big_l, guard)?;
    let mut by_min: Vec<Vec<(u64, &DenseOperator)>> = vec![Vec::new(); k];
    for (m, w) in &weights {
        by_min[m.trailing_zeros() as usize].push((*m, w));
    }

    struct Walk<'a> {
        k: usize,
        adj: &'a [u64],
        by_min: &'a [Vec<(u64, &'a DenseOperator)>],
        acc: DenseOperator,
    }
    impl Walk<'_> {
        fn go(&mut self, i: usize, blocked: u64, current: &DenseOperator) -> Result<()> {
            if i == self.k {
                return self.acc.add_embedded(current);
            }
            self.go(i + 1, blocked, current)?;
            if blocked >> i & 1 == 1 {
                return Ok(());
            }
            for &(m, w) in &self.by_min[i] {
                if m & blocked != 0 {
                    continue;
                }
                let next = current.matmul(w)?;
                self.go(i + 1, blocked | neighbours(self.adj, m), &next)?;
            }
            Ok(())
        }
    }

    let mut walk = Walk {
        k,
        adj: &adj,
        by_min: &by_min,
        acc: DenseOperator::zeros(chain),
    };
    walk.go(0, 0, &DenseOperator::identity(Interval::empty()))?;
    let mut out = walk.acc;
    out.set_hermitian_hint(theta.im == 0.0);
    Ok(out)
}

/// MPO form of [`truncated_exp`].
pub fn truncated_exp_mpo(
    h: &ChainHamiltonian,
    theta: C64,
    big_l: usize,
    tol: f64,
    guard: DenseGuard,
) -> Result<Mpo> {
    let d = truncated_exp(h, theta, big_l, guard)?;
    Mpo::from_dense_window(&d, h.n_sites(), tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MolnarReport {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "L")]
    pub big_l: usize,
    /// `‖e^{−βH/2M} − ρ̃‖_{2M} / ‖e^{−βH/2M}‖_{2M}`.
    pub premise_rel_2m: f64,
    /// `ε` with `premise = ε/M`.
    pub eps: f64,
    /// `‖e^{−βH} − (ρ̃†ρ̃)^M‖₁ / ‖e^{−βH}‖₁`.
    pub conclusion_rel_1: f64,
    /// `(1 + premise)^{2M} − 1`, from Hölder's inequality on the `2M` factors.
    pub holder_bound: f64,
    /// The conclusion as stated with the premise: `ε/M`.
    pub printed_bound: f64,
    pub printed_bound_holds: bool,
    pub holder_bound_holds: bool,
}

/// `(ρ̃†ρ̃)^M` with `ρ̃ = truncated_exp(H, −β/2M, L)`, together with the
/// premise and conclusion errors against the exact exponentials.
pub fn molnar_square(
    h: &ChainHamiltonian,
    beta: f64,
    m: usize,
    big_l: usize,
    guard: DenseGuard,
) -> Result<(DenseOperator, MolnarReport)> {
    if m < 1 {
        return Err(Error::invalid("M", "must be at least 1"));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::invalid("beta", format!("must be finite and ≥ 0, got {beta}")));
    }
    let theta = C64::new(-beta / (2.0 * m as f64), 0.0);
    let rho = truncated_exp(h, theta, big_l, guard)?;
    let chain = Interval::chain(h.n_sites());
    let hd = h.to_dense(guard)?;
    let exact_factor = oracle::expm(&hd, theta, guard)?;
    let exact = oracle::expm(&hd, C64::new(-beta, 0.0), guard)?;

    let sq = rho.adjoint().matmul(&rho)?;
    let mut power = DenseOperator::identity(chain);
    for _ in 0..m {
        power = power.matmul(&sq)?;
    }
    power.set_hermitian_hint(true);

    let p = 2 * m as u32;
    let premise = oracle::norm(&exact_factor.sub(&rho)?, NormKind::Schatten(p))?
        / oracle::norm(&exact_factor, NormKind::Schatten(p))?;
    let conclusion = oracle::trace_norm_distance(&exact, &power)? / oracle::norm(&exact, NormKind::Trace)?;
    let holder = (1.0 + premise).powi(p as i32) - 1.0;
    // Slack for rounding in the norms themselves.
    let slack = 1e-12;
    let report = MolnarReport {
        m,
        big_l,
        premise_rel_2m: premise,
        eps: premise * m as f64,
        conclusion_rel_1: conclusion,
        holder_bound: holder,
        printed_bound: premise,
        printed_bound_holds: conclusion <= premise + slack,
        holder_bound_holds: conclusion <= holder + slack,
    };
    Ok((power, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub beta: f64,
    #[serde(rename = "L")]
    pub big_l: usize,
    #[serde(rename = "K")]
    pub big_k: usize,
    pub x: f64,
    /// `exp(K x^L/(1−x)) − 1`, infinite when `x ≥ 1`.
    pub bound: f64,
    /// `‖e^{−βH} − ρ̃‖₁ / ‖e^{−βH}‖₁`.
    pub measured_error_1norm: f64,
    pub bound_holds: bool,
    #[serde(rename = "premise_2M_error")]
    pub premise_2m_error: f64,
    pub molnar: MolnarReport,
}

/// Truncation error at `β` against the cluster bound, plus the squaring
/// report at `M`.
pub fn cluster_report(
    h: &ChainHamiltonian,
    beta: f64,
    big_l: usize,
    m: usize,
    guard: DenseGuard,
) -> Result<ClusterReport> {
    let g = h.geometry();
    let x = bounds::cluster_x(beta, g.gamma, g.z, g.h);
    let bound = bounds::cluster_error_bound(g.k_terms as f64, big_l as f64, x);
    let approx = truncated_exp(h, C64::new(-beta, 0.0), big_l, guard)?;
    let exact = oracle::expm(&h.to_dense(guard)?, C64::new(-beta, 0.0), guard)?;
    let measured = oracle::trace_norm_distance(&exact, &approx)? / oracle::norm(&exact, NormKind::Trace)?;
    let (_, molnar) = molnar_square(h, beta, m, big_l, guard)?;
    Ok(ClusterReport {
        beta,
        big_l,
        big_k: g.k_terms,
        x,
        bound,
        measured_error_1norm: measured,
        bound_holds: measured <= bound,
        premise_2m_error: molnar.premise_rel_2m,
        molnar,
    })
}
