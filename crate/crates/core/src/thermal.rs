//! Locally accurate thermal MPOs: the uniform average over all `l0` shifts of
//! tensor products of block Gibbs states.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::model::ChainHamiltonian;
use crate::mpo::{CompressionReport, Mpo};
use crate::oracle::{self, DenseGuard, DenseOperator};

/// The shift-`p` partition of `[0, N)` into blocks of length `l0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub l0: usize,
    pub p: usize,
    pub blocks: Vec<Interval>,
}

impl Partition {
    /// The block containing `site`.
    pub fn block_of(&self, site: usize) -> Option<Interval> {
        self.blocks.iter().copied().find(|b| b.contains_site(site))
    }
}

/// First block `[0, p−1]` when `p > 0`, then blocks of length `l0`, the last
/// one clipped at the chain end.
pub fn blocks_for(n: usize, l0: usize, p: usize) -> Result<Partition> {
    if l0 < 1 || l0 > n {
        return Err(Error::invalid("l0", format!("need 1 ≤ l0 ≤ N = {n}, got {l0}")));
    }
    if p >= l0 {
        return Err(Error::invalid("p", format!("need 0 ≤ p < l0 = {l0}, got {p}")));
    }
    let mut blocks = Vec::new();
    if p > 0 {
        blocks.push(Interval::new(0, p - 1));
    }
    let mut start = p;
    while start < n {
        let end = (start + l0).min(n);
        blocks.push(Interval::with_len(start, end - start));
        start = end;
    }
    Ok(Partition { l0, p, blocks })
}

/// Trace-one Gibbs state of the terms inside `block`, as an MPO on the
/// block's own sites (relabelled from 0).
pub fn block_gibbs_mpo(
    h: &ChainHamiltonian,
    block: Interval,
    beta: f64,
    tol: f64,
    guard: DenseGuard,
) -> Result<Mpo> {
    if block.is_empty() || block.end() > h.n_sites() {
        return Err(Error::invalid("block", format!("{block} is not a block of the chain")));
    }
    guard.check(block.len())?;
    if beta == 0.0 {
        let half = C64::new(0.5f64.powi(block.len() as i32), 0.0);
        return Ok(Mpo::identity(block.len()).scaled(half));
    }
    let rho = oracle::gibbs_window(h, block, beta, guard)?;
    let local = DenseOperator::new(Interval::chain(block.len()), rho.into_data())?;
    let m = Mpo::from_dense_window(&local, block.len(), tol)?;
    let tr = m.trace();
    Ok(m.scaled(C64::new(1.0, 0.0) / tr))
}

/// `⊗ᵢ` block Gibbs states of the shift-`p` partition.
pub fn partition_state(
    h: &ChainHamiltonian,
    beta: f64,
    l0: usize,
    p: usize,
    tol: f64,
    guard: DenseGuard,
) -> Result<Mpo> {
    let part = blocks_for(h.n_sites(), l0, p)?;
    let blocks = part
        .blocks
        .iter()
        .map(|&b| block_gibbs_mpo(h, b, beta, tol, guard))
        .collect::<Result<Vec<_>>>()?;
    Mpo::concat(&blocks)
}

#[derive(Clone, Debug)]
pub struct ThermalLocalMpo {
    pub mpo: Mpo,
    pub beta: f64,
    pub l0: usize,
    pub tol: f64,
    /// Largest bond dimension among the block Gibbs MPOs.
    pub per_block_bond: usize,
    /// Largest bond dimension of the direct sum before the final compression.
    pub bond_before_compression: usize,
    pub compression: CompressionReport,
}

/// `ρ̃ = (1/l0) Σ_p ⊗_blocks ρ_block`, summed in ascending `p` and compressed
/// once at `tol / 10`.
pub fn build(
    h: &ChainHamiltonian,
    beta: f64,
    l0: usize,
    tol: f64,
    guard: DenseGuard,
) -> Result<ThermalLocalMpo> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::invalid("beta", format!("must be finite and ≥ 0, got {beta}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("must be positive, got {tol}")));
    }
    let n = h.n_sites();
    if l0 < 1 || l0 > n {
        return Err(Error::invalid("l0", format!("need 1 ≤ l0 ≤ N = {n}, got {l0}")));
    }
    guard.check(l0)?;
    let states = (0..l0)
        .into_par_iter()
        .map(|p| partition_state(h, beta, l0, p, tol, guard))
        .collect::<Result<Vec<_>>>()?;
    let per_block_bond = states.iter().map(Mpo::max_bond).max().unwrap_or(1);
    let w = C64::new(1.0 / l0 as f64, 0.0);
    let mut acc = states[0].scaled(w);
    for s in &states[1..] {
        acc = Mpo::add(&acc, s, C64::new(1.0, 0.0), w)?;
    }
    let bond_before_compression = acc.max_bond();
    let (mpo, compression) = acc.compress(tol / 10.0, None)?;
    let tr = mpo.trace();
    let mpo = mpo.scaled(C64::new(1.0, 0.0) / tr);
    Ok(ThermalLocalMpo {
        mpo,
        beta,
        l0,
        tol,
        per_block_bond,
        bond_before_compression,
        compression,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub l0: usize,
    /// Worst `‖Tr_out ρ − Tr_out ρ̃‖₁` over all width-`k` windows.
    pub max_error: f64,
    /// `(window start, error)` for every window.
    pub per_window: Vec<(usize, f64)>,
    /// Largest bond of the final MPO.
    pub bond: usize,
    pub per_block_bond: usize,
    pub discarded_weight: f64,
}

/// Marginal errors of [`build`] against the exact Gibbs state for each `l0`,
/// sorted by `l0`.
pub fn marginal_error_profile(
    h: &ChainHamiltonian,
    beta: f64,
    l0_list: &[usize],
    k: usize,
    tol: f64,
    guard: DenseGuard,
) -> Result<Vec<ProfileRow>> {
    let n = h.n_sites();
    if k < 1 || k > n {
        return Err(Error::invalid("k", format!("need 1 ≤ k ≤ N = {n}, got {k}")));
    }
    let rho = oracle::gibbs(h, beta, guard)?;
    let exact: Vec<DenseOperator> = (0..=n - k)
        .map(|x| oracle::partial_trace(&rho, Interval::with_len(x, k)))
        .collect::<Result<_>>()?;
    let mut l0s = l0_list.to_vec();
    l0s.sort_unstable();
    l0s.dedup();
    let mut rows = Vec::with_capacity(l0s.len());
    for l0 in l0s {
        let approx = build(h, beta, l0, tol, guard)?;
        let per_window = exact
            .iter()
            .enumerate()
            .map(|(x, ex)| {
                let m = approx.mpo.local_marginal(Interval::with_len(x, k), guard)?;
                Ok((x, oracle::trace_norm_distance(ex, &m)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let max_error = per_window.iter().map(|&(_, e)| e).fold(0.0, f64::max);
        rows.push(ProfileRow {
            l0,
            max_error,
            per_window,
            bond: approx.mpo.max_bond(),
            per_block_bond: approx.per_block_bond,
            discarded_weight: approx.compression.discarded_weight,
        });
    }
    Ok(rows)
}
