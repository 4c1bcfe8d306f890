//! Conditional tensor map: one tensor network that, contracted with a Pauli
//! string `A` of window length at most `k`, returns the block evolution
//! `U A U†` of the partition whose block places `A` a fixed margin from its
//! left edge, and the identity everywhere else.
//!
//! The network is a finite automaton over control states. Reading left to
//! right, a path sits in `Before` until the chosen block starts, counts up the
//! left margin in `Left`, meets the first non-identity letter when the margin
//! is exhausted, counts down the rest of the block in `Right`, and finishes in
//! `After`. Inside the block each site carries the sandwich of the block
//! evolution MPO around the input letter, so the control bond also holds a
//! pair of evolution bonds. Exactly one path survives for any input string.

use std::collections::HashMap;

use ndarray::{Array2, Array4, Axis};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::linalg;
use crate::model::{ChainHamiltonian, PauliString};
use crate::mpo::Mpo;
use crate::oracle::{self, DenseGuard, DenseOperator, NormKind, Spectrum};
use crate::thermal::blocks_for;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Relative singular-value cutoff used while zipping the output together.
const ZIP_TOL: f64 = 1e-14;

/// Relative cutoff of the final sweep over the selected block, which removes
/// the rank carried by open evolution bonds before the block closes.
const SEGMENT_TOL: f64 = 1e-14;

/// Where a path stands relative to its block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    /// Left of the block, or anywhere on the identity path `p = 0`.
    Before,
    /// Inside the block, `s2` sites after its (possibly virtual) start.
    Left { s2: usize },
    /// Inside the block, `s1` block sites left including the current one.
    Right { s1: usize },
    /// Past the block end; only identity letters and outputs.
    After,
}

/// Control state on a bond. `p ≥ 1` selects the partition shifted by `p − 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ControlIndex {
    pub p: usize,
    pub phase: Phase,
}

/// Which input letters a transition accepts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Letters {
    Identity,
    NonIdentity,
    Any,
}

impl Letters {
    fn accepts(self, is_identity: bool) -> bool {
        match self {
            Letters::Identity => is_identity,
            Letters::NonIdentity => !is_identity,
            Letters::Any => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    /// Identity letter in, identity out.
    Pass,
    /// Sandwich of the input letter by the block evolution of partition `p`.
    Sandwich { p: usize, letters: Letters },
}

impl Action {
    fn accepts(self, is_identity: bool) -> bool {
        match self {
            Action::Pass => is_identity,
            Action::Sandwich { letters, .. } => letters.accepts(is_identity),
        }
    }
}

/// One nonzero block of a site tensor, between control states on the bonds
/// left and right of the site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub action: Action,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondMapBonds {
    /// Largest bond dimension over the block evolution MPOs.
    pub block_bond: usize,
    /// Largest bond of the full network before any input is contracted.
    pub network_bond: usize,
    /// `D_p² (l0 + k)³`.
    pub bound: usize,
}

#[derive(Clone, Debug)]
pub struct CondMap {
    pub n: usize,
    pub l0: usize,
    pub k: usize,
    pub t: f64,
    pub tol: f64,
    /// Left margin `⌊(l0 − k)/2⌋`.
    pub m_left: usize,
    /// `l0 − m_left`: the pivot site plus everything right of it in the block.
    pub m_right: usize,
    /// Control states on each of the `N + 1` bonds.
    pub bond_states: Vec<Vec<ControlIndex>>,
    /// Nonzero blocks of each site tensor.
    pub site_tensors: Vec<Vec<Transition>>,
    /// Block evolution MPOs on the full chain, entry `p − 1` for partition `p`.
    pub block_mpos: Vec<Mpo>,
    pub bonds: CondMapBonds,
}

fn margins(l0: usize, k: usize) -> (usize, usize) {
    let m_left = (l0 - k) / 2;
    (m_left, l0 - m_left)
}

fn check_params(n: usize, l0: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k", "window length must be at least 1"));
    }
    if k >= l0 || l0 > n {
        return Err(Error::invalid("l0", format!("need k < l0 ≤ N, got k={k}, l0={l0}, N={n}")));
    }
    Ok(())
}

/// `e^{−itH_B}` for the terms inside `block`, on the block's own sites.
fn block_unitary(h: &ChainHamiltonian, block: Interval, t: f64, guard: DenseGuard) -> Result<DenseOperator> {
    guard.check(block.len())?;
    let hb = h.restrict(block)?.to_dense_window(block, guard)?;
    let u = oracle::expm(&hb, C64::new(0.0, -t), guard)?;
    DenseOperator::new(Interval::chain(block.len()), u.into_data())
}

/// The block chosen for an input whose first non-identity letter is at `x`.
pub fn pivot_block(n: usize, l0: usize, k: usize, x: usize) -> Result<Interval> {
    check_params(n, l0, k)?;
    let (m_left, _) = margins(l0, k);
    let p = (x as i64 - m_left as i64).rem_euclid(l0 as i64) as usize;
    let part = blocks_for(n, l0, p)?;
    part.block_of(x)
        .ok_or_else(|| Error::invalid("site", format!("{x} outside chain of {n} sites")))
}

/// Dense block evolution `U A U†` on the block that places `A` at the left
/// margin. Windowed on that block; the identity string maps to itself.
pub fn reference_apply(
    h: &ChainHamiltonian,
    a: &PauliString,
    t: f64,
    l0: usize,
    guard: DenseGuard,
) -> Result<DenseOperator> {
    reference_apply_k(h, a, t, l0, a.window().len().max(1), guard)
}

/// As [`reference_apply`], with margins set by a window length `k` that may
/// exceed the input's own.
pub fn reference_apply_k(
    h: &ChainHamiltonian,
    a: &PauliString,
    t: f64,
    l0: usize,
    k: usize,
    guard: DenseGuard,
) -> Result<DenseOperator> {
    let n = h.n_sites();
    a.check_fits(n)?;
    if a.is_identity() {
        return Ok(a.to_dense_window());
    }
    let w = a.window();
    if w.len() > k || k >= l0 {
        return Err(Error::invalid(
            "observable",
            format!("need |window| ≤ k < l0, got window {w}, k = {k}, l0 = {l0}"),
        ));
    }
    let block = pivot_block(n, l0, k, w.start())?;
    let a_block = a.to_dense_window().embed(block)?;
    if t == 0.0 {
        return Ok(a_block);
    }
    let u = block_unitary(h, block, t, guard)?.into_data();
    let out = u.dot(a_block.data()).dot(&linalg::adjoint(&u));
    Ok(DenseOperator::from_parts(block, out, a_block.hermitian_hint()))
}

fn successors(s: ControlIndex, b: usize, n: usize, l0: usize, m_left: usize, m_right: usize) -> Vec<(ControlIndex, Action)> {
    let p = s.p;
    let stay = |phase| ControlIndex { p, phase };
    match s.phase {
        Phase::Before if p == 0 => vec![(s, Action::Pass)],
        Phase::Before => {
            let mut out = vec![(s, Action::Pass)];
            if b + 1 < n && (b + 1) % l0 == p - 1 {
                out.push((stay(Phase::Left { s2: 0 }), Action::Pass));
            }
            out
        }
        Phase::Left { s2 } if s2 < m_left => vec![(
            stay(Phase::Left { s2: s2 + 1 }),
            Action::Sandwich { p, letters: Letters::Identity },
        )],
        Phase::Left { .. } => {
            let next = if m_right > 1 { Phase::Right { s1: m_right - 1 } } else { Phase::After };
            vec![(stay(next), Action::Sandwich { p, letters: Letters::NonIdentity })]
        }
        Phase::Right { s1 } => {
            let next = if s1 > 1 { Phase::Right { s1: s1 - 1 } } else { Phase::After };
            vec![(stay(next), Action::Sandwich { p, letters: Letters::Any })]
        }
        Phase::After => vec![(s, Action::Pass)],
    }
}

fn is_final(s: ControlIndex) -> bool {
    match s.phase {
        Phase::Before => s.p == 0,
        Phase::Left { .. } => false,
        Phase::Right { .. } | Phase::After => true,
    }
}

/// Builds the network for window length `k` and block length `l0`. Block
/// evolutions are dense exponentials factorized with relative tolerance `tol`.
pub fn build_tensor_map(
    h: &ChainHamiltonian,
    t: f64,
    l0: usize,
    k: usize,
    tol: f64,
    guard: DenseGuard,
) -> Result<CondMap> {
    let n = h.n_sites();
    check_params(n, l0, k)?;
    guard.check(l0)?;
    let (m_left, m_right) = margins(l0, k);

    let block_mpos = (0..l0)
        .into_par_iter()
        .map(|shift| {
            let part = blocks_for(n, l0, shift)?;
            let parts = part
                .blocks
                .iter()
                .map(|&b| {
                    if t == 0.0 {
                        Ok(Mpo::identity(b.len()))
                    } else {
                        Mpo::from_dense_window(&block_unitary(h, b, t, guard)?, b.len(), tol)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Mpo::concat(&parts)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut initial: Vec<ControlIndex> = (0..=l0).map(|p| ControlIndex { p, phase: Phase::Before }).collect();
    for p in 1..=l0 {
        let s2 = (l0 - (p - 1)) % l0;
        if s2 <= m_left {
            initial.push(ControlIndex { p, phase: Phase::Left { s2 } });
        }
    }
    let mut bond_states = vec![initial];
    let mut site_tensors = Vec::with_capacity(n);
    for b in 0..n {
        let mut index: HashMap<ControlIndex, usize> = HashMap::new();
        let mut next = Vec::new();
        let mut rules = Vec::new();
        for (from, &s) in bond_states[b].iter().enumerate() {
            for (target, action) in successors(s, b, n, l0, m_left, m_right) {
                let to = *index.entry(target).or_insert_with(|| {
                    next.push(target);
                    next.len() - 1
                });
                rules.push(Transition { from, to, action });
            }
        }
        bond_states.push(next);
        site_tensors.push(rules);
    }

    let mut map = CondMap {
        n,
        l0,
        k,
        t,
        tol,
        m_left,
        m_right,
        bond_states,
        site_tensors,
        block_mpos,
        bonds: CondMapBonds { block_bond: 0, network_bond: 0, bound: 0 },
    };
    let block_bond = map.block_mpos.iter().map(Mpo::max_bond).max().unwrap_or(1);
    let network_bond = (0..=n)
        .map(|b| map.bond_states[b].iter().map(|&s| map.r_dim(s, b)).sum::<usize>())
        .max()
        .unwrap_or(1);
    map.bonds = CondMapBonds {
        block_bond,
        network_bond,
        bound: block_bond * block_bond * (l0 + k).pow(3),
    };
    Ok(map)
}

/// `(l, r, s, s′)` tensor from a matrix with rows `(l, s, s′)`.
fn tensor_from_rows(m: Array2<C64>, l: usize) -> Array4<C64> {
    let r = m.ncols();
    m.into_shape_with_order((l, 2, 2, r))
        .expect("row layout")
        .permuted_axes([0, 3, 1, 2])
        .as_standard_layout()
        .into_owned()
}

fn identity_tensor() -> Array4<C64> {
    let mut t = Array4::zeros((1, 1, 2, 2));
    t[[0, 0, 0, 0]] = ONE;
    t[[0, 0, 1, 1]] = ONE;
    t
}

/// Pushes a carry block `(χ, a·a′)` through the sandwich `W P W†` of one
/// site, returning `(χ, s, s′, c·c′)` flattened to rows `(χ, s, s′)`.
fn sandwich_step(carry: &Array2<C64>, w: &Array4<C64>, letter: &Array2<C64>) -> Array2<C64> {
    let chi = carry.nrows();
    let (dl, dr, _, _) = w.dim();
    let w = w.as_standard_layout();
    // Σ_a C[χ,a,a′] W[a,c,o,s]
    let c = carry
        .view()
        .into_shape_with_order((chi, dl, dl))
        .expect("carry layout")
        .permuted_axes([0, 2, 1])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((chi * dl, dl))
        .expect("contiguous");
    let wm = w.view().into_shape_with_order((dl, dr * 4)).expect("contiguous").to_owned();
    let y = c.dot(&wm); // (χ a′) × (c o s)
    // apply the letter on s
    let y = y
        .into_shape_with_order((chi * dl * dr * 2, 2))
        .expect("contiguous")
        .dot(letter); // (χ a′ c o) × s′
    // Σ_{a′,s′} Y[χ,a′,c,o,s′] conj W[a′,c′,o′,s′]
    let y = y
        .into_shape_with_order((chi, dl, dr, 2, 2))
        .expect("layout")
        .permuted_axes([0, 2, 3, 1, 4])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((chi * dr * 2, dl * 2))
        .expect("contiguous");
    let wc = w
        .view()
        .permuted_axes([0, 3, 1, 2])
        .mapv(|z| z.conj())
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((dl * 2, dr * 2))
        .expect("contiguous");
    let z = y.dot(&wc); // (χ c o) × (c′ o′)
    z.into_shape_with_order((chi, dr, 2, dr, 2))
        .expect("layout")
        .permuted_axes([0, 2, 4, 1, 3])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((chi * 4, dr * dr))
        .expect("contiguous")
}

impl CondMap {
    /// Size of the evolution-bond pair carried by control state `s` on bond `b`.
    pub fn r_dim(&self, s: ControlIndex, b: usize) -> usize {
        match s.phase {
            Phase::Before | Phase::After => 1,
            Phase::Left { .. } | Phase::Right { .. } => {
                let d = self.block_mpos[s.p - 1].bond_dims()[b];
                d * d
            }
        }
    }

    /// Control states on each bond that lie on a nonzero path for `a`.
    fn live_states(&self, a: &PauliString) -> Vec<Vec<bool>> {
        let n = self.n;
        let mut fwd: Vec<Vec<bool>> = self.bond_states.iter().map(|v| vec![false; v.len()]).collect();
        fwd[0].iter_mut().for_each(|x| *x = true);
        for b in 0..n {
            let id = a.letter_at(b).is_identity();
            for tr in &self.site_tensors[b] {
                if fwd[b][tr.from] && tr.action.accepts(id) {
                    fwd[b + 1][tr.to] = true;
                }
            }
        }
        let mut bwd: Vec<Vec<bool>> = self.bond_states.iter().map(|v| vec![false; v.len()]).collect();
        for (i, &s) in self.bond_states[n].iter().enumerate() {
            bwd[n][i] = is_final(s);
        }
        for b in (0..n).rev() {
            let id = a.letter_at(b).is_identity();
            for tr in &self.site_tensors[b] {
                if bwd[b + 1][tr.to] && tr.action.accepts(id) {
                    bwd[b][tr.from] = true;
                }
            }
        }
        fwd.iter()
            .zip(&bwd)
            .map(|(f, g)| f.iter().zip(g).map(|(&x, &y)| x && y).collect())
            .collect()
    }

    /// Contracts the network with `a` and returns the output operator.
    /// Sites outside the selected block get the exact identity tensor.
    pub fn apply(&self, a: &PauliString) -> Result<Mpo> {
        let n = self.n;
        a.check_fits(n)?;
        if a.window().len() > self.k {
            return Err(Error::invalid(
                "observable",
                format!("window {} is wider than k = {}", a.window(), self.k),
            ));
        }
        let live = self.live_states(a);
        if !live[0].iter().any(|&x| x) {
            return Ok(Mpo::identity(n).scaled(ZERO));
        }
        // Column offsets of the live states on each bond.
        let offsets: Vec<Vec<Option<usize>>> = (0..=n)
            .map(|b| {
                let mut acc = 0;
                self.bond_states[b]
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| {
                        live[b][i].then(|| {
                            let o = acc;
                            acc += self.r_dim(s, b);
                            o
                        })
                    })
                    .collect()
            })
            .collect();
        let width = |b: usize| -> usize {
            self.bond_states[b]
                .iter()
                .enumerate()
                .filter(|&(i, _)| live[b][i])
                .map(|(_, &s)| self.r_dim(s, b))
                .sum()
        };

        let mut carry = Array2::<C64>::zeros((1, width(0)));
        carry.fill(ONE);
        let mut tensors = Vec::with_capacity(n);
        for b in 0..n {
            let chi = carry.nrows();
            let letter = a.letter_at(b);
            let letter_m = letter.matrix();
            let mut m = Array2::<C64>::zeros((chi * 4, width(b + 1)));
            for tr in &self.site_tensors[b] {
                let (Some(fo), Some(to)) = (offsets[b][tr.from], offsets[b + 1][tr.to]) else {
                    continue;
                };
                if !tr.action.accepts(letter.is_identity()) {
                    continue;
                }
                let s_from = self.bond_states[b][tr.from];
                let s_to = self.bond_states[b + 1][tr.to];
                let (rf, rt) = (self.r_dim(s_from, b), self.r_dim(s_to, b + 1));
                let block = carry.slice(ndarray::s![.., fo..fo + rf]);
                match tr.action {
                    Action::Pass => {
                        for x in 0..chi {
                            m[[x * 4, to]] += block[[x, 0]];
                            m[[x * 4 + 3, to]] += block[[x, 0]];
                        }
                    }
                    Action::Sandwich { p, .. } => {
                        let w = self.block_mpos[p - 1].tensor(b);
                        let out = sandwich_step(&block.to_owned(), w, &letter_m);
                        let mut dst = m.slice_mut(ndarray::s![.., to..to + rt]);
                        dst += &out;
                    }
                }
            }
            if b + 1 == n {
                let col = m.sum_axis(Axis(1)).insert_axis(Axis(1));
                tensors.push(tensor_from_rows(col, chi));
                break;
            }
            if m.ncols() == 1 {
                // Nothing to split; the carry stays the exact scalar 1.
                tensors.push(tensor_from_rows(m, chi));
                carry = Array2::from_elem((1, 1), ONE);
                continue;
            }
            let (u, sv, vh) = linalg::svd(&m)?;
            let smax = sv.first().copied().unwrap_or(0.0);
            let keep = sv.iter().take_while(|&&x| x > ZIP_TOL * smax).count().max(1);
            let u = u.slice(ndarray::s![.., ..keep]).to_owned();
            let mut next = vh.slice(ndarray::s![..keep, ..]).to_owned();
            for (mut row, &x) in next.rows_mut().into_iter().zip(sv.iter()) {
                row.mapv_inplace(|z| z * x);
            }
            tensors.push(tensor_from_rows(u, chi));
            carry = next;
        }

        let id = identity_tensor();
        let Some(first) = (0..n).find(|&b| tensors[b] != id) else {
            tensors[0].mapv_inplace(|z| z * a.coeff());
            return Mpo::from_tensors(tensors);
        };
        let last = (first..n).rev().find(|&b| tensors[b] != id).unwrap_or(first);
        tensors[first].mapv_inplace(|z| z * a.coeff());
        if tensors[first].dim().0 == 1 && tensors[last].dim().1 == 1 && last > first {
            let segment = Mpo::from_tensors(tensors[first..=last].to_vec())?;
            let (segment, _) = segment.compress(SEGMENT_TOL, None)?;
            for (i, t) in segment.tensors().iter().enumerate() {
                tensors[first + i] = t.clone();
            }
        }
        Mpo::from_tensors(tensors)
    }

    /// `Σᵢ map(Aᵢ)` for strings that all have window length `k`, compressed
    /// at relative tolerance `tol` as the sum grows.
    pub fn apply_linear(&self, terms: &[PauliString], tol: f64) -> Result<Mpo> {
        if let Some(bad) = terms.iter().find(|a| a.window().len() != self.k) {
            return Err(Error::invalid(
                "observable",
                format!("every term needs window length k = {}, got {}", self.k, bad.window()),
            ));
        }
        let parts = terms.par_iter().map(|a| self.apply(a)).collect::<Result<Vec<_>>>()?;
        let mut acc: Option<Mpo> = None;
        for part in parts {
            acc = Some(match acc {
                None => part,
                Some(m) => Mpo::add(&m, &part, ONE, ONE)?.compress(tol, None)?.0,
            });
        }
        Ok(acc.unwrap_or_else(|| Mpo::identity(self.n).scaled(ZERO)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub l0: usize,
    /// `max_A ‖e^{−itH} A e^{itH} − map(A)‖ / ‖A‖` in operator norm.
    pub max_rel_error: f64,
    pub block_bond: usize,
}

/// Worst relative error of the map against exact evolution, per block length.
pub fn accuracy_sweep(
    h: &ChainHamiltonian,
    t: f64,
    l0_list: &[usize],
    family: &[PauliString],
    tol: f64,
    guard: DenseGuard,
) -> Result<Vec<SweepRow>> {
    let n = h.n_sites();
    guard.check(n)?;
    let k = family.iter().map(|a| a.window().len()).max().unwrap_or(1).max(1);
    let spectrum = Spectrum::of(&h.to_dense(guard)?)?;
    let exact = family
        .par_iter()
        .map(|a| oracle::heisenberg_with(&spectrum, &a.to_dense(n, guard)?, t))
        .collect::<Result<Vec<_>>>()?;
    l0_list
        .iter()
        .map(|&l0| {
            let map = build_tensor_map(h, t, l0, k, tol, guard)?;
            let errors = family
                .par_iter()
                .zip(&exact)
                .map(|(a, ex)| {
                    let approx = map.apply(a)?.to_dense(guard)?;
                    Ok(oracle::operator_norm_distance(ex, &approx)? / a.norm())
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(SweepRow {
                l0,
                max_rel_error: errors.into_iter().fold(0.0, f64::max),
                block_bond: map.bonds.block_bond,
            })
        })
        .collect()
}

/// Largest deviation between contraction and dense reference over every
/// single-site Pauli at every position.
pub fn exhaustive_single_site_check(map: &CondMap, h: &ChainHamiltonian, guard: DenseGuard) -> Result<f64> {
    use crate::model::Pauli;
    let n = map.n;
    let inputs: Vec<PauliString> = (0..n)
        .flat_map(|x| [Pauli::X, Pauli::Y, Pauli::Z].map(|p| PauliString::single(x, p)))
        .collect();
    let devs = inputs
        .par_iter()
        .map(|a| {
            let tn = map.apply(a)?.to_dense(guard)?;
            let reference = reference_apply_k(h, a, map.t, map.l0, map.k, guard)?.embed(Interval::chain(n))?;
            Ok(tn.sub(&reference)?.max_abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(devs.into_iter().fold(0.0, f64::max))
}

/// Operator norm of an MPO, through its dense form.
pub fn dense_operator_norm(m: &Mpo, guard: DenseGuard) -> Result<f64> {
    oracle::norm(&m.to_dense(guard)?, NormKind::Operator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LocalTerm, Pauli};

    fn g() -> DenseGuard {
        DenseGuard::default()
    }

    fn field_only(n: usize) -> ChainHamiltonian {
        let terms = (0..n)
            .map(|x| LocalTerm::new(Interval::single(x), Pauli::Z.matrix()).unwrap())
            .collect();
        ChainHamiltonian::new(n, terms, 1.0, 2.0).unwrap()
    }

    fn embed(d: DenseOperator, n: usize) -> DenseOperator {
        d.embed(Interval::chain(n)).unwrap()
    }

    #[test]
    fn identity_string_gives_identity_exactly() {
        let h = ChainHamiltonian::tfim(8, 1.0, 1.0).unwrap();
        let map = build_tensor_map(&h, 0.3, 4, 2, 1e-13, g()).unwrap();
        let out = map.apply(&PauliString::identity()).unwrap();
        assert_eq!(out, Mpo::identity(8));
    }

    #[test]
    fn single_site_contraction_matches_reference_everywhere() {
        let h = ChainHamiltonian::tfim(10, 1.0, 1.0).unwrap();
        let map = build_tensor_map(&h, 0.3, 4, 1, 1e-13, g()).unwrap();
        let dev = exhaustive_single_site_check(&map, &h, g()).unwrap();
        assert!(dev <= 1e-10, "deviation {dev}");
    }

    #[test]
    fn two_site_contraction_matches_reference_with_mixed_parity() {
        let h = ChainHamiltonian::xxz(9, 1.0, 0.7, 0.4).unwrap();
        for (l0, k) in [(5, 2), (6, 2), (4, 3)] {
            let map = build_tensor_map(&h, 0.25, l0, k, 1e-13, g()).unwrap();
            for x in 0..=(9 - k) {
                let letters = if k == 2 { "XY" } else { "ZIX" };
                let a = PauliString::parse(x, letters).unwrap().with_coeff(C64::new(0.5, -1.5));
                let tn = map.apply(&a).unwrap().to_dense(g()).unwrap();
                let r = embed(reference_apply(&h, &a, 0.25, l0, g()).unwrap(), 9);
                let dev = tn.sub(&r).unwrap().max_abs();
                assert!(dev < 1e-10, "l0={l0} k={k} x={x}: {dev}");
            }
        }
    }

    #[test]
    fn shorter_inputs_use_the_declared_margins() {
        let h = ChainHamiltonian::tfim(8, 1.0, 0.6).unwrap();
        let map = build_tensor_map(&h, 0.4, 5, 2, 1e-13, g()).unwrap();
        for x in 0..8 {
            let a = PauliString::single(x, Pauli::Y);
            let tn = map.apply(&a).unwrap().to_dense(g()).unwrap();
            let r = embed(reference_apply_k(&h, &a, 0.4, 5, 2, g()).unwrap(), 8);
            assert!(tn.sub(&r).unwrap().max_abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn field_only_rotation_closed_form() {
        let n = 6;
        let t: f64 = 0.37;
        let h = field_only(n);
        let a = PauliString::single(3, Pauli::X);
        let expect = PauliString::single(3, Pauli::X)
            .to_dense(n, g())
            .unwrap()
            .scaled(C64::new((2.0 * t).cos(), 0.0))
            .add(&PauliString::single(3, Pauli::Y).to_dense(n, g()).unwrap().scaled(C64::new((2.0 * t).sin(), 0.0)))
            .unwrap();
        let r = embed(reference_apply(&h, &a, t, 4, g()).unwrap(), n);
        assert!(r.sub(&expect).unwrap().max_abs() < 1e-12);
        let map = build_tensor_map(&h, t, 4, 1, 1e-13, g()).unwrap();
        let tn = map.apply(&a).unwrap().to_dense(g()).unwrap();
        assert!(tn.sub(&expect).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn zero_time_returns_input() {
        let h = ChainHamiltonian::tfim(7, 1.0, 1.0).unwrap();
        let a = PauliString::parse(2, "ZX").unwrap();
        let r = embed(reference_apply(&h, &a, 0.0, 4, g()).unwrap(), 7);
        let ad = a.to_dense(7, g()).unwrap();
        assert!(r.sub(&ad).unwrap().max_abs() == 0.0);
        let map = build_tensor_map(&h, 0.0, 4, 2, 1e-13, g()).unwrap();
        let tn = map.apply(&a).unwrap().to_dense(g()).unwrap();
        assert!(tn.sub(&ad).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn tensors_outside_the_block_are_exact_identities() {
        let n = 12;
        let h = ChainHamiltonian::tfim(n, 1.0, 1.0).unwrap();
        let map = build_tensor_map(&h, 0.5, 4, 2, 1e-13, g()).unwrap();
        let id = Mpo::identity(1);
        for x in 0..=(n - 2) {
            let a = PauliString::parse(x, "XZ").unwrap();
            let out = map.apply(&a).unwrap();
            for site in 0..n {
                if a.window().distance(&Interval::single(site)) > map.l0 {
                    assert_eq!(out.tensor(site), id.tensor(0), "x={x} site={site}");
                }
            }
        }
    }

    #[test]
    fn exactly_one_path_survives_for_each_input() {
        let h = ChainHamiltonian::tfim(9, 1.0, 1.0).unwrap();
        let map = build_tensor_map(&h, 0.2, 5, 1, 1e-13, g()).unwrap();
        for x in 0..9 {
            let live = map.live_states(&PauliString::single(x, Pauli::Z));
            assert!(live.iter().all(|bond| bond.iter().filter(|&&v| v).count() == 1), "x={x}");
        }
        let live = map.live_states(&PauliString::identity());
        assert!(live.iter().all(|bond| bond.iter().filter(|&&v| v).count() == 1));
    }

    #[test]
    fn network_bond_within_bound() {
        let h = ChainHamiltonian::tfim(10, 1.0, 1.0).unwrap();
        for (l0, k) in [(4, 1), (4, 2), (6, 2), (7, 3)] {
            let map = build_tensor_map(&h, 0.3, l0, k, 1e-13, g()).unwrap();
            assert!(map.bonds.network_bond <= map.bonds.bound, "{:?}", map.bonds);
            let naive: usize = (0..=10)
                .map(|b| map.bond_states[b].iter().map(|&s| map.r_dim(s, b)).sum::<usize>())
                .max()
                .unwrap();
            assert_eq!(naive, map.bonds.network_bond);
        }
    }

    #[test]
    fn linear_combination_is_exact() {
        let h = ChainHamiltonian::tfim(8, 1.0, 0.8).unwrap();
        let map = build_tensor_map(&h, 0.3, 5, 2, 1e-13, g()).unwrap();
        let (a, b) = (C64::new(0.3, 0.2), C64::new(-1.1, 0.0));
        let p = PauliString::parse(1, "XX").unwrap();
        let q = PauliString::parse(4, "ZY").unwrap();
        let lin = map
            .apply_linear(&[p.clone().with_coeff(a), q.clone().with_coeff(b)], 1e-14)
            .unwrap()
            .to_dense(g())
            .unwrap();
        let sep = map
            .apply(&p)
            .unwrap()
            .to_dense(g())
            .unwrap()
            .scaled(a)
            .add(&map.apply(&q).unwrap().to_dense(g()).unwrap().scaled(b))
            .unwrap();
        assert!(lin.sub(&sep).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn mixed_window_sizes_rejected() {
        let h = ChainHamiltonian::tfim(6, 1.0, 1.0).unwrap();
        let map = build_tensor_map(&h, 0.3, 4, 2, 1e-13, g()).unwrap();
        let terms = [PauliString::parse(0, "XX").unwrap(), PauliString::single(3, Pauli::Z)];
        assert!(map.apply_linear(&terms, 1e-12).unwrap_err().is_validation());
        assert!(map.apply(&PauliString::parse(0, "XIX").unwrap()).unwrap_err().is_validation());
        assert!(build_tensor_map(&h, 0.3, 2, 2, 1e-13, g()).unwrap_err().is_validation());
        assert!(build_tensor_map(&h, 0.3, 7, 2, 1e-13, g()).unwrap_err().is_validation());
    }

    #[test]
    fn norm_is_controlled_by_block_tolerance() {
        let h = ChainHamiltonian::tfim(8, 1.0, 1.0).unwrap();
        let tol = 1e-10;
        let map = build_tensor_map(&h, 0.6, 6, 1, tol, g()).unwrap();
        for x in [0, 3, 7] {
            let out = map.apply(&PauliString::single(x, Pauli::X)).unwrap();
            let nrm = dense_operator_norm(&out, g()).unwrap();
            // two factors of U, each with relative Frobenius error ≤ tol on ≤ 2^6 dims
            assert!(nrm <= 1.0 + 2.0 * tol * 8.0 + 1e-12, "x={x}: {nrm}");
        }
    }

    #[test]
    fn sweep_is_zero_at_zero_time_and_for_commuting_fields() {
        let h = ChainHamiltonian::tfim(8, 1.0, 1.0).unwrap();
        let family: Vec<_> = (0..8).map(|x| PauliString::single(x, Pauli::Z)).collect();
        for row in accuracy_sweep(&h, 0.0, &[3, 5], &family, 1e-13, g()).unwrap() {
            assert!(row.max_rel_error < 1e-13, "{row:?}");
        }
        let ising = ChainHamiltonian::tfim(8, 1.0, 0.0).unwrap();
        for row in accuracy_sweep(&ising, 0.9, &[3, 5, 7], &family, 1e-13, g()).unwrap() {
            assert!(row.max_rel_error <= 1e-10, "{row:?}");
        }
    }

    #[test]
    fn longer_blocks_are_no_less_accurate() {
        let h = ChainHamiltonian::tfim(10, 1.0, 1.0).unwrap();
        let family: Vec<_> = [0, 3, 5, 9].map(|x| PauliString::single(x, Pauli::Z)).to_vec();
        let rows = accuracy_sweep(&h, 0.4, &[4, 8], &family, 1e-13, g()).unwrap();
        assert!(rows[1].max_rel_error <= rows[0].max_rel_error, "{rows:?}");
    }
}
