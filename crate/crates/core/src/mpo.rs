//! Matrix product operators.
//!
//! Site tensors are indexed `(left bond, right bond, out s, in s′)`, so the
//! operator is `Σ B₁^{[s₁,s₁′]} ⋯ B_N^{[s_N,s_N′]} |s⟩⟨s′|`. The two boundary
//! bonds have dimension 1 and the physical dimension is always 2.

use std::io::{Read, Write};

use ndarray::{s, Array1, Array2, Array3, Array4, ArrayD, Axis, IxDyn};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::linalg;
use crate::model::{ExtensiveObservable, Pauli, PauliString};
use crate::oracle::{DenseGuard, DenseOperator};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct Mpo {
    tensors: Vec<Array4<C64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    /// Sum of squared singular values dropped over all cuts.
    pub discarded_weight: f64,
    pub max_bond_before: usize,
    pub max_bond_after: usize,
}

fn identity_tensor() -> Array4<C64> {
    let mut t = Array4::zeros((1, 1, 2, 2));
    t[[0, 0, 0, 0]] = ONE;
    t[[0, 0, 1, 1]] = ONE;
    t
}

fn site_tensor_from_matrix(m: &Array2<C64>) -> Array4<C64> {
    m.clone().into_shape_with_order((1, 1, 2, 2)).expect("2x2")
}

/// `(l, r, s, s′)` → matrix with rows `(l, s, s′)` and columns `r`.
fn left_matrix(t: &Array4<C64>) -> Array2<C64> {
    let (l, r, _, _) = t.dim();
    t.view()
        .permuted_axes([0, 2, 3, 1])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((l * 4, r))
        .expect("contiguous")
}

fn from_left_matrix(m: Array2<C64>, l: usize) -> Array4<C64> {
    let r = m.ncols();
    m.into_shape_with_order((l, 2, 2, r))
        .expect("shape")
        .permuted_axes([0, 3, 1, 2])
        .as_standard_layout()
        .into_owned()
}

/// `(l, r, s, s′)` → matrix with rows `l` and columns `(r, s, s′)`.
fn right_matrix(t: &Array4<C64>) -> Array2<C64> {
    let (l, r, _, _) = t.dim();
    t.as_standard_layout()
        .into_owned()
        .into_shape_with_order((l, r * 4))
        .expect("contiguous")
}

fn from_right_matrix(m: Array2<C64>, r: usize) -> Array4<C64> {
    let l = m.nrows();
    m.into_shape_with_order((l, r, 2, 2)).expect("shape")
}

/// Contracts `mat` (shape `a × l`) into the left bond of `t`.
fn absorb_left(mat: &Array2<C64>, t: &Array4<C64>) -> Array4<C64> {
    let (_, r, _, _) = t.dim();
    from_right_matrix(mat.dot(&right_matrix(t)), r)
}

/// Contracts `mat` (shape `r × b`) into the right bond of `t`.
fn absorb_right(t: &Array4<C64>, mat: &Array2<C64>) -> Array4<C64> {
    let (l, _, _, _) = t.dim();
    from_left_matrix(left_matrix(t).dot(mat), l)
}

/// Number of leading singular values to keep under a relative cutoff and an
/// optional cap. Always at least one.
fn keep_count(sv: &Array1<f64>, rel_tol: f64, max_bond: Option<usize>) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0);
    let mut keep = sv.iter().take_while(|&&x| x > rel_tol * smax && x > 0.0).count().max(1);
    if let Some(cap) = max_bond {
        keep = keep.min(cap);
    }
    keep.min(sv.len()).max(1)
}

impl Mpo {
    /// Builds an MPO from explicit site tensors.
    pub fn from_tensors(tensors: Vec<Array4<C64>>) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::invalid("tensors", "an MPO needs at least one site"));
        }
        for (i, t) in tensors.iter().enumerate() {
            let (_, r, s, sp) = t.dim();
            if s != 2 || sp != 2 {
                return Err(Error::invalid("tensors", format!("site {i} has physical dims ({s},{sp})")));
            }
            if let Some(next) = tensors.get(i + 1) {
                if next.dim().0 != r {
                    return Err(Error::invalid("tensors", format!("bond {} mismatch: {r} vs {}", i + 1, next.dim().0)));
                }
            }
        }
        if tensors[0].dim().0 != 1 || tensors[tensors.len() - 1].dim().1 != 1 {
            return Err(Error::invalid("tensors", "boundary bonds must have dimension 1"));
        }
        Ok(Mpo { tensors })
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "an MPO needs at least one site");
        Mpo {
            tensors: vec![identity_tensor(); n],
        }
    }

    /// Product operator `⊗ᵢ ops[i]` from 2×2 matrices.
    pub fn product(ops: &[Array2<C64>]) -> Result<Self> {
        if ops.iter().any(|m| m.dim() != (2, 2)) {
            return Err(Error::invalid("ops", "product MPO needs 2x2 site matrices"));
        }
        Mpo::from_tensors(ops.iter().map(site_tensor_from_matrix).collect())
    }

    /// Pauli string embedded in a chain of `n` sites.
    pub fn from_pauli(p: &PauliString, n: usize) -> Result<Self> {
        p.check_fits(n)?;
        let mut ops: Vec<Array2<C64>> = (0..n).map(|i| p.letter_at(i).matrix()).collect();
        ops[0].mapv_inplace(|z| z * p.coeff());
        Mpo::product(&ops)
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensors(&self) -> &[Array4<C64>] {
        &self.tensors
    }

    pub fn tensor(&self, site: usize) -> &Array4<C64> {
        &self.tensors[site]
    }

    /// Bond dimensions, length `N + 1`, boundary entries 1.
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.tensors.iter().map(|t| t.dim().0).collect();
        d.push(self.tensors[self.tensors.len() - 1].dim().1);
        d
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Factorizes a windowed dense operator, identity outside the window.
    /// The Frobenius reconstruction error is at most `tol · ‖D‖_F`.
    pub fn from_dense_window(d: &DenseOperator, n: usize, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::invalid("tol", format!("must be positive, got {tol}")));
        }
        let w = d.window();
        if n == 0 || w.end() > n {
            return Err(Error::invalid("window", format!("{w} outside chain of {n} sites")));
        }
        let mut tensors = vec![identity_tensor(); n];
        if w.is_empty() {
            tensors[0].mapv_inplace(|z| z * d.data()[[0, 0]]);
            return Ok(Mpo { tensors });
        }
        let k = w.len();
        let fro2 = d.frobenius_norm().powi(2);
        let budget = if k > 1 { tol * tol * fro2 / (k - 1) as f64 } else { 0.0 };
        let block = factorize(d.data(), k, budget)?;
        for (i, t) in block.into_iter().enumerate() {
            tensors[w.start() + i] = t;
        }
        Ok(Mpo { tensors })
    }

    /// Dense matrix on the full chain.
    pub fn to_dense(&self, guard: DenseGuard) -> Result<DenseOperator> {
        guard.check(self.n_sites())?;
        let data = contract_dense(&self.tensors, &Array1::from_elem(1, ONE), &Array1::from_elem(1, ONE));
        DenseOperator::new(Interval::chain(self.n_sites()), data)
    }

    /// `w1·M1 + w2·M2` by direct sum of the bond spaces.
    pub fn add(m1: &Mpo, m2: &Mpo, w1: C64, w2: C64) -> Result<Mpo> {
        let n = m1.n_sites();
        if m2.n_sites() != n {
            return Err(Error::invalid(
                "mpo",
                format!("length mismatch: {n} vs {}", m2.n_sites()),
            ));
        }
        if n == 1 {
            let t = m1.tensors[0].mapv(|z| z * w1) + m2.tensors[0].mapv(|z| z * w2);
            return Ok(Mpo { tensors: vec![t] });
        }
        let mut tensors = Vec::with_capacity(n);
        for i in 0..n {
            let a = &m1.tensors[i];
            let b = &m2.tensors[i];
            let (al, ar, _, _) = a.dim();
            let (bl, br, _, _) = b.dim();
            let t = if i == 0 {
                let mut t = Array4::zeros((1, ar + br, 2, 2));
                t.slice_mut(s![.., ..ar, .., ..]).assign(&a.mapv(|z| z * w1));
                t.slice_mut(s![.., ar.., .., ..]).assign(&b.mapv(|z| z * w2));
                t
            } else if i == n - 1 {
                let mut t = Array4::zeros((al + bl, 1, 2, 2));
                t.slice_mut(s![..al, .., .., ..]).assign(a);
                t.slice_mut(s![al.., .., .., ..]).assign(b);
                t
            } else {
                let mut t = Array4::zeros((al + bl, ar + br, 2, 2));
                t.slice_mut(s![..al, ..ar, .., ..]).assign(a);
                t.slice_mut(s![al.., ar.., .., ..]).assign(b);
                t
            };
            tensors.push(t);
        }
        Ok(Mpo { tensors })
    }

    /// Operator product `M1 · M2`; bond dimensions multiply.
    pub fn compose(m1: &Mpo, m2: &Mpo) -> Result<Mpo> {
        let n = m1.n_sites();
        if m2.n_sites() != n {
            return Err(Error::invalid(
                "mpo",
                format!("length mismatch: {n} vs {}", m2.n_sites()),
            ));
        }
        let tensors = m1
            .tensors
            .iter()
            .zip(&m2.tensors)
            .map(|(a, b)| compose_site(a, b))
            .collect();
        Ok(Mpo { tensors })
    }

    pub fn scaled(&self, c: C64) -> Mpo {
        let mut out = self.clone();
        out.tensors[0].mapv_inplace(|z| z * c);
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Mpo {
        Mpo {
            tensors: self
                .tensors
                .iter()
                .map(|t| t.view().permuted_axes([0, 1, 3, 2]).mapv(|z| z.conj()))
                .collect(),
        }
    }

    /// Tensor product of MPOs on consecutive blocks of sites.
    pub fn concat(parts: &[Mpo]) -> Result<Mpo> {
        let tensors: Vec<_> = parts.iter().flat_map(|m| m.tensors.iter().cloned()).collect();
        Mpo::from_tensors(tensors)
    }

    /// Left-canonicalizes with QR, then truncates right to left keeping
    /// singular values above `tol · s_max` at each cut, at most `max_bond`.
    pub fn compress(&self, tol: f64, max_bond: Option<usize>) -> Result<(Mpo, CompressionReport)> {
        if !(tol >= 0.0) {
            return Err(Error::invalid("tol", format!("must be ≥ 0, got {tol}")));
        }
        if max_bond == Some(0) {
            return Err(Error::invalid("max_bond", "must be at least 1"));
        }
        let before = self.max_bond();
        let mut t = self.tensors.clone();
        let n = t.len();
        for i in 0..n.saturating_sub(1) {
            let l = t[i].dim().0;
            let (q, r) = linalg::qr(&left_matrix(&t[i]))?;
            t[i] = from_left_matrix(q, l);
            t[i + 1] = absorb_left(&r, &t[i + 1]);
        }
        let mut discarded = 0.0;
        for i in (1..n).rev() {
            let r = t[i].dim().1;
            let (u, sv, vh) = linalg::svd(&right_matrix(&t[i]))?;
            let keep = keep_count(&sv, tol, max_bond);
            discarded += sv.iter().skip(keep).map(|x| x * x).sum::<f64>();
            let us = &u.slice(s![.., ..keep]) * &sv.slice(s![..keep]).mapv(|x| C64::new(x, 0.0));
            t[i] = from_right_matrix(vh.slice(s![..keep, ..]).to_owned(), r);
            t[i - 1] = absorb_right(&t[i - 1], &us);
        }
        let out = Mpo { tensors: t };
        let report = CompressionReport {
            discarded_weight: discarded,
            max_bond_before: before,
            max_bond_after: out.max_bond(),
        };
        Ok((out, report))
    }

    /// `tr M`.
    pub fn trace(&self) -> C64 {
        let mut env = Array1::from_elem(1, ONE);
        for t in &self.tensors {
            env = env.dot(&traced(t));
        }
        env[0]
    }

    /// Reduced operator on `keep`: physical indices outside are traced.
    pub fn local_marginal(&self, keep: Interval, guard: DenseGuard) -> Result<DenseOperator> {
        if keep.end() > self.n_sites() {
            return Err(Error::invalid(
                "keep",
                format!("{keep} outside chain of {} sites", self.n_sites()),
            ));
        }
        guard.check(keep.len())?;
        let mut left = Array1::from_elem(1, ONE);
        let (a, b) = if keep.is_empty() {
            (self.n_sites(), self.n_sites())
        } else {
            (keep.start(), keep.end())
        };
        for t in &self.tensors[..a] {
            left = left.dot(&traced(t));
        }
        let mut right = Array1::from_elem(1, ONE);
        for t in self.tensors[b..].iter().rev() {
            right = traced(t).dot(&right);
        }
        let data = if keep.is_empty() {
            Array2::from_elem((1, 1), left.dot(&right))
        } else {
            contract_dense(&self.tensors[a..b], &left, &right)
        };
        DenseOperator::new(keep, data)
    }

    /// `tr(M · A)` for a Pauli string.
    pub fn expectation(&self, a: &PauliString) -> Result<C64> {
        a.check_fits(self.n_sites())?;
        let mut env = Array1::from_elem(1, ONE);
        for (i, t) in self.tensors.iter().enumerate() {
            let p = a.letter_at(i);
            env = env.dot(&transfer(t, p));
        }
        Ok(env[0] * a.coeff())
    }

    /// `tr(A · B)` by a transfer-matrix sweep.
    pub fn trace_product(a: &Mpo, b: &Mpo) -> Result<C64> {
        if a.n_sites() != b.n_sites() {
            return Err(Error::invalid(
                "mpo",
                format!("length mismatch: {} vs {}", a.n_sites(), b.n_sites()),
            ));
        }
        let mut env = Array2::from_elem((1, 1), ONE);
        for (ta, tb) in a.tensors.iter().zip(&b.tensors) {
            let (_, ra, _, _) = ta.dim();
            let (_, rb, _, _) = tb.dim();
            let mut next = Array2::<C64>::zeros((ra, rb));
            for s in 0..2 {
                for sp in 0..2 {
                    let am: ndarray::ArrayView2<C64> = ta.slice(s![.., .., s, sp]);
                    let bm: ndarray::ArrayView2<C64> = tb.slice(s![.., .., sp, s]);
                    let left: Array2<C64> = am.t().dot(&env);
                    next += &left.dot(&bm);
                }
            }
            env = next;
        }
        Ok(env[[0, 0]])
    }

    /// `⟨φ|M|φ⟩` for the product state `⊗ᵢ φᵢ`.
    pub fn product_expectation(&self, kets: &[[C64; 2]]) -> Result<C64> {
        if kets.len() != self.n_sites() {
            return Err(Error::invalid(
                "state",
                format!("{} kets for {} sites", kets.len(), self.n_sites()),
            ));
        }
        let mut env = Array1::from_elem(1, ONE);
        for (t, phi) in self.tensors.iter().zip(kets) {
            let (l, r, _, _) = t.dim();
            let m = Array2::from_shape_fn((l, r), |(a, b)| {
                let mut acc = ZERO;
                for s in 0..2 {
                    for sp in 0..2 {
                        acc += phi[s].conj() * t[[a, b, s, sp]] * phi[sp];
                    }
                }
                acc
            });
            env = env.dot(&m);
        }
        Ok(env[0])
    }

    /// `tr(M · A)` for `A = w Σ_x A_x`.
    pub fn expectation_extensive(&self, a: &ExtensiveObservable) -> Result<C64> {
        if a.n_sites() != self.n_sites() {
            return Err(Error::invalid("observable", "chain length mismatch"));
        }
        let mut acc = ZERO;
        for t in a.weighted_terms() {
            acc += self.expectation(&t)?;
        }
        Ok(acc)
    }

    /// Binary container: `u64` N, `N+1` × `u64` bond dimensions, then every
    /// site tensor in row-major `(l, r, s, s′)` order as `(re, im)` pairs of
    /// `f64`, all little-endian.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n_sites() as u64).to_le_bytes())?;
        for d in self.bond_dims() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for t in &self.tensors {
            for z in t.as_standard_layout().iter() {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Mpo> {
        let mut word = [0u8; 8];
        let mut read_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut word)?;
            Ok(u64::from_le_bytes(word))
        };
        let n = read_u64(&mut r)? as usize;
        if n == 0 || n > 1 << 20 {
            return Err(Error::invalid("mpo", format!("implausible site count {n}")));
        }
        let dims = (0..=n)
            .map(|_| read_u64(&mut r).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        if dims.iter().any(|&d| d == 0 || d > 1 << 16) {
            return Err(Error::invalid("mpo", "implausible bond dimension"));
        }
        let mut tensors = Vec::with_capacity(n);
        let mut buf = [0u8; 16];
        for i in 0..n {
            let len = dims[i] * dims[i + 1] * 4;
            let mut data = Vec::with_capacity(len);
            for _ in 0..len {
                r.read_exact(&mut buf)?;
                let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
                data.push(C64::new(re, im));
            }
            tensors.push(Array4::from_shape_vec((dims[i], dims[i + 1], 2, 2), data).expect("sized"));
        }
        Mpo::from_tensors(tensors)
    }
}

/// `Σ_s T[l, r, s, s]`.
pub(crate) fn traced(t: &Array4<C64>) -> Array2<C64> {
    let (l, r, _, _) = t.dim();
    Array2::from_shape_fn((l, r), |(a, b)| t[[a, b, 0, 0]] + t[[a, b, 1, 1]])
}

/// `Σ_{s,s′} T[l, r, s, s′] P[s′, s]`, the transfer matrix of `tr(T·P)`.
fn transfer(t: &Array4<C64>, p: Pauli) -> Array2<C64> {
    let m = p.matrix();
    let (l, r, _, _) = t.dim();
    Array2::from_shape_fn((l, r), |(a, b)| {
        let mut acc = ZERO;
        for s in 0..2 {
            for sp in 0..2 {
                let pv = m[[sp, s]];
                if pv != ZERO {
                    acc += t[[a, b, s, sp]] * pv;
                }
            }
        }
        acc
    })
}

pub(crate) fn compose_site(a: &Array4<C64>, b: &Array4<C64>) -> Array4<C64> {
    let (al, ar, _, _) = a.dim();
    let (bl, br, _, _) = b.dim();
    let mut t = Array4::zeros((al * bl, ar * br, 2, 2));
    for i in 0..al {
        for j in 0..ar {
            for k in 0..bl {
                for m in 0..br {
                    for s in 0..2 {
                        for u in 0..2 {
                            let mut acc = ZERO;
                            for sp in 0..2 {
                                acc += a[[i, j, s, sp]] * b[[k, m, sp, u]];
                            }
                            t[[i * bl + k, j * br + m, s, u]] = acc;
                        }
                    }
                }
            }
        }
    }
    t
}

/// Dense contraction of a run of site tensors between a left boundary
/// vector and a right boundary vector.
pub(crate) fn contract_dense(tensors: &[Array4<C64>], left: &Array1<C64>, right: &Array1<C64>) -> Array2<C64> {
    // running (out, in, bond)
    let mut acc: Array3<C64> = left
        .clone()
        .into_shape_with_order((1, 1, left.len()))
        .expect("vector");
    for t in tensors {
        let (o, i, b) = acc.dim();
        let (_, r, _, _) = t.dim();
        let x = acc
            .into_shape_with_order((o * i, b))
            .expect("contiguous")
            .dot(&right_matrix(t));
        acc = x
            .into_shape_with_order((o, i, r, 2, 2))
            .expect("shape")
            .permuted_axes([0, 3, 1, 4, 2])
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((o * 2, i * 2, r))
            .expect("contiguous");
    }
    let (o, i, b) = acc.dim();
    acc.into_shape_with_order((o * i, b))
        .expect("contiguous")
        .dot(right)
        .into_shape_with_order((o, i))
        .expect("square")
}

/// Sequential SVD of a `2^k × 2^k` matrix into `k` site tensors, dropping at
/// each cut the tail whose squared weight fits in `budget`.
fn factorize(data: &Array2<C64>, k: usize, budget: f64) -> Result<Vec<Array4<C64>>> {
    let shape = vec![2usize; 2 * k];
    let dense = ArrayD::from_shape_vec(IxDyn(&shape), data.as_standard_layout().iter().cloned().collect())
        .expect("power of two");
    let mut perm = Vec::with_capacity(2 * k);
    for i in 0..k {
        perm.push(i);
        perm.push(k + i);
    }
    let interleaved: Vec<C64> = dense.view().permuted_axes(IxDyn(&perm)).iter().cloned().collect();
    let mut rem = Array2::from_shape_vec((4, interleaved.len() / 4), interleaved).expect("shape");
    let mut out = Vec::with_capacity(k);
    let mut bl = 1;
    for _ in 0..k - 1 {
        let (u, sv, vh) = linalg::svd(&rem)?;
        let mut keep = sv.len();
        let mut tail = 0.0;
        while keep > 1 {
            let x = sv[keep - 1] * sv[keep - 1];
            if tail + x > budget {
                break;
            }
            tail += x;
            keep -= 1;
        }
        while keep > 1 && sv[keep - 1] == 0.0 {
            keep -= 1;
        }
        out.push(from_left_matrix(u.slice(s![.., ..keep]).to_owned(), bl));
        let sv_vh = &vh.slice(s![..keep, ..]) * &sv.slice(s![..keep]).mapv(|x| C64::new(x, 0.0)).insert_axis(Axis(1));
        let cols = sv_vh.ncols() / 4;
        rem = sv_vh
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((keep * 4, cols))
            .expect("shape");
        bl = keep;
    }
    out.push(from_left_matrix(rem, bl));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::oracle::{self, NormKind};

    fn g() -> DenseGuard {
        DenseGuard::default()
    }

    fn dist(a: &DenseOperator, b: &DenseOperator) -> f64 {
        a.sub(b).unwrap().frobenius_norm()
    }

    #[test]
    fn trace_product_matches_dense() {
        let mut r = fixtures::rng(11);
        let a = fixtures::random_mpo(&mut r, 5, 3);
        let b = fixtures::random_mpo(&mut r, 5, 2);
        let (da, db) = (a.to_dense(g()).unwrap(), b.to_dense(g()).unwrap());
        let expect = da.trace_product(&db).unwrap();
        let got = Mpo::trace_product(&a, &b).unwrap();
        assert!((got - expect).norm() < 1e-10 * (1.0 + expect.norm()));
        assert!(Mpo::trace_product(&a, &Mpo::identity(4)).unwrap_err().is_validation());
    }

    #[test]
    fn product_expectation_matches_dense() {
        let mut r = fixtures::rng(12);
        let m = fixtures::random_mpo(&mut r, 4, 3);
        let s = 0.5f64.sqrt();
        let kets = [
            [C64::new(1.0, 0.0), ZERO],
            [C64::new(s, 0.0), C64::new(0.0, s)],
            [ZERO, C64::new(1.0, 0.0)],
            [C64::new(0.6, 0.0), C64::new(0.8, 0.0)],
        ];
        let mut psi = Array2::from_elem((1, 1), ONE);
        for k in &kets {
            psi = linalg::kron(&psi, &Array2::from_shape_fn((2, 1), |(i, _)| k[i]));
        }
        let d = m.to_dense(g()).unwrap();
        let expect = linalg::adjoint(&psi).dot(d.data()).dot(&psi)[[0, 0]];
        let got = m.product_expectation(&kets).unwrap();
        assert!((got - expect).norm() < 1e-10 * (1.0 + expect.norm()));
    }

    #[test]
    fn identity_round_trip() {
        let d = DenseOperator::identity(Interval::chain(4));
        let m = Mpo::from_dense_window(&d, 4, 1e-12).unwrap();
        assert_eq!(m.bond_dims(), vec![1; 5]);
        assert!(dist(&m.to_dense(g()).unwrap(), &d) < 1e-14);
    }

    #[test]
    fn product_window_has_unit_bonds() {
        let zz = PauliString::parse(1, "ZZ").unwrap().to_dense_window();
        let m = Mpo::from_dense_window(&zz, 4, 1e-12).unwrap();
        assert_eq!(m.bond_dims(), vec![1; 5]);
        let expect = zz.embed(Interval::chain(4)).unwrap();
        assert!(dist(&m.to_dense(g()).unwrap(), &expect) < 1e-12);
    }

    #[test]
    fn random_two_site_window() {
        let mut rng = fixtures::rng(7);
        let d = fixtures::random_dense(&mut rng, Interval::new(2, 3), true);
        let m = Mpo::from_dense_window(&d, 5, 1e-12).unwrap();
        assert!(m.bond_dims()[3] <= 4);
        assert!(dist(&m.to_dense(g()).unwrap(), &d.embed(Interval::chain(5)).unwrap()) < 1e-10);
    }

    #[test]
    fn add_direct_sum_dims() {
        let mut rng = fixtures::rng(1);
        let a = fixtures::random_mpo(&mut rng, 2, 3);
        let b = fixtures::random_mpo(&mut rng, 2, 2);
        assert_eq!(a.bond_dims(), vec![1, 3, 1]);
        let c = Mpo::add(&a, &b, ONE, ONE).unwrap();
        assert_eq!(c.bond_dims(), vec![1, 5, 1]);
        let p = Mpo::compose(&a, &b).unwrap();
        assert_eq!(p.bond_dims(), vec![1, 6, 1]);
        let id = Mpo::identity(3);
        let z = Mpo::add(&id, &id, ONE, -ONE).unwrap();
        assert!(z.trace().norm() < 1e-15);
        assert!(z.to_dense(g()).unwrap().frobenius_norm() < 1e-15);
    }

    #[test]
    fn compose_x_string_squares_to_identity() {
        let x = Mpo::from_pauli(&PauliString::parse(0, "XXX").unwrap(), 3).unwrap();
        let sq = Mpo::compose(&x, &x).unwrap();
        assert!(dist(&sq.to_dense(g()).unwrap(), &DenseOperator::identity(Interval::chain(3))) < 1e-15);
    }

    #[test]
    fn compress_recovers_rank_of_doubled_sum() {
        let mut rng = fixtures::rng(3);
        let m = fixtures::random_mpo(&mut rng, 5, 2);
        let half = C64::new(0.5, 0.0);
        let doubled = Mpo::add(&m, &m, half, half).unwrap();
        let (c, rep) = doubled.compress(1e-12, None).unwrap();
        assert_eq!(c.bond_dims(), m.bond_dims());
        assert_eq!(rep.max_bond_before, 4);
        let err = dist(&c.to_dense(g()).unwrap(), &m.to_dense(g()).unwrap());
        assert!(err <= rep.discarded_weight.sqrt() + 1e-12 * m.to_dense(g()).unwrap().frobenius_norm());
    }

    #[test]
    fn compress_to_bond_one_matches_dropped_weight() {
        let mut rng = fixtures::rng(11);
        let m = fixtures::random_mpo(&mut rng, 2, 2);
        let (c, rep) = m.compress(0.0, Some(1)).unwrap();
        assert_eq!(c.max_bond(), 1);
        let dense = m.to_dense(g()).unwrap();
        // The dense truncated factorization across the single cut.
        let sv = {
            let mut mat = Array2::zeros((4, 4));
            for s0 in 0..2 {
                for s1 in 0..2 {
                    for u0 in 0..2 {
                        for u1 in 0..2 {
                            mat[[s0 * 2 + u0, s1 * 2 + u1]] = dense.data()[[s0 * 2 + s1, u0 * 2 + u1]];
                        }
                    }
                }
            }
            linalg::singular_values(&mat).unwrap()
        };
        let expect: f64 = sv.iter().skip(1).map(|x| x * x).sum();
        assert!((rep.discarded_weight - expect).abs() < 1e-10 * expect.max(1.0));
        let err = dist(&c.to_dense(g()).unwrap(), &dense);
        assert!((err - expect.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn compress_identity_is_lossless() {
        let (c, rep) = Mpo::identity(4).compress(0.3, None).unwrap();
        assert_eq!(c.bond_dims(), vec![1; 5]);
        assert_eq!(rep.discarded_weight, 0.0);
        assert!(Mpo::identity(2).compress(0.1, Some(0)).is_err());
    }

    #[test]
    fn marginals() {
        let n = 4;
        let mm = Mpo::identity(n).scaled(C64::new(1.0 / 16.0, 0.0));
        let m = mm.local_marginal(Interval::new(1, 2), g()).unwrap();
        assert!(dist(&m, &DenseOperator::maximally_mixed(Interval::new(1, 2))) < 1e-15);

        let mut rng = fixtures::rng(5);
        let r = fixtures::random_hermitian_mpo(&mut rng, 6, 3);
        let dense = r.to_dense(g()).unwrap();
        let keep = Interval::new(2, 3);
        let a = r.local_marginal(keep, g()).unwrap();
        let b = oracle::partial_trace(&dense, keep).unwrap();
        assert!(dist(&a, &b) < 1e-10 * dense.frobenius_norm());
    }

    #[test]
    fn expectation_of_thermal_pair() {
        let h = crate::model::ChainHamiltonian::tfim(2, 1.0, 0.0).unwrap();
        let rho = oracle::gibbs(&h, 1.0, g()).unwrap();
        let m = Mpo::from_dense_window(&rho, 2, 1e-14).unwrap();
        let v = m.expectation(&PauliString::parse(0, "ZZ").unwrap()).unwrap();
        assert!((v.re - 1f64.tanh()).abs() < 1e-12);
        let mixed = Mpo::identity(3).scaled(C64::new(0.125, 0.0));
        assert!(mixed.expectation(&PauliString::single(1, Pauli::Z)).unwrap().norm() < 1e-15);
        assert!((mixed.expectation(&PauliString::identity()).unwrap() - mixed.trace()).norm() < 1e-15);
        let _ = oracle::norm(&rho, NormKind::Trace).unwrap();
    }

    #[test]
    fn binary_round_trip() {
        let mut rng = fixtures::rng(9);
        let m = fixtures::random_mpo(&mut rng, 4, 3);
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 * 6 + m.tensors().iter().map(|t| t.len() * 16).sum::<usize>());
        let back = Mpo::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        assert!(Mpo::read_from(&buf[..20]).is_err());
    }
}
