//! Depth-2 block circuits for `e^{−itH}` and empirical Lieb-Robinson fits.
//!
//! The `U` layer acts on blocks `[jw, (j+1)w − 1]`; the `V` layer acts on the
//! half-shifted windows `Ω′ = [B − w/2, B + w/2 − 1]` around every internal
//! block boundary `B`. With `H_L`, `H_R` the terms inside the two halves of
//! `Ω′`,
//!
//! ```text
//! V = e^{+it(H_L + H_R)} e^{−it H_Ω′},    M = (⊗ U)(⊗ V).
//! ```

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::linalg;
use crate::model::{ChainHamiltonian, PauliString};
use crate::mpo::Mpo;
use crate::oracle::{self, DenseGuard, DenseOperator, NormKind, Spectrum};

#[derive(Clone, Debug)]
pub struct Gate {
    pub window: Interval,
    pub unitary: DenseOperator,
}

#[derive(Clone, Debug)]
pub struct Depth2Circuit {
    pub n: usize,
    pub t: f64,
    pub w: usize,
    pub u_gates: Vec<Gate>,
    pub v_gates: Vec<Gate>,
}

pub fn u_blocks(n: usize, w: usize) -> Vec<Interval> {
    (0..n)
        .step_by(w)
        .map(|s| Interval::with_len(s, w.min(n - s)))
        .collect()
}

/// `(Ω′, left half, right half)` for every internal boundary.
pub fn v_windows(n: usize, w: usize) -> Vec<(Interval, Interval, Interval)> {
    (w..n)
        .step_by(w)
        .map(|b| {
            let half = w / 2;
            let hi = (b + half).min(n);
            (
                Interval::with_len(b - half, hi - (b - half)),
                Interval::with_len(b - half, half),
                Interval::with_len(b, hi - b),
            )
        })
        .collect()
}

fn exp_terms(h: &ChainHamiltonian, window: Interval, theta: C64, guard: DenseGuard) -> Result<DenseOperator> {
    let hw = h.restrict(window)?.to_dense_window(window, guard)?;
    oracle::expm(&hw, theta, guard)
}

pub fn build_depth2(h: &ChainHamiltonian, t: f64, w: usize, guard: DenseGuard) -> Result<Depth2Circuit> {
    let n = h.n_sites();
    if w % 2 != 0 || w < 2 {
        return Err(Error::invalid("w", format!("must be even and at least 2, got {w}")));
    }
    if w > n {
        return Err(Error::invalid("w", format!("must not exceed N = {n}, got {w}")));
    }
    if !t.is_finite() {
        return Err(Error::invalid("t", "must be finite"));
    }
    guard.check(w)?;
    let blocks = u_blocks(n, w);
    let shifted = v_windows(n, w);
    for term in h.terms() {
        let s = term.support();
        let covered = blocks.iter().any(|b| b.contains(&s)) || shifted.iter().any(|(o, _, _)| o.contains(&s));
        if !covered {
            return Err(Error::invalid(
                "w",
                format!("term on {s} fits neither a block nor a shifted block; increase w"),
            ));
        }
    }
    let minus = C64::new(0.0, -t);
    let plus = C64::new(0.0, t);
    let u_gates = blocks
        .par_iter()
        .map(|&b| {
            Ok(Gate {
                window: b,
                unitary: exp_terms(h, b, minus, guard)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let v_gates = shifted
        .par_iter()
        .map(|&(o, l, r)| {
            let mut halves = h.restrict(l)?.to_dense_window(l, guard)?.embed(o)?;
            halves.add_embedded(&h.restrict(r)?.to_dense_window(r, guard)?)?;
            halves.set_hermitian_hint(true);
            let back = oracle::expm(&halves, plus, guard)?;
            let fwd = exp_terms(h, o, minus, guard)?;
            Ok(Gate {
                window: o,
                unitary: back.matmul(&fwd)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Depth2Circuit {
        n,
        t,
        w,
        u_gates,
        v_gates,
    })
}

fn conjugate_layer(gates: &[Gate], op: DenseOperator, inverse: bool, guard: DenseGuard) -> Result<DenseOperator> {
    let touching: Vec<&Gate> = gates.iter().filter(|g| g.window.overlaps(&op.window())).collect();
    if touching.is_empty() {
        return Ok(op);
    }
    let win = touching.iter().fold(op.window(), |acc, g| acc.hull(&g.window));
    guard.check(win.len())?;
    let hint = op.hermitian_hint();
    let mut data = op.embed(win)?.into_data();
    for g in touching {
        let u = if inverse {
            linalg::adjoint(g.unitary.data())
        } else {
            g.unitary.data().clone()
        };
        data = linalg::conjugate_local(&u, g.window.start() - win.start(), g.window.len(), win.len(), &data);
    }
    Ok(DenseOperator::new(win, data)?.with_hermitian_hint(hint))
}

#[derive(Clone, Debug)]
pub struct HeisenbergOutput {
    /// Window outside which the evolved operator is the identity.
    pub support: Interval,
    pub dense: DenseOperator,
    pub mpo: Mpo,
}

impl Depth2Circuit {
    /// `M X M†` for a windowed operator. Gates away from the current support
    /// cancel against their adjoints and are skipped.
    pub fn conjugate(&self, x: &DenseOperator, guard: DenseGuard) -> Result<DenseOperator> {
        self.check_window(x.window())?;
        let after_v = conjugate_layer(&self.v_gates, x.clone(), false, guard)?;
        conjugate_layer(&self.u_gates, after_v, false, guard)
    }

    /// `M† X M`, the exact inverse of [`Depth2Circuit::conjugate`].
    pub fn conjugate_inverse(&self, x: &DenseOperator, guard: DenseGuard) -> Result<DenseOperator> {
        self.check_window(x.window())?;
        let after_u = conjugate_layer(&self.u_gates, x.clone(), true, guard)?;
        conjugate_layer(&self.v_gates, after_u, true, guard)
    }

    fn check_window(&self, w: Interval) -> Result<()> {
        if w.end() > self.n {
            return Err(Error::invalid("window", format!("{w} outside chain of {} sites", self.n)));
        }
        Ok(())
    }

    /// `M A M†` as a dense operator on its support and as an MPO.
    pub fn heisenberg_apply(&self, a: &PauliString, tol: f64, guard: DenseGuard) -> Result<HeisenbergOutput> {
        if a.window().end() > self.n {
            return Err(Error::invalid("A", format!("{} outside chain of {} sites", a.window(), self.n)));
        }
        let dense = self.conjugate(&a.to_dense_window(), guard)?;
        let mpo = Mpo::from_dense_window(&dense, self.n, tol)?;
        Ok(HeisenbergOutput {
            support: dense.window(),
            dense,
            mpo,
        })
    }

    /// The full `2^N × 2^N` circuit unitary.
    pub fn to_dense(&self, guard: DenseGuard) -> Result<DenseOperator> {
        guard.check(self.n)?;
        let chain = Interval::chain(self.n);
        let mut m = DenseOperator::identity(chain).into_data();
        for g in self.v_gates.iter().chain(&self.u_gates) {
            m = linalg::apply_left_local(g.unitary.data(), g.window.start(), g.window.len(), self.n, &m);
        }
        DenseOperator::new(chain, m)
    }

    fn layer_mpo(&self, gates: &[Gate], tol: f64) -> Result<Mpo> {
        let mut parts = Vec::new();
        let mut next = 0;
        for g in gates {
            if g.window.start() > next {
                parts.push(Mpo::identity(g.window.start() - next));
            }
            let local = DenseOperator::new(Interval::chain(g.window.len()), g.unitary.data().clone())?;
            parts.push(Mpo::from_dense_window(&local, g.window.len(), tol)?);
            next = g.window.end();
        }
        if next < self.n {
            parts.push(Mpo::identity(self.n - next));
        }
        Mpo::concat(&parts)
    }

    /// The circuit as one MPO; bond dimension at most `4^w` before the final
    /// compression.
    pub fn as_mpo(&self, tol: f64) -> Result<Mpo> {
        if !(tol > 0.0) {
            return Err(Error::invalid("tol", format!("must be positive, got {tol}")));
        }
        let u = self.layer_mpo(&self.u_gates, tol / 4.0)?;
        let v = self.layer_mpo(&self.v_gates, tol / 4.0)?;
        let (m, _) = Mpo::compose(&u, &v)?.compress(tol / 4.0, None)?;
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrPoint {
    pub t: f64,
    pub l: usize,
    /// `‖A(t) − A_X(t)‖` with `X` the window of `A` grown by `l`.
    pub error: f64,
    /// `‖[A(t), B]‖` with `B` starting `l` sites right of `A`, when it fits.
    pub commutator: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrFit {
    pub c: f64,
    pub v_lr: f64,
    /// RMS deviation of `ln error` from the per-time straight lines in `l`.
    pub residual: f64,
    /// Mean decay rate `μ` of `ln error` in `l`.
    pub decay_rate: f64,
    /// `(t, slope of ln error in l, intercept)` for each time.
    pub per_t_slope: Vec<(f64, f64, f64)>,
    /// `(t, l_δ)`: distance where the fitted error crosses `δ`.
    pub front: Vec<(f64, f64)>,
    /// `(t, dl_δ/dt)` from finite differences of the front.
    pub per_t_velocity: Vec<(f64, f64)>,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrProbe {
    pub points: Vec<LrPoint>,
    pub fit: LrFit,
}

/// Errors below this are treated as exact zeros by the fit.
pub const LR_FLOOR: f64 = 1e-13;
/// Threshold defining the front `l_δ`.
pub const LR_DELTA: f64 = 1e-3;

fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Measures `‖e^{−itH}Ae^{itH} − e^{−itH_X}Ae^{itH_X}‖` on a `(t, l)` grid and
/// fits `c e^{v t − l}`-type spreading.
pub fn lr_probe(
    h: &ChainHamiltonian,
    a: &PauliString,
    b: Option<&PauliString>,
    t_grid: &[f64],
    l_grid: &[usize],
    guard: DenseGuard,
) -> Result<LrProbe> {
    if t_grid.len() < 2 || l_grid.len() < 2 {
        return Err(Error::invalid("grid", "need at least 2 times and 2 distances"));
    }
    let n = h.n_sites();
    if a.is_identity() || a.window().end() > n {
        return Err(Error::invalid("A", "must be a non-identity string inside the chain"));
    }
    guard.check(n)?;
    let chain = Interval::chain(n);
    let full = Spectrum::of(&h.to_dense(guard)?)?;
    let a_full = a.to_dense_window().embed(chain)?;
    let mut l_sorted = l_grid.to_vec();
    l_sorted.sort_unstable();
    l_sorted.dedup();
    let windows: Vec<Interval> = l_sorted.iter().map(|&l| a.window().expand(l, n)).collect();
    let local_spectra = windows
        .par_iter()
        .map(|&x| Spectrum::of(&h.restrict(x)?.to_dense_window(x, guard)?))
        .collect::<Result<Vec<_>>>()?;
    let a_norm = a.norm();
    let rows = t_grid
        .par_iter()
        .map(|&t| {
            let at = oracle::heisenberg_with(&full, &a_full, t)?;
            let mut out = Vec::new();
            for (&l, s) in l_sorted.iter().zip(&local_spectra) {
                let ax = oracle::heisenberg_with(s, &a.to_dense_window(), t)?;
                let error = oracle::operator_norm_distance(&at, &ax)?;
                let commutator = match b {
                    Some(b) => {
                        let start = a.window().last().expect("non-empty") + l;
                        if start + b.window().len() <= n {
                            let bd = b.moved_to(start).to_dense_window().embed(chain)?;
                            let comm = at.matmul(&bd)?.sub(&bd.matmul(&at)?)?;
                            Some(oracle::norm(&comm, NormKind::Operator)?)
                        } else {
                            None
                        }
                    }
                    None => None,
                };
                out.push(LrPoint {
                    t,
                    l,
                    error: error / a_norm,
                    commutator,
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<LrPoint> = rows.into_iter().flatten().collect();
    let fit = fit_lr(&points);
    Ok(LrProbe { points, fit })
}

fn fit_lr(points: &[LrPoint]) -> LrFit {
    let mut ts: Vec<f64> = points.iter().map(|p| p.t).collect();
    ts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    ts.dedup();
    let mut per_t_slope = Vec::new();
    let mut front = Vec::new();
    let mut sq = 0.0;
    let mut count = 0usize;
    let mut degenerate = false;
    for &t in &ts {
        let (ls, ys): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|p| p.t == t && p.error > LR_FLOOR)
            .map(|p| (p.l as f64, p.error.ln()))
            .unzip();
        if ls.len() < 2 {
            degenerate = true;
            continue;
        }
        let (s, a) = line_fit(&ls, &ys);
        if s >= 0.0 {
            degenerate = true;
            continue;
        }
        for (l, y) in ls.iter().zip(&ys) {
            sq += (y - (a + s * l)).powi(2);
            count += 1;
        }
        per_t_slope.push((t, s, a));
        front.push((t, (a - LR_DELTA.ln()) / -s));
    }
    if front.len() < 2 {
        degenerate = true;
    }
    if degenerate {
        return LrFit {
            c: 0.0,
            v_lr: 0.0,
            residual: if count > 0 { (sq / count as f64).sqrt() } else { 0.0 },
            decay_rate: 0.0,
            per_t_slope,
            front,
            per_t_velocity: Vec::new(),
            degenerate,
        };
    }
    let (ft, fl): (Vec<f64>, Vec<f64>) = front.iter().cloned().unzip();
    let (v, _) = line_fit(&ft, &fl);
    let v_lr = v.max(0.0);
    let per_t_velocity = (0..ft.len())
        .map(|i| {
            let (lo, hi) = match i {
                0 => (0, 1),
                i if i + 1 == ft.len() => (i - 1, i),
                i => (i - 1, i + 1),
            };
            (ft[i], (fl[hi] - fl[lo]) / (ft[hi] - ft[lo]))
        })
        .collect();
    let decay_rate = -per_t_slope.iter().map(|&(_, s, _)| s).sum::<f64>() / per_t_slope.len() as f64;
    let c = points
        .iter()
        .filter(|p| p.error > LR_FLOOR)
        .map(|p| p.error.ln() - v_lr * p.t + p.l as f64)
        .fold(f64::NEG_INFINITY, f64::max)
        .exp();
    LrFit {
        c,
        v_lr,
        residual: (sq / count as f64).sqrt(),
        decay_rate,
        per_t_slope,
        front,
        per_t_velocity,
        degenerate: false,
    }
}
