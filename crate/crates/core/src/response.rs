//! End-to-end pipelines: correlation lengths, local indistinguishability,
//! thermal autocorrelations from a thermal MPO plus a depth-2 circuit, and
//! product-state quenches.

use std::collections::HashMap;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{self, Depth2Circuit};
use crate::interval::Interval;
use crate::linalg;
use crate::model::{ChainHamiltonian, ExtensiveObservable, Pauli, PauliString};
use crate::mpo::Mpo;
use crate::oracle::{self, DenseGuard, NormKind, Spectrum};
use crate::thermal;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Correlators at or below this are treated as zero by the fit.
pub const CORRELATION_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationFit {
    /// `−1/slope` of `ln ε(l)` against `l`; 0 when degenerate.
    pub xi: f64,
    /// `(l, ε(l))` for every requested separation.
    pub epsilon_l: Vec<(usize, f64)>,
    /// RMS deviation of the linear fit in log space.
    pub residual: f64,
    /// Fewer than two correlators above the floor, or a non-decaying fit.
    pub degenerate: bool,
}

/// `ε(l) = max |⟨X_x Y_{x+l}⟩ − ⟨X_x⟩⟨Y_{x+l}⟩|` over `X = Y ∈ {Z, X}` and all
/// positions, from the exact Gibbs state, with an exponential fit.
pub fn estimate_xi(h: &ChainHamiltonian, beta: f64, separations: &[usize], guard: DenseGuard) -> Result<CorrelationFit> {
    let n = h.n_sites();
    let mut seps = separations.to_vec();
    seps.sort_unstable();
    seps.dedup();
    if seps.len() < 3 {
        return Err(Error::invalid("separations", "need at least 3 distinct separations"));
    }
    if seps[0] == 0 || *seps.last().expect("non-empty") >= n {
        return Err(Error::invalid("separations", format!("need 1 ≤ l ≤ N − 1 = {}", n - 1)));
    }
    let rho = oracle::gibbs(h, beta, guard)?;
    let mut one_point: HashMap<(usize, Pauli), f64> = HashMap::new();
    for x in 0..n {
        for p in [Pauli::Z, Pauli::X] {
            one_point.insert((x, p), oracle::pauli_expectation(&rho, &PauliString::single(x, p))?.re);
        }
    }
    let epsilon_l = seps
        .iter()
        .map(|&l| {
            let mut worst: f64 = 0.0;
            for x in 0..n - l {
                for p in [Pauli::Z, Pauli::X] {
                    let mut letters = vec![Pauli::I; l + 1];
                    letters[0] = p;
                    letters[l] = p;
                    let pair = PauliString::new(x, letters, C64::new(1.0, 0.0))?;
                    let c = oracle::pauli_expectation(&rho, &pair)?.re - one_point[&(x, p)] * one_point[&(x + l, p)];
                    worst = worst.max(c.abs());
                }
            }
            Ok((l, worst))
        })
        .collect::<Result<Vec<_>>>()?;

    let fit = fit_exponential(&epsilon_l);
    Ok(CorrelationFit {
        xi: if fit.degenerate { 0.0 } else { 1.0 / fit.rate },
        epsilon_l,
        residual: fit.residual,
        degenerate: fit.degenerate,
    })
}

/// Least-squares fit of `ln ε = ln c − rate·l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub rate: f64,
    pub prefactor: f64,
    /// RMS deviation in log space.
    pub residual: f64,
    /// Fewer than two points above the floor, or a non-decaying fit.
    pub degenerate: bool,
}

/// Fits `(l, ε)` pairs, ignoring values at or below [`CORRELATION_FLOOR`].
pub fn fit_exponential(points: &[(usize, f64)]) -> ExpFit {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(_, e)| e > CORRELATION_FLOOR)
        .map(|&(l, e)| (l as f64, e.ln()))
        .collect();
    if pts.len() < 2 {
        return ExpFit { rate: 0.0, prefactor: 0.0, residual: 0.0, degenerate: true };
    }
    let (slope, icpt) = linear_fit(&pts);
    let residual = (pts.iter().map(|&(x, y)| (y - slope * x - icpt).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
    ExpFit {
        rate: -slope,
        prefactor: icpt.exp(),
        residual,
        degenerate: !(slope < 0.0),
    }
}

fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// `(l, ‖Tr_B ρ − Tr_{B₁} ρ_{AB₁}‖₁)` where `AB₁` is `region` widened by `l`
/// on each side and `ρ_{AB₁}` is the Gibbs state of the terms inside it.
pub fn local_indist_profile(
    h: &ChainHamiltonian,
    beta: f64,
    region: Interval,
    l_list: &[usize],
    guard: DenseGuard,
) -> Result<Vec<(usize, f64)>> {
    let n = h.n_sites();
    if region.is_empty() || region.end() > n {
        return Err(Error::invalid("region", format!("{region} is not inside the chain")));
    }
    let rho = oracle::gibbs(h, beta, guard)?;
    let exact = oracle::partial_trace(&rho, region)?;
    l_list
        .iter()
        .map(|&l| {
            let ab1 = region.expand(l, n);
            let local = oracle::gibbs_window(h, ab1, beta, guard)?;
            let approx = oracle::partial_trace(&local, region)?;
            Ok((l, oracle::trace_norm_distance(&exact, &approx)?))
        })
        .collect()
}

/// `k′ = ⌈ξ ln(1/ε)⌉ + ⌈v t⌉ + k`.
pub fn default_k_prime(xi: f64, eps: f64, v_lr: f64, t: f64, k: usize) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid("eps", format!("must lie in (0, 1), got {eps}")));
    }
    if !(xi >= 0.0) || !(v_lr >= 0.0) || !xi.is_finite() || !v_lr.is_finite() {
        return Err(Error::invalid("xi", "xi and v_lr must be finite and ≥ 0"));
    }
    Ok((xi * (1.0 / eps).ln()).ceil() as usize + (v_lr * t.abs()).ceil() as usize + k)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTerm {
    /// Term index of the evolved factor.
    pub x: usize,
    /// Term index of the static factor.
    pub y: usize,
    pub value: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutocorrResult {
    pub value: C64,
    pub k_prime: usize,
    /// Block length of the thermal MPO, `min(N, k′)`.
    pub l0: usize,
    pub w: usize,
    pub components: Vec<PairTerm>,
    pub oracle_value: Option<C64>,
    pub thermal_bond: usize,
}

/// Heisenberg images `M A_x M†` of every weighted term, as MPOs.
fn evolved_terms(circuit: &Depth2Circuit, a: &ExtensiveObservable, tol: f64, guard: DenseGuard) -> Result<Vec<evolve::HeisenbergOutput>> {
    a.weighted_terms()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|term| circuit.heisenberg_apply(term, tol, guard))
        .collect()
}

/// `tr[ρ · B · A_y]`.
pub fn pair_value(rho: &Mpo, b: &Mpo, a_y: &PauliString) -> Result<C64> {
    let ay = Mpo::from_pauli(a_y, rho.n_sites())?;
    Mpo::trace_product(rho, &Mpo::compose(b, &ay)?)
}

/// `Σ_{x,y} tr[ρ̃ · M A_x M† · A_y]` with `A = w Σ_x A_x`, `ρ̃` the thermal MPO
/// with blocks of length `min(N, k′)` and `M` the depth-2 circuit of width
/// `w`. Pairs are summed in lexicographic order. The oracle value is filled in
/// when the chain fits the dense guard.
#[allow(clippy::too_many_arguments)]
pub fn autocorr_tn(
    h: &ChainHamiltonian,
    a: &ExtensiveObservable,
    t: f64,
    beta: f64,
    k_prime: usize,
    w: usize,
    tol: f64,
    guard: DenseGuard,
) -> Result<AutocorrResult> {
    let n = h.n_sites();
    if a.n_sites() != n {
        return Err(Error::invalid("observable", "chain length mismatch"));
    }
    if k_prime < a.max_window() {
        return Err(Error::invalid(
            "k_prime",
            format!("must be at least the largest term window {}", a.max_window()),
        ));
    }
    let l0 = n.min(k_prime);
    let rho = thermal::build(h, beta, l0, tol, guard)?;
    let circuit = evolve::build_depth2(h, t, w, guard)?;
    let evolved = evolved_terms(&circuit, a, tol, guard)?;
    let terms: Vec<PauliString> = a.weighted_terms().collect();
    let pairs: Vec<(usize, usize)> = (0..terms.len()).flat_map(|x| (0..terms.len()).map(move |y| (x, y))).collect();
    let components = pairs
        .par_iter()
        .map(|&(x, y)| {
            Ok(PairTerm {
                x,
                y,
                value: pair_value(&rho.mpo, &evolved[x].mpo, &terms[y])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let value = components.iter().fold(ZERO, |acc, p| acc + p.value);
    let oracle_value = if guard.check(n).is_ok() {
        Some(autocorr_exact(h, a, t, beta, guard)?)
    } else {
        None
    };
    Ok(AutocorrResult {
        value,
        k_prime,
        l0,
        w,
        components,
        oracle_value,
        thermal_bond: rho.mpo.max_bond(),
    })
}

/// `tr[ρ_β · e^{−itH} A e^{itH} · A]`.
pub fn autocorr_exact(h: &ChainHamiltonian, a: &ExtensiveObservable, t: f64, beta: f64, guard: DenseGuard) -> Result<C64> {
    let n = h.n_sites();
    guard.check(n)?;
    let hd = h.to_dense(guard)?;
    let s = Spectrum::of(&hd)?;
    let rho = oracle::gibbs_of(&hd, beta)?;
    let ad = a.to_dense(guard)?;
    let at = oracle::heisenberg_with(&s, &ad, t)?;
    rho.trace_product(&at.matmul(&ad)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutocorrBudget {
    /// `Σ_{x,y} ‖(ρ − ρ̃)|_{hull}‖₁ ‖B_x A_y‖ + ‖B_x − A_x(t)‖ ‖A_y‖`.
    pub total: f64,
    /// Thermal part of the total.
    pub thermal: f64,
    /// Circuit part of the total.
    pub circuit: f64,
}

/// Error budget for [`autocorr_tn`] assembled from measured component
/// errors: thermal marginals on the support of each pair and the circuit's
/// Heisenberg error per term.
#[allow(clippy::too_many_arguments)]
pub fn autocorr_budget(
    h: &ChainHamiltonian,
    a: &ExtensiveObservable,
    t: f64,
    beta: f64,
    k_prime: usize,
    w: usize,
    tol: f64,
    guard: DenseGuard,
) -> Result<AutocorrBudget> {
    let n = h.n_sites();
    guard.check(n)?;
    let l0 = n.min(k_prime);
    let rho_tn = thermal::build(h, beta, l0, tol, guard)?;
    let rho = oracle::gibbs(h, beta, guard)?;
    let circuit = evolve::build_depth2(h, t, w, guard)?;
    let evolved = evolved_terms(&circuit, a, tol, guard)?;
    let terms: Vec<PauliString> = a.weighted_terms().collect();
    let s = Spectrum::of(&h.to_dense(guard)?)?;

    let circuit_err = evolved
        .par_iter()
        .zip(&terms)
        .map(|(b, term)| {
            let exact = oracle::heisenberg_with(&s, &term.to_dense(n, guard)?, t)?;
            let approx = b.mpo.to_dense(guard)?;
            oracle::operator_norm_distance(&exact, &approx)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut hulls: Vec<Interval> = Vec::new();
    for b in &evolved {
        for term in &terms {
            let hull = if b.support.is_empty() { term.window() } else { b.support.hull(&term.window()) };
            hulls.push(hull);
        }
    }
    let mut distinct = hulls.clone();
    distinct.sort_by_key(|i| (i.start(), i.end()));
    distinct.dedup();
    let marginal_err: HashMap<(usize, usize), f64> = distinct
        .par_iter()
        .map(|&win| {
            if win.is_empty() {
                return Ok(((0, 0), 0.0));
            }
            let ex = oracle::partial_trace(&rho, win)?;
            let ap = rho_tn.mpo.local_marginal(win, guard)?;
            Ok(((win.start(), win.end()), oracle::trace_norm_distance(&ex, &ap)?))
        })
        .collect::<Result<_>>()?;

    // ‖B_x A_y‖ factorizes when the supports are disjoint; otherwise it is
    // evaluated on the hull alone.
    let b_norms = evolved
        .iter()
        .map(|b| oracle::norm(&b.dense, NormKind::Operator))
        .collect::<Result<Vec<f64>>>()?;
    let mut thermal_part = 0.0;
    let mut circuit_part = 0.0;
    for (x, b) in evolved.iter().enumerate() {
        for (y, term) in terms.iter().enumerate() {
            let hull = hulls[x * terms.len() + y];
            let key = if hull.is_empty() { (0, 0) } else { (hull.start(), hull.end()) };
            let pair_norm = if b.support.is_empty() || !b.support.overlaps(&term.window()) {
                b_norms[x] * term.norm()
            } else {
                let prod = b.dense.embed(hull)?.matmul(&term.to_dense_window().embed(hull)?)?;
                oracle::norm(&prod, NormKind::Operator)?
            };
            thermal_part += marginal_err[&key] * pair_norm;
            circuit_part += circuit_err[x] * term.norm();
        }
    }
    Ok(AutocorrBudget {
        total: thermal_part + circuit_part,
        thermal: thermal_part,
        circuit: circuit_part,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuenchRow {
    pub t: f64,
    pub tn: f64,
    pub oracle: Option<f64>,
    /// `‖M A M† − A(t)‖` for the circuit used at this time, when the oracle
    /// is available.
    pub heisenberg_error: Option<f64>,
}

fn check_kets(kets: &[[C64; 2]]) -> Result<()> {
    for (i, k) in kets.iter().enumerate() {
        let norm2 = k[0].norm_sqr() + k[1].norm_sqr();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("state", format!("ket on site {i} has squared norm {norm2}")));
        }
    }
    Ok(())
}

/// `⟨Φ|A(t)|Φ⟩` for a product state, with `A(t) = e^{iHt} A e^{−iHt}`. The
/// tensor-network column sandwiches the depth-2 circuit's Heisenberg image
/// between the product state; the oracle column evolves the state densely.
pub fn quench(
    h: &ChainHamiltonian,
    kets: &[[C64; 2]],
    a: &PauliString,
    t_grid: &[f64],
    w: usize,
    tol: f64,
    guard: DenseGuard,
) -> Result<Vec<QuenchRow>> {
    let n = h.n_sites();
    if kets.len() != n {
        return Err(Error::invalid("state", format!("{} kets for {n} sites", kets.len())));
    }
    check_kets(kets)?;
    a.check_fits(n)?;
    let dense = if guard.check(n).is_ok() {
        let s = Spectrum::of(&h.to_dense(guard)?)?;
        let mut phi = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
        for k in kets {
            phi = linalg::kron(&phi, &Array2::from_shape_fn((2, 1), |(i, _)| k[i]));
        }
        Some((s, phi, a.to_dense(n, guard)?))
    } else {
        None
    };
    t_grid
        .par_iter()
        .map(|&t| {
            // A circuit built for time s maps A to about e^{−isH} A e^{isH}; s = −t gives A(t).
            let circuit = evolve::build_depth2(h, -t, w, guard)?;
            let b = circuit.heisenberg_apply(a, tol, guard)?;
            let tn = b.mpo.product_expectation(kets)?.re;
            let (oracle_col, herr) = match &dense {
                Some((s, phi, ad)) => {
                    let at = oracle::heisenberg_with(s, ad, -t)?;
                    let v = linalg::adjoint(phi).dot(at.data()).dot(phi)[[0, 0]].re;
                    let approx = b.dense.embed(Interval::chain(n))?;
                    (Some(v), Some(oracle::operator_norm_distance(&at, &approx)?))
                }
                None => (None, None),
            };
            Ok(QuenchRow {
                t,
                tn,
                oracle: oracle_col,
                heisenberg_error: herr,
            })
        })
        .collect()
}

/// Parses a product state: one of `up`, `down`, `plus`, `minus` for every
/// site, or a string of `u d + -` characters, one per site.
pub fn product_state(spec: &str, n: usize) -> Result<Vec<[C64; 2]>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let one = C64::new(1.0, 0.0);
    let ket = |c: char| -> Result<[C64; 2]> {
        Ok(match c {
            'u' => [one, ZERO],
            'd' => [ZERO, one],
            '+' => [C64::new(s, 0.0), C64::new(s, 0.0)],
            '-' => [C64::new(s, 0.0), C64::new(-s, 0.0)],
            _ => return Err(Error::invalid("state", format!("unknown site state {c:?}"))),
        })
    };
    let uniform = match spec {
        "up" => Some('u'),
        "down" => Some('d'),
        "plus" => Some('+'),
        "minus" => Some('-'),
        _ => None,
    };
    if let Some(c) = uniform {
        return (0..n).map(|_| ket(c)).collect();
    }
    let chars: Vec<char> = spec.chars().collect();
    if chars.len() != n {
        return Err(Error::invalid("state", format!("{} site states for {n} sites", chars.len())));
    }
    chars.into_iter().map(ket).collect()
}
