//! Dense reference engine: exact exponentials, Gibbs states, Heisenberg
//! evolution, partial traces and Schatten norms on windows of at most
//! [`DenseGuard::max_sites`] qubits.

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::linalg;
use crate::model::{ChainHamiltonian, Pauli, PauliString};

/// Largest number of sites any dense path will materialize.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DenseGuard {
    max_sites: usize,
}

impl Default for DenseGuard {
    fn default() -> Self {
        DenseGuard { max_sites: 12 }
    }
}

impl DenseGuard {
    pub fn new(max_sites: usize) -> Self {
        DenseGuard { max_sites }
    }

    pub fn max_sites(&self) -> usize {
        self.max_sites
    }

    pub fn check(&self, sites: usize) -> Result<()> {
        if sites > self.max_sites {
            Err(Error::GuardExceeded {
                sites,
                guard: self.max_sites,
            })
        } else {
            Ok(())
        }
    }
}

/// A `2^n × 2^n` matrix acting on the sites of `window`, leftmost site most
/// significant.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    window: Interval,
    data: Array2<C64>,
    hermitian_hint: bool,
}

impl DenseOperator {
    pub fn new(window: Interval, data: Array2<C64>) -> Result<Self> {
        let dim = 1usize << window.len();
        if data.dim() != (dim, dim) {
            return Err(Error::invalid(
                "data",
                format!("shape {:?} does not match window {window}", data.dim()),
            ));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("data", "non-finite entry"));
        }
        Ok(DenseOperator {
            window,
            data,
            hermitian_hint: false,
        })
    }

    pub(crate) fn from_parts(window: Interval, data: Array2<C64>, hermitian_hint: bool) -> Self {
        debug_assert_eq!(data.nrows(), 1usize << window.len());
        DenseOperator {
            window,
            data,
            hermitian_hint,
        }
    }

    pub fn identity(window: Interval) -> Self {
        Self::from_parts(window, Array2::eye(1usize << window.len()), true)
    }

    pub fn zeros(window: Interval) -> Self {
        let dim = 1usize << window.len();
        Self::from_parts(window, Array2::zeros((dim, dim)), true)
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(window: Interval) -> Self {
        let dim = 1usize << window.len();
        Self::from_parts(window, Array2::eye(dim).mapv(|z: C64| z / dim as f64), true)
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    pub fn data(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<C64> {
        self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    pub fn set_hermitian_hint(&mut self, hint: bool) {
        self.hermitian_hint = hint;
    }

    pub fn with_hermitian_hint(mut self, hint: bool) -> Self {
        self.hermitian_hint = hint;
        self
    }

    pub fn trace(&self) -> C64 {
        self.data.diag().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |a_ij − conj(a_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max((self.data[[i, j]] - self.data[[j, i]].conj()).norm());
            }
        }
        worst
    }

    pub fn scaled(&self, c: C64) -> DenseOperator {
        Self::from_parts(
            self.window,
            self.data.mapv(|z| z * c),
            self.hermitian_hint && c.im == 0.0,
        )
    }

    pub fn adjoint(&self) -> DenseOperator {
        Self::from_parts(self.window, linalg::adjoint(&self.data), self.hermitian_hint)
    }

    /// The same operator on a larger window, identity on the new sites.
    pub fn embed(&self, target: Interval) -> Result<DenseOperator> {
        if target == self.window {
            return Ok(self.clone());
        }
        let mut out = DenseOperator::zeros(target);
        out.add_embedded(self)?;
        out.hermitian_hint = self.hermitian_hint;
        Ok(out)
    }

    /// `self += other ⊗ I`, where `other.window ⊆ self.window`.
    pub fn add_embedded(&mut self, other: &DenseOperator) -> Result<()> {
        if !self.window.contains(&other.window) {
            return Err(Error::invalid(
                "window",
                format!("{} is not inside {}", other.window, self.window),
            ));
        }
        let m = other.window.len();
        let off = if m == 0 { 0 } else { other.window.start() - self.window.start() };
        let rbits = self.window.len() - off - m;
        let (nl, nr) = (1usize << off, 1usize << rbits);
        let dm = 1usize << m;
        for l in 0..nl {
            for i in 0..dm {
                for j in 0..dm {
                    let v = other.data[[i, j]];
                    if v == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let row = ((l * dm) + i) * nr;
                    let col = ((l * dm) + j) * nr;
                    for r in 0..nr {
                        self.data[[row + r, col + r]] += v;
                    }
                }
            }
        }
        self.hermitian_hint = self.hermitian_hint && other.hermitian_hint;
        Ok(())
    }

    fn aligned(&self, other: &DenseOperator) -> Result<(DenseOperator, DenseOperator)> {
        let w = self.window.hull(&other.window);
        Ok((self.embed(w)?, other.embed(w)?))
    }

    /// `self + other` on the hull of the two windows.
    pub fn add(&self, other: &DenseOperator) -> Result<DenseOperator> {
        let (mut a, b) = self.aligned(other)?;
        a.data += &b.data;
        a.hermitian_hint = self.hermitian_hint && other.hermitian_hint;
        Ok(a)
    }

    pub fn sub(&self, other: &DenseOperator) -> Result<DenseOperator> {
        let (mut a, b) = self.aligned(other)?;
        a.data -= &b.data;
        a.hermitian_hint = self.hermitian_hint && other.hermitian_hint;
        Ok(a)
    }

    /// Operator product `self · other` on the hull of the two windows.
    pub fn matmul(&self, other: &DenseOperator) -> Result<DenseOperator> {
        let (a, b) = self.aligned(other)?;
        Ok(Self::from_parts(a.window, a.data.dot(&b.data), false))
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &DenseOperator) -> Result<C64> {
        let (a, b) = self.aligned(other)?;
        let n = a.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += a.data[[i, j]] * b.data[[j, i]];
            }
        }
        Ok(acc)
    }

    fn check_finite(&self) -> Result<()> {
        if self.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            Err(Error::invalid("operator", "non-finite entry"))
        } else {
            Ok(())
        }
    }

    fn is_hermitian_within(&self, rel: f64) -> bool {
        self.hermiticity_defect() <= rel * self.max_abs().max(1.0)
    }
}

/// Eigen-decomposition of a Hermitian dense operator. Real symmetric inputs
/// keep real eigenvectors.
#[derive(Clone, Debug)]
pub struct Spectrum {
    window: Interval,
    values: Array1<f64>,
    vectors: Vectors,
}

#[derive(Clone, Debug)]
enum Vectors {
    Real(Array2<f64>),
    Complex(Array2<C64>),
}

impl Spectrum {
    pub fn of(op: &DenseOperator) -> Result<Spectrum> {
        op.check_finite()?;
        if !op.is_hermitian_within(1e-10) {
            return Err(Error::invalid("operator", "spectral path needs a Hermitian operator"));
        }
        let (values, vectors) = if linalg::is_real(&op.data) {
            let (w, v) = linalg::eigh_real(&linalg::re(&op.data))?;
            (w, Vectors::Real(v))
        } else {
            let (w, v) = linalg::eigh(&op.data)?;
            (w, Vectors::Complex(v))
        };
        Ok(Spectrum {
            window: op.window,
            values,
            vectors,
        })
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    /// `V f(Λ) V†`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> Array2<C64> {
        let fv: Vec<C64> = self.values.iter().map(|&x| f(x)).collect();
        match &self.vectors {
            Vectors::Real(v) => {
                let fr = Array1::from_iter(fv.iter().map(|z| z.re));
                let re = (v * &fr).dot(&v.t());
                if fv.iter().all(|z| z.im == 0.0) {
                    return linalg::complexify(&re);
                }
                let fi = Array1::from_iter(fv.iter().map(|z| z.im));
                let im = (v * &fi).dot(&v.t());
                let mut out = linalg::complexify(&re);
                out.zip_mut_with(&im, |o, &x| o.im = x);
                out
            }
            Vectors::Complex(v) => {
                let f = Array1::from(fv);
                (v * &f).dot(&linalg::adjoint(v))
            }
        }
    }

    /// `e^{−itH} A e^{itH}` for `A` on the same window.
    pub fn conjugate(&self, a: &Array2<C64>, t: f64) -> Array2<C64> {
        let v = match &self.vectors {
            Vectors::Real(v) => linalg::complexify(v),
            Vectors::Complex(v) => v.clone(),
        };
        let vh = linalg::adjoint(&v);
        let mut b = vh.dot(a).dot(&v);
        let phases: Vec<C64> = self
            .values
            .iter()
            .map(|&l| C64::from_polar(1.0, -t * l))
            .collect();
        for ((i, j), z) in b.indexed_iter_mut() {
            *z *= phases[i] * phases[j].conj();
        }
        v.dot(&b).dot(&vh)
    }
}

/// `e^{θM}`. Hermitian-hinted inputs go through the eigen-decomposition;
/// everything else through scaling and squaring of a Taylor series.
pub fn expm(m: &DenseOperator, theta: C64, guard: DenseGuard) -> Result<DenseOperator> {
    guard.check(m.window.len())?;
    m.check_finite()?;
    if !theta.re.is_finite() || !theta.im.is_finite() {
        return Err(Error::invalid("theta", "non-finite exponent"));
    }
    if theta == C64::new(0.0, 0.0) {
        return Ok(DenseOperator::identity(m.window));
    }
    if m.hermitian_hint {
        let s = Spectrum::of(m)?;
        let data = s.apply_fn(|l| (theta * l).exp());
        return Ok(DenseOperator::from_parts(m.window, data, theta.im == 0.0));
    }
    Ok(DenseOperator::from_parts(
        m.window,
        expm_taylor(&m.data.mapv(|z| z * theta)),
        false,
    ))
}

const TAYLOR_TOL: f64 = 1e-12;

fn norm1(a: &Array2<C64>) -> f64 {
    a.axis_iter(Axis(1))
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn expm_taylor(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let nrm = norm1(a);
    let squarings = if nrm > 0.5 { (nrm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a.mapv(|z| z / 2f64.powi(squarings));
    let mut sum = Array2::<C64>::eye(n);
    let mut term = Array2::<C64>::eye(n);
    // Per-step tolerance shrinks with the squarings so the final error stays
    // near TAYLOR_TOL.
    let tol = TAYLOR_TOL * 2f64.powi(-squarings).max(f64::EPSILON);
    for k in 1..64 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        sum += &term;
        if norm1(&term) <= tol * norm1(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.dot(&sum);
    }
    sum
}

/// `e^{−βH}/Z` for a Hermitian dense `H`.
pub fn gibbs_of(h: &DenseOperator, beta: f64) -> Result<DenseOperator> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::invalid("beta", format!("must be finite and ≥ 0, got {beta}")));
    }
    if beta == 0.0 {
        return Ok(DenseOperator::maximally_mixed(h.window));
    }
    let s = Spectrum::of(h)?;
    let lmin = s.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let z: f64 = s.values.iter().map(|&l| (-beta * (l - lmin)).exp()).sum();
    let data = s.apply_fn(|l| C64::new((-beta * (l - lmin)).exp() / z, 0.0));
    Ok(DenseOperator::from_parts(h.window, data, true))
}

/// Thermal state of the whole chain.
pub fn gibbs(h: &ChainHamiltonian, beta: f64, guard: DenseGuard) -> Result<DenseOperator> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::invalid("beta", format!("must be finite and ≥ 0, got {beta}")));
    }
    guard.check(h.n_sites())?;
    if beta == 0.0 {
        return Ok(DenseOperator::maximally_mixed(Interval::chain(h.n_sites())));
    }
    gibbs_of(&h.to_dense(guard)?, beta)
}

/// Thermal state of the terms of `h` inside `window`, on that window.
pub fn gibbs_window(
    h: &ChainHamiltonian,
    window: Interval,
    beta: f64,
    guard: DenseGuard,
) -> Result<DenseOperator> {
    guard.check(window.len())?;
    let hw = h.restrict(window)?.to_dense_window(window, guard)?;
    gibbs_of(&hw, beta)
}

/// `e^{−itH} A e^{itH}` on the full chain.
pub fn heisenberg(
    h: &ChainHamiltonian,
    a: &DenseOperator,
    t: f64,
    guard: DenseGuard,
) -> Result<DenseOperator> {
    guard.check(h.n_sites())?;
    let chain = Interval::chain(h.n_sites());
    let a = a.embed(chain)?;
    if t == 0.0 {
        return Ok(a);
    }
    let s = Spectrum::of(&h.to_dense(guard)?)?;
    heisenberg_with(&s, &a, t)
}

/// Heisenberg evolution reusing a precomputed spectrum.
pub fn heisenberg_with(s: &Spectrum, a: &DenseOperator, t: f64) -> Result<DenseOperator> {
    let a = a.embed(s.window)?;
    if t == 0.0 {
        return Ok(a);
    }
    let data = s.conjugate(&a.data, t);
    Ok(DenseOperator::from_parts(s.window, data, a.hermitian_hint))
}

/// Traces out every site of `d.window()` outside `keep`.
pub fn partial_trace(d: &DenseOperator, keep: Interval) -> Result<DenseOperator> {
    if !d.window.contains(&keep) {
        return Err(Error::invalid(
            "keep",
            format!("{keep} is not inside {}", d.window),
        ));
    }
    if keep == d.window {
        return Ok(d.clone());
    }
    let m = keep.len();
    let off = if m == 0 { 0 } else { keep.start() - d.window.start() };
    let rbits = d.window.len() - off - m;
    let (nl, dm, nr) = (1usize << off, 1usize << m, 1usize << rbits);
    let mut out = Array2::<C64>::zeros((dm, dm));
    for l in 0..nl {
        for i in 0..dm {
            for j in 0..dm {
                let row = (l * dm + i) * nr;
                let col = (l * dm + j) * nr;
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..nr {
                    acc += d.data[[row + r, col + r]];
                }
                out[[i, j]] += acc;
            }
        }
    }
    Ok(DenseOperator::from_parts(keep, out, d.hermitian_hint))
}

/// `tr(ρ P)` for a Pauli string inside `rho.window()`, in `O(2^n)`.
pub fn pauli_expectation(rho: &DenseOperator, p: &PauliString) -> Result<C64> {
    let w = rho.window;
    if !w.contains(&p.window()) {
        return Err(Error::invalid(
            "observable",
            format!("{} is not inside {}", p.window(), w),
        ));
    }
    let n = w.len();
    let mut flip = 0usize;
    let mut letters = Vec::new();
    for site in p.window().sites() {
        let bit = n - 1 - (site - w.start());
        let l = p.letter_at(site);
        if matches!(l, Pauli::X | Pauli::Y) {
            flip |= 1 << bit;
        }
        if l != Pauli::I {
            letters.push((bit, l));
        }
    }
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..rho.dim() {
        // ⟨j|ρP|j⟩ with P|j⟩ = phase · |j ⊕ flip⟩
        let mut phase = C64::new(1.0, 0.0);
        for &(bit, l) in &letters {
            let up = (j >> bit) & 1 == 0;
            phase *= match (l, up) {
                (Pauli::Z, false) => C64::new(-1.0, 0.0),
                (Pauli::Y, true) => C64::new(0.0, 1.0),
                (Pauli::Y, false) => C64::new(0.0, -1.0),
                _ => C64::new(1.0, 0.0),
            };
        }
        acc += rho.data[[j, j ^ flip]] * phase;
    }
    Ok(acc * p.coeff())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    /// Sum of singular values.
    Trace,
    /// Largest singular value.
    Operator,
    /// `(Σ s^p)^{1/p}` for an even `p = 2M`.
    Schatten(u32),
}

/// Singular values of `d`, from the spectrum when it is Hermitian.
fn singular_spectrum(d: &DenseOperator) -> Result<Vec<f64>> {
    d.check_finite()?;
    if d.is_hermitian_within(1e-12) {
        let w = linalg::eigvalsh(&d.data)?;
        Ok(w.iter().map(|x| x.abs()).collect())
    } else {
        Ok(linalg::singular_values(&d.data)?.to_vec())
    }
}

pub fn norm(d: &DenseOperator, kind: NormKind) -> Result<f64> {
    if let NormKind::Schatten(p) = kind {
        if p == 0 || p % 2 != 0 {
            return Err(Error::invalid("schatten", format!("order must be a positive even integer, got {p}")));
        }
    }
    let s = singular_spectrum(d)?;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    Ok(match kind {
        NormKind::Trace => s.iter().sum(),
        NormKind::Operator => smax,
        NormKind::Schatten(p) => {
            if smax == 0.0 {
                0.0
            } else {
                let sum: f64 = s.iter().map(|x| (x / smax).powi(p as i32)).sum();
                smax * sum.powf(1.0 / p as f64)
            }
        }
    })
}

/// Trace distance convention used throughout: `‖a − b‖₁` (not halved).
pub fn trace_norm_distance(a: &DenseOperator, b: &DenseOperator) -> Result<f64> {
    norm(&a.sub(b)?, NormKind::Trace)
}

pub fn operator_norm_distance(a: &DenseOperator, b: &DenseOperator) -> Result<f64> {
    norm(&a.sub(b)?, NormKind::Operator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Pauli, PauliString};
    use crate::fixtures;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: &Array2<C64>, b: &Array2<C64>, tol: f64) -> bool {
        a.dim() == b.dim() && a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= tol)
    }

    fn pauli(site: usize, p: Pauli) -> DenseOperator {
        PauliString::single(site, p).to_dense_window()
    }

    #[test]
    fn expm_zero_is_identity() {
        let h = crate::model::ChainHamiltonian::tfim(3, 1.0, 1.0).unwrap();
        let d = h.to_dense(DenseGuard::default()).unwrap();
        let e = expm(&d, c(0.0, 0.0), DenseGuard::default()).unwrap();
        assert!(close(e.data(), &Array2::eye(8), 0.0));
    }

    #[test]
    fn expm_rotation_closed_form() {
        let x = pauli(0, Pauli::X).with_hermitian_hint(true);
        let e = expm(&x, c(0.0, -std::f64::consts::FRAC_PI_2), DenseGuard::default()).unwrap();
        assert!(close(e.data(), &Pauli::X.matrix().mapv(|z| z * c(0.0, -1.0)), 1e-12));
        // same through the general path
        let e2 = expm(&x.clone().with_hermitian_hint(false), c(0.0, -std::f64::consts::FRAC_PI_2), DenseGuard::default()).unwrap();
        assert!(close(e2.data(), e.data(), 1e-12));
    }

    #[test]
    fn expm_diagonal() {
        let z = pauli(0, Pauli::Z).with_hermitian_hint(true);
        let e = expm(&z, c(-1.0, 0.0), DenseGuard::default()).unwrap();
        let expect = array![[c((-1f64).exp(), 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1f64.exp(), 0.0)]];
        assert!(close(e.data(), &expect, 1e-12));
    }

    #[test]
    fn taylor_matches_spectral_for_large_norm() {
        let h = crate::model::ChainHamiltonian::tfim(4, 1.0, 0.7).unwrap();
        let d = h.to_dense(DenseGuard::default()).unwrap();
        let a = expm(&d, c(-1.3, 0.4), DenseGuard::default()).unwrap();
        let b = expm(&d.clone().with_hermitian_hint(false), c(-1.3, 0.4), DenseGuard::default()).unwrap();
        let scale = a.max_abs();
        assert!(close(a.data(), b.data(), 1e-11 * scale));
    }

    #[test]
    fn gibbs_single_site_and_pair() {
        let z = pauli(0, Pauli::Z).with_hermitian_hint(true);
        let rho = gibbs_of(&z, 1.0).unwrap();
        let ez = rho.trace_product(&pauli(0, Pauli::Z)).unwrap();
        assert!((ez.re + 1f64.tanh()).abs() < 1e-12);

        let h = crate::model::ChainHamiltonian::tfim(2, 1.0, 0.0).unwrap();
        let rho = gibbs(&h, 1.0, DenseGuard::default()).unwrap();
        let zz = PauliString::parse(0, "ZZ").unwrap().to_dense_window();
        assert!((rho.trace_product(&zz).unwrap().re - 1f64.tanh()).abs() < 1e-12);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gibbs_infinite_temperature() {
        let h = crate::model::ChainHamiltonian::tfim(3, 1.0, 1.0).unwrap();
        let rho = gibbs(&h, 0.0, DenseGuard::default()).unwrap();
        assert!(close(rho.data(), &Array2::eye(8).mapv(|z: C64| z / 8.0), 0.0));
        assert!(gibbs(&h, -1.0, DenseGuard::default()).unwrap_err().is_validation());
    }

    #[test]
    fn heisenberg_spin_rotation() {
        let h = crate::model::ChainHamiltonian::new(
            1,
            vec![crate::model::LocalTerm::new(Interval::single(0), Pauli::Z.matrix()).unwrap()],
            2.0,
            2.0,
        )
        .unwrap();
        let t = 0.37;
        let out = heisenberg(&h, &pauli(0, Pauli::X), t, DenseGuard::default()).unwrap();
        let expect = Pauli::X.matrix().mapv(|z| z * (2.0 * t).cos()) + Pauli::Y.matrix().mapv(|z| z * (2.0 * t).sin());
        assert!(close(out.data(), &expect, 1e-12));
    }

    #[test]
    fn partial_trace_bell_and_product() {
        let s = 0.5f64.sqrt();
        let phi = array![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)];
        let bell = Array2::from_shape_fn((4, 4), |(i, j)| phi[i] * phi[j].conj());
        let d = DenseOperator::new(Interval::new(0, 1), bell).unwrap();
        let r = partial_trace(&d, Interval::single(1)).unwrap();
        assert!(close(r.data(), &Array2::eye(2).mapv(|z: C64| z * 0.5), 1e-15));

        let r1 = array![[c(0.7, 0.0), c(0.1, 0.2)], [c(0.1, -0.2), c(0.3, 0.0)]];
        let r2 = array![[c(0.4, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.6, 0.0)]];
        let prod = DenseOperator::new(Interval::new(0, 1), linalg::kron(&r1, &r2)).unwrap();
        assert!(close(partial_trace(&prod, Interval::single(0)).unwrap().data(), &r1, 1e-15));
        assert!(close(partial_trace(&prod, Interval::single(1)).unwrap().data(), &r2, 1e-15));
        assert!(partial_trace(&prod, Interval::single(2)).is_err());
    }

    #[test]
    fn norms() {
        let d = DenseOperator::new(
            Interval::single(0),
            array![[c(3.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-4.0, 0.0)]],
        )
        .unwrap();
        assert!((norm(&d, NormKind::Trace).unwrap() - 7.0).abs() < 1e-12);
        assert!((norm(&d, NormKind::Operator).unwrap() - 4.0).abs() < 1e-12);
        assert!((norm(&d, NormKind::Schatten(2)).unwrap() - 5.0).abs() < 1e-12);
        assert!(norm(&d, NormKind::Schatten(3)).is_err());
        assert!((norm(&pauli(0, Pauli::Y), NormKind::Operator).unwrap() - 1.0).abs() < 1e-12);
        let big = norm(&d, NormKind::Schatten(400)).unwrap();
        assert!((big - 4.0).abs() < 1e-3);
    }

    #[test]
    fn embed_places_identity() {
        let z1 = pauli(1, Pauli::Z).embed(Interval::new(0, 2)).unwrap();
        let expect = linalg::kron(&linalg::kron(&Pauli::I.matrix(), &Pauli::Z.matrix()), &Pauli::I.matrix());
        assert!(close(z1.data(), &expect, 0.0));
    }

    #[test]
    fn pauli_expectation_matches_trace_product() {
        let mut rng = fixtures::rng(2);
        let rho = fixtures::random_dense(&mut rng, Interval::new(1, 4), false);
        for s in ["XYZ", "Y", "ZIX", "YY"] {
            for start in 1..=(5 - s.len()) {
                let p = PauliString::parse(start, s).unwrap().with_coeff(c(0.3, -1.1));
                let a = pauli_expectation(&rho, &p).unwrap();
                let b = rho.trace_product(&p.to_dense_window()).unwrap();
                assert!((a - b).norm() < 1e-12, "{s}@{start}");
            }
        }
        assert!(pauli_expectation(&rho, &PauliString::single(0, Pauli::X)).is_err());
    }
}
