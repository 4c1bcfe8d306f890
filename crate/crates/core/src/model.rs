//! Spin-chain Hamiltonians, Pauli-string observables and lattice metadata.
//!
//! Sites carry qubits. Dense matrices use the convention that the leftmost
//! site of a window is the most significant tensor factor, so `X` on site 0
//! of a two-site chain is `X ⊗ I`.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::linalg;
use crate::oracle::{DenseGuard, DenseOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> Array2<C64> {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => ndarray::array![[l, o], [o, l]],
            Pauli::X => ndarray::array![[o, l], [l, o]],
            Pauli::Y => ndarray::array![[o, -i], [i, o]],
            Pauli::Z => ndarray::array![[l, o], [o, -l]],
        }
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn is_identity(self) -> bool {
        self == Pauli::I
    }
}

/// `coeff · σ_{a} ⊗ … ⊗ σ_{b}` on the window `[a,b]`, identity elsewhere.
///
/// The outermost letters are never the identity; the global identity is the
/// string with an empty window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliString {
    window: Interval,
    letters: Vec<Pauli>,
    coeff: C64,
}

impl PauliString {
    pub fn new(start: usize, letters: Vec<Pauli>, coeff: C64) -> Result<Self> {
        if letters.is_empty() {
            return Ok(PauliString {
                window: Interval::empty(),
                letters,
                coeff,
            });
        }
        if letters.first().copied() == Some(Pauli::I) || letters.last().copied() == Some(Pauli::I) {
            return Err(Error::invalid(
                "letters",
                "outermost letters of a Pauli string must be non-identity",
            ));
        }
        Ok(PauliString {
            window: Interval::with_len(start, letters.len()),
            letters,
            coeff,
        })
    }

    /// Parses letters such as `"XIZ"` placed from `start`.
    pub fn parse(start: usize, letters: &str) -> Result<Self> {
        let letters = letters
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::invalid("letters", format!("unknown Pauli letter {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(start, letters, C64::new(1.0, 0.0))
    }

    pub fn identity() -> Self {
        PauliString {
            window: Interval::empty(),
            letters: Vec::new(),
            coeff: C64::new(1.0, 0.0),
        }
    }

    pub fn single(site: usize, p: Pauli) -> Self {
        if p.is_identity() {
            return PauliString::identity();
        }
        PauliString {
            window: Interval::single(site),
            letters: vec![p],
            coeff: C64::new(1.0, 0.0),
        }
    }

    pub fn with_coeff(mut self, coeff: C64) -> Self {
        self.coeff = coeff;
        self
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn coeff(&self) -> C64 {
        self.coeff
    }

    pub fn is_identity(&self) -> bool {
        self.window.is_empty()
    }

    /// Letter acting on `site` (identity outside the window).
    pub fn letter_at(&self, site: usize) -> Pauli {
        if self.window.contains_site(site) {
            self.letters[site - self.window.start()]
        } else {
            Pauli::I
        }
    }

    /// Same letters anchored at `start`.
    pub fn moved_to(&self, start: usize) -> PauliString {
        let mut out = self.clone();
        if !out.window.is_empty() {
            out.window = Interval::with_len(start, out.letters.len());
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.coeff.norm()
    }

    /// Dense matrix on the window (a 1×1 matrix for the identity string).
    pub fn window_matrix(&self) -> Array2<C64> {
        let mut m = Array2::from_elem((1, 1), self.coeff);
        for p in &self.letters {
            m = linalg::kron(&m, &p.matrix());
        }
        m
    }

    pub fn to_dense_window(&self) -> DenseOperator {
        DenseOperator::from_parts(self.window, self.window_matrix(), self.coeff.im == 0.0)
    }

    /// Embedding into a chain of `n` sites.
    pub fn to_dense(&self, n: usize, guard: DenseGuard) -> Result<DenseOperator> {
        self.check_fits(n)?;
        guard.check(n)?;
        self.to_dense_window().embed(Interval::chain(n))
    }

    pub(crate) fn check_fits(&self, n: usize) -> Result<()> {
        if self.window.end() > n {
            return Err(Error::invalid(
                "observable",
                format!("window {} exceeds chain of {n} sites", self.window),
            ));
        }
        Ok(())
    }
}

/// `A = w Σ_x A_x` with one Pauli string per anchor and `w = 1/N` when
/// normalized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensiveObservable {
    n_sites: usize,
    terms: Vec<PauliString>,
    normalized: bool,
}

impl ExtensiveObservable {
    pub fn new(n_sites: usize, terms: Vec<PauliString>, normalized: bool) -> Result<Self> {
        for t in &terms {
            t.check_fits(n_sites)?;
        }
        Ok(ExtensiveObservable {
            n_sites,
            terms,
            normalized,
        })
    }

    /// `(1/N) Σ_x` of `letters` anchored at every site where they fit.
    pub fn uniform(n_sites: usize, letters: &str) -> Result<Self> {
        let proto = PauliString::parse(0, letters)?;
        let k = proto.window().len();
        if k == 0 || k > n_sites {
            return Err(Error::invalid("letters", "uniform observable needs 1 ≤ k ≤ N"));
        }
        let terms = (0..=n_sites - k).map(|x| proto.moved_to(x)).collect();
        ExtensiveObservable::new(n_sites, terms, true)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// The overall prefactor `w`.
    pub fn weight(&self) -> f64 {
        if self.normalized {
            1.0 / self.n_sites as f64
        } else {
            1.0
        }
    }

    /// Largest window among the terms.
    pub fn max_window(&self) -> usize {
        self.terms.iter().map(|t| t.window().len()).max().unwrap_or(0)
    }

    /// Upper bound on the operator norm of every term.
    pub fn term_norm_bound(&self) -> f64 {
        self.terms.iter().map(PauliString::norm).fold(0.0, f64::max)
    }

    /// Every term scaled by the prefactor.
    pub fn weighted_terms(&self) -> impl Iterator<Item = PauliString> + '_ {
        let w = self.weight();
        self.terms.iter().map(move |t| t.clone().with_coeff(t.coeff() * w))
    }

    pub fn to_dense(&self, guard: DenseGuard) -> Result<DenseOperator> {
        guard.check(self.n_sites)?;
        let full = Interval::chain(self.n_sites);
        let mut acc = DenseOperator::zeros(full);
        for t in self.weighted_terms() {
            acc.add_embedded(&t.to_dense_window())?;
        }
        Ok(acc)
    }
}

/// One Hermitian interaction term `h_x` on a contiguous support.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalTerm {
    support: Interval,
    matrix: Array2<C64>,
    norm: f64,
}

impl LocalTerm {
    pub fn new(support: Interval, matrix: Array2<C64>) -> Result<Self> {
        let dim = 1usize << support.len();
        if support.is_empty() || matrix.dim() != (dim, dim) {
            return Err(Error::invalid(
                "terms",
                format!("matrix of shape {:?} does not match support {support}", matrix.dim()),
            ));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("terms", "non-finite matrix entry"));
        }
        let scale = matrix.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        for i in 0..dim {
            for j in 0..dim {
                if (matrix[[i, j]] - matrix[[j, i]].conj()).norm() > 1e-12 * scale {
                    return Err(Error::invalid("terms", format!("term on {support} is not Hermitian")));
                }
            }
        }
        let norm = linalg::eigvalsh(&matrix)?
            .iter()
            .fold(0.0f64, |m, &x| m.max(x.abs()));
        Ok(LocalTerm {
            support,
            matrix,
            norm,
        })
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn to_dense_window(&self) -> DenseOperator {
        DenseOperator::from_parts(self.support, self.matrix.clone(), true)
    }
}

/// Lattice constants entering the bound formulas. `gamma` and `z` are
/// declared by the user; `h` and `k_terms` follow from the terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub gamma: f64,
    pub z: f64,
    pub d: usize,
    pub h: f64,
    pub k_terms: usize,
}

/// Open chain `H = Σ_x h_x`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainHamiltonian {
    n_sites: usize,
    terms: Vec<LocalTerm>,
    range: usize,
    geometry: Geometry,
}

pub const DEFAULT_GAMMA: f64 = 2.0;
pub const DEFAULT_Z: f64 = 2.0;

impl ChainHamiltonian {
    pub fn new(n_sites: usize, terms: Vec<LocalTerm>, gamma: f64, z: f64) -> Result<Self> {
        if n_sites < 1 {
            return Err(Error::invalid("n", "chain needs at least one site"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) || !(z > 0.0 && z.is_finite()) {
            return Err(Error::invalid("geometry", "gamma and z must be positive"));
        }
        for t in &terms {
            if t.support.end() > n_sites {
                return Err(Error::invalid(
                    "terms",
                    format!("support {} outside chain [0,{}]", t.support, n_sites - 1),
                ));
            }
        }
        Ok(Self::assemble(n_sites, terms, gamma, z))
    }

    fn assemble(n_sites: usize, terms: Vec<LocalTerm>, gamma: f64, z: f64) -> Self {
        let range = terms.iter().map(|t| t.support.len()).max().unwrap_or(0);
        let h = terms.iter().map(|t| t.norm).fold(0.0, f64::max);
        let geometry = Geometry {
            gamma,
            z,
            d: 1,
            h,
            k_terms: terms.len(),
        };
        ChainHamiltonian {
            n_sites,
            terms,
            range,
            geometry,
        }
    }

    /// Transverse-field Ising chain `−J Σ Z_i Z_{i+1} − g Σ X_i`.
    /// Zero couplings produce no terms.
    pub fn tfim(n: usize, j: f64, g: f64) -> Result<Self> {
        check_coupling("j", j)?;
        check_coupling("g", g)?;
        let zz = linalg::kron(&Pauli::Z.matrix(), &Pauli::Z.matrix());
        let x = Pauli::X.matrix();
        let mut terms = Vec::new();
        if j != 0.0 {
            for i in 0..n.saturating_sub(1) {
                terms.push(LocalTerm::new(Interval::new(i, i + 1), zz.mapv(|v| v * -j))?);
            }
        }
        if g != 0.0 {
            for i in 0..n {
                terms.push(LocalTerm::new(Interval::single(i), x.mapv(|v| v * -g))?);
            }
        }
        ChainHamiltonian::new(n, terms, DEFAULT_GAMMA, DEFAULT_Z)
    }

    /// `Σ Jx X_iX_{i+1} + Jy Y_iY_{i+1} + Jz Z_iZ_{i+1}`.
    pub fn xxz(n: usize, jx: f64, jy: f64, jz: f64) -> Result<Self> {
        check_coupling("jx", jx)?;
        check_coupling("jy", jy)?;
        check_coupling("jz", jz)?;
        let pair = |p: Pauli| linalg::kron(&p.matrix(), &p.matrix());
        let bond = pair(Pauli::X).mapv(|v| v * jx) + pair(Pauli::Y).mapv(|v| v * jy) + pair(Pauli::Z).mapv(|v| v * jz);
        let mut terms = Vec::new();
        if bond.iter().any(|z| z.norm() > 0.0) {
            for i in 0..n.saturating_sub(1) {
                terms.push(LocalTerm::new(Interval::new(i, i + 1), bond.clone())?);
            }
        }
        ChainHamiltonian::new(n, terms, DEFAULT_GAMMA, DEFAULT_Z)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn terms(&self) -> &[LocalTerm] {
        &self.terms
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Same lattice constants, overriding the declared `gamma` and `z`.
    pub fn with_lattice_constants(mut self, gamma: f64, z: f64) -> Result<Self> {
        if !(gamma > 0.0) || !(z > 0.0) {
            return Err(Error::invalid("geometry", "gamma and z must be positive"));
        }
        self.geometry.gamma = gamma;
        self.geometry.z = z;
        Ok(self)
    }

    /// Keeps exactly the terms whose support lies inside `window`; the chain
    /// length and the declared lattice constants are unchanged.
    pub fn restrict(&self, window: Interval) -> Result<ChainHamiltonian> {
        if window.end() > self.n_sites {
            return Err(Error::invalid(
                "window",
                format!("{window} outside chain of {} sites", self.n_sites),
            ));
        }
        let terms = self
            .terms
            .iter()
            .filter(|t| !window.is_empty() && window.contains(&t.support))
            .cloned()
            .collect();
        Ok(Self::assemble(self.n_sites, terms, self.geometry.gamma, self.geometry.z))
    }

    /// Dense matrix of the terms on `window` (all terms must fit in it).
    pub fn to_dense_window(&self, window: Interval, guard: DenseGuard) -> Result<DenseOperator> {
        guard.check(window.len())?;
        let mut acc = DenseOperator::zeros(window);
        for t in &self.terms {
            if !window.contains(&t.support) {
                return Err(Error::invalid(
                    "window",
                    format!("term on {} does not fit in {window}", t.support),
                ));
            }
            acc.add_embedded(&t.to_dense_window())?;
        }
        acc.set_hermitian_hint(true);
        Ok(acc)
    }

    pub fn to_dense(&self, guard: DenseGuard) -> Result<DenseOperator> {
        self.to_dense_window(Interval::chain(self.n_sites), guard)
    }

    /// Smallest interval holding every term, empty when there are none.
    pub fn support_hull(&self) -> Interval {
        self.terms
            .iter()
            .fold(Interval::empty(), |acc, t| acc.hull(&t.support))
    }

    /// Whether all pairs of terms commute (checked densely on their joint
    /// support).
    pub fn is_commuting(&self) -> Result<bool> {
        for (i, a) in self.terms.iter().enumerate() {
            for b in &self.terms[i + 1..] {
                if !a.support.overlaps(&b.support) {
                    continue;
                }
                let w = a.support.hull(&b.support);
                let da = a.to_dense_window().embed(w)?;
                let db = b.to_dense_window().embed(w)?;
                let comm = da.matmul(&db)?.sub(&db.matmul(&da)?)?;
                if comm.max_abs() > 1e-12 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

fn check_coupling(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, "coupling must be finite"))
    }
}

/// JSON model descriptor.
///
/// ```json
/// {"type": "tfim", "n": 8, "j": 1.0, "g": 1.0}
/// {"type": "custom", "n": 3, "terms": [{"support": [0, 1], "matrix": [[1,0],[0,0], …]}]}
/// ```
///
/// Custom matrices are row-major lists of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(rename = "type")]
    pub kind: ModelKind,
    pub n: usize,
    #[serde(default)]
    pub j: Option<f64>,
    #[serde(default)]
    pub g: Option<f64>,
    #[serde(default)]
    pub jx: Option<f64>,
    #[serde(default)]
    pub jy: Option<f64>,
    #[serde(default)]
    pub jz: Option<f64>,
    #[serde(default)]
    pub terms: Option<Vec<CustomTerm>>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub z: Option<f64>,
    #[serde(default)]
    pub boundary: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tfim,
    Xxz,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomTerm {
    /// Inclusive `[first, last]`.
    pub support: [usize; 2],
    pub matrix: Vec<[f64; 2]>,
}

impl ModelSpec {
    pub fn tfim(n: usize, j: f64, g: f64) -> Self {
        ModelSpec {
            kind: ModelKind::Tfim,
            n,
            j: Some(j),
            g: Some(g),
            jx: None,
            jy: None,
            jz: None,
            terms: None,
            gamma: None,
            z: None,
            boundary: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Builds the chain described by `spec`.
pub fn build_standard_model(spec: &ModelSpec) -> Result<ChainHamiltonian> {
    if spec.n < 1 {
        return Err(Error::invalid("n", "chain needs at least one site"));
    }
    match spec.boundary.as_deref() {
        None | Some("open") => {}
        Some(other) => {
            return Err(Error::invalid(
                "boundary",
                format!("only open chains are supported, got {other:?}"),
            ))
        }
    }
    let j = spec.j.unwrap_or(1.0);
    let h = match spec.kind {
        ModelKind::Tfim => ChainHamiltonian::tfim(spec.n, j, spec.g.unwrap_or(1.0))?,
        ModelKind::Xxz => ChainHamiltonian::xxz(
            spec.n,
            spec.jx.unwrap_or(j),
            spec.jy.unwrap_or(j),
            spec.jz.unwrap_or(j),
        )?,
        ModelKind::Custom => {
            let raw = spec
                .terms
                .as_ref()
                .ok_or_else(|| Error::invalid("terms", "custom model needs a term list"))?;
            let mut terms = Vec::with_capacity(raw.len());
            for t in raw {
                let [a, b] = t.support;
                if b < a || b >= spec.n {
                    return Err(Error::invalid(
                        "terms",
                        format!("support [{a},{b}] outside chain [0,{}]", spec.n - 1),
                    ));
                }
                let dim = 1usize << (b - a + 1);
                if t.matrix.len() != dim * dim {
                    return Err(Error::invalid(
                        "terms",
                        format!("support [{a},{b}] needs {} entries, got {}", dim * dim, t.matrix.len()),
                    ));
                }
                let m = Array2::from_shape_vec(
                    (dim, dim),
                    t.matrix.iter().map(|[re, im]| C64::new(*re, *im)).collect(),
                )
                .expect("length checked");
                terms.push(LocalTerm::new(Interval::new(a, b), m)?);
            }
            ChainHamiltonian::new(spec.n, terms, DEFAULT_GAMMA, DEFAULT_Z)?
        }
    };
    h.with_lattice_constants(spec.gamma.unwrap_or(DEFAULT_GAMMA), spec.z.unwrap_or(DEFAULT_Z))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn guard() -> DenseGuard {
        DenseGuard::default()
    }

    #[test]
    fn tfim_two_sites_no_field() {
        let h = ChainHamiltonian::tfim(2, 1.0, 0.0).unwrap();
        assert_eq!(h.geometry().k_terms, 1);
        assert!((h.geometry().h - 1.0).abs() < 1e-12);
        let d = h.to_dense(guard()).unwrap();
        let expect = linalg::kron(&Pauli::Z.matrix(), &Pauli::Z.matrix()).mapv(|v| -v);
        assert!(d.data().iter().zip(expect.iter()).all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn tfim_three_sites_counts() {
        let h = ChainHamiltonian::tfim(3, 1.0, 1.0).unwrap();
        assert_eq!(h.geometry().k_terms, 5);
        assert_eq!(h.range(), 2);
    }

    #[test]
    fn xxz_bond_norm_is_three() {
        let h = ChainHamiltonian::xxz(2, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(h.terms().len(), 1);
        // spectrum of XX+YY+ZZ is {1,1,1,-3}
        let w = linalg::eigvalsh(h.terms()[0].matrix()).unwrap();
        assert!((w[0] + 3.0).abs() < 1e-12);
        assert!(w.iter().skip(1).all(|x| (x - 1.0).abs() < 1e-12));
        assert!((h.geometry().h - 3.0).abs() < 1e-12);
    }

    #[test]
    fn restrict_counts_terms_inside() {
        let h = ChainHamiltonian::tfim(3, 1.0, 1.0).unwrap();
        assert_eq!(h.restrict(Interval::new(0, 2)).unwrap().geometry().k_terms, 5);
        assert_eq!(h.restrict(Interval::new(0, 0)).unwrap().geometry().k_terms, 1);
        assert_eq!(h.restrict(Interval::new(0, 1)).unwrap().geometry().k_terms, 3);
        assert_eq!(h.restrict(Interval::empty()).unwrap().geometry().k_terms, 0);
        assert!(h.restrict(Interval::new(2, 3)).is_err());
    }

    #[test]
    fn restrict_nests() {
        let h = ChainHamiltonian::tfim(8, 0.7, 1.3).unwrap();
        let w1 = Interval::new(1, 6);
        let w2 = Interval::new(2, 4);
        let a = h.restrict(w1).unwrap().restrict(w2).unwrap();
        let b = h.restrict(w1.intersect(&w2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pauli_embeddings() {
        let id = PauliString::identity().to_dense(2, guard()).unwrap();
        assert!(id.data().iter().zip(Array2::<C64>::eye(4).iter()).all(|(a, b)| a == b));
        let x0 = PauliString::single(0, Pauli::X).to_dense(2, guard()).unwrap();
        let expect = linalg::kron(&Pauli::X.matrix(), &Pauli::I.matrix());
        assert_eq!(x0.data(), &expect);
        let ext = ExtensiveObservable::uniform(2, "Z").unwrap().to_dense(guard()).unwrap();
        let expect = (linalg::kron(&Pauli::Z.matrix(), &Pauli::I.matrix())
            + linalg::kron(&Pauli::I.matrix(), &Pauli::Z.matrix()))
        .mapv(|v| v * 0.5);
        assert!(ext.data().iter().zip(expect.iter()).all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn pauli_string_rejects_identity_edges() {
        assert!(PauliString::parse(0, "IX").is_err());
        assert!(PauliString::parse(0, "XIZ").is_ok());
    }

    #[test]
    fn custom_model_validation() {
        let bad_herm = r#"{"type":"custom","n":2,"terms":[{"support":[0,0],"matrix":[[0,0],[1,0],[0,0],[0,0]]}]}"#;
        let e = build_standard_model(&ModelSpec::from_json(bad_herm).unwrap()).unwrap_err();
        assert!(e.is_validation());
        let outside = r#"{"type":"custom","n":2,"terms":[{"support":[1,2],"matrix":[]}]}"#;
        assert!(build_standard_model(&ModelSpec::from_json(outside).unwrap()).is_err());
        let ok = r#"{"type":"custom","n":2,"terms":[{"support":[1,1],"matrix":[[1,0],[0,0],[0,0],[-1,0]]}]}"#;
        let h = build_standard_model(&ModelSpec::from_json(ok).unwrap()).unwrap();
        assert_eq!(h.geometry().k_terms, 1);
        let periodic = r#"{"type":"tfim","n":4,"boundary":"periodic"}"#;
        assert!(build_standard_model(&ModelSpec::from_json(periodic).unwrap()).is_err());
        assert!(build_standard_model(&ModelSpec::tfim(0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn factory_models_are_hermitian_and_h_matches() {
        for h in [
            ChainHamiltonian::tfim(5, 1.0, 0.4).unwrap(),
            ChainHamiltonian::xxz(5, 1.0, 0.5, -0.3).unwrap(),
        ] {
            let d = h.to_dense(guard()).unwrap();
            assert!(d.hermiticity_defect() < 1e-12);
            let max_norm = h.terms().iter().map(|t| t.norm()).fold(0.0, f64::max);
            assert_eq!(max_norm, h.geometry().h);
        }
    }
}
