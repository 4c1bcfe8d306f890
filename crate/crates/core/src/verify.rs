//! Oracle-equivalence suites at a chosen chain length. Each check reports
//! the measured quantity next to the threshold it is held to.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundInputs};
use crate::cluster;
use crate::condmap;
use crate::error::{Error, Result};
use crate::evolve;
use crate::fixtures;
use crate::interval::Interval;
use crate::model::{ChainHamiltonian, ExtensiveObservable, LocalTerm, Pauli, PauliString};
use crate::mpo::Mpo;
use crate::oracle::{self, DenseGuard, DenseOperator};
use crate::response;
use crate::thermal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Oracle,
    Mpo,
    Thermal,
    Cluster,
    Evolve,
    Condmap,
    Response,
    Bounds,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Oracle,
        Suite::Mpo,
        Suite::Thermal,
        Suite::Cluster,
        Suite::Evolve,
        Suite::Condmap,
        Suite::Response,
        Suite::Bounds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Oracle => "oracle",
            Suite::Mpo => "mpo",
            Suite::Thermal => "thermal",
            Suite::Cluster => "cluster",
            Suite::Evolve => "evolve",
            Suite::Condmap => "condmap",
            Suite::Response => "response",
            Suite::Bounds => "bounds",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::invalid("suite", format!("unknown suite {s:?}")))
    }
}

/// Parses `all` or a comma-separated list of suite names.
pub fn parse_suites(s: &str) -> Result<Vec<Suite>> {
    if s == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    s.split(',').map(|x| x.trim().parse()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

struct Collector {
    suite: Suite,
    checks: Vec<Check>,
}

impl Collector {
    /// Passes when `value ≤ threshold`.
    fn at_most(&mut self, name: &str, value: f64, threshold: f64) {
        self.checks.push(Check {
            suite: self.suite,
            name: name.to_string(),
            passed: value <= threshold,
            value,
            threshold,
        });
    }

    fn holds(&mut self, name: &str, ok: bool) {
        self.checks.push(Check {
            suite: self.suite,
            name: name.to_string(),
            passed: ok,
            value: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
        });
    }
}

fn field_only(n: usize) -> Result<ChainHamiltonian> {
    let terms = (0..n)
        .map(|x| LocalTerm::new(Interval::single(x), Pauli::Z.matrix()))
        .collect::<Result<Vec<_>>>()?;
    ChainHamiltonian::new(n, terms, 1.0, 2.0)
}

fn dist(a: &DenseOperator, b: &DenseOperator) -> Result<f64> {
    Ok(a.sub(b)?.max_abs())
}

/// Runs one suite on chains of `n` sites (at least 6). `seed` drives the
/// random fixtures.
pub fn run_suite(suite: Suite, n: usize, seed: u64, guard: DenseGuard) -> Result<Vec<Check>> {
    if n < 6 {
        return Err(Error::invalid("n", format!("suites need at least 6 sites, got {n}")));
    }
    guard.check(n)?;
    let mut c = Collector { suite, checks: Vec::new() };
    match suite {
        Suite::Oracle => oracle_suite(&mut c, n, guard)?,
        Suite::Mpo => mpo_suite(&mut c, n, seed, guard)?,
        Suite::Thermal => thermal_suite(&mut c, n, guard)?,
        Suite::Cluster => cluster_suite(&mut c, guard)?,
        Suite::Evolve => evolve_suite(&mut c, n, guard)?,
        Suite::Condmap => condmap_suite(&mut c, n, guard)?,
        Suite::Response => response_suite(&mut c, n, guard)?,
        Suite::Bounds => bounds_suite(&mut c)?,
    }
    Ok(c.checks)
}

fn oracle_suite(c: &mut Collector, n: usize, guard: DenseGuard) -> Result<()> {
    let bond = ChainHamiltonian::tfim(2, 1.0, 0.0)?;
    let rho = oracle::gibbs(&bond, 1.0, guard)?;
    let energy = rho.trace_product(&bond.to_dense(guard)?)?;
    c.at_most("two-site Ising energy equals -tanh(1)", (energy.re + 1f64.tanh()).abs(), 1e-9);

    let beta: f64 = 0.8;
    let ising = ChainHamiltonian::tfim(n, 1.0, 0.0)?;
    let rho = oracle::gibbs(&ising, beta, guard)?;
    let mut worst: f64 = 0.0;
    for l in 1..n {
        let mut letters = vec![Pauli::I; l + 1];
        letters[0] = Pauli::Z;
        letters[l] = Pauli::Z;
        let zz = oracle::pauli_expectation(&rho, &PauliString::new(0, letters, C64::new(1.0, 0.0))?)?;
        worst = worst.max((zz.re - beta.tanh().powi(l as i32)).abs());
    }
    c.at_most("Ising chain correlators equal tanh(beta)^l", worst, 1e-9);

    let t: f64 = 0.3;
    let field = field_only(n)?;
    let x = PauliString::single(n / 2, Pauli::X).to_dense(n, guard)?;
    let y = PauliString::single(n / 2, Pauli::Y).to_dense(n, guard)?;
    let rotated = oracle::heisenberg(&field, &x, t, guard)?;
    let expect = x.scaled(C64::new((2.0 * t).cos(), 0.0)).add(&y.scaled(C64::new((2.0 * t).sin(), 0.0)))?;
    c.at_most("on-site field rotates X into cos(2t)X + sin(2t)Y", dist(&rotated, &expect)?, 1e-9);

    let tfim = ChainHamiltonian::tfim(n, 1.0, 1.0)?;
    let rho = oracle::gibbs(&tfim, 1.0, guard)?;
    c.at_most("Gibbs state has unit trace", (rho.trace() - C64::new(1.0, 0.0)).norm(), 1e-12);
    let half = oracle::partial_trace(&rho, Interval::with_len(1, 3))?;
    c.at_most("partial trace keeps unit trace", (half.trace() - C64::new(1.0, 0.0)).norm(), 1e-12);
    Ok(())
}

fn mpo_suite(c: &mut Collector, n: usize, seed: u64, guard: DenseGuard) -> Result<()> {
    let n = n.min(8);
    let mut rng = fixtures::rng(seed);
    let (mut round, mut add, mut compose, mut marginal, mut expect) = (0f64, 0f64, 0f64, 0f64, 0f64);
    let mut compress_excess = f64::NEG_INFINITY;
    for i in 0..20 {
        let bond = 1 + i % 4;
        let a = fixtures::random_mpo(&mut rng, n, bond);
        let b = fixtures::random_mpo(&mut rng, n, 1 + (i + 1) % 3);
        let (da, db) = (a.to_dense(guard)?, b.to_dense(guard)?);
        let scale = 1.0 + da.max_abs() + db.max_abs();
        let back = Mpo::from_dense_window(&da, n, 1e-13)?.to_dense(guard)?;
        round = round.max(dist(&back, &da)? / scale);
        let s = Mpo::add(&a, &b, C64::new(0.5, 0.1), C64::new(-1.0, 0.0))?.to_dense(guard)?;
        let s_ref = da.scaled(C64::new(0.5, 0.1)).add(&db.scaled(C64::new(-1.0, 0.0)))?;
        add = add.max(dist(&s, &s_ref)? / scale);
        let p = Mpo::compose(&a, &b)?.to_dense(guard)?;
        compose = compose.max(dist(&p, &da.matmul(&db)?)? / (1.0 + da.matmul(&db)?.max_abs()));
        let (small, rep) = Mpo::add(&a, &b, C64::new(1.0, 0.0), C64::new(1.0, 0.0))?.compress(1e-3, Some(3))?;
        let full = da.add(&db)?;
        let err = small.to_dense(guard)?.sub(&full)?.frobenius_norm();
        compress_excess = compress_excess.max(err - rep.discarded_weight.sqrt() * (1.0 + 1e-9) - 1e-10 * full.frobenius_norm());
        let keep = Interval::with_len(i % (n - 2), 2);
        let m = a.local_marginal(keep, guard)?;
        marginal = marginal.max(dist(&m, &oracle::partial_trace(&da, keep)?)? / scale);
        let ps = PauliString::parse(i % (n - 1), "XZ")?;
        let e = a.expectation(&ps)?;
        let e_ref = da.trace_product(&ps.to_dense(n, guard)?)?;
        expect = expect.max((e - e_ref).norm() / (1.0 + e_ref.norm()));
    }
    c.at_most("dense round trip", round, 1e-9);
    c.at_most("add", add, 1e-9);
    c.at_most("compose", compose, 1e-9);
    c.at_most("compression error within sqrt(discarded weight)", compress_excess, 0.0);
    c.at_most("local marginal", marginal, 1e-9);
    c.at_most("Pauli expectation", expect, 1e-9);
    Ok(())
}

fn thermal_suite(c: &mut Collector, n: usize, guard: DenseGuard) -> Result<()> {
    let h = ChainHamiltonian::tfim(n, 1.0, 1.0)?;
    let hot = thermal::marginal_error_profile(&h, 0.0, &[3], 2, 1e-12, guard)?;
    c.at_most("infinite temperature is exact", hot[0].max_error, 1e-12);
    let rows = thermal::marginal_error_profile(&h, 0.5, &[3, n - 2], 2, 1e-12, guard)?;
    c.holds("error shrinks with longer blocks", rows[1].max_error < rows[0].max_error);
    let state = thermal::build(&h, 0.5, 4, 1e-12, guard)?;
    let d = state.mpo.to_dense(guard)?;
    c.at_most("unit trace", (d.trace() - C64::new(1.0, 0.0)).norm(), 1e-10);
    c.at_most("Hermitian", d.hermiticity_defect(), 1e-10);
    Ok(())
}

fn cluster_suite(c: &mut Collector, guard: DenseGuard) -> Result<()> {
    let h = ChainHamiltonian::tfim(4, 1.0, 1.0)?;
    let k = h.terms().len();
    let hd = h.to_dense(guard)?;
    let mut worst: f64 = 0.0;
    for theta in [C64::new(-0.3, 0.0), C64::new(0.0, -0.4)] {
        let full = cluster::truncated_exp(&h, theta, k + 1, guard)?;
        worst = worst.max(dist(&full, &oracle::expm(&hd, theta, guard)?)?);
    }
    c.at_most("complete expansion is the exponential", worst, 1e-9);
    let mut violations = 0usize;
    for beta in [0.02, 0.05, 0.1] {
        for big_l in [1, 2, 3] {
            let r = cluster::cluster_report(&h, beta, big_l, 2, guard)?;
            if r.x < 1.0 && !r.bound_holds {
                violations += 1;
            }
        }
    }
    c.at_most("1-norm truncation error within the cluster bound", violations as f64, 0.0);
    let (_, m) = cluster::molnar_square(&ChainHamiltonian::tfim(4, 1.0, 1.0)?, 2.0, 4, 3, guard)?;
    c.holds("squaring error within the Hölder relation", m.holder_bound_holds);
    Ok(())
}

fn evolve_suite(c: &mut Collector, n: usize, guard: DenseGuard) -> Result<()> {
    let h = ChainHamiltonian::tfim(n, 1.0, 1.0)?;
    let circ = evolve::build_depth2(&h, 0.4, 4, guard)?;
    let u = circ.to_dense(guard)?;
    let id = DenseOperator::identity(Interval::chain(n));
    c.at_most("unitary", dist(&u.matmul(&u.adjoint())?, &id)?, 1e-9);

    let ising = ChainHamiltonian::tfim(n, 1.0, 0.0)?;
    let exact = oracle::expm(&ising.to_dense(guard)?, C64::new(0.0, -0.7), guard)?;
    let approx = evolve::build_depth2(&ising, 0.7, 2, guard)?.to_dense(guard)?;
    c.at_most("exact for commuting terms", dist(&exact, &approx)?, 1e-10);

    let a = PauliString::single(n / 2, Pauli::Z);
    let a_exact = oracle::heisenberg(&h, &a.to_dense(n, guard)?, 0.5, guard)?;
    let mut errs = Vec::new();
    for w in [2, 4, 6] {
        let out = evolve::build_depth2(&h, 0.5, w, guard)?.heisenberg_apply(&a, 1e-12, guard)?;
        errs.push(oracle::operator_norm_distance(&a_exact, &out.dense.embed(Interval::chain(n))?)?);
    }
    c.holds("Heisenberg error decreases with w", errs.windows(2).all(|p| p[1] < p[0]));

    let out = circ.heisenberg_apply(&PauliString::single(1, Pauli::X), 1e-12, guard)?;
    let full = u.matmul(&PauliString::single(1, Pauli::X).to_dense(n, guard)?)?.matmul(&u.adjoint())?;
    c.at_most("identity outside the reported support", dist(&out.dense.embed(Interval::chain(n))?, &full)?, 1e-10);
    Ok(())
}

fn condmap_suite(c: &mut Collector, n: usize, guard: DenseGuard) -> Result<()> {
    let h = ChainHamiltonian::tfim(n, 1.0, 1.0)?;
    let map = condmap::build_tensor_map(&h, 0.3, 4, 1, 1e-13, guard)?;
    c.at_most(
        "contraction equals reference for every single-site Pauli",
        condmap::exhaustive_single_site_check(&map, &h, guard)?,
        1e-10,
    );
    c.holds("network bond within D_p^2 (l0+k)^3", map.bonds.network_bond <= map.bonds.bound);
    let id = map.apply(&PauliString::identity())?;
    c.holds("identity maps to identity exactly", id == Mpo::identity(n));

    let map2 = condmap::build_tensor_map(&h, 0.3, 5, 2, 1e-13, guard)?;
    let (p, q) = (PauliString::parse(1, "XY")?, PauliString::parse(n - 3, "ZZ")?);
    let (a, b) = (C64::new(0.7, -0.2), C64::new(-0.4, 0.0));
    let lin = map2.apply_linear(&[p.clone().with_coeff(a), q.clone().with_coeff(b)], 1e-14)?.to_dense(guard)?;
    let sep = map2.apply(&p)?.to_dense(guard)?.scaled(a).add(&map2.apply(&q)?.to_dense(guard)?.scaled(b))?;
    c.at_most("linearity", dist(&lin, &sep)?, 1e-12);

    let family: Vec<_> = [0, n / 2, n - 1].map(|x| PauliString::single(x, Pauli::Z)).to_vec();
    let rows = condmap::accuracy_sweep(&h, 0.4, &[3, 6], &family, 1e-13, guard)?;
    c.holds("accuracy does not degrade with l0", rows[1].max_rel_error <= rows[0].max_rel_error);
    Ok(())
}

fn response_suite(c: &mut Collector, n: usize, guard: DenseGuard) -> Result<()> {
    let h = ChainHamiltonian::tfim(n, 1.0, 1.0)?;
    let a = ExtensiveObservable::uniform(n, "Z")?;
    let (t, beta, kp, w) = (0.3, 0.5, 6, 4);
    let r = response::autocorr_tn(&h, &a, t, beta, kp, w, 1e-10, guard)?;
    let sum = r.components.iter().fold(C64::new(0.0, 0.0), |acc, p| acc + p.value);
    c.at_most("pair table sums to total", (sum - r.value).norm(), 1e-12);
    let budget = response::autocorr_budget(&h, &a, t, beta, kp, w, 1e-10, guard)?;
    let err = (r.value - r.oracle_value.expect("dense oracle within guard")).norm();
    c.at_most("autocorrelation within component budget", err, budget.total);

    let state = response::product_state("up", n)?;
    let rows = response::quench(&h, &state, &PauliString::single(n / 2, Pauli::Z), &[0.0, 0.25, 0.5], 6.min(n - n % 2), 1e-12, guard)?;
    let excess = rows
        .iter()
        .map(|r| (r.tn - r.oracle.unwrap_or(r.tn)).abs() - r.heisenberg_error.unwrap_or(f64::INFINITY))
        .fold(f64::NEG_INFINITY, f64::max);
    c.at_most("quench error within Heisenberg error", excess, 1e-10);
    c.at_most("quench starts at the initial expectation", (rows[0].tn - 1.0).abs(), 1e-12);

    let prof = response::local_indist_profile(&h, 1.0, Interval::with_len(n / 2 - 1, 2), &[0, 1, 2], guard)?;
    c.holds("local indistinguishability improves with shield width", prof.windows(2).all(|p| p[1].1 < p[0].1));
    Ok(())
}

fn bounds_suite(c: &mut Collector) -> Result<()> {
    let gap = bounds::printed_gap;
    c.at_most("beta*(gamma=2, h=1)", gap(bounds::beta_star(2.0, 1.0), 0.15597), 1.0);
    c.at_most("xi(0.1, 2, 1)", gap(bounds::xi_of_beta(0.1, 2.0, 1.0), 1.627), 1.0);
    c.at_most("x(0.1, 2, 2, 1)", gap(bounds::cluster_x(0.1, 2.0, 2.0, 1.0), 0.2840), 1.0);
    c.at_most("cluster error(5, 3, 0.284)", gap(bounds::cluster_error_bound(5.0, 3.0, 0.284), 0.1734), 1.0);
    let lr = BoundInputs { c: 1.0, v_lr: 2.0, t: 1.0, l: 6.0, d: 1.0, norm_a: 1.0, ..Default::default() };
    c.at_most("lr bound(v=2, t=1, l=6)", gap(bounds::lr_bound(&lr)?, 0.01832), 1.0);
    let mut inputs = BoundInputs::default();
    let mut last = bounds::thermal_bond_1d(&inputs)?;
    let mut monotone = true;
    for eps in [0.05, 0.02, 0.01] {
        inputs.eps = eps;
        let v = bounds::thermal_bond_1d(&inputs)?;
        monotone &= v >= last;
        last = v;
    }
    c.holds("thermal bond grows as eps shrinks", monotone);
    let mut inputs = BoundInputs::default();
    let mut last = bounds::time_bond_1d(&inputs)?;
    let mut monotone = true;
    for t in [2.0, 3.0, 5.0] {
        inputs.t = t;
        let v = bounds::time_bond_1d(&inputs)?;
        monotone &= v >= last;
        last = v;
    }
    c.holds("time bond grows with t", monotone);
    Ok(())
}

/// Runs every suite in `suites` and concatenates the checks.
pub fn run(suites: &[Suite], n: usize, seed: u64, guard: DenseGuard) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &s in suites {
        out.extend(run_suite(s, n, seed, guard)?);
    }
    Ok(out)
}
