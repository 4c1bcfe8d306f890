use std::fs;
use std::path::Path;

use loctens::bounds::{self, BoundInputs};
use loctens::model::{build_standard_model, ModelSpec};
use loctens::{cluster, condmap, evolve, oracle, response, thermal, verify};
use loctens::{ChainHamiltonian, DenseGuard, Error, ExtensiveObservable, Interval, PauliString};
use serde_json::{json, Value};

use crate::args::*;
use crate::report::{fmt_f64, num, value_of, Table};

/// Everything a command produces before anything is written.
pub struct Outcome {
    /// Command parameters with input files replaced by their parsed contents.
    pub config: Value,
    pub results: Value,
    pub table: Option<Table>,
    /// False when a check the command performs did not hold.
    pub passed: bool,
}

/// Largest tensor-vs-reference deviation `condmap-verify` accepts.
pub const CONDMAP_THRESHOLD: f64 = 1e-10;

fn read_input(path: &Path, field: &str) -> loctens::Result<String> {
    fs::read_to_string(path).map_err(|e| Error::invalid(field, format!("cannot read {}: {e}", path.display())))
}

fn load_model(path: &Path) -> loctens::Result<(ModelSpec, ChainHamiltonian)> {
    let spec = ModelSpec::from_json(&read_input(path, "model")?)
        .map_err(|e| Error::invalid("model", e.to_string()))?;
    let h = build_standard_model(&spec)?;
    Ok((spec, h))
}

fn guard_of(c: &Common) -> loctens::Result<DenseGuard> {
    if c.dense_guard < 1 {
        return Err(Error::invalid("dense-guard", "must be at least 1"));
    }
    Ok(DenseGuard::new(c.dense_guard))
}

fn config_with_model<T: serde::Serialize>(args: &T, spec: &ModelSpec) -> Value {
    let mut v = value_of(args);
    v["model"] = value_of(spec);
    v
}

fn positive(field: &str, x: f64) -> loctens::Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be positive and finite, got {x}")))
    }
}

fn finite(field: &str, xs: &[f64]) -> loctens::Result<()> {
    match xs.iter().find(|x| !x.is_finite()) {
        Some(x) => Err(Error::invalid(field, format!("must be finite, got {x}"))),
        None => Ok(()),
    }
}

fn nonneg_beta(beta: f64) -> loctens::Result<()> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("beta", format!("must be finite and ≥ 0, got {beta}")))
    }
}

fn pauli_at(letters: &str, at: Option<usize>, n: usize) -> loctens::Result<PauliString> {
    let len = letters.chars().count();
    if len == 0 || len > n {
        return Err(Error::invalid("pauli", format!("need 1 to {n} letters, got {len}")));
    }
    let start = at.unwrap_or((n - len) / 2);
    if start + len > n {
        return Err(Error::invalid("at", format!("string of {len} letters at {start} leaves the chain")));
    }
    PauliString::parse(start, letters).map_err(|e| Error::invalid("pauli", e.to_string()))
}

pub fn run(cmd: &Command) -> loctens::Result<Outcome> {
    match cmd {
        Command::Thermal(a) => thermal_cmd(a),
        Command::Cluster(a) => cluster_cmd(a),
        Command::Evolve(a) => evolve_cmd(a),
        Command::Lr(a) => lr_cmd(a),
        Command::CondmapVerify(a) => condmap_cmd(a),
        Command::Corr(a) => corr_cmd(a),
        Command::Quench(a) => quench_cmd(a),
        Command::Bounds(a) => bounds_cmd(a),
        Command::Verify(a) => verify_cmd(a),
    }
}

fn thermal_cmd(a: &ThermalArgs) -> loctens::Result<Outcome> {
    let guard = guard_of(&a.common)?;
    let (spec, h) = load_model(&a.model)?;
    nonneg_beta(a.beta)?;
    positive("tol", a.tol)?;
    let n = h.n_sites();
    if let Some(&l0) = a.l0.iter().find(|&&l| l < 1 || l > n) {
        return Err(Error::invalid("l0", format!("need 1 ≤ l0 ≤ N = {n}, got {l0}")));
    }
    if a.k < 1 || a.k > n {
        return Err(Error::invalid("k", format!("need 1 ≤ k ≤ N = {n}, got {}", a.k)));
    }
    let rows = thermal::marginal_error_profile(&h, a.beta, &a.l0, a.k, a.tol, guard)?;
    let mut table = Table::new(&["window_start", "l0", "trace_distance"]);
    for r in &rows {
        for &(x, e) in &r.per_window {
            table.push(vec![x.to_string(), r.l0.to_string(), fmt_f64(e)]);
        }
    }
    let per_l0: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "l0": r.l0,
                "max_error": num(r.max_error),
                "bond": r.bond,
                "per_block_bond": r.per_block_bond,
                "discarded_weight": num(r.discarded_weight),
            })
        })
        .collect();
    Ok(Outcome {
        config: config_with_model(a, &spec),
        results: json!({ "n": n, "window_width": a.k, "per_l0": per_l0 }),
        table: Some(table),
        passed: true,
    })
}

fn cluster_cmd(a: &ClusterArgs) -> loctens::Result<Outcome> {
    let guard = guard_of(&a.common)?;
    let (spec, h) = load_model(&a.model)?;
    nonneg_beta(a.beta)?;
    if a.big_l < 1 {
        return Err(Error::invalid("L", "must be at least 1"));
    }
    if a.big_m < 1 {
        return Err(Error::invalid("M", "must be at least 1"));
    }
    guard.check(h.n_sites())?;
    let r = cluster::cluster_report(&h, a.beta, a.big_l, a.big_m, guard)?;
    let mut results = value_of(&r);
    results["bound"] = num(r.bound);
    Ok(Outcome {
        config: config_with_model(a, &spec),
        results,
        table: None,
        passed: true,
    })
}

fn evolve_cmd(a: &EvolveArgs) -> loctens::Result<Outcome> {
    let guard = guard_of(&a.common)?;
    let (spec, h) = load_model(&a.model)?;
    finite("t", &a.t)?;
    positive("tol", a.tol)?;
    let n = h.n_sites();
    if let Some(&w) = a.w.iter().find(|&&w| w < 2 || w % 2 != 0) {
        return Err(Error::invalid("w", format!("must be even and at least 2, got {w}")));
    }
    if let Some(&w) = a.w.iter().find(|&&w| w > n) {
        return Err(Error::invalid("w", format!("must not exceed N = {n}, got {w}")));
    }
    let op = pauli_at(&a.pauli, a.at, n)?;
    let op_letters = &a.pauli;
    guard.check(n)?;
    let chain = Interval::chain(n);
    let spectrum = oracle::Spectrum::of(&h.to_dense(guard)?)?;
    let a_full = op.to_dense(n, guard)?;
    let mut table = Table::new(&["w", "t", "operator_norm_error"]);
    let mut points = Vec::new();
    for &w in &a.w {
        for &t in &a.t {
            let exact = oracle::heisenberg_with(&spectrum, &a_full, t)?;
            let out = evolve::build_depth2(&h, t, w, guard)?.heisenberg_apply(&op, a.tol, guard)?;
            let err = oracle::operator_norm_distance(&exact, &out.dense.embed(chain)?)?;
            table.push(vec![w.to_string(), fmt_f64(t), fmt_f64(err)]);
            points.push(json!({
                "w": w,
                "t": num(t),
                "operator_norm_error": num(err),
                "support": [out.support.start(), out.support.end()],
                "mpo_bond": out.mpo.max_bond(),
            }));
        }
    }
    Ok(Outcome {
        config: config_with_model(a, &spec),
        results: json!({ "n": n, "operator": { "letters": op_letters, "start": op.window().start() }, "points": points }),
        table: Some(table),
        passed: true,
    })
}

fn lr_cmd(a: &LrArgs) -> loctens::Result<Outcome> {
    let guard = guard_of(&a.common)?;
    let (spec, h) = load_model(&a.model)?;
    finite("t", &a.t)?;
    let n = h.n_sites();
    let op = pauli_at(&a.pauli, Some(a.at), n)?;
    let op_letters = &a.pauli;
    let probe = match &a.probe {
        Some(s) => Some(PauliString::parse(0, s).map_err(|e| Error::invalid("probe", e.to_string()))?),
        None => None,
    };
    let res = evolve::lr_probe(&h, &op, probe.as_ref(), &a.t, &a.l, guard)?;
    let mut table = Table::new(&["t", "l", "error", "commutator"]);
    for p in &res.points {
        table.push(vec![
            fmt_f64(p.t),
            p.l.to_string(),
            fmt_f64(p.error),
            p.commutator.map(fmt_f64).unwrap_or_default(),
        ]);
    }
    Ok(Outcome {
        config: config_with_model(a, &spec),
        results: json!({ "n": n, "operator": { "letters": op_letters, "start": op.window().start() }, "fit": value_of(&res.fit) }),
        table: Some(table),
        passed: true,
    })
}

fn condmap_cmd(a: &CondmapArgs) -> loctens::Result<Outcome> {
    let guard = guard_of(&a.common)?;
    let (spec, h) = load_model(&a.model)?;
    finite("t", &[a.t])?;
    positive("tol", a.tol)?;
    guard.check(h.n_sites())?;
    let map = condmap::build_tensor_map(&h, a.t, a.l0, a.k, a.tol, guard)?;
    let dev = condmap::exhaustive_single_site_check(&map, &h, guard)?;
    let bond_ok = map.bonds.network_bond <= map.bonds.bound;
    let passed = dev <= CONDMAP_THRESHOLD && bond_ok;
    Ok(Outcome {
        config: config_with_model(a, &spec),
        results: json!({
            "n": map.n,
            "max_deviation": num(dev),
            "threshold": num(CONDMAP_THRESHOLD),
            "bonds": value_of(&map.bonds),
            "bond_within_bound": bond_ok,
            "passed": passed,
        }),
        table: None,
        passed,
    })
}

fn corr_cmd(a: &CorrArgs) -> loctens::Result<Outcome> {
    let guard = guard_of(&a.common)?;
    let (spec, h) = load_model(&a.model)?;
    nonneg_beta(a.beta)?;
    finite("t", &[a.t])?;
    positive("tol", a.tol)?;
    let n = h.n_sites();
    let obs = ExtensiveObservable::uniform(n, &a.obs).map_err(|e| Error::invalid("obs", e.to_string()))?;
    let mut derived = Value::Null;
    let k_prime = match (a.k_prime, a.eps) {
        (Some(k), _) => k,
        (None, Some(eps)) => {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::invalid("eps", format!("must lie in (0, 1), got {eps}")));
            }
            let seps: Vec<usize> = (1..n).collect();
            let fit = response::estimate_xi(&h, a.beta, &seps, guard)?;
            let k = response::default_k_prime(fit.xi, eps, a.v_lr, a.t, obs.max_window())?;
            derived = json!({ "xi": num(fit.xi), "residual": num(fit.residual), "degenerate": fit.degenerate });
            k
        }
        (None, None) => return Err(Error::invalid("k-prime", "give --k-prime or --eps")),
    };
    let r = response::autocorr_tn(&h, &obs, a.t, a.beta, k_prime, a.w, a.tol, guard)?;
    let mut table = Table::new(&["x", "y", "re", "im"]);
    for p in &r.components {
        table.push(vec![p.x.to_string(), p.y.to_string(), fmt_f64(p.value.re), fmt_f64(p.value.im)]);
    }
    let mut results = json!({
        "n": n,
        "k_prime": r.k_prime,
        "l0": r.l0,
        "w": r.w,
        "thermal_bond": r.thermal_bond,
        "value": [num(r.value.re), num(r.value.im)],
        "derived_k_prime": derived,
    });
    if let Some(exact) = r.oracle_value {
        let budget = response::autocorr_budget(&h, &obs, a.t, a.beta, k_prime, a.w, a.tol, guard)?;
        let err = (r.value - exact).norm();
        results["oracle"] = json!([num(exact.re), num(exact.im)]);
        results["abs_error"] = num(err);
        results["budget"] = json!({
            "total": num(budget.total),
            "thermal": num(budget.thermal),
            "circuit": num(budget.circuit),
        });
        results["within_budget"] = Value::Bool(err <= budget.total);
    }
    Ok(Outcome {
        config: config_with_model(a, &spec),
        results,
        table: Some(table),
        passed: true,
    })
}

fn quench_cmd(a: &QuenchArgs) -> loctens::Result<Outcome> {
    let guard = guard_of(&a.common)?;
    let (spec, h) = load_model(&a.model)?;
    finite("t", &a.t)?;
    positive("tol", a.tol)?;
    let n = h.n_sites();
    let kets = response::product_state(&a.state, n).map_err(|e| Error::invalid("state", e.to_string()))?;
    let op = pauli_at(&a.pauli, a.at, n)?;
    let op_letters = &a.pauli;
    let rows = response::quench(&h, &kets, &op, &a.t, a.w, a.tol, guard)?;
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let mut table = Table::new(&["t", "tn", "oracle", "heisenberg_error"]);
    let mut worst_excess = f64::NEG_INFINITY;
    for r in &rows {
        table.push(vec![fmt_f64(r.t), fmt_f64(r.tn), opt(r.oracle), opt(r.heisenberg_error)]);
        if let (Some(o), Some(he)) = (r.oracle, r.heisenberg_error) {
            worst_excess = worst_excess.max((r.tn - o).abs() - he);
        }
    }
    let mut results = json!({ "n": n, "operator": { "letters": op_letters, "start": op.window().start() }, "points": rows.len() });
    if worst_excess.is_finite() {
        results["max_error_minus_heisenberg_error"] = num(worst_excess);
    }
    Ok(Outcome {
        config: config_with_model(a, &spec),
        results,
        table: Some(table),
        passed: true,
    })
}

fn bounds_cmd(a: &BoundsArgs) -> loctens::Result<Outcome> {
    let text = read_input(&a.input, "in")?;
    let inputs: BoundInputs = serde_json::from_str(&text).map_err(|e| Error::invalid("in", e.to_string()))?;
    let r = bounds::evaluate_all(&inputs)?;
    // Several formulas overflow outside their regime, so every value goes through `num`.
    let results = json!({
        "label": r.label,
        "beta_star": num(r.beta_star),
        "beta_star_cluster": num(r.beta_star_cluster),
        "xi_of_beta": num(r.xi_of_beta),
        "cluster_x": num(r.cluster_x),
        "cluster_error_bound": num(r.cluster_error_bound),
        "cluster_x_squared": num(r.cluster_x_squared),
        "thermal_bond_1d": num(r.thermal_bond_1d),
        "thermal_bond_hd": num(r.thermal_bond_hd),
        "time_bond_1d": num(r.time_bond_1d),
        "condmap_bond_pauli": num(r.condmap_bond_pauli),
        "condmap_bond_arbitrary": num(r.condmap_bond_arbitrary),
        "lr_bound": num(r.lr_bound),
        "quench_bound": num(r.quench_bound),
    });
    let mut config = value_of(a);
    config["inputs"] = value_of(&inputs);
    Ok(Outcome {
        config,
        results,
        table: None,
        passed: true,
    })
}

fn verify_cmd(a: &VerifyArgs) -> loctens::Result<Outcome> {
    let guard = guard_of(&a.common)?;
    let suites = verify::parse_suites(&a.suite)?;
    if a.n < 6 {
        return Err(Error::invalid("n", format!("suites need at least 6 sites, got {}", a.n)));
    }
    guard.check(a.n)?;
    let checks = verify::run(&suites, a.n, a.common.seed, guard)?;
    let mut table = Table::new(&["suite", "check", "passed", "value", "threshold"]);
    for c in &checks {
        table.push(vec![
            c.suite.to_string(),
            c.name.clone(),
            c.passed.to_string(),
            fmt_f64(c.value),
            fmt_f64(c.threshold),
        ]);
    }
    let failed: Vec<Value> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| json!(format!("{}: {}", c.suite, c.name)))
        .collect();
    let passed = failed.is_empty();
    Ok(Outcome {
        config: value_of(a),
        results: json!({
            "suites": suites.iter().map(|s| s.name()).collect::<Vec<_>>(),
            "checks": checks.len(),
            "failed": failed,
            "passed": passed,
        }),
        table: Some(table),
        passed,
    })
}
