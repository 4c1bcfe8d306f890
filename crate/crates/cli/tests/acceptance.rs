//! Acceptance suite: one PASS/FAIL line per criterion, followed by the
//! measured quantities behind it. Exits non-zero when any criterion fails.
//!
//! Thresholds marked "frozen" were taken from the first oracle run and are
//! committed here; the rest are fixed tolerances.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use loctens::bounds::{self, BoundInputs};
use loctens::model::{LocalTerm, Pauli};
use loctens::oracle::{self, Spectrum};
use loctens::{
    cluster, condmap, evolve, fixtures, response, thermal, verify, ChainHamiltonian, DenseGuard, DenseOperator,
    ExtensiveObservable, Interval, Mpo, PauliString, C64,
};

const ORACLE_TOL: f64 = 1e-9;
const MPO_TOL: f64 = 1e-9;
const MPO_FIXTURES: usize = 200;
const CLUSTER_COMPLETE_TOL: f64 = 1e-9;
const UNITARY_TOL: f64 = 1e-9;
const COMMUTING_TOL: f64 = 1e-10;
const LIGHTCONE_TOL: f64 = 1e-10;
const V_LR_SPREAD: f64 = 0.20;
const CONDMAP_TOL: f64 = 1e-10;
const LINEARITY_TOL: f64 = 1e-12;
const PAIR_SUM_TOL: f64 = 1e-12;
const FACTORIZATION_TOL: f64 = 1e-10;
const QUENCH_SLACK: f64 = 1e-10;
const BETA_ZERO_TOL: f64 = 1e-12;
const VERIFY_LIMIT: Duration = Duration::from_secs(600);

/// Frozen worst 2-site marginal trace distances on tfim(N=10, g=1), indexed
/// by l0 = 4..=8, for β = 0.5 and β = 1.
const THERMAL_FROZEN: [(f64, [f64; 5]); 2] = [
    (
        0.5,
        [0.1042935748742142, 0.08343486044926722, 0.06952905037638064, 0.059596328894047236, 0.05214678778228871],
    ),
    (
        1.0,
        [0.16514120286734477, 0.13211424607580535, 0.11009520755346473, 0.09436732078365222, 0.08257140568628567],
    ),
];
/// Relative slack on the frozen thermal errors.
const FROZEN_SLACK: f64 = 1e-6;
/// Frozen operator-norm distance of the mapped (1/N)ΣZ_x on tfim(N=10),
/// t = 0.3, l0 = 6, to exact evolution.
const CONDMAP_EXTENSIVE: f64 = 2.225090957958375e-5;
/// Frozen RMS residual of the exponential fit to the shield-width profile.
const INDIST_RESIDUAL: f64 = 0.018352655523832494;

fn guard() -> DenseGuard {
    DenseGuard::new(12)
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn dist(a: &DenseOperator, b: &DenseOperator) -> f64 {
    a.sub(b).expect("same window").max_abs()
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

type Outcome = Result<(bool, Vec<String>), loctens::Error>;

struct Report {
    failures: usize,
}

impl Report {
    fn run(&mut self, id: usize, title: &str, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let (ok, lines) = match f() {
            Ok(r) => r,
            Err(e) => (false, vec![format!("error: {e}")]),
        };
        if !ok {
            self.failures += 1;
        }
        println!(
            "{} criterion {id:>2}: {title} ({:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for l in lines {
            println!("      {l}");
        }
    }
}

fn check(lines: &mut Vec<String>, name: &str, ok: bool, detail: String) -> bool {
    lines.push(format!("[{}] {name}: {detail}", if ok { "ok" } else { "FAILED" }));
    ok
}

fn criterion_1() -> Outcome {
    let g = guard();
    let mut lines = Vec::new();
    let mut ok = true;

    let bond = ChainHamiltonian::tfim(2, 1.0, 0.0)?;
    let rho = oracle::gibbs(&bond, 1.0, g)?;
    let e = rho.trace_product(&bond.to_dense(g)?)?;
    let d = (e - c(-(1f64.tanh()))).norm();
    ok &= check(&mut lines, "two-site energy = -tanh(1)", d <= ORACLE_TOL, format!("{d:.2e}"));

    let n = 10;
    for beta in [0.5f64, 1.0] {
        let rho = oracle::gibbs(&ChainHamiltonian::tfim(n, 1.0, 0.0)?, beta, g)?;
        let mut worst: f64 = 0.0;
        for x in 0..n {
            for l in 1..n - x {
                let mut letters = vec![Pauli::I; l + 1];
                letters[0] = Pauli::Z;
                letters[l] = Pauli::Z;
                let zz = oracle::pauli_expectation(&rho, &PauliString::new(x, letters, c(1.0))?)?;
                worst = worst.max((zz - c(beta.tanh().powi(l as i32))).norm());
            }
        }
        ok &= check(&mut lines, &format!("<Z_x Z_x+l> = tanh(β)^l, β={beta}"), worst <= ORACLE_TOL, format!("{worst:.2e}"));
        // Two-site marginal of the Ising chain is (I + tanh β ZZ)/4.
        let keep = Interval::with_len(4, 2);
        let marg = oracle::partial_trace(&rho, keep)?;
        let zz = PauliString::parse(4, "ZZ")?.to_dense_window();
        let expect = DenseOperator::identity(keep).add(&zz.scaled(c(beta.tanh())))?.scaled(c(0.25));
        let d = dist(&marg, &expect);
        ok &= check(&mut lines, &format!("Ising pair marginal, β={beta}"), d <= ORACLE_TOL, format!("{d:.2e}"));
    }

    let field = ChainHamiltonian::new(
        n,
        (0..n).map(|x| LocalTerm::new(Interval::single(x), Pauli::Z.matrix())).collect::<Result<_, _>>()?,
        1.0,
        2.0,
    )?;
    for t in [0.3f64, 1.1] {
        let mut worst: f64 = 0.0;
        for site in [0, 5, 9] {
            let x = PauliString::single(site, Pauli::X).to_dense(n, g)?;
            let y = PauliString::single(site, Pauli::Y).to_dense(n, g)?;
            let rot = oracle::heisenberg(&field, &x, t, g)?;
            let expect = x.scaled(c((2.0 * t).cos())).add(&y.scaled(c((2.0 * t).sin())))?;
            worst = worst.max(dist(&rot, &expect));
        }
        ok &= check(&mut lines, &format!("X -> cos(2t)X + sin(2t)Y, t={t}"), worst <= ORACLE_TOL, format!("{worst:.2e}"));
    }
    // expm of a Pauli: e^{iθZ} = cos θ + i sin θ Z.
    let z = PauliString::single(0, Pauli::Z).to_dense(1, g)?;
    let u = oracle::expm(&z, C64::new(0.0, 0.7), g)?;
    let expect = DenseOperator::identity(Interval::chain(1)).scaled(c(0.7f64.cos())).add(&z.scaled(C64::new(0.0, 0.7f64.sin())))?;
    let d = dist(&u, &expect);
    ok &= check(&mut lines, "expm(i 0.7 Z)", d <= ORACLE_TOL, format!("{d:.2e}"));
    Ok((ok, lines))
}

fn criterion_2() -> Outcome {
    let g = guard();
    let mut rng = fixtures::rng(20);
    let (mut round, mut add, mut compose, mut marginal, mut expect) = (0f64, 0f64, 0f64, 0f64, 0f64);
    let mut compress_excess = f64::NEG_INFINITY;
    let mut compress_calls = 0;
    for i in 0..MPO_FIXTURES {
        let n = 2 + i % 7;
        let a = fixtures::random_mpo(&mut rng, n, 1 + i % 4);
        let b = fixtures::random_mpo(&mut rng, n, 1 + (i / 7) % 3);
        let (da, db) = (a.to_dense(g)?, b.to_dense(g)?);
        let scale = 1.0 + da.max_abs() + db.max_abs();

        let back = Mpo::from_dense_window(&da, n, 1e-13)?.to_dense(g)?;
        round = round.max(dist(&back, &da) / scale);

        let (wa, wb) = (C64::new(0.3, -0.8), C64::new(-1.2, 0.4));
        let s = Mpo::add(&a, &b, wa, wb)?.to_dense(g)?;
        add = add.max(dist(&s, &da.scaled(wa).add(&db.scaled(wb))?) / scale);

        let prod = da.matmul(&db)?;
        let p = Mpo::compose(&a, &b)?.to_dense(g)?;
        compose = compose.max(dist(&p, &prod) / (1.0 + prod.max_abs()));

        let sum = Mpo::add(&a, &b, c(1.0), c(1.0))?;
        let full = da.add(&db)?;
        for (tol, cap) in [(1e-2f64, None), (1e-6, None), (1e-14, Some(2)), (1e-3, Some(3))] {
            let (small, rep) = sum.compress(tol, cap)?;
            let err = small.to_dense(g)?.sub(&full)?.frobenius_norm();
            compress_excess = compress_excess
                .max(err - rep.discarded_weight.sqrt() * (1.0 + 1e-9) - 1e-10 * full.frobenius_norm());
            compress_calls += 1;
        }

        let width = 1 + i % n.min(3);
        let keep = Interval::with_len(i % (n - width + 1), width);
        marginal = marginal.max(dist(&a.local_marginal(keep, g)?, &oracle::partial_trace(&da, keep)?) / scale);

        let letters = ["X", "YZ", "ZIX"][i % 3];
        if letters.len() <= n {
            let ps = PauliString::parse(i % (n - letters.len() + 1), letters)?;
            let e = a.expectation(&ps)?;
            let e_ref = da.trace_product(&ps.to_dense(n, g)?)?;
            expect = expect.max((e - e_ref).norm() / (1.0 + e_ref.norm()));
        }
    }
    let mut lines = vec![format!("{MPO_FIXTURES} fixtures, N = 2..8, {compress_calls} compressions")];
    let mut ok = true;
    for (name, v) in [("dense round trip", round), ("add", add), ("compose", compose), ("local marginal", marginal), ("expectation", expect)] {
        ok &= check(&mut lines, name, v <= MPO_TOL, format!("{v:.2e}"));
    }
    ok &= check(
        &mut lines,
        "compression error - sqrt(discarded weight)",
        compress_excess <= 0.0,
        format!("max {compress_excess:.2e}"),
    );
    Ok((ok, lines))
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn criterion_3() -> Outcome {
    let g = guard();
    let h = ChainHamiltonian::tfim(10, 1.0, 1.0)?;
    let l0s = [4, 5, 6, 7, 8];
    let mut lines = Vec::new();
    let mut ok = true;

    let hot = thermal::marginal_error_profile(&h, 0.0, &l0s, 2, 1e-12, g)?;
    let worst = hot.iter().map(|r| r.max_error).fold(0.0, f64::max);
    ok &= check(&mut lines, "β = 0 exact", worst <= BETA_ZERO_TOL, format!("{worst:.2e}"));

    for (beta, frozen) in THERMAL_FROZEN {
        let rows = thermal::marginal_error_profile(&h, beta, &l0s, 2, 1e-12, g)?;
        let errs: Vec<f64> = rows.iter().map(|r| r.max_error).collect();
        for r in &rows {
            let state = thermal::build(&h, beta, r.l0, 1e-12, g)?;
            let d = state.mpo.to_dense(g)?;
            let tr = (d.trace() - c(1.0)).norm();
            let herm = d.hermiticity_defect();
            ok &= check(
                &mut lines,
                &format!("β={beta} l0={} trace-1 and Hermitian", r.l0),
                tr <= 1e-10 && herm <= 1e-10,
                format!("|tr-1| {tr:.1e}, defect {herm:.1e}, bond {}", r.bond),
            );
        }
        lines.push(format!("β={beta} worst errors l0=4..8: {}", sci(&errs)));
        lines.push(format!("full precision: {errs:?}"));
        let decreasing = errs.windows(2).all(|p| p[1] < p[0]);
        ok &= check(&mut lines, &format!("β={beta} strictly decreasing in l0"), decreasing, String::new());
        let xs: Vec<f64> = l0s.iter().map(|&l| l as f64).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let s = slope(&xs, &ys);
        ok &= check(&mut lines, &format!("β={beta} log-error slope"), s < 0.0, format!("{s:.4}"));
        let excess = errs
            .iter()
            .zip(frozen)
            .map(|(e, f)| e - f * (1.0 + FROZEN_SLACK))
            .fold(f64::NEG_INFINITY, f64::max);
        ok &= check(&mut lines, &format!("β={beta} within frozen thresholds"), excess <= 0.0, format!("frozen {}", sci(&frozen)));
    }
    Ok((ok, lines))
}

fn criterion_4() -> Outcome {
    let g = guard();
    let h = ChainHamiltonian::tfim(12, 1.0, 1.0)?;
    let region = Interval::with_len(5, 2);
    let prof = response::local_indist_profile(&h, 1.0, region, &[0, 1, 2, 3, 4], g)?;
    let fit = response::fit_exponential(&prof);
    let full = fit.residual;
    let mut lines = vec![
        format!("errors at l = 0..4: {}", sci(&prof.iter().map(|p| p.1).collect::<Vec<_>>())),
        format!("fit residual {full:?}"),
    ];
    let mut ok = check(
        &mut lines,
        "monotone decrease in shield width",
        prof.windows(2).all(|p| p[1].1 < p[0].1),
        String::new(),
    );
    ok &= check(&mut lines, "decaying fit", !fit.degenerate, format!("rate {:.4}", fit.rate));
    ok &= check(
        &mut lines,
        "fit residual (frozen)",
        fit.residual <= INDIST_RESIDUAL * (1.0 + FROZEN_SLACK),
        format!("{:.6e} vs {INDIST_RESIDUAL:.6e}", fit.residual),
    );
    Ok((ok, lines))
}

fn criterion_5() -> Outcome {
    let g = guard();
    let mut lines = Vec::new();
    let mut ok = true;
    for h in [ChainHamiltonian::tfim(4, 1.0, 1.0)?, ChainHamiltonian::xxz(4, 1.0, 0.8, 0.5)?] {
        let k = h.terms().len();
        let hd = h.to_dense(g)?;
        let mut worst: f64 = 0.0;
        for theta in [C64::new(-0.7, 0.0), C64::new(0.0, -0.9), C64::new(0.0, 0.4)] {
            let full = cluster::truncated_exp(&h, theta, k + 1, g)?;
            worst = worst.max(dist(&full, &oracle::expm(&hd, theta, g)?));
        }
        ok &= check(&mut lines, &format!("L = K+1 = {} complete", k + 1), worst <= CLUSTER_COMPLETE_TOL, format!("{worst:.2e}"));
    }
    let mut points = 0;
    let mut violations = Vec::new();
    for h in [ChainHamiltonian::tfim(4, 1.0, 1.0)?, ChainHamiltonian::tfim(6, 1.0, 0.5)?] {
        for beta in [0.02, 0.05, 0.1, 0.15, 0.2] {
            for big_l in 1..=3 {
                let r = cluster::cluster_report(&h, beta, big_l, 1, g)?;
                if r.x < 1.0 {
                    points += 1;
                    if !r.bound_holds {
                        violations.push((h.n_sites(), beta, big_l, r.measured_error_1norm, r.bound));
                    }
                }
            }
        }
    }
    ok &= check(
        &mut lines,
        "1-norm error within bound on the β ≤ 0.2 grid",
        points > 0 && violations.is_empty(),
        format!("{points} points with x < 1, violations {violations:?}"),
    );
    let (_, m) = cluster::molnar_square(&ChainHamiltonian::tfim(6, 1.0, 1.0)?, 2.0, 4, 3, g)?;
    lines.push(format!(
        "N=6 β=2 M=4 L=3: premise {:.4e}, conclusion {:.4e}, Hölder bound {:.4e}, as-printed ε/M bound holds: {}",
        m.premise_rel_2m, m.conclusion_rel_1, m.holder_bound, m.printed_bound_holds
    ));
    ok &= check(&mut lines, "squaring conclusion within the Hölder relation", m.holder_bound_holds, String::new());
    Ok((ok, lines))
}

fn criterion_6() -> Outcome {
    let g = guard();
    let n = 10;
    let chain = Interval::chain(n);
    let h = ChainHamiltonian::tfim(n, 1.0, 1.0)?;
    let mut lines = Vec::new();
    let mut ok = true;

    let mut worst: f64 = 0.0;
    for (t, w) in [(0.5, 4), (1.0, 6), (-0.3, 2)] {
        let u = evolve::build_depth2(&h, t, w, g)?.to_dense(g)?;
        worst = worst.max(dist(&u.matmul(&u.adjoint())?, &DenseOperator::identity(chain)));
    }
    ok &= check(&mut lines, "unitarity", worst <= UNITARY_TOL, format!("{worst:.2e}"));

    let mut worst: f64 = 0.0;
    for hc in [ChainHamiltonian::tfim(n, 1.0, 0.0)?, ChainHamiltonian::xxz(n, 0.0, 0.0, 1.3)?] {
        for (t, w) in [(0.7, 2), (1.5, 4)] {
            let exact = oracle::expm(&hc.to_dense(g)?, C64::new(0.0, -t), g)?;
            worst = worst.max(dist(&exact, &evolve::build_depth2(&hc, t, w, g)?.to_dense(g)?));
        }
    }
    ok &= check(&mut lines, "exact for commuting Hamiltonians", worst <= COMMUTING_TOL, format!("{worst:.2e}"));

    let spectrum = Spectrum::of(&h.to_dense(g)?)?;
    for t in [0.25, 0.5] {
        let a = PauliString::single(5, Pauli::Z);
        let exact = oracle::heisenberg_with(&spectrum, &a.to_dense(n, g)?, t)?;
        let mut errs = Vec::new();
        for w in [2, 4, 6, 8] {
            let out = evolve::build_depth2(&h, t, w, g)?.heisenberg_apply(&a, 1e-12, g)?;
            errs.push(oracle::operator_norm_distance(&exact, &out.dense.embed(chain)?)?);
        }
        ok &= check(
            &mut lines,
            &format!("Heisenberg error decreasing in w = 2,4,6,8 at t={t}"),
            errs.windows(2).all(|p| p[1] < p[0]),
            sci(&errs),
        );
    }

    let circ = evolve::build_depth2(&h, 0.6, 4, g)?;
    let u = circ.to_dense(g)?;
    let mut worst: f64 = 0.0;
    for a in [PauliString::single(0, Pauli::X), PauliString::parse(4, "YZ")?, PauliString::single(9, Pauli::Y)] {
        let out = circ.heisenberg_apply(&a, 1e-12, g)?;
        let full = u.matmul(&a.to_dense(n, g)?)?.matmul(&u.adjoint())?;
        worst = worst.max(dist(&out.dense.embed(chain)?, &full));
    }
    ok &= check(&mut lines, "identity outside the reported support", worst <= LIGHTCONE_TOL, format!("{worst:.2e}"));

    let probe = evolve::lr_probe(&h, &PauliString::single(0, Pauli::Z), None, &[0.25, 0.5, 1.0], &[1, 2, 3, 4, 5, 6], g)?;
    let fit = &probe.fit;
    let slopes_negative = !fit.degenerate && fit.per_t_slope.len() == 3 && fit.per_t_slope.iter().all(|&(_, s, _)| s < 0.0);
    ok &= check(
        &mut lines,
        "ln error slope in l negative at every t",
        slopes_negative,
        format!("{:.4?}", fit.per_t_slope.iter().map(|&(t, s, _)| (t, s)).collect::<Vec<_>>()),
    );
    let vs: Vec<f64> = fit.per_t_velocity.iter().map(|&(_, v)| v).collect();
    let spread = vs.iter().map(|v| (v - fit.v_lr).abs() / fit.v_lr).fold(0.0, f64::max);
    ok &= check(
        &mut lines,
        "per-time front velocity within ±20% of v_lr",
        fit.v_lr > 0.0 && spread <= V_LR_SPREAD,
        format!("v_lr {:.4}, per-t {vs:.4?}, spread {spread:.3}", fit.v_lr),
    );
    Ok((ok, lines))
}

fn criterion_7() -> Outcome {
    let g = guard();
    let n = 10;
    let mut lines = Vec::new();
    let mut ok = true;
    let fixtures = [
        ("tfim", ChainHamiltonian::tfim(n, 1.0, 1.0)?, 0.3, 4, 1),
        ("xxz", ChainHamiltonian::xxz(n, 1.0, 1.0, 0.6)?, 0.25, 5, 1),
        ("tfim", ChainHamiltonian::tfim(n, 1.0, 0.7)?, 0.2, 4, 2),
    ];
    for (name, h, t, l0, k) in &fixtures {
        let map = condmap::build_tensor_map(h, *t, *l0, *k, 1e-13, g)?;
        let dev = condmap::exhaustive_single_site_check(&map, h, g)?;
        ok &= check(
            &mut lines,
            &format!("{name} t={t} l0={l0} k={k}: all 3N single-Pauli inputs"),
            dev <= CONDMAP_TOL,
            format!("{dev:.2e}"),
        );
        let b = map.bonds;
        ok &= check(
            &mut lines,
            "bond accounting",
            b.network_bond <= b.bound,
            format!("network {} block {} bound {}", b.network_bond, b.block_bond, b.bound),
        );
    }
    let (_, h, t, l0, k) = &fixtures[2];
    let map = condmap::build_tensor_map(h, *t, *l0, *k, 1e-13, g)?;
    let terms = [
        PauliString::parse(0, "XY")?.with_coeff(C64::new(0.7, -0.2)),
        PauliString::parse(4, "ZZ")?.with_coeff(c(-0.4)),
        PauliString::parse(8, "YX")?.with_coeff(C64::new(0.0, 1.1)),
    ];
    let lin = map.apply_linear(&terms, 1e-14)?.to_dense(g)?;
    let mut sep = DenseOperator::zeros(Interval::chain(n));
    for p in &terms {
        sep = sep.add(&map.apply(p)?.to_dense(g)?)?;
    }
    let d = dist(&lin, &sep);
    ok &= check(&mut lines, "linearity", d <= LINEARITY_TOL, format!("{d:.2e}"));

    let hs = ChainHamiltonian::tfim(n, 1.0, 1.0)?;
    let ext = ExtensiveObservable::uniform(n, "Z")?;
    let map6 = condmap::build_tensor_map(&hs, 0.3, 6, 1, 1e-13, g)?;
    let mapped = map6.apply_linear(&ext.weighted_terms().collect::<Vec<_>>(), 1e-14)?.to_dense(g)?;
    let exact = oracle::heisenberg(&hs, &ext.to_dense(g)?, 0.3, g)?;
    let d = oracle::operator_norm_distance(&exact, &mapped)?;
    lines.push(format!("extensive (1/N)ΣZ, t=0.3, l0=6: distance {d:?}"));
    ok &= check(
        &mut lines,
        "extensive observable within frozen threshold",
        d <= CONDMAP_EXTENSIVE * (1.0 + FROZEN_SLACK),
        format!("{d:.6e} vs {CONDMAP_EXTENSIVE:.6e}"),
    );
    let family: Vec<_> = [0, 3, 5, 9].map(|x| PauliString::single(x, Pauli::Z)).to_vec();
    let rows = condmap::accuracy_sweep(&hs, 0.4, &[3, 4, 6], &family, 1e-13, g)?;
    let errs: Vec<f64> = rows.iter().map(|r| r.max_rel_error).collect();
    ok &= check(
        &mut lines,
        "accuracy non-increasing over l0 = 3, 4, 6",
        errs.windows(2).all(|p| p[1] <= p[0]),
        sci(&errs),
    );
    Ok((ok, lines))
}

fn criterion_8() -> Outcome {
    let g = guard();
    let n = 10;
    let h = ChainHamiltonian::tfim(n, 1.0, 1.0)?;
    let a = ExtensiveObservable::uniform(n, "Z")?;
    let (t, beta, kp, w) = (0.5, 1.0, 6, 4);
    let mut lines = Vec::new();
    let mut ok = true;

    let r = response::autocorr_tn(&h, &a, t, beta, kp, w, 1e-10, g)?;
    let sum = r.components.iter().fold(c(0.0), |acc, p| acc + p.value);
    let d = (sum - r.value).norm();
    ok &= check(&mut lines, "pair table sums to the total", d <= PAIR_SUM_TOL, format!("{d:.2e}"));

    let exact = response::autocorr_exact(&h, &a, t, beta, g)?;
    let budget = response::autocorr_budget(&h, &a, t, beta, kp, w, 1e-10, g)?;
    let err = (r.value - exact).norm();
    ok &= check(
        &mut lines,
        "tfim(10, β=1, t=0.5) error within component budget",
        err <= budget.total,
        format!(
            "k'={kp} w={w}: |tn - exact| {err:.4e}, budget {:.4e} (thermal {:.4e}, circuit {:.4e})",
            budget.total, budget.thermal, budget.circuit
        ),
    );

    // Factorization holds inside each partition state of the thermal mixture.
    let l0 = 4;
    let circuit = evolve::build_depth2(&h, t, 2, g)?;
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for p in 0..l0 {
        let rho = thermal::partition_state(&h, beta, l0, p, 1e-12, g)?;
        let part = thermal::blocks_for(n, l0, p)?;
        for x in 0..n {
            let bx = circuit.heisenberg_apply(&PauliString::single(x, Pauli::Z), 1e-12, g)?;
            for y in 0..n {
                let ay = PauliString::single(y, Pauli::X);
                if part.blocks.iter().any(|blk| blk.overlaps(&bx.support) && blk.contains_site(y)) {
                    continue;
                }
                let joint = response::pair_value(&rho, &bx.mpo, &ay)?;
                let split = Mpo::trace_product(&rho, &bx.mpo)? * rho.expectation(&ay)?;
                worst = worst.max((joint - split).norm());
                pairs += 1;
            }
        }
    }
    ok &= check(
        &mut lines,
        "distant pairs factorize in every partition state",
        pairs > 0 && worst <= FACTORIZATION_TOL,
        format!("{pairs} pairs, max {worst:.2e}"),
    );

    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    for (state, op) in [("up", PauliString::single(5, Pauli::Z)), ("+u-d+u-d+u", PauliString::parse(4, "XZ")?)] {
        let kets = response::product_state(state, n)?;
        for w in [4, 6] {
            let rows = response::quench(&h, &kets, &op, &grid, w, 1e-12, g)?;
            let mut excess = f64::NEG_INFINITY;
            for r in &rows {
                let (Some(o), Some(he)) = (r.oracle, r.heisenberg_error) else {
                    excess = f64::INFINITY;
                    continue;
                };
                excess = excess.max((r.tn - o).abs() - he);
            }
            ok &= check(
                &mut lines,
                &format!("quench {state} w={w}: error within Heisenberg error"),
                excess <= QUENCH_SLACK,
                format!("max(error - heisenberg) {excess:.2e}"),
            );
        }
    }
    Ok((ok, lines))
}

fn criterion_9() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let gap = bounds::printed_gap;
    let lr = BoundInputs { c: 1.0, v_lr: 2.0, t: 1.0, l: 6.0, d: 1.0, norm_a: 1.0, ..Default::default() };
    for (name, got, printed) in [
        ("beta*(gamma=2, h=1)", bounds::beta_star(2.0, 1.0), 0.15597),
        ("x(0.1, 2, 2, 1)", bounds::cluster_x(0.1, 2.0, 2.0, 1.0), 0.2840),
        ("lr_bound example", bounds::lr_bound(&lr)?, 0.01832),
    ] {
        let u = gap(got, printed);
        ok &= check(&mut lines, name, u <= 1.0, format!("{got:.8} vs {printed} ({u:.2} units of the 4th digit)"));
    }
    let hand = ((1.0 + 3f64.sqrt()) / 2.0).ln() / 2.0;
    ok &= check(
        &mut lines,
        "beta* against ln((1+√3)/2)/2",
        (bounds::beta_star(2.0, 1.0) - hand).abs() < 1e-15,
        String::new(),
    );
    let suite = verify::run_suite(verify::Suite::Bounds, 8, 0, guard())?;
    let failed: Vec<_> = suite.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    ok &= check(&mut lines, "bounds suite incl. monotonicity sweeps", failed.is_empty(), format!("{} checks, failed {failed:?}", suite.len()));
    Ok((ok, lines))
}

fn run_cli(args: &[&str], dir: &Path) -> Result<std::process::Output, loctens::Error> {
    Ok(Command::new(env!("CARGO_BIN_EXE_loctens")).args(args).current_dir(dir).output()?)
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir()?;
    let dir = tmp.path();
    std::fs::write(dir.join("tfim8.json"), r#"{"type": "tfim", "n": 8, "j": 1.0, "g": 1.0}"#)?;
    let mut lines = Vec::new();
    let mut ok = true;
    let runs: [(&str, &[&str]); 5] = [
        ("thermal", &["thermal", "--model", "tfim8.json", "--beta", "0.7", "--l0", "3,4,5"]),
        ("evolve", &["evolve", "--model", "tfim8.json", "--t", "0.25,0.5", "--w", "2,4"]),
        ("lr", &["lr", "--model", "tfim8.json", "--t", "0.25,0.5", "--l", "1,2,3", "--probe", "X"]),
        ("quench", &["quench", "--model", "tfim8.json", "--state", "plus", "--t", "0,0.3,0.6", "--w", "4"]),
        ("verify", &["verify", "--suite", "mpo", "--n", "6", "--seed", "7"]),
    ];
    for (name, args) in runs {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = format!("run{rep}");
            let mut full: Vec<&str> = args.to_vec();
            full.extend(["--out", &out]);
            let res = run_cli(&full, dir)?;
            if !res.status.success() {
                lines.push(format!("{name}: exit {:?}: {}", res.status.code(), String::from_utf8_lossy(&res.stderr)));
                ok = false;
            }
            let csv = std::fs::read(dir.join(&out).join(format!("{name}.csv"))).unwrap_or_default();
            let json = std::fs::read(dir.join(&out).join(format!("{name}.json"))).unwrap_or_default();
            outputs.push((csv, json));
        }
        let same = !outputs[0].0.is_empty() && outputs[0] == outputs[1];
        ok &= check(&mut lines, &format!("{name}: byte-identical CSV and JSON"), same, format!("{} CSV bytes", outputs[0].0.len()));
    }
    let start = Instant::now();
    let res = run_cli(&["verify", "--suite", "all", "--n", "8"], dir)?;
    let took = start.elapsed();
    ok &= check(
        &mut lines,
        "verify --suite all --n 8",
        res.status.success() && took <= VERIFY_LIMIT,
        format!("exit {:?} in {:.1}s (limit {}s)", res.status.code(), took.as_secs_f64(), VERIFY_LIMIT.as_secs()),
    );
    Ok((ok, lines))
}

fn main() {
    // libtest flags such as `--nocapture` or filters are accepted and ignored;
    // `--list` reports the single target so test discovery works.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut report = Report { failures: 0 };
    report.run(1, "oracle closed forms", criterion_1);
    report.run(2, "MPO algebra on random fixtures", criterion_2);
    report.run(3, "thermal MPO on tfim(10)", criterion_3);
    report.run(4, "local indistinguishability on tfim(12, β=1)", criterion_4);
    report.run(5, "cluster expansion", criterion_5);
    report.run(6, "depth-2 circuit", criterion_6);
    report.run(7, "conditional tensor map on N=10", criterion_7);
    report.run(8, "autocorrelation and quench pipeline", criterion_8);
    report.run(9, "bounds calculators", criterion_9);
    report.run(10, "CLI determinism and verify runtime", criterion_10);
    if report.failures > 0 {
        println!("{} of 10 criteria failed", report.failures);
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
