//! Acceptance criteria, one `PASS`/`FAIL` line each. Exits non-zero if any fails.

#![allow(clippy::needless_range_loop)]

use std::process::ExitCode;
use std::time::{Duration, Instant};

use thermoporo::diagnostics::{self, DissipationTrace};
use thermoporo::params::Compliance;
use thermoporo::problem::{FreeDecay, ZeroData};
use thermoporo::solver::{time_steps, Solver, SolverOptions};
use thermoporo::tensor::Tensor2;
use thermoporo::verification::{self, default_case, ErrorTable};
use thermoporo::{MaterialParams, TriMesh};

const MMS_LEVELS: [usize; 4] = [4, 8, 16, 32];
const MMS_T_FINAL: f64 = 0.25;
const MIN_RATE: f64 = 0.8;
const ENERGY_SPREAD: f64 = 2.0;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn mesh(n: usize) -> TriMesh {
    TriMesh::build_structured(n).unwrap()
}

fn constraint_examples() -> Outcome {
    let base = MaterialParams::preset();
    let hi = MaterialParams { alpha: 1.0, beta: 1.0, b0: 0.1, ..base };
    let near = MaterialParams { c0: 0.14, ..base };
    // hand-evaluated margins with μ = λ = 1
    let cases = [
        (base, [0.05 - 0.01 / 2.0, 1.0 - 0.005 / 2.0 - 0.05 - 1.0 / 12.0, 1.0 - 0.005 / 2.0 - 0.05 - 1.0 / 12.0], true),
        (hi, [0.1 - 0.5, 1.0 - 0.25 - 0.1 - 1.0 / 12.0, 1.0 - 0.25 - 0.1 - 1.0 / 12.0], false),
        (near, [0.045, 0.14 - 0.0025 - 0.05 - 1.0 / 12.0, 1.0 - 0.0025 - 0.05 - 1.0 / 12.0], true),
    ];
    let mut worst = 0.0f64;
    let mut flags = true;
    for (p, margins, pass) in cases {
        let r = p.check_constraints();
        for k in 0..3 {
            worst = worst.max((r.margins[k] - margins[k]).abs());
        }
        flags &= r.overall == pass && r.passed == margins.map(|m| m > 0.0);
    }
    outcome(flags && worst <= 1e-14, format!("max margin deviation {worst:.1e} (tol 1e-14), flags match: {flags}"))
}

fn norm_equivalence() -> Outcome {
    let p = MaterialParams::preset();
    let r = diagnostics::norm_equivalence_check(&p, 1000, 20_240_501);
    let c = Compliance::new(p.mu, p.lambda).unwrap();
    let id = c.inner(&Tensor2::identity(), &Tensor2::identity()) / 2.0;
    let tf = Tensor2::symmetric(0.3, 1.2, -0.3);
    let tf_ratio = c.inner(&tf, &tf) / tf.norm_sq();
    let exact = (id - 0.25).abs() <= 1e-12 && (tf_ratio - 0.5).abs() <= 1e-12;
    outcome(r.passed() && exact, format!("{r}; closed-form I ratio {id}, trace-free ratio {tf_ratio}"))
}

fn pencil() -> Outcome {
    let p = MaterialParams::preset();
    let mut worst = f64::INFINITY;
    let mut all = true;
    for n in [1, 2, 4] {
        let m = mesh(n);
        for eta in [[0.0, 0.0], [0.8, -0.5]] {
            let r = diagnostics::pencil_check(&m, &p, &vec![eta; m.num_triangles()], -2.0).unwrap();
            all &= r.factorized && r.sigma_min > 1e-10;
            worst = worst.min(r.sigma_min);
        }
    }
    outcome(all, format!("s = -2, n in {{1,2,4}}, eta in {{0, (0.8,-0.5)}}: min sigma_min = {worst:.4e} (> 1e-10)"))
}

fn zero_data() -> Outcome {
    let m = mesh(8);
    let sim = Solver::new(&m, MaterialParams::preset(), SolverOptions::default()).unwrap().run_steps(&ZeroData, 0.01, 20).unwrap();
    let max = sim.states.iter().map(|s| s.max_abs()).fold(0.0, f64::max);
    outcome(sim.states.len() == 21 && max < 1e-12, format!("20 steps, max |coefficient| = {max:.1e} (< 1e-12)"))
}

fn dissipation() -> Outcome {
    let m = mesh(8);
    let p = MaterialParams::preset();
    let s = Solver::new(&m, p, SolverOptions::default()).unwrap();
    let sim = s.run_steps(&FreeDecay::default(), 0.01, 20).unwrap();
    let trace = DissipationTrace::from_states(&sim.states, |st| diagnostics::dissipation_energy(s.norms(), &p, st));
    let (first, last) = (trace.energies[0], *trace.energies.last().unwrap());
    outcome(
        p.check_constraints().overall && trace.is_non_increasing(1e-12),
        format!("20 steps, energy {first:.6e} -> {last:.6e}, largest step change {:+.3e} (tol 1e-12)", trace.max_increase),
    )
}

fn contraction() -> Outcome {
    let m = mesh(8);
    let case = default_case();
    let opts = SolverOptions { tol: 1e-10, ..SolverOptions::default() };
    let sim = Solver::new(&m, case.params, opts).unwrap().run_steps(&case, 0.01, 10).unwrap();
    let mut ok = sim.logs.len() == 10;
    let mut max_iters = 0;
    let mut worst_last_first = 0.0f64;
    for log in &sim.logs {
        let e = log.e_r();
        ok &= log.converged && log.count() <= 10 && e.windows(2).all(|w| w[1] < w[0]);
        let ratio = e.last().unwrap() / e[0];
        ok &= ratio < 1.0;
        worst_last_first = worst_last_first.max(ratio);
        max_iters = max_iters.max(log.count());
    }
    let r = diagnostics::contraction_report(&sim.logs, &case.params, 0.1);
    ok &= r.difference_reading.is_finite_positive() && r.flux_reading.is_finite_positive();
    outcome(
        ok,
        format!(
            "max iterations {max_iters} (<= 10), max last/first |e_r| {worst_last_first:.2e}; C_contr = {:.4e} / {:.4e}, t1 = {:.4e} / {:.4e} (difference / flux reading)",
            r.difference_reading.c_contr, r.flux_reading.c_contr, r.difference_reading.t1, r.flux_reading.t1
        ),
    )
}

fn mms_rates(table: &ErrorTable) -> Outcome {
    let rates = table.rates();
    let cols = [(0, "eT"), (1, "ep"), (9, "trace_res")];
    let ok = rates.len() == MMS_LEVELS.len() - 1 && rates.iter().all(|r| cols.iter().all(|&(k, _)| r[k] >= MIN_RATE));
    let detail = cols
        .iter()
        .map(|&(k, name)| format!("{name} {}", rates.iter().map(|r| format!("{:.3}", r[k])).collect::<Vec<_>>().join("/")))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(ok, format!("rates over n = 4/8/16/32: {detail} (>= {MIN_RATE})"))
}

fn biot() -> Outcome {
    let m = mesh(8);
    let dts = time_steps(0.02, 0.2);
    let rec = verification::biot_recovery_test(&m, &MaterialParams::preset(), &default_case(), &dts, SolverOptions::default()).unwrap();
    outcome(
        rec.max_discrepancy <= 1e-10,
        format!("{} steps, max discrepancy {:.2e} (tol 1e-10)", rec.steps, rec.max_discrepancy),
    )
}

fn energy_stability(table: &ErrorTable) -> Outcome {
    let levels: Vec<_> = table.levels.iter().filter(|l| [8, 16, 32].contains(&l.n)).collect();
    let mut ok = levels.len() == 3;
    let mut parts = Vec::new();
    for k in 0..4 {
        let r: Vec<f64> = levels.iter().map(|l| l.energy.ratios()[k]).collect();
        let (lo, hi) = (r.iter().copied().fold(f64::INFINITY, f64::min), r.iter().copied().fold(0.0, f64::max));
        ok &= lo > 0.0 && hi.is_finite() && hi / lo < ENERGY_SPREAD;
        parts.push(format!("{} x{:.3}", ["(i)", "(ii)", "(iii)", "(iv)"][k], hi / lo));
    }
    outcome(ok, format!("spread of LHS/RHS over n = 8/16/32: {} (< {ENERGY_SPREAD})", parts.join(", ")))
}

fn report(id: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed < l);
    let passed = o.passed && in_time;
    let budget = limit.map_or(String::new(), |l| format!(" / {}s", l.as_secs()));
    println!(
        "[{}] {id}. {name}: {} ({:.2}s{budget})",
        if passed { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64()
    );
    passed
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let mut results = vec![
        report(1, "constraint checker examples", secs(1), constraint_examples),
        report(2, "compliance norm equivalence", secs(5), norm_equivalence),
        report(3, "pencil nonsingularity", secs(30), pencil),
        report(4, "zero-data uniqueness", None, zero_data),
        report(5, "discrete dissipation", None, dissipation),
        report(6, "Picard contraction", secs(120), contraction),
    ];
    // one study serves criteria 7 and 9
    let mut table = None;
    results.push(report(7, "MMS convergence", secs(300), || {
        match verification::convergence_study(&default_case(), &MMS_LEVELS, 0.25, MMS_T_FINAL, SolverOptions::default()) {
            Ok(t) => mms_rates(table.insert(t)),
            Err((_, e)) => outcome(false, format!("study failed: {e}")),
        }
    }));
    results.push(report(8, "Biot recovery", None, biot));
    results.push(report(9, "energy-estimate stability", None, || match &table {
        Some(t) => energy_stability(t),
        None => outcome(false, "no MMS table"),
    }));
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
