use std::f64::consts::PI;

use thermoporo::assembly::{self, Blocks};
use thermoporo::problem::{FreeDecay, ProblemData, WithForce, ZeroData};
use thermoporo::quadrature::TriangleRule;
use thermoporo::solver::{time_steps, Convection, Solver, SolverError, SolverOptions, State};
use thermoporo::spaces::{self, Field};
use thermoporo::verification::{self, default_case, ManufacturedCase};
use thermoporo::{Execution, MaterialParams, TriMesh};

fn mesh(n: usize) -> TriMesh {
    TriMesh::build_structured(n).unwrap()
}

fn off() -> SolverOptions {
    SolverOptions { convection: Convection::Off, ..SolverOptions::default() }
}

fn decoupled() -> MaterialParams {
    MaterialParams { beta: 0.0, b0: 0.0, ..MaterialParams::preset() }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2_diff(mesh: &TriMesh, a: &[f64], b: &[f64]) -> f64 {
    let nt = mesh.num_triangles();
    a.iter().zip(b).enumerate().map(|(i, (x, y))| mesh.area(i % nt) * (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn zero_data_initializes_to_zero() {
    let m = mesh(4);
    let s = Solver::new(&m, MaterialParams::preset(), SolverOptions::default()).unwrap();
    let init = s.consistent_init(&ZeroData).unwrap();
    assert_eq!(init, State::zeros(&m));
}

/// `‖K⁻¹w(0) + ∇p0‖` by degree-4 quadrature.
fn flux_law_residual(m: &TriMesh, p: &MaterialParams, w: &[f64], problem: &FreeDecay) -> f64 {
    let rule = TriangleRule::degree4();
    let k_inv = p.k_inv();
    (0..m.num_triangles())
        .map(|t| {
            rule.integrate(&m.triangle_points(t), m.area(t), |x| {
                let kw = k_inv.apply(spaces::rt_eval(m, w, t, x));
                let g = problem.grad_p0(x);
                (kw[0] + g[0]).powi(2) + (kw[1] + g[1]).powi(2)
            })
        })
        .sum::<f64>()
        .sqrt()
}

#[test]
fn initial_darcy_flux_is_bounded_by_the_pressure_gradient() {
    let p = MaterialParams::preset();
    let problem = FreeDecay { p_amp: 1.0, t_amp: 0.5 };
    // ‖∇(sin πx sin πy)‖ = π/√2
    let grad_norm = PI / 2f64.sqrt();
    let mut residuals = Vec::new();
    for n in [8, 16] {
        let m = mesh(n);
        let s = Solver::new(&m, p, SolverOptions::default()).unwrap();
        let init = s.consistent_init(&problem).unwrap();
        let w_norm = s.norms().rt_sq(&init.w).sqrt();
        assert!(w_norm <= 10.0 * grad_norm, "n = {n}: |w(0)| = {w_norm}");
        residuals.push(flux_law_residual(&m, &p, &init.w, &problem));
    }
    assert!(residuals[1] < 0.6 * residuals[0], "{residuals:?}");
}

#[test]
fn initial_stress_is_in_equilibrium() {
    let m = mesh(8);
    let p = MaterialParams::preset();
    let problem = WithForce { inner: FreeDecay::default(), force: |x: [f64; 2], _t: f64| [x[1] - 0.5, 1.0 + x[0] * x[0]] };
    let s = Solver::new(&m, p, SolverOptions::default()).unwrap();
    let init = s.consistent_init(&problem).unwrap();
    let loads = assembly::assemble_loads(&m, &problem, 0.0, Execution::default());
    let blocks = Blocks::assemble(&m, &p, Execution::default());
    let residual: Vec<f64> =
        blocks.a_u_sigma.matvec(&init.sigma).iter().zip(&loads.l1).map(|(a, l)| a + l).collect();
    assert!(max_abs(&residual) < 1e-12 * (1.0 + max_abs(&loads.l1)), "{}", max_abs(&residual));
}

#[test]
fn zero_steps_return_the_initial_state() {
    let m = mesh(2);
    let s = Solver::new(&m, MaterialParams::preset(), SolverOptions::default()).unwrap();
    let sim = s.run_steps(&default_case(), 0.1, 0).unwrap();
    assert_eq!(sim.states.len(), 1);
    assert!(sim.logs.is_empty());
    assert!(time_steps(0.1, 0.0).is_empty());
}

#[test]
fn zero_data_stays_zero() {
    let m = mesh(4);
    let sim = Solver::new(&m, MaterialParams::preset(), SolverOptions::default()).unwrap().run_steps(&ZeroData, 0.05, 20).unwrap();
    assert!(sim.states.iter().all(|s| s.max_abs() < 1e-12));
    assert!(sim.logs.iter().all(|l| l.count() == 1 && l.converged));
}

#[test]
fn runs_are_bit_identical() {
    let m = mesh(4);
    let s = Solver::new(&m, MaterialParams::preset(), SolverOptions::default()).unwrap();
    let a = s.run_steps(&default_case(), 0.05, 3).unwrap();
    let b = s.run_steps(&default_case(), 0.05, 3).unwrap();
    assert_eq!(a.states, b.states);
    assert_eq!(a.logs, b.logs);
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let m = mesh(4);
    let run = |exec| {
        let opts = SolverOptions { exec, ..SolverOptions::default() };
        Solver::new(&m, MaterialParams::preset(), opts).unwrap().run_steps(&default_case(), 0.05, 3).unwrap()
    };
    assert_eq!(run(Execution::Sequential).states, run(Execution::Parallel).states);
}

#[test]
fn non_convergence_returns_the_log() {
    let m = mesh(4);
    let opts = SolverOptions { max_iters: 1, ..SolverOptions::default() };
    match Solver::new(&m, MaterialParams::preset(), opts).unwrap().run_steps(&default_case(), 0.05, 2) {
        Err(SolverError::NotConverged { log }) => {
            assert_eq!(log.count(), 1);
            assert!(!log.converged);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn decoupled_temperature_solves_the_heat_equation() {
    let m = mesh(8);
    let p = decoupled();
    let case = ManufacturedCase { params: MaterialParams::preset(), amplitude: 1.0 };
    let dts = vec![0.02; 10];
    let sim = Solver::new(&m, p, off()).unwrap().run_schedule(&case, &dts).unwrap();
    let heat = verification::heat_oracle(&m, &p, &case, &dts).unwrap();
    for (s, t) in sim.states.iter().zip(&heat) {
        assert!(l2_diff(&m, &s.temp, t) < 1e-10);
    }
    assert!(sim.final_state().p.iter().any(|&x| x != 0.0));
}

#[test]
fn decoupled_temperature_ignores_the_body_force() {
    let m = mesh(6);
    let p = decoupled();
    let case = ManufacturedCase { params: MaterialParams::preset(), amplitude: 1.0 };
    let pushed = WithForce { inner: case, force: |x: [f64; 2], t: f64| [3.0 * t + x[0], -x[1] * x[1]] };
    let s = Solver::new(&m, p, off()).unwrap();
    let a = s.run_steps(&case, 0.05, 5).unwrap();
    let b = s.run_steps(&pushed, 0.05, 5).unwrap();
    for (x, y) in a.states.iter().zip(&b.states) {
        assert!(l2_diff(&m, &x.temp, &y.temp) < 1e-13);
        assert!(l2_diff(&m, &x.r, &y.r) < 1e-13 || x.time == 0.0);
    }
    assert!(l2_diff(&m, &a.final_state().u, &b.final_state().u) > 1e-3);
}

#[test]
fn decoupled_zero_heat_data_keeps_temperature_zero() {
    let m = mesh(6);
    let sim = Solver::new(&m, decoupled(), off()).unwrap().run_steps(&FreeDecay { p_amp: 1.0, t_amp: 0.0 }, 0.05, 5).unwrap();
    for s in &sim.states {
        assert_eq!(max_abs(&s.temp), 0.0);
        assert_eq!(max_abs(&s.r), 0.0);
    }
    assert!(max_abs(&sim.final_state().p) > 1e-3);
    assert!(max_abs(&sim.final_state().u) > 1e-6);
}

#[test]
fn biot_recovery_with_frozen_and_picard_convection() {
    let m = mesh(4);
    let dts = time_steps(0.05, 0.25);
    for convection in [Convection::Off, Convection::Picard, Convection::Frozen([0.4, -0.7])] {
        let opts = SolverOptions { convection, ..SolverOptions::default() };
        let rec = verification::biot_recovery_test(&m, &MaterialParams::preset(), &default_case(), &dts, opts).unwrap();
        assert!(rec.max_discrepancy <= 1e-10, "{convection:?}: {}", rec.max_discrepancy);
        assert_eq!(rec.steps, dts.len());
    }
}

#[test]
fn halving_dt_halves_the_time_error() {
    // linear mode on a fixed mesh: successive differences of final states shrink like dt
    let m = mesh(4);
    let opts = SolverOptions { convection: Convection::Frozen([0.3, 0.2]), ..SolverOptions::default() };
    let s = Solver::new(&m, MaterialParams::preset(), opts).unwrap();
    let case = default_case();
    let finals: Vec<State> =
        [0.1, 0.05, 0.025].iter().map(|&dt| s.run_simulation(&case, dt, 0.4).unwrap().final_state().clone()).collect();
    for f in [Field::T, Field::P] {
        let d1 = l2_diff(&m, finals[0].field(f), finals[1].field(f));
        let d2 = l2_diff(&m, finals[1].field(f), finals[2].field(f));
        let ratio = d1 / d2;
        assert!((1.6..2.4).contains(&ratio), "{f:?}: {d1:.3e} / {d2:.3e} = {ratio}");
    }
}

#[test]
fn interpolated_exact_fields_have_first_order_projection_error() {
    let case = default_case();
    let errors: Vec<_> = [4, 8, 16]
        .iter()
        .map(|&n| {
            let m = mesh(n);
            verification::field_errors(&m, &case, &verification::interpolated_state(&m, &case, 1.0), 1.0)
        })
        .collect();
    for w in errors.windows(2) {
        for (name, (a, b)) in ["eT", "ep", "eu"].iter().zip([(w[0].e_t, w[1].e_t), (w[0].e_p, w[1].e_p), (w[0].e_u, w[1].e_u)]) {
            let rate = (a / b).log2();
            assert!((rate - 1.0).abs() < 0.05, "{name}: {rate}");
        }
    }
}

#[test]
fn zero_manufactured_case_has_zero_errors() {
    let table = verification::convergence_study(&ManufacturedCase::zero(), &[2, 4], 0.25, 0.25, SolverOptions::default()).unwrap();
    for level in &table.levels {
        assert!(level.errors.values().iter().all(|&e| e == 0.0), "{:?}", level.errors);
    }
}

#[test]
fn manufactured_case_vanishes_on_the_boundary() {
    let case = default_case();
    for s in [0.0, 0.13, 0.5, 0.97, 1.0] {
        for x in [[s, 0.0], [s, 1.0], [0.0, s], [1.0, s]] {
            assert!(case.temperature(x, 0.7).abs() < 1e-15);
            assert!(case.pressure(x, 0.7).abs() < 1e-15);
            let u = case.displacement(x, 0.7);
            assert!(u[0].abs() < 1e-15 && u[1].abs() < 1e-15);
        }
    }
    assert_eq!(case.p0([0.4, 0.6]), 0.0);
}
