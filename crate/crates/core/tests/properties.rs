use proptest::prelude::*;
use thermoporo::diagnostics::{self, ContractionConstant, DissipationTrace};
use thermoporo::problem::{FreeDecay, Scaled};
use thermoporo::solver::{Convection, Solver, SolverOptions};
use thermoporo::spaces::{self, Field, SpaceLayout};
use thermoporo::tensor::{SymMat2, Tensor2};
use thermoporo::verification::ManufacturedCase;
use thermoporo::{assembly, MaterialParams, TriMesh};

fn params() -> impl Strategy<Value = MaterialParams> {
    (0.1f64..5.0, 0.0f64..5.0, 0.0f64..2.0, 0.0f64..2.0, 0.0f64..1.0, 0.5f64..3.0, 0.5f64..3.0).prop_map(
        |(mu, lambda, alpha, beta, b0, a0, c0)| MaterialParams { mu, lambda, alpha, beta, b0, a0, c0, ..MaterialParams::preset() },
    )
}

/// Random parameters for which all three coefficient constraints hold.
fn admissible() -> impl Strategy<Value = MaterialParams> {
    (0.5f64..2.0, 0.5f64..2.0, 0.0f64..0.3, 0.0f64..0.3, 1.0f64..3.0).prop_map(|(mu, lambda, alpha, beta, a0)| {
        let b0 = alpha * beta / (mu + lambda) + 0.01;
        MaterialParams { mu, lambda, alpha, beta, b0, a0, c0: a0, ..MaterialParams::preset() }
    })
}

fn frozen(eta: [f64; 2]) -> SolverOptions {
    SolverOptions { convection: Convection::Frozen(eta), ..SolverOptions::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn compliance_norm_is_equivalent_to_l2(p in params(), xx in -5.0f64..5.0, xy in -5.0f64..5.0, yy in -5.0f64..5.0) {
        let c = p.compliance();
        let tau = Tensor2::symmetric(xx, xy, yy);
        let (a, l2) = (c.inner(&tau, &tau), tau.norm_sq());
        let tol = 1e-12 * (1.0 + l2);
        prop_assert!(a >= l2 / (2.0 * (p.mu + p.lambda)) - tol);
        prop_assert!(a <= l2 / (2.0 * p.mu) + tol);
    }

    #[test]
    fn derived_product_identity(p in params()) {
        let d = p.derived();
        let lhs = d.c_r * d.a_r;
        let rhs = (p.b0 - d.b_r).powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-14 * (1.0 + lhs.abs()));
    }

    #[test]
    fn constraint_report_matches_its_margins(p in params()) {
        let r = p.check_constraints();
        let ml = p.mu + p.lambda;
        let d = p.derived();
        let expected = [
            p.b0 - p.alpha * p.beta / ml,
            p.c0 - d.c_r / 2.0 - p.b0 - 1.0 / (6.0 * ml),
            p.a0 - d.a_r / 2.0 - p.b0 - 1.0 / (6.0 * ml),
        ];
        prop_assert_eq!(r.margins, expected);
        for k in 0..3 {
            prop_assert_eq!(r.passed[k], r.margins[k] > 0.0);
        }
        prop_assert_eq!(r.overall, r.margins.iter().all(|&m| m > 0.0));
    }

    #[test]
    fn contraction_constant_is_monotone(
        xi in 0.1f64..10.0, k_m in 0.1f64..10.0, tf in 0.0f64..2.0,
        g1 in 0.0f64..2.0, g2 in 0.01f64..2.0, bump in 0.01f64..1.0,
    ) {
        let base = ContractionConstant::new(xi, k_m, tf, g1, g2).c_contr;
        prop_assert!(base > 0.0);
        prop_assert!(ContractionConstant::new(xi + bump, k_m, tf, g1, g2).c_contr > base);
        prop_assert!(ContractionConstant::new(xi, k_m, tf + bump, g1, g2).c_contr >= base);
        prop_assert!(ContractionConstant::new(xi, k_m, tf, g1 + bump, g2).c_contr >= base);
        prop_assert!(ContractionConstant::new(xi, k_m, tf, g1, g2 + bump).c_contr > base);
    }

    #[test]
    fn mesh_areas_sum_to_one(n in 1usize..24) {
        let m = TriMesh::build_structured(n).unwrap();
        // Neumaier summation so the oracle itself adds no O(F·eps) rounding
        let (mut total, mut comp) = (0.0f64, 0.0f64);
        for t in 0..m.num_triangles() {
            let a = m.area(t);
            let s = total + a;
            comp += if total.abs() >= a.abs() { (total - s) + a } else { (a - s) + total };
            total = s;
        }
        prop_assert!((total + comp - 1.0).abs() < 1e-14, "n = {n}: {}", total + comp - 1.0);
    }

    #[test]
    fn layout_offsets_partition(f in 1usize..200, e in 1usize..400) {
        let l = SpaceLayout::from_counts(f, e);
        let mut ranges: Vec<_> = Field::ALL.iter().map(|&fl| l.range(fl)).collect();
        ranges.sort_by_key(|r| r.start);
        prop_assert_eq!(ranges[0].start, 0);
        for w in ranges.windows(2) {
            prop_assert_eq!(w[0].end, w[1].start);
        }
        prop_assert_eq!(ranges.last().unwrap().end, l.total());
    }

    #[test]
    fn divergence_commutes_with_interpolation(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, d in -3.0f64..3.0, n in 1usize..6) {
        let mesh = TriMesh::build_structured(n).unwrap();
        let v = spaces::interpolate_hdiv(&mesh, |x| [a * x[0] + b * x[1] + 0.5, c * x[0] + d * x[1] - 1.0]);
        for t in 0..mesh.num_triangles() {
            prop_assert!((spaces::rt_divergence(&mesh, &v, t) - (a + d)).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn frozen_mode_is_linear_in_the_data(c in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0], ex in -1.0f64..1.0, ey in -1.0f64..1.0) {
        let mesh = TriMesh::build_structured(2).unwrap();
        let case = ManufacturedCase { params: MaterialParams::preset(), amplitude: 1.0 };
        let solver = Solver::new(&mesh, case.params, frozen([ex, ey])).unwrap();
        let base = solver.run_steps(&case, 0.05, 3).unwrap();
        let scaled = solver.run_steps(&Scaled { inner: case, factor: c }, 0.05, 3).unwrap();
        for (s, b) in scaled.states.iter().zip(&base.states) {
            for f in Field::ALL {
                for (x, y) in s.field(f).iter().zip(b.field(f)) {
                    prop_assert!((x - c * y).abs() <= 1e-12 * (1.0 + (c * y).abs()), "{f:?}");
                }
            }
        }
    }

    #[test]
    fn energy_ratios_are_scale_invariant(c in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0]) {
        let mesh = TriMesh::build_structured(2).unwrap();
        let case = ManufacturedCase { params: MaterialParams::preset(), amplitude: 1.0 };
        let solver = Solver::new(&mesh, case.params, frozen([0.3, -0.2])).unwrap();
        let scaled = Scaled { inner: case, factor: c };
        let r1 = diagnostics::energy_report(&mesh, &case.params, &solver.run_steps(&case, 0.05, 3).unwrap(), &case).unwrap();
        let r2 = diagnostics::energy_report(&mesh, &case.params, &solver.run_steps(&scaled, 0.05, 3).unwrap(), &scaled).unwrap();
        for (a, b) in r1.ratios().iter().zip(r2.ratios()) {
            prop_assert!((a - b).abs() <= 1e-10 * a.abs());
        }
        for (a, b) in r1.lhs().iter().zip(r2.lhs()) {
            prop_assert!((b - c * c * a).abs() <= 1e-10 * (c * c * a).abs());
        }
    }

    #[test]
    fn free_decay_dissipates(p in admissible(), p_amp in -2.0f64..2.0, t_amp in -2.0f64..2.0) {
        let mesh = TriMesh::build_structured(4).unwrap();
        let solver = Solver::new(&mesh, p, SolverOptions::default()).unwrap();
        let sim = solver.run_steps(&FreeDecay { p_amp, t_amp }, 0.02, 8).unwrap();
        let trace = DissipationTrace::from_states(&sim.states, |s| diagnostics::dissipation_energy(solver.norms(), &p, s));
        prop_assert!(trace.is_non_increasing(1e-12), "max increase {}", trace.max_increase);
    }

    #[test]
    fn system_assembly_is_deterministic(seed in 0u64..1000) {
        let mesh = TriMesh::build_structured(3).unwrap();
        let case = ManufacturedCase { params: MaterialParams::preset(), amplitude: 1.0 };
        let r: Vec<f64> = (0..mesh.num_edges()).map(|e| ((e as u64 * 2654435761 + seed) % 97) as f64 / 97.0 - 0.5).collect();
        let a = assembly::assemble_system(&mesh, &case.params, &r, &case, 0.3).unwrap();
        let b = assembly::assemble_system(&mesh, &case.params, &r, &case, 0.3).unwrap();
        prop_assert_eq!(a.phi, b.phi);
        prop_assert_eq!(a.psi, b.psi);
        prop_assert_eq!(a.load, b.load);
    }
}

#[test]
fn anisotropic_tensors_are_accepted() {
    let p = MaterialParams { k: SymMat2::new(2.0, 0.5, 1.0), theta: SymMat2::new(1.0, -0.3, 0.5), ..MaterialParams::preset() };
    assert!(p.validate().is_ok());
    let case = ManufacturedCase { params: p, amplitude: 1.0 };
    let mesh = TriMesh::build_structured(2).unwrap();
    let sim = Solver::new(&mesh, p, SolverOptions::default()).unwrap().run_steps(&case, 0.05, 2).unwrap();
    assert!(sim.final_state().is_finite());
}
