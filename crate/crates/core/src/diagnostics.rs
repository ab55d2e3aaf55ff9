//! Runtime checks derived from the well-posedness theory: regularity of the
//! DAE pencil, a priori energy ratios, the Picard contraction constant,
//! compliance norm equivalence and discrete dissipation.

use std::fmt;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::assembly::{self, error_rule, Blocks};
use crate::mesh::TriMesh;
use crate::par::Execution;
use crate::params::MaterialParams;
use crate::problem::ProblemData;
use crate::solver::{Norms, PicardLog, Simulation, State};
use crate::sparse::{norm2, SparseLu};
use crate::tensor::{Tensor2, Vec2};

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("empty time series")]
    EmptySeries,
    #[error(transparent)]
    Assembly(#[from] assembly::AssemblyError),
}

/// The `s` values swept by default.
pub const PENCIL_SWEEP: [f64; 5] = [-4.0, -2.0, -1.0, 1.0, 2.0];

const INVERSE_ITERATIONS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PencilReport {
    pub s: f64,
    pub factorized: bool,
    /// Inverse-iteration estimate of the smallest singular value of `sΦ + Ψ`;
    /// zero when the factorization fails.
    pub sigma_min: f64,
    pub dim: usize,
    /// `γ_h = max_K |η_K|`.
    pub gamma: f64,
    /// `s(a0 + a_r − b_r) − γ/(2k_m)` as written.
    pub eps_margin: f64,
    /// The same with `|s|`, the reading under which `s < 0` can be admissible.
    pub eps_margin_abs: f64,
}

impl PencilReport {
    pub fn nonsingular(&self) -> bool {
        self.factorized && self.sigma_min > 0.0
    }
}

impl fmt::Display for PencilReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "s = {:+.3}  dim = {:>6}  {}  sigma_min = {:.4e}  gamma = {:.4e}  eps_margin = {:+.4e}  eps_margin(|s|) = {:+.4e}",
            self.s,
            self.dim,
            if self.nonsingular() { "nonsingular" } else { "SINGULAR" },
            self.sigma_min,
            self.gamma,
            self.eps_margin,
            self.eps_margin_abs
        )
    }
}

/// Factorizes `sΦ + Ψ(η)` and estimates its smallest singular value by
/// inverse iteration on `(MᵀM)⁻¹`.
pub fn pencil_check(
    mesh: &TriMesh,
    params: &MaterialParams,
    eta: &[Vec2],
    s: f64,
) -> Result<PencilReport, DiagnosticsError> {
    let blocks = Blocks::assemble(mesh, params, Execution::default());
    pencil_check_with(mesh, params, &blocks, eta, s)
}

pub fn pencil_sweep(
    mesh: &TriMesh,
    params: &MaterialParams,
    eta: &[Vec2],
    s_values: &[f64],
) -> Result<Vec<PencilReport>, DiagnosticsError> {
    let blocks = Blocks::assemble(mesh, params, Execution::default());
    s_values.iter().map(|&s| pencil_check_with(mesh, params, &blocks, eta, s)).collect()
}

fn pencil_check_with(
    mesh: &TriMesh,
    params: &MaterialParams,
    blocks: &Blocks,
    eta: &[Vec2],
    s: f64,
) -> Result<PencilReport, DiagnosticsError> {
    let conv = assembly::assemble_convective_eta(mesh, eta.to_vec())?;
    let m = blocks.pencil(s, Some(&conv.a_wt));
    let d = params.derived();
    let k_m = params.spectral_bounds().k_m;
    let coeff = params.a0 + d.a_r - d.b_r;
    let mut report = PencilReport {
        s,
        factorized: false,
        sigma_min: 0.0,
        dim: m.nrows(),
        gamma: conv.gamma_h,
        eps_margin: s * coeff - conv.gamma_h / (2.0 * k_m),
        eps_margin_abs: s.abs() * coeff - conv.gamma_h / (2.0 * k_m),
    };
    let Ok(lu) = SparseLu::factor(&m) else {
        return Ok(report);
    };
    if let Some(sigma) = smallest_singular_value(&lu, m.nrows()) {
        report.factorized = true;
        report.sigma_min = sigma;
    }
    Ok(report)
}

fn smallest_singular_value(lu: &SparseLu, n: usize) -> Option<f64> {
    // deterministic start with components in every direction
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.7548776662).fract()).collect();
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut lambda = 0.0;
    for _ in 0..INVERSE_ITERATIONS {
        let y = lu.solve_transpose(&x).ok()?;
        let z = lu.solve(&y).ok()?;
        lambda = norm2(&z);
        if !(lambda.is_finite() && lambda > 0.0) {
            return None;
        }
        x = z.into_iter().map(|v| v / lambda).collect();
    }
    Some(1.0 / lambda.sqrt())
}

/// Squared norms of the data entering the right-hand side of the a priori
/// estimates.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DataFunctional {
    /// `‖f‖²_{H¹(L²)}`.
    pub f: f64,
    pub g: f64,
    pub h: f64,
    /// `‖p0‖²_{H¹}` and `‖T0‖²_{H¹}`.
    pub p0: f64,
    pub t0: f64,
}

impl DataFunctional {
    pub fn total(&self) -> f64 {
        self.f + self.g + self.h + self.p0 + self.t0
    }
}

/// Discrete counterparts of the a priori estimates (i)–(iv).
///
/// Sup norms are maxima over the time levels, time integrals use the
/// trapezoid rule and time derivatives are backward difference quotients.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyReport {
    pub sup_p: f64,
    pub sup_t: f64,
    pub int_w: f64,
    pub int_r: f64,
    pub sigma0_a: f64,
    pub int_dp: f64,
    pub int_dt: f64,
    pub sup_w: f64,
    pub sup_r: f64,
    pub sup_sigma: f64,
    pub int_dsigma: f64,
    pub sup_u: f64,
    pub int_du: f64,
    pub int_div_w: f64,
    pub int_div_r: f64,
    pub int_sigma: f64,
    pub int_div_sigma: f64,
    pub data: DataFunctional,
}

impl EnergyReport {
    /// Left-hand sides of (i)–(iv).
    pub fn lhs(&self) -> [f64; 4] {
        [
            self.sup_p + self.sup_t + self.int_w + self.int_r + self.sigma0_a,
            self.int_dp + self.int_dt + self.sup_w + self.sup_r,
            self.sup_sigma + self.int_dsigma + self.sup_u + self.int_du,
            self.int_w + self.int_div_w + self.int_r + self.int_div_r + self.int_sigma + self.int_div_sigma,
        ]
    }

    pub fn rhs(&self) -> f64 {
        self.data.total()
    }

    /// `LHS / RHS` per estimate, with `0/0` reported as 0.
    pub fn ratios(&self) -> [f64; 4] {
        let rhs = self.rhs();
        self.lhs().map(|l| if l == 0.0 && rhs == 0.0 { 0.0 } else { l / rhs })
    }

    pub const HEADER: &'static str = "estimate,lhs,rhs,ratio";

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::HEADER)?;
        let (lhs, ratios) = (self.lhs(), self.ratios());
        for (i, name) in ["i", "ii", "iii", "iv"].iter().enumerate() {
            writeln!(w, "{name},{:.10e},{:.10e},{:.10e}", lhs[i], self.rhs(), ratios[i])?;
        }
        Ok(())
    }
}

impl fmt::Display for EnergyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lhs, ratios) = (self.lhs(), self.ratios());
        for (i, name) in ["(i)", "(ii)", "(iii)", "(iv)"].iter().enumerate() {
            writeln!(f, "estimate {name:<5} lhs = {:.4e}  rhs = {:.4e}  ratio = {:.4e}", lhs[i], self.rhs(), ratios[i])?;
        }
        Ok(())
    }
}

fn trapezoid(dts: &[f64], values: &[f64]) -> f64 {
    dts.iter().zip(values.windows(2)).map(|(dt, v)| 0.5 * dt * (v[0] + v[1])).sum()
}

fn sup(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

fn diff_sq_rate(states: &[State], dts: &[f64], norm: impl Fn(&State, &State) -> f64) -> f64 {
    states.windows(2).zip(dts).map(|(w, dt)| norm(&w[1], &w[0]) / dt).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Data functional on the time levels of `times`.
pub fn data_functional<P: ProblemData + ?Sized>(mesh: &TriMesh, problem: &P, times: &[f64]) -> DataFunctional {
    let rule = error_rule();
    let integrate = |f: &dyn Fn(Vec2) -> f64| -> f64 {
        (0..mesh.num_triangles()).map(|k| rule.integrate(&mesh.triangle_points(k), mesh.area(k), f)).sum()
    };
    let sq = |v: Vec2| v[0] * v[0] + v[1] * v[1];
    let dts: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let series = |f: &dyn Fn(Vec2, f64) -> f64| -> f64 {
        let v: Vec<f64> = times.iter().map(|&t| integrate(&|x| f(x, t))).collect();
        trapezoid(&dts, &v)
    };
    DataFunctional {
        f: series(&|x, t| sq(problem.f(x, t)) + sq(problem.df_dt(x, t))),
        g: series(&|x, t| problem.g(x, t).powi(2)),
        h: series(&|x, t| problem.h(x, t).powi(2)),
        p0: integrate(&|x| problem.p0(x).powi(2) + sq(problem.grad_p0(x))),
        t0: integrate(&|x| problem.t0(x).powi(2) + sq(problem.grad_t0(x))),
    }
}

/// Evaluates (i)–(iv) on a completed run.
pub fn energy_report<P: ProblemData + ?Sized>(
    mesh: &TriMesh,
    params: &MaterialParams,
    sim: &Simulation,
    problem: &P,
) -> Result<EnergyReport, DiagnosticsError> {
    let states = &sim.states;
    if states.is_empty() {
        return Err(DiagnosticsError::EmptySeries);
    }
    let times: Vec<f64> = states.iter().map(|s| s.time).collect();
    let dts: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let n = Norms::new(mesh, params);
    let each = |f: &dyn Fn(&State) -> f64| -> Vec<f64> { states.iter().map(f).collect() };
    let p = each(&|s| n.p0_sq(&s.p));
    let t = each(&|s| n.p0_sq(&s.temp));
    let w = each(&|s| n.rt_sq(&s.w));
    let r = each(&|s| n.rt_sq(&s.r));
    let sigma = each(&|s| n.stress_sq(&s.sigma));
    let u = each(&|s| n.p0_sq(&s.u));
    Ok(EnergyReport {
        sup_p: sup(&p),
        sup_t: sup(&t),
        int_w: trapezoid(&dts, &w),
        int_r: trapezoid(&dts, &r),
        sigma0_a: n.stress_a_sq(&states[0].sigma),
        int_dp: diff_sq_rate(states, &dts, |a, b| n.p0_sq(&sub(&a.p, &b.p))),
        int_dt: diff_sq_rate(states, &dts, |a, b| n.p0_sq(&sub(&a.temp, &b.temp))),
        sup_w: sup(&w),
        sup_r: sup(&r),
        sup_sigma: sup(&sigma),
        int_dsigma: diff_sq_rate(states, &dts, |a, b| n.stress_sq(&sub(&a.sigma, &b.sigma))),
        sup_u: sup(&u),
        int_du: diff_sq_rate(states, &dts, |a, b| n.p0_sq(&sub(&a.u, &b.u))),
        int_div_w: trapezoid(&dts, &each(&|s| n.div_sq(mesh, &s.w))),
        int_div_r: trapezoid(&dts, &each(&|s| n.div_sq(mesh, &s.r))),
        int_sigma: trapezoid(&dts, &sigma),
        int_div_sigma: trapezoid(&dts, &each(&|s| n.stress_div_sq(mesh, &s.sigma))),
        data: data_functional(mesh, problem, &times),
    })
}

/// `C_contr = (ξγ₂/2) exp(ξγ₁T_f/k_m)` and `t₁ = 1/(2C_contr)`.
///
/// `t1` is infinite when `C_contr = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionConstant {
    pub gamma1: f64,
    pub gamma2: f64,
    pub c_contr: f64,
    pub t1: f64,
}

impl ContractionConstant {
    pub fn new(xi: f64, k_m: f64, t_final: f64, gamma1: f64, gamma2: f64) -> Self {
        let c_contr = 0.5 * xi * gamma2 * (xi * gamma1 * t_final / k_m).exp();
        ContractionConstant { gamma1, gamma2, c_contr, t1: 1.0 / (2.0 * c_contr) }
    }

    /// No thermal iterate difference: the bound carries no information.
    pub fn is_degenerate(&self) -> bool {
        self.gamma2 == 0.0
    }

    pub fn is_finite_positive(&self) -> bool {
        self.c_contr.is_finite() && self.c_contr > 0.0 && self.t1.is_finite() && self.t1 > 0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionReport {
    pub xi: f64,
    pub k_m: f64,
    pub t_final: f64,
    /// `γ₁ = sup‖e_w‖²`, `γ₂ = sup‖e_r‖²` over iterate differences (`m ≥ 2`).
    pub difference_reading: ContractionConstant,
    /// `γ₁ = sup|w|²`, `γ₂ = sup|Θ⁻¹r|²` over elements, steps and iterates.
    pub flux_reading: ContractionConstant,
    /// Per step, `‖e_r^m‖² / ‖e_r^{m−1}‖²` for `m ≥ 2`.
    pub ratios: Vec<Vec<f64>>,
    /// `(step, m)` of every ratio `≥ 1` (1-based `m`).
    pub non_contractive: Vec<(usize, usize)>,
}

impl ContractionReport {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().flatten().copied().fold(0.0, f64::max)
    }
}

impl fmt::Display for ContractionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "xi = {:.4e}  k_m = {:.4e}  T_f = {:.4e}", self.xi, self.k_m, self.t_final)?;
        for (name, c) in [("difference", &self.difference_reading), ("flux", &self.flux_reading)] {
            writeln!(
                f,
                "{name:<10} reading: gamma1 = {:.4e}  gamma2 = {:.4e}  C_contr = {:.4e}  t1 = {:.4e}{}",
                c.gamma1,
                c.gamma2,
                c.c_contr,
                c.t1,
                if c.is_degenerate() { "  (degenerate: gamma2 = 0)" } else { "" }
            )?;
        }
        write!(f, "max observed ratio = {:.4e}, ratios >= 1: {}", self.max_ratio(), self.non_contractive.len())
    }
}

/// Contraction constants under both readings of `γ₁, γ₂` and the observed
/// per-step Picard ratios.
pub fn contraction_report(logs: &[PicardLog], params: &MaterialParams, t_final: f64) -> ContractionReport {
    let xi = params.derived().xi;
    let k_m = params.spectral_bounds().k_m;
    let iterates = || logs.iter().flat_map(|l| l.iterations.iter());
    let later = || logs.iter().flat_map(|l| l.iterations.iter().skip(1));
    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);
    let difference_reading = ContractionConstant::new(
        xi,
        k_m,
        t_final,
        max(&mut later().map(|i| i.e_w * i.e_w)),
        max(&mut later().map(|i| i.e_r * i.e_r)),
    );
    let flux_reading = ContractionConstant::new(
        xi,
        k_m,
        t_final,
        max(&mut iterates().map(|i| i.gamma_w * i.gamma_w)),
        max(&mut iterates().map(|i| i.gamma_eta * i.gamma_eta)),
    );
    let ratios: Vec<Vec<f64>> = logs.iter().map(|l| l.ratios()).collect();
    let non_contractive = ratios
        .iter()
        .enumerate()
        .flat_map(|(step, r)| r.iter().enumerate().filter(|(_, &v)| v >= 1.0).map(move |(j, _)| (step, j + 2)))
        .collect();
    ContractionReport { xi, k_m, t_final, difference_reading, flux_reading, ratios, non_contractive }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEquivalenceReport {
    pub samples: usize,
    pub lower: f64,
    pub upper: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `‖I‖²_A / ‖I‖²` and the same for a trace-free field.
    pub identity_ratio: f64,
    pub trace_free_ratio: f64,
    pub tolerance: f64,
}

impl NormEquivalenceReport {
    pub fn worst_lower_margin(&self) -> f64 {
        self.min_ratio - self.lower
    }

    pub fn worst_upper_margin(&self) -> f64 {
        self.upper - self.max_ratio
    }

    pub fn passed(&self) -> bool {
        self.worst_lower_margin() >= -self.tolerance
            && self.worst_upper_margin() >= -self.tolerance
            && (self.identity_ratio - self.lower).abs() <= self.tolerance
            && (self.trace_free_ratio - self.upper).abs() <= self.tolerance
    }
}

impl fmt::Display for NormEquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} samples: ratio in [{:.15e}, {:.15e}], bounds [{:.15e}, {:.15e}]; identity {:.15e}, trace-free {:.15e}: {}",
            self.samples,
            self.min_ratio,
            self.max_ratio,
            self.lower,
            self.upper,
            self.identity_ratio,
            self.trace_free_ratio,
            if self.passed() { "pass" } else { "FAIL" }
        )
    }
}

const EQUIVALENCE_MESH: usize = 4;

/// Samples random piecewise-constant symmetric tensor fields and compares
/// `‖τ‖²_A / ‖τ‖²` with `[1/(2(μ+λ)), 1/(2μ)]`.
pub fn norm_equivalence_check(params: &MaterialParams, samples: usize, seed: u64) -> NormEquivalenceReport {
    let mesh = TriMesh::build_structured(EQUIVALENCE_MESH).expect("positive subdivision");
    let c = params.compliance();
    let (lower, upper) = c.equivalence_bounds();
    let ratio = |field: &[Tensor2]| {
        let a = crate::params::compliance_inner(&mesh, field, field, &c).expect("field matches mesh");
        let l2: f64 = field.iter().enumerate().map(|(t, tau)| mesh.area(t) * tau.norm_sq()).sum();
        a / l2
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut min_ratio, mut max_ratio) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..samples {
        let field: Vec<Tensor2> = (0..mesh.num_triangles())
            .map(|_| Tensor2::symmetric(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let q = ratio(&field);
        min_ratio = min_ratio.min(q);
        max_ratio = max_ratio.max(q);
    }
    let nt = mesh.num_triangles();
    NormEquivalenceReport {
        samples,
        lower,
        upper,
        min_ratio,
        max_ratio,
        identity_ratio: ratio(&vec![Tensor2::identity(); nt]),
        trace_free_ratio: ratio(&vec![Tensor2::symmetric(0.7, -0.2, -0.7); nt]),
        tolerance: 1e-12,
    }
}

/// `(c0 − b_r)‖p‖² + (a0 − b_r)‖T‖²`.
pub fn dissipation_energy(norms: &Norms, params: &MaterialParams, state: &State) -> f64 {
    let b_r = params.derived().b_r;
    (params.c0 - b_r) * norms.p0_sq(&state.p) + (params.a0 - b_r) * norms.p0_sq(&state.temp)
}

/// `(c0 + c_r)‖p‖² + (a0 + a_r)‖T‖² − 2b_r(p, T) − ‖σ‖²_A`, the quadratic form
/// of `Φ` on the state, which implicit Euler dissipates exactly for zero data.
pub fn phi_energy(norms: &Norms, params: &MaterialParams, state: &State) -> f64 {
    let d = params.derived();
    let cross = norms.p0_inner(&state.p, &state.temp);
    (params.c0 + d.c_r) * norms.p0_sq(&state.p) + (params.a0 + d.a_r) * norms.p0_sq(&state.temp)
        - 2.0 * d.b_r * cross
        - norms.stress_a_sq(&state.sigma)
}

/// Energies along a run and the largest single-step increase.
#[derive(Clone, Debug, PartialEq)]
pub struct DissipationTrace {
    pub energies: Vec<f64>,
    pub max_increase: f64,
}

impl DissipationTrace {
    pub fn from_states(states: &[State], energy: impl Fn(&State) -> f64) -> Self {
        let energies: Vec<f64> = states.iter().map(energy).collect();
        let max_increase = energies.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        DissipationTrace { energies, max_increase }
    }

    /// Non-increasing up to `tol` per step.
    pub fn is_non_increasing(&self, tol: f64) -> bool {
        self.energies.len() < 2 || self.max_increase <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ZeroData;
    use crate::solver::{Solver, SolverOptions};

    #[test]
    fn contraction_formula_example() {
        let p = MaterialParams { alpha: 1.0, beta: 1.0, mu: 1.0, lambda: 1.0, ..MaterialParams::preset() };
        let xi = p.derived().xi;
        assert_eq!(xi, 2.0);
        let c = ContractionConstant::new(xi, 1.0, 1.0, 1.0, 1.0);
        assert!((c.c_contr - std::f64::consts::E.powi(2)).abs() < 1e-12);
        assert!((c.t1 - 0.067667641618306).abs() < 1e-12);
        let d = ContractionConstant::new(xi, 1.0, 1.0, 1.0, 0.0);
        assert!(d.is_degenerate() && d.c_contr == 0.0);
    }

    #[test]
    fn contraction_constant_monotone() {
        let base = ContractionConstant::new(2.0, 1.0, 1.0, 0.5, 0.5).c_contr;
        assert!(ContractionConstant::new(2.0, 1.0, 2.0, 0.5, 0.5).c_contr > base);
        assert!(ContractionConstant::new(2.0, 1.0, 1.0, 0.6, 0.5).c_contr > base);
        assert!(ContractionConstant::new(2.0, 1.0, 1.0, 0.5, 0.6).c_contr > base);
        assert!(ContractionConstant::new(2.5, 1.0, 1.0, 0.5, 0.5).c_contr > base);
    }

    #[test]
    fn zero_data_energy_ratios_are_zero() {
        let mesh = TriMesh::build_structured(2).unwrap();
        let p = MaterialParams::preset();
        let sim = Solver::new(&mesh, p, SolverOptions::default()).unwrap().run_steps(&ZeroData, 0.1, 3).unwrap();
        let e = energy_report(&mesh, &p, &sim, &ZeroData).unwrap();
        assert_eq!(e.ratios(), [0.0; 4]);
        assert_eq!(e.rhs(), 0.0);
        let empty = Simulation { states: vec![], logs: vec![] };
        assert_eq!(energy_report(&mesh, &p, &empty, &ZeroData), Err(DiagnosticsError::EmptySeries));
    }

    #[test]
    fn pencil_at_minus_two_is_regular_on_tiny_meshes() {
        let p = MaterialParams::preset();
        for n in [1, 2] {
            let mesh = TriMesh::build_structured(n).unwrap();
            let r = pencil_check(&mesh, &p, &vec![[0.0; 2]; mesh.num_triangles()], -2.0).unwrap();
            assert!(r.nonsingular(), "{r}");
            assert_eq!(r.dim, 5 * mesh.num_triangles() + 6 * mesh.num_edges());
        }
    }

    #[test]
    fn norm_equivalence_attains_bounds() {
        let r = norm_equivalence_check(&MaterialParams::preset(), 50, 7);
        assert!(r.passed(), "{r}");
        assert_eq!(r.identity_ratio, 0.25);
    }
}
