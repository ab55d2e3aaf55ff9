//! Manufactured solutions, error tables and the decoupled-limit oracles.

use std::f64::consts::PI;
use std::io::{self, Write};

use crate::assembly::{self, error_rule};
use crate::diagnostics::{energy_report, EnergyReport};
use crate::mesh::TriMesh;
use crate::params::MaterialParams;
use crate::problem::ProblemData;
use crate::solver::{Norms, Simulation, Solver, SolverError, SolverOptions, State};
use crate::spaces;
use crate::sparse::{self, BlockBuilder, CsrMatrix};
use crate::tensor::{Tensor2, Vec2};

/// `T = p = A t S`, `u = A t (S, S)` with `S = sin(πx) sin(πy)`, and the
/// sources that make these fields an exact solution.
#[derive(Clone, Copy, Debug)]
pub struct ManufacturedCase {
    pub params: MaterialParams,
    pub amplitude: f64,
}

struct Bubble {
    s: f64,
    grad: Vec2,
    /// `[S_xx, S_xy, S_yy]`
    hess: [f64; 3],
}

fn bubble(x: Vec2) -> Bubble {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    let s = sx * sy;
    Bubble { s, grad: [PI * cx * sy, PI * sx * cy], hess: [-PI * PI * s, PI * PI * cx * cy, -PI * PI * s] }
}

pub fn default_case() -> ManufacturedCase {
    ManufacturedCase { params: MaterialParams::preset(), amplitude: 1.0 }
}

impl ManufacturedCase {
    /// The case with every field identically zero.
    pub fn zero() -> Self {
        ManufacturedCase { amplitude: 0.0, ..default_case() }
    }

    pub fn temperature(&self, x: Vec2, t: f64) -> f64 {
        self.amplitude * t * bubble(x).s
    }

    pub fn pressure(&self, x: Vec2, t: f64) -> f64 {
        self.temperature(x, t)
    }

    pub fn displacement(&self, x: Vec2, t: f64) -> Vec2 {
        let v = self.temperature(x, t);
        [v, v]
    }

    pub fn div_u(&self, x: Vec2, t: f64) -> f64 {
        let b = bubble(x);
        self.amplitude * t * (b.grad[0] + b.grad[1])
    }

    /// `w = −K∇p`.
    pub fn darcy_flux(&self, x: Vec2, t: f64) -> Vec2 {
        let g = self.params.k.apply(bubble(x).grad);
        let c = -self.amplitude * t;
        [c * g[0], c * g[1]]
    }

    /// `r = −Θ∇T`.
    pub fn heat_flux(&self, x: Vec2, t: f64) -> Vec2 {
        let g = self.params.theta.apply(bubble(x).grad);
        let c = -self.amplitude * t;
        [c * g[0], c * g[1]]
    }

    /// `σ = 2με(u) + λ(∇·u)I − (αp + βT)I`.
    pub fn stress(&self, x: Vec2, t: f64) -> Tensor2 {
        let pr = &self.params;
        let b = bubble(x);
        let at = self.amplitude * t;
        let (ux, uy) = (at * b.grad[0], at * b.grad[1]);
        let shear = 0.5 * (ux + uy);
        let iso = pr.lambda * (ux + uy) - (pr.alpha + pr.beta) * at * b.s;
        Tensor2::new(2.0 * pr.mu * ux + iso, 2.0 * pr.mu * shear, 2.0 * pr.mu * shear, 2.0 * pr.mu * uy + iso)
    }

    fn force_profile(&self, x: Vec2) -> Vec2 {
        let pr = &self.params;
        let b = bubble(x);
        let [sxx, sxy, syy] = b.hess;
        let grad_div = [sxx + sxy, sxy + syy];
        let lap = sxx + syy;
        let c = pr.alpha + pr.beta;
        [0, 1].map(|i| {
            self.amplitude * (-(pr.lambda + pr.mu) * grad_div[i] - pr.mu * lap + c * b.grad[i])
        })
    }
}

fn hess_contract(m: &crate::tensor::SymMat2, h: [f64; 3]) -> f64 {
    m.a11 * h[0] + 2.0 * m.a12 * h[1] + m.a22 * h[2]
}

impl ProblemData for ManufacturedCase {
    fn f(&self, x: Vec2, t: f64) -> Vec2 {
        let v = self.force_profile(x);
        [t * v[0], t * v[1]]
    }

    fn g(&self, x: Vec2, t: f64) -> f64 {
        let pr = &self.params;
        let b = bubble(x);
        let a = self.amplitude;
        a * ((pr.c0 - pr.b0) * b.s + pr.alpha * (b.grad[0] + b.grad[1])) - a * t * hess_contract(&pr.k, b.hess)
    }

    fn h(&self, x: Vec2, t: f64) -> f64 {
        let pr = &self.params;
        let b = bubble(x);
        let a = self.amplitude;
        let convective = a * a * t * t * pr.k.bilinear(b.grad, b.grad);
        a * ((pr.a0 - pr.b0) * b.s + pr.beta * (b.grad[0] + b.grad[1]))
            - convective
            - a * t * hess_contract(&pr.theta, b.hess)
    }

    fn p0(&self, _: Vec2) -> f64 {
        0.0
    }

    fn t0(&self, _: Vec2) -> f64 {
        0.0
    }

    fn u0(&self, _: Vec2) -> Vec2 {
        [0.0; 2]
    }

    fn df_dt(&self, x: Vec2, _: f64) -> Vec2 {
        self.force_profile(x)
    }

    fn grad_p0(&self, _: Vec2) -> Vec2 {
        [0.0; 2]
    }

    fn grad_t0(&self, _: Vec2) -> Vec2 {
        [0.0; 2]
    }
}

/// Final-time errors on one mesh level.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldErrors {
    pub e_t: f64,
    pub e_p: f64,
    pub e_u: f64,
    pub e_w: f64,
    pub e_r: f64,
    pub e_sigma: f64,
    pub e_div_w: f64,
    pub e_div_r: f64,
    pub e_div_sigma: f64,
    pub trace_residual: f64,
}

impl FieldErrors {
    pub const NAMES: [&'static str; 10] =
        ["eT", "ep", "eu", "ew", "er", "esigma", "ediv_w", "ediv_r", "ediv_sigma", "trace_res"];

    pub fn values(&self) -> [f64; 10] {
        [
            self.e_t,
            self.e_p,
            self.e_u,
            self.e_w,
            self.e_r,
            self.e_sigma,
            self.e_div_w,
            self.e_div_r,
            self.e_div_sigma,
            self.trace_residual,
        ]
    }
}

/// `‖tr(σ_h)/(2(μ+λ)) + (αp_h + βT_h)/(μ+λ) − ∇·u‖` for a given exact divergence.
pub fn trace_identity_residual<F: Fn(Vec2) -> f64>(
    mesh: &TriMesh,
    params: &MaterialParams,
    state: &State,
    div_u: F,
) -> f64 {
    let rule = error_rule();
    let ml = params.mu + params.lambda;
    let mut sum = 0.0;
    for t in 0..mesh.num_triangles() {
        let shift = (params.alpha * state.p[t] + params.beta * state.temp[t]) / ml;
        sum += rule.integrate(&mesh.triangle_points(t), mesh.area(t), |x| {
            let tr = spaces::stress_eval(mesh, &state.sigma, t, x).trace();
            (tr / (2.0 * ml) + shift - div_u(x)).powi(2)
        });
    }
    sum.sqrt()
}

/// Errors of a discrete state against the case's fields at time `t`.
pub fn field_errors(mesh: &TriMesh, case: &ManufacturedCase, state: &State, t: f64) -> FieldErrors {
    let rule = error_rule();
    let nt = mesh.num_triangles();
    let mut acc = [0.0f64; 9];
    for k in 0..nt {
        let pts = mesh.triangle_points(k);
        let area = mesh.area(k);
        let q = |f: &dyn Fn(Vec2) -> f64| rule.integrate(&pts, area, f);
        acc[0] += q(&|x| (case.temperature(x, t) - state.temp[k]).powi(2));
        acc[1] += q(&|x| (case.pressure(x, t) - state.p[k]).powi(2));
        acc[2] += q(&|x| {
            let u = case.displacement(x, t);
            (u[0] - state.u[k]).powi(2) + (u[1] - state.u[nt + k]).powi(2)
        });
        acc[3] += q(&|x| sq_dist(case.darcy_flux(x, t), spaces::rt_eval(mesh, &state.w, k, x)));
        acc[4] += q(&|x| sq_dist(case.heat_flux(x, t), spaces::rt_eval(mesh, &state.r, k, x)));
        acc[5] += q(&|x| (case.stress(x, t) - spaces::stress_eval(mesh, &state.sigma, k, x)).norm_sq());
        let div_w = spaces::rt_divergence(mesh, &state.w, k);
        let div_r = spaces::rt_divergence(mesh, &state.r, k);
        let div_s = spaces::stress_divergence(mesh, &state.sigma, k);
        let (pr, a) = (&case.params, case.amplitude * t);
        acc[6] += q(&|x| (-a * hess_contract(&pr.k, bubble(x).hess) - div_w).powi(2));
        acc[7] += q(&|x| (-a * hess_contract(&pr.theta, bubble(x).hess) - div_r).powi(2));
        acc[8] += q(&|x| {
            let f = case.f(x, t);
            (-f[0] - div_s[0]).powi(2) + (-f[1] - div_s[1]).powi(2)
        });
    }
    let s = acc.map(f64::sqrt);
    FieldErrors {
        e_t: s[0],
        e_p: s[1],
        e_u: s[2],
        e_w: s[3],
        e_r: s[4],
        e_sigma: s[5],
        e_div_w: s[6],
        e_div_r: s[7],
        e_div_sigma: s[8],
        trace_residual: trace_identity_residual(mesh, &case.params, state, |x| case.div_u(x, t)),
    }
}

fn sq_dist(a: Vec2, b: Vec2) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// The exact fields' projections / interpolants packed as a state.
pub fn interpolated_state(mesh: &TriMesh, case: &ManufacturedCase, t: f64) -> State {
    State {
        time: t,
        temp: spaces::project_p0(mesh, |x| case.temperature(x, t)),
        r: spaces::interpolate_hdiv(mesh, |x| case.heat_flux(x, t)),
        p: spaces::project_p0(mesh, |x| case.pressure(x, t)),
        w: spaces::interpolate_hdiv(mesh, |x| case.darcy_flux(x, t)),
        sigma: spaces::interpolate_stress(mesh, |x| case.stress(x, t)),
        u: spaces::project_p0_vector(mesh, |x| case.displacement(x, t)),
        rho: vec![0.0; mesh.num_triangles()],
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelResult {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub errors: FieldErrors,
    pub max_picard: usize,
    pub energy: EnergyReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorTable {
    pub levels: Vec<LevelResult>,
}

impl ErrorTable {
    /// `log2(e_coarse / e_fine)` per error column between consecutive levels.
    pub fn rates(&self) -> Vec<[f64; 10]> {
        self.levels
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].errors.values(), w[1].errors.values());
                let ratio = w[0].h / w[1].h;
                let mut r = [0.0; 10];
                for i in 0..10 {
                    r[i] = if a[i] > 0.0 && b[i] > 0.0 { (a[i] / b[i]).ln() / ratio.ln() } else { f64::NAN };
                }
                r
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "level,h,dt")?;
        for name in FieldErrors::NAMES {
            write!(w, ",{name}")?;
        }
        for name in FieldErrors::NAMES {
            write!(w, ",rate_{name}")?;
        }
        writeln!(w, ",picard_max,energy_ratio_i,energy_ratio_ii,energy_ratio_iii,energy_ratio_iv")?;
        let rates = self.rates();
        for (i, l) in self.levels.iter().enumerate() {
            write!(w, "{},{:.10e},{:.10e}", l.n, l.h, l.dt)?;
            for v in l.errors.values() {
                write!(w, ",{v:.10e}")?;
            }
            for k in 0..10 {
                match i.checked_sub(1).map(|j| rates[j][k]) {
                    Some(r) => write!(w, ",{r:.4}")?,
                    None => write!(w, ",")?,
                }
            }
            write!(w, ",{}", l.max_picard)?;
            for r in l.energy.ratios() {
                write!(w, ",{r:.6e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Runs the solver on each level with `dt = dt_factor · h` up to `t_final`
/// and tabulates final-time errors. Stops at the first failing level and
/// returns the partial table with the error.
pub fn convergence_study(
    case: &ManufacturedCase,
    levels: &[usize],
    dt_factor: f64,
    t_final: f64,
    opts: SolverOptions,
) -> Result<ErrorTable, (ErrorTable, SolverError)> {
    let mut table = ErrorTable { levels: Vec::new() };
    for &n in levels {
        let mesh = TriMesh::build_structured(n).map_err(|e| {
            (table.clone(), SolverError::InvalidOption(e.to_string()))
        })?;
        let dt = dt_factor * mesh.h();
        let run = Solver::new(&mesh, case.params, opts).and_then(|s| s.run_simulation(case, dt, t_final));
        let sim = match run {
            Ok(sim) => sim,
            Err(e) => return Err((table, e)),
        };
        let last = sim.final_state();
        table.levels.push(LevelResult {
            n,
            h: mesh.h(),
            dt,
            errors: field_errors(&mesh, case, last, last.time),
            max_picard: sim.logs.iter().map(|l| l.count()).max().unwrap_or(0),
            energy: energy_report(&mesh, &case.params, &sim, case).expect("a run holds the initial state"),
        });
    }
    Ok(table)
}

/// Reduced flow–mechanics system in the order `(p, σ, w, u, ρ)`, assembled
/// without any thermal rows.
pub struct BiotSystem {
    phi: CsrMatrix,
    psi: CsrMatrix,
    offsets: [usize; 6],
}

impl BiotSystem {
    pub fn new(mesh: &TriMesh, params: &MaterialParams) -> Self {
        let (f, e) = (mesh.num_triangles(), mesh.num_edges());
        let d = params.derived();
        let a_pp = assembly::assemble_mass_p0(mesh, params.c0 + d.c_r);
        let a_ps = assembly::assemble_trace_pairing(mesh).scaled(params.pressure_trace_coupling());
        let a_ss = assembly::assemble_stress_mass(mesh, &params.compliance());
        let a_ww = assembly::assemble_mass_hdiv(mesh, params.k_inv()).expect("K is SPD");
        let a_wp = assembly::assemble_div(mesh);
        let a_us = assembly::assemble_displacement_div(mesh);
        let a_rs = assembly::assemble_weak_symmetry(mesh);
        let sizes = [f, 4 * e, e, 2 * f, f];
        let mut offsets = [0; 6];
        for i in 0..5 {
            offsets[i + 1] = offsets[i] + sizes[i];
        }
        let [p, s, w, u, rho, n] = offsets;
        let mut phi = BlockBuilder::new(n, n);
        phi.add(p, p, &a_pp, 1.0).add(p, s, &a_ps, 1.0);
        let mut psi = BlockBuilder::new(n, n);
        psi.add_transposed(p, w, &a_wp, 1.0)
            .add_transposed(s, p, &a_ps, 1.0)
            .add(s, s, &a_ss, 1.0)
            .add_transposed(s, u, &a_us, 1.0)
            .add_transposed(s, rho, &a_rs, 1.0)
            .add(w, p, &a_wp, -1.0)
            .add(w, w, &a_ww, 1.0)
            .add(u, s, &a_us, -1.0)
            .add(rho, s, &a_rs, -1.0);
        BiotSystem { phi: phi.build(), psi: psi.build(), offsets }
    }

    fn load<P: ProblemData + ?Sized>(&self, mesh: &TriMesh, problem: &P, t: f64) -> Vec<f64> {
        let loads = assembly::assemble_loads(mesh, problem, t, Default::default());
        let mut out = vec![0.0; self.offsets[5]];
        out[self.offsets[0]..self.offsets[1]].copy_from_slice(&loads.l2);
        out[self.offsets[3]..self.offsets[4]].copy_from_slice(&loads.l1);
        out
    }

    /// Runs `dts` implicit Euler steps and returns `(p, σ, w, u)` per time level.
    pub fn run<P: ProblemData + ?Sized>(
        &self,
        mesh: &TriMesh,
        problem: &P,
        dts: &[f64],
    ) -> Result<Vec<[Vec<f64>; 4]>, sparse::SolveError> {
        let n = self.offsets[5];
        let [op, os, ow, ou, _, _] = self.offsets;
        // initial state: projected pressure, algebraic rows for the rest
        let mut b = BlockBuilder::new(n, n);
        for (r, c, v) in self.psi.triplets() {
            if r >= os {
                b.add_entry(r, c, v);
            }
        }
        for i in op..os {
            b.add_entry(i, i, 1.0);
        }
        let mut rhs = self.load(mesh, problem, 0.0);
        rhs[op..os].copy_from_slice(&spaces::project_p0(mesh, |x| problem.p0(x)));
        let mut x = sparse::solve(&b.build(), &rhs)?;
        let split = |x: &[f64]| [x[op..os].to_vec(), x[os..ow].to_vec(), x[ow..ou].to_vec(), x[ou..self.offsets[4]].to_vec()];
        let mut out = vec![split(&x)];
        let mut t = 0.0;
        for &dt in dts {
            t += dt;
            let mut m = BlockBuilder::new(n, n);
            m.add(0, 0, &self.phi, 1.0 / dt).add(0, 0, &self.psi, 1.0);
            let mut rhs = self.load(mesh, problem, t);
            let phix = self.phi.matvec(&x);
            rhs.iter_mut().zip(phix).for_each(|(a, b)| *a += b / dt);
            x = sparse::solve(&m.build(), &rhs)?;
            out.push(split(&x));
        }
        Ok(out)
    }
}

/// Standalone heat equation `(T, r)` with conductivity `Θ` and capacity `a0`.
pub fn heat_oracle<P: ProblemData + ?Sized>(
    mesh: &TriMesh,
    params: &MaterialParams,
    problem: &P,
    dts: &[f64],
) -> Result<Vec<Vec<f64>>, sparse::SolveError> {
    let (f, e) = (mesh.num_triangles(), mesh.num_edges());
    let n = f + e;
    let a_tt = assembly::assemble_mass_p0(mesh, params.a0);
    let a_rr = assembly::assemble_mass_hdiv(mesh, params.theta_inv()).expect("Theta is SPD");
    let a_rt = assembly::assemble_div(mesh);
    let mut psi = BlockBuilder::new(n, n);
    psi.add_transposed(0, f, &a_rt, 1.0).add(f, 0, &a_rt, -1.0).add(f, f, &a_rr, 1.0);
    let psi = psi.build();
    let mut temp = spaces::project_p0(mesh, |x| problem.t0(x));
    let mut out = vec![temp.clone()];
    let mut t = 0.0;
    let rule = spaces::projection_rule();
    for &dt in dts {
        t += dt;
        let mut m = BlockBuilder::new(n, n);
        m.add(0, 0, &a_tt, 1.0 / dt).add(0, 0, &psi, 1.0);
        let mut rhs = vec![0.0; n];
        for k in 0..f {
            rhs[k] = rule.integrate(&mesh.triangle_points(k), mesh.area(k), |x| problem.h(x, t))
                + a_tt.get(k, k) * temp[k] / dt;
        }
        let x = sparse::solve(&m.build(), &rhs)?;
        temp = x[..f].to_vec();
        out.push(temp.clone());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiotRecovery {
    /// Max over time of the L² discrepancies in `(p, w, σ, u)`.
    pub max_discrepancy: f64,
    pub per_field: [f64; 4],
    pub steps: usize,
}

/// Compares the full solver with thermal couplings removed against the
/// reduced flow–mechanics assembly.
pub fn biot_recovery_test<P: ProblemData + ?Sized>(
    mesh: &TriMesh,
    params: &MaterialParams,
    problem: &P,
    dts: &[f64],
    opts: SolverOptions,
) -> Result<BiotRecovery, SolverError> {
    let params = params.decoupled();
    let solver = Solver::new(mesh, params, opts)?;
    let full: Simulation = solver.run_schedule(problem, dts)?;
    let reduced = BiotSystem::new(mesh, &params)
        .run(mesh, problem, dts)
        .map_err(|source| SolverError::Solve { time: f64::NAN, source })?;
    let norms = Norms::new(mesh, &params);
    let mut per_field = [0.0f64; 4];
    for (s, red) in full.states.iter().zip(&reduced) {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
        let errs = [
            norms.p0_sq(&d(&s.p, &red[0])),
            norms.stress_sq(&d(&s.sigma, &red[1])),
            norms.rt_sq(&d(&s.w, &red[2])),
            norms.p0_sq(&d(&s.u, &red[3])),
        ];
        // report in (p, w, σ, u) order
        let ordered = [errs[0], errs[2], errs[1], errs[3]];
        for i in 0..4 {
            per_field[i] = per_field[i].max(ordered[i].max(0.0).sqrt());
        }
    }
    Ok(BiotRecovery {
        max_discrepancy: per_field.iter().copied().fold(0.0, f64::max),
        per_field,
        steps: dts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(case: &ManufacturedCase, x: Vec2, t: f64) {
        let d = 1e-4;
        let pr = case.params;
        // g = ∂t(c0 p − b0 T + α ∇·u) − ∇·(K∇p)
        let mass = |t: f64| pr.c0 * case.pressure(x, t) - pr.b0 * case.temperature(x, t) + pr.alpha * case.div_u(x, t);
        let dt_mass = (mass(t + d) - mass(t - d)) / (2.0 * d);
        let p = |y: Vec2| case.pressure(y, t);
        let lap = (p([x[0] + d, x[1]]) + p([x[0] - d, x[1]]) + p([x[0], x[1] + d]) + p([x[0], x[1] - d])
            - 4.0 * p(x))
            / (d * d);
        assert!((case.g(x, t) - (dt_mass - lap)).abs() < 1e-6 * (1.0 + case.g(x, t).abs()));
    }

    #[test]
    fn sources_match_finite_differences() {
        let case = default_case();
        for (x, t) in [([0.3, 0.7], 0.4), ([0.81, 0.12], 1.3)] {
            fd_check(&case, x, t);
        }
    }

    #[test]
    fn zero_case_vanishes() {
        let z = ManufacturedCase::zero();
        assert_eq!(z.h([0.2, 0.3], 1.0), 0.0);
        assert_eq!(z.f([0.2, 0.3], 1.0), [0.0, 0.0]);
    }
}
