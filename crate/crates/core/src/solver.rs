//! Implicit Euler time stepping with a fixed-point (Picard) iteration on the
//! convective heat-flux coefficient.

use log::{debug, info};
use thiserror::Error;

use crate::assembly::{self, AssemblyError, Blocks};
use crate::mesh::TriMesh;
use crate::par::Execution;
use crate::params::MaterialParams;
use crate::problem::ProblemData;
use crate::spaces::{self, Field, SpaceLayout};
use crate::sparse::{BlockBuilder, CsrMatrix, SolveError, SparseLu};
use crate::tensor::{SymMat2, Vec2};

/// Treatment of the convective term `−(Θ⁻¹r·w, S)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Convection {
    /// `η = Θ⁻¹ r^{m−1}` from the previous Picard iterate.
    Picard,
    /// A fixed, spatially constant `η` (linear problem).
    Frozen(Vec2),
    /// No convective coupling.
    Off,
}

/// Starting value `r^0` of the Picard iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialGuess {
    Previous,
    Zero,
    /// `2 r^n − r^{n−1}`; falls back to `Previous` on the first step.
    Extrapolated,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub convection: Convection,
    pub initial_guess: InitialGuess,
    pub exec: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iters: 50,
            convection: Convection::Picard,
            initial_guess: InitialGuess::Previous,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("linear solve failed at t = {time}: {source}; check the pencil diagnostic (pencil-check) for this configuration")]
    Solve { time: f64, source: SolveError },
    #[error("Picard iteration did not converge at t = {} after {} iterations (last |e_r| = {:.3e}); try halving dt", .log.time, .log.iterations.len(), .log.last_e_r())]
    NotConverged { log: PicardLog },
    #[error("invalid solver option: {0}")]
    InvalidOption(String),
}

/// Coefficient vectors of all discrete fields at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub time: f64,
    pub temp: Vec<f64>,
    pub r: Vec<f64>,
    pub p: Vec<f64>,
    pub w: Vec<f64>,
    /// Row-wise stress, `[row 0 means…, row 0 moments…, row 1 means…, row 1 moments…]`.
    pub sigma: Vec<f64>,
    /// `[u_x cells…, u_y cells…]`.
    pub u: Vec<f64>,
    pub rho: Vec<f64>,
}

impl State {
    pub fn zeros(mesh: &TriMesh) -> Self {
        let (f, e) = (mesh.num_triangles(), mesh.num_edges());
        State {
            time: 0.0,
            temp: vec![0.0; f],
            r: vec![0.0; e],
            p: vec![0.0; f],
            w: vec![0.0; e],
            sigma: vec![0.0; 4 * e],
            u: vec![0.0; 2 * f],
            rho: vec![0.0; f],
        }
    }

    pub fn field(&self, field: Field) -> &[f64] {
        match field {
            Field::T => &self.temp,
            Field::R => &self.r,
            Field::P => &self.p,
            Field::W => &self.w,
            Field::Sigma => &self.sigma,
            Field::U => &self.u,
            Field::Rho => &self.rho,
        }
    }

    pub fn field_mut(&mut self, field: Field) -> &mut Vec<f64> {
        match field {
            Field::T => &mut self.temp,
            Field::R => &mut self.r,
            Field::P => &mut self.p,
            Field::W => &mut self.w,
            Field::Sigma => &mut self.sigma,
            Field::U => &mut self.u,
            Field::Rho => &mut self.rho,
        }
    }

    /// Packs the fields into one vector following `layout`'s ordering.
    pub fn to_vector(&self, layout: &SpaceLayout) -> Vec<f64> {
        let mut x = vec![0.0; layout.total()];
        for f in Field::ALL {
            x[layout.range(f)].copy_from_slice(self.field(f));
        }
        x
    }

    pub fn from_vector(layout: &SpaceLayout, x: &[f64], time: f64) -> Self {
        let take = |f| x[layout.range(f)].to_vec();
        State {
            time,
            temp: take(Field::T),
            r: take(Field::R),
            p: take(Field::P),
            w: take(Field::W),
            sigma: take(Field::Sigma),
            u: take(Field::U),
            rho: take(Field::Rho),
        }
    }

    pub fn max_abs(&self) -> f64 {
        Field::ALL.iter().flat_map(|&f| self.field(f).iter()).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        Field::ALL.iter().all(|&f| self.field(f).iter().all(|v| v.is_finite()))
    }
}

/// Discrete L² norms of the field spaces.
#[derive(Clone, Debug)]
pub struct Norms {
    areas: Vec<f64>,
    rt_mass: CsrMatrix,
    stress_mass: CsrMatrix,
    a_sigma: CsrMatrix,
    num_edges: usize,
}

impl Norms {
    pub fn new(mesh: &TriMesh, params: &MaterialParams) -> Self {
        Norms {
            areas: (0..mesh.num_triangles()).map(|t| mesh.area(t)).collect(),
            rt_mass: assembly::assemble_mass_hdiv(mesh, SymMat2::identity()).expect("identity is SPD"),
            stress_mass: assembly::assemble_stress_l2_mass(mesh),
            a_sigma: assembly::assemble_stress_mass(mesh, &params.compliance()),
            num_edges: mesh.num_edges(),
        }
    }

    /// `‖v‖²` of a piecewise constant (scalar or packed vector) field.
    pub fn p0_sq(&self, v: &[f64]) -> f64 {
        let nt = self.areas.len();
        v.iter().enumerate().map(|(i, x)| self.areas[i % nt] * x * x).sum()
    }

    /// `(a, b)` of two piecewise-constant fields of equal packing.
    pub fn p0_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let nt = self.areas.len();
        a.iter().zip(b).enumerate().map(|(i, (x, y))| self.areas[i % nt] * x * y).sum()
    }

    pub fn rt_sq(&self, v: &[f64]) -> f64 {
        self.rt_mass.bilinear(v, v)
    }

    pub fn stress_sq(&self, s: &[f64]) -> f64 {
        self.stress_mass.bilinear(s, s)
    }

    /// `‖σ‖²_A`.
    pub fn stress_a_sq(&self, s: &[f64]) -> f64 {
        self.a_sigma.bilinear(s, s)
    }

    /// `‖∇·v‖²` of a flux field.
    pub fn div_sq(&self, mesh: &TriMesh, v: &[f64]) -> f64 {
        (0..mesh.num_triangles()).map(|t| mesh.area(t) * spaces::rt_divergence(mesh, v, t).powi(2)).sum()
    }

    /// `‖∇·σ‖²` with the row-wise divergence.
    pub fn stress_div_sq(&self, mesh: &TriMesh, s: &[f64]) -> f64 {
        let e = self.num_edges;
        self.div_sq(mesh, &s[..e]) + self.div_sq(mesh, &s[2 * e..3 * e])
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Quantities recorded for one Picard iterate `m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardIterate {
    /// L² norms of the iterate differences.
    pub e_r: f64,
    pub e_w: f64,
    pub e_p: f64,
    pub e_t: f64,
    /// `‖e_σ‖²_A` and `c_r‖e_p‖² + a_r‖e_T‖²`.
    pub e_sigma_a_sq: f64,
    pub sigma_bound: f64,
    /// `max_K |Θ⁻¹ r^{m−1}|` used in this iterate's convective block.
    pub gamma_eta: f64,
    /// `max_K |w^m(centroid)|`.
    pub gamma_w: f64,
    pub r_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PicardLog {
    pub time: f64,
    pub iterations: Vec<PicardIterate>,
    pub converged: bool,
}

impl PicardLog {
    pub fn count(&self) -> usize {
        self.iterations.len()
    }

    pub fn e_r(&self) -> Vec<f64> {
        self.iterations.iter().map(|i| i.e_r).collect()
    }

    pub fn last_e_r(&self) -> f64 {
        self.iterations.last().map_or(0.0, |i| i.e_r)
    }

    /// `‖e_r^m‖² / ‖e_r^{m−1}‖²` for `m ≥ 2`; skips pairs with a zero denominator.
    pub fn ratios(&self) -> Vec<f64> {
        self.iterations
            .windows(2)
            .filter(|w| w[0].e_r > 0.0)
            .map(|w| (w[1].e_r / w[0].e_r).powi(2))
            .collect()
    }

    /// Iterates where `‖e_σ‖²_A > c_r‖e_p‖² + a_r‖e_T‖²` (with a relative slack of 1e−12).
    pub fn sigma_bound_violations(&self) -> Vec<usize> {
        self.iterations
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, it)| it.e_sigma_a_sq > it.sigma_bound * (1.0 + 1e-12) + 1e-300)
            .map(|(m, _)| m + 1)
            .collect()
    }
}

/// Full output of a time march.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub states: Vec<State>,
    pub logs: Vec<PicardLog>,
}

impl Simulation {
    pub fn final_state(&self) -> &State {
        self.states.last().expect("a simulation holds at least the initial state")
    }
}

pub struct Solver<'a> {
    mesh: &'a TriMesh,
    params: MaterialParams,
    opts: SolverOptions,
    blocks: Blocks,
    phi: CsrMatrix,
    norms: Norms,
}

impl<'a> Solver<'a> {
    pub fn new(mesh: &'a TriMesh, params: MaterialParams, opts: SolverOptions) -> Result<Self, SolverError> {
        if !(opts.tol > 0.0) {
            return Err(SolverError::InvalidOption(format!("tol must be positive, got {}", opts.tol)));
        }
        if opts.max_iters == 0 {
            return Err(SolverError::InvalidOption("max_iters must be at least 1".into()));
        }
        let blocks = Blocks::assemble(mesh, &params, opts.exec);
        let phi = blocks.phi();
        let norms = Norms::new(mesh, &params);
        Ok(Solver { mesh, params, opts, blocks, phi, norms })
    }

    pub fn mesh(&self) -> &TriMesh {
        self.mesh
    }

    pub fn params(&self) -> &MaterialParams {
        &self.params
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn blocks(&self) -> &Blocks {
        &self.blocks
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.blocks.layout
    }

    pub fn norms(&self) -> &Norms {
        &self.norms
    }

    /// Initial state: P0 projections of `p0` and `T0`, and the remaining
    /// fields from the algebraic rows of the system at `t = 0`.
    pub fn consistent_init<P: ProblemData + ?Sized>(&self, problem: &P) -> Result<State, SolverError> {
        let mesh = self.mesh;
        let layout = self.layout();
        let p0 = spaces::project_p0(mesh, |x| problem.p0(x));
        let t0 = spaces::project_p0(mesh, |x| problem.t0(x));
        let psi = self.blocks.psi(None);
        let (rp, rt) = (layout.range(Field::P), layout.range(Field::T));
        let mut b = BlockBuilder::new(layout.total(), layout.total());
        for (r, c, v) in psi.triplets() {
            if !rp.contains(&r) && !rt.contains(&r) {
                b.add_entry(r, c, v);
            }
        }
        for i in rp.clone().chain(rt.clone()) {
            b.add_entry(i, i, 1.0);
        }
        let loads = assembly::assemble_loads(mesh, problem, 0.0, self.opts.exec);
        let mut rhs = vec![0.0; layout.total()];
        rhs[rp].copy_from_slice(&p0);
        rhs[rt].copy_from_slice(&t0);
        rhs[layout.range(Field::U)].copy_from_slice(&loads.l1);
        let x = crate::sparse::solve(&b.build(), &rhs).map_err(|source| SolverError::Solve { time: 0.0, source })?;
        Ok(State::from_vector(layout, &x, 0.0))
    }

    fn convective(&self, r_prev: &[f64]) -> Result<Option<assembly::ConvectiveBlock>, SolverError> {
        Ok(match self.opts.convection {
            Convection::Off => None,
            Convection::Frozen(eta) => {
                Some(assembly::assemble_convective_eta(self.mesh, vec![eta; self.mesh.num_triangles()])?)
            }
            Convection::Picard => Some(assembly::assemble_convective(self.mesh, &self.params, r_prev)?),
        })
    }

    /// Right-hand side `L(t) + Φ X_prev / dt`.
    fn step_rhs<P: ProblemData + ?Sized>(&self, prev: &State, dt: f64, t: f64, problem: &P) -> Vec<f64> {
        let layout = self.layout();
        let loads = assembly::assemble_loads(self.mesh, problem, t, self.opts.exec);
        let mut rhs = self.blocks.load_vector(&loads);
        let phix = self.phi.matvec(&prev.to_vector(layout));
        rhs.iter_mut().zip(phix).for_each(|(a, b)| *a += b / dt);
        rhs
    }

    fn factor_step(&self, dt: f64, conv: Option<&assembly::ConvectiveBlock>, t: f64) -> Result<SparseLu, SolverError> {
        let m = self.blocks.pencil(1.0 / dt, conv.map(|c| &c.a_wt));
        SparseLu::factor(&m).map_err(|source| SolverError::Solve { time: t, source })
    }

    /// One linear solve `(Φ/dt + Ψ(r^{m−1})) X = L(t) + Φ X_prev/dt` with `t = prev.time + dt`.
    pub fn picard_step<P: ProblemData + ?Sized>(
        &self,
        prev: &State,
        r_prev_iterate: &[f64],
        dt: f64,
        problem: &P,
    ) -> Result<State, SolverError> {
        let t = prev.time + dt;
        let conv = self.convective(r_prev_iterate)?;
        let lu = self.factor_step(dt, conv.as_ref(), t)?;
        let x = lu.solve(&self.step_rhs(prev, dt, t, problem)).map_err(|source| SolverError::Solve { time: t, source })?;
        Ok(State::from_vector(self.layout(), &x, t))
    }

    /// One implicit Euler step, iterating Picard from `r^0 = prev.r`.
    pub fn step<P: ProblemData + ?Sized>(
        &self,
        prev: &State,
        dt: f64,
        problem: &P,
    ) -> Result<(State, PicardLog), SolverError> {
        self.step_from(prev, &prev.r.clone(), dt, problem)
    }

    /// One implicit Euler step starting the Picard iteration from `r0`.
    pub fn step_from<P: ProblemData + ?Sized>(
        &self,
        prev: &State,
        r0: &[f64],
        dt: f64,
        problem: &P,
    ) -> Result<(State, PicardLog), SolverError> {
        if !(dt > 0.0) {
            return Err(SolverError::InvalidOption(format!("dt must be positive, got {dt}")));
        }
        let t = prev.time + dt;
        let rhs = self.step_rhs(prev, dt, t, problem);
        let d = self.params.derived();
        let mut log = PicardLog { time: t, iterations: Vec::new(), converged: false };
        let mut last = State { r: r0.to_vec(), ..prev.clone() };
        let mut cached: Option<SparseLu> = None;
        for m in 1..=self.opts.max_iters {
            let conv = self.convective(&last.r)?;
            let fresh;
            let lu = match (&cached, self.opts.convection) {
                (Some(lu), Convection::Off | Convection::Frozen(_)) => lu,
                _ => {
                    fresh = self.factor_step(dt, conv.as_ref(), t)?;
                    if self.opts.convection != Convection::Picard {
                        cached = Some(fresh);
                        cached.as_ref().unwrap()
                    } else {
                        &fresh
                    }
                }
            };
            let x = lu.solve(&rhs).map_err(|source| SolverError::Solve { time: t, source })?;
            let next = State::from_vector(self.layout(), &x, t);
            let n = &self.norms;
            let (ep, et) = (n.p0_sq(&diff(&next.p, &last.p)), n.p0_sq(&diff(&next.temp, &last.temp)));
            let it = PicardIterate {
                e_r: n.rt_sq(&diff(&next.r, &last.r)).max(0.0).sqrt(),
                e_w: n.rt_sq(&diff(&next.w, &last.w)).max(0.0).sqrt(),
                e_p: ep.sqrt(),
                e_t: et.sqrt(),
                e_sigma_a_sq: n.stress_a_sq(&diff(&next.sigma, &last.sigma)),
                sigma_bound: d.c_r * ep + d.a_r * et,
                gamma_eta: conv.as_ref().map_or(0.0, |c| c.gamma_h),
                gamma_w: (0..self.mesh.num_triangles())
                    .map(|k| {
                        let v = spaces::rt_eval(self.mesh, &next.w, k, self.mesh.centroid(k));
                        v[0].hypot(v[1])
                    })
                    .fold(0.0, f64::max),
                r_norm: n.rt_sq(&next.r).max(0.0).sqrt(),
            };
            debug!("t={t:.6} m={m} |e_r|={:.3e} |e_w|={:.3e}", it.e_r, it.e_w);
            log.iterations.push(it);
            last = next;
            if it.e_r <= self.opts.tol * (1.0 + it.r_norm) {
                log.converged = true;
                return Ok((last, log));
            }
        }
        Err(SolverError::NotConverged { log })
    }

    /// Marches `steps` implicit Euler steps of size `dt` from the
    /// consistent initial state.
    pub fn run_steps<P: ProblemData + ?Sized>(
        &self,
        problem: &P,
        dt: f64,
        steps: usize,
    ) -> Result<Simulation, SolverError> {
        self.run_schedule(problem, &vec![dt; steps])
    }

    /// Marches over `(0, t_final]`; the last step is shortened if `t_final`
    /// is not a multiple of `dt`.
    pub fn run_simulation<P: ProblemData + ?Sized>(
        &self,
        problem: &P,
        dt: f64,
        t_final: f64,
    ) -> Result<Simulation, SolverError> {
        if !(dt > 0.0) || !(t_final >= 0.0) {
            return Err(SolverError::InvalidOption(format!("need dt > 0 and t_final >= 0, got {dt}, {t_final}")));
        }
        self.run_schedule(problem, &time_steps(dt, t_final))
    }

    pub fn run_schedule<P: ProblemData + ?Sized>(&self, problem: &P, dts: &[f64]) -> Result<Simulation, SolverError> {
        let mut states = vec![self.consistent_init(problem)?];
        let mut logs = Vec::with_capacity(dts.len());
        for &dt in dts {
            let prev = states.last().unwrap();
            let r0 = match self.opts.initial_guess {
                InitialGuess::Previous => prev.r.clone(),
                InitialGuess::Zero => vec![0.0; prev.r.len()],
                InitialGuess::Extrapolated if states.len() >= 2 => {
                    let older = &states[states.len() - 2];
                    prev.r.iter().zip(&older.r).map(|(a, b)| 2.0 * a - b).collect()
                }
                InitialGuess::Extrapolated => prev.r.clone(),
            };
            let (next, log) = self.step_from(prev, &r0, dt, problem)?;
            info!("t={:.6} picard iterations={}", next.time, log.count());
            states.push(next);
            logs.push(log);
        }
        Ok(Simulation { states, logs })
    }
}

/// Step sizes covering `(0, t_final]` with a shortened last step if needed.
pub fn time_steps(dt: f64, t_final: f64) -> Vec<f64> {
    let full = (t_final / dt * (1.0 + 1e-12)).floor() as usize;
    let mut steps = vec![dt; full];
    let rest = t_final - full as f64 * dt;
    if rest > 1e-12 * t_final.max(dt) {
        steps.push(rest);
    }
    steps
}

/// Convenience wrapper: builds a solver and runs it.
pub fn run_simulation<P: ProblemData + ?Sized>(
    mesh: &TriMesh,
    params: MaterialParams,
    opts: SolverOptions,
    problem: &P,
    dt: f64,
    t_final: f64,
) -> Result<Simulation, SolverError> {
    Solver::new(mesh, params, opts)?.run_simulation(problem, dt, t_final)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{FreeDecay, ZeroData};

    #[test]
    fn schedule_covers_final_time() {
        assert_eq!(time_steps(0.1, 0.5).len(), 5);
        let s = time_steps(0.3, 1.0);
        assert_eq!(s.len(), 4);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(time_steps(0.1, 0.0).is_empty());
    }

    #[test]
    fn zero_data_gives_zero_state_in_one_iteration() {
        let mesh = TriMesh::build_structured(2).unwrap();
        let s = Solver::new(&mesh, MaterialParams::preset(), SolverOptions::default()).unwrap();
        let init = s.consistent_init(&ZeroData).unwrap();
        assert_eq!(init.max_abs(), 0.0);
        let (next, log) = s.step(&init, 0.1, &ZeroData).unwrap();
        assert_eq!(log.count(), 1);
        assert_eq!(next.max_abs(), 0.0);
    }

    #[test]
    fn frozen_mode_converges_on_second_iterate() {
        let mesh = TriMesh::build_structured(3).unwrap();
        let opts = SolverOptions { convection: Convection::Frozen([0.5, -0.25]), ..Default::default() };
        let s = Solver::new(&mesh, MaterialParams::preset(), opts).unwrap();
        let init = s.consistent_init(&FreeDecay::default()).unwrap();
        let (_, log) = s.step(&init, 0.05, &FreeDecay::default()).unwrap();
        assert!(log.converged);
        assert_eq!(log.count(), 2);
    }

    #[test]
    fn state_vector_roundtrip() {
        let mesh = TriMesh::build_structured(2).unwrap();
        let layout = SpaceLayout::dae(&mesh);
        let x: Vec<f64> = (0..layout.total()).map(|i| i as f64).collect();
        let s = State::from_vector(&layout, &x, 0.5);
        assert_eq!(s.to_vector(&layout), x);
        assert_eq!(s.p[0], 0.0);
    }

    #[test]
    fn rejects_bad_options() {
        let mesh = TriMesh::build_structured(1).unwrap();
        let bad = SolverOptions { tol: 0.0, ..Default::default() };
        assert!(matches!(Solver::new(&mesh, MaterialParams::preset(), bad), Err(SolverError::InvalidOption(_))));
    }
}
