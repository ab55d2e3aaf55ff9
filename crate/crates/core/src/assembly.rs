//! Sparse block operators of the semi-discrete system `Φ dX/dt + Ψ X = L`.
//!
//! The unknown vector is ordered `(p, σ, T, w, u, r, ρ)`. All element
//! integrals are closed form: flux and stress basis functions are affine, so
//! their products are quadratic and the edge-midpoint rule is exact.

use log::warn;
use thiserror::Error;

use crate::mesh::TriMesh;
use crate::par::{self, Execution};
use crate::params::{Compliance, MaterialParams};
use crate::problem::ProblemData;
use crate::quadrature::TriangleRule;
use crate::spaces::{self, stress_dof, AffineVec, Field, SpaceLayout};
use crate::sparse::{BlockBuilder, CsrMatrix};
use crate::tensor::{dot, SymMat2, Vec2};

#[derive(Debug, Error, PartialEq)]
pub enum AssemblyError {
    #[error("tensor `{name}` is not symmetric positive definite")]
    NotSpd { name: &'static str },
    #[error("{what} has length {got}, expected {expected}")]
    Dimension { what: &'static str, expected: usize, got: usize },
}

/// Geometry of one triangle as used by the element kernels.
#[derive(Clone, Copy, Debug)]
pub struct Element {
    pub index: usize,
    pub points: [Vec2; 3],
    pub area: f64,
    pub edges: [usize; 3],
    pub signs: [f64; 3],
    pub centroid: Vec2,
}

impl Element {
    pub fn new(mesh: &TriMesh, t: usize) -> Self {
        Element {
            index: t,
            points: mesh.triangle_points(t),
            area: mesh.area(t),
            edges: mesh.triangle_edges(t),
            signs: mesh.triangle_signs(t),
            centroid: mesh.centroid(t),
        }
    }

    fn midpoints(&self) -> [Vec2; 3] {
        let p = self.points;
        [0, 1, 2].map(|k| {
            let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
            [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
        })
    }

    /// `∫_K φ_k`.
    pub fn basis_integral(&self, k: usize) -> Vec2 {
        let a = self.points[k];
        let s = 0.5 * self.signs[k];
        [s * (self.centroid[0] - a[0]), s * (self.centroid[1] - a[1])]
    }

    /// `∫_K (φ_k)_i (φ_l)_j` as a 2×2 array indexed `[i][j]`.
    pub fn basis_outer(&self, k: usize, l: usize) -> [[f64; 2]; 2] {
        let (a, b) = (self.points[k], self.points[l]);
        let c = self.signs[k] * self.signs[l] / (4.0 * self.area * self.area) * (self.area / 3.0);
        let mut out = [[0.0; 2]; 2];
        for m in self.midpoints() {
            let (x, y) = ([m[0] - a[0], m[1] - a[1]], [m[0] - b[0], m[1] - b[1]]);
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] += c * x[i] * y[j];
                }
            }
        }
        out
    }

    /// `∫_K a_i b_j` for affine vector fields.
    pub fn affine_outer(&self, a: &AffineVec, b: &AffineVec) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for m in self.midpoints() {
            let (x, y) = (a.eval(m), b.eval(m));
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] += self.area / 3.0 * x[i] * y[j];
                }
            }
        }
        out
    }
}

fn assemble<F>(exec: Execution, mesh: &TriMesh, nrows: usize, ncols: usize, kernel: F) -> CsrMatrix
where
    F: Fn(&Element) -> Vec<(usize, usize, f64)> + Send + Sync,
{
    let trip = par::flat_map_range(exec, mesh.num_triangles(), |t| kernel(&Element::new(mesh, t)));
    CsrMatrix::from_triplets(nrows, ncols, trip)
}

/// Diagonal P0 mass matrix scaled by `weight`.
pub fn assemble_mass_p0(mesh: &TriMesh, weight: f64) -> CsrMatrix {
    let d: Vec<f64> = (0..mesh.num_triangles()).map(|t| weight * mesh.area(t)).collect();
    CsrMatrix::diagonal(&d)
}

/// Raviart–Thomas mass matrix `(M φ_e, φ_f)`.
pub fn assemble_mass_hdiv(mesh: &TriMesh, m: SymMat2) -> Result<CsrMatrix, AssemblyError> {
    if !m.is_spd() {
        return Err(AssemblyError::NotSpd { name: "M" });
    }
    Ok(mass_hdiv(Execution::default(), mesh, m))
}

fn mass_hdiv(exec: Execution, mesh: &TriMesh, m: SymMat2) -> CsrMatrix {
    let ne = mesh.num_edges();
    assemble(exec, mesh, ne, ne, |el| {
        let mut out = Vec::with_capacity(9);
        for k in 0..3 {
            for l in 0..3 {
                let o = el.basis_outer(k, l);
                let v = m.a11 * o[0][0] + m.a12 * (o[0][1] + o[1][0]) + m.a22 * o[1][1];
                out.push((el.edges[k], el.edges[l], v));
            }
        }
        out
    })
}

/// Divergence pairing `(∇·φ_e, q_K)`, an `E × F` matrix with entries `±1`.
pub fn assemble_div(mesh: &TriMesh) -> CsrMatrix {
    let trip = (0..mesh.num_triangles())
        .flat_map(|t| {
            let (e, s) = (mesh.triangle_edges(t), mesh.triangle_signs(t));
            (0..3).map(move |k| (e[k], t, s[k]))
        })
        .collect();
    CsrMatrix::from_triplets(mesh.num_edges(), mesh.num_triangles(), trip)
}

/// Unscaled trace pairing `(q_K I, τ)`, an `F × 4E` matrix.
pub fn assemble_trace_pairing(mesh: &TriMesh) -> CsrMatrix {
    stress_moment_block(mesh, |m, row| m[row])
}

/// `F × 4E` block pairing P0 scalars with a linear functional of the
/// cell integral of each stress basis function.
fn stress_moment_block<G>(mesh: &TriMesh, g: G) -> CsrMatrix
where
    G: Fn(Vec2, usize) -> f64 + Send + Sync,
{
    let ne = mesh.num_edges();
    let trip = par::flat_map_range(Execution::default(), mesh.num_triangles(), |t| {
        let (edges, area) = (mesh.triangle_edges(t), mesh.area(t));
        let basis = spaces::bdm_basis(mesh, t);
        let mut out = Vec::with_capacity(12);
        for row in 0..2 {
            for (j, psi) in basis.iter().enumerate() {
                let m = [area * psi.value[0], area * psi.value[1]];
                out.push((t, stress_dof(ne, &edges, row, j), g(m, row)));
            }
        }
        out
    });
    CsrMatrix::from_triplets(mesh.num_triangles(), 4 * ne, trip)
}

/// Pressure/temperature couplings `A_pσ`, `A_Tσ` and `A_Tp`.
#[derive(Clone, Debug)]
pub struct TraceBlocks {
    pub a_p_sigma: CsrMatrix,
    pub a_t_sigma: CsrMatrix,
    pub a_tp: CsrMatrix,
}

pub fn assemble_coupling_traces(mesh: &TriMesh, params: &MaterialParams) -> TraceBlocks {
    let pairing = assemble_trace_pairing(mesh);
    TraceBlocks {
        a_p_sigma: pairing.scaled(params.pressure_trace_coupling()),
        a_t_sigma: pairing.scaled(params.thermal_trace_coupling()),
        a_tp: assemble_mass_p0(mesh, -params.derived().b_r),
    }
}

/// Rotation pairing `(ρ_K, τ12 − τ21)`, an `F × 4E` matrix.
pub fn assemble_weak_symmetry(mesh: &TriMesh) -> CsrMatrix {
    // row 0 contributes τ12, row 1 contributes −τ21
    stress_moment_block(mesh, |m, row| if row == 0 { m[1] } else { -m[0] })
}

/// Stress compliance matrix `(A τ_a, τ_b)` on the row-wise stress space.
pub fn assemble_stress_mass(mesh: &TriMesh, compliance: &Compliance) -> CsrMatrix {
    stress_mass(Execution::default(), mesh, compliance)
}

fn stress_mass(exec: Execution, mesh: &TriMesh, c: &Compliance) -> CsrMatrix {
    stress_gram(exec, mesh, 1.0 / (2.0 * c.mu), c.trace_factor())
}

/// Plain L² Gram matrix of the stress space.
pub fn assemble_stress_l2_mass(mesh: &TriMesh) -> CsrMatrix {
    stress_gram(Execution::default(), mesh, 1.0, 0.0)
}

/// `(c (τ − κ tr(τ) I), ς)` on the stress basis.
fn stress_gram(exec: Execution, mesh: &TriMesh, c: f64, kappa: f64) -> CsrMatrix {
    let ne = mesh.num_edges();
    assemble(exec, mesh, 4 * ne, 4 * ne, |el| {
        let basis = spaces::bdm_basis(mesh, el.index);
        let mut out = Vec::with_capacity(144);
        for (a, pa) in basis.iter().enumerate() {
            for (b, pb) in basis.iter().enumerate() {
                let o = el.affine_outer(pa, pb);
                let full = o[0][0] + o[1][1];
                for i in 0..2 {
                    for j in 0..2 {
                        let delta = if i == j { full } else { 0.0 };
                        let v = c * (delta - kappa * o[i][j]);
                        out.push((stress_dof(ne, &el.edges, i, a), stress_dof(ne, &el.edges, j, b), v));
                    }
                }
            }
        }
        out
    })
}

/// Displacement–stress divergence pairing `(v, ∇·τ)`, a `2F × 4E` matrix.
pub fn assemble_displacement_div(mesh: &TriMesh) -> CsrMatrix {
    let (nt, ne) = (mesh.num_triangles(), mesh.num_edges());
    let trip = (0..nt)
        .flat_map(|t| {
            let (e, s) = (mesh.triangle_edges(t), mesh.triangle_signs(t));
            (0..2).flat_map(move |i| (0..3).map(move |k| (i * nt + t, stress_dof(ne, &e, i, k), s[k])))
        })
        .collect();
    CsrMatrix::from_triplets(2 * nt, 4 * ne, trip)
}

/// Elementwise-constant convective coefficient `η_K = Θ⁻¹ r(centroid_K)`.
pub fn convective_coefficient(mesh: &TriMesh, params: &MaterialParams, r: &[f64]) -> Vec<Vec2> {
    let theta_inv = params.theta_inv();
    par::map_range(Execution::default(), mesh.num_triangles(), |t| {
        theta_inv.apply(spaces::rt_eval(mesh, r, t, mesh.centroid(t)))
    })
}

/// Linearized convective block and its sup-norm `γ_h = max_K |η_K|`.
#[derive(Clone, Debug)]
pub struct ConvectiveBlock {
    /// `(η·φ_e, S_K)`, an `E × F` matrix.
    pub a_wt: CsrMatrix,
    pub eta: Vec<Vec2>,
    pub gamma_h: f64,
}

/// Convective block for the frozen heat flux `r_frozen`.
pub fn assemble_convective(
    mesh: &TriMesh,
    params: &MaterialParams,
    r_frozen: &[f64],
) -> Result<ConvectiveBlock, AssemblyError> {
    if r_frozen.len() != mesh.num_edges() {
        return Err(AssemblyError::Dimension { what: "frozen heat flux", expected: mesh.num_edges(), got: r_frozen.len() });
    }
    assemble_convective_eta(mesh, convective_coefficient(mesh, params, r_frozen))
}

/// Convective block for a given elementwise-constant `η`.
pub fn assemble_convective_eta(mesh: &TriMesh, eta: Vec<Vec2>) -> Result<ConvectiveBlock, AssemblyError> {
    if eta.len() != mesh.num_triangles() {
        return Err(AssemblyError::Dimension { what: "eta", expected: mesh.num_triangles(), got: eta.len() });
    }
    let trip = (0..mesh.num_triangles())
        .flat_map(|t| {
            let el = Element::new(mesh, t);
            let e = eta[t];
            (0..3).filter_map(move |k| {
                let v = dot(e, el.basis_integral(k));
                (v != 0.0).then_some((el.edges[k], t, v))
            })
        })
        .collect();
    let gamma_h = eta.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
    Ok(ConvectiveBlock { a_wt: CsrMatrix::from_triplets(mesh.num_edges(), mesh.num_triangles(), trip), eta, gamma_h })
}

/// Load vectors `L1 = (f, v)`, `L2 = (g, q)`, `L3 = (h, S)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Loads {
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub l3: Vec<f64>,
}

pub fn assemble_loads<P: ProblemData + ?Sized>(mesh: &TriMesh, problem: &P, t: f64, exec: Execution) -> Loads {
    let rule = spaces::projection_rule();
    let nt = mesh.num_triangles();
    let cell = |t_idx: usize, f: &dyn Fn(Vec2) -> f64| -> f64 {
        rule.integrate(&mesh.triangle_points(t_idx), mesh.area(t_idx), f)
    };
    let per_cell = par::map_range(exec, nt, |k| {
        let fx = cell(k, &|x| problem.f(x, t)[0]);
        let fy = cell(k, &|x| problem.f(x, t)[1]);
        (fx, fy, cell(k, &|x| problem.g(x, t)), cell(k, &|x| problem.h(x, t)))
    });
    let mut l1 = vec![0.0; 2 * nt];
    let (mut l2, mut l3) = (vec![0.0; nt], vec![0.0; nt]);
    for (k, (fx, fy, g, h)) in per_cell.into_iter().enumerate() {
        l1[k] = fx;
        l1[nt + k] = fy;
        l2[k] = g;
        l3[k] = h;
    }
    Loads { l1, l2, l3 }
}

/// The named operator blocks, independent of time and of the convective
/// coefficient.
#[derive(Clone, Debug)]
pub struct Blocks {
    pub a_tt: CsrMatrix,
    pub a_pp: CsrMatrix,
    pub a_sigma_sigma: CsrMatrix,
    pub a_ww: CsrMatrix,
    pub a_rr: CsrMatrix,
    pub a_u_sigma: CsrMatrix,
    pub a_p_sigma: CsrMatrix,
    pub a_t_sigma: CsrMatrix,
    pub a_tp: CsrMatrix,
    pub a_wp: CsrMatrix,
    pub a_rt: CsrMatrix,
    pub a_rho_sigma: CsrMatrix,
    pub layout: SpaceLayout,
}

impl Blocks {
    pub fn assemble(mesh: &TriMesh, params: &MaterialParams, exec: Execution) -> Self {
        let report = params.check_constraints();
        if !report.overall {
            warn!("coefficient constraints violated; results are outside the well-posedness theory\n{report}");
        }
        let d = params.derived();
        let traces = assemble_coupling_traces(mesh, params);
        let div = assemble_div(mesh);
        Blocks {
            a_tt: assemble_mass_p0(mesh, params.a0 + d.a_r),
            a_pp: assemble_mass_p0(mesh, params.c0 + d.c_r),
            a_sigma_sigma: stress_mass(exec, mesh, &params.compliance()),
            a_ww: mass_hdiv(exec, mesh, params.k_inv()),
            a_rr: mass_hdiv(exec, mesh, params.theta_inv()),
            a_u_sigma: assemble_displacement_div(mesh),
            a_p_sigma: traces.a_p_sigma,
            a_t_sigma: traces.a_t_sigma,
            a_tp: traces.a_tp,
            a_wp: div.clone(),
            a_rt: div,
            a_rho_sigma: assemble_weak_symmetry(mesh),
            layout: SpaceLayout::dae(mesh),
        }
    }

    /// The mass-like matrix `Φ`, nonzero only on the `(p, σ, T)` rows and columns.
    pub fn phi(&self) -> CsrMatrix {
        let l = &self.layout;
        let (p, s, t) = (l.offset(Field::P), l.offset(Field::Sigma), l.offset(Field::T));
        let mut b = BlockBuilder::new(l.total(), l.total());
        b.add(p, p, &self.a_pp, 1.0)
            .add(p, s, &self.a_p_sigma, 1.0)
            .add_transposed(p, t, &self.a_tp, 1.0)
            .add(t, p, &self.a_tp, 1.0)
            .add(t, s, &self.a_t_sigma, 1.0)
            .add(t, t, &self.a_tt, 1.0);
        b.build()
    }

    /// `Ψ` with the convective block `A_wT` (if any) in the temperature row.
    pub fn psi(&self, a_wt: Option<&CsrMatrix>) -> CsrMatrix {
        let mut b = BlockBuilder::new(self.layout.total(), self.layout.total());
        self.add_psi(&mut b, 1.0, a_wt);
        b.build()
    }

    /// `scale·Φ + Ψ(A_wT)`.
    pub fn pencil(&self, scale: f64, a_wt: Option<&CsrMatrix>) -> CsrMatrix {
        let l = &self.layout;
        let (p, s, t) = (l.offset(Field::P), l.offset(Field::Sigma), l.offset(Field::T));
        let mut b = BlockBuilder::new(l.total(), l.total());
        b.add(p, p, &self.a_pp, scale)
            .add(p, s, &self.a_p_sigma, scale)
            .add_transposed(p, t, &self.a_tp, scale)
            .add(t, p, &self.a_tp, scale)
            .add(t, s, &self.a_t_sigma, scale)
            .add(t, t, &self.a_tt, scale);
        self.add_psi(&mut b, 1.0, a_wt);
        b.build()
    }

    fn add_psi(&self, b: &mut BlockBuilder, c: f64, a_wt: Option<&CsrMatrix>) {
        let l = &self.layout;
        let off = |f| l.offset(f);
        let (p, s, t, w, u, r, rho) =
            (off(Field::P), off(Field::Sigma), off(Field::T), off(Field::W), off(Field::U), off(Field::R), off(Field::Rho));
        b.add_transposed(p, w, &self.a_wp, c)
            .add_transposed(s, p, &self.a_p_sigma, c)
            .add(s, s, &self.a_sigma_sigma, c)
            .add_transposed(s, t, &self.a_t_sigma, c)
            .add_transposed(s, u, &self.a_u_sigma, c)
            .add_transposed(s, rho, &self.a_rho_sigma, c)
            .add_transposed(t, r, &self.a_rt, c)
            .add(w, p, &self.a_wp, -c)
            .add(w, w, &self.a_ww, c)
            .add(u, s, &self.a_u_sigma, -c)
            .add(r, t, &self.a_rt, -c)
            .add(r, r, &self.a_rr, c)
            .add(rho, s, &self.a_rho_sigma, -c);
        if let Some(a) = a_wt {
            b.add_transposed(t, w, a, -c);
        }
    }

    /// `L = (L2, 0, L3, 0, L1, 0, 0)` in DAE order.
    pub fn load_vector(&self, loads: &Loads) -> Vec<f64> {
        let l = &self.layout;
        let mut out = vec![0.0; l.total()];
        out[l.range(Field::P)].copy_from_slice(&loads.l2);
        out[l.range(Field::T)].copy_from_slice(&loads.l3);
        out[l.range(Field::U)].copy_from_slice(&loads.l1);
        out
    }
}

/// Fully assembled `Φ`, `Ψ` and `L` at one time instant.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub blocks: Blocks,
    pub a_wt: CsrMatrix,
    pub gamma_h: f64,
    pub phi: CsrMatrix,
    pub psi: CsrMatrix,
    pub load: Vec<f64>,
}

impl BlockSystem {
    pub fn layout(&self) -> &SpaceLayout {
        &self.blocks.layout
    }
}

/// Assembles `Φ`, `Ψ(r_frozen)` and `L(t)`.
pub fn assemble_system<P: ProblemData + ?Sized>(
    mesh: &TriMesh,
    params: &MaterialParams,
    r_frozen: &[f64],
    problem: &P,
    t: f64,
) -> Result<BlockSystem, AssemblyError> {
    let blocks = Blocks::assemble(mesh, params, Execution::default());
    let conv = assemble_convective(mesh, params, r_frozen)?;
    let loads = assemble_loads(mesh, problem, t, Execution::default());
    Ok(BlockSystem {
        phi: blocks.phi(),
        psi: blocks.psi(Some(&conv.a_wt)),
        load: blocks.load_vector(&loads),
        a_wt: conv.a_wt,
        gamma_h: conv.gamma_h,
        blocks,
    })
}

/// Degree-4 rule used for error and data integrals.
pub fn error_rule() -> TriangleRule {
    TriangleRule::degree4()
}
