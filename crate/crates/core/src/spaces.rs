//! Discrete spaces and degree-of-freedom layout.
//!
//! | field | space                                   | DOFs        |
//! |-------|-----------------------------------------|-------------|
//! | `T`   | piecewise constants                     | 1/triangle  |
//! | `r`   | lowest-order Raviart–Thomas             | 1/edge      |
//! | `p`   | piecewise constants                     | 1/triangle  |
//! | `w`   | lowest-order Raviart–Thomas             | 1/edge      |
//! | `σ`   | two Brezzi–Douglas–Marini rows          | 4/edge      |
//! | `u`   | piecewise-constant vectors              | 2/triangle  |
//! | `ρ`   | piecewise-constant rotation multiplier  | 1/triangle  |
//!
//! Flux DOFs are normal fluxes `∫_e v·n_e ds` through the globally oriented
//! edge normal, so the basis function of edge `e` restricted to a triangle
//! `K` is `s_{K,e} (x − a_e) / (2|K|)` with `a_e` the vertex opposite `e`.
//!
//! Each stress row lives in the lowest-order Brezzi–Douglas–Marini space
//! (linear vector fields with continuous normal component), which together
//! with piecewise-constant displacements and rotations is the stable
//! lowest-order weakly symmetric element. Per edge a row carries the mean
//! flux `∫_e τ·n_e ds` and the first moment `∫_e τ·n_e ℓ_e ds`, where
//! `ℓ_e = 3(2s − 1)` runs from the lower-indexed endpoint (`s = 0`) to the
//! higher one. The mean-flux basis functions coincide with the
//! Raviart–Thomas ones. Stress DOFs are stored as
//! `[row 0 means…, row 0 moments…, row 1 means…, row 1 moments…]`,
//! displacements component by component (`[u_x cells…, u_y cells…]`).

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;


use crate::mesh::TriMesh;
use crate::par::{self, Execution};
use crate::quadrature::{segment_points, TriangleRule};
use crate::tensor::{dot, Tensor2, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    T,
    R,
    P,
    W,
    Sigma,
    U,
    Rho,
}

impl Field {
    /// Canonical ordering of the state vector.
    pub const ALL: [Field; 7] = [Field::T, Field::R, Field::P, Field::W, Field::Sigma, Field::U, Field::Rho];
    /// Ordering of the differential-algebraic system.
    pub const DAE_ORDER: [Field; 7] = [Field::P, Field::Sigma, Field::T, Field::W, Field::U, Field::R, Field::Rho];

    pub fn name(self) -> &'static str {
        match self {
            Field::T => "T",
            Field::R => "r",
            Field::P => "p",
            Field::W => "w",
            Field::Sigma => "sigma",
            Field::U => "u",
            Field::Rho => "rho",
        }
    }

    fn index(self) -> usize {
        Field::ALL.iter().position(|&f| f == self).unwrap()
    }
}

/// Per-field DOF counts and offsets for a given field ordering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceLayout {
    pub num_triangles: usize,
    pub num_edges: usize,
    order: [Field; 7],
    counts: [usize; 7],
    offsets: [usize; 7],
    total: usize,
}

impl SpaceLayout {
    /// Canonical layout `(T, r, p, w, σ, u, ρ)`.
    pub fn build(mesh: &TriMesh) -> Self {
        Self::from_counts(mesh.num_triangles(), mesh.num_edges())
    }

    /// Layout of the DAE system, `(p, σ, T, w, u, r, ρ)`.
    pub fn dae(mesh: &TriMesh) -> Self {
        Self::with_order(mesh.num_triangles(), mesh.num_edges(), Field::DAE_ORDER)
    }

    pub fn from_counts(num_triangles: usize, num_edges: usize) -> Self {
        Self::with_order(num_triangles, num_edges, Field::ALL)
    }

    pub fn with_order(num_triangles: usize, num_edges: usize, order: [Field; 7]) -> Self {
        let (f, e) = (num_triangles, num_edges);
        let counts = [f, e, f, e, 4 * e, 2 * f, f];
        let mut offsets = [0; 7];
        let mut next = 0;
        for field in order {
            offsets[field.index()] = next;
            next += counts[field.index()];
        }
        SpaceLayout { num_triangles, num_edges, order, counts, offsets, total: next }
    }

    pub fn order(&self) -> [Field; 7] {
        self.order
    }

    pub fn count(&self, field: Field) -> usize {
        self.counts[field.index()]
    }

    pub fn offset(&self, field: Field) -> usize {
        self.offsets[field.index()]
    }

    pub fn range(&self, field: Field) -> std::ops::Range<usize> {
        let i = field.index();
        self.offsets[i]..self.offsets[i] + self.counts[i]
    }

    pub fn total(&self) -> usize {
        self.total
    }
}

/// Value of edge basis function (local edge `k` of triangle `t`) at `x`.
#[inline]
pub fn rt_basis(mesh: &TriMesh, t: usize, k: usize, x: Vec2) -> Vec2 {
    let a = mesh.vertex(mesh.triangles()[t][k]);
    let c = mesh.triangle_signs(t)[k] / (2.0 * mesh.area(t));
    [c * (x[0] - a[0]), c * (x[1] - a[1])]
}

/// Evaluates a Raviart–Thomas field (one DOF per edge) inside triangle `t`.
pub fn rt_eval(mesh: &TriMesh, dofs: &[f64], t: usize, x: Vec2) -> Vec2 {
    let te = mesh.triangle_edges(t);
    let mut v = [0.0; 2];
    for k in 0..3 {
        let phi = rt_basis(mesh, t, k, x);
        v[0] += dofs[te[k]] * phi[0];
        v[1] += dofs[te[k]] * phi[1];
    }
    v
}

/// Constant divergence of a Raviart–Thomas field on triangle `t`.
pub fn rt_divergence(mesh: &TriMesh, dofs: &[f64], t: usize) -> f64 {
    let te = mesh.triangle_edges(t);
    let s = mesh.triangle_signs(t);
    (0..3).map(|k| s[k] * dofs[te[k]]).sum::<f64>() / mesh.area(t)
}

/// Affine vector field `v(x) = value + dx (x − x_c) + dy (y − y_c)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineVec {
    pub center: Vec2,
    pub value: Vec2,
    pub dx: Vec2,
    pub dy: Vec2,
}

impl AffineVec {
    #[inline]
    pub fn eval(&self, x: Vec2) -> Vec2 {
        let (a, b) = (x[0] - self.center[0], x[1] - self.center[1]);
        [
            self.value[0] + a * self.dx[0] + b * self.dy[0],
            self.value[1] + a * self.dx[1] + b * self.dy[1],
        ]
    }

    pub fn divergence(&self) -> f64 {
        self.dx[0] + self.dy[1]
    }
}

/// Mean flux and first moment of an affine field on edge `e`.
fn edge_moments(mesh: &TriMesh, e: usize, v: &AffineVec) -> (f64, f64) {
    let [a, b] = mesh.edge_endpoints(e);
    let n = mesh.edge_normal(e);
    let len = mesh.edge_length(e);
    let (fa, fb) = (dot(v.eval(a), n), dot(v.eval(b), n));
    (0.5 * len * (fa + fb), 0.5 * len * (fb - fa))
}

/// Local BDM basis of triangle `t`. Index `k` is the mean-flux function of
/// local edge `k`, index `3 + k` its first-moment function.
pub fn bdm_basis(mesh: &TriMesh, t: usize) -> [AffineVec; 6] {
    let center = mesh.centroid(t);
    let te = mesh.triangle_edges(t);
    let monomial = |j: usize| {
        let mut unit = [[0.0; 2]; 3];
        unit[j / 2][j % 2] = 1.0;
        AffineVec { center, value: unit[0], dx: unit[1], dy: unit[2] }
    };
    let dofs = Mat::from_fn(6, 6, |row, col| {
        let (mean, moment) = edge_moments(mesh, te[row % 3], &monomial(col));
        if row < 3 {
            mean
        } else {
            moment
        }
    });
    let inv = dofs.partial_piv_lu().inverse();
    std::array::from_fn(|l| {
        let c = |j: usize| inv[(j, l)];
        AffineVec { center, value: [c(0), c(1)], dx: [c(2), c(3)], dy: [c(4), c(5)] }
    })
}

/// Global index of local stress basis function `j` of triangle `t` in row `row`.
#[inline]
pub fn stress_dof(num_edges: usize, edges: &[usize; 3], row: usize, j: usize) -> usize {
    row * 2 * num_edges + (j / 3) * num_edges + edges[j % 3]
}

/// Evaluates a stress field (`4E` DOFs) inside triangle `t`.
pub fn stress_eval(mesh: &TriMesh, dofs: &[f64], t: usize, x: Vec2) -> Tensor2 {
    let ne = mesh.num_edges();
    let te = mesh.triangle_edges(t);
    let basis = bdm_basis(mesh, t);
    let mut rows = [[0.0; 2]; 2];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, psi) in basis.iter().enumerate() {
            let v = psi.eval(x);
            let c = dofs[stress_dof(ne, &te, i, j)];
            row[0] += c * v[0];
            row[1] += c * v[1];
        }
    }
    Tensor2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
}

/// Row-wise divergence of a stress field on triangle `t`. Only the mean
/// fluxes contribute.
pub fn stress_divergence(mesh: &TriMesh, dofs: &[f64], t: usize) -> Vec2 {
    let e = mesh.num_edges();
    [rt_divergence(mesh, &dofs[..e], t), rt_divergence(mesh, &dofs[2 * e..3 * e], t)]
}

/// Rule used for L² projections onto piecewise constants.
pub fn projection_rule() -> TriangleRule {
    TriangleRule::collapsed_gauss(8)
}

/// Cell averages of `f`.
pub fn project_p0<F>(mesh: &TriMesh, f: F) -> Vec<f64>
where
    F: Fn(Vec2) -> f64 + Sync + Send,
{
    project_p0_with(mesh, &projection_rule(), Execution::Parallel, f)
}

pub fn project_p0_with<F>(mesh: &TriMesh, rule: &TriangleRule, exec: Execution, f: F) -> Vec<f64>
where
    F: Fn(Vec2) -> f64 + Sync + Send,
{
    par::map_range(exec, mesh.num_triangles(), |t| {
        let area = mesh.area(t);
        rule.integrate(&mesh.triangle_points(t), area, &f) / area
    })
}

/// Cell averages of a vector field, packed `[x components…, y components…]`.
pub fn project_p0_vector<F>(mesh: &TriMesh, f: F) -> Vec<f64>
where
    F: Fn(Vec2) -> Vec2 + Sync + Send,
{
    let mut out = project_p0(mesh, |x| f(x)[0]);
    out.extend(project_p0(mesh, |x| f(x)[1]));
    out
}

/// Normal-flux interpolant `∫_e v·n_e ds`.
pub fn interpolate_hdiv<F>(mesh: &TriMesh, v: F) -> Vec<f64>
where
    F: Fn(Vec2) -> Vec2 + Sync + Send,
{
    par::map_range(Execution::Parallel, mesh.num_edges(), |e| {
        let [a, b] = mesh.edge_endpoints(e);
        let n = mesh.edge_normal(e);
        segment_points(a, b, 4).into_iter().map(|(x, w)| w * dot(v(x), n)).sum()
    })
}

/// First normal-flux moments `∫_e v·n_e ℓ_e ds`.
pub fn interpolate_hdiv_moment<F>(mesh: &TriMesh, v: F) -> Vec<f64>
where
    F: Fn(Vec2) -> Vec2 + Sync + Send,
{
    par::map_range(Execution::Parallel, mesh.num_edges(), |e| {
        let [a, b] = mesh.edge_endpoints(e);
        let n = mesh.edge_normal(e);
        let len = mesh.edge_length(e);
        segment_points(a, b, 4)
            .into_iter()
            .map(|(x, w)| {
                let s = (x[0] - a[0]).hypot(x[1] - a[1]) / len;
                w * 3.0 * (2.0 * s - 1.0) * dot(v(x), n)
            })
            .sum()
    })
}

/// Row-wise BDM interpolant of a tensor field.
pub fn interpolate_stress<F>(mesh: &TriMesh, s: F) -> Vec<f64>
where
    F: Fn(Vec2) -> Tensor2 + Sync + Send,
{
    let mut out = Vec::with_capacity(4 * mesh.num_edges());
    for i in 0..2 {
        out.extend(interpolate_hdiv(mesh, |x| s(x).row(i)));
        out.extend(interpolate_hdiv_moment(mesh, |x| s(x).row(i)));
    }
    out
}
