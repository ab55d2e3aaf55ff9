//! Structured triangulations of the unit square with oriented edges.

use std::collections::BTreeMap;
use std::io::{self, Write};

use thiserror::Error;

use crate::tensor::{dot, norm, sub, Vec2};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MeshError {
    #[error("subdivision count must be at least 1")]
    ZeroSubdivisions,
    #[error("edge index {index} out of range (mesh has {count} edges)")]
    EdgeOutOfRange { index: usize, count: usize },
}

/// A triangle incident to an edge, with the sign relating the triangle's
/// outward normal on that edge to the edge's global normal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Incidence {
    pub triangle: usize,
    pub sign: i8,
}

/// Triangulation of `[0,1]²` from an `n × n` grid of squares, each split
/// along its positive-slope diagonal.
///
/// Local edge `i` of a triangle is the edge opposite its local vertex `i`.
/// Edge `e` joins vertices `edges[e][0] < edges[e][1]`; its global unit
/// normal is the tangent `x₁ − x₀` rotated clockwise.
#[derive(Clone, Debug)]
pub struct TriMesh {
    n: usize,
    vertices: Vec<Vec2>,
    triangles: Vec<[usize; 3]>,
    tri_edges: Vec<[usize; 3]>,
    tri_signs: Vec<[f64; 3]>,
    areas: Vec<f64>,
    edges: Vec<[usize; 2]>,
    edge_normals: Vec<Vec2>,
    edge_lengths: Vec<f64>,
    edge_tris: Vec<Vec<Incidence>>,
    boundary_vertex: Vec<bool>,
}

impl TriMesh {
    pub fn build_structured(n: usize) -> Result<Self, MeshError> {
        if n == 0 {
            return Err(MeshError::ZeroSubdivisions);
        }
        let h = 1.0 / n as f64;
        let vid = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        let mut boundary_vertex = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 * h, j as f64 * h]);
                boundary_vertex.push(i == 0 || j == 0 || i == n || j == n);
            }
        }

        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v01, v11) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }

        let mut keys: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for t in &triangles {
            for k in 0..3 {
                let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
                keys.insert((a.min(b), a.max(b)), 0);
            }
        }
        for (idx, v) in keys.values_mut().enumerate() {
            *v = idx;
        }
        let edges: Vec<[usize; 2]> = keys.keys().map(|&(a, b)| [a, b]).collect();
        let mut edge_normals = Vec::with_capacity(edges.len());
        let mut edge_lengths = Vec::with_capacity(edges.len());
        for e in &edges {
            let t = sub(vertices[e[1]], vertices[e[0]]);
            let len = norm(t);
            edge_lengths.push(len);
            edge_normals.push([t[1] / len, -t[0] / len]);
        }

        let mut tri_edges = Vec::with_capacity(triangles.len());
        let mut tri_signs = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        let mut edge_tris = vec![Vec::with_capacity(2); edges.len()];
        for (ti, t) in triangles.iter().enumerate() {
            let [p0, p1, p2] = t.map(|v| vertices[v]);
            let d1 = sub(p1, p0);
            let d2 = sub(p2, p0);
            areas.push(0.5 * (d1[0] * d2[1] - d1[1] * d2[0]));
            let mut te = [0; 3];
            let mut ts = [0.0; 3];
            for k in 0..3 {
                let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
                let e = keys[&(a.min(b), a.max(b))];
                let mid = [0.5 * (vertices[a][0] + vertices[b][0]), 0.5 * (vertices[a][1] + vertices[b][1])];
                let outward = dot(edge_normals[e], sub(mid, vertices[t[k]])) > 0.0;
                let sign: i8 = if outward { 1 } else { -1 };
                te[k] = e;
                ts[k] = sign as f64;
                edge_tris[e].push(Incidence { triangle: ti, sign });
            }
            tri_edges.push(te);
            tri_signs.push(ts);
        }

        Ok(TriMesh {
            n,
            vertices,
            triangles,
            tri_edges,
            tri_signs,
            areas,
            edges,
            edge_normals,
            edge_lengths,
            edge_tris,
            boundary_vertex,
        })
    }

    pub fn subdivisions(&self) -> usize {
        self.n
    }

    /// Leg length of the grid squares.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Vec2 {
        self.vertices[v]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle_points(&self, t: usize) -> [Vec2; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    /// Global edge indices of a triangle, local edge `i` opposite local vertex `i`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.tri_edges[t]
    }

    /// `+1` where the edge's global normal points out of the triangle.
    pub fn triangle_signs(&self, t: usize) -> [f64; 3] {
        self.tri_signs[t]
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn centroid(&self, t: usize) -> Vec2 {
        let [a, b, c] = self.triangle_points(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge_normal(&self, e: usize) -> Vec2 {
        self.edge_normals[e]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.edge_lengths[e]
    }

    pub fn edge_endpoints(&self, e: usize) -> [Vec2; 2] {
        self.edges[e].map(|v| self.vertices[v])
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_tris[e].len() == 1
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    /// Triangles incident to `edge`, in ascending triangle order.
    pub fn adjacency(&self, edge: usize) -> Result<&[Incidence], MeshError> {
        self.edge_tris
            .get(edge)
            .map(Vec::as_slice)
            .ok_or(MeshError::EdgeOutOfRange { index: edge, count: self.edges.len() })
    }

    /// Plain-text vertex, triangle and edge tables.
    pub fn write_tables<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# vertices: id x y boundary")?;
        for (i, v) in self.vertices.iter().enumerate() {
            writeln!(w, "{} {:.17e} {:.17e} {}", i, v[0], v[1], self.boundary_vertex[i] as u8)?;
        }
        writeln!(w, "# triangles: id v0 v1 v2 e0 e1 e2 s0 s1 s2")?;
        for (i, t) in self.triangles.iter().enumerate() {
            let e = self.tri_edges[i];
            let s = self.tri_signs[i];
            writeln!(w, "{} {} {} {} {} {} {} {} {} {}", i, t[0], t[1], t[2], e[0], e[1], e[2], s[0], s[1], s[2])?;
        }
        writeln!(w, "# edges: id v0 v1 nx ny length boundary")?;
        for (i, e) in self.edges.iter().enumerate() {
            let nrm = self.edge_normals[i];
            writeln!(
                w,
                "{} {} {} {:.17e} {:.17e} {:.17e} {}",
                i,
                e[0],
                e[1],
                nrm[0],
                nrm[1],
                self.edge_lengths[i],
                self.is_boundary_edge(i) as u8
            )?;
        }
        Ok(())
    }
}
