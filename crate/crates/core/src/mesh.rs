//! Structured triangulations of the unit square.
//!
//! Two families are provided. The symmetric family splits a uniform `M x M`
//! grid of squares along the lower-left to upper-right diagonal. The
//! nonsymmetric family uses `M` columns whose widths alternate between
//! `4/(3M)` and `2/(3M)` (wide first) and `3M/4` uniform rows, every
//! rectangle split along the same diagonal.
//!
//! Nodes are ordered lexicographically by `(y, x)`.
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};

/// Barycentric tolerance used when locating points on shared edges.
pub const LOCATE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshFamily {
    Symmetric(usize),
    Nonsymmetric(usize),
}

impl MeshFamily {
    pub fn subdivisions(&self) -> usize {
        match *self {
            MeshFamily::Symmetric(m) | MeshFamily::Nonsymmetric(m) => m,
        }
    }

    pub fn build(&self) -> Result<TriMesh> {
        match *self {
            MeshFamily::Symmetric(m) => build_symmetric_mesh(m),
            MeshFamily::Nonsymmetric(m) => build_nonsymmetric_mesh(m),
        }
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshFamily::Symmetric(m) => write!(f, "symmetric({m})"),
            MeshFamily::Nonsymmetric(m) => write!(f, "nonsymmetric({m})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    interior_index: Vec<Option<usize>>,
    interior_nodes: Vec<usize>,
    family: MeshFamily,
    h: f64,
    locator: BucketGrid,
}

impl TriMesh {
    fn from_grid(xs: &[f64], ys: &[f64], family: MeshFamily) -> Result<Self> {
        let nx = xs.len();
        let mut nodes = Vec::with_capacity(nx * ys.len());
        for &y in ys {
            for &x in xs {
                nodes.push([x, y]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * (nx - 1) * (ys.len() - 1));
        for j in 0..ys.len() - 1 {
            for i in 0..nx - 1 {
                let ll = j * nx + i;
                let lr = ll + 1;
                let ul = ll + nx;
                let ur = ul + 1;
                triangles.push([ll, lr, ur]);
                triangles.push([ll, ur, ul]);
            }
        }
        Self::new(nodes, triangles, family)
    }

    fn new(nodes: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, family: MeshFamily) -> Result<Self> {
        let boundary: Vec<bool> = nodes
            .iter()
            .map(|&[x, y]| x == 0.0 || x == 1.0 || y == 0.0 || y == 1.0)
            .collect();
        let mut interior_index = vec![None; nodes.len()];
        let mut interior_nodes = Vec::new();
        for (i, &b) in boundary.iter().enumerate() {
            if !b {
                interior_index[i] = Some(interior_nodes.len());
                interior_nodes.push(i);
            }
        }
        let mut h: f64 = 0.0;
        for (k, tri) in triangles.iter().enumerate() {
            let p = tri.map(|i| nodes[i]);
            let area = signed_area(&p);
            if area <= 0.0 {
                return Err(Error::DegenerateTriangle { index: k, area });
            }
            for e in 0..3 {
                let a = p[e];
                let b = p[(e + 1) % 3];
                h = h.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        let locator = BucketGrid::new(&nodes, &triangles);
        Ok(TriMesh {
            nodes,
            triangles,
            boundary,
            interior_index,
            interior_nodes,
            family,
            h,
            locator,
        })
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_interior(&self) -> usize {
        self.interior_nodes.len()
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    /// Interior-DOF ordinal of a node, `None` on the boundary.
    pub fn interior_index(&self, node: usize) -> Option<usize> {
        self.interior_index[node]
    }

    /// Node index of each interior DOF.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    pub fn family(&self) -> MeshFamily {
        self.family
    }

    /// Maximum triangle diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn triangle_vertices(&self, k: usize) -> [[f64; 2]; 3] {
        self.triangles[k].map(|i| self.nodes[i])
    }

    pub fn triangle_area(&self, k: usize) -> f64 {
        signed_area(&self.triangle_vertices(k))
    }

    /// Scatter an interior-DOF vector into a full nodal vector with zero boundary values.
    pub fn expand_interior(&self, interior: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.nodes.len()];
        for (&node, &v) in self.interior_nodes.iter().zip(interior) {
            full[node] = v;
        }
        full
    }

    /// Gather the interior entries of a full nodal vector.
    pub fn restrict_interior(&self, full: &[f64]) -> Vec<f64> {
        self.interior_nodes.iter().map(|&n| full[n]).collect()
    }

    /// Nodal interpolant of `g` (all nodes, boundary included).
    pub fn interpolate<F: Fn(f64, f64) -> f64>(&self, g: F) -> Vec<f64> {
        self.nodes.iter().map(|&[x, y]| g(x, y)).collect()
    }

    /// Find a triangle containing `(x, y)` and the barycentric coordinates of the point in it.
    pub fn locate(&self, x: f64, y: f64) -> Result<(usize, [f64; 3])> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::OutOfDomain { x, y });
        }
        for &k in self.locator.candidates(x, y) {
            let bary = barycentric(&self.triangle_vertices(k), x, y);
            if bary.iter().all(|&b| b >= -LOCATE_TOL) {
                return Ok((k, bary));
            }
        }
        // Only reachable through rounding at bucket borders.
        self.locate_brute_force(x, y).ok_or(Error::OutOfDomain { x, y })
    }

    fn locate_brute_force(&self, x: f64, y: f64) -> Option<(usize, [f64; 3])> {
        (0..self.triangles.len()).find_map(|k| {
            let bary = barycentric(&self.triangle_vertices(k), x, y);
            bary.iter().all(|&b| b >= -LOCATE_TOL).then_some((k, bary))
        })
    }

    /// Write the plain-text mesh format: a `nodes <n> triangles <m>` header,
    /// `x y boundary_flag` per node, then three 0-based node indices per triangle.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "nodes {} triangles {}", self.nodes.len(), self.triangles.len())?;
        for (p, &b) in self.nodes.iter().zip(&self.boundary) {
            writeln!(out, "{} {} {}", p[0], p[1], u8::from(b))?;
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

pub fn build_symmetric_mesh(m: usize) -> Result<TriMesh> {
    if m == 0 {
        return Err(Error::InvalidParameter("symmetric mesh needs M >= 1".into()));
    }
    let ticks: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
    TriMesh::from_grid(&ticks, &ticks, MeshFamily::Symmetric(m))
}

pub fn build_nonsymmetric_mesh(m: usize) -> Result<TriMesh> {
    if m == 0 || !m.is_multiple_of(4) {
        return Err(Error::InvalidParameter(format!(
            "nonsymmetric mesh needs M divisible by 4, got {m}"
        )));
    }
    let xs = nonsymmetric_breakpoints(m);
    let rows = 3 * m / 4;
    let ys: Vec<f64> = (0..=rows).map(|j| j as f64 / rows as f64).collect();
    TriMesh::from_grid(&xs, &ys, MeshFamily::Nonsymmetric(m))
}

/// Prefix sums of the alternating widths `4/(3M), 2/(3M), ...`, evaluated in
/// units of `1/(3M)` so every breakpoint is a correctly rounded rational.
pub fn nonsymmetric_breakpoints(m: usize) -> Vec<f64> {
    let denom = (3 * m) as f64;
    let mut xs = Vec::with_capacity(m + 1);
    let mut units = 0usize;
    xs.push(0.0);
    for i in 0..m {
        units += if i % 2 == 0 { 4 } else { 2 };
        xs.push(units as f64 / denom);
    }
    xs
}

pub fn signed_area(p: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

pub fn barycentric(p: &[[f64; 2]; 3], x: f64, y: f64) -> [f64; 3] {
    let det = (p[1][1] - p[2][1]) * (p[0][0] - p[2][0]) + (p[2][0] - p[1][0]) * (p[0][1] - p[2][1]);
    let l0 = ((p[1][1] - p[2][1]) * (x - p[2][0]) + (p[2][0] - p[1][0]) * (y - p[2][1])) / det;
    let l1 = ((p[2][1] - p[0][1]) * (x - p[2][0]) + (p[0][0] - p[2][0]) * (y - p[2][1])) / det;
    [l0, l1, 1.0 - l0 - l1]
}

/// Evaluate the P1 function with nodal values `field` (full nodal vector) at `(x, y)`.
pub fn evaluate_p1(mesh: &TriMesh, field: &[f64], x: f64, y: f64) -> Result<f64> {
    if field.len() != mesh.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: mesh.num_nodes(),
            found: field.len(),
        });
    }
    let (k, bary) = mesh.locate(x, y)?;
    let tri = mesh.triangles[k];
    Ok((0..3).map(|i| bary[i] * field[tri[i]]).sum())
}

/// Uniform bucket grid over the unit square; each bucket lists, in increasing
/// order, the triangles whose bounding box meets it.
#[derive(Debug, Clone)]
struct BucketGrid {
    n: usize,
    buckets: Vec<Vec<usize>>,
}

impl BucketGrid {
    fn new(nodes: &[[f64; 2]], triangles: &[[usize; 3]]) -> Self {
        let n = ((triangles.len() as f64 / 2.0).sqrt().ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); n * n];
        let pad = 1e-12;
        for (k, tri) in triangles.iter().enumerate() {
            let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for &i in tri {
                x0 = x0.min(nodes[i][0]);
                x1 = x1.max(nodes[i][0]);
                y0 = y0.min(nodes[i][1]);
                y1 = y1.max(nodes[i][1]);
            }
            let (i0, i1) = (Self::cell(x0 - pad, n), Self::cell(x1 + pad, n));
            let (j0, j1) = (Self::cell(y0 - pad, n), Self::cell(y1 + pad, n));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * n + i].push(k);
                }
            }
        }
        BucketGrid { n, buckets }
    }

    fn cell(v: f64, n: usize) -> usize {
        ((v * n as f64).floor().max(0.0) as usize).min(n - 1)
    }

    fn candidates(&self, x: f64, y: f64) -> &[usize] {
        &self.buckets[Self::cell(y, self.n) * self.n + Self::cell(x, self.n)]
    }
}
