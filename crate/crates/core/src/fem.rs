//! P1 finite element assembly on interior degrees of freedom.
//!
//! Homogeneous Dirichlet data is imposed by dropping boundary rows and
//! columns. Full-node variants (boundary included) are exposed for the
//! consistency checks and for the nonlinear source, whose nodal interpolant
//! is nonzero on the boundary.
use crate::error::{Error, Result};
use crate::mesh::{evaluate_p1, TriMesh};
use crate::quadrature::TriangleRule;
use crate::sparse::{cg_solve_in_place, CgOptions, DiagMatrix, SparseSymMatrix};

/// Full nodal coefficient vector of a P1 function on `mesh`.
#[derive(Debug, Clone)]
pub struct NodalField<'m> {
    pub mesh: &'m TriMesh,
    pub values: Vec<f64>,
}

impl<'m> NodalField<'m> {
    pub fn new(mesh: &'m TriMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_nodes() {
            return Err(Error::DimensionMismatch {
                expected: mesh.num_nodes(),
                found: values.len(),
            });
        }
        Ok(NodalField { mesh, values })
    }

    pub fn zeros(mesh: &'m TriMesh) -> Self {
        NodalField {
            mesh,
            values: vec![0.0; mesh.num_nodes()],
        }
    }

    pub fn from_interior(mesh: &'m TriMesh, interior: &[f64]) -> Result<Self> {
        if interior.len() != mesh.num_interior() {
            return Err(Error::DimensionMismatch {
                expected: mesh.num_interior(),
                found: interior.len(),
            });
        }
        Ok(NodalField {
            mesh,
            values: mesh.expand_interior(interior),
        })
    }

    pub fn interpolant<F: Fn(f64, f64) -> f64>(mesh: &'m TriMesh, g: F) -> Self {
        NodalField {
            mesh,
            values: mesh.interpolate(g),
        }
    }

    pub fn interior(&self) -> Vec<f64> {
        self.mesh.restrict_interior(&self.values)
    }

    /// True when every boundary value is exactly zero (the field lies in V_h).
    pub fn in_vh(&self) -> bool {
        self.mesh
            .boundary_mask()
            .iter()
            .zip(&self.values)
            .all(|(&b, &v)| !b || v == 0.0)
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        evaluate_p1(self.mesh, &self.values, x, y)
    }
}

fn element_area(mesh: &TriMesh, k: usize) -> Result<f64> {
    let area = mesh.triangle_area(k);
    if !(area > 0.0) {
        return Err(Error::DegenerateTriangle { index: k, area });
    }
    Ok(area)
}

fn element_stiffness(p: &[[f64; 3]; 2], area: f64) -> [[f64; 3]; 3] {
    // p[0] = x coordinates, p[1] = y coordinates
    let mut grad = [[0.0; 2]; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        grad[i] = [
            (p[1][j] - p[1][k]) / (2.0 * area),
            (p[0][k] - p[0][j]) / (2.0 * area),
        ];
    }
    let mut ke = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            ke[i][j] = area * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]);
        }
    }
    ke
}

fn element_mass(area: f64) -> [[f64; 3]; 3] {
    let d = area / 6.0;
    let o = area / 12.0;
    [[d, o, o], [o, d, o], [o, o, d]]
}

fn assemble<F>(mesh: &TriMesh, interior_only: bool, local: F) -> Result<SparseSymMatrix>
where
    F: Fn(usize, f64) -> [[f64; 3]; 3],
{
    let n = if interior_only { mesh.num_interior() } else { mesh.num_nodes() };
    let dof = |node: usize| {
        if interior_only {
            mesh.interior_index(node)
        } else {
            Some(node)
        }
    };
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let area = element_area(mesh, k)?;
        let ke = local(k, area);
        for a in 0..3 {
            let Some(i) = dof(tri[a]) else { continue };
            for b in 0..3 {
                if let Some(j) = dof(tri[b]) {
                    triplets.push((i, j, ke[a][b]));
                }
            }
        }
    }
    SparseSymMatrix::from_triplets(n, &triplets)
}

fn coords(mesh: &TriMesh, k: usize) -> [[f64; 3]; 2] {
    let v = mesh.triangle_vertices(k);
    [[v[0][0], v[1][0], v[2][0]], [v[0][1], v[1][1], v[2][1]]]
}

/// Interior-DOF stiffness matrix `(grad phi_j, grad phi_i)`.
pub fn assemble_stiffness(mesh: &TriMesh) -> Result<SparseSymMatrix> {
    assemble(mesh, true, |k, area| element_stiffness(&coords(mesh, k), area))
}

pub fn assemble_stiffness_full(mesh: &TriMesh) -> Result<SparseSymMatrix> {
    assemble(mesh, false, |k, area| element_stiffness(&coords(mesh, k), area))
}

/// Interior-DOF consistent mass matrix.
pub fn assemble_mass(mesh: &TriMesh) -> Result<SparseSymMatrix> {
    assemble(mesh, true, |_, area| element_mass(area))
}

pub fn assemble_mass_full(mesh: &TriMesh) -> Result<SparseSymMatrix> {
    assemble(mesh, false, |_, area| element_mass(area))
}

/// Vertex-quadrature mass over all nodes: `sum_{K containing P_i} |K|/3`.
pub fn lumped_mass_full(mesh: &TriMesh) -> Result<Vec<f64>> {
    let mut d = vec![0.0; mesh.num_nodes()];
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let area = element_area(mesh, k)?;
        for &i in tri {
            d[i] += area / 3.0;
        }
    }
    Ok(d)
}

/// Interior-DOF lumped mass matrix.
pub fn assemble_lumped_mass(mesh: &TriMesh) -> Result<DiagMatrix> {
    let full = lumped_mass_full(mesh)?;
    DiagMatrix::new(mesh.restrict_interior(&full))
}

/// `b_i = (g, phi_i)` over every node, integrated with `rule` on each triangle.
pub fn load_vector_full<G: Fn(f64, f64) -> f64>(mesh: &TriMesh, g: G, rule: TriangleRule) -> Vec<f64> {
    let mut b = vec![0.0; mesh.num_nodes()];
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let v = mesh.triangle_vertices(k);
        let area = mesh.triangle_area(k);
        for (lam, w) in rule.points() {
            let x = lam[0] * v[0][0] + lam[1] * v[1][0] + lam[2] * v[2][0];
            let y = lam[0] * v[0][1] + lam[1] * v[1][1] + lam[2] * v[2][1];
            let gv = w * area * g(x, y);
            for a in 0..3 {
                b[tri[a]] += gv * lam[a];
            }
        }
    }
    b
}

/// Interior entries of [`load_vector_full`].
pub fn load_vector<G: Fn(f64, f64) -> f64>(mesh: &TriMesh, g: G, rule: TriangleRule) -> Vec<f64> {
    mesh.restrict_interior(&load_vector_full(mesh, g, rule))
}

/// Orthogonal L2 projection onto V_h (zero boundary values).
pub fn l2_project<'m, G: Fn(f64, f64) -> f64>(
    mesh: &'m TriMesh,
    g: G,
    opts: CgOptions,
) -> Result<NodalField<'m>> {
    let mass = assemble_mass(mesh)?;
    l2_project_with(mesh, &mass, g, opts)
}

/// [`l2_project`] with a pre-assembled interior mass matrix.
pub fn l2_project_with<'m, G: Fn(f64, f64) -> f64>(
    mesh: &'m TriMesh,
    mass: &SparseSymMatrix,
    g: G,
    opts: CgOptions,
) -> Result<NodalField<'m>> {
    let b = load_vector(mesh, g, TriangleRule::Order4);
    let mut c = vec![0.0; b.len()];
    if !c.is_empty() {
        cg_solve_in_place(mass, &b, &mut c, opts)?;
    }
    NodalField::from_interior(mesh, &c)
}

/// `sqrt(c^T M c)` with the full-node consistent mass, accumulated element by element.
pub fn l2_norm(field: &NodalField<'_>) -> f64 {
    l2_norm_values(field.mesh, &field.values)
}

pub fn l2_norm_values(mesh: &TriMesh, values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let c = tri.map(|i| values[i]);
        let sum = c[0] + c[1] + c[2];
        let sq = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
        acc += mesh.triangle_area(k) / 12.0 * (sq + sum * sum);
    }
    acc.max(0.0).sqrt()
}

/// L2 distance between a coarse P1 function and a reference on a finer mesh:
/// the coarse function is sampled at every fine node and the nodal difference
/// is measured on the fine mesh.
pub fn l2_error_vs_reference(coarse: &NodalField<'_>, fine: &NodalField<'_>) -> Result<f64> {
    let mut diff = Vec::with_capacity(fine.values.len());
    for (&[x, y], &fv) in fine.mesh.nodes().iter().zip(&fine.values) {
        diff.push(coarse.eval(x, y)? - fv);
    }
    Ok(l2_norm_values(fine.mesh, &diff))
}

/// Operators needed by the time steppers, assembled once per mesh.
#[derive(Debug, Clone)]
pub struct SpatialOperators {
    pub stiffness: SparseSymMatrix,
    pub mass: SparseSymMatrix,
    /// Full-node consistent mass. Its interior rows load sources whose nodal
    /// interpolant does not vanish on the boundary.
    pub mass_full: SparseSymMatrix,
    pub lumped: DiagMatrix,
}

impl SpatialOperators {
    pub fn assemble(mesh: &TriMesh) -> Result<Self> {
        Ok(SpatialOperators {
            stiffness: assemble_stiffness(mesh)?,
            mass: assemble_mass(mesh)?,
            mass_full: assemble_mass_full(mesh)?,
            lumped: assemble_lumped_mass(mesh)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_nonsymmetric_mesh, build_symmetric_mesh};
    use crate::sparse::{cg_solve, dot};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn meshes() -> Vec<TriMesh> {
        vec![
            build_symmetric_mesh(2).unwrap(),
            build_symmetric_mesh(5).unwrap(),
            build_symmetric_mesh(16).unwrap(),
            build_nonsymmetric_mesh(8).unwrap(),
            build_nonsymmetric_mesh(16).unwrap(),
        ]
    }

    #[test]
    fn five_point_stencil_on_symmetric_mesh() {
        let m = 6;
        let mesh = build_symmetric_mesh(m).unwrap();
        let a = assemble_stiffness(&mesh).unwrap();
        // interior node (3,3) -> interior ordinal (3-1)*(m-1) + (3-1)
        let i = mesh.interior_index(3 * (m + 1) + 3).unwrap();
        let row: Vec<(usize, f64)> = a.row(i).filter(|(_, v)| v.abs() > 1e-14).collect();
        assert_eq!(row.len(), 5);
        for (j, v) in row {
            if j == i {
                assert!((v - 4.0).abs() < 1e-13);
            } else {
                assert!((v + 1.0).abs() < 1e-13);
            }
        }

        let single = assemble_stiffness(&build_symmetric_mesh(2).unwrap()).unwrap();
        assert_eq!(single.dim(), 1);
        assert!((single.get(0, 0) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn full_stiffness_rows_sum_to_zero() {
        for mesh in meshes() {
            let a = assemble_stiffness_full(&mesh).unwrap();
            assert!(a.row_sums().iter().all(|s| s.abs() < 1e-12));
        }
    }

    #[test]
    fn mass_entries() {
        for mesh in meshes() {
            let full = assemble_mass_full(&mesh).unwrap();
            let total: f64 = full.row_sums().iter().sum();
            assert!((total - 1.0).abs() < 1e-13);
        }
        let m = 8;
        let mesh = build_symmetric_mesh(m).unwrap();
        let mass = assemble_mass(&mesh).unwrap();
        let h = 1.0 / m as f64;
        assert!(mass.diagonal().iter().all(|d| (d - h * h / 2.0).abs() < 1e-15));
        for i in 0..mass.dim() {
            for (j, v) in mass.row(i) {
                assert_eq!(v, mass.get(j, i));
            }
        }
    }

    #[test]
    fn lumped_mass_is_mass_row_sum() {
        for mesh in meshes() {
            let full = assemble_mass_full(&mesh).unwrap();
            let d = lumped_mass_full(&mesh).unwrap();
            for (r, di) in full.row_sums().iter().zip(&d) {
                assert!((r - di).abs() < 1e-13);
            }
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        }
        let mesh = build_symmetric_mesh(10).unwrap();
        let d = assemble_lumped_mass(&mesh).unwrap();
        assert!(d.values().iter().all(|v| (v - 0.01).abs() < 1e-15));
    }

    #[test]
    fn matrices_are_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for mesh in meshes() {
            let a = assemble_stiffness(&mesh).unwrap();
            let m = assemble_mass(&mesh).unwrap();
            for _ in 0..5 {
                let x: Vec<f64> = (0..a.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                assert!(dot(&x, &a.spmv(&x).unwrap()) > 0.0);
                assert!(dot(&x, &m.spmv(&x).unwrap()) > 0.0);
            }
        }
    }

    #[test]
    fn load_of_one_is_lumped_diagonal() {
        for mesh in meshes() {
            let d = lumped_mass_full(&mesh).unwrap();
            for rule in [TriangleRule::Vertex, TriangleRule::Midpoint, TriangleRule::Order4] {
                let b = load_vector_full(&mesh, |_, _| 1.0, rule);
                for (bi, di) in b.iter().zip(&d) {
                    assert!((bi - di).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn load_of_case_b_on_coarsest_mesh() {
        // Three of the six patch triangles of (1/2, 1/2) lie left of x = 1/2,
        // each contributing |K|/3 = 1/24. The midpoint rule samples the
        // discontinuity on x = 1/2 and is excluded.
        let mesh = build_symmetric_mesh(2).unwrap();
        let u0 = crate::InitialData::CaseB;
        let b = load_vector(&mesh, |x, y| u0.eval(x, y), TriangleRule::Order4);
        assert!((b[0] - 0.125).abs() < 1e-15, "{}", b[0]);
    }

    #[test]
    fn load_of_linear_function() {
        // g * phi_i is quadratic, so only rules of degree >= 2 agree exactly.
        for mesh in meshes() {
            let mid = load_vector_full(&mesh, |x, _| x, TriangleRule::Midpoint);
            let o4 = load_vector_full(&mesh, |x, _| x, TriangleRule::Order4);
            for (a, b) in mid.iter().zip(&o4) {
                assert!((a - b).abs() < 1e-14);
            }
            let vert = load_vector_full(&mesh, |_, _| 2.5, TriangleRule::Vertex);
            let o4c = load_vector_full(&mesh, |_, _| 2.5, TriangleRule::Order4);
            for (a, b) in vert.iter().zip(&o4c) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn projection_fixes_vh_and_zero() {
        let mesh = build_symmetric_mesh(6).unwrap();
        let u0 = crate::InitialData::CaseA;
        let interp = NodalField::interpolant(&mesh, |x, y| u0.eval(x, y));
        let opts = CgOptions::default();
        let proj = l2_project(&mesh, |x, y| interp.eval(x, y).unwrap(), opts).unwrap();
        for (a, b) in proj.values.iter().zip(&interp.values) {
            assert!((a - b).abs() < 1e-11);
        }
        let zero = l2_project(&mesh, |_, _| 0.0, opts).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
        assert!(zero.in_vh() && proj.in_vh());
    }

    #[test]
    fn projection_matches_dense_solve() {
        let mesh = build_symmetric_mesh(4).unwrap();
        let u0 = crate::InitialData::CaseA;
        let proj = l2_project(&mesh, |x, y| u0.eval(x, y), CgOptions::default()).unwrap();
        let mass = assemble_mass(&mesh).unwrap().to_dense();
        let b = load_vector(&mesh, |x, y| u0.eval(x, y), TriangleRule::Order4);
        let oracle = dense_solve(mass, b);
        for (a, e) in proj.interior().iter().zip(&oracle) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_is_orthogonal() {
        let mesh = build_nonsymmetric_mesh(8).unwrap();
        let g = |x: f64, y: f64| (x * 4.0).exp() * y.cos() + x * y * y;
        let proj = l2_project(&mesh, g, CgOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let chi: Vec<f64> = (0..mesh.num_interior()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let chi = NodalField::from_interior(&mesh, &chi).unwrap();
            // (g - P g, chi) integrated with the degree-4 rule
            let g_chi: f64 = load_vector_full(&mesh, g, TriangleRule::Order4)
                .iter()
                .zip(&chi.values)
                .map(|(b, c)| b * c)
                .sum();
            let full = assemble_mass_full(&mesh).unwrap();
            let pg_chi = dot(&chi.values, &full.spmv(&proj.values).unwrap());
            assert!((g_chi - pg_chi).abs() < 1e-9);
        }
    }

    #[test]
    fn l2_norms() {
        let mesh = build_nonsymmetric_mesh(8).unwrap();
        let ones = NodalField::new(&mesh, vec![1.0; mesh.num_nodes()]).unwrap();
        assert!((l2_norm(&ones) - 1.0).abs() < 1e-14);
        assert_eq!(l2_norm(&NodalField::zeros(&mesh)), 0.0);

        let sym = build_symmetric_mesh(12).unwrap();
        let mode = NodalField::interpolant(&sym, |x, y| {
            (std::f64::consts::PI * x).sin() * (2.0 * std::f64::consts::PI * y).sin()
        });
        // squared P1 function integrated with the degree-4 rule
        let mut quad = 0.0;
        for k in 0..sym.num_triangles() {
            let tri = sym.triangles()[k];
            for (lam, w) in TriangleRule::Order4.points() {
                let u: f64 = (0..3).map(|a| lam[a] * mode.values[tri[a]]).sum();
                quad += w * sym.triangle_area(k) * u * u;
            }
        }
        assert!((l2_norm(&mode) - quad.sqrt()).abs() < 1e-14);
        let full = assemble_mass_full(&sym).unwrap();
        let via_matrix = dot(&mode.values, &full.spmv(&mode.values).unwrap()).sqrt();
        assert!((l2_norm(&mode) - via_matrix).abs() < 1e-14);
    }

    #[test]
    fn error_against_reference() {
        let coarse_mesh = build_symmetric_mesh(2).unwrap();
        let fine_mesh = build_symmetric_mesh(4).unwrap();
        let f = NodalField::interpolant(&fine_mesh, |x, y| x * y + 0.3);
        assert_eq!(l2_error_vs_reference(&f, &f).unwrap(), 0.0);

        let one = NodalField::new(&coarse_mesh, vec![1.0; 9]).unwrap();
        let zero = NodalField::zeros(&fine_mesh);
        assert!((l2_error_vs_reference(&one, &zero).unwrap() - 1.0).abs() < 1e-14);

        let cx = NodalField::interpolant(&coarse_mesh, |x, _| x);
        let fx = NodalField::interpolant(&fine_mesh, |x, _| x);
        assert!(l2_error_vs_reference(&cx, &fx).unwrap() < 1e-14);

        let nonsym = build_nonsymmetric_mesh(8).unwrap();
        let nx = NodalField::interpolant(&nonsym, |x, y| 2.0 * x - y);
        let sx = NodalField::interpolant(&fine_mesh, |x, y| 2.0 * x - y);
        assert!(l2_error_vs_reference(&nx, &sx).unwrap() < 1e-14);
    }

    #[test]
    fn cg_on_poisson_matches_dense() {
        let mesh = build_symmetric_mesh(4).unwrap();
        let a = assemble_stiffness(&mesh).unwrap();
        let b = load_vector(&mesh, |x, y| x + y * y, TriangleRule::Order4);
        let x = cg_solve(&a, &b, CgOptions::default()).unwrap();
        let oracle = dense_solve(a.to_dense(), b);
        for (u, v) in x.iter().zip(&oracle) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
            x[row] = (b[row] - s) / a[row][row];
        }
        x
    }
}
