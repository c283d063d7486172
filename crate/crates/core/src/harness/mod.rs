//! Convergence studies: spatial, temporal, small-time prefactor and
//! nonsymmetric-mesh refinement tables.
//!
//! Every study is a set of independent solves (cells) run in parallel,
//! followed by a sequential reduction into [`ExperimentReport`]s, one per
//! value of alpha.
pub mod cache;
pub mod config;
pub mod report;

use rayon::prelude::*;

pub use cache::SolutionCache;
pub use config::{Axis, FamilyKind, StudyConfig};
pub use report::{fit_rate, pairwise_rates, ExperimentReport, ReportRow, StudyKind};

use crate::cq::{solve, SchemeConfig, SchemeVariant};
use crate::error::{Error, Result};
use crate::fem::{l2_error_vs_reference, l2_norm_values, NodalField, SpatialOperators};
use crate::mesh::{MeshFamily, TriMesh};
use crate::problem::{InitialData, Nonlinearity, ProblemSpec};

/// Final-time nodal values (boundary included) on a mesh.
#[derive(Debug, Clone)]
pub struct Solution {
    pub mesh: TriMesh,
    pub values: Vec<f64>,
}

impl Solution {
    pub fn field(&self) -> NodalField<'_> {
        NodalField::new(&self.mesh, self.values.clone()).expect("length matches mesh")
    }
}

fn cache_key(problem: &ProblemSpec, scheme: &SchemeConfig, family: MeshFamily) -> Option<String> {
    if matches!(problem.initial, InitialData::Custom(_))
        || matches!(problem.source, Nonlinearity::Custom { .. })
    {
        return None;
    }
    Some(format!(
        "frs-solution v1 mesh={family} alpha={:?} gamma={:?} T={:?} f={} u0={} scheme={} N={} \
         source_lumping={} u0_in_history={} tol={:?} picard={:?}/{} initial={:?}",
        problem.alpha,
        problem.gamma,
        problem.t_final,
        problem.source.tag(),
        problem.initial.tag(),
        scheme.variant.name(),
        scheme.steps,
        scheme.source_lumping,
        scheme.initial_in_history,
        scheme.cg.tol,
        scheme.picard_tol,
        scheme.picard_max_iter,
        scheme.initial,
    ))
}

/// Solves to the final time on `family`, consulting `cache` first.
pub fn solve_on(
    problem: &ProblemSpec,
    scheme: &SchemeConfig,
    family: MeshFamily,
    cache: &SolutionCache,
) -> Result<Solution> {
    let wrap = |e: Error| Error::Study {
        context: format!(
            "solve failed for alpha={} T={} case={} on {family} with N={}",
            problem.alpha,
            problem.t_final,
            problem.initial.tag(),
            scheme.steps
        ),
        source: Box::new(e),
    };
    let mesh = family.build().map_err(wrap)?;
    let compute = || -> Result<Vec<f64>> {
        let ops = SpatialOperators::assemble(&mesh)?;
        let mut cfg = scheme.clone();
        // only the final state is needed here
        cfg.snapshots = crate::cq::SnapshotPolicy::Stride(cfg.steps.max(1));
        let traj = solve(&cfg, problem, &mesh, &ops)?;
        Ok(mesh.expand_interior(traj.final_state()))
    };
    let values = match cache_key(problem, scheme, family) {
        Some(key) => cache.get_or_compute(&key, compute),
        None => compute(),
    }
    .map_err(wrap)?;
    if values.len() != mesh.num_nodes() {
        return Err(wrap(Error::DimensionMismatch {
            expected: mesh.num_nodes(),
            found: values.len(),
        }));
    }
    Ok(Solution { mesh, values })
}

struct Cell {
    problem: ProblemSpec,
    scheme: SchemeConfig,
    family: MeshFamily,
}

fn run_cells(cells: &[Cell], cache: &SolutionCache) -> Result<Vec<Solution>> {
    cells
        .par_iter()
        .map(|c| solve_on(&c.problem, &c.scheme, c.family, cache))
        .collect()
}

fn cache_for(cfg: &StudyConfig) -> SolutionCache {
    match &cfg.cache_dir {
        Some(d) => SolutionCache::at(d),
        None => SolutionCache::disabled(),
    }
}

fn max_of(list: &[usize]) -> usize {
    list.iter().copied().max().unwrap_or(0)
}

fn m_ref(cfg: &StudyConfig) -> usize {
    cfg.m_ref.unwrap_or(2 * max_of(&cfg.m_list))
}

fn n_ref(cfg: &StudyConfig) -> usize {
    cfg.n_ref.unwrap_or(8 * max_of(&cfg.n_list))
}

fn regularity(cfg: &StudyConfig) -> Option<f64> {
    cfg.case.regularity()
}

/// Error on each tested mesh against a symmetric reference mesh at the same N.
/// Uses the largest entry of the N list.
pub fn run_spatial_study(cfg: &StudyConfig) -> Result<Vec<ExperimentReport>> {
    mesh_refinement(cfg, cfg.family, StudyKind::Spatial, Some(2.0))
}

/// Same as [`run_spatial_study`] on nonsymmetric meshes with the lumped scheme.
pub fn run_nonsymmetric_study(cfg: &StudyConfig) -> Result<Vec<ExperimentReport>> {
    let mut cfg = cfg.clone();
    cfg.scheme = SchemeVariant::LumpedLinearized;
    let theory = regularity(&cfg).map(|nu| (1.0 + nu).min(2.0));
    mesh_refinement(&cfg, FamilyKind::Nonsymmetric, StudyKind::Nonsymmetric, theory)
}

fn mesh_refinement(
    cfg: &StudyConfig,
    family: FamilyKind,
    kind: StudyKind,
    theory: Option<f64>,
) -> Result<Vec<ExperimentReport>> {
    cfg.validate()?;
    let m_ref = m_ref(cfg);
    if cfg.m_list.iter().any(|&m| m >= m_ref) {
        return Err(Error::Config(format!("reference M = {m_ref} must exceed every tested M")));
    }
    let n = max_of(&cfg.n_list);
    let scheme = cfg.scheme_config(n);
    let mut cells = Vec::new();
    for &alpha in &cfg.alphas {
        let problem = cfg.problem(alpha)?;
        cells.push(Cell {
            problem: problem.clone(),
            scheme: scheme.clone(),
            family: MeshFamily::Symmetric(m_ref),
        });
        for &m in &cfg.m_list {
            cells.push(Cell {
                problem: problem.clone(),
                scheme: scheme.clone(),
                family: family.with(m),
            });
        }
    }
    let sols = run_cells(&cells, &cache_for(cfg))?;
    let per_alpha = cfg.m_list.len() + 1;
    let mut reports = Vec::new();
    for (i, &alpha) in cfg.alphas.iter().enumerate() {
        let block = &sols[i * per_alpha..(i + 1) * per_alpha];
        let reference = block[0].field();
        let mut points = Vec::new();
        for (sol, &m) in block[1..].iter().zip(&cfg.m_list) {
            points.push((1.0 / m as f64, l2_error_vs_reference(&sol.field(), &reference)?));
        }
        reports.push(ExperimentReport::new(kind, cfg.case.tag(), alpha, points, theory));
    }
    Ok(reports)
}

/// Error for each N against `N_ref` steps on the same mesh. Uses the largest
/// entry of the M list.
pub fn run_temporal_study(cfg: &StudyConfig) -> Result<Vec<ExperimentReport>> {
    cfg.validate()?;
    let n_ref = n_ref(cfg);
    if cfg.n_list.iter().any(|&n| n >= n_ref) {
        return Err(Error::Config(format!("reference N = {n_ref} must exceed every tested N")));
    }
    let family = cfg.family.with(max_of(&cfg.m_list));
    let mut cells = Vec::new();
    for &alpha in &cfg.alphas {
        let problem = cfg.problem(alpha)?;
        for n in std::iter::once(n_ref).chain(cfg.n_list.iter().copied()) {
            cells.push(Cell {
                problem: problem.clone(),
                scheme: cfg.scheme_config(n),
                family,
            });
        }
    }
    let sols = run_cells(&cells, &cache_for(cfg))?;
    let per_alpha = cfg.n_list.len() + 1;
    let mut reports = Vec::new();
    for (i, &alpha) in cfg.alphas.iter().enumerate() {
        let block = &sols[i * per_alpha..(i + 1) * per_alpha];
        let points = block[1..]
            .iter()
            .zip(&cfg.n_list)
            .map(|(sol, &n)| (cfg.t_final / n as f64, same_mesh_error(sol, &block[0])))
            .collect();
        reports.push(ExperimentReport::new(StudyKind::Temporal, cfg.case.tag(), alpha, points, Some(1.0)));
    }
    Ok(reports)
}

fn same_mesh_error(a: &Solution, b: &Solution) -> f64 {
    let diff: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
    l2_norm_values(&a.mesh, &diff)
}

/// Error at small final times `t_N` with fixed mesh and step count, each
/// `t_N` being an independent run to `T = t_N`. The spatial axis references
/// symmetric(`M_ref`) at the same N; the temporal axis references `N_ref`
/// steps on the same mesh. Uses the largest entries of the M and N lists.
pub fn run_prefactor_study(cfg: &StudyConfig, axis: Axis) -> Result<Vec<ExperimentReport>> {
    cfg.validate()?;
    if cfg.times.is_empty() {
        return Err(Error::Config("prefactor study needs at least one time".into()));
    }
    let m = max_of(&cfg.m_list);
    let n = max_of(&cfg.n_list);
    let family = cfg.family.with(m);
    let (reference_family, reference_steps) = match axis {
        Axis::Spatial => {
            let r = m_ref(cfg);
            if r <= m {
                return Err(Error::Config(format!("reference M = {r} must exceed M = {m}")));
            }
            (MeshFamily::Symmetric(r), n)
        }
        Axis::Temporal => {
            let r = n_ref(cfg);
            if r <= n {
                return Err(Error::Config(format!("reference N = {r} must exceed N = {n}")));
            }
            (family, r)
        }
    };
    let mut cells = Vec::new();
    for &alpha in &cfg.alphas {
        let base = cfg.problem(alpha)?;
        for &t in &cfg.times {
            let problem = base.with_final_time(t);
            cells.push(Cell {
                problem: problem.clone(),
                scheme: cfg.scheme_config(reference_steps),
                family: reference_family,
            });
            cells.push(Cell {
                problem,
                scheme: cfg.scheme_config(n),
                family,
            });
        }
    }
    let sols = run_cells(&cells, &cache_for(cfg))?;
    let per_alpha = 2 * cfg.times.len();
    let mut reports = Vec::new();
    for (i, &alpha) in cfg.alphas.iter().enumerate() {
        let block = &sols[i * per_alpha..(i + 1) * per_alpha];
        let mut points = Vec::new();
        for (pair, &t) in block.chunks(2).zip(&cfg.times) {
            let err = match axis {
                Axis::Spatial => l2_error_vs_reference(&pair[1].field(), &pair[0].field())?,
                Axis::Temporal => same_mesh_error(&pair[1], &pair[0]),
            };
            points.push((t, err));
        }
        let (kind, theory) = match axis {
            Axis::Spatial => (
                StudyKind::PrefactorSpatial,
                regularity(cfg).map(|nu| -(1.0 - alpha) * (2.0 - nu) / 2.0),
            ),
            Axis::Temporal => (
                StudyKind::PrefactorTemporal,
                regularity(cfg).map(|nu| (1.0 - alpha) * nu / 2.0),
            ),
        };
        reports.push(ExperimentReport::new(kind, cfg.case.tag(), alpha, points, theory));
    }
    Ok(reports)
}
