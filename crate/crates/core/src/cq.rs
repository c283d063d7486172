//! Backward Euler convolution quadrature and the fully discrete schemes.
//!
//! With `W` the consistent (Galerkin) or lumped mass, `A` the stiffness and
//! `q_j = q_j^{(1-alpha)}`, the linearized scheme advances
//!
//! ```text
//! (W + (tau + gamma tau^{1-alpha}) A) U^n
//!     = W U^0 - A (tau sum_{0<j<n} U^j + gamma tau^{1-alpha} sum_{0<j<n} q_{n-j} U^j)
//!       + tau sum_{j=1}^{n} b(U^{j-1})
//! ```
//!
//! The history sums run over the sequence `U^1, U^2, ...` as in standard
//! backward Euler convolution quadrature. Setting
//! [`SchemeConfig::initial_in_history`] also feeds `U^0` into both sums.
//!
//! where `b(V)` is the load of the nodal interpolant of `f(V)`. The implicit
//! variant replaces `b(U^{j-1})` by `b(U^j)` and resolves the last term by
//! fixed-point iteration.
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{l2_project_with, SpatialOperators};
use crate::mesh::TriMesh;
use crate::problem::ProblemSpec;
use crate::sparse::{cg_solve_in_place, CgOptions, Composite, LinearOperator};

/// Taylor coefficients of `(1 - zeta)^{-order}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CqWeights {
    order: f64,
    coeffs: Vec<f64>,
}

impl CqWeights {
    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }
}

impl std::ops::Index<usize> for CqWeights {
    type Output = f64;
    fn index(&self, j: usize) -> &f64 {
        &self.coeffs[j]
    }
}

/// `q_0 .. q_n` by the forward recursion `q_j = q_{j-1} (j - 1 + beta) / j`.
pub fn cq_weights(beta: f64, n: usize) -> CqWeights {
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(1.0);
    for j in 1..=n {
        let prev = coeffs[j - 1];
        coeffs.push(prev * (j as f64 - 1.0 + beta) / j as f64);
    }
    CqWeights { order: beta, coeffs }
}

/// Backward Euler CQ approximation of the order-`beta` fractional integral at
/// `t_n`, given samples at `t_0 .. t_n`: `tau^beta sum_{j=0}^{n} q_{n-j} phi_j`.
pub fn cq_fractional_integral(samples: &[f64], beta: f64, tau: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let n = samples.len() - 1;
    let q = cq_weights(beta, n);
    let sum: f64 = samples.iter().enumerate().map(|(j, phi)| q[n - j] * phi).sum();
    tau.powf(beta) * sum
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeVariant {
    GalerkinLinearized,
    LumpedLinearized,
    GalerkinImplicit,
}

impl SchemeVariant {
    pub fn lumped_mass(&self) -> bool {
        matches!(self, SchemeVariant::LumpedLinearized)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchemeVariant::GalerkinLinearized => "galerkin-linearized",
            SchemeVariant::LumpedLinearized => "lumped-linearized",
            SchemeVariant::GalerkinImplicit => "galerkin-implicit",
        }
    }
}

/// How `U^0` is obtained from the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialApproximation {
    /// Orthogonal L2 projection onto V_h.
    L2Projection,
    /// Nodal interpolation at interior nodes.
    Interpolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotPolicy {
    /// Every `ceil(N/100)`-th step plus the final step.
    Default,
    Stride(usize),
    All,
}

#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub variant: SchemeVariant,
    pub steps: usize,
    /// Load the source with the lumped mass instead of the consistent mass.
    pub source_lumping: bool,
    /// Include `U^0` (index `j = 0`) in the history sums.
    pub initial_in_history: bool,
    pub cg: CgOptions,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub initial: InitialApproximation,
    pub snapshots: SnapshotPolicy,
}

impl SchemeConfig {
    pub fn new(variant: SchemeVariant, steps: usize) -> Self {
        SchemeConfig {
            variant,
            steps,
            source_lumping: false,
            initial_in_history: false,
            cg: CgOptions::default(),
            picard_tol: 1e-12,
            picard_max_iter: 100,
            initial: InitialApproximation::L2Projection,
            snapshots: SnapshotPolicy::Default,
        }
    }

    pub fn tau(&self, t_final: f64) -> f64 {
        t_final / self.steps as f64
    }

    fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidParameter("number of time steps must be >= 1".into()));
        }
        if !(self.cg.tol > 0.0 && self.cg.tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "linear solver tolerance must lie in (0,1), got {}",
                self.cg.tol
            )));
        }
        Ok(())
    }

    fn stride(&self) -> usize {
        match self.snapshots {
            SnapshotPolicy::Default => self.steps.div_ceil(100).max(1),
            SnapshotPolicy::Stride(s) => s.max(1),
            SnapshotPolicy::All => 1,
        }
    }
}

/// Snapshots of interior-DOF coefficient vectors, ordered by time.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub steps: Vec<usize>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn record(&mut self, step: usize, time: f64, state: &[f64]) {
        self.steps.push(step);
        self.times.push(time);
        self.states.push(state.to_vec());
    }
}

/// `U^0` on the interior DOFs according to `config.initial`.
pub fn initial_state(
    config: &SchemeConfig,
    problem: &ProblemSpec,
    mesh: &TriMesh,
    ops: &SpatialOperators,
) -> Result<Vec<f64>> {
    let u0 = &problem.initial;
    match config.initial {
        InitialApproximation::L2Projection => {
            Ok(l2_project_with(mesh, &ops.mass, |x, y| u0.eval(x, y), config.cg)?.interior())
        }
        InitialApproximation::Interpolation => Ok(mesh
            .interior_nodes()
            .iter()
            .map(|&n| {
                let [x, y] = mesh.nodes()[n];
                u0.eval(x, y)
            })
            .collect()),
    }
}

/// Run the scheme selected by `config.variant` from the configured initial state.
pub fn solve(
    config: &SchemeConfig,
    problem: &ProblemSpec,
    mesh: &TriMesh,
    ops: &SpatialOperators,
) -> Result<Trajectory> {
    match config.variant {
        SchemeVariant::GalerkinImplicit => step_implicit(config, problem, mesh, ops),
        _ => step_linearized(config, problem, mesh, ops),
    }
}

/// Linearized scheme with the source lagged by one step.
pub fn step_linearized(
    config: &SchemeConfig,
    problem: &ProblemSpec,
    mesh: &TriMesh,
    ops: &SpatialOperators,
) -> Result<Trajectory> {
    config.validate()?;
    problem.validate()?;
    let u0 = initial_state(config, problem, mesh, ops)?;
    Stepper::new(config, problem, mesh, ops, config.variant.lumped_mass())?.run(u0, false)
}

/// Same as [`step_linearized`] but starting from a given interior vector.
pub fn step_linearized_from(
    config: &SchemeConfig,
    problem: &ProblemSpec,
    mesh: &TriMesh,
    ops: &SpatialOperators,
    u0: Vec<f64>,
) -> Result<Trajectory> {
    config.validate()?;
    problem.validate()?;
    Stepper::new(config, problem, mesh, ops, config.variant.lumped_mass())?.run(u0, false)
}

/// Fully implicit scheme; each step is resolved by fixed-point iteration on
/// the source term.
pub fn step_implicit(
    config: &SchemeConfig,
    problem: &ProblemSpec,
    mesh: &TriMesh,
    ops: &SpatialOperators,
) -> Result<Trajectory> {
    config.validate()?;
    problem.validate()?;
    let tau = config.tau(problem.t_final);
    let lip = problem.source.lipschitz();
    if tau * lip >= 1.0 {
        log::warn!(
            "fixed-point contraction not guaranteed: tau * L = {:.3} >= 1",
            tau * lip
        );
    }
    let u0 = initial_state(config, problem, mesh, ops)?;
    let lumped = config.variant.lumped_mass();
    Stepper::new(config, problem, mesh, ops, lumped)?.run(u0, true)
}

struct Stepper<'a> {
    config: &'a SchemeConfig,
    problem: &'a ProblemSpec,
    mesh: &'a TriMesh,
    ops: &'a SpatialOperators,
    lumped_mass: bool,
    tau: f64,
    /// `gamma tau^{1-alpha}`
    memory_scale: f64,
    weights: CqWeights,
}

impl<'a> Stepper<'a> {
    fn new(
        config: &'a SchemeConfig,
        problem: &'a ProblemSpec,
        mesh: &'a TriMesh,
        ops: &'a SpatialOperators,
        lumped_mass: bool,
    ) -> Result<Self> {
        if ops.stiffness.dim() != mesh.num_interior() {
            return Err(Error::DimensionMismatch {
                expected: mesh.num_interior(),
                found: ops.stiffness.dim(),
            });
        }
        let tau = config.tau(problem.t_final);
        Ok(Stepper {
            config,
            problem,
            mesh,
            ops,
            lumped_mass,
            tau,
            memory_scale: problem.gamma * tau.powf(1.0 - problem.alpha),
            weights: cq_weights(1.0 - problem.alpha, config.steps),
        })
    }

    fn mass(&self) -> &'a dyn LinearOperator {
        if self.lumped_mass {
            &self.ops.lumped
        } else {
            &self.ops.mass
        }
    }

    /// Load of the nodal interpolant of `f(V)` tested against interior basis functions.
    fn source_load(&self, v: &[f64]) -> Vec<f64> {
        let f = &self.problem.source;
        if self.config.source_lumping {
            return v
                .iter()
                .zip(self.ops.lumped.values())
                .map(|(&vi, d)| d * f.eval(vi))
                .collect();
        }
        let full = self.mesh.expand_interior(v);
        let fvals: Vec<f64> = full.iter().map(|&u| f.eval(u)).collect();
        self.mesh
            .interior_nodes()
            .iter()
            .map(|&node| self.ops.mass_full.row(node).map(|(j, m)| m * fvals[j]).sum())
            .collect()
    }

    fn run(&self, u0: Vec<f64>, implicit: bool) -> Result<Trajectory> {
        let n_dof = self.mesh.num_interior();
        if u0.len() != n_dof {
            return Err(Error::DimensionMismatch {
                expected: n_dof,
                found: u0.len(),
            });
        }
        let steps = self.config.steps;
        let stride = self.config.stride();
        let mut traj = Trajectory {
            times: Vec::new(),
            states: Vec::new(),
            steps: Vec::new(),
        };
        traj.record(0, 0.0, &u0);
        if n_dof == 0 {
            for n in 1..=steps {
                if n % stride == 0 || n == steps {
                    traj.record(n, n as f64 * self.tau, &[]);
                }
            }
            return Ok(traj);
        }

        let mass = self.mass();
        let a = &self.ops.stiffness;
        let system = Composite {
            mass,
            stiffness: a,
            c: self.tau + self.memory_scale * self.weights[0],
        };
        let has_source = !self.problem.source.is_zero();
        let w_u0 = mass.apply(&u0);

        let first = usize::from(!self.config.initial_in_history);
        let mut history: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
        history.push(u0);
        let mut plain_sum = vec![0.0; n_dof];
        let mut source_sum = vec![0.0; n_dof];
        let mut memory = vec![0.0; n_dof];
        let mut a_memory = vec![0.0; n_dof];
        let mut rhs = vec![0.0; n_dof];

        for n in 1..=steps {
            let prev = &history[n - 1];
            if n > first {
                for (s, p) in plain_sum.iter_mut().zip(prev) {
                    *s += p;
                }
            }
            if has_source && !implicit {
                for (s, b) in source_sum.iter_mut().zip(self.source_load(prev)) {
                    *s += b;
                }
            }
            // tau sum_{first<=j<n} U^j + gamma tau^{1-alpha} sum_{first<=j<n} q_{n-j} U^j
            for (m, s) in memory.iter_mut().zip(&plain_sum) {
                *m = self.tau * s;
            }
            for (j, uj) in history.iter().enumerate().skip(first) {
                let w = self.memory_scale * self.weights[n - j];
                for (m, u) in memory.iter_mut().zip(uj) {
                    *m += w * u;
                }
            }
            a.apply_into(&memory, &mut a_memory);
            for i in 0..n_dof {
                rhs[i] = w_u0[i] - a_memory[i] + self.tau * source_sum[i];
            }
            if rhs.iter().any(|v| !v.is_finite()) {
                return Err(Error::Diverged { step: n });
            }

            let mut next = prev.clone();
            if implicit && has_source {
                self.picard(n, &system, &rhs, &mut next)?;
                for (s, b) in source_sum.iter_mut().zip(self.source_load(&next)) {
                    *s += b;
                }
            } else {
                cg_solve_in_place(&system, &rhs, &mut next, self.config.cg)?;
            }
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::Diverged { step: n });
            }
            if n % stride == 0 || n == steps {
                traj.record(n, n as f64 * self.tau, &next);
            }
            history.push(next);
        }
        Ok(traj)
    }

    /// Fixed-point iteration for `B U = base + tau b(U)`; `u` holds the initial
    /// iterate on entry and the converged iterate on exit.
    fn picard(&self, step: usize, system: &Composite<'_>, base: &[f64], u: &mut Vec<f64>) -> Result<()> {
        let weights = self.ops.lumped.values();
        let mut last_increment = f64::INFINITY;
        for it in 1..=self.config.picard_max_iter {
            let load = self.source_load(u);
            let rhs: Vec<f64> = base.iter().zip(&load).map(|(b, l)| b + self.tau * l).collect();
            if rhs.iter().any(|v| !v.is_finite()) {
                return Err(Error::PicardNoConvergence {
                    step,
                    iterations: it,
                    increment: last_increment,
                });
            }
            let mut next = u.clone();
            cg_solve_in_place(system, &rhs, &mut next, self.config.cg)?;
            last_increment = next
                .iter()
                .zip(u.iter())
                .zip(weights)
                .map(|((a, b), w)| w * (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            *u = next;
            if last_increment <= self.config.picard_tol {
                return Ok(());
            }
        }
        Err(Error::PicardNoConvergence {
            step,
            iterations: self.config.picard_max_iter,
            increment: last_increment,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_symmetric_mesh;
    use crate::problem::{InitialData, Nonlinearity};
    use crate::sparse::{DiagMatrix, SparseSymMatrix};

    #[test]
    fn weights_of_order_one_are_ones() {
        let q = cq_weights(1.0, 20);
        assert!(q.as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn weights_of_order_half() {
        let q = cq_weights(0.5, 4);
        assert_eq!(q[0], 1.0);
        assert_eq!(q[1], 0.5);
        assert_eq!(q[2], 0.375);
        assert!((q[3] - 0.3125).abs() < 1e-16);
    }

    #[test]
    fn weights_positive_for_memory_orders() {
        for alpha in [0.01, 0.25, 0.5, 0.75, 0.99] {
            let q = cq_weights(1.0 - alpha, 1000);
            assert!(q.as_slice().iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn fractional_integral_trivial_cases() {
        // the j = 0 sample is included, so a constant integrates to t_n + tau
        let tau = 0.1;
        let ones = vec![1.0; 11];
        assert!((cq_fractional_integral(&ones, 1.0, tau) - 1.1).abs() < 1e-14);
        assert_eq!(cq_fractional_integral(&[0.0; 7], 0.5, tau), 0.0);
        assert_eq!(cq_fractional_integral(&[], 0.5, tau), 0.0);
    }

    fn scalar_ops(w: f64, a: f64) -> (TriMesh, SpatialOperators) {
        let mesh = build_symmetric_mesh(2).unwrap();
        let single = |v: f64| SparseSymMatrix::from_triplets(1, &[(0, 0, v)]).unwrap();
        let ops = SpatialOperators {
            stiffness: single(a),
            mass: single(w),
            mass_full: crate::fem::assemble_mass_full(&mesh).unwrap(),
            lumped: DiagMatrix::new(vec![w]).unwrap(),
        };
        (mesh, ops)
    }

    #[test]
    fn two_step_hand_evaluation() {
        // w = a = 1, tau = 1/2, alpha = 1/2, gamma = 1, f = 0, U^0 = 1, q_1 = 1/2:
        // U^1 = 1 / (1 + tau + sqrt(tau))
        // U^2 = (1 - (tau + sqrt(tau) q_1) U^1) / (1 + tau + sqrt(tau))
        let (mesh, ops) = scalar_ops(1.0, 1.0);
        let problem = ProblemSpec::new(0.5, 1.0, 1.0, Nonlinearity::Zero, InitialData::CaseA).unwrap();
        let mut cfg = SchemeConfig::new(SchemeVariant::GalerkinLinearized, 2);
        cfg.snapshots = SnapshotPolicy::All;
        let traj = step_linearized_from(&cfg, &problem, &mesh, &ops, vec![1.0]).unwrap();
        let s = 0.5f64.sqrt();
        let d = 1.5 + s;
        let u1 = 1.0 / d;
        let u2 = (1.0 - (0.5 + 0.5 * s) * u1) / d;
        assert!((traj.states[1][0] - u1).abs() < 1e-15);
        assert!((traj.states[2][0] - u2).abs() < 1e-15);
        assert!((u1 - 0.4530818393).abs() < 1e-9);
        assert!((u2 - 0.2778617079).abs() < 1e-9);
    }

    #[test]
    fn initial_value_in_history() {
        // same data with U^0 fed into the sums:
        // U^1 = (1 - (tau + sqrt(tau) q_1)) / (1 + tau + sqrt(tau))
        let (mesh, ops) = scalar_ops(1.0, 1.0);
        let problem = ProblemSpec::new(0.5, 1.0, 1.0, Nonlinearity::Zero, InitialData::CaseA).unwrap();
        let mut cfg = SchemeConfig::new(SchemeVariant::GalerkinLinearized, 2);
        cfg.snapshots = SnapshotPolicy::All;
        cfg.initial_in_history = true;
        let traj = step_linearized_from(&cfg, &problem, &mesh, &ops, vec![1.0]).unwrap();
        let s = 0.5f64.sqrt();
        let expect = (1.0 - (0.5 + s * 0.5)) / (1.5 + s);
        assert!((traj.states[1][0] - expect).abs() < 1e-15);
        assert!((expect - 0.066_352_3).abs() < 1e-7);
    }

    #[test]
    fn degenerate_mesh_gives_empty_states() {
        let mesh = build_symmetric_mesh(1).unwrap();
        let ops = SpatialOperators::assemble(&mesh);
        // no interior nodes -> the lumped diagonal is empty but valid
        let ops = ops.unwrap();
        let problem = ProblemSpec::new(0.5, 1.0, 1.0, Nonlinearity::Zero, InitialData::CaseA).unwrap();
        let cfg = SchemeConfig::new(SchemeVariant::LumpedLinearized, 4);
        let traj = step_linearized(&cfg, &problem, &mesh, &ops).unwrap();
        assert!(traj.states.iter().all(|s| s.is_empty()));
        assert_eq!(traj.final_time(), 1.0);
    }

    #[test]
    fn zero_steps_rejected() {
        let mesh = build_symmetric_mesh(2).unwrap();
        let ops = SpatialOperators::assemble(&mesh).unwrap();
        let problem = ProblemSpec::benchmark(0.5, InitialData::CaseA).unwrap();
        let cfg = SchemeConfig::new(SchemeVariant::LumpedLinearized, 0);
        assert!(matches!(
            step_linearized(&cfg, &problem, &mesh, &ops),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn snapshot_policy() {
        let mesh = build_symmetric_mesh(3).unwrap();
        let ops = SpatialOperators::assemble(&mesh).unwrap();
        let problem = ProblemSpec::benchmark(0.5, InitialData::CaseA).unwrap();
        let cfg = SchemeConfig::new(SchemeVariant::LumpedLinearized, 250);
        let traj = step_linearized(&cfg, &problem, &mesh, &ops).unwrap();
        // stride 3: steps 0, 3, ..., 249 and the final 250
        assert_eq!(traj.steps.len(), 1 + 83 + 1);
        assert_eq!(*traj.steps.last().unwrap(), 250);
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
        assert!((traj.final_time() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn divergence_is_reported() {
        let mesh = build_symmetric_mesh(4).unwrap();
        let ops = SpatialOperators::assemble(&mesh).unwrap();
        let problem = ProblemSpec::new(
            0.5,
            1.0,
            1.0,
            Nonlinearity::Custom {
                f: std::sync::Arc::new(|u: f64| if u > 0.0 { f64::INFINITY } else { 0.0 }),
                lipschitz: 0.0,
            },
            InitialData::CaseA,
        )
        .unwrap();
        let cfg = SchemeConfig::new(SchemeVariant::LumpedLinearized, 4);
        assert!(matches!(
            step_linearized(&cfg, &problem, &mesh, &ops),
            Err(Error::Diverged { step: 1 })
        ));
    }
}
