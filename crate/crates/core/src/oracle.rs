//! Semi-analytic reference solutions of the linear problem (`f = 0`).
//!
//! On a Dirichlet eigenfunction with eigenvalue `lambda` the solution operator
//! acts as multiplication by
//!
//! ```text
//! e_lambda(t) = 1/(2 pi i) int_Gamma e^{zt} / (z + lambda + lambda gamma z^alpha) dz
//! ```
//!
//! which is evaluated here by Gauss-Legendre panels along a sectorial contour:
//! two rays at angles `+-theta` joined by an arc of radius `delta`.
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::cq::cq_weights;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Gauss-Legendre points per panel.
const PANEL_ORDER: usize = 20;
/// Relative bound on the imaginary part of a mode response.
const IMAG_TOL: f64 = 1e-10;

/// `z / (1 + gamma z^alpha)` on the principal branch.
pub fn symbol_g(z: Complex64, alpha: f64, gamma: f64) -> Result<Complex64> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidParameter("symbol undefined at z = 0".into()));
    }
    Ok(z / (1.0 + gamma * z.powf(alpha)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub theta: f64,
    pub delta: f64,
    pub nodes_per_ray: usize,
    pub truncation: f64,
}

impl ContourSpec {
    /// `theta = 3 pi / 4`, `delta = max(1/t, 1)`, 160 nodes per ray, rays cut
    /// where `|e^{zt}| < 1e-18`.
    pub fn default_for(t: f64) -> Self {
        let theta = 0.75 * PI;
        let delta = (1.0 / t).max(1.0);
        let truncation = (1e18f64.ln() / (t * theta.cos().abs())).max(2.0 * delta);
        ContourSpec {
            theta,
            delta,
            nodes_per_ray: 160,
            truncation,
        }
    }

    pub fn with_nodes(mut self, nodes_per_ray: usize) -> Self {
        self.nodes_per_ray = nodes_per_ray;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta > PI / 2.0 && self.theta < PI) {
            return Err(Error::InvalidParameter(format!(
                "contour angle must lie in (pi/2, pi), got {}",
                self.theta
            )));
        }
        if !(self.delta > 0.0 && self.truncation > self.delta) {
            return Err(Error::InvalidParameter(format!(
                "contour needs 0 < delta < R, got delta = {}, R = {}",
                self.delta, self.truncation
            )));
        }
        if self.nodes_per_ray < PANEL_ORDER {
            return Err(Error::InvalidParameter(format!(
                "need at least {PANEL_ORDER} nodes per ray"
            )));
        }
        Ok(())
    }
}

/// Inverse Laplace transform of `transfer` at time `t` along `contour`.
/// Returns the complex value; callers check the imaginary part.
pub fn inverse_laplace<F>(transfer: F, t: f64, contour: &ContourSpec) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    contour.validate()?;
    let (gx, gw) = gauss_legendre(PANEL_ORDER);
    let panels = contour.nodes_per_ray / PANEL_ORDER;
    let i = Complex64::i();
    let mut total = Complex64::new(0.0, 0.0);

    // rays: geometric panel breakpoints between delta and R
    let ratio = (contour.truncation / contour.delta).powf(1.0 / panels as f64);
    let up = Complex64::from_polar(1.0, contour.theta);
    let down = up.conj();
    let mut a = contour.delta;
    for p in 0..panels {
        let b = if p + 1 == panels { contour.truncation } else { a * ratio };
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, w) in gx.iter().zip(&gw) {
            let rho = mid + half * x;
            let zu = rho * up;
            let zd = rho * down;
            // upper ray runs outward, lower ray inward
            total += w * half * ((zu * t).exp() * transfer(zu) * up - (zd * t).exp() * transfer(zd) * down);
        }
        a = b;
    }

    // arc from -theta to theta
    let arc_panels = (panels / 2).max(1);
    let width = 2.0 * contour.theta / arc_panels as f64;
    for p in 0..arc_panels {
        let lo = -contour.theta + p as f64 * width;
        let (mid, half) = (lo + 0.5 * width, 0.5 * width);
        for (x, w) in gx.iter().zip(&gw) {
            let psi = mid + half * x;
            let z = Complex64::from_polar(contour.delta, psi);
            total += w * half * (z * t).exp() * transfer(z) * i * z;
        }
    }
    Ok(total / (2.0 * PI * i))
}

/// `e_lambda(t)` with the default contour for `t`.
pub fn mode_response(lambda: f64, t: f64, alpha: f64, gamma: f64) -> Result<f64> {
    mode_response_with(lambda, t, alpha, gamma, &ContourSpec::default_for(t))
}

pub fn mode_response_with(
    lambda: f64,
    t: f64,
    alpha: f64,
    gamma: f64,
    contour: &ContourSpec,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("mode response needs t > 0, got {t}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("eigenvalue must be >= 0, got {lambda}")));
    }
    let value = inverse_laplace(
        |z| 1.0 / (z + lambda + lambda * gamma * z.powf(alpha)),
        t,
        contour,
    )?;
    if value.im.abs() >= IMAG_TOL * (1.0 + value.re.abs()) {
        return Err(Error::ContourResolution {
            real: value.re,
            imag: value.im,
        });
    }
    Ok(value.re)
}

/// Sampled `e_lambda` at a list of times.
#[derive(Debug, Clone)]
pub struct ModeResponse {
    pub lambda: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl ModeResponse {
    pub fn sample(lambda: f64, alpha: f64, gamma: f64, times: &[f64]) -> Result<Self> {
        let values = times
            .iter()
            .map(|&t| mode_response(lambda, t, alpha, gamma))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModeResponse {
            lambda,
            alpha,
            gamma,
            times: times.to_vec(),
            values,
        })
    }

    /// Whether the samples decrease along increasing time (exploratory only).
    pub fn is_monotone_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Backward Euler CQ applied to a single mode with eigenvalue `lambda`
/// (unit mass): returns `s_0 = 1, s_1, ..., s_N` at `t_n = n T / N`.
pub fn scalar_cq_response(lambda: f64, alpha: f64, gamma: f64, t_final: f64, steps: usize) -> Vec<f64> {
    let tau = t_final / steps as f64;
    let memory_scale = gamma * tau.powf(1.0 - alpha);
    let q = cq_weights(1.0 - alpha, steps);
    let denom = 1.0 + lambda * (tau + memory_scale);
    let mut s = Vec::with_capacity(steps + 1);
    s.push(1.0);
    let mut plain = 0.0;
    for n in 1..=steps {
        // history runs over s_1 .. s_{n-1}
        if n > 1 {
            plain += s[n - 1];
        }
        let weighted: f64 = s[1..].iter().zip(q.as_slice()[1..n].iter().rev()).map(|(a, b)| a * b).sum();
        s.push((1.0 - lambda * (tau * plain + memory_scale * weighted)) / denom);
    }
    s
}

/// Dirichlet eigenvalue `(k^2 + l^2) pi^2` of the unit square.
pub fn laplace_eigenvalue(k: u32, l: u32) -> f64 {
    ((k * k + l * l) as f64) * PI * PI
}

/// Eigenvalue of `D^{-1} A` (lumped mass, symmetric mesh with `M` subintervals)
/// belonging to the grid function `sin(k pi x) sin(l pi y)`.
pub fn discrete_eigenvalue(k: u32, l: u32, m: usize) -> f64 {
    let m = m as f64;
    let s = |j: u32| (j as f64 * PI / (2.0 * m)).sin().powi(2);
    4.0 * m * m * (s(k) + s(l))
}

/// Linear solution `sum c_kl e_{lambda_kl}(t) phi_kl` with orthonormal
/// eigenfunctions `phi_kl = 2 sin(k pi x) sin(l pi y)`.
#[derive(Debug, Clone)]
pub struct ModalSolution {
    pub t: f64,
    /// `(k, l, c_kl e_{lambda_kl}(t))`
    pub terms: Vec<(u32, u32, f64)>,
}

impl ModalSolution {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(k, l, a)| 2.0 * a * (k as f64 * PI * x).sin() * (l as f64 * PI * y).sin())
            .sum()
    }

    /// Exact L2 norm by orthonormality (modes assumed distinct).
    pub fn l2_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.2 * t.2).sum::<f64>().sqrt()
    }
}

pub fn linear_exact_solution(
    modes: &[(u32, u32, f64)],
    t: f64,
    alpha: f64,
    gamma: f64,
) -> Result<ModalSolution> {
    let terms = modes
        .iter()
        .map(|&(k, l, c)| Ok((k, l, c * mode_response(laplace_eigenvalue(k, l), t, alpha, gamma)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModalSolution { t, terms })
}

/// `lambda^{s/2} |e_lambda(t)| t^{(1-alpha) s/2}` maximised over `lambda_grid`,
/// one value per entry of `t_grid`, for smoothing order `s = p - q`.
pub fn smoothing_profile(
    alpha: f64,
    gamma: f64,
    order: u32,
    t_grid: &[f64],
    lambda_grid: &[f64],
) -> Result<Vec<f64>> {
    if order > 2 {
        return Err(Error::InvalidParameter(format!(
            "smoothing order must be 0, 1 or 2, got {order}"
        )));
    }
    let s = order as f64;
    t_grid
        .iter()
        .map(|&t| {
            let mut sup: f64 = 0.0;
            for &lambda in lambda_grid {
                let e = mode_response(lambda, t, alpha, gamma)?;
                sup = sup.max(lambda.powf(s / 2.0) * e.abs() * t.powf((1.0 - alpha) * s / 2.0));
            }
            Ok(sup)
        })
        .collect()
}

/// Supremum of [`smoothing_profile`] over the whole grid.
pub fn smoothing_probe(
    alpha: f64,
    gamma: f64,
    order: u32,
    t_grid: &[f64],
    lambda_grid: &[f64],
) -> Result<f64> {
    Ok(smoothing_profile(alpha, gamma, order, t_grid, lambda_grid)?
        .into_iter()
        .fold(0.0, f64::max))
}
