//! Problem data: fractional order, viscoelastic parameter, final time,
//! nonlinear source and initial data.
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type PointFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum InitialData {
    /// `x y (1-x) (1-y)`
    CaseA,
    /// Indicator of `(0, 1/2] x (0, 1)`.
    CaseB,
    /// `sin(k pi x) sin(l pi y)`
    SingleMode { k: u32, l: u32 },
    Custom(PointFn),
}

impl InitialData {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            InitialData::CaseA => x * y * (1.0 - x) * (1.0 - y),
            InitialData::CaseB => {
                if x > 0.0 && x <= 0.5 && y > 0.0 && y < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            InitialData::SingleMode { k, l } => {
                (*k as f64 * PI * x).sin() * (*l as f64 * PI * y).sin()
            }
            InitialData::Custom(g) => g(x, y),
        }
    }

    /// Smoothness index `nu` with `u0` in the fractional space of order `nu`,
    /// used for theoretical exponents. Case (b) lies in every order below 1/2
    /// and is labelled 1/2.
    pub fn regularity(&self) -> Option<f64> {
        match self {
            InitialData::CaseA => Some(2.0),
            InitialData::CaseB => Some(0.5),
            InitialData::SingleMode { .. } => Some(2.0),
            InitialData::Custom(_) => None,
        }
    }

    pub fn tag(&self) -> String {
        match self {
            InitialData::CaseA => "a".into(),
            InitialData::CaseB => "b".into(),
            InitialData::SingleMode { k, l } => format!("mode{k}_{l}"),
            InitialData::Custom(_) => "custom".into(),
        }
    }
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "InitialData({})", self.tag())
    }
}

#[derive(Clone)]
pub enum Nonlinearity {
    Zero,
    Constant(f64),
    /// `f(u) = slope * u`
    Linear(f64),
    /// `f(u) = sqrt(1 + u^2)`
    SqrtOnePlusSquare,
    Custom { f: ScalarFn, lipschitz: f64 },
}

impl Nonlinearity {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Constant(c) => *c,
            Nonlinearity::Linear(s) => s * u,
            Nonlinearity::SqrtOnePlusSquare => (1.0 + u * u).sqrt(),
            Nonlinearity::Custom { f, .. } => f(u),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Nonlinearity::Zero | Nonlinearity::Constant(_) => 0.0,
            Nonlinearity::Linear(s) => s.abs(),
            Nonlinearity::SqrtOnePlusSquare => 1.0,
            Nonlinearity::Custom { lipschitz, .. } => *lipschitz,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Nonlinearity::Zero)
    }

    pub fn tag(&self) -> String {
        match self {
            Nonlinearity::Zero => "zero".into(),
            Nonlinearity::Constant(c) => format!("const{c}"),
            Nonlinearity::Linear(s) => format!("linear{s}"),
            Nonlinearity::SqrtOnePlusSquare => "sqrt1pu2".into(),
            Nonlinearity::Custom { lipschitz, .. } => format!("custom{lipschitz}"),
        }
    }
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Nonlinearity({})", self.tag())
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub alpha: f64,
    pub gamma: f64,
    pub t_final: f64,
    pub source: Nonlinearity,
    pub initial: InitialData,
}

impl ProblemSpec {
    pub fn new(
        alpha: f64,
        gamma: f64,
        t_final: f64,
        source: Nonlinearity,
        initial: InitialData,
    ) -> Result<Self> {
        let p = ProblemSpec {
            alpha,
            gamma,
            t_final,
            source,
            initial,
        };
        p.validate()?;
        Ok(p)
    }

    /// One of the two benchmark problems: `f(u) = sqrt(1 + u^2)` with case (a) or (b) data.
    pub fn benchmark(alpha: f64, initial: InitialData) -> Result<Self> {
        Self::new(alpha, 1.0, 1.0, Nonlinearity::SqrtOnePlusSquare, initial)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::InvalidParameter(format!("T must be > 0, got {}", self.t_final)));
        }
        if !(self.source.lipschitz() >= 0.0) {
            return Err(Error::InvalidParameter("Lipschitz constant must be >= 0".into()));
        }
        Ok(())
    }

    pub fn with_final_time(&self, t_final: f64) -> Self {
        ProblemSpec {
            t_final,
            ..self.clone()
        }
    }
}
