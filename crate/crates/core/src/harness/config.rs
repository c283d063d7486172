//! Study configuration, read from flat `key = value` text or a JSON object.
//!
//! Recognised keys: `alpha`, `gamma`, `T`, `N`, `M`, `M_ref`, `N_ref`,
//! `times`, `family`, `case`, `nonlinearity`, `scheme`, `source_lumping`,
//! `tol`, `snapshot_stride`, `initial`, `initial_in_history`, `axis`,
//! `cache_dir`, `output`.
//! Keys taking lists accept comma-separated values in the text form.
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::cq::{InitialApproximation, SchemeConfig, SchemeVariant, SnapshotPolicy};
use crate::error::{Error, Result};
use crate::mesh::MeshFamily;
use crate::problem::{InitialData, Nonlinearity, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Symmetric,
    Nonsymmetric,
}

impl FamilyKind {
    pub fn with(self, m: usize) -> MeshFamily {
        match self {
            FamilyKind::Symmetric => MeshFamily::Symmetric(m),
            FamilyKind::Nonsymmetric => MeshFamily::Nonsymmetric(m),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Symmetric => "symmetric",
            FamilyKind::Nonsymmetric => "nonsymmetric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Spatial,
    Temporal,
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub case: InitialData,
    pub alphas: Vec<f64>,
    pub gamma: f64,
    pub t_final: f64,
    pub nonlinearity: Nonlinearity,
    pub family: FamilyKind,
    pub m_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub m_ref: Option<usize>,
    pub n_ref: Option<usize>,
    /// Final times of a prefactor study.
    pub times: Vec<f64>,
    pub axis: Axis,
    pub scheme: SchemeVariant,
    pub source_lumping: bool,
    pub initial_in_history: bool,
    pub tol: f64,
    pub snapshot_stride: Option<usize>,
    pub initial: InitialApproximation,
    pub cache_dir: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            case: InitialData::CaseA,
            alphas: vec![0.5],
            gamma: 1.0,
            t_final: 1.0,
            nonlinearity: Nonlinearity::SqrtOnePlusSquare,
            family: FamilyKind::Symmetric,
            m_list: vec![8, 16, 32, 64],
            n_list: vec![200],
            m_ref: None,
            n_ref: None,
            times: vec![1e-3, 1e-4, 1e-5, 1e-6, 1e-7],
            axis: Axis::Spatial,
            scheme: SchemeVariant::LumpedLinearized,
            source_lumping: false,
            initial_in_history: false,
            tol: 1e-12,
            snapshot_stride: None,
            initial: InitialApproximation::L2Projection,
            cache_dir: None,
            output: None,
        }
    }
}

impl StudyConfig {
    pub fn problem(&self, alpha: f64) -> Result<ProblemSpec> {
        ProblemSpec::new(
            alpha,
            self.gamma,
            self.t_final,
            self.nonlinearity.clone(),
            self.case.clone(),
        )
    }

    pub fn scheme_config(&self, steps: usize) -> SchemeConfig {
        let mut s = SchemeConfig::new(self.scheme, steps);
        s.source_lumping = self.source_lumping;
        s.initial_in_history = self.initial_in_history;
        s.cg.tol = self.tol;
        s.initial = self.initial;
        s.snapshots = match self.snapshot_stride {
            Some(k) => SnapshotPolicy::Stride(k),
            None => SnapshotPolicy::Default,
        };
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::Config("alpha list is empty".into()));
        }
        if self.m_list.is_empty() || self.n_list.is_empty() {
            return Err(Error::Config("M and N lists must be non-empty".into()));
        }
        if self.m_list.contains(&0) || self.n_list.contains(&0) {
            return Err(Error::Config("M and N entries must be positive".into()));
        }
        if let Some(r) = self.m_ref {
            if self.m_list.iter().any(|&m| m >= r) {
                return Err(Error::Config(format!(
                    "M_ref = {r} must exceed every tested M {:?}",
                    self.m_list
                )));
            }
        }
        if let Some(r) = self.n_ref {
            if self.n_list.iter().any(|&n| n >= r) {
                return Err(Error::Config(format!(
                    "N_ref = {r} must exceed every tested N {:?}",
                    self.n_list
                )));
            }
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Config(format!("tol must lie in (0,1), got {}", self.tol)));
        }
        if self.times.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::Config("evaluation times must be positive".into()));
        }
        for &a in &self.alphas {
            self.problem(a)?;
        }
        Ok(())
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// JSON if the first non-blank character is `{`, flat text otherwise.
    pub fn parse(text: &str) -> Result<Self> {
        let map = if text.trim_start().starts_with('{') {
            match serde_json::from_str::<Value>(text)? {
                Value::Object(obj) => obj.into_iter().collect(),
                _ => return Err(Error::Config("JSON config must be an object".into())),
            }
        } else {
            parse_flat(text)?
        };
        Self::from_map(map)
    }

    fn from_map(map: BTreeMap<String, Value>) -> Result<Self> {
        let mut cfg = StudyConfig::default();
        for (key, value) in map {
            match key.as_str() {
                "alpha" => cfg.alphas = floats(&key, &value)?,
                "gamma" => cfg.gamma = float(&key, &value)?,
                "T" => cfg.t_final = float(&key, &value)?,
                "N" => cfg.n_list = counts(&key, &value)?,
                "M" => cfg.m_list = counts(&key, &value)?,
                "M_ref" => cfg.m_ref = Some(count(&key, &value)?),
                "N_ref" => cfg.n_ref = Some(count(&key, &value)?),
                "times" => cfg.times = floats(&key, &value)?,
                "family" => cfg.family = parse_family(&string(&key, &value)?)?,
                "case" => cfg.case = parse_case(&string(&key, &value)?)?,
                "nonlinearity" => cfg.nonlinearity = parse_nonlinearity(&string(&key, &value)?)?,
                "scheme" => cfg.scheme = parse_scheme(&string(&key, &value)?)?,
                "source_lumping" => cfg.source_lumping = boolean(&key, &value)?,
                "initial_in_history" => cfg.initial_in_history = boolean(&key, &value)?,
                "tol" => cfg.tol = float(&key, &value)?,
                "snapshot_stride" => cfg.snapshot_stride = Some(count(&key, &value)?),
                "initial" => cfg.initial = parse_initial(&string(&key, &value)?)?,
                "axis" => cfg.axis = parse_axis(&string(&key, &value)?)?,
                "cache_dir" => cfg.cache_dir = Some(PathBuf::from(string(&key, &value)?)),
                "output" => cfg.output = Some(PathBuf::from(string(&key, &value)?)),
                _ => return Err(Error::Config(format!("unknown key `{key}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_flat(text: &str) -> Result<BTreeMap<String, Value>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let items: Vec<Value> = v.split(',').map(|s| scalar(s.trim())).collect();
        let value = if items.len() == 1 {
            items.into_iter().next().unwrap()
        } else {
            Value::Array(items)
        };
        if map.insert(k.trim().to_string(), value).is_some() {
            return Err(Error::Config(format!("duplicate key `{}`", k.trim())));
        }
    }
    Ok(map)
}

fn scalar(s: &str) -> Value {
    if let Ok(b) = s.parse::<bool>() {
        return Value::Bool(b);
    }
    if let Ok(i) = s.parse::<u64>() {
        return Value::from(i);
    }
    if let Ok(x) = s.parse::<f64>() {
        return Value::from(x);
    }
    Value::String(s.to_string())
}

fn float(key: &str, v: &Value) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::Config(format!("`{key}` expects a number, got {v}")))
}

fn floats(key: &str, v: &Value) -> Result<Vec<f64>> {
    match v {
        Value::Array(items) => items.iter().map(|x| float(key, x)).collect(),
        _ => Ok(vec![float(key, v)?]),
    }
}

fn count(key: &str, v: &Value) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::Config(format!("`{key}` expects a non-negative integer, got {v}")))
}

fn counts(key: &str, v: &Value) -> Result<Vec<usize>> {
    match v {
        Value::Array(items) => items.iter().map(|x| count(key, x)).collect(),
        _ => Ok(vec![count(key, v)?]),
    }
}

fn boolean(key: &str, v: &Value) -> Result<bool> {
    v.as_bool()
        .ok_or_else(|| Error::Config(format!("`{key}` expects true or false, got {v}")))
}

fn string(key: &str, v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(Error::Config(format!("`{key}` expects a string, got {v}"))),
    }
}

pub fn parse_family(s: &str) -> Result<FamilyKind> {
    match s {
        "symmetric" => Ok(FamilyKind::Symmetric),
        "nonsymmetric" => Ok(FamilyKind::Nonsymmetric),
        _ => Err(Error::Config(format!("unknown mesh family `{s}`"))),
    }
}

/// `a`, `b`, or `mode<k>_<l>`.
pub fn parse_case(s: &str) -> Result<InitialData> {
    match s {
        "a" => return Ok(InitialData::CaseA),
        "b" => return Ok(InitialData::CaseB),
        _ => {}
    }
    let bad = || Error::Config(format!("unknown case `{s}`"));
    let rest = s.strip_prefix("mode").ok_or_else(bad)?;
    let (k, l) = rest.split_once('_').ok_or_else(bad)?;
    Ok(InitialData::SingleMode {
        k: k.parse().map_err(|_| bad())?,
        l: l.parse().map_err(|_| bad())?,
    })
}

/// `zero`, `sqrt1pu2`, `const<c>` or `linear<s>`.
pub fn parse_nonlinearity(s: &str) -> Result<Nonlinearity> {
    let bad = || Error::Config(format!("unknown nonlinearity `{s}`"));
    match s {
        "zero" => Ok(Nonlinearity::Zero),
        "sqrt1pu2" | "sqrt" => Ok(Nonlinearity::SqrtOnePlusSquare),
        _ => {
            if let Some(c) = s.strip_prefix("const") {
                Ok(Nonlinearity::Constant(c.parse().map_err(|_| bad())?))
            } else if let Some(c) = s.strip_prefix("linear") {
                Ok(Nonlinearity::Linear(c.parse().map_err(|_| bad())?))
            } else {
                Err(bad())
            }
        }
    }
}

pub fn parse_scheme(s: &str) -> Result<SchemeVariant> {
    match s {
        "galerkin-linearized" | "galerkin" => Ok(SchemeVariant::GalerkinLinearized),
        "lumped-linearized" | "lumped" => Ok(SchemeVariant::LumpedLinearized),
        "galerkin-implicit" | "implicit" => Ok(SchemeVariant::GalerkinImplicit),
        _ => Err(Error::Config(format!("unknown scheme `{s}`"))),
    }
}

fn parse_initial(s: &str) -> Result<InitialApproximation> {
    match s {
        "projection" => Ok(InitialApproximation::L2Projection),
        "interpolation" => Ok(InitialApproximation::Interpolation),
        _ => Err(Error::Config(format!("unknown initial approximation `{s}`"))),
    }
}

pub fn parse_axis(s: &str) -> Result<Axis> {
    match s {
        "spatial" => Ok(Axis::Spatial),
        "temporal" => Ok(Axis::Temporal),
        _ => Err(Error::Config(format!("unknown axis `{s}`"))),
    }
}
