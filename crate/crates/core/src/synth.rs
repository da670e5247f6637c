//! Synthetic data from lagged structural causal models, with the exact ground-truth graph.

use std::collections::{BTreeSet, HashMap};

use chrono::NaiveDate;
use nalgebra::{DMatrix, Schur};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{date_range, Cadence, TimeSeriesFrame, VariableMeta};
use crate::graph::{CausalEdge, CausalGraph, Correction, LagSpan};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    #[default]
    Linear,
    Tanh,
}

/// One term `coef * x_cause(t - lag)` of a mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub cause: usize,
    pub lag: usize,
    pub coef: f64,
}

impl Link {
    pub fn new(cause: usize, lag: usize, coef: f64) -> Self {
        Self { cause, lag, coef }
    }
}

/// `x_effect(t) = f(sum of parent terms) + noise_std * N(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    pub effect: usize,
    #[serde(default)]
    pub parents: Vec<Link>,
    pub noise_std: f64,
    #[serde(default)]
    pub nonlinearity: Nonlinearity,
}

/// A lagged structural causal model.
///
/// Variables without a mechanism are standard Gaussian white noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmSpec {
    pub n_vars: usize,
    #[serde(default)]
    pub names: Option<Vec<String>>,
    #[serde(default)]
    pub mechanisms: Vec<Mechanism>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub burn_in: usize,
    /// Fixed values of the first simulated row (before burn-in is discarded).
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
    #[serde(default)]
    pub start: Option<NaiveDate>,
    #[serde(default)]
    pub cadence: Option<Cadence>,
}

impl ScmSpec {
    pub fn new(n_vars: usize, seed: u64) -> Self {
        Self {
            n_vars,
            names: None,
            mechanisms: Vec::new(),
            seed,
            burn_in: 0,
            initial: None,
            start: None,
            cadence: None,
        }
    }

    pub fn with_mechanism(mut self, effect: usize, parents: Vec<Link>, noise_std: f64) -> Self {
        self.mechanisms.push(Mechanism {
            effect,
            parents,
            noise_std,
            nonlinearity: Nonlinearity::Linear,
        });
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_names(mut self, names: &[&str]) -> Self {
        self.names = Some(names.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn names(&self) -> Vec<String> {
        match &self.names {
            Some(n) => n.clone(),
            None => (0..self.n_vars).map(|i| format!("x{i}")).collect(),
        }
    }

    pub fn max_lag(&self) -> usize {
        self.mechanisms
            .iter()
            .flat_map(|m| m.parents.iter().map(|l| l.lag))
            .max()
            .unwrap_or(0)
    }

    /// Check indices, lag-0 acyclicity and (for linear models) stationarity.
    pub fn validate(&self) -> Result<()> {
        let v = self.n_vars;
        if v == 0 {
            return Err(Error::InvalidArgument("model has no variables".into()));
        }
        if let Some(names) = &self.names {
            if names.len() != v {
                return Err(Error::InvalidArgument(format!(
                    "{} names for {v} variables",
                    names.len()
                )));
            }
        }
        if let Some(init) = &self.initial {
            if init.len() != v {
                return Err(Error::InvalidArgument("initial row has wrong length".into()));
            }
        }
        let mut seen = vec![false; v];
        for m in &self.mechanisms {
            if m.effect >= v {
                return Err(Error::InvalidArgument(format!("effect {} out of range", m.effect)));
            }
            if std::mem::replace(&mut seen[m.effect], true) {
                return Err(Error::InvalidArgument(format!(
                    "variable {} has two mechanisms",
                    m.effect
                )));
            }
            if !(m.noise_std >= 0.0) || !m.noise_std.is_finite() {
                return Err(Error::InvalidArgument("noise std must be >= 0".into()));
            }
            let mut terms = BTreeSet::new();
            for l in &m.parents {
                if l.cause >= v {
                    return Err(Error::InvalidArgument(format!("cause {} out of range", l.cause)));
                }
                if !terms.insert((l.cause, l.lag)) {
                    return Err(Error::InvalidArgument(format!(
                        "repeated term ({}, lag {}) in mechanism of {}",
                        l.cause, l.lag, m.effect
                    )));
                }
            }
        }
        self.contemporaneous_order()?;
        if self
            .mechanisms
            .iter()
            .all(|m| m.nonlinearity == Nonlinearity::Linear)
        {
            let rho = self.spectral_radius()?;
            if rho >= 1.0 {
                return Err(Error::Unstable(rho));
            }
        }
        Ok(())
    }

    /// Topological order of the lag-0 dependency graph.
    fn contemporaneous_order(&self) -> Result<Vec<usize>> {
        let v = self.n_vars;
        let mut indegree = vec![0usize; v];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); v];
        for m in &self.mechanisms {
            for l in m.parents.iter().filter(|l| l.lag == 0) {
                if l.cause == m.effect {
                    return Err(Error::CyclicContemporaneous);
                }
                indegree[m.effect] += 1;
                children[l.cause].push(m.effect);
            }
        }
        // Smallest ready index first keeps the order deterministic.
        let mut ready: BTreeSet<usize> = (0..v).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(v);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &c in &children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() != v {
            return Err(Error::CyclicContemporaneous);
        }
        Ok(order)
    }

    /// Spectral radius of the companion matrix of the reduced-form VAR
    /// `x_t = (I - B0)^-1 (B1 x_{t-1} + ... + Bp x_{t-p}) + e_t`.
    pub fn spectral_radius(&self) -> Result<f64> {
        let v = self.n_vars;
        let p = self.max_lag();
        if p == 0 {
            return Ok(0.0);
        }
        let mut b = vec![DMatrix::<f64>::zeros(v, v); p + 1];
        for m in &self.mechanisms {
            for l in &m.parents {
                b[l.lag][(m.effect, l.cause)] += l.coef;
            }
        }
        let inv = (DMatrix::<f64>::identity(v, v) - &b[0])
            .try_inverse()
            .ok_or(Error::CyclicContemporaneous)?;
        let k = v * p;
        let mut companion = DMatrix::<f64>::zeros(k, k);
        for lag in 1..=p {
            let a = &inv * &b[lag];
            companion
                .view_mut((0, (lag - 1) * v), (v, v))
                .copy_from(&a);
        }
        for i in v..k {
            companion[(i, i - v)] = 1.0;
        }
        // The unbounded Schur iteration can stall on defective matrices (a
        // nilpotent companion from a chain without self-lags), so cap it.
        match Schur::try_new(companion.clone(), f64::EPSILON, 10_000) {
            Some(schur) => Ok(schur
                .complex_eigenvalues()
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max)),
            None => Ok(gelfand_radius(companion)),
        }
    }

    /// The ground-truth graph implied by the mechanisms.
    pub fn truth_graph(&self) -> Result<CausalGraph> {
        let edges = self
            .mechanisms
            .iter()
            .flat_map(|m| {
                m.parents
                    .iter()
                    .map(move |l| CausalEdge::new(l.cause, m.effect, LagSpan::exact(l.lag), l.coef, 0.0))
            })
            .collect();
        CausalGraph::new(self.names(), "truth", 0.0, Correction::None, edges)
    }
}

/// `lim ||A^k||^(1/k)` evaluated at `k = 2^60` by repeated squaring, with
/// the norm factored out at each step to avoid overflow.
fn gelfand_radius(mut a: DMatrix<f64>) -> f64 {
    let mut log_scale = 0.0;
    let mut k = 1.0;
    for _ in 0..60 {
        let norm = a.norm();
        if norm == 0.0 {
            return 0.0;
        }
        a /= norm;
        log_scale += norm.ln() / k;
        a = &a * &a;
        k *= 2.0;
    }
    let norm = a.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (log_scale + norm.ln() / k).exp()
}

/// Simulate `n` rows (after discarding `burn_in`) and return them with the truth graph.
pub fn generate(spec: &ScmSpec, n: usize) -> Result<(TimeSeriesFrame, CausalGraph)> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let v = spec.n_vars;
    let total = spec.burn_in + n;
    let order = spec.contemporaneous_order()?;
    let by_effect: HashMap<usize, &Mechanism> =
        spec.mechanisms.iter().map(|m| (m.effect, m)).collect();
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut x = Array2::<f64>::zeros((total, v));
    let mut noise = vec![0.0; v];
    for t in 0..total {
        for e in noise.iter_mut() {
            *e = std_normal.sample(&mut rng);
        }
        if t == 0 {
            if let Some(init) = &spec.initial {
                x.row_mut(0).assign(&ndarray::ArrayView1::from(init.as_slice()));
                continue;
            }
        }
        for &j in &order {
            let value = match by_effect.get(&j) {
                Some(m) => {
                    let drive: f64 = m
                        .parents
                        .iter()
                        .filter(|l| l.lag <= t)
                        .map(|l| l.coef * x[[t - l.lag, l.cause]])
                        .sum();
                    let drive = match m.nonlinearity {
                        Nonlinearity::Linear => drive,
                        Nonlinearity::Tanh => drive.tanh(),
                    };
                    drive + m.noise_std * noise[j]
                }
                None => noise[j],
            };
            x[[t, j]] = value;
        }
    }
    let kept = x.slice(ndarray::s![spec.burn_in.., ..]).to_owned();
    let cadence = spec.cadence.unwrap_or(Cadence::Daily);
    let start = spec
        .start
        .unwrap_or_else(|| NaiveDate::from_ymd_opt(2000, 1, 1).unwrap());
    let variables = spec.names().into_iter().map(VariableMeta::bare).collect();
    let frame = TimeSeriesFrame::from_values(date_range(start, cadence, n), cadence, variables, kept)?;
    Ok((frame, spec.truth_graph()?))
}

/// How edges are matched when scoring a graph against the truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeMatch {
    /// `(cause, effect)` pairs, lags ignored.
    Adjacency,
    /// `(cause, effect, lag)` triples.
    LagExact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 of `found` against `truth`.
///
/// An empty `found` has precision 1 by convention (and an empty `truth`
/// recall 1). Unoriented contemporaneous edges match the truth in either
/// direction.
pub fn score_graph(found: &CausalGraph, truth: &CausalGraph, mode: EdgeMatch) -> Result<GraphScore> {
    if found.variables != truth.variables {
        return Err(Error::InvalidGraph(
            "graphs are over different variable sets".into(),
        ));
    }
    let key = |e: &CausalEdge| -> (usize, usize, LagSpan) {
        match mode {
            EdgeMatch::Adjacency => (e.cause, e.effect, LagSpan::exact(0)),
            EdgeMatch::LagExact => (e.cause, e.effect, e.lag),
        }
    };
    let truth_keys: BTreeSet<_> = truth.edges().iter().map(key).collect();
    let found_keys: BTreeSet<_> = found
        .edges()
        .iter()
        .map(|e| {
            let k = key(e);
            if !e.oriented && e.lag.is_contemporaneous() {
                let flipped = (k.1, k.0, k.2);
                if !truth_keys.contains(&k) && truth_keys.contains(&flipped) {
                    return flipped;
                }
            }
            k
        })
        .collect();
    let hits = found_keys.intersection(&truth_keys).count() as f64;
    let precision = if found_keys.is_empty() {
        1.0
    } else {
        hits / found_keys.len() as f64
    };
    let recall = if truth_keys.is_empty() {
        1.0
    } else {
        hits / truth_keys.len() as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(GraphScore {
        precision,
        recall,
        f1,
    })
}
