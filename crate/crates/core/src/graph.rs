//! Lagged causal graphs produced by the discovery methods and by the synthetic generator.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lag (or block of lags) of a causal link, in cadence steps.
///
/// Lag-specific methods produce `lo == hi`; a block test over lags `1..=p`
/// produces `LagSpan { lo: 1, hi: p }`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LagSpan {
    pub lo: usize,
    pub hi: usize,
}

impl LagSpan {
    pub fn exact(lag: usize) -> Self {
        Self { lo: lag, hi: lag }
    }

    pub fn block(lo: usize, hi: usize) -> Self {
        assert!(lo <= hi, "empty lag block");
        Self { lo, hi }
    }

    pub fn is_contemporaneous(&self) -> bool {
        self.hi == 0
    }
}

impl fmt::Display for LagSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}-{}", self.lo, self.hi)
        }
    }
}

impl FromStr for LagSpan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidGraph(format!("bad lag {s:?}"));
        match s.split_once('-') {
            Some((a, b)) => {
                let lo = a.parse().map_err(|_| bad())?;
                let hi = b.parse().map_err(|_| bad())?;
                if lo > hi {
                    return Err(bad());
                }
                Ok(Self { lo, hi })
            }
            None => Ok(Self::exact(s.parse().map_err(|_| bad())?)),
        }
    }
}

/// Multiple-testing correction applied to a graph's p-values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Correction {
    None,
    BenjaminiHochberg,
}

impl Correction {
    pub fn as_str(self) -> &'static str {
        match self {
            Correction::None => "none",
            Correction::BenjaminiHochberg => "benjamini-hochberg",
        }
    }
}

impl FromStr for Correction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Correction::None),
            "benjamini-hochberg" | "bh" | "fdr_bh" => Ok(Correction::BenjaminiHochberg),
            _ => Err(Error::InvalidArgument(format!("unknown correction {s:?}"))),
        }
    }
}

/// A directed link `cause(t - lag) -> effect(t)`.
///
/// Contemporaneous links the discovery could not orient have `oriented == false`
/// and are stored once with `cause < effect`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalEdge {
    pub cause: usize,
    pub effect: usize,
    pub lag: LagSpan,
    pub statistic: f64,
    pub p_raw: f64,
    pub p_corrected: f64,
    pub oriented: bool,
}

impl CausalEdge {
    pub fn new(cause: usize, effect: usize, lag: LagSpan, statistic: f64, p: f64) -> Self {
        Self {
            cause,
            effect,
            lag,
            statistic,
            p_raw: p,
            p_corrected: p,
            oriented: true,
        }
    }

    pub fn touches(&self, var: usize) -> bool {
        self.cause == var || self.effect == var
    }
}

/// Discovered (or ground-truth) causal structure over a frame's variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalGraph {
    pub variables: Vec<String>,
    pub method: String,
    pub alpha: f64,
    pub correction: Correction,
    edges: Vec<CausalEdge>,
}

impl CausalGraph {
    pub fn empty(variables: Vec<String>, method: impl Into<String>, alpha: f64, correction: Correction) -> Self {
        Self {
            variables,
            method: method.into(),
            alpha,
            correction,
            edges: Vec::new(),
        }
    }

    /// Build a graph, enforcing the edge invariants and sorting edges by
    /// `(cause, effect, lag)`.
    pub fn new(
        variables: Vec<String>,
        method: impl Into<String>,
        alpha: f64,
        correction: Correction,
        edges: Vec<CausalEdge>,
    ) -> Result<Self> {
        let mut g = Self::empty(variables, method, alpha, correction);
        for e in edges {
            g.push(e)?;
        }
        g.sort();
        Ok(g)
    }

    fn sort(&mut self) {
        self.edges
            .sort_by(|a, b| (a.cause, a.effect, a.lag).cmp(&(b.cause, b.effect, b.lag)));
    }

    fn push(&mut self, e: CausalEdge) -> Result<()> {
        let v = self.variables.len();
        if e.cause >= v || e.effect >= v {
            return Err(Error::InvalidGraph(format!(
                "edge {}->{} references a variable outside 0..{v}",
                e.cause, e.effect
            )));
        }
        if e.lag.is_contemporaneous() && e.cause == e.effect {
            return Err(Error::InvalidGraph(format!(
                "self-edge at lag 0 on {:?}",
                self.variables[e.cause]
            )));
        }
        if !(0.0..=1.0).contains(&e.p_raw) || !(0.0..=1.0).contains(&e.p_corrected) {
            return Err(Error::InvalidGraph("p-value outside [0, 1]".into()));
        }
        let dup = self.edges.iter().any(|o| {
            o.lag == e.lag
                && ((o.cause == e.cause && o.effect == e.effect)
                    || (e.lag.is_contemporaneous() && o.cause == e.effect && o.effect == e.cause))
        });
        if dup {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge {} -> {} at lag {}",
                self.variables[e.cause], self.variables[e.effect], e.lag
            )));
        }
        self.edges.push(e);
        Ok(())
    }

    /// Add edges to an existing graph, keeping the sort order.
    pub fn extend(&mut self, edges: impl IntoIterator<Item = CausalEdge>) -> Result<()> {
        for e in edges {
            self.push(e)?;
        }
        self.sort();
        Ok(())
    }

    pub fn edges(&self) -> &[CausalEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Lagged parents `(cause, lag)` of `effect`, from exact-lag edges with lag ≥ 1.
    pub fn lagged_parents(&self, effect: usize) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .filter(|e| e.effect == effect && e.lag.lo == e.lag.hi && e.lag.lo > 0)
            .map(|e| (e.cause, e.lag.lo))
            .collect()
    }

    /// Variables with a link into `target` (or an unoriented contemporaneous link
    /// touching it), plus `target` itself, in variable order.
    pub fn select_features(&self, target: &str) -> Result<Vec<String>> {
        let t = self.index_of(target)?;
        let mut keep = vec![false; self.variables.len()];
        keep[t] = true;
        for e in &self.edges {
            if e.effect == t {
                keep[e.cause] = true;
            } else if !e.oriented && e.cause == t {
                keep[e.effect] = true;
            }
        }
        Ok(self
            .variables
            .iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(v, _)| v.clone())
            .collect())
    }

    /// Text edge list: a `#` metadata line, a column header, then one edge per line.
    pub fn write_edge_list<W: Write>(&self, mut w: W, with_orientation: bool) -> Result<()> {
        let io = |e| Error::io("<edge list>", e);
        writeln!(
            w,
            "# method={} alpha={} correction={}",
            self.method,
            self.alpha,
            self.correction.as_str()
        )
        .map_err(io)?;
        let mut header = String::from("cause,effect,lag,statistic,p_raw,p_corrected");
        if with_orientation {
            header.push_str(",oriented");
        }
        writeln!(w, "{header}").map_err(io)?;
        for e in &self.edges {
            write!(
                w,
                "{},{},{},{},{},{}",
                csv_field(&self.variables[e.cause]),
                csv_field(&self.variables[e.effect]),
                e.lag,
                e.statistic,
                e.p_raw,
                e.p_corrected
            )
            .map_err(io)?;
            if with_orientation {
                write!(w, ",{}", e.oriented).map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        Ok(())
    }

    pub fn to_edge_list(&self, with_orientation: bool) -> String {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf, with_orientation)
            .expect("writing to memory");
        String::from_utf8(buf).expect("utf-8")
    }

    /// Parse the format written by [`CausalGraph::write_edge_list`].
    pub fn parse_edge_list(text: &str, variables: Vec<String>) -> Result<Self> {
        let mut lines = text.lines();
        let meta = lines
            .next()
            .and_then(|l| l.strip_prefix("# "))
            .ok_or_else(|| Error::InvalidGraph("missing metadata line".into()))?;
        let mut method = String::new();
        let mut alpha = f64::NAN;
        let mut correction = Correction::None;
        for kv in meta.split_whitespace() {
            match kv.split_once('=') {
                Some(("method", v)) => method = v.to_string(),
                Some(("alpha", v)) => {
                    alpha = v
                        .parse()
                        .map_err(|_| Error::InvalidGraph(format!("bad alpha {v:?}")))?
                }
                Some(("correction", v)) => correction = v.parse()?,
                _ => return Err(Error::InvalidGraph(format!("bad metadata {kv:?}"))),
            }
        }
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidGraph("missing column header".into()))?;
        let oriented_col = header.ends_with(",oriented");
        let body: String = lines.map(|l| format!("{l}\n")).collect();
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(body.as_bytes());
        let mut edges = Vec::new();
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidGraph(format!("bad number {s:?}")))
        };
        let index = |name: &str| -> Result<usize> {
            variables
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| Error::UnknownVariable(name.to_string()))
        };
        for rec in rdr.records() {
            let rec = rec?;
            let f = |i: usize| rec.get(i).unwrap_or_default();
            edges.push(CausalEdge {
                cause: index(f(0))?,
                effect: index(f(1))?,
                lag: f(2).parse()?,
                statistic: num(f(3))?,
                p_raw: num(f(4))?,
                p_corrected: num(f(5))?,
                oriented: if oriented_col { f(6) == "true" } else { true },
            });
        }
        Self::new(variables, method, alpha, correction, edges)
    }

    /// Adjacency summary keyed by effect variable name.
    pub fn adjacency_json(&self) -> serde_json::Value {
        let mut map: BTreeMap<&str, Vec<serde_json::Value>> = self
            .variables
            .iter()
            .map(|v| (v.as_str(), Vec::new()))
            .collect();
        for e in &self.edges {
            map.get_mut(self.variables[e.effect].as_str())
                .expect("effect is a variable")
                .push(serde_json::json!({
                    "cause": self.variables[e.cause],
                    "lag": e.lag.to_string(),
                    "statistic": finite_or_null(e.statistic),
                    "p_raw": e.p_raw,
                    "p_corrected": e.p_corrected,
                    "oriented": e.oriented,
                }));
        }
        serde_json::to_value(map).expect("json map")
    }
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::Value::String(x.to_string())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
