//! PCMCI+ with partial-correlation tests: lagged condition selection (PC1),
//! momentary conditional independence pruning and a contemporaneous phase.

use std::collections::BTreeSet;

use causalcast_core::{CausalEdge, CausalGraph, Correction, LagSpan, TimeSeriesFrame};

use crate::error::{Error, Result};
use crate::parcorr::{ci_test, CiTestResult};
use crate::var::columns;

/// Variable `var` read at `t - lag`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LaggedVariable {
    pub var: usize,
    pub lag: usize,
}

impl LaggedVariable {
    pub fn new(var: usize, lag: usize) -> Self {
        Self { var, lag }
    }
}

/// A candidate parent with the weakest partial correlation it showed so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredParent {
    pub parent: LaggedVariable,
    pub statistic: f64,
    pub p_value: f64,
}

/// Lagged parents of every variable, each list sorted by `|statistic|`
/// descending with ties broken by `(var, lag)` ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ParentSet {
    pub tau_max: usize,
    pub parents: Vec<Vec<ScoredParent>>,
}

impl ParentSet {
    pub fn n_vars(&self) -> usize {
        self.parents.len()
    }

    pub fn of(&self, var: usize) -> impl Iterator<Item = LaggedVariable> + '_ {
        self.parents[var].iter().map(|p| p.parent)
    }

    pub fn contains(&self, var: usize, parent: LaggedVariable) -> bool {
        self.parents[var].iter().any(|p| p.parent == parent)
    }

    pub fn is_empty(&self) -> bool {
        self.parents.iter().all(Vec::is_empty)
    }
}

fn sort_parents(list: &mut [ScoredParent]) {
    list.sort_by(|a, b| {
        b.statistic
            .abs()
            .total_cmp(&a.statistic.abs())
            .then(a.parent.cmp(&b.parent))
    });
}

/// Run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PcmciConfig {
    pub tau_max: usize,
    /// Level of the condition-selection phase.
    pub alpha_pc: f64,
    /// Level of the final momentary conditional independence tests.
    pub alpha_mci: f64,
    /// Cap on the condition-set size in the selection phase.
    pub max_conds: Option<usize>,
    /// Test and add lag-0 links.
    pub contemporaneous: bool,
}

impl Default for PcmciConfig {
    fn default() -> Self {
        Self {
            tau_max: 21,
            alpha_pc: 0.2,
            alpha_mci: 0.01,
            max_conds: None,
            contemporaneous: true,
        }
    }
}

/// Column-major view of the data for lagged slicing.
struct Lagged {
    cols: Vec<Vec<f64>>,
    n: usize,
}

impl Lagged {
    fn new(frame: &TimeSeriesFrame) -> Result<Self> {
        let cols = columns(frame.complete_values()?);
        Ok(Self {
            n: frame.n_rows(),
            cols,
        })
    }

    fn slice(&self, v: LaggedVariable, t0: usize) -> &[f64] {
        &self.cols[v.var][t0 - v.lag..self.n - v.lag]
    }

    /// Test `x ⊥ y | z` over the rows every lagged term can reach.
    fn test(&self, x: LaggedVariable, y: LaggedVariable, z: &[LaggedVariable]) -> Result<CiTestResult> {
        let t0 = z.iter().chain([&x, &y]).map(|v| v.lag).max().unwrap_or(0);
        if t0 >= self.n {
            return Err(Error::InsufficientSamples {
                required: t0 + 1,
                available: self.n,
            });
        }
        let zs: Vec<&[f64]> = z.iter().map(|&v| self.slice(v, t0)).collect();
        ci_test(self.slice(x, t0), self.slice(y, t0), &zs)
    }
}

fn check_level(name: &str, alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} = {alpha} outside [0, 1]")))
    }
}

fn names(frame: &TimeSeriesFrame) -> Vec<String> {
    frame.names().iter().map(|s| s.to_string()).collect()
}

/// Condition-selection phase.
///
/// For each variable, every lagged candidate `(i, τ)` with `1 ≤ τ ≤ τ_max` is
/// tested against the variable conditioning on the `q` strongest other
/// remaining candidates, for `q = 0, 1, 2, ...`. Candidates with `p > α_pc`
/// are removed after each sweep; the loop ends once fewer than `q + 1`
/// candidates remain or `q` exceeds `max_conds`.
pub fn pc1_lagged_parents(
    frame: &TimeSeriesFrame,
    tau_max: usize,
    alpha_pc: f64,
    max_conds: Option<usize>,
) -> Result<ParentSet> {
    check_level("alpha_pc", alpha_pc)?;
    let v = frame.n_vars();
    if tau_max == 0 {
        return Ok(ParentSet {
            tau_max,
            parents: vec![Vec::new(); v],
        });
    }
    let n = frame.n_rows();
    if n <= v * tau_max {
        return Err(Error::InsufficientSamples {
            required: v * tau_max + 1,
            available: n,
        });
    }
    let data = Lagged::new(frame)?;
    let mut parents = Vec::with_capacity(v);
    for j in 0..v {
        parents.push(pc1_single(&data, j, v, tau_max, alpha_pc, max_conds)?);
    }
    Ok(ParentSet { tau_max, parents })
}

fn pc1_single(
    data: &Lagged,
    j: usize,
    v: usize,
    tau_max: usize,
    alpha_pc: f64,
    max_conds: Option<usize>,
) -> Result<Vec<ScoredParent>> {
    let y = LaggedVariable::new(j, 0);
    let mut current: Vec<ScoredParent> = (0..v)
        .flat_map(|i| (1..=tau_max).map(move |tau| LaggedVariable::new(i, tau)))
        .map(|parent| ScoredParent {
            parent,
            statistic: f64::INFINITY,
            p_value: 0.0,
        })
        .collect();
    let mut q = 0;
    loop {
        if current.len() <= q || max_conds.is_some_and(|m| q > m) {
            break;
        }
        // Condition sets come from the ordering at the start of the sweep.
        let order: Vec<LaggedVariable> = current.iter().map(|p| p.parent).collect();
        let mut keep = Vec::with_capacity(current.len());
        for cand in &current {
            let z: Vec<LaggedVariable> = order
                .iter()
                .copied()
                .filter(|&p| p != cand.parent)
                .take(q)
                .collect();
            let res = data.test(cand.parent, y, &z)?;
            let mut scored = *cand;
            if res.r.abs() < scored.statistic.abs() {
                scored.statistic = res.r;
            }
            scored.p_value = scored.p_value.max(res.p_value);
            if res.p_value <= alpha_pc {
                keep.push(scored);
            }
        }
        current = keep;
        sort_parents(&mut current);
        q += 1;
    }
    Ok(current)
}

/// Momentary conditional independence phase.
///
/// Each surviving candidate `(i, τ) → j` is tested conditioning on the other
/// parents of `j` and on the parents of `i` shifted back by `τ`; links with
/// `p ≤ α` are kept, carrying the MCI partial correlation as their statistic.
pub fn mci_prune(frame: &TimeSeriesFrame, parents: &ParentSet, alpha: f64) -> Result<CausalGraph> {
    check_level("alpha", alpha)?;
    let v = frame.n_vars();
    if parents.n_vars() != v {
        return Err(Error::InvalidArgument(format!(
            "parent set covers {} variables, frame has {v}",
            parents.n_vars()
        )));
    }
    let data = Lagged::new(frame)?;
    let mut edges = Vec::new();
    for j in 0..v {
        let y = LaggedVariable::new(j, 0);
        for x in parents.of(j) {
            let z = mci_conditions(parents, x, j);
            let res = data.test(x, y, &z)?;
            if res.p_value <= alpha {
                edges.push(CausalEdge::new(
                    x.var,
                    j,
                    LagSpan::exact(x.lag),
                    res.r,
                    res.p_value,
                ));
            }
        }
    }
    Ok(CausalGraph::new(
        names(frame),
        "pcmci+",
        alpha,
        Correction::None,
        edges,
    )?)
}

fn mci_conditions(parents: &ParentSet, x: LaggedVariable, j: usize) -> Vec<LaggedVariable> {
    let mut seen = BTreeSet::new();
    seen.insert(x);
    let mut z = Vec::new();
    let shifted = parents
        .of(x.var)
        .map(|p| LaggedVariable::new(p.var, p.lag + x.lag));
    for c in parents.of(j).filter(|&p| p != x).chain(shifted) {
        if seen.insert(c) {
            z.push(c);
        }
    }
    z
}

fn lagged_parent_sets(graph: &CausalGraph, v: usize) -> Vec<Vec<LaggedVariable>> {
    (0..v)
        .map(|j| {
            graph
                .lagged_parents(j)
                .into_iter()
                .map(|(i, tau)| LaggedVariable::new(i, tau))
                .collect()
        })
        .collect()
}

/// Contemporaneous phase.
///
/// Every unordered pair `{a, b}` is tested at lag 0 conditioning on the lagged
/// parents of both; significant pairs become unoriented lag-0 edges. A link
/// `a -- b` is then oriented `a → b` when some lagged parent `k(t−τ)` of `b`
/// that is not a parent of `a` is independent of `a(t)` given `a`'s parents
/// but dependent once `b(t)` is added (an unshielded collider at `b`). Links
/// that would be oriented both ways stay unoriented.
pub fn contemporaneous_phase(
    frame: &TimeSeriesFrame,
    graph: &CausalGraph,
    alpha: f64,
) -> Result<CausalGraph> {
    check_level("alpha", alpha)?;
    let v = frame.n_vars();
    if graph.variables.len() != v {
        return Err(Error::InvalidArgument(
            "graph and frame have different variables".into(),
        ));
    }
    if v < 2 {
        return Ok(graph.clone());
    }
    let data = Lagged::new(frame)?;
    let lagged = lagged_parent_sets(graph, v);
    let mut links = Vec::new();
    for a in 0..v {
        for b in a + 1..v {
            let mut z: Vec<LaggedVariable> = lagged[a].clone();
            for &p in &lagged[b] {
                if !z.contains(&p) {
                    z.push(p);
                }
            }
            let res = data.test(LaggedVariable::new(a, 0), LaggedVariable::new(b, 0), &z)?;
            if res.p_value <= alpha {
                links.push((a, b, res));
            }
        }
    }

    let mut edges = Vec::with_capacity(links.len());
    for &(a, b, res) in &links {
        let a_to_b = collider_at(&data, &lagged, a, b, alpha)?;
        let b_to_a = collider_at(&data, &lagged, b, a, alpha)?;
        let (cause, effect, oriented) = match (a_to_b, b_to_a) {
            (true, false) => (a, b, true),
            (false, true) => (b, a, true),
            _ => (a, b, false),
        };
        edges.push(CausalEdge {
            oriented,
            ..CausalEdge::new(cause, effect, LagSpan::exact(0), res.r, res.p_value)
        });
    }
    let mut out = graph.clone();
    out.extend(edges)?;
    Ok(out)
}

/// Whether a lagged parent of `b` forms an unshielded collider `k(t−τ) → b(t) ← a(t)`.
fn collider_at(
    data: &Lagged,
    lagged: &[Vec<LaggedVariable>],
    a: usize,
    b: usize,
    alpha: f64,
) -> Result<bool> {
    let xa = LaggedVariable::new(a, 0);
    let xb = LaggedVariable::new(b, 0);
    for &k in &lagged[b] {
        if k.var == a || lagged[a].contains(&k) {
            continue;
        }
        let s = lagged[a].clone();
        let sep = data.test(k, xa, &s)?;
        if sep.p_value <= alpha {
            continue;
        }
        let mut s_b = s;
        s_b.push(xb);
        if data.test(k, xa, &s_b)?.p_value <= alpha {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Full PCMCI+ run: condition selection, MCI pruning and (optionally) the
/// contemporaneous phase at `alpha_mci`.
pub fn pcmciplus_run(frame: &TimeSeriesFrame, config: &PcmciConfig) -> Result<CausalGraph> {
    let parents = pc1_lagged_parents(frame, config.tau_max, config.alpha_pc, config.max_conds)?;
    let lagged = mci_prune(frame, &parents, config.alpha_mci)?;
    if config.contemporaneous {
        contemporaneous_phase(frame, &lagged, config.alpha_mci)
    } else {
        Ok(lagged)
    }
}
