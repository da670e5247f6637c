//! Causal discovery for multivariate time series: vector autoregression,
//! conditional Granger causality and PCMCI+ with partial-correlation tests.

mod error;
pub mod linalg;
pub mod mvgc;
pub mod parcorr;
pub mod pcmci;
pub mod stats;
pub mod var;

pub use error::{Error, Result};
pub use mvgc::{feature_select, gc_all_pairs, gc_test, mvgc_graph, GcResult, StatisticKind};
pub use parcorr::{ci_pvalue, ci_test, parcorr, CiTestResult, PartialCorrelation};
pub use pcmci::{
    contemporaneous_phase, mci_prune, pc1_lagged_parents, pcmciplus_run, LaggedVariable,
    ParentSet, PcmciConfig, ScoredParent,
};
pub use stats::benjamini_hochberg;
pub use var::{fit_var, select_order, InfoCriterion, VarModel};
