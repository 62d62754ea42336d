//! Team-maxmin equilibrium with a correlation device.
//!
//! The team mixes over jointly-reduced pure plans while the adversary keeps
//! its sequence form. Column generation alternates between the restricted
//! hybrid LP and a best-response oracle until the oracle returns a plan
//! already in the restricted set.

mod hybrid;
mod oracle;
mod plan;

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

pub use hybrid::{hybrid_maxmin, hybrid_minmax, HybridSolution};
pub use oracle::{br_oracle_approx, br_oracle_exact, BestResponse, ExactOracleOptions, OracleError, RelaxedOracle};
pub use plan::{JointReducedPlan, TeamView};

use crate::budget::Budget;
use crate::game::{GameTree, NodeId};
use crate::maxmin::MaxminError;
use crate::sequence::SequenceError;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TmeCorError {
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Hybrid(#[from] MaxminError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    Exact,
    Approx { rounds: usize, seed: u64 },
}

impl OracleKind {
    pub const DEFAULT_ROUNDS: usize = 64;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TmeCorOptions {
    pub oracle: OracleKind,
    /// Branch-and-bound node limit per exact oracle call.
    pub node_limit: Option<usize>,
    /// Also stop once the exact oracle cannot beat the restricted value.
    pub gap_stop: bool,
}

impl Default for TmeCorOptions {
    fn default() -> Self {
        TmeCorOptions {
            oracle: OracleKind::Exact,
            node_limit: None,
            gap_stop: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// The oracle returned a plan equivalent to a generated column.
    KnownResponse,
    /// The exact oracle value did not exceed the restricted value.
    GapClosed,
    /// The exact oracle stopped before proving optimality.
    OracleLimit,
    IterationLimit,
    Interrupted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// Restricted value before this iteration's column is added (`None`
    /// before the first column).
    pub restricted_value: Option<f64>,
    pub oracle_value: f64,
    pub key_hash: u64,
    pub new_column: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TmeCorSolution {
    pub value: f64,
    pub columns: Vec<JointReducedPlan>,
    /// Probability of each column.
    pub sigma: Vec<f64>,
    pub adversary_plan: Vec<f64>,
    /// Number of columns generated.
    pub iterations: usize,
    /// Columns with positive probability.
    pub support: usize,
    pub termination: Termination,
    /// Smallest proven best-response value seen (exact oracle only); an
    /// upper bound on the equilibrium value.
    pub upper_bound: Option<f64>,
    pub trace: Vec<TraceRow>,
}

impl TmeCorSolution {
    pub fn gap(&self) -> Option<f64> {
        self.upper_bound.map(|u| (u - self.value).max(0.0))
    }
}

const SUPPORT_TOL: f64 = 1e-9;

pub fn solve_tmecor(game: &GameTree, options: &TmeCorOptions, budget: &Budget<'_>) -> Result<TmeCorSolution, TmeCorError> {
    let view = TeamView::new(game)?;
    let adv_cs = view.sf.constraints(view.adversary);
    let mut adversary_plan = view.uniform_adversary_plan();
    let mut columns: Vec<JointReducedPlan> = Vec::new();
    let mut utilities: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut keys: BTreeSet<Vec<NodeId>> = BTreeSet::new();
    let mut restricted: Option<HybridSolution> = None;
    let mut upper_bound: Option<f64> = None;
    let mut trace = Vec::new();
    let exact = options.oracle == OracleKind::Exact;

    let termination = loop {
        let done = columns.len();
        if budget.max_iterations().map(|m| done >= m).unwrap_or(false) {
            break Termination::IterationLimit;
        }
        if budget.interrupted() {
            break Termination::Interrupted;
        }
        let br = match options.oracle {
            OracleKind::Exact => br_oracle_exact(
                &view,
                &adversary_plan,
                &ExactOracleOptions {
                    node_limit: options.node_limit,
                    should_stop: budget.stop_predicate(),
                },
            )?,
            OracleKind::Approx { rounds, seed } => {
                br_oracle_approx(&view, &adversary_plan, rounds, seed.wrapping_add(done as u64))?
            }
        };
        if let Some(b) = br.bound {
            upper_bound = Some(upper_bound.map_or(b, |u: f64| u.min(b)));
        }
        let current = restricted.as_ref().map(|r| r.value);
        let known = keys.contains(&br.plan.key);
        trace.push(TraceRow {
            iteration: done,
            restricted_value: current,
            oracle_value: br.value,
            key_hash: br.plan.key_hash(),
            new_column: !known,
        });
        if known {
            break Termination::KnownResponse;
        }
        if exact && !br.optimal {
            break if budget.interrupted() {
                Termination::Interrupted
            } else {
                Termination::OracleLimit
            };
        }
        if exact && options.gap_stop {
            if let Some(v) = current {
                if br.value <= v + 1e-9 {
                    break Termination::GapClosed;
                }
            }
        }
        keys.insert(br.plan.key.clone());
        utilities.push(br.plan.utilities(&view));
        columns.push(br.plan);
        let sol = hybrid_maxmin(adv_cs, &utilities)?;
        let (_, plan) = hybrid_minmax(adv_cs, &utilities)?;
        adversary_plan = plan;
        restricted = Some(sol);
    };

    let mut sol = match restricted {
        Some(s) => s,
        None => {
            // stopped before any column: report the first oracle answer
            let br = br_oracle_exact(&view, &adversary_plan, &ExactOracleOptions::default())?;
            utilities.push(br.plan.utilities(&view));
            columns.push(br.plan);
            hybrid_maxmin(adv_cs, &utilities)?
        }
    };
    // keep a basic solution: if the support bound is exceeded, re-solve on
    // the support alone
    let support = |s: &[f64]| s.iter().filter(|&&p| p > SUPPORT_TOL).count();
    if support(&sol.sigma) > view.adversary_sequences() {
        let keep: Vec<usize> = (0..columns.len()).filter(|&p| sol.sigma[p] > SUPPORT_TOL).collect();
        let sub: Vec<Vec<(usize, f64)>> = keep.iter().map(|&p| utilities[p].clone()).collect();
        let pruned = hybrid_maxmin(adv_cs, &sub)?;
        if (pruned.value - sol.value).abs() <= 1e-9 {
            let mut sigma = alloc::vec![0.0; columns.len()];
            for (k, &p) in keep.iter().enumerate() {
                sigma[p] = pruned.sigma[k];
            }
            sol.sigma = sigma;
        }
    }
    let support_size = support(&sol.sigma);
    Ok(TmeCorSolution {
        value: sol.value,
        iterations: columns.len(),
        columns,
        sigma: sol.sigma,
        adversary_plan,
        support: support_size,
        termination,
        upper_bound,
        trace,
    })
}

#[cfg(test)]
mod tests;
