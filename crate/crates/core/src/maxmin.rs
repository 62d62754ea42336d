//! Two-player zero-sum games in sequence form.
//!
//! [`solve_maxmin`] builds
//!
//! ```text
//! max  f_B^T v
//! s.t. F_B^T v - U^T r <= 0     (one row per sequence of the minimizer)
//!      F_A r = f_A,  r >= 0,  v free
//! ```
//!
//! and reads the minimizer's realization plan off the duals of the first
//! block of rows. [`best_response`] is the exact single-player optimum
//! against fixed leaf weights, computed bottom-up over the sequence tree.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::lp::{solve_lp, LinearProgram, LpError, Relation, Sense, Status, Var};
use crate::sequence::{ConstraintSystem, SequenceForm, SequenceSet};
use crate::PlayerId;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum MaxminError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("maxmin program ended with status {0:?}")]
    NotOptimal(Status),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxminSolution {
    pub value: f64,
    pub max_plan: Vec<f64>,
    pub min_plan: Vec<f64>,
    pub iterations: usize,
}

/// `payoff` lists `(max sequence, min sequence, utility to the maximizer)`;
/// repeated pairs are summed.
pub fn solve_maxmin(
    max_cs: &ConstraintSystem,
    min_cs: &ConstraintSystem,
    payoff: &[(usize, usize, f64)],
) -> Result<MaxminSolution, MaxminError> {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let r: Vec<Var> = (0..max_cs.num_sequences).map(|_| lp.add_nonneg(0.0)).collect();
    let v: Vec<Var> = min_cs.rhs.iter().map(|&f| lp.add_free(f)).collect();

    let mut by_min: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); min_cs.num_sequences];
    for &(a, b, u) in payoff {
        if u != 0.0 {
            *by_min[b].entry(a).or_insert(0.0) += u;
        }
    }
    let mut transposed: Vec<Vec<(Var, f64)>> = vec![Vec::new(); min_cs.num_sequences];
    for (k, row) in min_cs.rows.iter().enumerate() {
        for &(q, c) in row {
            transposed[q].push((v[k], c));
        }
    }
    for (q, mut coeffs) in transposed.into_iter().enumerate() {
        coeffs.extend(by_min[q].iter().map(|(&a, &u)| (r[a], -u)));
        lp.add_row(coeffs, Relation::Le, 0.0);
    }
    for (row, &f) in max_cs.rows.iter().zip(&max_cs.rhs) {
        lp.add_row(row.iter().map(|&(q, c)| (r[q], c)).collect(), Relation::Eq, f);
    }
    let sol = solve_lp(&lp)?;
    if sol.status != Status::Optimal {
        return Err(MaxminError::NotOptimal(sol.status));
    }
    let max_plan = r.iter().map(|x| sol.values[x.0].max(0.0)).collect();
    let min_plan = sol.duals[..min_cs.num_sequences]
        .iter()
        .map(|&d| d.max(0.0))
        .collect();
    Ok(MaxminSolution {
        value: sol.objective,
        max_plan,
        min_plan,
        iterations: sol.iterations,
    })
}

/// Optimal pure plan of one player against fixed per-sequence weights
/// (`contributions` lists `(sequence, weight)`, repeats summed). Ties go to
/// the lowest action index.
pub fn best_response(set: &SequenceSet, contributions: &[(usize, f64)], maximize: bool) -> (f64, Vec<f64>) {
    let sign = if maximize { 1.0 } else { -1.0 };
    let mut value = vec![0.0; set.len()];
    for &(q, w) in contributions {
        value[q] += sign * w;
    }
    let mut choice: BTreeMap<usize, usize> = BTreeMap::new();
    for s in (0..set.len()).rev() {
        for &h in set.entered_by(s) {
            let (a, best) = best_action(set, &value, h);
            choice.insert(h.0, a);
            value[s] += best;
        }
    }
    let mut plan = vec![0.0; set.len()];
    plan[0] = 1.0;
    for s in 0..set.len() {
        if plan[s] == 1.0 {
            for &h in set.entered_by(s) {
                plan[set.extension(h, choice[&h.0])] = 1.0;
            }
        }
    }
    (sign * value[0], plan)
}

fn best_action(set: &SequenceSet, value: &[f64], h: crate::InfosetId) -> (usize, f64) {
    let mut best = (0, value[set.extension(h, 0)]);
    for a in 1..set.num_actions(h) {
        let v = value[set.extension(h, a)];
        if v > best.1 + 1e-12 {
            best = (a, v);
        }
    }
    best
}

/// Same optimum as [`best_response`], solved as an LP over the flow
/// polytope. Used to cross-check the bottom-up computation.
pub fn best_response_lp(
    cs: &ConstraintSystem,
    contributions: &[(usize, f64)],
    maximize: bool,
) -> Result<(f64, Vec<f64>), MaxminError> {
    let mut lp = LinearProgram::new(if maximize { Sense::Maximize } else { Sense::Minimize });
    let r: Vec<Var> = (0..cs.num_sequences).map(|_| lp.add_nonneg(0.0)).collect();
    for &(q, w) in contributions {
        lp.objective[q] += w;
    }
    for (row, &f) in cs.rows.iter().zip(&cs.rhs) {
        lp.add_row(row.iter().map(|&(q, c)| (r[q], c)).collect(), Relation::Eq, f);
    }
    let sol = solve_lp(&lp)?;
    if sol.status != Status::Optimal {
        return Err(MaxminError::NotOptimal(sol.status));
    }
    Ok((sol.objective, sol.values))
}

/// Per-sequence weights that `player` faces when every other player's plan
/// is fixed: `sum over leaves through q of U(l) * prod_{j != player} r_j`.
/// `plans` is indexed by player id; the entry of `player` is ignored.
pub fn induced_weights(sf: &SequenceForm, player: PlayerId, plans: &[&[f64]]) -> Vec<(usize, f64)> {
    sf.terminal
        .iter()
        .filter_map(|t| {
            let mut w = t.utility;
            for (j, &q) in t.profile.iter().enumerate() {
                if j != player {
                    w *= plans[j][q];
                }
            }
            (w != 0.0).then_some((t.profile[player], w))
        })
        .collect()
}

/// Exact adversary best response (minimizing team utility) against fixed
/// team plans.
pub fn adversary_response(sf: &SequenceForm, adversary: PlayerId, plans: &[&[f64]]) -> (f64, Vec<f64>) {
    let w = induced_weights(sf, adversary, plans);
    best_response(sf.set(adversary), &w, false)
}
