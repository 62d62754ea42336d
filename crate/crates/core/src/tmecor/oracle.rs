use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::plan::{JointReducedPlan, TeamView};
use crate::lp::{solve_lp, solve_milp_with, LinearProgram, LpError, MilpOptions, Relation, Sense, Status, Var};
use crate::game::InfosetId;
use crate::maxmin::best_response;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("best-response program ended with status {0:?}")]
    NotOptimal(Status),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BestResponse {
    pub plan: JointReducedPlan,
    /// Expected team utility of `plan` against the adversary plan.
    pub value: f64,
    /// Proven upper bound on the best achievable value (equal to `value`
    /// when `optimal`); `None` for the approximate oracle.
    pub bound: Option<f64>,
    pub optimal: bool,
    pub nodes: usize,
}

/// The integer program of the team best response.
///
/// A pure team plan reaches at most one node of each adversary infoset and,
/// below each reached adversary action, exactly one leaf or next adversary
/// infoset. The leaf indicators `x` therefore satisfy the adversary's flow
/// equalities, with `y` marking reached adversary infosets, and the leaves
/// sharing an adversary sequence and a member's sequence `q` carry total
/// mass at most `r(q)`. Only adversary sequences played with positive
/// probability enter the program; the others carry no weight.
///
/// Payoffs are shifted to be non-negative; the shift adds a constant since
/// reached-leaf weights under any adversary plan sum to one.
struct BrProgram {
    lp: LinearProgram,
    /// Per member, the variable of each sequence.
    r: Vec<Vec<Var>>,
    /// `(leaf index in the terminal map, variable)`.
    x: Vec<(usize, Var)>,
    /// Adversary infoset and its reach variable.
    y: Vec<(InfosetId, Var)>,
    active: Vec<bool>,
    shift: f64,
}

const ACTIVE_TOL: f64 = 1e-12;

impl BrProgram {
    fn build(view: &TeamView<'_>, adversary_plan: &[f64]) -> Self {
        let (umin, _) = view.game.utility_range();
        let shift = -umin.min(0.0);
        let mut lp = LinearProgram::new(Sense::Maximize);
        let r: Vec<Vec<Var>> = view
            .team
            .iter()
            .map(|&i| (0..view.sf.set(i).len()).map(|_| lp.add_binary(0.0)).collect())
            .collect();
        for (k, &i) in view.team.iter().enumerate() {
            let cs = view.sf.constraints(i);
            for (row, &f) in cs.rows.iter().zip(&cs.rhs) {
                lp.add_row(row.iter().map(|&(q, c)| (r[k][q], c)).collect(), Relation::Eq, f);
            }
        }
        let adv = view.sf.set(view.adversary);
        let active: Vec<bool> = adversary_plan.iter().map(|&p| p > ACTIVE_TOL).collect();
        let mut y = Vec::new();
        let mut y_of = vec![None; view.game.infosets().len()];
        for &h in adv.infosets() {
            if active[adv.entry(h)] {
                let v = lp.add_var(0.0, 0.0, 1.0);
                y.push((h, v));
                y_of[h.0] = Some(v);
            }
        }
        let mut flow: Vec<Vec<(Var, f64)>> = vec![Vec::new(); adv.len()];
        let mut links: BTreeMap<(usize, usize, usize), Vec<(Var, f64)>> = BTreeMap::new();
        let mut x = Vec::new();
        for (t, entry) in view.sf.terminal.iter().enumerate() {
            let qa = entry.profile[view.adversary];
            if !active[qa] {
                continue;
            }
            let w = (entry.utility + shift) * adversary_plan[qa];
            let xl = lp.add_var(w.max(0.0), 0.0, 1.0);
            for (k, &i) in view.team.iter().enumerate() {
                let q = entry.profile[i];
                if q != 0 {
                    links.entry((k, q, qa)).or_default().push((xl, 1.0));
                }
            }
            flow[qa].push((xl, 1.0));
            x.push((t, xl));
        }
        for ((k, q, _), mut row) in links {
            row.push((r[k][q], -1.0));
            lp.add_row(row, Relation::Le, 0.0);
        }
        for (seq, mut row) in flow.into_iter().enumerate() {
            if !active[seq] {
                continue;
            }
            for &h in adv.entered_by(seq) {
                row.push((y_of[h.0].expect("active infoset"), 1.0));
            }
            let rhs = match adv.parent(seq) {
                Some((_, h, _)) => {
                    row.push((y_of[h.0].expect("active infoset"), -1.0));
                    0.0
                }
                None => 1.0,
            };
            lp.add_row(row, Relation::Eq, rhs);
        }
        BrProgram { lp, r, x, y, active, shift }
    }

    fn point(&self, view: &TeamView<'_>, pure: &[Vec<f64>]) -> Vec<f64> {
        let mut v = vec![0.0; self.lp.num_vars()];
        for (k, vars) in self.r.iter().enumerate() {
            for (q, var) in vars.iter().enumerate() {
                v[var.0] = pure[k][q];
            }
        }
        let adv = view.sf.set(view.adversary);
        let mut reach = vec![0.0; adv.len()];
        for &(t, var) in &self.x {
            let profile = &view.sf.terminal[t].profile;
            v[var.0] = view
                .team
                .iter()
                .enumerate()
                .map(|(k, &i)| pure[k][profile[i]])
                .product();
            reach[profile[view.adversary]] += v[var.0];
        }
        // an infoset is reached iff any of its active actions leads on
        let mut y_val = vec![None; view.game.infosets().len()];
        for seq in (0..adv.len()).rev() {
            if !self.active[seq] {
                continue;
            }
            let below: f64 = adv.entered_by(seq).iter().map(|h| y_val[h.0].unwrap_or(0.0)).sum();
            reach[seq] += below;
            if let Some((_, h, _)) = adv.parent(seq) {
                y_val[h.0] = Some(reach[seq]);
            }
        }
        for &(h, var) in &self.y {
            v[var.0] = y_val[h.0].unwrap_or(0.0);
        }
        v
    }

    fn plans_from(&self, values: &[f64]) -> Vec<Vec<f64>> {
        self.r
            .iter()
            .map(|vars| vars.iter().map(|v| values[v.0].clamp(0.0, 1.0)).collect())
            .collect()
    }
}

/// Settings of the exact oracle.
#[derive(Clone, Copy, Default)]
pub struct ExactOracleOptions<'a> {
    pub node_limit: Option<usize>,
    pub should_stop: Option<&'a dyn Fn() -> bool>,
}

impl core::fmt::Debug for ExactOracleOptions<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ExactOracleOptions")
            .field("node_limit", &self.node_limit)
            .finish()
    }
}

/// Best joint pure plan against `adversary_plan`, by branch-and-bound on
/// the integer program. A rounded-and-polished plan seeds the incumbent.
pub fn br_oracle_exact(
    view: &TeamView<'_>,
    adversary_plan: &[f64],
    options: &ExactOracleOptions<'_>,
) -> Result<BestResponse, OracleError> {
    let program = BrProgram::build(view, adversary_plan);
    let relaxed = solve_lp(&program.lp.relaxation())?;
    if relaxed.status != Status::Optimal {
        return Err(OracleError::NotOptimal(relaxed.status));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let relaxed_plans = program.plans_from(&relaxed.values);
    let mut warm = None;
    for _ in 0..4 {
        let pure = polish(view, adversary_plan, sample(view, &relaxed_plans, &mut rng));
        let v = team_value(view, adversary_plan, &pure);
        if warm.as_ref().map(|(best, _)| v > *best).unwrap_or(true) {
            warm = Some((v, pure));
        }
    }
    let (_, warm_plan) = warm.expect("at least one round");
    let sol = solve_milp_with(
        &program.lp,
        &MilpOptions {
            node_limit: options.node_limit,
            incumbent: Some(program.point(view, &warm_plan)),
            should_stop: options.should_stop,
        },
    )?;
    let optimal = match sol.status {
        Status::Optimal => true,
        Status::IterationLimit if !sol.values.is_empty() => false,
        s => return Err(OracleError::NotOptimal(s)),
    };
    let pure: Vec<Vec<f64>> = program
        .plans_from(&sol.values)
        .into_iter()
        .map(|p| p.into_iter().map(libm::round).collect())
        .collect();
    let plan = JointReducedPlan::from_pure(view, pure);
    let value = plan.value_against(view, adversary_plan);
    let bound = if optimal { value } else { sol.bound - program.shift };
    Ok(BestResponse {
        plan,
        value,
        bound: Some(bound.max(value)),
        optimal,
        nodes: sol.nodes,
    })
}

/// LP relaxation of the best-response program, ready for repeated
/// rounding.
#[derive(Clone, Debug)]
pub struct RelaxedOracle<'v, 'g> {
    view: &'v TeamView<'g>,
    adversary_plan: Vec<f64>,
    /// Relaxed realization plan per member.
    pub relaxed: Vec<Vec<f64>>,
    /// Objective of the relaxation (an upper bound on the best response).
    pub relaxation_value: f64,
}

impl<'v, 'g> RelaxedOracle<'v, 'g> {
    pub fn new(view: &'v TeamView<'g>, adversary_plan: &[f64]) -> Result<Self, OracleError> {
        let program = BrProgram::build(view, adversary_plan);
        let sol = solve_lp(&program.lp.relaxation())?;
        if sol.status != Status::Optimal {
            return Err(OracleError::NotOptimal(sol.status));
        }
        Ok(RelaxedOracle {
            view,
            adversary_plan: adversary_plan.to_vec(),
            relaxed: program.plans_from(&sol.values),
            relaxation_value: sol.objective - program.shift,
        })
    }

    /// One rounding: sample each member's plan top-down from the relaxed
    /// conditionals, then improve by per-member best responses until no
    /// member can gain.
    pub fn round(&self, rng: &mut impl Rng) -> BestResponse {
        let pure = polish(
            self.view,
            &self.adversary_plan,
            sample(self.view, &self.relaxed, rng),
        );
        let plan = JointReducedPlan::from_pure(self.view, pure);
        let value = plan.value_against(self.view, &self.adversary_plan);
        BestResponse {
            plan,
            value,
            bound: None,
            optimal: false,
            nodes: 0,
        }
    }

    /// Best of `rounds` roundings; ties go to the smaller key.
    pub fn best_of(&self, rounds: usize, rng: &mut impl Rng) -> BestResponse {
        let mut best = self.round(rng);
        for _ in 1..rounds {
            let next = self.round(rng);
            if next.value > best.value + 1e-12
                || ((next.value - best.value).abs() <= 1e-12 && next.plan.key < best.plan.key)
            {
                best = next;
            }
        }
        best
    }
}

/// Approximate best response: LP relaxation, `rounds` randomized roundings
/// from a generator seeded with `seed`, best one kept.
pub fn br_oracle_approx(
    view: &TeamView<'_>,
    adversary_plan: &[f64],
    rounds: usize,
    seed: u64,
) -> Result<BestResponse, OracleError> {
    let oracle = RelaxedOracle::new(view, adversary_plan)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(oracle.best_of(rounds.max(1), &mut rng))
}

fn sample(view: &TeamView<'_>, relaxed: &[Vec<f64>], rng: &mut impl Rng) -> Vec<Vec<f64>> {
    view.team
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let set = view.sf.set(i);
            let r = &relaxed[k];
            let mut plan = vec![0.0; set.len()];
            plan[0] = 1.0;
            for s in 0..set.len() {
                if plan[s] != 1.0 {
                    continue;
                }
                for &h in set.entered_by(s) {
                    let n = set.num_actions(h);
                    let mass: Vec<f64> = (0..n).map(|a| r[set.extension(h, a)].max(0.0)).collect();
                    let total: f64 = mass.iter().sum();
                    let u: f64 = rng.random();
                    let a = if total <= 1e-12 {
                        ((u * n as f64) as usize).min(n - 1)
                    } else {
                        let mut acc = 0.0;
                        let mut pick = n - 1;
                        for (a, m) in mass.iter().enumerate() {
                            acc += m / total;
                            if u < acc {
                                pick = a;
                                break;
                            }
                        }
                        pick
                    };
                    plan[set.extension(h, a)] = 1.0;
                }
            }
            plan
        })
        .collect()
}

pub(crate) fn team_value(view: &TeamView<'_>, adversary_plan: &[f64], pure: &[Vec<f64>]) -> f64 {
    view.sf
        .terminal
        .iter()
        .map(|t| {
            let team: f64 = view
                .team
                .iter()
                .enumerate()
                .map(|(k, &i)| pure[k][t.profile[i]])
                .product();
            t.utility * team * adversary_plan[t.profile[view.adversary]]
        })
        .sum()
}

/// Coordinate ascent: each member in turn switches to a best response
/// against the others while that strictly helps.
fn polish(view: &TeamView<'_>, adversary_plan: &[f64], mut pure: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut current = team_value(view, adversary_plan, &pure);
    loop {
        let mut improved = false;
        for (k, &i) in view.team.iter().enumerate() {
            let weights: Vec<(usize, f64)> = view
                .sf
                .terminal
                .iter()
                .filter_map(|t| {
                    let mut w = t.utility * adversary_plan[t.profile[view.adversary]];
                    for (j, &p) in view.team.iter().enumerate() {
                        if j != k {
                            w *= pure[j][t.profile[p]];
                        }
                    }
                    (w != 0.0).then_some((t.profile[i], w))
                })
                .collect();
            let (v, plan) = best_response(view.sf.set(i), &weights, true);
            if v > current + 1e-12 {
                pure[k] = plan;
                current = v;
                improved = true;
            }
        }
        if !improved {
            return pure;
        }
    }
}
