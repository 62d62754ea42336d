//! Team-maxmin equilibrium without coordination.
//!
//! Each teammate plays its own realization plan, so the team's payoff is a
//! product of plans and the problem is non-convex. [`solve_tme_local`] is a
//! multistart local search whose value is always certified by an exact
//! adversary best response. Its first start decentralizes the
//! communication-device optimum, which is already optimal when the game has
//! perfect information. [`solve_tme_exact_small`] enumerates a grid of
//! behavioral strategies for tiny games.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::budget::Budget;
use crate::game::{GameTree, PlayerId};
use crate::lp::{solve_lp, LinearProgram, Relation, Sense, Status, Var};
use crate::maxmin::{adversary_response, solve_maxmin, MaxminError};
use crate::observable::TeamPlayerGame;
use crate::sequence::{behavioral_to_realization, build_sequence_form, Behavioral, SequenceError, SequenceForm};
use crate::tmecom::{solve_tmecom, TmeComError};

/// Stop when a sweep gains less than this.
pub const CONVERGENCE_TOL: f64 = 1e-8;
pub const MAX_SWEEPS: usize = 200;
/// Largest number of free behavioral parameters the grid oracle accepts.
pub const GRID_PARAMETER_LIMIT: usize = 8;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TmeError {
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Maxmin(#[from] MaxminError),
    #[error(transparent)]
    Communication(#[from] TmeComError),
    #[error("grid search needs at most {limit} team parameters, game has {params}")]
    TooManyParameters { params: usize, limit: usize },
    #[error("grid resolution must lie in (0, 1], got {0}")]
    BadResolution(f64),
    #[error("at least one restart is required")]
    NoRestarts,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TmeSolution {
    pub value: f64,
    /// One realization plan per team member, in increasing player order.
    pub plans: Vec<Vec<f64>>,
    pub team: Vec<PlayerId>,
    /// Exact adversary best response to `plans`.
    pub adversary_plan: Vec<f64>,
    pub restarts: usize,
    /// True only when the value is provably optimal (a single teammate).
    pub global: bool,
    pub sweeps: usize,
    /// Additive error bound on `value` (grid oracle only).
    pub error_bound: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TmeOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
}

impl Default for TmeOptions {
    fn default() -> Self {
        TmeOptions {
            restarts: 10,
            seed: 0,
            max_sweeps: MAX_SWEEPS,
        }
    }
}

struct Problem<'g> {
    game: &'g GameTree,
    sf: SequenceForm,
    team: Vec<PlayerId>,
    adversary: PlayerId,
}

impl Problem<'_> {
    /// Plans indexed by player id, adversary slot filled with `adv`.
    fn all_plans<'a>(&self, plans: &'a [Vec<f64>], adv: &'a [f64]) -> Vec<&'a [f64]> {
        let mut out: Vec<&[f64]> = vec![adv; self.game.num_players()];
        for (k, &i) in self.team.iter().enumerate() {
            out[i] = &plans[k];
        }
        out
    }

    fn certify(&self, plans: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let dummy = vec![0.0; self.sf.set(self.adversary).len()];
        adversary_response(&self.sf, self.adversary, &self.all_plans(plans, &dummy))
    }

    /// Maxmin for teammate `k` with the other teammates folded into the
    /// payoffs.
    fn improve_member(&self, plans: &[Vec<f64>], k: usize) -> Result<(f64, Vec<f64>), MaxminError> {
        let i = self.team[k];
        let payoff: Vec<(usize, usize, f64)> = self
            .sf
            .terminal
            .iter()
            .filter_map(|t| {
                let mut w = t.utility;
                for (j, &p) in self.team.iter().enumerate() {
                    if j != k {
                        w *= plans[j][t.profile[p]];
                    }
                }
                (w != 0.0).then_some((t.profile[i], t.profile[self.adversary], w))
            })
            .collect();
        let sol = solve_maxmin(self.sf.constraints(i), self.sf.constraints(self.adversary), &payoff)?;
        Ok((sol.value, sol.max_plan))
    }

    /// One sequential-LP step: maximize the adversary's worst case of the
    /// first-order expansion of the product term around `plans`, inside a
    /// box of half-width `radius`.
    fn linearized_step(&self, plans: &[Vec<f64>], radius: f64) -> Result<Option<Vec<Vec<f64>>>, MaxminError> {
        let adv_cs = self.sf.constraints(self.adversary);
        let mut lp = LinearProgram::new(Sense::Maximize);
        let r: Vec<Vec<Var>> = plans
            .iter()
            .map(|p| {
                p.iter()
                    .enumerate()
                    .map(|(q, &x)| {
                        if q == 0 {
                            lp.add_var(0.0, 1.0, 1.0)
                        } else {
                            lp.add_var(0.0, (x - radius).max(0.0), (x + radius).min(1.0))
                        }
                    })
                    .collect()
            })
            .collect();
        let v: Vec<Var> = adv_cs.rhs.iter().map(|&f| lp.add_free(f)).collect();
        let mut rows: Vec<Vec<(Var, f64)>> = vec![Vec::new(); adv_cs.num_sequences];
        let mut rhs = vec![0.0; adv_cs.num_sequences];
        for (k, row) in adv_cs.rows.iter().enumerate() {
            for &(q, c) in row {
                rows[q].push((v[k], c));
            }
        }
        let members = self.team.len() as f64;
        for t in &self.sf.terminal {
            let qa = t.profile[self.adversary];
            let vals: Vec<f64> = self
                .team
                .iter()
                .enumerate()
                .map(|(k, &i)| plans[k][t.profile[i]])
                .collect();
            let full: f64 = vals.iter().product();
            for (k, &i) in self.team.iter().enumerate() {
                let others: f64 = vals
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(_, x)| x)
                    .product();
                let c = t.utility * others;
                if c != 0.0 {
                    rows[qa].push((r[k][t.profile[i]], -c));
                }
            }
            // constant part moves to the right-hand side
            rhs[qa] -= (members - 1.0) * t.utility * full;
        }
        for (row, b) in rows.into_iter().zip(rhs) {
            lp.add_row(row, Relation::Le, b);
        }
        for (k, &i) in self.team.iter().enumerate() {
            let cs = self.sf.constraints(i);
            for (row, &f) in cs.rows.iter().zip(&cs.rhs) {
                lp.add_row(row.iter().map(|&(q, c)| (r[k][q], c)).collect(), Relation::Eq, f);
            }
        }
        let sol = solve_lp(&lp)?;
        if sol.status != Status::Optimal {
            return Ok(None);
        }
        Ok(Some(
            r.iter()
                .map(|vars| vars.iter().map(|x| sol.values[x.0].clamp(0.0, 1.0)).collect())
                .collect(),
        ))
    }

    /// Local search from `plans`: alternating per-member maxmin sweeps, then
    /// trust-region sequential LP, repeated until neither improves.
    fn local_search(
        &self,
        mut plans: Vec<Vec<f64>>,
        max_sweeps: usize,
        budget: &Budget<'_>,
    ) -> Result<(f64, Vec<Vec<f64>>, usize), MaxminError> {
        let (mut value, _) = self.certify(&plans);
        let mut sweeps = 0;
        let mut radius = 0.25;
        while sweeps < max_sweeps && !budget.interrupted() {
            sweeps += 1;
            let start = value;
            for k in 0..self.team.len() {
                let (_, candidate) = self.improve_member(&plans, k)?;
                let mut trial = plans.clone();
                trial[k] = candidate;
                let (v, _) = self.certify(&trial);
                if v > value {
                    value = v;
                    plans = trial;
                }
            }
            if self.team.len() > 1 {
                while radius >= 1e-7 {
                    let Some(trial) = self.linearized_step(&plans, radius)? else {
                        radius *= 0.5;
                        continue;
                    };
                    let (v, _) = self.certify(&trial);
                    if v > value + 1e-14 {
                        value = v;
                        plans = trial;
                        radius = (radius * 2.0).min(1.0);
                        break;
                    }
                    radius *= 0.5;
                }
            }
            if value - start < CONVERGENCE_TOL {
                if radius < 1e-7 {
                    break;
                }
                radius = 1e-8;
            }
        }
        Ok((value, plans, sweeps))
    }
}

fn dirichlet_behavioral(game: &GameTree, rng: &mut impl Rng) -> Behavioral {
    game.infosets()
        .iter()
        .map(|h| {
            let draws: Vec<f64> = (0..h.num_actions())
                .map(|_| {
                    let u: f64 = rng.random();
                    -libm::log(1.0 - u)
                })
                .collect();
            let total: f64 = draws.iter().sum();
            if total > 0.0 {
                draws.iter().map(|d| d / total).collect()
            } else {
                vec![1.0 / h.num_actions() as f64; h.num_actions()]
            }
        })
        .collect()
}

/// Each teammate's share of the communication-device optimum: at every
/// original infoset, the folded plan's action masses summed over the team
/// paths that the teammate cannot observe.
fn projected_behavioral(game: &GameTree) -> Result<Behavioral, TmeError> {
    let com = solve_tmecom(game)?;
    let set = com.sequence_form.set(TeamPlayerGame::TEAM);
    let mut mass: Behavioral = game.infosets().iter().map(|h| vec![0.0; h.num_actions()]).collect();
    for &f in set.infosets() {
        let h = com.observable.provenance[com.folded.origin[f.0].0].original;
        for (a, m) in mass[h.0].iter_mut().enumerate() {
            *m += com.team_plan[set.extension(f, a)].max(0.0);
        }
    }
    for m in &mut mass {
        let total: f64 = m.iter().sum();
        let k = m.len() as f64;
        for x in m.iter_mut() {
            *x = if total > 1e-12 { *x / total } else { 1.0 / k };
        }
    }
    Ok(mass)
}

/// Multistart local search. The first start is the projection of the
/// communication-device optimum; each of the `restarts` further starts uses
/// independent Dirichlet(1, ..., 1) behavioral strategies. The best
/// certified value is returned, ties broken by start order.
pub fn solve_tme_local(game: &GameTree, options: &TmeOptions, budget: &Budget<'_>) -> Result<TmeSolution, TmeError> {
    if options.restarts == 0 {
        return Err(TmeError::NoRestarts);
    }
    let problem = Problem {
        sf: build_sequence_form(game)?,
        team: game.team(),
        adversary: game.adversary(),
        game,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    let mut restarts = 0;
    let mut sweeps = 0;
    while restarts <= options.restarts {
        if restarts > 0 && budget.exhausted(restarts) {
            break;
        }
        let b = if restarts == 0 {
            projected_behavioral(game)?
        } else {
            dirichlet_behavioral(game, &mut rng)
        };
        restarts += 1;
        let plans: Vec<Vec<f64>> = problem
            .team
            .iter()
            .map(|&i| {
                behavioral_to_realization(game, &problem.sf, i, &b)
                    .map(|p| p.probs)
            })
            .collect::<Result<_, _>>()?;
        let (value, plans, used) = problem.local_search(plans, options.max_sweeps, budget)?;
        sweeps += used;
        if best.as_ref().map(|(v, _)| value > *v).unwrap_or(true) {
            best = Some((value, plans));
        }
        if problem.team.len() == 1 {
            break;
        }
    }
    let (_, plans) = best.expect("at least one restart");
    let (value, adversary_plan) = problem.certify(&plans);
    Ok(TmeSolution {
        value,
        plans,
        team: problem.team.clone(),
        adversary_plan,
        restarts,
        global: problem.team.len() == 1,
        sweeps,
        error_bound: None,
    })
}

/// Grid search over team behavioral strategies with step `resolution`.
/// The returned value is achieved exactly; the optimum exceeds it by at most
/// `error_bound = resolution * parameters * max |U|`.
pub fn solve_tme_exact_small(game: &GameTree, resolution: f64) -> Result<TmeSolution, TmeError> {
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(TmeError::BadResolution(resolution));
    }
    let team = game.team();
    let infosets: Vec<crate::InfosetId> = team.iter().flat_map(|&i| game.infosets_of(i)).collect();
    let params: usize = infosets.iter().map(|&h| game.infoset(h).num_actions() - 1).sum();
    if params > GRID_PARAMETER_LIMIT {
        return Err(TmeError::TooManyParameters {
            params,
            limit: GRID_PARAMETER_LIMIT,
        });
    }
    let problem = Problem {
        sf: build_sequence_form(game)?,
        team: team.clone(),
        adversary: game.adversary(),
        game,
    };
    let steps = libm::round(1.0 / resolution).max(1.0) as usize;
    let choices: Vec<Vec<Vec<f64>>> = infosets
        .iter()
        .map(|&h| simplex_grid(game.infoset(h).num_actions(), steps))
        .collect();
    let mut behavioral: Behavioral = game
        .infosets()
        .iter()
        .map(|h| vec![1.0 / h.num_actions() as f64; h.num_actions()])
        .collect();
    let mut idx = vec![0usize; infosets.len()];
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    loop {
        for (k, &h) in infosets.iter().enumerate() {
            behavioral[h.0] = choices[k][idx[k]].clone();
        }
        let plans: Vec<Vec<f64>> = team
            .iter()
            .map(|&i| behavioral_to_realization(game, &problem.sf, i, &behavioral).map(|p| p.probs))
            .collect::<Result<_, _>>()?;
        let (v, _) = problem.certify(&plans);
        if best.as_ref().map(|(b, _)| v > *b).unwrap_or(true) {
            best = Some((v, plans));
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                let (_, plans) = best.expect("grid is non-empty");
                let (value, adversary_plan) = problem.certify(&plans);
                let (lo, hi) = game.utility_range();
                let scale = lo.abs().max(hi.abs());
                return Ok(TmeSolution {
                    value,
                    plans,
                    team,
                    adversary_plan,
                    restarts: 0,
                    global: false,
                    sweeps: 0,
                    error_bound: Some(resolution * params as f64 * scale),
                });
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// All distributions over `k` actions with entries in multiples of
/// `1 / steps`.
fn simplex_grid(k: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, steps: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == k - 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / steps as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(k, left - c, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, steps, steps, &mut Vec::new(), &mut out);
    out
}
