//! Running one solver on one game under a time limit.

use std::time::{Duration, Instant};

use teamgame_core::game::GameTree;
use teamgame_core::inefficiency::{compute_pou, normalize_payoffs, InefficiencyError, Normalization, PoUReport};
use teamgame_core::tme::{solve_tme_exact_small, solve_tme_local, TmeOptions, TmeSolution};
use teamgame_core::tmecom::{extract_recommendations, solve_tmecom};
use teamgame_core::tmecor::{solve_tmecor, OracleKind, Termination, TmeCorOptions};
use teamgame_core::Budget;

use crate::record::{Column, Equilibrium, GameInfo, Recommendation, RunStatus, SolutionRecord, Strategy, TraceEntry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleChoice {
    Exact,
    Approx,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverSettings {
    pub oracle: OracleChoice,
    pub rounds: usize,
    pub seed: u64,
    pub time_limit: Option<Duration>,
    pub restarts: usize,
    pub node_limit: Option<usize>,
    /// Grid step for the exact TME oracle; the local search is used when
    /// `None` or when the game has too many team parameters.
    pub tme_grid: Option<f64>,
    pub keep_strategy: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            oracle: OracleChoice::Exact,
            rounds: OracleKind::DEFAULT_ROUNDS,
            seed: 0,
            time_limit: None,
            restarts: TmeOptions::default().restarts,
            node_limit: None,
            tme_grid: None,
            keep_strategy: true,
        }
    }
}

pub fn game_info(game: &GameTree, game_id: &str) -> GameInfo {
    GameInfo {
        game_id: game_id.to_string(),
        players: game.num_players(),
        depth: game.max_depth(),
        nu: None,
        seed: None,
    }
}

/// Runs one solver. Failures are reported through the record status.
pub fn run_solver(game: &GameTree, info: &GameInfo, eq: Equilibrium, settings: &SolverSettings) -> SolutionRecord {
    let start = Instant::now();
    let stop = move || settings.time_limit.map(|t| start.elapsed() >= t).unwrap_or(false);
    let budget = Budget::unlimited().with_stop(&stop);
    let mut record = SolutionRecord {
        game: info.clone(),
        eq,
        value: f64::NAN,
        support: None,
        iterations: 0,
        status: RunStatus::Optimal,
        upper_bound: None,
        seconds: 0.0,
        strategy: None,
        trace: Vec::new(),
    };
    let outcome = match eq {
        Equilibrium::Tmecom => run_tmecom(game, &mut record, settings),
        Equilibrium::Tmecor => run_tmecor(game, &mut record, settings, &budget),
        Equilibrium::Tme => run_tme(game, &mut record, settings, &budget),
    };
    if let Err(message) = outcome {
        record.status = RunStatus::Error(message);
    }
    record.seconds = start.elapsed().as_secs_f64();
    if !record.status.is_error() && stop() && record.status == RunStatus::Optimal && eq == Equilibrium::Tmecom {
        // the single LP cannot be interrupted; flag the overrun
        record.status = RunStatus::TimeLimit;
    }
    if !settings.keep_strategy {
        record.strategy = None;
    }
    record
}

fn run_tmecom(game: &GameTree, record: &mut SolutionRecord, _: &SolverSettings) -> Result<(), String> {
    let sol = solve_tmecom(game).map_err(|e| e.to_string())?;
    record.value = sol.value;
    record.iterations = sol.iterations;
    let recommendations = extract_recommendations(&sol)
        .into_iter()
        .map(|r| Recommendation {
            player: r.player,
            infoset: game.infoset(r.infoset).label,
            team_path: r
                .team_path
                .iter()
                .map(|&(h, a)| {
                    let info = game.infoset(h);
                    (info.player, info.label, a)
                })
                .collect(),
            distribution: r.distribution,
            unreachable: r.unreachable,
        })
        .collect();
    record.strategy = Some(Strategy::Tmecom {
        team_plan: sol.team_plan,
        adversary_plan: sol.adversary_plan,
        recommendations,
    });
    Ok(())
}

fn run_tmecor(
    game: &GameTree,
    record: &mut SolutionRecord,
    settings: &SolverSettings,
    budget: &Budget<'_>,
) -> Result<(), String> {
    let oracle = match settings.oracle {
        OracleChoice::Exact => OracleKind::Exact,
        OracleChoice::Approx => OracleKind::Approx {
            rounds: settings.rounds,
            seed: settings.seed,
        },
    };
    let options = TmeCorOptions {
        oracle,
        node_limit: settings.node_limit,
        gap_stop: false,
    };
    let sol = solve_tmecor(game, &options, budget).map_err(|e| e.to_string())?;
    record.value = sol.value;
    record.support = Some(sol.support);
    record.iterations = sol.iterations;
    record.upper_bound = sol.upper_bound;
    record.status = match (sol.termination, settings.oracle) {
        (Termination::KnownResponse | Termination::GapClosed, OracleChoice::Exact) => RunStatus::Optimal,
        (Termination::KnownResponse | Termination::GapClosed, OracleChoice::Approx) => RunStatus::Local,
        (Termination::Interrupted, _) => RunStatus::TimeLimit,
        (Termination::OracleLimit | Termination::IterationLimit, _) => match sol.gap() {
            Some(g) => RunStatus::Gap(g),
            None => RunStatus::Local,
        },
    };
    record.trace = sol
        .trace
        .iter()
        .map(|t| TraceEntry {
            iteration: t.iteration,
            restricted_value: t.restricted_value,
            oracle_value: t.oracle_value,
            key_hash: t.key_hash,
            new_column: t.new_column,
        })
        .collect();
    let columns = sol
        .columns
        .iter()
        .zip(&sol.sigma)
        .filter(|(_, &p)| p > 1e-9)
        .map(|(c, &p)| Column {
            probability: p,
            sequences: c.terminal_sequences.clone(),
            leaves: c.key.iter().map(|n| n.0).collect(),
        })
        .collect();
    record.strategy = Some(Strategy::Tmecor {
        columns,
        adversary_plan: sol.adversary_plan,
    });
    Ok(())
}

fn run_tme(game: &GameTree, record: &mut SolutionRecord, settings: &SolverSettings, budget: &Budget<'_>) -> Result<(), String> {
    let grid = settings.tme_grid.and_then(|eps| solve_tme_exact_small(game, eps).ok());
    let sol: TmeSolution = match grid {
        Some(sol) => sol,
        None => {
            let options = TmeOptions {
                restarts: settings.restarts,
                seed: settings.seed,
                ..TmeOptions::default()
            };
            solve_tme_local(game, &options, budget).map_err(|e| e.to_string())?
        }
    };
    record.value = sol.value;
    record.iterations = sol.restarts;
    record.status = if let Some(bound) = sol.error_bound {
        record.upper_bound = Some(sol.value + bound);
        RunStatus::Gap(bound)
    } else if sol.global {
        RunStatus::Optimal
    } else if budget.interrupted() {
        RunStatus::TimeLimit
    } else {
        RunStatus::Local
    };
    record.strategy = Some(Strategy::Tme {
        team: sol.team,
        plans: sol.plans,
        adversary_plan: sol.adversary_plan,
    });
    Ok(())
}

/// How payoffs are brought into `[0, 1]` before computing indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NormalizationMode {
    /// Keep payoffs that already lie in `[0, 1]`; rescale anything else.
    #[default]
    IfNeeded,
    /// Always map the attained range onto `[0, 1]`.
    Always,
}

pub fn prepare_for_pou(game: &GameTree, mode: NormalizationMode) -> Result<(GameTree, Normalization), InefficiencyError> {
    let (lo, hi) = game.utility_range();
    if mode == NormalizationMode::IfNeeded && lo >= 0.0 && hi <= 1.0 && hi > lo {
        return Ok((game.clone(), Normalization::IDENTITY));
    }
    normalize_payoffs(game)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PouRun {
    pub report: PoUReport,
    pub records: Vec<SolutionRecord>,
}

/// Runs all three solvers on the normalized game and forms the indices.
pub fn run_pou(game: &GameTree, info: &GameInfo, settings: &SolverSettings, mode: NormalizationMode) -> Result<PouRun, String> {
    let (normalized, normalization) = prepare_for_pou(game, mode).map_err(|e| e.to_string())?;
    let records: Vec<SolutionRecord> = Equilibrium::ALL
        .iter()
        .map(|&eq| run_solver(&normalized, info, eq, settings))
        .collect();
    if let Some(r) = records.iter().find(|r| r.status.is_error()) {
        let RunStatus::Error(msg) = &r.status else { unreachable!() };
        return Err(format!("{} failed: {msg}", r.eq));
    }
    let report = compute_pou(records[0].value, records[1].value, records[2].value).with_normalization(normalization);
    Ok(PouRun { report, records })
}
