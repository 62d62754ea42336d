//! Solver results, as JSON documents and CSV rows.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Equilibrium {
    Tmecom,
    Tmecor,
    Tme,
}

impl Equilibrium {
    pub const ALL: [Equilibrium; 3] = [Equilibrium::Tmecom, Equilibrium::Tmecor, Equilibrium::Tme];

    pub fn name(self) -> &'static str {
        match self {
            Equilibrium::Tmecom => "tmecom",
            Equilibrium::Tmecor => "tmecor",
            Equilibrium::Tme => "tme",
        }
    }
}

impl fmt::Display for Equilibrium {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How much a reported value can be trusted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum RunStatus {
    Optimal,
    /// A feasible value from a heuristic, with no optimality guarantee.
    Local,
    /// Feasible value within the given additive gap of the optimum.
    Gap(f64),
    /// Stopped by the time limit; the value is the best feasible one found.
    TimeLimit,
    Error(String),
}

impl RunStatus {
    pub fn is_error(&self) -> bool {
        matches!(self, RunStatus::Error(_))
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunStatus::Optimal => f.write_str("optimal"),
            RunStatus::Local => f.write_str("local"),
            RunStatus::Gap(g) => write!(f, "gap({g:.3e})"),
            RunStatus::TimeLimit => f.write_str("time_limit"),
            RunStatus::Error(_) => f.write_str("error"),
        }
    }
}

/// Parameters of a generated game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameInfo {
    pub game_id: String,
    pub players: usize,
    pub depth: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub player: usize,
    /// Per-player infoset id of the original game.
    pub infoset: usize,
    /// `(player, infoset, action)` of each earlier team decision.
    pub team_path: Vec<(usize, usize, usize)>,
    pub distribution: Vec<f64>,
    pub unreachable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub probability: f64,
    /// Per team member, the maximal sequences the plan plays.
    pub sequences: Vec<Vec<usize>>,
    /// Preorder ids of the leaves the plan can reach.
    pub leaves: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Strategy {
    Tmecom {
        team_plan: Vec<f64>,
        adversary_plan: Vec<f64>,
        recommendations: Vec<Recommendation>,
    },
    Tmecor {
        columns: Vec<Column>,
        adversary_plan: Vec<f64>,
    },
    Tme {
        team: Vec<usize>,
        plans: Vec<Vec<f64>>,
        adversary_plan: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub restricted_value: Option<f64>,
    pub oracle_value: f64,
    pub key_hash: u64,
    pub new_column: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub game: GameInfo,
    pub eq: Equilibrium,
    pub value: f64,
    /// Columns played with positive probability (TMECor only).
    pub support: Option<usize>,
    /// Columns generated, LP pivots or restarts, depending on the solver.
    pub iterations: usize,
    pub status: RunStatus,
    pub upper_bound: Option<f64>,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEntry>,
}

pub const CSV_HEADER: &str = "game_id,n,d,nu,seed,eq,value,support,iters,status,seconds";

fn opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

impl SolutionRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{:.6}",
            self.game.game_id,
            self.game.players,
            self.game.depth,
            opt(&self.game.nu),
            opt(&self.game.seed),
            self.eq,
            self.value,
            opt(&self.support),
            self.iterations,
            self.status,
            self.seconds
        )
    }

    /// The record without timing, for reproducibility comparisons.
    pub fn without_timing(&self) -> SolutionRecord {
        SolutionRecord {
            seconds: 0.0,
            ..self.clone()
        }
    }
}
