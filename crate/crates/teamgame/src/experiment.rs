//! Batch runs over grids of random games.
//!
//! Output directory layout:
//!
//! * `records.csv`: one row per (instance, solver), columns [`CSV_HEADER`].
//! * `pou.csv`: one row per instance with the three values and indices.
//! * `aggregate.csv`: per `(n, d, nu)`, quartiles and mean of each index and
//!   mean solver time.
//! * `trace.csv`: per column-generation iteration of every TMECor run.
//! * `records/<game_id>.json`: full records, written as each instance ends.
//! * `pou_<index>.svg`, `pou_mean.svg`, `time_mean.svg`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use teamgame_core::generators::{generate_random, ActionCount, RandomGameConfig};
use teamgame_core::inefficiency::compute_pou;

use crate::format::save_game;
use crate::plot::{box_plot, line_plot};
use crate::record::{Equilibrium, GameInfo, RunStatus, SolutionRecord, CSV_HEADER};
use crate::run::{prepare_for_pou, run_solver, NormalizationMode, OracleChoice, SolverSettings};
use crate::stats::summarize;

/// Tolerance of the ordering check between the three values.
pub const ORDER_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActionsSpec {
    Fixed(usize),
    Uniform { min: usize, max: usize },
}

impl From<ActionsSpec> for ActionCount {
    fn from(a: ActionsSpec) -> Self {
        match a {
            ActionsSpec::Fixed(k) => ActionCount::Fixed(k),
            ActionsSpec::Uniform { min, max } => ActionCount::Uniform { min, max },
        }
    }
}

fn default_players() -> Vec<usize> {
    vec![3]
}
fn default_depth() -> Vec<usize> {
    vec![5]
}
fn default_nu() -> Vec<f64> {
    vec![0.5]
}
fn default_actions() -> Vec<ActionsSpec> {
    vec![ActionsSpec::Fixed(2)]
}
fn default_early_leaf() -> Vec<f64> {
    vec![0.0]
}
fn default_seed() -> Vec<u64> {
    (0..20).collect()
}
fn default_solvers() -> Vec<Equilibrium> {
    Equilibrium::ALL.to_vec()
}
fn default_time_limit() -> f64 {
    300.0
}
fn default_restarts() -> usize {
    10
}
fn default_rounds() -> usize {
    teamgame_core::tmecor::OracleKind::DEFAULT_ROUNDS
}

/// Grid file: every game-generator field is a list, and the grid is their
/// Cartesian product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_players")]
    pub players: Vec<usize>,
    #[serde(default = "default_depth")]
    pub depth: Vec<usize>,
    #[serde(default = "default_nu")]
    pub nu: Vec<f64>,
    #[serde(default = "default_actions")]
    pub actions: Vec<ActionsSpec>,
    #[serde(default = "default_early_leaf")]
    pub early_leaf: Vec<f64>,
    #[serde(default = "default_seed")]
    pub seed: Vec<u64>,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<Equilibrium>,
    /// Per-solver wall-clock limit in seconds.
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    #[serde(default = "default_oracle")]
    pub oracle: OracleChoice,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Grid step of the exact TME oracle, tried before the local search.
    #[serde(default)]
    pub tme_grid: Option<f64>,
    /// Map each instance's attained payoff range onto [0, 1].
    #[serde(default)]
    pub renormalize: bool,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_oracle() -> OracleChoice {
    OracleChoice::Exact
}

impl Default for GridConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl GridConfig {
    pub fn instances(&self) -> Vec<(GameInfo, RandomGameConfig)> {
        let mut out = Vec::new();
        for &players in &self.players {
            for &depth in &self.depth {
                for &nu in &self.nu {
                    for &actions in &self.actions {
                        for &early_leaf in &self.early_leaf {
                            for &seed in &self.seed {
                                let mut id = format!("n{players}_d{depth}_nu{nu}");
                                if self.actions.len() > 1 {
                                    match actions {
                                        ActionsSpec::Fixed(k) => write!(id, "_a{k}").unwrap(),
                                        ActionsSpec::Uniform { min, max } => write!(id, "_a{min}-{max}").unwrap(),
                                    }
                                }
                                if self.early_leaf.len() > 1 {
                                    write!(id, "_e{early_leaf}").unwrap();
                                }
                                write!(id, "_s{seed}").unwrap();
                                let info = GameInfo {
                                    game_id: id,
                                    players,
                                    depth,
                                    nu: Some(nu),
                                    seed: Some(seed),
                                };
                                let config = RandomGameConfig {
                                    players,
                                    depth,
                                    nu,
                                    actions: actions.into(),
                                    early_leaf,
                                    seed,
                                };
                                out.push((info, config));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            oracle: self.oracle,
            rounds: self.rounds,
            seed: 0,
            time_limit: Some(Duration::from_secs_f64(self.time_limit)),
            restarts: self.restarts,
            node_limit: None,
            tme_grid: self.tme_grid,
            keep_strategy: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            bail!("the solver list is empty");
        }
        if !(self.time_limit > 0.0) {
            bail!("time_limit must be positive");
        }
        for (_, config) in self.instances() {
            config.validate().with_context(|| format!("invalid grid point {config:?}"))?;
        }
        Ok(())
    }
}

/// All records of one instance plus its index values.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceResult {
    pub info: GameInfo,
    pub records: Vec<SolutionRecord>,
    pub pou: Option<PouRow>,
    /// Set when the three values violate their ordering.
    pub violation: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PouRow {
    pub v_com: f64,
    pub v_cor: f64,
    pub v_no: f64,
    pub com_no: f64,
    pub cor_no: f64,
    pub com_cor: f64,
    /// The TME value is proven optimal (or within a certified gap).
    pub certified: bool,
}

#[derive(Clone, Debug)]
pub struct ExperimentSummary {
    pub instances: Vec<InstanceResult>,
    pub out_dir: PathBuf,
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

fn run_instance(info: &GameInfo, config: &RandomGameConfig, grid: &GridConfig, out: &Path) -> Result<InstanceResult> {
    let game = generate_random(config).with_context(|| format!("generating {}", info.game_id))?;
    let mode = if grid.renormalize {
        NormalizationMode::Always
    } else {
        NormalizationMode::IfNeeded
    };
    let (game, _) = prepare_for_pou(&game, mode).with_context(|| format!("normalizing {}", info.game_id))?;
    let settings = grid.settings();
    let records: Vec<SolutionRecord> = grid
        .solvers
        .iter()
        .map(|&eq| run_solver(&game, info, eq, &settings))
        .collect();
    let find = |eq: Equilibrium| records.iter().find(|r| r.eq == eq && !r.status.is_error());
    let (com, cor, no) = (find(Equilibrium::Tmecom), find(Equilibrium::Tmecor), find(Equilibrium::Tme));
    let mut violation = None;
    let mut pou = None;
    if let (Some(com), Some(cor), Some(no)) = (com, cor, no) {
        let report = compute_pou(com.value, cor.value, no.value);
        pou = Some(PouRow {
            v_com: com.value,
            v_cor: cor.value,
            v_no: no.value,
            com_no: report.com_no,
            cor_no: report.cor_no,
            com_cor: report.com_cor,
            certified: matches!(no.status, RunStatus::Optimal),
        });
        // TMECor and TME values are feasible, hence lower bounds; the
        // second inequality is only guaranteed when TMECor is optimal.
        if com.value < cor.value - ORDER_TOL {
            violation = Some(format!("v_com {} < v_cor {}", com.value, cor.value));
        } else if cor.status == RunStatus::Optimal && cor.value < no.value - ORDER_TOL {
            violation = Some(format!("v_cor {} < v_no {}", cor.value, no.value));
        }
    }
    if violation.is_some() {
        let dir = out.join("violations");
        fs::create_dir_all(&dir)?;
        write_atomic(&dir.join(format!("{}.json", info.game_id)), &save_game(&game))?;
    }
    let doc = serde_json::to_string_pretty(&records)?;
    write_atomic(&out.join("records").join(format!("{}.json", info.game_id)), &doc)?;
    Ok(InstanceResult {
        info: info.clone(),
        records,
        pou,
        violation,
    })
}

/// Runs the grid and writes every output file. Fails on the first ordering
/// violation (after the pool drains), leaving the offending games under
/// `violations/`.
pub fn run_experiment(grid: &GridConfig, out: &Path) -> Result<ExperimentSummary> {
    grid.validate()?;
    fs::create_dir_all(out.join("records")).with_context(|| format!("creating {}", out.display()))?;
    let instances = grid.instances();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = grid.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build()?;
    let results: Vec<Result<InstanceResult>> = pool.install(|| {
        instances
            .par_iter()
            .map(|(info, config)| run_instance(info, config, grid, out))
            .collect()
    });
    let results: Vec<InstanceResult> = results.into_iter().collect::<Result<_>>()?;
    write_outputs(&results, grid, out)?;
    if let Some(bad) = results.iter().find(|r| r.violation.is_some()) {
        bail!(
            "value ordering violated on {}: {}; game saved under {}",
            bad.info.game_id,
            bad.violation.as_deref().unwrap_or_default(),
            out.join("violations").display()
        );
    }
    Ok(ExperimentSummary {
        instances: results,
        out_dir: out.to_path_buf(),
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_outputs(results: &[InstanceResult], grid: &GridConfig, out: &Path) -> Result<()> {
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut trace = String::from("game_id,iteration,restricted_value,oracle_value,key_hash,new_column\n");
    let mut pou = String::from("game_id,n,d,nu,seed,v_com,v_cor,v_no,pou_com_no,pou_cor_no,pou_com_cor,tme_certified\n");
    for r in results {
        for rec in &r.records {
            csv.push_str(&rec.csv_row());
            csv.push('\n');
            for t in &rec.trace {
                writeln!(
                    trace,
                    "{},{},{},{},{:016x},{}",
                    r.info.game_id,
                    t.iteration,
                    fmt_opt(t.restricted_value),
                    t.oracle_value,
                    t.key_hash,
                    t.new_column
                )?;
            }
        }
        if let Some(p) = &r.pou {
            writeln!(
                pou,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.info.game_id,
                r.info.players,
                r.info.depth,
                fmt_opt(r.info.nu),
                r.info.seed.map(|s| s.to_string()).unwrap_or_default(),
                p.v_com,
                p.v_cor,
                p.v_no,
                p.com_no,
                p.cor_no,
                p.com_cor,
                p.certified
            )?;
        }
    }
    write_atomic(&out.join("records.csv"), &csv)?;
    write_atomic(&out.join("trace.csv"), &trace)?;
    write_atomic(&out.join("pou.csv"), &pou)?;
    write_atomic(&out.join("aggregate.csv"), &aggregate(results, grid))?;
    write_plots(results, grid, out)
}

type GroupKey = (usize, usize, u64);

fn group_key(info: &GameInfo) -> GroupKey {
    (info.players, info.depth, info.nu.unwrap_or(0.0).to_bits())
}

fn groups(results: &[InstanceResult]) -> BTreeMap<GroupKey, Vec<&InstanceResult>> {
    let mut map: BTreeMap<GroupKey, Vec<&InstanceResult>> = BTreeMap::new();
    for r in results {
        map.entry(group_key(&r.info)).or_default().push(r);
    }
    map
}

const INDICES: [(&str, fn(&PouRow) -> f64); 3] = [
    ("com_no", |p| p.com_no),
    ("cor_no", |p| p.cor_no),
    ("com_cor", |p| p.com_cor),
];

/// Aggregate table. Timing columns (`*_seconds_mean`) come last.
pub fn aggregate(results: &[InstanceResult], grid: &GridConfig) -> String {
    let mut header = String::from("n,d,nu,instances");
    for (name, _) in INDICES {
        write!(header, ",{name}_mean,{name}_q1,{name}_median,{name}_q3,{name}_infinite").unwrap();
    }
    header.push_str(",certified,com_no_certified_mean,cor_no_certified_mean");
    for eq in &grid.solvers {
        write!(header, ",{eq}_time_limit,{eq}_errors").unwrap();
    }
    for eq in &grid.solvers {
        write!(header, ",{eq}_seconds_mean").unwrap();
    }
    let mut out = header + "\n";
    for ((n, d, nu), rows) in groups(results) {
        write!(out, "{n},{d},{},{}", f64::from_bits(nu), rows.len()).unwrap();
        let pous: Vec<&PouRow> = rows.iter().filter_map(|r| r.pou.as_ref()).collect();
        for (_, get) in INDICES {
            let values: Vec<f64> = pous.iter().map(|p| get(p)).collect();
            let infinite = values.iter().filter(|v| v.is_infinite()).count();
            match summarize(&values) {
                Some(s) => write!(out, ",{},{},{},{},{infinite}", s.mean, s.q1, s.median, s.q3).unwrap(),
                None => write!(out, ",,,,,{infinite}").unwrap(),
            }
        }
        let certified: Vec<&&PouRow> = pous.iter().filter(|p| p.certified).collect();
        let mean = |get: fn(&PouRow) -> f64| summarize(&certified.iter().map(|p| get(p)).collect::<Vec<_>>()).map(|s| s.mean);
        write!(
            out,
            ",{},{},{}",
            certified.len(),
            fmt_opt(mean(|p| p.com_no)),
            fmt_opt(mean(|p| p.cor_no))
        )
        .unwrap();
        let records = |eq: Equilibrium| rows.iter().flat_map(|r| r.records.iter()).filter(move |x| x.eq == eq);
        for &eq in &grid.solvers {
            let limited = records(eq).filter(|x| x.status == RunStatus::TimeLimit).count();
            let errors = records(eq).filter(|x| x.status.is_error()).count();
            write!(out, ",{limited},{errors}").unwrap();
        }
        for &eq in &grid.solvers {
            let secs: Vec<f64> = records(eq).map(|x| x.seconds).collect();
            write!(out, ",{}", fmt_opt(summarize(&secs).map(|s| s.mean))).unwrap();
        }
        out.push('\n');
    }
    out
}

fn write_plots(results: &[InstanceResult], grid: &GridConfig, out: &Path) -> Result<()> {
    let grouped = groups(results);
    let label = |(n, d, nu): &GroupKey| {
        if grid.players.len() > 1 || grid.nu.len() > 1 {
            format!("n{n} d{d} nu{}", f64::from_bits(*nu))
        } else {
            format!("d={d}")
        }
    };
    for (name, get) in INDICES {
        let boxes: Vec<(String, _)> = grouped
            .iter()
            .map(|(k, rows)| {
                let values: Vec<f64> = rows.iter().filter_map(|r| r.pou.as_ref()).map(get).collect();
                (label(k), summarize(&values))
            })
            .collect();
        let title = format!("PoU {}", name.replace('_', "/"));
        write_atomic(&out.join(format!("pou_{name}.svg")), &box_plot(&title, "index", &boxes))?;
    }
    // one line per (n, nu) and index / solver, against depth
    let mut series_keys: Vec<(usize, u64)> = grouped.keys().map(|&(n, _, nu)| (n, nu)).collect();
    series_keys.dedup();
    let mut mean_pou = Vec::new();
    let mut mean_time = Vec::new();
    for &(n, nu) in &series_keys {
        let suffix = if series_keys.len() > 1 {
            format!(" n{n} nu{}", f64::from_bits(nu))
        } else {
            String::new()
        };
        let in_series = || grouped.iter().filter(move |((gn, _, gnu), _)| *gn == n && *gnu == nu);
        for (name, get) in INDICES {
            let points = in_series()
                .filter_map(|((_, d, _), rows)| {
                    let v: Vec<f64> = rows.iter().filter_map(|r| r.pou.as_ref()).map(get).collect();
                    summarize(&v).map(|s| (*d as f64, s.mean))
                })
                .collect();
            mean_pou.push((format!("{}{suffix}", name.replace('_', "/")), points));
        }
        for &eq in &grid.solvers {
            let points = in_series()
                .filter_map(|((_, d, _), rows)| {
                    let secs: Vec<f64> = rows
                        .iter()
                        .flat_map(|r| r.records.iter())
                        .filter(|x| x.eq == eq)
                        .map(|x| x.seconds)
                        .collect();
                    summarize(&secs).map(|s| (*d as f64, s.mean))
                })
                .collect();
            mean_time.push((format!("{eq}{suffix}"), points));
        }
    }
    write_atomic(&out.join("pou_mean.svg"), &line_plot("Mean PoU", "depth", "index", &mean_pou, false))?;
    write_atomic(
        &out.join("time_mean.svg"),
        &line_plot("Mean compute time", "depth", "seconds", &mean_time, true),
    )?;
    Ok(())
}
