use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use teamgame::dimacs::{parse_dimacs, write_dimacs};
use teamgame::experiment::{run_experiment, GridConfig};
use teamgame::format::{load_game, save_game};
use teamgame::record::Equilibrium;
use teamgame::run::{game_info, run_pou, run_solver, NormalizationMode, OracleChoice, SolverSettings};
use teamgame_core::generators::{
    build_example1, build_example2, build_maxsat_game, generate_random, random_satisfiable_3cnf, ActionCount,
    RandomGameConfig,
};
use teamgame_core::tmecor::OracleKind;
use teamgame_core::GameTree;

#[derive(Parser)]
#[command(name = "teamgame", version, about = "Solve zero-sum games between a team and an adversary")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a game file for one equilibrium and print the result document.
    Solve {
        game: PathBuf,
        #[arg(long, value_enum)]
        eq: Equilibrium,
        #[arg(long, value_enum, default_value = "exact")]
        oracle: OracleChoice,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Wall-clock limit in seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Roundings per approximate oracle call.
        #[arg(long, default_value_t = OracleKind::DEFAULT_ROUNDS)]
        rounds: usize,
        /// Local-search restarts for TME.
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        /// Use the grid oracle for TME with this step when the game is small.
        #[arg(long)]
        tme_grid: Option<f64>,
        /// Write the result here instead of standard output.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Write a generated game file.
    Generate {
        #[command(subcommand)]
        family: Family,
        #[arg(short, long, global = true)]
        out: Option<PathBuf>,
    },
    /// Run a grid of random games and write tables and plots.
    Experiment {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve all three equilibria and print the inefficiency indices.
    Pou {
        game: PathBuf,
        /// Rescale payoffs to [0, 1] even when they already lie inside it.
        #[arg(long)]
        renormalize: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        tme_grid: Option<f64>,
    },
}

#[derive(Subcommand)]
enum Family {
    Random {
        #[arg(long, default_value_t = 3)]
        players: usize,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        #[arg(long, default_value_t = 0.5)]
        nu: f64,
        /// Fixed branching factor.
        #[arg(long, default_value_t = 2, conflicts_with = "actions_range")]
        actions: usize,
        /// Uniform branching factor `MIN-MAX`.
        #[arg(long)]
        actions_range: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        early_leaf: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Example1 {
        #[arg(long, default_value_t = 3)]
        players: usize,
        #[arg(long, default_value_t = 2)]
        actions: usize,
    },
    Example2 {
        #[arg(long, default_value_t = 3)]
        players: usize,
        #[arg(long, default_value_t = 2)]
        actions: usize,
    },
    /// From a DIMACS file, or a random satisfiable 3-CNF formula.
    Maxsat {
        #[arg(long, conflicts_with_all = ["vars", "clauses"])]
        cnf: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        vars: usize,
        #[arg(long, default_value_t = 8)]
        clauses: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the formula in DIMACS format.
        #[arg(long)]
        write_cnf: Option<PathBuf>,
    },
}

fn read_game(path: &Path) -> Result<GameTree> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_game(&text).with_context(|| format!("loading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => print_stdout(text),
    }
}

/// Writes to stdout; a closed pipe (as with `| head`) is not an error.
fn print_stdout(text: &str) -> Result<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn game_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn limit(seconds: Option<f64>) -> Option<Duration> {
    seconds.map(Duration::from_secs_f64)
}

#[derive(Serialize)]
struct PouOutput {
    game_id: String,
    v_com: f64,
    v_cor: f64,
    v_no: f64,
    pou_com_no: f64,
    pou_cor_no: f64,
    pou_com_cor: f64,
    infinite: bool,
    offset: f64,
    scale: f64,
    statuses: Vec<(Equilibrium, String)>,
}

fn generate(family: Family) -> Result<GameTree> {
    Ok(match family {
        Family::Random {
            players,
            depth,
            nu,
            actions,
            actions_range,
            early_leaf,
            seed,
        } => {
            let actions = match actions_range {
                Some(r) => {
                    let (a, b) = r.split_once('-').context("expected MIN-MAX")?;
                    ActionCount::Uniform {
                        min: a.trim().parse()?,
                        max: b.trim().parse()?,
                    }
                }
                None => ActionCount::Fixed(actions),
            };
            generate_random(&RandomGameConfig {
                players,
                depth,
                nu,
                actions,
                early_leaf,
                seed,
            })?
        }
        Family::Example1 { players, actions } => build_example1(players, actions)?,
        Family::Example2 { players, actions } => build_example2(players, actions)?,
        Family::Maxsat {
            cnf,
            vars,
            clauses,
            seed,
            write_cnf,
        } => {
            let formula = match cnf {
                Some(path) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    parse_dimacs(&text).with_context(|| format!("parsing {}", path.display()))?
                }
                None => random_satisfiable_3cnf(vars, clauses, seed)?,
            };
            if let Some(path) = write_cnf {
                fs::write(&path, write_dimacs(&formula)).with_context(|| format!("writing {}", path.display()))?;
            }
            build_maxsat_game(&formula)?
        }
    })
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Solve {
            game,
            eq,
            oracle,
            seed,
            time_limit,
            rounds,
            restarts,
            tme_grid,
            out,
        } => {
            let tree = read_game(&game)?;
            let settings = SolverSettings {
                oracle,
                rounds,
                seed,
                time_limit: limit(time_limit),
                restarts,
                tme_grid,
                ..SolverSettings::default()
            };
            let record = run_solver(&tree, &game_info(&tree, &game_id(&game)), eq, &settings);
            emit(out.as_deref(), &serde_json::to_string_pretty(&record)?)?;
            if let teamgame::record::RunStatus::Error(msg) = &record.status {
                anyhow::bail!("{eq} failed: {msg}");
            }
        }
        Command::Generate { family, out } => {
            let tree = generate(family)?;
            emit(out.as_deref(), &save_game(&tree))?;
        }
        Command::Experiment { grid, out } => {
            let text = fs::read_to_string(&grid).with_context(|| format!("reading {}", grid.display()))?;
            let config: GridConfig =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", grid.display()))?;
            let summary = run_experiment(&config, &out)?;
            eprintln!(
                "{} instances written to {}",
                summary.instances.len(),
                summary.out_dir.display()
            );
        }
        Command::Pou {
            game,
            renormalize,
            seed,
            time_limit,
            tme_grid,
        } => {
            let tree = read_game(&game)?;
            let settings = SolverSettings {
                seed,
                time_limit: limit(time_limit),
                tme_grid,
                keep_strategy: false,
                ..SolverSettings::default()
            };
            let mode = if renormalize {
                NormalizationMode::Always
            } else {
                NormalizationMode::IfNeeded
            };
            let id = game_id(&game);
            let run = run_pou(&tree, &game_info(&tree, &id), &settings, mode).map_err(anyhow::Error::msg)?;
            let r = run.report;
            let output = PouOutput {
                game_id: id,
                v_com: r.v_com,
                v_cor: r.v_cor,
                v_no: r.v_no,
                pou_com_no: r.com_no,
                pou_cor_no: r.cor_no,
                pou_com_cor: r.com_cor,
                infinite: r.infinite,
                offset: r.normalization.offset,
                scale: r.normalization.scale,
                statuses: run.records.iter().map(|x| (x.eq, x.status.to_string())).collect(),
            };
            print_stdout(&serde_json::to_string_pretty(&output)?)?;
        }
    }
    Ok(())
}
