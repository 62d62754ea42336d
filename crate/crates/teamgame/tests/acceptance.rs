//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod oracles;

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use teamgame::core::generators::{
    build_example1, build_example2, build_maxsat_game, generate_random, random_satisfiable_3cnf, ActionCount, CnfFormula,
    RandomGameConfig,
};
use teamgame::core::inefficiency::compute_pou;
use teamgame::core::tme::{solve_tme_local, TmeOptions};
use teamgame::core::tmecom::solve_tmecom;
use teamgame::core::tmecor::{
    br_oracle_approx, br_oracle_exact, solve_tmecor, ExactOracleOptions, TeamView, Termination, TmeCorOptions,
    TmeCorSolution,
};
use teamgame::core::{Budget, GameTree};
use teamgame::experiment::{run_experiment, GridConfig};
use teamgame::record::{Equilibrium, RunStatus};
use teamgame::run::{game_info, run_pou, run_solver, NormalizationMode, SolverSettings};

use oracles::Mix;

type Outcome = Result<String, String>;

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn random(players: usize, depth: usize, nu: f64, seed: u64) -> GameTree {
    generate_random(&RandomGameConfig {
        players,
        depth,
        nu,
        seed,
        ..RandomGameConfig::default()
    })
    .unwrap()
}

fn tmecor(game: &GameTree) -> TmeCorSolution {
    solve_tmecor(game, &TmeCorOptions::default(), &Budget::unlimited()).unwrap()
}

fn tme(game: &GameTree) -> f64 {
    solve_tme_local(game, &TmeOptions::default(), &Budget::unlimited())
        .unwrap()
        .value
}

/// The desk-scale suite: three players, depth 4 to 6.
fn desk_suite() -> Vec<(String, GameTree)> {
    (0..20u64)
        .map(|i| {
            let depth = 4 + (i % 3) as usize;
            let nu = if i % 2 == 0 { 0.25 } else { 0.5 };
            (format!("d{depth}_nu{nu}_s{i}"), random(3, depth, nu, 100 + i))
        })
        .collect()
}

fn extra_suite() -> Vec<(String, GameTree)> {
    (0..50u64)
        .map(|i| {
            let players = 3 + (i % 2) as usize;
            let depth = 4 + (i % 4) as usize;
            let nu = [0.25, 0.5, 0.75][(i % 3) as usize];
            (format!("n{players}_d{depth}_nu{nu}_s{i}"), random(players, depth, nu, 500 + i))
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let g = build_example1(3, 2).unwrap();
    let com = solve_tmecom(&g).unwrap().value;
    let cor = tmecor(&g).value;
    let no = tme(&g);
    ensure(close(com, 1.0, 1e-6), || format!("example 1: v_com = {com}"))?;
    ensure(close(cor, 0.5, 1e-6), || format!("example 1: v_cor = {cor}"))?;
    ensure(close(no, 0.5, 1e-4), || format!("example 1: v_no = {no}"))?;
    let pou = compute_pou(com, cor, no);
    ensure(close(pou.com_no, 2.0, 1e-3) && close(pou.com_cor, 2.0, 1e-5), || format!("example 1 indices {pou:?}"))?;
    let g = build_example1(3, 3).unwrap();
    let (com, cor) = (solve_tmecom(&g).unwrap().value, tmecor(&g).value);
    ensure(close(com / cor, 3.0, 1e-5), || format!("example 1 m=3: v_com/v_cor = {}", com / cor))?;
    let t1 = start.elapsed();
    ensure(t1 < Duration::from_secs(10), || format!("example 1 took {t1:?}"))?;

    let start = Instant::now();
    let mut detail = Vec::new();
    for (n, no_expected, ratio) in [(3, 0.25, 2.0), (4, 0.125, 4.0)] {
        let g = build_example2(n, 2).unwrap();
        let cor = tmecor(&g).value;
        let no = tme(&g);
        ensure(close(cor, 0.5, 1e-6), || format!("example 2 n={n}: v_cor = {cor}"))?;
        ensure(close(no, no_expected, 1e-4), || format!("example 2 n={n}: v_no = {no}"))?;
        ensure(close(cor / no, ratio, 1e-2), || format!("example 2 n={n}: v_cor/v_no = {}", cor / no))?;
        detail.push(format!("n={n} cor/no={:.4}", cor / no));
    }
    let t2 = start.elapsed();
    ensure(t2 < Duration::from_secs(60), || format!("example 2 took {t2:?}"))?;
    Ok(format!("example 1 in {t1:.2?}, example 2 ({}) in {t2:.2?}", detail.join(", ")))
}

fn criterion_2() -> Outcome {
    let settings = SolverSettings::default();
    for i in 0..20u64 {
        let players = 2 + (i % 3) as usize;
        let depth = 3 + (i % 4) as usize;
        let g = random(players, depth, 0.0, 900 + i);
        let info = game_info(&g, "pi");
        let run = run_pou(&g, &info, &settings, NormalizationMode::IfNeeded).map_err(|e| format!("game {i}: {e}"))?;
        let bi = oracles::backward_induction(&g.map_utilities(|u| run.report.normalization.apply(u)));
        let r = run.report;
        for (name, v) in [("com", r.v_com), ("cor", r.v_cor), ("no", r.v_no)] {
            ensure(close(v, bi, 1e-5), || format!("game {i}: v_{name} = {v}, backward induction {bi}"))?;
        }
        for (name, p) in [("com/no", r.com_no), ("cor/no", r.cor_no), ("com/cor", r.com_cor)] {
            ensure(close(p, 1.0, 1e-5), || format!("game {i}: PoU {name} = {p}"))?;
        }
    }
    Ok("20 perfect-information games match backward induction".into())
}

struct DeskRun {
    name: String,
    game: GameTree,
    com: f64,
    cor: TmeCorSolution,
}

fn criterion_3(runs: &mut Vec<DeskRun>) -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (name, game) in desk_suite() {
        let com = solve_tmecom(&game).unwrap().value;
        let cor = tmecor(&game);
        let cor_ref = oracles::correlated_value(&game);
        let com_ref = oracles::folded_value(&game);
        ensure(close(cor.value, cor_ref, 1e-6), || format!("{name}: TMECor {} vs reference {cor_ref}", cor.value))?;
        ensure(close(com, com_ref, 1e-6), || format!("{name}: TMECom {com} vs reference {com_ref}"))?;
        worst = worst.max((cor.value - cor_ref).abs()).max((com - com_ref).abs());
        runs.push(DeskRun { name, game, com, cor });
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(300), || format!("took {t:?}"))?;
    Ok(format!("20 games, max deviation {worst:.1e}, {t:.2?}"))
}

fn criterion_4() -> Outcome {
    let mut max_ratio: f64 = 0.0;
    for i in 0..100u64 {
        let config = RandomGameConfig {
            players: 2 + (i % 3) as usize,
            depth: 3 + (i % 4) as usize,
            nu: [0.25, 0.5, 0.75][(i % 3) as usize],
            actions: if i % 5 == 0 {
                ActionCount::Uniform { min: 2, max: 3 }
            } else {
                ActionCount::Fixed(2)
            },
            early_leaf: 0.0,
            seed: 2000 + i,
        };
        let g = generate_random(&config).unwrap();
        let sol = tmecor(&g);
        let bound = TeamView::new(&g).unwrap().adversary_sequences();
        ensure(sol.support <= bound, || format!("instance {i}: support {} > |Q_A| = {bound}", sol.support))?;
        max_ratio = max_ratio.max(sol.support as f64 / bound as f64);
    }
    Ok(format!("100 instances, max support/|Q_A| = {max_ratio:.3}"))
}

fn criterion_5(runs: &[DeskRun]) -> Outcome {
    let mut checked = 0;
    let mut check = |name: &str, com: f64, cor: f64, no: f64| {
        checked += 1;
        ensure(com >= cor - 1e-6 && cor >= no - 1e-6, || {
            format!("{name}: v_com {com}, v_cor {cor}, v_no {no}")
        })
    };
    for r in runs {
        check(&r.name, r.com, r.cor.value, tme(&r.game))?;
    }
    for (name, g) in extra_suite() {
        let com = solve_tmecom(&g).unwrap().value;
        let cor = tmecor(&g).value;
        check(&name, com, cor, tme(&g))?;
    }
    Ok(format!("{checked} games ordered"))
}

fn criterion_6() -> Outcome {
    let bound = 1.0 - (-1.0f64).exp();
    let mut worst = f64::INFINITY;
    for i in 0..50u64 {
        let vars = 3 + (i % 4) as usize;
        let clauses = 1 + (i % 8) as usize;
        let formula = random_satisfiable_3cnf(vars, clauses, 7000 + i).unwrap();
        let game = build_maxsat_game(&formula).unwrap();
        let view = TeamView::new(&game).unwrap();
        let plan = view.uniform_adversary_plan();
        let exact = br_oracle_exact(&view, &plan, &ExactOracleOptions::default()).unwrap().value;
        let trials = 1000;
        let mean = (0..trials)
            .map(|t| br_oracle_approx(&view, &plan, 1, t).unwrap().value)
            .sum::<f64>()
            / trials as f64;
        ensure(mean >= bound * exact - 1e-9, || format!("formula {i}: mean {mean} < {bound} * {exact}"))?;
        worst = worst.min(mean / exact);
    }
    Ok(format!("50 formulas, worst mean/exact = {worst:.4} (bound {bound:.4})"))
}

fn criterion_7() -> Outcome {
    let mut rng = Mix(42);
    let mut below = 0;
    for i in 0..20 {
        let vars = 2 + rng.below(4) as usize;
        let count = 2 + rng.below(9) as usize;
        let clauses: Vec<Vec<i32>> = (0..count)
            .map(|_| {
                let width = 1 + rng.below(vars.min(3) as u64) as usize;
                let mut c: Vec<i32> = Vec::new();
                while c.len() < width {
                    let v = 1 + rng.below(vars as u64) as i32;
                    if c.iter().all(|l| l.abs() != v) {
                        c.push(if rng.below(2) == 0 { v } else { -v });
                    }
                }
                c
            })
            .collect();
        let best = oracles::max_satisfiable(vars, &clauses);
        below += usize::from(best < count);
        let formula = CnfFormula::new(vars, clauses).unwrap();
        let game = build_maxsat_game(&formula).unwrap();
        let view = TeamView::new(&game).unwrap();
        let plan = view.uniform_adversary_plan();
        let value = br_oracle_exact(&view, &plan, &ExactOracleOptions::default()).unwrap().value;
        let expected = best as f64 / count as f64;
        ensure(close(value, expected, 1e-9), || format!("formula {i}: oracle {value}, max-sat {best}/{count}"))?;
    }
    Ok(format!("20 formulas ({below} unsatisfiable)"))
}

fn criterion_8(runs: &[DeskRun]) -> Outcome {
    let mut within = 0;
    let mut findings = Vec::new();
    let check = |name: &str, sol: &TmeCorSolution, q_a: usize| -> Result<bool, String> {
        let values: Vec<f64> = sol.trace.iter().filter_map(|t| t.restricted_value).collect();
        for w in values.windows(2) {
            ensure(w[1] >= w[0] - 1e-9, || format!("{name}: restricted value fell from {} to {}", w[0], w[1]))?;
        }
        Ok(sol.termination == Termination::KnownResponse && sol.iterations <= 2 * q_a)
    };
    for r in runs {
        let q_a = TeamView::new(&r.game).unwrap().adversary_sequences();
        if check(&r.name, &r.cor, q_a)? {
            within += 1;
        } else {
            findings.push(format!("{} ({} iterations, |Q_A| = {q_a})", r.name, r.cor.iterations));
        }
    }
    for (name, g) in [
        ("example1", build_example1(3, 2).unwrap()),
        ("example2", build_example2(3, 2).unwrap()),
        ("example2_n4", build_example2(4, 2).unwrap()),
    ] {
        let q_a = TeamView::new(&g).unwrap().adversary_sequences();
        check(name, &tmecor(&g), q_a)?;
    }
    let mut out = format!("monotone everywhere; {within}/{} suite games end by repeated response within 2|Q_A|", runs.len());
    if !findings.is_empty() {
        out.push_str(&format!("; beyond: {}", findings.join(", ")));
    }
    Ok(out)
}

fn criterion_9() -> Outcome {
    let g = random(3, 12, 0.5, 0);
    let start = Instant::now();
    let com = solve_tmecom(&g).unwrap();
    let t_com = start.elapsed();
    ensure(t_com < Duration::from_secs(300), || format!("TMECom d=12 took {t_com:?}"))?;
    let g = random(3, 9, 0.5, 0);
    let start = Instant::now();
    let cor = tmecor(&g);
    let t_cor = start.elapsed();
    ensure(t_cor < Duration::from_secs(300), || format!("TMECor d=9 took {t_cor:?}"))?;
    ensure(cor.termination == Termination::KnownResponse, || format!("TMECor d=9 ended with {:?}", cor.termination))?;

    let limit = 60.0;
    let settings = SolverSettings {
        time_limit: Some(Duration::from_secs_f64(limit)),
        keep_strategy: false,
        ..SolverSettings::default()
    };
    let mut rows = Vec::new();
    for depth in 5..=10 {
        let (mut com_total, mut cor_total, mut cor_unsolved) = (0.0, 0.0, 0);
        for seed in 0..3 {
            let g = random(3, depth, 0.5, seed);
            let info = game_info(&g, "scale");
            let com = run_solver(&g, &info, Equilibrium::Tmecom, &settings);
            ensure(com.status == RunStatus::Optimal, || format!("TMECom d={depth} seed {seed}: {}", com.status))?;
            let cor = run_solver(&g, &info, Equilibrium::Tmecor, &settings);
            if cor.status != RunStatus::Optimal {
                cor_unsolved += 1;
            }
            com_total += com.seconds;
            cor_total += cor.seconds.max(if cor.status == RunStatus::Optimal { 0.0 } else { limit });
        }
        ensure(com_total <= cor_total, || format!("d={depth}: TMECom {com_total:.3}s vs TMECor {cor_total:.3}s"))?;
        rows.push(format!("d{depth} {:.3}s/{:.3}s{}", com_total / 3.0, cor_total / 3.0, if cor_unsolved > 0 {
            format!(" ({cor_unsolved} TMECor at limit)")
        } else {
            String::new()
        }));
    }
    Ok(format!(
        "TMECom d=12 {t_com:.2?} (v={:.4}), TMECor d=9 {t_cor:.2?}; mean com/cor time: {}",
        com.value,
        rows.join(", ")
    ))
}

fn strip_timing(text: &str) -> String {
    let mut value: serde_json::Value = serde_json::from_str(text).unwrap();
    if let Some(items) = value.as_array_mut() {
        for item in items {
            item.as_object_mut().unwrap().remove("seconds");
        }
    }
    value.to_string()
}

fn drop_timing(csv: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let keep: Vec<usize> = (0..header.len()).filter(|&i| !header[i].contains("seconds")).collect();
    csv.lines()
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            keep.iter().map(|&i| cells[i]).collect::<Vec<_>>().join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn snapshot(dir: &Path) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for name in ["records.csv", "aggregate.csv"] {
        let text = fs::read_to_string(dir.join(name)).unwrap();
        out.push((name.into(), drop_timing(&text)));
    }
    for name in ["trace.csv", "pou.csv"] {
        out.push((name.into(), fs::read_to_string(dir.join(name)).unwrap()));
    }
    let mut records: Vec<_> = fs::read_dir(dir.join("records")).unwrap().map(|e| e.unwrap().path()).collect();
    records.sort();
    for path in records {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        out.push((name, strip_timing(&fs::read_to_string(&path).unwrap())));
    }
    out
}

fn criterion_10() -> Outcome {
    let grid: GridConfig = serde_json::from_str(
        r#"{"players": [3], "depth": [4, 5], "nu": [0.25, 0.5], "seed": [0, 1, 2], "time_limit": 600, "threads": 4}"#,
    )
    .unwrap();
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    run_experiment(&grid, first.path()).map_err(|e| e.to_string())?;
    let approx: GridConfig = serde_json::from_str(
        r#"{"players": [3], "depth": [5], "seed": [3, 4], "solvers": ["tmecor"], "oracle": "approx", "threads": 2}"#,
    )
    .unwrap();
    let third = tempfile::tempdir().unwrap();
    let fourth = tempfile::tempdir().unwrap();
    run_experiment(&approx, third.path()).map_err(|e| e.to_string())?;
    let grid_single = GridConfig { threads: Some(1), ..grid };
    run_experiment(&grid_single, second.path()).map_err(|e| e.to_string())?;
    run_experiment(&approx, fourth.path()).map_err(|e| e.to_string())?;
    let mut files = 0;
    for (a, b) in [(first.path(), second.path()), (third.path(), fourth.path())] {
        let (sa, sb) = (snapshot(a), snapshot(b));
        ensure(sa.len() == sb.len(), || "different file sets".into())?;
        for ((name, x), (_, y)) in sa.iter().zip(&sb) {
            ensure(x == y, || format!("{name} differs between runs"))?;
            files += 1;
        }
    }
    Ok(format!("{files} outputs identical across repeated runs"))
}

fn main() {
    let mut runs = Vec::new();
    let results: Vec<(usize, Outcome, Duration)> = vec![
        timed(1, criterion_1),
        timed(2, criterion_2),
        timed(3, || criterion_3(&mut runs)),
        timed(4, criterion_4),
        timed(5, || criterion_5(&runs)),
        timed(6, criterion_6),
        timed(7, criterion_7),
        timed(8, || criterion_8(&runs)),
        timed(9, criterion_9),
        timed(10, criterion_10),
    ];
    let mut failed = 0;
    for (k, outcome, t) in &results {
        match outcome {
            Ok(detail) => println!("criterion {k:>2}: PASS  {detail} [{t:.1?}]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {k:>2}: FAIL  {detail} [{t:.1?}]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn timed(k: usize, f: impl FnOnce() -> Outcome) -> (usize, Outcome, Duration) {
    let start = Instant::now();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
        .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
    (k, outcome, start.elapsed())
}
