use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::generators::{self, CnfFormula, RandomGameConfig};
use crate::lp::{solve_lp, LinearProgram, Relation, Sense, Var};
use crate::sequence::SequenceSet;

/// Pure plans that choose an action only at infosets their own earlier
/// choices reach.
fn own_reduced_plans(set: &SequenceSet) -> Vec<Vec<f64>> {
    fn expand(set: &SequenceSet, plan: Vec<f64>, frontier: Vec<crate::InfosetId>, out: &mut Vec<Vec<f64>>) {
        let Some((&h, rest)) = frontier.split_last() else {
            out.push(plan);
            return;
        };
        for a in 0..set.num_actions(h) {
            let q = set.extension(h, a);
            let mut p = plan.clone();
            p[q] = 1.0;
            let mut f = rest.to_vec();
            f.extend_from_slice(set.entered_by(q));
            expand(set, p, f, out);
        }
    }
    let mut plan = vec![0.0; set.len()];
    plan[0] = 1.0;
    let mut out = Vec::new();
    expand(set, plan, set.entered_by(0).to_vec(), &mut out);
    out
}

/// Every distinct hybrid column of the game, by exhaustive enumeration.
fn all_columns(g: &GameTree) -> Vec<Vec<(usize, f64)>> {
    let sf = crate::sequence::build_sequence_form(g).unwrap();
    let team = g.team();
    let per_member: Vec<Vec<Vec<f64>>> = team.iter().map(|&i| own_reduced_plans(sf.set(i))).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut idx = vec![0usize; team.len()];
    loop {
        let mut col: Vec<(usize, u64)> = Vec::new();
        for t in &sf.terminal {
            if team.iter().enumerate().all(|(k, &i)| per_member[k][idx[k]][t.profile[i]] == 1.0) {
                col.push((t.profile[g.adversary()], t.utility.to_bits()));
            }
        }
        col.sort();
        if seen.insert(col.clone()) {
            out.push(col.into_iter().map(|(q, u)| (q, f64::from_bits(u))).collect());
        }
        let mut k = 0;
        loop {
            if k == team.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < per_member[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// The correlated value over all columns, from an LP assembled here.
fn brute_force_value(g: &GameTree) -> f64 {
    let sf = crate::sequence::build_sequence_form(g).unwrap();
    let cols = all_columns(g);
    let cs = sf.constraints(g.adversary());
    let mut lp = LinearProgram::new(Sense::Maximize);
    let sigma: Vec<Var> = cols.iter().map(|_| lp.add_nonneg(0.0)).collect();
    let v: Vec<Var> = cs.rhs.iter().map(|&f| lp.add_free(f)).collect();
    let mut rows: Vec<Vec<(Var, f64)>> = vec![Vec::new(); cs.num_sequences];
    for (k, row) in cs.rows.iter().enumerate() {
        for &(q, c) in row {
            rows[q].push((v[k], c));
        }
    }
    for (p, col) in cols.iter().enumerate() {
        for &(q, u) in col {
            rows[q].push((sigma[p], -u));
        }
    }
    for r in rows {
        lp.add_row(r, Relation::Le, 0.0);
    }
    lp.add_row(sigma.iter().map(|&s| (s, 1.0)).collect(), Relation::Eq, 1.0);
    solve_lp(&lp).unwrap().objective
}

fn brute_force_best_response(g: &GameTree, adversary_plan: &[f64]) -> f64 {
    all_columns(g)
        .iter()
        .map(|c| c.iter().map(|&(q, u)| u * adversary_plan[q]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn random_game(players: usize, depth: usize, nu: f64, seed: u64) -> GameTree {
    generators::generate_random(&RandomGameConfig {
        players,
        depth,
        nu,
        seed,
        ..RandomGameConfig::default()
    })
    .unwrap()
}

#[test]
fn analytic_families() {
    let opts = TmeCorOptions::default();
    for (g, expected) in [
        (generators::build_example2(3, 2).unwrap(), 0.5),
        (generators::build_example2(4, 2).unwrap(), 0.5),
        (generators::build_example2(3, 3).unwrap(), 1.0 / 3.0),
        (generators::build_example1(3, 2).unwrap(), 0.5),
        (generators::build_example1(3, 3).unwrap(), 1.0 / 3.0),
    ] {
        let sol = solve_tmecor(&g, &opts, &Budget::unlimited()).unwrap();
        assert!((sol.value - expected).abs() < 1e-6, "{} vs {}", sol.value, expected);
        assert_eq!(sol.termination, Termination::KnownResponse);
    }
}

#[test]
fn example2_adversary_is_uniform_with_all_columns() {
    let g = generators::build_example2(3, 2).unwrap();
    let view = TeamView::new(&g).unwrap();
    let cols = all_columns(&g);
    let cs = view.sf.constraints(view.adversary);
    let (v, plan) = hybrid_minmax(cs, &cols).unwrap();
    assert!((v - 0.5).abs() < 1e-9);
    assert!((plan[1] - 0.5).abs() < 1e-9 && (plan[2] - 0.5).abs() < 1e-9);
    let max = hybrid_maxmin(cs, &cols).unwrap();
    assert!((max.value - 0.5).abs() < 1e-9);
}

#[test]
fn single_column_is_a_point_mass() {
    let g = random_game(3, 5, 0.5, 1);
    let view = TeamView::new(&g).unwrap();
    let br = br_oracle_exact(&view, &view.uniform_adversary_plan(), &ExactOracleOptions::default()).unwrap();
    let col = br.plan.utilities(&view);
    let cs = view.sf.constraints(view.adversary);
    let sol = hybrid_maxmin(cs, core::slice::from_ref(&col)).unwrap();
    assert!((sol.sigma[0] - 1.0).abs() < 1e-9);
    let w: Vec<(usize, f64)> = col.clone();
    let (adv, _) = crate::maxmin::best_response(view.sf.set(view.adversary), &w, false);
    assert!((sol.value - adv).abs() < 1e-9);
}

#[test]
fn hybrid_duality() {
    for seed in 0..10 {
        let g = random_game(3, 5, 0.5, seed);
        let view = TeamView::new(&g).unwrap();
        let cols = all_columns(&g);
        let cs = view.sf.constraints(view.adversary);
        let a = hybrid_maxmin(cs, &cols).unwrap();
        let (b, _) = hybrid_minmax(cs, &cols).unwrap();
        assert!((a.value - b).abs() < 1e-6);
    }
}

#[test]
fn column_generation_matches_enumeration() {
    for seed in 0..12 {
        for nu in [0.25, 0.5] {
            let g = random_game(3, 5, nu, seed);
            let sol = solve_tmecor(&g, &TmeCorOptions::default(), &Budget::unlimited()).unwrap();
            let expected = brute_force_value(&g);
            assert!((sol.value - expected).abs() < 1e-6, "seed {}: {} vs {}", seed, sol.value, expected);
            let q_a = TeamView::new(&g).unwrap().adversary_sequences();
            assert!(sol.support <= q_a);
            let sum: f64 = sol.sigma.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            let values: Vec<f64> = sol.trace.iter().filter_map(|r| r.restricted_value).collect();
            for w in values.windows(2) {
                assert!(w[1] >= w[0] - 1e-9);
            }
            for row in &sol.trace {
                if let Some(v) = row.restricted_value {
                    assert!(v <= expected + 1e-7);
                    assert!(row.oracle_value >= expected - 1e-7);
                }
            }
        }
    }
}

#[test]
fn exact_oracle_matches_brute_force() {
    for seed in 0..10 {
        let g = random_game(3, 5, 0.5, seed);
        let view = TeamView::new(&g).unwrap();
        let adv = view.uniform_adversary_plan();
        let br = br_oracle_exact(&view, &adv, &ExactOracleOptions::default()).unwrap();
        assert!(br.optimal);
        assert!((br.value - brute_force_best_response(&g, &adv)).abs() < 1e-9);
        let approx = br_oracle_approx(&view, &adv, 8, seed).unwrap();
        assert!(approx.value <= br.value + 1e-9);
    }
}

#[test]
fn exact_oracle_handles_negative_payoffs() {
    for seed in 0..6 {
        let g = random_game(3, 5, 0.5, seed).map_utilities(|u| 2.0 * u - 1.5);
        let view = TeamView::new(&g).unwrap();
        let adv = view.uniform_adversary_plan();
        let br = br_oracle_exact(&view, &adv, &ExactOracleOptions::default()).unwrap();
        assert!((br.value - brute_force_best_response(&g, &adv)).abs() < 1e-9);
    }
}

#[test]
fn example1_oracle_uses_the_spy_information_only_through_columns() {
    let g = generators::build_example1(3, 2).unwrap();
    let view = TeamView::new(&g).unwrap();
    let adv = view.uniform_adversary_plan();
    let br = br_oracle_exact(&view, &adv, &ExactOracleOptions::default()).unwrap();
    assert!((br.value - brute_force_best_response(&g, &adv)).abs() < 1e-12);
}

#[test]
fn maxsat_encoding_values() {
    let uniform = |g: &GameTree| {
        let view = TeamView::new(g).unwrap();
        let adv = view.uniform_adversary_plan();
        br_oracle_exact(&view, &adv, &ExactOracleOptions::default()).unwrap().value
    };
    let single = CnfFormula::new(1, vec![vec![1]]).unwrap();
    assert!((uniform(&generators::build_maxsat_game(&single).unwrap()) - 1.0).abs() < 1e-12);
    let contradiction = CnfFormula::new(1, vec![vec![1], vec![-1]]).unwrap();
    assert!((uniform(&generators::build_maxsat_game(&contradiction).unwrap()) - 0.5).abs() < 1e-12);
    let sat = CnfFormula::new(2, vec![vec![1, 2], vec![-1]]).unwrap();
    assert!((uniform(&generators::build_maxsat_game(&sat).unwrap()) - 1.0).abs() < 1e-12);
}

#[test]
fn integral_relaxation_rounds_exactly() {
    // a single teammate: the flow polytope is integral
    let g = random_game(2, 6, 0.5, 5);
    let view = TeamView::new(&g).unwrap();
    let adv = view.uniform_adversary_plan();
    let exact = br_oracle_exact(&view, &adv, &ExactOracleOptions::default()).unwrap();
    let approx = br_oracle_approx(&view, &adv, 1, 0).unwrap();
    assert!((exact.value - approx.value).abs() < 1e-9);
}

#[test]
fn joint_plan_structure() {
    let g = random_game(3, 6, 0.5, 2);
    let view = TeamView::new(&g).unwrap();
    let adv = view.uniform_adversary_plan();
    let br = br_oracle_exact(&view, &adv, &ExactOracleOptions::default()).unwrap();
    let plan = &br.plan;
    // every adversary sequence reaches at most one key leaf
    let mut seen = BTreeSet::new();
    for &l in &plan.key {
        assert!(seen.insert(view.sf.lead(l)[view.adversary]));
    }
    for (k, &i) in view.team.iter().enumerate() {
        assert!(view.sf.constraints(i).is_satisfied(&plan.pure[k]));
        for &q in &plan.terminal_sequences[k] {
            assert_eq!(plan.reduced[k][q], 1.0);
        }
    }
    // rebuilding from the reduced support gives the same key
    let again = JointReducedPlan::from_pure(&view, plan.pure.clone());
    assert_eq!(again.key, plan.key);
}

#[test]
fn approximate_column_generation_is_feasible_and_bounded() {
    for seed in 0..6 {
        let g = random_game(3, 5, 0.5, seed);
        let opts = TmeCorOptions {
            oracle: OracleKind::Approx { rounds: 16, seed: 1 },
            ..TmeCorOptions::default()
        };
        let sol = solve_tmecor(&g, &opts, &Budget::unlimited()).unwrap();
        assert!(sol.value <= brute_force_value(&g) + 1e-7);
        assert!(sol.upper_bound.is_none());
    }
}

#[test]
fn iteration_budget_is_respected() {
    let g = random_game(3, 6, 0.5, 3);
    let sol = solve_tmecor(&g, &TmeCorOptions::default(), &Budget::unlimited().with_max_iterations(2)).unwrap();
    assert!(sol.iterations <= 2);
    assert!(matches!(sol.termination, Termination::IterationLimit | Termination::KnownResponse));
    assert!(sol.gap().unwrap() >= 0.0);
}
