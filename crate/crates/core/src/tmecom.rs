//! Team-maxmin equilibrium with a communication device.
//!
//! The game is made team-observable, the team is folded into one
//! perfect-recall player and the resulting two-player game is solved as a
//! sequence-form maxmin LP.

use alloc::vec::Vec;

use crate::game::{GameError, GameTree, InfosetId, PlayerId};
use crate::maxmin::{solve_maxmin, MaxminError};
use crate::observable::{fold_team, force_t_observability, ObservableGame, TeamPath, TeamPlayerGame};
use crate::sequence::{build_sequence_form, realization_to_behavioral, SequenceError, SequenceForm};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TmeComError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Maxmin(#[from] MaxminError),
}

#[derive(Clone, Debug)]
pub struct TmeComSolution {
    pub value: f64,
    /// Realization plan of the folded team player.
    pub team_plan: Vec<f64>,
    /// Realization plan of the adversary in the folded game, whose sequences
    /// coincide with the adversary's sequences in the original game.
    pub adversary_plan: Vec<f64>,
    pub observable: ObservableGame,
    pub folded: TeamPlayerGame,
    pub sequence_form: SequenceForm,
    pub iterations: usize,
}

pub fn solve_tmecom(game: &GameTree) -> Result<TmeComSolution, TmeComError> {
    let observable = force_t_observability(game)?;
    let folded = fold_team(&observable)?;
    let sf = build_sequence_form(&folded.game)?;
    let (t, a) = (TeamPlayerGame::TEAM, TeamPlayerGame::ADVERSARY);
    let payoff: Vec<(usize, usize, f64)> = sf
        .terminal
        .iter()
        .map(|e| (e.profile[t], e.profile[a], e.utility))
        .collect();
    let sol = solve_maxmin(sf.constraints(t), sf.constraints(a), &payoff)?;
    Ok(TmeComSolution {
        value: sol.value,
        team_plan: sol.max_plan,
        adversary_plan: sol.min_plan,
        observable,
        folded,
        sequence_form: sf,
        iterations: sol.iterations,
    })
}

/// What the device tells `player` at `infoset` once the team has played
/// `team_path`.
#[derive(Clone, Debug, PartialEq)]
pub struct Recommendation {
    pub player: PlayerId,
    /// Infoset of the original game.
    pub infoset: InfosetId,
    pub team_path: TeamPath,
    pub distribution: Vec<f64>,
    /// The team plan never reaches this point; the distribution is uniform.
    pub unreachable: bool,
}

/// One recommendation per team infoset of the observable game, in the
/// folded team player's infoset order.
pub fn extract_recommendations(sol: &TmeComSolution) -> Vec<Recommendation> {
    let folded = &sol.folded.game;
    let (behavioral, unreachable) = realization_to_behavioral(
        folded,
        &sol.sequence_form,
        TeamPlayerGame::TEAM,
        &sol.team_plan,
    );
    behavioral
        .into_iter()
        .map(|(h, distribution)| {
            let obs_h = sol.folded.origin[h.0];
            let prov = &sol.observable.provenance[obs_h.0];
            Recommendation {
                player: sol.observable.game.infoset(obs_h).player,
                infoset: prov.original,
                team_path: prov.team_path.clone().unwrap_or_default(),
                distribution,
                unreachable: unreachable.contains(&h),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{self, RandomGameConfig};
    use crate::maxmin::adversary_response;
    use crate::sequence::{tree_expected_utility, uniform_behavioral};

    fn backward_induction(g: &GameTree, x: crate::NodeId) -> f64 {
        match g.infoset_of(x) {
            None => g.team_utility(x).unwrap(),
            Some(h) => {
                let vals = g.children(x).iter().map(|&c| backward_induction(g, c));
                if g.is_team(g.infoset(h).player) {
                    vals.fold(f64::NEG_INFINITY, f64::max)
                } else {
                    vals.fold(f64::INFINITY, f64::min)
                }
            }
        }
    }

    #[test]
    fn example1_value_is_one() {
        for m in [2, 3] {
            let g = generators::build_example1(3, m).unwrap();
            let sol = solve_tmecom(&g).unwrap();
            assert!((sol.value - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn example1_blind_teammate_copies_the_adversary() {
        let g = generators::build_example1(3, 2).unwrap();
        let sol = solve_tmecom(&g).unwrap();
        let recs = extract_recommendations(&sol);
        let blind: Vec<&Recommendation> = recs.iter().filter(|r| r.player == 1).collect();
        assert_eq!(blind.len(), 2);
        for r in blind {
            // the spy's observation identifies the adversary's action
            let (spy_infoset, _) = r.team_path[0];
            let spy_node = g.infoset(spy_infoset).nodes[0];
            let (_, k) = g.node(spy_node).parent.unwrap();
            assert!((r.distribution[k] - 1.0).abs() < 1e-9);
            assert!(!r.unreachable);
        }
    }

    #[test]
    fn perfect_information_matches_backward_induction() {
        for seed in 0..10 {
            let cfg = RandomGameConfig {
                nu: 0.0,
                depth: 6,
                seed,
                ..RandomGameConfig::default()
            };
            let g = generators::generate_random(&cfg).unwrap();
            let v = solve_tmecom(&g).unwrap().value;
            assert!((v - backward_induction(&g, g.root())).abs() < 1e-7);
        }
    }

    #[test]
    fn plans_are_mutual_best_responses() {
        for seed in 0..10 {
            let cfg = RandomGameConfig {
                nu: 0.5,
                depth: 6,
                seed,
                ..RandomGameConfig::default()
            };
            let g = generators::generate_random(&cfg).unwrap();
            let sol = solve_tmecom(&g).unwrap();
            let sf = &sol.sequence_form;
            let (t, a) = (TeamPlayerGame::TEAM, TeamPlayerGame::ADVERSARY);
            assert!(sf.constraints(t).is_satisfied(&sol.team_plan));
            assert!(sf.constraints(a).max_residual(&sol.adversary_plan) < 1e-7);
            let plans = [sol.team_plan.as_slice(), sol.adversary_plan.as_slice()];
            let (adv_val, _) = adversary_response(sf, a, &plans);
            assert!((adv_val - sol.value).abs() < 1e-6);
            let w = crate::maxmin::induced_weights(sf, t, &plans);
            let (team_val, _) = crate::maxmin::best_response(sf.set(t), &w, true);
            assert!((team_val - sol.value).abs() < 1e-6);
        }
    }

    #[test]
    fn replaying_recommendations_reproduces_the_value() {
        for seed in 0..10 {
            let cfg = RandomGameConfig {
                players: 4,
                nu: 0.6,
                depth: 6,
                seed,
                ..RandomGameConfig::default()
            };
            let g = generators::generate_random(&cfg).unwrap();
            let sol = solve_tmecom(&g).unwrap();
            let recs = extract_recommendations(&sol);
            // the observable game with the recommendations as behavioral
            // strategies for each teammate, the adversary's plan for the rest
            let obs = &sol.observable.game;
            let mut b = uniform_behavioral(obs);
            let folded_b = realization_to_behavioral(
                &sol.folded.game,
                &sol.sequence_form,
                TeamPlayerGame::ADVERSARY,
                &sol.adversary_plan,
            )
            .0;
            for (h, dist) in folded_b {
                b[sol.folded.origin[h.0].0] = dist;
            }
            for (h, r) in sol.folded.game.infosets_of(TeamPlayerGame::TEAM).zip(&recs) {
                b[sol.folded.origin[h.0].0] = r.distribution.clone();
            }
            let v = tree_expected_utility(obs, &b);
            assert!((v - sol.value).abs() < 1e-7, "{} vs {}", v, sol.value);
        }
    }

    #[test]
    fn single_teammate_is_plain_maxmin() {
        let cfg = RandomGameConfig {
            players: 2,
            nu: 0.7,
            depth: 6,
            seed: 3,
            ..RandomGameConfig::default()
        };
        let g = generators::generate_random(&cfg).unwrap();
        let sf = build_sequence_form(&g).unwrap();
        let payoff: Vec<_> = sf
            .terminal
            .iter()
            .map(|e| (e.profile[0], e.profile[1], e.utility))
            .collect();
        let direct = solve_maxmin(sf.constraints(0), sf.constraints(1), &payoff).unwrap();
        let sol = solve_tmecom(&g).unwrap();
        assert!((direct.value - sol.value).abs() < 1e-9);
    }
}
