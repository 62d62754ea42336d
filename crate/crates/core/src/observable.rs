//! Team observability and team folding.
//!
//! [`force_t_observability`] splits every team information set by the team
//! actions taken on the way to each of its nodes, so that all teammates
//! agree on what the team as a whole has done. [`fold_team`] then merges the
//! teammates into a single player, which has perfect recall on the result.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::game::{GameError, GameTree, InfosetId, NodeId, PlayerId};

/// Ordered list of `(original infoset, action)` team moves.
pub type TeamPath = Vec<(InfosetId, usize)>;

#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub original: InfosetId,
    /// `None` for adversary infosets, which are left as they are.
    pub team_path: Option<TeamPath>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservableGame {
    /// Same players, nodes and payoffs as the input; only team infosets are
    /// relabeled.
    pub game: GameTree,
    /// Indexed by infoset id of `game`.
    pub provenance: Vec<Provenance>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TeamPlayerGame {
    /// Two players: the team player `0` and the adversary `1`.
    pub game: GameTree,
    /// Indexed by infoset id of `game`: the infoset of the observable game
    /// it came from.
    pub origin: Vec<InfosetId>,
}

impl TeamPlayerGame {
    pub const TEAM: PlayerId = 0;
    pub const ADVERSARY: PlayerId = 1;
}

/// Team moves on the path from the root to every node, indexed by node id.
pub(crate) fn team_paths(game: &GameTree) -> Vec<TeamPath> {
    let mut paths: Vec<TeamPath> = vec![Vec::new(); game.num_nodes()];
    for x in 0..game.num_nodes() {
        let id = NodeId(x);
        let Some(h) = game.infoset_of(id) else {
            continue;
        };
        let team = game.is_team(game.infoset(h).player);
        for (a, &c) in game.children(id).iter().enumerate() {
            let mut p = paths[x].clone();
            if team {
                p.push((h, a));
            }
            paths[c.0] = p;
        }
    }
    paths
}

pub fn force_t_observability(game: &GameTree) -> Result<ObservableGame, GameError> {
    let paths = team_paths(game);
    let mut ids: BTreeMap<(&TeamPath, InfosetId), usize> = BTreeMap::new();
    let mut next = vec![0usize; game.num_players()];
    let mut label = vec![(0, 0); game.num_nodes()];
    for x in 0..game.num_nodes() {
        let id = NodeId(x);
        let Some(h) = game.infoset_of(id) else {
            continue;
        };
        let info = game.infoset(h);
        if !game.is_team(info.player) {
            label[x] = (info.player, info.label);
            continue;
        }
        let l = *ids.entry((&paths[x], h)).or_insert_with(|| {
            let l = next[info.player];
            next[info.player] += 1;
            l
        });
        label[x] = (info.player, l);
    }
    let spec = game.spec_with(game.root(), &|n| label[n.0]);
    let out = GameTree::from_spec(game.num_players(), game.adversary(), &spec)?;
    let mut provenance: Vec<Option<Provenance>> = vec![None; out.infosets().len()];
    for x in 0..game.num_nodes() {
        let id = NodeId(x);
        if let (Some(h_old), Some(h_new)) = (game.infoset_of(id), out.infoset_of(id)) {
            if provenance[h_new.0].is_none() {
                let team_path = game
                    .is_team(game.infoset(h_old).player)
                    .then(|| paths[x].clone());
                provenance[h_new.0] = Some(Provenance {
                    original: h_old,
                    team_path,
                });
            }
        }
    }
    Ok(ObservableGame {
        game: out,
        provenance: provenance
            .into_iter()
            .map(|p| p.expect("every infoset has a node"))
            .collect(),
    })
}

/// Merges all team members into player 0; the adversary becomes player 1.
/// Fails only if the result lacks perfect recall, which cannot happen for
/// the output of [`force_t_observability`].
pub fn fold_team(obs: &ObservableGame) -> Result<TeamPlayerGame, GameError> {
    let g = &obs.game;
    let mut team_label: BTreeMap<InfosetId, usize> = BTreeMap::new();
    let mut label = vec![(0, 0); g.num_nodes()];
    for x in 0..g.num_nodes() {
        let Some(h) = g.infoset_of(NodeId(x)) else {
            continue;
        };
        let info = g.infoset(h);
        label[x] = if g.is_team(info.player) {
            let next = team_label.len();
            (TeamPlayerGame::TEAM, *team_label.entry(h).or_insert(next))
        } else {
            (TeamPlayerGame::ADVERSARY, info.label)
        };
    }
    let spec = g.spec_with(g.root(), &|n| label[n.0]);
    let folded = GameTree::from_spec(2, TeamPlayerGame::ADVERSARY, &spec)?;
    let mut origin = vec![InfosetId(usize::MAX); folded.infosets().len()];
    for x in 0..g.num_nodes() {
        if let (Some(h), Some(f)) = (g.infoset_of(NodeId(x)), folded.infoset_of(NodeId(x))) {
            origin[f.0] = h;
        }
    }
    Ok(TeamPlayerGame { game: folded, origin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{validate_perfect_recall, NodeSpec};
    use crate::generators::{self, RandomGameConfig};

    fn team_partition(g: &GameTree) -> Vec<Vec<NodeId>> {
        let mut sets: Vec<Vec<NodeId>> = g
            .infosets()
            .iter()
            .filter(|h| g.is_team(h.player))
            .map(|h| h.nodes.clone())
            .collect();
        sets.sort();
        sets
    }

    #[test]
    fn perfect_information_is_unchanged() {
        let cfg = RandomGameConfig {
            nu: 0.0,
            seed: 4,
            ..RandomGameConfig::default()
        };
        let g = generators::generate_random(&cfg).unwrap();
        let obs = force_t_observability(&g).unwrap();
        assert_eq!(team_partition(&obs.game), team_partition(&g));
    }

    #[test]
    fn example1_splits_the_blind_teammate() {
        for m in [2, 3] {
            let g = generators::build_example1(3, m).unwrap();
            let obs = force_t_observability(&g).unwrap();
            assert_eq!(obs.game.infosets_of(1).count(), m);
            assert_eq!(obs.game.infosets_of(0).count(), m);
            assert_eq!(obs.game.infosets_of(2).count(), 1);
        }
    }

    #[test]
    fn example2_splits_by_earlier_teammate_moves() {
        let g = generators::build_example2(3, 2).unwrap();
        let obs = force_t_observability(&g).unwrap();
        assert_eq!(obs.game.infosets_of(0).count(), 1);
        assert_eq!(obs.game.infosets_of(1).count(), 2);
        for h in obs.game.infosets_of(1) {
            let p = obs.provenance[h.0].team_path.as_ref().unwrap();
            assert_eq!(p.len(), 1);
            assert_eq!(obs.game.infoset(h).nodes.len(), 2);
        }
    }

    #[test]
    fn interleaved_team_moves_stay_apart() {
        // the adversary chooses which teammate moves first; the third
        // teammate sees neither
        let tail = |first: usize, second: usize| {
            let last = NodeSpec::decision(2, 0, [("z", NodeSpec::leaf(1.0)), ("w", NodeSpec::leaf(0.0))]);
            NodeSpec::decision(first, 0, [("go", NodeSpec::decision(second, 0, [("go", last)]))])
        };
        let spec = NodeSpec::decision(3, 0, [("l", tail(0, 1)), ("r", tail(1, 0))]);
        let g = GameTree::from_spec(4, 3, &spec).unwrap();
        let obs = force_t_observability(&g).unwrap();
        assert_eq!(obs.game.infosets_of(2).count(), 2);
        let folded = fold_team(&obs).unwrap();
        assert!(validate_perfect_recall(&folded.game).is_empty());
    }

    #[test]
    fn refines_original_partition_and_is_idempotent() {
        for seed in 0..20 {
            for players in [3, 4] {
                let cfg = RandomGameConfig {
                    players,
                    depth: 6,
                    nu: 0.7,
                    seed,
                    ..RandomGameConfig::default()
                };
                let g = generators::generate_random(&cfg).unwrap();
                let obs = force_t_observability(&g).unwrap();
                assert_eq!(obs.game.num_nodes(), g.num_nodes());
                for (hn, info) in obs.game.infosets().iter().enumerate() {
                    let orig = obs.provenance[hn].original;
                    assert_eq!(g.infoset(orig).player, info.player);
                    for &x in &info.nodes {
                        assert_eq!(g.infoset_of(x), Some(orig));
                    }
                    if !g.is_team(info.player) {
                        assert_eq!(g.infoset(orig).nodes, info.nodes);
                    }
                }
                let paths = team_paths(&g);
                for info in obs.game.infosets() {
                    for &x in &info.nodes {
                        if g.is_team(info.player) {
                            assert_eq!(paths[x.0], paths[info.nodes[0].0]);
                        }
                    }
                }
                let again = force_t_observability(&obs.game).unwrap();
                assert_eq!(again.game, obs.game);
                let folded = fold_team(&obs).unwrap();
                assert!(validate_perfect_recall(&folded.game).is_empty());
                assert_eq!(folded.game.leaves(), g.leaves());
            }
        }
    }

    #[test]
    fn folding_a_single_teammate_keeps_the_game() {
        let cfg = RandomGameConfig {
            players: 2,
            nu: 0.8,
            seed: 9,
            ..RandomGameConfig::default()
        };
        let g = generators::generate_random(&cfg).unwrap();
        let folded = fold_team(&force_t_observability(&g).unwrap()).unwrap();
        assert_eq!(team_partition(&folded.game), team_partition(&g));
        assert_eq!(folded.game.num_nodes(), g.num_nodes());
    }
}
