//! Brute-force reference solvers that only use the game tree and the LP
//! engine.

use std::collections::BTreeMap;

use teamgame::core::game::{GameTree, InfosetId, NodeId};
use teamgame::core::lp::{solve_lp, LinearProgram, Relation, Sense};

const PLAN_CAP: usize = 2_000_000;

pub fn backward_induction(game: &GameTree) -> f64 {
    fn go(game: &GameTree, node: NodeId) -> f64 {
        if let Some(u) = game.team_utility(node) {
            return u;
        }
        let values = game.children(node).iter().map(|&c| go(game, c));
        if game.is_team(game.owner(node).unwrap()) {
            values.fold(f64::NEG_INFINITY, f64::max)
        } else {
            values.fold(f64::INFINITY, f64::min)
        }
    }
    go(game, game.root())
}

/// Per node, `Some(key)` for team nodes; the team must take the same action
/// at nodes sharing a key.
type Keys = Vec<Option<usize>>;

/// Keys of the team members' own information sets, all under one
/// enumeration so that choices are only made where the whole team's earlier
/// choices allow play to arrive (jointly-reduced plans).
pub fn member_keys(game: &GameTree) -> Keys {
    (0..game.num_nodes())
        .map(|i| {
            let n = NodeId(i);
            game.is_team(game.owner(n)?).then(|| game.infoset_of(n).unwrap().0)
        })
        .collect()
}

/// Keys of a single team player that sees every teammate's move: a node's
/// key is its infoset together with the ordered team actions above it.
pub fn folded_keys(game: &GameTree) -> Keys {
    let mut intern: BTreeMap<(InfosetId, Vec<(InfosetId, usize)>), usize> = BTreeMap::new();
    let mut keys = vec![None; game.num_nodes()];
    let mut stack = vec![(game.root(), Vec::new())];
    while let Some((node, path)) = stack.pop() {
        let Some(h) = game.infoset_of(node) else { continue };
        let team = game.is_team(game.owner(node).unwrap());
        if team {
            let next = intern.len();
            let id = *intern.entry((h, path.clone())).or_insert(next);
            keys[node.0] = Some(id);
        }
        for (a, &c) in game.children(node).iter().enumerate() {
            let mut p = path.clone();
            if team {
                p.push((h, a));
            }
            stack.push((c, p));
        }
    }
    keys
}

/// All reduced pure team plans: choices only at keys that play can reach
/// given the team's earlier choices.
///
/// Every pure plan agrees with exactly one of these on all keys that play
/// reaches, so their columns cover every pure plan.
fn reduced_plans(game: &GameTree, keys: &Keys) -> Vec<BTreeMap<usize, usize>> {
    fn frontier(game: &GameTree, keys: &Keys, node: NodeId, plan: &BTreeMap<usize, usize>) -> Option<(usize, usize)> {
        let children = game.children(node);
        match keys[node.0] {
            Some(key) => match plan.get(&key) {
                Some(&a) => frontier(game, keys, children[a], plan),
                None => Some((key, children.len())),
            },
            None => children.iter().find_map(|&c| frontier(game, keys, c, plan)),
        }
    }
    fn go(game: &GameTree, keys: &Keys, plan: &mut BTreeMap<usize, usize>, out: &mut Vec<BTreeMap<usize, usize>>) {
        match frontier(game, keys, game.root(), plan) {
            None => {
                out.push(plan.clone());
                assert!(out.len() <= PLAN_CAP, "too many reduced plans");
            }
            Some((key, actions)) => {
                for a in 0..actions {
                    plan.insert(key, a);
                    go(game, keys, plan, out);
                }
                plan.remove(&key);
            }
        }
    }
    let mut out = Vec::new();
    go(game, keys, &mut BTreeMap::new(), &mut out);
    out
}

/// Adversary sequences: index 0 is the empty sequence.
struct AdversarySequences {
    index: BTreeMap<(InfosetId, usize), usize>,
    /// Per adversary infoset, its parent sequence and its extensions.
    infosets: Vec<(usize, Vec<usize>)>,
}

impl AdversarySequences {
    fn new(game: &GameTree) -> Self {
        let adv = game.adversary();
        let mut index = BTreeMap::new();
        let mut infosets = Vec::new();
        let ids: Vec<InfosetId> = (0..game.infosets().len())
            .map(InfosetId)
            .filter(|&h| game.infoset(h).player == adv)
            .collect();
        for &h in &ids {
            for a in 0..game.infoset(h).num_actions() {
                let next = index.len() + 1;
                index.insert((h, a), next);
            }
        }
        let mut this = AdversarySequences { index, infosets: Vec::new() };
        for &h in &ids {
            let parent = this.sequence_at(game, game.infoset(h).nodes[0]);
            let ext = (0..game.infoset(h).num_actions()).map(|a| this.index[&(h, a)]).collect();
            infosets.push((parent, ext));
        }
        this.infosets = infosets;
        this
    }

    fn len(&self) -> usize {
        self.index.len() + 1
    }

    fn sequence_at(&self, game: &GameTree, node: NodeId) -> usize {
        game.own_history(node, game.adversary())
            .last()
            .map(|k| self.index[k])
            .unwrap_or(0)
    }
}

/// Payoff of one team plan against each adversary sequence.
fn column(game: &GameTree, keys: &Keys, plan: &BTreeMap<usize, usize>, seqs: &AdversarySequences) -> Vec<f64> {
    let mut col = vec![0.0; seqs.len()];
    let mut stack = vec![game.root()];
    while let Some(node) = stack.pop() {
        if let Some(u) = game.team_utility(node) {
            col[seqs.sequence_at(game, node)] += u;
            continue;
        }
        let children = game.children(node);
        match keys[node.0] {
            Some(key) => stack.push(children[plan[&key]]),
            None => stack.extend_from_slice(children),
        }
    }
    col
}

/// `max_sigma min_y sigma^T A y` over the adversary's realization plans,
/// with one column of `A` per team plan.
fn mixed_maxmin(seqs: &AdversarySequences, columns: &[Vec<f64>]) -> f64 {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let sigma: Vec<_> = columns.iter().map(|_| lp.add_nonneg(0.0)).collect();
    lp.add_row(sigma.iter().map(|&s| (s, 1.0)).collect(), Relation::Eq, 1.0);
    let z0 = lp.add_free(1.0);
    let z: Vec<_> = seqs.infosets.iter().map(|_| lp.add_free(0.0)).collect();
    for s in 0..seqs.len() {
        let mut row: Vec<_> = columns
            .iter()
            .zip(&sigma)
            .filter(|(c, _)| c[s] != 0.0)
            .map(|(c, &v)| (v, c[s]))
            .collect();
        if s == 0 {
            row.push((z0, -1.0));
        }
        for (h, (parent, ext)) in seqs.infosets.iter().enumerate() {
            if *parent == s {
                row.push((z[h], -1.0));
            }
            if ext.contains(&s) {
                row.push((z[h], 1.0));
            }
        }
        lp.add_row(row, Relation::Ge, 0.0);
    }
    let sol = solve_lp(&lp).expect("reference LP");
    assert!(sol.is_optimal(), "reference LP status {:?}", sol.status);
    sol.objective
}

fn value_with_keys(game: &GameTree, keys: &Keys) -> f64 {
    let seqs = AdversarySequences::new(game);
    let mut columns: Vec<Vec<f64>> = reduced_plans(game, keys)
        .iter()
        .map(|plan| column(game, keys, plan, &seqs))
        .collect();
    columns.sort_by(|a, b| a.partial_cmp(b).unwrap());
    columns.dedup();
    mixed_maxmin(&seqs, &columns)
}

/// Team value with a correlation device: the team mixes over joint
/// reduced plans.
pub fn correlated_value(game: &GameTree) -> f64 {
    value_with_keys(game, &member_keys(game))
}

/// Team value with full communication: one player who sees all team moves.
pub fn folded_value(game: &GameTree) -> f64 {
    value_with_keys(game, &folded_keys(game))
}

pub fn max_satisfiable(num_vars: usize, clauses: &[Vec<i32>]) -> usize {
    (0u32..1 << num_vars)
        .map(|bits| {
            clauses
                .iter()
                .filter(|c| {
                    c.iter().any(|&l| {
                        let v = bits >> (l.unsigned_abs() - 1) & 1 == 1;
                        if l > 0 {
                            v
                        } else {
                            !v
                        }
                    })
                })
                .count()
        })
        .max()
        .unwrap()
}

/// SplitMix64, for test-side instance generation.
pub struct Mix(pub u64);

impl Mix {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}
