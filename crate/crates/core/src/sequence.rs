//! Sequence-form representation: per-player sequence sets, the flow
//! constraints `F r = f`, realization plans and the sparse terminal map.
//!
//! Sequences are dense indices per player, allocated in depth-first order;
//! index 0 is the empty sequence and a sequence's parent always has a lower
//! index than the sequence itself.

use alloc::vec;
use alloc::vec::Vec;

use crate::game::{GameTree, InfosetId, NodeId, PlayerId};

/// Absolute tolerance on `F r = f`.
pub const PLAN_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SequenceError {
    #[error("infoset {infoset:?} of player {player} is reached through different own sequences")]
    AmbiguousEntry { player: PlayerId, infoset: InfosetId },
    #[error("behavioral distribution at infoset {0:?} does not sum to one")]
    NotNormalized(InfosetId),
    #[error("behavioral distribution at infoset {0:?} has the wrong length or negative entries")]
    MalformedDistribution(InfosetId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSet {
    player: PlayerId,
    parent: Vec<Option<(usize, InfosetId, usize)>>,
    infosets: Vec<InfosetId>,
    entry: Vec<Option<usize>>,
    first_extension: Vec<Option<usize>>,
    num_actions: Vec<usize>,
    entered: Vec<Vec<InfosetId>>,
}

impl SequenceSet {
    pub fn player(&self) -> PlayerId {
        self.player
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// `(parent sequence, infoset, action)` for a non-empty sequence.
    pub fn parent(&self, seq: usize) -> Option<(usize, InfosetId, usize)> {
        self.parent[seq]
    }

    /// The player's infosets in discovery order.
    pub fn infosets(&self) -> &[InfosetId] {
        &self.infosets
    }

    /// The unique sequence leading to `h`.
    pub fn entry(&self, h: InfosetId) -> usize {
        self.entry[h.0].expect("infoset of another player")
    }

    pub fn extension(&self, h: InfosetId, action: usize) -> usize {
        self.first_extension[h.0].expect("infoset of another player") + action
    }

    pub fn num_actions(&self, h: InfosetId) -> usize {
        self.num_actions[h.0]
    }

    /// Infosets whose entry sequence is `seq`.
    pub fn entered_by(&self, seq: usize) -> &[InfosetId] {
        &self.entered[seq]
    }

    pub fn owns(&self, h: InfosetId) -> bool {
        self.entry.get(h.0).map(|e| e.is_some()).unwrap_or(false)
    }

    /// True when `prefix` is `seq` or one of its ancestors.
    pub fn is_prefix(&self, prefix: usize, mut seq: usize) -> bool {
        loop {
            if seq == prefix {
                return true;
            }
            match self.parent[seq] {
                Some((p, _, _)) => seq = p,
                None => return false,
            }
        }
    }
}

/// Sparse `F` (rows: the root row then one per infoset) and `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSystem {
    pub num_sequences: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
    /// `None` for the root row.
    pub row_infoset: Vec<Option<InfosetId>>,
}

impl ConstraintSystem {
    fn from_set(set: &SequenceSet) -> Self {
        let mut rows = vec![vec![(0, 1.0)]];
        let mut rhs = vec![1.0];
        let mut row_infoset = vec![None];
        for &h in &set.infosets {
            let mut row = vec![(set.entry(h), -1.0)];
            row.extend((0..set.num_actions(h)).map(|a| (set.extension(h, a), 1.0)));
            rows.push(row);
            rhs.push(0.0);
            row_infoset.push(Some(h));
        }
        ConstraintSystem {
            num_sequences: set.len(),
            rows,
            rhs,
            row_infoset,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Largest absolute violation of `F r = f`.
    pub fn max_residual(&self, plan: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| (row.iter().map(|&(j, c)| c * plan[j]).sum::<f64>() - b).abs())
            .fold(0.0, f64::max)
    }

    /// `F r = f` within [`PLAN_TOLERANCE`] and no entry below `-1e-12`.
    pub fn is_satisfied(&self, plan: &[f64]) -> bool {
        plan.len() == self.num_sequences
            && self.max_residual(plan) <= PLAN_TOLERANCE
            && plan.iter().all(|&x| x >= -1e-12)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealizationPlan {
    pub player: PlayerId,
    pub probs: Vec<f64>,
}

impl RealizationPlan {
    pub fn is_pure(&self) -> bool {
        self.probs
            .iter()
            .all(|&p| p.abs() <= 1e-9 || (p - 1.0).abs() <= 1e-9)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlayerSequences {
    pub set: SequenceSet,
    pub constraints: ConstraintSystem,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TerminalEntry {
    pub leaf: NodeId,
    /// One sequence index per player.
    pub profile: Vec<usize>,
    pub utility: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceForm {
    pub players: Vec<PlayerSequences>,
    /// One entry per leaf, in leaf preorder.
    pub terminal: Vec<TerminalEntry>,
    lead: Vec<Vec<usize>>,
}

/// Per-infoset action distributions indexed by global infoset id. Entries
/// for infosets of players that are not involved may be left empty.
pub type Behavioral = Vec<Vec<f64>>;

pub fn uniform_behavioral(game: &GameTree) -> Behavioral {
    game.infosets()
        .iter()
        .map(|h| vec![1.0 / h.num_actions() as f64; h.num_actions()])
        .collect()
}

/// Builds sequence sets, constraint systems and the terminal map.
pub fn build_sequence_form(game: &GameTree) -> Result<SequenceForm, SequenceError> {
    let n = game.num_players();
    let num_infosets = game.infosets().len();
    let mut sets: Vec<SequenceSet> = (0..n)
        .map(|p| SequenceSet {
            player: p,
            parent: vec![None],
            infosets: Vec::new(),
            entry: vec![None; num_infosets],
            first_extension: vec![None; num_infosets],
            num_actions: vec![0; num_infosets],
            entered: vec![Vec::new()],
        })
        .collect();
    let mut lead = vec![Vec::new(); game.num_nodes()];
    lead[0] = vec![0; n];
    for x in 0..game.num_nodes() {
        let id = NodeId(x);
        let Some(h) = game.infoset_of(id) else {
            continue;
        };
        let p = game.infoset(h).player;
        let here = lead[x][p];
        let set = &mut sets[p];
        match set.entry[h.0] {
            Some(e) if e != here => {
                return Err(SequenceError::AmbiguousEntry {
                    player: p,
                    infoset: h,
                })
            }
            Some(_) => {}
            None => {
                set.entry[h.0] = Some(here);
                set.entered[here].push(h);
                set.infosets.push(h);
                let first = set.parent.len();
                set.first_extension[h.0] = Some(first);
                set.num_actions[h.0] = game.infoset(h).num_actions();
                for a in 0..game.infoset(h).num_actions() {
                    set.parent.push(Some((here, h, a)));
                    set.entered.push(Vec::new());
                }
            }
        }
        let first = sets[p].first_extension[h.0].unwrap();
        for (a, &c) in game.children(id).iter().enumerate() {
            let mut profile = lead[x].clone();
            profile[p] = first + a;
            lead[c.0] = profile;
        }
    }
    let terminal = game
        .leaves()
        .iter()
        .map(|&l| TerminalEntry {
            leaf: l,
            profile: lead[l.0].clone(),
            utility: game.team_utility(l).unwrap(),
        })
        .collect();
    let players = sets
        .into_iter()
        .map(|set| PlayerSequences {
            constraints: ConstraintSystem::from_set(&set),
            set,
        })
        .collect();
    Ok(SequenceForm {
        players,
        terminal,
        lead,
    })
}

impl SequenceForm {
    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn set(&self, player: PlayerId) -> &SequenceSet {
        &self.players[player].set
    }

    pub fn constraints(&self, player: PlayerId) -> &ConstraintSystem {
        &self.players[player].constraints
    }

    /// Sequence profile (one index per player) leading to `node`.
    pub fn lead(&self, node: NodeId) -> &[usize] {
        &self.lead[node.0]
    }

    /// The restriction of `lead(node)` to `players`, in the given order.
    pub fn path(&self, node: NodeId, players: &[PlayerId]) -> Vec<usize> {
        players.iter().map(|&p| self.lead[node.0][p]).collect()
    }

    /// Expected team utility of a profile of realization plans (one per
    /// player, indexed by player id).
    pub fn expected_utility(&self, plans: &[&[f64]]) -> f64 {
        self.terminal
            .iter()
            .map(|t| {
                t.utility
                    * t.profile
                        .iter()
                        .zip(plans)
                        .map(|(&q, r)| r[q])
                        .product::<f64>()
            })
            .sum()
    }

    /// Realization plan of the all-uniform behavioral strategy.
    pub fn uniform_plan(&self, game: &GameTree, player: PlayerId) -> RealizationPlan {
        behavioral_to_realization(game, self, player, &uniform_behavioral(game))
            .expect("uniform strategy is normalized")
    }
}

/// Kuhn conversion: `r(qa) = r(q) * pi(h, a)`.
pub fn behavioral_to_realization(
    game: &GameTree,
    sf: &SequenceForm,
    player: PlayerId,
    behavioral: &Behavioral,
) -> Result<RealizationPlan, SequenceError> {
    let set = sf.set(player);
    for &h in set.infosets() {
        let dist = &behavioral[h.0];
        if dist.len() != game.infoset(h).num_actions() || dist.iter().any(|&p| p < -1e-12) {
            return Err(SequenceError::MalformedDistribution(h));
        }
        if (dist.iter().sum::<f64>() - 1.0).abs() > PLAN_TOLERANCE {
            return Err(SequenceError::NotNormalized(h));
        }
    }
    let mut probs = vec![0.0; set.len()];
    probs[0] = 1.0;
    for s in 1..set.len() {
        let (q, h, a) = set.parent(s).unwrap();
        probs[s] = probs[q] * behavioral[h.0][a];
    }
    Ok(RealizationPlan { player, probs })
}

/// Inverse conversion. Infosets whose entry sequence has probability zero
/// get a uniform distribution and are listed in the second component.
pub fn realization_to_behavioral(
    game: &GameTree,
    sf: &SequenceForm,
    player: PlayerId,
    plan: &[f64],
) -> (Vec<(InfosetId, Vec<f64>)>, Vec<InfosetId>) {
    let set = sf.set(player);
    let mut out = Vec::with_capacity(set.infosets().len());
    let mut unreachable = Vec::new();
    for &h in set.infosets() {
        let k = game.infoset(h).num_actions();
        let mass: Vec<f64> = (0..k).map(|a| plan[set.extension(h, a)].max(0.0)).collect();
        let total: f64 = mass.iter().sum();
        if plan[set.entry(h)] <= 1e-12 || total <= 1e-12 {
            unreachable.push(h);
            out.push((h, vec![1.0 / k as f64; k]));
        } else {
            out.push((h, mass.iter().map(|m| m / total).collect()));
        }
    }
    (out, unreachable)
}

/// Expected team utility by walking the tree with behavioral strategies for
/// every player.
pub fn tree_expected_utility(game: &GameTree, behavioral: &Behavioral) -> f64 {
    fn walk(game: &GameTree, b: &Behavioral, x: NodeId) -> f64 {
        match game.infoset_of(x) {
            None => game.team_utility(x).unwrap(),
            Some(h) => game
                .children(x)
                .iter()
                .enumerate()
                .map(|(a, &c)| {
                    let p = b[h.0][a];
                    if p == 0.0 {
                        0.0
                    } else {
                        p * walk(game, b, c)
                    }
                })
                .sum(),
        }
    }
    walk(game, behavioral, game.root())
}
