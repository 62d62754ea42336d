//! Game trees for zero-sum single-team single-adversary games.
//!
//! A [`GameTree`] is an immutable arena of nodes in depth-first preorder
//! (the root is `NodeId(0)`). Only the team utility is stored at leaves; the
//! adversary receives `-(team size) * U_T`. There is no chance player.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub type PlayerId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

/// Index into [`GameTree::infosets`]; unique across all players.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InfosetId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Recursive description of a game, mirroring the on-disk document.
#[derive(Clone, Debug, PartialEq)]
pub enum NodeSpec {
    Leaf {
        team_utility: f64,
    },
    Decision {
        player: PlayerId,
        /// Information-set id, scoped per player.
        infoset: usize,
        actions: Vec<ActionSpec>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionSpec {
    pub label: String,
    pub child: NodeSpec,
}

impl NodeSpec {
    pub fn leaf(team_utility: f64) -> Self {
        NodeSpec::Leaf { team_utility }
    }

    pub fn decision<L: Into<String>>(
        player: PlayerId,
        infoset: usize,
        actions: impl IntoIterator<Item = (L, NodeSpec)>,
    ) -> Self {
        NodeSpec::Decision {
            player,
            infoset,
            actions: actions
                .into_iter()
                .map(|(label, child)| ActionSpec {
                    label: label.into(),
                    child,
                })
                .collect(),
        }
    }
}

/// Flat node description used by [`GameTree::from_arena`].
#[derive(Clone, Debug, PartialEq)]
pub enum ArenaNode {
    Leaf {
        team_utility: f64,
    },
    Decision {
        player: PlayerId,
        infoset: usize,
        actions: Vec<(String, usize)>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Infoset {
    pub player: PlayerId,
    /// The per-player id used in documents.
    pub label: usize,
    pub actions: Vec<String>,
    /// Member nodes in preorder.
    pub nodes: Vec<NodeId>,
}

impl Infoset {
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Decision {
        infoset: InfosetId,
        children: Vec<NodeId>,
    },
    Leaf {
        team_utility: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    /// Parent node and the index of the action leading here.
    pub parent: Option<(NodeId, usize)>,
    pub depth: usize,
    pub kind: NodeKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecallViolation {
    pub player: PlayerId,
    /// Per-player infoset id.
    pub infoset: usize,
    pub first: NodeId,
    pub second: NodeId,
}

impl fmt::Display for RecallViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "player {} infoset {}: {} and {} have different own histories",
            self.player, self.infoset, self.first, self.second
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("node {0} is referenced more than once (cycle or shared child)")]
    Revisited(usize),
    #[error("node {0} is not reachable from the root")]
    Orphan(usize),
    #[error("node {node} references missing child {child}")]
    Dangling { node: usize, child: usize },
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GameError {
    #[error("a game needs at least two players, got {0}")]
    TooFewPlayers(usize),
    #[error("adversary {adversary} is not a valid player id (players: {players})")]
    BadAdversary { adversary: PlayerId, players: usize },
    #[error("{path}: unknown player {player}")]
    UnknownPlayer { path: String, player: PlayerId },
    #[error("{path}: decision node has no actions")]
    NoActions { path: String },
    #[error("{path}: action label {label:?} repeated in infoset {infoset} of player {player}")]
    DuplicateAction {
        path: String,
        player: PlayerId,
        infoset: usize,
        label: String,
    },
    #[error("{path}: infoset {infoset} of player {player} lists actions {found:?}, expected {expected:?}")]
    InfosetActionMismatch {
        path: String,
        player: PlayerId,
        infoset: usize,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("{path}: team utility must be finite")]
    NonFinitePayoff { path: String },
    #[error("perfect recall violated ({} violations, first: {})", .0.len(), .0[0])]
    PerfectRecall(Vec<RecallViolation>),
    #[error("malformed tree: {0}")]
    Structure(#[from] StructureError),
    #[error("player {0} is not a team member")]
    NotTeamMember(PlayerId),
}

/// The team is every player but the adversary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TeamSpec {
    pub members: Vec<PlayerId>,
    pub adversary: PlayerId,
}

impl TeamSpec {
    pub fn contains(&self, player: PlayerId) -> bool {
        player != self.adversary && self.members.binary_search(&player).is_ok()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameTree {
    num_players: usize,
    adversary: PlayerId,
    nodes: Vec<Node>,
    infosets: Vec<Infoset>,
    leaves: Vec<NodeId>,
}

struct Builder {
    num_players: usize,
    nodes: Vec<Node>,
    infosets: Vec<Infoset>,
    infoset_index: BTreeMap<(PlayerId, usize), InfosetId>,
    leaves: Vec<NodeId>,
}

impl Builder {
    fn add(
        &mut self,
        spec: &NodeSpec,
        parent: Option<(NodeId, usize)>,
        depth: usize,
        path: &mut String,
    ) -> Result<NodeId, GameError> {
        let id = NodeId(self.nodes.len());
        match spec {
            NodeSpec::Leaf { team_utility } => {
                if !team_utility.is_finite() {
                    return Err(GameError::NonFinitePayoff { path: path.clone() });
                }
                self.nodes.push(Node {
                    parent,
                    depth,
                    kind: NodeKind::Leaf {
                        team_utility: *team_utility,
                    },
                });
                self.leaves.push(id);
            }
            NodeSpec::Decision {
                player,
                infoset,
                actions,
            } => {
                if *player >= self.num_players {
                    return Err(GameError::UnknownPlayer {
                        path: path.clone(),
                        player: *player,
                    });
                }
                if actions.is_empty() {
                    return Err(GameError::NoActions { path: path.clone() });
                }
                for (i, a) in actions.iter().enumerate() {
                    if actions[..i].iter().any(|b| b.label == a.label) {
                        return Err(GameError::DuplicateAction {
                            path: path.clone(),
                            player: *player,
                            infoset: *infoset,
                            label: a.label.clone(),
                        });
                    }
                }
                let h = match self.infoset_index.get(&(*player, *infoset)) {
                    Some(&h) => {
                        let expected = &self.infosets[h.0].actions;
                        if expected.len() != actions.len()
                            || expected.iter().zip(actions).any(|(e, a)| *e != a.label)
                        {
                            return Err(GameError::InfosetActionMismatch {
                                path: path.clone(),
                                player: *player,
                                infoset: *infoset,
                                expected: expected.clone(),
                                found: actions.iter().map(|a| a.label.clone()).collect(),
                            });
                        }
                        h
                    }
                    None => {
                        let h = InfosetId(self.infosets.len());
                        self.infosets.push(Infoset {
                            player: *player,
                            label: *infoset,
                            actions: actions.iter().map(|a| a.label.clone()).collect(),
                            nodes: Vec::new(),
                        });
                        self.infoset_index.insert((*player, *infoset), h);
                        h
                    }
                };
                self.infosets[h.0].nodes.push(id);
                self.nodes.push(Node {
                    parent,
                    depth,
                    kind: NodeKind::Decision {
                        infoset: h,
                        children: Vec::with_capacity(actions.len()),
                    },
                });
                for (i, a) in actions.iter().enumerate() {
                    let mark = path.len();
                    path.push_str(&format!(".actions[{}].child", i));
                    let child = self.add(&a.child, Some((id, i)), depth + 1, path)?;
                    path.truncate(mark);
                    if let NodeKind::Decision { children, .. } = &mut self.nodes[id.0].kind {
                        children.push(child);
                    }
                }
            }
        }
        Ok(id)
    }
}

impl GameTree {
    /// Builds and fully validates a game, including perfect recall.
    pub fn from_spec(
        num_players: usize,
        adversary: PlayerId,
        root: &NodeSpec,
    ) -> Result<GameTree, GameError> {
        let game = Self::from_spec_unchecked_recall(num_players, adversary, root)?;
        let violations = validate_perfect_recall(&game);
        if violations.is_empty() {
            Ok(game)
        } else {
            Err(GameError::PerfectRecall(violations))
        }
    }

    /// Builds a game checking everything except perfect recall.
    pub fn from_spec_unchecked_recall(
        num_players: usize,
        adversary: PlayerId,
        root: &NodeSpec,
    ) -> Result<GameTree, GameError> {
        if num_players < 2 {
            return Err(GameError::TooFewPlayers(num_players));
        }
        if adversary >= num_players {
            return Err(GameError::BadAdversary {
                adversary,
                players: num_players,
            });
        }
        let mut b = Builder {
            num_players,
            nodes: Vec::new(),
            infosets: Vec::new(),
            infoset_index: BTreeMap::new(),
            leaves: Vec::new(),
        };
        let mut path = String::from("root");
        b.add(root, None, 0, &mut path)?;
        Ok(GameTree {
            num_players,
            adversary,
            nodes: b.nodes,
            infosets: b.infosets,
            leaves: b.leaves,
        })
    }

    /// Builds a validated game from a flat node list, rejecting cycles,
    /// shared children, dangling references and orphans.
    pub fn from_arena(
        num_players: usize,
        adversary: PlayerId,
        nodes: &[ArenaNode],
        root: usize,
    ) -> Result<GameTree, GameError> {
        let mut seen = vec![false; nodes.len()];
        if root >= nodes.len() {
            return Err(StructureError::Dangling {
                node: root,
                child: root,
            }
            .into());
        }
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(n) = stack.pop() {
            if let ArenaNode::Decision { actions, .. } = &nodes[n] {
                for &(_, c) in actions {
                    if c >= nodes.len() {
                        return Err(StructureError::Dangling { node: n, child: c }.into());
                    }
                    if seen[c] {
                        return Err(StructureError::Revisited(c).into());
                    }
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            return Err(StructureError::Orphan(orphan).into());
        }
        fn to_spec(nodes: &[ArenaNode], n: usize) -> NodeSpec {
            match &nodes[n] {
                ArenaNode::Leaf { team_utility } => NodeSpec::leaf(*team_utility),
                ArenaNode::Decision {
                    player,
                    infoset,
                    actions,
                } => NodeSpec::Decision {
                    player: *player,
                    infoset: *infoset,
                    actions: actions
                        .iter()
                        .map(|(l, c)| ActionSpec {
                            label: l.clone(),
                            child: to_spec(nodes, *c),
                        })
                        .collect(),
                },
            }
        }
        Self::from_spec(num_players, adversary, &to_spec(nodes, root))
    }

    /// Rebuilds the recursive description; `from_spec(to_spec(g)) == g`.
    pub fn to_spec(&self) -> NodeSpec {
        self.spec_with(self.root(), &|n| {
            let h = self.infoset_of(n).expect("decision node");
            (self.infosets[h.0].player, self.infosets[h.0].label)
        })
    }

    /// Rebuilds the description with new (player, per-player infoset id)
    /// labels for every decision node. Leaves and actions are unchanged.
    pub(crate) fn spec_with(
        &self,
        node: NodeId,
        label: &dyn Fn(NodeId) -> (PlayerId, usize),
    ) -> NodeSpec {
        match &self.nodes[node.0].kind {
            NodeKind::Leaf { team_utility } => NodeSpec::leaf(*team_utility),
            NodeKind::Decision { infoset, children } => {
                let (player, infoset_label) = label(node);
                let labels = &self.infosets[infoset.0].actions;
                NodeSpec::Decision {
                    player,
                    infoset: infoset_label,
                    actions: labels
                        .iter()
                        .zip(children)
                        .map(|(l, c)| ActionSpec {
                            label: l.clone(),
                            child: self.spec_with(*c, label),
                        })
                        .collect(),
                }
            }
        }
    }

    /// Applies `f` to every leaf payoff.
    pub fn map_utilities(&self, f: impl Fn(f64) -> f64) -> GameTree {
        let mut g = self.clone();
        for n in &mut g.nodes {
            if let NodeKind::Leaf { team_utility } = &mut n.kind {
                *team_utility = f(*team_utility);
            }
        }
        g
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn adversary(&self) -> PlayerId {
        self.adversary
    }

    pub fn team(&self) -> Vec<PlayerId> {
        (0..self.num_players).filter(|&p| p != self.adversary).collect()
    }

    pub fn team_spec(&self) -> TeamSpec {
        TeamSpec {
            members: self.team(),
            adversary: self.adversary,
        }
    }

    pub fn is_team(&self, player: PlayerId) -> bool {
        player < self.num_players && player != self.adversary
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_decision_nodes(&self) -> usize {
        self.nodes.len() - self.leaves.len()
    }

    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn infosets(&self) -> &[Infoset] {
        &self.infosets
    }

    pub fn infoset(&self, id: InfosetId) -> &Infoset {
        &self.infosets[id.0]
    }

    pub fn infosets_of(&self, player: PlayerId) -> impl Iterator<Item = InfosetId> + '_ {
        self.infosets
            .iter()
            .enumerate()
            .filter(move |(_, h)| h.player == player)
            .map(|(i, _)| InfosetId(i))
    }

    pub fn find_infoset(&self, player: PlayerId, label: usize) -> Option<InfosetId> {
        self.infosets
            .iter()
            .position(|h| h.player == player && h.label == label)
            .map(InfosetId)
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        matches!(self.nodes[id.0].kind, NodeKind::Leaf { .. })
    }

    pub fn infoset_of(&self, id: NodeId) -> Option<InfosetId> {
        match self.nodes[id.0].kind {
            NodeKind::Decision { infoset, .. } => Some(infoset),
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn owner(&self, id: NodeId) -> Option<PlayerId> {
        self.infoset_of(id).map(|h| self.infosets[h.0].player)
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        match &self.nodes[id.0].kind {
            NodeKind::Decision { children, .. } => children,
            NodeKind::Leaf { .. } => &[],
        }
    }

    pub fn team_utility(&self, id: NodeId) -> Option<f64> {
        match self.nodes[id.0].kind {
            NodeKind::Leaf { team_utility } => Some(team_utility),
            NodeKind::Decision { .. } => None,
        }
    }

    /// Adversary payoff at a leaf: `-(|T|) * U_T`.
    pub fn adversary_utility(&self, id: NodeId) -> Option<f64> {
        self.team_utility(id)
            .map(|u| -((self.num_players - 1) as f64) * u)
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Actions taken by `player` on the path from the root to `node`,
    /// as (infoset, action index) pairs in play order.
    pub fn own_history(&self, node: NodeId, player: PlayerId) -> Vec<(InfosetId, usize)> {
        let mut out = Vec::new();
        let mut cur = node;
        while let Some((parent, action)) = self.nodes[cur.0].parent {
            if let Some(h) = self.infoset_of(parent) {
                if self.infosets[h.0].player == player {
                    out.push((h, action));
                }
            }
            cur = parent;
        }
        out.reverse();
        out
    }

    /// Every infoset is a singleton.
    pub fn has_perfect_information(&self) -> bool {
        self.infosets.iter().all(|h| h.nodes.len() == 1)
    }

    /// Leaf payoff range `(min, max)`.
    pub fn utility_range(&self) -> (f64, f64) {
        self.leaves
            .iter()
            .filter_map(|&l| self.team_utility(l))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), u| {
                (lo.min(u), hi.max(u))
            })
    }
}

/// Lists every information set whose nodes disagree on the owner's history.
pub fn validate_perfect_recall(game: &GameTree) -> Vec<RecallViolation> {
    let mut out = Vec::new();
    for h in &game.infosets {
        let Some((&first, rest)) = h.nodes.split_first() else {
            continue;
        };
        let reference = game.own_history(first, h.player);
        for &other in rest {
            if game.own_history(other, h.player) != reference {
                out.push(RecallViolation {
                    player: h.player,
                    infoset: h.label,
                    first,
                    second: other,
                });
            }
        }
    }
    out
}

/// A spy only observes: each of its infosets is a singleton with one action.
pub fn is_spy(game: &GameTree, player: PlayerId) -> Result<bool, GameError> {
    if player >= game.num_players() {
        return Err(GameError::UnknownPlayer {
            path: String::from("players"),
            player,
        });
    }
    if player == game.adversary() {
        return Err(GameError::NotTeamMember(player));
    }
    Ok(game
        .infosets_of(player)
        .all(|h| game.infoset(h).nodes.len() == 1 && game.infoset(h).num_actions() == 1))
}
