//! Game families: seeded random trees, the two worst-case families with
//! closed-form equilibrium values, and the MAX-SAT encoding.
//!
//! Builders use player `n - 1` as the adversary. In the first family player
//! 0 is the spy.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{ArenaNode, GameError, GameTree, NodeSpec, PlayerId};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GeneratorError {
    #[error("need at least {min} players, got {got}")]
    TooFewPlayers { min: usize, got: usize },
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("nu must lie in [0, 1], got {0}")]
    BadNu(f64),
    #[error("early-leaf probability must lie in [0, 1), got {0}")]
    BadEarlyLeaf(f64),
    #[error("invalid action count distribution {0:?}")]
    BadBranching(ActionCount),
    #[error("need at least 2 actions per node, got {0}")]
    TooFewActions(usize),
    #[error("formula has no clauses")]
    EmptyFormula,
    #[error("clause {0} is empty")]
    EmptyClause(usize),
    #[error("clause {clause}: literal {literal} outside 1..={num_vars}")]
    BadLiteral { clause: usize, literal: i32, num_vars: usize },
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Number of actions at each generated decision node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionCount {
    Fixed(usize),
    /// Uniform on `min..=max`.
    Uniform { min: usize, max: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomGameConfig {
    pub players: usize,
    /// Maximum depth; with `early_leaf = 0` every leaf is at this depth.
    pub depth: usize,
    /// Probability that a new decision node joins an existing compatible
    /// information set.
    pub nu: f64,
    pub actions: ActionCount,
    /// Probability that an internal node deeper than `players` becomes a
    /// leaf early.
    pub early_leaf: f64,
    pub seed: u64,
}

impl Default for RandomGameConfig {
    fn default() -> Self {
        RandomGameConfig {
            players: 3,
            depth: 5,
            nu: 0.5,
            actions: ActionCount::Fixed(2),
            early_leaf: 0.0,
            seed: 0,
        }
    }
}

impl RandomGameConfig {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        if self.players < 2 {
            return Err(GeneratorError::TooFewPlayers {
                min: 2,
                got: self.players,
            });
        }
        if self.depth == 0 {
            return Err(GeneratorError::ZeroDepth);
        }
        if !(0.0..=1.0).contains(&self.nu) {
            return Err(GeneratorError::BadNu(self.nu));
        }
        if !(0.0..1.0).contains(&self.early_leaf) {
            return Err(GeneratorError::BadEarlyLeaf(self.early_leaf));
        }
        let ok = match self.actions {
            ActionCount::Fixed(k) => k >= 1,
            ActionCount::Uniform { min, max } => min >= 1 && min <= max,
        };
        if !ok {
            return Err(GeneratorError::BadBranching(self.actions));
        }
        Ok(())
    }
}

type History = Vec<(usize, usize)>;

struct Pending {
    arena_index: usize,
    depth: usize,
    /// Per-player (infoset label, action) history.
    histories: Vec<History>,
}

/// Random game grown level by level. The adversary is the last player.
///
/// A node joins an existing information set only if it has the same owner,
/// action count and own-action history as that set's members, which keeps
/// perfect recall by construction.
pub fn generate_random(config: &RandomGameConfig) -> Result<GameTree, GeneratorError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.players;
    let mut arena: Vec<ArenaNode> = vec![ArenaNode::Leaf { team_utility: 0.0 }];
    let mut next_label = vec![0usize; n];
    let mut compatible: BTreeMap<(PlayerId, usize, History), Vec<usize>> = BTreeMap::new();
    let mut queue = VecDeque::new();
    queue.push_back(Pending {
        arena_index: 0,
        depth: 0,
        histories: vec![Vec::new(); n],
    });
    while let Some(p) = queue.pop_front() {
        let leaf = p.depth >= config.depth
            || (p.depth > n && config.early_leaf > 0.0 && rng.random::<f64>() < config.early_leaf);
        if leaf {
            arena[p.arena_index] = ArenaNode::Leaf {
                team_utility: rng.random::<f64>(),
            };
            continue;
        }
        let player = rng.random_range(0..n);
        let k = match config.actions {
            ActionCount::Fixed(k) => k,
            ActionCount::Uniform { min, max } => rng.random_range(min..=max),
        };
        let key = (player, k, p.histories[player].clone());
        let candidates = compatible.get(&key).map(|v| v.as_slice()).unwrap_or(&[]);
        let join = !candidates.is_empty() && config.nu > 0.0 && rng.random::<f64>() < config.nu;
        let label = if join {
            *candidates.choose(&mut rng).expect("non-empty")
        } else {
            let l = next_label[player];
            next_label[player] += 1;
            compatible.entry(key).or_default().push(l);
            l
        };
        let mut actions = Vec::with_capacity(k);
        for a in 0..k {
            let child = arena.len();
            arena.push(ArenaNode::Leaf { team_utility: 0.0 });
            actions.push((action_label(a), child));
            let mut histories = p.histories.clone();
            histories[player].push((label, a));
            queue.push_back(Pending {
                arena_index: child,
                depth: p.depth + 1,
                histories,
            });
        }
        arena[p.arena_index] = ArenaNode::Decision {
            player,
            infoset: label,
            actions,
        };
    }
    Ok(GameTree::from_arena(n, n - 1, &arena, 0)?)
}

fn action_label(a: usize) -> String {
    format!("a{}", a)
}

fn check_family(n: usize, m: usize) -> Result<(), GeneratorError> {
    if n < 3 {
        return Err(GeneratorError::TooFewPlayers { min: 3, got: n });
    }
    if m < 2 {
        return Err(GeneratorError::TooFewActions(m));
    }
    Ok(())
}

/// Adversary moves first among `m` actions, the spy (player 0) observes it
/// through a one-action move, then players `1..n-1` each pick one of `m`
/// actions without observing anything. The team wins iff every non-spy
/// teammate matches the adversary.
pub fn build_example1(n: usize, m: usize) -> Result<GameTree, GeneratorError> {
    check_family(n, m)?;
    let adversary = n - 1;
    let root = NodeSpec::decision(
        adversary,
        0,
        (0..m).map(|k| {
            let spy = NodeSpec::decision(0, k, [("observe", matching_levels(1, n - 1, m, k, true))]);
            (action_label(k), spy)
        }),
    );
    Ok(GameTree::from_spec(n, adversary, &root)?)
}

/// Adversary moves first among `m` actions, then players `0..n-1` each pick
/// one of `m` actions in a single information set per level. The team wins
/// iff all teammates match the adversary.
pub fn build_example2(n: usize, m: usize) -> Result<GameTree, GeneratorError> {
    check_family(n, m)?;
    let adversary = n - 1;
    let root = NodeSpec::decision(
        adversary,
        0,
        (0..m).map(|k| (action_label(k), matching_levels(0, n - 1, m, k, true))),
    );
    Ok(GameTree::from_spec(n, adversary, &root)?)
}

/// Players `player..end` each choose one of `m` actions in their single
/// information set; the leaf pays 1 iff all of them chose `target`.
fn matching_levels(player: usize, end: usize, m: usize, target: usize, matched: bool) -> NodeSpec {
    if player == end {
        return NodeSpec::leaf(if matched { 1.0 } else { 0.0 });
    }
    NodeSpec::decision(
        player,
        0,
        (0..m).map(|a| {
            (
                action_label(a),
                matching_levels(player + 1, end, m, target, matched && a == target),
            )
        }),
    )
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Vec<i32>>,
}

impl CnfFormula {
    /// Literals are non-zero, `v` for variable `v` and `-v` for its
    /// negation, with variables numbered from 1.
    pub fn new(num_vars: usize, clauses: Vec<Vec<i32>>) -> Result<Self, GeneratorError> {
        if clauses.is_empty() {
            return Err(GeneratorError::EmptyFormula);
        }
        for (i, c) in clauses.iter().enumerate() {
            if c.is_empty() {
                return Err(GeneratorError::EmptyClause(i));
            }
            for &l in c {
                if l == 0 || l.unsigned_abs() as usize > num_vars {
                    return Err(GeneratorError::BadLiteral {
                        clause: i,
                        literal: l,
                        num_vars,
                    });
                }
            }
        }
        Ok(CnfFormula { num_vars, clauses })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    /// Number of clauses satisfied by `assignment[v - 1]`.
    pub fn satisfied_by(&self, assignment: &[bool]) -> usize {
        self.clauses
            .iter()
            .filter(|c| c.iter().any(|&l| literal_true(l, assignment)))
            .count()
    }
}

fn literal_true(l: i32, assignment: &[bool]) -> bool {
    assignment[l.unsigned_abs() as usize - 1] == (l > 0)
}

/// Random 3-CNF with distinct variables per clause, resampled until the
/// clause is satisfied by a hidden planted assignment, so the result is
/// always satisfiable.
pub fn random_satisfiable_3cnf(
    num_vars: usize,
    num_clauses: usize,
    seed: u64,
) -> Result<CnfFormula, GeneratorError> {
    if num_vars < 3 {
        return Err(GeneratorError::TooFewActions(num_vars));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted: Vec<bool> = (0..num_vars).map(|_| rng.random()).collect();
    let vars: Vec<i32> = (1..=num_vars as i32).collect();
    let mut clauses = Vec::with_capacity(num_clauses);
    while clauses.len() < num_clauses {
        let picked = rand::seq::index::sample(&mut rng, num_vars, 3);
        let mut clause: Vec<i32> = picked
            .iter()
            .map(|i| if rng.random() { vars[i] } else { -vars[i] })
            .collect();
        clause.sort_by_key(|l| l.unsigned_abs());
        if clause.iter().any(|&l| literal_true(l, &planted)) {
            clauses.push(clause);
        }
    }
    CnfFormula::new(num_vars, clauses)
}

/// Three-player game: the adversary picks a clause, player 0 picks one of
/// its literals, player 1 assigns the literal's variable without knowing
/// the clause. The team scores 1 iff the chosen literal is true.
pub fn build_maxsat_game(formula: &CnfFormula) -> Result<GameTree, GeneratorError> {
    let adversary = 2;
    let root = NodeSpec::decision(
        adversary,
        0,
        formula.clauses.iter().enumerate().map(|(j, clause)| {
            let mut literals: Vec<i32> = Vec::new();
            for &l in clause {
                if !literals.contains(&l) {
                    literals.push(l);
                }
            }
            let pick = NodeSpec::decision(
                0,
                j,
                literals.into_iter().map(|l| {
                    let var = l.unsigned_abs() as usize;
                    let assign = NodeSpec::decision(
                        1,
                        var - 1,
                        [
                            ("true", NodeSpec::leaf(if l > 0 { 1.0 } else { 0.0 })),
                            ("false", NodeSpec::leaf(if l > 0 { 0.0 } else { 1.0 })),
                        ],
                    );
                    (literal_label(l), assign)
                }),
            );
            (format!("c{}", j + 1), pick)
        }),
    );
    Ok(GameTree::from_spec(3, adversary, &root)?)
}

fn literal_label(l: i32) -> String {
    if l > 0 {
        format!("x{}", l)
    } else {
        format!("~x{}", -l)
    }
}
