use alloc::vec;
use alloc::vec::Vec;

use crate::game::{GameTree, NodeId, PlayerId};
use crate::sequence::{build_sequence_form, SequenceError, SequenceForm};

/// A game together with its sequence form and the team/adversary split.
#[derive(Clone, Debug)]
pub struct TeamView<'g> {
    pub game: &'g GameTree,
    pub sf: SequenceForm,
    /// Team members in increasing id order.
    pub team: Vec<PlayerId>,
    pub adversary: PlayerId,
}

impl<'g> TeamView<'g> {
    pub fn new(game: &'g GameTree) -> Result<Self, SequenceError> {
        Ok(TeamView {
            sf: build_sequence_form(game)?,
            team: game.team(),
            adversary: game.adversary(),
            game,
        })
    }

    pub fn adversary_sequences(&self) -> usize {
        self.sf.set(self.adversary).len()
    }

    pub fn uniform_adversary_plan(&self) -> Vec<f64> {
        self.sf.uniform_plan(self.game, self.adversary).probs
    }
}

/// One pure plan per teammate, identified up to outcome equivalence by the
/// set of leaves it leaves reachable.
#[derive(Clone, Debug, PartialEq)]
pub struct JointReducedPlan {
    /// A pure realization plan per team member (same order as
    /// [`TeamView::team`]).
    pub pure: Vec<Vec<f64>>,
    /// `pure` with every sequence that leads to no key leaf zeroed out.
    pub reduced: Vec<Vec<f64>>,
    /// Per member, the maximal sequences played with probability one in
    /// `reduced`.
    pub terminal_sequences: Vec<Vec<usize>>,
    /// Sorted leaves consistent with the team's choices. For every adversary
    /// sequence at most one of them is reached; two plans are equivalent iff
    /// their keys are equal.
    pub key: Vec<NodeId>,
}

impl JointReducedPlan {
    pub fn from_pure(view: &TeamView<'_>, pure: Vec<Vec<f64>>) -> Self {
        let key: Vec<NodeId> = view
            .sf
            .terminal
            .iter()
            .filter(|t| {
                view.team
                    .iter()
                    .zip(&pure)
                    .all(|(&i, plan)| plan[t.profile[i]] > 0.5)
            })
            .map(|t| t.leaf)
            .collect();
        let mut reduced: Vec<Vec<f64>> = pure.iter().map(|p| vec![0.0; p.len()]).collect();
        for &l in &key {
            let lead = view.sf.lead(l);
            for (k, &i) in view.team.iter().enumerate() {
                let set = view.sf.set(i);
                let mut q = lead[i];
                loop {
                    if reduced[k][q] == 1.0 {
                        break;
                    }
                    reduced[k][q] = 1.0;
                    match set.parent(q) {
                        Some((p, _, _)) => q = p,
                        None => break,
                    }
                }
            }
        }
        let terminal_sequences = view
            .team
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let set = view.sf.set(i);
                let mut has_child = vec![false; set.len()];
                for q in 1..set.len() {
                    if reduced[k][q] == 1.0 {
                        has_child[set.parent(q).unwrap().0] = true;
                    }
                }
                (0..set.len())
                    .filter(|&q| reduced[k][q] == 1.0 && !has_child[q])
                    .collect()
            })
            .collect();
        JointReducedPlan {
            pure,
            reduced,
            terminal_sequences,
            key,
        }
    }

    /// Column of the hybrid utility matrix: `(adversary sequence, U_T)` for
    /// every key leaf.
    pub fn utilities(&self, view: &TeamView<'_>) -> Vec<(usize, f64)> {
        self.key
            .iter()
            .map(|&l| {
                (
                    view.sf.lead(l)[view.adversary],
                    view.game.team_utility(l).unwrap(),
                )
            })
            .collect()
    }

    /// Expected team utility against an adversary realization plan.
    pub fn value_against(&self, view: &TeamView<'_>, adversary_plan: &[f64]) -> f64 {
        self.utilities(view)
            .iter()
            .map(|&(q, u)| u * adversary_plan[q])
            .sum()
    }

    /// FNV-1a over the key, for compact trace output.
    pub fn key_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for l in &self.key {
            for b in (l.0 as u64).to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}
