//! The JSON game document.
//!
//! ```json
//! { "players": 3, "adversary": 2,
//!   "root": { "player": 2, "infoset": 0, "actions": [
//!       { "label": "a", "child": { "leaf": { "team_utility": 1.0 } } } ] } }
//! ```
//!
//! Infoset ids are scoped per player. Action order is preserved.

use serde::{Deserialize, Serialize};
use teamgame_core::game::ActionSpec;
use teamgame_core::observable::ObservableGame;
use teamgame_core::{GameError, GameTree, NodeSpec, PlayerId};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDocument {
    pub players: usize,
    pub adversary: PlayerId,
    pub root: NodeDocument,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeDocument {
    Leaf {
        leaf: LeafDocument,
    },
    Decision {
        player: PlayerId,
        infoset: usize,
        actions: Vec<ActionDocument>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeafDocument {
    pub team_utility: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDocument {
    pub label: String,
    pub child: NodeDocument,
}

impl From<&NodeSpec> for NodeDocument {
    fn from(spec: &NodeSpec) -> Self {
        match spec {
            NodeSpec::Leaf { team_utility } => NodeDocument::Leaf {
                leaf: LeafDocument {
                    team_utility: *team_utility,
                },
            },
            NodeSpec::Decision {
                player,
                infoset,
                actions,
            } => NodeDocument::Decision {
                player: *player,
                infoset: *infoset,
                actions: actions
                    .iter()
                    .map(|a| ActionDocument {
                        label: a.label.clone(),
                        child: (&a.child).into(),
                    })
                    .collect(),
            },
        }
    }
}

impl From<&NodeDocument> for NodeSpec {
    fn from(doc: &NodeDocument) -> Self {
        match doc {
            NodeDocument::Leaf { leaf } => NodeSpec::leaf(leaf.team_utility),
            NodeDocument::Decision {
                player,
                infoset,
                actions,
            } => NodeSpec::Decision {
                player: *player,
                infoset: *infoset,
                actions: actions
                    .iter()
                    .map(|a| ActionSpec {
                        label: a.label.clone(),
                        child: (&a.child).into(),
                    })
                    .collect(),
            },
        }
    }
}

impl GameDocument {
    pub fn from_game(game: &GameTree) -> Self {
        GameDocument {
            players: game.num_players(),
            adversary: game.adversary(),
            root: (&game.to_spec()).into(),
        }
    }

    pub fn to_game(&self) -> Result<GameTree, GameError> {
        GameTree::from_spec(self.players, self.adversary, &(&self.root).into())
    }
}

/// Parses and validates a game document, perfect recall included.
pub fn load_game(text: &str) -> Result<GameTree, FormatError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: GameDocument = serde_path_to_error::deserialize(de).map_err(|e| FormatError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    Ok(doc.to_game()?)
}

pub fn save_game(game: &GameTree) -> String {
    serde_json::to_string_pretty(&GameDocument::from_game(game)).expect("game documents always serialize")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub player: PlayerId,
    /// Infoset id in the observable game document.
    pub infoset: usize,
    /// Infoset id of the same player in the original game.
    pub original: usize,
    /// `(original infoset id, action index)` of every team decision on the
    /// way, in play order; absent for adversary infosets.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub team_path: Option<Vec<(PlayerId, usize, usize)>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableDocument {
    pub game: GameDocument,
    pub provenance: Vec<ProvenanceEntry>,
}

pub fn save_observable(original: &GameTree, obs: &ObservableGame) -> String {
    let provenance = obs
        .provenance
        .iter()
        .enumerate()
        .map(|(h, p)| {
            let info = obs.game.infoset(teamgame_core::InfosetId(h));
            ProvenanceEntry {
                player: info.player,
                infoset: info.label,
                original: original.infoset(p.original).label,
                team_path: p.team_path.as_ref().map(|path| {
                    path.iter()
                        .map(|&(g, a)| {
                            let o = original.infoset(g);
                            (o.player, o.label, a)
                        })
                        .collect()
                }),
            }
        })
        .collect();
    serde_json::to_string_pretty(&ObservableDocument {
        game: GameDocument::from_game(&obs.game),
        provenance,
    })
    .expect("observable documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use teamgame_core::generators::{build_example2, generate_random, RandomGameConfig};

    #[test]
    fn example2_round_trips() {
        let g = build_example2(3, 2).unwrap();
        assert_eq!(load_game(&save_game(&g)).unwrap(), g);
    }

    #[test]
    fn random_games_round_trip() {
        for seed in 0..20 {
            let g = generate_random(&RandomGameConfig {
                seed,
                depth: 4,
                ..RandomGameConfig::default()
            })
            .unwrap();
            assert_eq!(load_game(&save_game(&g)).unwrap(), g, "seed {seed}");
        }
    }

    #[test]
    fn schema_errors_carry_a_path() {
        let text = r#"{"players": 2, "adversary": 1, "root": {"player": 1, "infoset": 0,
            "actions": [{"label": "a", "child": {"leaf": {"team_utility": "x"}}}]}}"#;
        match load_game(text) {
            Err(FormatError::Schema { path, .. }) => assert!(path.starts_with("root"), "{path}"),
            other => panic!("{other:?}"),
        }
        let text = r#"{"players": 2, "adversary": 1}"#;
        assert!(matches!(load_game(text), Err(FormatError::Schema { .. })));
    }

    #[test]
    fn duplicate_labels_are_rejected_with_a_path() {
        let text = r#"{"players": 2, "adversary": 1, "root": {"player": 1, "infoset": 0, "actions": [
            {"label": "a", "child": {"leaf": {"team_utility": 0}}},
            {"label": "a", "child": {"leaf": {"team_utility": 1}}}]}}"#;
        let err = load_game(text).unwrap_err();
        assert!(matches!(err, FormatError::Game(GameError::DuplicateAction { .. })));
        assert!(err.to_string().contains("root"));
    }

    #[test]
    fn imperfect_recall_is_rejected() {
        // player 0 forgets its first move
        let text = r#"{"players": 2, "adversary": 1, "root": {"player": 0, "infoset": 0, "actions": [
            {"label": "l", "child": {"player": 0, "infoset": 1, "actions": [
                {"label": "x", "child": {"leaf": {"team_utility": 0}}}]}},
            {"label": "r", "child": {"player": 0, "infoset": 1, "actions": [
                {"label": "x", "child": {"leaf": {"team_utility": 1}}}]}}]}}"#;
        assert!(matches!(load_game(text), Err(FormatError::Game(GameError::PerfectRecall(_)))));
    }
}
