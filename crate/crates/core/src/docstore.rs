//! Documentation sessions: sketches, cards and their two-level tree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::facts::DataFact;
use crate::geometry::Point;
use crate::layout::Viewport;
use crate::nlg::{highlight_key_messages, CardText, KeyMessage, Span};
use crate::sketch::PathKind;

/// Session file format revision.
pub const SESSION_FORMAT: u32 = 1;

/// Stroke colors, assigned to sketches in order.
pub const SKETCH_COLORS: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

/// Border color of cards that did not come from a sketch.
pub const UNSKETCHED_COLOR: &str = "#999999";

#[derive(Debug, Error, PartialEq)]
pub enum DocError {
    #[error("unknown card `{0}`")]
    UnknownCard(String),
    #[error("unknown group `{0}`")]
    UnknownGroup(String),
    #[error("unknown sketch `{0}`")]
    UnknownSketch(String),
    #[error("id `{0}` is already in use")]
    DuplicateId(String),
    #[error("card `{0}` is already in a group")]
    AlreadyGrouped(String),
    #[error("grouping needs at least two cards")]
    TooFew,
    #[error("invalid move target: {0}")]
    InvalidTarget(String),
    #[error("malformed session file: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SketchRecord {
    pub id: String,
    pub color: String,
    pub kind: PathKind,
    pub points: Vec<Point>,
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DocumentationCard {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sketch_id: Option<String>,
    pub color: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope_label: Option<String>,
    pub text: String,
    pub key_messages: Vec<KeyMessage>,
    pub spans: Vec<Span>,
    pub facts: Vec<DataFact>,
    pub created_at: u64,
    pub edited: bool,
}

/// Generated content for a card that has not been stored yet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CardDraft {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope_label: Option<String>,
    pub text: CardText,
    pub facts: Vec<DataFact>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Node {
    Card {
        id: String,
    },
    Group {
        id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        cards: Vec<String>,
    },
}

impl Node {
    pub fn id(&self) -> &str {
        match self {
            Node::Card { id } | Node::Group { id, .. } => id,
        }
    }
}

/// Where a moved node lands: top level, or inside a group. The index is
/// read after the node has been taken out of its old place.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MoveTarget {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub index: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub card: u64,
    pub group: u64,
    pub sketch: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Session {
    pub format: u32,
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    /// Chart document as submitted.
    pub chart: Value,
    /// Data records as submitted.
    pub data: Vec<Value>,
    pub viewport: Viewport,
    pub sketches: Vec<SketchRecord>,
    pub cards: BTreeMap<String, DocumentationCard>,
    pub tree: Vec<Node>,
    /// Bumped once per successful mutation.
    pub revision: u64,
    pub counters: Counters,
}

impl Session {
    pub fn new(id: impl Into<String>, chart: Value, data: Vec<Value>, viewport: Viewport) -> Session {
        let title = chart.get("title").and_then(Value::as_str).map(str::to_string);
        Session {
            format: SESSION_FORMAT,
            id: id.into(),
            title,
            chart,
            data,
            viewport,
            sketches: Vec::new(),
            cards: BTreeMap::new(),
            tree: Vec::new(),
            revision: 0,
            counters: Counters::default(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("session serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Session, DocError> {
        let session: Session = serde_json::from_str(text).map_err(|e| DocError::Malformed(e.to_string()))?;
        if session.format != SESSION_FORMAT {
            return Err(DocError::Malformed(format!("unsupported format {}", session.format)));
        }
        session.check_invariants().map_err(DocError::Malformed)?;
        Ok(session)
    }

    fn touch<T>(&mut self, value: T) -> T {
        self.revision += 1;
        value
    }

    fn next_card_id(&mut self) -> String {
        loop {
            self.counters.card += 1;
            let id = format!("c{}", self.counters.card);
            if !self.cards.contains_key(&id) {
                return id;
            }
        }
    }

    fn next_group_id(&mut self) -> String {
        loop {
            self.counters.group += 1;
            let id = format!("g{}", self.counters.group);
            if !self.tree.iter().any(|n| n.id() == id) && !self.cards.contains_key(&id) {
                return id;
            }
        }
    }

    pub fn card_ids_in_order(&self) -> Vec<String> {
        self.tree
            .iter()
            .flat_map(|n| match n {
                Node::Card { id } => vec![id.clone()],
                Node::Group { cards, .. } => cards.clone(),
            })
            .collect()
    }

    /// Top-level index of a card or of the group holding it.
    fn locate(&self, card: &str) -> Option<(usize, Option<usize>)> {
        self.tree.iter().enumerate().find_map(|(i, n)| match n {
            Node::Card { id } if id == card => Some((i, None)),
            Node::Group { cards, .. } => cards.iter().position(|c| c == card).map(|j| (i, Some(j))),
            _ => None,
        })
    }

    fn prune_empty_groups(&mut self) {
        self.tree
            .retain(|n| !matches!(n, Node::Group { cards, .. } if cards.is_empty()));
    }

    fn detach_card(&mut self, card: &str) {
        detach(&mut self.tree, card);
    }

    /// Inserts a ready-made card first. A card tied to a sketch takes the
    /// sketch's color.
    pub fn insert_card(&mut self, mut card: DocumentationCard) -> Result<(), DocError> {
        if self.cards.contains_key(&card.id) || self.tree.iter().any(|n| n.id() == card.id) {
            return Err(DocError::DuplicateId(card.id));
        }
        if let Some(sid) = &card.sketch_id {
            let sketch = self
                .sketches
                .iter()
                .find(|s| &s.id == sid)
                .ok_or_else(|| DocError::UnknownSketch(sid.clone()))?;
            card.color = sketch.color.clone();
        }
        self.tree.insert(0, Node::Card { id: card.id.clone() });
        self.cards.insert(card.id.clone(), card);
        self.touch(Ok(()))
    }

    /// Stores the cards produced by one sketch or intent in a single step.
    /// One draft becomes a top-level card; several become a group, all placed
    /// first. Returns the new card ids.
    pub fn add_findings(
        &mut self,
        sketch: Option<(PathKind, Vec<Point>, Vec<usize>)>,
        drafts: Vec<CardDraft>,
        group_label: Option<String>,
    ) -> Vec<String> {
        let (sketch_id, color) = match sketch {
            Some((kind, points, rows)) => {
                let color = SKETCH_COLORS[(self.counters.sketch as usize) % SKETCH_COLORS.len()].to_string();
                self.counters.sketch += 1;
                let id = format!("s{}", self.counters.sketch);
                self.sketches.push(SketchRecord {
                    id: id.clone(),
                    color: color.clone(),
                    kind,
                    points,
                    rows,
                });
                (Some(id), color)
            }
            None => (None, UNSKETCHED_COLOR.to_string()),
        };
        let mut ids = Vec::new();
        for draft in drafts {
            let id = self.next_card_id();
            let card = DocumentationCard {
                id: id.clone(),
                sketch_id: sketch_id.clone(),
                color: color.clone(),
                scope_label: draft.scope_label,
                text: draft.text.text,
                key_messages: draft.text.key_messages,
                spans: draft.text.spans,
                facts: draft.facts,
                created_at: self.counters.card,
                edited: false,
            };
            self.cards.insert(id.clone(), card);
            ids.push(id);
        }
        match ids.len() {
            0 => {}
            1 => self.tree.insert(0, Node::Card { id: ids[0].clone() }),
            _ => {
                let gid = self.next_group_id();
                self.tree.insert(
                    0,
                    Node::Group {
                        id: gid,
                        label: group_label,
                        cards: ids.clone(),
                    },
                );
            }
        }
        self.touch(ids)
    }

    /// Removes a card. Its sketch goes too once no other card refers to it.
    pub fn delete_card(&mut self, id: &str) -> Result<(), DocError> {
        let card = self
            .cards
            .remove(id)
            .ok_or_else(|| DocError::UnknownCard(id.to_string()))?;
        self.detach_card(id);
        self.prune_empty_groups();
        if let Some(sid) = card.sketch_id {
            if !self
                .cards
                .values()
                .any(|c| c.sketch_id.as_deref() == Some(sid.as_str()))
            {
                self.sketches.retain(|s| s.id != sid);
            }
        }
        self.touch(Ok(()))
    }

    /// Removes a sketch and every card it produced.
    pub fn delete_sketch(&mut self, id: &str) -> Result<(), DocError> {
        if !self.sketches.iter().any(|s| s.id == id) {
            return Err(DocError::UnknownSketch(id.to_string()));
        }
        self.sketches.retain(|s| s.id != id);
        let doomed: Vec<String> = self
            .cards
            .values()
            .filter(|c| c.sketch_id.as_deref() == Some(id))
            .map(|c| c.id.clone())
            .collect();
        for card in &doomed {
            self.cards.remove(card);
            self.detach_card(card);
        }
        self.prune_empty_groups();
        self.touch(Ok(()))
    }

    pub fn delete_all(&mut self) {
        self.cards.clear();
        self.tree.clear();
        self.sketches.clear();
        self.touch(())
    }

    /// Groups top-level cards at the slot of the first one, in the given
    /// order. Returns the group id.
    pub fn group_cards(&mut self, ids: &[String]) -> Result<String, DocError> {
        if ids.len() < 2 {
            return Err(DocError::TooFew);
        }
        let mut seen = BTreeSet::new();
        for id in ids {
            if !seen.insert(id) {
                return Err(DocError::DuplicateId(id.clone()));
            }
            match self.locate(id) {
                None => return Err(DocError::UnknownCard(id.clone())),
                Some((_, Some(_))) => return Err(DocError::AlreadyGrouped(id.clone())),
                Some((_, None)) => {}
            }
        }
        let slot = self.locate(&ids[0]).map(|(i, _)| i).unwrap_or(0);
        let before = self.tree[..slot]
            .iter()
            .filter(|n| !matches!(n, Node::Card { id } if ids.contains(id)))
            .count();
        self.tree
            .retain(|n| !matches!(n, Node::Card { id } if ids.contains(id)));
        let gid = self.next_group_id();
        self.tree.insert(
            before,
            Node::Group {
                id: gid.clone(),
                label: None,
                cards: ids.to_vec(),
            },
        );
        self.touch(Ok(gid))
    }

    /// Puts every card, in display order, into one group. Existing groups
    /// are dissolved first so the tree stays two levels deep.
    pub fn group_all(&mut self) -> Result<String, DocError> {
        let ids = self.card_ids_in_order();
        if ids.len() < 2 {
            return Err(DocError::TooFew);
        }
        let gid = self.next_group_id();
        self.tree = vec![Node::Group {
            id: gid.clone(),
            label: None,
            cards: ids,
        }];
        self.touch(Ok(gid))
    }

    /// Moves a card or a group. Groups may only move among top-level nodes.
    /// A group emptied by the move is gone before the index is applied,
    /// unless it is the destination.
    pub fn move_node(&mut self, id: &str, target: &MoveTarget) -> Result<(), DocError> {
        let is_group = self
            .tree
            .iter()
            .any(|n| matches!(n, Node::Group { id: g, .. } if g == id));
        if !is_group && !self.cards.contains_key(id) {
            return Err(DocError::UnknownCard(id.to_string()));
        }
        if let Some(g) = &target.group {
            if is_group {
                return Err(DocError::InvalidTarget("a group cannot be nested in a group".into()));
            }
            if !self
                .tree
                .iter()
                .any(|n| matches!(n, Node::Group { id: gid, .. } if gid == g))
            {
                return Err(DocError::UnknownGroup(g.clone()));
            }
        }
        let mut next = self.tree.clone();
        let node = if is_group {
            let i = next.iter().position(|n| n.id() == id).unwrap();
            next.remove(i)
        } else {
            detach(&mut next, id);
            next.retain(|n| match n {
                Node::Group { id: gid, cards, .. } => !cards.is_empty() || target.group.as_ref() == Some(gid),
                Node::Card { .. } => true,
            });
            Node::Card { id: id.to_string() }
        };
        match &target.group {
            None => {
                if target.index > next.len() {
                    return Err(DocError::InvalidTarget(format!("index {} out of range", target.index)));
                }
                next.insert(target.index, node);
            }
            Some(g) => {
                let Some(Node::Group { cards, .. }) = next.iter_mut().find(|n| n.id() == g) else {
                    return Err(DocError::UnknownGroup(g.clone()));
                };
                if target.index > cards.len() {
                    return Err(DocError::InvalidTarget(format!("index {} out of range", target.index)));
                }
                cards.insert(target.index, id.to_string());
            }
        }
        self.tree = next;
        self.prune_empty_groups();
        self.touch(Ok(()))
    }

    /// Replaces a card's text; spans follow the key messages still present.
    pub fn edit_card(&mut self, id: &str, text: &str) -> Result<(), DocError> {
        let card = self
            .cards
            .get_mut(id)
            .ok_or_else(|| DocError::UnknownCard(id.to_string()))?;
        let (spans, _) = highlight_key_messages(text, &card.key_messages);
        card.text = text.to_string();
        card.spans = spans;
        card.edited = true;
        self.touch(Ok(()))
    }

    /// Checks the structural rules every session keeps.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen_cards = BTreeSet::new();
        let mut seen_nodes = BTreeSet::new();
        for node in &self.tree {
            if !seen_nodes.insert(node.id().to_string()) {
                return Err(format!("node id {} repeated", node.id()));
            }
            let members: Vec<&String> = match node {
                Node::Card { id } => vec![id],
                Node::Group { cards, id, .. } => {
                    if cards.is_empty() {
                        return Err(format!("group {id} is empty"));
                    }
                    cards.iter().collect()
                }
            };
            for card in members {
                if !seen_cards.insert(card.clone()) {
                    return Err(format!("card {card} appears twice"));
                }
                if !self.cards.contains_key(card) {
                    return Err(format!("card {card} in tree but not stored"));
                }
            }
        }
        if seen_cards.len() != self.cards.len() {
            return Err("stored cards missing from the tree".into());
        }
        let sketch_ids: BTreeSet<&str> = self.sketches.iter().map(|s| s.id.as_str()).collect();
        if sketch_ids.len() != self.sketches.len() {
            return Err("sketch id repeated".into());
        }
        for card in self.cards.values() {
            if let Some(sid) = &card.sketch_id {
                let sketch = self
                    .sketches
                    .iter()
                    .find(|s| &s.id == sid)
                    .ok_or_else(|| format!("card {} refers to missing sketch {sid}", card.id))?;
                if sketch.color != card.color {
                    return Err(format!("card {} color differs from its sketch", card.id));
                }
            }
        }
        for sketch in &self.sketches {
            if !self
                .cards
                .values()
                .any(|c| c.sketch_id.as_deref() == Some(sketch.id.as_str()))
            {
                return Err(format!("sketch {} has no card", sketch.id));
            }
        }
        Ok(())
    }
}

/// Takes a card out of a tree; empty groups stay until pruned.
fn detach(tree: &mut Vec<Node>, card: &str) {
    for i in 0..tree.len() {
        match &mut tree[i] {
            Node::Card { id } if id == card => {
                tree.remove(i);
                return;
            }
            Node::Group { cards, .. } => {
                if let Some(j) = cards.iter().position(|c| c == card) {
                    cards.remove(j);
                    return;
                }
            }
            _ => {}
        }
    }
}

fn escape_markdown(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if matches!(c, '\\' | '*' | '_' | '`') {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

/// Card text with key messages in bold.
fn card_markdown(card: &DocumentationCard) -> String {
    let chars: Vec<char> = card.text.chars().collect();
    let mut out = String::new();
    let mut pos = 0;
    for span in &card.spans {
        if span.start < pos || span.end > chars.len() {
            continue;
        }
        out.push_str(&escape_markdown(&chars[pos..span.start].iter().collect::<String>()));
        let inner: String = chars[span.start..span.end].iter().collect();
        let _ = write!(out, "**{}**", escape_markdown(&inner));
        pos = span.end;
    }
    out.push_str(&escape_markdown(&chars[pos..].iter().collect::<String>()));
    out
}

fn bullet(indent: &str, body: &str) -> String {
    format!("{indent}- {body}").trim_end().to_string()
}

/// Markdown rendering: the chart title as heading, cards as bullets and
/// groups as nested lists.
pub fn export_markdown(session: &Session) -> String {
    let title = session.title.as_deref().unwrap_or("Chart findings");
    let mut out = format!("# {}\n", escape_markdown(title));
    if !session.tree.is_empty() {
        out.push('\n');
    }
    let mut group_number = 0;
    for node in &session.tree {
        match node {
            Node::Card { id } => {
                let _ = writeln!(out, "{}", bullet("", &card_markdown(&session.cards[id])));
            }
            Node::Group { label, cards, .. } => {
                group_number += 1;
                let heading = match label {
                    Some(l) => escape_markdown(l),
                    None => format!("Group {group_number}"),
                };
                let _ = writeln!(out, "{}", bullet("", &heading));
                for id in cards {
                    let _ = writeln!(out, "{}", bullet("  ", &card_markdown(&session.cards[id])));
                }
            }
        }
    }
    out
}
