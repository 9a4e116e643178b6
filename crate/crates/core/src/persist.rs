//! Score documents on disk, canonical JSON, and DOT emitters.
//!
//! A document is a versioned JSON object mirroring [`Score`]. Output is
//! canonical: keys sorted, two-space indentation, trailing newline, integers
//! only. Saving a loaded document reproduces it byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::duration::DurationSet;
use crate::encoding::{EncodingMap, EventId, TimedEventStructure};
use crate::score::{validate_score, ObjectId, PointRef, Score, TemporalObject, TemporalRelation, ValidationReport};
use crate::stp::{DispatchableNetwork, INF};

pub const DOC_VERSION: &str = "iscore-doc/1";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unsupported document version {found:?}, expected {DOC_VERSION:?}")]
    Version { found: String },
    #[error("invalid score: {0}")]
    Invalid(ValidationReport),
}

impl From<serde_json::Error> for PersistError {
    fn from(e: serde_json::Error) -> Self {
        // serde appends its own " at line L column C"; keep the bare message
        let full = e.to_string();
        let message = match full.rfind(" at line ") {
            Some(i) => full[..i].to_owned(),
            None => full,
        };
        PersistError::Parse { line: e.line(), column: e.column(), message }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ObjectDoc {
    pub id: ObjectId,
    pub duration: DurationSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<ObjectId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_action: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationDoc {
    pub from: PointRef,
    pub to: PointRef,
    pub delta: DurationSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreDocument {
    pub version: String,
    pub name: String,
    pub objects: Vec<ObjectDoc>,
    #[serde(default)]
    pub relations: Vec<RelationDoc>,
}

impl From<&Score> for ScoreDocument {
    fn from(s: &Score) -> Self {
        ScoreDocument {
            version: DOC_VERSION.to_owned(),
            name: s.name.clone(),
            objects: s
                .objects
                .iter()
                .map(|o| ObjectDoc {
                    id: o.id.clone(),
                    duration: o.duration.clone(),
                    parent: o.parent.clone(),
                    start_action: o.start_action.clone(),
                    end_action: o.end_action.clone(),
                })
                .collect(),
            relations: s
                .relations
                .iter()
                .map(|r| RelationDoc { from: r.from.clone(), to: r.to.clone(), delta: r.delta.clone() })
                .collect(),
        }
    }
}

impl From<ScoreDocument> for Score {
    fn from(d: ScoreDocument) -> Self {
        Score {
            name: d.name,
            objects: d
                .objects
                .into_iter()
                .map(|o| TemporalObject {
                    id: o.id,
                    duration: o.duration,
                    parent: o.parent,
                    start_action: o.start_action,
                    end_action: o.end_action,
                })
                .collect(),
            relations: d.relations.into_iter().map(|r| TemporalRelation::new(r.from, r.to, r.delta)).collect(),
        }
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("value serializes to JSON");
    let mut s = serde_json::to_string_pretty(&v).expect("JSON value serializes");
    s.push('\n');
    s
}

/// Parses and validates a document.
pub fn score_from_str(text: &str) -> Result<Score, PersistError> {
    let doc: ScoreDocument = serde_json::from_str(text)?;
    if doc.version != DOC_VERSION {
        return Err(PersistError::Version { found: doc.version });
    }
    let score = Score::from(doc);
    let report = validate_score(&score);
    if !report.is_valid() {
        return Err(PersistError::Invalid(report));
    }
    Ok(score)
}

pub fn score_to_string(score: &Score) -> String {
    to_canonical_json(&ScoreDocument::from(score))
}

pub fn load_score(path: impl AsRef<Path>) -> Result<Score, PersistError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| PersistError::Io { path: path.to_owned(), source })?;
    score_from_str(&text)
}

pub fn save_score(score: &Score, path: impl AsRef<Path>) -> Result<(), PersistError> {
    let path = path.as_ref();
    std::fs::write(path, score_to_string(score)).map_err(|source| PersistError::Io { path: path.to_owned(), source })
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Events as nodes (interactive ones drawn as diamonds), delays as edges.
pub fn structure_to_dot(name: &str, es: &TimedEventStructure) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", dot_id(name)).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    for e in &es.events {
        let shape = if e.is_interactive() { "diamond" } else { "ellipse" };
        let actions = if e.actions.is_empty() { String::new() } else { format!("\\n{}", e.actions.join(", ")) };
        writeln!(out, "  {} [shape={shape}, label={}];", dot_id(e.id.as_str()), dot_id(&format!("{}{actions}", e.id)))
            .unwrap();
    }
    for d in &es.delays {
        writeln!(
            out,
            "  {} -> {} [label={}];",
            dot_id(d.from.as_str()),
            dot_id(d.to.as_str()),
            dot_id(&d.delta.to_string())
        )
        .unwrap();
    }
    for (a, b) in &es.conflicts {
        writeln!(out, "  {} -> {} [style=dashed, dir=none, label=\"#\"];", dot_id(a.as_str()), dot_id(b.as_str()))
            .unwrap();
    }
    out.push_str("}\n");
    out
}

/// Distance graph of a closed network: one edge per finite off-diagonal
/// entry, labelled with its weight.
pub fn network_to_dot(name: &str, net: &DispatchableNetwork) -> String {
    let m = &net.matrix;
    let label = |i: usize| m.nodes[i].to_string();
    let mut out = String::new();
    writeln!(out, "digraph {} {{", dot_id(name)).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    for i in 0..m.len() {
        let shape = if i == DispatchableNetwork::ORIGIN {
            "box"
        } else if net.is_interactive(i) {
            "diamond"
        } else {
            "ellipse"
        };
        writeln!(out, "  {} [shape={shape}];", dot_id(&label(i))).unwrap();
    }
    for i in 0..m.len() {
        for j in 0..m.len() {
            let w = m.dist(i, j);
            if i != j && w != INF {
                writeln!(out, "  {} -> {} [label=\"{w}\"];", dot_id(&label(i)), dot_id(&label(j))).unwrap();
            }
        }
    }
    out.push_str("}\n");
    out
}

#[derive(Serialize)]
struct RawDump<'a> {
    structure: &'a TimedEventStructure,
    map: Vec<(String, &'a EventId)>,
}

/// Raw encoding together with the point → event map.
pub fn raw_to_json(es: &TimedEventStructure, map: &EncodingMap) -> String {
    let map = map.point_to_event.iter().map(|(p, e)| (p.to_string(), e)).collect();
    to_canonical_json(&RawDump { structure: es, map })
}

#[derive(Serialize)]
struct NormalDump<'a> {
    structure: &'a TimedEventStructure,
    merge: &'a std::collections::BTreeMap<EventId, EventId>,
}

/// Normal form together with the raw → merged event map.
pub fn normal_to_json(es: &TimedEventStructure, merge: &std::collections::BTreeMap<EventId, EventId>) -> String {
    to_canonical_json(&NormalDump { structure: es, merge })
}

pub fn network_to_json(net: &DispatchableNetwork) -> String {
    to_canonical_json(net)
}
