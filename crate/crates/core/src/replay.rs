//! Process-model snapshots rebuilt by folding modeling events.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eventlog::{EventClass, EventKind, EventLog, ModelingEvent, ObjectType, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NodeType {
    StartEvent,
    EndEvent,
    Activity,
    Xor,
    And,
}

impl NodeType {
    pub fn is_gateway(self) -> bool {
        matches!(self, NodeType::Xor | NodeType::And)
    }

    pub fn is_event(self) -> bool {
        matches!(self, NodeType::StartEvent | NodeType::EndEvent)
    }

    pub fn object_type(self) -> ObjectType {
        match self {
            NodeType::StartEvent => ObjectType::StartEvent,
            NodeType::EndEvent => ObjectType::EndEvent,
            NodeType::Activity => ObjectType::Activity,
            NodeType::Xor => ObjectType::Xor,
            NodeType::And => ObjectType::And,
        }
    }

    pub fn from_object_type(ty: ObjectType) -> Option<NodeType> {
        match ty {
            ObjectType::StartEvent => Some(NodeType::StartEvent),
            ObjectType::EndEvent => Some(NodeType::EndEvent),
            ObjectType::Activity => Some(NodeType::Activity),
            ObjectType::Xor => Some(NodeType::Xor),
            ObjectType::And => Some(NodeType::And),
            ObjectType::Edge => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    #[serde(rename = "type")]
    pub node_type: NodeType,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub x: i64,
    #[serde(default)]
    pub y: i64,
}

impl Node {
    pub fn new(id: impl Into<String>, node_type: NodeType) -> Self {
        Node { id: id.into(), node_type, label: String::new(), x: 0, y: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub source: String,
    pub target: String,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub bendpoints: Vec<(i64, i64)>,
}

impl Edge {
    pub fn new(id: impl Into<String>, source: impl Into<String>, target: impl Into<String>) -> Self {
        Edge {
            id: id.into(),
            source: source.into(),
            target: target.into(),
            label: String::new(),
            bendpoints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate object id {0}")]
    DuplicateId(String),
    #[error("edge {edge} references missing node {node}")]
    MissingEndpoint { edge: String, node: String },
    #[error("missing object {0}")]
    MissingObject(String),
    #[error("invalid model json: {0}")]
    Json(String),
}

/// BPMN-subset graph. Edge endpoints always reference existing nodes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProcessModel {
    nodes: BTreeMap<String, Node>,
    edges: BTreeMap<String, Edge>,
}

impl ProcessModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id) || self.edges.contains_key(id)
    }

    pub fn add_node(&mut self, node: Node) -> Result<(), ModelError> {
        if self.contains(&node.id) {
            return Err(ModelError::DuplicateId(node.id));
        }
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    pub fn add_edge(&mut self, edge: Edge) -> Result<(), ModelError> {
        if self.contains(&edge.id) {
            return Err(ModelError::DuplicateId(edge.id));
        }
        for end in [&edge.source, &edge.target] {
            if !self.nodes.contains_key(end) {
                return Err(ModelError::MissingEndpoint { edge: edge.id.clone(), node: end.clone() });
            }
        }
        self.edges.insert(edge.id.clone(), edge);
        Ok(())
    }

    /// Removes a node together with its incident edges.
    pub fn remove_node(&mut self, id: &str) -> Option<Node> {
        let node = self.nodes.remove(id)?;
        self.edges.retain(|_, e| e.source != id && e.target != id);
        Some(node)
    }

    pub fn remove_edge(&mut self, id: &str) -> Option<Edge> {
        self.edges.remove(id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut Node> {
        self.nodes.get_mut(id)
    }

    pub fn edge_mut(&mut self, id: &str) -> Option<&mut Edge> {
        self.edges.get_mut(id)
    }

    pub fn set_edge_target(&mut self, id: &str, target: &str) -> Result<(), ModelError> {
        if !self.nodes.contains_key(target) {
            return Err(ModelError::MissingEndpoint { edge: id.to_string(), node: target.to_string() });
        }
        let edge = self.edges.get_mut(id).ok_or_else(|| ModelError::MissingObject(id.to_string()))?;
        edge.target = target.to_string();
        Ok(())
    }

    pub fn set_edge_source(&mut self, id: &str, source: &str) -> Result<(), ModelError> {
        if !self.nodes.contains_key(source) {
            return Err(ModelError::MissingEndpoint { edge: id.to_string(), node: source.to_string() });
        }
        let edge = self.edges.get_mut(id).ok_or_else(|| ModelError::MissingObject(id.to_string()))?;
        edge.source = source.to_string();
        Ok(())
    }

    pub fn out_edges<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.values().filter(move |e| e.source == id)
    }

    pub fn in_edges<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.values().filter(move |e| e.target == id)
    }

    pub fn out_degree(&self, id: &str) -> usize {
        self.out_edges(id).count()
    }

    pub fn in_degree(&self, id: &str) -> usize {
        self.in_edges(id).count()
    }

    /// An id not used by any node or edge, derived from `base`.
    pub fn fresh_id(&self, base: &str) -> String {
        let mut id = base.to_string();
        while self.contains(&id) {
            id.push('\'');
        }
        id
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelJson::from(self)).expect("model json")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let json: ModelJson = serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        json.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl From<&ProcessModel> for ModelJson {
    fn from(m: &ProcessModel) -> Self {
        ModelJson { nodes: m.nodes.values().cloned().collect(), edges: m.edges.values().cloned().collect() }
    }
}

impl TryFrom<ModelJson> for ProcessModel {
    type Error = ModelError;

    fn try_from(json: ModelJson) -> Result<Self, Self::Error> {
        let mut model = ProcessModel::new();
        for n in json.nodes {
            model.add_node(n)?;
        }
        for e in json.edges {
            model.add_edge(e)?;
        }
        Ok(model)
    }
}

impl Serialize for ProcessModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ModelJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProcessModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        ModelJson::deserialize(d)?.try_into().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("corrupt log at seq {seq}: {source}")]
    Corrupt {
        seq: u64,
        #[source]
        source: ModelError,
    },
}

/// Where to stop replaying.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cutoff {
    /// Every event with `seq <= n`.
    Seq(u64),
    /// Every event with `timestamp <= t`.
    Time(Timestamp),
    End,
}

impl Cutoff {
    fn includes(&self, e: &ModelingEvent) -> bool {
        match *self {
            Cutoff::Seq(s) => e.seq <= s,
            Cutoff::Time(t) => e.timestamp <= t,
            Cutoff::End => true,
        }
    }
}

/// Folds one event into `model`.
pub fn apply_event(model: &mut ProcessModel, e: &ModelingEvent) -> Result<(), ReplayError> {
    let corrupt = |source| ReplayError::Corrupt { seq: e.seq, source };
    let missing = || corrupt(ModelError::MissingObject(e.object_id.clone()));
    let id = e.object_id.as_str();

    match e.class() {
        EventClass::Create => create(model, e).map_err(corrupt),
        EventClass::Delete => {
            let removed = if e.object_type.is_node() {
                model.remove_node(id).is_some()
            } else {
                model.remove_edge(id).is_some()
            };
            removed.then_some(()).ok_or_else(missing)
        }
        EventClass::Reconnect => {
            model.remove_edge(id).ok_or_else(missing)?;
            create(model, e).map_err(corrupt)
        }
        EventClass::Other => {
            let label = e.label.clone().unwrap_or_default();
            if e.object_type.is_node() {
                model.node_mut(id).ok_or_else(missing)?.label = label;
            } else {
                model.edge_mut(id).ok_or_else(missing)?.label = label;
            }
            Ok(())
        }
        EventClass::Move => {
            if e.object_type.is_node() {
                let node = model.node_mut(id).ok_or_else(missing)?;
                if let Some((x, y)) = e.position {
                    node.x = x;
                    node.y = y;
                }
                return Ok(());
            }
            let edge = model.edge_mut(id).ok_or_else(missing)?;
            move_bendpoint(edge, e.kind, e.position);
            Ok(())
        }
    }
}

fn create(model: &mut ProcessModel, e: &ModelingEvent) -> Result<(), ModelError> {
    let label = e.label.clone().unwrap_or_default();
    match NodeType::from_object_type(e.object_type) {
        Some(node_type) => {
            let (x, y) = e.position.unwrap_or((0, 0));
            model.add_node(Node { id: e.object_id.clone(), node_type, label, x, y })
        }
        None => {
            let (source, target) = match (&e.source_id, &e.target_id) {
                (Some(s), Some(t)) => (s.clone(), t.clone()),
                _ => return Err(ModelError::MissingEndpoint { edge: e.object_id.clone(), node: String::new() }),
            };
            model.add_edge(Edge { label, ..Edge::new(e.object_id.clone(), source, target) })
        }
    }
}

/// Bendpoint actions carry only a position. A create appends it; a move
/// relocates the nearest existing bendpoint; a delete removes the nearest
/// one (the last one when no position is given).
fn move_bendpoint(edge: &mut Edge, kind: EventKind, position: Option<(i64, i64)>) {
    let nearest = |points: &[(i64, i64)], (x, y): (i64, i64)| {
        points
            .iter()
            .enumerate()
            .min_by_key(|(_, &(px, py))| (px - x).pow(2) + (py - y).pow(2))
            .map(|(i, _)| i)
    };
    match (kind, position) {
        (EventKind::CreateEdgeBendpoint, Some(p)) => edge.bendpoints.push(p),
        (EventKind::MoveEdgeBendpoint, Some(p)) => match nearest(&edge.bendpoints, p) {
            Some(i) => edge.bendpoints[i] = p,
            None => edge.bendpoints.push(p),
        },
        (EventKind::DeleteEdgeBendpoint, Some(p)) => {
            if let Some(i) = nearest(&edge.bendpoints, p) {
                edge.bendpoints.remove(i);
            }
        }
        (EventKind::DeleteEdgeBendpoint, None) => {
            edge.bendpoints.pop();
        }
        _ => {}
    }
}

/// Model after folding every event inside `cutoff`.
pub fn replay_until(log: &EventLog, cutoff: Cutoff) -> Result<ProcessModel, ReplayError> {
    let mut model = ProcessModel::new();
    for e in log.events().iter().take_while(|e| cutoff.includes(e)) {
        apply_event(&mut model, e)?;
    }
    Ok(model)
}

pub fn final_model(log: &EventLog) -> Result<ProcessModel, ReplayError> {
    replay_until(log, Cutoff::End)
}
