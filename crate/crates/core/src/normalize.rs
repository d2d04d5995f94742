//! Repairs that turn a hand-drawn model into one with explicit start/end
//! events and explicit split/join gateways, or reject it outright.
//!
//! Rules run in a fixed order:
//!
//! 1. mixed gateways (two or more flows in and out) reject the model;
//! 2. activities without incoming (outgoing) flows get their own start
//!    (end) event, then several start (end) events are merged into one event
//!    plus a gateway;
//! 3. activities and events with several incoming (outgoing) flows get a
//!    join (split) gateway in front of (behind) them.
//!
//! Inserted gateways are XOR, except splits behind activities and events,
//! which are AND. When every affected flow can be traced to one common
//! gateway, that gateway's type is copied instead.

use serde::Serialize;
use thiserror::Error;

use crate::replay::{Edge, Node, NodeType, ProcessModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    MixedGateway,
    AddStartEvent,
    AddEndEvent,
    MergeStartEvents,
    MergeEndEvents,
    InsertJoin,
    InsertSplit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppliedRule {
    pub rule: Rule,
    pub nodes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Rejection {
    #[error("mixed gateway: {}", .0.join(", "))]
    MixedGateway(Vec<String>),
    #[error("no start event can be derived")]
    NoStartEvent,
    #[error("no end event can be derived")]
    NoEndEvent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Normalization {
    Normalized(ProcessModel),
    Rejected(Rejection),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationOutcome {
    pub result: Normalization,
    pub applied_rules: Vec<AppliedRule>,
}

impl NormalizationOutcome {
    pub fn model(&self) -> Option<&ProcessModel> {
        match &self.result {
            Normalization::Normalized(m) => Some(m),
            Normalization::Rejected(_) => None,
        }
    }

    pub fn rejection(&self) -> Option<&Rejection> {
        match &self.result {
            Normalization::Normalized(_) => None,
            Normalization::Rejected(r) => Some(r),
        }
    }
}

impl Serialize for NormalizationOutcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut out = s.serialize_struct("NormalizationOutcome", 3)?;
        out.serialize_field("rejected", &self.rejection().is_some())?;
        out.serialize_field("reason", &self.rejection().map(|r| r.to_string()))?;
        out.serialize_field("applied_rules", &self.applied_rules)?;
        out.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("empty model")]
    EmptyModel,
}

fn is_flow_node(n: &Node) -> bool {
    !n.node_type.is_gateway()
}

/// Gateways that both join and split. These have no repair.
pub fn check_mixed_gateways(model: &ProcessModel) -> Option<Rejection> {
    let mixed: Vec<String> = model
        .nodes()
        .filter(|n| n.node_type.is_gateway() && model.in_degree(&n.id) >= 2 && model.out_degree(&n.id) >= 2)
        .map(|n| n.id.clone())
        .collect();
    (!mixed.is_empty()).then_some(Rejection::MixedGateway(mixed))
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Backward,
}

/// Follows a chain of single-in/single-out nodes starting at `from` until
/// the first node where flows merge (forward) or fork (backward). Returns
/// that node's type when it is a gateway.
fn trace_to_gateway(model: &ProcessModel, from: &str, dir: Direction) -> Option<(String, NodeType)> {
    let mut cur = from.to_string();
    let mut steps = 0;
    loop {
        let (ahead, behind) = match dir {
            Direction::Forward => (model.out_degree(&cur), model.in_degree(&cur)),
            Direction::Backward => (model.in_degree(&cur), model.out_degree(&cur)),
        };
        if behind > 1 {
            let node = model.node(&cur)?;
            return node.node_type.is_gateway().then(|| (cur, node.node_type));
        }
        if ahead != 1 || steps > model.node_count() {
            return None;
        }
        cur = match dir {
            Direction::Forward => model.out_edges(&cur).next()?.target.clone(),
            Direction::Backward => model.in_edges(&cur).next()?.source.clone(),
        };
        steps += 1;
    }
}

/// Type of the one gateway every path reaches, if there is exactly one.
fn common_gateway<'a>(model: &ProcessModel, starts: impl IntoIterator<Item = &'a str>, dir: Direction) -> Option<NodeType> {
    let mut found: Option<(String, NodeType)> = None;
    for start in starts {
        let hit = trace_to_gateway(model, start, dir)?;
        match &found {
            None => found = Some(hit),
            Some(prev) if prev.0 == hit.0 => {}
            Some(_) => return None,
        }
    }
    found.map(|(_, ty)| ty)
}

fn ids_of(model: &ProcessModel, ty: NodeType) -> Vec<String> {
    model.nodes().filter(|n| n.node_type == ty).map(|n| n.id.clone()).collect()
}

fn insert_node(model: &mut ProcessModel, base: &str, ty: NodeType, near: Option<&Node>) -> String {
    let id = model.fresh_id(base);
    let (x, y) = near.map(|n| (n.x, n.y)).unwrap_or((0, 0));
    model.add_node(Node { x, y, ..Node::new(id.clone(), ty) }).expect("fresh id");
    id
}

fn connect(model: &mut ProcessModel, source: &str, target: &str) -> String {
    let id = model.fresh_id(&format!("flow:{source}->{target}"));
    model.add_edge(Edge::new(id.clone(), source, target)).expect("endpoints exist");
    id
}

/// Adds missing start/end events and merges multiple ones.
pub fn normalize_start_end(model: &ProcessModel) -> Result<(ProcessModel, Vec<AppliedRule>), NormalizeError> {
    if model.is_empty() {
        return Err(NormalizeError::EmptyModel);
    }
    let mut m = model.clone();
    let mut rules = Vec::new();

    let activities: Vec<Node> = m.nodes().filter(|n| n.node_type == NodeType::Activity).cloned().collect();
    for a in &activities {
        if m.in_degree(&a.id) == 0 {
            let start = insert_node(&mut m, &format!("start:{}", a.id), NodeType::StartEvent, Some(a));
            connect(&mut m, &start, &a.id);
            rules.push(AppliedRule { rule: Rule::AddStartEvent, nodes: vec![start, a.id.clone()] });
        }
        if m.out_degree(&a.id) == 0 {
            let end = insert_node(&mut m, &format!("end:{}", a.id), NodeType::EndEvent, Some(a));
            connect(&mut m, &a.id, &end);
            rules.push(AppliedRule { rule: Rule::AddEndEvent, nodes: vec![a.id.clone(), end] });
        }
    }

    let starts = ids_of(&m, NodeType::StartEvent);
    if starts.len() > 1 {
        let heads: Vec<String> = starts.iter().flat_map(|s| m.out_edges(s).map(|e| e.target.clone())).collect();
        let single_out = starts.iter().all(|s| m.out_degree(s) == 1);
        let sign = single_out
            .then(|| common_gateway(&m, heads.iter().map(String::as_str), Direction::Forward))
            .flatten()
            .unwrap_or(NodeType::Xor);
        let anchor = m.node(&starts[0]).cloned();
        let start = insert_node(&mut m, "start", NodeType::StartEvent, anchor.as_ref());
        let gateway = insert_node(&mut m, "start:split", sign, anchor.as_ref());
        connect(&mut m, &start, &gateway);
        for old in &starts {
            let outs: Vec<String> = m.out_edges(old).map(|e| e.id.clone()).collect();
            for e in outs {
                m.set_edge_source(&e, &gateway).expect("gateway exists");
            }
            let ins: Vec<String> = m.in_edges(old).map(|e| e.id.clone()).collect();
            for e in ins {
                m.set_edge_target(&e, &start).expect("start exists");
            }
            m.remove_node(old);
        }
        let mut nodes = vec![start, gateway];
        nodes.extend(starts);
        rules.push(AppliedRule { rule: Rule::MergeStartEvents, nodes });
    }

    let ends = ids_of(&m, NodeType::EndEvent);
    if ends.len() > 1 {
        let tails: Vec<String> = ends.iter().flat_map(|s| m.in_edges(s).map(|e| e.source.clone())).collect();
        let single_in = ends.iter().all(|s| m.in_degree(s) == 1);
        let sign = single_in
            .then(|| common_gateway(&m, tails.iter().map(String::as_str), Direction::Backward))
            .flatten()
            .unwrap_or(NodeType::Xor);
        let anchor = m.node(&ends[0]).cloned();
        let end = insert_node(&mut m, "end", NodeType::EndEvent, anchor.as_ref());
        let gateway = insert_node(&mut m, "end:join", sign, anchor.as_ref());
        connect(&mut m, &gateway, &end);
        for old in &ends {
            let ins: Vec<String> = m.in_edges(old).map(|e| e.id.clone()).collect();
            for e in ins {
                m.set_edge_target(&e, &gateway).expect("gateway exists");
            }
            let outs: Vec<String> = m.out_edges(old).map(|e| e.id.clone()).collect();
            for e in outs {
                m.set_edge_source(&e, &end).expect("end exists");
            }
            m.remove_node(old);
        }
        let mut nodes = vec![end, gateway];
        nodes.extend(ends);
        rules.push(AppliedRule { rule: Rule::MergeEndEvents, nodes });
    }
    Ok((m, rules))
}

/// Makes split and join behaviour of activities and events explicit.
/// Gateway types are inferred on the input model before any insertion, so
/// the result does not depend on processing order.
pub fn normalize_splits_joins(model: &ProcessModel) -> (ProcessModel, Vec<AppliedRule>) {
    let mut joins = Vec::new();
    let mut splits = Vec::new();
    for n in model.nodes().filter(|n| is_flow_node(n)) {
        if model.in_degree(&n.id) > 1 {
            let origins: Vec<&str> = model.in_edges(&n.id).map(|e| e.source.as_str()).collect();
            let sign = common_gateway(model, origins, Direction::Backward).unwrap_or(NodeType::Xor);
            joins.push((n.clone(), sign));
        }
        if model.out_degree(&n.id) > 1 {
            let destinations: Vec<&str> = model.out_edges(&n.id).map(|e| e.target.as_str()).collect();
            let sign = common_gateway(model, destinations, Direction::Forward).unwrap_or(NodeType::And);
            splits.push((n.clone(), sign));
        }
    }

    let mut m = model.clone();
    let mut rules = Vec::new();
    for (node, sign) in joins {
        let gateway = insert_node(&mut m, &format!("join:{}", node.id), sign, Some(&node));
        let ins: Vec<String> = m.in_edges(&node.id).map(|e| e.id.clone()).collect();
        for e in ins {
            m.set_edge_target(&e, &gateway).expect("gateway exists");
        }
        connect(&mut m, &gateway, &node.id);
        rules.push(AppliedRule { rule: Rule::InsertJoin, nodes: vec![gateway, node.id] });
    }
    for (node, sign) in splits {
        let gateway = insert_node(&mut m, &format!("split:{}", node.id), sign, Some(&node));
        let outs: Vec<String> = m.out_edges(&node.id).map(|e| e.id.clone()).collect();
        for e in outs {
            m.set_edge_source(&e, &gateway).expect("gateway exists");
        }
        connect(&mut m, &node.id, &gateway);
        rules.push(AppliedRule { rule: Rule::InsertSplit, nodes: vec![gateway, node.id] });
    }
    (m, rules)
}

/// Runs every rule in order.
pub fn normalize(model: &ProcessModel) -> Result<NormalizationOutcome, NormalizeError> {
    if model.is_empty() {
        return Err(NormalizeError::EmptyModel);
    }
    if let Some(rejection) = check_mixed_gateways(model) {
        let nodes = match &rejection {
            Rejection::MixedGateway(ids) => ids.clone(),
            _ => Vec::new(),
        };
        return Ok(NormalizationOutcome {
            result: Normalization::Rejected(rejection),
            applied_rules: vec![AppliedRule { rule: Rule::MixedGateway, nodes }],
        });
    }
    let (m, mut applied_rules) = normalize_start_end(model)?;
    let rejected = |reason, applied_rules| Ok(NormalizationOutcome { result: Normalization::Rejected(reason), applied_rules });
    if ids_of(&m, NodeType::StartEvent).is_empty() {
        return rejected(Rejection::NoStartEvent, applied_rules);
    }
    if ids_of(&m, NodeType::EndEvent).is_empty() {
        return rejected(Rejection::NoEndEvent, applied_rules);
    }
    let (m, rules) = normalize_splits_joins(&m);
    applied_rules.extend(rules);
    Ok(NormalizationOutcome { result: Normalization::Normalized(m), applied_rules })
}
