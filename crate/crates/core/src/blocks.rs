//! Gateway-bounded blocks and the two structured-modeling metrics.
//!
//! A block is a split gateway and a join gateway joined by at least two
//! edge-disjoint paths whose interior is single-entry/single-exit. Edges are
//! never members. A block's construction interval runs over the create
//! times of the nodes present when the block first became complete.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::eventlog::{expand_reconnect, format_timestamp, EventClass, EventLog, Timestamp};
use crate::replay::{apply_event, final_model, ProcessModel, ReplayError};
use crate::{Measure, Rational};

/// A split/join region found in a single model snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub split_id: String,
    pub join_id: String,
    pub members: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub split_id: String,
    pub join_id: String,
    /// Split, join and interior nodes present at completion.
    pub members: BTreeSet<String>,
    pub completion_seq: u64,
    pub interval: (Timestamp, Timestamp),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockError {
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("model is not the final model of log {0}")]
    ModelMismatch(String),
}

/// Index-based adjacency over a model snapshot.
struct Graph {
    ids: Vec<String>,
    gateway: Vec<bool>,
    /// (edge index, target)
    out: Vec<Vec<(usize, usize)>>,
    /// (edge index, source)
    inc: Vec<Vec<(usize, usize)>>,
    edge_count: usize,
}

impl Graph {
    fn new(model: &ProcessModel) -> Self {
        let ids: Vec<String> = model.nodes().map(|n| n.id.clone()).collect();
        let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let gateway = model.nodes().map(|n| n.node_type.is_gateway()).collect();
        let mut out = vec![Vec::new(); ids.len()];
        let mut inc = vec![Vec::new(); ids.len()];
        let mut edge_count = 0;
        for (k, e) in model.edges().enumerate() {
            let (s, t) = (index[e.source.as_str()], index[e.target.as_str()]);
            out[s].push((k, t));
            inc[t].push((k, s));
            edge_count += 1;
        }
        Graph { ids, gateway, out, inc, edge_count }
    }

    /// Nodes reachable from `from` along `adj`, never entering `blocked`.
    fn reach(&self, from: &[usize], forward: bool, blocked: &[usize]) -> Vec<bool> {
        let adj = if forward { &self.out } else { &self.inc };
        let mut seen = vec![false; self.ids.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &f in from {
            if !blocked.contains(&f) && !seen[f] {
                seen[f] = true;
                queue.push_back(f);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &(_, w) in &adj[v] {
                if !blocked.contains(&w) && !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Whether two edge-disjoint paths lead from `s` to `t` (unit-capacity
    /// max flow, stopped at 2).
    fn two_edge_disjoint_paths(&self, s: usize, t: usize) -> bool {
        let mut used = vec![false; self.edge_count];
        for _ in 0..2 {
            // BFS in the residual graph: unused edges forward, used edges backward.
            let mut prev: Vec<Option<(usize, usize, bool)>> = vec![None; self.ids.len()];
            let mut seen = vec![false; self.ids.len()];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                if v == t {
                    break;
                }
                for &(e, w) in &self.out[v] {
                    if !used[e] && !seen[w] {
                        seen[w] = true;
                        prev[w] = Some((v, e, true));
                        queue.push_back(w);
                    }
                }
                for &(e, w) in &self.inc[v] {
                    if used[e] && !seen[w] {
                        seen[w] = true;
                        prev[w] = Some((v, e, false));
                        queue.push_back(w);
                    }
                }
            }
            if !seen[t] {
                return false;
            }
            let mut v = t;
            while let Some((u, e, forward)) = prev[v] {
                used[e] = forward;
                v = u;
            }
        }
        true
    }

    /// A region whose join lies upstream of its split: the join reaches the
    /// split and dominates it from the model's entry nodes.
    fn is_loop_shaped(&self, s: usize, j: usize) -> bool {
        if !self.reach(&[j], true, &[])[s] {
            return false;
        }
        let roots: Vec<usize> = (0..self.ids.len()).filter(|&v| self.inc[v].is_empty()).collect();
        !self.reach(&roots, true, &[j])[s]
    }

    fn region(&self, s: usize, j: usize) -> Option<Vec<usize>> {
        if s == j || self.out[s].len() < 2 || self.inc[j].len() < 2 {
            return None;
        }
        let succ: Vec<usize> = self.out[s].iter().map(|&(_, w)| w).collect();
        let pred: Vec<usize> = self.inc[j].iter().map(|&(_, w)| w).collect();
        let fwd = self.reach(&succ, true, &[s, j]);
        let bwd = self.reach(&pred, false, &[s, j]);
        let interior: Vec<usize> = (0..self.ids.len()).filter(|&v| fwd[v] && bwd[v]).collect();
        let inside = |v: usize| fwd[v] && bwd[v];
        let sese = interior.iter().all(|&v| {
            self.inc[v].iter().all(|&(_, u)| u == s || inside(u))
                && self.out[v].iter().all(|&(_, w)| w == j || inside(w))
        });
        if !sese || !self.two_edge_disjoint_paths(s, j) || self.is_loop_shaped(s, j) {
            return None;
        }
        Some(interior)
    }
}

/// Every block region of a single model snapshot, nested ones included,
/// ordered by (split id, join id).
pub fn find_regions(model: &ProcessModel) -> Vec<Region> {
    let g = Graph::new(model);
    let gateways: Vec<usize> = (0..g.ids.len()).filter(|&v| g.gateway[v]).collect();
    let mut regions = Vec::new();
    for &s in &gateways {
        for &j in &gateways {
            if let Some(interior) = g.region(s, j) {
                let mut members: BTreeSet<String> = interior.iter().map(|&v| g.ids[v].clone()).collect();
                members.insert(g.ids[s].clone());
                members.insert(g.ids[j].clone());
                regions.push(Region { split_id: g.ids[s].clone(), join_id: g.ids[j].clone(), members });
            }
        }
    }
    regions
}

/// Create time of every object, keyed by id (last create wins, which only
/// matters for reconnected edges).
fn create_times(log: &EventLog) -> HashMap<&str, (u64, Timestamp)> {
    log.events()
        .iter()
        .filter(|e| matches!(e.class(), EventClass::Create | EventClass::Reconnect))
        .map(|e| (e.object_id.as_str(), (e.seq, e.timestamp)))
        .collect()
}

/// Blocks of the final model, each with members and interval taken from
/// the replay snapshot at which it first became complete.
pub fn detect_blocks(model: &ProcessModel, log: &EventLog) -> Result<Vec<Block>, BlockError> {
    let log = expand_reconnect(log);
    if final_model(&log)? != *model {
        return Err(BlockError::ModelMismatch(log.session_id().to_string()));
    }
    let mut pending: HashSet<(String, String)> =
        find_regions(model).into_iter().map(|r| (r.split_id, r.join_id)).collect();
    let created = create_times(&log);

    let mut blocks = Vec::new();
    let mut snapshot = ProcessModel::new();
    for e in log.events() {
        apply_event(&mut snapshot, e)?;
        if pending.is_empty() {
            break;
        }
        if !matches!(e.class(), EventClass::Create | EventClass::Delete) {
            continue;
        }
        for region in find_regions(&snapshot) {
            let key = (region.split_id.clone(), region.join_id.clone());
            if !pending.remove(&key) {
                continue;
            }
            let times = region.members.iter().map(|m| created[m.as_str()].1);
            let start = times.clone().min().expect("block has members");
            let end = times.max().expect("block has members");
            blocks.push(Block {
                split_id: region.split_id,
                join_id: region.join_id,
                members: region.members,
                completion_seq: e.seq,
                interval: (start, end),
            });
        }
    }
    blocks.sort_by(|a, b| (&a.split_id, &a.join_id).cmp(&(&b.split_id, &b.join_id)));
    Ok(blocks)
}

/// Largest number of blocks whose closed construction intervals share an
/// instant.
pub fn max_simul_block(blocks: &[Block]) -> u32 {
    max_overlap(blocks.iter().map(|b| (b.interval.0, b.interval.1)))
}

/// Sweep over closed intervals; a start and an end at the same instant
/// overlap.
pub fn max_overlap<T: Ord + Copy>(intervals: impl IntoIterator<Item = (T, T)>) -> u32 {
    // (time, 0 = start, 1 = end): starts sort before ends at equal times.
    let mut points: Vec<(T, u8)> = Vec::new();
    for (a, b) in intervals {
        points.push((a, 0));
        points.push((b, 1));
    }
    points.sort();
    let (mut open, mut best) = (0u32, 0u32);
    for (_, kind) in points {
        if kind == 0 {
            open += 1;
            best = best.max(open);
        } else {
            open -= 1;
        }
    }
    best
}

/// Whether no foreign node was created between the first and last member
/// create (edge creates do not count).
pub fn is_made_as_whole(block: &Block, log: &EventLog) -> bool {
    let created = create_times(log);
    let seqs = block.members.iter().filter_map(|m| created.get(m.as_str()).map(|c| c.0));
    let (lo, hi) = match (seqs.clone().min(), seqs.max()) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return true,
    };
    !log.events().iter().any(|e| {
        e.seq > lo
            && e.seq < hi
            && e.class() == EventClass::Create
            && e.object_type.is_node()
            && !block.members.contains(&e.object_id)
    })
}

/// Fraction of blocks made as a whole; not applicable without blocks.
pub fn perc_blocks_as_whole(blocks: &[Block], log: &EventLog) -> Measure {
    if blocks.is_empty() {
        return Measure::NotApplicable;
    }
    let whole = blocks.iter().filter(|b| is_made_as_whole(b, log)).count();
    Measure::Value(Rational::new(whole as i64, blocks.len() as i64))
}

/// Block as written into session reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockSummary {
    pub split: String,
    pub join: String,
    pub members: Vec<String>,
    pub interval: [String; 2],
    pub completion_seq: u64,
    pub whole: bool,
}

impl BlockSummary {
    pub fn new(block: &Block, log: &EventLog) -> Self {
        BlockSummary {
            split: block.split_id.clone(),
            join: block.join_id.clone(),
            members: block.members.iter().cloned().collect(),
            interval: [format_timestamp(&block.interval.0), format_timestamp(&block.interval.1)],
            completion_seq: block.completion_seq,
            whole: is_made_as_whole(block, log),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::{parse_timestamp, EventKind, ModelingEvent};
    use crate::replay::{Edge, Node, NodeType};

    fn t(ms: i64) -> Timestamp {
        parse_timestamp("2010-11-15T10:00:00.000Z").unwrap() + chrono::Duration::milliseconds(ms)
    }

    fn block(a: i64, b: i64) -> Block {
        Block {
            split_id: String::new(),
            join_id: String::new(),
            members: BTreeSet::new(),
            completion_seq: 0,
            interval: (t(a), t(b)),
        }
    }

    fn model(nodes: &[(&str, NodeType)], edges: &[(&str, &str)]) -> ProcessModel {
        let mut m = ProcessModel::new();
        for (id, ty) in nodes {
            m.add_node(Node::new(*id, *ty)).unwrap();
        }
        for (k, (s, t)) in edges.iter().enumerate() {
            m.add_edge(Edge::new(format!("e{k}"), *s, *t)).unwrap();
        }
        m
    }

    #[test]
    fn overlap_counts() {
        assert_eq!(max_simul_block(&[block(1000, 3000), block(2500, 5000)]), 2);
        assert_eq!(max_simul_block(&[block(1000, 2000), block(3000, 4000)]), 1);
        assert_eq!(max_simul_block(&[block(1000, 2000), block(2000, 4000)]), 2);
        assert_eq!(max_simul_block(&[]), 0);
    }

    #[test]
    fn single_diamond_is_one_block() {
        use NodeType::*;
        let m = model(
            &[("s", Xor), ("A", Activity), ("B", Activity), ("j", Xor)],
            &[("s", "A"), ("s", "B"), ("A", "j"), ("B", "j")],
        );
        let regions = find_regions(&m);
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].members, ["A", "B", "j", "s"].map(String::from).into());
    }

    #[test]
    fn sequence_has_no_blocks() {
        use NodeType::*;
        let m = model(
            &[("S", StartEvent), ("A", Activity), ("B", Activity), ("E", EndEvent)],
            &[("S", "A"), ("A", "B"), ("B", "E")],
        );
        assert!(find_regions(&m).is_empty());
    }

    #[test]
    fn leaking_branch_is_not_a_block() {
        use NodeType::*;
        // A also flows to X outside the diamond.
        let m = model(
            &[("s", Xor), ("A", Activity), ("B", Activity), ("j", Xor), ("X", Activity)],
            &[("s", "A"), ("s", "B"), ("A", "j"), ("B", "j"), ("A", "X")],
        );
        assert!(find_regions(&m).is_empty());
    }

    #[test]
    fn loop_is_not_a_block() {
        use NodeType::*;
        // S -> J -> A -> X; X -> {B, C} -> J; X -> E
        let m = model(
            &[("S", StartEvent), ("J", Xor), ("A", Activity), ("X", Xor), ("B", Activity), ("C", Activity), ("E", EndEvent)],
            &[("S", "J"), ("J", "A"), ("A", "X"), ("X", "B"), ("X", "C"), ("B", "J"), ("C", "J"), ("X", "E")],
        );
        assert!(find_regions(&m).is_empty());
    }

    #[test]
    fn diamond_inside_loop_is_a_block() {
        use NodeType::*;
        // S -> LJ -> s -> {A,B} -> j -> LS -> {LJ, E}
        let m = model(
            &[("S", StartEvent), ("LJ", Xor), ("s", And), ("A", Activity), ("B", Activity), ("j", And), ("LS", Xor), ("E", EndEvent)],
            &[("S", "LJ"), ("LJ", "s"), ("s", "A"), ("s", "B"), ("A", "j"), ("B", "j"), ("j", "LS"), ("LS", "LJ"), ("LS", "E")],
        );
        let regions = find_regions(&m);
        assert_eq!(regions.len(), 1);
        assert_eq!((regions[0].split_id.as_str(), regions[0].join_id.as_str()), ("s", "j"));
    }

    fn diamond_log(interleave: bool) -> EventLog {
        let mut rows = vec![
            (EventKind::CreateXor, "s", None),
            (EventKind::CreateActivity, "A", None),
            (EventKind::CreateEdge, "e1", Some(("s", "A"))),
            (EventKind::CreateActivity, "B", None),
        ];
        if interleave {
            rows.push((EventKind::CreateActivity, "X", None));
        }
        rows.extend([
            (EventKind::CreateXor, "j", None),
            (EventKind::CreateEdge, "e2", Some(("s", "B"))),
            (EventKind::CreateEdge, "e3", Some(("A", "j"))),
            (EventKind::CreateEdge, "e4", Some(("B", "j"))),
        ]);
        let events = rows
            .into_iter()
            .enumerate()
            .map(|(i, (kind, id, ends))| {
                let e = ModelingEvent::new(i as u64 + 1, t(i as i64 * 1000), kind, id);
                match ends {
                    Some((s, tg)) => e.between(s, tg),
                    None => e,
                }
            })
            .collect();
        EventLog::new("d", events).unwrap()
    }

    #[test]
    fn diamond_built_consecutively_is_whole() {
        let log = diamond_log(false);
        let m = final_model(&log).unwrap();
        let blocks = detect_blocks(&m, &log).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].completion_seq, 8);
        assert_eq!(blocks[0].interval, (t(0), t(4000)));
        assert_eq!(perc_blocks_as_whole(&blocks, &log), Measure::Value(Rational::from_integer(1)));
    }

    #[test]
    fn foreign_node_breaks_wholeness() {
        let log = diamond_log(true);
        let m = final_model(&log).unwrap();
        let blocks = detect_blocks(&m, &log).unwrap();
        assert_eq!(blocks.len(), 1);
        assert!(!is_made_as_whole(&blocks[0], &log));
        assert_eq!(perc_blocks_as_whole(&blocks, &log), Measure::Value(Rational::from_integer(0)));
        assert_eq!(perc_blocks_as_whole(&[], &log), Measure::NotApplicable);
    }

    #[test]
    fn mismatched_model_is_rejected() {
        let log = diamond_log(false);
        assert!(matches!(detect_blocks(&ProcessModel::new(), &log), Err(BlockError::ModelMismatch(_))));
    }
}
