//! Synthetic modeling sessions.
//!
//! A session rebuilds a template model node by node. Templates are split
//! into segments (one per block plus the surrounding sequences). A flow is
//! created as soon as both of its endpoints exist. Profiles differ in how
//! often the modeler jumps to another segment, how often nodes are moved
//! around, and how long the pauses between actions are. Pauses are
//! exponentially distributed. With probability `p_defect` one block join
//! is created with the wrong gateway type, which makes the model unsound.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64`; a cohort
//! draws one `u64` per session from a master generator seeded the same way.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::blocks::find_regions;
use crate::eventlog::{parse_timestamp, EventKind, EventLog, LogError, ModelingEvent, Timestamp};
use crate::replay::{Edge, Node, NodeType, ProcessModel};

pub const BASE_TIME: &str = "2010-11-15T10:00:00.000Z";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimulationError {
    #[error("{name} must be in [0, 1], got {value}")]
    BadProbability { name: &'static str, value: String },
    #[error("{name} must be finite and non-negative, got {value}")]
    BadRate { name: &'static str, value: String },
    #[error("template: {0}")]
    BadTemplate(String),
    #[error(transparent)]
    Log(#[from] LogError),
}

/// A model to rebuild, with the node order a tidy modeler would follow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    model: ProcessModel,
    segments: Vec<Vec<String>>,
}

impl Template {
    /// `segments` must list every node of `model` exactly once.
    pub fn new(model: ProcessModel, segments: Vec<Vec<String>>) -> Result<Self, SimulationError> {
        let listed: Vec<&String> = segments.iter().flatten().collect();
        let distinct: BTreeSet<&String> = listed.iter().copied().collect();
        if distinct.len() != listed.len() {
            return Err(SimulationError::BadTemplate("a node appears in two segments".into()));
        }
        let nodes: BTreeSet<&String> = model.nodes().map(|n| &n.id).collect();
        if nodes != distinct {
            return Err(SimulationError::BadTemplate("segments must cover every node".into()));
        }
        Ok(Template { model, segments })
    }

    /// Pre-flight checks: a sequence followed by an AND block, an XOR block
    /// and another AND block.
    pub fn preflight() -> Self {
        let nodes: [(&str, NodeType, &str, i64, i64); 16] = [
            ("n01", NodeType::StartEvent, "", 40, 200),
            ("n02", NodeType::Activity, "Check weather", 120, 200),
            ("n03", NodeType::And, "", 240, 200),
            ("n04", NodeType::Activity, "File flight plan", 340, 120),
            ("n05", NodeType::Activity, "Fuel aircraft", 340, 280),
            ("n06", NodeType::And, "", 440, 200),
            ("n07", NodeType::Xor, "", 540, 200),
            ("n08", NodeType::Activity, "Request clearance", 640, 120),
            ("n09", NodeType::Activity, "Announce departure", 640, 280),
            ("n10", NodeType::Xor, "", 740, 200),
            ("n11", NodeType::And, "", 840, 200),
            ("n12", NodeType::Activity, "Walk-around inspection", 940, 120),
            ("n13", NodeType::Activity, "Board passengers", 940, 280),
            ("n14", NodeType::And, "", 1040, 200),
            ("n15", NodeType::Activity, "Take off", 1140, 200),
            ("n16", NodeType::EndEvent, "", 1240, 200),
        ];
        let flows = [
            ("n01", "n02"),
            ("n02", "n03"),
            ("n03", "n04"),
            ("n03", "n05"),
            ("n04", "n06"),
            ("n05", "n06"),
            ("n06", "n07"),
            ("n07", "n08"),
            ("n07", "n09"),
            ("n08", "n10"),
            ("n09", "n10"),
            ("n10", "n11"),
            ("n11", "n12"),
            ("n11", "n13"),
            ("n12", "n14"),
            ("n13", "n14"),
            ("n14", "n15"),
            ("n15", "n16"),
        ];
        let mut model = ProcessModel::new();
        for (id, ty, label, x, y) in nodes {
            let mut node = Node::new(id, ty);
            node.label = label.into();
            node.x = x;
            node.y = y;
            model.add_node(node).expect("distinct ids");
        }
        for (k, (s, t)) in flows.iter().enumerate() {
            model.add_edge(Edge::new(format!("f{:02}", k + 1), *s, *t)).expect("endpoints exist");
        }
        let segments = [
            &["n01", "n02"][..],
            &["n03", "n04", "n05", "n06"],
            &["n07", "n08", "n09", "n10"],
            &["n11", "n12", "n13", "n14"],
            &["n15", "n16"],
        ];
        let segments = segments.iter().map(|s| s.iter().map(|id| id.to_string()).collect()).collect();
        Template::new(model, segments).expect("preflight template is consistent")
    }

    pub fn model(&self) -> &ProcessModel {
        &self.model
    }

    pub fn segments(&self) -> &[Vec<String>] {
        &self.segments
    }

    /// Join gateways of the template's blocks, the candidates for a defect.
    pub fn block_joins(&self) -> Vec<String> {
        let joins: BTreeSet<String> = find_regions(&self.model).into_iter().map(|r| r.join_id).collect();
        joins.into_iter().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProfileName {
    Structured,
    Chaotic,
    Slow,
    Fast,
}

impl ProfileName {
    pub const ALL: [ProfileName; 4] = [ProfileName::Structured, ProfileName::Chaotic, ProfileName::Slow, ProfileName::Fast];

    pub fn as_str(self) -> &'static str {
        match self {
            ProfileName::Structured => "structured",
            ProfileName::Chaotic => "chaotic",
            ProfileName::Slow => "slow",
            ProfileName::Fast => "fast",
        }
    }
}

impl fmt::Display for ProfileName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProfileName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown profile `{s}` (expected structured, chaotic, slow or fast)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationProfile {
    pub name: ProfileName,
    /// Chance that the next node comes from another unfinished segment.
    pub block_interleave_prob: f64,
    /// Expected moves per create action.
    pub move_rate: f64,
    /// Mean pause between actions, in seconds.
    pub mean_gap: f64,
    pub p_defect: f64,
    pub seed: u64,
    pub template: Template,
}

impl SimulationProfile {
    pub fn preset(name: ProfileName, seed: u64) -> Self {
        let (block_interleave_prob, move_rate, mean_gap, p_defect) = match name {
            ProfileName::Structured => (0.02, 0.3, 8.0, 0.0),
            ProfileName::Chaotic => (0.6, 1.5, 20.0, 0.7),
            ProfileName::Slow => (0.1, 0.5, 30.0, 0.0),
            ProfileName::Fast => (0.1, 0.2, 3.0, 0.0),
        };
        SimulationProfile { name, block_interleave_prob, move_rate, mean_gap, p_defect, seed, template: Template::preflight() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SimulationProfile { seed, ..self.clone() }
    }

    fn validate(&self) -> Result<(), SimulationError> {
        for (name, value) in [("block_interleave_prob", self.block_interleave_prob), ("p_defect", self.p_defect)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SimulationError::BadProbability { name, value: value.to_string() });
            }
        }
        for (name, value) in [("move_rate", self.move_rate), ("mean_gap", self.mean_gap)] {
            if !value.is_finite() || value < 0.0 {
                return Err(SimulationError::BadRate { name, value: value.to_string() });
            }
        }
        Ok(())
    }
}

struct Session {
    rng: ChaCha8Rng,
    gap: Option<Exp<f64>>,
    clock: Timestamp,
    events: Vec<ModelingEvent>,
}

impl Session {
    fn push(&mut self, kind: EventKind, id: &str, build: impl FnOnce(ModelingEvent) -> ModelingEvent) {
        if !self.events.is_empty() {
            let secs = self.gap.map_or(0.0, |g| g.sample(&mut self.rng));
            self.clock += chrono::Duration::milliseconds(((secs * 1000.0).round() as i64).max(1));
        }
        let seq = self.events.len() as u64 + 1;
        self.events.push(build(ModelingEvent::new(seq, self.clock, kind, id)));
    }
}

/// One session for `profile`, deterministic in `profile.seed`.
pub fn simulate(profile: &SimulationProfile, session_id: &str) -> Result<EventLog, SimulationError> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);

    let mut target = profile.template.model.clone();
    let joins = profile.template.block_joins();
    if !joins.is_empty() && rng.random::<f64>() < profile.p_defect {
        let join = &joins[rng.random_range(0..joins.len())];
        let node = target.node_mut(join).expect("join exists");
        node.node_type = if node.node_type == NodeType::And { NodeType::Xor } else { NodeType::And };
    }

    let gap = (profile.mean_gap > 0.0).then(|| Exp::new(1.0 / profile.mean_gap).expect("positive rate"));
    let mut session = Session { rng, gap, clock: parse_timestamp(BASE_TIME).expect("valid base time"), events: Vec::new() };
    let move_prob = profile.move_rate / (1.0 + profile.move_rate);

    let mut remaining: Vec<Vec<String>> = profile.template.segments.iter().map(|s| s.iter().rev().cloned().collect()).collect();
    let mut positions: BTreeMap<String, (i64, i64)> = BTreeMap::new();
    let mut pending_edges: Vec<&Edge> = target.edges().collect();

    loop {
        let open: Vec<usize> = (0..remaining.len()).filter(|&s| !remaining[s].is_empty()).collect();
        let Some(&current) = open.first() else { break };
        let segment = if open.len() > 1 && session.rng.random::<f64>() < profile.block_interleave_prob {
            open[session.rng.random_range(1..open.len())]
        } else {
            current
        };
        let id = remaining[segment].pop().expect("open segment");
        let node = target.node(&id).expect("template node");
        let (x, y) = (node.x, node.y);
        session.push(EventKind::create_for(node.node_type.object_type()), &id, |e| {
            let e = e.at(x, y);
            if node.label.is_empty() {
                e
            } else {
                e.labeled(node.label.clone())
            }
        });
        positions.insert(id.clone(), (x, y));
        wander(&mut session, &target, &mut positions, move_prob);

        let (ready, rest): (Vec<&Edge>, Vec<&Edge>) =
            pending_edges.into_iter().partition(|e| positions.contains_key(&e.source) && positions.contains_key(&e.target));
        pending_edges = rest;
        for edge in ready {
            session.push(EventKind::CreateEdge, &edge.id, |e| e.between(edge.source.clone(), edge.target.clone()));
            wander(&mut session, &target, &mut positions, move_prob);
        }
    }
    Ok(EventLog::new(session_id, session.events)?)
}

/// A geometric number of moves on random existing nodes.
fn wander(session: &mut Session, model: &ProcessModel, positions: &mut BTreeMap<String, (i64, i64)>, move_prob: f64) {
    while session.rng.random::<f64>() < move_prob {
        let k = session.rng.random_range(0..positions.len());
        let (id, pos) = positions.iter_mut().nth(k).expect("index in range");
        let (dx, dy) = (session.rng.random_range(-40..=40), session.rng.random_range(-40..=40));
        *pos = (pos.0 + dx, pos.1 + dy);
        let (id, (x, y)) = (id.clone(), *pos);
        let ty = model.node(&id).expect("created node").node_type.object_type();
        let kind = EventKind::move_for(ty).expect("nodes can move");
        session.push(kind, &id, |e| e.at(x, y));
    }
}

/// `sessions` logs named `<profile>-NNN`, seeded from `profile.seed`.
pub fn simulate_cohort(profile: &SimulationProfile, sessions: usize) -> Result<Vec<EventLog>, SimulationError> {
    let mut master = ChaCha8Rng::seed_from_u64(profile.seed);
    (0..sessions)
        .map(|i| {
            let seed = master.random::<u64>();
            simulate(&profile.with_seed(seed), &format!("{}-{:03}", profile.name, i + 1))
        })
        .collect()
}
