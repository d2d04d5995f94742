//! Workflow nets and the translation of normalized models into them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::replay::{NodeType, ProcessModel};

pub const SOURCE_PLACE: &str = "i";
pub const SINK_PLACE: &str = "o";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub id: String,
    pub label: Option<String>,
    /// Input place indices, sorted and distinct.
    pub inputs: Vec<usize>,
    /// Output place indices, sorted and distinct.
    pub outputs: Vec<usize>,
}

impl Transition {
    pub fn new(id: impl Into<String>, mut inputs: Vec<usize>, mut outputs: Vec<usize>) -> Self {
        inputs.sort_unstable();
        inputs.dedup();
        outputs.sort_unstable();
        outputs.dedup();
        Transition { id: id.into(), label: None, inputs, outputs }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WfNetError {
    #[error("node {node} has {count} incoming flows; normalize the model first")]
    TooManyInputs { node: String, count: usize },
    #[error("node {node} has {count} outgoing flows; normalize the model first")]
    TooManyOutputs { node: String, count: usize },
    #[error("gateway {0} both joins and splits")]
    MixedGateway(String),
    #[error("transition {transition} references place index {place} out of range")]
    BadPlace { transition: String, place: usize },
    #[error("source and sink must be distinct places")]
    SourceIsSink,
}

/// A place/transition net with a designated source place `i` and sink
/// place `o`. Arcs are implied by the transitions' input and output sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WfNet {
    places: Vec<String>,
    transitions: Vec<Transition>,
    source: usize,
    sink: usize,
}

impl WfNet {
    pub fn new(places: Vec<String>, transitions: Vec<Transition>, source: usize, sink: usize) -> Result<Self, WfNetError> {
        if source == sink {
            return Err(WfNetError::SourceIsSink);
        }
        for t in &transitions {
            if let Some(&p) = t.inputs.iter().chain(&t.outputs).find(|&&p| p >= places.len()) {
                return Err(WfNetError::BadPlace { transition: t.id.clone(), place: p });
            }
        }
        if source >= places.len() || sink >= places.len() {
            return Err(WfNetError::BadPlace { transition: String::new(), place: source.max(sink) });
        }
        Ok(WfNet { places, transitions, source, sink })
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn arc_count(&self) -> usize {
        self.transitions.iter().map(|t| t.inputs.len() + t.outputs.len()).sum()
    }

    pub fn initial_marking(&self) -> Marking {
        Marking::single(self.places.len(), self.source)
    }

    pub fn final_marking(&self) -> Marking {
        Marking::single(self.places.len(), self.sink)
    }

    /// Marking as a place-name map, omitting empty places.
    pub fn describe(&self, m: &Marking) -> BTreeMap<String, u32> {
        m.0.iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(p, &n)| (self.places[p].clone(), n))
            .collect()
    }

    /// Same net with transitions listed in another order.
    pub fn with_transition_order(&self, order: &[usize]) -> WfNet {
        WfNet { transitions: order.iter().map(|&k| self.transitions[k].clone()).collect(), ..self.clone() }
    }
}

/// Token count per place, indexed like [`WfNet::places`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(pub Vec<u32>);

impl Marking {
    pub fn single(places: usize, place: usize) -> Self {
        let mut tokens = vec![0; places];
        tokens[place] = 1;
        Marking(tokens)
    }

    pub fn enables(&self, t: &Transition) -> bool {
        t.inputs.iter().all(|&p| self.0[p] > 0)
    }

    /// Successor marking; the caller checks enabledness.
    pub fn fire(&self, t: &Transition) -> Marking {
        let mut next = self.0.clone();
        for &p in &t.inputs {
            next[p] -= 1;
        }
        for &p in &t.outputs {
            next[p] += 1;
        }
        Marking(next)
    }

    /// Componentwise `>=` and different.
    pub fn strictly_covers(&self, other: &Marking) -> bool {
        self != other && self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }
}

/// Translates a normalized model. Each flow becomes a place; start and end
/// events, activities and AND gateways become one transition; an XOR split
/// becomes one transition per outgoing flow and an XOR join one per
/// incoming flow.
pub fn to_wfnet(model: &ProcessModel) -> Result<WfNet, WfNetError> {
    let mut places = vec![SOURCE_PLACE.to_string()];
    let mut place_of: BTreeMap<&str, usize> = BTreeMap::new();
    for e in model.edges() {
        place_of.insert(&e.id, places.len());
        places.push(format!("p:{}", e.id));
    }
    let source = 0;
    let sink = places.len();
    places.push(SINK_PLACE.to_string());

    let mut transitions = Vec::new();
    for node in model.nodes() {
        let ins: Vec<(&str, usize)> = model.in_edges(&node.id).map(|e| (e.id.as_str(), place_of[e.id.as_str()])).collect();
        let outs: Vec<(&str, usize)> = model.out_edges(&node.id).map(|e| (e.id.as_str(), place_of[e.id.as_str()])).collect();
        let in_places: Vec<usize> = ins.iter().map(|p| p.1).collect();
        let out_places: Vec<usize> = outs.iter().map(|p| p.1).collect();
        let tid = format!("t:{}", node.id);

        if !node.node_type.is_gateway() {
            if ins.len() > 1 {
                return Err(WfNetError::TooManyInputs { node: node.id.clone(), count: ins.len() });
            }
            if outs.len() > 1 {
                return Err(WfNetError::TooManyOutputs { node: node.id.clone(), count: outs.len() });
            }
        } else if ins.len() > 1 && outs.len() > 1 {
            return Err(WfNetError::MixedGateway(node.id.clone()));
        }

        match node.node_type {
            NodeType::StartEvent => {
                let mut inputs = in_places;
                inputs.push(source);
                transitions.push(Transition::new(tid, inputs, out_places));
            }
            NodeType::EndEvent => {
                let mut outputs = out_places;
                outputs.push(sink);
                transitions.push(Transition::new(tid, in_places, outputs));
            }
            NodeType::Activity => {
                let mut t = Transition::new(tid, in_places, out_places);
                t.label = (!node.label.is_empty()).then(|| node.label.clone());
                transitions.push(t);
            }
            NodeType::And => transitions.push(Transition::new(tid, in_places, out_places)),
            NodeType::Xor if ins.len() > 1 => {
                for (edge, p) in ins {
                    transitions.push(Transition::new(format!("{tid}/{edge}"), vec![p], out_places.clone()));
                }
            }
            NodeType::Xor if outs.is_empty() => transitions.push(Transition::new(tid, in_places, vec![])),
            NodeType::Xor => {
                for (edge, p) in outs {
                    transitions.push(Transition::new(format!("{tid}/{edge}"), in_places.clone(), vec![p]));
                }
            }
        }
    }
    WfNet::new(places, transitions, source, sink)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureCheck {
    pub wf_structured: bool,
    /// Places and transitions off every source-to-sink path, plus the
    /// source (sink) itself when it has incoming (outgoing) arcs.
    pub offending: Vec<String>,
}

/// Whether `i` has no incoming arcs, `o` has no outgoing arcs and every
/// node lies on a path from `i` to `o`.
pub fn is_wf_structured(net: &WfNet) -> StructureCheck {
    let np = net.places.len();
    let nt = net.transitions.len();
    let mut consumers = vec![Vec::new(); np];
    let mut producers = vec![Vec::new(); np];
    for (k, t) in net.transitions.iter().enumerate() {
        for &p in &t.inputs {
            consumers[p].push(k);
        }
        for &p in &t.outputs {
            producers[p].push(k);
        }
    }

    let sweep = |start: usize, forward: bool| {
        let mut place_seen = vec![false; np];
        let mut trans_seen = vec![false; nt];
        let mut stack = vec![start];
        place_seen[start] = true;
        while let Some(p) = stack.pop() {
            let next_transitions = if forward { &consumers[p] } else { &producers[p] };
            for &k in next_transitions {
                if trans_seen[k] {
                    continue;
                }
                trans_seen[k] = true;
                let t = &net.transitions[k];
                for &q in if forward { &t.outputs } else { &t.inputs } {
                    if !place_seen[q] {
                        place_seen[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
        (place_seen, trans_seen)
    };
    let (fp, ft) = sweep(net.source, true);
    let (bp, bt) = sweep(net.sink, false);

    let mut offending = Vec::new();
    if !producers[net.source].is_empty() {
        offending.push(net.places[net.source].clone());
    }
    if !consumers[net.sink].is_empty() {
        offending.push(net.places[net.sink].clone());
    }
    offending.extend((0..np).filter(|&p| !(fp[p] && bp[p])).map(|p| net.places[p].clone()));
    offending.extend((0..nt).filter(|&k| !(ft[k] && bt[k])).map(|k| net.transitions[k].id.clone()));
    let mut seen = std::collections::HashSet::new();
    offending.retain(|id| seen.insert(id.clone()));
    StructureCheck { wf_structured: offending.is_empty(), offending }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// PNML (place/transition net) document with one token on the source.
pub fn to_pnml(net: &WfNet, name: &str) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<pnml xmlns=\"http://www.pnml.org/version-2009/grammar/pnml\">\n");
    let _ = writeln!(
        out,
        "  <net id=\"{}\" type=\"http://www.pnml.org/version-2009/grammar/ptnet\">",
        xml_escape(name)
    );
    let _ = writeln!(out, "    <name><text>{}</text></name>", xml_escape(name));
    out.push_str("    <page id=\"page0\">\n");
    for (p, id) in net.places.iter().enumerate() {
        let id = xml_escape(id);
        if p == net.source {
            let _ = writeln!(
                out,
                "      <place id=\"{id}\"><name><text>{id}</text></name><initialMarking><text>1</text></initialMarking></place>"
            );
        } else {
            let _ = writeln!(out, "      <place id=\"{id}\"><name><text>{id}</text></name></place>");
        }
    }
    for t in &net.transitions {
        let id = xml_escape(&t.id);
        let label = xml_escape(t.label.as_deref().unwrap_or(&t.id));
        let _ = writeln!(out, "      <transition id=\"{id}\"><name><text>{label}</text></name></transition>");
    }
    let mut arc = 0;
    for t in &net.transitions {
        let tid = xml_escape(&t.id);
        for &p in &t.inputs {
            let _ = writeln!(out, "      <arc id=\"a{arc}\" source=\"{}\" target=\"{tid}\"/>", xml_escape(&net.places[p]));
            arc += 1;
        }
        for &p in &t.outputs {
            let _ = writeln!(out, "      <arc id=\"a{arc}\" source=\"{tid}\" target=\"{}\"/>", xml_escape(&net.places[p]));
            arc += 1;
        }
    }
    out.push_str("    </page>\n  </net>\n</pnml>\n");
    out
}
