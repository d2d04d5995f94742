//! Classical soundness of workflow nets by explicit reachability.
//!
//! From the initial marking `[i]` the checker requires that every reachable
//! marking can still reach `[o]`, that a token in `o` only ever appears as
//! the marking `[o]`, and that every transition can fire somewhere. A new
//! marking that strictly covers one of its ancestors proves the net
//! unbounded, and unbounded nets are never sound.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::Serialize;

use crate::wfnet::{is_wf_structured, Marking, WfNet};

pub const DEFAULT_MAX_STATES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Sound,
    Unsound,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NotWfStructured,
    DeadlockNoCompletion,
    ImproperCompletion,
    DeadTransition,
    Unbounded,
    StateSpaceExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Witness {
    /// A reachable marking and the shortest firing sequence reaching it.
    Marking { marking: BTreeMap<String, u32>, firing_sequence: Vec<String> },
    Transition { transition: String },
    Nodes { nodes: Vec<String> },
    None {},
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SoundnessReport {
    pub verdict: Verdict,
    pub violations: Vec<Violation>,
    pub states_explored: usize,
}

impl SoundnessReport {
    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

struct StateSpace {
    markings: Vec<Marking>,
    /// (parent state, transition fired) for every state but the first.
    parent: Vec<Option<(usize, usize)>>,
    predecessors: Vec<Vec<usize>>,
    fired: Vec<bool>,
}

enum Exploration {
    Complete(StateSpace),
    /// State, transition fired from it, and the covering marking produced.
    Unbounded(StateSpace, usize, usize, Marking),
    Exceeded(usize),
}

impl StateSpace {
    fn firing_sequence(&self, net: &WfNet, mut state: usize) -> Vec<String> {
        let mut seq = Vec::new();
        while let Some((parent, t)) = self.parent[state] {
            seq.push(net.transitions()[t].id.clone());
            state = parent;
        }
        seq.reverse();
        seq
    }

    fn witness(&self, net: &WfNet, state: usize) -> Witness {
        Witness::Marking { marking: net.describe(&self.markings[state]), firing_sequence: self.firing_sequence(net, state) }
    }
}

/// Breadth-first exploration. Stops on the first marking that strictly
/// covers an ancestor, or once more than `max_states` markings exist.
fn explore(net: &WfNet, max_states: usize) -> Exploration {
    let initial = net.initial_marking();
    let mut space = StateSpace {
        markings: vec![initial.clone()],
        parent: vec![None],
        predecessors: vec![Vec::new()],
        fired: vec![false; net.transitions().len()],
    };
    let mut index: HashMap<Marking, usize> = HashMap::from([(initial, 0)]);
    let mut queue = VecDeque::from([0usize]);

    while let Some(s) = queue.pop_front() {
        for (k, t) in net.transitions().iter().enumerate() {
            if !space.markings[s].enables(t) {
                continue;
            }
            space.fired[k] = true;
            let next = space.markings[s].fire(t);
            if let Some(&known) = index.get(&next) {
                space.predecessors[known].push(s);
                continue;
            }
            let mut ancestor = Some(s);
            while let Some(a) = ancestor {
                if next.strictly_covers(&space.markings[a]) {
                    return Exploration::Unbounded(space, s, k, next);
                }
                ancestor = space.parent[a].map(|(p, _)| p);
            }
            if space.markings.len() >= max_states {
                return Exploration::Exceeded(space.markings.len());
            }
            let id = space.markings.len();
            index.insert(next.clone(), id);
            space.markings.push(next);
            space.parent.push(Some((s, k)));
            space.predecessors.push(vec![s]);
            queue.push_back(id);
        }
    }
    Exploration::Complete(space)
}

/// Decides soundness of `net`, exploring at most `max_states` markings.
pub fn check_soundness(net: &WfNet, max_states: usize) -> SoundnessReport {
    let structure = is_wf_structured(net);
    if !structure.wf_structured {
        return SoundnessReport {
            verdict: Verdict::Unsound,
            violations: vec![Violation {
                kind: ViolationKind::NotWfStructured,
                witness: Witness::Nodes { nodes: structure.offending },
            }],
            states_explored: 0,
        };
    }

    let space = match explore(net, max_states.max(1)) {
        Exploration::Exceeded(states) => {
            return SoundnessReport {
                verdict: Verdict::Unknown,
                violations: vec![Violation { kind: ViolationKind::StateSpaceExceeded, witness: Witness::None {} }],
                states_explored: states,
            }
        }
        Exploration::Unbounded(space, parent, k, marking) => {
            let mut firing_sequence = space.firing_sequence(net, parent);
            firing_sequence.push(net.transitions()[k].id.clone());
            return SoundnessReport {
                verdict: Verdict::Unsound,
                violations: vec![Violation {
                    kind: ViolationKind::Unbounded,
                    witness: Witness::Marking { marking: net.describe(&marking), firing_sequence },
                }],
                states_explored: space.markings.len() + 1,
            };
        }
        Exploration::Complete(space) => space,
    };

    let mut violations = Vec::new();
    let final_marking = net.final_marking();
    let sink = net.sink();

    if let Some(s) = (0..space.markings.len()).find(|&s| space.markings[s].0[sink] > 0 && space.markings[s] != final_marking) {
        violations.push(Violation { kind: ViolationKind::ImproperCompletion, witness: space.witness(net, s) });
    }

    let mut can_complete = vec![false; space.markings.len()];
    if let Some(f) = space.markings.iter().position(|m| *m == final_marking) {
        can_complete[f] = true;
        let mut stack = vec![f];
        while let Some(s) = stack.pop() {
            for &p in &space.predecessors[s] {
                if !can_complete[p] {
                    can_complete[p] = true;
                    stack.push(p);
                }
            }
        }
    }
    if let Some(s) = can_complete.iter().position(|&ok| !ok) {
        violations.push(Violation { kind: ViolationKind::DeadlockNoCompletion, witness: space.witness(net, s) });
    }

    for (k, fired) in space.fired.iter().enumerate() {
        if !fired {
            violations.push(Violation {
                kind: ViolationKind::DeadTransition,
                witness: Witness::Transition { transition: net.transitions()[k].id.clone() },
            });
        }
    }

    SoundnessReport {
        verdict: if violations.is_empty() { Verdict::Sound } else { Verdict::Unsound },
        violations,
        states_explored: space.markings.len(),
    }
}
