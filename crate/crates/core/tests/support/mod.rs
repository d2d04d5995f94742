//! Shared test helpers: fixtures, random generators and independent
//! oracles. Included by the integration tests of both crates.
#![allow(dead_code)]

pub mod golden;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::PathBuf;

use ppmkit::eventlog::{parse_log, parse_timestamp, EventKind, EventLog, ModelingEvent, ObjectType, Timestamp};
use ppmkit::replay::{Edge, Node, NodeType, ProcessModel};
use ppmkit::wfnet::{Transition, WfNet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

pub fn load_log(name: &str) -> EventLog {
    let file = std::fs::File::open(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    parse_log(file, name.trim_end_matches(".csv")).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub const METRIC_FIXTURES: [&str; 3] = ["diamond_moves.csv", "two_blocks_reconnect.csv", "created_moved_deleted.csv"];
pub const ALL_FIXTURES: [&str; 4] = ["diamond_moves.csv", "two_blocks_reconnect.csv", "created_moved_deleted.csv", "order_session.csv"];

pub fn base_time() -> Timestamp {
    parse_timestamp("2010-11-15T10:00:00.000Z").unwrap()
}

pub fn model(nodes: &[(&str, NodeType)], edges: &[(&str, &str)]) -> ProcessModel {
    let mut m = ProcessModel::new();
    for (id, ty) in nodes {
        m.add_node(Node::new(*id, *ty)).unwrap();
    }
    for (k, (s, t)) in edges.iter().enumerate() {
        m.add_edge(Edge::new(format!("e{k}"), *s, *t)).unwrap();
    }
    m
}

// ---------------------------------------------------------------------------
// Random valid logs

const NODE_TYPES: [ObjectType; 5] = [ObjectType::StartEvent, ObjectType::EndEvent, ObjectType::Activity, ObjectType::Xor, ObjectType::And];
const LABELS: [&str; 5] = ["Check fuel", "Say \"hello\"", "a, b", "Ünïcode", "x"];

/// A valid log of `len` events drawn from every action kind. Deleting a
/// node implicitly removes its edges, as in the editor.
pub fn random_log(seed: u64, len: usize) -> EventLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: BTreeMap<String, ObjectType> = BTreeMap::new();
    let mut edges: BTreeMap<String, (String, String)> = BTreeMap::new();
    let mut events: Vec<ModelingEvent> = Vec::new();
    let mut clock = base_time();
    let mut next_id = 0;

    while events.len() < len {
        clock += chrono::Duration::milliseconds(rng.random_range(0..5_000));
        let seq = events.len() as u64 + 1;
        let pos = (rng.random_range(-50..1000), rng.random_range(-50..600));
        let choice = rng.random_range(0..10);
        let event = if nodes.len() < 2 || choice < 3 {
            let ty = NODE_TYPES[rng.random_range(0..NODE_TYPES.len())];
            next_id += 1;
            let id = format!("n{next_id}");
            nodes.insert(id.clone(), ty);
            let e = ModelingEvent::new(seq, clock, EventKind::create_for(ty), id).at(pos.0, pos.1);
            if ty == ObjectType::Activity && rng.random_bool(0.7) {
                e.labeled(LABELS[rng.random_range(0..LABELS.len())])
            } else {
                e
            }
        } else if choice < 5 || edges.is_empty() {
            let ids: Vec<&String> = nodes.keys().collect();
            let (s, t) = (ids[rng.random_range(0..ids.len())].clone(), ids[rng.random_range(0..ids.len())].clone());
            next_id += 1;
            let id = format!("f{next_id}");
            edges.insert(id.clone(), (s.clone(), t.clone()));
            ModelingEvent::new(seq, clock, EventKind::CreateEdge, id).between(s, t)
        } else if choice < 7 {
            let (id, ty) = nth(&nodes, rng.random_range(0..nodes.len()));
            ModelingEvent::new(seq, clock, EventKind::move_for(ty).unwrap(), id).at(pos.0, pos.1)
        } else if choice == 7 {
            let (id, _) = nth(&edges, rng.random_range(0..edges.len()));
            let kind = [
                EventKind::CreateEdgeBendpoint,
                EventKind::MoveEdgeBendpoint,
                EventKind::DeleteEdgeBendpoint,
                EventKind::MoveEdgeLabel,
                EventKind::NameEdge,
                EventKind::RenameEdge,
            ][rng.random_range(0..6)];
            let e = ModelingEvent::new(seq, clock, kind, id);
            match kind {
                EventKind::NameEdge | EventKind::RenameEdge => e.labeled(LABELS[rng.random_range(0..LABELS.len())]),
                EventKind::DeleteEdgeBendpoint if rng.random_bool(0.5) => e,
                _ => e.at(pos.0, pos.1),
            }
        } else if choice == 8 {
            let (id, _) = nth(&edges, rng.random_range(0..edges.len()));
            let ids: Vec<&String> = nodes.keys().collect();
            let (s, t) = (ids[rng.random_range(0..ids.len())].clone(), ids[rng.random_range(0..ids.len())].clone());
            edges.insert(id.clone(), (s.clone(), t.clone()));
            ModelingEvent::new(seq, clock, EventKind::ReconnectEdge, id).between(s, t)
        } else if rng.random_bool(0.5) {
            let (id, _) = nth(&edges, rng.random_range(0..edges.len()));
            edges.remove(&id);
            ModelingEvent::new(seq, clock, EventKind::DeleteEdge, id)
        } else {
            let (id, ty) = nth(&nodes, rng.random_range(0..nodes.len()));
            nodes.remove(&id);
            edges.retain(|_, (s, t)| *s != id && *t != id);
            ModelingEvent::new(seq, clock, EventKind::delete_for(ty), id)
        };
        events.push(event);
    }
    EventLog::new(format!("random-{seed}"), events).expect("generator emits valid logs")
}

fn nth<V: Clone>(map: &BTreeMap<String, V>, k: usize) -> (String, V) {
    let (id, v) = map.iter().nth(k).unwrap();
    (id.clone(), v.clone())
}

/// Random graph over at most `max_nodes` nodes, gateway-heavy.
pub fn random_model(seed: u64, max_nodes: usize) -> ProcessModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_nodes);
    let mut m = ProcessModel::new();
    for i in 0..n {
        let ty = match rng.random_range(0..6) {
            0 | 1 => NodeType::Xor,
            2 | 3 => NodeType::And,
            4 => NodeType::Activity,
            _ => [NodeType::StartEvent, NodeType::EndEvent][rng.random_range(0..2)],
        };
        m.add_node(Node::new(format!("v{i}"), ty)).unwrap();
    }
    let edge_count = rng.random_range(n - 1..=n + n / 2 + 2);
    for k in 0..edge_count {
        let (s, t) = (rng.random_range(0..n), rng.random_range(0..n));
        m.add_edge(Edge::new(format!("e{k}"), format!("v{s}"), format!("v{t}"))).unwrap();
    }
    m
}

// ---------------------------------------------------------------------------
// Block oracle: exhaustive simple-path enumeration

struct Adj {
    /// (edge id, target)
    out: HashMap<String, Vec<(String, String)>>,
}

impl Adj {
    fn new(m: &ProcessModel) -> Self {
        let mut out: HashMap<String, Vec<(String, String)>> = m.nodes().map(|n| (n.id.clone(), Vec::new())).collect();
        for e in m.edges() {
            out.get_mut(&e.source).unwrap().push((e.id.clone(), e.target.clone()));
        }
        Adj { out }
    }

    /// Edge sets of all simple paths from `from` to `to` that never visit
    /// a node in `avoid`.
    fn simple_paths(&self, from: &str, to: &str, avoid: &[&str]) -> Vec<BTreeSet<String>> {
        let mut found = Vec::new();
        let mut visited = vec![from.to_string()];
        let mut edges = Vec::new();
        self.dfs(from, to, avoid, &mut visited, &mut edges, &mut found);
        found
    }

    fn dfs(&self, at: &str, to: &str, avoid: &[&str], visited: &mut Vec<String>, edges: &mut Vec<String>, found: &mut Vec<BTreeSet<String>>) {
        if at == to {
            found.push(edges.iter().cloned().collect());
            return;
        }
        for (e, w) in &self.out[at] {
            if avoid.contains(&w.as_str()) || visited.contains(w) {
                continue;
            }
            visited.push(w.clone());
            edges.push(e.clone());
            self.dfs(w, to, avoid, visited, edges, found);
            edges.pop();
            visited.pop();
        }
    }

    fn has_path(&self, from: &str, to: &str, avoid: &[&str]) -> bool {
        !self.simple_paths(from, to, avoid).is_empty()
    }
}

/// (split, join, members) for every gateway pair that forms a block.
pub fn oracle_regions(m: &ProcessModel) -> BTreeSet<(String, String, BTreeSet<String>)> {
    let adj = Adj::new(m);
    let gateways: Vec<&Node> = m.nodes().filter(|n| n.node_type.is_gateway()).collect();
    let roots: Vec<&str> = m.nodes().filter(|n| m.in_degree(&n.id) == 0).map(|n| n.id.as_str()).collect();
    let mut out = BTreeSet::new();
    for s in &gateways {
        for j in &gateways {
            let (s, j) = (s.id.as_str(), j.id.as_str());
            if s == j || m.out_degree(s) < 2 || m.in_degree(j) < 2 {
                continue;
            }
            let paths = adj.simple_paths(s, j, &[]);
            let disjoint = paths.iter().enumerate().any(|(a, p)| paths[a + 1..].iter().any(|q| p.is_disjoint(q)));
            if !disjoint {
                continue;
            }
            let interior: BTreeSet<String> = m
                .nodes()
                .map(|n| n.id.as_str())
                .filter(|&v| v != s && v != j && adj.has_path(s, v, &[j]) && adj.has_path(v, j, &[s]))
                .map(String::from)
                .collect();
            let inside = |v: &str| interior.contains(v);
            let sese = m.edges().all(|e| {
                let (a, b) = (e.source.as_str(), e.target.as_str());
                match (inside(a), inside(b)) {
                    (true, false) => b == j,
                    (false, true) => a == s,
                    _ => true,
                }
            });
            if !sese {
                continue;
            }
            let loop_shaped = adj.has_path(j, s, &[]) && !roots.iter().any(|&r| r != j && (r == s || adj.has_path(r, s, &[j])));
            if loop_shaped {
                continue;
            }
            let mut members = interior.clone();
            members.insert(s.to_string());
            members.insert(j.to_string());
            out.insert((s.to_string(), j.to_string(), members));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Random WF-nets and the brute-force soundness oracle

/// Random net with 3 to 8 transitions, at most 10 places (including i and
/// o) and average node degree 2|arcs|/|nodes| in [1.5, 2.5]. Every place
/// other than i has a producer and every place other than o a consumer.
pub fn random_wfnet(seed: u64) -> WfNet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n_t = rng.random_range(3..=8usize);
        let n_p = rng.random_range(3..=(n_t + 2).min(10));
        let (i, o) = (0, n_p - 1);
        let mut pre: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n_t];
        let mut post: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n_t];
        // Every non-source place gets a producer, every non-sink a consumer.
        for p in 0..n_p {
            if p != i {
                post[rng.random_range(0..n_t)].insert(p);
            }
            if p != o {
                pre[rng.random_range(0..n_t)].insert(p);
            }
        }
        for t in 0..n_t {
            if pre[t].is_empty() {
                pre[t].insert(rng.random_range(0..n_p - 1));
            }
            if post[t].is_empty() {
                post[t].insert(rng.random_range(1..n_p));
            }
        }
        let nodes = (n_t + n_p) as f64;
        let density: f64 = rng.random_range(1.5..=2.5);
        let target = (density * nodes / 2.0).round() as usize;
        let arcs = |pre: &[BTreeSet<usize>], post: &[BTreeSet<usize>]| pre.iter().chain(post).map(BTreeSet::len).sum::<usize>();
        let mut guard = 0;
        while arcs(&pre, &post) < target && guard < 200 {
            guard += 1;
            let t = rng.random_range(0..n_t);
            if rng.random_bool(0.5) {
                pre[t].insert(rng.random_range(0..n_p - 1));
            } else {
                post[t].insert(rng.random_range(1..n_p));
            }
        }
        let degree = 2.0 * arcs(&pre, &post) as f64 / nodes;
        if !(1.5..=2.5).contains(&degree) {
            continue;
        }
        let mut places = vec!["i".to_string()];
        places.extend((1..n_p - 1).map(|p| format!("p{p}")));
        places.push("o".to_string());
        let transitions = (0..n_t)
            .map(|t| Transition::new(format!("t{t}"), pre[t].iter().copied().collect(), post[t].iter().copied().collect()))
            .collect();
        return WfNet::new(places, transitions, i, o).unwrap();
    }
}

pub const ORACLE_TOKEN_CAP: u32 = 64;
pub const ORACLE_STATE_CAP: usize = 200_000;

/// Classical soundness decided from the definition: materialize every
/// reachable marking, then test option to complete, proper completion and
/// absence of dead transitions one by one. A place above the token cap is
/// taken as unboundedness, which rules soundness out.
pub fn oracle_sound(net: &WfNet) -> bool {
    let n_p = net.places().len();
    let (i, o) = (net.source(), net.sink());
    let ts = net.transitions();

    // Structure: every place and transition on a path from i to o.
    let node_count = n_p + ts.len();
    let mut succ = vec![Vec::new(); node_count];
    for (k, t) in ts.iter().enumerate() {
        for &p in &t.inputs {
            succ[p].push(n_p + k);
        }
        for &p in &t.outputs {
            succ[n_p + k].push(p);
        }
    }
    let reach_from = |start: usize| {
        let mut seen = vec![false; node_count];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &w in &succ[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    };
    let from_i = reach_from(i);
    if !(0..node_count).all(|v| from_i[v] && reach_from(v)[o]) {
        return false;
    }

    let mut start = vec![0u32; n_p];
    start[i] = 1;
    let mut fin = vec![0u32; n_p];
    fin[o] = 1;
    let enabled = |m: &Vec<u32>, t: &Transition| t.inputs.iter().all(|&p| m[p] > 0);
    let fire = |m: &Vec<u32>, t: &Transition| {
        let mut m = m.clone();
        for &p in &t.inputs {
            m[p] -= 1;
        }
        for &p in &t.outputs {
            m[p] += 1;
        }
        m
    };

    let mut index: HashMap<Vec<u32>, usize> = HashMap::from([(start.clone(), 0)]);
    let mut states = vec![start];
    let mut graph: Vec<Vec<usize>> = vec![Vec::new()];
    let mut fired = vec![false; ts.len()];
    let mut queue = VecDeque::from([0]);
    while let Some(s) = queue.pop_front() {
        for (k, t) in ts.iter().enumerate() {
            if !enabled(&states[s], t) {
                continue;
            }
            fired[k] = true;
            let next = fire(&states[s], t);
            if next.iter().any(|&c| c > ORACLE_TOKEN_CAP) || states.len() > ORACLE_STATE_CAP {
                return false;
            }
            let id = *index.entry(next.clone()).or_insert_with(|| {
                states.push(next);
                graph.push(Vec::new());
                queue.push_back(states.len() - 1);
                states.len() - 1
            });
            graph[s].push(id);
        }
    }

    // (c) no dead transitions
    if fired.contains(&false) {
        return false;
    }
    // (b) proper completion
    if states.iter().any(|m| m[o] > 0 && *m != fin) {
        return false;
    }
    // (a) option to complete, by a forward search from every state
    let Some(&goal) = index.get(&fin) else { return false };
    (0..states.len()).all(|s| {
        let mut seen = vec![false; states.len()];
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(v) = stack.pop() {
            if v == goal {
                return true;
            }
            for &w in &graph[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        false
    })
}

// ---------------------------------------------------------------------------
// Student t tail by quadrature

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = (a + b) / 2.0;
    let (lm, rm) = ((a + m) / 2.0, (m + b) / 2.0);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f((a + b) / 2.0), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Two-tailed P(|T| >= |t|). With x = sqrt(df)·tan(θ) the t density becomes
/// proportional to cos^(df-1)(θ) on (-π/2, π/2), so both the tail mass and
/// the normalizer are plain integrals of a bounded function.
pub fn t_two_tailed_by_quadrature(t: f64, df: f64) -> f64 {
    let f = move |theta: f64| theta.cos().powf(df - 1.0);
    let total = integrate(&f, 0.0, std::f64::consts::FRAC_PI_2, 1e-13);
    let inner = integrate(&f, 0.0, (t.abs() / df.sqrt()).atan(), 1e-13);
    1.0 - inner / total
}

// ---------------------------------------------------------------------------
// Graph isomorphism modulo fresh ids

/// Whether `actual` equals the expected graph once nodes whose expected id
/// starts with `?` are matched to the nodes of `actual` that are not named
/// in the expectation. Node types and the multiset of (source, target)
/// pairs must agree; edge ids are ignored.
pub fn isomorphic_modulo_fresh(actual: &ProcessModel, nodes: &[(&str, NodeType)], edges: &[(&str, &str)]) -> bool {
    if actual.node_count() != nodes.len() || actual.edge_count() != edges.len() {
        return false;
    }
    let fixed: Vec<&(&str, NodeType)> = nodes.iter().filter(|(id, _)| !id.starts_with('?')).collect();
    for (id, ty) in &fixed {
        if actual.node(id).map(|n| n.node_type) != Some(*ty) {
            return false;
        }
    }
    let fresh_expected: Vec<&(&str, NodeType)> = nodes.iter().filter(|(id, _)| id.starts_with('?')).collect();
    let fixed_ids: BTreeSet<&str> = fixed.iter().map(|(id, _)| *id).collect();
    let fresh_actual: Vec<&Node> = actual.nodes().filter(|n| !fixed_ids.contains(n.id.as_str())).collect();
    if fresh_actual.len() != fresh_expected.len() {
        return false;
    }
    let mut actual_edges: Vec<(String, String)> = actual.edges().map(|e| (e.source.clone(), e.target.clone())).collect();
    actual_edges.sort();

    let mut perm: Vec<usize> = (0..fresh_actual.len()).collect();
    permutations(&mut perm, 0, &mut |p| {
        if fresh_expected.iter().zip(p).any(|((_, ty), &k)| fresh_actual[k].node_type != *ty) {
            return false;
        }
        let rename: HashMap<&str, &str> = fresh_expected.iter().zip(p).map(|((id, _), &k)| (*id, fresh_actual[k].id.as_str())).collect();
        let map = |id: &str| rename.get(id).copied().unwrap_or(id).to_string();
        let mut expected: Vec<(String, String)> = edges.iter().map(|(s, t)| (map(s), map(t))).collect();
        expected.sort();
        expected == actual_edges
    })
}

fn permutations(items: &mut Vec<usize>, k: usize, check: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    if k == items.len() {
        return check(items);
    }
    for i in k..items.len() {
        items.swap(k, i);
        if permutations(items, k + 1, check) {
            return true;
        }
        items.swap(k, i);
    }
    false
}
