//! Frozen expectations shared by the per-module tests and the acceptance
//! suite.

use ppmkit::replay::{NodeType, ProcessModel};
use ppmkit::{Measure, Rational};
use NodeType::*;

fn r(n: i64, d: i64) -> Measure {
    Measure::Value(Rational::new(n, d))
}

/// Hand-computed metrics in `Metric::ALL` order: MaxSimulBlock,
/// PercNumBlockAsAWhole, AvgMoveOnMovedElements, PercNumElementsWithMoves,
/// TotTime, TotCreateTime.
pub fn expected_metrics(fixture: &str) -> [Measure; 6] {
    match fixture {
        "diamond_moves.csv" => [
            r(1, 1),   // one block (g1, g2)
            r(1, 1),   // built with only edge creates interleaved
            r(3, 2),   // A moved twice, B once
            r(1, 7),   // 2 moved out of 14 created objects
            r(600, 1), // 10:00:00 to 10:10:00
            r(110, 1), // last create at 10:01:50
        ],
        "two_blocks_reconnect.csv" => [
            r(2, 1),   // (x1, x2) spans [5 s, 80 s] and contains (p1, p2) at [10 s, 25 s]
            r(1, 2),   // (x1, x2) has p1, A, B, p2 created inside its span
            r(5, 3),   // e7 twice via bendpoints, x1 once, C twice
            r(1, 7),   // 3 of 21 objects
            r(200, 1), // ends with the reconnect at 10:03:20
            r(200, 1), // the reconnect counts as a create
        ],
        "created_moved_deleted.csv" => [
            r(0, 1),
            Measure::NotApplicable, // no blocks
            r(1, 1),
            r(1, 2),
            r(100, 1),
            r(40, 1),
        ],
        "order_session.csv" => [r(1, 1), r(1, 1), r(1, 1), r(1, 4), r(1020, 1), r(720, 1)],
        other => panic!("no frozen metrics for {other}"),
    }
}

/// A model to normalize and the expected result. Expected node ids that
/// start with `?` stand for nodes the normalizer creates.
pub struct NormalizationCase {
    pub name: &'static str,
    pub input: ProcessModel,
    pub nodes: Vec<(&'static str, NodeType)>,
    pub edges: Vec<(&'static str, &'static str)>,
}

fn case(
    name: &'static str,
    input_nodes: &[(&'static str, NodeType)],
    input_edges: &[(&'static str, &'static str)],
    nodes: &[(&'static str, NodeType)],
    edges: &[(&'static str, &'static str)],
) -> NormalizationCase {
    NormalizationCase { name, input: super::model(input_nodes, input_edges), nodes: nodes.to_vec(), edges: edges.to_vec() }
}

pub fn normalization_cases() -> Vec<NormalizationCase> {
    let xor_shared_nodes = [
        ("A", Activity),
        ("B", Activity),
        ("J1", And),
        ("J2", And),
        ("C", Activity),
        ("S", Xor),
        ("D", Activity),
        ("E", Activity),
        ("F", Activity),
        ("end", EndEvent),
    ];
    let xor_shared_edges = [("A", "J1"), ("B", "J2"), ("J1", "C"), ("C", "S"), ("S", "D"), ("D", "J2"), ("S", "E"), ("E", "end"), ("J2", "F"), ("F", "J1")];
    let two_splits_nodes = [
        ("s", StartEvent),
        ("p1", And),
        ("p2", And),
        ("a", Activity),
        ("b", Activity),
        ("c", Activity),
        ("m", Activity),
        ("j", And),
        ("e", EndEvent),
    ];
    let two_splits_edges = [("s", "p1"), ("p1", "a"), ("p1", "p2"), ("p2", "b"), ("p2", "c"), ("m", "j"), ("c", "j"), ("j", "e")];

    vec![
        case(
            "start merge copies AND from the shared join",
            &[("s1", StartEvent), ("s2", StartEvent), ("A", Activity), ("B", Activity), ("J", And), ("C", Activity), ("e", EndEvent)],
            &[("s1", "A"), ("s2", "B"), ("A", "J"), ("B", "J"), ("J", "C"), ("C", "e")],
            &[("?start", StartEvent), ("?g", And), ("A", Activity), ("B", Activity), ("J", And), ("C", Activity), ("e", EndEvent)],
            &[("?start", "?g"), ("?g", "A"), ("?g", "B"), ("A", "J"), ("B", "J"), ("J", "C"), ("C", "e")],
        ),
        case(
            "start merge over distinct joins defaults to XOR",
            &[[("s1", StartEvent), ("s2", StartEvent)].as_slice(), &xor_shared_nodes].concat(),
            &[[("s1", "A"), ("s2", "B")].as_slice(), &xor_shared_edges].concat(),
            &[[("?start", StartEvent), ("?g", Xor)].as_slice(), &xor_shared_nodes].concat(),
            &[[("?start", "?g"), ("?g", "A"), ("?g", "B")].as_slice(), &xor_shared_edges].concat(),
        ),
        case(
            "lone task gets a start and an end event",
            &[("A", Activity)],
            &[],
            &[("?start", StartEvent), ("A", Activity), ("?end", EndEvent)],
            &[("?start", "A"), ("A", "?end")],
        ),
        case(
            "end merge copies AND from the shared split",
            &[("s", StartEvent), ("S", And), ("A", Activity), ("B", Activity), ("end1", EndEvent), ("end2", EndEvent)],
            &[("s", "S"), ("S", "A"), ("S", "B"), ("A", "end1"), ("B", "end2")],
            &[("s", StartEvent), ("S", And), ("A", Activity), ("B", Activity), ("?j", And), ("?end", EndEvent)],
            &[("s", "S"), ("S", "A"), ("S", "B"), ("A", "?j"), ("B", "?j"), ("?j", "?end")],
        ),
        case(
            "implicit join after one AND split becomes AND",
            &[("s", StartEvent), ("S", And), ("A", Activity), ("B", Activity), ("M", Activity), ("e", EndEvent)],
            &[("s", "S"), ("S", "A"), ("S", "B"), ("A", "M"), ("B", "M"), ("M", "e")],
            &[("s", StartEvent), ("S", And), ("A", Activity), ("B", Activity), ("?j", And), ("M", Activity), ("e", EndEvent)],
            &[("s", "S"), ("S", "A"), ("S", "B"), ("A", "?j"), ("B", "?j"), ("?j", "M"), ("M", "e")],
        ),
        case(
            "implicit join after different splits defaults to XOR",
            &two_splits_nodes,
            &[two_splits_edges.as_slice(), &[("a", "m"), ("b", "m")]].concat(),
            &[two_splits_nodes.as_slice(), &[("?x", Xor)]].concat(),
            &[two_splits_edges.as_slice(), &[("a", "?x"), ("b", "?x"), ("?x", "m")]].concat(),
        ),
    ]
}
