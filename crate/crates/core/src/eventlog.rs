//! Modeling-event logs: the editor action vocabulary, the CSV log format,
//! validation and the reconnect expansion used by every downstream metric.
//!
//! A log is a sequence of [`ModelingEvent`]s, one per editor action. Line
//! numbers in errors refer to the CSV serialization, where the header is
//! line 1 and event `k` (0-based) sits on line `k + 2` unless a quoted
//! label spans several lines.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Header row of the event-log CSV format.
pub const CSV_HEADER: [&str; 10] = [
    "seq",
    "timestamp",
    "event",
    "object_id",
    "object_type",
    "x",
    "y",
    "label",
    "source_id",
    "target_id",
];

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S%.3fZ";

pub type Timestamp = DateTime<Utc>;

/// Formats a timestamp as `YYYY-MM-DDThh:mm:ss.sssZ`.
pub fn format_timestamp(ts: &Timestamp) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

/// Parses the strict millisecond UTC form written by [`format_timestamp`].
pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    let b = s.as_bytes();
    if b.len() != 24 || b[19] != b'.' || b[23] != b'Z' || !b[20..23].iter().all(u8::is_ascii_digit)
    {
        return None;
    }
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
        .ok()
        .map(|naive| naive.and_utc())
}

/// Type of the model object an event acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ObjectType {
    StartEvent,
    EndEvent,
    Activity,
    Xor,
    And,
    Edge,
}

impl ObjectType {
    pub const ALL: [ObjectType; 6] = [
        ObjectType::StartEvent,
        ObjectType::EndEvent,
        ObjectType::Activity,
        ObjectType::Xor,
        ObjectType::And,
        ObjectType::Edge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectType::StartEvent => "START_EVENT",
            ObjectType::EndEvent => "END_EVENT",
            ObjectType::Activity => "ACTIVITY",
            ObjectType::Xor => "XOR",
            ObjectType::And => "AND",
            ObjectType::Edge => "EDGE",
        }
    }

    pub fn is_node(self) -> bool {
        self != ObjectType::Edge
    }
}

impl fmt::Display for ObjectType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectType {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ObjectType::ALL.into_iter().find(|t| t.as_str() == s).ok_or(())
    }
}

/// Coarse class of an editor action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventClass {
    Create,
    Move,
    Delete,
    Other,
    /// `RECONNECT_EDGE`: counts as a delete followed by a create of the same
    /// edge. [`expand_reconnect`] rewrites it into that pair.
    Reconnect,
}

impl EventClass {
    pub fn as_str(self) -> &'static str {
        match self {
            EventClass::Create => "create",
            EventClass::Move => "move",
            EventClass::Delete => "delete",
            EventClass::Other => "other",
            EventClass::Reconnect => "reconnect",
        }
    }
}

macro_rules! event_kinds {
    ($($variant:ident => $name:literal, $ty:ident, $class:ident;)*) => {
        /// Every editor action that can be recorded.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum EventKind {
            $($variant,)*
        }

        impl EventKind {
            pub const ALL: &'static [EventKind] = &[$(EventKind::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(EventKind::$variant => $name,)*
                }
            }

            /// Object type this action applies to.
            pub fn object_type(self) -> ObjectType {
                match self {
                    $(EventKind::$variant => ObjectType::$ty,)*
                }
            }

            pub fn class(self) -> EventClass {
                match self {
                    $(EventKind::$variant => EventClass::$class,)*
                }
            }
        }
    };
}

event_kinds! {
    CreateStartEvent => "CREATE_START_EVENT", StartEvent, Create;
    CreateEndEvent => "CREATE_END_EVENT", EndEvent, Create;
    CreateActivity => "CREATE_ACTIVITY", Activity, Create;
    CreateXor => "CREATE_XOR", Xor, Create;
    CreateAnd => "CREATE_AND", And, Create;
    CreateEdge => "CREATE_EDGE", Edge, Create;
    MoveStartEvent => "MOVE_START_EVENT", StartEvent, Move;
    MoveEndEvent => "MOVE_END_EVENT", EndEvent, Move;
    MoveActivity => "MOVE_ACTIVITY", Activity, Move;
    MoveXor => "MOVE_XOR", Xor, Move;
    MoveAnd => "MOVE_AND", And, Move;
    MoveEdgeLabel => "MOVE_EDGE_LABEL", Edge, Move;
    CreateEdgeBendpoint => "CREATE_EDGE_BENDPOINT", Edge, Move;
    MoveEdgeBendpoint => "MOVE_EDGE_BENDPOINT", Edge, Move;
    DeleteEdgeBendpoint => "DELETE_EDGE_BENDPOINT", Edge, Move;
    DeleteStartEvent => "DELETE_START_EVENT", StartEvent, Delete;
    DeleteEndEvent => "DELETE_END_EVENT", EndEvent, Delete;
    DeleteActivity => "DELETE_ACTIVITY", Activity, Delete;
    DeleteXor => "DELETE_XOR", Xor, Delete;
    DeleteAnd => "DELETE_AND", And, Delete;
    DeleteEdge => "DELETE_EDGE", Edge, Delete;
    ReconnectEdge => "RECONNECT_EDGE", Edge, Reconnect;
    NameActivity => "NAME_ACTIVITY", Activity, Other;
    RenameActivity => "RENAME_ACTIVITY", Activity, Other;
    NameEdge => "NAME_EDGE", Edge, Other;
    RenameEdge => "RENAME_EDGE", Edge, Other;
}

impl EventKind {
    /// The create action for a given object type.
    pub fn create_for(ty: ObjectType) -> EventKind {
        match ty {
            ObjectType::StartEvent => EventKind::CreateStartEvent,
            ObjectType::EndEvent => EventKind::CreateEndEvent,
            ObjectType::Activity => EventKind::CreateActivity,
            ObjectType::Xor => EventKind::CreateXor,
            ObjectType::And => EventKind::CreateAnd,
            ObjectType::Edge => EventKind::CreateEdge,
        }
    }

    /// The delete action for a given object type.
    pub fn delete_for(ty: ObjectType) -> EventKind {
        match ty {
            ObjectType::StartEvent => EventKind::DeleteStartEvent,
            ObjectType::EndEvent => EventKind::DeleteEndEvent,
            ObjectType::Activity => EventKind::DeleteActivity,
            ObjectType::Xor => EventKind::DeleteXor,
            ObjectType::And => EventKind::DeleteAnd,
            ObjectType::Edge => EventKind::DeleteEdge,
        }
    }

    /// The move action for a node type; `None` for edges, which move via
    /// bendpoint and label actions.
    pub fn move_for(ty: ObjectType) -> Option<EventKind> {
        match ty {
            ObjectType::StartEvent => Some(EventKind::MoveStartEvent),
            ObjectType::EndEvent => Some(EventKind::MoveEndEvent),
            ObjectType::Activity => Some(EventKind::MoveActivity),
            ObjectType::Xor => Some(EventKind::MoveXor),
            ObjectType::And => Some(EventKind::MoveAnd),
            ObjectType::Edge => None,
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // Older exports carry a misspelled bendpoint delete.
        if s == "DELETE_EDGE_BENDBPOINT" {
            return Ok(EventKind::DeleteEdgeBendpoint);
        }
        EventKind::ALL.iter().copied().find(|k| k.as_str() == s).ok_or(())
    }
}

/// Maps an action onto its class. Bendpoint and edge-label actions count
/// as edge moves; names and renames are `Other`.
pub fn classify(kind: EventKind) -> EventClass {
    kind.class()
}

/// One timestamped editor action on one model object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelingEvent {
    pub seq: u64,
    pub timestamp: Timestamp,
    pub kind: EventKind,
    pub object_id: String,
    pub object_type: ObjectType,
    pub position: Option<(i64, i64)>,
    pub label: Option<String>,
    pub source_id: Option<String>,
    pub target_id: Option<String>,
}

impl ModelingEvent {
    /// Event with only the mandatory fields set; the object type follows
    /// from the kind.
    pub fn new(seq: u64, timestamp: Timestamp, kind: EventKind, object_id: impl Into<String>) -> Self {
        ModelingEvent {
            seq,
            timestamp,
            kind,
            object_id: object_id.into(),
            object_type: kind.object_type(),
            position: None,
            label: None,
            source_id: None,
            target_id: None,
        }
    }

    pub fn at(mut self, x: i64, y: i64) -> Self {
        self.position = Some((x, y));
        self
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn between(mut self, source: impl Into<String>, target: impl Into<String>) -> Self {
        self.source_id = Some(source.into());
        self.target_id = Some(target.into());
        self
    }

    pub fn class(&self) -> EventClass {
        self.kind.class()
    }

    /// Milliseconds since the Unix epoch.
    pub fn millis(&self) -> i64 {
        self.timestamp.timestamp_millis()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogError {
    #[error("missing header row")]
    MissingHeader,
    #[error("line 1: header must be `{}`", CSV_HEADER.join(","))]
    BadHeader,
    #[error("malformed row at line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("unknown event {name} at line {line}")]
    UnknownEvent { line: u64, name: String },
    #[error("seq {seq} is not strictly increasing at line {line}")]
    SeqNotIncreasing { line: u64, seq: u64 },
    #[error("timestamp regression at line {line}")]
    TimestampRegression { line: u64 },
    #[error("{kind} on {object} lacks source_id/target_id at line {line}")]
    MissingEndpoints { line: u64, kind: EventKind, object: String },
    #[error("{kind} requires object type {expected}, found {found} at line {line}")]
    TypeMismatch { line: u64, kind: EventKind, expected: ObjectType, found: ObjectType },
    #[error("action on unknown object {object} at line {line}")]
    UnknownObject { line: u64, object: String },
    #[error("object {object} created twice at line {line}")]
    DuplicateCreate { line: u64, object: String },
    #[error("action on deleted object {object} at line {line}")]
    DeletedObject { line: u64, object: String },
    #[error("edge {edge} endpoint {endpoint} is not a live node at line {line}")]
    BadEndpoint { line: u64, edge: String, endpoint: String },
    #[error("i/o error: {0}")]
    Io(String),
}

/// A validated, immutable log of one modeling session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLog {
    session_id: String,
    events: Vec<ModelingEvent>,
}

impl EventLog {
    /// Validates `events` and wraps them into a log.
    pub fn new(session_id: impl Into<String>, events: Vec<ModelingEvent>) -> Result<Self, LogError> {
        let lines: Vec<u64> = (0..events.len() as u64).map(|i| i + 2).collect();
        validate(&events, &lines)?;
        Ok(EventLog { session_id: session_id.into(), events })
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn events(&self) -> &[ModelingEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn first_seq(&self) -> Option<u64> {
        self.events.first().map(|e| e.seq)
    }

    pub fn last_seq(&self) -> Option<u64> {
        self.events.last().map(|e| e.seq)
    }

    /// Same events under another session id.
    pub fn with_session_id(mut self, session_id: impl Into<String>) -> Self {
        self.session_id = session_id.into();
        self
    }

    /// Writes the log in CSV form.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), LogError> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .quote_style(csv::QuoteStyle::Necessary)
            .from_writer(out);
        let io = |e: csv::Error| LogError::Io(e.to_string());
        writer.write_record(CSV_HEADER).map_err(io)?;
        for e in &self.events {
            let (x, y) = match e.position {
                Some((x, y)) => (x.to_string(), y.to_string()),
                None => (String::new(), String::new()),
            };
            writer
                .write_record([
                    e.seq.to_string().as_str(),
                    &format_timestamp(&e.timestamp),
                    e.kind.as_str(),
                    &e.object_id,
                    e.object_type.as_str(),
                    &x,
                    &y,
                    e.label.as_deref().unwrap_or(""),
                    e.source_id.as_deref().unwrap_or(""),
                    e.target_id.as_deref().unwrap_or(""),
                ])
                .map_err(io)?;
        }
        writer.flush().map_err(|e| LogError::Io(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Parses and validates a CSV event log.
pub fn parse_log<R: Read>(input: R, session_id: &str) -> Result<EventLog, LogError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();

    let header = match records.next() {
        None => return Err(LogError::MissingHeader),
        Some(r) => r.map_err(|e| csv_error(e, 1))?,
    };
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(LogError::BadHeader);
    }

    let mut events = Vec::new();
    let mut lines = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        events.push(parse_row(&record, line)?);
        lines.push(line);
    }
    validate(&events, &lines)?;
    Ok(EventLog { session_id: session_id.to_string(), events })
}

fn csv_error(e: csv::Error, fallback_line: u64) -> LogError {
    let line = e.position().map(|p| p.line()).unwrap_or(fallback_line);
    LogError::Malformed { line, message: e.to_string() }
}

fn parse_row(record: &csv::StringRecord, line: u64) -> Result<ModelingEvent, LogError> {
    let malformed = |message: String| LogError::Malformed { line, message };
    if record.len() != CSV_HEADER.len() {
        return Err(malformed(format!(
            "expected {} fields, found {}",
            CSV_HEADER.len(),
            record.len()
        )));
    }
    let optional = |i: usize| {
        let field = &record[i];
        (!field.is_empty()).then(|| field.to_string())
    };

    let seq: u64 = record[0]
        .parse()
        .ok()
        .filter(|&s| s > 0)
        .ok_or_else(|| malformed(format!("seq `{}` is not a positive integer", &record[0])))?;
    let timestamp = parse_timestamp(&record[1])
        .ok_or_else(|| malformed(format!("bad timestamp `{}`", &record[1])))?;
    let kind: EventKind = record[2]
        .parse()
        .map_err(|_| LogError::UnknownEvent { line, name: record[2].to_string() })?;
    if record[3].is_empty() {
        return Err(malformed("empty object_id".into()));
    }
    let object_type: ObjectType = record[4]
        .parse()
        .map_err(|_| malformed(format!("unknown object type `{}`", &record[4])))?;
    let coord = |i: usize| -> Result<Option<i64>, LogError> {
        optional(i)
            .map(|v| v.parse::<i64>().map_err(|_| malformed(format!("bad coordinate `{v}`"))))
            .transpose()
    };
    let position = match (coord(5)?, coord(6)?) {
        (Some(x), Some(y)) => Some((x, y)),
        (None, None) => None,
        _ => return Err(malformed("x and y must both be present or both empty".into())),
    };

    Ok(ModelingEvent {
        seq,
        timestamp,
        kind,
        object_id: record[3].to_string(),
        object_type,
        position,
        label: optional(7),
        source_id: optional(8),
        target_id: optional(9),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Liveness {
    Alive,
    Deleted,
}

struct ObjectState {
    ty: ObjectType,
    liveness: Liveness,
}

/// Checks ordering, typing and object lifecycle rules. Deleting a node also
/// deletes its live incident edges, mirroring replay.
fn validate(events: &[ModelingEvent], lines: &[u64]) -> Result<(), LogError> {
    let mut objects: HashMap<&str, ObjectState> = HashMap::new();
    let mut endpoints: HashMap<&str, (&str, &str)> = HashMap::new();
    let mut prev: Option<&ModelingEvent> = None;

    for (e, &line) in events.iter().zip(lines) {
        if let Some(p) = prev {
            if e.seq <= p.seq {
                return Err(LogError::SeqNotIncreasing { line, seq: e.seq });
            }
            if e.timestamp < p.timestamp {
                return Err(LogError::TimestampRegression { line });
            }
        } else if e.seq == 0 {
            return Err(LogError::Malformed { line, message: "seq must be positive".into() });
        }
        prev = Some(e);

        let expected = e.kind.object_type();
        if e.object_type != expected {
            return Err(LogError::TypeMismatch { line, kind: e.kind, expected, found: e.object_type });
        }

        let id = e.object_id.as_str();
        let needs_endpoints = matches!(e.kind, EventKind::CreateEdge | EventKind::ReconnectEdge);
        let edge_ends = if needs_endpoints {
            match (e.source_id.as_deref(), e.target_id.as_deref()) {
                (Some(s), Some(t)) if !s.is_empty() && !t.is_empty() => {
                    for endpoint in [s, t] {
                        let live_node = objects
                            .get(endpoint)
                            .is_some_and(|o| o.ty.is_node() && o.liveness == Liveness::Alive);
                        if !live_node {
                            return Err(LogError::BadEndpoint {
                                line,
                                edge: id.to_string(),
                                endpoint: endpoint.to_string(),
                            });
                        }
                    }
                    Some((s, t))
                }
                _ => {
                    return Err(LogError::MissingEndpoints { line, kind: e.kind, object: id.to_string() })
                }
            }
        } else {
            None
        };

        match (e.class(), objects.get(id)) {
            (EventClass::Create, None) => {
                objects.insert(id, ObjectState { ty: expected, liveness: Liveness::Alive });
            }
            (EventClass::Create, Some(state)) => {
                return Err(match state.liveness {
                    Liveness::Alive => LogError::DuplicateCreate { line, object: id.to_string() },
                    Liveness::Deleted => LogError::DeletedObject { line, object: id.to_string() },
                });
            }
            (_, None) => return Err(LogError::UnknownObject { line, object: id.to_string() }),
            (class, Some(state)) => {
                if state.liveness == Liveness::Deleted {
                    return Err(LogError::DeletedObject { line, object: id.to_string() });
                }
                if state.ty != expected {
                    return Err(LogError::TypeMismatch { line, kind: e.kind, expected, found: state.ty });
                }
                if class == EventClass::Delete {
                    if let Some(state) = objects.get_mut(id) {
                        state.liveness = Liveness::Deleted;
                    }
                    if expected.is_node() {
                        for (edge, (s, t)) in &endpoints {
                            if *s == id || *t == id {
                                if let Some(o) = objects.get_mut(edge) {
                                    o.liveness = Liveness::Deleted;
                                }
                            }
                        }
                    }
                }
            }
        }
        if let Some(ends) = edge_ends {
            endpoints.insert(id, ends);
        }
    }
    Ok(())
}

/// Replaces every `RECONNECT_EDGE` by a `DELETE_EDGE` and a `CREATE_EDGE` on
/// the same edge with the same timestamp and consecutive seqs. Later seqs
/// shift up by the number of expansions before them.
pub fn expand_reconnect(log: &EventLog) -> EventLog {
    let mut shift = 0u64;
    let mut events = Vec::with_capacity(log.events.len());
    for e in &log.events {
        let seq = e.seq + shift;
        if e.kind == EventKind::ReconnectEdge {
            events.push(ModelingEvent {
                seq,
                kind: EventKind::DeleteEdge,
                position: None,
                label: None,
                source_id: None,
                target_id: None,
                ..e.clone()
            });
            events.push(ModelingEvent { seq: seq + 1, kind: EventKind::CreateEdge, ..e.clone() });
            shift += 1;
        } else {
            events.push(ModelingEvent { seq, ..e.clone() });
        }
    }
    EventLog { session_id: log.session_id.clone(), events }
}
