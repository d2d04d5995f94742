//! PPMChart rendering: one row per model object, one dot per action,
//! right-aligned in a fixed time window.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::eventlog::{EventClass, EventLog};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorMap {
    pub create: String,
    pub move_: String,
    pub delete: String,
    pub other: String,
    pub reconnect: String,
}

impl Default for ColorMap {
    fn default() -> Self {
        ColorMap {
            create: "#2ca02c".into(),
            move_: "#1f77b4".into(),
            delete: "#d62728".into(),
            other: "#ff7f0e".into(),
            reconnect: "#9467bd".into(),
        }
    }
}

impl ColorMap {
    pub fn color(&self, class: EventClass) -> &str {
        match class {
            EventClass::Create => &self.create,
            EventClass::Move => &self.move_,
            EventClass::Delete => &self.delete,
            EventClass::Other => &self.other,
            EventClass::Reconnect => &self.reconnect,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PPMChartSpec {
    pub window_secs: u64,
    pub width: u32,
    pub row_height: u32,
    pub dot_radius: u32,
    pub colors: ColorMap,
}

impl Default for PPMChartSpec {
    fn default() -> Self {
        PPMChartSpec { window_secs: 3600, width: 1200, row_height: 20, dot_radius: 3, colors: ColorMap::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChartError {
    #[error("empty log")]
    EmptyLog,
    #[error("window of {window}s is shorter than the session ({needed}s); use a larger --window")]
    WindowTooSmall { window: u64, needed: u64 },
    #[error("chart width must be positive")]
    ZeroWidth,
}

/// Objects in order of their first action, ties broken by seq.
pub fn chart_rows(log: &EventLog) -> Vec<&str> {
    let mut first: BTreeMap<&str, (i64, u64)> = BTreeMap::new();
    for e in log.events() {
        first.entry(e.object_id.as_str()).or_insert((e.millis(), e.seq));
    }
    let mut rows: Vec<(&str, (i64, u64))> = first.into_iter().collect();
    rows.sort_by_key(|&(_, key)| key);
    rows.into_iter().map(|(id, _)| id).collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn render_ppmchart(log: &EventLog, spec: &PPMChartSpec) -> Result<String, ChartError> {
    let (first, last) = match (log.events().first(), log.events().last()) {
        (Some(f), Some(l)) => (f.millis(), l.millis()),
        _ => return Err(ChartError::EmptyLog),
    };
    if spec.width == 0 {
        return Err(ChartError::ZeroWidth);
    }
    let window_ms = spec.window_secs as i64 * 1000;
    if last - first > window_ms {
        return Err(ChartError::WindowTooSmall { window: spec.window_secs, needed: ((last - first) as u64).div_ceil(1000) });
    }

    let rows = chart_rows(log);
    let row_of: BTreeMap<&str, usize> = rows.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let width = spec.width as f64;
    let height = spec.row_height as u64 * rows.len() as u64;
    let y = |row: usize| spec.row_height as f64 * (row as f64 + 0.5);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{height}" viewBox="0 0 {w} {height}" data-window="{win}">"#,
        w = spec.width,
        win = spec.window_secs
    );
    for (i, id) in rows.iter().enumerate() {
        let _ = writeln!(
            svg,
            r##"<line class="row" data-object="{}" x1="0" y1="{y:.2}" x2="{w}" y2="{y:.2}" stroke="#dddddd" stroke-width="1"/>"##,
            escape(id),
            y = y(i),
            w = spec.width
        );
    }
    for e in log.events() {
        let x = width * (1.0 - (last - e.millis()) as f64 / window_ms as f64);
        let class = e.class();
        let _ = writeln!(
            svg,
            r#"<circle class="dot {}" data-seq="{}" cx="{x:.2}" cy="{:.2}" r="{}" fill="{}"/>"#,
            class.as_str(),
            e.seq,
            y(row_of[e.object_id.as_str()]),
            spec.dot_radius,
            escape(spec.colors.color(class))
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
