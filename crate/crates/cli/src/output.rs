//! Output records and their CSV / JSON encodings.

use std::io::Write;

use absorbing_walks::{LatticeState, Model, ModelKind, WalkModel};
use serde::Serialize;
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
    Truncated,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte_carlo",
            Method::Truncated => "truncated",
        }
    }
}

/// Model kind and parameters, as written next to every record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelDescriptor {
    pub kind: &'static str,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub alpha: f64,
}

impl ModelDescriptor {
    pub fn of(model: &Model) -> Self {
        match model {
            Model::Walk1D(m) => Self {
                kind: "walk1d",
                dim: 1,
                p: Some(m.p()),
                alpha: m.alpha(),
            },
            Model::WalkND(m) => Self {
                kind: "walknd",
                dim: m.dim(),
                p: None,
                alpha: m.alpha(),
            },
            Model::TwoLevel(m) => Self {
                kind: "twolevel",
                dim: 1,
                p: None,
                alpha: m.alpha(),
            },
        }
    }

    /// `key=value` pairs joined by `;`, e.g. `p=0.7;alpha=0.8`.
    pub fn params(&self) -> String {
        match (self.kind, self.p) {
            (_, Some(p)) => format!("p={p};alpha={}", self.alpha),
            ("walknd", None) => format!("dim={};alpha={}", self.dim, self.alpha),
            _ => format!("alpha={}", self.alpha),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputRecord {
    pub model: ModelDescriptor,
    pub state: LatticeState,
    pub expected_visits: f64,
    pub absorption_prob: f64,
    pub method: Method,
    pub error_bar: Option<f64>,
}

impl OutputRecord {
    /// Record for an analytic value; the absorption column is derived.
    pub fn analytic(model: &Model, state: LatticeState, visits: f64, method: Method) -> Self {
        Self {
            model: ModelDescriptor::of(model),
            state,
            expected_visits: visits,
            absorption_prob: model.absorption_factor() * visits,
            method,
            error_bar: None,
        }
    }

    fn json(&self) -> serde_json::Value {
        json!({
            "model": self.model,
            "state": {
                "coords": self.state.coords(),
                "level": self.state.level().map(|l| l.index()),
            },
            "expected_visits": self.expected_visits,
            "absorption_prob": self.absorption_prob,
            "method": self.method,
            "error_bar": self.error_bar,
        })
    }
}

pub fn kind_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Walk1D => "walk1d",
        ModelKind::WalkND => "walknd",
        ModelKind::TwoLevel => "twolevel",
    }
}

pub const CSV_HEADER: [&str; 8] = [
    "model",
    "params",
    "state",
    "level",
    "expected_visits",
    "absorption_prob",
    "method",
    "error_bar",
];

/// 17 significant digits: enough to round-trip any f64.
fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Coordinates joined by `;` so the field never needs quoting.
pub fn state_field(state: &LatticeState) -> String {
    state
        .coords()
        .iter()
        .map(i64::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

pub fn write_csv<W: Write>(out: W, records: &[OutputRecord]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.model.kind.to_string(),
            r.model.params(),
            state_field(&r.state),
            r.state
                .level()
                .map(|l| l.index().to_string())
                .unwrap_or_default(),
            real(r.expected_visits),
            real(r.absorption_prob),
            r.method.as_str().to_string(),
            r.error_bar.map(real).unwrap_or_default(),
        ])?;
    }
    w.flush()
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta<'a> {
    pub invocation: &'a [String],
    pub seed: Option<u64>,
    pub version: &'static str,
}

pub fn write_json<W: Write>(
    mut out: W,
    meta: &Meta<'_>,
    records: &[OutputRecord],
) -> std::io::Result<()> {
    let doc = json!({
        "meta": meta,
        "records": records.iter().map(OutputRecord::json).collect::<Vec<_>>(),
    });
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)
}
