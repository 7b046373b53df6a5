//! JSON formats: system files and feedback files.
//!
//! Matrix entries are JSON numbers or strings holding `"p/q"`, integer or
//! decimal literals. Numbers are read through their decimal text, so `0.1`
//! becomes exactly 1/10 in rational mode.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;
use crate::system::{LtiSystem, TimeDomain};

fn entry<S: Scalar>(v: &Value, what: &str, row: usize, col: usize) -> Result<S> {
    let err = |detail: String| Error::Parse {
        what: what.to_string(),
        row,
        col,
        detail,
    };
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => return Err(err(format!("expected a number or \"p/q\" string, found {other}"))),
    };
    S::parse_entry(&text).ok_or_else(|| err(format!("invalid entry {text:?}")))
}

/// Reads an array of arrays. `cols_if_empty` is used for matrices with no
/// rows.
pub fn mat_from_json<S: Scalar>(v: &Value, what: &str, cols_if_empty: usize) -> Result<Mat<S>> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Input(format!("{what}: expected an array of rows")))?;
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let cells = row
            .as_array()
            .ok_or_else(|| Error::Input(format!("{what}: row {} is not an array", i + 1)))?;
        let parsed = cells
            .iter()
            .enumerate()
            .map(|(j, c)| entry(c, what, i + 1, j + 1))
            .collect::<Result<Vec<S>>>()?;
        out.push(parsed);
    }
    Mat::from_rows(out, cols_if_empty).map_err(|e| Error::Input(format!("{what}: {e}")))
}

pub fn mat_to_json<S: Scalar>(m: &Mat<S>) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array(m.row(i).iter().map(Scalar::to_json).collect()))
            .collect(),
    )
}

pub fn vec_to_json<S: Scalar>(v: &[S]) -> Value {
    Value::Array(v.iter().map(Scalar::to_json).collect())
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value> {
    obj.get(name)
        .ok_or_else(|| Error::Input(format!("missing field \"{name}\"")))
}

/// Parses a system document. `"D"` may be omitted (zero feedthrough).
pub fn parse_system<S: Scalar>(text: &str) -> Result<LtiSystem<S>> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| Error::Input(format!("invalid JSON: {e}")))?;
    system_from_json(&doc)
}

pub fn system_from_json<S: Scalar>(doc: &Value) -> Result<LtiSystem<S>> {
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::Input("system file must be a JSON object".into()))?;
    let domain = match obj.get("domain").and_then(Value::as_str).unwrap_or("continuous") {
        "continuous" => TimeDomain::Continuous,
        "discrete" => TimeDomain::Discrete,
        other => {
            return Err(Error::Input(format!(
                "domain must be \"continuous\" or \"discrete\", found {other:?}"
            )))
        }
    };
    let a: Mat<S> = mat_from_json(field(obj, "A")?, "A", 0)?;
    let b: Mat<S> = mat_from_json(field(obj, "B")?, "B", 0)?;
    let c: Mat<S> = mat_from_json(field(obj, "C")?, "C", a.rows())?;
    let d: Mat<S> = match obj.get("D") {
        Some(v) => mat_from_json(v, "D", b.cols())?,
        None => Mat::zeros(c.rows(), b.cols()),
    };
    LtiSystem::new(a, b, c, d, domain).map_err(|e| Error::Input(e.to_string()))
}

pub fn system_to_json<S: Scalar>(sys: &LtiSystem<S>) -> Value {
    json!({
        "domain": sys.domain().name(),
        "A": mat_to_json(sys.a()),
        "B": mat_to_json(sys.b()),
        "C": mat_to_json(sys.c()),
        "D": mat_to_json(sys.d()),
    })
}

/// Contents of a feedback file.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackFile<S> {
    pub f: Mat<S>,
    /// Free-form mode information as written by `synthesize`.
    pub modes: Value,
    pub seed: u64,
}

impl<S: Scalar> FeedbackFile<S> {
    pub fn parse(text: &str) -> Result<Self> {
        let doc: Value =
            serde_json::from_str(text).map_err(|e| Error::Input(format!("invalid JSON: {e}")))?;
        let obj = doc
            .as_object()
            .ok_or_else(|| Error::Input("feedback file must be a JSON object".into()))?;
        Ok(FeedbackFile {
            f: mat_from_json(field(obj, "F")?, "F", 0)?,
            modes: obj.get("modes").cloned().unwrap_or(Value::Null),
            seed: obj.get("seed").and_then(Value::as_u64).unwrap_or(0),
        })
    }

    pub fn to_json(&self) -> Value {
        json!({ "F": mat_to_json(&self.f), "modes": self.modes, "seed": self.seed })
    }

    /// Per-output visible modes recorded under `modes.per_output`, when
    /// present (`None` entries are instantaneous outputs).
    pub fn output_modes(&self) -> Option<Vec<Option<f64>>> {
        let items = self.modes.get("per_output")?.as_array()?;
        items
            .iter()
            .map(|item| match item.get("mode") {
                Some(Value::Null) | None => Some(None),
                Some(v) => {
                    let text = match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    f64::parse_entry(&text).map(Some)
                }
            })
            .collect()
    }
}

/// Parses a comma-separated list of scalars.
pub fn parse_list<S: Scalar>(text: &str, what: &str) -> Result<Vec<S>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .enumerate()
        .map(|(i, t)| {
            S::parse_entry(t).ok_or_else(|| Error::Parse {
                what: what.to_string(),
                row: 1,
                col: i + 1,
                detail: format!("invalid entry {:?}", t.trim()),
            })
        })
        .collect()
}
