//! Serializable views of core results and the JSON/CSV writers.

use std::fs;
use std::io::Write;
use std::path::Path;

use rvdecay_core::classifier::{BetaSource, GIntegrability};
use rvdecay_core::integrator::Termination;
use rvdecay_core::rvkit::IndexEstimate;
use rvdecay_core::RegimeReport;
use serde::Serialize;

use crate::CliError;

/// A float that stays valid JSON: non-finite values become strings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Num {
    Finite(f64),
    Special(&'static str),
}

pub fn num(v: f64) -> Num {
    if v.is_finite() {
        Num::Finite(v)
    } else if v.is_nan() {
        Num::Special("nan")
    } else if v > 0.0 {
        Num::Special("inf")
    } else {
        Num::Special("-inf")
    }
}

/// CSV cell with 17 significant digits.
pub fn cell(v: f64) -> String {
    if v.is_finite() {
        format!("{:.16e}", v)
    } else {
        match num(v) {
            Num::Special(s) => s.to_string(),
            Num::Finite(_) => unreachable!(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct IndexView {
    pub index: Num,
    pub uncertainty: Num,
    pub verdict: String,
    pub grid_points: usize,
}

impl From<&IndexEstimate> for IndexView {
    fn from(e: &IndexEstimate) -> Self {
        IndexView {
            index: num(e.index),
            uncertainty: num(e.uncertainty),
            verdict: e.verdict.to_string(),
            grid_points: e.grid.len(),
        }
    }
}

#[derive(Debug, Serialize)]
#[allow(non_snake_case)]
pub struct ClassifyView {
    pub regime: &'static str,
    pub reason: Option<String>,
    pub beta: Option<Num>,
    pub beta_source: Option<&'static str>,
    pub beta_estimate: Option<IndexView>,
    pub rapid: bool,
    pub theta: Option<Num>,
    pub g_index: Option<IndexView>,
    pub L_verdict: Option<String>,
    pub L_value: Option<Num>,
    pub L_uncertainty: Option<Num>,
    pub lambda_star: Option<Num>,
    pub predicted_rate: Option<&'static str>,
    pub x_over_y_limit: Option<Num>,
    pub solution_index: Option<Num>,
    pub g_integrable: Option<String>,
    pub g_integral_estimate: Option<Num>,
    pub envelope: Option<&'static str>,
    pub reflected: bool,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

impl From<&RegimeReport> for ClassifyView {
    fn from(r: &RegimeReport) -> Self {
        let integ: Option<&GIntegrability> = r.g_integrable.as_ref();
        ClassifyView {
            regime: r.regime.tag(),
            reason: r.regime.reason().map(str::to_string),
            beta: r.beta.map(num),
            beta_source: r.beta_source.map(|s| match s {
                BetaSource::Hint => "hint",
                BetaSource::Estimated => "estimated",
            }),
            beta_estimate: r.beta_estimate.as_ref().map(IndexView::from),
            rapid: r.rapid,
            theta: r.theta.map(num),
            g_index: r.g_index.as_ref().map(IndexView::from),
            L_verdict: r.limit.as_ref().map(|l| l.verdict.to_string()),
            L_value: r.limit.as_ref().and_then(|l| l.value()).map(num),
            L_uncertainty: r.limit.as_ref().map(|l| num(l.uncertainty)),
            lambda_star: r.lambda_star.map(num),
            predicted_rate: r.predicted_rate.map(|p| p.as_str()),
            x_over_y_limit: r.x_over_y_limit.map(num),
            solution_index: r.solution_index.map(num),
            g_integrable: integ.map(|i| i.verdict.to_string()),
            g_integral_estimate: integ.map(|i| num(i.estimate)),
            envelope: r.envelope.map(|e| e.as_str()),
            reflected: r.reflected,
            warnings: r.warnings.clone(),
            notes: r.notes.clone(),
        }
    }
}

pub fn termination(t: &Termination) -> String {
    match t {
        Termination::Horizon => "horizon".into(),
        Termination::StepBudget => "step-budget".into(),
        Termination::Overflow { t } => format!("overflow at t = {:?}", t),
        Termination::Domain { t } => format!("domain violation at t = {:?}", t),
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// RFC-4180 CSV from a header and string rows.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

/// `key,value` rows for a flat JSON object; nested objects use dotted keys.
pub fn key_value_csv<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let v = serde_json::to_value(value).map_err(|e| CliError::Output(e.to_string()))?;
    let mut rows = Vec::new();
    flatten("", &v, &mut rows);
    to_csv(&["key", "value"], &rows)
}

fn flatten(prefix: &str, v: &serde_json::Value, rows: &mut Vec<Vec<String>>) {
    use serde_json::Value;
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{}.{}", prefix, k)
        }
    };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&key(k), x, rows);
            }
        }
        Value::Array(xs) => {
            for (i, x) in xs.iter().enumerate() {
                flatten(&key(&i.to_string()), x, rows);
            }
        }
        Value::Null => rows.push(vec![prefix.to_string(), String::new()]),
        Value::String(s) => rows.push(vec![prefix.to_string(), s.clone()]),
        Value::Number(n) => rows.push(vec![
            prefix.to_string(),
            n.as_f64()
                .filter(|_| n.is_f64())
                .map(cell)
                .unwrap_or_else(|| n.to_string()),
        ]),
        Value::Bool(b) => rows.push(vec![prefix.to_string(), b.to_string()]),
    }
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Output(e.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_keep_seventeen_digits() {
        let v = 0.1f64 + 0.2;
        let c = cell(v);
        assert_eq!(c, "3.0000000000000004e-1");
        assert_eq!(c.parse::<f64>().unwrap(), v);
        assert_eq!(cell(f64::INFINITY), "inf");
    }

    #[test]
    fn non_finite_numbers_serialize_as_strings() {
        let j = serde_json::to_string(&[num(1.5), num(f64::NEG_INFINITY), num(f64::NAN)]).unwrap();
        assert_eq!(j, r#"[1.5,"-inf","nan"]"#);
    }

    #[test]
    fn csv_quotes_fields_with_commas() {
        let out = to_csv(&["a", "b"], &[vec!["x,y".into(), "1".into()]]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "a,b\r\n\"x,y\",1\r\n");
    }

    #[test]
    fn nested_values_flatten_to_dotted_keys() {
        #[derive(Serialize)]
        struct Inner {
            q: f64,
        }
        #[derive(Serialize)]
        struct Outer {
            a: Inner,
            b: Option<u32>,
        }
        let out = key_value_csv(&Outer {
            a: Inner { q: 0.5 },
            b: None,
        })
        .unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "key,value\r\na.q,5.0000000000000000e-1\r\nb,\r\n"
        );
    }
}
