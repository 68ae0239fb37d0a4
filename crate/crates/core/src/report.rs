//! CSV and JSON rendering.
//!
//! Floats are written with 12 significant digits; lines end in `\n`. JSON
//! objects have sorted keys, so equal inputs give byte-identical output.

use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::{BoundCheck, Param, SweepTable};
use crate::criteria::ErrorReport;
use crate::estimators::OutcomeDistribution;
use crate::measures::SymmetricMeasure;
use crate::poly::DegreeWitness;
use crate::Result;

/// Formats like C's `%.12g`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    if !(-5..12).contains(&exp) {
        let m = trim_fraction(&format!("{}.{}", &digits[..1], &digits[1..]));
        return format!(
            "{sign}{m}e{}{:02}",
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        );
    }
    let body = if exp >= 0 {
        let split = exp as usize + 1;
        format!("{}.{}", &digits[..split], &digits[split..])
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    };
    format!("{sign}{}", trim_fraction(&body))
}

fn trim_fraction(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Quotes a CSV field when it contains a separator, quote, or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(num) if !(num.is_i64() || num.is_u64()) => {
            let x = num.as_f64().expect("float");
            fmt_float(x)
                .parse::<f64>()
                .ok()
                .map(Value::from)
                .unwrap_or(Value::Null)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_floats).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round_floats(v))).collect())
        }
        other => other,
    }
}

/// Pretty JSON with every float rounded to 12 significant digits and a
/// trailing newline. Non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = round_floats(serde_json::to_value(value)?);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub const ERROR_REPORT_HEADER: &str = "criterion,n,T,p,q,measure,value";

pub fn error_reports_csv(reports: &[ErrorReport]) -> String {
    let mut out = format!("{ERROR_REPORT_HEADER}\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.criterion_tag(),
            r.n,
            r.queries,
            opt_float(r.p),
            opt_float(r.q),
            csv_field(r.measure.as_deref().unwrap_or("")),
            fmt_float(r.value)
        ));
    }
    out
}

fn error_report_value(r: &ErrorReport) -> Value {
    json!({
        "criterion": r.criterion_tag(),
        "n": r.n,
        "T": r.queries,
        "p": r.p,
        "q": r.q,
        "measure": r.measure,
        "value": r.value,
    })
}

pub fn error_reports_json(reports: &[ErrorReport]) -> Result<String> {
    to_json(&reports.iter().map(error_report_value).collect::<Vec<_>>())
}

pub const SWEEP_HEADER: &str = "name,n,T,p,q,measure,value,floor,ratio";

pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            csv_field(&r.name),
            r.n,
            r.t,
            opt_float(r.p),
            opt_float(r.q),
            csv_field(r.measure.as_deref().unwrap_or("")),
            fmt_float(r.value),
            fmt_float(r.floor),
            fmt_float(r.ratio)
        ));
    }
    out
}

pub fn sweep_json(table: &SweepTable) -> Result<String> {
    to_json(table)
}

pub const BOUND_CHECK_HEADER: &str = "name,params,lhs,rhs,holds,margin";

/// `key=value` pairs joined by `;`.
pub fn param_string(check: &BoundCheck) -> String {
    check
        .params
        .iter()
        .map(|(k, v)| match v {
            Param::Int(i) => format!("{k}={i}"),
            Param::Real(x) => format!("{k}={}", fmt_float(*x)),
        })
        .collect::<Vec<_>>()
        .join(";")
}

pub fn bound_checks_csv(checks: &[BoundCheck]) -> String {
    let mut out = format!("{BOUND_CHECK_HEADER}\n");
    for c in checks {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            csv_field(&c.name),
            csv_field(&param_string(c)),
            fmt_float(c.lhs),
            fmt_float(c.rhs),
            c.holds,
            fmt_float(c.margin)
        ));
    }
    out
}

/// `{n, k, queries, atoms: [[estimate, prob], ...]}`.
pub fn distribution_value(d: &OutcomeDistribution) -> Value {
    json!({
        "n": d.input().n(),
        "k": d.input().k(),
        "queries": d.queries(),
        "atoms": d.atoms().iter().map(|a| json!([a.estimate, a.prob])).collect::<Vec<_>>(),
    })
}

pub fn distributions_json(ds: &[OutcomeDistribution]) -> Result<String> {
    to_json(&ds.iter().map(distribution_value).collect::<Vec<_>>())
}

pub fn distributions_csv(ds: &[OutcomeDistribution]) -> String {
    let mut out = String::from("n,k,queries,estimate,prob\n");
    for d in ds {
        for a in d.atoms() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                d.input().n(),
                d.input().k(),
                d.queries(),
                fmt_float(a.estimate),
                fmt_float(a.prob)
            ));
        }
    }
    out
}

pub fn witness_json(w: &DegreeWitness) -> Result<String> {
    to_json(w)
}

pub fn witness_csv(w: &DegreeWitness) -> String {
    let mut out = String::from("n,k1,k2,c,degree,power,coefficient\n");
    for (i, c) in w.coefficients.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            w.n,
            w.k1,
            w.k2,
            fmt_float(w.c),
            w.degree,
            i,
            fmt_float(*c)
        ));
    }
    out
}

pub fn measure_csv(mu: &SymmetricMeasure) -> Result<String> {
    let mut out = String::from("k,class_prob,ln_per_string\n");
    for (k, p) in mu.class_prob().iter().enumerate() {
        out.push_str(&format!(
            "{k},{},{}\n",
            fmt_float(*p),
            fmt_float(mu.ln_per_string(k)?)
        ));
    }
    Ok(out)
}

pub fn measure_json(mu: &SymmetricMeasure) -> Result<String> {
    let ln_per_string = (0..=mu.n())
        .map(|k| mu.ln_per_string(k))
        .collect::<Result<Vec<_>>>()?;
    to_json(&json!({
        "label": mu.label(),
        "n": mu.n(),
        "class_prob": mu.class_prob(),
        "ln_per_string": ln_per_string,
    }))
}
