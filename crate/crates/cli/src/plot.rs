//! CSV point sets from saved reports; nothing is rendered.

use cycle_integrals::report::{fmt_f64, Cx};
use cycle_integrals::Error;
use serde_json::Value;

fn malformed(what: &str) -> Error {
    Error::MalformedReport(what.to_string())
}

fn complex(v: &Value) -> Result<Cx, Error> {
    serde_json::from_value(v.clone()).map_err(|e| malformed(&format!("bad complex number {v}: {e}")))
}

fn array<'a>(v: &'a Value, key: &str) -> Result<&'a Vec<Value>, Error> {
    v.get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| malformed(&format!("missing array `{key}`")))
}

fn row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

/// Zero reports give `re_t,im_t,multiplicity,class`, one row per regular
/// zero (plus excluded and unresolved points with `all`); alien reports give
/// `branch,epsilon,re_t,im_t,class`, one polyline per branch.
pub fn csv(doc: &Value, all: bool) -> Result<String, Error> {
    let report = doc.get("report").unwrap_or(doc);
    if report.get("branches").is_some() {
        alien(report)
    } else if report.get("distinct_regular_zeros").is_some() {
        zeros(report, all)
    } else {
        Err(malformed("neither a zero report nor an alien report"))
    }
}

fn zeros(report: &Value, all: bool) -> Result<String, Error> {
    let mut out = String::from("re_t,im_t,multiplicity,class\n");
    for z in array(report, "distinct_regular_zeros")? {
        let t = complex(z.get("t").ok_or_else(|| malformed("zero without `t`"))?)?;
        let k = z
            .get("multiplicity_in_oracle")
            .and_then(Value::as_u64)
            .ok_or_else(|| malformed("zero without `multiplicity_in_oracle`"))?;
        row(&mut out, &[fmt_f64(t.0.re), fmt_f64(t.0.im), k.to_string(), "regular".into()]);
    }
    if all {
        for (key, class) in [("excluded_near_critical", "excluded"), ("unresolved", "unresolved")] {
            for v in array(report, key)? {
                let t = complex(v)?;
                row(&mut out, &[fmt_f64(t.0.re), fmt_f64(t.0.im), "0".into(), class.into()]);
            }
        }
    }
    Ok(out)
}

fn alien(report: &Value) -> Result<String, Error> {
    let schedule = array(report, "epsilon_schedule")?;
    let mut out = String::from("branch,epsilon,re_t,im_t,class\n");
    for (i, b) in array(report, "branches")?.iter().enumerate() {
        let class = b
            .get("class")
            .and_then(Value::as_str)
            .ok_or_else(|| malformed("branch without `class`"))?;
        let traj = array(b, "trajectory")?;
        if traj.len() != schedule.len() {
            return Err(malformed("trajectory length differs from the schedule"));
        }
        for (eps, t) in schedule.iter().zip(traj) {
            let eps = eps.as_str().ok_or_else(|| malformed("ε must be a string"))?;
            let t = complex(t)?;
            row(
                &mut out,
                &[i.to_string(), eps.to_string(), fmt_f64(t.0.re), fmt_f64(t.0.im), class.to_string()],
            );
        }
    }
    Ok(out)
}
