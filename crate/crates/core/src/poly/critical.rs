use crate::error::{Error, Result};
use crate::poly::roots::{cluster, lex};
use crate::poly::{rat_roots, RatPoly, Root, RootOptions};
use crate::precision::C64;
use serde::Serialize;

/// Critical points of `f` with exact multiplicities and the deduplicated
/// critical values `Σ`.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalData {
    #[serde(skip)]
    pub points: Vec<Root>,
    #[serde(serialize_with = "crate::report::ser_c64_vec")]
    pub values: Vec<C64>,
    /// Index into `values` for each entry of `points`.
    pub value_of_point: Vec<usize>,
    pub clustering_tolerance: f64,
}

impl CriticalData {
    /// Largest pairwise distance between critical values.
    pub fn spread(&self) -> f64 {
        let mut s: f64 = 0.0;
        for (i, a) in self.values.iter().enumerate() {
            for b in &self.values[i + 1..] {
                s = s.max((a - b).norm());
            }
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Smallest pairwise distance, `None` with fewer than two values.
    pub fn min_separation(&self) -> Option<f64> {
        let mut s: Option<f64> = None;
        for (i, a) in self.values.iter().enumerate() {
            for b in &self.values[i + 1..] {
                let d = (a - b).norm();
                s = Some(s.map_or(d, |x| x.min(d)));
            }
        }
        s
    }

    pub fn nearest(&self, t: C64) -> Option<(C64, f64)> {
        self.values
            .iter()
            .map(|&c| (c, (c - t).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Every critical point simple and every critical value distinct.
    pub fn is_morse(&self) -> bool {
        self.points.iter().all(|r| r.multiplicity == 1) && self.values.len() == self.points.len()
    }
}

pub fn critical_values(f: &RatPoly, opts: &RootOptions) -> Result<CriticalData> {
    match f.degree() {
        None => return Err(Error::ZeroPolynomial),
        Some(d) if d < 2 => {
            return Err(Error::Domain(format!("critical values need degree >= 2, got {d}")))
        }
        _ => {}
    }
    let points = rat_roots(&f.derivative(), opts)?;
    let raw: Vec<C64> = points.iter().map(|r| f.eval_c64(r.z)).collect();
    let values: Vec<C64> = {
        let mut v: Vec<Root> = cluster(raw.iter().map(|&c| (c, 1)).collect(), opts.tol_cluster);
        v.sort_by(|a, b| lex(a.z, b.z));
        v.into_iter().map(|r| r.z).collect()
    };
    let value_of_point = raw
        .iter()
        .map(|c| {
            values
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - c).norm().total_cmp(&(b.1 - c).norm()))
                .map(|(i, _)| i)
                .unwrap_or(0)
        })
        .collect();
    Ok(CriticalData {
        points,
        values,
        value_of_point,
        clustering_tolerance: opts.tol_cluster,
    })
}
