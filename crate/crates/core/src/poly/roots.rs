use crate::error::{Error, Result};
use crate::poly::{ComplexPoly, RatPoly};
use crate::precision::C64;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RootOptions {
    /// Accepted backward error `|p(z)| / sum |a_k||z|^k`.
    pub tol_root: f64,
    /// Relative distance below which roots are merged.
    pub tol_cluster: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            tol_root: 1e-11,
            tol_cluster: 1e-8,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub z: C64,
    pub multiplicity: usize,
}

/// All `deg p` roots with multiplicity, unclustered.
///
/// Aberth–Ehrlich iteration from Newton-polygon starting points; on failure
/// falls back to eigenvalues of the companion matrix followed by Newton
/// polishing.
pub fn simple_roots(p: &ComplexPoly, opts: &RootOptions) -> Result<Vec<C64>> {
    let d = p.degree().ok_or(Error::ZeroPolynomial)?;
    let c = p.coeffs();
    let zeros = c.iter().take_while(|a| a.norm() == 0.0).count();
    let mut out = vec![C64::new(0.0, 0.0); zeros];
    let q = ComplexPoly::new(c[zeros..].to_vec());
    if d == zeros {
        return Ok(out);
    }
    let found = match aberth(&q, opts) {
        Some(r) => r,
        None => {
            let r = companion_roots(&q);
            let r: Vec<C64> = r.into_iter().map(|z| newton_polish(&q, z, 8)).collect();
            let worst = max_backward_error(&q, &r);
            if !(worst <= opts.tol_root) {
                return Err(Error::NonConvergence {
                    degree: d,
                    residual: worst,
                });
            }
            r
        }
    };
    out.extend(found);
    Ok(out)
}

/// Roots merged into clusters with multiplicities.
pub fn roots(p: &ComplexPoly, opts: &RootOptions) -> Result<Vec<Root>> {
    let r = simple_roots(p, opts)?;
    Ok(cluster(r.into_iter().map(|z| (z, 1)).collect(), opts.tol_cluster))
}

/// Roots of an exact polynomial with exact multiplicities, via square-free
/// decomposition.
pub fn rat_roots(p: &RatPoly, opts: &RootOptions) -> Result<Vec<Root>> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let mut all = Vec::new();
    for (factor, k) in p.square_free_decomposition() {
        for z in simple_roots(&factor.to_complex(), opts)? {
            all.push((z, k));
        }
    }
    Ok(cluster(all, opts.tol_cluster))
}

pub(crate) fn cluster(points: Vec<(C64, usize)>, tol: f64) -> Vec<Root> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (points[i].0, points[j].0);
            if (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm())) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: Vec<(usize, C64, usize, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => {
                g.1 += points[i].0 * points[i].1 as f64;
                g.2 += points[i].1;
                g.3 += 1;
            }
            None => groups.push((r, points[i].0 * points[i].1 as f64, points[i].1, 1)),
        }
    }
    let mut out: Vec<Root> = groups
        .into_iter()
        .map(|(_, s, m, _)| Root {
            z: s / m as f64,
            multiplicity: m,
        })
        .collect();
    out.sort_by(|a, b| lex(a.z, b.z));
    out
}

pub(crate) fn lex(a: C64, b: C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn max_backward_error(p: &ComplexPoly, r: &[C64]) -> f64 {
    r.iter()
        .map(|&z| {
            let s = p.abs_eval(z);
            if s == 0.0 {
                0.0
            } else {
                p.eval(z).norm() / s
            }
        })
        .fold(0.0, f64::max)
}

/// Starting points on circles whose radii come from the upper convex hull of
/// `(k, log|a_k|)`, which separates root moduli across scales.
fn initial_points(p: &ComplexPoly) -> Vec<C64> {
    let c = p.coeffs();
    let d = c.len() - 1;
    let pts: Vec<(usize, f64)> = c
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > 0.0)
        .map(|(k, a)| (k, a.norm().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 as f64 - a.0 as f64) * (pt.1 - a.1) - (b.1 - a.1) * (pt.0 as f64 - a.0 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let mut z = Vec::with_capacity(d);
    let sigma = 0.7;
    for w in hull.windows(2) {
        let (i, li) = w[0];
        let (j, lj) = w[1];
        let k = j - i;
        let u = ((li - lj) / k as f64).exp();
        for l in 0..k {
            let theta = 2.0 * std::f64::consts::PI * (l as f64 / k as f64 + i as f64 / d as f64) + sigma;
            z.push(C64::from_polar(u, theta));
        }
    }
    z
}

fn aberth(p: &ComplexPoly, opts: &RootOptions) -> Option<Vec<C64>> {
    let d = p.degree()?;
    if d == 1 {
        let c = p.coeffs();
        return Some(vec![-c[0] / c[1]]);
    }
    let mut z = initial_points(p);
    let mut done = vec![false; d];
    for _ in 0..opts.max_iter {
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (v, dv) = p.eval_with_derivative(z[i]);
            if v.norm() == 0.0 {
                done[i] = true;
                continue;
            }
            let ratio = v / dv;
            let zi = z[i];
            let s: C64 = (0..d).filter(|&j| j != i).map(|j| (zi - z[j]).inv()).sum();
            let w = ratio / (C64::new(1.0, 0.0) - ratio * s);
            if !w.re.is_finite() || !w.im.is_finite() {
                z[i] = zi + C64::new(1e-8, 1e-8) * (1.0 + zi.norm());
                continue;
            }
            z[i] -= w;
            if w.norm() <= 4.0 * f64::EPSILON * z[i].norm().max(f64::MIN_POSITIVE) {
                done[i] = true;
            }
        }
        if done.iter().all(|&b| b) {
            break;
        }
    }
    let worst = max_backward_error(p, &z);
    (worst <= opts.tol_root && z.iter().all(|w| w.re.is_finite() && w.im.is_finite())).then_some(z)
}

fn companion_roots(p: &ComplexPoly) -> Vec<C64> {
    let c = p.coeffs();
    let d = c.len() - 1;
    let lead = c[d];
    let mut m = DMatrix::<C64>::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..d {
        m[(i, d - 1)] = -c[i] / lead;
    }
    m.schur().eigenvalues().map(|e| e.iter().copied().collect()).unwrap_or_default()
}

fn newton_polish(p: &ComplexPoly, mut z: C64, steps: usize) -> C64 {
    for _ in 0..steps {
        let (v, dv) = p.eval_with_derivative(z);
        if dv.norm() == 0.0 {
            break;
        }
        let step = v / dv;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        z -= step;
        if step.norm() <= f64::EPSILON * z.norm() {
            break;
        }
    }
    z
}
