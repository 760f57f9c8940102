//! Fibers `f^{-1}(t)`, continuation along paths, and the monodromy
//! representation on the roots.

use crate::cycle::Cycle;
use crate::error::{Error, Result};
use crate::linalg::IntegerRowSpace;
use crate::perm::Permutation;
use crate::poly::{critical_values, simple_roots, ComplexPoly, CriticalData, RatPoly, RootOptions};
use crate::precision::{rational_to_f64, C64};
use crate::report::{fmt_c64, Cx};
use serde::Serialize;
use std::collections::HashSet;
use std::f64::consts::PI;

pub const MAX_FIBER_DEGREE: usize = 8;
pub const ORBIT_CAP: usize = 100_000;
const LOOP_VERTICES: usize = 64;
const MIN_STEP: f64 = 1e-12;

/// A polynomial map `z ↦ f(z)` prepared for fiber work: the monic associate,
/// its derivative and the critical data.
#[derive(Debug, Clone)]
pub struct FiberMap {
    f: RatPoly,
    monic: ComplexPoly,
    dmonic: ComplexPoly,
    lead: f64,
    crit: CriticalData,
    exclusion: f64,
    opts: RootOptions,
}

/// Roots of `f(z) = t` in a fixed order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fiber {
    #[serde(serialize_with = "crate::report::ser_c64")]
    pub t: C64,
    #[serde(serialize_with = "crate::report::ser_c64_vec")]
    pub roots: Vec<C64>,
    /// Point where the order was fixed lexicographically before any tracking.
    #[serde(serialize_with = "crate::report::ser_c64")]
    pub basepoint: C64,
}

impl FiberMap {
    pub fn new(f: &RatPoly, opts: &RootOptions) -> Result<Self> {
        let m = f.degree().ok_or(Error::ZeroPolynomial)?;
        if m > MAX_FIBER_DEGREE {
            return Err(Error::FiberTooLarge {
                degree: m,
                max: MAX_FIBER_DEGREE,
            });
        }
        let crit = critical_values(f, opts)?;
        let lead = rational_to_f64(f.leading().expect("nonzero"));
        let monic = f.to_complex().scale(C64::new(1.0 / lead, 0.0));
        let spread = crit.spread();
        let mut exclusion = 1e-3 * (1.0 + spread);
        if let Some(s) = crit.min_separation() {
            exclusion = exclusion.min(0.1 * s);
        }
        Ok(FiberMap {
            f: f.clone(),
            dmonic: monic.derivative(),
            monic,
            lead,
            crit,
            exclusion,
            opts: *opts,
        })
    }

    pub fn poly(&self) -> &RatPoly {
        &self.f
    }

    pub fn degree(&self) -> usize {
        self.monic.degree().unwrap_or(0)
    }

    pub fn critical(&self) -> &CriticalData {
        &self.crit
    }

    /// Radius of the disks around critical values that tracking avoids.
    pub fn exclusion_radius(&self) -> f64 {
        self.exclusion
    }

    /// Roots of `f(z) = t` in lexicographic order, without the proximity check.
    pub fn roots_at(&self, t: C64) -> Result<Vec<C64>> {
        let mut r = simple_roots(&self.monic.shift_constant(t / self.lead), &self.opts)?;
        r.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(r)
    }

    /// `f(z) - t` and `f'(z)`, both divided by the leading coefficient.
    pub fn residual(&self, z: C64, t: C64) -> (C64, C64) {
        let (v, _) = self.monic.eval_with_derivative(z);
        (v - t / self.lead, self.dmonic.eval(z))
    }

    /// `dz/dt` along the branch through `z`.
    pub fn branch_derivative(&self, z: C64) -> C64 {
        (self.dmonic.eval(z) * self.lead).inv()
    }

    pub fn check_regular(&self, t: C64) -> Result<()> {
        if let Some((c, d)) = self.crit.nearest(t) {
            if d < self.exclusion {
                return Err(Error::NearCriticalValue {
                    t: fmt_c64(t),
                    critical: fmt_c64(c),
                    distance: d,
                });
            }
        }
        Ok(())
    }

    fn check_segment(&self, a: C64, b: C64, clearance: f64) -> Result<()> {
        for &c in &self.crit.values {
            if segment_distance(c, a, b) < clearance {
                return Err(Error::PathThroughCriticalDisk(fmt_c64(c)));
            }
        }
        Ok(())
    }

    /// Newton correction of every root from `t_old` to `t_new`, accepted only
    /// if each root stays inside its own half-separation disk.
    fn step(&self, roots: &[C64], t_old: C64, t_new: C64) -> Option<Vec<C64>> {
        let sep = min_separation(roots);
        let dt = t_new - t_old;
        let mut out = Vec::with_capacity(roots.len());
        for &z0 in roots {
            let mut z = z0 + self.branch_derivative(z0) * dt;
            let mut converged = false;
            for _ in 0..12 {
                let (v, dv) = self.residual(z, t_new);
                let s = v / dv;
                if !s.re.is_finite() || !s.im.is_finite() {
                    return None;
                }
                z -= s;
                if s.norm() <= 1e-14 * (1.0 + z.norm()) {
                    converged = true;
                    break;
                }
            }
            if !converged || (z - z0).norm() >= 0.5 * sep {
                return None;
            }
            out.push(z);
        }
        Some(out)
    }

    fn track_segment(&self, roots: Vec<C64>, a: C64, b: C64) -> Result<Vec<C64>> {
        self.check_segment(a, b, self.exclusion)?;
        let len = (b - a).norm();
        if len == 0.0 {
            return Ok(roots);
        }
        let mut roots = roots;
        let mut s = 0.0;
        let mut h = (self.exclusion / len).min(1.0);
        while s < 1.0 {
            let hh = h.min(1.0 - s);
            let t_old = a + (b - a) * s;
            let t_new = if s + hh >= 1.0 { b } else { a + (b - a) * (s + hh) };
            match self.step(&roots, t_old, t_new) {
                Some(next) => {
                    roots = next;
                    s = if t_new == b { 1.0 } else { s + hh };
                    h = (2.0 * hh).min(1.0);
                }
                None => {
                    h = hh / 2.0;
                    if h * len < MIN_STEP {
                        return Err(Error::MatchingAmbiguous(fmt_c64(t_old)));
                    }
                }
            }
        }
        Ok(roots)
    }
}

fn segment_distance(c: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return (c - a).norm();
    }
    let s = (((c - a) * d.conj()).re / l2).clamp(0.0, 1.0);
    (c - (a + d * s)).norm()
}

fn min_separation(z: &[C64]) -> f64 {
    let mut s = f64::INFINITY;
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            s = s.min((z[i] - z[j]).norm());
        }
    }
    s
}

/// The fiber over a regular value, roots in lexicographic order (which is
/// increasing order when the fiber is real).
pub fn solve_fiber(map: &FiberMap, t: C64) -> Result<Fiber> {
    map.check_regular(t)?;
    Ok(Fiber {
        t,
        roots: map.roots_at(t)?,
        basepoint: t,
    })
}

/// Continues the labelled fiber along the polygon `fiber.t → waypoints...`.
pub fn track_path(map: &FiberMap, fiber: &Fiber, waypoints: &[C64]) -> Result<Fiber> {
    let mut roots = fiber.roots.clone();
    let mut t = fiber.t;
    for &w in waypoints {
        roots = map.track_segment(roots, t, w)?;
        t = w;
    }
    Ok(Fiber {
        t,
        roots,
        basepoint: fiber.basepoint,
    })
}

/// Permutation induced by tracking `fiber` around a closed polygon.
pub fn loop_permutation(map: &FiberMap, fiber: &Fiber, waypoints: &[C64]) -> Result<Permutation> {
    let end = track_path(map, fiber, waypoints)?;
    if (end.t - fiber.t).norm() > 1e-12 * (1.0 + fiber.t.norm()) {
        return Err(Error::Domain("loop does not return to its start".into()));
    }
    match_roots(&fiber.roots, &end.roots).ok_or_else(|| Error::MatchingAmbiguous(fmt_c64(fiber.t)))
}

/// `π(i) = j` when `moved[i]` is the root `base[j]`.
fn match_roots(base: &[C64], moved: &[C64]) -> Option<Permutation> {
    let tol = 0.25 * min_separation(base);
    let mut img = Vec::with_capacity(base.len());
    let mut used = vec![false; base.len()];
    for z in moved {
        let (j, d) = base
            .iter()
            .enumerate()
            .map(|(j, b)| (j, (b - z).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        if d > tol || used[j] {
            return None;
        }
        used[j] = true;
        img.push(j);
    }
    Some(Permutation(img))
}

/// Serialized with one-based permutations: `loops` becomes a list of
/// `{critical_value, permutation}` in loop order.
#[derive(Debug, Clone)]
pub struct MonodromyRep {
    pub basepoint: C64,
    pub base_fiber: Vec<C64>,
    /// Critical values in loop order: increasing argument of `c - basepoint`
    /// in `[0, 2π)`, i.e. counterclockwise as seen from the basepoint.
    pub critical_values: Vec<C64>,
    /// `loops[k]`: counterclockwise keyhole loop around `critical_values[k]`.
    pub loops: Vec<Permutation>,
    /// Loop around infinity, oriented positively on the Riemann sphere
    /// (clockwise in the `t`-plane). The ordered product of `loops` is its
    /// inverse.
    pub infinity: Permutation,
    pub exclusion_radius: f64,
    pub loop_radius: f64,
}

impl Serialize for MonodromyRep {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Loop {
            critical_value: Cx,
            permutation: Vec<usize>,
        }
        #[derive(Serialize)]
        struct Repr {
            basepoint: Cx,
            base_fiber: Vec<Cx>,
            loops: Vec<Loop>,
            infinity: Vec<usize>,
            exclusion_radius: f64,
            loop_radius: f64,
        }
        Repr {
            basepoint: Cx(self.basepoint),
            base_fiber: self.base_fiber.iter().map(|&z| Cx(z)).collect(),
            loops: self
                .critical_values
                .iter()
                .zip(&self.loops)
                .map(|(&c, p)| Loop {
                    critical_value: Cx(c),
                    permutation: p.one_based(),
                })
                .collect(),
            infinity: self.infinity.one_based(),
            exclusion_radius: self.exclusion_radius,
            loop_radius: self.loop_radius,
        }
        .serialize(s)
    }
}

impl MonodromyRep {
    /// `loops[0]` first, then `loops[1]`, and so on.
    pub fn loop_product(&self) -> Permutation {
        self.loops
            .iter()
            .fold(Permutation::identity(self.base_fiber.len()), |acc, p| acc.then(p))
    }

    /// Same representation in the labels of another ordering of the base
    /// fiber: `relabel[i]` is the new label of old root `i`.
    pub fn relabeled(&self, relabel: &Permutation, new_base: C64, new_fiber: Vec<C64>) -> Self {
        let inv = relabel.inverse();
        let conj = |p: &Permutation| relabel.after(&p.after(&inv));
        MonodromyRep {
            basepoint: new_base,
            base_fiber: new_fiber,
            critical_values: self.critical_values.clone(),
            loops: self.loops.iter().map(conj).collect(),
            infinity: conj(&self.infinity),
            exclusion_radius: self.exclusion_radius,
            loop_radius: self.loop_radius,
        }
    }

    /// Orbit of a weight vector under the monodromy group (capped).
    pub fn orbit(&self, w: &[i64]) -> Result<Vec<Vec<i64>>> {
        let mut seen: HashSet<Vec<i64>> = HashSet::new();
        let mut queue = vec![w.to_vec()];
        seen.insert(w.to_vec());
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head].clone();
            head += 1;
            for g in &self.loops {
                let u = g.act(&v);
                if seen.insert(u.clone()) {
                    if seen.len() > ORBIT_CAP {
                        return Err(Error::OrbitExplosion(ORBIT_CAP));
                    }
                    queue.push(u);
                }
            }
        }
        Ok(queue)
    }

    /// Transitive action on the roots.
    pub fn is_transitive(&self) -> bool {
        let n = self.base_fiber.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for g in &self.loops {
                let j = g.0[i];
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|b| b)
    }
}

fn loop_radius(map: &FiberMap) -> f64 {
    2.0 * map.exclusion
}

fn argument(z: C64) -> f64 {
    let a = z.im.atan2(z.re);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Whether straight loops from `b` to every critical value stay clear of the
/// other exclusion disks and have distinct directions.
fn basepoint_clear(map: &FiberMap, b: C64) -> bool {
    let rho = loop_radius(map);
    let cv = &map.crit.values;
    for (i, &c) in cv.iter().enumerate() {
        if (c - b).norm() < 4.0 * rho {
            return false;
        }
        for (j, &d) in cv.iter().enumerate() {
            if i != j && segment_distance(d, b, c) < 2.0 * rho {
                return false;
            }
        }
    }
    true
}

/// Deterministic basepoint to the right of all critical values.
pub fn default_basepoint(map: &FiberMap) -> C64 {
    let cv = &map.crit.values;
    let scale = map.crit.spread().max(1.0);
    let x = cv.iter().map(|c| c.re).fold(f64::MIN, f64::max) + 2.0 * scale;
    for k in 0..200 {
        let y = if k == 0 {
            0.0
        } else {
            let s = if k % 2 == 1 { 1.0 } else { -1.0 };
            s * ((k + 1) / 2) as f64 * 0.0731 * scale
        };
        let b = C64::new(x, y);
        if basepoint_clear(map, b) {
            return b;
        }
    }
    C64::new(x, 0.37 * scale)
}

/// Monodromy with the automatic basepoint.
pub fn monodromy(map: &FiberMap) -> Result<MonodromyRep> {
    monodromy_at(map, default_basepoint(map))
}

/// Monodromy at `b`, which must see every critical value along a clear ray.
pub fn monodromy_at(map: &FiberMap, b: C64) -> Result<MonodromyRep> {
    map.check_regular(b)?;
    if !basepoint_clear(map, b) {
        return Err(Error::BasepointObstructed(fmt_c64(b)));
    }
    let base = solve_fiber(map, b)?;
    let rho = loop_radius(map);
    let mut cv = map.crit.values.clone();
    cv.sort_by(|x, y| argument(x - b).total_cmp(&argument(y - b)));
    let mut loops = Vec::with_capacity(cv.len());
    for &c in &cv {
        let u = (b - c) / (b - c).norm();
        let mut path = Vec::with_capacity(LOOP_VERTICES + 2);
        for k in 0..=LOOP_VERTICES {
            let theta = 2.0 * PI * k as f64 / LOOP_VERTICES as f64;
            path.push(c + u * C64::from_polar(rho, theta));
        }
        path.push(b);
        loops.push(loop_permutation(map, &base, &path)?);
    }
    let center = cv.iter().sum::<C64>() / cv.len().max(1) as f64;
    let r = (b - center).norm();
    let phi0 = argument(b - center);
    let mut big = Vec::with_capacity(4 * LOOP_VERTICES);
    for k in (0..4 * LOOP_VERTICES).rev() {
        let theta = phi0 + 2.0 * PI * k as f64 / (4 * LOOP_VERTICES) as f64;
        big.push(center + C64::from_polar(r, theta));
    }
    let infinity = loop_permutation(map, &base, &big)?;
    Ok(MonodromyRep {
        basepoint: b,
        base_fiber: base.roots,
        critical_values: cv,
        loops,
        infinity,
        exclusion_radius: map.exclusion,
        loop_radius: rho,
    })
}

/// A polygon from `a` to `b` avoiding all exclusion disks.
pub fn safe_path(map: &FiberMap, a: C64, b: C64) -> Result<Vec<C64>> {
    let clear = |p: C64, q: C64| map.check_segment(p, q, 2.0 * map.exclusion).is_ok();
    if clear(a, b) {
        return Ok(vec![b]);
    }
    let scale = map.crit.spread().max(1.0);
    for k in 1..40 {
        for s in [1.0, -1.0] {
            let h = C64::new(0.0, s * k as f64 * 0.137 * scale);
            let (p, q) = (a + h, b + h);
            if clear(a, p) && clear(p, q) && clear(q, b) {
                return Ok(vec![p, q, b]);
            }
        }
    }
    Err(Error::PathThroughCriticalDisk(format!(
        "no clear path from {} to {}",
        fmt_c64(a),
        fmt_c64(b)
    )))
}

/// Monodromy expressed at an arbitrary regular basepoint: directly if the
/// basepoint is clear, otherwise transported from the automatic one.
pub fn monodromy_with_basepoint(map: &FiberMap, b: C64) -> Result<MonodromyRep> {
    match monodromy_at(map, b) {
        Err(Error::BasepointObstructed(_)) => {}
        other => return other,
    }
    let rep = monodromy(map)?;
    let start = Fiber {
        t: rep.basepoint,
        roots: rep.base_fiber.clone(),
        basepoint: rep.basepoint,
    };
    let moved = track_path(map, &start, &safe_path(map, rep.basepoint, b)?)?;
    let target = solve_fiber(map, b)?;
    let relabel = match_roots(&target.roots, &moved.roots)
        .ok_or_else(|| Error::MatchingAmbiguous(fmt_c64(b)))?;
    Ok(rep.relabeled(&relabel, b, target.roots))
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitRank {
    pub rank: usize,
    pub orbit_size: usize,
    pub circulant_rank: usize,
}

/// Rank over ℚ of the monodromy orbit of the cycle, with weights labelled
/// by the lexicographic fiber at `basepoint` (automatic if `None`).
pub fn orbit_rank(map: &FiberMap, c: &Cycle, basepoint: Option<C64>) -> Result<OrbitRank> {
    let rep = match basepoint {
        Some(b) => monodromy_with_basepoint(map, b)?,
        None => monodromy(map)?,
    };
    if c.len() != map.degree() {
        return Err(Error::LengthMismatch {
            weights: c.len(),
            fiber: map.degree(),
        });
    }
    let orbit = rep.orbit(c.weights())?;
    let mut space = IntegerRowSpace::default();
    for v in &orbit {
        space.insert(v);
    }
    Ok(OrbitRank {
        rank: space.rank(),
        orbit_size: orbit.len(),
        circulant_rank: circulant_rank(c),
    })
}

/// `m - deg gcd(φ, x^m - 1)` with `φ = c_1 + c_m x + c_{m-1} x^2 + ... + c_2 x^(m-1)`:
/// the rank of the orbit of `c` under a single `m`-cycle.
pub fn circulant_rank(c: &Cycle) -> usize {
    let w = c.weights();
    let m = w.len();
    let phi: Vec<i64> = (0..m).map(|k| w[(m - k) % m]).collect();
    let phi = RatPoly::from_ints(&phi);
    let mut xm = vec![0i64; m + 1];
    xm[0] = -1;
    xm[m] = 1;
    let g = RatPoly::gcd(&phi, &RatPoly::from_ints(&xm));
    m - g.degree().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(c: &[i64]) -> FiberMap {
        FiberMap::new(&RatPoly::from_ints(c), &RootOptions::default()).unwrap()
    }

    #[test]
    fn fiber_at_critical_value_is_rejected() {
        let m = map(&[0, 0, 1, 1]);
        assert!(matches!(
            solve_fiber(&m, C64::new(4.0 / 27.0, 0.0)),
            Err(Error::NearCriticalValue { .. })
        ));
        let fb = solve_fiber(&m, C64::new(1.0, 0.0)).unwrap();
        assert_eq!(fb.roots.len(), 3);
    }

    #[test]
    fn circulant_examples() {
        assert_eq!(circulant_rank(&Cycle::new(vec![1, -1, 1, -1]).unwrap()), 1);
        assert_eq!(circulant_rank(&Cycle::new(vec![1, 2, -3]).unwrap()), 2);
        assert_eq!(circulant_rank(&Cycle::new(vec![1, -1, 0, 0]).unwrap()), 3);
    }

    #[test]
    fn monodromy_product_is_inverse_of_infinity() {
        for f in [vec![0, 0, 1, 1], vec![1, -2, 0, 3, 1], vec![0, 1, 0, -1, 0, 1]] {
            let m = map(&f);
            let rep = monodromy(&m).unwrap();
            assert_eq!(rep.loop_product(), rep.infinity.inverse(), "f = {f:?}");
            assert_eq!(rep.infinity.cycle_type(), vec![m.degree()]);
            assert!(rep.is_transitive());
        }
    }

    #[test]
    fn even_quartic_orbit_ranks() {
        let m = map(&[0, 0, -1, 0, 1]);
        let b = Some(C64::new(-0.125, 0.0));
        let r = orbit_rank(&m, &Cycle::new(vec![1, -1, 0, 0]).unwrap(), b).unwrap();
        assert_eq!(r.rank, 3);
        let r = orbit_rank(&m, &Cycle::new(vec![0, 1, -1, 0]).unwrap(), b).unwrap();
        assert_eq!(r.rank, 2);
    }
}
