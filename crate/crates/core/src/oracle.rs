//! Single-valued product oracles.
//!
//! For a fiber polynomial `p` (either `f` or `f + εg`), an integrand `h` and a
//! weight vector `n`, the branches of `t ↦ sum_i a_i h(w_i(t))` over all
//! rearrangements `a` of `n` are permuted by monodromy. Their product over a
//! set of representatives modulo sign (times the Vandermonde of the fiber, or
//! squared, when a sign character survives) is a polynomial in `t` whose roots
//! are the values where some branch vanishes. The polynomial is recovered by
//! sampling on circles and a discrete Fourier fit; its roots are then polished
//! by Newton iteration on the vanishing branch itself.

use crate::cycle::arrangements;
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::fiber::{monodromy, safe_path, track_path, Fiber, FiberMap, MonodromyRep};
use crate::perm::factorial;
use crate::poly::{simple_roots, ComplexPoly, RatPoly, RootOptions};
use crate::precision::{cabs, root_of_unity, to_c64, Precision, Real, C64};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use twofloat::TwoFloat;

pub const DEFAULT_DEGREE_CAP: usize = 64;
/// Fibers of this degree or less are supported by the product oracles.
pub const MAX_ORACLE_FIBER: usize = 6;
const MAX_OUTWARD: usize = 48;
const INNER_FLOOR: f64 = 1e-7;
const BAND_LOW: f64 = 0.45;
const BAND_HIGH: f64 = 1.05;
const ZERO_TEST: f64 = 1e-11;
const POLISH_REACH: f64 = 0.02;
const MAX_POLISH_BRANCHES: usize = 8;
const MAX_REFINE: usize = 6;
const GROUP_LINK: f64 = 0.1;
/// Source tag for a landing that refinement could not separate.
const REPEATED: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Tangential,
    Infinitesimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub precision: Precision,
    /// Retry in double-double when a double-precision fit is rejected.
    pub escalate: bool,
    pub degree_cap: usize,
    /// Accepted Fourier tail above the declared degree, relative to the
    /// largest sample.
    pub tol_fit: f64,
    /// Polished zeros this close to a critical value `c`, relative to
    /// `1 + |c|`, are zeros at the critical value.
    pub tol_at_critical: f64,
    /// Relative distance under which polished zeros are merged.
    pub tol_cluster: f64,
    /// Limit-matching tolerance for alien classification, relative to the
    /// critical radius `4 (1 + max |Σ|)`.
    pub match_rel: f64,
    pub roots: RootOptions,
    pub exec: ExecMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            precision: Precision::Double,
            escalate: true,
            degree_cap: DEFAULT_DEGREE_CAP,
            tol_fit: 1e-8,
            tol_at_critical: 1e-7,
            tol_cluster: 1e-6,
            match_rel: 1e-5,
            roots: RootOptions::default(),
            exec: ExecMode::default(),
        }
    }
}

/// What to build an oracle for.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleInput {
    pub kind: OracleKind,
    pub fiber_poly: RatPoly,
    pub integrand: RatPoly,
    /// Weights padded with zeros to `deg fiber_poly`.
    pub weights: Vec<i64>,
    /// Number of zeros appended to the cycle's own weights.
    pub padding: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircleSummary {
    pub radius: f64,
    pub fitted_degree: usize,
    pub fit_residual: f64,
    pub raw_roots: usize,
}

/// The interpolated oracle on its outermost circle. Coefficients are in the
/// scaled variable `s = t / radius`, normalised to unit maximum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OraclePoly {
    pub kind: OracleKind,
    #[serde(serialize_with = "crate::report::ser_c64_vec")]
    pub coeffs: Vec<C64>,
    pub radius: f64,
    pub declared_degree_bound: usize,
    pub fitted_degree: usize,
    pub fit_residual: f64,
    pub tol_fit: f64,
    pub precision: Precision,
    pub identically_zero: bool,
    pub arrangement_count: usize,
    pub vandermonde: bool,
    pub squared: bool,
    /// Multiplicity of each root of this oracle inside the full product over
    /// all weight assignments.
    pub symmetry_order_used: usize,
    pub full_monodromy: bool,
    pub circles: Vec<CircleSummary>,
}

#[derive(Debug, Clone)]
enum Labelling {
    Lexicographic,
    Tracked(Fiber),
}

#[derive(Debug, Clone)]
struct Branches {
    reps: Vec<Vec<i64>>,
    vandermonde: bool,
    squared: bool,
    labelling: Labelling,
    symmetry_order: usize,
}

#[derive(Debug, Clone)]
struct Circle {
    centre: C64,
    radius: f64,
    raw: Vec<C64>,
    summary: CircleSummary,
    coeffs: Vec<C64>,
}

/// A zero of some branch, polished and verified.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleZero {
    pub t: C64,
    /// Multiplicity as a root of the oracle (not of the full product).
    pub multiplicity: usize,
    /// Vanishing weight assignment in the fiber labels used at `t`.
    pub arrangement: Vec<i64>,
    pub roots: Vec<C64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ZeroSet {
    pub regular: Vec<OracleZero>,
    /// Zeros at (or unresolved inside the exclusion disk of) a critical value.
    pub excluded: Vec<C64>,
    /// Candidates whose polishing failed away from every critical value.
    pub unresolved: Vec<C64>,
}

#[derive(Debug, Clone)]
pub struct Oracle {
    pub poly: OraclePoly,
    map: FiberMap,
    branches: Branches,
    integrand: RatPoly,
    integrand_abs: ComplexPoly,
    circles: Vec<Circle>,
}

fn branch_structure(map: &FiberMap, weights: &[i64], padding: usize) -> Result<Branches> {
    let pad = factorial(padding) as usize;
    if map.critical().is_morse() {
        let a = arrangements(weights);
        return Ok(Branches {
            reps: a.reps,
            vandermonde: a.antisymmetric,
            squared: false,
            labelling: Labelling::Lexicographic,
            symmetry_order: (a.stabilizer_order as usize / pad).max(1),
        });
    }
    let rep = monodromy(map)?;
    let mut b = orbit_branches(&rep, weights)?;
    b.symmetry_order = (b.symmetry_order / pad).max(1);
    Ok(b)
}

fn orbit_branches(rep: &MonodromyRep, weights: &[i64]) -> Result<Branches> {
    let orbit = rep.orbit(weights)?;
    let set: HashSet<Vec<i64>> = orbit.iter().cloned().collect();
    let mut reps: Vec<Vec<i64>> = Vec::new();
    let mut chosen: HashSet<Vec<i64>> = HashSet::new();
    for v in &orbit {
        let neg: Vec<i64> = v.iter().map(|x| -x).collect();
        if !chosen.contains(&neg) && chosen.insert(v.clone()) {
            reps.push(v.clone());
        }
    }
    let index: std::collections::HashMap<Vec<i64>, usize> =
        reps.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
    let mut sign_char = true;
    let mut trivial_char = true;
    for g in &rep.loops {
        let mut flips = 0usize;
        for a in &reps {
            let b = g.act(a);
            if !index.contains_key(&b) {
                flips += 1;
            }
        }
        let chi_odd = flips % 2 == 1;
        let g_odd = (g.len() - g.cycle_type().len()) % 2 == 1;
        trivial_char &= !chi_odd;
        sign_char &= chi_odd == g_odd;
    }
    let (vandermonde, squared) = if trivial_char {
        (false, false)
    } else if sign_char {
        (true, false)
    } else {
        (false, true)
    };
    let full = set.len();
    let d = weights.len();
    // Each rep appears |Stab| times in the product over all of Sym_d, and
    // the orbit has |Sym_d| / |Stab| elements when the group is full.
    let symmetry_order = ((factorial(d) as usize) / full.max(1)).max(1);
    Ok(Branches {
        reps,
        vandermonde,
        squared,
        labelling: Labelling::Tracked(Fiber {
            t: rep.basepoint,
            roots: rep.base_fiber.clone(),
            basepoint: rep.basepoint,
        }),
        symmetry_order,
    })
}

impl Branches {
    fn fiber_at(&self, map: &FiberMap, t: C64) -> Result<Vec<C64>> {
        match &self.labelling {
            Labelling::Lexicographic => map.roots_at(t),
            Labelling::Tracked(base) => {
                let path = safe_path(map, base.t, t)?;
                Ok(track_path(map, base, &path)?.roots)
            }
        }
    }

    fn declared_degree(&self, deg_h: usize, d: usize) -> usize {
        let mut total = self.reps.len() * deg_h;
        if self.vandermonde {
            total += d * (d - 1) / 2;
        }
        if self.squared {
            total *= 2;
        }
        total / d
    }
}

/// Value `mantissa · 2^exponent`, to survive products of hundreds of factors.
#[derive(Debug, Clone, Copy)]
struct Scaled<R: Real> {
    mantissa: Complex<R>,
    exponent: i64,
}

impl<R: Real> Scaled<R> {
    fn one() -> Self {
        Scaled {
            mantissa: Complex::new(R::one(), R::zero()),
            exponent: 0,
        }
    }

    fn mul(&mut self, z: Complex<R>) {
        self.mantissa = self.mantissa * z;
        let a = cabs(self.mantissa);
        if a == 0.0 || !a.is_finite() {
            return;
        }
        let e = a.log2().floor() as i64;
        if e.abs() > 256 {
            let s = R::of(2f64.powi(-e as i32));
            self.mantissa = Complex::new(self.mantissa.re * s, self.mantissa.im * s);
            self.exponent += e;
        }
    }

    fn log2_abs(&self) -> f64 {
        cabs(self.mantissa).log2() + self.exponent as f64
    }
}

struct Kernel<R: Real> {
    p: Vec<R>,
    dp: Vec<R>,
    h: Vec<R>,
}

fn horner<R: Real>(c: &[R], z: Complex<R>) -> Complex<R> {
    let mut acc = Complex::new(R::zero(), R::zero());
    for &a in c.iter().rev() {
        acc = acc * z + Complex::new(a, R::zero());
    }
    acc
}

fn abs_horner<R: Real>(c: &[R], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a.f64().abs())
}

impl<R: Real> Kernel<R> {
    fn new(p: &RatPoly, h: &RatPoly) -> Self {
        let conv = |q: &RatPoly| q.coeffs().iter().map(R::of_rational).collect::<Vec<R>>();
        Kernel {
            p: conv(p),
            dp: conv(&p.derivative()),
            h: conv(h),
        }
    }

    fn refine(&self, w: C64, t: Complex<R>) -> Complex<R> {
        let mut z = Complex::new(R::of(w.re), R::of(w.im));
        if std::mem::size_of::<R>() > 8 {
            for _ in 0..2 {
                let v = horner(&self.p, z) - t;
                let dv = horner(&self.dp, z);
                if cabs(dv) == 0.0 {
                    break;
                }
                z = z - v / dv;
            }
        }
        z
    }

    /// The oracle value at one sample and the largest relative branch size
    /// `|F_a| / sum_i |a_i h(w_i)|` (which is tiny everywhere exactly when the
    /// branches vanish identically).
    fn sample(&self, br: &Branches, w: &[Complex<R>]) -> (Scaled<R>, f64) {
        let hv: Vec<Complex<R>> = w.iter().map(|&z| horner(&self.h, z)).collect();
        let habs: Vec<f64> = w.iter().map(|&z| abs_horner(&self.h, cabs(z))).collect();
        let mut q = Scaled::one();
        let mut rel: f64 = 0.0;
        for a in &br.reps {
            let mut v = Complex::new(R::zero(), R::zero());
            let mut s = 0.0;
            for (i, &ai) in a.iter().enumerate() {
                if ai != 0 {
                    let k = R::of(ai as f64);
                    v = v + Complex::new(hv[i].re * k, hv[i].im * k);
                    s += ai.unsigned_abs() as f64 * habs[i];
                }
            }
            if s > 0.0 {
                rel = rel.max(cabs(v) / s);
            }
            q.mul(v);
        }
        if br.vandermonde {
            for i in 0..w.len() {
                for j in i + 1..w.len() {
                    q.mul(w[i] - w[j]);
                }
            }
        }
        if br.squared {
            let m = q.mantissa;
            q.mantissa = Complex::new(R::one(), R::zero());
            q.exponent *= 2;
            q.mul(m * m);
        }
        (q, rel)
    }
}

impl Oracle {
    pub fn build(input: &OracleInput, cfg: &SolverConfig) -> Result<Oracle> {
        match Self::build_at(input, cfg, cfg.precision) {
            Err(Error::FitRejected { .. }) if cfg.escalate && cfg.precision == Precision::Double => {
                Self::build_at(input, cfg, Precision::DoubleDouble)
            }
            other => other,
        }
    }

    fn build_at(input: &OracleInput, cfg: &SolverConfig, precision: Precision) -> Result<Oracle> {
        let d = input.fiber_poly.degree().ok_or(Error::ZeroPolynomial)?;
        if d > MAX_ORACLE_FIBER {
            return Err(Error::FiberTooLarge {
                degree: d,
                max: MAX_ORACLE_FIBER,
            });
        }
        if input.weights.len() != d {
            return Err(Error::LengthMismatch {
                weights: input.weights.len(),
                fiber: d,
            });
        }
        let map = FiberMap::new(&input.fiber_poly, &cfg.roots)?;
        let branches = branch_structure(&map, &input.weights, input.padding)?;
        let mut poly = OraclePoly {
            kind: input.kind,
            coeffs: Vec::new(),
            radius: 4.0 * (1.0 + map.critical().max_abs()),
            declared_degree_bound: 0,
            fitted_degree: 0,
            fit_residual: 0.0,
            tol_fit: cfg.tol_fit,
            precision,
            identically_zero: false,
            arrangement_count: branches.reps.len(),
            vandermonde: branches.vandermonde,
            squared: branches.squared,
            symmetry_order_used: branches.symmetry_order,
            full_monodromy: matches!(branches.labelling, Labelling::Lexicographic),
            circles: Vec::new(),
        };
        let deg_h = match input.integrand.degree() {
            None => {
                poly.identically_zero = true;
                return Ok(Oracle {
                    poly,
                    map,
                    branches,
                    integrand: input.integrand.clone(),
                    integrand_abs: input.integrand.to_complex(),
                    circles: Vec::new(),
                });
            }
            Some(k) => k,
        };
        let declared = branches.declared_degree(deg_h, d);
        poly.declared_degree_bound = declared;
        if declared > cfg.degree_cap {
            return Err(Error::DegreeCap {
                degree: declared,
                cap: cfg.degree_cap,
            });
        }
        let mut builder = Builder {
            fiber_poly: &input.fiber_poly,
            integrand: &input.integrand,
            cfg,
            precision,
            map: &map,
            branches: &branches,
            declared,
        };
        let circles = builder.circles(&mut poly)?;
        if let Some(outer) = circles.first() {
            poly.coeffs = outer.coeffs.clone();
            poly.radius = outer.radius;
            poly.fitted_degree = outer.summary.fitted_degree;
        }
        poly.fit_residual = circles.iter().map(|c| c.summary.fit_residual).fold(0.0, f64::max);
        poly.circles = circles.iter().map(|c| c.summary.clone()).collect();
        Ok(Oracle {
            poly,
            map,
            branches,
            integrand: input.integrand.clone(),
            integrand_abs: input.integrand.to_complex(),
            circles,
        })
    }

    pub fn fiber_map(&self) -> &FiberMap {
        &self.map
    }

    /// Every branch at `t` as `(value, t-derivative, scale)`, with the
    /// labelled fiber.
    fn branch_values(&self, t: C64) -> Result<(Vec<(C64, C64, f64)>, Vec<C64>)> {
        let w = self.branches.fiber_at(&self.map, t)?;
        let dh = self.integrand.derivative();
        let hv: Vec<C64> = w.iter().map(|&z| self.integrand.eval_c64(z)).collect();
        let habs: Vec<f64> = w.iter().map(|&z| self.integrand_abs.abs_eval(C64::new(z.norm(), 0.0))).collect();
        let dv: Vec<C64> = w
            .iter()
            .map(|&z| dh.eval_c64(z) * self.map.branch_derivative(z))
            .collect();
        let vals = self
            .branches
            .reps
            .iter()
            .map(|a| {
                let mut f = C64::new(0.0, 0.0);
                let mut fp = C64::new(0.0, 0.0);
                let mut s = 0.0;
                for (i, &ai) in a.iter().enumerate() {
                    let ai = ai as f64;
                    f += hv[i] * ai;
                    fp += dv[i] * ai;
                    s += ai.abs() * habs[i];
                }
                (f, fp, s)
            })
            .collect();
        Ok((vals, w))
    }

    /// Evaluates the best-vanishing branch at `t`: value, derivative in `t`,
    /// natural scale, arrangement index and the labelled fiber.
    fn branch_at(&self, t: C64) -> Result<(C64, C64, f64, usize, Vec<C64>)> {
        let (vals, w) = self.branch_values(t)?;
        let k = (0..vals.len())
            .min_by(|&a, &b| relative(vals[a]).total_cmp(&relative(vals[b])))
            .ok_or_else(|| Error::Domain("no branches".into()))?;
        let (f, fp, s) = vals[k];
        Ok((f, fp, s, k, w))
    }

    /// Newton on branch `k` from `t0`, staying within `reach`.
    fn polish_branch(&self, t0: C64, k: usize, reach: f64) -> Option<OracleZero> {
        let mut t = t0;
        for _ in 0..60 {
            let (vals, _) = self.branch_values(t).ok()?;
            let (f, fp, s) = vals[k];
            if f.norm() == 0.0 {
                break;
            }
            let step = f / fp;
            if !step.re.is_finite() || !step.im.is_finite() || s == 0.0 {
                return None;
            }
            t -= step;
            if (t - t0).norm() > reach {
                return None;
            }
            if step.norm() <= 1e-14 * (1.0 + t.norm()) {
                break;
            }
        }
        let (vals, w) = self.branch_values(t).ok()?;
        let (f, _, s) = vals[k];
        (f.norm() <= 1e-8 * s.max(f64::MIN_POSITIVE)).then(|| OracleZero {
            t,
            multiplicity: 1,
            arrangement: self.branches.reps[k].clone(),
            roots: w,
        })
    }

    /// Polishes `t0` on every branch that is nearly as small as the best
    /// one there; clustered zeros of different branches each get a chance.
    fn polish(&self, t0: C64, reach: f64) -> Vec<OracleZero> {
        let Ok((vals, _)) = self.branch_values(t0) else {
            return Vec::new();
        };
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&a, &b| relative(vals[a]).total_cmp(&relative(vals[b])));
        let best = order.first().map_or(0.0, |&k| relative(vals[k]));
        let limit = (100.0 * best).max(1e-2);
        order
            .into_iter()
            .take_while(|&k| relative(vals[k]) <= limit)
            .take(MAX_POLISH_BRANCHES)
            .filter_map(|k| self.polish_branch(t0, k, reach))
            .collect()
    }

    /// Polished, clustered zeros, split into regular ones and those at the
    /// critical values.
    pub fn zeros(&self, cfg: &SolverConfig) -> Result<ZeroSet> {
        if self.poly.identically_zero {
            return Err(Error::IdenticallyZeroIntegral);
        }
        let n = self.circles.len();
        let mut cand: Vec<Candidate> = Vec::new();
        for (k, c) in self.circles.iter().enumerate() {
            let lo = if k + 1 == n { 0.0 } else { BAND_LOW };
            let hi = if k == 0 { f64::INFINITY } else { BAND_HIGH };
            for (t, scale) in with_scales(&c.raw) {
                let s = t.norm() / c.radius;
                if s >= lo && s <= hi {
                    cand.push(Candidate { source: k, t, scale });
                }
            }
        }
        let polished = cfg.exec.map(&cand, |c| {
            self.polish(c.t, POLISH_REACH * self.circles[c.source].radius)
        });
        let mut out = ZeroSet::default();
        let mut found: Vec<(OracleZero, Vec<usize>)> = Vec::new();
        let mut misses = Vec::new();
        self.absorb(cfg, cand.into_iter().zip(polished), &mut found, &mut out.excluded, &mut misses);
        let explained = |found: &[(OracleZero, Vec<usize>)], m: &Miss| {
            found.iter().any(|(z, _)| (z.t - m.t).norm() <= m.scale)
        };
        // Clusters the global circles cannot separate get circles of their own.
        let builder = self.builder(cfg);
        let mut source = n;
        for _ in 0..MAX_REFINE {
            misses.retain(|m| m.duplicate || !explained(&found, m));
            if misses.is_empty() {
                break;
            }
            let mut next = Vec::new();
            for cluster in group(&misses) {
                let centre = cluster.iter().map(|m| m.t).sum::<C64>() / cluster.len() as f64;
                let spread = cluster.iter().map(|m| (m.t - centre).norm()).fold(0.0, f64::max);
                let scale = cluster.iter().map(|m| m.scale).fold(0.0, f64::max);
                let rho = (2.0 * spread.max(scale)).max(1e-9 * (1.0 + centre.norm()));
                let Some(circle) = builder.fit_local(centre, rho) else {
                    next.extend(cluster);
                    continue;
                };
                let local: Vec<Candidate> = with_scales(&circle.raw)
                    .into_iter()
                    .filter(|(t, _)| (t - circle.centre).norm() <= BAND_HIGH * circle.radius)
                    .map(|(t, scale)| Candidate { source, t, scale })
                    .collect();
                source += 1;
                let polished = cfg
                    .exec
                    .map(&local, |c| self.polish(c.t, POLISH_REACH * circle.radius));
                self.absorb(cfg, local.into_iter().zip(polished), &mut found, &mut out.excluded, &mut next);
            }
            misses = next;
        }
        let crit = self.map.critical();
        let wide = self.map.exclusion_radius();
        for m in misses {
            // Repeated landings on one verified zero that survive refinement
            // are taken as a multiple root.
            if m.duplicate {
                if let Some((_, sources)) = found.iter_mut().find(|(z, _)| (z.t - m.t).norm() <= m.scale) {
                    sources.push(REPEATED);
                }
                continue;
            }
            if explained(&found, &m) {
                continue;
            }
            let near = crit.nearest(m.t).is_some_and(|(_, d)| d <= wide);
            if near {
                push_distinct(&mut out.excluded, m.t, cfg.tol_cluster.max(1e-4));
            } else {
                push_distinct(&mut out.unresolved, m.t, cfg.tol_cluster);
            }
        }
        for (mut z, sources) in found {
            let owner = self.owner(z.t);
            z.multiplicity = sources.iter().filter(|&&k| k == owner || k == REPEATED).count().max(1);
            out.regular.push(z);
        }
        out.regular.sort_by(|a, b| a.t.re.total_cmp(&b.t.re).then(a.t.im.total_cmp(&b.t.im)));
        let lex = |a: &C64, b: &C64| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im));
        out.excluded.sort_by(lex);
        out.unresolved.sort_by(lex);
        Ok(out)
    }

    fn builder<'a>(&'a self, cfg: &'a SolverConfig) -> Builder<'a> {
        Builder {
            fiber_poly: self.map.poly(),
            integrand: &self.integrand,
            cfg,
            precision: self.poly.precision,
            map: &self.map,
            branches: &self.branches,
            declared: self.poly.declared_degree_bound,
        }
    }

    /// Sorts polished candidates into verified zeros (with the circles that
    /// claimed them), zeros at critical values, and misses.
    fn absorb<I>(
        &self,
        cfg: &SolverConfig,
        items: I,
        found: &mut Vec<(OracleZero, Vec<usize>)>,
        excluded: &mut Vec<C64>,
        misses: &mut Vec<Miss>,
    ) where
        I: Iterator<Item = (Candidate, Vec<OracleZero>)>,
    {
        let crit = &self.map.critical().values;
        for (c, zs) in items {
            let mut nearest: Option<(usize, f64)> = None;
            let mut at_critical = false;
            for z in zs {
                let d = (z.t - c.t).norm();
                if crit
                    .iter()
                    .any(|&v| (z.t - v).norm() <= cfg.tol_at_critical * (1.0 + v.norm()))
                {
                    push_distinct(excluded, z.t, cfg.tol_cluster);
                    at_critical |= d <= c.scale;
                    continue;
                }
                let tol = cfg.tol_cluster * (1.0 + z.t.norm());
                let i = match found.iter().position(|(y, _)| (y.t - z.t).norm() <= tol) {
                    Some(i) => i,
                    None => {
                        found.push((z, Vec::new()));
                        found.len() - 1
                    }
                };
                if d <= c.scale && nearest.is_none_or(|(_, e)| d < e) {
                    nearest = Some((i, d));
                }
            }
            match nearest {
                // A candidate is explained only by a zero nearer to it than
                // to any other raw root, and each circle claims a zero once.
                Some((i, _)) if !found[i].1.contains(&c.source) => found[i].1.push(c.source),
                Some((_, d)) => misses.push(Miss {
                    t: c.t,
                    scale: d.max(c.scale),
                    duplicate: true,
                }),
                None if at_critical => {}
                None => misses.push(Miss {
                    t: c.t,
                    scale: c.scale,
                    duplicate: false,
                }),
            }
        }
    }

    /// Circle whose annulus is best centred on `|t|`.
    fn owner(&self, t: C64) -> usize {
        let target = 0.5 * (BAND_LOW + BAND_HIGH);
        let n = self.circles.len();
        (0..n)
            .filter(|&k| {
                let s = t.norm() / self.circles[k].radius;
                (k + 1 == n || s >= BAND_LOW) && (k == 0 || s <= BAND_HIGH)
            })
            .min_by(|&a, &b| {
                let da = (t.norm() / self.circles[a].radius - target).abs();
                let db = (t.norm() / self.circles[b].radius - target).abs();
                da.total_cmp(&db)
            })
            .unwrap_or(0)
    }

    /// Branch value `sum_i a_i h(w_i)` minimised over arrangements, and its
    /// scale; exposed for continuation and checks.
    pub fn branch_value(&self, t: C64) -> Result<(C64, f64)> {
        self.branch_at(t).map(|(f, _, s, _, _)| (f, s))
    }
}

/// A raw root of some circle, to be polished.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    source: usize,
    t: C64,
    /// Half the distance to the nearest other raw root of the same circle.
    scale: f64,
}

#[derive(Debug, Clone, Copy)]
struct Miss {
    t: C64,
    scale: f64,
    /// Landed on a zero its circle had already claimed.
    duplicate: bool,
}

/// Each raw root with half the distance to its nearest neighbour.
fn with_scales(raw: &[C64]) -> Vec<(C64, f64)> {
    raw.iter()
        .enumerate()
        .map(|(i, &t)| {
            let d = raw
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, u)| (u - t).norm())
                .fold(f64::INFINITY, f64::min);
            (t, 0.5 * d.min(POLISH_REACH * (1.0 + t.norm())))
        })
        .collect()
}

/// Single-linkage groups of nearby misses.
fn group(misses: &[Miss]) -> Vec<Vec<Miss>> {
    let mut groups: Vec<Vec<Miss>> = Vec::new();
    for &m in misses {
        let link = GROUP_LINK * (1.0 + m.t.norm());
        let hits: Vec<usize> = (0..groups.len())
            .filter(|&i| groups[i].iter().any(|q| (q.t - m.t).norm() <= link))
            .collect();
        let mut merged = vec![m];
        for &i in hits.iter().rev() {
            merged.extend(groups.swap_remove(i));
        }
        groups.push(merged);
    }
    groups
}

fn relative((f, _, s): (C64, C64, f64)) -> f64 {
    if s > 0.0 {
        f.norm() / s
    } else {
        0.0
    }
}

fn push_distinct(v: &mut Vec<C64>, t: C64, tol: f64) {
    if !v.iter().any(|u| (u - t).norm() <= tol * (1.0 + t.norm())) {
        v.push(t);
    }
}

struct Builder<'a> {
    fiber_poly: &'a RatPoly,
    integrand: &'a RatPoly,
    cfg: &'a SolverConfig,
    precision: Precision,
    map: &'a FiberMap,
    branches: &'a Branches,
    declared: usize,
}

impl Builder<'_> {
    /// A radius near `r` keeping 2% clear of every critical value's
    /// distance from `centre`.
    fn nudge(&self, centre: C64, r: f64) -> f64 {
        let clear = |x: f64| {
            self.map
                .critical()
                .values
                .iter()
                .all(|c| ((c - centre).norm() - x).abs() > 0.02 * x)
        };
        (0..=20)
            .flat_map(|k| [1.0 - 0.01 * k as f64, 1.0 + 0.01 * k as f64])
            .map(|s| s * r)
            .find(|&x| clear(x))
            .unwrap_or(r)
    }

    fn fit(&self, r: f64) -> Result<Option<Circle>> {
        self.fit_with(self.precision, C64::new(0.0, 0.0), r)
    }

    fn fit_with(&self, precision: Precision, centre: C64, r: f64) -> Result<Option<Circle>> {
        match precision {
            Precision::Double => self.fit_in::<f64>(centre, r),
            Precision::DoubleDouble => self.fit_in::<TwoFloat>(centre, r),
        }
    }

    /// A circle around `centre`, escalating precision once; `None` if no
    /// usable fit exists there.
    fn fit_local(&self, centre: C64, r: f64) -> Option<Circle> {
        let r = self.nudge(centre, r);
        match self.fit_with(self.precision, centre, r) {
            Ok(c) => c,
            Err(Error::FitRejected { .. }) if self.precision == Precision::Double => {
                self.fit_with(Precision::DoubleDouble, centre, r).ok().flatten()
            }
            Err(_) => None,
        }
    }

    /// `None` when every branch vanishes identically on this circle.
    fn fit_in<R: Real>(&self, centre: C64, r: f64) -> Result<Option<Circle>> {
        let dd = self.declared;
        let k = 2 * (dd + 1);
        let kernel = Kernel::<R>::new(self.fiber_poly, self.integrand);
        let zeta: Vec<Complex<R>> = (0..2 * k).map(|j| root_of_unity::<R>(j as i64, 2 * k)).collect();
        let rr = R::of(r);
        let samples: Vec<Result<(Scaled<R>, f64)>> = self.cfg.exec.map_range(k, |l| {
            let s = zeta[(2 * l + 1) % (2 * k)];
            let t = Complex::new(s.re * rr + R::of(centre.re), s.im * rr + R::of(centre.im));
            let w = self.branches.fiber_at(self.map, to_c64(t))?;
            let w: Vec<Complex<R>> = w.iter().map(|&z| kernel.refine(z, t)).collect();
            Ok(kernel.sample(self.branches, &w))
        });
        let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
        if samples.iter().all(|(_, rel)| *rel <= ZERO_TEST) {
            return Ok(None);
        }
        let top = samples
            .iter()
            .filter(|(q, _)| cabs(q.mantissa) > 0.0)
            .map(|(q, _)| q.log2_abs())
            .fold(f64::NEG_INFINITY, f64::max);
        let values: Vec<Complex<R>> = samples
            .iter()
            .map(|(q, _)| {
                let a = cabs(q.mantissa);
                if a == 0.0 {
                    return Complex::new(R::zero(), R::zero());
                }
                let e = q.exponent as f64 - top;
                if e < -1000.0 {
                    return Complex::new(R::zero(), R::zero());
                }
                let s = R::of(2f64.powf(e));
                Complex::new(q.mantissa.re * s, q.mantissa.im * s)
            })
            .collect();
        let qmax = values.iter().map(|&v| cabs(v)).fold(0.0, f64::max);
        let inv_k = R::of(1.0 / k as f64);
        let mut coeffs: Vec<C64> = Vec::with_capacity(k);
        for j in 0..k {
            let mut acc = Complex::new(R::zero(), R::zero());
            for (l, &v) in values.iter().enumerate() {
                let idx = (2 * k - (j * (2 * l + 1)) % (2 * k)) % (2 * k);
                acc = acc + v * zeta[idx];
            }
            coeffs.push(to_c64(Complex::new(acc.re * inv_k, acc.im * inv_k)));
        }
        let tail = coeffs[dd + 1..].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let residual = tail / qmax;
        if !(residual <= self.cfg.tol_fit) {
            let hint = match self.precision {
                Precision::Double => "rerun with precision_bits=106".to_string(),
                Precision::DoubleDouble => "the instance is too ill-conditioned for double-double sampling".to_string(),
            };
            return Err(Error::FitRejected {
                residual,
                tolerance: self.cfg.tol_fit,
                hint,
            });
        }
        let cmax = coeffs[..=dd].iter().map(|c| c.norm()).fold(0.0, f64::max);
        let noise = coeffs[dd + 1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
        let thresh = (1e3 * noise).max(1e-13 * cmax);
        let fitted = (0..=dd).rev().find(|&j| coeffs[j].norm() > thresh).unwrap_or(0);
        let kept: Vec<C64> = coeffs[..=fitted].iter().map(|c| c / cmax).collect();
        let raw = if fitted == 0 {
            Vec::new()
        } else {
            let p = ComplexPoly::new(kept.clone());
            let loose = RootOptions {
                tol_root: 1e-8,
                ..self.cfg.roots
            };
            simple_roots(&p, &self.cfg.roots)
                .or_else(|_| simple_roots(&p, &loose))?
                .into_iter()
                .map(|s| centre + s * r)
                .collect()
        };
        Ok(Some(Circle {
            centre,
            radius: r,
            summary: CircleSummary {
                radius: r,
                fitted_degree: fitted,
                fit_residual: residual,
                raw_roots: fitted,
            },
            raw,
            coeffs: kept,
        }))
    }

    fn circles(&mut self, poly: &mut OraclePoly) -> Result<Vec<Circle>> {
        let r0 = self.nudge(C64::new(0.0, 0.0), poly.radius);
        let first = match self.fit(r0)? {
            None => {
                poly.identically_zero = true;
                return Ok(Vec::new());
            }
            Some(c) => c,
        };
        let mut circles = vec![first];
        // Outward in steps of two so the acceptance annuli overlap.
        let mut steps = 0;
        loop {
            let c = &circles[0];
            let far = c.raw.iter().map(|t| t.norm()).fold(0.0, f64::max);
            if far <= BAND_HIGH * c.radius || steps == MAX_OUTWARD {
                break;
            }
            let r = self.nudge(C64::new(0.0, 0.0), 2.0 * c.radius);
            match self.fit(r)? {
                Some(c) => circles.insert(0, c),
                None => break,
            }
            steps += 1;
        }
        let outer = circles[0].radius;
        loop {
            let c = circles.last().expect("nonempty");
            let inner = c.raw.iter().any(|t| t.norm() < BAND_LOW * c.radius);
            let r = self.nudge(C64::new(0.0, 0.0), 0.5 * c.radius);
            if !inner || r < INNER_FLOOR * outer {
                break;
            }
            match self.fit(r) {
                Ok(Some(c)) => circles.push(c),
                Ok(None) => break,
                // A tracked labelling cannot reach circles hugging a
                // critical value; the candidates found so far stand.
                Err(Error::PathThroughCriticalDisk(_) | Error::MatchingAmbiguous(_)) => break,
                Err(e) => return Err(e),
            }
        }
        Ok(circles)
    }
}
