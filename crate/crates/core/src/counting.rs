//! Verified zero counts, alien classification and randomized sharpness runs.

use crate::cycle::{
    bound_infinitesimal, bound_simple, bound_tangential, certify, certify_deformed, random_cycle_where, Cycle,
    GenericityCertificate,
};
use crate::error::{Error, Result};
use crate::melnikov::{brieskorn_dimension, reduce_deformation, Instance};
use crate::oracle::{Oracle, OracleInput, OracleKind, OraclePoly, SolverConfig, ZeroSet, MAX_ORACLE_FIBER};
use crate::poly::{critical_values, format_rational, rat, ComplexPoly, CriticalData, RatPoly};
use crate::precision::C64;
use crate::report::{ser_c64, ser_c64_vec, Cx};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroEntry {
    #[serde(serialize_with = "ser_c64")]
    pub t: C64,
    pub multiplicity_in_oracle: usize,
    /// Weight assignment whose branch vanishes, in the order of `fiber`.
    pub arrangement: Vec<i64>,
    #[serde(serialize_with = "ser_c64_vec")]
    pub fiber: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionSummary {
    pub reduced: Vec<String>,
    /// `(a_i, k_i)` with `g = sum a_i f^(k_i) + reduced`.
    pub subtracted: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroReport {
    pub kind: OracleKind,
    pub m: usize,
    pub n: usize,
    /// Degree of the integrand actually sampled.
    pub integrand_degree: usize,
    pub epsilon: Option<String>,
    pub distinct_regular_zeros: Vec<ZeroEntry>,
    #[serde(serialize_with = "ser_c64_vec")]
    pub excluded_near_critical: Vec<C64>,
    #[serde(serialize_with = "ser_c64_vec")]
    pub unresolved: Vec<C64>,
    pub bound: u128,
    pub bound_name: String,
    pub count: usize,
    pub sharp: bool,
    pub symmetry_order_used: usize,
    pub certificate: GenericityCertificate,
    pub certificate_passes: bool,
    #[serde(serialize_with = "ser_c64_vec")]
    pub critical_values: Vec<C64>,
    pub reduction: Option<ReductionSummary>,
    pub oracle: OraclePoly,
}

fn check_degree(m: usize) -> Result<()> {
    if m > MAX_ORACLE_FIBER {
        return Err(Error::FiberTooLarge {
            degree: m,
            max: MAX_ORACLE_FIBER,
        });
    }
    Ok(())
}

fn entries(z: &ZeroSet, k: usize) -> Vec<ZeroEntry> {
    z.regular
        .iter()
        .map(|r| ZeroEntry {
            t: r.t,
            multiplicity_in_oracle: r.multiplicity * k,
            arrangement: r.arrangement.clone(),
            fiber: r.roots.clone(),
        })
        .collect()
}

fn tangential_bound(c: &Cycle, m: usize, n: usize) -> Result<(u128, String)> {
    if c.is_simple() && m > 2 {
        Ok((bound_simple(m, n)?, "simple".into()))
    } else {
        Ok((bound_tangential(m, n), "tangential".into()))
    }
}

/// `Z₁`: distinct regular zeros of the abelian integral over all branches.
/// Only `f`, `g` and the cycle are used; `ε` is ignored.
pub fn count_tangential_zeros(inst: &Instance, cfg: &SolverConfig) -> Result<ZeroReport> {
    let (m, n) = (inst.m(), inst.n());
    check_degree(m)?;
    let red = reduce_deformation(&inst.f, &inst.g)?;
    let deg = red.reduced.degree().ok_or(Error::IdenticallyZeroIntegral)?;
    let input = OracleInput {
        kind: OracleKind::Tangential,
        fiber_poly: inst.f.clone(),
        integrand: red.reduced.clone(),
        weights: inst.cycle.weights().to_vec(),
        padding: 0,
    };
    let oracle = Oracle::build(&input, cfg)?;
    if oracle.poly.identically_zero {
        return Err(Error::IdenticallyZeroIntegral);
    }
    let zeros = oracle.zeros(cfg)?;
    let cert = certify(&inst.cycle, deg)?;
    let passes = cert.passes(m);
    let (bound, bound_name) = tangential_bound(&inst.cycle, m, n)?;
    let k = oracle.poly.symmetry_order_used;
    let report = ZeroReport {
        kind: OracleKind::Tangential,
        m,
        n,
        integrand_degree: deg,
        epsilon: None,
        count: zeros.regular.len(),
        sharp: zeros.regular.len() as u128 == bound,
        distinct_regular_zeros: entries(&zeros, k),
        excluded_near_critical: zeros.excluded,
        unresolved: zeros.unresolved,
        bound,
        bound_name,
        symmetry_order_used: k,
        certificate: cert,
        certificate_passes: passes,
        critical_values: oracle.fiber_map().critical().values.clone(),
        reduction: (!red.subtracted.is_empty()).then(|| ReductionSummary {
            reduced: red.reduced.to_strings(),
            subtracted: red.subtracted.iter().map(|(a, k)| (format_rational(a), *k)).collect(),
        }),
        oracle: oracle.poly,
    };
    check_bound(&report)?;
    Ok(report)
}

fn check_bound(r: &ZeroReport) -> Result<()> {
    if r.certificate_passes && r.count as u128 > r.bound {
        return Err(Error::BoundViolation {
            count: r.count,
            bound: r.bound,
        });
    }
    Ok(())
}

/// The fiber polynomial and integrand of the infinitesimal oracle: `g` when
/// `n < m`, otherwise `f` reduced modulo `f + εg`.
fn infinitesimal_input(inst: &Instance) -> Result<(OracleInput, RatPoly)> {
    let eps = inst
        .epsilon
        .as_ref()
        .ok_or_else(|| Error::Precondition("the infinitesimal problem needs epsilon".into()))?;
    if eps.is_zero() {
        return Err(Error::Precondition("epsilon = 0: the displacement vanishes identically".into()));
    }
    let (m, n) = (inst.m(), inst.n());
    let p = inst.deformed()?;
    let big = m.max(n);
    if p.degree() != Some(big) {
        return Err(Error::Domain(format!(
            "deg(f + εg) drops below {big}; the leading terms cancel"
        )));
    }
    check_degree(big)?;
    let integrand = if n < m {
        inst.g.clone()
    } else {
        inst.f.divrem(&p)?.1
    };
    let input = OracleInput {
        kind: OracleKind::Infinitesimal,
        fiber_poly: p.clone(),
        integrand,
        weights: inst.cycle.padded(big)?,
        padding: big - m,
    };
    Ok((input, p))
}

/// Every critical value of `f` must have a partner among those of `f + εg`
/// much closer than the spacing of the critical values of `f`.
fn check_epsilon_small(f: &CriticalData, deformed: &CriticalData) -> Result<()> {
    let reach = 0.25 * f.min_separation().unwrap_or(f64::INFINITY).min(1.0 + f.max_abs());
    for &c in &f.values {
        let d = deformed.values.iter().map(|e| (e - c).norm()).fold(f64::INFINITY, f64::min);
        if d > reach {
            return Err(Error::EpsilonTooLarge(format!(
                "critical value {} of f moves by {d:.3e} (allowed {reach:.3e})",
                crate::report::fmt_c64(c)
            )));
        }
    }
    Ok(())
}

/// `Z_Δ` at the instance's `ε`.
pub fn count_infinitesimal_zeros(inst: &Instance, cfg: &SolverConfig) -> Result<ZeroReport> {
    let (m, n) = (inst.m(), inst.n());
    let (input, p) = infinitesimal_input(inst)?;
    let crit_f = critical_values(&inst.f, &cfg.roots)?;
    let crit_p = critical_values(&p, &cfg.roots)?;
    check_epsilon_small(&crit_f, &crit_p)?;
    let deg = input.integrand.degree().ok_or(Error::IdenticallyZeroIntegral)?;
    let cert = if n > m {
        certify_deformed(&inst.cycle, n)?
    } else {
        certify(&inst.cycle, if n < m { n } else { deg })?
    };
    let oracle = Oracle::build(&input, cfg)?;
    if oracle.poly.identically_zero {
        return Err(Error::IdenticallyZeroIntegral);
    }
    let zeros = oracle.zeros(cfg)?;
    let bound = bound_infinitesimal(m, n);
    let k = oracle.poly.symmetry_order_used;
    let report = ZeroReport {
        kind: OracleKind::Infinitesimal,
        m,
        n,
        integrand_degree: deg,
        epsilon: inst.epsilon.as_ref().map(format_rational),
        count: zeros.regular.len(),
        sharp: zeros.regular.len() as u128 == bound,
        distinct_regular_zeros: entries(&zeros, k),
        excluded_near_critical: zeros.excluded,
        unresolved: zeros.unresolved,
        bound,
        bound_name: "infinitesimal".into(),
        symmetry_order_used: k,
        certificate_passes: cert.passes(m),
        certificate: cert,
        critical_values: crit_p.values,
        reduction: None,
        oracle: oracle.poly,
    };
    check_bound(&report)?;
    Ok(report)
}

/// `t(ε)` along one zero family of the displacement, by predictor-corrector
/// continuation of `F(t, ε) = sum_i a_i g(w_i(t, ε))` on the fiber of `f + εg`.
struct Homotopy {
    f: ComplexPoly,
    g: ComplexPoly,
    df: ComplexPoly,
    dg: ComplexPoly,
}

impl Homotopy {
    fn new(f: &RatPoly, g: &RatPoly) -> Self {
        let (f, g) = (f.to_complex(), g.to_complex());
        Homotopy {
            df: f.derivative(),
            dg: g.derivative(),
            f,
            g,
        }
    }

    fn dp(&self, w: C64, e: f64) -> C64 {
        self.df.eval(w) + self.dg.eval(w) * e
    }

    /// Newton on every root; fails if a root wanders past half the spacing
    /// of `anchor`.
    fn correct_fiber(&self, w: &mut [C64], t: C64, e: f64, anchor: &[C64]) -> bool {
        let sep = min_sep(anchor);
        for (z, &z0) in w.iter_mut().zip(anchor) {
            let mut ok = false;
            for _ in 0..12 {
                let v = self.f.eval(*z) + self.g.eval(*z) * e - t;
                let s = v / self.dp(*z, e);
                if !s.re.is_finite() || !s.im.is_finite() {
                    return false;
                }
                *z -= s;
                if s.norm() <= 1e-14 * (1.0 + z.norm()) {
                    ok = true;
                    break;
                }
            }
            if !ok || (*z - z0).norm() >= 0.5 * sep {
                return false;
            }
        }
        true
    }

    /// `F`, `∂F/∂t` and `∂F/∂ε`.
    fn branch(&self, w: &[C64], a: &[i64], e: f64) -> (C64, C64, C64) {
        let mut out = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for (&z, &ai) in w.iter().zip(a) {
            if ai == 0 {
                continue;
            }
            let ai = ai as f64;
            let (gz, dgz, dpz) = (self.g.eval(z), self.dg.eval(z), self.dp(z, e));
            out.0 += gz * ai;
            out.1 += dgz / dpz * ai;
            out.2 -= dgz * gz / dpz * ai;
        }
        out
    }

    fn follow(&self, a: &[i64], t: C64, w: &[C64], e0: f64, e1: f64) -> Result<(C64, Vec<C64>)> {
        let span = e1 - e0;
        let (mut t, mut w, mut e) = (t, w.to_vec(), e0);
        let mut h = span / 16.0;
        while e != e1 {
            let last = (e1 - e).abs() <= h.abs();
            let e_new = if last { e1 } else { e + h };
            let de = e_new - e;
            let (_, ft, fe) = self.branch(&w, a, e);
            let dt = -fe / ft * de;
            let t_pred = t + dt;
            let mut t1 = t_pred;
            let mut w1: Vec<C64> = w
                .iter()
                .map(|&z| z + (dt - self.g.eval(z) * de) / self.dp(z, e))
                .collect();
            let mut ok = false;
            for _ in 0..10 {
                if !self.correct_fiber(&mut w1, t1, e_new, &w) {
                    break;
                }
                let (f, ft, _) = self.branch(&w1, a, e_new);
                let d = f / ft;
                if !d.re.is_finite() || !d.im.is_finite() {
                    break;
                }
                t1 -= d;
                if d.norm() <= 1e-13 * (1.0 + t1.norm()) {
                    ok = self.correct_fiber(&mut w1, t1, e_new, &w);
                    break;
                }
            }
            let drift = (t1 - t_pred).norm();
            if ok && drift <= 0.1 * dt.norm() + 1e-9 * (1.0 + t.norm()) {
                t = t1;
                w = w1;
                e = e_new;
                h = (2.0 * h).abs().min(span.abs()) * span.signum();
            } else {
                h /= 2.0;
                if h.abs() < 1e-12 * span.abs() {
                    return Err(Error::BranchMatchingAmbiguous(format!(
                        "continuation stalled at ε = {e:e}, t = {}",
                        crate::report::fmt_c64(t)
                    )));
                }
            }
        }
        Ok((t, w))
    }
}

fn min_sep(z: &[C64]) -> f64 {
    let mut s = f64::INFINITY;
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            s = s.min((z[i] - z[j]).norm());
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchClass {
    Regular,
    Alien,
}

/// Where an alien branch ends up as `ε → 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    TangentialZero,
    CriticalValue,
    Infinity,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlienBranch {
    /// `t(ε)` at each schedule point, in schedule order.
    pub trajectory: Vec<Cx>,
    /// Richardson extrapolation to `ε = 0`; `None` for divergent branches.
    pub limit: Option<Cx>,
    pub limit_kind: LimitKind,
    pub class: BranchClass,
    /// Distance from the limit to the matched point.
    pub match_distance: Option<f64>,
    pub match_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlienReport {
    pub epsilon_schedule: Vec<String>,
    pub infinitesimal_counts: Vec<usize>,
    pub branches: Vec<AlienBranch>,
    #[serde(serialize_with = "ser_c64_vec")]
    pub tangential_zero_set: Vec<C64>,
    pub tangential_count: usize,
    pub regular: usize,
    pub alien: usize,
    pub alien_at_critical_values: usize,
    pub alien_at_infinity: usize,
    pub alien_unresolved: usize,
    #[serde(serialize_with = "ser_c64_vec")]
    pub critical_values: Vec<C64>,
    pub critical_radius: f64,
}

/// Follows every zero of the displacement at the smallest `ε` back through
/// the schedule and classifies its limit.
pub fn classify_alien(inst: &Instance, schedule: &[BigRational], cfg: &SolverConfig) -> Result<AlienReport> {
    if schedule.len() < 3 {
        return Err(Error::Precondition("the ε schedule needs at least 3 points".into()));
    }
    if schedule.iter().any(|e| !e.is_positive()) || schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("the ε schedule must be positive and strictly decreasing".into()));
    }
    let tangential = count_tangential_zeros(&inst.with_epsilon(None), cfg)?;
    let reports = cfg.exec.map(schedule, |e| count_infinitesimal_zeros(&inst.with_epsilon(Some(e.clone())), cfg));
    let reports = reports.into_iter().collect::<Result<Vec<_>>>()?;
    let eps: Vec<f64> = schedule.iter().map(crate::precision::rational_to_f64).collect();
    let last = reports.last().expect("nonempty");
    let hom = Homotopy::new(&inst.f, &inst.g);
    let kk = schedule.len() - 1;
    let tracks = cfg.exec.map(&last.distinct_regular_zeros, |z| {
        let mut traj = vec![z.t; schedule.len()];
        let (mut t, mut w) = (z.t, z.fiber.clone());
        for k in (0..kk).rev() {
            let (t1, w1) = hom.follow(&z.arrangement, t, &w, eps[k + 1], eps[k])?;
            traj[k] = t1;
            t = t1;
            w = w1;
        }
        Ok(traj)
    });
    let tracks = tracks.into_iter().collect::<Result<Vec<Vec<C64>>>>()?;
    for (i, a) in tracks.iter().enumerate() {
        for b in &tracks[i + 1..] {
            let (x, y) = (a[0], b[0]);
            if (x - y).norm() <= cfg.tol_cluster * (1.0 + x.norm()) {
                return Err(Error::BranchMatchingAmbiguous(format!(
                    "two zero families meet at {} for ε = {}",
                    crate::report::fmt_c64(x),
                    format_rational(&schedule[0])
                )));
            }
        }
    }
    let crit = &tangential.critical_values;
    let big_r = 4.0 * (1.0 + crit.iter().map(|c| c.norm()).fold(0.0, f64::max));
    let tz: Vec<C64> = tangential.distinct_regular_zeros.iter().map(|z| z.t).collect();
    // Beyond every critical value and tangential zero.
    let far = tz.iter().map(|z| z.norm()).fold(big_r, f64::max);
    let mut used = vec![false; tz.len()];
    let mut branches = Vec::with_capacity(tracks.len());
    for traj in &tracks {
        let (ta, tb) = (traj[kk - 1], traj[kk]);
        let (ea, eb) = (eps[kk - 1], eps[kk]);
        let lim = (tb * ea - ta * eb) / (ea - eb);
        let tol = (cfg.match_rel * big_r.max(lim.norm())).max((tb - lim).norm());
        let zero = tz
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, z)| (i, (z - lim).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let cv = crit.iter().map(|c| (c - lim).norm()).fold(f64::INFINITY, f64::min);
        let (kind, dist) = match zero {
            Some((i, d)) if d <= tol && d <= cv => {
                used[i] = true;
                (LimitKind::TangentialZero, Some(d))
            }
            _ if cv <= tol => (LimitKind::CriticalValue, Some(cv)),
            _ if tb.norm() > 10.0 * far => (LimitKind::Infinity, None),
            _ => (LimitKind::Unresolved, None),
        };
        let branch = AlienBranch {
            trajectory: traj.iter().map(|&t| Cx(t)).collect(),
            limit: (kind != LimitKind::Infinity).then_some(Cx(lim)),
            limit_kind: kind,
            class: if kind == LimitKind::TangentialZero {
                BranchClass::Regular
            } else {
                BranchClass::Alien
            },
            match_distance: dist,
            match_tolerance: tol,
        };
        branches.push(branch);
    }
    let count = |k: LimitKind| branches.iter().filter(|b| b.limit_kind == k).count();
    let regular = count(LimitKind::TangentialZero);
    Ok(AlienReport {
        epsilon_schedule: schedule.iter().map(format_rational).collect(),
        infinitesimal_counts: reports.iter().map(|r| r.count).collect(),
        tangential_zero_set: tz,
        tangential_count: tangential.count,
        regular,
        alien: branches.len() - regular,
        alien_at_critical_values: count(LimitKind::CriticalValue),
        alien_at_infinity: count(LimitKind::Infinity),
        alien_unresolved: count(LimitKind::Unresolved),
        branches,
        critical_values: crit.clone(),
        critical_radius: big_r,
    })
}

/// `{1/100, 1/200, 1/400}`.
pub fn default_schedule() -> Vec<BigRational> {
    vec![rat(1, 100), rat(1, 200), rat(1, 400)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Tangential,
    Infinitesimal,
    /// Tangential count, infinitesimal counts over the schedule and the
    /// regular/alien split.
    Alien,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub m: usize,
    pub n: usize,
    pub kind: ExperimentKind,
    pub trials: usize,
    pub seed: u64,
    /// Use the simple cycle `z_1 - z_2` instead of a random generic cycle.
    #[serde(default)]
    pub simple: bool,
    /// `ε` for infinitesimal runs; the smallest point of the schedule for
    /// alien runs.
    #[serde(default = "default_epsilon")]
    pub epsilon: String,
}

fn default_epsilon() -> String {
    "1/100".into()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub f: Vec<String>,
    pub g: Vec<String>,
    pub cycle: Vec<i64>,
    pub count: Option<usize>,
    pub certificate_passes: bool,
    pub tangential_count: Option<usize>,
    pub regular: Option<usize>,
    pub alien: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub spec: ExperimentSpec,
    pub bound: u128,
    pub bound_name: String,
    pub successes: usize,
    pub failures: usize,
    pub max_count: usize,
    pub attained: usize,
    pub attained_fraction: f64,
    /// Certificate-passing trials whose count exceeds the bound.
    pub exceeded: usize,
    pub histogram: BTreeMap<usize, usize>,
    pub brieskorn_dimension: usize,
    /// `max_count / brieskorn_dimension`.
    pub chebyshev_ratio: f64,
    pub records: Vec<TrialRecord>,
}

const GRID: i64 = 12;
const GRID_DENOM: i64 = 4;

fn grid_value(rng: &mut ChaCha8Rng) -> BigRational {
    rat(rng.gen_range(-GRID..=GRID), GRID_DENOM)
}

/// Morse in the strong sense used for sampling: simple critical points and
/// critical values separated by more than `1e-4` of their spread.
pub fn is_strongly_morse(f: &RatPoly, cfg: &SolverConfig) -> bool {
    match critical_values(f, &cfg.roots) {
        Ok(c) => c.is_morse() && c.min_separation().is_none_or(|s| s > 1e-4 * c.spread()),
        Err(_) => false,
    }
}

/// Monic `f` of degree `m` with grid coefficients, resampled until Morse.
pub fn random_morse(m: usize, rng: &mut ChaCha8Rng, cfg: &SolverConfig) -> Result<RatPoly> {
    for _ in 0..1000 {
        let mut c: Vec<BigRational> = (0..m).map(|_| grid_value(rng)).collect();
        c.push(rat(1, 1));
        let f = RatPoly::new(c);
        if is_strongly_morse(&f, cfg) {
            return Ok(f);
        }
    }
    Err(Error::Domain(format!("no Morse polynomial of degree {m} after 1000 draws")))
}

/// `g` of degree exactly `n` with grid coefficients and no constant term.
pub fn random_deformation(n: usize, rng: &mut ChaCha8Rng) -> RatPoly {
    let mut c = vec![BigRational::zero()];
    c.extend((1..=n).map(|_| grid_value(rng)));
    while c[n].is_zero() {
        c[n] = grid_value(rng);
    }
    RatPoly::new(c)
}

/// Degree against which a random cycle is certified for each problem.
fn certificate_for(kind: ExperimentKind, c: &Cycle, m: usize, n: usize) -> Result<GenericityCertificate> {
    let tangential_degree = if n.is_multiple_of(m) { n - 1 } else { n };
    match kind {
        ExperimentKind::Tangential => certify(c, tangential_degree),
        _ if n > m => certify_deformed(c, n),
        _ if n == m => certify(c, m - 1),
        _ => certify(c, n),
    }
}

fn random_instance(spec: &ExperimentSpec, seed: u64, eps: &BigRational, cfg: &SolverConfig) -> Result<Instance> {
    let (m, n) = (spec.m, spec.n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_morse(m, &mut rng, cfg)?;
    let cycle = if spec.simple || m == 2 {
        let mut w = vec![0i64; m];
        w[0] = 1;
        w[1] = -1;
        Cycle::new(w)?
    } else {
        random_cycle_where(m, &mut rng, |c| {
            certificate_for(spec.kind, c, m, n).map(|k| k.passes(m)).unwrap_or(false)
        })
        .ok_or(Error::GenericCycleNotFound {
            m,
            n,
            tries: crate::cycle::GENERIC_DRAW_CAP,
        })?
    };
    for _ in 0..100 {
        let g = random_deformation(n, &mut rng);
        let inst = Instance::new(f.clone(), g, cycle.clone(), Some(eps.clone()))?;
        // Leading terms of f + εg must not cancel.
        if inst.deformed().ok().and_then(|p| p.degree()) == Some(m.max(n)) {
            return Ok(inst);
        }
    }
    Err(Error::Domain("no admissible deformation drawn".into()))
}

fn experiment_bound(spec: &ExperimentSpec) -> Result<(u128, String)> {
    let (m, n) = (spec.m, spec.n);
    match spec.kind {
        ExperimentKind::Tangential if spec.simple && m > 2 => Ok((bound_simple(m, n)?, "simple".into())),
        ExperimentKind::Tangential => Ok((bound_tangential(m, n), "tangential".into())),
        _ => Ok((bound_infinitesimal(m, n), "infinitesimal".into())),
    }
}

fn schedule_from(eps: &BigRational) -> Vec<BigRational> {
    vec![eps.clone(), eps * rat(1, 2), eps * rat(1, 4)]
}

/// Seeded random suite: counts, their distribution and the attained bound.
pub fn run_sharpness_experiment(spec: &ExperimentSpec, cfg: &SolverConfig) -> Result<ExperimentSummary> {
    if spec.m < 2 || spec.n < 1 || spec.m.max(spec.n) > MAX_ORACLE_FIBER && spec.kind != ExperimentKind::Tangential {
        return Err(Error::Precondition(format!(
            "experiment parameters out of range: m={}, n={}",
            spec.m, spec.n
        )));
    }
    check_degree(spec.m)?;
    let eps = crate::poly::parse_rational(&spec.epsilon)?;
    let (bound, bound_name) = experiment_bound(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let seeds: Vec<u64> = (0..spec.trials).map(|_| rng.gen()).collect();
    let records = cfg.exec.map_range(spec.trials, |i| {
        let seed = seeds[i];
        let mut rec = TrialRecord {
            index: i,
            seed,
            f: Vec::new(),
            g: Vec::new(),
            cycle: Vec::new(),
            count: None,
            certificate_passes: false,
            tangential_count: None,
            regular: None,
            alien: None,
            error: None,
        };
        let inst = match random_instance(spec, seed, &eps, cfg) {
            Ok(x) => x,
            Err(e) => {
                rec.error = Some(e.to_string());
                return rec;
            }
        };
        rec.f = inst.f.to_strings();
        rec.g = inst.g.to_strings();
        rec.cycle = inst.cycle.weights().to_vec();
        let outcome = match spec.kind {
            ExperimentKind::Tangential => count_tangential_zeros(&inst, cfg).map(|r| {
                rec.count = Some(r.count);
                rec.certificate_passes = r.certificate_passes;
            }),
            ExperimentKind::Infinitesimal => count_infinitesimal_zeros(&inst, cfg).map(|r| {
                rec.count = Some(r.count);
                rec.certificate_passes = r.certificate_passes;
            }),
            ExperimentKind::Alien => classify_alien(&inst, &schedule_from(&eps), cfg).map(|a| {
                rec.count = a.infinitesimal_counts.last().copied();
                rec.tangential_count = Some(a.tangential_count);
                rec.regular = Some(a.regular);
                rec.alien = Some(a.alien);
                rec.certificate_passes = certificate_for(spec.kind, &inst.cycle, spec.m, spec.n)
                    .map(|c| c.passes(spec.m))
                    .unwrap_or(false);
            }),
        };
        if let Err(e) = outcome {
            rec.error = Some(e.to_string());
        }
        rec
    });
    let counts: Vec<usize> = records.iter().filter_map(|r| r.count).collect();
    let mut histogram = BTreeMap::new();
    for &c in &counts {
        *histogram.entry(c).or_insert(0) += 1;
    }
    let max_count = counts.iter().copied().max().unwrap_or(0);
    let attained = counts.iter().filter(|&&c| c as u128 == bound).count();
    let dim = brieskorn_dimension(spec.m, spec.n);
    Ok(ExperimentSummary {
        spec: spec.clone(),
        bound,
        bound_name,
        successes: counts.len(),
        failures: spec.trials - counts.len(),
        max_count,
        attained,
        attained_fraction: if counts.is_empty() {
            0.0
        } else {
            attained as f64 / counts.len() as f64
        },
        exceeded: records
            .iter()
            .filter(|r| r.certificate_passes && r.count.is_some_and(|c| c as u128 > bound))
            .count(),
        histogram,
        brieskorn_dimension: dim,
        chebyshev_ratio: max_count as f64 / dim as f64,
        records,
    })
}
