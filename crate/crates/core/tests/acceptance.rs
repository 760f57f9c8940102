//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use cycle_integrals::counting::{
    classify_alien, count_infinitesimal_zeros, count_tangential_zeros, run_sharpness_experiment, ExperimentKind,
    ExperimentSpec, ExperimentSummary,
};
use cycle_integrals::cycle::Cycle;
use cycle_integrals::fiber::{orbit_rank, FiberMap};
use cycle_integrals::melnikov::{brieskorn_dimension, design_g_with_zeros, reduce_deformation, Instance, InstanceFile};
use cycle_integrals::oracle::SolverConfig;
use cycle_integrals::poly::{rat, RatPoly};
use cycle_integrals::precision::{rational_to_f64, C64};
use cycle_integrals::report::to_json;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

const SEED: u64 = 2024;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn worked_instance(epsilon: Option<(i64, i64)>) -> Instance {
    Instance::new(
        RatPoly::from_ints(&[0, 0, 1, 1]),
        RatPoly::from_ints(&[0, 1, 3]),
        Cycle::new(vec![1, 1, -2]).unwrap(),
        epsilon.map(|(p, q)| rat(p, q)),
    )
    .unwrap()
}

fn suite(m: usize, n: usize, kind: ExperimentKind, trials: usize, simple: bool) -> ExperimentSummary {
    let spec = ExperimentSpec {
        m,
        n,
        kind,
        trials,
        seed: SEED,
        simple,
        epsilon: "1/100".into(),
    };
    run_sharpness_experiment(&spec, &SolverConfig::default()).unwrap()
}

fn describe(s: &ExperimentSummary) -> String {
    format!(
        "({},{}) max {} of bound {}, {} ok, {} over",
        s.spec.m, s.spec.n, s.max_count, s.bound, s.successes, s.exceeded
    )
}

/// Attains the bound exactly, never exceeds it, on enough successful trials.
fn sharp(s: &ExperimentSummary, bound: u128, min_ok: usize) -> bool {
    s.bound == bound && s.max_count as u128 == bound && s.exceeded == 0 && s.successes >= min_ok
}

fn c1_worked_tangential() -> Outcome {
    let t0 = Instant::now();
    let r = count_tangential_zeros(&worked_instance(None), &SolverConfig::default()).unwrap();
    let dt = t0.elapsed();
    outcome(
        r.count == 0 && dt < Duration::from_secs(1),
        format!("Z1 = {} in {:.3}s", r.count, dt.as_secs_f64()),
    )
}

fn c2_worked_alien() -> Outcome {
    let t0 = Instant::now();
    let cfg = SolverConfig::default();
    let z = count_infinitesimal_zeros(&worked_instance(Some((1, 100))), &cfg).unwrap();
    let a = classify_alien(&worked_instance(None), &[rat(1, 50), rat(1, 100), rat(1, 200)], &cfg).unwrap();
    let dt = t0.elapsed();
    let ok = z.count == 2
        && a.infinitesimal_counts.iter().all(|&c| c == 2)
        && a.alien == 2
        && a.regular == 0
        && dt < Duration::from_secs(10);
    outcome(
        ok,
        format!(
            "Z_Delta = {} (schedule counts {:?}), alien {} / regular {} in {:.2}s",
            z.count,
            a.infinitesimal_counts,
            a.alien,
            a.regular,
            dt.as_secs_f64()
        ),
    )
}

fn c3_tangential_sharpness() -> Outcome {
    let t0 = Instant::now();
    let runs = [(3, 2, 4), (3, 4, 8), (4, 3, 18)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (m, n, b) in runs {
        let s = suite(m, n, ExperimentKind::Tangential, 24, false);
        ok &= sharp(&s, b, 20);
        parts.push(describe(&s));
    }
    let dt = t0.elapsed();
    ok &= dt < Duration::from_secs(300);
    outcome(ok, format!("{} in {:.1}s", parts.join("; "), dt.as_secs_f64()))
}

fn c4_reduced_and_quadratic() -> Outcome {
    let a = suite(3, 3, ExperimentKind::Tangential, 24, false);
    let b = suite(2, 5, ExperimentKind::Tangential, 24, false);
    outcome(sharp(&a, 4, 20) && sharp(&b, 2, 20), format!("{}; {}", describe(&a), describe(&b)))
}

fn c5_infinitesimal_sharpness() -> Outcome {
    let t0 = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (m, n, b) in [(3, 2, 4), (3, 4, 18), (3, 3, 4), (2, 3, 1)] {
        let s = suite(m, n, ExperimentKind::Infinitesimal, 30, false);
        ok &= sharp(&s, b, 20);
        parts.push(describe(&s));
    }
    let dt = t0.elapsed();
    ok &= dt < Duration::from_secs(600);
    outcome(ok, format!("{} in {:.1}s", parts.join("; "), dt.as_secs_f64()))
}

fn c6_partition() -> Outcome {
    let s34 = suite(3, 4, ExperimentKind::Alien, 30, false);
    let s32 = suite(3, 2, ExperimentKind::Alien, 30, false);
    let good = |s: &ExperimentSummary, aliens_allowed: bool| {
        let done: Vec<_> = s.records.iter().filter(|r| r.error.is_none()).collect();
        let holds = done.iter().filter(|r| {
            let (reg, ali) = (r.regular.unwrap(), r.alien.unwrap());
            reg + ali == r.count.unwrap() && reg <= r.tangential_count.unwrap() && (aliens_allowed || ali == 0)
        });
        (holds.count(), done.len())
    };
    let (h34, n34) = good(&s34, true);
    let (h32, n32) = good(&s32, false);
    let split = s34
        .records
        .iter()
        .find(|r| r.error.is_none())
        .map(|r| format!("{}+{}", r.regular.unwrap(), r.alien.unwrap()))
        .unwrap_or_default();
    outcome(
        h34 == n34 && n34 >= 20 && h32 == n32 && n32 >= 20,
        format!("(3,4) {h34}/{n34} hold, e.g. {split}; (3,2) {h32}/{n32} alien-free"),
    )
}

fn c7_simple_cycles() -> Outcome {
    let a = suite(3, 4, ExperimentKind::Tangential, 24, true);
    let b = suite(4, 6, ExperimentKind::Tangential, 24, true);
    let ok = sharp(&a, 3, 20) && b.bound == 7 && b.max_count <= 7 && b.exceeded == 0 && b.successes >= 20;
    outcome(ok, format!("{}; {}", describe(&a), describe(&b)))
}

fn c8_oracle_degree() -> Outcome {
    let cfg = SolverConfig::default();
    let mut checked = 0;
    let mut bad = Vec::new();
    for (m, n, expect) in [(3, 2, 4), (3, 4, 8), (4, 3, 18)] {
        let s = suite(m, n, ExperimentKind::Tangential, 20, false);
        for r in s.records.iter().filter(|r| r.certificate_passes && r.error.is_none()) {
            let file = InstanceFile {
                f: r.f.iter().map(|x| cycle_integrals::melnikov::RationalField::Text(x.clone())).collect(),
                g: r.g.iter().map(|x| cycle_integrals::melnikov::RationalField::Text(x.clone())).collect(),
                cycle: r.cycle.clone(),
                epsilon: None,
                seed: None,
                precision_bits: None,
            };
            let z = count_tangential_zeros(&file.to_instance().unwrap(), &cfg).unwrap();
            checked += 1;
            if z.oracle.fitted_degree != expect || z.oracle.fit_residual > 1e-8 {
                bad.push(format!(
                    "({m},{n}) degree {} residual {:e}",
                    z.oracle.fitted_degree, z.oracle.fit_residual
                ));
            }
        }
    }
    outcome(
        bad.is_empty() && checked > 0,
        format!("{checked} certified instances, {} off: {}", bad.len(), bad.join(", ")),
    )
}

/// Roots of `p - t` from the eigenvalues of the companion matrix.
fn companion_roots(p: &[f64], t: C64) -> Vec<C64> {
    let m = p.len() - 1;
    let lead = p[m];
    let mut a = DMatrix::<C64>::zeros(m, m);
    for i in 1..m {
        a[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..m {
        let c = if i == 0 { C64::new(p[0], 0.0) - t } else { C64::new(p[i], 0.0) };
        a[(i, m - 1)] = -c / lead;
    }
    a.schur().eigenvalues().expect("complex Schur form").iter().copied().collect()
}

fn horner(p: &[f64], z: C64) -> C64 {
    p.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn to_f64(p: &RatPoly) -> Vec<f64> {
    p.coeffs().iter().map(rational_to_f64).collect()
}

fn c9_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut worst_g, mut worst_f) = (0.0f64, 0.0f64);
    for case in 0..50 {
        let m = rng.gen_range(2..=5);
        let n = if case % 2 == 0 { m * rng.gen_range(1..=2) } else { rng.gen_range(1..=9) };
        let mut fc: Vec<i64> = (0..m).map(|_| rng.gen_range(-3..=3)).collect();
        fc.push(rng.gen_range(1..=2));
        let gc: Vec<i64> = (0..=n).map(|_| rng.gen_range(-3..=3)).collect();
        let mut w: Vec<i64> = (0..m - 1).map(|_| rng.gen_range(-4..=4)).collect();
        w.push(-w.iter().sum::<i64>());
        let (f, g) = (RatPoly::from_ints(&fc), RatPoly::from_ints(&gc));
        let red = reduce_deformation(&f, &g).unwrap();
        let t = C64::from_polar(rng.gen_range(0.1..2.0), rng.gen_range(0.0..std::f64::consts::TAU));
        let (ff, gg, rr) = (to_f64(&f), to_f64(&g), to_f64(&red.reduced));
        let roots = companion_roots(&ff, t);
        let integral = |h: &[f64]| -> C64 { roots.iter().zip(&w).map(|(&z, &a)| horner(h, z) * a as f64).sum() };
        let ig = integral(&gg);
        let ir = if rr.is_empty() { C64::new(0.0, 0.0) } else { integral(&rr) };
        worst_g = worst_g.max((ig - ir).norm() / (1.0 + ig.norm()));
        for k in 1..=3 {
            let fk = to_f64(&f.pow(k));
            let fabs: Vec<f64> = fk.iter().map(|c| c.abs()).collect();
            let scale: f64 = roots
                .iter()
                .zip(&w)
                .map(|(z, &a)| a.abs() as f64 * horner(&fabs, C64::new(z.norm(), 0.0)).re)
                .sum();
            worst_f = worst_f.max(integral(&fk).norm() / scale.max(f64::MIN_POSITIVE));
        }
    }
    outcome(
        worst_g <= 1e-9 && worst_f <= 1e-10,
        format!("50 cases, worst |Δ∫g| rel {worst_g:.2e}, worst ∫f^k rel {worst_f:.2e}"),
    )
}

fn c10_monodromy_example() -> Outcome {
    let t0 = Instant::now();
    let map = FiberMap::new(&RatPoly::from_ints(&[0, 0, -1, 0, 1]), &Default::default()).unwrap();
    let b = Some(C64::new(-0.125, 0.0));
    let a = orbit_rank(&map, &Cycle::new(vec![1, -1, 0, 0]).unwrap(), b).unwrap();
    let c = orbit_rank(&map, &Cycle::new(vec![0, 1, -1, 0]).unwrap(), b).unwrap();
    let dt = t0.elapsed();
    outcome(
        a.rank == 3 && c.rank < 3 && dt < Duration::from_secs(5),
        format!("ranks {} and {} in {:.3}s", a.rank, c.rank, dt.as_secs_f64()),
    )
}

/// Dimension of the span of `t -> ∫_C z^k`, `k = 1..n`, sampled on a circle;
/// the Brieskorn dimension computed without the closed form.
fn integral_span_dimension(m: usize, n: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut f: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    f.push(1.0);
    let w: Vec<f64> = (0..m).map(|j| if j == m - 1 { -((1 << (m - 1)) as f64 - 1.0) } else { (1 << j) as f64 }).collect();
    let samples = 3 * n + 4;
    let mut a = DMatrix::<C64>::zeros(samples, n);
    for l in 0..samples {
        let t = C64::from_polar(1.5, std::f64::consts::TAU * (l as f64 + 0.37) / samples as f64);
        let roots = companion_roots(&f, t);
        for k in 1..=n {
            a[(l, k - 1)] = roots.iter().zip(&w).map(|(z, &c)| z.powu(k as u32) * c).sum();
        }
    }
    for k in 0..n {
        let norm = a.column(k).norm();
        a.column_mut(k).scale_mut(1.0 / norm);
    }
    let sv = a.singular_values();
    let top = sv.max();
    sv.iter().filter(|&&s| s > 1e-9 * top).count()
}

fn c11_brieskorn() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut mismatches = Vec::new();
    for m in 2..=6 {
        for n in 1..=12 {
            let closed = brieskorn_dimension(m, n);
            let counted = integral_span_dimension(m, n, &mut rng);
            if closed != counted || closed != n - n / m {
                mismatches.push(format!("({m},{n}) {closed} vs {counted}"));
            }
        }
    }
    let f = RatPoly::from_ints(&[0, 1, -2, 1]);
    let c = Cycle::new(vec![2, 1, -3]).unwrap();
    let targets = [C64::new(0.3, 0.2), C64::new(-1.1, 0.5)];
    let d = design_g_with_zeros(&f, &c, 4, &targets, None, &Default::default()).unwrap();
    let worst = d.residuals.iter().copied().fold(0.0, f64::max);
    let ok = mismatches.is_empty() && d.basis.dimension == 3 && d.residuals.len() == 2 && worst <= 1e-9;
    outcome(
        ok,
        format!(
            "60 pairs, {} mismatches {:?}; design (3,4) placed {} zeros, worst residual {worst:.1e}",
            mismatches.len(),
            mismatches,
            d.residuals.len()
        ),
    )
}

fn c12_ratio() -> Outcome {
    let a = suite(3, 2, ExperimentKind::Tangential, 20, false);
    let b = suite(4, 3, ExperimentKind::Tangential, 20, false);
    let (ra, rb) = (a.chebyshev_ratio, b.chebyshev_ratio);
    let ok = a.max_count == 4 && a.brieskorn_dimension == 2 && ra == 2.0 && b.max_count == 18 && b.brieskorn_dimension == 3 && rb == 6.0 && rb > ra;
    outcome(
        ok,
        format!(
            "{}/{} = {ra} at m=3, {}/{} = {rb} at m=4",
            a.max_count, a.brieskorn_dimension, b.max_count, b.brieskorn_dimension
        ),
    )
}

fn c13_determinism() -> Outcome {
    let cfg = SolverConfig::default();
    let inst = worked_instance(Some((1, 100)));
    let run = || {
        let a = to_json(&count_tangential_zeros(&inst, &cfg).unwrap()).unwrap();
        let b = to_json(&count_infinitesimal_zeros(&inst, &cfg).unwrap()).unwrap();
        let c = to_json(&suite(3, 4, ExperimentKind::Alien, 6, false)).unwrap();
        a + &b + &c
    };
    let (first, second) = (run(), run());
    outcome(first == second, format!("{} bytes compared", first.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("worked example, tangential count", c1_worked_tangential),
        ("worked example, infinitesimal count and alien split", c2_worked_alien),
        ("tangential sharpness n(m-1)!", c3_tangential_sharpness),
        ("reduced (3,3) and quadratic (2,5) sharpness", c4_reduced_and_quadratic),
        ("infinitesimal sharpness", c5_infinitesimal_sharpness),
        ("regular/alien partition", c6_partition),
        ("simple-cycle bounds", c7_simple_cycles),
        ("oracle degree law", c8_oracle_degree),
        ("reduction invariance", c9_reduction),
        ("monodromy orbit ranks of z^4 - z^2", c10_monodromy_example),
        ("Brieskorn dimension and designed zeros", c11_brieskorn),
        ("Chebyshev ratio growth", c12_ratio),
        ("bit-identical reruns", c13_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !o.ok {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {name}: {} ({:.1}s)",
            if o.ok { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
