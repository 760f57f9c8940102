use cycle_integrals::counting::{
    count_infinitesimal_zeros, count_tangential_zeros, random_deformation, random_morse, run_sharpness_experiment,
    ExperimentKind, ExperimentSpec,
};
use cycle_integrals::cycle::{certify, random_cycle_where, Cycle};
use cycle_integrals::exec::ExecMode;
use cycle_integrals::fiber::{loop_permutation, monodromy, orbit_rank, solve_fiber, FiberMap};
use cycle_integrals::melnikov::Instance;
use cycle_integrals::oracle::SolverConfig;
use cycle_integrals::poly::{rat, RatPoly};
use cycle_integrals::precision::{rational_to_f64, C64};
use cycle_integrals::report::to_json;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn morse(m: usize, seed: u64) -> RatPoly {
    random_morse(m, &mut ChaCha8Rng::seed_from_u64(seed), &SolverConfig::default()).unwrap()
}

fn generic_instance(m: usize, n: usize, seed: u64, eps: Option<(i64, i64)>) -> Instance {
    let cfg = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_morse(m, &mut rng, &cfg).unwrap();
    let c = random_cycle_where(m, &mut rng, |c| certify(c, n).map(|k| k.passes(m)).unwrap_or(false)).unwrap();
    let g = random_deformation(n, &mut rng);
    Instance::new(f, g, c, eps.map(|(p, q)| rat(p, q))).unwrap()
}

fn circle(r: f64, k: usize) -> Vec<C64> {
    (1..=k).map(|j| C64::from_polar(r, 2.0 * PI * j as f64 / k as f64)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn monodromy_of_morse_polynomials(m in 3usize..=5, seed in any::<u64>()) {
        let map = FiberMap::new(&morse(m, seed), &SolverConfig::default().roots).unwrap();
        let rep = monodromy(&map).unwrap();
        prop_assert_eq!(rep.loop_product(), rep.infinity.inverse());
        prop_assert!(rep.is_transitive());
        for g in &rep.loops {
            let mut ct = g.cycle_type();
            ct.retain(|&l| l > 1);
            prop_assert_eq!(ct, vec![2]);
        }
    }

    #[test]
    fn loop_around_everything_is_a_full_cycle(m in 2usize..=5, seed in any::<u64>()) {
        let map = FiberMap::new(&morse(m, seed), &SolverConfig::default().roots).unwrap();
        let r = 2.0 * (1.0 + map.critical().max_abs());
        let start = solve_fiber(&map, C64::new(r, 0.0)).unwrap();
        let once = circle(r, 96);
        let twice: Vec<C64> = once.iter().chain(&once).copied().collect();
        let p = loop_permutation(&map, &start, &once).unwrap();
        let p2 = loop_permutation(&map, &start, &twice).unwrap();
        prop_assert_eq!(p.cycle_type().iter().copied().max(), Some(m));
        prop_assert_eq!(p2, p.then(&p));
    }

    #[test]
    fn small_loop_away_from_critical_values_is_trivial(seed in any::<u64>()) {
        let map = FiberMap::new(&morse(4, seed), &SolverConfig::default().roots).unwrap();
        let far = C64::new(3.0 * (1.0 + map.critical().max_abs()), 0.0);
        let start = solve_fiber(&map, far).unwrap();
        let pts: Vec<C64> = circle(0.5, 32).into_iter().map(|z| far - 0.5 + z).collect();
        prop_assert!(loop_permutation(&map, &start, &pts).unwrap().is_identity());
    }

    #[test]
    fn orbit_rank_dominates_circulant_rank(
        seed in any::<u64>(),
        w in prop::collection::vec(-3i64..=3, 3),
    ) {
        let mut w = w;
        let s: i64 = w.iter().sum();
        w.push(-s);
        prop_assume!(w.iter().any(|&x| x != 0));
        let c = Cycle::new(w).unwrap();
        let map = FiberMap::new(&morse(4, seed), &SolverConfig::default().roots).unwrap();
        let r = orbit_rank(&map, &c, None).unwrap();
        prop_assert!(r.rank >= r.circulant_rank);
        // Full symmetric monodromy: the orbit spans the whole sum-zero lattice.
        prop_assert_eq!(r.rank, 3);
    }
}

#[test]
fn tangential_zeros_are_conjugation_closed_and_agree_with_a_branch() {
    let cfg = SolverConfig::default();
    for (m, n, seed) in [(3, 2, 1), (3, 4, 2), (4, 3, 3), (4, 5, 4)] {
        let inst = generic_instance(m, n, seed, None);
        let rep = count_tangential_zeros(&inst, &cfg).unwrap();
        let zs: Vec<C64> = rep.distinct_regular_zeros.iter().map(|z| z.t).collect();
        for t in &zs {
            let tc = t.conj();
            let d = zs.iter().map(|s| (s - tc).norm()).fold(f64::INFINITY, f64::min);
            assert!(d <= 1e-6 * (1.0 + t.norm()), "({m},{n}) conjugate of {t} missing");
        }
        // Re-derive each zero from a freshly solved fiber: some relabelling of
        // the weights must make the integral vanish.
        let map = FiberMap::new(&inst.f, &cfg.roots).unwrap();
        let g = |z: C64| inst.g.eval_c64(z);
        for z in &rep.distinct_regular_zeros {
            let roots = map.roots_at(z.t).unwrap();
            let vals: Vec<C64> = roots.iter().map(|&r| g(r)).collect();
            let scale: f64 = vals.iter().map(|v| v.norm()).sum::<f64>() * inst.cycle.l1() as f64;
            let best = cycle_integrals::perm::all_permutations(m)
                .iter()
                .map(|p| {
                    let w = p.act(inst.cycle.weights());
                    w.iter().zip(&vals).map(|(&k, v)| v * k as f64).sum::<C64>().norm()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 1e-7 * (1.0 + scale), "({m},{n}) no branch vanishes at {}", z.t);
        }
    }
}

#[test]
fn symmetric_cycles_report_orbit_multiplicities() {
    let cfg = SolverConfig::default();
    for (w, f, g) in [
        (vec![1, -1, 1, -1], vec![1, -3, 0, 2, 1], vec![0, 2, -1, 1]),
        (vec![2, -1, -1], vec![0, -3, 1, 1], vec![0, 1, 2]),
    ] {
        let inst = Instance::new(
            RatPoly::from_ints(&f),
            RatPoly::from_ints(&g),
            Cycle::new(w).unwrap(),
            None,
        )
        .unwrap();
        let rep = count_tangential_zeros(&inst, &cfg).unwrap();
        let k = rep.symmetry_order_used;
        assert!(k > 1);
        for z in &rep.distinct_regular_zeros {
            assert_eq!(z.multiplicity_in_oracle % k, 0);
        }
    }
}

#[test]
fn counts_respect_bounds_for_certified_cycles() {
    let cfg = SolverConfig::default();
    for m in 2..=4 {
        for n in 1..=5 {
            let spec = ExperimentSpec {
                m,
                n,
                kind: ExperimentKind::Tangential,
                trials: 4,
                seed: 7 + (10 * m + n) as u64,
                simple: false,
                epsilon: "1/100".into(),
            };
            let s = run_sharpness_experiment(&spec, &cfg).unwrap();
            assert_eq!(s.exceeded, 0, "({m},{n}) exceeded the bound");
            assert!(s.max_count as u128 <= s.bound, "({m},{n})");
        }
    }
}

#[test]
fn tangential_count_never_exceeds_infinitesimal() {
    let cfg = SolverConfig::default();
    let mut compared = 0;
    for (m, n, seed) in [(3, 2, 11), (3, 4, 12), (4, 3, 13), (3, 5, 14), (4, 2, 15)] {
        let inst = generic_instance(m, n, seed, Some((1, 100)));
        let (Ok(z1), Ok(zd)) = (count_tangential_zeros(&inst, &cfg), count_infinitesimal_zeros(&inst, &cfg)) else {
            continue;
        };
        assert!(z1.count <= zd.count, "({m},{n}) Z1={} ZΔ={}", z1.count, zd.count);
        compared += 1;
    }
    assert!(compared >= 4);
}

#[test]
fn displacement_zeros_converge_linearly_to_integral_zeros() {
    let cfg = SolverConfig::default();
    let inst = generic_instance(3, 2, 21, None);
    let tangential = count_tangential_zeros(&inst, &cfg).unwrap();
    assert!(tangential.count > 0);
    let eps = [rat(1, 100), rat(1, 200), rat(1, 400)];
    let reports: Vec<_> = eps
        .iter()
        .map(|e| count_infinitesimal_zeros(&inst.with_epsilon(Some(e.clone())), &cfg).unwrap())
        .collect();
    for z in &tangential.distinct_regular_zeros {
        let dist: Vec<f64> = reports
            .iter()
            .map(|r| {
                r.distinct_regular_zeros
                    .iter()
                    .map(|w| (w.t - z.t).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let e0 = rational_to_f64(&eps[0]);
        assert!(dist[0] <= 100.0 * e0 * (1.0 + z.t.norm()), "{} drifts by {}", z.t, dist[0]);
        // Halving ε roughly halves the distance.
        assert!(dist[1] <= 0.7 * dist[0] + 1e-9, "{dist:?}");
        assert!(dist[2] <= 0.7 * dist[1] + 1e-9, "{dist:?}");
    }
}

#[test]
fn exec_modes_agree() {
    let spec = ExperimentSpec {
        m: 3,
        n: 4,
        kind: ExperimentKind::Tangential,
        trials: 6,
        seed: 99,
        simple: false,
        epsilon: "1/100".into(),
    };
    let par = SolverConfig::default();
    let seq = SolverConfig {
        exec: ExecMode::Sequential,
        ..par
    };
    let a = to_json(&run_sharpness_experiment(&spec, &par).unwrap()).unwrap();
    let b = to_json(&run_sharpness_experiment(&spec, &seq).unwrap()).unwrap();
    assert_eq!(a, b);
}
