use cycle_integrals::cycle::{
    arrangements, bound_infinitesimal, bound_simple, bound_tangential, infinity_point_count, regular_at_infinity,
    symmetry_group, Cycle,
};
use cycle_integrals::melnikov::{brieskorn_dimension, brieskorn_generators};
use cycle_integrals::perm::factorial;
use cycle_integrals::poly::{critical_values, rat, roots, simple_roots, ComplexPoly, RatPoly, RootOptions};
use cycle_integrals::precision::C64;
use proptest::prelude::*;

fn small_rat() -> impl Strategy<Value = (i64, i64)> {
    (-20i64..=20, 1i64..=6)
}

fn monic(coeffs: Vec<(i64, i64)>) -> RatPoly {
    let mut c: Vec<_> = coeffs.into_iter().map(|(p, q)| rat(p, q)).collect();
    c.push(rat(1, 1));
    RatPoly::new(c)
}

fn complex_poly() -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..=9).prop_map(|v| {
        let mut c: Vec<C64> = v.into_iter().map(|(a, b)| C64::new(a, b)).collect();
        let last = c.len() - 1;
        if c[last].norm() < 0.5 {
            c[last] = C64::new(1.0, 0.0);
        }
        c
    })
}

fn cycle(max_len: usize) -> impl Strategy<Value = Cycle> {
    prop::collection::vec(-4i64..=4, 1..max_len).prop_filter_map("all zero", |mut w| {
        let s: i64 = w.iter().sum();
        w.push(-s);
        Cycle::new(w).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn root_sum_matches_coefficients(c in complex_poly()) {
        let p = ComplexPoly::new(c.clone());
        let d = p.degree().unwrap();
        let z = simple_roots(&p, &RootOptions::default()).unwrap();
        prop_assert_eq!(z.len(), d);
        let sum: C64 = z.iter().sum();
        let expected = -c[d - 1] / c[d];
        let scale = 1.0 + z.iter().map(|r| r.norm()).fold(0.0, f64::max);
        prop_assert!((sum - expected).norm() <= 1e-8 * scale * d as f64, "{sum} vs {expected}");
    }

    #[test]
    fn roots_have_small_backward_error(c in complex_poly()) {
        let p = ComplexPoly::new(c.clone());
        let opts = RootOptions::default();
        let rs = roots(&p, &opts).unwrap();
        let total: usize = rs.iter().map(|r| r.multiplicity).sum();
        prop_assert_eq!(total, p.degree().unwrap());
        for r in rs {
            let a = r.z.norm();
            let denom: f64 = c.iter().enumerate().map(|(k, ck)| ck.norm() * a.powi(k as i32)).sum();
            prop_assert!(p.eval(r.z).norm() <= 1e-9 * denom, "residual at {}", r.z);
        }
    }

    #[test]
    fn divrem_is_exact(
        a in prop::collection::vec(small_rat(), 1..8),
        b in prop::collection::vec(small_rat(), 1..5),
    ) {
        let a = monic(a);
        let b = monic(b);
        let (q, r) = a.divrem(&b).unwrap();
        prop_assert_eq!(&(&q * &b) + &r, a);
        prop_assert!(r.degree().is_none_or(|dr| dr < b.degree().unwrap()));
    }

    #[test]
    fn critical_values_shift_with_constant(
        c in prop::collection::vec(small_rat(), 2..5),
        shift in small_rat(),
    ) {
        let f = monic(c);
        let k = rat(shift.0, shift.1);
        let g = &f + &RatPoly::new(vec![k.clone()]);
        let opts = RootOptions::default();
        let cf = critical_values(&f, &opts).unwrap();
        let cg = critical_values(&g, &opts).unwrap();
        let kf = shift.0 as f64 / shift.1 as f64;
        let shifted: Vec<C64> = cf.values.iter().map(|v| v + kf).collect();
        prop_assert_eq!(shifted.len(), cg.values.len());
        for x in &shifted {
            let d = cg.values.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d <= 1e-6 * (1.0 + x.norm()), "{x} has no partner");
        }
    }

    #[test]
    fn symmetry_order_divides_signed_permutations(c in cycle(7)) {
        let m = c.len();
        let k = symmetry_group(&c).unwrap().order() as u128;
        prop_assert!(k >= 1);
        prop_assert_eq!(2 * factorial(m) % k, 0);
    }

    #[test]
    fn arrangements_times_stabilizer_is_factorial(c in cycle(6)) {
        let a = arrangements(c.weights());
        prop_assert_eq!(a.stabilizer_order, symmetry_group(&c).unwrap().order() as u128);
        prop_assert_eq!(a.reps.len() as u128 * a.stabilizer_order, factorial(c.len()));
    }

    #[test]
    fn regularity_fails_when_m_divides_n(c in cycle(6), k in 1usize..4) {
        let n = c.len() * k;
        prop_assert!(!regular_at_infinity(&c, n).unwrap().regular);
    }
}

#[test]
fn tangential_bound_never_exceeds_infinitesimal() {
    for m in 2..=6 {
        for n in 1..=8 {
            assert!(bound_tangential(m, n) <= bound_infinitesimal(m, n), "m={m} n={n}");
        }
    }
}

#[test]
fn divisible_degree_reduces_to_previous() {
    for m in 3..=6 {
        for k in 1..=3 {
            let n = k * m;
            assert_eq!(bound_tangential(m, n), bound_tangential(m, n - 1));
        }
    }
}

#[test]
fn infinity_points_exactly_when_divisible() {
    for m in 2..=6 {
        for n in 1..=12 {
            assert_eq!(infinity_point_count(m, n) == 0, n % m != 0, "m={m} n={n}");
        }
    }
}

#[test]
fn simple_bound_is_below_tangential() {
    for m in 3..=6 {
        for n in 1..=10 {
            if let Ok(b) = bound_simple(m, n) {
                assert!(b <= bound_tangential(m, n), "m={m} n={n}");
            }
        }
    }
}

#[test]
fn brieskorn_degrees_skip_multiples_of_m() {
    for m in 2..=5 {
        let f = RatPoly::from_ints(&{
            let mut c = vec![0i64; m + 1];
            c[1] = -1;
            c[m] = 1;
            c
        });
        for n in 1..=12 {
            let b = brieskorn_generators(&f, n).unwrap();
            let mut degrees: Vec<usize> = b.generators.iter().map(|g| g.degree().unwrap()).collect();
            degrees.sort_unstable();
            let expected: Vec<usize> = (1..=n).filter(|d| d % m != 0).collect();
            assert_eq!(degrees, expected, "m={m} n={n}");
            assert_eq!(b.dimension, brieskorn_dimension(m, n));
        }
    }
}
