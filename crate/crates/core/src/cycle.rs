//! Zero-cycles, their symmetry groups, regularity at infinity and the
//! closed-form zero bounds.

use crate::error::{Error, Result};
use crate::perm::{all_permutations, factorial, next_permutation, Permutation};
use crate::precision::C64;
use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

pub const MAX_CYCLE_LEN: usize = 8;

/// Integer weights `n_1, ..., n_m` summing to zero, not all zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct Cycle {
    weights: Vec<i64>,
}

impl TryFrom<Vec<i64>> for Cycle {
    type Error = Error;
    fn try_from(w: Vec<i64>) -> Result<Self> {
        Cycle::new(w)
    }
}

impl From<Cycle> for Vec<i64> {
    fn from(c: Cycle) -> Self {
        c.weights
    }
}

impl Cycle {
    pub fn new(weights: Vec<i64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidCycle("need at least two weights".into()));
        }
        if weights.iter().all(|&w| w == 0) {
            return Err(Error::InvalidCycle("all weights are zero".into()));
        }
        let s: i128 = weights.iter().map(|&w| w as i128).sum();
        if s != 0 {
            return Err(Error::InvalidCycle(format!("weights sum to {s}, not 0")));
        }
        Ok(Cycle { weights })
    }

    /// The simple cycle `(1, -1)`.
    pub fn simple() -> Self {
        Cycle {
            weights: vec![1, -1],
        }
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Exactly two nonzero weights, `+k` and `-k`.
    pub fn is_simple(&self) -> bool {
        let nz: Vec<i64> = self.weights.iter().copied().filter(|&w| w != 0).collect();
        nz.len() == 2 && nz[0] == -nz[1]
    }

    /// Weights followed by zeros up to `len`.
    pub fn padded(&self, len: usize) -> Result<Vec<i64>> {
        if len < self.weights.len() {
            return Err(Error::LengthMismatch {
                weights: self.weights.len(),
                fiber: len,
            });
        }
        let mut w = self.weights.clone();
        w.resize(len, 0);
        Ok(w)
    }

    pub fn l1(&self) -> i64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymmetryElement {
    pub perm: Permutation,
    /// `+1` if the permutation fixes the weights, `-1` if it negates them.
    pub sign: i8,
}

/// Permutations `h` with `n_{h(i)} = ±n_i` for all `i` (one global sign).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymmetryGroup {
    pub elements: Vec<SymmetryElement>,
}

impl SymmetryGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }
}

pub fn symmetry_group(c: &Cycle) -> Result<SymmetryGroup> {
    let m = c.len();
    if m > MAX_CYCLE_LEN {
        return Err(Error::FiberTooLarge {
            degree: m,
            max: MAX_CYCLE_LEN,
        });
    }
    let w = c.weights();
    let mut elements = Vec::new();
    for p in all_permutations(m) {
        for sign in [1i64, -1] {
            if (0..m).all(|i| w[p.0[i]] == sign * w[i]) {
                elements.push(SymmetryElement {
                    perm: p.clone(),
                    sign: sign as i8,
                });
            }
        }
    }
    Ok(SymmetryGroup { elements })
}

pub fn is_asymmetric(c: &Cycle) -> Result<bool> {
    Ok(symmetry_group(c)?.order() == 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityCheck {
    pub regular: bool,
    /// Failing points as one-based exponent vectors `α`.
    pub failing: Vec<Vec<usize>>,
    pub tested: usize,
}

fn weighted_root_sum(w: &[i64], exps: &[usize], n: usize, m: usize) -> C64 {
    w.iter()
        .zip(exps)
        .map(|(&nj, &a)| {
            let k = (n * a) % m;
            C64::from_polar(nj as f64, 2.0 * std::f64::consts::PI * k as f64 / m as f64)
        })
        .sum()
}

/// Regularity at infinity of degree `n` over the cycle: for every `α` in the
/// stabiliser of `m`, `sum_j n_j ξ^(n α_j) ≠ 0` with `ξ = e^(2πi/m)`.
///
/// Always fails when `m | n`, since every sum collapses to `sum n_j = 0`.
pub fn regular_at_infinity(c: &Cycle, n: usize) -> Result<RegularityCheck> {
    let m = c.len();
    if m > MAX_CYCLE_LEN {
        return Err(Error::FiberTooLarge {
            degree: m,
            max: MAX_CYCLE_LEN,
        });
    }
    let tol = 1e-9 * c.l1() as f64;
    let mut rest: Vec<usize> = (1..m).collect();
    let mut failing = Vec::new();
    let mut tested = 0;
    loop {
        let mut alpha = rest.clone();
        alpha.push(m);
        tested += 1;
        if weighted_root_sum(c.weights(), &alpha, n, m).norm() < tol {
            failing.push(alpha);
        }
        if !next_permutation(&mut rest) {
            break;
        }
    }
    Ok(RegularityCheck {
        regular: failing.is_empty(),
        failing,
        tested,
    })
}

/// Regularity of the deformed problem for `n > m`: points `α ∈ Sym_n` with
/// `α_1 = n` where `sum_{j<=m} n_j ξ_n^(m α_j)` vanishes. The cycle passes when
/// only the unavoidable points (counted by [`infinity_point_count`]) fail.
pub fn deformed_regularity(c: &Cycle, n: usize) -> Result<RegularityCheck> {
    let m = c.len();
    if n <= m {
        return Err(Error::Domain(format!("deformed regularity needs n > m, got m={m}, n={n}")));
    }
    if n > MAX_CYCLE_LEN {
        return Err(Error::FiberTooLarge {
            degree: n,
            max: MAX_CYCLE_LEN,
        });
    }
    let tol = 1e-9 * c.l1() as f64;
    let free = factorial(n - m) as usize;
    let mut failing = Vec::new();
    let mut tested = 0;
    // Injections of coordinates 2..=m into 1..n-1; coordinate 1 is pinned to n.
    let mut pick = vec![0usize; m - 1];
    fn rec(
        depth: usize,
        pick: &mut Vec<usize>,
        used: &mut Vec<bool>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if depth == pick.len() {
            visit(pick);
            return;
        }
        for v in 1..used.len() {
            if !used[v] {
                used[v] = true;
                pick[depth] = v;
                rec(depth + 1, pick, used, visit);
                used[v] = false;
            }
        }
    }
    let mut used = vec![false; n];
    let mut visit = |p: &[usize]| {
        let mut alpha = vec![n];
        alpha.extend_from_slice(p);
        tested += free;
        if weighted_root_sum(c.weights(), &alpha, m, n).norm() < tol {
            failing.push(alpha);
        }
    };
    rec(0, &mut pick, &mut used, &mut visit);
    let unavoidable = infinity_point_count(m, n) as usize;
    Ok(RegularityCheck {
        regular: failing.len() * free == unavoidable,
        failing,
        tested,
    })
}

/// Genericity data attached to every count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenericityCertificate {
    pub n: usize,
    pub is_simple: bool,
    pub is_asymmetric: bool,
    pub symmetry_order: usize,
    pub regular_at_infinity: bool,
    pub failing_points: Vec<Vec<usize>>,
    pub points_tested: usize,
}

impl GenericityCertificate {
    /// Asymmetric and regular; for `m = 2` regularity alone.
    pub fn passes(&self, m: usize) -> bool {
        self.regular_at_infinity && (m == 2 || self.is_asymmetric)
    }
}

/// Certificate for degree `n` against the tangential test.
pub fn certify(c: &Cycle, n: usize) -> Result<GenericityCertificate> {
    let h = symmetry_group(c)?;
    let r = regular_at_infinity(c, n)?;
    Ok(GenericityCertificate {
        n,
        is_simple: c.is_simple(),
        is_asymmetric: h.order() == 1,
        symmetry_order: h.order(),
        regular_at_infinity: r.regular,
        failing_points: r.failing,
        points_tested: r.tested,
    })
}

/// Certificate for the deformed problem with `deg g = n > m`.
pub fn certify_deformed(c: &Cycle, n: usize) -> Result<GenericityCertificate> {
    let h = symmetry_group(c)?;
    let r = deformed_regularity(c, n)?;
    Ok(GenericityCertificate {
        n,
        is_simple: c.is_simple(),
        is_asymmetric: h.order() == 1,
        symmetry_order: h.order(),
        regular_at_infinity: r.regular,
        failing_points: r.failing,
        points_tested: r.tested,
    })
}

fn check_mn(m: usize, n: usize) {
    assert!(m >= 2 && n >= 1, "bounds need m >= 2 and n >= 1 (got m={m}, n={n})");
}

/// Maximal number of zeros of the abelian integral for generic data.
pub fn bound_tangential(m: usize, n: usize) -> u128 {
    check_mn(m, n);
    if m == 2 {
        return ((n - 1) / 2) as u128;
    }
    let fm = factorial(m - 1);
    if n.is_multiple_of(m) {
        (n as u128 - 1) * fm
    } else {
        n as u128 * fm
    }
}

/// Maximal number of zeros of the displacement for small generic `ε`.
pub fn bound_infinitesimal(m: usize, n: usize) -> u128 {
    check_mn(m, n);
    if m == 2 {
        return ((n - 1) / 2) as u128;
    }
    if n < m {
        return n as u128 * factorial(m - 1);
    }
    let main = m as u128 * factorial(n - 1) / factorial(n - m);
    if n.is_multiple_of(m) {
        main - factorial(m - 1)
    } else {
        main
    }
}

/// `((n-1)(m-1) - (gcd(m,n) - 1)) / 2`, the bound for simple cycles.
pub fn bound_simple(m: usize, n: usize) -> Result<u128> {
    check_mn(m, n);
    let d = m.gcd(&n);
    let num = (n - 1) * (m - 1) + 1 - d;
    if !num.is_multiple_of(2) {
        return Err(Error::NonIntegerBound { m, n });
    }
    Ok((num / 2) as u128)
}

/// Points at infinity of the deformed problem that no cycle can avoid.
pub fn infinity_point_count(m: usize, n: usize) -> u128 {
    check_mn(m, n);
    if !n.is_multiple_of(m) {
        0
    } else if m == 2 {
        factorial(n - 2)
    } else {
        factorial(m - 1) * factorial(n.saturating_sub(m))
    }
}

pub const GENERIC_DRAW_CAP: usize = 10_000;

/// Deterministic rejection sampling of weights in `[-9, 9]` until `accept`
/// holds.
pub fn random_cycle_where<F>(m: usize, rng: &mut ChaCha8Rng, mut accept: F) -> Option<Cycle>
where
    F: FnMut(&Cycle) -> bool,
{
    for _ in 0..GENERIC_DRAW_CAP {
        let mut w: Vec<i64> = (0..m - 1).map(|_| rng.gen_range(-9..=9)).collect();
        let last = -w.iter().sum::<i64>();
        if last.abs() > 9 {
            continue;
        }
        w.push(last);
        if let Ok(c) = Cycle::new(w) {
            if accept(&c) {
                return Some(c);
            }
        }
    }
    None
}

/// A seeded random cycle that is asymmetric and regular at infinity for `n`.
pub fn random_generic_cycle(m: usize, n: usize, seed: u64) -> Result<Cycle> {
    if !(2..=MAX_CYCLE_LEN).contains(&m) {
        return Err(Error::Domain(format!("cycle length {m} outside 2..={MAX_CYCLE_LEN}")));
    }
    let fail = Error::GenericCycleNotFound {
        m,
        n,
        tries: GENERIC_DRAW_CAP,
    };
    if m == 2 || n.is_multiple_of(m) {
        return Err(fail);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_cycle_where(m, &mut rng, |c| {
        certify(c, n).map(|k| k.passes(m)).unwrap_or(false)
    })
    .ok_or(fail)
}

/// Distinct weight arrangements modulo the symmetry group, and whether the
/// product over them changes sign under a transposition.
#[derive(Debug, Clone)]
pub struct Arrangements {
    pub reps: Vec<Vec<i64>>,
    /// Order of the stabiliser of the weight vector up to sign in `Sym_N`.
    pub stabilizer_order: u128,
    pub antisymmetric: bool,
}

pub fn arrangements(weights: &[i64]) -> Arrangements {
    let n = weights.len();
    let mut v = weights.to_vec();
    v.sort_unstable();
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    let mut reps = Vec::new();
    loop {
        let neg: Vec<i64> = v.iter().map(|x| -x).collect();
        if !seen.contains(&neg) {
            seen.insert(v.clone());
            reps.push(v.clone());
        }
        if !next_permutation(&mut v) {
            break;
        }
    }
    let mut flips = 0usize;
    for a in &reps {
        let mut b = a.clone();
        b.swap(0, 1);
        if !seen.contains(&b) {
            flips += 1;
        }
    }
    Arrangements {
        stabilizer_order: factorial(n) / reps.len() as u128,
        antisymmetric: flips % 2 == 1,
        reps,
    }
}
