//! Abelian integrals on zero-cycles, the displacement of the deformation
//! `f + εg`, degree reduction, and Brieskorn-modulus data.

use crate::cycle::Cycle;
use crate::error::{Error, Result};
use crate::fiber::{solve_fiber, Fiber, FiberMap};
use crate::linalg::complex_kernel_vector;
use crate::perm::Permutation;
use crate::poly::{format_rational, int, parse_rational, ComplexPoly, RatPoly, RootOptions};
use crate::precision::{rational_to_f64, C64};
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

/// `f`, `g`, the cycle on the fiber of `f`, and an optional `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub f: RatPoly,
    pub g: RatPoly,
    pub cycle: Cycle,
    pub epsilon: Option<BigRational>,
}

impl Instance {
    pub fn new(f: RatPoly, g: RatPoly, cycle: Cycle, epsilon: Option<BigRational>) -> Result<Self> {
        let m = f.degree().ok_or(Error::ZeroPolynomial)?;
        if m < 2 {
            return Err(Error::Domain(format!("deg f must be at least 2, got {m}")));
        }
        let n = g.degree().ok_or(Error::ZeroPolynomial)?;
        if n < 1 {
            return Err(Error::Domain("g must be nonconstant".into()));
        }
        if cycle.len() != m {
            return Err(Error::LengthMismatch {
                weights: cycle.len(),
                fiber: m,
            });
        }
        Ok(Instance {
            f,
            g,
            cycle,
            epsilon,
        })
    }

    pub fn m(&self) -> usize {
        self.f.degree().unwrap_or(0)
    }

    pub fn n(&self) -> usize {
        self.g.degree().unwrap_or(0)
    }

    /// Leading coefficient absorbed when `f` is made monic for fiber work.
    pub fn normalization(&self) -> BigRational {
        self.f.leading().cloned().unwrap_or_else(BigRational::zero)
    }

    /// `f + εg` with exact `ε`.
    pub fn deformed(&self) -> Result<RatPoly> {
        let e = self
            .epsilon
            .as_ref()
            .ok_or_else(|| Error::Precondition("epsilon is not set".into()))?;
        Ok(&self.f + &self.g.scale(e))
    }

    pub fn with_epsilon(&self, e: Option<BigRational>) -> Self {
        Instance {
            epsilon: e,
            ..self.clone()
        }
    }
}

/// A rational written as `"p/q"`, a decimal string or a bare integer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RationalField {
    Text(String),
    Int(i64),
}

impl RationalField {
    pub fn value(&self) -> Result<BigRational> {
        match self {
            RationalField::Text(s) => parse_rational(s),
            RationalField::Int(i) => Ok(int(*i)),
        }
    }

    pub fn of(q: &BigRational) -> Self {
        RationalField::Text(format_rational(q))
    }
}

/// On-disk instance: coefficients ascending by degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub f: Vec<RationalField>,
    pub g: Vec<RationalField>,
    pub cycle: Vec<i64>,
    #[serde(default)]
    pub epsilon: Option<RationalField>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub precision_bits: Option<u32>,
}

impl InstanceFile {
    pub fn parse(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_instance(&self) -> Result<Instance> {
        let poly = |v: &[RationalField]| {
            v.iter()
                .map(RationalField::value)
                .collect::<Result<Vec<_>>>()
                .map(RatPoly::new)
        };
        let epsilon = self.epsilon.as_ref().map(RationalField::value).transpose()?;
        Instance::new(
            poly(&self.f)?,
            poly(&self.g)?,
            Cycle::new(self.cycle.clone())?,
            epsilon,
        )
    }

    pub fn from_instance(inst: &Instance, seed: Option<u64>, precision_bits: Option<u32>) -> Self {
        let poly = |p: &RatPoly| p.coeffs().iter().map(RationalField::of).collect();
        InstanceFile {
            f: poly(&inst.f),
            g: poly(&inst.g),
            cycle: inst.cycle.weights().to_vec(),
            epsilon: inst.epsilon.as_ref().map(RationalField::of),
            seed,
            precision_bits,
        }
    }
}

/// `sum_j w_j h(z_j)` over the ordered fiber; weights are zero-padded.
pub fn abelian_integral(fiber: &Fiber, weights: &[i64], h: &RatPoly) -> Result<C64> {
    if weights.len() > fiber.roots.len() {
        return Err(Error::LengthMismatch {
            weights: weights.len(),
            fiber: fiber.roots.len(),
        });
    }
    Ok(weights
        .iter()
        .zip(&fiber.roots)
        .map(|(&w, &z)| h.eval_c64(z) * w as f64)
        .sum())
}

/// First Melnikov function `M₁(t) = -sum_j n_j g(z_j(t))` on the given branch.
pub fn melnikov_first(fiber: &Fiber, c: &Cycle, g: &RatPoly) -> Result<C64> {
    abelian_integral(fiber, c.weights(), g).map(|v| -v)
}

pub const TOL_IDENTITY: f64 = 1e-9;

/// `Δ = sum_j n_j f(w_j)` on a fiber of `f + εg`, checked against the exact
/// identity `Δ = -ε sum_j n_j g(w_j)`.
pub fn displacement(inst: &Instance, fiber: &Fiber) -> Result<C64> {
    let eps = inst
        .epsilon
        .as_ref()
        .ok_or_else(|| Error::Precondition("displacement needs epsilon".into()))?;
    if eps.is_zero() {
        return Ok(C64::new(0.0, 0.0));
    }
    let w = inst.cycle.padded(fiber.roots.len())?;
    let e = rational_to_f64(eps);
    let mut delta = C64::new(0.0, 0.0);
    let mut via_g = C64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (&n, &z) in w.iter().zip(&fiber.roots) {
        let (fz, gz) = (inst.f.eval_c64(z), inst.g.eval_c64(z));
        delta += fz * n as f64;
        via_g += gz * n as f64;
        scale += n.abs() as f64 * (fz.norm() + e.abs() * gz.norm());
    }
    let err = (delta + via_g * e).norm();
    if err > TOL_IDENTITY * (1.0 + scale) {
        return Err(Error::IdentityViolation(err / (1.0 + scale)));
    }
    Ok(delta)
}

/// `g = sum a_i f^(k_i) + g̃` with `deg g̃` not a multiple of `deg f`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub reduced: RatPoly,
    pub subtracted: Vec<(BigRational, usize)>,
}

pub fn reduce_deformation(f: &RatPoly, g: &RatPoly) -> Result<Reduction> {
    let m = f.degree().ok_or(Error::ZeroPolynomial)?;
    if m < 2 {
        return Err(Error::Domain(format!("deg f must be at least 2, got {m}")));
    }
    let lead = f.leading().expect("nonzero").clone();
    let mut r = g.clone();
    let mut subtracted = Vec::new();
    while let Some(d) = r.degree() {
        if d % m != 0 {
            break;
        }
        let k = d / m;
        let a = r.leading().expect("nonzero") / num_traits::pow(lead.clone(), k);
        r = &r - &f.pow(k).scale(&a);
        subtracted.push((a, k));
    }
    Ok(Reduction {
        reduced: r,
        subtracted,
    })
}

pub fn brieskorn_dimension(m: usize, n: usize) -> usize {
    n - n / m
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrieskornBasis {
    pub generators: Vec<RatPoly>,
    /// `(i, j)` for the generator `f^i z^j`.
    pub exponents: Vec<(usize, usize)>,
    pub dimension: usize,
}

/// `f^i z^j` for `0 <= i < ℓ, 1 <= j < m`, then `f^ℓ z^j` for `1 <= j <= r`,
/// where `n = ℓm + r`.
pub fn brieskorn_generators(f: &RatPoly, n: usize) -> Result<BrieskornBasis> {
    let m = f.degree().ok_or(Error::ZeroPolynomial)?;
    if m < 2 || n < 1 {
        return Err(Error::Domain(format!("need m >= 2 and n >= 1, got m={m}, n={n}")));
    }
    let (l, r) = (n / m, n % m);
    let mut exponents: Vec<(usize, usize)> = (0..l)
        .flat_map(|i| (1..m).map(move |j| (i, j)))
        .collect();
    exponents.extend((1..=r).map(|j| (l, j)));
    let generators = exponents
        .iter()
        .map(|&(i, j)| &f.pow(i) * &RatPoly::monomial(int(1), j))
        .collect();
    Ok(BrieskornBasis {
        generators,
        dimension: exponents.len(),
        exponents,
    })
}

#[derive(Debug, Clone)]
pub struct DesignedG {
    pub g: ComplexPoly,
    /// Coefficients on the Brieskorn generators, unit norm.
    pub coefficients: Vec<C64>,
    pub basis: BrieskornBasis,
    /// `|M₁(t_i)|` at each target, recomputed from fresh fibers.
    pub residuals: Vec<f64>,
}

pub const TOL_DESIGN: f64 = 1e-9;

/// A deformation `g` of degree at most `n` whose abelian integral vanishes at
/// every target on the chosen branch: root `k` of the lexicographic fiber
/// carries weight `n_j` when `branch(j) = k` (identity if `None`).
pub fn design_g_with_zeros(
    f: &RatPoly,
    c: &Cycle,
    n: usize,
    targets: &[C64],
    branch: Option<&Permutation>,
    opts: &RootOptions,
) -> Result<DesignedG> {
    let basis = brieskorn_generators(f, n)?;
    let dim = basis.dimension;
    if targets.len() + 1 > dim {
        return Err(Error::SingularDesignSystem(format!(
            "{} targets need at least {} generators, have {dim}",
            targets.len(),
            targets.len() + 1
        )));
    }
    for (i, a) in targets.iter().enumerate() {
        if targets[..i].iter().any(|b| (a - b).norm() <= 1e-12 * (1.0 + a.norm())) {
            return Err(Error::Precondition("targets must be distinct".into()));
        }
    }
    let map = FiberMap::new(f, opts)?;
    if c.len() != map.degree() {
        return Err(Error::LengthMismatch {
            weights: c.len(),
            fiber: map.degree(),
        });
    }
    let weights = match branch {
        Some(p) => p.act(c.weights()),
        None => c.weights().to_vec(),
    };
    let rows: Vec<Vec<C64>> = targets
        .iter()
        .map(|&t| {
            let fb = solve_fiber(&map, t)?;
            basis
                .generators
                .iter()
                .map(|b| abelian_integral(&fb, &weights, b))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let coefficients = if rows.is_empty() {
        let mut e = vec![C64::new(0.0, 0.0); dim];
        e[0] = C64::new(1.0, 0.0);
        e
    } else {
        complex_kernel_vector(&rows, dim, 1e-10)?
    };
    let mut g = vec![C64::new(0.0, 0.0); n + 1];
    for (ck, b) in coefficients.iter().zip(&basis.generators) {
        for (k, a) in b.coeffs().iter().enumerate() {
            g[k] += ck * rational_to_f64(a);
        }
    }
    let g = ComplexPoly::new(g);
    let residuals = targets
        .iter()
        .map(|&t| {
            let fb = solve_fiber(&map, t)?;
            Ok(weights
                .iter()
                .zip(&fb.roots)
                .map(|(&w, &z)| g.eval(z) * w as f64)
                .sum::<C64>()
                .norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    if let Some(worst) = residuals.iter().copied().reduce(f64::max) {
        if worst > TOL_DESIGN {
            return Err(Error::SingularDesignSystem(format!(
                "residual {worst:.3e} exceeds {TOL_DESIGN:e}"
            )));
        }
    }
    Ok(DesignedG {
        g,
        coefficients,
        basis,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    #[test]
    fn reduction_examples() {
        let f = RatPoly::from_ints(&[0, 0, 1]);
        let r = reduce_deformation(&f, &RatPoly::from_ints(&[0, 1, 1])).unwrap();
        assert_eq!(r.reduced, RatPoly::from_ints(&[0, 1]));
        assert_eq!(r.subtracted, vec![(int(1), 1)]);
        let r = reduce_deformation(&f, &RatPoly::from_ints(&[0, 0, 1, 0, 1])).unwrap();
        assert!(r.reduced.is_zero());
        assert_eq!(r.subtracted, vec![(int(1), 2), (int(1), 1)]);
        let g = RatPoly::from_ints(&[1, 2, 3, 4]);
        let cubic = RatPoly::from_ints(&[0, 1, 0, 0, 2]);
        let r = reduce_deformation(&cubic, &g).unwrap();
        assert_eq!(r.reduced, g);
        assert!(r.subtracted.is_empty());
        // Non-monic f: 2z^2 - 1, g = z^4 -> g - f^2/4 = z^2 - 1/4 -> ... -> constant removed.
        let f2 = RatPoly::from_ints(&[-1, 0, 2]);
        let r = reduce_deformation(&f2, &RatPoly::from_ints(&[0, 0, 0, 0, 1])).unwrap();
        assert!(r.reduced.is_zero());
        assert_eq!(r.subtracted[0], (rat(1, 4), 2));
    }

    #[test]
    fn integral_on_square_root_fiber() {
        let fb = Fiber {
            t: C64::new(1.0, 0.0),
            roots: vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)],
            basepoint: C64::new(1.0, 0.0),
        };
        let c = Cycle::simple();
        let v = abelian_integral(&fb, c.weights(), &RatPoly::from_ints(&[0, 0, 0, 1])).unwrap();
        assert_eq!(v, C64::new(2.0, 0.0));
        assert_eq!(melnikov_first(&fb, &c, &RatPoly::from_ints(&[0, 0, 0, 1])).unwrap(), C64::new(-2.0, 0.0));
        let even = abelian_integral(&fb, c.weights(), &RatPoly::from_ints(&[0, 0, 1])).unwrap();
        assert_eq!(even, C64::new(0.0, 0.0));
        assert!(abelian_integral(&fb, &[1, -1, 0], &RatPoly::from_ints(&[0, 1])).is_err());
    }

    #[test]
    fn brieskorn_enumeration() {
        let f = RatPoly::from_ints(&[0, 0, 1, 1]);
        let b = brieskorn_generators(&f, 4).unwrap();
        assert_eq!(b.dimension, 3);
        assert_eq!(b.exponents, vec![(0, 1), (0, 2), (1, 1)]);
        assert_eq!(b.generators[2], RatPoly::from_ints(&[0, 0, 0, 1, 1]));
        assert_eq!(brieskorn_dimension(2, 5), 3);
        assert_eq!(brieskorn_dimension(5, 3), 3);
    }

    #[test]
    fn instance_file_is_strict() {
        let ok = r#"{"f": ["0","0","1","1"], "g": [0, 1, 3], "cycle": [1,1,-2], "epsilon": "1/100", "seed": 3, "precision_bits": null}"#;
        let inst = InstanceFile::parse(ok).unwrap().to_instance().unwrap();
        assert_eq!(inst.epsilon, Some(rat(1, 100)));
        let typo = r#"{"f": ["0","0","1"], "g": ["1"], "cycle": [1,-1], "epsilom": "1/2"}"#;
        assert!(InstanceFile::parse(typo).is_err());
        let back = InstanceFile::from_instance(&inst, Some(3), None);
        assert_eq!(back.to_instance().unwrap(), inst);
    }
}
