//! Small exact and floating linear algebra kernels.

use crate::error::{Error, Result};
use crate::precision::C64;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

/// Incremental row echelon basis over ℚ, kept fraction-free.
#[derive(Debug, Default, Clone)]
pub struct IntegerRowSpace {
    rows: Vec<(usize, Vec<BigInt>)>,
}

impl IntegerRowSpace {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Adds `v` to the span; true if the rank grew.
    pub fn insert(&mut self, v: &[i64]) -> bool {
        let mut v: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
        for (p, row) in &self.rows {
            if v[*p].is_zero() {
                continue;
            }
            let (a, b) = (row[*p].clone(), v[*p].clone());
            for (x, r) in v.iter_mut().zip(row) {
                *x = &a * &*x - &b * r;
            }
            normalize(&mut v);
        }
        match v.iter().position(|x| !x.is_zero()) {
            Some(p) => {
                self.rows.push((p, v));
                true
            }
            None => false,
        }
    }
}

fn normalize(v: &mut [BigInt]) {
    let g = v.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if !g.is_zero() && g.abs() != BigInt::from(1) {
        for x in v.iter_mut() {
            *x = &*x / &g;
        }
    }
}

pub fn integer_rank<'a, I: IntoIterator<Item = &'a [i64]>>(rows: I) -> usize {
    let mut s = IntegerRowSpace::default();
    for r in rows {
        s.insert(r);
    }
    s.rank()
}

/// A unit vector spanning the kernel of the `rows × cols` matrix `a`
/// (row-major), which must have full row rank `rows < cols`.
pub fn complex_kernel_vector(a: &[Vec<C64>], cols: usize, rel_tol: f64) -> Result<Vec<C64>> {
    let rows = a.len();
    if rows >= cols {
        return Err(Error::SingularDesignSystem(format!(
            "{rows} conditions leave no freedom among {cols} generators"
        )));
    }
    let mut m: Vec<Vec<C64>> = a.to_vec();
    let scale = m
        .iter()
        .flat_map(|r| r.iter().map(|x| x.norm()))
        .fold(0.0, f64::max);
    if rows > 0 && scale == 0.0 {
        return Err(Error::SingularDesignSystem("all conditions vanish".into()));
    }
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    let mut col_order: Vec<usize> = (0..cols).collect();
    for step in 0..rows {
        // Full pivoting over the remaining block.
        let mut best = (0.0, step, step);
        for i in step..rows {
            for (jj, &j) in col_order.iter().enumerate().skip(step) {
                let v = m[i][j].norm();
                if v > best.0 {
                    best = (v, i, jj);
                }
            }
        }
        if best.0 <= rel_tol * scale {
            return Err(Error::SingularDesignSystem(format!(
                "conditions are dependent (pivot {:.3e} at step {step})",
                best.0
            )));
        }
        m.swap(step, best.1);
        col_order.swap(step, best.2);
        let pc = col_order[step];
        let piv = m[step][pc];
        for j in 0..cols {
            m[step][j] /= piv;
        }
        for i in 0..rows {
            if i != step {
                let f = m[i][pc];
                if f.norm() != 0.0 {
                    for j in 0..cols {
                        let d = f * m[step][j];
                        m[i][j] -= d;
                    }
                }
            }
        }
        pivot_cols.push(pc);
        r += 1;
    }
    let free = col_order[r];
    let mut x = vec![C64::new(0.0, 0.0); cols];
    x[free] = C64::new(1.0, 0.0);
    for (i, &pc) in pivot_cols.iter().enumerate() {
        x[pc] = -m[i][free];
    }
    let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    Ok(x.into_iter().map(|v| v / norm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_rank() {
        let rows: Vec<Vec<i64>> = vec![vec![1, -1, 0], vec![0, 1, -1], vec![1, 0, -1], vec![2, -2, 0]];
        assert_eq!(integer_rank(rows.iter().map(|r| r.as_slice())), 2);
        let big: Vec<Vec<i64>> = vec![vec![i64::MAX / 3, 1], vec![i64::MAX / 3 - 1, 1]];
        assert_eq!(integer_rank(big.iter().map(|r| r.as_slice())), 2);
    }

    #[test]
    fn kernel_of_wide_system() {
        let c = |x: f64| C64::new(x, 0.0);
        let a = vec![vec![c(1.0), c(2.0), c(3.0)], vec![c(0.0), c(1.0), C64::new(0.0, 1.0)]];
        let x = complex_kernel_vector(&a, 3, 1e-12).unwrap();
        for row in &a {
            let r: C64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!(r.norm() < 1e-14);
        }
        assert!(complex_kernel_vector(&[vec![c(1.0), c(2.0)], vec![c(2.0), c(4.0)]], 2, 1e-12).is_err());
        let dep = vec![vec![c(1.0), c(2.0), c(0.0)], vec![c(2.0), c(4.0), c(0.0)]];
        assert!(complex_kernel_vector(&dep, 3, 1e-12).is_err());
    }
}
