//! Banded Gaussian elimination with partial pivoting, for the per-mode and
//! mean-mode systems of the cylinder solver.

use std::ops::{Add, Div, Mul, Neg, Sub};

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }

    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Square matrix with `kl` sub- and `ku` super-diagonals. Each row keeps
/// `kl` extra columns on the right for pivoting fill-in.
#[derive(Debug, Clone)]
pub struct BandedMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandedMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![T::zero(); n * width],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if j + self.kl < i || j > i + self.kl + self.ku {
            T::zero()
        } else {
            self.data[self.offset(i, j)]
        }
    }

    /// Panics when `(i, j)` lies outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let k = self.offset(i, j);
        self.data[k] = self.data[k] + v;
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).fold(T::zero(), |acc, j| acc + self.get(i, j) * x[j])
            })
            .collect()
    }

    /// Solves `A x = rhs`, consuming the matrix.
    pub fn solve(mut self, rhs: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        let mut b = rhs.to_vec();
        let reach = self.kl + self.ku;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + reach).min(n - 1);
            let mut pivot = k;
            let mut best = self.get(k, k).modulus();
            for i in k + 1..=last_row {
                let v = self.get(i, k).modulus();
                if v > best {
                    best = v;
                    pivot = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularBanded { column: k });
            }
            if pivot != k {
                for j in k..=last_col {
                    let (a, c) = (self.offset(k, j), self.offset(pivot, j));
                    self.data.swap(a, c);
                }
                b.swap(k, pivot);
            }
            let diag = self.get(k, k);
            for i in k + 1..=last_row {
                let factor = self.get(i, k) / diag;
                if factor.modulus() == 0.0 {
                    continue;
                }
                for j in k..=last_col {
                    let upper = self.data[self.offset(k, j)];
                    let o = self.offset(i, j);
                    self.data[o] = self.data[o] - factor * upper;
                }
                b[i] = b[i] - factor * b[k];
            }
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let last_col = (i + reach).min(n - 1);
            let mut acc = b[i];
            for j in i + 1..=last_col {
                acc = acc - self.data[self.offset(i, j)] * x[j];
            }
            x[i] = acc / self.data[self.offset(i, i)];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_diagonal_needs_pivoting() {
        // [[0, 1], [1, 0]] x = [2, 3]
        let mut a = BandedMatrix::<f64>::zeros(2, 1, 1);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        let x = a.solve(&[2.0, 3.0]).unwrap();
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn random_banded_complex_system_multiplies_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n, kl, ku) = (40, 2, 3);
        let mut a = BandedMatrix::<Complex64>::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                a.add(i, j, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            }
        }
        let rhs: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0))
            .collect();
        let x = a.clone().solve(&rhs).unwrap();
        let back = a.apply(&x);
        for (p, q) in back.iter().zip(&rhs) {
            assert!((p - q).norm() < 1e-9);
        }
    }

    #[test]
    fn singular_system_is_reported() {
        let a = BandedMatrix::<f64>::zeros(3, 1, 1);
        assert!(matches!(a.solve(&[1.0, 1.0, 1.0]), Err(Error::SingularBanded { .. })));
    }
}
