//! 2x2 matrices over a generic scalar, enough for the two-phase QBD blocks.

use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2<T> {
    pub m: [[T; 2]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row2<T>(pub [T; 2]);

impl<T: Scalar> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Mat2 {
            m: [[a, b], [c, d]],
        }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn identity() -> Self {
        Self::diag(T::one(), T::one())
    }

    pub fn diag(a: T, d: T) -> Self {
        Self::new(a, T::zero(), T::zero(), d)
    }

    pub fn scale(self, s: T) -> Self {
        let [[a, b], [c, d]] = self.m;
        Self::new(a * s, b * s, c * s, d * s)
    }

    pub fn det(&self) -> T {
        let [[a, b], [c, d]] = self.m;
        a * d - b * c
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == T::zero() {
            return None;
        }
        let [[a, b], [c, d]] = self.m;
        Some(Self::new(
            d / det,
            T::zero() - b / det,
            T::zero() - c / det,
            a / det,
        ))
    }

    /// Row sums, i.e. `M · 1`.
    pub fn row_sums(&self) -> [T; 2] {
        [self.m[0][0] + self.m[0][1], self.m[1][0] + self.m[1][1]]
    }
}

impl<T: Real> Mat2<T> {
    pub fn max_abs(&self) -> T {
        self.m
            .iter()
            .flatten()
            .fold(T::zero(), |acc, x| acc.max(x.abs()))
    }
}

impl<T: Scalar> Add for Mat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = self.m[i][j] + o.m[i][j];
            }
        }
        out
    }
}

impl<T: Scalar> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = self.m[i][j] - o.m[i][j];
            }
        }
        out
    }
}

impl<T: Scalar> Neg for Mat2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Mat2::zero() - self
    }
}

impl<T: Scalar> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = Mat2::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j];
            }
        }
        out
    }
}

impl<T: Scalar> Row2<T> {
    pub fn sum(&self) -> T {
        self.0[0] + self.0[1]
    }

    pub fn scale(self, s: T) -> Self {
        Row2([self.0[0] * s, self.0[1] * s])
    }
}

impl<T: Scalar> Mul<Mat2<T>> for Row2<T> {
    type Output = Row2<T>;
    fn mul(self, m: Mat2<T>) -> Row2<T> {
        let [x, y] = self.0;
        Row2([x * m.m[0][0] + y * m.m[1][0], x * m.m[0][1] + y * m.m[1][1]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn exact_inverse() {
        let q = |n, d| Ratio::<i128>::new(n, d);
        let m = Mat2::new(q(2, 1), q(1, 3), q(-1, 2), q(5, 1));
        let inv = m.inverse().unwrap();
        assert_eq!(m * inv, Mat2::identity());
        assert!(Mat2::new(q(1, 1), q(2, 1), q(2, 1), q(4, 1))
            .inverse()
            .is_none());
        assert_eq!(Row2([q(1, 1), q(1, 1)]) * m, Row2([q(3, 2), q(16, 3)]));
    }
}
