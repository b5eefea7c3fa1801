//! Truncated formal power series over f64 with the operations the
//! coefficient pipelines need: ring arithmetic, exp, composition,
//! reciprocal, and real powers.

use crate::{Error, Result};

/// Coefficient vector `c[k]` of `Σ c[k] u^k`, truncated at `order = len − 1`.
/// Binary operations truncate to the smaller of the two operand orders.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    c: Vec<f64>,
}

impl TruncatedSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty());
        TruncatedSeries { c: coeffs }
    }

    pub fn zero(order: usize) -> Self {
        TruncatedSeries {
            c: vec![0.0; order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = 1.0;
        TruncatedSeries { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.c.get(k).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn truncate(mut self, order: usize) -> Self {
        self.c.truncate(order + 1);
        self
    }

    pub fn add(&self, other: &TruncatedSeries) -> TruncatedSeries {
        let n = self.order().min(other.order());
        TruncatedSeries {
            c: (0..=n).map(|k| self.c[k] + other.c[k]).collect(),
        }
    }

    pub fn sub(&self, other: &TruncatedSeries) -> TruncatedSeries {
        let n = self.order().min(other.order());
        TruncatedSeries {
            c: (0..=n).map(|k| self.c[k] - other.c[k]).collect(),
        }
    }

    pub fn scale(&self, f: f64) -> TruncatedSeries {
        TruncatedSeries {
            c: self.c.iter().map(|x| x * f).collect(),
        }
    }

    pub fn mul(&self, other: &TruncatedSeries) -> TruncatedSeries {
        let n = self.order().min(other.order());
        let mut c = vec![0.0; n + 1];
        for i in 0..=n {
            if self.c[i] == 0.0 {
                continue;
            }
            for j in 0..=(n - i) {
                c[i + j] += self.c[i] * other.c[j];
            }
        }
        TruncatedSeries { c }
    }

    /// exp of the series; the constant term may be arbitrary.
    /// Uses the recurrence n g_n = Σ_{k=1..n} k f_k g_{n−k}.
    pub fn exp(&self) -> TruncatedSeries {
        let n = self.order();
        let mut g = vec![0.0; n + 1];
        g[0] = self.c[0].exp();
        for m in 1..=n {
            let mut acc = 0.0;
            for k in 1..=m {
                acc += k as f64 * self.c[k] * g[m - k];
            }
            g[m] = acc / m as f64;
        }
        TruncatedSeries { c: g }
    }

    /// Composition self(inner); the inner series must have zero constant term.
    pub fn compose(&self, inner: &TruncatedSeries) -> Result<TruncatedSeries> {
        if inner.c[0] != 0.0 {
            return Err(Error::domain(
                "compose: inner series must have zero constant term",
            ));
        }
        let n = self.order().min(inner.order());
        // Horner over truncated series.
        let mut acc = TruncatedSeries::zero(n);
        let inner = inner.clone().truncate(n);
        for k in (0..=self.order().min(n)).rev() {
            acc = acc.mul(&inner);
            acc.c[0] += self.c[k];
        }
        Ok(acc)
    }

    /// Multiplicative inverse; needs a nonzero constant term.
    pub fn reciprocal(&self) -> Result<TruncatedSeries> {
        if self.c[0] == 0.0 {
            return Err(Error::domain(
                "reciprocal: series has zero constant term",
            ));
        }
        let n = self.order();
        let mut r = vec![0.0; n + 1];
        r[0] = 1.0 / self.c[0];
        for m in 1..=n {
            let mut acc = 0.0;
            for k in 1..=m {
                acc += self.c[k] * r[m - k];
            }
            r[m] = -acc / self.c[0];
        }
        Ok(TruncatedSeries { c: r })
    }

    /// Real power of a series with positive constant term
    /// (J.C.P. Miller recurrence).
    pub fn real_pow(&self, alpha: f64) -> Result<TruncatedSeries> {
        if self.c[0] <= 0.0 {
            return Err(Error::domain(
                "real_pow: series needs a positive constant term",
            ));
        }
        let n = self.order();
        let mut p = vec![0.0; n + 1];
        p[0] = self.c[0].powf(alpha);
        for m in 1..=n {
            let mut acc = 0.0;
            for k in 1..=m {
                acc += ((alpha + 1.0) * k as f64 - m as f64) * self.c[k] * p[m - k];
            }
            p[m] = acc / (m as f64 * self.c[0]);
        }
        Ok(TruncatedSeries { c: p })
    }

    /// Evaluate at a point (plain Horner on the truncation).
    pub fn eval(&self, u: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &ck| acc * u + ck)
    }
}
