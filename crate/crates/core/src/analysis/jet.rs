//! Truncated Taylor series `Σ cₘ tᵐ`, `m ≤ M`, around a fixed point.

use std::ops::{Add, Mul};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    /// `c[m] = f⁽ᵐ⁾(s) / m!`.
    pub c: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = value;
        Self { c }
    }

    /// The identity `t ↦ s + t`.
    pub fn variable(s: f64, order: usize) -> Self {
        let mut j = Self::constant(s, order);
        if order >= 1 {
            j.c[1] = 1.0;
        }
        j
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `m`-th derivative at the expansion point.
    pub fn derivative(&self, m: usize) -> f64 {
        let fact: f64 = (1..=m).map(|i| i as f64).product();
        self.c[m] * fact
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            c: self.c.iter().map(|x| x * k).collect(),
        }
    }

    pub fn add_const(&self, k: f64) -> Self {
        let mut j = self.clone();
        j.c[0] += k;
        j
    }

    /// `1 / f`; needs `f(s) ≠ 0`.
    pub fn recip(&self) -> Self {
        let m = self.order();
        let a0 = self.c[0];
        let mut r = vec![0.0; m + 1];
        r[0] = 1.0 / a0;
        for n in 1..=m {
            let s: f64 = (1..=n).map(|k| self.c[k] * r[n - k]).sum();
            r[n] = -s / a0;
        }
        Self { c: r }
    }

    pub fn exp(&self) -> Self {
        // e' = f' e gives n eₙ = Σ k fₖ eₙ₋ₖ.
        let m = self.order();
        let mut e = vec![0.0; m + 1];
        e[0] = self.c[0].exp();
        for n in 1..=m {
            let s: f64 = (1..=n).map(|k| k as f64 * self.c[k] * e[n - k]).sum();
            e[n] = s / n as f64;
        }
        Self { c: e }
    }

    pub fn powi(&self, k: usize) -> Self {
        let mut out = Self::constant(1.0, self.order());
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                out = &out * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        out
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        Jet {
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let m = self.order().min(rhs.order());
        let c = (0..=m)
            .map(|n| (0..=n).map(|k| self.c[k] * rhs.c[n - k]).sum())
            .collect();
        Jet { c }
    }
}
