//! Dense univariate polynomials with ascending coefficients, used for exact
//! segment integration of piecewise-polynomial residuals. Segment work is
//! done in a local variable centered at the segment midpoint to control
//! cancellation when slopes are steep.

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    /// Coefficients, `c[j]` multiplying `t^j`. Invariant: no trailing zeros
    /// beyond degree 0.
    c: Vec<f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Self { c: vec![0.0] }
    }

    pub fn constant(a: f64) -> Self {
        Self { c: vec![a] }
    }

    pub fn from_coeffs(c: Vec<f64>) -> Self {
        let mut p = Self { c };
        if p.c.is_empty() {
            p.c.push(0.0);
        }
        p.trim();
        p
    }

    #[cfg(test)]
    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    fn trim(&mut self) {
        while self.c.len() > 1 && *self.c.last().unwrap() == 0.0 {
            self.c.pop();
        }
    }

    #[cfg(test)]
    pub fn eval(&self, t: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &a| acc * t + a)
    }

    pub fn add_assign(&mut self, other: &Poly) {
        if other.c.len() > self.c.len() {
            self.c.resize(other.c.len(), 0.0);
        }
        for (a, b) in self.c.iter_mut().zip(other.c.iter()) {
            *a += b;
        }
        self.trim();
    }

    pub fn sub_assign(&mut self, other: &Poly) {
        if other.c.len() > self.c.len() {
            self.c.resize(other.c.len(), 0.0);
        }
        for (a, b) in self.c.iter_mut().zip(other.c.iter()) {
            *a -= b;
        }
        self.trim();
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::from_coeffs(self.c.iter().map(|a| a * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.c.len() + other.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.c.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::from_coeffs(out)
    }

    /// `(a + b t)^k` by binomial expansion.
    pub fn affine_power(a: f64, b: f64, k: u32) -> Poly {
        let mut out = Poly::constant(1.0);
        let base = Poly::from_coeffs(vec![a, b]);
        for _ in 0..k {
            out = out.mul(&base);
        }
        out
    }

    /// Rewrite a polynomial in `x` as a polynomial in `t` with `x = mid + t`.
    pub fn shifted(coeffs_in_x: &[f64], mid: f64) -> Poly {
        let mut out = Poly::zero();
        for (k, &a) in coeffs_in_x.iter().enumerate() {
            if a != 0.0 {
                out.add_assign(&Poly::affine_power(mid, 1.0, k as u32).scale(a));
            }
        }
        out
    }

    /// Exact integral over `[t0, t1]` via monomial antiderivatives.
    pub fn integrate(&self, t0: f64, t1: f64) -> f64 {
        let mut acc = 0.0;
        let mut p0 = t0;
        let mut p1 = t1;
        for (j, &a) in self.c.iter().enumerate() {
            acc += a * (p1 - p0) / (j as f64 + 1.0);
            p0 *= t0;
            p1 *= t1;
        }
        acc
    }
}
