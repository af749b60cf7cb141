//! The activation family indexed by an integer `k` (plus a leak slope and an
//! ISRU shape parameter), together with a concrete C^1 mollification used to
//! realize smoothed-gradient limits.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arguments beyond this magnitude use saturating asymptotic branches so that
/// `exp` never overflows.
const SATURATE: f64 = 40.0;

/// Numerically stable `ln(1 + e^x)`.
pub(crate) fn softplus_raw(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Numerically stable standard logistic `1 / (1 + e^{-x})`.
pub(crate) fn logistic_raw(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One member of the activation family.
///
/// The integer index selects the shape: `k < -5` softsign, `-5` arctangent,
/// `-4` inverse square root unit with parameter `xi`, `-3` exponential linear
/// unit, `-2` hyperbolic tangent, `-1` standard logistic, `0` softplus, and
/// `k >= 1` the rectified power `(max{x,0})^k` with leak slope `gamma` on the
/// negative half-line (`k = 1, gamma = 0` is plain ReLU).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationKind {
    k: i32,
    gamma: f64,
    xi: f64,
}

impl ActivationKind {
    pub fn new(k: i32, gamma: f64, xi: f64) -> Result<Self> {
        if !gamma.is_finite() || !xi.is_finite() {
            return Err(Error::NonFinite("activation parameter"));
        }
        if k == -4 && !(0.0 < xi && xi < 3.0) {
            return Err(Error::InvalidParameter(format!(
                "ISRU parameter xi must lie in (0, 3), got {xi}"
            )));
        }
        if k == 1 && gamma == 1.0 {
            // gamma = 1 degenerates to the identity map; the constructions
            // that divide by (1 - gamma) exclude it.
            return Err(Error::InvalidParameter(
                "leak slope gamma = 1 is excluded".into(),
            ));
        }
        Ok(Self { k, gamma, xi })
    }

    pub fn softsign() -> Self {
        Self { k: -6, gamma: 0.0, xi: 1.0 }
    }

    pub fn arctan() -> Self {
        Self { k: -5, gamma: 0.0, xi: 1.0 }
    }

    pub fn isru(xi: f64) -> Result<Self> {
        Self::new(-4, 0.0, xi)
    }

    pub fn elu() -> Self {
        Self { k: -3, gamma: 0.0, xi: 1.0 }
    }

    pub fn tanh() -> Self {
        Self { k: -2, gamma: 0.0, xi: 1.0 }
    }

    pub fn logistic() -> Self {
        Self { k: -1, gamma: 0.0, xi: 1.0 }
    }

    pub fn softplus() -> Self {
        Self { k: 0, gamma: 0.0, xi: 1.0 }
    }

    pub fn relu() -> Self {
        Self { k: 1, gamma: 0.0, xi: 1.0 }
    }

    pub fn leaky_relu(gamma: f64) -> Result<Self> {
        Self::new(1, gamma, 1.0)
    }

    pub fn repu(k: i32, gamma: f64) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParameter(format!(
                "rectified power unit needs k >= 1, got {k}"
            )));
        }
        Self::new(k, gamma, 1.0)
    }

    pub fn k(&self) -> i32 {
        self.k
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// True for the C^infinity members (k <= 0).
    pub fn is_smooth(&self) -> bool {
        self.k <= 0
    }

    /// True for the piecewise-affine members (k = 1).
    pub fn is_piecewise_affine(&self) -> bool {
        self.k == 1
    }

    /// True for members whose realizations are piecewise polynomial (k >= 1).
    pub fn is_piecewise_polynomial(&self) -> bool {
        self.k >= 1
    }

    /// True when the member is continuously differentiable, so the mollifier
    /// may be taken as the identity.
    pub fn is_c1(&self) -> bool {
        self.k <= 0 || (self.k >= 2 && self.gamma == 0.0)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite("activation argument"));
        }
        Ok(self.eval_raw(x))
    }

    pub(crate) fn eval_raw(&self, x: f64) -> f64 {
        match self.k {
            k if k < -5 => x / (1.0 + x.abs()),
            -5 => x.atan(),
            -4 => x / (1.0 + self.xi * x * x).sqrt(),
            -3 => {
                if x > 0.0 {
                    x
                } else if x < -SATURATE {
                    -1.0
                } else {
                    x.exp_m1()
                }
            }
            -2 => x.tanh(),
            -1 => logistic_raw(x),
            0 => softplus_raw(x),
            1 => {
                if x > 0.0 {
                    x
                } else {
                    self.gamma * x
                }
            }
            k => {
                if x > 0.0 {
                    x.powi(k)
                } else {
                    self.gamma * x
                }
            }
        }
    }

    /// Derivative, with the left one-sided convention at kinks: for `k >= 1`
    /// the value at `x = 0` is the leak slope `gamma`.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite("activation argument"));
        }
        Ok(self.derivative_raw(x))
    }

    pub(crate) fn derivative_raw(&self, x: f64) -> f64 {
        match self.k {
            k if k < -5 => {
                let d = 1.0 + x.abs();
                1.0 / (d * d)
            }
            -5 => 1.0 / (1.0 + x * x),
            -4 => (1.0 + self.xi * x * x).powf(-1.5),
            -3 => {
                if x > 0.0 {
                    1.0
                } else if x < -SATURATE {
                    0.0
                } else {
                    x.exp()
                }
            }
            -2 => {
                let t = x.tanh();
                1.0 - t * t
            }
            -1 => {
                let s = logistic_raw(x);
                s * (1.0 - s)
            }
            0 => logistic_raw(x),
            1 => {
                if x > 0.0 {
                    1.0
                } else {
                    self.gamma
                }
            }
            k => {
                if x > 0.0 {
                    f64::from(k) * x.powi(k - 1)
                } else {
                    self.gamma
                }
            }
        }
    }

    /// Parse the config-string encoding, e.g. `"relu"`, `"leaky_relu:0.1"`,
    /// `"isru:1.5"`, `"repu:3:0"`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or("");
        let rest: Vec<&str> = parts.collect();
        let num = |t: &str| -> Result<f64> {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad number '{t}' in kind '{s}'")))
        };
        let kind = match (head, rest.as_slice()) {
            ("softsign", []) => Self::softsign(),
            ("arctan", []) => Self::arctan(),
            ("isru", []) => Self::isru(1.0)?,
            ("isru", [xi]) => Self::isru(num(xi)?)?,
            ("elu", []) => Self::elu(),
            ("tanh", []) => Self::tanh(),
            ("logistic", []) => Self::logistic(),
            ("softplus", []) => Self::softplus(),
            ("relu", []) => Self::relu(),
            ("leaky_relu", [g]) => Self::leaky_relu(num(g)?)?,
            ("repu", [k, g]) => {
                let k = k
                    .parse::<i32>()
                    .map_err(|_| Error::InvalidParameter(format!("bad exponent in '{s}'")))?;
                Self::repu(k, num(g)?)?
            }
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown activation kind string '{s}'"
                )))
            }
        };
        Ok(kind)
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.k {
            k if k < -5 => write!(f, "softsign"),
            -5 => write!(f, "arctan"),
            -4 => write!(f, "isru:{}", self.xi),
            -3 => write!(f, "elu"),
            -2 => write!(f, "tanh"),
            -1 => write!(f, "logistic"),
            0 => write!(f, "softplus"),
            1 if self.gamma == 0.0 => write!(f, "relu"),
            1 => write!(f, "leaky_relu:{}", self.gamma),
            k => write!(f, "repu:{}:{}", k, self.gamma),
        }
    }
}

/// A C^1 approximation of an activation at sharpness `r`.
///
/// Kinked members (`k = 1`, and `k >= 2` with a nonzero leak) replace the
/// corners by softplus ramps of sharpness `r`; members that are already C^1
/// keep their exact shape, so the mollifier is the identity on them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    r: u32,
    base: ActivationKind,
}

impl Mollifier {
    pub fn new(r: u32, base: ActivationKind) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidParameter(
                "mollifier sharpness r must be >= 1".into(),
            ));
        }
        Ok(Self { r, base })
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn base(&self) -> ActivationKind {
        self.base
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite("mollifier argument"));
        }
        let r = f64::from(self.r);
        let b = self.base;
        Ok(if b.is_c1() {
            b.eval_raw(x)
        } else if b.k() == 1 {
            (1.0 - b.gamma()) * softplus_raw(r * x) / r + b.gamma() * x
        } else {
            // k >= 2 with a leak: smooth only the kinked leak term.
            let pow = if x > 0.0 { x.powi(b.k()) } else { 0.0 };
            pow + b.gamma() * (x - softplus_raw(r * x) / r)
        })
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite("mollifier argument"));
        }
        let r = f64::from(self.r);
        let b = self.base;
        Ok(if b.is_c1() {
            b.derivative_raw(x)
        } else if b.k() == 1 {
            (1.0 - b.gamma()) * logistic_raw(r * x) + b.gamma()
        } else {
            let pow = if x > 0.0 {
                f64::from(b.k()) * x.powi(b.k() - 1)
            } else {
                0.0
            };
            pow + b.gamma() * (1.0 - logistic_raw(r * x))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn all_kinds() -> Vec<ActivationKind> {
        vec![
            ActivationKind::softsign(),
            ActivationKind::arctan(),
            ActivationKind::isru(1.0).unwrap(),
            ActivationKind::elu(),
            ActivationKind::tanh(),
            ActivationKind::logistic(),
            ActivationKind::softplus(),
            ActivationKind::relu(),
            ActivationKind::leaky_relu(0.1).unwrap(),
            ActivationKind::repu(2, 0.0).unwrap(),
            ActivationKind::repu(3, 0.0).unwrap(),
        ]
    }

    #[test]
    fn eval_pinned_values() {
        assert_eq!(ActivationKind::logistic().eval(0.0).unwrap(), 0.5);
        assert_eq!(ActivationKind::relu().eval(-1.0).unwrap(), 0.0);
        assert_eq!(
            ActivationKind::softplus().eval(0.0).unwrap(),
            std::f64::consts::LN_2
        );
        assert_eq!(ActivationKind::elu().eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn derivative_pinned_values() {
        assert_eq!(ActivationKind::logistic().derivative(0.0).unwrap(), 0.25);
        // Left derivative at the ReLU kink.
        assert_eq!(ActivationKind::relu().derivative(0.0).unwrap(), 0.0);
        assert_eq!(
            ActivationKind::leaky_relu(0.25).unwrap().derivative(0.0).unwrap(),
            0.25
        );
        assert_eq!(
            ActivationKind::repu(2, 0.0).unwrap().derivative(0.5).unwrap(),
            1.0
        );
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ActivationKind::isru(0.0).is_err());
        assert!(ActivationKind::isru(3.0).is_err());
        assert!(ActivationKind::repu(0, 0.0).is_err());
        assert!(ActivationKind::leaky_relu(1.0).is_err());
        assert!(ActivationKind::relu().eval(f64::NAN).is_err());
        assert!(Mollifier::new(0, ActivationKind::relu()).is_err());
    }

    #[test]
    fn parse_round_trips() {
        for s in [
            "softsign",
            "arctan",
            "isru:1.5",
            "elu",
            "tanh",
            "logistic",
            "softplus",
            "relu",
            "leaky_relu:0.1",
            "repu:3:0",
        ] {
            let kind = ActivationKind::parse(s).unwrap();
            let again = ActivationKind::parse(&kind.to_string()).unwrap();
            assert_eq!(kind, again, "{s}");
        }
        // Aliases map into the rectified power family.
        assert_eq!(ActivationKind::parse("relu").unwrap(), ActivationKind::parse("repu:1:0").unwrap());
        assert!(ActivationKind::parse("isru:5").is_err());
        assert!(ActivationKind::parse("mystery").is_err());
    }

    #[test]
    fn stable_at_large_arguments() {
        for kind in all_kinds() {
            for x in [-1e3, -40.0, 40.0, 1e3] {
                let y = kind.eval(x).unwrap();
                let d = kind.derivative(x).unwrap();
                assert!(y.is_finite() && d.is_finite(), "{kind} at {x}");
            }
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        // 100 random points per kind, away from the kink at the origin.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-6;
        for kind in all_kinds() {
            for _ in 0..100 {
                let mut x: f64 = rng.gen_range(-3.0..3.0);
                if x.abs() < 1e-4 {
                    x += 2e-4_f64.copysign(x + 1e-30);
                }
                let fd = (kind.eval_raw(x + h) - kind.eval_raw(x - h)) / (2.0 * h);
                let d = kind.derivative_raw(x);
                let rel = (fd - d).abs() / d.abs().max(1.0);
                assert!(rel <= 1e-6, "{kind} at {x}: d={d}, fd={fd}");
            }
        }
    }

    #[test]
    fn odd_symmetry_and_logistic_complement() {
        let odd = [
            ActivationKind::softsign(),
            ActivationKind::tanh(),
            ActivationKind::arctan(),
            ActivationKind::isru(0.7).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let x: f64 = rng.gen_range(-20.0..20.0);
            for kind in odd {
                let s = kind.eval_raw(x) + kind.eval_raw(-x);
                assert!(s.abs() <= 1e-14, "{kind} at {x}: asymmetry {s}");
            }
            let l = ActivationKind::logistic();
            assert!((l.eval_raw(x) + l.eval_raw(-x) - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn mollifier_pinned_values() {
        let relu = ActivationKind::relu();
        let m1 = Mollifier::new(1, relu).unwrap();
        assert_eq!(m1.eval(0.0).unwrap(), std::f64::consts::LN_2);
        let m6 = Mollifier::new(1_000_000, relu).unwrap();
        assert!((m6.eval(1.0).unwrap() - 1.0).abs() <= 1e-6);
        let id = Mollifier::new(3, ActivationKind::logistic()).unwrap();
        assert_eq!(id.eval(0.0).unwrap(), 0.5);
        // |mollified - exact| <= ln(2)/r at the kink.
        for r in [1u32, 10, 100] {
            let m = Mollifier::new(r, relu).unwrap();
            assert!(m.eval(0.0).unwrap() <= std::f64::consts::LN_2 / f64::from(r) + 1e-15);
        }
    }

    #[test]
    fn mollifier_converges_monotonically_off_kinks() {
        let kinds = [
            ActivationKind::relu(),
            ActivationKind::leaky_relu(0.2).unwrap(),
            ActivationKind::repu(2, 0.5).unwrap(),
        ];
        let grid: Vec<f64> = (1..=20).map(|i| -2.0 + 4.0 * f64::from(i) / 21.0).collect();
        for kind in kinds {
            let mut prev_val = f64::INFINITY;
            let mut prev_der = f64::INFINITY;
            for r in [10u32, 100, 1_000, 10_000, 100_000, 1_000_000] {
                let m = Mollifier::new(r, kind).unwrap();
                let ev = grid
                    .iter()
                    .filter(|x| x.abs() > 1e-4)
                    .map(|&x| (m.eval(x).unwrap() - kind.eval_raw(x)).abs())
                    .fold(0.0, f64::max);
                let ed = grid
                    .iter()
                    .filter(|x| x.abs() > 1e-4)
                    .map(|&x| (m.derivative(x).unwrap() - kind.derivative_raw(x)).abs())
                    .fold(0.0, f64::max);
                assert!(ev <= prev_val + 1e-15, "{kind} r={r}: eval error grew");
                assert!(ed <= prev_der + 1e-15, "{kind} r={r}: derivative error grew");
                prev_val = ev;
                prev_der = ed;
            }
            assert!(prev_val <= 1e-6 && prev_der <= 1e-6, "{kind}: did not converge");
        }
    }
}
