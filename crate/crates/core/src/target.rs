//! Target functions the risk integrates against. The indicator threshold and
//! the shifted-ramp corner always sit at the domain midpoint.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::poly::Poly;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TargetFunction {
    /// Step from 0 to 1 at the domain midpoint: `1` on `(mid, hi]`.
    Indicator,
    /// `f(x) = x`.
    Identity,
    /// `f(x) = x^2`.
    Square,
    /// `f(x) = (max{x - mid, 0})^p` with integer power `p >= 1`.
    ShiftedReluPower(u32),
    /// Polynomial with ascending coefficients.
    Polynomial(Vec<f64>),
}

impl TargetFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            TargetFunction::ShiftedReluPower(p) if *p == 0 => Err(Error::InvalidParameter(
                "shifted ramp power must be >= 1".into(),
            )),
            TargetFunction::Polynomial(c) if c.iter().any(|a| !a.is_finite()) => {
                Err(Error::NonFinite("polynomial coefficient"))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, domain: Domain, x: f64) -> f64 {
        match self {
            TargetFunction::Indicator => {
                if x > domain.midpoint() {
                    1.0
                } else {
                    0.0
                }
            }
            TargetFunction::Identity => x,
            TargetFunction::Square => x * x,
            TargetFunction::ShiftedReluPower(p) => {
                let u = x - domain.midpoint();
                if u > 0.0 {
                    u.powi(*p as i32)
                } else {
                    0.0
                }
            }
            TargetFunction::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &a| acc * x + a),
        }
    }

    /// Interior points at which the target is discontinuous or kinked;
    /// integration splits at these a priori.
    pub fn breakpoints(&self, domain: Domain) -> Vec<f64> {
        match self {
            TargetFunction::Indicator | TargetFunction::ShiftedReluPower(_) => {
                vec![domain.midpoint()]
            }
            _ => Vec::new(),
        }
    }

    /// The target as a polynomial in the local variable `t = x - mid` on a
    /// segment with midpoint `seg_mid`, valid when the segment does not
    /// straddle any breakpoint of the target.
    pub(crate) fn local_poly(&self, domain: Domain, seg_mid: f64) -> Poly {
        match self {
            TargetFunction::Indicator => {
                Poly::constant(if seg_mid > domain.midpoint() { 1.0 } else { 0.0 })
            }
            TargetFunction::Identity => Poly::from_coeffs(vec![seg_mid, 1.0]),
            TargetFunction::Square => {
                Poly::from_coeffs(vec![seg_mid * seg_mid, 2.0 * seg_mid, 1.0])
            }
            TargetFunction::ShiftedReluPower(p) => {
                let u0 = seg_mid - domain.midpoint();
                if u0 > 0.0 {
                    Poly::affine_power(u0, 1.0, *p)
                } else {
                    Poly::zero()
                }
            }
            TargetFunction::Polynomial(c) => Poly::shifted(c, seg_mid),
        }
    }

    /// Parse the config-string encoding: `indicator`, `identity`, `square`,
    /// `zero`, `shifted_relu_power:<p>`, `poly:<c0,c1,...>`.
    pub fn parse(s: &str) -> Result<Self> {
        let target = match s {
            "indicator" => TargetFunction::Indicator,
            "identity" => TargetFunction::Identity,
            "square" => TargetFunction::Square,
            "zero" => TargetFunction::Polynomial(vec![0.0]),
            _ => {
                if let Some(p) = s.strip_prefix("shifted_relu_power:") {
                    let p = p.parse::<u32>().map_err(|_| {
                        Error::InvalidParameter(format!("bad power in target '{s}'"))
                    })?;
                    let t = TargetFunction::ShiftedReluPower(p);
                    t.validate()?;
                    t
                } else if let Some(list) = s.strip_prefix("poly:") {
                    let coeffs: Result<Vec<f64>> = list
                        .split(',')
                        .map(|t| {
                            t.trim().parse::<f64>().map_err(|_| {
                                Error::InvalidParameter(format!("bad coefficient in '{s}'"))
                            })
                        })
                        .collect();
                    TargetFunction::Polynomial(coeffs?)
                } else {
                    return Err(Error::InvalidParameter(format!("unknown target '{s}'")));
                }
            }
        };
        Ok(target)
    }
}

impl fmt::Display for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetFunction::Indicator => write!(f, "indicator"),
            TargetFunction::Identity => write!(f, "identity"),
            TargetFunction::Square => write!(f, "square"),
            TargetFunction::ShiftedReluPower(p) => write!(f, "shifted_relu_power:{p}"),
            TargetFunction::Polynomial(c) => {
                write!(f, "poly:")?;
                for (i, a) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                Ok(())
            }
        }
    }
}
