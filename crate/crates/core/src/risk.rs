//! L^2 risk of a network realization against a target over an interval, and
//! its generalized gradient.
//!
//! Rectified power members (`k >= 1`) integrate exactly: the residual is a
//! polynomial on each segment between breakpoints, expanded in a midpoint-
//! centered basis. Smooth members go through adaptive quadrature. Gradients
//! use the same two engines; for `k = 1` the weight/bias components integrate
//! over the strict activity set, which realizes the smoothed-limit
//! (left-gradient) convention.

use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::network::{realize_raw, ParamVector};
use crate::poly::Poly;
use crate::quad;
use crate::target::TargetFunction;

/// Default absolute tolerance for quadrature-backed risks.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskMethod {
    Exact,
    Quadrature,
}

/// Risk value together with how it was computed.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RiskReport {
    pub value: f64,
    pub method: RiskMethod,
    pub est_abs_error: f64,
    pub segments: usize,
}

#[derive(Debug, Clone, Copy)]
pub enum FdScheme {
    Central,
    Left,
}

/// Cut points (including both endpoints) splitting the domain into segments
/// on which the residual of a `k >= 1` member is polynomial.
fn segment_edges(
    theta: &ParamVector,
    target: &TargetFunction,
    domain: Domain,
) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..theta.h())
        .filter_map(|i| theta.breakpoint(i).finite())
        .filter(|q| domain.lo() < *q && *q < domain.hi())
        .collect();
    cuts.extend(target.breakpoints(domain));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(domain.lo());
    edges.extend(cuts.into_iter().filter(|q| domain.lo() < *q && *q < domain.hi()));
    edges.push(domain.hi());
    edges
}

/// Residual `N - f` as a polynomial in `t = x - seg_mid` on one segment.
fn residual_poly(
    theta: &ParamVector,
    kind: ActivationKind,
    target: &TargetFunction,
    domain: Domain,
    seg_mid: f64,
) -> Poly {
    let mut n = Poly::constant(theta.c());
    for i in 0..theta.h() {
        let (w, b, v) = (theta.w(i), theta.b(i), theta.v(i));
        let u0 = w * seg_mid + b;
        if u0 > 0.0 {
            n.add_assign(&Poly::affine_power(u0, w, kind.k() as u32).scale(v));
        } else if kind.gamma() != 0.0 {
            n.add_assign(&Poly::from_coeffs(vec![u0, w]).scale(v * kind.gamma()));
        }
    }
    n.sub_assign(&target.local_poly(domain, seg_mid));
    n
}

/// Exact risk for piecewise-polynomial members (`k >= 1`).
pub fn risk_exact(
    theta: &ParamVector,
    kind: ActivationKind,
    target: &TargetFunction,
    domain: Domain,
) -> Result<RiskReport> {
    if !kind.is_piecewise_polynomial() {
        return Err(Error::UnsupportedKind(format!(
            "exact risk needs k >= 1, got {kind}; use quadrature"
        )));
    }
    target.validate()?;
    let edges = segment_edges(theta, target, domain);
    let mut value = 0.0;
    for pair in edges.windows(2) {
        let mid = 0.5 * (pair[0] + pair[1]);
        let half = 0.5 * (pair[1] - pair[0]);
        let r = residual_poly(theta, kind, target, domain, mid);
        value += r.mul(&r).integrate(-half, half);
    }
    Ok(RiskReport {
        value,
        method: RiskMethod::Exact,
        est_abs_error: 0.0,
        segments: edges.len() - 1,
    })
}

/// A priori split points for quadrature: target discontinuities, the kinks
/// of piecewise-polynomial members, and the transition regions of steep
/// smooth neurons, whose features are narrower than a Kronrod node gap and
/// would otherwise evade the error estimate.
fn quad_splits(
    theta: &ParamVector,
    kind: ActivationKind,
    target: &TargetFunction,
    domain: Domain,
) -> Vec<f64> {
    let mut splits = target.breakpoints(domain);
    let node_gap = domain.length() / 16.0;
    for i in 0..theta.h() {
        let w = theta.w(i);
        if let Some(q) = theta.breakpoint(i).finite() {
            if kind.is_piecewise_polynomial() {
                splits.push(q);
                continue;
            }
            let width = 2.0 / w.abs();
            if width < node_gap {
                splits.extend([q, q - width, q + width, q - 5.0 * width, q + 5.0 * width]);
            }
        }
    }
    splits
}

/// Quadrature-backed risk for any member.
pub fn risk_quadrature(
    theta: &ParamVector,
    kind: ActivationKind,
    target: &TargetFunction,
    domain: Domain,
    tol: f64,
) -> Result<RiskReport> {
    if !(1e-13..=1e-3).contains(&tol) {
        return Err(Error::InvalidParameter(format!(
            "quadrature tolerance must lie in [1e-13, 1e-3], got {tol}"
        )));
    }
    target.validate()?;
    let splits = quad_splits(theta, kind, target, domain);
    let r = quad::integrate(
        |x| {
            let d = realize_raw(theta, kind, x) - target.eval(domain, x);
            d * d
        },
        domain.lo(),
        domain.hi(),
        tol,
        &splits,
    )?;
    Ok(RiskReport {
        value: r.value,
        method: RiskMethod::Quadrature,
        est_abs_error: r.est_error,
        segments: r.panels,
    })
}

/// Risk by the preferred engine for the member: exact when the residual is
/// piecewise polynomial, adaptive quadrature otherwise.
pub fn risk(
    theta: &ParamVector,
    kind: ActivationKind,
    target: &TargetFunction,
    domain: Domain,
    tol: f64,
) -> Result<RiskReport> {
    if kind.is_piecewise_polynomial() {
        risk_exact(theta, kind, target, domain)
    } else {
        risk_quadrature(theta, kind, target, domain, tol)
    }
}

/// Generalized gradient of the risk with the default quadrature tolerance.
pub fn gradient(
    theta: &ParamVector,
    kind: ActivationKind,
    target: &TargetFunction,
    domain: Domain,
) -> Result<Vec<f64>> {
    gradient_tol(theta, kind, target, domain, DEFAULT_QUAD_TOL)
}

/// Generalized gradient of the risk.
///
/// For `k >= 1` every component is an exact segment integral; the strict
/// activity sets make this the smoothed-limit gradient at kink
/// configurations. For smooth members the classical gradient is computed by
/// adaptive quadrature at absolute tolerance `tol` per component.
pub fn gradient_tol(
    theta: &ParamVector,
    kind: ActivationKind,
    target: &TargetFunction,
    domain: Domain,
    tol: f64,
) -> Result<Vec<f64>> {
    target.validate()?;
    if kind.is_piecewise_polynomial() {
        gradient_exact(theta, kind, target, domain)
    } else {
        gradient_quadrature(theta, kind, target, domain, tol)
    }
}

fn gradient_exact(
    theta: &ParamVector,
    kind: ActivationKind,
    target: &TargetFunction,
    domain: Domain,
) -> Result<Vec<f64>> {
    let h = theta.h();
    let k = kind.k() as u32;
    let gamma = kind.gamma();
    let mut g = vec![0.0; theta.dim()];
    let edges = segment_edges(theta, target, domain);
    for pair in edges.windows(2) {
        let mid = 0.5 * (pair[0] + pair[1]);
        let half = 0.5 * (pair[1] - pair[0]);
        let r = residual_poly(theta, kind, target, domain, mid);
        let x_poly = Poly::from_coeffs(vec![mid, 1.0]);
        let xr = x_poly.mul(&r);
        for i in 0..h {
            let (w, b, v) = (theta.w(i), theta.b(i), theta.v(i));
            let u0 = w * mid + b;
            let active = u0 > 0.0;
            // A(u) and its branch derivative D(u) on this segment.
            let a_poly = if active {
                Poly::affine_power(u0, w, k)
            } else {
                Poly::from_coeffs(vec![u0, w]).scale(gamma)
            };
            let d_poly = if active {
                if k == 1 {
                    Poly::constant(1.0)
                } else {
                    Poly::affine_power(u0, w, k - 1).scale(f64::from(k))
                }
            } else {
                Poly::constant(gamma)
            };
            let dr = d_poly.mul(&r);
            g[i] += 2.0 * v * d_poly.mul(&xr).integrate(-half, half);
            g[h + i] += 2.0 * v * dr.integrate(-half, half);
            g[2 * h + i] += 2.0 * a_poly.mul(&r).integrate(-half, half);
        }
        g[3 * h] += 2.0 * r.integrate(-half, half);
    }
    Ok(g)
}

fn gradient_quadrature(
    theta: &ParamVector,
    kind: ActivationKind,
    target: &TargetFunction,
    domain: Domain,
    tol: f64,
) -> Result<Vec<f64>> {
    let h = theta.h();
    let splits = quad_splits(theta, kind, target, domain);
    let residual = |x: f64| realize_raw(theta, kind, x) - target.eval(domain, x);
    let integrate = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
        quad::integrate(f, domain.lo(), domain.hi(), tol, &splits).map(|r| r.value)
    };
    let mut g = vec![0.0; theta.dim()];
    for i in 0..h {
        let (w, b, v) = (theta.w(i), theta.b(i), theta.v(i));
        g[i] = 2.0 * v * integrate(&|x| x * kind.derivative_raw(w * x + b) * residual(x))?;
        g[h + i] = 2.0 * v * integrate(&|x| kind.derivative_raw(w * x + b) * residual(x))?;
        g[2 * h + i] = 2.0 * integrate(&|x| kind.eval_raw(w * x + b) * residual(x))?;
    }
    g[3 * h] = 2.0 * integrate(&residual)?;
    Ok(g)
}

/// Finite-difference gradient of the risk. The `Left` scheme approximates
/// one-sided (from below) partial derivatives.
pub fn gradient_fd(
    theta: &ParamVector,
    kind: ActivationKind,
    target: &TargetFunction,
    domain: Domain,
    scheme: FdScheme,
    step: f64,
) -> Result<Vec<f64>> {
    if !(1e-9..=1e-3).contains(&step) {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step must lie in [1e-9, 1e-3], got {step}"
        )));
    }
    let tol = 1e-12;
    let loss = |p: &ParamVector| -> Result<f64> { Ok(risk(p, kind, target, domain, tol)?.value) };
    let base = loss(theta)?;
    let mut g = vec![0.0; theta.dim()];
    let mut probe = theta.clone();
    for j in 0..theta.dim() {
        let orig = probe.values()[j];
        g[j] = match scheme {
            FdScheme::Central => {
                probe.values_mut()[j] = orig + step;
                let up = loss(&probe)?;
                probe.values_mut()[j] = orig - step;
                let down = loss(&probe)?;
                (up - down) / (2.0 * step)
            }
            FdScheme::Left => {
                probe.values_mut()[j] = orig - step;
                let down = loss(&probe)?;
                (base - down) / step
            }
        };
        probe.values_mut()[j] = orig;
    }
    Ok(g)
}

/// Euclidean norm of a gradient vector.
pub fn grad_norm(g: &[f64]) -> f64 {
    g.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative error with a unit absolute floor, used by the gradient checks.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
