//! Parameter-vector layout for width-`h` shallow networks on scalar inputs,
//! realization evaluation, and the derived breakpoint geometry used by the
//! critical-point analysis.

use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::domain::Domain;
use crate::error::{Error, Result};

/// Parameters of a shallow network with `h` hidden neurons, stored flat as
/// `(w_1..w_h, b_1..b_h, v_1..v_h, c)`, so `3h + 1` entries in total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamVectorRepr", into = "ParamVectorRepr")]
pub struct ParamVector {
    h: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ParamVectorRepr {
    h: usize,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(h: usize, values: Vec<f64>) -> Result<Self> {
        if h == 0 {
            return Err(Error::InvalidParameter("width h must be >= 1".into()));
        }
        if values.len() != 3 * h + 1 {
            return Err(Error::InvalidParameter(format!(
                "expected {} entries for h = {h}, got {}",
                3 * h + 1,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter entry"));
        }
        Ok(Self { h, values })
    }

    pub fn zeros(h: usize) -> Self {
        Self::new(h, vec![0.0; 3 * h + 1]).expect("h >= 1")
    }

    /// Build from per-neuron slices; all of `w`, `b`, `v` must have length `h`.
    pub fn from_parts(w: &[f64], b: &[f64], v: &[f64], c: f64) -> Result<Self> {
        if w.len() != b.len() || w.len() != v.len() || w.is_empty() {
            return Err(Error::InvalidParameter(
                "w, b, v must have equal nonzero length".into(),
            ));
        }
        let mut values = Vec::with_capacity(3 * w.len() + 1);
        values.extend_from_slice(w);
        values.extend_from_slice(b);
        values.extend_from_slice(v);
        values.push(c);
        Self::new(w.len(), values)
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn dim(&self) -> usize {
        3 * self.h + 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Input weight of neuron `i` (0-based, `i < h`).
    pub fn w(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Bias of neuron `i`.
    pub fn b(&self, i: usize) -> f64 {
        self.values[self.h + i]
    }

    /// Output weight of neuron `i`.
    pub fn v(&self, i: usize) -> f64 {
        self.values[2 * self.h + i]
    }

    /// Output bias.
    pub fn c(&self) -> f64 {
        self.values[3 * self.h]
    }

    pub fn set_w(&mut self, i: usize, x: f64) {
        self.values[i] = x;
    }

    pub fn set_b(&mut self, i: usize, x: f64) {
        self.values[self.h + i] = x;
    }

    pub fn set_v(&mut self, i: usize, x: f64) {
        self.values[2 * self.h + i] = x;
    }

    pub fn set_c(&mut self, x: f64) {
        self.values[3 * self.h] = x;
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Pre-activation breakpoint of neuron `i`: the root of `w_i x + b_i`,
    /// infinite when `w_i = 0`.
    pub fn breakpoint(&self, i: usize) -> Breakpoint {
        if self.w(i) == 0.0 {
            Breakpoint::Infinite
        } else {
            Breakpoint::Finite(-self.b(i) / self.w(i))
        }
    }
}

impl TryFrom<ParamVectorRepr> for ParamVector {
    type Error = Error;

    fn try_from(r: ParamVectorRepr) -> Result<Self> {
        ParamVector::new(r.h, r.values)
    }
}

impl From<ParamVector> for ParamVectorRepr {
    fn from(p: ParamVector) -> Self {
        ParamVectorRepr { h: p.h, values: p.values }
    }
}

/// Extended-real kink location; `Infinite` tags the `w = 0` case exactly so
/// sorting and half-interval membership never rely on sentinel floats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Breakpoint {
    Finite(f64),
    Infinite,
}

impl Breakpoint {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Breakpoint::Finite(q) => Some(*q),
            Breakpoint::Infinite => None,
        }
    }
}

/// The subset of the domain where a neuron's pre-activation is strictly
/// positive. `Above(q)` is `(q, hi]`, `Below(q)` is `[lo, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ActiveInterval {
    Empty,
    Whole,
    Above(f64),
    Below(f64),
}

impl ActiveInterval {
    pub fn is_empty(&self) -> bool {
        matches!(self, ActiveInterval::Empty)
    }

    pub fn contains(&self, x: f64, domain: Domain) -> bool {
        domain.contains(x)
            && match self {
                ActiveInterval::Empty => false,
                ActiveInterval::Whole => true,
                ActiveInterval::Above(q) => x > *q,
                ActiveInterval::Below(q) => x < *q,
            }
    }

    pub fn length(&self, domain: Domain) -> f64 {
        match self {
            ActiveInterval::Empty => 0.0,
            ActiveInterval::Whole => domain.length(),
            ActiveInterval::Above(q) => domain.hi() - q,
            ActiveInterval::Below(q) => q - domain.lo(),
        }
    }
}

/// Breakpoint geometry of a piecewise-affine network over a domain, computed
/// in coordinates normalized to `[0, 1]`.
///
/// Neuron indices here are 1-based to keep the half-interval bookkeeping
/// (`m01`, ..) aligned with its sentinel fallback `(0, h + 1)`; `q` has
/// length `h + 2` with `q[0] = 0` and `q[h + 1] = 1` as boundary sentinels.
/// `active` holds the strict activity intervals in the original domain
/// coordinates, indexed 0-based like `ParamVector`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Geometry {
    pub q: Vec<Breakpoint>,
    pub active: Vec<ActiveInterval>,
    pub m0: Vec<usize>,
    pub m1: Vec<usize>,
    pub m01: usize,
    pub m02: usize,
    pub m11: usize,
    pub m12: usize,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

/// Realization value `c + sum_i v_i A(w_i x + b_i)` at a single input.
pub fn realize(theta: &ParamVector, kind: ActivationKind, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite("realization input"));
    }
    Ok(realize_raw(theta, kind, x))
}

pub(crate) fn realize_raw(theta: &ParamVector, kind: ActivationKind, x: f64) -> f64 {
    let mut acc = theta.c();
    for i in 0..theta.h() {
        acc += theta.v(i) * kind.eval_raw(theta.w(i) * x + theta.b(i));
    }
    acc
}

/// Strict activity interval of neuron `i` over `domain`.
pub fn active_interval(theta: &ParamVector, i: usize, domain: Domain) -> ActiveInterval {
    let w = theta.w(i);
    let b = theta.b(i);
    if w == 0.0 {
        return if b > 0.0 { ActiveInterval::Whole } else { ActiveInterval::Empty };
    }
    let q = -b / w;
    if w > 0.0 {
        if q >= domain.hi() {
            ActiveInterval::Empty
        } else if q < domain.lo() {
            ActiveInterval::Whole
        } else {
            ActiveInterval::Above(q)
        }
    } else if q <= domain.lo() {
        ActiveInterval::Empty
    } else if q > domain.hi() {
        ActiveInterval::Whole
    } else {
        ActiveInterval::Below(q)
    }
}

/// Reparametrize so that evaluation on `[0, 1]` reproduces evaluation of the
/// original parameters on `domain`: `w' = w (hi - lo)`, `b' = b + w lo`.
pub fn rescale_to_unit(theta: &ParamVector, domain: Domain) -> ParamVector {
    let mut out = theta.clone();
    let len = domain.length();
    for i in 0..theta.h() {
        out.set_w(i, theta.w(i) * len);
        out.set_b(i, theta.b(i) + theta.w(i) * domain.lo());
    }
    out
}

/// Rescale `(w, b, v) -> (lambda w, lambda b, v / lambda^k)`, which leaves the
/// realization pointwise unchanged for the positively homogeneous members.
pub fn homogeneous_rescale(
    theta: &ParamVector,
    lambda: f64,
    kind: ActivationKind,
) -> Result<ParamVector> {
    if lambda <= 0.0 || !lambda.is_finite() || lambda.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "rescale factor must be positive and finite, got {lambda}"
        )));
    }
    if kind.k() < 1 {
        return Err(Error::UnsupportedKind(format!(
            "homogeneous rescale needs a rectified power member, got {kind}"
        )));
    }
    if kind.k() >= 2 && kind.gamma() != 0.0 {
        // The power term and the leak term scale with different powers of
        // lambda, so no single output-weight correction preserves the
        // realization.
        return Err(Error::UnsupportedKind(format!(
            "homogeneous rescale undefined for k >= 2 with nonzero leak ({kind})"
        )));
    }
    let mut out = theta.clone();
    let scale = lambda.powi(kind.k());
    for i in 0..theta.h() {
        out.set_w(i, theta.w(i) * lambda);
        out.set_b(i, theta.b(i) * lambda);
        out.set_v(i, theta.v(i) / scale);
    }
    Ok(out)
}

/// Compute the breakpoint geometry of a piecewise-affine network.
///
/// Only `k = 1` members carry this structure; smooth members are rejected.
pub fn geometry(theta: &ParamVector, domain: Domain, kind: ActivationKind) -> Result<Geometry> {
    if !kind.is_piecewise_affine() {
        return Err(Error::UnsupportedKind(format!(
            "breakpoint geometry needs k = 1, got {kind}"
        )));
    }
    let h = theta.h();
    let unit = rescale_to_unit(theta, domain);

    let mut q = Vec::with_capacity(h + 2);
    q.push(Breakpoint::Finite(0.0));
    for i in 0..h {
        q.push(unit.breakpoint(i));
    }
    q.push(Breakpoint::Finite(1.0));

    let active: Vec<ActiveInterval> =
        (0..h).map(|i| active_interval(theta, i, domain)).collect();

    // Closed half-interval membership: the midpoint belongs to both sets.
    let mut m0 = Vec::new();
    let mut m1 = Vec::new();
    for j in 1..=h {
        if let Breakpoint::Finite(qj) = q[j] {
            if (0.0..=0.5).contains(&qj) {
                m0.push(j);
            }
            if (0.5..=1.0).contains(&qj) {
                m1.push(j);
            }
        }
    }
    let (m01, m02) = min_max_by_q(&m0, &q);
    let (m11, m12) = min_max_by_q(&m1, &q, );

    // The sentinel fallback leaves the boundary segment degenerate, so the
    // slopes are only meaningful when the corresponding set is nonempty.
    let qv = |j: usize| q[j].finite().expect("member breakpoints are finite");
    let alpha = if !m0.is_empty() {
        Some(segment_slope(&unit, kind, 0.0, qv(m01)))
    } else {
        None
    };
    let beta = if !m1.is_empty() {
        Some(segment_slope(&unit, kind, qv(m12), 1.0))
    } else {
        None
    };

    Ok(Geometry { q, active, m0, m1, m01, m02, m11, m12, alpha, beta })
}

/// `(min, max)` of an index set ordered by breakpoint value, with the
/// sentinel fallback `(0, h + 1)` when the set is empty. The sets are built
/// in index order, so ties in `q` resolve to the smaller index for the min
/// and the larger for the max.
fn min_max_by_q(set: &[usize], q: &[Breakpoint]) -> (usize, usize) {
    let h = q.len() - 2;
    if set.is_empty() {
        return (0, h + 1);
    }
    let val = |j: &&usize| q[**j].finite().expect("finite by construction");
    let mn = *set
        .iter()
        .min_by(|a, b| val(a).partial_cmp(&val(b)).expect("finite"))
        .expect("nonempty");
    let mx = *set
        .iter()
        .max_by(|a, b| val(a).partial_cmp(&val(b)).expect("finite"))
        .expect("nonempty");
    (mn, mx)
}

/// Exact affine slope of the realization of a unit-domain parameter vector on
/// the open segment `(lo, hi)`, from the per-neuron branch slopes.
fn segment_slope(unit: &ParamVector, kind: ActivationKind, lo: f64, hi: f64) -> f64 {
    let probe = if hi > lo { 0.5 * (lo + hi) } else { lo };
    let mut slope = 0.0;
    for i in 0..unit.h() {
        let u = unit.w(i) * probe + unit.b(i);
        let branch = if u > 0.0 { 1.0 } else { kind.gamma() };
        slope += unit.v(i) * unit.w(i) * branch;
    }
    slope
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_theta(rng: &mut impl Rng, h: usize, scale: f64) -> ParamVector {
        let values: Vec<f64> = (0..3 * h + 1).map(|_| rng.gen_range(-scale..scale)).collect();
        ParamVector::new(h, values).unwrap()
    }

    #[test]
    fn layout_accessors() {
        let p = ParamVector::from_parts(&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0], 7.0).unwrap();
        assert_eq!(p.dim(), 7);
        assert_eq!((p.w(0), p.w(1)), (1.0, 2.0));
        assert_eq!((p.b(0), p.b(1)), (3.0, 4.0));
        assert_eq!((p.v(0), p.v(1)), (5.0, 6.0));
        assert_eq!(p.c(), 7.0);
        assert!(ParamVector::new(2, vec![0.0; 6]).is_err());
        assert!(ParamVector::new(1, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn realize_zero_parameters() {
        // All-zero parameters give c + sum v_i A(0) = 0 for any member with
        // finite A(0).
        for kind in [
            ActivationKind::relu(),
            ActivationKind::logistic(),
            ActivationKind::softplus(),
            ActivationKind::tanh(),
        ] {
            let p = ParamVector::zeros(3);
            assert_eq!(realize(&p, kind, 0.7).unwrap(), 0.0);
        }
    }

    #[test]
    fn realize_softplus_exact_identity() {
        // Two opposed softplus neurons reproduce the identity map exactly:
        // ln((1 + e^x) / (1 + e^{-x})) = x.
        let p = ParamVector::from_parts(&[1.0, -1.0], &[0.0, 0.0], &[1.0, -1.0], 0.0).unwrap();
        let y = realize(&p, ActivationKind::softplus(), 2.5).unwrap();
        assert!((y - 2.5).abs() <= 1e-12, "{y}");
    }

    #[test]
    fn realize_relu_ramp_midpoint() {
        // Two-ramp configuration evaluated by the direct formula as oracle.
        let p = ParamVector::from_parts(&[2.0, 2.0], &[-0.5, -1.5], &[1.0, -1.0], 0.0).unwrap();
        let x = 0.5;
        let oracle = (2.0 * x - 0.5f64).max(0.0) - (2.0 * x - 1.5f64).max(0.0);
        let y = realize(&p, ActivationKind::relu(), x).unwrap();
        assert_eq!(y, oracle);
        assert_eq!(y, 0.5);
    }

    #[test]
    fn geometry_single_neuron_with_fallback() {
        let p = ParamVector::from_parts(&[1.0], &[-0.25], &[1.0], 0.0).unwrap();
        let g = geometry(&p, Domain::unit(), ActivationKind::relu()).unwrap();
        assert_eq!(g.q[1], Breakpoint::Finite(0.25));
        assert_eq!(g.m0, vec![1]);
        assert!(g.m1.is_empty());
        assert_eq!((g.m01, g.m02), (1, 1));
        assert_eq!((g.m11, g.m12), (0, 2));
        assert!(g.beta.is_none());
    }

    #[test]
    fn geometry_two_ramps() {
        let p = ParamVector::from_parts(&[2.0, 2.0], &[-0.5, -1.5], &[1.0, -1.0], 0.0).unwrap();
        let g = geometry(&p, Domain::unit(), ActivationKind::relu()).unwrap();
        assert_eq!(g.q[1], Breakpoint::Finite(0.25));
        assert_eq!(g.q[2], Breakpoint::Finite(0.75));
        assert_eq!(g.m0, vec![1]);
        assert_eq!(g.m1, vec![2]);
        assert_eq!(g.active[0], ActiveInterval::Above(0.25));
    }

    #[test]
    fn geometry_zero_weight_neuron() {
        let p = ParamVector::from_parts(&[0.0], &[0.0], &[1.0], 0.0).unwrap();
        let g = geometry(&p, Domain::unit(), ActivationKind::relu()).unwrap();
        assert_eq!(g.q[1], Breakpoint::Infinite);
        assert!(g.active[0].is_empty());
        assert!(geometry(&p, Domain::unit(), ActivationKind::tanh()).is_err());
    }

    #[test]
    fn geometry_midpoint_in_both_sets() {
        let p = ParamVector::from_parts(&[1.0], &[-0.5], &[1.0], 0.0).unwrap();
        let g = geometry(&p, Domain::unit(), ActivationKind::relu()).unwrap();
        assert_eq!(g.m0, vec![1]);
        assert_eq!(g.m1, vec![1]);
    }

    #[test]
    fn geometry_alpha_beta_match_difference_quotients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let domain = Domain::new(-0.5, 2.0).unwrap();
        let kind = ActivationKind::leaky_relu(0.3).unwrap();
        let mut checked = 0;
        for _ in 0..200 {
            let p = random_theta(&mut rng, 3, 2.0);
            let g = geometry(&p, domain, kind).unwrap();
            let unit = rescale_to_unit(&p, domain);
            if let Some(alpha) = g.alpha {
                let q = g.q[g.m01].finite().unwrap();
                if q > 1e-9 {
                    let dq = (realize(&unit, kind, q).unwrap() - realize(&unit, kind, 0.0).unwrap()) / q;
                    assert!((alpha - dq).abs() <= 1e-12 * (1.0 + alpha.abs()), "{alpha} vs {dq}");
                    checked += 1;
                }
            }
            if let Some(beta) = g.beta {
                let q = g.q[g.m12].finite().unwrap();
                if q < 1.0 - 1e-9 {
                    let dq =
                        (realize(&unit, kind, 1.0).unwrap() - realize(&unit, kind, q).unwrap()) / (1.0 - q);
                    assert!((beta - dq).abs() <= 1e-12 * (1.0 + beta.abs()), "{beta} vs {dq}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 50, "too few informative samples: {checked}");
    }

    #[test]
    fn rescale_to_unit_examples() {
        let p = ParamVector::from_parts(&[1.0], &[0.0], &[1.0], 0.0).unwrap();
        let q = rescale_to_unit(&p, Domain::new(1.0, 3.0).unwrap());
        assert_eq!((q.w(0), q.b(0), q.v(0), q.c()), (2.0, 1.0, 1.0, 0.0));
        let id = rescale_to_unit(&p, Domain::unit());
        assert_eq!(id, p);
    }

    #[test]
    fn rescale_to_unit_reproduces_realization() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let domain = Domain::new(-2.0, 3.5).unwrap();
        for kind in [ActivationKind::relu(), ActivationKind::tanh()] {
            for _ in 0..20 {
                let p = random_theta(&mut rng, 2, 3.0);
                let u = rescale_to_unit(&p, domain);
                for _ in 0..100 {
                    let y: f64 = rng.gen_range(0.0..1.0);
                    let lhs = realize(&u, kind, y).unwrap();
                    let rhs = realize(&p, kind, domain.from_unit(y)).unwrap();
                    assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
                }
            }
        }
    }

    #[test]
    fn homogeneous_rescale_examples() {
        let kind = ActivationKind::relu();
        let p = ParamVector::from_parts(&[1.0], &[-0.5], &[2.0], 0.0).unwrap();
        let same = homogeneous_rescale(&p, 1.0, kind).unwrap();
        assert_eq!(same, p);
        let q = homogeneous_rescale(&p, 3.0, kind).unwrap();
        assert_eq!((q.w(0), q.b(0), q.c()), (3.0, -1.5, 0.0));
        assert!((q.v(0) - 2.0 / 3.0).abs() <= 1e-15);
        for x in [0.0, 0.5, 1.0] {
            let a = realize(&p, kind, x).unwrap();
            let b = realize(&q, kind, x).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
        assert!(homogeneous_rescale(&p, 0.0, kind).is_err());
        assert!(homogeneous_rescale(&p, 2.0, ActivationKind::tanh()).is_err());
    }

    #[test]
    fn homogeneous_rescale_repu() {
        let kind = ActivationKind::repu(2, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = random_theta(&mut rng, 2, 2.0);
        let q = homogeneous_rescale(&p, 2.0, kind).unwrap();
        assert!((q.v(0) - p.v(0) / 4.0).abs() <= 1e-15);
        for _ in 0..20 {
            let x: f64 = rng.gen_range(-2.0..2.0);
            let a = realize(&p, kind, x).unwrap();
            let b = realize(&q, kind, x).unwrap();
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn relu_realization_piecewise_affine_between_breakpoints() {
        // Second differences vanish on triples of nearby points inside a
        // breakpoint-free stretch.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let domain = Domain::unit();
        for _ in 0..50 {
            let p = random_theta(&mut rng, 3, 3.0);
            let cuts: Vec<f64> = (0..p.h())
                .filter_map(|i| p.breakpoint(i).finite())
                .filter(|q| domain.contains(*q))
                .collect();
            let x: f64 = rng.gen_range(0.0..1.0);
            let eps = 1e-4;
            if cuts.iter().any(|q| (q - x).abs() < 3.0 * eps) {
                continue;
            }
            let f = |t: f64| realize(&p, ActivationKind::relu(), t).unwrap();
            let second = f(x - eps) - 2.0 * f(x) + f(x + eps);
            assert!(second.abs() <= 1e-10, "{second}");
        }
    }
}
