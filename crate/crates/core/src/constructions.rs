//! Explicit parameter families whose risks drive to zero (or vanish exactly),
//! together with the bound checks that accompany them.
//!
//! Each family fixes an activation member, a target, and a minimal width;
//! surplus neurons are zero-filled. `verify_sequence` evaluates the risks
//! along an increasing index list and checks decrease, smallness of the final
//! value, and the explicit bound where one exists.

use std::f64::consts::{E, LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::network::ParamVector;
use crate::risk::{risk, RiskReport};
use crate::target::TargetFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyId {
    /// Two ReLU ramps hugging the midpoint against the indicator target;
    /// leak slope `gamma <= 0`.
    ReluIndicator { gamma: f64 },
    /// Same ramps with a positive leak, `gamma` in `(0, inf) \ {1}`.
    LeakyReluIndicator { gamma: f64 },
    SoftplusSquare,
    /// Single sharp softplus against the shifted ramp target; the sequence
    /// index plays the role of the sharpness.
    SoftplusReluTarget,
    /// Exact identity fit with two opposed softplus neurons (constant in n).
    SoftplusIdentityExact,
    LogisticIdentity,
    LogisticSquare,
    TanhSquare,
    IsruIdentity { xi: f64 },
    IsruSquare { xi: f64 },
    ArctanIdentity,
    ArctanSquare,
    /// Rectified power of exponent `k >= 2` against the power `k - 1` ramp.
    RepuPower { k: i32 },
    EluSquare,
    SoftsignSquare,
}

/// All families at their default parameters, in report order.
pub fn all_families() -> Vec<FamilyId> {
    vec![
        FamilyId::ReluIndicator { gamma: 0.0 },
        FamilyId::LeakyReluIndicator { gamma: 0.5 },
        FamilyId::SoftplusSquare,
        FamilyId::SoftplusReluTarget,
        FamilyId::SoftplusIdentityExact,
        FamilyId::LogisticIdentity,
        FamilyId::LogisticSquare,
        FamilyId::TanhSquare,
        FamilyId::IsruIdentity { xi: 1.0 },
        FamilyId::IsruSquare { xi: 1.0 },
        FamilyId::ArctanIdentity,
        FamilyId::ArctanSquare,
        FamilyId::RepuPower { k: 2 },
        FamilyId::EluSquare,
        FamilyId::SoftsignSquare,
    ]
}

impl FamilyId {
    pub fn name(&self) -> String {
        match self {
            FamilyId::ReluIndicator { gamma } => format!("relu_indicator:{gamma}"),
            FamilyId::LeakyReluIndicator { gamma } => format!("leaky_relu_indicator:{gamma}"),
            FamilyId::SoftplusSquare => "softplus_square".into(),
            FamilyId::SoftplusReluTarget => "softplus_relu_target".into(),
            FamilyId::SoftplusIdentityExact => "softplus_identity_exact".into(),
            FamilyId::LogisticIdentity => "logistic_identity".into(),
            FamilyId::LogisticSquare => "logistic_square".into(),
            FamilyId::TanhSquare => "tanh_square".into(),
            FamilyId::IsruIdentity { xi } => format!("isru_identity:{xi}"),
            FamilyId::IsruSquare { xi } => format!("isru_square:{xi}"),
            FamilyId::ArctanIdentity => "arctan_identity".into(),
            FamilyId::ArctanSquare => "arctan_square".into(),
            FamilyId::RepuPower { k } => format!("repu_power:{k}"),
            FamilyId::EluSquare => "elu_square".into(),
            FamilyId::SoftsignSquare => "softsign_square".into(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let (head, tail) = match s.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (s, None),
        };
        let num = |t: Option<&str>, default: f64| -> Result<f64> {
            match t {
                None => Ok(default),
                Some(t) => t.parse::<f64>().map_err(|_| {
                    Error::InvalidParameter(format!("bad parameter in family '{s}'"))
                }),
            }
        };
        let id = match head {
            "relu_indicator" => FamilyId::ReluIndicator { gamma: num(tail, 0.0)? },
            "leaky_relu_indicator" => FamilyId::LeakyReluIndicator { gamma: num(tail, 0.5)? },
            "softplus_square" => FamilyId::SoftplusSquare,
            "softplus_relu_target" => FamilyId::SoftplusReluTarget,
            "softplus_identity_exact" => FamilyId::SoftplusIdentityExact,
            "logistic_identity" => FamilyId::LogisticIdentity,
            "logistic_square" => FamilyId::LogisticSquare,
            "tanh_square" => FamilyId::TanhSquare,
            "isru_identity" => FamilyId::IsruIdentity { xi: num(tail, 1.0)? },
            "isru_square" => FamilyId::IsruSquare { xi: num(tail, 1.0)? },
            "arctan_identity" => FamilyId::ArctanIdentity,
            "arctan_square" => FamilyId::ArctanSquare,
            "repu_power" => FamilyId::RepuPower { k: num(tail, 2.0)? as i32 },
            "elu_square" => FamilyId::EluSquare,
            "softsign_square" => FamilyId::SoftsignSquare,
            _ => return Err(Error::InvalidParameter(format!("unknown family '{s}'"))),
        };
        id.validate()?;
        Ok(id)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FamilyId::ReluIndicator { gamma } if *gamma > 0.0 => Err(Error::InvalidParameter(
                "relu_indicator takes gamma <= 0; use leaky_relu_indicator".into(),
            )),
            FamilyId::LeakyReluIndicator { gamma } if *gamma <= 0.0 || *gamma == 1.0 => {
                Err(Error::InvalidParameter(
                    "leaky_relu_indicator needs gamma in (0, inf) excluding 1".into(),
                ))
            }
            FamilyId::RepuPower { k } if *k < 2 => {
                Err(Error::InvalidParameter("repu_power needs k >= 2".into()))
            }
            FamilyId::IsruIdentity { xi } | FamilyId::IsruSquare { xi }
                if !(0.0 < *xi && *xi < 3.0) =>
            {
                Err(Error::InvalidParameter("ISRU families need xi in (0, 3)".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn kind(&self) -> ActivationKind {
        match self {
            FamilyId::ReluIndicator { gamma } | FamilyId::LeakyReluIndicator { gamma } => {
                ActivationKind::new(1, *gamma, 1.0).expect("validated")
            }
            FamilyId::SoftplusSquare
            | FamilyId::SoftplusReluTarget
            | FamilyId::SoftplusIdentityExact => ActivationKind::softplus(),
            FamilyId::LogisticIdentity | FamilyId::LogisticSquare => ActivationKind::logistic(),
            FamilyId::TanhSquare => ActivationKind::tanh(),
            FamilyId::IsruIdentity { xi } | FamilyId::IsruSquare { xi } => {
                ActivationKind::isru(*xi).expect("validated")
            }
            FamilyId::ArctanIdentity | FamilyId::ArctanSquare => ActivationKind::arctan(),
            FamilyId::RepuPower { k } => ActivationKind::repu(*k, 0.0).expect("validated"),
            FamilyId::EluSquare => ActivationKind::elu(),
            FamilyId::SoftsignSquare => ActivationKind::softsign(),
        }
    }

    pub fn target(&self) -> TargetFunction {
        match self {
            FamilyId::ReluIndicator { .. } | FamilyId::LeakyReluIndicator { .. } => {
                TargetFunction::Indicator
            }
            FamilyId::SoftplusSquare
            | FamilyId::LogisticSquare
            | FamilyId::TanhSquare
            | FamilyId::IsruSquare { .. }
            | FamilyId::ArctanSquare
            | FamilyId::EluSquare
            | FamilyId::SoftsignSquare => TargetFunction::Square,
            FamilyId::SoftplusReluTarget => TargetFunction::ShiftedReluPower(1),
            FamilyId::SoftplusIdentityExact
            | FamilyId::LogisticIdentity
            | FamilyId::IsruIdentity { .. }
            | FamilyId::ArctanIdentity => TargetFunction::Identity,
            FamilyId::RepuPower { k } => TargetFunction::ShiftedReluPower((*k - 1) as u32),
        }
    }

    pub fn min_h(&self) -> usize {
        match self {
            FamilyId::SoftplusReluTarget
            | FamilyId::LogisticIdentity
            | FamilyId::IsruIdentity { .. }
            | FamilyId::ArctanIdentity => 1,
            _ => 2,
        }
    }

    /// Smallest sequence index at which the family's construction is valid
    /// on `domain` (the Taylor windows of the square families, plus the
    /// negative-branch requirement of the exponential linear member).
    pub fn min_n(&self, domain: Domain) -> u32 {
        let reach = domain.lo().abs().max(domain.hi().abs());
        match self {
            FamilyId::SoftplusSquare
            | FamilyId::LogisticSquare
            | FamilyId::TanhSquare
            | FamilyId::IsruSquare { .. }
            | FamilyId::ArctanSquare
            | FamilyId::SoftsignSquare
            | FamilyId::LogisticIdentity => reach.ceil().max(1.0) as u32,
            FamilyId::EluSquare => {
                let hi = domain.hi().abs();
                let branch = if hi > 0.0 { (reach / (2.0 * hi)).ceil() } else { f64::INFINITY };
                reach.ceil().max(branch).max(1.0) as u32
            }
            _ => 1,
        }
    }

    /// Is the family an exact fit (constant in the sequence index)?
    pub fn is_exact_fit(&self) -> bool {
        matches!(self, FamilyId::SoftplusIdentityExact)
    }
}

/// Instantiate the family's parameter vector at sequence index `n`, width
/// `h >= min_h`, over `domain`.
pub fn sequence_theta(id: FamilyId, n: u32, domain: Domain, h: usize) -> Result<ParamVector> {
    id.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("sequence index n must be >= 1".into()));
    }
    if h < id.min_h() {
        return Err(Error::InvalidParameter(format!(
            "family {} needs h >= {}, got {h}",
            id.name(),
            id.min_h()
        )));
    }
    let nf = f64::from(n);
    let (lo, hi, mid, len) = (domain.lo(), domain.hi(), domain.midpoint(), domain.length());
    let mut theta = ParamVector::zeros(h);

    match id {
        FamilyId::ReluIndicator { gamma } | FamilyId::LeakyReluIndicator { gamma } => {
            let w = (nf + 3.0) / (2.0 * len);
            theta.set_w(0, w);
            theta.set_w(1, w);
            theta.set_b(0, -(1.0 + nf) / 4.0 - lo * w);
            theta.set_b(1, -(5.0 + nf) / 4.0 - lo * w);
            let v = 1.0 / (1.0 - gamma);
            theta.set_v(0, v);
            theta.set_v(1, -v);
            // The output bias cancels the leak below the first breakpoint;
            // it vanishes for plain ReLU.
            theta.set_c(-gamma / (1.0 - gamma));
        }
        FamilyId::SoftplusSquare => {
            theta.set_w(0, 1.0 / nf);
            theta.set_w(1, -1.0 / nf);
            theta.set_v(0, 4.0 * nf * nf);
            theta.set_v(1, 4.0 * nf * nf);
            theta.set_c(-8.0 * nf * nf * LN_2);
        }
        FamilyId::SoftplusReluTarget => {
            theta.set_w(0, nf);
            theta.set_b(0, -nf * mid);
            theta.set_v(0, 1.0 / nf);
        }
        FamilyId::SoftplusIdentityExact => {
            theta.set_w(0, 1.0);
            theta.set_w(1, -1.0);
            theta.set_v(0, 1.0);
            theta.set_v(1, -1.0);
        }
        FamilyId::LogisticIdentity => {
            theta.set_w(0, 1.0 / nf);
            theta.set_v(0, 4.0 * nf);
            // -2n, so that 4n sigma(x/n) - 2n -> x; the factor 2 makes the
            // limit vanish at the origin.
            theta.set_c(-2.0 * nf);
        }
        FamilyId::LogisticSquare => {
            let scale = (1.0 + E).powi(3) / (E * (E - 1.0));
            theta.set_w(0, -1.0 / nf);
            theta.set_w(1, 1.0 / nf);
            theta.set_b(0, -1.0);
            theta.set_b(1, -1.0);
            theta.set_v(0, nf * nf * scale);
            theta.set_v(1, nf * nf * scale);
            theta.set_c(-2.0 * nf * nf * (1.0 + E).powi(2) / (E * (E - 1.0)));
        }
        FamilyId::TanhSquare => {
            let e2 = E * E;
            theta.set_w(0, 1.0 / nf);
            theta.set_w(1, -1.0 / nf);
            theta.set_b(0, -1.0);
            theta.set_b(1, -1.0);
            let v = nf * nf * (1.0 + e2).powi(3) / (8.0 * e2 * (e2 - 1.0));
            theta.set_v(0, v);
            theta.set_v(1, v);
            theta.set_c(nf * nf * (1.0 + e2).powi(2) / (4.0 * e2));
        }
        FamilyId::IsruIdentity { .. } => {
            theta.set_w(0, 1.0 / nf);
            theta.set_v(0, nf);
        }
        FamilyId::IsruSquare { xi } => {
            theta.set_w(0, 1.0 / nf);
            theta.set_w(1, -1.0 / nf);
            theta.set_b(0, 0.5);
            theta.set_b(1, 0.5);
            let v = -(xi + 4.0).powf(2.5) * nf * nf / (48.0 * xi);
            theta.set_v(0, v);
            theta.set_v(1, v);
            theta.set_c((xi + 4.0).powf(2.5) * nf * nf / (48.0 * xi * (1.0 + xi / 4.0).sqrt()));
        }
        FamilyId::ArctanIdentity => {
            theta.set_w(0, 1.0 / nf);
            theta.set_v(0, nf);
        }
        FamilyId::ArctanSquare => {
            theta.set_w(0, 1.0 / nf);
            theta.set_w(1, -1.0 / nf);
            theta.set_b(0, 1.0);
            theta.set_b(1, 1.0);
            theta.set_v(0, -2.0 * nf * nf);
            theta.set_v(1, -2.0 * nf * nf);
            theta.set_c(PI * nf * nf);
        }
        FamilyId::RepuPower { k } => {
            let kf = f64::from(k);
            theta.set_w(0, 1.0);
            theta.set_w(1, 1.0);
            theta.set_b(0, 1.0 / nf - mid);
            theta.set_b(1, -mid);
            theta.set_v(0, nf / kf);
            theta.set_v(1, -nf / kf);
        }
        FamilyId::EluSquare => {
            let shift = 2.0 * hi.abs();
            theta.set_w(0, -1.0 / nf);
            theta.set_w(1, 1.0 / nf);
            theta.set_b(0, -shift);
            theta.set_b(1, -shift);
            theta.set_v(0, nf * nf * shift.exp());
            theta.set_v(1, nf * nf * shift.exp());
            theta.set_c(-2.0 * nf * nf * (1.0 - shift.exp()));
        }
        FamilyId::SoftsignSquare => {
            let c = lo.abs().max(hi.abs());
            theta.set_w(0, 1.0 / nf);
            theta.set_w(1, -1.0 / nf);
            theta.set_b(0, c);
            theta.set_b(1, c);
            let v = -(c + 1.0).powi(3) * nf * nf / 2.0;
            theta.set_v(0, v);
            theta.set_v(1, v);
            theta.set_c(c * (c + 1.0).powi(2) * nf * nf);
        }
    }
    Ok(theta)
}

/// The explicit risk bound when one is stated for the family, `None`
/// otherwise (most families come with unspecified constants).
pub fn sequence_risk_bound(id: FamilyId, n: u32, domain: Domain) -> Option<f64> {
    let nf = f64::from(n);
    match id {
        FamilyId::ReluIndicator { .. } => Some(domain.length() / (2.0 * (nf + 3.0))),
        FamilyId::SoftplusReluTarget => Some(domain.length() / (nf * nf)),
        _ => None,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceRow {
    pub n: u32,
    pub risk: f64,
    pub bound: Option<f64>,
    pub bound_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family: String,
    pub rows: Vec<SequenceRow>,
    pub decreasing: bool,
    /// A single pre-asymptotic increase is tolerated but flagged.
    pub pre_asymptotic_violation: bool,
    pub final_below_tol: bool,
    pub final_tol: f64,
    pub bounds_ok: bool,
    pub pass: bool,
}

/// Absolute tolerance override for exact-fit families; others use the
/// relative default `1e-3 * first value`.
pub const EXACT_FIT_TOL: f64 = 1e-18;

/// Evaluate the family's risks along `n_list` and check (a) eventual
/// monotone decrease, (b) a small final value, (c) the paper bound where one
/// exists. Assertion failures surface in the report, not as errors.
pub fn verify_sequence(
    id: FamilyId,
    n_list: &[u32],
    domain: Domain,
    h: usize,
) -> Result<FamilyReport> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) || n_list.is_empty() {
        return Err(Error::InvalidParameter("n_list must be strictly increasing".into()));
    }
    let kind = id.kind();
    let target = id.target();
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let theta = sequence_theta(id, n, domain, h)?;
        let report: RiskReport = risk(&theta, kind, &target, domain, 1e-13)?;
        let bound = sequence_risk_bound(id, n, domain);
        let bound_ok = bound.map_or(true, |b| report.value <= b + 1e-12);
        rows.push(SequenceRow { n, risk: report.value, bound, bound_ok });
    }

    // Increases between values at the quadrature noise floor carry no
    // information and are not counted against monotonicity.
    const NOISE_FLOOR: f64 = 1e-16;
    let mut violations: Vec<usize> = Vec::new();
    for (i, pair) in rows.windows(2).enumerate() {
        if pair[1].risk >= pair[0].risk && pair[1].risk > NOISE_FLOOR {
            violations.push(i);
        }
    }
    let flat_zero = rows.iter().all(|r| r.risk <= 1e-15);
    let decreasing = flat_zero
        || violations.is_empty()
        || (violations.len() == 1 && violations[0] < rows.len() / 2);
    let pre_asymptotic_violation = !flat_zero && violations.len() == 1;

    let (final_tol, final_below_tol) = if id.is_exact_fit() {
        (EXACT_FIT_TOL, rows.last().unwrap().risk <= EXACT_FIT_TOL)
    } else {
        let tol = 1e-3 * rows.first().unwrap().risk;
        (tol, rows.last().unwrap().risk <= tol)
    };
    let bounds_ok = rows.iter().all(|r| r.bound_ok);
    let pass = decreasing && final_below_tol && bounds_ok;
    Ok(FamilyReport {
        family: id.name(),
        rows,
        decreasing,
        pre_asymptotic_violation,
        final_below_tol,
        final_tol,
        bounds_ok,
        pass,
    })
}

/// Default index list for a family over a domain: geometric, starting at the
/// family's validity threshold.
pub fn default_n_list(id: FamilyId, domain: Domain) -> Vec<u32> {
    let n0 = id.min_n(domain);
    // The ramp families decay like 1/n and need an extra decade to clear the
    // relative tolerance on the final value.
    let factors: &[u32] = match id {
        _ if id.is_exact_fit() => &[1, 10],
        FamilyId::ReluIndicator { .. } | FamilyId::LeakyReluIndicator { .. } => {
            &[1, 10, 100, 1000, 10_000]
        }
        _ => &[1, 10, 100, 1000],
    };
    factors.iter().map(|f| n0.saturating_mul(*f)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::realize;

    #[test]
    fn relu_theta_matches_displayed_formulas() {
        let theta =
            sequence_theta(FamilyId::ReluIndicator { gamma: 0.0 }, 1, Domain::unit(), 2).unwrap();
        assert_eq!(theta.values(), &[2.0, 2.0, -0.5, -1.5, 1.0, -1.0, 0.0]);
    }

    #[test]
    fn softplus_exact_identity_theta() {
        let theta = sequence_theta(FamilyId::SoftplusIdentityExact, 1, Domain::unit(), 2).unwrap();
        assert_eq!(theta.values(), &[1.0, -1.0, 0.0, 0.0, 1.0, -1.0, 0.0]);
    }

    #[test]
    fn repu_theta_matches_displayed_formulas() {
        let theta = sequence_theta(FamilyId::RepuPower { k: 2 }, 10, Domain::unit(), 2).unwrap();
        assert_eq!(theta.values(), &[1.0, 1.0, 0.1 - 0.5, -0.5, 5.0, -5.0, 0.0]);
    }

    #[test]
    fn surplus_neurons_are_zero_filled() {
        let theta =
            sequence_theta(FamilyId::ReluIndicator { gamma: 0.0 }, 5, Domain::unit(), 4).unwrap();
        for i in 2..4 {
            assert_eq!((theta.w(i), theta.b(i), theta.v(i)), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn width_and_index_guards() {
        assert!(sequence_theta(FamilyId::SoftplusSquare, 1, Domain::unit(), 1).is_err());
        assert!(sequence_theta(FamilyId::SoftplusSquare, 0, Domain::unit(), 2).is_err());
        assert!(FamilyId::parse("isru_square:3.5").is_err());
        assert!(FamilyId::parse("leaky_relu_indicator:1").is_err());
        assert!(FamilyId::parse("repu_power:1").is_err());
    }

    #[test]
    fn relu_bound_values() {
        let b1 = sequence_risk_bound(FamilyId::ReluIndicator { gamma: 0.0 }, 1, Domain::unit());
        assert_eq!(b1, Some(0.125));
        let b1000 =
            sequence_risk_bound(FamilyId::ReluIndicator { gamma: 0.0 }, 1000, Domain::unit());
        assert_eq!(b1000, Some(1.0 / 2006.0));
        assert_eq!(sequence_risk_bound(FamilyId::SoftplusSquare, 7, Domain::unit()), None);
    }

    #[test]
    fn leaky_ramp_is_exact_for_any_leak() {
        // The ramp construction reproduces 0 below, 1 above, and the linear
        // blend between the breakpoints, for positive and negative leaks.
        for gamma in [-0.7, 0.3, 2.0] {
            let id = if gamma > 0.0 {
                FamilyId::LeakyReluIndicator { gamma }
            } else {
                FamilyId::ReluIndicator { gamma }
            };
            let theta = sequence_theta(id, 9, Domain::unit(), 2).unwrap();
            let kind = id.kind();
            let q1 = theta.breakpoint(0).finite().unwrap();
            let q2 = theta.breakpoint(1).finite().unwrap();
            assert!((realize(&theta, kind, 0.0).unwrap()).abs() <= 1e-12);
            assert!((realize(&theta, kind, q1 / 2.0).unwrap()).abs() <= 1e-12);
            assert!((realize(&theta, kind, (q2 + 1.0) / 2.0).unwrap() - 1.0).abs() <= 1e-12);
            assert!((realize(&theta, kind, 1.0).unwrap() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn parse_round_trips() {
        for id in all_families() {
            let back = FamilyId::parse(&id.name()).unwrap();
            assert_eq!(back, id);
        }
    }

    #[test]
    fn elu_arguments_stay_in_negative_branch() {
        let domain = Domain::new(-1.0, 1.0).unwrap();
        let id = FamilyId::EluSquare;
        let n = id.min_n(domain);
        let theta = sequence_theta(id, n, domain, 2).unwrap();
        for x in [-1.0, 0.0, 1.0] {
            for i in 0..2 {
                assert!(theta.w(i) * x + theta.b(i) <= 0.0);
            }
        }
    }
}
