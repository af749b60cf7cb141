//! Gradient-flow and gradient-descent trajectories of the risk, with the
//! diagnostics used to classify runs.
//!
//! The flow integrates the augmented system `(theta' , s') = (-G(theta),
//! ||G(theta)||^2)` with an adaptive embedded Dormand-Prince 5(4) pair, so the
//! dissipation integral needed by the energy identity comes from the same
//! quadrature as the trajectory itself. Kink crossings of piecewise-affine
//! members are handled by step rejection on local-error spikes rather than
//! event location.

use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::network::ParamVector;
use crate::risk::{grad_norm, gradient_tol, risk};
use crate::solvers::ls_slope;
use crate::target::TargetFunction;

/// Default convergence/divergence thresholds for [`classify`].
pub const DEFAULT_GRAD_TOL: f64 = 1e-10;
pub const DEFAULT_DISP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub t_end: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
    /// Abort threshold on the parameter norm.
    pub norm_cap: f64,
    /// Record every n-th accepted step (the first and last are always kept).
    pub record_stride: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_steps: 200_000,
            norm_cap: 1e6,
            record_stride: 1,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let tol_range = 1e-12..=1e-3;
        if !tol_range.contains(&self.abs_tol) || !tol_range.contains(&self.rel_tol) {
            return Err(Error::InvalidParameter(format!(
                "flow tolerances must lie in [1e-12, 1e-3], got abs {} rel {}",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.norm_cap <= 0.0 || self.norm_cap.is_nan() {
            return Err(Error::InvalidParameter("norm_cap must be positive".into()));
        }
        if self.t_end <= 0.0 || !self.t_end.is_finite() || self.t_end.is_nan() {
            return Err(Error::InvalidParameter("t_end must be positive".into()));
        }
        if self.record_stride == 0 || self.max_steps == 0 {
            return Err(Error::InvalidParameter(
                "record_stride and max_steps must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Step-size rule for gradient descent.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    Constant(f64),
    Armijo {
        lambda0: f64,
        c1: f64,
        shrink: f64,
        max_backtracks: u32,
        lambda_min: f64,
    },
}

impl StepSchedule {
    pub fn armijo_default() -> Self {
        StepSchedule::Armijo {
            lambda0: 1.0,
            c1: 1e-4,
            shrink: 0.5,
            max_backtracks: 40,
            lambda_min: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedEnd,
    NormCap,
    MaxSteps,
    StepUnderflow,
    GradientFailure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    GradientFlow,
    GradientDescent,
}

/// One recorded trajectory point. For gradient descent `t` is the step index
/// and `dissipation` stays zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub theta: ParamVector,
    pub risk: f64,
    pub grad_norm: f64,
    pub param_norm: f64,
    pub dissipation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub mode: RunMode,
    pub kind: String,
    pub target: String,
    pub domain: Domain,
    pub config_hash: String,
    pub termination: Termination,
    pub norm_cap: f64,
    /// Line-search exhaustion events during gradient descent.
    pub armijo_failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn initial_risk(&self) -> f64 {
        self.samples.first().map(|s| s.risk).unwrap_or(f64::NAN)
    }

    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("trajectories hold at least the initial sample")
    }

    /// Largest single-sample rise of the risk along the run (0 when the risk
    /// is non-increasing).
    pub fn max_risk_increase(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[1].risk - w[0].risk)
            .fold(0.0, f64::max)
    }

    /// Largest violation of the a priori norm bound
    /// `||theta_t|| <= ||theta_0|| + sqrt(t L(theta_0))`.
    pub fn norm_bound_slack(&self) -> f64 {
        let n0 = self.samples[0].param_norm;
        let l0 = self.samples[0].risk;
        self.samples
            .iter()
            .map(|s| s.param_norm - n0 - (s.t * l0).max(0.0).sqrt())
            .fold(0.0, f64::max)
    }

    /// Least-squares slope of the parameter norm against time over the whole
    /// run.
    pub fn norm_trend_slope(&self) -> f64 {
        let ts: Vec<f64> = self.samples.iter().map(|s| s.t).collect();
        let ns: Vec<f64> = self.samples.iter().map(|s| s.param_norm).collect();
        ls_slope(&ts, &ns)
    }
}

/// Classification of a finished run. The divergence verdict is evidence of
/// escape (norm cap hit, or certified-floor risk with a rising norm trend) --
/// at these horizons actual norm growth is at most `sqrt(t L_0)`, so no run
/// can exhibit an infinite norm directly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Diverging {
        hit_norm_cap: bool,
        norm_slope: f64,
        final_norm: f64,
        final_risk: f64,
    },
    Converged {
        theta: ParamVector,
        grad_norm: f64,
        risk: f64,
    },
    Undecided {
        reason: String,
    },
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Problem<'a> {
    kind: ActivationKind,
    target: &'a TargetFunction,
    domain: Domain,
    grad_quad_tol: f64,
}

impl Problem<'_> {
    fn gradient(&self, theta: &ParamVector) -> Result<Vec<f64>> {
        gradient_tol(theta, self.kind, self.target, self.domain, self.grad_quad_tol)
    }

    fn risk(&self, theta: &ParamVector) -> Result<f64> {
        Ok(risk(theta, self.kind, self.target, self.domain, self.grad_quad_tol)?.value)
    }

    /// Augmented right-hand side at `(theta, s)`.
    fn rhs(&self, y: &[f64], h: usize) -> Result<Vec<f64>> {
        let theta = ParamVector::new(h, y[..y.len() - 1].to_vec())?;
        let g = self.gradient(&theta)?;
        let gn2: f64 = g.iter().map(|x| x * x).sum();
        let mut out: Vec<f64> = g.iter().map(|x| -x).collect();
        out.push(gn2);
        Ok(out)
    }
}

fn fnv1a(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

/// Integrate the gradient flow from `theta0`.
pub fn gf_integrate(
    theta0: &ParamVector,
    kind: ActivationKind,
    target: &TargetFunction,
    domain: Domain,
    cfg: &FlowConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let h = theta0.h();
    let dim = theta0.dim();
    let grad_quad_tol = (cfg.abs_tol / 100.0).clamp(1e-13, 1e-9);
    let problem = Problem { kind, target, domain, grad_quad_tol };

    let initial_risk = problem
        .risk(theta0)
        .map_err(|e| Error::GradientFailure(format!("initial risk: {e}")))?;
    if !initial_risk.is_finite() {
        return Err(Error::NonFinite("initial risk"));
    }

    let mut samples = Vec::new();
    let record = |samples: &mut Vec<Sample>, t: f64, y: &[f64]| -> Result<()> {
        let theta = ParamVector::new(h, y[..dim].to_vec())?;
        let g = problem.gradient(&theta)?;
        samples.push(Sample {
            t,
            param_norm: theta.norm(),
            risk: problem.risk(&theta)?,
            grad_norm: grad_norm(&g),
            theta,
            dissipation: y[dim],
        });
        Ok(())
    };

    let mut y: Vec<f64> = theta0.values().to_vec();
    y.push(0.0);
    let mut t = 0.0;
    record(&mut samples, t, &y)?;

    let mut step = (cfg.t_end / 100.0).min(1e-2).max(1e-8);
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    let mut accepted_since_record = 0usize;
    let mut steps = 0usize;
    let mut termination = Termination::ReachedEnd;

    // Stop within one rounding step of the horizon so the final clipped step
    // cannot masquerade as step-size underflow.
    'outer: while t < cfg.t_end * (1.0 - 1e-12) {
        if steps >= cfg.max_steps {
            termination = Termination::MaxSteps;
            break;
        }
        steps += 1;
        step = step.min(cfg.t_end - t);
        if step < 1e-14 * t.max(1.0) {
            termination = Termination::StepUnderflow;
            break;
        }

        k.clear();
        match problem.rhs(&y, h) {
            Ok(f0) => k.push(f0),
            Err(e) => {
                termination = Termination::GradientFailure(e.to_string());
                break;
            }
        }
        for stage in 0..6 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    for (yi, ki) in ys.iter_mut().zip(kj.iter()) {
                        *yi += step * a * ki;
                    }
                }
            }
            let _ = C; // stage times are implicit: the RHS is autonomous
            match problem.rhs(&ys, h) {
                Ok(f) => k.push(f),
                Err(e) => {
                    termination = Termination::GradientFailure(e.to_string());
                    break 'outer;
                }
            }
        }

        let mut y5 = y.clone();
        let mut err_vec = vec![0.0; y.len()];
        for (j, kj) in k.iter().enumerate() {
            for i in 0..y.len() {
                y5[i] += step * B5[j] * kj[i];
                err_vec[i] += step * (B5[j] - B4[j]) * kj[i];
            }
        }
        let mut err_norm = 0.0;
        for i in 0..y.len() {
            let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y5[i].abs());
            err_norm += (err_vec[i] / scale).powi(2);
        }
        err_norm = (err_norm / y.len() as f64).sqrt();

        if err_norm <= 1.0 {
            t += step;
            y = y5;
            accepted_since_record += 1;
            let param_norm: f64 = y[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
            let due = accepted_since_record >= cfg.record_stride;
            let capped = param_norm > cfg.norm_cap;
            if due || capped || t >= cfg.t_end {
                record(&mut samples, t, &y)?;
                accepted_since_record = 0;
            }
            if capped {
                termination = Termination::NormCap;
                break;
            }
        }
        let factor = if err_norm > 0.0 {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        debug_assert!(factor.is_finite());
        step *= factor;
    }

    // Make sure the last computed state is recorded.
    if accepted_since_record > 0 {
        record(&mut samples, t, &y)?;
    }

    let config_hash = fnv1a(serde_json::to_string(cfg).expect("config serializes").as_bytes());
    Ok(Trajectory {
        samples,
        meta: TrajectoryMeta {
            mode: RunMode::GradientFlow,
            kind: kind.to_string(),
            target: target.to_string(),
            domain,
            config_hash,
            termination,
            norm_cap: cfg.norm_cap,
            armijo_failures: 0,
        },
    })
}

/// Iterate gradient descent `theta <- theta - lambda G(theta)`.
pub fn gd_iterate(
    theta0: &ParamVector,
    kind: ActivationKind,
    target: &TargetFunction,
    domain: Domain,
    schedule: StepSchedule,
    n_steps: usize,
    cfg: &FlowConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let grad_quad_tol = (cfg.abs_tol / 100.0).clamp(1e-13, 1e-9);
    let problem = Problem { kind, target, domain, grad_quad_tol };

    let mut theta = theta0.clone();
    let mut risk_now = problem.risk(&theta)?;
    let mut samples = Vec::new();
    let mut armijo_failures = 0usize;
    let mut termination = Termination::ReachedEnd;

    let push = |samples: &mut Vec<Sample>, n: usize, theta: &ParamVector, risk: f64, g: &[f64]| {
        samples.push(Sample {
            t: n as f64,
            theta: theta.clone(),
            risk,
            grad_norm: grad_norm(g),
            param_norm: theta.norm(),
            dissipation: 0.0,
        });
    };

    let g0 = problem.gradient(&theta)?;
    push(&mut samples, 0, &theta, risk_now, &g0);

    for n in 1..=n_steps {
        let g = problem.gradient(&theta)?;
        let gn2: f64 = g.iter().map(|x| x * x).sum();
        let lambda = match schedule {
            StepSchedule::Constant(l) => l,
            StepSchedule::Armijo { lambda0, c1, shrink, max_backtracks, lambda_min } => {
                let mut l = lambda0;
                let mut accepted = None;
                for _ in 0..=max_backtracks {
                    let mut cand = theta.clone();
                    for (p, gi) in cand.values_mut().iter_mut().zip(g.iter()) {
                        *p -= l * gi;
                    }
                    let cand_risk = problem.risk(&cand)?;
                    if cand_risk <= risk_now - c1 * l * gn2 {
                        accepted = Some(l);
                        break;
                    }
                    l *= shrink;
                    if l < lambda_min {
                        break;
                    }
                }
                accepted.unwrap_or_else(|| {
                    armijo_failures += 1;
                    lambda_min
                })
            }
        };
        for (p, gi) in theta.values_mut().iter_mut().zip(g.iter()) {
            *p -= lambda * gi;
        }
        risk_now = problem.risk(&theta)?;

        let last = n == n_steps;
        if n % cfg.record_stride == 0 || last || theta.norm() > cfg.norm_cap {
            let g_after = problem.gradient(&theta)?;
            push(&mut samples, n, &theta, risk_now, &g_after);
        }
        if theta.norm() > cfg.norm_cap {
            termination = Termination::NormCap;
            break;
        }
    }

    let config_hash = fnv1a(serde_json::to_string(cfg).expect("config serializes").as_bytes());
    Ok(Trajectory {
        samples,
        meta: TrajectoryMeta {
            mode: RunMode::GradientDescent,
            kind: kind.to_string(),
            target: target.to_string(),
            domain,
            config_hash,
            termination,
            norm_cap: cfg.norm_cap,
            armijo_failures,
        },
    })
}

/// Classify a finished trajectory.
///
/// `Converged` needs a small final gradient and a small trailing-window
/// displacement; `Diverging` needs either a norm-cap abort or risk below the
/// certified floor throughout the trailing half together with a strictly
/// rising norm trend there.
pub fn classify(tr: &Trajectory, eps_floor: f64, grad_tol: f64, disp_tol: f64) -> Verdict {
    let n = tr.samples.len();
    if n == 0 {
        return Verdict::Undecided { reason: "empty trajectory".into() };
    }
    let last = tr.final_sample();

    if tr.meta.termination == Termination::NormCap
        || tr.samples.iter().any(|s| s.param_norm > tr.meta.norm_cap)
    {
        return Verdict::Diverging {
            hit_norm_cap: true,
            norm_slope: tr.norm_trend_slope(),
            final_norm: last.param_norm,
            final_risk: last.risk,
        };
    }

    // Trailing 10% (at least two samples) for the displacement window.
    let window = (n / 10).max(2).min(n);
    let tail = &tr.samples[n - window..];
    let displacement = tail
        .iter()
        .map(|s| {
            s.theta
                .values()
                .iter()
                .zip(last.theta.values())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    if displacement <= disp_tol && last.grad_norm <= grad_tol {
        return Verdict::Converged {
            theta: last.theta.clone(),
            grad_norm: last.grad_norm,
            risk: last.risk,
        };
    }

    let half = &tr.samples[n / 2..];
    let below_floor = half.iter().all(|s| s.risk < eps_floor);
    let ts: Vec<f64> = half.iter().map(|s| s.t).collect();
    let ns: Vec<f64> = half.iter().map(|s| s.param_norm).collect();
    let slope = ls_slope(&ts, &ns);
    if below_floor && slope > 0.0 {
        return Verdict::Diverging {
            hit_norm_cap: false,
            norm_slope: slope,
            final_norm: last.param_norm,
            final_risk: last.risk,
        };
    }

    let reason = if !below_floor && displacement > disp_tol {
        "risk above the certified floor and still moving".to_string()
    } else if below_floor {
        format!("risk below floor but norm trend slope {slope} is not positive")
    } else {
        format!("final gradient norm {} above tolerance {grad_tol}", last.grad_norm)
    };
    Verdict::Undecided { reason }
}

/// Largest defect of the dissipation identity
/// `L(theta_0) - L(theta_t) = integral of ||G||^2` along a gradient-flow run.
pub fn check_energy_identity(tr: &Trajectory) -> Result<f64> {
    if tr.meta.mode != RunMode::GradientFlow {
        return Err(Error::UnsupportedKind(
            "energy identity applies to gradient-flow trajectories only".into(),
        ));
    }
    let l0 = tr.initial_risk();
    Ok(tr
        .samples
        .iter()
        .map(|s| (l0 - s.risk - s.dissipation).abs())
        .fold(0.0, f64::max))
}
