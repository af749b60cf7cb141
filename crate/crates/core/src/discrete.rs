//! The data-driven regime: empirical risk over finitely many points with a
//! single logistic neuron, exact-fit constructions for two and three points,
//! the escaping low-risk sequence for non-fittable three-point data, and its
//! risk floor for constant realizations.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::{logistic_raw, softplus_raw};
use crate::error::{Error, Result};
use crate::network::ParamVector;
use crate::solvers::{bracket_and_bisect, levenberg_marquardt, LmOptions};

/// Supervised pairs with strictly increasing inputs. The constructions below
/// cover two and three points; risk evaluation accepts any size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DataSetRepr", into = "DataSetRepr")]
pub struct DataSet {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DataSetRepr {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl TryFrom<DataSetRepr> for DataSet {
    type Error = Error;

    fn try_from(r: DataSetRepr) -> Result<Self> {
        DataSet::new(r.xs, r.ys)
    }
}

impl From<DataSet> for DataSetRepr {
    fn from(d: DataSet) -> Self {
        DataSetRepr { xs: d.xs, ys: d.ys }
    }
}

impl DataSet {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::InvalidParameter(
                "xs and ys must be nonempty and of equal length".into(),
            ));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("data entry"));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("xs must be strictly increasing".into()));
        }
        Ok(Self { xs, ys })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Parse `x,y` CSV content; a leading `x,y` header row is optional.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('x')) {
                continue;
            }
            let (a, b) = line.split_once(',').ok_or_else(|| {
                Error::InvalidParameter(format!("line {}: expected 'x,y'", lineno + 1))
            })?;
            let parse = |t: &str| {
                t.trim().parse::<f64>().map_err(|_| {
                    Error::InvalidParameter(format!("line {}: bad number '{t}'", lineno + 1))
                })
            };
            xs.push(parse(a)?);
            ys.push(parse(b)?);
        }
        Self::new(xs, ys)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for (x, y) in self.xs.iter().zip(self.ys.iter()) {
            out.push_str(&format!("{x},{y}\n"));
        }
        out
    }
}

/// Case split for two- and three-point datasets. `j`/`k` in the monotone
/// case are 1-based indices into `{1, 3}`: `j` points at the far output
/// (ties resolve to the smaller index), `k` at the other one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataCase {
    ExactFitTwo,
    InteriorThree,
    MonotoneThree { j: usize, k: usize },
    Constant,
    Other,
}

/// Classify a dataset with two or three points.
pub fn classify_data(data: &DataSet) -> Result<DataCase> {
    match data.len() {
        2 => Ok(DataCase::ExactFitTwo),
        3 => {
            let (y1, y2, y3) = (data.ys[0], data.ys[1], data.ys[2]);
            if y1 == y2 && y2 == y3 {
                return Ok(DataCase::Constant);
            }
            if y1.min(y3) < y2 && y2 < y1.max(y3) {
                return Ok(DataCase::InteriorThree);
            }
            let d1 = (y1 - y2).abs();
            let d3 = (y3 - y2).abs();
            if (y1 - y2) * (y3 - y2) >= 0.0 && d1.max(d3) > 0.0 {
                let j = if d1 >= d3 { 1 } else { 3 };
                return Ok(DataCase::MonotoneThree { j, k: 4 - j });
            }
            Ok(DataCase::Other)
        }
        m => Err(Error::InvalidParameter(format!(
            "classification covers 2 or 3 points, got {m}"
        ))),
    }
}

/// Empirical mean-squared risk of a single logistic neuron.
pub fn discrete_risk(theta: &ParamVector, data: &DataSet) -> Result<f64> {
    if theta.h() != 1 {
        return Err(Error::InvalidParameter(format!(
            "discrete risk is defined for h = 1, got h = {}",
            theta.h()
        )));
    }
    let m = data.len() as f64;
    let mut acc = 0.0;
    for (x, y) in data.xs.iter().zip(data.ys.iter()) {
        let r = theta.c() + theta.v(0) * logistic_raw(theta.w(0) * x + theta.b(0)) - y;
        acc += r * r;
    }
    Ok(acc / m)
}

/// Exact interpolation of two points: `w = 1`, `b = 0`, the output weight
/// matching the secant through the two logistic values.
pub fn fit_two_points(data: &DataSet) -> Result<ParamVector> {
    if data.len() != 2 {
        return Err(Error::WrongDataCase {
            expected: "two points",
            got: format!("{} points", data.len()),
        });
    }
    let (x1, x2) = (data.xs[0], data.xs[1]);
    let (y1, y2) = (data.ys[0], data.ys[1]);
    let s1 = logistic_raw(x1);
    let s2 = logistic_raw(x2);
    let v = if y1 == y2 { 0.0 } else { (y2 - y1) / (s2 - s1) };
    let c = y1 - v * s1;
    ParamVector::from_parts(&[1.0], &[0.0], &[v], c)
}

/// `ln` of the three-point ratio `(N(x3) - N(x1)) / (N(x2) - N(x1))`
/// realized by a logistic neuron with parameters `(w, b)`, evaluated
/// stably for large `|w|`.
fn ln_ratio(xs: &[f64], w: f64, b: f64) -> f64 {
    // First factor ((e^{-x1 w} - e^{-x3 w}) / (e^{-x1 w} - e^{-x2 w}))
    // via phi(z) = (1 - e^{-z}) / z > 0.
    let d31 = xs[2] - xs[0];
    let d21 = xs[1] - xs[0];
    let ln_phi = |z: f64| -> f64 {
        if z < -30.0 {
            -z - (-z).ln()
        } else if z.abs() < 1e-8 {
            -z / 2.0
        } else {
            ((-(-z).exp_m1()) / z).ln()
        }
    };
    let first = (d31 / d21).ln() + ln_phi(d31 * w) - ln_phi(d21 * w);
    // Second factor (1 + e^{-x2 w - b}) / (1 + e^{-x3 w - b}).
    let u2 = -xs[1] * w - b;
    let u3 = -xs[2] * w - b;
    first + softplus_raw(u2) - softplus_raw(u3)
}

fn residual_vector(theta: &ParamVector, data: &DataSet) -> Result<Vec<f64>> {
    Ok(data
        .xs
        .iter()
        .zip(data.ys.iter())
        .map(|(x, y)| theta.c() + theta.v(0) * logistic_raw(theta.w(0) * x + theta.b(0)) - y)
        .collect())
}

/// Exact fit of interior three-point data (`y2` strictly between `y1` and
/// `y3`): a one-parameter continuation solves the scalar ratio equation by
/// bisection, with a multistart damped least-squares fallback.
pub fn fit_three_points_interior(data: &DataSet, tol: f64) -> Result<ParamVector> {
    let case = classify_data(data)?;
    if case != DataCase::InteriorThree {
        return Err(Error::WrongDataCase { expected: "interior three", got: format!("{case:?}") });
    }
    let (y1, y2, y3) = (data.ys[0], data.ys[1], data.ys[2]);
    // Interior data always orders so that the ratio exceeds one.
    let ratio = (y3 - y1) / (y2 - y1);
    debug_assert!(ratio > 1.0);
    let target = ratio.ln();

    // Continuation path: b = -x3 w on the steep side (t >= 0), b = 0 on the
    // flat side (t < 0); the ratio tends to +inf and 1 respectively, and
    // depends continuously on t through the removable w = 0 point.
    let path = |t: f64| -> (f64, f64) {
        if t >= 0.0 {
            (t, -data.xs[2] * t)
        } else {
            (t, 0.0)
        }
    };
    let f = |t: f64| -> f64 {
        let (w, b) = path(t);
        ln_ratio(&data.xs, w, b) - target
    };
    if let Ok(t) = bracket_and_bisect(f, 200) {
        let (w, b) = path(t);
        if let Ok(theta) = complete_three_point_fit(data, w, b) {
            if discrete_risk(&theta, data)? <= tol * tol {
                return Ok(theta);
            }
        }
    }

    // Damped least-squares fallback from sixteen seeded starts.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let opts = LmOptions { max_iters: 625, target_norm: tol, ..Default::default() };
    for _ in 0..16 {
        let x0: Vec<f64> = vec![
            rng.gen_range(-8.0..8.0),
            rng.gen_range(-8.0..8.0),
            rng.gen_range(-8.0..8.0),
            rng.gen_range(-8.0..8.0),
        ];
        let out = levenberg_marquardt(
            |x| {
                let theta = ParamVector::new(1, x.to_vec())?;
                residual_vector(&theta, data)
            },
            &x0,
            &opts,
        )?;
        if out.converged {
            let theta = ParamVector::new(1, out.x)?;
            if discrete_risk(&theta, data)? <= tol * tol {
                return Ok(theta);
            }
        }
    }
    Err(Error::SolverFailure(
        "three-point interior fit did not reach the tolerance".into(),
    ))
}

/// Solve the remaining linear conditions `N(x1) = y1`, `N(x2) = y2` for
/// `(v, c)` given `(w, b)`.
fn complete_three_point_fit(data: &DataSet, w: f64, b: f64) -> Result<ParamVector> {
    let s1 = logistic_raw(w * data.xs[0] + b);
    let s2 = logistic_raw(w * data.xs[1] + b);
    if s1 == s2 {
        return Err(Error::SolverFailure("degenerate logistic values".into()));
    }
    let v = (data.ys[1] - data.ys[0]) / (s2 - s1);
    let c = data.ys[0] - v * s1;
    ParamVector::from_parts(&[w], &[b], &[v], c)
}

/// The escaping sequence for monotone three-point data: a step of growing
/// sharpness pinned at the far point, with the mean of the near pair as its
/// other level. Its risk tends to the infimum bound from below the floor.
pub fn infimum_sequence(data: &DataSet, n: u32) -> Result<ParamVector> {
    let case = classify_data(data)?;
    let DataCase::MonotoneThree { j, k } = case else {
        return Err(Error::WrongDataCase { expected: "monotone three", got: format!("{case:?}") });
    };
    if n == 0 {
        return Err(Error::InvalidParameter("sequence index n must be >= 1".into()));
    }
    let nf = f64::from(n);
    let jf = j as f64;
    let yj = data.ys[j - 1];
    let yk = data.ys[k - 1];
    let y2 = data.ys[1];
    let w = (2.0 - jf) * nf;
    let b = (jf - 2.0) * nf * data.xs[j - 1];
    let c = 2.0 * yj - (y2 + yk) / 2.0;
    let v = y2 + yk - 2.0 * yj;
    ParamVector::from_parts(&[w], &[b], &[v], c)
}

/// Limit of the risk along [`infimum_sequence`], and the strict lower bound
/// for every constant realization: `(2/3) ((y2 - yk) / 2)^2`.
pub fn constant_floor(data: &DataSet) -> Result<f64> {
    let case = classify_data(data)?;
    let DataCase::MonotoneThree { k, .. } = case else {
        return Err(Error::WrongDataCase { expected: "monotone three", got: format!("{case:?}") });
    };
    let d = (data.ys[1] - data.ys[k - 1]) / 2.0;
    Ok(2.0 / 3.0 * d * d)
}
