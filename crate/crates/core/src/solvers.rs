//! Small dense solvers shared by the verification and data-fitting modules:
//! damped least squares with finite-difference Jacobians, a Nelder-Mead
//! simplex for derivative-free cross-checks, and scalar bracketing.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

pub struct LmOptions {
    pub max_iters: usize,
    /// Stop once the residual norm drops below this.
    pub target_norm: f64,
    pub fd_step: f64,
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub lambda_max: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iters: 300,
            target_norm: 0.0,
            fd_step: 1e-7,
            lambda0: 1e-3,
            lambda_up: 10.0,
            lambda_down: 0.25,
            lambda_max: 1e12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    /// Final residual norm `||F(x)||`.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn residual_norm(f: &[f64]) -> f64 {
    f.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Minimize `||F(x)||^2` by Levenberg-Marquardt with a forward-difference
/// Jacobian. `converged` reports whether `target_norm` was reached.
pub fn levenberg_marquardt<F>(f: F, x0: &[f64], opts: &LmOptions) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    let m = fx.len();
    let mut norm = residual_norm(&fx);
    let mut lambda = opts.lambda0;
    let mut iters = 0;

    while iters < opts.max_iters && norm > opts.target_norm {
        iters += 1;
        // Forward-difference Jacobian, scaled per coordinate.
        let mut jac = DMatrix::zeros(m, n);
        let mut probe = x.clone();
        for j in 0..n {
            let step = opts.fd_step * (1.0 + x[j].abs());
            probe[j] = x[j] + step;
            let fp = f(&probe)?;
            probe[j] = x[j];
            for i in 0..m {
                jac[(i, j)] = (fp[i] - fx[i]) / step;
            }
        }
        let fv = DVector::from_column_slice(&fx);
        let jtj = jac.transpose() * &jac;
        let jtf = jac.transpose() * fv;
        if jtf.amax() == 0.0 {
            break; // stationary point of the objective
        }

        let mut improved = false;
        while lambda <= opts.lambda_max {
            let mut damped = jtj.clone();
            for d in 0..n {
                damped[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
            }
            if let Some(chol) = Cholesky::new(damped) {
                let delta = chol.solve(&jtf);
                let cand: Vec<f64> = (0..n).map(|j| x[j] - delta[j]).collect();
                let fc = f(&cand)?;
                let cn = residual_norm(&fc);
                if cn < norm {
                    x = cand;
                    fx = fc;
                    norm = cn;
                    lambda = (lambda * opts.lambda_down).max(1e-12);
                    improved = true;
                    break;
                }
            }
            lambda *= opts.lambda_up;
        }
        if !improved {
            break; // damping exhausted without progress
        }
    }

    Ok(LmOutcome { x, residual_norm: norm, iterations: iters, converged: norm <= opts.target_norm })
}

/// Nelder-Mead simplex minimization of a scalar function; returns the best
/// vertex and its value.
pub fn nelder_mead<F>(f: F, x0: &[f64], scale: f64, max_iters: usize, tol: f64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for j in 0..n {
        let mut v = x0.to_vec();
        v[j] += scale;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    for _ in 0..max_iters {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];
        if (values[worst] - values[best]).abs() <= tol * (1.0 + values[best].abs()) {
            break;
        }

        let mut centroid = vec![0.0; n];
        for &idx in order.iter().take(n) {
            for j in 0..n {
                centroid[j] += simplex[idx][j] / n as f64;
            }
        }
        let blend = |a: f64| -> Vec<f64> {
            (0..n)
                .map(|j| centroid[j] + a * (simplex[worst][j] - centroid[j]))
                .collect()
        };

        let reflected = blend(-1.0);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = blend(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = blend(0.5);
            let fc = f(&contracted);
            if fc < values[worst] {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[best].clone();
                for idx in 0..=n {
                    if idx == best {
                        continue;
                    }
                    for j in 0..n {
                        simplex[idx][j] = anchor[j] + 0.5 * (simplex[idx][j] - anchor[j]);
                    }
                    values[idx] = f(&simplex[idx]);
                }
            }
        }
    }

    let mut best = 0;
    for idx in 1..=n {
        if values[idx] < values[best] {
            best = idx;
        }
    }
    (simplex[best].clone(), values[best])
}

/// Expand geometrically from `[-1, 1]` until `f` changes sign, then bisect.
/// `f` must be continuous with `f(t) < 0` far left and `f(t) > 0` far right.
pub fn bracket_and_bisect<F>(f: F, max_expand: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut lo = -1.0;
    let mut hi = 1.0;
    let mut flo = f(lo);
    let mut fhi = f(hi);
    let mut expansions = 0;
    while flo > 0.0 {
        lo *= 2.0;
        flo = f(lo);
        expansions += 1;
        if expansions > max_expand {
            return Err(Error::SolverFailure("bracket expansion failed on the left".into()));
        }
    }
    while fhi < 0.0 {
        hi *= 2.0;
        fhi = f(hi);
        expansions += 1;
        if expansions > max_expand {
            return Err(Error::SolverFailure("bracket expansion failed on the right".into()));
        }
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() <= f64::EPSILON * (lo.abs() + hi.abs() + 1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Least-squares slope of `y` against `t`.
pub fn ls_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len() as f64;
    if ts.len() < 2 {
        return 0.0;
    }
    let tm = ts.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, y) in ts.iter().zip(ys.iter()) {
        num += (t - tm) * (y - ym);
        den += (t - tm) * (t - tm);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}
