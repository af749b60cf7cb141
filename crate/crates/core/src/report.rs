//! Artifact emission: CSV and JSON writers with schema validation before any
//! byte reaches disk. Artifacts are timestamp-free so identical configs and
//! seeds produce identical bytes; wall-clock data lives in the run metadata
//! only.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::constructions::FamilyReport;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::verification::CriticalPoint;

fn ensure_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(Box::leak(format!("{name} in artifact").into_boxed_str())))
    }
}

/// `t,risk,grad_norm,param_norm[,theta_0..theta_{d-1}]`
pub fn trajectory_csv(tr: &Trajectory, include_theta: bool) -> Result<String> {
    let mut out = String::from("t,risk,grad_norm,param_norm");
    if include_theta {
        let dim = tr.samples.first().map(|s| s.theta.dim()).unwrap_or(0);
        for j in 0..dim {
            write!(out, ",theta_{j}").expect("string write");
        }
    }
    out.push('\n');
    for s in &tr.samples {
        for (name, v) in [
            ("t", s.t),
            ("risk", s.risk),
            ("grad_norm", s.grad_norm),
            ("param_norm", s.param_norm),
        ] {
            ensure_finite(name, v)?;
        }
        write!(out, "{},{},{},{}", s.t, s.risk, s.grad_norm, s.param_norm).expect("string write");
        if include_theta {
            for v in s.theta.values() {
                ensure_finite("theta", *v)?;
                write!(out, ",{v}").expect("string write");
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// `family,n,risk,bound,pass` (empty bound column when none is stated).
pub fn sequence_csv(reports: &[FamilyReport]) -> Result<String> {
    let mut out = String::from("family,n,risk,bound,pass\n");
    for rep in reports {
        for row in &rep.rows {
            ensure_finite("risk", row.risk)?;
            let bound = match row.bound {
                Some(b) => {
                    ensure_finite("bound", b)?;
                    b.to_string()
                }
                None => String::new(),
            };
            let pass = rep.pass && row.bound_ok;
            writeln!(out, "{},{},{},{},{}", rep.family, row.n, row.risk, bound, pass)
                .expect("string write");
        }
    }
    Ok(out)
}

/// `seed,risk,grad_norm,theta_0..theta_{d-1}`
pub fn critical_csv(points: &[CriticalPoint]) -> Result<String> {
    let dim = points.first().map(|p| p.theta.dim()).unwrap_or(0);
    let mut out = String::from("seed,risk,grad_norm");
    for j in 0..dim {
        write!(out, ",theta_{j}").expect("string write");
    }
    out.push('\n');
    for p in points {
        ensure_finite("risk", p.risk)?;
        ensure_finite("grad_norm", p.grad_norm)?;
        write!(out, "{},{},{}", p.seed_id, p.risk, p.grad_norm).expect("string write");
        for v in p.theta.values() {
            ensure_finite("theta", *v)?;
            write!(out, ",{v}").expect("string write");
        }
        out.push('\n');
    }
    Ok(out)
}

/// Serialize a value to pretty JSON after a round-trip validation parse.
pub fn to_validated_json<T: Serialize>(value: &T) -> Result<String> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidParameter(format!("serialization failed: {e}")))?;
    serde_json::from_str::<serde_json::Value>(&text)
        .map_err(|e| Error::InvalidParameter(format!("artifact failed validation: {e}")))?;
    Ok(text)
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| Error::InvalidParameter(format!("cannot create {parent:?}: {e}")))?;
    }
    fs::write(path, content)
        .map_err(|e| Error::InvalidParameter(format!("cannot write {path:?}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use crate::domain::Domain;
    use crate::dynamics::{gf_integrate, FlowConfig};
    use crate::network::ParamVector;
    use crate::target::TargetFunction;

    #[test]
    fn trajectory_csv_schema() {
        let theta = ParamVector::from_parts(&[1.0], &[0.2], &[0.5], 0.0).unwrap();
        let tr = gf_integrate(
            &theta,
            ActivationKind::relu(),
            &TargetFunction::Indicator,
            Domain::unit(),
            &FlowConfig { t_end: 0.5, record_stride: 10, ..Default::default() },
        )
        .unwrap();
        let plain = trajectory_csv(&tr, false).unwrap();
        assert!(plain.starts_with("t,risk,grad_norm,param_norm\n"));
        let with_theta = trajectory_csv(&tr, true).unwrap();
        assert!(with_theta.contains(",theta_3"));
        // Every row has the same number of columns as the header.
        for text in [plain, with_theta] {
            let cols = text.lines().next().unwrap().split(',').count();
            for line in text.lines().skip(1) {
                assert_eq!(line.split(',').count(), cols);
            }
        }
    }

    #[test]
    fn csv_emission_is_deterministic() {
        let theta = ParamVector::from_parts(&[0.5, -0.4], &[0.2, 0.1], &[0.5, 0.2], 0.1).unwrap();
        let cfg = FlowConfig { t_end: 1.0, record_stride: 5, ..Default::default() };
        let mk = || {
            let tr = gf_integrate(
                &theta,
                ActivationKind::relu(),
                &TargetFunction::Indicator,
                Domain::unit(),
                &cfg,
            )
            .unwrap();
            trajectory_csv(&tr, true).unwrap()
        };
        assert_eq!(mk(), mk());
    }
}
