//! Observables on `M`: the return time, its truncation, induced sums of
//! functions on `𝓜`, and the free path of an excursion.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::PhasePoint;
use crate::geometry::TableGeometry;
use crate::induced::{excursion, InducedError, InducedStep, ReducedSpaceRule};

/// A bounded function on the full phase space `𝓜`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseFunction {
    CosPhi,
    /// `cos(2π s / |∂Q|)` of the global arc-length coordinate `s`.
    CosR,
    Const(f64),
}

impl PhaseFunction {
    pub fn eval(&self, table: &TableGeometry, x: PhasePoint) -> f64 {
        match *self {
            PhaseFunction::CosPhi => x.phi.cos(),
            PhaseFunction::CosR => {
                (TAU * table.global_r(x.component, x.r) / table.total_length()).cos()
            }
            PhaseFunction::Const(c) => c,
        }
    }

    pub fn bound(&self) -> f64 {
        match *self {
            PhaseFunction::Const(c) => c.abs(),
            _ => 1.0,
        }
    }
}

/// Index range of an induced sum: the literal `0..=R`, or `0..R` which
/// makes `∫ f dμ = μ_𝓜(f̂)/μ_𝓜(M)` exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SumRange {
    #[default]
    Inclusive,
    Kac,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailClass {
    Bounded { bound: f64 },
    /// `μ(|f| ≥ t) ≈ t^{-exponent}`.
    PolynomialTail { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    ReturnTime,
    TruncatedReturnTime { cap: u64 },
    FreePath,
    InducedSum { fhat: PhaseFunction, range: SumRange },
    /// A function on `𝓜` restricted to `M`, evaluated at the step's start.
    Phase(PhaseFunction),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown observable `{0}` (expected R, R_trunc(cap), free_path, cos_phi, cos_r, const(c) or induced_sum(fhat=cos_phi|cos_r|const[, c=…][, range=kac]))")]
pub struct ParseObservableError(pub String);

pub fn return_time(step: &InducedStep) -> f64 {
    step.return_time as f64
}

pub fn truncated_return_time(step: &InducedStep, cap: u64) -> f64 {
    step.return_time.min(cap) as f64
}

pub fn free_path(step: &InducedStep) -> f64 {
    step.tau_sum
}

/// `Σ f̂(F^m x)` over the excursion of `step`, recomputed from its start.
pub fn induced_sum(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    fhat: PhaseFunction,
    range: SumRange,
    step: &InducedStep,
) -> Result<f64, InducedError> {
    if let PhaseFunction::Const(c) = fhat {
        let terms = match range {
            SumRange::Inclusive => step.return_time + 1,
            SumRange::Kac => step.return_time,
        };
        return Ok(c * terms as f64);
    }
    let (_, path) = excursion(table, rule, step.start, step.return_time)?;
    let mut acc = fhat.eval(table, step.start);
    let upto = match range {
        SumRange::Inclusive => path.len(),
        SumRange::Kac => path.len() - 1,
    };
    for rec in &path[..upto] {
        acc += fhat.eval(table, rec.next);
    }
    Ok(acc)
}

impl Observable {
    pub fn tail_class(&self) -> TailClass {
        match self {
            Observable::ReturnTime | Observable::FreePath => {
                TailClass::PolynomialTail { exponent: 2.0 }
            }
            Observable::TruncatedReturnTime { cap } => TailClass::Bounded { bound: *cap as f64 },
            Observable::Phase(fhat) => TailClass::Bounded { bound: fhat.bound() },
            Observable::InducedSum { fhat, .. } => match fhat {
                PhaseFunction::Const(c) if *c == 0.0 => TailClass::Bounded { bound: 0.0 },
                _ => TailClass::PolynomialTail { exponent: 2.0 },
            },
        }
    }

    /// Whether evaluation replays the excursion.
    pub fn needs_path(&self) -> bool {
        matches!(
            self,
            Observable::InducedSum {
                fhat: PhaseFunction::CosPhi | PhaseFunction::CosR,
                ..
            }
        )
    }

    pub fn evaluate(
        &self,
        table: &TableGeometry,
        rule: &ReducedSpaceRule,
        step: &InducedStep,
    ) -> Result<f64, InducedError> {
        Ok(match *self {
            Observable::ReturnTime => return_time(step),
            Observable::TruncatedReturnTime { cap } => truncated_return_time(step, cap),
            Observable::FreePath => free_path(step),
            Observable::Phase(fhat) => fhat.eval(table, step.start),
            Observable::InducedSum { fhat, range } => {
                return induced_sum(table, rule, fhat, range, step)
            }
        })
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::ReturnTime => write!(f, "R"),
            Observable::TruncatedReturnTime { cap } => write!(f, "R_trunc({cap})"),
            Observable::FreePath => write!(f, "free_path"),
            Observable::Phase(PhaseFunction::CosPhi) => write!(f, "cos_phi"),
            Observable::Phase(PhaseFunction::CosR) => write!(f, "cos_r"),
            Observable::Phase(PhaseFunction::Const(c)) => write!(f, "const({c})"),
            Observable::InducedSum { fhat, range } => {
                let name = match fhat {
                    PhaseFunction::CosPhi => "cos_phi".to_string(),
                    PhaseFunction::CosR => "cos_r".to_string(),
                    PhaseFunction::Const(c) => format!("const, c={c}"),
                };
                match range {
                    SumRange::Inclusive => write!(f, "induced_sum(fhat={name})"),
                    SumRange::Kac => write!(f, "induced_sum(fhat={name}, range=kac)"),
                }
            }
        }
    }
}

impl FromStr for Observable {
    type Err = ParseObservableError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseObservableError(s.to_string());
        let s = s.trim();
        let (head, args) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(&s[i + 1..s.len() - 1])),
            Some(_) => return Err(err()),
            None => (s, None),
        };
        match (head.trim(), args) {
            ("R", None) => Ok(Observable::ReturnTime),
            ("free_path", None) => Ok(Observable::FreePath),
            ("cos_phi", None) => Ok(Observable::Phase(PhaseFunction::CosPhi)),
            ("cos_r", None) => Ok(Observable::Phase(PhaseFunction::CosR)),
            ("const", Some(a)) => Ok(Observable::Phase(PhaseFunction::Const(
                a.trim().parse().map_err(|_| err())?,
            ))),
            ("R_trunc", Some(a)) => {
                let cap: u64 = a.trim().parse().map_err(|_| err())?;
                if cap == 0 {
                    return Err(err());
                }
                Ok(Observable::TruncatedReturnTime { cap })
            }
            ("induced_sum", Some(a)) => {
                let mut fhat = None;
                let mut c = 1.0;
                let mut range = SumRange::Inclusive;
                for part in a.split(',') {
                    let (k, v) = part.split_once('=').ok_or_else(err)?;
                    match (k.trim(), v.trim()) {
                        ("fhat", v) => fhat = Some(v.to_string()),
                        ("c", v) => c = v.parse().map_err(|_| err())?,
                        ("range", "kac") => range = SumRange::Kac,
                        ("range", "inclusive") => range = SumRange::Inclusive,
                        _ => return Err(err()),
                    }
                }
                let fhat = match fhat.as_deref() {
                    Some("cos_phi") => PhaseFunction::CosPhi,
                    Some("cos_r") => PhaseFunction::CosR,
                    Some("const") => PhaseFunction::Const(c),
                    _ => return Err(err()),
                };
                Ok(Observable::InducedSum { fhat, range })
            }
            _ => Err(err()),
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::{build_table, TableSpec};
    use crate::induced::first_return;

    fn sinai_step() -> (TableGeometry, ReducedSpaceRule, InducedStep) {
        let t = build_table(TableSpec::sinai(1.0, 0.25)).unwrap();
        let rule = ReducedSpaceRule::for_table(&t);
        let s = first_return(&t, &rule, PhasePoint::new(4, 1.5 * PI * 0.25, 0.0), 10).unwrap();
        (t, rule, s)
    }

    #[test]
    fn return_time_examples() {
        let (_, _, s) = sinai_step();
        assert_eq!(return_time(&s), 2.0);
        assert!((free_path(&s) - 0.5).abs() < 1e-12);
        let t = build_table(TableSpec::stadium(1.0, 2.0)).unwrap();
        let rule = ReducedSpaceRule::for_table(&t);
        let axial = first_return(&t, &rule, PhasePoint::new(3, 0.5 * PI, 0.0), 10).unwrap();
        assert_eq!(return_time(&axial), 1.0);
        assert!((free_path(&axial) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn truncation() {
        let (_, _, mut s) = sinai_step();
        s.return_time = 7;
        assert_eq!(truncated_return_time(&s, 5), 5.0);
        s.return_time = 3;
        assert_eq!(truncated_return_time(&s, 5), 3.0);
        assert_eq!(truncated_return_time(&s, 1), 1.0);
    }

    #[test]
    fn induced_sum_examples() {
        let (t, rule, s) = sinai_step();
        let one = induced_sum(&t, &rule, PhaseFunction::Const(1.0), SumRange::Inclusive, &s);
        assert_eq!(one.unwrap(), 3.0);
        let zero = induced_sum(&t, &rule, PhaseFunction::Const(0.0), SumRange::Inclusive, &s);
        assert_eq!(zero.unwrap(), 0.0);
        let cos = induced_sum(&t, &rule, PhaseFunction::CosPhi, SumRange::Inclusive, &s).unwrap();
        assert!((cos - 3.0).abs() < 1e-12);
        let kac = induced_sum(&t, &rule, PhaseFunction::CosPhi, SumRange::Kac, &s).unwrap();
        assert!((kac - 2.0).abs() < 1e-12);
    }

    #[test]
    fn names_roundtrip() {
        for name in [
            "R",
            "R_trunc(100)",
            "free_path",
            "induced_sum(fhat=cos_phi)",
            "induced_sum(fhat=cos_r, range=kac)",
            "induced_sum(fhat=const, c=2.5)",
            "cos_phi",
            "cos_r",
            "const(0.5)",
        ] {
            let o: Observable = name.parse().unwrap();
            let again: Observable = o.to_string().parse().unwrap();
            assert_eq!(o, again, "{name}");
        }
        for bad in ["Q", "R_trunc(0)", "R_trunc(x)", "induced_sum(fhat=sin)", "R(1)"] {
            assert!(bad.parse::<Observable>().is_err(), "{bad}");
        }
    }
}
