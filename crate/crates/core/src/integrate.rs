//! Fixed-step integrators for the second-order system `q̈ = f(t, q, q̇)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{DynamicsError, IntegrationError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorKind {
    ExplicitEuler,
    SymplecticEuler,
    ExplicitMidpoint,
    #[serde(rename = "rk4")]
    Rk4,
    #[serde(rename = "rk6")]
    Rk6,
}

impl IntegratorKind {
    pub const ALL: [IntegratorKind; 5] = [
        IntegratorKind::ExplicitEuler,
        IntegratorKind::SymplecticEuler,
        IntegratorKind::ExplicitMidpoint,
        IntegratorKind::Rk4,
        IntegratorKind::Rk6,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            IntegratorKind::ExplicitEuler => "explicit-euler",
            IntegratorKind::SymplecticEuler => "symplectic-euler",
            IntegratorKind::ExplicitMidpoint => "explicit-midpoint",
            IntegratorKind::Rk4 => "rk4",
            IntegratorKind::Rk6 => "rk6",
        }
    }

    /// Classical order of accuracy.
    pub fn order(&self) -> u32 {
        match self {
            IntegratorKind::ExplicitEuler | IntegratorKind::SymplecticEuler => 1,
            IntegratorKind::ExplicitMidpoint => 2,
            IntegratorKind::Rk4 => 4,
            IntegratorKind::Rk6 => 6,
        }
    }

    fn tableau(&self) -> Option<&'static Tableau> {
        match self {
            IntegratorKind::ExplicitMidpoint => Some(&MIDPOINT),
            IntegratorKind::Rk4 => Some(&RK4),
            IntegratorKind::Rk6 => Some(&RK6),
            _ => None,
        }
    }
}

impl fmt::Display for IntegratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntegratorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        match norm.as_str() {
            "explicit-euler" | "euler" => Ok(IntegratorKind::ExplicitEuler),
            "symplectic-euler" | "semi-implicit-euler" => Ok(IntegratorKind::SymplecticEuler),
            "explicit-midpoint" | "midpoint" => Ok(IntegratorKind::ExplicitMidpoint),
            "rk4" => Ok(IntegratorKind::Rk4),
            "rk6" => Ok(IntegratorKind::Rk6),
            _ => Err(format!(
                "unknown integrator `{s}` (expected one of explicit-euler, symplectic-euler, explicit-midpoint, rk4, rk6)"
            )),
        }
    }
}

/// Explicit Runge-Kutta coefficients; `a` is strictly lower triangular,
/// row `i` holding the coefficients of stages `0..i`.
pub struct Tableau {
    pub c: &'static [f64],
    pub a: &'static [&'static [f64]],
    pub b: &'static [f64],
}

impl Tableau {
    pub fn stages(&self) -> usize {
        self.b.len()
    }
}

pub static MIDPOINT: Tableau = Tableau {
    c: &[0.0, 0.5],
    a: &[&[], &[0.5]],
    b: &[0.0, 1.0],
};

pub static RK4: Tableau = Tableau {
    c: &[0.0, 0.5, 0.5, 1.0],
    a: &[&[], &[0.5], &[0.0, 0.5], &[0.0, 0.0, 1.0]],
    b: &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
};

/// Butcher's seven-stage sixth-order method.
pub static RK6: Tableau = Tableau {
    c: &[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 0.5, 0.5, 1.0],
    a: &[
        &[],
        &[1.0 / 3.0],
        &[0.0, 2.0 / 3.0],
        &[1.0 / 12.0, 1.0 / 3.0, -1.0 / 12.0],
        &[-1.0 / 16.0, 9.0 / 8.0, -3.0 / 16.0, -3.0 / 8.0],
        &[0.0, 9.0 / 8.0, -3.0 / 8.0, -3.0 / 4.0, 0.5],
        &[9.0 / 44.0, -9.0 / 11.0, 63.0 / 44.0, 18.0 / 11.0, 0.0, -16.0 / 11.0],
    ],
    b: &[11.0 / 120.0, 0.0, 27.0 / 40.0, 27.0 / 40.0, -4.0 / 15.0, -4.0 / 15.0, 11.0 / 120.0],
};

/// State after one step. `qdd` is the acceleration evaluated at the start of
/// the step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput {
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    pub qdd: DVector<f64>,
}

fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Advance `(q, q̇)` by one step of size `h`.
pub fn step<F>(
    kind: IntegratorKind,
    f: &mut F,
    t: f64,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    h: f64,
) -> Result<StepOutput, IntegrationError>
where
    F: FnMut(f64, &DVector<f64>, &DVector<f64>) -> Result<DVector<f64>, DynamicsError>,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(IntegrationError::InvalidStep(h));
    }
    let mut eval = |t: f64, q: &DVector<f64>, qd: &DVector<f64>| {
        let a = f(t, q, qd).map_err(|source| IntegrationError::Dynamics { t, source })?;
        if all_finite(&a) {
            Ok(a)
        } else {
            Err(IntegrationError::NonFinite { t })
        }
    };

    let out = match kind {
        IntegratorKind::ExplicitEuler => {
            let qdd = eval(t, q, qd)?;
            StepOutput {
                q: q + qd * h,
                qd: qd + &qdd * h,
                qdd,
            }
        }
        IntegratorKind::SymplecticEuler => {
            let qdd = eval(t, q, qd)?;
            let qd_next = qd + &qdd * h;
            StepOutput {
                q: q + &qd_next * h,
                qd: qd_next,
                qdd,
            }
        }
        _ => {
            let tab = kind.tableau().expect("multi-stage kinds have a tableau");
            let n = tab.stages();
            // stage derivatives of q (= q̇ at the stage) and of q̇ (= q̈)
            let mut kq: Vec<DVector<f64>> = Vec::with_capacity(n);
            let mut kqd: Vec<DVector<f64>> = Vec::with_capacity(n);
            for i in 0..n {
                let mut qs = q.clone();
                let mut qds = qd.clone();
                for (j, &aij) in tab.a[i].iter().enumerate() {
                    if aij != 0.0 {
                        qs.axpy(h * aij, &kq[j], 1.0);
                        qds.axpy(h * aij, &kqd[j], 1.0);
                    }
                }
                let acc = eval(t + tab.c[i] * h, &qs, &qds)?;
                kq.push(qds);
                kqd.push(acc);
            }
            let mut q_next = q.clone();
            let mut qd_next = qd.clone();
            for (i, &bi) in tab.b.iter().enumerate() {
                if bi != 0.0 {
                    q_next.axpy(h * bi, &kq[i], 1.0);
                    qd_next.axpy(h * bi, &kqd[i], 1.0);
                }
            }
            StepOutput {
                q: q_next,
                qd: qd_next,
                qdd: kqd.swap_remove(0),
            }
        }
    };
    if !all_finite(&out.q) || !all_finite(&out.qd) {
        return Err(IntegrationError::NonFinite { t: t + h });
    }
    Ok(out)
}
