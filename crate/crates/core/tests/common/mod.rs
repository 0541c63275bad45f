//! Independent oracles shared by several test targets.
#![allow(dead_code)]

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rhsim::dynamics::{gravity, rnea, ExternalForces};
use rhsim::error::DynamicsError;
use rhsim::integrate::{step, IntegratorKind};
use rhsim::model::{BodySpec, JointKind, JointSpec, RobotModel, RoboticsModel, Shape};
use rhsim::spatial::{Mat3, Vec3};

/// Planar two-link arm moving in the x–z plane about y hinges.
pub struct TwoLink {
    pub m: [f64; 2],
    pub l1: f64,
    pub lc: [f64; 2],
    /// Moment of inertia about the CoM, about y.
    pub i: [f64; 2],
}

impl TwoLink {
    pub fn model(&self) -> RobotModel {
        let s1 = Shape::Box { size: [2.0 * self.lc[0], 0.2, 0.1] };
        let s2 = Shape::Box { size: [2.0 * self.lc[1], 0.15, 0.1] };
        let mut b1 = BodySpec::from_shape("l1", s1, self.m[0], Vec3::new(self.lc[0], 0.0, 0.0), Mat3::identity());
        let mut b2 = BodySpec::from_shape("l2", s2, self.m[1], Vec3::new(self.l1 + self.lc[1], 0.0, 0.0), Mat3::identity());
        b1.inertia.rot_inertia[(1, 1)] = self.i[0];
        b2.inertia.rot_inertia[(1, 1)] = self.i[1];
        let base = BodySpec::from_shape("base", Shape::Sphere { radius: 0.1 }, 1.0, Vec3::zeros(), Mat3::identity());
        let doc = RoboticsModel {
            name: "two_link".into(),
            bodies: vec![base, b1, b2],
            joints: vec![
                JointSpec::new(JointKind::Hinge, "base", "l1", Vec3::zeros(), Vec3::y()),
                JointSpec::new(JointKind::Hinge, "l1", "l2", Vec3::new(self.l1 - self.lc[0], 0.0, 0.0), Vec3::y()),
            ],
        };
        doc.build().unwrap()
    }

    /// Lagrangian equations of motion. A y-hinge angle q turns the link from
    /// +x toward −z, so in plane coordinates (x, −z) the arm is the textbook
    /// planar arm with gravity pointing along +(−z).
    pub fn torque(&self, q: &[f64; 2], qd: &[f64; 2], qdd: &[f64; 2], g: f64) -> [f64; 2] {
        let [m1, m2] = self.m;
        let [lc1, lc2] = self.lc;
        let [i1, i2] = self.i;
        let l1 = self.l1;
        let c2 = q[1].cos();
        let m11 = i1 + i2 + m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * c2);
        let m12 = i2 + m2 * (lc2 * lc2 + l1 * lc2 * c2);
        let m22 = i2 + m2 * lc2 * lc2;
        let h = -m2 * l1 * lc2 * q[1].sin();
        let cor1 = h * qd[1] * qd[1] + 2.0 * h * qd[0] * qd[1];
        let cor2 = -h * qd[0] * qd[0];
        // potential V = −g (m1 lc1 sin q1 + m2 (l1 sin q1 + lc2 sin(q1 + q2))) in plane coordinates
        let g1 = -g * ((m1 * lc1 + m2 * l1) * q[0].cos() + m2 * lc2 * (q[0] + q[1]).cos());
        let g2 = -g * m2 * lc2 * (q[0] + q[1]).cos();
        [
            m11 * qdd[0] + m12 * qdd[1] + cor1 + g1,
            m12 * qdd[0] + m22 * qdd[1] + cor2 + g2,
        ]
    }
}

pub const SAMPLE_ARM: TwoLink = TwoLink {
    m: [2.3, 1.1],
    l1: 0.9,
    lc: [0.45, 0.35],
    i: [0.17, 0.06],
};

/// Largest |τ_rnea − τ_lagrange| over `n` random states of [`SAMPLE_ARM`].
pub fn two_link_worst_deviation(rng: &mut ChaCha8Rng, n: usize) -> f64 {
    let arm = SAMPLE_ARM;
    let model = arm.model();
    let g = 9.8;
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let q = [rng.gen_range(-3.2..3.2), rng.gen_range(-3.2..3.2)];
        let qd = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let qdd = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
        let want = arm.torque(&q, &qd, &qdd, g);
        let got = rnea(
            &model,
            &DVector::from_row_slice(&q),
            &DVector::from_row_slice(&qd),
            &DVector::from_row_slice(&qdd),
            &ExternalForces::none(),
            &gravity(g),
        )
        .unwrap();
        worst = worst.max((got[0] - want[0]).abs()).max((got[1] - want[1]).abs());
    }
    worst
}

/// Symplectic Euler energy bound on the oscillator, as a multiple of h.
/// First verified run measured 0.50025 (the modified-energy estimate is h/2).
pub const SHO_SYMPLECTIC_C: f64 = 0.55;

pub const FINE: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
/// RK6 is already at roundoff on the fine grid; its order shows on a coarser one.
pub const COARSE: [f64; 3] = [0.2, 0.1, 0.05];

pub fn oscillator(_t: f64, q: &DVector<f64>, _qd: &DVector<f64>) -> Result<DVector<f64>, DynamicsError> {
    Ok(-q)
}

/// Max-norm error against `(cos t, −sin t)` after integrating to `t_end`.
pub fn global_error(kind: IntegratorKind, h: f64, t_end: f64) -> f64 {
    let n = (t_end / h).round() as usize;
    let (mut q, mut qd) = (DVector::from_element(1, 1.0), DVector::zeros(1));
    let mut f = oscillator;
    for i in 0..n {
        let o = step(kind, &mut f, i as f64 * h, &q, &qd, h).unwrap();
        q = o.q;
        qd = o.qd;
    }
    let t = n as f64 * h;
    (q[0] - t.cos()).abs().max((qd[0] + t.sin()).abs())
}

/// Observed orders between successive halvings.
pub fn orders(kind: IntegratorKind, hs: &[f64], t_end: f64) -> Vec<f64> {
    let e: Vec<f64> = hs.iter().map(|&h| global_error(kind, h, t_end)).collect();
    e.windows(2).zip(hs.windows(2)).map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln()).collect()
}

