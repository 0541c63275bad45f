//! Joint-space dynamics: inverse dynamics by recursive Newton-Euler, the
//! joint-space inertia matrix by composite rigid bodies, and forward
//! dynamics through a Cholesky solve of `H q̈ = τ − C`.

use nalgebra::{DMatrix, DVector};

use crate::error::DynamicsError;
use crate::model::{DofKind, RobotModel};
use crate::spatial::{body_eom, Force6, Motion6, Transform6, Vec3};

pub const STANDARD_GRAVITY: f64 = 9.8;

/// Spatial gravity acceleration `a_g` for gravity of magnitude `g` along −z.
pub fn gravity(g: f64) -> Motion6 {
    Motion6::new(Vec3::zeros(), Vec3::new(0.0, 0.0, -g))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedState {
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    pub qdd: DVector<f64>,
}

impl GeneralizedState {
    pub fn zeros(dof: usize) -> Self {
        Self {
            q: DVector::zeros(dof),
            qd: DVector::zeros(dof),
            qdd: DVector::zeros(dof),
        }
    }

    pub fn new(q: DVector<f64>, qd: DVector<f64>, qdd: DVector<f64>) -> Self {
        Self { q, qd, qdd }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qd.iter()).chain(self.qdd.iter()).all(|x| x.is_finite())
    }
}

/// Spatial forces applied directly to links, expressed in world coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExternalForces {
    pub body: Vec<(usize, Force6)>,
}

impl ExternalForces {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn on(link: usize, f: Force6) -> Self {
        Self { body: vec![(link, f)] }
    }
}

/// Output of [`jcalc`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointCalc {
    /// `X_J`: joint frame to successor link frame.
    pub x_j: Transform6,
    pub s: Motion6,
    /// Velocity-product acceleration; zero for constant-subspace joints.
    pub c_j: Motion6,
}

/// Joint transform and subspace for coordinate `q` of a 1-DOF joint.
///
/// A hinge rotates the successor frame by `q` about `axis`, so `x_j.rot` is
/// the transpose of that rotation. A slider translates it by `q · axis`.
pub fn jcalc(kind: DofKind, axis: &Vec3, q: f64, _qd: f64) -> JointCalc {
    let (x_j, s) = match kind {
        DofKind::Hinge => (Transform6::rotation(axis, q), Motion6::new(*axis, Vec3::zeros())),
        DofKind::Slider => (Transform6::translation(axis * q), Motion6::new(Vec3::zeros(), *axis)),
    };
    JointCalc {
        x_j,
        s,
        c_j: Motion6::zero(),
    }
}

fn check_len(model: &RobotModel, v: &DVector<f64>) -> Result<(), DynamicsError> {
    if v.len() != model.dof() {
        return Err(DynamicsError::DimensionMismatch {
            expected: model.dof(),
            got: v.len(),
        });
    }
    Ok(())
}

/// Per-link `ⁱX_λᵢ` and motion subspace for configuration `q`.
pub(crate) fn link_transforms(model: &RobotModel, q: &DVector<f64>) -> (Vec<Transform6>, Vec<Motion6>) {
    let n = model.link_count();
    let mut xup = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    xup.push(Transform6::identity());
    s.push(Motion6::zero());
    for (i, link) in model.links().iter().enumerate().skip(1) {
        let joint = link.joint.as_ref().expect("non-base link has a joint");
        let jc = jcalc(joint.kind, &joint.axis, q[i - 1], 0.0);
        xup.push(jc.x_j.compose(&link.x_tree));
        s.push(jc.s);
    }
    (xup, s)
}

/// `ⁱX₀` for every link.
pub(crate) fn world_transforms(model: &RobotModel, xup: &[Transform6]) -> Vec<Transform6> {
    let mut x0: Vec<Transform6> = Vec::with_capacity(xup.len());
    x0.push(Transform6::identity());
    for (i, link) in model.links().iter().enumerate().skip(1) {
        let t = if link.parent == 0 {
            xup[i]
        } else {
            xup[i].compose(&x0[link.parent])
        };
        x0.push(t);
    }
    x0
}

/// Inverse dynamics: the generalized force that produces `qdd` at `(q, qd)`
/// under `gravity` and the external link forces. With `qdd = 0` this is the
/// bias force `C(q, q̇)`.
pub fn rnea(
    model: &RobotModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    qdd: &DVector<f64>,
    ext: &ExternalForces,
    gravity: &Motion6,
) -> Result<DVector<f64>, DynamicsError> {
    for v in [q, qd, qdd] {
        check_len(model, v)?;
    }
    let n = model.link_count();
    let links = model.links();
    let (xup, s) = link_transforms(model, q);

    let mut v = vec![Motion6::zero(); n];
    let mut a = vec![Motion6::zero(); n];
    let mut f = vec![Force6::zero(); n];
    a[0] = -*gravity;

    for i in 1..n {
        let p = links[i].parent;
        let vj = s[i] * qd[i - 1];
        v[i] = xup[i].apply_motion(&v[p]) + vj;
        a[i] = xup[i].apply_motion(&a[p]) + s[i] * qdd[i - 1] + v[i].cross_motion(&vj);
        f[i] = body_eom(&links[i].inertia, &v[i], &a[i]);
    }

    if !ext.body.is_empty() {
        let x0 = world_transforms(model, &xup);
        for (link, fx) in &ext.body {
            if *link > 0 && *link < n {
                f[*link] = f[*link] - x0[*link].apply_force(fx);
            }
        }
    }

    let mut tau = DVector::zeros(model.dof());
    for i in (1..n).rev() {
        tau[i - 1] = s[i].dot(&f[i]);
        let p = links[i].parent;
        if p != 0 {
            let fp = xup[i].inv_apply_force(&f[i]);
            f[p] += fp;
        }
    }
    Ok(tau)
}

/// Joint-space inertia matrix `H(q)`.
pub fn crba(model: &RobotModel, q: &DVector<f64>) -> Result<DMatrix<f64>, DynamicsError> {
    check_len(model, q)?;
    let n = model.link_count();
    let links = model.links();
    let (xup, s) = link_transforms(model, q);

    let mut ic: Vec<_> = links.iter().map(|l| l.inertia).collect();
    let mut h = DMatrix::zeros(model.dof(), model.dof());
    for i in (1..n).rev() {
        let p = links[i].parent;
        if p != 0 {
            let child = ic[i].inv_transform(&xup[i]);
            ic[p] += child;
        }
        let mut force = ic[i].momentum(&s[i]);
        h[(i - 1, i - 1)] = s[i].dot(&force);
        let mut j = i;
        while links[j].parent != 0 {
            force = xup[j].inv_apply_force(&force);
            j = links[j].parent;
            let hij = s[j].dot(&force);
            h[(i - 1, j - 1)] = hij;
            h[(j - 1, i - 1)] = hij;
        }
    }
    Ok(h)
}

/// In-place Cholesky factor `H = L Lᵀ` with no pivoting.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    pub fn factor(h: &DMatrix<f64>) -> Result<Self, DynamicsError> {
        let n = h.nrows();
        let mut l = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = h[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(DynamicsError::NotPositiveDefinite { pivot: j });
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut x = h[(i, j)];
                for k in 0..j {
                    x -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = x / d;
            }
        }
        Ok(Self { l })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.l.nrows();
        let mut y = b.clone();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[(i, k)] * y[k];
            }
            y[i] /= self.l[(i, i)];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= self.l[(k, i)] * y[k];
            }
            y[i] /= self.l[(i, i)];
        }
        y
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }
}

/// `q̈ = H⁻¹ (τ − C)`.
pub fn forward_dynamics(
    model: &RobotModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    tau: &DVector<f64>,
    ext: &ExternalForces,
    gravity: &Motion6,
) -> Result<DVector<f64>, DynamicsError> {
    check_len(model, tau)?;
    let zero = DVector::zeros(model.dof());
    let bias = rnea(model, q, qd, &zero, ext, gravity)?;
    let h = crba(model, q)?;
    Ok(Cholesky::factor(&h)?.solve(&(tau - bias)))
}
