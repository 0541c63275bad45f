//! 6-D spatial vector algebra in Plücker coordinates.
//!
//! Motion vectors stack `[angular; linear]` and force vectors stack
//! `[moment; force]`, both about the origin of the frame they are expressed
//! in. Every operation here also has a dense 6×6 form (`to_matrix`) so that
//! the compact implementations can be checked against plain matrix products.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Skew-symmetric matrix `v×` such that `skew(v) * w == v.cross(&w)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rotation matrix for a right-handed rotation of `angle` radians about the
/// unit vector `axis` (Rodrigues).
pub fn rotation_about(axis: &Vec3, angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    let k = skew(axis);
    Mat3::identity() + k * s + k * k * (1.0 - c)
}

/// Spatial motion vector (velocity, acceleration, motion subspace column).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Motion6 {
    pub ang: Vec3,
    pub lin: Vec3,
}

/// Spatial force vector (force, momentum).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Force6 {
    pub moment: Vec3,
    pub force: Vec3,
}

impl Motion6 {
    pub const fn new(ang: Vec3, lin: Vec3) -> Self {
        Self { ang, lin }
    }

    pub fn zero() -> Self {
        Self::new(Vec3::zeros(), Vec3::zeros())
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::new(Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5]))
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.ang.x, self.ang.y, self.ang.z, self.lin.x, self.lin.y, self.lin.z,
        )
    }

    /// `self × m`
    pub fn cross_motion(&self, m: &Motion6) -> Motion6 {
        Motion6::new(
            self.ang.cross(&m.ang),
            self.ang.cross(&m.lin) + self.lin.cross(&m.ang),
        )
    }

    /// `self ×* f`, the dual of [`cross_motion`](Self::cross_motion).
    pub fn cross_force(&self, f: &Force6) -> Force6 {
        Force6::new(
            self.ang.cross(&f.moment) + self.lin.cross(&f.force),
            self.ang.cross(&f.force),
        )
    }

    /// Motion–force pairing `ωᵀn + vᵀf` (power).
    pub fn dot(&self, f: &Force6) -> f64 {
        self.ang.dot(&f.moment) + self.lin.dot(&f.force)
    }

    /// Dense 6×6 matrix of the operator `self×`.
    pub fn cross_matrix(&self) -> Matrix6<f64> {
        let w = skew(&self.ang);
        let v = skew(&self.lin);
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&w);
        m.fixed_view_mut::<3, 3>(3, 0).copy_from(&v);
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&w);
        m
    }

    pub fn is_finite(&self) -> bool {
        self.ang.iter().chain(self.lin.iter()).all(|x| x.is_finite())
    }
}

impl Force6 {
    pub const fn new(moment: Vec3, force: Vec3) -> Self {
        Self { moment, force }
    }

    pub fn zero() -> Self {
        Self::new(Vec3::zeros(), Vec3::zeros())
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::new(Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5]))
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.moment.x,
            self.moment.y,
            self.moment.z,
            self.force.x,
            self.force.y,
            self.force.z,
        )
    }
}

macro_rules! impl_linear_ops {
    ($t:ident, $a:ident, $b:ident) => {
        impl Add for $t {
            type Output = $t;
            fn add(self, o: $t) -> $t {
                $t::new(self.$a + o.$a, self.$b + o.$b)
            }
        }
        impl AddAssign for $t {
            fn add_assign(&mut self, o: $t) {
                self.$a += o.$a;
                self.$b += o.$b;
            }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, o: $t) -> $t {
                $t::new(self.$a - o.$a, self.$b - o.$b)
            }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t {
                $t::new(-self.$a, -self.$b)
            }
        }
        impl Mul<f64> for $t {
            type Output = $t;
            fn mul(self, s: f64) -> $t {
                $t::new(self.$a * s, self.$b * s)
            }
        }
    };
}

impl_linear_ops!(Motion6, ang, lin);
impl_linear_ops!(Force6, moment, force);

/// Plücker transform `ᴮX_A`.
///
/// `rot` maps A coordinates to B coordinates and `trans` is the position of
/// B's origin expressed in A coordinates. If frame B sits at position `p`
/// with orientation `R` (columns are B's axes) relative to A, then
/// `rot = Rᵀ` and `trans = p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transform6 {
    pub rot: Mat3,
    pub trans: Vec3,
}

impl Default for Transform6 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Transform6 {
    pub fn new(rot: Mat3, trans: Vec3) -> Self {
        Self { rot, trans }
    }

    pub fn identity() -> Self {
        Self::new(Mat3::identity(), Vec3::zeros())
    }

    pub fn translation(r: Vec3) -> Self {
        Self::new(Mat3::identity(), r)
    }

    /// Transform into a frame placed at `position` with orientation
    /// `orientation`, both relative to the source frame.
    pub fn from_pose(position: Vec3, orientation: Mat3) -> Self {
        Self::new(orientation.transpose(), position)
    }

    /// Transform into a frame rotated by `angle` about `axis`.
    pub fn rotation(axis: &Vec3, angle: f64) -> Self {
        Self::new(rotation_about(axis, angle).transpose(), Vec3::zeros())
    }

    /// Orientation of the target frame seen from the source frame.
    pub fn orientation(&self) -> Mat3 {
        self.rot.transpose()
    }

    pub fn apply_motion(&self, m: &Motion6) -> Motion6 {
        Motion6::new(
            self.rot * m.ang,
            self.rot * (m.lin - self.trans.cross(&m.ang)),
        )
    }

    pub fn apply_force(&self, f: &Force6) -> Force6 {
        Force6::new(
            self.rot * (f.moment - self.trans.cross(&f.force)),
            self.rot * f.force,
        )
    }

    /// `ᴬX_B · m`, i.e. apply the inverse motion transform.
    pub fn inv_apply_motion(&self, m: &Motion6) -> Motion6 {
        let ang = self.rot.tr_mul(&m.ang);
        Motion6::new(ang, self.rot.tr_mul(&m.lin) + self.trans.cross(&ang))
    }

    /// `ᴬX*_B · f`, i.e. apply the inverse force transform.
    pub fn inv_apply_force(&self, f: &Force6) -> Force6 {
        let force = self.rot.tr_mul(&f.force);
        Force6::new(self.rot.tr_mul(&f.moment) + self.trans.cross(&force), force)
    }

    /// `ᶜX_A = self · other` where `self = ᶜX_B` and `other = ᴮX_A`.
    pub fn compose(&self, other: &Transform6) -> Transform6 {
        Transform6::new(
            self.rot * other.rot,
            other.trans + other.rot.tr_mul(&self.trans),
        )
    }

    pub fn inverse(&self) -> Transform6 {
        Transform6::new(self.rot.transpose(), -(self.rot * self.trans))
    }

    /// Transform a point given in A coordinates into B coordinates.
    pub fn apply_point(&self, p: &Vec3) -> Vec3 {
        self.rot * (p - self.trans)
    }

    /// Transform a point given in B coordinates into A coordinates.
    pub fn inv_apply_point(&self, p: &Vec3) -> Vec3 {
        self.rot.tr_mul(p) + self.trans
    }

    /// Dense motion transform `[E 0; −E r× E]`.
    pub fn motion_matrix(&self) -> Matrix6<f64> {
        let e = self.rot;
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&e);
        m.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-e * skew(&self.trans)));
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&e);
        m
    }

    /// Dense force transform `[E −E r×; 0 E]`.
    pub fn force_matrix(&self) -> Matrix6<f64> {
        let e = self.rot;
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&e);
        m.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-e * skew(&self.trans)));
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&e);
        m
    }

    /// Largest entry of `EᵀE − 1`.
    pub fn orthonormality_error(&self) -> f64 {
        (self.rot.transpose() * self.rot - Mat3::identity()).amax()
    }

    pub fn is_rigid(&self, tol: f64) -> bool {
        self.orthonormality_error() < tol && (self.rot.determinant() - 1.0).abs() < tol
    }
}

/// Spatial inertia stored as mass, centre of mass and rotational inertia
/// about the centre of mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inertia6 {
    pub mass: f64,
    pub com: Vec3,
    pub rot_inertia: Mat3,
}

impl Inertia6 {
    pub fn new(mass: f64, com: Vec3, rot_inertia: Mat3) -> Self {
        Self {
            mass,
            com,
            rot_inertia,
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, Vec3::zeros(), Mat3::zeros())
    }

    /// Solid sphere of uniform density centred at the origin.
    pub fn sphere(mass: f64, radius: f64) -> Self {
        Self::new(
            mass,
            Vec3::zeros(),
            Mat3::identity() * (0.4 * mass * radius * radius),
        )
    }

    /// Rotational inertia about the frame origin, `I_C + m c× c×ᵀ`.
    pub fn inertia_about_origin(&self) -> Mat3 {
        let cx = skew(&self.com);
        self.rot_inertia + cx * cx.transpose() * self.mass
    }

    /// Dense 6×6 spatial inertia matrix.
    pub fn to_matrix(&self) -> Matrix6<f64> {
        let mcx = skew(&self.com) * self.mass;
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&self.inertia_about_origin());
        m.fixed_view_mut::<3, 3>(0, 3).copy_from(&mcx);
        m.fixed_view_mut::<3, 3>(3, 0).copy_from(&mcx.transpose());
        m.fixed_view_mut::<3, 3>(3, 3)
            .copy_from(&(Mat3::identity() * self.mass));
        m
    }

    /// `ĥ = Î v̂`
    pub fn momentum(&self, v: &Motion6) -> Force6 {
        let m = self.mass;
        let c = self.com;
        // linear momentum of the centre of mass
        let p = (v.lin - c.cross(&v.ang)) * m;
        Force6::new(self.rot_inertia * v.ang + c.cross(&p), p)
    }

    /// Inertia expressed in frame B, given `x = ᴮX_A` and `self` in A.
    pub fn transform(&self, x: &Transform6) -> Inertia6 {
        Inertia6::new(
            self.mass,
            x.apply_point(&self.com),
            x.rot * self.rot_inertia * x.rot.transpose(),
        )
    }

    /// Inertia expressed in frame A, given `x = ᴮX_A` and `self` in B.
    pub fn inv_transform(&self, x: &Transform6) -> Inertia6 {
        Inertia6::new(
            self.mass,
            x.inv_apply_point(&self.com),
            x.rot.transpose() * self.rot_inertia * x.rot,
        )
    }

    /// Symmetric part of the rotational inertia, keeping round-off from
    /// accumulating an antisymmetric component.
    fn symmetrized(mut self) -> Self {
        self.rot_inertia = (self.rot_inertia + self.rot_inertia.transpose()) * 0.5;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.mass.is_finite()
            && self.com.iter().all(|x| x.is_finite())
            && self.rot_inertia.iter().all(|x| x.is_finite())
    }
}

impl Add for Inertia6 {
    type Output = Inertia6;

    /// Rigidly combine two bodies expressed in the same frame.
    fn add(self, o: Inertia6) -> Inertia6 {
        let mass = self.mass + o.mass;
        if mass == 0.0 {
            return Inertia6::zero();
        }
        let com = (self.com * self.mass + o.com * o.mass) / mass;
        let about_origin = self.inertia_about_origin() + o.inertia_about_origin();
        let cx = skew(&com);
        Inertia6::new(mass, com, about_origin - cx * cx.transpose() * mass).symmetrized()
    }
}

impl AddAssign for Inertia6 {
    fn add_assign(&mut self, o: Inertia6) {
        *self = *self + o;
    }
}

/// Net spatial force needed for a body with inertia `inertia` and velocity
/// `v` to have acceleration `a`: `Î a + v ×* Î v`.
pub fn body_eom(inertia: &Inertia6, v: &Motion6, a: &Motion6) -> Force6 {
    inertia.momentum(a) + v.cross_force(&inertia.momentum(v))
}

/// A 6×6 matrix that is exactly symmetric positive-definite passes a plain
/// Cholesky factorization.
pub fn is_spd(m: &Matrix6<f64>) -> bool {
    (m - m.transpose()).amax() <= 1e-10 * m.amax().max(1.0) && m.cholesky().is_some()
}
