//! Spatial algebra against independently assembled 6×6 matrices.

use nalgebra::{Matrix3, Matrix6, Rotation3, Unit, Vector3, Vector6};
use proptest::prelude::*;
use rhsim::spatial::{body_eom, Force6, Inertia6, Mat3, Motion6, Transform6, Vec3};

fn sk(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn blocks(a: Matrix3<f64>, b: Matrix3<f64>, c: Matrix3<f64>, d: Matrix3<f64>) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&a);
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&b);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&c);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&d);
    m
}

/// `[E 0; −E r× E]`
fn dense_x(e: &Matrix3<f64>, r: &Vector3<f64>) -> Matrix6<f64> {
    blocks(*e, Matrix3::zeros(), -e * sk(r), *e)
}

/// `[E −E r×; 0 E]`
fn dense_xstar(e: &Matrix3<f64>, r: &Vector3<f64>) -> Matrix6<f64> {
    blocks(*e, -e * sk(r), Matrix3::zeros(), *e)
}

/// `[ω× 0; v× ω×]`
fn dense_crm(v: &Vector6<f64>) -> Matrix6<f64> {
    let w = Vector3::new(v[0], v[1], v[2]);
    let l = Vector3::new(v[3], v[4], v[5]);
    blocks(sk(&w), Matrix3::zeros(), sk(&l), sk(&w))
}

/// `[I_C + m c× c×ᵀ, m c×; m c×ᵀ, m 1]`
fn dense_inertia(m: f64, c: &Vector3<f64>, ic: &Matrix3<f64>) -> Matrix6<f64> {
    let cx = sk(c);
    blocks(ic + m * cx * cx.transpose(), m * cx, m * cx.transpose(), Matrix3::identity() * m)
}

fn v6() -> impl Strategy<Value = Vector6<f64>> {
    prop::array::uniform6(-3.0..3.0f64).prop_map(|a| Vector6::from_row_slice(&a))
}

fn v3() -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-3.0..3.0f64).prop_map(|a| Vector3::from_row_slice(&a))
}

fn rotation() -> impl Strategy<Value = Matrix3<f64>> {
    (prop::array::uniform3(-1.0..1.0f64), -3.2..3.2f64).prop_filter_map("axis", |(a, angle)| {
        let v = Vector3::from_row_slice(&a);
        (v.norm() > 1e-3).then(|| *Rotation3::from_axis_angle(&Unit::new_normalize(v), angle).matrix())
    })
}

fn transform() -> impl Strategy<Value = (Matrix3<f64>, Vector3<f64>)> {
    (rotation(), v3())
}

fn inertia() -> impl Strategy<Value = Inertia6> {
    (0.1..10.0f64, v3(), rotation(), prop::array::uniform3(0.05..2.0f64)).prop_map(|(m, c, r, d)| {
        // principal moments obeying the triangle inequality
        let (a, b, cc) = (d[0] + d[1], d[1] + d[2], d[0] + d[2]);
        let ic = r * Matrix3::from_diagonal(&Vector3::new(a, b, cc)) * r.transpose();
        Inertia6::new(m, c, ic)
    })
}

fn close6(a: &Vector6<f64>, b: &Vector6<f64>, tol: f64) -> bool {
    (a - b).amax() <= tol * (1.0 + b.amax())
}

#[test]
fn rotation_about_z_hand_multiplied() {
    let rz = *Rotation3::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2).matrix();
    let m = Transform6::new(rz, Vec3::zeros()).apply_motion(&Motion6::new(Vec3::x(), Vec3::zeros()));
    assert!((m.ang - Vec3::y()).amax() < 1e-15);
    assert_eq!(m.lin, Vec3::zeros());
}

#[test]
fn translation_moment_hand_multiplied() {
    let x = Transform6::translation(Vec3::new(0.0, 0.0, 1.0));
    let f = x.apply_force(&Force6::new(Vec3::zeros(), Vec3::x()));
    // −E r× f with r = z, f = x gives −(z × x) = −y
    assert_eq!(f.moment, Vec3::new(0.0, -1.0, 0.0));
    assert_eq!(f.force, Vec3::x());
}

#[test]
fn unit_sphere_momentum() {
    let i = Inertia6::new(1.0, Vec3::zeros(), Mat3::identity() * 0.4);
    let h = i.momentum(&Motion6::new(Vec3::zeros(), Vec3::x()));
    assert_eq!(h.moment, Vec3::zeros());
    assert_eq!(h.force, Vec3::x());
    assert_eq!(i.momentum(&Motion6::zero()).to_vector(), Vector6::zeros());
}

#[test]
fn torque_free_asymmetric_body_satisfies_euler() {
    // Euler's equations: I ω̇ = −ω × I ω when no torque acts
    let ic = Matrix3::from_diagonal(&Vector3::new(1.0, 2.0, 3.5));
    let body = Inertia6::new(3.0, Vec3::zeros(), ic);
    let w = Vector3::new(0.3, -1.2, 0.7);
    let wd = ic.try_inverse().unwrap() * (-w.cross(&(ic * w)));
    let f = body_eom(&body, &Motion6::new(w, Vec3::zeros()), &Motion6::new(wd, Vec3::zeros()));
    assert!(f.to_vector().amax() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cross_motion_matches_dense(v in v6(), m in v6()) {
        let got = Motion6::from_vector(&v).cross_motion(&Motion6::from_vector(&m)).to_vector();
        prop_assert!(close6(&got, &(dense_crm(&v) * m), 1e-12));
    }

    #[test]
    fn cross_force_matches_dense(v in v6(), f in v6()) {
        let got = Motion6::from_vector(&v).cross_force(&Force6::from_vector(&f)).to_vector();
        prop_assert!(close6(&got, &(-dense_crm(&v).transpose() * f), 1e-12));
    }

    #[test]
    fn self_cross_vanishes(v in v6()) {
        let m = Motion6::from_vector(&v);
        prop_assert_eq!(m.cross_motion(&m).to_vector(), Vector6::zeros());
    }

    #[test]
    fn cross_duality(v in v6(), m in v6(), f in v6()) {
        let (v, m, f) = (Motion6::from_vector(&v), Motion6::from_vector(&m), Force6::from_vector(&f));
        let lhs = v.cross_motion(&m).dot(&f) + m.dot(&v.cross_force(&f));
        prop_assert!(lhs.abs() < 1e-10);
    }

    #[test]
    fn transforms_match_dense((e, r) in transform(), m in v6(), f in v6()) {
        let x = Transform6::new(e, r);
        prop_assert!(close6(&x.apply_motion(&Motion6::from_vector(&m)).to_vector(), &(dense_x(&e, &r) * m), 1e-12));
        prop_assert!(close6(&x.apply_force(&Force6::from_vector(&f)).to_vector(), &(dense_xstar(&e, &r) * f), 1e-12));
        prop_assert!((x.motion_matrix() - dense_x(&e, &r)).amax() < 1e-12);
        prop_assert!((x.force_matrix() - dense_xstar(&e, &r)).amax() < 1e-12);
    }

    #[test]
    fn pairing_is_invariant((e, r) in transform(), m in v6(), f in v6()) {
        let x = Transform6::new(e, r);
        let (m, f) = (Motion6::from_vector(&m), Force6::from_vector(&f));
        prop_assert!((x.apply_motion(&m).dot(&x.apply_force(&f)) - m.dot(&f)).abs() < 1e-10);
    }

    #[test]
    fn round_trips((e, r) in transform(), m in v6(), f in v6()) {
        let x = Transform6::new(e, r);
        let (mm, ff) = (Motion6::from_vector(&m), Force6::from_vector(&f));
        prop_assert!(close6(&x.inverse().apply_motion(&x.apply_motion(&mm)).to_vector(), &m, 1e-12));
        prop_assert!(close6(&x.inv_apply_force(&x.apply_force(&ff)).to_vector(), &f, 1e-12));
        let id = x.compose(&x.inverse());
        prop_assert!((id.rot - Matrix3::identity()).amax() < 1e-12);
        prop_assert!(id.trans.amax() < 1e-12);
    }

    #[test]
    fn composition_is_associative(a in transform(), b in transform(), c in transform()) {
        let (a, b, c) = (Transform6::new(a.0, a.1), Transform6::new(b.0, b.1), Transform6::new(c.0, c.1));
        let l = a.compose(&b).compose(&c);
        let r = a.compose(&b.compose(&c));
        prop_assert!((l.motion_matrix() - r.motion_matrix()).amax() < 1e-10);
        // compose means "apply b first, then a"
        prop_assert!((a.compose(&b).motion_matrix() - a.motion_matrix() * b.motion_matrix()).amax() < 1e-10);
    }

    #[test]
    fn inertia_dense_and_momentum(i in inertia(), v in v6()) {
        let d = dense_inertia(i.mass, &i.com, &i.rot_inertia);
        prop_assert!((i.to_matrix() - d).amax() < 1e-12 * (1.0 + d.amax()));
        prop_assert!(close6(&i.momentum(&Motion6::from_vector(&v)).to_vector(), &(d * v), 1e-12));
        prop_assert!(d.cholesky().is_some());
    }

    #[test]
    fn inertia_transform_matches_triple_product(i in inertia(), (e, r) in transform()) {
        let x = Transform6::new(e, r);
        let got = i.transform(&x).to_matrix();
        // ᴮI = ᴮX*_A ᴬI ᴬX_B, with ᴬX_B the inverse motion map
        let want = dense_xstar(&e, &r) * i.to_matrix() * dense_x(&e, &r).try_inverse().unwrap();
        prop_assert!((got - want).amax() < 1e-10 * (1.0 + want.amax()));
        prop_assert!((got - got.transpose()).amax() < 1e-10 * (1.0 + got.amax()));
        prop_assert!(got.cholesky().is_some());
        let back = i.transform(&x).inv_transform(&x).to_matrix();
        prop_assert!((back - i.to_matrix()).amax() < 1e-10 * (1.0 + back.amax()));
    }

    #[test]
    fn inertia_sum_is_dense_sum(a in inertia(), b in inertia()) {
        let s = (a + b).to_matrix();
        let d = a.to_matrix() + b.to_matrix();
        prop_assert!((s - d).amax() < 1e-10 * (1.0 + d.amax()));
    }

    #[test]
    fn body_eom_matches_dense(i in inertia(), v in v6(), a in v6()) {
        let got = body_eom(&i, &Motion6::from_vector(&v), &Motion6::from_vector(&a)).to_vector();
        let d = i.to_matrix();
        let want = d * a - dense_crm(&v).transpose() * d * v;
        prop_assert!(close6(&got, &want, 1e-11));
    }

    #[test]
    fn body_eom_is_rate_of_momentum(i in inertia(), v in v6(), a in v6()) {
        // d/dt(I v) with dI/dt = v×* I − I v× gives I a + v×* I v
        let d = i.to_matrix();
        let crf = -dense_crm(&v).transpose();
        let idot = crf * d - d * dense_crm(&v);
        let want = idot * v + d * a;
        let got = body_eom(&i, &Motion6::from_vector(&v), &Motion6::from_vector(&a)).to_vector();
        prop_assert!(close6(&got, &want, 1e-11));
    }
}
