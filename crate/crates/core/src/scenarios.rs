//! Built-in experiment scenarios and the bundled sample roadheader.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, rnea, ExternalForces};
use crate::error::{Error, ModelError};
use crate::model::{
    parse_robotics, BodySpec, JointKind, JointSpec, RobotModel, RoboticsModel, Shape,
};
use crate::sim::{forward_kinematics, Marker, SimState};
use crate::spatial::{Mat3, Vec3};

/// The bundled sample roadheader description.
pub const ROADHEADER_ROBOT: &str = include_str!("../assets/roadheader.robot");
/// Render geometry for [`ROADHEADER_ROBOT`].
pub const ROADHEADER_3DT: &str = include_str!("../assets/roadheader.3dt");

/// Joint driven in the arm-raise study.
pub const ARM_JOINT: &str = "SA";
/// Body carrying the cutting head; its tip is one position marker.
pub const CUTTING_HEAD: &str = "CH";
/// Base body carrying the second position marker.
pub const MAIN_BODY: &str = "M";
/// Seconds for the arm-raise command to ramp from 0 to full.
pub const ARM_RAMP_TIME: f64 = 2.0;

pub const PENDULUM_LENGTH: f64 = 1.0;
pub const PENDULUM_MASS: f64 = 1.0;
pub const PENDULUM_BOB_RADIUS: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// One hinge about y with a small bob hanging `ℓ` below it, released
    /// horizontally.
    Pendulum,
    DoublePendulum,
    /// The roadheader with every joint but the supporting-arm hinge locked,
    /// driven by a torque ramp.
    ArmRaise,
    FullRoadheader,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::Pendulum,
        Scenario::DoublePendulum,
        Scenario::ArmRaise,
        Scenario::FullRoadheader,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Pendulum => "pendulum",
            Scenario::DoublePendulum => "double-pendulum",
            Scenario::ArmRaise => "arm-raise",
            Scenario::FullRoadheader => "full-roadheader",
        }
    }

    /// Whether the scenario reads a roadheader description.
    pub fn uses_robot_file(&self) -> bool {
        matches!(self, Scenario::ArmRaise | Scenario::FullRoadheader)
    }

    /// Build the scenario. Roadheader scenarios use `doc` when given and the
    /// bundled sample otherwise.
    pub fn setup(&self, doc: Option<&RoboticsModel>, gravity: f64) -> Result<ScenarioSetup, Error> {
        match self {
            Scenario::Pendulum => {
                let doc = pendulum_doc(1);
                let model = doc.build()?;
                let mut initial = SimState::initial(&model);
                initial.q[0] = std::f64::consts::FRAC_PI_2;
                Ok(ScenarioSetup::passive(*self, doc, model, initial))
            }
            Scenario::DoublePendulum => {
                let doc = pendulum_doc(2);
                let model = doc.build()?;
                let mut initial = SimState::initial(&model);
                initial.q[0] = std::f64::consts::FRAC_PI_2;
                Ok(ScenarioSetup::passive(*self, doc, model, initial))
            }
            Scenario::FullRoadheader => {
                let doc = match doc {
                    Some(d) => d.clone(),
                    None => sample_roadheader(),
                };
                let model = doc.build()?;
                let initial = SimState::initial(&model);
                Ok(ScenarioSetup::passive(*self, doc, model, initial))
            }
            Scenario::ArmRaise => {
                let full = match doc {
                    Some(d) => d.clone(),
                    None => sample_roadheader(),
                };
                arm_raise(full, gravity)
            }
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Scenario::ALL
            .into_iter()
            .find(|k| k.name() == norm || k.name().replace('-', "") == norm)
            .ok_or_else(|| {
                format!("unknown scenario `{s}` (expected pendulum, double-pendulum, arm-raise, full-roadheader)")
            })
    }
}

/// Open-loop command profile for one joint: ramps linearly from 0 to
/// `sign` over `ramp` seconds, then holds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ramp {
    pub joint: usize,
    pub sign: f64,
    pub ramp: f64,
}

impl Ramp {
    pub fn command(&self, t: f64) -> f64 {
        self.sign * (t / self.ramp).clamp(0.0, 1.0)
    }

    pub fn fill(&self, t: f64, commands: &mut [f64]) {
        commands[self.joint] = self.command(t);
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioSetup {
    pub scenario: Scenario,
    pub doc: RoboticsModel,
    pub model: RobotModel,
    pub initial: SimState,
    pub gains: Vec<f64>,
    pub markers: Option<(Marker, Marker)>,
    pub drive: Option<Ramp>,
}

impl ScenarioSetup {
    fn passive(scenario: Scenario, doc: RoboticsModel, model: RobotModel, initial: SimState) -> Self {
        let gains = vec![1.0; model.dof()];
        Self {
            scenario,
            doc,
            model,
            initial,
            gains,
            markers: None,
            drive: None,
        }
    }
}

pub fn sample_roadheader() -> RoboticsModel {
    parse_robotics(ROADHEADER_ROBOT).expect("bundled roadheader parses")
}

/// A chain of `links` hinges about y, each carrying a bob `ℓ` below it. The
/// last bob hangs at `z = 0` when `q = 0`.
pub fn pendulum_doc(links: usize) -> RoboticsModel {
    let l = PENDULUM_LENGTH;
    let top = l * links as f64;
    let mut bodies = vec![BodySpec::from_shape(
        "pivot",
        Shape::Sphere { radius: 0.1 },
        1.0,
        Vec3::new(0.0, 0.0, top),
        Mat3::identity(),
    )];
    let mut joints = Vec::new();
    for i in 0..links {
        let name = format!("bob{}", i + 1);
        let pred = bodies[i].name.clone();
        bodies.push(BodySpec::from_shape(
            &name,
            Shape::Sphere { radius: PENDULUM_BOB_RADIUS },
            PENDULUM_MASS,
            Vec3::new(0.0, 0.0, top - l * (i + 1) as f64),
            Mat3::identity(),
        ));
        // each hinge sits at the previous bob
        joints.push(JointSpec::new(JointKind::Hinge, &pred, &name, Vec3::zeros(), Vec3::y()));
    }
    RoboticsModel {
        name: if links == 1 { "pendulum".into() } else { "double_pendulum".into() },
        bodies,
        joints,
    }
}

fn arm_raise(mut doc: RoboticsModel, gravity: f64) -> Result<ScenarioSetup, Error> {
    if doc.joint(ARM_JOINT).is_none() {
        return Err(ModelError::UnknownBody(ARM_JOINT.into()).into());
    }
    for body in [CUTTING_HEAD, MAIN_BODY] {
        if doc.body(body).is_none() {
            return Err(ModelError::UnknownBody(body.into()).into());
        }
    }
    for j in doc.joints.iter_mut().filter(|j| j.name != ARM_JOINT) {
        j.kind = JointKind::Fixed;
        j.axis2 = None;
    }
    doc.name = format!("{}_arm_raise", doc.name);
    let model = doc.build()?;
    let joint = model.joint_index(ARM_JOINT).expect("arm joint survives locking");

    // Cutting-head tip: the far end of its cylinder along the local z axis.
    let tip = match doc.body(CUTTING_HEAD).map(|b| b.shape) {
        Some(Shape::Cylinder { length, .. }) | Some(Shape::Capsule { length, .. }) => length / 2.0,
        Some(Shape::Box { size }) => size[2] / 2.0,
        Some(Shape::Sphere { radius }) => radius,
        None => unreachable!("checked above"),
    };
    let a = Marker::new(CUTTING_HEAD, Vec3::new(0.0, 0.0, tip));

    // The arm pivot, expressed on the main body. A point on the hinge axis
    // keeps its distance to any point of the arm for every arm angle.
    let q0 = DVector::zeros(model.dof());
    let links = forward_kinematics(&model, &q0);
    let pivot = links[model.dof_link(joint)].position();
    let main = model.attachment(MAIN_BODY).expect("checked above");
    let main_pose = crate::sim::body_poses(&model, &q0)
        .into_iter()
        .find(|(n, _)| n == &main.body)
        .map(|(_, p)| p)
        .expect("main body has a pose");
    let b = Marker::new(MAIN_BODY, main_pose.rotation().transpose() * (pivot - main_pose.position()));

    // Full command gives 1.5 times the static load in the initial pose, in
    // the direction that lifts the arm.
    let load = rnea(&model, &q0, &q0, &q0, &ExternalForces::none(), &dynamics::gravity(gravity))?[joint];
    let mut gains = vec![1.0; model.dof()];
    gains[joint] = 1.5 * load.abs().max(1.0);
    let sign = if load < 0.0 { -1.0 } else { 1.0 };

    let initial = SimState::initial(&model);
    Ok(ScenarioSetup {
        scenario: Scenario::ArmRaise,
        doc,
        model,
        initial,
        gains,
        markers: Some((a, b)),
        drive: Some(Ramp {
            joint,
            sign,
            ramp: ARM_RAMP_TIME,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_geometry, parse_3dt};

    #[test]
    fn sample_roadheader_shape() {
        let doc = sample_roadheader();
        let model = doc.build().unwrap();
        assert_eq!(doc.bodies.len(), 10);
        assert_eq!(model.dof(), 7);
        assert_eq!(model.link_count(), 8);
        let geometry = parse_3dt(ROADHEADER_3DT).unwrap();
        check_geometry(&doc, &geometry).unwrap();
    }

    #[test]
    fn scenario_names_parse_back() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert_eq!("ArmRaise".parse::<Scenario>().unwrap(), Scenario::ArmRaise);
    }

    #[test]
    fn pendulum_bob_hangs_at_datum() {
        let s = Scenario::Pendulum.setup(None, 9.8).unwrap();
        let poses = crate::sim::body_poses(&s.model, &DVector::zeros(1));
        assert!(poses[1].1.position[2].abs() < 1e-15);
        assert_eq!(s.initial.q[0], std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn arm_raise_locks_all_but_the_arm() {
        let s = Scenario::ArmRaise.setup(None, 9.8).unwrap();
        assert_eq!(s.model.dof(), 1);
        assert_eq!(s.model.joint(0).name, ARM_JOINT);
        let (_, b) = s.markers.unwrap();
        assert!((b.point - Vec3::new(2.0, 0.0, 1.05)).norm() < 1e-12);
        let ramp = s.drive.unwrap();
        assert_eq!(ramp.command(0.0), 0.0);
        assert_eq!(ramp.command(10.0).abs(), 1.0);
    }
}
