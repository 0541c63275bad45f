//! Model documents and the kinematic tree built from them.

pub mod geometry;
pub mod robotics;
mod text;
pub mod tree;

pub use geometry::{parse_3dt, serialize_3dt, BodyMesh, Component, GeometryModel};
pub use robotics::{parse_robotics, serialize_robotics, BodySpec, JointKind, JointSpec, RoboticsModel, Shape};
pub use tree::{build_tree, motion_subspace, Attachment, DofKind, Link, LinkJoint, RobotModel};

use crate::error::Error;

impl RoboticsModel {
    pub fn build(&self) -> Result<RobotModel, crate::error::ModelError> {
        build_tree(&self.name, &self.bodies, &self.joints)
    }
}

/// Parse a `.robot` document and build its tree in one go.
pub fn load_robot(text: &str) -> Result<(RoboticsModel, RobotModel), Error> {
    let doc = parse_robotics(text)?;
    let model = doc.build()?;
    Ok((doc, model))
}

/// Every robotics body must have a geometry component of the same name.
pub fn check_geometry(doc: &RoboticsModel, geometry: &GeometryModel) -> Result<(), crate::error::ModelError> {
    for b in &doc.bodies {
        if geometry.component(&b.name).is_none() {
            return Err(crate::error::ModelError::InvalidBody {
                body: b.name.clone(),
                message: "no geometry component with this name".into(),
            });
        }
    }
    Ok(())
}
