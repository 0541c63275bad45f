//! Assembly of parsed bodies and joints into a kinematic tree of 1-DOF joints.

use std::collections::{HashMap, VecDeque};

use crate::error::ModelError;
use crate::spatial::{Inertia6, Mat3, Motion6, Transform6, Vec3};

use super::robotics::{BodySpec, JointKind, JointSpec};

/// Mass and rotational inertia of the body interposed between the two hinges
/// of an expanded universal joint.
pub const UNIVERSAL_EPSILON: f64 = 1e-9;

/// Joint types that carry a degree of freedom after tree expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DofKind {
    Hinge,
    Slider,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkJoint {
    pub name: String,
    pub kind: DofKind,
    /// Unit axis in the joint (and link) frame.
    pub axis: Vec3,
}

impl LinkJoint {
    pub fn motion_subspace(&self) -> Motion6 {
        dof_subspace(self.kind, &self.axis)
    }
}

/// One dynamic body of the tree. Index 0 is the fixed base.
#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub name: String,
    /// Predecessor link (`lambda`); the base points at itself.
    pub parent: usize,
    /// Joint connecting this link to its parent, `None` for the base.
    pub joint: Option<LinkJoint>,
    /// Tree transform from the parent link frame to this joint's frame.
    pub x_tree: Transform6,
    /// Composite inertia of every body rigidly attached to this link, in the
    /// link frame.
    pub inertia: Inertia6,
}

/// Where a source body ended up in the tree.
#[derive(Clone, Debug, PartialEq)]
pub struct Attachment {
    pub body: String,
    pub link: usize,
    /// `ᵇX_link`: maps link coordinates to the body's own frame.
    pub offset: Transform6,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobotModel {
    pub name: String,
    links: Vec<Link>,
    attachments: Vec<Attachment>,
}

impl RobotModel {
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, i: usize) -> &Link {
        &self.links[i]
    }

    /// Number of links including the base.
    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Total degrees of freedom; every non-base link has exactly one.
    pub fn dof(&self) -> usize {
        self.links.len() - 1
    }

    /// Position in `q` of link `i`'s joint coordinate.
    pub fn dof_index(&self, link: usize) -> Option<usize> {
        (link > 0 && link < self.links.len()).then(|| link - 1)
    }

    /// Link moved by generalized coordinate `dof`.
    pub fn dof_link(&self, dof: usize) -> usize {
        dof + 1
    }

    pub fn lambda(&self) -> Vec<usize> {
        self.links.iter().map(|l| l.parent).collect()
    }

    /// The joint driving coordinate `dof`.
    pub fn joint(&self, dof: usize) -> &LinkJoint {
        self.links[dof + 1].joint.as_ref().expect("non-base link has a joint")
    }

    pub fn joint_names(&self) -> Vec<&str> {
        self.links[1..]
            .iter()
            .map(|l| l.joint.as_ref().expect("joint").name.as_str())
            .collect()
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joint_names().iter().position(|n| *n == name)
    }

    pub fn attachments(&self) -> &[Attachment] {
        &self.attachments
    }

    pub fn attachment(&self, body: &str) -> Option<&Attachment> {
        self.attachments.iter().find(|a| a.body == body)
    }

    pub fn total_mass(&self) -> f64 {
        self.links.iter().map(|l| l.inertia.mass).sum()
    }
}

/// Motion subspace column of a 1-DOF joint.
pub fn dof_subspace(kind: DofKind, axis: &Vec3) -> Motion6 {
    match kind {
        DofKind::Hinge => Motion6::new(*axis, Vec3::zeros()),
        DofKind::Slider => Motion6::new(Vec3::zeros(), *axis),
    }
}

/// Motion subspace of a parsed joint: `Some(S)` for 1-DOF joints, `None` for
/// fixed joints. Universal joints have to go through [`build_tree`] first.
pub fn motion_subspace(kind: JointKind, axis: &Vec3) -> Result<Option<Motion6>, ModelError> {
    match kind {
        JointKind::Hinge => Ok(Some(dof_subspace(DofKind::Hinge, axis))),
        JointKind::Slider => Ok(Some(dof_subspace(DofKind::Slider, axis))),
        JointKind::Fixed => Ok(None),
        JointKind::Universal => Err(ModelError::Invalid(
            "universal joints expand into two hinges; build the tree first".into(),
        )),
    }
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }
}

/// World pose of a frame at the initial configuration.
#[derive(Clone, Copy)]
struct Pose {
    position: Vec3,
    orientation: Mat3,
}

impl Pose {
    /// `ᵗʰⁱˢX_other`, i.e. `other` seen from `self`.
    fn relative(&self, other: &Pose) -> Transform6 {
        Transform6::from_pose(
            self.orientation.tr_mul(&(other.position - self.position)),
            self.orientation.tr_mul(&other.orientation),
        )
    }
}

/// Build the topologically ordered tree. The first body is the base.
///
/// Fixed joints merge the successor into its predecessor's link and
/// universal joints become two hinges through a near-massless link.
pub fn build_tree(name: &str, bodies: &[BodySpec], joints: &[JointSpec]) -> Result<RobotModel, ModelError> {
    if bodies.is_empty() {
        return Err(ModelError::Empty);
    }
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, b) in bodies.iter().enumerate() {
        if !(b.mass > 0.0) || !b.inertia.is_finite() {
            return Err(ModelError::InvalidBody {
                body: b.name.clone(),
                message: "mass must be positive".into(),
            });
        }
        if index.insert(b.name.as_str(), i).is_some() {
            return Err(ModelError::Invalid(format!("duplicate body name {}", b.name)));
        }
    }
    let lookup = |n: &str| index.get(n).copied().ok_or_else(|| ModelError::UnknownBody(n.to_string()));

    let mut sets = DisjointSet((0..bodies.len()).collect());
    let mut parent_joint: Vec<Option<usize>> = vec![None; bodies.len()];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); bodies.len()];
    for (ji, j) in joints.iter().enumerate() {
        let p = lookup(&j.predecessor)?;
        let s = lookup(&j.successor)?;
        if p == s {
            return Err(ModelError::Invalid(format!("joint {} connects {} to itself", j.name, j.predecessor)));
        }
        let (rp, rs) = (sets.find(p), sets.find(s));
        if rp == rs {
            return Err(ModelError::Cycle {
                joint: ji,
                predecessor: j.predecessor.clone(),
                successor: j.successor.clone(),
            });
        }
        sets.0[rs] = rp;
        if s == 0 {
            return Err(ModelError::BaseIsSuccessor { body: j.successor.clone() });
        }
        if parent_joint[s].is_some() {
            return Err(ModelError::MultipleParents { body: j.successor.clone() });
        }
        parent_joint[s] = Some(ji);
        children[p].push(ji);
    }
    let root = sets.find(0);
    if let Some(b) = (0..bodies.len()).find(|&b| sets.find(b) != root) {
        return Err(ModelError::Disconnected { body: bodies[b].name.clone() });
    }

    let pose_of = |b: &BodySpec| Pose {
        position: b.position,
        orientation: b.orientation,
    };
    let world = Pose {
        position: Vec3::zeros(),
        orientation: Mat3::identity(),
    };

    let base = &bodies[0];
    let base_offset = world.relative(&pose_of(base));
    let mut links = vec![Link {
        name: base.name.clone(),
        parent: 0,
        joint: None,
        x_tree: Transform6::identity(),
        inertia: base.inertia.inv_transform(&base_offset),
    }];
    let mut link_pose = vec![world];
    let mut attachments = vec![Attachment {
        body: base.name.clone(),
        link: 0,
        offset: base_offset,
    }];
    let mut body_link = vec![usize::MAX; bodies.len()];
    body_link[0] = 0;

    let mut queue = VecDeque::from([0usize]);
    while let Some(p) = queue.pop_front() {
        let pred = &bodies[p];
        let pred_pose = pose_of(pred);
        let pred_link = body_link[p];
        for &ji in &children[p] {
            let j = &joints[ji];
            let s = index[j.successor.as_str()];
            let succ = &bodies[s];
            let joint_pose = Pose {
                position: pred_pose.position + pred_pose.orientation * j.bias,
                orientation: pred_pose.orientation,
            };
            let x_tree = link_pose[pred_link].relative(&joint_pose);

            let mut push_link = |links: &mut Vec<Link>, name: String, parent, joint, x_tree, inertia| {
                links.push(Link {
                    name,
                    parent,
                    joint: Some(joint),
                    x_tree,
                    inertia,
                });
                link_pose.push(joint_pose);
                links.len() - 1
            };

            let target = match j.kind {
                JointKind::Fixed => pred_link,
                JointKind::Hinge | JointKind::Slider => {
                    let kind = if j.kind == JointKind::Hinge { DofKind::Hinge } else { DofKind::Slider };
                    let joint = LinkJoint { name: j.name.clone(), kind, axis: j.axis };
                    push_link(&mut links, succ.name.clone(), pred_link, joint, x_tree, Inertia6::zero())
                }
                JointKind::Universal => {
                    let eps = Inertia6::new(UNIVERSAL_EPSILON, Vec3::zeros(), Mat3::identity() * UNIVERSAL_EPSILON);
                    let first = LinkJoint {
                        name: format!("{}.0", j.name),
                        kind: DofKind::Hinge,
                        axis: j.axis,
                    };
                    let mid = push_link(&mut links, format!("{}.u", j.name), pred_link, first, x_tree, eps);
                    let second = LinkJoint {
                        name: format!("{}.1", j.name),
                        kind: DofKind::Hinge,
                        axis: j.axis2.ok_or_else(|| {
                            ModelError::Invalid(format!("universal joint {} missing second axis", j.name))
                        })?,
                    };
                    push_link(&mut links, succ.name.clone(), mid, second, Transform6::identity(), Inertia6::zero())
                }
            };

            let offset = link_pose[target].relative(&pose_of(succ));
            links[target].inertia += succ.inertia.inv_transform(&offset);
            attachments.push(Attachment {
                body: succ.name.clone(),
                link: target,
                offset,
            });
            body_link[s] = target;
            queue.push_back(s);
        }
    }

    Ok(RobotModel {
        name: name.to_string(),
        links,
        attachments,
    })
}
