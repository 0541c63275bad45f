//! `.robot` robotics documents: body and joint records.
//!
//! ```text
//! format 1
//! robot <name>
//!
//! [body]
//! name = SA
//! type = box 2.5 0.6 0.6          # box lx ly lz | sphere r | cylinder r len | capsule r len
//! mass = 3000
//! inertia = ixx iyy izz ixy ixz iyz   # optional, about the centre of mass
//! com = 0 0 0                     # optional, in the body frame
//! position = 3.25 0 2.3           # global configuration at q = 0
//! orientation = 1 0 0 0 1 0 0 0 1 # optional, row-major rotation matrix
//!
//! [joint]
//! name = SA                       # optional, defaults to the successor name
//! type = hinge                    # hinge | slider | fixed | universal
//! predecessor = AB
//! successor = SA
//! bias = 0 0 0                    # joint position in the predecessor frame
//! axis = 0 1 0                    # in the predecessor frame, unit length
//! axis2 = 0 0 1                   # universal joints only
//! ```
//!
//! The first body is the base, fixed to the world.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::ParseError;
use crate::spatial::{Inertia6, Mat3, Vec3};

use super::text::{parse_f64, parse_floats, Lines};

pub const AXIS_TOLERANCE: f64 = 1e-9;
pub const ORIENTATION_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    /// Full edge lengths along x, y, z.
    Box { size: [f64; 3] },
    Sphere { radius: f64 },
    /// Axis along local z.
    Cylinder { radius: f64, length: f64 },
    /// Cylindrical part of `length` along local z with hemispherical caps.
    Capsule { radius: f64, length: f64 },
}

impl Shape {
    /// Rotational inertia about the centroid for a uniform solid.
    pub fn inertia(&self, mass: f64) -> Mat3 {
        match *self {
            Shape::Box { size: [x, y, z] } => Mat3::from_diagonal(&Vec3::new(
                mass * (y * y + z * z) / 12.0,
                mass * (x * x + z * z) / 12.0,
                mass * (x * x + y * y) / 12.0,
            )),
            Shape::Sphere { radius } => Mat3::identity() * (0.4 * mass * radius * radius),
            Shape::Cylinder { radius: r, length: l } => {
                let side = mass * (3.0 * r * r + l * l) / 12.0;
                Mat3::from_diagonal(&Vec3::new(side, side, 0.5 * mass * r * r))
            }
            Shape::Capsule { radius: r, length: l } => {
                let v_cyl = std::f64::consts::PI * r * r * l;
                let v_sph = 4.0 / 3.0 * std::f64::consts::PI * r * r * r;
                let m_cyl = mass * v_cyl / (v_cyl + v_sph);
                let m_sph = mass - m_cyl;
                let side = m_cyl * (l * l / 12.0 + r * r / 4.0)
                    + m_sph * (0.4 * r * r + l * l / 4.0 + 3.0 * l * r / 8.0);
                let axial = m_cyl * r * r / 2.0 + m_sph * 0.4 * r * r;
                Mat3::from_diagonal(&Vec3::new(side, side, axial))
            }
        }
    }

    fn params(&self) -> Vec<f64> {
        match *self {
            Shape::Box { size } => size.to_vec(),
            Shape::Sphere { radius } => vec![radius],
            Shape::Cylinder { radius, length } | Shape::Capsule { radius, length } => {
                vec![radius, length]
            }
        }
    }

    fn keyword(&self) -> &'static str {
        match self {
            Shape::Box { .. } => "box",
            Shape::Sphere { .. } => "sphere",
            Shape::Cylinder { .. } => "cylinder",
            Shape::Capsule { .. } => "capsule",
        }
    }

    fn parse(value: &str, line: usize) -> Result<Shape, ParseError> {
        let mut parts = value.split_whitespace();
        let kind = parts.next().unwrap_or("");
        let nums = parts
            .map(|p| parse_f64(p, line))
            .collect::<Result<Vec<_>, _>>()?;
        if nums.iter().any(|&v| v <= 0.0) {
            return Err(ParseError::new(line, "shape dimensions must be positive"));
        }
        let shape = match (kind, nums.as_slice()) {
            ("box", &[x, y, z]) => Shape::Box { size: [x, y, z] },
            ("sphere", &[radius]) => Shape::Sphere { radius },
            ("cylinder", &[radius, length]) => Shape::Cylinder { radius, length },
            ("capsule", &[radius, length]) => Shape::Capsule { radius, length },
            ("box" | "sphere" | "cylinder" | "capsule", _) => {
                return Err(ParseError::new(
                    line,
                    format!("wrong number of dimensions for {kind}"),
                ))
            }
            _ => return Err(ParseError::new(line, format!("unknown body type `{kind}`"))),
        };
        Ok(shape)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())?;
        for p in self.params() {
            write!(f, " {p}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BodySpec {
    pub name: String,
    pub shape: Shape,
    pub mass: f64,
    /// Inertia in the body frame (`inertia.mass == mass`).
    pub inertia: Inertia6,
    /// Global position of the body frame at the initial configuration.
    pub position: Vec3,
    /// Global orientation of the body frame at the initial configuration.
    pub orientation: Mat3,
}

impl BodySpec {
    /// Body with inertia derived from its shape, centred on its frame.
    pub fn from_shape(name: &str, shape: Shape, mass: f64, position: Vec3, orientation: Mat3) -> Self {
        Self {
            name: name.to_string(),
            shape,
            mass,
            inertia: Inertia6::new(mass, Vec3::zeros(), shape.inertia(mass)),
            position,
            orientation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum JointKind {
    Hinge,
    Slider,
    Fixed,
    Universal,
}

impl JointKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            JointKind::Hinge => "hinge",
            JointKind::Slider => "slider",
            JointKind::Fixed => "fixed",
            JointKind::Universal => "universal",
        }
    }
}

impl FromStr for JointKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hinge" => Ok(JointKind::Hinge),
            "slider" => Ok(JointKind::Slider),
            "fixed" => Ok(JointKind::Fixed),
            "universal" => Ok(JointKind::Universal),
            other => Err(format!("unknown joint type `{other}`")),
        }
    }
}

impl fmt::Display for JointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub kind: JointKind,
    pub predecessor: String,
    pub successor: String,
    /// Joint position in the predecessor body frame.
    pub bias: Vec3,
    /// Rotation axis or sliding direction in the predecessor body frame.
    pub axis: Vec3,
    /// Second hinge axis of a universal joint, in the predecessor frame at q = 0.
    pub axis2: Option<Vec3>,
}

impl JointSpec {
    pub fn new(kind: JointKind, predecessor: &str, successor: &str, bias: Vec3, axis: Vec3) -> Self {
        Self {
            name: successor.to_string(),
            kind,
            predecessor: predecessor.to_string(),
            successor: successor.to_string(),
            bias,
            axis,
            axis2: None,
        }
    }
}

/// Contents of a `.robot` document.
#[derive(Clone, Debug, PartialEq)]
pub struct RoboticsModel {
    pub name: String,
    pub bodies: Vec<BodySpec>,
    pub joints: Vec<JointSpec>,
}

impl RoboticsModel {
    pub fn body(&self, name: &str) -> Option<&BodySpec> {
        self.bodies.iter().find(|b| b.name == name)
    }

    pub fn joint(&self, name: &str) -> Option<&JointSpec> {
        self.joints.iter().find(|j| j.name == name)
    }
}

struct Section<'a> {
    kind: &'a str,
    line: usize,
    fields: HashMap<&'a str, (usize, &'a str)>,
}

impl<'a> Section<'a> {
    fn take(&mut self, key: &str) -> Option<(usize, &'a str)> {
        self.fields.remove(key)
    }

    fn require(&mut self, key: &str) -> Result<(usize, &'a str), ParseError> {
        self.take(key).ok_or_else(|| {
            ParseError::new(self.line, format!("{} section missing `{key}`", self.kind))
        })
    }

    fn finish(self) -> Result<(), ParseError> {
        match self.fields.into_iter().min_by_key(|(_, (l, _))| *l) {
            Some((key, (line, _))) => Err(ParseError::new(
                line,
                format!("unknown {} field `{key}`", self.kind),
            )),
            None => Ok(()),
        }
    }
}

fn unit_vector(value: &str, line: usize, what: &str) -> Result<Vec3, ParseError> {
    let [x, y, z] = parse_floats::<3>(value, line)?;
    let v = Vec3::new(x, y, z);
    if (v.norm() - 1.0).abs() > AXIS_TOLERANCE {
        return Err(ParseError::new(line, format!("{what} not unit length")));
    }
    Ok(v)
}

fn parse_body(mut s: Section<'_>) -> Result<BodySpec, ParseError> {
    let (_, name) = s.require("name")?;
    let (tl, ty) = s.require("type")?;
    let shape = Shape::parse(ty, tl)?;
    let (ml, mass) = s.take("mass").ok_or_else(|| {
        ParseError::new(s.line, format!("body `{name}` missing mass"))
    })?;
    let mass = parse_f64(mass, ml)?;
    if mass <= 0.0 {
        return Err(ParseError::new(ml, format!("body `{name}` mass must be positive")));
    }
    let com = match s.take("com") {
        Some((l, v)) => Vec3::from(parse_floats::<3>(v, l)?),
        None => Vec3::zeros(),
    };
    let rot_inertia = match s.take("inertia") {
        Some((l, v)) => {
            let [xx, yy, zz, xy, xz, yz] = parse_floats::<6>(v, l)?;
            let m = Mat3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz);
            if m.cholesky().is_none() {
                return Err(ParseError::new(l, "rotational inertia is not positive definite"));
            }
            m
        }
        None => shape.inertia(mass),
    };
    let (pl, pos) = s.require("position")?;
    let position = Vec3::from(parse_floats::<3>(pos, pl)?);
    let orientation = match s.take("orientation") {
        Some((l, v)) => {
            let r = parse_floats::<9>(v, l)?;
            let m = Mat3::from_row_slice(&r);
            let ortho = (m.transpose() * m - Mat3::identity()).amax();
            if ortho > ORIENTATION_TOLERANCE || (m.determinant() - 1.0).abs() > ORIENTATION_TOLERANCE {
                return Err(ParseError::new(l, "orientation is not a proper rotation"));
            }
            m
        }
        None => Mat3::identity(),
    };
    let name = name.to_string();
    s.finish()?;
    Ok(BodySpec {
        name,
        shape,
        mass,
        inertia: Inertia6::new(mass, com, rot_inertia),
        position,
        orientation,
    })
}

fn parse_joint(mut s: Section<'_>) -> Result<JointSpec, ParseError> {
    let (tl, ty) = s.require("type")?;
    let kind: JointKind = ty.parse().map_err(|e| ParseError::new(tl, e))?;
    let (_, predecessor) = s.require("predecessor")?;
    let (_, successor) = s.require("successor")?;
    if predecessor == successor {
        return Err(ParseError::new(
            s.line,
            format!("joint connects `{predecessor}` to itself"),
        ));
    }
    let name = s.take("name").map_or(successor, |(_, n)| n).to_string();
    let bias = match s.take("bias") {
        Some((l, v)) => Vec3::from(parse_floats::<3>(v, l)?),
        None => Vec3::zeros(),
    };
    let axis = match (kind, s.take("axis")) {
        (_, Some((l, v))) => unit_vector(v, l, "axis")?,
        (JointKind::Fixed, None) => Vec3::z(),
        (_, None) => return Err(ParseError::new(s.line, format!("{kind} joint missing `axis`"))),
    };
    let axis2 = match (kind, s.take("axis2")) {
        (JointKind::Universal, Some((l, v))) => Some(unit_vector(v, l, "axis2")?),
        (JointKind::Universal, None) => {
            return Err(ParseError::new(s.line, "universal joint missing `axis2`"))
        }
        (_, Some((l, _))) => {
            return Err(ParseError::new(l, "`axis2` only applies to universal joints"))
        }
        (_, None) => None,
    };
    if let Some(a2) = axis2 {
        if a2.cross(&axis).norm() < 1e-6 {
            return Err(ParseError::new(s.line, "universal joint axes are parallel"));
        }
    }
    let spec = JointSpec {
        name,
        kind,
        predecessor: predecessor.to_string(),
        successor: successor.to_string(),
        bias,
        axis,
        axis2,
    };
    s.finish()?;
    Ok(spec)
}

pub fn parse_robotics(text: &str) -> Result<RoboticsModel, ParseError> {
    let mut lines = Lines::new(text);
    lines.expect_header()?;

    let name = match lines.next_line() {
        Some((_, l)) if l.starts_with("robot ") && l.split_whitespace().count() == 2 => {
            l.split_whitespace().nth(1).unwrap().to_string()
        }
        Some((line, _)) => return Err(ParseError::new(line, "expected `robot <name>`")),
        None => return Err(ParseError::new(lines.last_line(), "expected `robot <name>`")),
    };

    let mut sections: Vec<Section<'_>> = Vec::new();
    while let Some((line, content)) = lines.next_line() {
        if let Some(header) = content.strip_prefix('[').and_then(|c| c.strip_suffix(']')) {
            let kind = match header.trim() {
                "body" => "body",
                "joint" => "joint",
                other => return Err(ParseError::new(line, format!("unknown section `[{other}]`"))),
            };
            sections.push(Section {
                kind,
                line,
                fields: HashMap::new(),
            });
            continue;
        }
        let Some(section) = sections.last_mut() else {
            return Err(ParseError::new(line, "field outside of a section"));
        };
        let Some((key, value)) = content.split_once('=') else {
            return Err(ParseError::new(line, "expected `key = value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(ParseError::new(line, format!("empty value for `{key}`")));
        }
        if section.fields.insert(key, (line, value)).is_some() {
            return Err(ParseError::new(line, format!("duplicate field `{key}`")));
        }
    }

    let mut bodies = Vec::new();
    let mut joints = Vec::new();
    let mut joint_lines = Vec::new();
    for s in sections {
        let line = s.line;
        match s.kind {
            "body" => {
                let b = parse_body(s)?;
                if bodies.iter().any(|o: &BodySpec| o.name == b.name) {
                    return Err(ParseError::new(line, format!("duplicate body name `{}`", b.name)));
                }
                bodies.push(b);
            }
            _ => {
                joints.push(parse_joint(s)?);
                joint_lines.push(line);
            }
        }
    }
    if bodies.is_empty() {
        return Err(ParseError::new(lines.last_line(), "no bodies defined"));
    }

    let names: HashSet<&str> = bodies.iter().map(|b| b.name.as_str()).collect();
    let mut joint_names = HashSet::new();
    for (j, &line) in joints.iter().zip(&joint_lines) {
        for end in [&j.predecessor, &j.successor] {
            if !names.contains(end.as_str()) {
                return Err(ParseError::new(line, format!("unknown body `{end}`")));
            }
        }
        if !joint_names.insert(j.name.as_str()) {
            return Err(ParseError::new(line, format!("duplicate joint name `{}`", j.name)));
        }
    }

    Ok(RoboticsModel {
        name,
        bodies,
        joints,
    })
}

fn v3(v: &Vec3) -> String {
    format!("{} {} {}", v.x, v.y, v.z)
}

pub fn serialize_robotics(model: &RoboticsModel) -> String {
    let mut out = format!("format 1\nrobot {}\n", model.name);
    for b in &model.bodies {
        let i = &b.inertia.rot_inertia;
        let o = &b.orientation;
        let _ = write!(
            out,
            "\n[body]\nname = {}\ntype = {}\nmass = {}\ninertia = {} {} {} {} {} {}\ncom = {}\nposition = {}\norientation = {} {} {} {} {} {} {} {} {}\n",
            b.name,
            b.shape,
            b.mass,
            i[(0, 0)],
            i[(1, 1)],
            i[(2, 2)],
            i[(0, 1)],
            i[(0, 2)],
            i[(1, 2)],
            v3(&b.inertia.com),
            v3(&b.position),
            o[(0, 0)],
            o[(0, 1)],
            o[(0, 2)],
            o[(1, 0)],
            o[(1, 1)],
            o[(1, 2)],
            o[(2, 0)],
            o[(2, 1)],
            o[(2, 2)],
        );
    }
    for j in &model.joints {
        let _ = write!(
            out,
            "\n[joint]\nname = {}\ntype = {}\npredecessor = {}\nsuccessor = {}\nbias = {}\naxis = {}\n",
            j.name,
            j.kind,
            j.predecessor,
            j.successor,
            v3(&j.bias),
            v3(&j.axis),
        );
        if let Some(a2) = &j.axis2 {
            let _ = writeln!(out, "axis2 = {}", v3(a2));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = "format 1
robot arm
[body]
name = base
type = box 1 1 1
mass = 10
position = 0 0 0

[body]
name = link
type = cylinder 0.1 1
mass = 2
position = 0 0 1.5

[joint]
type = hinge
predecessor = base
successor = link
bias = 0 0 1
axis = 0 0 1
";

    #[test]
    fn single_body_no_joints() {
        let m = parse_robotics("format 1\nrobot r\n[body]\nname = b\ntype = sphere 1\nmass = 1\nposition = 0 0 0\n").unwrap();
        assert_eq!(m.bodies.len(), 1);
        assert!(m.joints.is_empty());
        assert_eq!(m.bodies[0].inertia.rot_inertia, Mat3::identity() * 0.4);
    }

    #[test]
    fn hinge_round_trip() {
        let m = parse_robotics(TWO).unwrap();
        let j = &m.joints[0];
        assert_eq!(j.kind, JointKind::Hinge);
        assert_eq!(j.bias, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(j.axis, Vec3::z());
        assert_eq!(j.name, "link");
        assert_eq!(parse_robotics(&serialize_robotics(&m)).unwrap(), m);
    }

    #[test]
    fn non_unit_axis_rejected() {
        let e = parse_robotics(&TWO.replace("axis = 0 0 1", "axis = 0 0 2")).unwrap_err();
        assert_eq!(e.line, 20);
        assert!(e.message.contains("axis not unit length"), "{e}");
    }

    #[test]
    fn missing_mass_rejected() {
        let e = parse_robotics(&TWO.replace("mass = 2\n", "")).unwrap_err();
        assert!(e.message.contains("missing mass"), "{e}");
        assert_eq!(e.line, 9);
    }

    #[test]
    fn non_positive_mass_rejected() {
        let e = parse_robotics(&TWO.replace("mass = 2", "mass = 0")).unwrap_err();
        assert!(e.message.contains("positive"), "{e}");
        assert_eq!(e.line, 12);
    }

    #[test]
    fn unknown_successor_rejected() {
        let e = parse_robotics(&TWO.replace("successor = link", "successor = ghost")).unwrap_err();
        assert!(e.message.contains("ghost"), "{e}");
        assert_eq!(e.line, 15);
    }

    #[test]
    fn unknown_joint_kind_rejected() {
        let e = parse_robotics(&TWO.replace("type = hinge", "type = ball")).unwrap_err();
        assert!(e.message.contains("unknown joint type"), "{e}");
    }

    #[test]
    fn unknown_field_rejected() {
        let e = parse_robotics(&TWO.replace("mass = 10", "mass = 10\ncolour = red")).unwrap_err();
        assert!(e.message.contains("colour"), "{e}");
    }

    #[test]
    fn self_joint_rejected() {
        assert!(parse_robotics(&TWO.replace("predecessor = base", "predecessor = link")).is_err());
    }

    #[test]
    fn bad_orientation_rejected() {
        let doc = TWO.replace("position = 0 0 0\n", "position = 0 0 0\norientation = 1 0 0 0 1 0 0 0 2\n");
        assert!(parse_robotics(&doc).unwrap_err().message.contains("rotation"));
    }

    #[test]
    fn universal_needs_second_axis() {
        let doc = TWO.replace("type = hinge", "type = universal");
        assert!(parse_robotics(&doc).unwrap_err().message.contains("axis2"));
        let doc = format!("{doc}axis2 = 1 0 0\n");
        let m = parse_robotics(&doc).unwrap();
        assert_eq!(m.joints[0].axis2, Some(Vec3::x()));
    }

    #[test]
    fn shape_inertia_closed_forms() {
        let b = Shape::Box { size: [1.0, 2.0, 3.0] }.inertia(12.0);
        assert_eq!(b.diagonal(), Vec3::new(13.0, 10.0, 5.0));
        let c = Shape::Cylinder { radius: 1.0, length: 2.0 }.inertia(6.0);
        assert_eq!(c.diagonal(), Vec3::new(3.5, 3.5, 3.0));
        // a capsule with a vanishing cylinder is a sphere
        let cap = Shape::Capsule { radius: 0.5, length: 1e-12 }.inertia(2.0);
        let sph = Shape::Sphere { radius: 0.5 }.inertia(2.0);
        assert!((cap - sph).amax() < 1e-9);
    }
}
