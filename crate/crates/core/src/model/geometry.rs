//! `.3dt` hierarchical geometry documents.
//!
//! ```text
//! format 1
//! robot <name>
//!   component <name>
//!     body <name> color <r> <g> <b>
//!       v <x> <y> <z>
//!       f <i> <j> <k>        # 1-based vertex indices within the body
//!     end
//!   end
//! end
//! ```
//!
//! Vertices are in the local frame of the robotics body sharing the
//! component's name. `#` starts a comment.

use std::fmt::Write as _;

use crate::error::ParseError;

use super::text::{parse_f64, Lines};

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryModel {
    pub robot_name: String,
    pub components: Vec<Component>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub name: String,
    pub bodies: Vec<BodyMesh>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BodyMesh {
    pub name: String,
    pub vertices: Vec<[f64; 3]>,
    /// Zero-based vertex indices.
    pub faces: Vec<[usize; 3]>,
    pub color: [f64; 3],
}

impl GeometryModel {
    pub fn component(&self, name: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.name == name)
    }

    /// (components, bodies, vertices, faces)
    pub fn counts(&self) -> (usize, usize, usize, usize) {
        let bodies = self.components.iter().flat_map(|c| &c.bodies);
        let (v, f) = bodies
            .clone()
            .fold((0, 0), |(v, f), b| (v + b.vertices.len(), f + b.faces.len()));
        (self.components.len(), bodies.count(), v, f)
    }
}

enum Scope {
    Top,
    Robot,
    Component,
    Body,
}

pub fn parse_3dt(text: &str) -> Result<GeometryModel, ParseError> {
    let mut lines = Lines::new(text);
    lines.expect_header()?;

    let mut robot_name: Option<String> = None;
    let mut components: Vec<Component> = Vec::new();
    let mut scope = Scope::Top;
    let mut face_lines: Vec<usize> = Vec::new();
    let mut closed = false;

    while let Some((line_no, tokens)) = lines.next_tokens() {
        let err = |msg: String| ParseError::new(line_no, msg);
        if closed {
            return Err(err(format!("unexpected `{}` after final `end`", tokens[0])));
        }
        match (&scope, tokens[0]) {
            (Scope::Top, "robot") => {
                let [_, name] = tokens[..] else {
                    return Err(err("expected `robot <name>`".into()));
                };
                robot_name = Some(name.to_string());
                scope = Scope::Robot;
            }
            (Scope::Top, other) => {
                return Err(err(format!("expected `robot <name>`, found `{other}`")));
            }
            (Scope::Robot, "component") => {
                let [_, name] = tokens[..] else {
                    return Err(err("expected `component <name>`".into()));
                };
                if components.iter().any(|c| c.name == name) {
                    return Err(err(format!("duplicate component name `{name}`")));
                }
                components.push(Component {
                    name: name.to_string(),
                    bodies: Vec::new(),
                });
                scope = Scope::Component;
            }
            (Scope::Robot, "end") => {
                closed = true;
            }
            (Scope::Component, "body") => {
                let (name, color) = match tokens[..] {
                    [_, name, "color", r, g, b] => {
                        let mut color = [0.0; 3];
                        for (c, s) in color.iter_mut().zip([r, g, b]) {
                            *c = parse_f64(s, line_no)?;
                            if !(0.0..=1.0).contains(c) {
                                return Err(err(format!("color component {c} outside [0, 1]")));
                            }
                        }
                        (name, color)
                    }
                    _ => return Err(err("expected `body <name> color <r> <g> <b>`".into())),
                };
                let component = components.last_mut().expect("inside component");
                if component.bodies.iter().any(|b| b.name == name) {
                    return Err(err(format!(
                        "duplicate body name `{name}` in component `{}`",
                        component.name
                    )));
                }
                component.bodies.push(BodyMesh {
                    name: name.to_string(),
                    vertices: Vec::new(),
                    faces: Vec::new(),
                    color,
                });
                face_lines.clear();
                scope = Scope::Body;
            }
            (Scope::Component, "end") => scope = Scope::Robot,
            (Scope::Body, "v") => {
                let [_, x, y, z] = tokens[..] else {
                    return Err(err("expected `v <x> <y> <z>`".into()));
                };
                let v = [
                    parse_f64(x, line_no)?,
                    parse_f64(y, line_no)?,
                    parse_f64(z, line_no)?,
                ];
                current_body(&mut components).vertices.push(v);
            }
            (Scope::Body, "f") => {
                let [_, i, j, k] = tokens[..] else {
                    return Err(err("expected `f <i> <j> <k>`".into()));
                };
                let mut face = [0usize; 3];
                for (slot, s) in face.iter_mut().zip([i, j, k]) {
                    let idx: usize = s
                        .parse()
                        .map_err(|_| err(format!("invalid face index `{s}`")))?;
                    if idx == 0 {
                        return Err(err("face indices are 1-based".into()));
                    }
                    *slot = idx - 1;
                }
                current_body(&mut components).faces.push(face);
                face_lines.push(line_no);
            }
            (Scope::Body, "end") => {
                let body = current_body(&mut components);
                let n = body.vertices.len();
                for (face, &fl) in body.faces.iter().zip(&face_lines) {
                    if let Some(&bad) = face.iter().find(|&&i| i >= n) {
                        return Err(ParseError::new(
                            fl,
                            format!(
                                "face index {} out of range for body `{}` with {n} vertices",
                                bad + 1,
                                body.name
                            ),
                        ));
                    }
                }
                scope = Scope::Component;
            }
            (_, other) => return Err(err(format!("unexpected `{other}`"))),
        }
    }

    if !closed {
        return Err(ParseError::new(lines.last_line(), "unexpected end of file, missing `end`"));
    }
    let robot_name = robot_name.expect("closed implies robot");
    if components.is_empty() {
        return Err(ParseError::new(lines.last_line(), "robot has no components"));
    }
    Ok(GeometryModel {
        robot_name,
        components,
    })
}

fn current_body(components: &mut [Component]) -> &mut BodyMesh {
    components
        .last_mut()
        .and_then(|c| c.bodies.last_mut())
        .expect("inside body")
}

pub fn serialize_3dt(model: &GeometryModel) -> String {
    let mut out = String::from("format 1\n");
    let _ = writeln!(out, "robot {}", model.robot_name);
    for c in &model.components {
        let _ = writeln!(out, "  component {}", c.name);
        for b in &c.bodies {
            let [r, g, bl] = b.color;
            let _ = writeln!(out, "    body {} color {r} {g} {bl}", b.name);
            for [x, y, z] in &b.vertices {
                let _ = writeln!(out, "      v {x} {y} {z}");
            }
            for [i, j, k] in &b.faces {
                let _ = writeln!(out, "      f {} {} {}", i + 1, j + 1, k + 1);
            }
            out.push_str("    end\n");
        }
        out.push_str("  end\n");
    }
    out.push_str("end\n");
    out
}
