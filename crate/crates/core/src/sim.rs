//! The interactive simulation loop: substepping, user actions, energy and
//! position metrics, and forward kinematics.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use crossbeam_channel::{Receiver, Sender};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, crba, forward_dynamics, rnea, ExternalForces, STANDARD_GRAVITY};
use crate::error::{Error, IntegrationError, ParseError};
use crate::integrate::{self, IntegratorKind};
use crate::model::RobotModel;
use crate::spatial::{Mat3, Transform6, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    /// Render step `Δt` in seconds.
    pub dt: f64,
    pub num_substeps: usize,
    /// Gravity magnitude along −z, m/s².
    pub gravity: f64,
    pub integrator: IntegratorKind,
    /// Generalized force produced by a command of 1 on each joint.
    pub actuation_gain: Vec<f64>,
}

impl SimConfig {
    /// 60 Hz frames with 16 substeps, symplectic Euler, unit gains.
    pub fn new(dof: usize) -> Self {
        Self {
            dt: 1.0 / 60.0,
            num_substeps: 16,
            gravity: STANDARD_GRAVITY,
            integrator: IntegratorKind::SymplecticEuler,
            actuation_gain: vec![1.0; dof],
        }
    }

    /// Substep size `h = Δt / numSubsteps`.
    pub fn h(&self) -> f64 {
        self.dt / self.num_substeps as f64
    }

    pub fn validate(&self, model: &RobotModel) -> Result<(), Error> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.num_substeps == 0 {
            return Err(Error::Config("num_substeps must be at least 1".into()));
        }
        if self.actuation_gain.len() != model.dof() {
            return Err(Error::Config(format!(
                "expected {} actuation gains, got {}",
                model.dof(),
                self.actuation_gain.len()
            )));
        }
        Ok(())
    }
}

/// Gains that let a full command hold each joint against twice its static
/// gravity load at `q = 0`, or give it unit acceleration when unloaded.
pub fn default_gains(model: &RobotModel, gravity: f64) -> Vec<f64> {
    let zero = DVector::zeros(model.dof());
    let load = rnea(model, &zero, &zero, &zero, &ExternalForces::none(), &dynamics::gravity(gravity))
        .expect("q = 0 has model dimensions");
    let h = crba(model, &zero).expect("q = 0 has model dimensions");
    (0..model.dof())
        .map(|i| (2.0 * load[i].abs()).max(h[(i, i)]))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UserAction {
    /// Command in [−1, 1] for one joint; values outside are clamped.
    Command { joint: usize, command: f64 },
    Quit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    pub qdd: DVector<f64>,
}

impl SimState {
    pub fn at_rest(q: DVector<f64>) -> Self {
        let n = q.len();
        Self {
            t: 0.0,
            q,
            qd: DVector::zeros(n),
            qdd: DVector::zeros(n),
        }
    }

    pub fn initial(model: &RobotModel) -> Self {
        Self::at_rest(DVector::zeros(model.dof()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSnapshot {
    pub t: f64,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub qdd: Vec<f64>,
    pub energy: f64,
    /// Wall-clock seconds spent producing this snapshot.
    pub step_wall_time: f64,
}

impl SimSnapshot {
    pub fn state(&self) -> SimState {
        SimState {
            t: self.t,
            q: DVector::from_vec(self.q.clone()),
            qd: DVector::from_vec(self.qd.clone()),
            qdd: DVector::from_vec(self.qdd.clone()),
        }
    }

    fn from_state(model: &RobotModel, config: &SimConfig, s: &SimState, wall: f64) -> Self {
        Self {
            t: s.t,
            q: s.q.as_slice().to_vec(),
            qd: s.qd.as_slice().to_vec(),
            qdd: s.qdd.as_slice().to_vec(),
            energy: total_energy(model, &s.q, &s.qd, config.gravity),
            step_wall_time: wall,
        }
    }
}

/// Integration failure together with the last finite state.
#[derive(Debug, thiserror::Error)]
#[error("{source}")]
pub struct SimError {
    #[source]
    pub source: IntegrationError,
    pub snapshot: SimSnapshot,
}

impl From<SimError> for Error {
    fn from(e: SimError) -> Self {
        Error::Integration(e.source)
    }
}

/// Generalized forces from per-joint commands.
pub fn actuation(config: &SimConfig, commands: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        commands.len(),
        commands.iter().zip(&config.actuation_gain).map(|(c, g)| c * g),
    )
}

/// One substep of size `h` under generalized force `tau`.
pub fn substep(model: &RobotModel, config: &SimConfig, state: &SimState, tau: &DVector<f64>) -> Result<SimState, IntegrationError> {
    let g = dynamics::gravity(config.gravity);
    let ext = ExternalForces::none();
    let mut f = |_t: f64, q: &DVector<f64>, qd: &DVector<f64>| forward_dynamics(model, q, qd, tau, &ext, &g);
    let h = config.h();
    let out = integrate::step(config.integrator, &mut f, state.t, &state.q, &state.qd, h)?;
    Ok(SimState {
        t: state.t + h,
        q: out.q,
        qd: out.qd,
        qdd: out.qdd,
    })
}

/// Advance one render step. Commands from `actions` hold for every substep;
/// uncommanded joints get zero force.
pub fn sim_step(
    model: &RobotModel,
    config: &SimConfig,
    state: &SimState,
    actions: &[UserAction],
) -> Result<SimSnapshot, SimError> {
    let start = Instant::now();
    let mut commands = vec![0.0; model.dof()];
    for a in actions {
        if let UserAction::Command { joint, command } = *a {
            if let Some(c) = commands.get_mut(joint) {
                *c = clamp_command(command);
            }
        }
    }
    let tau = actuation(config, &commands);
    let mut s = state.clone();
    for _ in 0..config.num_substeps {
        match substep(model, config, &s, &tau) {
            Ok(next) => s = next,
            Err(source) => {
                let snapshot = SimSnapshot::from_state(model, config, &s, start.elapsed().as_secs_f64());
                return Err(SimError { source, snapshot });
            }
        }
    }
    Ok(SimSnapshot::from_state(model, config, &s, start.elapsed().as_secs_f64()))
}

fn clamp_command(c: f64) -> f64 {
    if c.is_nan() {
        0.0
    } else {
        c.clamp(-1.0, 1.0)
    }
}

/// World pose of a frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: [f64; 3],
    /// Row-major rotation matrix whose columns are the frame's axes.
    pub orientation: [f64; 9],
}

impl Pose {
    fn from_world_transform(x0: &Transform6) -> Self {
        let r: Mat3 = x0.orientation();
        let mut orientation = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                orientation[3 * i + j] = r[(i, j)];
            }
        }
        Self {
            position: [x0.trans.x, x0.trans.y, x0.trans.z],
            orientation,
        }
    }

    pub fn position(&self) -> Vec3 {
        Vec3::from(self.position)
    }

    pub fn rotation(&self) -> Mat3 {
        Mat3::from_row_slice(&self.orientation)
    }
}

fn world_transforms(model: &RobotModel, q: &DVector<f64>) -> Vec<Transform6> {
    let (xup, _) = dynamics::link_transforms(model, q);
    dynamics::world_transforms(model, &xup)
}

/// World pose of every link frame.
pub fn forward_kinematics(model: &RobotModel, q: &DVector<f64>) -> Vec<Pose> {
    world_transforms(model, q).iter().map(Pose::from_world_transform).collect()
}

/// World pose of every source body, in attachment order.
pub fn body_poses(model: &RobotModel, q: &DVector<f64>) -> Vec<(String, Pose)> {
    let x0 = world_transforms(model, q);
    model
        .attachments()
        .iter()
        .map(|a| (a.body.clone(), Pose::from_world_transform(&a.offset.compose(&x0[a.link]))))
        .collect()
}

/// Kinetic energy `½ q̇ᵀ H q̇`.
pub fn kinetic_energy(model: &RobotModel, q: &DVector<f64>, qd: &DVector<f64>) -> f64 {
    let h = crba(model, q).expect("q has model dimensions");
    0.5 * qd.dot(&(h * qd))
}

/// Gravitational potential of the moving links relative to height `datum`.
pub fn potential_energy(model: &RobotModel, q: &DVector<f64>, gravity: f64, datum: f64) -> f64 {
    let x0 = world_transforms(model, q);
    model
        .links()
        .iter()
        .zip(&x0)
        .skip(1)
        .map(|(l, x)| l.inertia.mass * gravity * (x.inv_apply_point(&l.inertia.com).z - datum))
        .sum()
}

/// Total mechanical energy with the potential datum at world `z = 0`.
pub fn total_energy(model: &RobotModel, q: &DVector<f64>, qd: &DVector<f64>, gravity: f64) -> f64 {
    kinetic_energy(model, q, qd) + potential_energy(model, q, gravity, 0.0)
}

/// `|E − E₀| / |E₀|`, or the absolute drift when `E₀ = 0`.
pub fn energy_drift(e: f64, e0: f64) -> f64 {
    if e0 == 0.0 {
        (e - e0).abs()
    } else {
        (e - e0).abs() / e0.abs()
    }
}

/// A point fixed on a body, in that body's frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Marker {
    pub body: String,
    pub point: Vec3,
}

impl Marker {
    pub fn new(body: &str, point: Vec3) -> Self {
        Self {
            body: body.to_string(),
            point,
        }
    }
}

pub fn marker_position(model: &RobotModel, q: &DVector<f64>, marker: &Marker) -> Result<Vec3, Error> {
    let a = model
        .attachment(&marker.body)
        .ok_or_else(|| crate::error::ModelError::UnknownBody(marker.body.clone()))?;
    let x0 = world_transforms(model, q);
    Ok(a.offset.compose(&x0[a.link]).inv_apply_point(&marker.point))
}

pub fn marker_distance(model: &RobotModel, q: &DVector<f64>, a: &Marker, b: &Marker) -> Result<f64, Error> {
    Ok((marker_position(model, q, a)? - marker_position(model, q, b)?).norm())
}

/// Fractional change `|d₀ − d'| / d'` of the distance between two markers.
pub fn position_error(model: &RobotModel, q: &DVector<f64>, a: &Marker, b: &Marker, d0: f64) -> Result<f64, Error> {
    let d = marker_distance(model, q, a, b)?;
    Ok((d0 - d).abs() / d)
}

/// Messages accepted by a running [`Simulator`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Control {
    Action(UserAction),
    Pause,
    Resume,
    /// Restore the initial state; the clock keeps running.
    Reset,
    SetIntegrator(IntegratorKind),
}

/// Owns the simulation state and drains an ordered mailbox at every substep
/// boundary. Commands persist until overwritten.
pub struct Simulator {
    model: Arc<RobotModel>,
    config: SimConfig,
    initial: SimState,
    state: SimState,
    commands: Vec<f64>,
    paused: bool,
    quit: bool,
    mailbox: Receiver<Control>,
    sender: Sender<Control>,
}

impl Simulator {
    pub fn new(model: Arc<RobotModel>, config: SimConfig, initial: SimState) -> Result<Self, Error> {
        config.validate(&model)?;
        if initial.q.len() != model.dof() || initial.qd.len() != model.dof() {
            return Err(Error::Config("initial state does not match model DOF".into()));
        }
        let (sender, mailbox) = crossbeam_channel::unbounded();
        let dof = model.dof();
        Ok(Self {
            model,
            config,
            state: initial.clone(),
            initial,
            commands: vec![0.0; dof],
            paused: false,
            quit: false,
            mailbox,
            sender,
        })
    }

    pub fn sender(&self) -> Sender<Control> {
        self.sender.clone()
    }

    pub fn model(&self) -> &Arc<RobotModel> {
        &self.model
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn commands(&self) -> &[f64] {
        &self.commands
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn quit_requested(&self) -> bool {
        self.quit
    }

    pub fn apply(&mut self, control: Control) {
        match control {
            Control::Action(UserAction::Command { joint, command }) => {
                if let Some(c) = self.commands.get_mut(joint) {
                    *c = clamp_command(command);
                }
            }
            Control::Action(UserAction::Quit) => self.quit = true,
            Control::Pause => self.paused = true,
            Control::Resume => self.paused = false,
            Control::Reset => {
                let t = self.state.t;
                self.state = SimState { t, ..self.initial.clone() };
                self.commands.iter_mut().for_each(|c| *c = 0.0);
            }
            Control::SetIntegrator(kind) => self.config.integrator = kind,
        }
    }

    fn drain(&mut self) {
        while let Ok(c) = self.mailbox.try_recv() {
            self.apply(c);
        }
    }

    /// Run one render step. Returns `None` while paused or after a quit.
    pub fn step_frame(&mut self) -> Result<Option<SimSnapshot>, SimError> {
        let start = Instant::now();
        for _ in 0..self.config.num_substeps {
            self.drain();
            if self.paused || self.quit {
                return Ok(None);
            }
            let tau = actuation(&self.config, &self.commands);
            match substep(&self.model, &self.config, &self.state, &tau) {
                Ok(next) => self.state = next,
                Err(source) => {
                    let snapshot = self.snapshot(start.elapsed().as_secs_f64());
                    return Err(SimError { source, snapshot });
                }
            }
        }
        Ok(Some(self.snapshot(start.elapsed().as_secs_f64())))
    }

    pub fn snapshot(&self, wall: f64) -> SimSnapshot {
        SimSnapshot::from_state(&self.model, &self.config, &self.state, wall)
    }
}

/// One timed joint command: from time `t` on, joint `joint` holds `command`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoggedAction {
    pub t: f64,
    pub joint: usize,
    pub command: f64,
}

/// Action log, one `t joint command` triple per line, sorted by time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ActionLog {
    pub entries: Vec<LoggedAction>,
}

impl ActionLog {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut entries: Vec<LoggedAction> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let parts: Vec<&str> = content.split_whitespace().collect();
            let [t, joint, command] = parts[..] else {
                return Err(ParseError::new(line, "expected `t joint command`"));
            };
            let t: f64 = t
                .parse()
                .ok()
                .filter(|t: &f64| t.is_finite() && *t >= 0.0)
                .ok_or_else(|| ParseError::new(line, format!("invalid time `{t}`")))?;
            let joint: usize = joint
                .parse()
                .map_err(|_| ParseError::new(line, format!("invalid joint index `{joint}`")))?;
            let command: f64 = command
                .parse()
                .ok()
                .filter(|c: &f64| c.is_finite())
                .ok_or_else(|| ParseError::new(line, format!("invalid command `{command}`")))?;
            if entries.last().is_some_and(|e| e.t > t) {
                return Err(ParseError::new(line, "action times must be non-decreasing"));
            }
            entries.push(LoggedAction { t, joint, command });
        }
        Ok(Self { entries })
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(out, "{} {} {}", e.t, e.joint, e.command);
        }
        out
    }

    pub fn validate(&self, model: &RobotModel) -> Result<(), Error> {
        match self.entries.iter().find(|e| e.joint >= model.dof()) {
            Some(e) => Err(Error::Config(format!(
                "action at t = {} names joint {} but the model has {} DOF",
                e.t,
                e.joint,
                model.dof()
            ))),
            None => Ok(()),
        }
    }
}

/// Replays an [`ActionLog`] deterministically: before every substep, every
/// entry with `t_entry <= t` that has not been applied yet is applied.
pub struct Replay<'a> {
    log: &'a ActionLog,
    next: usize,
}

impl<'a> Replay<'a> {
    pub fn new(log: &'a ActionLog) -> Self {
        Self { log, next: 0 }
    }

    pub fn apply_due(&mut self, t: f64, commands: &mut [f64]) {
        while let Some(e) = self.log.entries.get(self.next) {
            if e.t > t {
                break;
            }
            if let Some(c) = commands.get_mut(e.joint) {
                *c = clamp_command(e.command);
            }
            self.next += 1;
        }
    }
}

/// Run `frames` render steps of an action log and return every snapshot.
pub fn replay(
    model: &RobotModel,
    config: &SimConfig,
    initial: &SimState,
    log: &ActionLog,
    frames: usize,
) -> Result<Vec<SimSnapshot>, SimError> {
    let mut replay = Replay::new(log);
    let mut commands = vec![0.0; model.dof()];
    let mut state = initial.clone();
    let mut out = Vec::with_capacity(frames);
    for _ in 0..frames {
        let start = Instant::now();
        for _ in 0..config.num_substeps {
            replay.apply_due(state.t, &mut commands);
            let tau = actuation(config, &commands);
            state = substep(model, config, &state, &tau).map_err(|source| SimError {
                source,
                snapshot: SimSnapshot::from_state(model, config, &state, start.elapsed().as_secs_f64()),
            })?;
        }
        out.push(SimSnapshot::from_state(model, config, &state, 0.0));
    }
    Ok(out)
}
