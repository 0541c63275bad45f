//! Headless experiments: energy drift, marker position error and frame
//! timing, written as CSV.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, IntegrationError};
use crate::integrate::IntegratorKind;
use crate::scenarios::{Scenario, ScenarioSetup};
use crate::sim::{self, actuation, energy_drift, marker_distance, position_error, SimConfig, SimState};

pub const DEFAULT_STRIDE: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub integrator: IntegratorKind,
    /// Step size in seconds.
    pub h: f64,
    pub iterations: usize,
    /// Keep every `stride`-th iteration (and always the last one).
    pub stride: usize,
    pub gravity: f64,
}

impl ExperimentSpec {
    pub fn new(scenario: Scenario, integrator: IntegratorKind, h: f64, iterations: usize) -> Self {
        Self {
            scenario,
            integrator,
            h,
            iterations,
            stride: DEFAULT_STRIDE,
            gravity: crate::dynamics::STANDARD_GRAVITY,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::Config(format!("h must be positive, got {}", self.h)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        Ok(())
    }

    fn sim_config(&self, setup: &ScenarioSetup) -> SimConfig {
        SimConfig {
            dt: self.h,
            num_substeps: 1,
            gravity: self.gravity,
            integrator: self.integrator,
            actuation_gain: setup.gains.clone(),
        }
    }

    fn sampled(&self, i: usize) -> bool {
        i.is_multiple_of(self.stride) || i == self.iterations
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Energy,
    Position,
}

impl Metric {
    pub fn column(&self) -> &'static str {
        match self {
            Metric::Energy => "energy_drift_percent",
            Metric::Position => "position_error_percent",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    /// The integrator produced a non-finite state at this iteration.
    Blowup,
}

impl RowStatus {
    fn as_str(&self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Blowup => "blowup",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Row {
    pub iteration: usize,
    pub percent: f64,
    pub status: RowStatus,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub metric: Metric,
    pub spec: ExperimentSpec,
    pub notes: Vec<String>,
    pub rows: Vec<Row>,
    pub blowup: Option<IntegrationError>,
}

impl ExperimentReport {
    /// Rows that completed without a blow-up.
    pub fn ok_rows(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.status == RowStatus::Ok)
    }

    pub fn max_percent(&self) -> f64 {
        self.ok_rows().map(|r| r.percent).fold(0.0, f64::max)
    }

    /// Value at an exact iteration, if that iteration was sampled.
    pub fn at(&self, iteration: usize) -> Option<f64> {
        self.ok_rows().find(|r| r.iteration == iteration).map(|r| r.percent)
    }

    /// Mean over the sampled iterations in `(lo, hi]`.
    pub fn mean_between(&self, lo: usize, hi: usize) -> Option<f64> {
        let (sum, n) = self
            .ok_rows()
            .filter(|r| r.iteration > lo && r.iteration <= hi)
            .fold((0.0, 0usize), |(s, n), r| (s + r.percent, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), Error> {
        let mut out = out;
        writeln!(
            out,
            "# scenario={} integrator={} h={} iterations={} stride={}",
            self.spec.scenario, self.spec.integrator, self.spec.h, self.spec.iterations, self.spec.stride
        )?;
        for n in &self.notes {
            writeln!(out, "# {n}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", self.metric.column(), "status"])?;
        for r in &self.rows {
            w.write_record([r.iteration.to_string(), r.percent.to_string(), r.status.as_str().to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs an experiment loop, sampling `metric(state)` on the sampled
/// iterations. A blow-up ends the run with a terminal row.
fn run_loop(
    spec: &ExperimentSpec,
    setup: &ScenarioSetup,
    initial: &SimState,
    drive: bool,
    rows: &mut Vec<Row>,
    mut metric: impl FnMut(&SimState) -> Result<f64, Error>,
) -> Result<Option<IntegrationError>, Error> {
    let config = spec.sim_config(setup);
    config.validate(&setup.model)?;
    let mut commands = vec![0.0; setup.model.dof()];
    let mut state = initial.clone();
    for i in 1..=spec.iterations {
        if drive {
            if let Some(ramp) = &setup.drive {
                ramp.fill(state.t, &mut commands);
            }
        }
        let tau = actuation(&config, &commands);
        match sim::substep(&setup.model, &config, &state, &tau) {
            Ok(next) => state = next,
            Err(e) => {
                rows.push(Row {
                    iteration: i,
                    percent: f64::NAN,
                    status: RowStatus::Blowup,
                });
                return Ok(Some(e));
            }
        }
        if spec.sampled(i) {
            let percent = metric(&state)?;
            if !percent.is_finite() {
                rows.push(Row {
                    iteration: i,
                    percent: f64::NAN,
                    status: RowStatus::Blowup,
                });
                return Ok(Some(IntegrationError::NonFinite { t: state.t }));
            }
            rows.push(Row {
                iteration: i,
                percent,
                status: RowStatus::Ok,
            });
        }
    }
    Ok(None)
}

/// Relative energy drift of a passive run, in percent.
pub fn run_energy_experiment(spec: &ExperimentSpec, setup: &ScenarioSetup, initial: &SimState) -> Result<ExperimentReport, Error> {
    spec.validate()?;
    let model = &setup.model;
    let g = spec.gravity;
    let e0 = sim::total_energy(model, &initial.q, &initial.qd, g);
    let mut rows = Vec::new();
    let blowup = run_loop(spec, setup, initial, false, &mut rows, |s| {
        Ok(100.0 * energy_drift(sim::total_energy(model, &s.q, &s.qd, g), e0))
    })?;
    Ok(ExperimentReport {
        metric: Metric::Energy,
        spec: spec.clone(),
        notes: vec![format!("initial energy {e0} J, no user actions")],
        rows,
        blowup,
    })
}

/// Percentage change of the marker distance under the scenario's drive.
pub fn run_position_experiment(spec: &ExperimentSpec, setup: &ScenarioSetup, initial: &SimState) -> Result<ExperimentReport, Error> {
    spec.validate()?;
    let Some((a, b)) = &setup.markers else {
        return Err(Error::Config(format!("scenario {} has no position markers", setup.scenario)));
    };
    let model = &setup.model;
    let d0 = marker_distance(model, &initial.q, a, b)?;
    if !(d0 > 0.0) {
        return Err(Error::Config("markers coincide in the initial pose".into()));
    }
    let mut rows = vec![Row {
        iteration: 0,
        percent: 100.0 * position_error(model, &initial.q, a, b, d0)?,
        status: RowStatus::Ok,
    }];
    let blowup = run_loop(spec, setup, initial, true, &mut rows, |s| {
        Ok(100.0 * position_error(model, &s.q, a, b, d0)?)
    })?;
    Ok(ExperimentReport {
        metric: Metric::Position,
        spec: spec.clone(),
        notes: vec![
            format!("markers {}@{:?} and {}@{:?}, initial distance {d0} m", a.body, a.point.as_slice(), b.body, b.point.as_slice()),
            "only this engine's curve is reported; no maximal-coordinate reference is included".into(),
        ],
        rows,
        blowup,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub frames: usize,
    pub warmup: usize,
    pub substeps: usize,
    /// Seconds per frame; `None` when no frames were timed.
    pub mean: Option<f64>,
    pub p99: Option<f64>,
    pub max: Option<f64>,
}

impl BenchReport {
    pub fn mean_substep(&self) -> Option<f64> {
        self.mean.map(|m| m / self.substeps as f64)
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.mean, self.p99, self.max) {
            (Some(mean), Some(p99), Some(max)) => write!(
                f,
                "frames={} warmup={} substeps={} mean_ms={:.4} p99_ms={:.4} max_ms={:.4} mean_substep_us={:.3}",
                self.frames,
                self.warmup,
                self.substeps,
                mean * 1e3,
                p99 * 1e3,
                max * 1e3,
                mean * 1e6 / self.substeps as f64
            ),
            _ => write!(f, "frames=0 (empty report)"),
        }
    }
}

/// Nearest-rank percentile of unsorted samples.
pub fn percentile(samples: &[f64], p: f64) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * v.len() as f64).ceil() as usize;
    Some(v[rank.clamp(1, v.len()) - 1])
}

/// Time `frames` physics-only frames after `warmup` untimed ones. Metrics,
/// snapshots and I/O are outside the timed region.
pub fn run_bench(setup: &ScenarioSetup, config: &SimConfig, frames: usize, warmup: usize) -> Result<BenchReport, Error> {
    config.validate(&setup.model)?;
    let commands = vec![0.0; setup.model.dof()];
    let tau = actuation(config, &commands);
    let mut state = setup.initial.clone();
    let mut times = Vec::with_capacity(frames);
    for k in 0..warmup + frames {
        let start = Instant::now();
        for _ in 0..config.num_substeps {
            state = sim::substep(&setup.model, config, &state, &tau)?;
        }
        let elapsed = start.elapsed().as_secs_f64();
        if k >= warmup {
            times.push(elapsed);
        }
    }
    let mean = (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64);
    Ok(BenchReport {
        frames,
        warmup,
        substeps: config.num_substeps,
        mean,
        p99: percentile(&times, 99.0),
        max: times.iter().copied().reduce(f64::max),
    })
}

/// Adds a uniform perturbation of up to `scale` to every coordinate of `q`.
pub fn perturb(state: &SimState, seed: u64, scale: f64) -> SimState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = state.clone();
    out.q += DVector::from_fn(state.q.len(), |_, _| rng.gen_range(-scale..=scale));
    out
}
