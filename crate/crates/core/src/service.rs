//! Real-time bridge: runs a [`Simulator`] at wall-clock rate on its own
//! thread, fans snapshots out over WebSocket and feeds client commands into
//! the simulator mailbox.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use crossbeam_channel::Sender;
use futures_util::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, oneshot};

use crate::error::Error;
use crate::integrate::IntegratorKind;
use crate::model::RobotModel;
use crate::sim::{Control, SimConfig, SimState, Simulator, UserAction};

pub const DEFAULT_RATE_HZ: f64 = 60.0;
const BROADCAST_CAPACITY: usize = 64;

/// Client → server message.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WireCommand {
    SetCommand { joint: usize, value: f64 },
    Pause,
    Resume,
    Reset,
    SetIntegrator { integrator: IntegratorKind },
}

impl WireCommand {
    /// Checks the command against the model before it reaches the mailbox.
    pub fn validate(&self, dof: usize) -> Result<Control, String> {
        Ok(match *self {
            WireCommand::SetCommand { joint, value } => {
                if joint >= dof {
                    return Err(format!("joint {joint} out of range (model has {dof} DOF)"));
                }
                if !value.is_finite() {
                    return Err("command value must be finite".into());
                }
                Control::Action(UserAction::Command {
                    joint,
                    command: value.clamp(-1.0, 1.0),
                })
            }
            WireCommand::Pause => Control::Pause,
            WireCommand::Resume => Control::Resume,
            WireCommand::Reset => Control::Reset,
            WireCommand::SetIntegrator { integrator } => Control::SetIntegrator(integrator),
        })
    }
}

/// Server → client message.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerFrame {
    /// Sent once per connection.
    Hello {
        robot: String,
        dof: usize,
        joints: Vec<String>,
        rate_hz: f64,
    },
    Snapshot {
        t: f64,
        q: Vec<f64>,
        energy: f64,
        fps_actual: f64,
    },
    Error {
        message: String,
    },
}

/// Documents served verbatim over HTTP.
#[derive(Clone, Debug)]
pub struct Documents {
    pub robot: String,
    pub geometry: String,
}

#[derive(Clone)]
struct AppState {
    frames: broadcast::Sender<Arc<str>>,
    mailbox: Sender<Control>,
    hello: Arc<str>,
    dof: usize,
    docs: Arc<Documents>,
}

/// A running service. Dropping it without calling [`ServiceHandle::shutdown`]
/// leaves the server running until the runtime stops.
pub struct ServiceHandle {
    pub addr: SocketAddr,
    stop: Arc<AtomicBool>,
    sim: Option<thread::JoinHandle<()>>,
    server_shutdown: Option<oneshot::Sender<()>>,
    server: tokio::task::JoinHandle<()>,
    mailbox: Sender<Control>,
}

impl ServiceHandle {
    /// Direct access to the simulator mailbox.
    pub fn mailbox(&self) -> Sender<Control> {
        self.mailbox.clone()
    }

    pub async fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(tx) = self.server_shutdown.take() {
            let _ = tx.send(());
        }
        // open sockets would hold graceful shutdown forever
        if tokio::time::timeout(Duration::from_secs(2), &mut self.server).await.is_err() {
            self.server.abort();
        }
        if let Some(sim) = self.sim.take() {
            let _ = tokio::task::spawn_blocking(move || sim.join()).await;
        }
    }
}

fn encode(frame: &ServerFrame) -> Arc<str> {
    serde_json::to_string(frame).expect("frames serialize").into()
}

/// Runs the simulation loop until `stop` is set. Snapshots go out once per
/// render step; a blow-up pauses the simulator and reports an error frame.
fn sim_loop(mut sim: Simulator, frames: broadcast::Sender<Arc<str>>, rate_hz: f64, stop: Arc<AtomicBool>) {
    let period = Duration::from_secs_f64(1.0 / rate_hz);
    let mut next = Instant::now();
    let mut last_emit: Option<Instant> = None;
    let mut fps = rate_hz;
    while !stop.load(Ordering::Relaxed) {
        match sim.step_frame() {
            Ok(Some(snap)) => {
                let now = Instant::now();
                if let Some(prev) = last_emit {
                    let dt = now.duration_since(prev).as_secs_f64();
                    if dt > 0.0 {
                        fps = 0.9 * fps + 0.1 / dt;
                    }
                }
                last_emit = Some(now);
                // no receivers is fine
                let _ = frames.send(encode(&ServerFrame::Snapshot {
                    t: snap.t,
                    q: snap.q,
                    energy: snap.energy,
                    fps_actual: fps,
                }));
            }
            Ok(None) => last_emit = None,
            Err(e) => {
                log::warn!("simulation halted: {e}");
                sim.apply(Control::Pause);
                let _ = frames.send(encode(&ServerFrame::Error {
                    message: format!("simulation halted: {e}; send reset to continue"),
                }));
            }
        }
        if sim.quit_requested() {
            break;
        }
        next += period;
        let now = Instant::now();
        if next > now {
            thread::sleep(next - now);
        } else {
            // running behind: do not try to catch up with a burst of frames
            next = now;
        }
    }
}

/// Starts the simulator thread and the HTTP/WebSocket server on `listener`.
/// Must be called from within a tokio runtime.
pub async fn spawn(
    model: Arc<RobotModel>,
    config: SimConfig,
    initial: SimState,
    docs: Documents,
    listener: TcpListener,
    rate_hz: f64,
) -> Result<ServiceHandle, Error> {
    if !(rate_hz > 0.0) || !rate_hz.is_finite() {
        return Err(Error::Config(format!("rate must be positive, got {rate_hz}")));
    }
    let addr = listener.local_addr()?;
    let sim = Simulator::new(model.clone(), config, initial)?;
    let mailbox = sim.sender();
    let (frames, _) = broadcast::channel(BROADCAST_CAPACITY);
    let stop = Arc::new(AtomicBool::new(false));

    let hello = encode(&ServerFrame::Hello {
        robot: model.name.clone(),
        dof: model.dof(),
        joints: model.joint_names().iter().map(|s| s.to_string()).collect(),
        rate_hz,
    });
    let state = AppState {
        frames: frames.clone(),
        mailbox: mailbox.clone(),
        hello,
        dof: model.dof(),
        docs: Arc::new(docs),
    };

    let sim = {
        let stop = stop.clone();
        thread::Builder::new()
            .name("sim".into())
            .spawn(move || sim_loop(sim, frames, rate_hz, stop))?
    };

    let app = router(state);
    let (tx, rx) = oneshot::channel::<()>();
    let server = tokio::spawn(async move {
        let shutdown = async {
            let _ = rx.await;
        };
        if let Err(e) = axum::serve(listener, app).with_graceful_shutdown(shutdown).await {
            log::error!("server stopped: {e}");
        }
    });
    log::info!("serving on {addr}");
    Ok(ServiceHandle {
        addr,
        stop,
        sim: Some(sim),
        server_shutdown: Some(tx),
        server,
        mailbox,
    })
}

fn router(state: AppState) -> Router {
    Router::new()
        .route("/sim", get(ws_upgrade))
        .route("/model", get(model_doc))
        .route("/robot", get(robot_doc))
        .with_state(state)
}

async fn model_doc(State(s): State<AppState>) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], s.docs.geometry.clone())
}

async fn robot_doc(State(s): State<AppState>) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], s.docs.robot.clone())
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(s): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client(socket, s))
}

async fn client(socket: WebSocket, state: AppState) {
    let (mut sink, mut stream) = socket.split();
    let mut frames = state.frames.subscribe();
    let (replies, mut reply_rx) = mpsc::channel::<Arc<str>>(16);

    let writer = tokio::spawn({
        let hello = state.hello.clone();
        async move {
            if sink.send(Message::Text(hello.to_string())).await.is_err() {
                return;
            }
            loop {
                let text = tokio::select! {
                    f = frames.recv() => match f {
                        Ok(text) => text,
                        // slow client: skip what it missed
                        Err(broadcast::error::RecvError::Lagged(n)) => {
                            log::debug!("client lagged by {n} frames");
                            continue;
                        }
                        Err(broadcast::error::RecvError::Closed) => break,
                    },
                    r = reply_rx.recv() => match r {
                        Some(text) => text,
                        None => break,
                    },
                };
                if sink.send(Message::Text(text.to_string())).await.is_err() {
                    break;
                }
            }
        }
    });

    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t,
            Message::Close(_) => break,
            Message::Binary(_) => {
                let _ = replies.try_send(encode(&ServerFrame::Error {
                    message: "binary frames are not supported".into(),
                }));
                continue;
            }
            _ => continue,
        };
        let result = serde_json::from_str::<WireCommand>(&text)
            .map_err(|e| format!("malformed command: {e}"))
            .and_then(|c| c.validate(state.dof));
        match result {
            Ok(control) => {
                if state.mailbox.send(control).is_err() {
                    break;
                }
            }
            Err(message) => {
                let _ = replies.try_send(encode(&ServerFrame::Error { message }));
            }
        }
    }
    drop(replies);
    writer.abort();
}
