//! Live sessions fed by a tracker over newline-delimited JSON, with
//! incremental scene deltas for any number of viewers.

pub mod replay;
pub mod server;
pub mod session;
pub mod wire;

pub use replay::{play, replay_bundle, replay_schedule, replay_to_server, ReplayItem, ReplayOutcome};
pub use server::{connect, port_from_env, Hub, Server, ServerConfig, SessionHandle, DEFAULT_PORT, PORT_ENV};
pub use session::{DeltaState, LiveConnector, LiveSession, LiveVertex, Rejection, SceneDelta, SessionConfig};
pub use wire::{read_message, Role, WireMessage};
