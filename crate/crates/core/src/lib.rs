//! Day-to-day route choice with mixed human and autonomous-vehicle traffic.
//!
//! Humans follow a logit rule over exponentially smoothed route costs;
//! AVs are independent deep Q-learners whose reward mixes travel times of
//! their own and the other group. Every episode is simulated with a
//! deterministic point-queue model.

pub mod avs;
pub mod behavior;
pub mod config;
pub mod humans;
pub mod io;
pub mod mesosim;
pub mod net;
pub mod runner;
pub mod stateobs;

use std::path::PathBuf;

pub use avs::{AvAgent, DqnParams, QNetwork};
pub use behavior::{behavior_table, BehaviorKind, BehaviorWeights, TravelTimeStats};
pub use config::{parse_config, ScenarioConfig};
pub use humans::{CostUnit, HumanAgent};
pub use mesosim::{DriverId, FreeFlowSimulator, MesoSimulator, Simulator, TripPlan, TripResult};
pub use net::{Edge, Network, Od, Path, RouteCatalog, RouteSet};
pub use runner::{EpisodeRecord, Phase, Scenario};
pub use stateobs::Group;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Net(#[from] net::NetError),
    #[error(transparent)]
    Sim(#[from] mesosim::SimError),
    #[error(transparent)]
    Human(#[from] humans::HumanError),
    #[error(transparent)]
    Behavior(#[from] behavior::BehaviorError),
    #[error(transparent)]
    Av(#[from] avs::AvError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("population line {line}: {msg}")]
    Population { line: usize, msg: String },
    #[error("records: {0}")]
    Records(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("episode {episode}: {source}")]
    Episode { episode: usize, source: Box<Error> },
}
