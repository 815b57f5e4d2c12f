//! Event-sourced campaign service.
//!
//! Every campaign is an append-only JSONL log under `<log_dir>/campaigns/`;
//! its state is a fold over that log, so a restarted service serves exactly
//! what it served before. Published models live under `<log_dir>/models/`.

pub mod clock;
pub mod dispatch;
pub mod error;
pub mod events;
pub mod http;
pub mod log;
pub mod registry;
pub mod service;
pub mod state;

pub use clock::{Clock, ManualClock, SystemClock};
pub use dispatch::{Dispatcher, LogOnly, SimulatorOracle};
pub use error::ServiceError;
pub use events::{CampaignDefinition, CampaignEvent, EventKind};
pub use service::CampaignService;
pub use state::{CampaignInfo, CampaignMetrics};
