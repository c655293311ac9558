//! Venue workflow over an append-only event store, with an HTTP API.

pub mod api;
pub mod clock;
pub mod config;
pub mod events;
pub mod store;
pub mod workflow;

pub use clock::{Clock, StepClock, SystemClock};
pub use events::{Submission, SubmissionStatus};
pub use store::{EventStore, FileStore, MemoryStore};
pub use workflow::{ServiceError, VenueService};
