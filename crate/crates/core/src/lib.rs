//! Structured peer review against empirical standards: standard documents,
//! review-form composition, dynamic review sessions, venue decision rules and
//! inter-rater agreement.

pub mod agreement;
pub mod compose;
pub mod decision;
pub mod fixtures;
pub mod session;
pub mod standard;
pub mod status;
pub mod text;
pub mod tree;

pub use compose::{compose_form, MethodDeclaration, ReviewForm};
pub use fixtures::builtin_registry;
pub use session::{start_session, DynamicForm, Session};
pub use standard::{Category, Registry, Standard, StandardKind};
pub use status::{ItemStatus, StatusKind};
pub use tree::{Answer, VenueKind};
