//! Live annotation sessions over HTTP.
//!
//! A session wraps the robust clustering engine: the strategy proposes pairs,
//! annotators answer them, contradictions start repair prompts, and the
//! resolved clusters are labeled and exported with their full answer log.

pub mod api;
pub mod error;
pub mod session;
pub mod store;

pub use api::{app, router, serve, AppOptions, AppState, DEFAULT_ANNOTATOR};
pub use error::{ServiceError, ServiceResult};
pub use session::{CreateSession, Export, Item, NextResponse, Session, SessionMeta, SessionView, SubmitResponse};
pub use store::Store;
