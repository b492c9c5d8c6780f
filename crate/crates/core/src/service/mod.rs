//! Live play: a synchronous session engine plus its HTTP/event-stream
//! front end.

pub mod http;
mod session;

pub use http::{router, serve, AppState, SESSION_TTL};
pub use session::{
    CellClassifier, Event, EventKind, Models, RasterAck, Session, SessionError, Snapshot, TurnOwner,
    MAX_AGENT_RUN,
};
