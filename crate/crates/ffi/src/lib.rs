//! C ABI over the perception model, the dialogue agent and play sessions.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free`. Functions return a [`NoughtsStatus`]; on failure,
//! [`noughts_last_error`] describes the most recent error on the calling
//! thread. Structured results come back as JSON strings released with
//! [`noughts_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use noughts::agent::{evaluate, QNetwork};
use noughts::dialogue::{build_seed_corpus, ActionModel, Vocabulary};
use noughts::perception::{CellImage, PerceptionModel, CELL_PIXELS};
use noughts::service::{Models, Session, SessionError};
use noughts::simulator::Environment;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoughtsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Model = 4,
    TurnViolation = 5,
    SessionClosed = 6,
    Internal = 7,
}

/// A loaded cell classifier.
pub struct NoughtsPerception {
    model: Arc<PerceptionModel>,
}

/// A loaded dialogue agent with its vocabulary and action model.
pub struct NoughtsAgent {
    net: QNetwork,
    vocab: Vocabulary,
    actions: ActionModel,
}

/// One live game.
pub struct NoughtsSession {
    session: Session,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

fn fail(status: NoughtsStatus, msg: impl Into<String>) -> NoughtsStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning panics into [`NoughtsStatus::Internal`].
fn guard(f: impl FnOnce() -> NoughtsStatus) -> NoughtsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == NoughtsStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(NoughtsStatus::Internal, "internal panic"),
    }
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, NoughtsStatus> {
    if p.is_null() {
        return Err(fail(NoughtsStatus::NullPointer, "path is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| fail(NoughtsStatus::InvalidArgument, "path is not UTF-8"))
}

unsafe fn raster_arg(pixels: *const u8, len: usize) -> Result<CellImage, NoughtsStatus> {
    if pixels.is_null() {
        return Err(fail(NoughtsStatus::NullPointer, "pixels are null"));
    }
    if len != CELL_PIXELS {
        return Err(fail(
            NoughtsStatus::InvalidArgument,
            format!("raster needs {CELL_PIXELS} bytes, got {len}"),
        ));
    }
    CellImage::from_bytes(std::slice::from_raw_parts(pixels, len))
        .map_err(|e| fail(NoughtsStatus::InvalidArgument, e.to_string()))
}

unsafe fn write_json<T: serde::Serialize>(value: &T, out: *mut *mut c_char) -> NoughtsStatus {
    if out.is_null() {
        return fail(NoughtsStatus::NullPointer, "output pointer is null");
    }
    let json = serde_json::to_string(value).expect("results serialize");
    *out = CString::new(json).expect("JSON has no nul bytes").into_raw();
    NoughtsStatus::Ok
}

fn session_status(e: SessionError) -> NoughtsStatus {
    let status = match e {
        SessionError::TurnViolation | SessionError::Occupied(_) => NoughtsStatus::TurnViolation,
        SessionError::Closed => NoughtsStatus::SessionClosed,
        SessionError::BadCell(_) => NoughtsStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

/// Description of the last failure on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn noughts_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn noughts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn noughts_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a saved classifier.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noughts_perception_load(
    path: *const c_char,
    out: *mut *mut NoughtsPerception,
) -> NoughtsStatus {
    guard(|| {
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        if out.is_null() {
            return fail(NoughtsStatus::NullPointer, "output pointer is null");
        }
        match PerceptionModel::load(path) {
            Ok((model, _)) => {
                *out = Box::into_raw(Box::new(NoughtsPerception {
                    model: Arc::new(model),
                }));
                NoughtsStatus::Ok
            }
            Err(e) => fail(NoughtsStatus::Io, format!("{}: {e}", path.display())),
        }
    })
}

/// Classifies one 40x40 raster of 8-bit intensities. `label_out` receives
/// 0 (circle), 1 (cross) or 2 (nothing).
///
/// # Safety
/// `model` must be live; `pixels` must point to `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn noughts_perception_classify(
    model: *const NoughtsPerception,
    pixels: *const u8,
    len: usize,
    label_out: *mut i32,
) -> NoughtsStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(NoughtsStatus::NullPointer, "model is null");
        };
        if label_out.is_null() {
            return fail(NoughtsStatus::NullPointer, "output pointer is null");
        }
        let image = match raster_arg(pixels, len) {
            Ok(i) => i,
            Err(s) => return s,
        };
        *label_out = m.model.classify(&image).0.index() as i32;
        NoughtsStatus::Ok
    })
}

/// # Safety
/// `model` must be null or come from [`noughts_perception_load`].
#[no_mangle]
pub unsafe extern "C" fn noughts_perception_free(model: *mut NoughtsPerception) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Loads a saved agent with its vocabulary and action model.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noughts_agent_load(
    path: *const c_char,
    out: *mut *mut NoughtsAgent,
) -> NoughtsStatus {
    guard(|| {
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        if out.is_null() {
            return fail(NoughtsStatus::NullPointer, "output pointer is null");
        }
        match QNetwork::load(path) {
            Ok((net, vocab, meta)) => {
                *out = Box::into_raw(Box::new(NoughtsAgent {
                    net,
                    vocab,
                    actions: meta.action_model,
                }));
                NoughtsStatus::Ok
            }
            Err(noughts::agent::AgentError::Io(e)) => {
                fail(NoughtsStatus::Io, format!("{}: {e}", path.display()))
            }
            Err(e) => fail(NoughtsStatus::Model, format!("{}: {e}", path.display())),
        }
    })
}

/// Greedy play against the built-in simulated user; writes the report as
/// JSON.
///
/// # Safety
/// `agent` must be live; `json_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noughts_agent_evaluate(
    agent: *const NoughtsAgent,
    games: u32,
    seed: u64,
    json_out: *mut *mut c_char,
) -> NoughtsStatus {
    guard(|| {
        let Some(a) = agent.as_ref() else {
            return fail(NoughtsStatus::NullPointer, "agent is null");
        };
        let mut env = match Environment::from_corpus(&build_seed_corpus()) {
            Ok(e) => e,
            Err(e) => return fail(NoughtsStatus::Model, e.to_string()),
        };
        env.vocab = a.vocab.clone();
        env.actions = a.actions.clone();
        match evaluate(&a.net, &env, games as usize, seed) {
            Ok(report) => write_json(&report, json_out),
            Err(e) => fail(NoughtsStatus::Model, e.to_string()),
        }
    })
}

/// # Safety
/// `agent` must be null or come from [`noughts_agent_load`].
#[no_mangle]
pub unsafe extern "C" fn noughts_agent_free(agent: *mut NoughtsAgent) {
    if !agent.is_null() {
        drop(Box::from_raw(agent));
    }
}

/// Opens a session; the agent's opening turns are available from
/// [`noughts_session_events`]. The session keeps its own copies of both
/// models.
///
/// # Safety
/// `perception` and `agent` must be live; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noughts_session_new(
    perception: *const NoughtsPerception,
    agent: *const NoughtsAgent,
    seed: u64,
    out: *mut *mut NoughtsSession,
) -> NoughtsStatus {
    guard(|| {
        let (Some(p), Some(a)) = (perception.as_ref(), agent.as_ref()) else {
            return fail(NoughtsStatus::NullPointer, "model handle is null");
        };
        if out.is_null() {
            return fail(NoughtsStatus::NullPointer, "output pointer is null");
        }
        let models = Arc::new(Models::new(
            p.model.clone(),
            a.net.clone(),
            a.vocab.clone(),
            a.actions.clone(),
        ));
        let session = Session::new(format!("ffi-{seed}"), models, seed);
        *out = Box::into_raw(Box::new(NoughtsSession { session }));
        NoughtsStatus::Ok
    })
}

/// One raster tick for `cell` (0..8); writes `{committed, events}`.
///
/// # Safety
/// `session` must be live; `pixels` must point to `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn noughts_session_submit_raster(
    session: *mut NoughtsSession,
    cell: u32,
    pixels: *const u8,
    len: usize,
    json_out: *mut *mut c_char,
) -> NoughtsStatus {
    guard(|| {
        let Some(s) = session.as_mut() else {
            return fail(NoughtsStatus::NullPointer, "session is null");
        };
        let image = match raster_arg(pixels, len) {
            Ok(i) => i,
            Err(st) => return st,
        };
        match s.session.submit_raster(cell as usize, &image) {
            Ok(ack) => write_json(&ack, json_out),
            Err(e) => session_status(e),
        }
    })
}

/// A typed user turn; pass NaN as `confidence` to sample it. Writes the
/// emitted events as a JSON array.
///
/// # Safety
/// `session` must be live; `text` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn noughts_session_submit_utterance(
    session: *mut NoughtsSession,
    text: *const c_char,
    confidence: f64,
    json_out: *mut *mut c_char,
) -> NoughtsStatus {
    guard(|| {
        let Some(s) = session.as_mut() else {
            return fail(NoughtsStatus::NullPointer, "session is null");
        };
        if text.is_null() {
            return fail(NoughtsStatus::NullPointer, "text is null");
        }
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            return fail(NoughtsStatus::InvalidArgument, "text is not UTF-8");
        };
        let confidence = (!confidence.is_nan()).then_some(confidence);
        match s.session.submit_utterance(text, confidence) {
            Ok(events) => write_json(&events, json_out),
            Err(e) => session_status(e),
        }
    })
}

/// Writes `{session_id, board, turn, transcript_len, outcome, last_seq}`.
///
/// # Safety
/// `session` must be live; `json_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noughts_session_snapshot(
    session: *const NoughtsSession,
    json_out: *mut *mut c_char,
) -> NoughtsStatus {
    guard(|| match session.as_ref() {
        Some(s) => write_json(&s.session.snapshot(), json_out),
        None => fail(NoughtsStatus::NullPointer, "session is null"),
    })
}

/// Writes the events with sequence numbers above `after` as a JSON array.
///
/// # Safety
/// `session` must be live; `json_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noughts_session_events(
    session: *const NoughtsSession,
    after: u64,
    json_out: *mut *mut c_char,
) -> NoughtsStatus {
    guard(|| match session.as_ref() {
        Some(s) => write_json(&s.session.events_after(after), json_out),
        None => fail(NoughtsStatus::NullPointer, "session is null"),
    })
}

/// # Safety
/// `session` must be null or come from [`noughts_session_new`].
#[no_mangle]
pub unsafe extern "C" fn noughts_session_free(session: *mut NoughtsSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}
