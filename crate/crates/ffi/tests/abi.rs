use std::ffi::{CStr, CString};
use std::ptr;

use noughts::agent::QNetwork;
use noughts::dialogue::{build_seed_corpus, fit_action_model, Vocabulary};
use noughts::perception::{PerceptionMetadata, PerceptionModel, CELL_PIXELS};
use noughts_ffi::*;

struct Files {
    _dir: tempfile::TempDir,
    agent: CString,
    perception: CString,
}

fn model_files() -> Files {
    let dir = tempfile::tempdir().unwrap();
    let corpus = build_seed_corpus();
    let vocab = Vocabulary::from_corpus(&corpus);
    let actions = fit_action_model(&corpus, &vocab).unwrap();
    let agent = dir.path().join("agent.bin");
    QNetwork::new(3).save(&agent, &vocab, &actions, None).unwrap();
    let perception = dir.path().join("perception.bin");
    let meta = PerceptionMetadata {
        seed: 0,
        dataset_size: 0,
        final_accuracy: 0.0,
        config: None,
    };
    PerceptionModel::untrained(1).save(&perception, &meta).unwrap();
    Files {
        agent: CString::new(agent.to_str().unwrap()).unwrap(),
        perception: CString::new(perception.to_str().unwrap()).unwrap(),
        _dir: dir,
    }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(noughts_last_error()) }
        .to_str()
        .unwrap()
        .to_string()
}

unsafe fn take_json(p: *mut std::ffi::c_char) -> serde_json::Value {
    let v = serde_json::from_str(CStr::from_ptr(p).to_str().unwrap()).unwrap();
    noughts_string_free(p);
    v
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(noughts_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn load_errors_carry_codes_and_messages() {
    let missing = CString::new("/nonexistent/agent.bin").unwrap();
    let mut agent = ptr::null_mut();
    let st = unsafe { noughts_agent_load(missing.as_ptr(), &mut agent) };
    assert_eq!(st, NoughtsStatus::Io);
    assert!(agent.is_null());
    assert!(last_error().contains("/nonexistent/agent.bin"));
    let st = unsafe { noughts_agent_load(ptr::null(), &mut agent) };
    assert_eq!(st, NoughtsStatus::NullPointer);

    let files = model_files();
    let mut p = ptr::null_mut();
    let st = unsafe { noughts_perception_load(files.agent.as_ptr(), &mut p) };
    assert_eq!(st, NoughtsStatus::Io);
    assert!(last_error().contains("perception"), "{}", last_error());
}

#[test]
fn classify_checks_raster_length() {
    let files = model_files();
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(
            noughts_perception_load(files.perception.as_ptr(), &mut p),
            NoughtsStatus::Ok
        );
        assert!(last_error().is_empty());
        let pixels = vec![0u8; CELL_PIXELS];
        let mut label = -1;
        assert_eq!(
            noughts_perception_classify(p, pixels.as_ptr(), pixels.len(), &mut label),
            NoughtsStatus::Ok
        );
        assert!((0..3).contains(&label));
        assert_eq!(
            noughts_perception_classify(p, pixels.as_ptr(), 10, &mut label),
            NoughtsStatus::InvalidArgument
        );
        assert!(last_error().contains("1600"));
        assert_eq!(
            noughts_perception_classify(ptr::null(), pixels.as_ptr(), pixels.len(), &mut label),
            NoughtsStatus::NullPointer
        );
        noughts_perception_free(p);
        noughts_perception_free(ptr::null_mut());
    }
}

#[test]
fn session_round_trip() {
    let files = model_files();
    let (mut p, mut a, mut s) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(
            noughts_perception_load(files.perception.as_ptr(), &mut p),
            NoughtsStatus::Ok
        );
        assert_eq!(
            noughts_agent_load(files.agent.as_ptr(), &mut a),
            NoughtsStatus::Ok
        );
        assert_eq!(noughts_session_new(p, a, 5, &mut s), NoughtsStatus::Ok);
        // The session owns copies; the model handles can go first.
        noughts_perception_free(p);
        noughts_agent_free(a);

        let mut json = ptr::null_mut();
        assert_eq!(noughts_session_events(s, 0, &mut json), NoughtsStatus::Ok);
        let events = take_json(json);
        let events = events.as_array().unwrap();
        assert!(!events.is_empty());
        assert_eq!(events[0]["seq"], 1);

        assert_eq!(noughts_session_snapshot(s, &mut json), NoughtsStatus::Ok);
        let snap = take_json(json);
        let last = snap["last_seq"].as_u64().unwrap();
        assert_eq!(last, events.len() as u64);

        let text = CString::new("hello there").unwrap();
        let st = noughts_session_submit_utterance(s, text.as_ptr(), f64::NAN, &mut json);
        assert!(
            matches!(st, NoughtsStatus::Ok | NoughtsStatus::SessionClosed),
            "{st:?}"
        );
        if st == NoughtsStatus::Ok {
            let got = take_json(json);
            assert_eq!(got[0]["seq"], last + 1);
        }

        let pixels = vec![0u8; CELL_PIXELS];
        let st = noughts_session_submit_raster(s, 9, pixels.as_ptr(), pixels.len(), &mut json);
        assert!(matches!(
            st,
            NoughtsStatus::InvalidArgument | NoughtsStatus::SessionClosed | NoughtsStatus::TurnViolation
        ));
        assert!(!last_error().is_empty());
        noughts_session_free(s);
    }
}

#[test]
fn evaluation_report_is_json() {
    let files = model_files();
    let mut a = ptr::null_mut();
    let mut json = ptr::null_mut();
    unsafe {
        assert_eq!(
            noughts_agent_load(files.agent.as_ptr(), &mut a),
            NoughtsStatus::Ok
        );
        assert_eq!(noughts_agent_evaluate(a, 5, 1, &mut json), NoughtsStatus::Ok);
        let report = take_json(json);
        assert_eq!(report["games"], 5);
        let sum = report["win_rate"].as_f64().unwrap()
            + report["draw_rate"].as_f64().unwrap()
            + report["loss_rate"].as_f64().unwrap();
        assert!((sum - 1.0).abs() < 1e-12);
        assert_eq!(
            noughts_agent_evaluate(a, 5, 1, ptr::null_mut()),
            NoughtsStatus::NullPointer
        );
        noughts_agent_free(a);
    }
}

#[test]
fn header_declares_the_abi() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/noughts.h")).unwrap();
    for name in [
        "noughts_last_error",
        "noughts_string_free",
        "noughts_perception_load",
        "noughts_perception_classify",
        "noughts_agent_load",
        "noughts_agent_evaluate",
        "noughts_session_new",
        "noughts_session_submit_raster",
        "noughts_session_submit_utterance",
        "noughts_session_snapshot",
        "noughts_session_events",
        "noughts_session_free",
        "typedef struct NoughtsSession NoughtsSession",
        "NOUGHTS_STATUS_TURN_VIOLATION = 5",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"noughts.h\"\nint main(void) { NoughtsSession *s = 0; return (int)noughts_session_free == 0 && s; }\n",
    )
    .unwrap();
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok())
        .ok_or(())
}
