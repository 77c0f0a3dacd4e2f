mod common;

use std::sync::Arc;

use common::{call, call_raw, create_body, fixture, stroke};
use sketchdoc::docstore::Session;
use sketchdoc_service::{read_log, replay, router, AppState, Recorder, RouterOptions, SessionStore};

fn scenario_log() -> Vec<sketchdoc_service::RecordedRequest> {
    read_log(&std::fs::read_to_string(fixture("scenario.jsonl")).unwrap()).unwrap()
}

async fn replayed() -> (String, String) {
    let app = router(AppState::new(SessionStore::in_memory()), RouterOptions::default());
    let statuses = replay(app.clone(), &scenario_log()).await.unwrap();
    assert!(statuses.iter().all(|s| s.is_success()), "{statuses:?}");
    let (_, session) = call_raw(&app, "GET", "/sessions/session-1", None).await;
    let (_, markdown) = call_raw(&app, "GET", "/sessions/session-1/export?format=markdown", None).await;
    (session, markdown)
}

#[tokio::test]
async fn scenario_log_reaches_the_expected_tree() {
    let (session, markdown) = replayed().await;
    let golden = std::fs::read_to_string(fixture("scenario.md")).unwrap();
    assert_eq!(markdown, golden);
    let session = Session::from_json(&session).unwrap();
    assert_eq!(session.card_ids_in_order(), ["c2", "c1", "c3", "c4", "c6"]);
    assert!(session.cards["c2"].edited);
    assert_eq!(session.sketches.len(), 5);
}

#[tokio::test]
async fn replaying_twice_gives_identical_bytes() {
    let first = replayed().await;
    let second = replayed().await;
    assert_eq!(first, second);
}

#[tokio::test]
async fn recorded_live_session_replays_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("requests.jsonl");
    let live_dir = dir.path().join("live");
    let recorder = Arc::new(Recorder::create(&log_path).unwrap());
    let live = router(
        AppState::new(SessionStore::open(&live_dir).unwrap()),
        RouterOptions {
            recorder: Some(recorder),
            ..RouterOptions::default()
        },
    );
    for entry in scenario_log() {
        let body = (!entry.body.is_null()).then(|| entry.body.clone());
        call(&live, &entry.method, &entry.path, body).await;
    }
    let (status, _) = call(&live, "POST", "/sessions/session-1/sketches", Some(stroke(0))).await;
    assert!(status.is_success());
    let (status, _) = call(&live, "DELETE", "/sessions/session-1/cards/c99", None).await;
    assert_eq!(status.as_u16(), 404);
    let (_, live_md) = call_raw(&live, "GET", "/sessions/session-1/export", None).await;
    let live_file = std::fs::read_to_string(live_dir.join("session-1.json")).unwrap();

    let log = read_log(&std::fs::read_to_string(&log_path).unwrap()).unwrap();
    assert_eq!(log.len(), 15);
    let replay_dir = dir.path().join("replay");
    let fresh = router(
        AppState::new(SessionStore::open(&replay_dir).unwrap()),
        RouterOptions::default(),
    );
    let statuses = replay(fresh.clone(), &log).await.unwrap();
    let recorded: Vec<u16> = log.iter().map(|e| e.status.unwrap()).collect();
    assert_eq!(statuses.iter().map(|s| s.as_u16()).collect::<Vec<_>>(), recorded);
    let (_, replay_md) = call_raw(&fresh, "GET", "/sessions/session-1/export", None).await;
    let replay_file = std::fs::read_to_string(replay_dir.join("session-1.json")).unwrap();
    assert_eq!(replay_file, live_file);
    assert_eq!(replay_md, live_md);
}

#[tokio::test]
async fn sessions_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(
        AppState::new(SessionStore::open(dir.path()).unwrap()),
        RouterOptions::default(),
    );
    call(&app, "POST", "/sessions", Some(create_body())).await;
    call(&app, "POST", "/sessions/session-1/sketches", Some(stroke(0))).await;
    let (_, before) = call_raw(&app, "GET", "/sessions/session-1", None).await;
    drop(app);

    let app = router(
        AppState::new(SessionStore::open(dir.path()).unwrap()),
        RouterOptions::default(),
    );
    let (_, after) = call_raw(&app, "GET", "/sessions/session-1", None).await;
    assert_eq!(before, after);
    let (_, created) = call(&app, "POST", "/sessions", Some(create_body())).await;
    assert_eq!(created["sessionId"], "session-2");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_sessions_do_not_interleave() {
    let app = router(AppState::new(SessionStore::in_memory()), RouterOptions::default());
    for _ in 0..4 {
        call(&app, "POST", "/sessions", Some(create_body())).await;
    }
    let mut tasks = Vec::new();
    for s in 1..=4 {
        let app = app.clone();
        tasks.push(tokio::spawn(async move {
            let order: Vec<usize> = if s % 2 == 0 {
                vec![0, 1, 2, 3, 4]
            } else {
                vec![4, 3, 2, 1, 0]
            };
            for i in order {
                call(
                    &app,
                    "POST",
                    &format!("/sessions/session-{s}/sketches"),
                    Some(stroke(i)),
                )
                .await;
            }
        }));
    }
    for t in tasks {
        t.await.unwrap();
    }
    let (_, even) = call_raw(&app, "GET", "/sessions/session-2/export", None).await;
    let (_, odd) = call_raw(&app, "GET", "/sessions/session-1/export", None).await;
    assert_eq!(even, call_raw(&app, "GET", "/sessions/session-4/export", None).await.1);
    assert_eq!(odd, call_raw(&app, "GET", "/sessions/session-3/export", None).await.1);
    assert_ne!(even, odd);
    for s in 1..=4 {
        let (_, text) = call_raw(&app, "GET", &format!("/sessions/session-{s}"), None).await;
        let session = Session::from_json(&text).unwrap();
        assert_eq!(session.sketches.len(), 5);
        assert_eq!(session.revision, 5);
    }
}
