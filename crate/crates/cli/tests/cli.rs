use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use stdreview_core::decision::VenueRules;
use stdreview_core::session::SessionAction;
use stdreview_core::tree::{Answer, ROOT_NODE};
use stdreview_core::{builtin_registry, Category, MethodDeclaration, VenueKind};
use stdreview_service::events::CheckResult;
use stdreview_service::workflow::{NewSubmission, TriageRequest};
use stdreview_service::{MemoryStore, StepClock, VenueService};

fn stdreview(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stdreview"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_builtin_and_broken_dirs() {
    let o = stdreview(&["validate"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("ok  general 1.0.0"));

    let dir = tempfile::tempdir().unwrap();
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/standards");
    for name in ["registry.toml", "general.md"] {
        std::fs::copy(src.join(name), dir.path().join(name)).unwrap();
    }
    std::fs::write(
        dir.path().join("empty.md"),
        "---\nid: empty\nkind: method-specific\nversion: 0.1.0\n---\n\n# Empty\n\nNothing.\n\n## Application\n\nNone.\n\n## Specific Attributes\n\n### Desirable\n\n- [ ] reports something\n",
    )
    .unwrap();
    let o = stdreview(&["validate", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(
        stdout(&o).contains("bad empty: attributes: no essential attributes"),
        "{}",
        stdout(&o)
    );

    let o = stdreview(&["validate", "/nonexistent/standards"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn compose_and_checklist() {
    let o = stdreview(&[
        "compose",
        "--methods",
        "experiment",
        "--supplements",
        "information-visualization",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# review-form v1"));
    assert!(text.contains("experiment/uses-random-assignment"));

    let o = stdreview(&["compose", "--methods", "experiment", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["form_id"].as_str().unwrap().starts_with("f-"));
    assert_eq!(v["items"][0]["key"], "general/research-question");

    let o = stdreview(&["compose", "--methods", "grounded-theory"]);
    assert!(!o.status.success());
    let o = stdreview(&["compose", "--adhoc-item", "describes theoretical sampling"]);
    assert!(stdout(&o).contains("adhoc/describes-theoretical-sampling"));

    let o = stdreview(&["checklist", "--methods", "case-study,questionnaire-survey"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("[ ]"));
}

#[test]
fn agreement_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ratings.csv");
    let units: Vec<String> = (1..=10).map(|u| format!("u{u}")).collect();
    let a = ["yes", "yes", "yes", "yes", "no", "no", "yes", "yes", "yes", "no"];
    let b = ["yes", "yes", "yes", "yes", "no", "no", "no", "no", "no", "yes"];
    let text = format!("rater,{}\nA,{}\nB,{}\n", units.join(","), a.join(","), b.join(","));
    std::fs::write(&path, text).unwrap();
    let o = stdreview(&["agreement", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("kappa: 0.2000"), "{text}");
    assert!(text.contains("recommendation: recruit a third reviewer"));

    let o = stdreview(&[
        "agreement",
        path.to_str().unwrap(),
        "--metric",
        "percent",
        "--threshold",
        "0.5",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["percent"], 0.6);
    assert_eq!(v["recommendation"], "sufficient");
}

fn service() -> VenueService {
    VenueService::open(
        Box::new(MemoryStore::new()),
        Box::new(StepClock::new(0, 1)),
        builtin_registry(),
        VenueRules::new(VenueKind::Journal),
    )
    .unwrap()
}

/// Reviews a General-only submission. Each reviewer answers `path` on the
/// listed essential item indices and "yes" everywhere else.
fn write_logs(dir: &Path, reviewers: &[(&str, &[usize])], path: &[Answer]) -> Vec<PathBuf> {
    let svc = service();
    svc.ingest_submission(NewSubmission {
        submission_id: Some("p".into()),
        title: "t".into(),
        declaration: MethodDeclaration::default(),
        adhoc: false,
    })
    .unwrap();
    let checks = svc
        .initial_checks()
        .into_iter()
        .map(|check| CheckResult { check, passed: true })
        .collect();
    svc.run_triage(
        "p",
        TriageRequest {
            triager_id: "e".into(),
            checks,
            ..Default::default()
        },
    )
    .unwrap();
    let ids: Vec<String> = reviewers.iter().map(|(r, _)| r.to_string()).collect();
    let mut slots = svc.open_reviews("p", &ids).unwrap();
    let mut out = Vec::new();
    for ((reviewer, no_items), slot) in reviewers.iter().zip(slots.drain(..)) {
        let view = svc.session(&slot.session_id).unwrap();
        let essential: Vec<String> = view
            .items
            .iter()
            .filter(|i| i.category == Category::Essential)
            .map(|i| i.key.clone())
            .collect();
        for (i, key) in essential.iter().enumerate() {
            let answers: Vec<Answer> = if no_items.contains(&i) {
                path.to_vec()
            } else {
                vec![Answer::Yes]
            };
            for a in answers {
                let v = svc.session(&slot.session_id).unwrap();
                let item = v.items.iter().find(|it| &it.key == key).unwrap();
                let node = if item.prompts[0].answer.is_none() {
                    ROOT_NODE.to_string()
                } else {
                    item.prompts.last().unwrap().node_id.clone()
                };
                svc.session_action(
                    &slot.session_id,
                    SessionAction::Answer {
                        item_key: key.clone(),
                        node_id: node,
                        answer: a,
                    },
                )
                .unwrap();
            }
        }
        for item in view.items.iter().filter(|i| i.category != Category::Essential) {
            svc.session_action(
                &slot.session_id,
                SessionAction::Mark {
                    item_key: item.key.clone(),
                    present: false,
                },
            )
            .unwrap();
        }
        svc.session_action(&slot.session_id, SessionAction::Complete).unwrap();
        let file = dir.join(format!("{reviewer}.jsonl"));
        std::fs::write(&file, svc.session_log(&slot.session_id).unwrap().to_jsonl()).unwrap();
        out.push(file);
    }
    out
}

fn rules_file(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("venue.rules");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn session_replay_and_decide() {
    let dir = tempfile::tempdir().unwrap();
    let revision = [
        Answer::No,
        Answer::No,
        Answer::No,
        Answer::Yes,
        Answer::Text("add a threats section".into()),
    ];
    let logs = write_logs(dir.path(), &[("ana", &[9]), ("ben", &[9])], &revision);

    let o = stdreview(&["session", "replay", logs[0].to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("fixable-revision (add a threats section)"), "{text}");
    assert!(text.contains("Complete"));

    let rules = rules_file(
        dir.path(),
        "kind = journal\nreviewers = 2\nmetric = kappa\nthreshold = 0.6\n",
    );
    let o = stdreview(&[
        "decide",
        "--venue",
        rules.to_str().unwrap(),
        logs[0].to_str().unwrap(),
        logs[1].to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("outcome: invite-revision"), "{text}");
    assert!(text.contains("add a threats section"));

    let conf = rules_file(dir.path(), "kind = conference\n");
    let o = stdreview(&[
        "decide",
        "--venue",
        conf.to_str().unwrap(),
        logs[0].to_str().unwrap(),
        logs[1].to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("conference"));
}

#[test]
fn decide_withholds_verdict_on_low_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let justified = [Answer::No, Answer::Yes];
    // roots: 4 both yes, 2 both no, 3 yes/no, 1 no/yes
    let logs = write_logs(
        dir.path(),
        &[("ana", &[4, 5, 9]), ("ben", &[4, 5, 6, 7, 8])],
        &justified,
    );
    let rules = rules_file(
        dir.path(),
        "kind = journal\nmetric = kappa\nthreshold = 0.6\naggregation = majority\n",
    );
    let args = [
        "decide",
        "--venue",
        rules.to_str().unwrap(),
        "--format",
        "json",
        logs[0].to_str().unwrap(),
        logs[1].to_str().unwrap(),
    ];
    let o = stdreview(&args);
    assert_eq!(o.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["agreement"]["kappa"].as_f64().unwrap() - 0.2).abs() < 1e-12);

    let lenient = rules_file(dir.path(), "kind = journal\nmetric = none\n");
    let o = stdreview(&[
        "decide",
        "--venue",
        lenient.to_str().unwrap(),
        logs[0].to_str().unwrap(),
        logs[1].to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("outcome: accept"));
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn get(addr: &str, path: &str) -> Option<String> {
    let mut s = TcpStream::connect(addr).ok()?;
    s.set_read_timeout(Some(Duration::from_secs(5))).ok()?;
    write!(s, "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").ok()?;
    let mut body = String::new();
    s.read_to_string(&mut body).ok()?;
    Some(body)
}

#[test]
fn serve_reads_environment() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("events");
    let addr = format!("127.0.0.1:{}", free_port());
    let mut child = Command::new(env!("CARGO_BIN_EXE_stdreview"))
        .arg("serve")
        .env("STDREVIEW_STORE", &store)
        .env("STDREVIEW_ADDR", &addr)
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let mut response = None;
    while Instant::now() < deadline {
        if let Some(r) = get(&addr, "/initial-checks") {
            response = Some(r);
            break;
        }
        std::thread::sleep(Duration::from_millis(50));
    }
    child.kill().unwrap();
    child.wait().unwrap();
    let response = response.expect("server never answered");
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("anonymized"));
    assert!(store.is_dir());
}
