#![allow(dead_code)]

use stdreview_core::decision::VenueRules;
use stdreview_core::session::SessionAction;
use stdreview_core::tree::{Answer, ROOT_NODE};
use stdreview_core::{builtin_registry, Category, MethodDeclaration};
use stdreview_service::events::CheckResult;
use stdreview_service::store::EventStore;
use stdreview_service::workflow::{NewSubmission, SessionView, TriageRequest};
use stdreview_service::{MemoryStore, StepClock, VenueService};

pub fn service_with(store: Box<dyn EventStore>, rules: VenueRules) -> VenueService {
    VenueService::open(
        store,
        Box::new(StepClock::new(1_700_000_000_000, 1000)),
        builtin_registry(),
        rules,
    )
    .unwrap()
}

pub fn service(rules: VenueRules) -> VenueService {
    service_with(Box::new(MemoryStore::new()), rules)
}

pub fn passing_checks(svc: &VenueService) -> Vec<CheckResult> {
    svc.initial_checks()
        .into_iter()
        .map(|check| CheckResult { check, passed: true })
        .collect()
}

pub fn submit(svc: &VenueService, id: &str, methods: &[&str], supplements: &[&str]) -> String {
    svc.ingest_submission(NewSubmission {
        submission_id: Some(id.to_string()),
        title: format!("Submission {id}"),
        declaration: MethodDeclaration::new(methods.iter().copied(), supplements.iter().copied()),
        adhoc: false,
    })
    .unwrap()
    .submission_id
}

/// Submits, triages and assigns reviewers; returns the session ids.
pub fn under_review(svc: &VenueService, id: &str, methods: &[&str], reviewers: &[&str]) -> Vec<String> {
    submit(svc, id, methods, &[]);
    svc.run_triage(
        id,
        TriageRequest {
            triager_id: "editor".into(),
            checks: passing_checks(svc),
            ..Default::default()
        },
    )
    .unwrap();
    let ids: Vec<String> = reviewers.iter().map(|r| r.to_string()).collect();
    svc.open_reviews(id, &ids)
        .unwrap()
        .into_iter()
        .map(|s| s.session_id)
        .collect()
}

/// Answers an essential item along `path`: the root answer first, then one
/// answer per revealed follow-up.
pub fn answer_path(svc: &VenueService, session: &str, item: &str, path: &[Answer]) -> SessionView {
    let mut view = svc.session(session).unwrap();
    for (i, a) in path.iter().enumerate() {
        let node = if i == 0 {
            ROOT_NODE.to_string()
        } else {
            let item_view = view.items.iter().find(|v| v.key == item).unwrap();
            item_view.prompts.last().unwrap().node_id.clone()
        };
        view = svc
            .session_action(
                session,
                SessionAction::Answer {
                    item_key: item.to_string(),
                    node_id: node,
                    answer: a.clone(),
                },
            )
            .unwrap();
    }
    view
}

/// Answers "yes" to every unanswered essential item, marks every unmarked
/// item absent, and completes the session.
pub fn finish_yes(svc: &VenueService, session: &str) -> SessionView {
    let view = svc.session(session).unwrap();
    for item in &view.items {
        let action = if item.category == Category::Essential {
            if item.prompts[0].answer.is_some() {
                continue;
            }
            SessionAction::Answer {
                item_key: item.key.clone(),
                node_id: ROOT_NODE.into(),
                answer: Answer::Yes,
            }
        } else {
            if item.present.is_some() {
                continue;
            }
            SessionAction::Mark {
                item_key: item.key.clone(),
                present: false,
            }
        };
        svc.session_action(session, action).unwrap();
    }
    svc.session_action(session, SessionAction::Complete).unwrap()
}

pub fn revision_path(note: &str) -> Vec<Answer> {
    vec![
        Answer::No,
        Answer::No,
        Answer::No,
        Answer::Yes,
        Answer::Text(note.into()),
    ]
}
