use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use stdreview_core::agreement::{
    evaluate_threshold, ratings_from_sessions, AgreementReport, Metric, RatingsMatrix, Recommendation, ThresholdPolicy,
};
use stdreview_core::compose::author_checklist;
use stdreview_core::decision::{aggregate, decide, generate_letter};
use stdreview_core::session::{Session, SessionLog};
use stdreview_core::standard::validate_standard;
use stdreview_core::{builtin_registry, compose_form, Category, DynamicForm, MethodDeclaration, Registry};
use stdreview_service::config::{load_rules, ServerSettings};
use stdreview_service::{FileStore, SystemClock, VenueService};

#[derive(Parser)]
#[command(
    name = "stdreview",
    version,
    about = "Standards-based review forms, sessions and decisions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(clap::Args)]
struct Standards {
    /// Directory holding a registry.toml manifest; the built-in set otherwise.
    #[arg(long, value_name = "DIR")]
    standards: Option<PathBuf>,
}

impl Standards {
    fn load(&self) -> Result<Registry> {
        match &self.standards {
            Some(dir) => Registry::load_dir(dir).with_context(|| format!("loading standards from {}", dir.display())),
            None => Ok(builtin_registry()),
        }
    }
}

#[derive(clap::Args)]
struct Declaration {
    #[arg(long, value_delimiter = ',', value_name = "IDS")]
    methods: Vec<String>,
    #[arg(long, value_delimiter = ',', value_name = "IDS")]
    supplements: Vec<String>,
    /// Extra essential item for a method no standard covers; repeatable.
    #[arg(long = "adhoc-item", value_name = "TEXT")]
    adhoc_items: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check every standard in a directory.
    Validate {
        /// Defaults to the built-in standards.
        dir: Option<PathBuf>,
    },
    /// Print the review form for a method declaration.
    Compose {
        #[command(flatten)]
        decl: Declaration,
        #[command(flatten)]
        standards: Standards,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Print the author checklist for a method declaration.
    Checklist {
        #[command(flatten)]
        decl: Declaration,
        #[command(flatten)]
        standards: Standards,
    },
    #[command(subcommand)]
    Session(SessionCommand),
    /// Agreement statistics for a delimited ratings file.
    Agreement {
        file: PathBuf,
        #[arg(long, default_value = "kappa")]
        metric: Metric,
        #[arg(long, default_value_t = 0.6, allow_negative_numbers = true)]
        threshold: f64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Decide from completed session logs under a venue's rules.
    Decide {
        /// Venue rules file (key = value lines).
        #[arg(long, value_name = "RULES")]
        venue: PathBuf,
        #[command(flatten)]
        standards: Standards,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(required = true)]
        logs: Vec<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        /// Event store directory [env: STDREVIEW_STORE]
        #[arg(long)]
        store: Option<PathBuf>,
        /// Listen address [env: STDREVIEW_ADDR]
        #[arg(long)]
        addr: Option<String>,
        /// Standards directory [env: STDREVIEW_STANDARDS]
        #[arg(long)]
        standards: Option<PathBuf>,
        /// Venue rules file; journal defaults otherwise.
        #[arg(long)]
        rules: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SessionCommand {
    /// Rebuild a session from its JSONL log and print its state.
    Replay {
        log: PathBuf,
        #[command(flatten)]
        standards: Standards,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate { dir } => validate(dir.as_deref()),
        Command::Compose {
            decl,
            standards,
            format,
        } => {
            let registry = standards.load()?;
            let form = compose_form(&declaration(&decl), &registry)?.with_adhoc_items(&decl.adhoc_items)?;
            match format {
                Format::Text => print!("{}", form.to_text()),
                Format::Json => println!("{}", form.to_json()),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Checklist { decl, standards } => {
            let registry = standards.load()?;
            let form = compose_form(&declaration(&decl), &registry)?.with_adhoc_items(&decl.adhoc_items)?;
            print!("{}", author_checklist(&form).to_text());
            Ok(ExitCode::SUCCESS)
        }
        Command::Session(SessionCommand::Replay { log, standards, format }) => {
            let registry = standards.load()?;
            let (form, session) = replay(&log, &registry)?;
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&session)?),
                Format::Text => print!("{}", session_text(&form, &session)),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Agreement {
            file,
            metric,
            threshold,
            format,
        } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let matrix = RatingsMatrix::from_delimited(&text)?;
            let policy = ThresholdPolicy {
                metric,
                threshold,
                ..ThresholdPolicy::default()
            };
            let report = evaluate_threshold(&matrix, &policy)?;
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
                Format::Text => print!("{}", report_text(&report)),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Decide {
            venue,
            standards,
            format,
            logs,
        } => decide_logs(&venue, &standards.load()?, format, &logs),
        Command::Serve {
            store,
            addr,
            standards,
            rules,
        } => serve(ServerSettings::resolve(store, addr, standards), rules),
    }
}

fn declaration(d: &Declaration) -> MethodDeclaration {
    MethodDeclaration::new(&d.methods, &d.supplements)
}

fn validate(dir: Option<&Path>) -> Result<ExitCode> {
    let registry = match dir {
        Some(dir) => Registry::load_dir(dir).with_context(|| format!("loading {}", dir.display()))?,
        None => builtin_registry(),
    };
    let mut problems = 0;
    for s in registry.standards() {
        let diagnostics = validate_standard(s, &registry);
        if diagnostics.is_empty() {
            println!("ok  {} {} ({} items)", s.id, s.version, s.attributes.len());
        }
        for d in &diagnostics {
            println!("bad {d}");
        }
        problems += diagnostics.len();
    }
    if problems > 0 {
        eprintln!("{problems} problem(s)");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn read_log(path: &Path) -> Result<SessionLog> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    SessionLog::from_jsonl(&text).with_context(|| format!("parsing {}", path.display()))
}

fn form_for(log: &SessionLog, registry: &Registry) -> Result<DynamicForm> {
    let h = &log.header;
    let form = compose_form(&h.declaration, registry)?.with_adhoc_items(&h.adhoc_items)?;
    ensure!(
        form.form_id == h.form_id,
        "log was recorded against form {} but these standards give {}",
        h.form_id,
        form.form_id
    );
    Ok(DynamicForm::new(form, h.venue, registry)?)
}

fn replay(path: &Path, registry: &Registry) -> Result<(DynamicForm, Session)> {
    let log = read_log(path)?;
    let form = form_for(&log, registry)?;
    let session = log
        .replay(&form)
        .with_context(|| format!("replaying {}", path.display()))?;
    Ok((form, session))
}

fn session_text(form: &DynamicForm, s: &Session) -> String {
    let mut out = format!(
        "session {} (reviewer {}, form {}): {:?}\n",
        s.session_id,
        s.reviewer_id,
        s.form_id,
        s.state()
    );
    for item in &form.form().items {
        let line = match item.category {
            Category::Essential => match s.item_status(form, &item.key).ok().flatten() {
                Some(st) => match st.note {
                    Some(n) => format!("{}: {} ({n})", item.key, st.kind),
                    None => format!("{}: {}", item.key, st.kind),
                },
                None => format!("{}: open", item.key),
            },
            _ => match s.desirable_marks().get(&item.key) {
                Some(true) => format!("{}: present", item.key),
                Some(false) => format!("{}: absent", item.key),
                None => format!("{}: unmarked", item.key),
            },
        };
        out += &line;
        out.push('\n');
    }
    if !s.comments().is_empty() {
        out += &format!("comments: {}\n", s.comments());
    }
    out
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |v| format!("{v:.4}"))
}

fn report_text(r: &AgreementReport) -> String {
    let recommendation = match r.recommendation {
        Recommendation::Sufficient => "sufficient",
        Recommendation::RecruitThirdReviewer => "recruit a third reviewer",
    };
    format!(
        "percent: {:.4}\nkappa: {}\nalpha: {}\n{}: {} (threshold {}{})\nrecommendation: {recommendation}\n",
        r.percent,
        fmt_opt(r.kappa),
        fmt_opt(r.alpha),
        r.metric,
        fmt_opt(r.value()),
        r.threshold,
        if r.degenerate { ", degenerate" } else { "" },
    )
}

/// Exit code when agreement is too low to decide without another reviewer.
const NEEDS_THIRD: u8 = 3;

fn decide_logs(venue: &Path, registry: &Registry, format: Format, paths: &[PathBuf]) -> Result<ExitCode> {
    let rules = load_rules(venue)?;
    let logs = paths.iter().map(|p| read_log(p)).collect::<Result<Vec<_>>>()?;
    let form = form_for(&logs[0], registry)?;
    ensure!(
        form.venue() == rules.venue_kind,
        "logs were recorded for a {} but the rules are for a {}",
        form.venue(),
        rules.venue_kind
    );
    let mut sessions = Vec::new();
    for (log, path) in logs.iter().zip(paths) {
        ensure!(
            log.header.form_id == form.form_id(),
            "{} uses a different form",
            path.display()
        );
        sessions.push(
            log.replay(&form)
                .with_context(|| format!("replaying {}", path.display()))?,
        );
    }

    let mut agreement = None;
    if let Some(policy) = &rules.agreement_policy {
        if sessions.len() < rules.reviewers_required {
            bail!(
                "{} reviewers required, {} logs given",
                rules.reviewers_required,
                sessions.len()
            );
        }
        let initial = &sessions[..rules.reviewers_required];
        let report = evaluate_threshold(&ratings_from_sessions(&form, initial, &policy.scope)?, policy)?;
        let third_present = sessions.len() > rules.reviewers_required;
        if report.recommendation == Recommendation::RecruitThirdReviewer && !third_present {
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&json!({ "agreement": report }))?),
                Format::Text => println!("{}no decision: a third reviewer is needed", report_text(&report)),
            }
            return Ok(ExitCode::from(NEEDS_THIRD));
        }
        agreement = Some(report);
    }

    let consensus = aggregate(&form, &sessions, &rules)?;
    let verdict = decide(&consensus, &sessions, &rules)?;
    let letter = generate_letter(form.form(), &verdict, &consensus, &sessions)?;
    match format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&json!({ "agreement": agreement, "verdict": verdict, "letter": letter }))?
        ),
        Format::Text => {
            let nominated = if verdict.nominated { " (nominated)" } else { "" };
            println!("outcome: {}{nominated}\n", verdict.outcome);
            print!("{}", letter.to_text());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn serve(settings: ServerSettings, rules: Option<PathBuf>) -> Result<ExitCode> {
    let registry = match &settings.standards {
        Some(dir) => Registry::load_dir(dir).with_context(|| format!("loading standards from {}", dir.display()))?,
        None => builtin_registry(),
    };
    let rules = match rules {
        Some(path) => load_rules(&path)?,
        None => stdreview_core::decision::VenueRules::new(stdreview_core::VenueKind::Journal),
    };
    let store = FileStore::open(&settings.store)?;
    let service = VenueService::open(Box::new(store), Box::new(SystemClock), registry, rules)?;
    let runtime = tokio::runtime::Runtime::new()?;
    eprintln!(
        "stdreview listening on {} (store {})",
        settings.addr,
        settings.store.display()
    );
    runtime.block_on(stdreview_service::api::serve(Arc::new(service), &settings.addr))?;
    Ok(ExitCode::SUCCESS)
}
