//! `sketchdoc`: documentation cards from recorded strokes or declarative
//! intents, chart rendering, the HTTP service, and request-log replay.

mod input;

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sketchdoc::docstore::export_markdown;
use sketchdoc::nlg::{HttpRefiner, RefineError, RefinerConfig};
use sketchdoc::pipeline::{submit_intent, submit_stroke, Findings, Refinement};
use sketchdoc::sketch::SketchOptions;
use sketchdoc::{PipelineError, Viewport};
use sketchdoc_service::{read_log, replay, router, AppState, Recorder, RouterOptions, SessionStore, StoreError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{context}: {source}")]
    Pipeline { context: String, source: PipelineError },
    #[error("{0}")]
    Usage(String),
    #[error("refiner: {0}")]
    Refiner(#[from] RefineError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("server: {0}")]
    Serve(io::Error),
    #[error("replay: {0}")]
    Replay(String),
}

impl CliError {
    /// 2 for bad input, 3 when the input selects nothing to document.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Pipeline { source, .. } if source.is_empty_outcome() => 3,
            CliError::Read { .. } | CliError::Parse { .. } | CliError::Pipeline { .. } | CliError::Usage(_) => 2,
            CliError::Refiner(_) => 2,
            CliError::Write { .. } | CliError::Store(_) | CliError::Serve(_) | CliError::Replay(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "sketchdoc",
    version,
    about = "Document chart findings from sketches or declarative intents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate documentation from recorded strokes or intents.
    Run(RunArgs),
    /// Lay out a chart and write its SVG and scene graph.
    Render(RenderArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
    /// Replay a recorded request log and write the resulting sessions.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct ViewportArgs {
    #[arg(long, default_value_t = 640.0)]
    width: f64,
    #[arg(long, default_value_t = 400.0)]
    height: f64,
}

impl ViewportArgs {
    fn viewport(&self) -> Viewport {
        Viewport::with_size(self.width, self.height)
    }
}

#[derive(Args)]
struct RefineArgs {
    /// Rewrite card text with a completion service.
    #[arg(long)]
    refine: bool,
    /// Completion endpoint; the key comes from SKETCHDOC_REFINER_KEY.
    #[arg(long, env = "SKETCHDOC_REFINER_URL")]
    refiner_url: Option<String>,
    #[arg(long, env = "SKETCHDOC_REFINER_TIMEOUT_MS", default_value_t = RefinerConfig::DEFAULT_TIMEOUT_MS)]
    refiner_timeout_ms: u64,
    #[arg(long, default_value_t = RefinerConfig::DEFAULT_MAX_TOKENS)]
    refiner_max_tokens: u32,
}

impl RefineArgs {
    fn config(&self) -> Result<Option<RefinerConfig>, CliError> {
        if !self.refine {
            return Ok(None);
        }
        let url = self
            .refiner_url
            .clone()
            .ok_or_else(|| CliError::Usage("--refine needs --refiner-url or SKETCHDOC_REFINER_URL".into()))?;
        let mut config = RefinerConfig::new(url);
        config.api_key = std::env::var("SKETCHDOC_REFINER_KEY").ok().filter(|k| !k.is_empty());
        config.timeout_ms = self.refiner_timeout_ms;
        config.max_tokens = self.refiner_max_tokens;
        Ok(Some(config))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Markdown,
    Json,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    chart: PathBuf,
    /// Records as JSON or CSV; defaults to the chart's own data.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, required_unless_present = "intents", conflicts_with = "intents")]
    sketches: Option<PathBuf>,
    #[arg(long)]
    intents: Option<PathBuf>,
    /// Documentation output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Markdown)]
    format: Format,
    /// SVG output; defaults to `--out` with an `.svg` extension.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Also write the session file here.
    #[arg(long)]
    session: Option<PathBuf>,
    #[command(flatten)]
    viewport: ViewportArgs,
    #[command(flatten)]
    refine: RefineArgs,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    chart: PathBuf,
    #[arg(long)]
    data: Option<PathBuf>,
    /// SVG output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scene graph JSON output.
    #[arg(long)]
    scene: Option<PathBuf>,
    #[command(flatten)]
    viewport: ViewportArgs,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "SKETCHDOC_HOST", default_value = "127.0.0.1")]
    host: String,
    #[arg(long, env = "SKETCHDOC_PORT", default_value_t = 8080)]
    port: u16,
    /// Directory of session files, loaded at start and kept up to date.
    #[arg(long, env = "SKETCHDOC_SESSION_DIR")]
    session_dir: Option<PathBuf>,
    /// Directory served for non-API paths, such as the UI bundle.
    #[arg(long, env = "SKETCHDOC_STATIC_DIR")]
    static_dir: Option<PathBuf>,
    /// Append every mutating request to this JSON Lines file.
    #[arg(long)]
    record: Option<PathBuf>,
    #[command(flatten)]
    refine: RefineArgs,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    log: PathBuf,
    /// Receives `<session>.json` and `<session>.md` per session.
    #[arg(long)]
    out_dir: PathBuf,
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, text),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Write {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let chart = input::load_chart(&args.chart, args.data.as_deref(), &args.viewport.viewport())?;
    let refiner = args.refine.config()?.map(HttpRefiner::new).transpose()?;
    let refinement = refiner.as_ref().map(|r| Refinement {
        refiner: r,
        max_tokens: args.refine.refiner_max_tokens,
    });
    let mut session = chart.new_session("batch");
    let mut findings: Vec<Findings> = Vec::new();
    let opts = SketchOptions::default();
    if let Some(path) = &args.sketches {
        for (i, points) in input::read_strokes(path)?.into_iter().enumerate() {
            let (f, _) = submit_stroke(&mut session, &chart, points, &opts, refinement).map_err(|source| {
                CliError::Pipeline {
                    context: format!("{} stroke {}", path.display(), i + 1),
                    source,
                }
            })?;
            findings.push(f);
        }
    } else if let Some(path) = &args.intents {
        for (i, intent) in input::read_intents(path)?.into_iter().enumerate() {
            let (f, _) =
                submit_intent(&mut session, &chart, &intent, refinement).map_err(|source| CliError::Pipeline {
                    context: format!("{} intent {}", path.display(), i + 1),
                    source,
                })?;
            findings.push(f);
        }
    }
    for warning in findings.iter().flat_map(|f| &f.warnings) {
        eprintln!("warning: {warning}");
    }
    let doc = match args.format {
        Format::Markdown => export_markdown(&session),
        Format::Json => {
            let mut text =
                serde_json::to_string_pretty(&json!({"title": session.title, "findings": findings})).expect("json");
            text.push('\n');
            text
        }
    };
    write_output(args.out.as_deref(), &doc)?;
    let svg_path = args
        .svg
        .clone()
        .or_else(|| args.out.as_ref().map(|p| p.with_extension("svg")));
    if let Some(path) = svg_path {
        write_file(&path, &chart.svg())?;
    }
    if let Some(path) = &args.session {
        write_file(path, &session.to_json())?;
    }
    Ok(())
}

fn render(args: RenderArgs) -> Result<(), CliError> {
    let chart = input::load_chart(&args.chart, args.data.as_deref(), &args.viewport.viewport())?;
    write_output(args.out.as_deref(), &chart.svg())?;
    if let Some(path) = &args.scene {
        let mut text = serde_json::to_string_pretty(&chart.scene).expect("scene serializes");
        text.push('\n');
        write_file(path, &text)?;
    }
    Ok(())
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(CliError::Serve)
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    let store = match &args.session_dir {
        Some(dir) => SessionStore::open(dir)?,
        None => SessionStore::in_memory(),
    };
    let mut state = AppState::new(store);
    if let Some(config) = args.refine.config()? {
        state = state.with_http_refiner(config)?;
    }
    let recorder = match &args.record {
        Some(path) => Some(Arc::new(Recorder::create(path).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?)),
        None => None,
    };
    let app = router(
        state,
        RouterOptions {
            static_dir: args.static_dir.clone(),
            recorder,
        },
    );
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| CliError::Usage(format!("bad address: {e}")))?;
    runtime()?
        .block_on(sketchdoc_service::serve(app, addr))
        .map_err(CliError::Serve)
}

fn replay_log(args: ReplayArgs) -> Result<(), CliError> {
    let log = read_log(&input::read_text(&args.log)?).map_err(|e| CliError::Parse {
        path: args.log.clone(),
        message: e.to_string(),
    })?;
    fs::create_dir_all(&args.out_dir).map_err(|source| CliError::Write {
        path: args.out_dir.clone(),
        source,
    })?;
    let state = AppState::new(SessionStore::in_memory());
    let store = state.store.clone();
    let app = router(state, RouterOptions::default());
    let statuses = runtime()?
        .block_on(replay(app, &log))
        .map_err(|e| CliError::Replay(e.to_string()))?;
    let mut mismatches = Vec::new();
    for (i, (entry, status)) in log.iter().zip(&statuses).enumerate() {
        if let Some(expected) = entry.status.filter(|s| *s != status.as_u16()) {
            mismatches.push(format!(
                "request {}: {} {} answered {} (recorded {expected})",
                i + 1,
                entry.method,
                entry.path,
                status.as_u16()
            ));
        }
    }
    for id in store.ids() {
        let entry = store.get(&id).expect("listed session exists");
        let session = entry.session.blocking_lock();
        write_file(&args.out_dir.join(format!("{id}.json")), &session.to_json())?;
        write_file(&args.out_dir.join(format!("{id}.md")), &export_markdown(&session))?;
    }
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(CliError::Replay(mismatches.join("; ")))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Render(args) => render(args),
        Command::Serve(args) => serve(args),
        Command::Replay(args) => replay_log(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
