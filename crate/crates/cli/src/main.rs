use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use trailer_client::TrailerClient;
use trailer_core::api::{JobRequest, JobState};
use trailer_core::assembly::survey::{parse_ratings, aggregate_survey, SurveySummary};
use trailer_core::pipeline::{synth_project, RunOutput};
use trailer_core::providers::{FixtureStore, HttpBackend, HttpEndpoint, ProviderBackend, ScriptedBackend};
use trailer_core::synth::SyntheticMovie;
use trailer_core::{Report, Stage};
use trailer_server::AppState;

#[derive(Parser)]
#[command(name = "trailer", version, about = "Build a movie trailer from a video and its metadata")]
struct Cli {
    /// Send work to a running service instead of running in-process.
    #[arg(long, global = true, env = "TRAILER_SERVER")]
    server: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run all four stages.
    Run(RunArgs),
    /// Run one stage from the cached outputs of the earlier ones.
    Stage {
        #[arg(value_parser = parse_stage)]
        stage: Stage,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Aggregate a ratings CSV.
    Survey {
        file: PathBuf,
        /// Print the full summary as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8700")]
        addr: SocketAddr,
        /// Answer provider routes from recorded fixtures.
        #[arg(long, conflicts_with_all = ["scripted", "relay"])]
        fixtures: Option<PathBuf>,
        /// Answer provider routes with the scripted synthetic backend.
        #[arg(long)]
        scripted: bool,
        /// Forward provider routes to another endpoint.
        #[arg(long)]
        relay: Option<String>,
    },
    /// Write a synthetic movie project (movie, metadata, config).
    Synth { dir: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, short)]
    config: PathBuf,
    /// Replay providers from this directory (or record into it).
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Record live provider answers into the fixture directory.
    #[arg(long, requires = "fixtures")]
    record: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the trailer, its log and the report.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    s.parse().map_err(|e: trailer_core::Error| e.to_string())
}

fn absolute(p: &Path) -> anyhow::Result<PathBuf> {
    std::path::absolute(p).with_context(|| format!("resolving {}", p.display()))
}

impl RunArgs {
    fn job(&self, stage: Option<Stage>) -> anyhow::Result<JobRequest> {
        Ok(JobRequest {
            config: absolute(&self.config)?,
            fixtures: self.fixtures.as_deref().map(absolute).transpose()?,
            record: self.record,
            stage,
            seed: self.seed,
            out_dir: self.out.as_deref().map(absolute).transpose()?,
        })
    }
}

fn print_warnings(report: &Report) {
    for w in &report.warnings {
        let stage = w.stage.map(|s| format!("[{s}] ")).unwrap_or_default();
        eprintln!("warning: {stage}{}: {}", w.code, w.message);
    }
}

fn print_run(stage: Option<Stage>, output: Option<&RunOutput>, report: &Report) {
    print_warnings(report);
    match (stage, output) {
        (_, Some(out)) => {
            println!("trailer: {}", out.trailer.display());
            println!("log: {}", out.log.display());
            println!("report: {}", out.report_path.display());
        }
        (Some(s), None) => println!("stage {s} done"),
        (None, None) => {}
    }
    println!("warnings: {}", report.warnings.len());
}

fn print_survey(summary: &SurveySummary, json: bool) -> anyhow::Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(summary)?);
        return Ok(());
    }
    println!("method\tn\tmean_total\tmedian_total\tmean_app\tmean_att\tmean_int\twins");
    for (m, s) in &summary.by_method {
        println!(
            "{m}\t{}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{}",
            s.ratings, s.mean.total, s.median.total, s.mean.appropriateness, s.mean.attractiveness, s.mean.interest, s.wins
        );
    }
    for r in &summary.rejected {
        eprintln!("rejected line {}: {}", r.line, r.reason);
    }
    Ok(())
}

async fn remote_run(client: &TrailerClient, job: JobRequest) -> anyhow::Result<()> {
    let stage = job.stage;
    let id = client.submit_job(&job).await?.id;
    let done = client.wait_job(&id, Duration::from_millis(200), Duration::from_secs(6 * 3600)).await?;
    print_run(stage, done.output.as_ref(), &done.report);
    if done.state == JobState::Failed {
        bail!("{}", done.error.unwrap_or_else(|| "job failed".into()));
    }
    Ok(())
}

fn local_run(job: JobRequest) -> anyhow::Result<()> {
    let mut report = Report::new();
    let result = job.execute(&mut report);
    match result {
        Ok(out) => {
            print_run(job.stage, out.as_ref(), &report);
            Ok(())
        }
        Err(e) => {
            print_warnings(&report);
            Err(e.into())
        }
    }
}

async fn serve(addr: SocketAddr, fixtures: Option<PathBuf>, scripted: bool, relay: Option<String>) -> anyhow::Result<()> {
    let backend: Option<Arc<dyn ProviderBackend>> = match (fixtures, scripted, relay) {
        (Some(dir), _, _) => Some(Arc::new(FixtureStore::new(dir))),
        (None, true, _) => Some(Arc::new(ScriptedBackend::new(SyntheticMovie::default(), 16))),
        (None, false, Some(url)) => Some(Arc::new(HttpBackend::new(HttpEndpoint {
            base_url: url,
            timeout_s: 120.0,
            auth_env: None,
        })?)),
        _ => None,
    };
    trailer_server::serve(addr, AppState::new(backend), |bound| {
        println!("listening on {bound}");
    })
    .await?;
    Ok(())
}

async fn run(cli: Cli) -> anyhow::Result<()> {
    let client = cli.server.as_deref().map(TrailerClient::new);
    match cli.command {
        Command::Run(args) => {
            let job = args.job(None)?;
            match &client {
                Some(c) => remote_run(c, job).await,
                None => tokio::task::spawn_blocking(move || local_run(job)).await?,
            }
        }
        Command::Stage { stage, args } => {
            let job = args.job(Some(stage))?;
            match &client {
                Some(c) => remote_run(c, job).await,
                None => tokio::task::spawn_blocking(move || local_run(job)).await?,
            }
        }
        Command::Survey { file, json } => {
            let summary = match &client {
                Some(c) => {
                    let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
                    c.survey(text).await?
                }
                None => {
                    let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
                    let (rows, rejected) = parse_ratings(&text)?;
                    let mut s = aggregate_survey(&rows);
                    s.rejected = rejected;
                    s
                }
            };
            print_survey(&summary, json)
        }
        Command::Serve {
            addr,
            fixtures,
            scripted,
            relay,
        } => serve(addr, fixtures, scripted, relay).await,
        Command::Synth { dir } => {
            let cfg = synth_project(&dir, &SyntheticMovie::default())?;
            println!("config: {}", cfg.display());
            Ok(())
        }
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("TRAILER_LOG").unwrap_or_else(|_| "error".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
