use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand};

use isu_dialog::plan_library::validate;
use isu_dialog::service::{run_script, Deployment, Session, SessionManager};
use isu_dialog_cli::{router, DataArgs};

#[derive(Parser)]
#[command(name = "isu-dialog", about = "Guided document search dialog engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the HTTP JSON API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory for per-session transcript files.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 1024)]
        max_sessions: usize,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Talk to the engine on the terminal.
    Repl {
        /// Print act kinds after each system turn.
        #[arg(long)]
        acts: bool,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Run a dialog script and check its expected acts.
    Run {
        script: PathBuf,
        /// Write the transcript as JSON lines.
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Load and cross-check plans, data and lexicon.
    Validate {
        #[command(flatten)]
        data: DataArgs,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Serve {
            port,
            data_dir,
            max_sessions,
            data,
        } => {
            let dep = Arc::new(Deployment::load(&data.config())?);
            let manager = Arc::new(SessionManager::new(dep, data_dir, max_sessions));
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                axum::serve(listener, router(manager)).await?;
                anyhow::Ok(())
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Repl { acts, data } => {
            let dep = Deployment::load(&data.config())?;
            let mut session = Session::open("repl", &dep)?;
            let show = |s: &Session| {
                let last = s.transcript.last().expect("a system turn");
                println!("system> {}", last.text);
                if acts {
                    let kinds: Vec<&str> = last.acts.iter().map(|a| a.kind.name()).collect();
                    println!("        [{}]", kinds.join(" "));
                }
            };
            show(&session);
            let stdin = std::io::stdin();
            loop {
                print!("you> ");
                std::io::stdout().flush()?;
                let mut line = String::new();
                if stdin.lock().read_line(&mut line)? == 0 {
                    break;
                }
                if line.trim().is_empty() {
                    continue;
                }
                session.post(&dep, line.trim())?;
                show(&session);
                if session.state.ended {
                    break;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            script,
            transcript,
            data,
        } => {
            let dep = Deployment::load(&data.config())?;
            let src = std::fs::read_to_string(&script).with_context(|| format!("reading {}", script.display()))?;
            let report = run_script(&dep, &src)?;
            print!("{}", report.pretty());
            if let Some(path) = transcript {
                std::fs::write(&path, report.transcript_jsonl())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if report.passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprint!("expected act mismatch:\n{}", report.diff());
                Ok(ExitCode::from(1))
            }
        }
        Command::Validate { data } => {
            let dep = Deployment::load(&data.config())?;
            let diagnostics = validate(&dep.library);
            for d in &diagnostics {
                println!("{d}");
            }
            println!(
                "{} plans, {} terms, {} documents, {} tag rules",
                dep.library.len(),
                dep.task.terminology.len(),
                dep.task.index.len(),
                dep.tagger.rules().len()
            );
            Ok(if diagnostics.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}
