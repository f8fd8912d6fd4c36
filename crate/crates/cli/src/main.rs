use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use tm_core::dsl::{self, parse_full};
use tm_core::events::{elementary_events, state_at};
use tm_core::grip::{fold_with, FoldState};
use tm_core::render::{to_dot, to_event_timeline, RenderOptions};
use tm_core::sim::{check_chronology, parse_config, simulate, Outcome, SimConfig, Trace};
use tm_core::validate::validate;
use tm_core::{Diagnostic, Model};

const EXIT_ERRORS: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_HORIZON: u8 = 3;

/// Thinging machine models: validate, render, simulate, fold.
#[derive(Parser)]
#[command(name = "tm", version)]
struct Cli {
    /// Print diagnostics as prose instead of JSON lines.
    #[arg(long, global = true)]
    human: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model.
    Validate { file: PathBuf },
    /// Write a DOT diagram of a model to standard output.
    Render {
        file: PathBuf,
        /// Machine to draw as one opaque node; repeatable.
        #[arg(long = "fold", value_name = "PATH")]
        folds: Vec<String>,
        /// Event whose region is highlighted.
        #[arg(long, value_name = "EVENT")]
        highlight: Option<String>,
    },
    /// Simulate a model and check the trace against its chronology.
    Simulate {
        file: PathBuf,
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Where to write the trace (JSON lines); standard output if absent.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
        /// Where to write the event timeline (TSV).
        #[arg(long, value_name = "FILE")]
        timeline: Option<PathBuf>,
    },
    /// Print the canonical text of a model with machines folded.
    Fold {
        file: PathBuf,
        #[arg(required = true, value_name = "PATH")]
        paths: Vec<String>,
    },
    /// List events, or with a config show their timeline or the system
    /// state at one tick.
    Events {
        file: PathBuf,
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        /// Tick at which to report the system state (needs --config).
        #[arg(long, value_name = "TICK", requires = "config")]
        at: Option<u64>,
        /// List the one-stage events instead of the declared ones.
        #[arg(long, conflicts_with = "config")]
        elementary: bool,
    },
}

struct Reporter {
    human: bool,
    file: String,
}

impl Reporter {
    fn emit(&self, diags: &[Diagnostic]) {
        for d in diags {
            if self.human {
                eprintln!("{}:{d}", self.file);
            } else {
                eprintln!("{}", d.to_json_line());
            }
        }
    }

    fn fail(&self, code: &'static str, message: impl Into<String>) -> u8 {
        self.emit(&[Diagnostic::error(code, message, None)]);
        EXIT_ERRORS
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Parses and validates; `None` when errors were reported.
fn load(rep: &Reporter, file: &Path) -> Result<Option<Model>> {
    let text = read(file)?;
    let parsed = match parse_full(&text) {
        Ok(p) => p,
        Err(diags) => {
            rep.emit(&diags);
            return Ok(None);
        }
    };
    let mut diags = parsed.warnings;
    diags.extend(validate(&parsed.model));
    tm_core::diag::sort_diagnostics(&mut diags);
    rep.emit(&diags);
    Ok((!tm_core::diag::has_errors(&diags)).then_some(parsed.model))
}

fn load_config(rep: &Reporter, path: &Path) -> Result<Option<SimConfig>> {
    match parse_config(&read(path)?) {
        Ok(c) => Ok(Some(c)),
        Err(e) => {
            rep.fail("config-error", e.to_string());
            Ok(None)
        }
    }
}

fn run_sim(rep: &Reporter, model: &Model, config: &SimConfig) -> Option<Trace> {
    match simulate(model, config) {
        Ok(t) => Some(t),
        Err(e) => {
            rep.fail("simulation-error", e.to_string());
            None
        }
    }
}

fn fold_all(rep: &Reporter, model: Model, paths: &[String]) -> Option<Model> {
    let mut state = FoldState::new(&model);
    let mut current = model;
    for p in paths {
        match fold_with(&current, &state, p) {
            Ok((m, s)) => {
                current = m;
                state = s;
            }
            Err(e) => {
                rep.fail("fold-error", e.to_string());
                return None;
            }
        }
    }
    Some(current)
}

fn run(cli: Cli) -> Result<u8> {
    let file = match &cli.command {
        Command::Validate { file }
        | Command::Render { file, .. }
        | Command::Simulate { file, .. }
        | Command::Fold { file, .. }
        | Command::Events { file, .. } => file.display().to_string(),
    };
    let rep = Reporter {
        human: cli.human,
        file,
    };
    match cli.command {
        Command::Validate { file } => Ok(if load(&rep, &file)?.is_some() {
            0
        } else {
            EXIT_ERRORS
        }),
        Command::Render {
            file,
            folds,
            highlight,
        } => {
            let Some(model) = load(&rep, &file)? else {
                return Ok(EXIT_ERRORS);
            };
            let Some(view) = fold_all(&rep, model, &folds) else {
                return Ok(EXIT_ERRORS);
            };
            match to_dot(&view, &RenderOptions { highlight }) {
                Ok(dot) => {
                    print!("{dot}");
                    Ok(0)
                }
                Err(e) => Ok(rep.fail("unknown-event", e.to_string())),
            }
        }
        Command::Simulate {
            file,
            config,
            trace,
            timeline,
        } => {
            let Some(model) = load(&rep, &file)? else {
                return Ok(EXIT_ERRORS);
            };
            let Some(config) = load_config(&rep, &config)? else {
                return Ok(EXIT_ERRORS);
            };
            let Some(t) = run_sim(&rep, &model, &config) else {
                return Ok(EXIT_ERRORS);
            };
            match &trace {
                Some(path) => write(path, &t.to_json_lines())?,
                None => print!("{}", t.to_json_lines()),
            }
            if let Some(path) = &timeline {
                write(path, &to_event_timeline(&t, &model))?;
            }
            let diags = check_chronology(&model, &t);
            rep.emit(&diags);
            Ok(if tm_core::diag::has_errors(&diags) {
                EXIT_ERRORS
            } else if t.outcome == Outcome::HorizonExhausted {
                EXIT_HORIZON
            } else {
                0
            })
        }
        Command::Fold { file, paths } => {
            let Some(model) = load(&rep, &file)? else {
                return Ok(EXIT_ERRORS);
            };
            let Some(view) = fold_all(&rep, model, &paths) else {
                return Ok(EXIT_ERRORS);
            };
            print!("{}", dsl::print(&view));
            Ok(0)
        }
        Command::Events {
            file,
            config,
            at,
            elementary,
        } => {
            let Some(model) = load(&rep, &file)? else {
                return Ok(EXIT_ERRORS);
            };
            let Some(config_path) = config else {
                if elementary {
                    for e in elementary_events(&model) {
                        println!("{}", e.name);
                    }
                } else {
                    for e in model.events.values() {
                        let region: Vec<String> = e.region.iter().map(|i| i.to_string()).collect();
                        println!("{}\t{}\t{}", e.name, e.duration, region.join(", "));
                    }
                }
                return Ok(0);
            };
            let Some(config) = load_config(&rep, &config_path)? else {
                return Ok(EXIT_ERRORS);
            };
            let Some(t) = run_sim(&rep, &model, &config) else {
                return Ok(EXIT_ERRORS);
            };
            match at {
                Some(tick) => match state_at(&model, &t, tick) {
                    Ok(s) => println!("{}", s.to_json()),
                    Err(e) => return Ok(rep.fail("tick-out-of-range", e.to_string())),
                },
                None => print!("{}", to_event_timeline(&t, &model)),
            }
            Ok(if t.outcome == Outcome::HorizonExhausted {
                EXIT_HORIZON
            } else {
                0
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let human = cli.human;
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let message = format!("{e:#}");
            if human {
                eprintln!("error: {message}");
            } else {
                eprintln!("{}", Diagnostic::error("io-error", message, None).to_json_line());
            }
            ExitCode::from(EXIT_IO)
        }
    }
}
