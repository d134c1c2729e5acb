use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use mobsim::upload::{self, SetupError};
use mobsim::{exit, load_test, prepare, run_upload, run_upload_file, Client, ClientConfig, LoadTestError, LoadTestPlan, Preferences};

#[derive(Parser)]
#[command(version, about = "Synthetic mobility client")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Server base URL, overriding the configuration.
    #[arg(long, global = true)]
    server: Option<String>,
    /// Trace seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Preference file, overriding the configuration.
    #[arg(long, global = true)]
    prefs: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and segment a trace, writing a segment file.
    Gen {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Register and upload a generated trace (or a segment file).
    Upload {
        /// Upload this segment file instead of generating a trace.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Date for the segments of --trace (YYYY-MM-DD).
        #[arg(long, requires = "trace")]
        date: Option<NaiveDate>,
    },
    /// Send one encrypted registration per period.
    Loadtest {
        /// Seconds between requests.
        #[arg(long, default_value_t = 10.0)]
        period: f64,
        /// Seconds to run.
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
        /// Required server key size.
        #[arg(long)]
        key_bits: Option<usize>,
    },
    /// Print and drain this device's push messages.
    Inbox,
}

fn fail(code: i32, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("mobsim: {msg}");
    ExitCode::from(code as u8)
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn setup_code(e: &SetupError) -> i32 {
    match e {
        SetupError::Config(_) | SetupError::Trace(_) | SetupError::Segments(_) => exit::CONFIG_ERROR,
        SetupError::Prefs(_) => exit::PARTIAL_FAILURE,
    }
}

fn seconds(name: &str, s: f64) -> Result<Duration, String> {
    Duration::try_from_secs_f64(s).map_err(|_| format!("--{name} must be a non-negative number of seconds"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match ClientConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return fail(exit::CONFIG_ERROR, e),
    };
    if let Some(s) = cli.server {
        config.server_url = s;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(p) = cli.prefs {
        config.prefs_path = p;
    }
    let client = Client::new(&config.server_url, Duration::from_secs(config.timeout_s));
    let mut prefs = match Preferences::open(&config.prefs_path) {
        Ok(p) => p,
        Err(e) => return fail(exit::CONFIG_ERROR, e),
    };

    match cli.command {
        Command::Gen { out } => {
            let prepared = match prepare(&config) {
                Ok(p) => p,
                Err(e) => return fail(setup_code(&e), e),
            };
            let text = prepared.to_segment_file();
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, text) {
                        return fail(exit::PARTIAL_FAILURE, format!("{}: {e}", path.display()));
                    }
                }
                None => print!("{text}"),
            }
            eprintln!("{} samples in {} segments", prepared.samples.len(), prepared.segments.len());
            ExitCode::SUCCESS
        }
        Command::Upload { trace, date } => {
            let report = match trace {
                Some(path) => {
                    let text = match std::fs::read_to_string(&path) {
                        Ok(t) => t,
                        Err(e) => return fail(exit::CONFIG_ERROR, format!("{}: {e}", path.display())),
                    };
                    let segments = match mobility_core::model::parse_segments(&text) {
                        Ok(s) => s,
                        Err(e) => return fail(exit::CONFIG_ERROR, format!("{}: {e}", path.display())),
                    };
                    let date = date.unwrap_or_else(|| chrono::Local::now().date_naive());
                    run_upload_file(&config, &segments, date, &mut prefs, &client)
                }
                None => prepare(&config).and_then(|p| run_upload(&config, &p, &mut prefs, &client)),
            };
            match report {
                Ok(r) => {
                    print_json(&r);
                    ExitCode::from(r.exit_code() as u8)
                }
                Err(e) => fail(setup_code(&e), e),
            }
        }
        Command::Loadtest { period, duration, key_bits } => {
            let (period, duration) = match (seconds("period", period), seconds("duration", duration)) {
                (Ok(p), Ok(d)) => (p, d),
                (Err(e), _) | (_, Err(e)) => return fail(exit::CONFIG_ERROR, e),
            };
            let user_hash = match upload::user_hash(&mut prefs) {
                Ok(h) => h,
                Err(e) => return fail(exit::PARTIAL_FAILURE, e),
            };
            let plan = LoadTestPlan { period, duration, key_bits, user_hash, app_version: config.app_version };
            match load_test(&client, &plan) {
                Ok(r) => {
                    print_json(&r);
                    ExitCode::from(r.exit_code() as u8)
                }
                Err(e @ (LoadTestError::KeyBits { .. } | LoadTestError::ZeroPeriod)) => fail(exit::CONFIG_ERROR, e),
                Err(e) => fail(exit::PARTIAL_FAILURE, e),
            }
        }
        Command::Inbox => {
            let regid = prefs.get_string(mobsim::prefs::REG_ID, "");
            if regid.is_empty() {
                return fail(exit::CONFIG_ERROR, "no registration id stored; run `upload` first");
            }
            match client.inbox(&regid) {
                Ok(messages) => {
                    print_json(&messages);
                    ExitCode::SUCCESS
                }
                Err(e) => fail(exit::PARTIAL_FAILURE, e),
            }
        }
    }
}
