//! Minimal trainer worker for tests and demos.
//!
//! Each learner follows `f(n) = n / (n + K)` with training accuracy
//! `min(1, f(n) + 0.05)` and reports `n * 1e-4` seconds of training.
//!
//! ```text
//! daub-stub-worker --learner fast=50 --learner slow=400 [--fail-above 1000]
//! ```

use std::io::{self, BufRead, Write};
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use daub_core::learners::protocol::{
    decode_request, encode, ErrorCode, Request, Response, PROTOCOL_VERSION,
};

#[derive(Debug, Parser)]
#[command(
    name = "daub-stub-worker",
    about = "Protocol-speaking stand-in for a trainer worker"
)]
struct Args {
    /// `NAME=K`; repeat for more learners.
    #[arg(long = "learner", value_parser = parse_learner, required = true)]
    learners: Vec<(String, f64)>,
    /// Exit without replying to any request with n above this.
    #[arg(long)]
    crash_above: Option<u64>,
    /// Reply `train_failed` for n above this.
    #[arg(long)]
    fail_above: Option<u64>,
    /// Never reply for n above this.
    #[arg(long)]
    hang_above: Option<u64>,
    /// Reply with a line that is not JSON for n above this.
    #[arg(long)]
    garbage_above: Option<u64>,
    /// Only these learners fail, crash, hang or send garbage (default: all).
    #[arg(long = "faulty")]
    faulty: Vec<String>,
    /// Protocol version to announce.
    #[arg(long = "protocol-version", default_value_t = PROTOCOL_VERSION)]
    protocol_version: u32,
    /// Leave the seed out of results.
    #[arg(long)]
    no_echo: bool,
    /// Echo this seed instead of the request's.
    #[arg(long)]
    wrong_seed: bool,
}

fn parse_learner(s: &str) -> Result<(String, f64), String> {
    let (name, k) = s.split_once('=').ok_or("expected NAME=K")?;
    let k: f64 = k.parse().map_err(|e| format!("K: {e}"))?;
    if !(k.is_finite() && k >= 0.0) {
        return Err("K must be a non-negative number".into());
    }
    Ok((name.to_string(), k))
}

fn above(limit: Option<u64>, n: u64) -> bool {
    limit.is_some_and(|l| n > l)
}

fn send_line<W: Write>(out: &mut W, line: &str) -> io::Result<()> {
    writeln!(out, "{line}")?;
    out.flush()
}

fn main() -> ExitCode {
    let args = Args::parse();
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let reply = match decode_request(&line) {
            Err(e) => Response::Error {
                code: ErrorCode::BadRequest,
                message: e.to_string(),
            },
            Ok(Request::Shutdown) => return ExitCode::SUCCESS,
            Ok(Request::Hello { .. }) => Response::Hello {
                version: args.protocol_version,
                learners: args.learners.iter().map(|(n, _)| n.clone()).collect(),
            },
            Ok(Request::TrainEval { learner, n, seed }) => {
                match args.learners.iter().find(|(name, _)| *name == learner) {
                    None => Response::Error {
                        code: ErrorCode::BadRequest,
                        message: format!("unknown learner `{learner}`"),
                    },
                    Some(&(_, k)) => {
                        let faulty = args.faulty.is_empty() || args.faulty.contains(&learner);
                        if faulty && above(args.crash_above, n) {
                            return ExitCode::from(101);
                        }
                        if faulty && above(args.hang_above, n) {
                            loop {
                                std::thread::sleep(Duration::from_secs(3600));
                            }
                        }
                        if faulty && above(args.garbage_above, n) {
                            if send_line(&mut out, "this is not json").is_err() {
                                break;
                            }
                            continue;
                        }
                        if faulty && above(args.fail_above, n) {
                            Response::Error {
                                code: ErrorCode::TrainFailed,
                                message: format!("{learner} ran out of memory at n = {n}"),
                            }
                        } else {
                            let f = n as f64 / (n as f64 + k);
                            Response::Result {
                                learner,
                                n,
                                train_acc: (f + 0.05).min(1.0),
                                val_acc: f,
                                cost_seconds: n as f64 * 1e-4,
                                seed: match (args.no_echo, args.wrong_seed) {
                                    (true, _) => None,
                                    (false, true) => Some(seed.wrapping_add(1)),
                                    (false, false) => Some(seed),
                                },
                            }
                        }
                    }
                }
            }
        };
        if send_line(&mut out, &encode(&reply)).is_err() {
            break;
        }
    }
    ExitCode::SUCCESS
}
