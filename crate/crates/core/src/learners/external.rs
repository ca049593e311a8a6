use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, ExitStatus, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use super::protocol::{self, ErrorCode, Request, Response, PROTOCOL_VERSION};
use super::{Capabilities, Learner};
use crate::error::LearnerError;
use crate::model::CurveSample;

/// Client side of one trainer worker process.
///
/// Requests are strictly sequential: one line out, one line back. A
/// timeout, crash or closed pipe kills the worker and every later request
/// fails immediately.
pub struct WorkerClient {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    learners: Vec<String>,
    timeout: Duration,
    dead: Option<String>,
}

impl std::fmt::Debug for WorkerClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WorkerClient")
            .field("pid", &self.child.id())
            .field("learners", &self.learners)
            .field("dead", &self.dead)
            .finish()
    }
}

impl WorkerClient {
    /// Spawn `command[0]` with the remaining elements as arguments and
    /// complete the hello handshake.
    pub fn spawn(command: &[String], timeout: Duration) -> Result<Self, LearnerError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| LearnerError::Rejected("empty worker command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| LearnerError::Failed(format!("cannot spawn {program}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout was piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let mut line = String::new();
                match reader.read_line(&mut line) {
                    Ok(0) => break,
                    Ok(_) => {
                        if tx.send(Ok(line)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });
        let mut client = Self {
            child,
            stdin,
            lines: rx,
            learners: Vec::new(),
            timeout,
            dead: None,
        };
        match client.request(&Request::Hello {
            version: PROTOCOL_VERSION,
        })? {
            Response::Hello { version, learners } if version == PROTOCOL_VERSION => {
                client.learners = learners;
                Ok(client)
            }
            Response::Hello { version, .. } => {
                client.kill(format!(
                    "protocol version mismatch: worker speaks {version}"
                ));
                Err(LearnerError::Protocol(format!(
                    "worker protocol version {version}, expected {PROTOCOL_VERSION}"
                )))
            }
            other => {
                client.kill("bad handshake".into());
                Err(LearnerError::Protocol(format!(
                    "expected hello, got {other:?}"
                )))
            }
        }
    }

    /// Learner names announced in the handshake.
    pub fn learners(&self) -> &[String] {
        &self.learners
    }

    pub fn is_alive(&self) -> bool {
        self.dead.is_none()
    }

    fn kill(&mut self, reason: String) {
        let _ = self.child.kill();
        let _ = self.child.wait();
        self.stdin = None;
        self.dead = Some(reason);
    }

    fn request(&mut self, req: &Request) -> Result<Response, LearnerError> {
        if let Some(reason) = &self.dead {
            return Err(LearnerError::Failed(format!(
                "worker not running: {reason}"
            )));
        }
        let line = protocol::encode(req);
        let write = self.stdin.as_mut().map(|stdin| {
            stdin
                .write_all(line.as_bytes())
                .and_then(|_| stdin.write_all(b"\n"))
                .and_then(|_| stdin.flush())
        });
        if let Some(Err(e)) = write {
            let status = self.reap();
            self.kill(format!("write failed: {e}"));
            return Err(LearnerError::Failed(format!(
                "worker pipe closed ({e}); {status}"
            )));
        }
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => protocol::decode_response(&reply)
                .map_err(|e| LearnerError::Protocol(format!("{e}: {}", reply.trim_end()))),
            Ok(Err(e)) => {
                self.kill(format!("read failed: {e}"));
                Err(LearnerError::Failed(format!("reading from worker: {e}")))
            }
            Err(RecvTimeoutError::Timeout) => {
                let msg = format!("worker timed out after {:?}", self.timeout);
                self.kill(msg.clone());
                Err(LearnerError::Failed(msg))
            }
            Err(RecvTimeoutError::Disconnected) => {
                let status = self.reap();
                self.kill(status.clone());
                Err(LearnerError::Failed(status))
            }
        }
    }

    /// Describe how the child ended, waiting briefly for it to exit.
    fn reap(&mut self) -> String {
        let deadline = Instant::now() + Duration::from_secs(2);
        loop {
            match self.child.try_wait() {
                Ok(Some(status)) => return format!("worker exited with {status}"),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                _ => return "worker closed its output".into(),
            }
        }
    }

    pub fn train_eval(
        &mut self,
        learner: &str,
        n: u64,
        seed: u64,
    ) -> Result<CurveSample, LearnerError> {
        let resp = self.request(&Request::TrainEval {
            learner: learner.to_string(),
            n,
            seed,
        })?;
        match resp {
            Response::Result {
                learner: got_learner,
                n: got_n,
                train_acc,
                val_acc,
                cost_seconds,
                seed: echoed,
            } => {
                if got_learner != learner || got_n != n {
                    return Err(LearnerError::Protocol(format!(
                        "asked for ({learner}, {n}), got ({got_learner}, {got_n})"
                    )));
                }
                if echoed.is_some_and(|s| s != seed) {
                    return Err(LearnerError::Protocol(format!(
                        "seed echo mismatch: sent {seed}, got {echoed:?}"
                    )));
                }
                Ok(CurveSample::new(n, train_acc, val_acc, cost_seconds)?)
            }
            Response::Error {
                code: ErrorCode::TrainFailed,
                message,
            } => Err(LearnerError::Failed(message)),
            Response::Error {
                code: ErrorCode::BadRequest,
                message,
            } => Err(LearnerError::Rejected(message)),
            Response::Hello { .. } => Err(LearnerError::Protocol(
                "unexpected hello in reply to train_eval".into(),
            )),
        }
    }

    /// Ask the worker to exit and wait for it.
    pub fn shutdown(&mut self) -> Result<ExitStatus, LearnerError> {
        if self.dead.is_none() {
            if let Some(mut stdin) = self.stdin.take() {
                let line = protocol::encode(&Request::Shutdown);
                let _ = writeln!(stdin, "{line}").and_then(|_| stdin.flush());
            }
        }
        self.stdin = None;
        let deadline = Instant::now() + self.timeout;
        loop {
            match self.child.try_wait() {
                Ok(Some(status)) => {
                    self.dead.get_or_insert_with(|| "shut down".into());
                    return Ok(status);
                }
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                Ok(None) => {
                    self.kill("did not exit after shutdown".into());
                    return Err(LearnerError::Failed("worker ignored shutdown".into()));
                }
                Err(e) => return Err(LearnerError::Failed(e.to_string())),
            }
        }
    }

    /// Wrap the worker as learners, one per requested name.
    pub fn into_learners(self, names: &[String]) -> Result<Vec<ExternalLearner>, LearnerError> {
        for name in names {
            if !self.learners.contains(name) {
                return Err(LearnerError::Rejected(format!(
                    "worker does not offer learner `{name}` (has {:?})",
                    self.learners
                )));
            }
        }
        let shared = Arc::new(Mutex::new(self));
        Ok(names
            .iter()
            .map(|name| ExternalLearner {
                name: name.clone(),
                worker: Arc::clone(&shared),
            })
            .collect())
    }
}

impl Drop for WorkerClient {
    fn drop(&mut self) {
        if matches!(self.child.try_wait(), Ok(None)) {
            let _ = self.shutdown();
        }
    }
}

/// One learner served by a shared [`WorkerClient`]. Cost is the worker's
/// reported training time in seconds.
#[derive(Debug, Clone)]
pub struct ExternalLearner {
    name: String,
    worker: Arc<Mutex<WorkerClient>>,
}

impl ExternalLearner {
    pub fn worker(&self) -> &Arc<Mutex<WorkerClient>> {
        &self.worker
    }
}

impl Learner for ExternalLearner {
    fn name(&self) -> &str {
        &self.name
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities::default()
    }

    fn train_eval(&mut self, n: u64, seed: u64) -> Result<CurveSample, LearnerError> {
        let mut worker = self
            .worker
            .lock()
            .map_err(|_| LearnerError::Failed("worker lock poisoned".into()))?;
        worker.train_eval(&self.name, n, seed)
    }
}
