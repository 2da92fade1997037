//! Supervised worker processes and outcome classification.

use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, ExitStatus, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use catfuzz_core::learner::OutcomeKind;
use catfuzz_core::lattice::CategoryId;
use catfuzz_core::Value;
use serde::{Deserialize, Serialize};

use crate::protocol::{encode_line, Request, RequestBody, Response, ResponseBody, SETUP_ERROR};

pub const DEFAULT_TIMEOUT_MS: u64 = 5000;
/// Invalid-outcome messages are cut to this many characters.
pub const MESSAGE_PREFIX: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestArg {
    pub parameter: usize,
    pub value: Value,
    pub category: CategoryId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub case_id: u64,
    pub function: String,
    pub args: Vec<TestArg>,
    pub timeout_ms: u64,
}

impl TestCase {
    pub fn values(&self) -> Vec<Value> {
        self.args.iter().map(|a| a.value.clone()).collect()
    }
}

/// Outcome of one test case. `class` is the exception class for invalid
/// outcomes and the termination signal or exit code for crashes; `message`
/// is the exception message prefix or the worker's last stderr line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub kind: OutcomeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl Outcome {
    pub fn valid() -> Self {
        Outcome {
            kind: OutcomeKind::Valid,
            class: None,
            message: None,
        }
    }

    fn with(kind: OutcomeKind, class: impl Into<String>, message: Option<String>) -> Self {
        Outcome {
            kind,
            class: Some(class.into()),
            message,
        }
    }

    /// Crash detail class used for grouping: signal or exit code plus the
    /// top frame text when the worker left one.
    pub fn crash_class(&self) -> String {
        match (&self.class, &self.message) {
            (Some(c), Some(m)) => format!("{c} {m}"),
            (Some(c), None) => c.clone(),
            (None, _) => String::from("unknown"),
        }
    }
}

fn prefix(s: &str) -> String {
    s.chars().take(MESSAGE_PREFIX).collect()
}

/// How a worker ended, independent of the platform's status type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExitInfo {
    pub signal: Option<i32>,
    pub code: Option<i32>,
}

impl From<ExitStatus> for ExitInfo {
    fn from(status: ExitStatus) -> Self {
        #[cfg(unix)]
        let signal = std::os::unix::process::ExitStatusExt::signal(&status);
        #[cfg(not(unix))]
        let signal = None;
        ExitInfo {
            signal,
            code: status.code(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExitClass {
    /// The in-flight case crashed; carries the detail class.
    Crash(String),
    /// Clean exit without an answer: the case is discarded.
    ProtocolDesync,
    /// The response already classified the case.
    NoChange,
}

pub fn signal_name(signal: i32) -> String {
    let name = match signal {
        1 => "SIGHUP",
        2 => "SIGINT",
        3 => "SIGQUIT",
        4 => "SIGILL",
        5 => "SIGTRAP",
        6 => "SIGABRT",
        7 => "SIGBUS",
        8 => "SIGFPE",
        9 => "SIGKILL",
        11 => "SIGSEGV",
        13 => "SIGPIPE",
        15 => "SIGTERM",
        _ => return format!("signal {signal}"),
    };
    name.to_string()
}

pub fn classify_worker_exit(exit: ExitInfo, responded: bool) -> ExitClass {
    if responded {
        return ExitClass::NoChange;
    }
    match (exit.signal, exit.code) {
        (Some(sig), _) => ExitClass::Crash(signal_name(sig)),
        (None, Some(0)) => ExitClass::ProtocolDesync,
        (None, Some(code)) => ExitClass::Crash(format!("exit {code}")),
        (None, None) => ExitClass::Crash(String::from("unknown termination")),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerCommand {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl WorkerCommand {
    /// Whitespace-separated command line.
    pub fn parse(line: &str) -> Option<Self> {
        let mut parts = line.split_whitespace().map(String::from);
        let program = PathBuf::from(parts.next()?);
        Some(WorkerCommand {
            program,
            args: parts.collect(),
        })
    }

    /// The built-in synthetic suite served by `program worker`.
    pub fn synthetic(program: impl Into<PathBuf>) -> Self {
        WorkerCommand {
            program: program.into(),
            args: vec![String::from("worker")],
        }
    }

    pub fn display(&self) -> String {
        let mut s = self.program.display().to_string();
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        s
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error("cannot start worker `{command}`: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },
    #[error("protocol desync: {0}")]
    Desync(String),
    #[error("cannot encode argument: {0}")]
    Encode(#[from] catfuzz_core::Error),
}

/// What came back for one request.
#[derive(Debug)]
pub enum Reply {
    Response(ResponseBody),
    Exited { exit: ExitInfo, stderr_tail: Option<String> },
    TimedOut,
    Garbled(String),
}

/// One live worker process.
pub struct Worker {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    stderr: Option<JoinHandle<Option<String>>>,
    next_id: u64,
}

impl Worker {
    pub fn spawn(command: &WorkerCommand) -> Result<Self, ExecError> {
        let spawn_err = |source| ExecError::Spawn {
            command: command.display(),
            source,
        };
        let mut child = Command::new(&command.program)
            .args(&command.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(spawn_err)?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let stderr = child.stderr.take().expect("piped stderr");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let stderr = thread::spawn(move || {
            let mut last = None;
            for line in BufReader::new(stderr).lines() {
                match line {
                    Ok(l) if !l.trim().is_empty() => last = Some(l.trim().to_string()),
                    Ok(_) => {}
                    Err(_) => break,
                }
            }
            last
        });
        Ok(Worker {
            child,
            stdin,
            lines,
            stderr: Some(stderr),
            next_id: 0,
        })
    }

    fn finish(&mut self) -> Reply {
        let exit = match self.child.wait() {
            Ok(status) => ExitInfo::from(status),
            Err(_) => ExitInfo { signal: None, code: None },
        };
        let stderr_tail = self.stderr.take().and_then(|h| h.join().ok()).flatten();
        Reply::Exited { exit, stderr_tail }
    }

    /// Sends one request and waits for its response.
    pub fn call(&mut self, body: RequestBody, timeout: Duration) -> Reply {
        let id = self.next_id;
        self.next_id += 1;
        let line = encode_line(&Request { id, body });
        if self.stdin.write_all(line.as_bytes()).and_then(|_| self.stdin.flush()).is_err() {
            return self.finish();
        }
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(text)) => match serde_json::from_str::<Response>(&text) {
                Ok(r) if r.id == id => Reply::Response(r.body),
                Ok(r) => Reply::Garbled(format!("response id {} for request {id}", r.id)),
                Err(e) => Reply::Garbled(format!("unparsable response: {e}")),
            },
            Ok(Err(_)) | Err(RecvTimeoutError::Disconnected) => self.finish(),
            Err(RecvTimeoutError::Timeout) => {
                self.kill();
                Reply::TimedOut
            }
        }
    }

    pub fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        self.kill();
    }
}

/// Result of running one case.
#[derive(Clone, Debug, PartialEq)]
pub struct Execution {
    /// `None` when the case was discarded after a protocol desync.
    pub outcome: Option<Outcome>,
    pub incident: Option<String>,
    pub wall_ms: u64,
    pub restarted: bool,
}

/// A worker slot that restarts its process after every crash, timeout or
/// desync.
pub struct WorkerSlot {
    command: WorkerCommand,
    worker: Option<Worker>,
}

impl WorkerSlot {
    pub fn new(command: WorkerCommand) -> Self {
        WorkerSlot { command, worker: None }
    }

    fn worker(&mut self) -> Result<&mut Worker, ExecError> {
        if self.worker.is_none() {
            self.worker = Some(Worker::spawn(&self.command)?);
        }
        Ok(self.worker.as_mut().expect("just spawned"))
    }

    pub fn call(&mut self, body: RequestBody, timeout: Duration) -> Result<Reply, ExecError> {
        let reply = self.worker()?.call(body, timeout);
        if !matches!(reply, Reply::Response(_)) {
            self.worker = None;
        }
        Ok(reply)
    }

    pub fn run_case(&mut self, tc: &TestCase) -> Result<Execution, ExecError> {
        let args = tc
            .args
            .iter()
            .map(|a| a.value.to_json())
            .collect::<Result<Vec<_>, _>>()?;
        let body = RequestBody::Invoke {
            function: tc.function.clone(),
            args,
        };
        let start = Instant::now();
        let reply = self.call(body, Duration::from_millis(tc.timeout_ms))?;
        let wall_ms = start.elapsed().as_millis() as u64;
        let restarted = !matches!(reply, Reply::Response(_));
        let (outcome, incident) = outcome_of(reply);
        Ok(Execution {
            outcome,
            incident,
            wall_ms,
            restarted,
        })
    }
}

/// Maps a reply to an outcome, or to an incident when the case must be
/// discarded.
pub fn outcome_of(reply: Reply) -> (Option<Outcome>, Option<String>) {
    match reply {
        Reply::Response(ResponseBody::Ok) => (Some(Outcome::valid()), None),
        Reply::Response(ResponseBody::Exception { class, message }) => {
            let kind = if class == SETUP_ERROR {
                OutcomeKind::SetupError
            } else {
                OutcomeKind::Invalid
            };
            (Some(Outcome::with(kind, class, Some(prefix(&message)))), None)
        }
        Reply::Response(other) => (None, Some(format!("unexpected response {other:?}"))),
        Reply::Exited { exit, stderr_tail } => match classify_worker_exit(exit, false) {
            ExitClass::Crash(class) => (Some(Outcome::with(OutcomeKind::Crash, class, stderr_tail)), None),
            ExitClass::ProtocolDesync | ExitClass::NoChange => {
                (None, Some(String::from("worker exited cleanly without a response")))
            }
        },
        Reply::TimedOut => (Some(Outcome::with(OutcomeKind::Timeout, "timeout", None)), None),
        Reply::Garbled(why) => (None, Some(why)),
    }
}

/// Asks a worker for its function list.
pub fn list_functions(command: &WorkerCommand) -> Result<(Vec<String>, Option<Vec<usize>>), ExecError> {
    let mut slot = WorkerSlot::new(command.clone());
    match slot.call(RequestBody::ListFunctions, Duration::from_millis(DEFAULT_TIMEOUT_MS))? {
        Reply::Response(ResponseBody::Functions { names, arities }) => Ok((names, arities)),
        other => Err(ExecError::Desync(format!("list_functions answered with {other:?}"))),
    }
}

/// A fixed pool of worker slots. `run_batch` spreads cases over the slots
/// and returns executions in input order.
pub struct Executor {
    slots: Vec<WorkerSlot>,
}

impl Executor {
    pub fn new(command: WorkerCommand, workers: usize) -> Self {
        Executor {
            slots: (0..workers.max(1)).map(|_| WorkerSlot::new(command.clone())).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.slots.len()
    }

    pub fn run_batch(&mut self, cases: &[TestCase]) -> Result<Vec<Execution>, ExecError> {
        let n = self.slots.len();
        if n == 1 || cases.len() <= 1 {
            let slot = &mut self.slots[0];
            return cases.iter().map(|tc| slot.run_case(tc)).collect();
        }
        let mut results: Vec<Option<Result<Execution, ExecError>>> = (0..cases.len()).map(|_| None).collect();
        thread::scope(|scope| {
            let handles: Vec<_> = self
                .slots
                .iter_mut()
                .enumerate()
                .map(|(j, slot)| {
                    scope.spawn(move || {
                        (j..cases.len())
                            .step_by(n)
                            .map(|i| (i, slot.run_case(&cases[i])))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("worker slot thread panicked") {
                    results[i] = Some(r);
                }
            }
        });
        results.into_iter().map(|r| r.expect("every case ran")).collect()
    }
}
