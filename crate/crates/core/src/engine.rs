//! Running tools on problems.
//!
//! Every tool runs in its own process group under a [`TimeoutPolicy`]: the
//! soft limit is handed to the tool through `$TO`, SIGTERM goes to the group
//! at `term_s` and SIGKILL at `kill_s`. At most one tool process runs at a
//! time in this process, whatever the number of [`Engine`]s.

use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitStatus, Stdio};
use std::sync::{mpsc, Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::ToolSpec;

/// Default cap on captured output per tool.
pub const DEFAULT_OUTPUT_CAP: usize = 1 << 20;

/// Extra time allowed after `kill_s` for signal delivery and reaping.
pub const KILL_GRACE: Duration = Duration::from_secs(2);

const POLL_INTERVAL: Duration = Duration::from_millis(5);

static EXECUTION_LOCK: Mutex<()> = Mutex::new(());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeoutPolicy {
    pub soft_s: u64,
    pub term_s: u64,
    pub kill_s: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("timeouts must satisfy 0 < soft < term < kill, got ({soft_s}, {term_s}, {kill_s})")]
pub struct InvalidPolicy {
    pub soft_s: u64,
    pub term_s: u64,
    pub kill_s: u64,
}

impl TimeoutPolicy {
    pub fn new(soft_s: u64, term_s: u64, kill_s: u64) -> Result<Self, InvalidPolicy> {
        TimeoutPolicy { soft_s, term_s, kill_s }.validated()
    }

    pub fn validated(self) -> Result<Self, InvalidPolicy> {
        let TimeoutPolicy { soft_s, term_s, kill_s } = self;
        if 0 < soft_s && soft_s < term_s && term_s < kill_s {
            Ok(self)
        } else {
            Err(InvalidPolicy { soft_s, term_s, kill_s })
        }
    }

    pub fn term_after(&self) -> Duration {
        Duration::from_secs(self.term_s)
    }

    pub fn kill_after(&self) -> Duration {
        Duration::from_secs(self.kill_s)
    }
}

impl Default for TimeoutPolicy {
    fn default() -> Self {
        TimeoutPolicy { soft_s: 59, term_s: 61, kill_s: 63 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Answer {
    Yes,
    No,
    Maybe,
    Timeout,
    Error,
}

impl Answer {
    pub fn as_str(self) -> &'static str {
        match self {
            Answer::Yes => "YES",
            Answer::No => "NO",
            Answer::Maybe => "MAYBE",
            Answer::Timeout => "TIMEOUT",
            Answer::Error => "ERROR",
        }
    }

    /// YES and NO settle the question; everything else does not.
    pub fn is_definite(self) -> bool {
        matches!(self, Answer::Yes | Answer::No)
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TerminatedBy {
    Exit,
    TermSignal,
    KillSignal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub tool_id: String,
    pub answer: Answer,
    /// Merged stdout/stderr followed by the timing line.
    pub output: String,
    pub exit_code: Option<i32>,
    pub elapsed_s: f64,
    pub terminated_by: TerminatedBy,
}

/// `"\nTook 1.23 seconds\n"`.
pub fn timing_line(elapsed: Duration) -> String {
    format!("\nTook {:.2} seconds\n", elapsed.as_secs_f64())
}

/// First non-empty line decides: YES, NO or MAYBE, case-insensitively.
/// Anything else is an ERROR on a nonzero exit and MAYBE otherwise. Tools
/// stopped by a signal from us time out regardless of what they printed.
pub fn classify_answer(output: &str, terminated_by: TerminatedBy, exit_code: Option<i32>) -> Answer {
    if terminated_by != TerminatedBy::Exit {
        return Answer::Timeout;
    }
    let first = output.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    if first.eq_ignore_ascii_case("YES") {
        Answer::Yes
    } else if first.eq_ignore_ascii_case("NO") {
        Answer::No
    } else if first.eq_ignore_ascii_case("MAYBE") {
        Answer::Maybe
    } else if exit_code != Some(0) {
        Answer::Error
    } else {
        Answer::Maybe
    }
}

/// Replaces `$NAME` and `${NAME}` occurrences for which `lookup` returns a
/// value. Unknown variables are left as written.
pub(crate) fn substitute(template: &str, lookup: &mut dyn FnMut(&str) -> Option<String>) -> String {
    let is_name = |c: char| c.is_ascii_alphanumeric() || c == '_';
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(i) = rest.find('$') {
        out.push_str(&rest[..i]);
        let after = &rest[i + 1..];
        let (name, written_len) = if let Some(braced) = after.strip_prefix('{') {
            match braced.find('}') {
                Some(end) => (&braced[..end], end + 2),
                None => ("", 0),
            }
        } else {
            let end = after.find(|c: char| !is_name(c)).unwrap_or(after.len());
            (&after[..end], end)
        };
        match (name.is_empty(), lookup(name)) {
            (false, Some(v)) => out.push_str(&v),
            _ => out.push_str(&rest[i..i + 1 + written_len]),
        }
        rest = &after[written_len..];
    }
    out.push_str(rest);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandLine {
    pub program: String,
    pub args: Vec<String>,
    pub working_dir: PathBuf,
}

impl CommandLine {
    pub fn argv(&self) -> Vec<String> {
        std::iter::once(self.program.clone()).chain(self.args.iter().cloned()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpansionError {
    #[error("command template {0:?} expands to an empty program")]
    EmptyProgram(String),
}

/// Substitutes `$TO` and `$FILE` in the tool's template and splits the result
/// on whitespace. The command runs in `bin_root/tool_dir`.
pub fn expand_command(
    spec: &ToolSpec,
    policy: &TimeoutPolicy,
    problem_file: &Path,
    bin_root: &Path,
) -> Result<CommandLine, ExpansionError> {
    let file = problem_file.to_string_lossy();
    let expanded = substitute(&spec.command_template, &mut |name| match name {
        "TO" => Some(policy.soft_s.to_string()),
        "FILE" => Some(file.to_string()),
        _ => None,
    });
    let template_program = spec.command_template.split_whitespace().next().unwrap_or("");
    let mut tokens = expanded.split_whitespace().map(str::to_string);
    let program = match tokens.next() {
        Some(p) if !template_program.is_empty() && has_no_placeholder(template_program) => p,
        _ => return Err(ExpansionError::EmptyProgram(spec.command_template.clone())),
    };
    Ok(CommandLine { program, args: tokens.collect(), working_dir: bin_root.join(&spec.tool_dir) })
}

fn has_no_placeholder(token: &str) -> bool {
    !crate::registry::has_placeholder(token, "FILE") && !crate::registry::has_placeholder(token, "TO")
}

/// Observer callbacks for [`Engine::run_selection`].
#[derive(Debug)]
pub enum Progress<'a> {
    Started(usize),
    Finished(usize, &'a RunResult),
}

#[derive(Debug, Clone)]
pub struct Engine {
    bin_root: PathBuf,
    scratch_dir: PathBuf,
    output_cap: usize,
}

impl Engine {
    pub fn new(bin_root: impl Into<PathBuf>, scratch_dir: impl Into<PathBuf>) -> Self {
        Engine { bin_root: bin_root.into(), scratch_dir: scratch_dir.into(), output_cap: DEFAULT_OUTPUT_CAP }
    }

    pub fn with_output_cap(mut self, cap: usize) -> Self {
        self.output_cap = cap;
        self
    }

    pub fn bin_root(&self) -> &Path {
        &self.bin_root
    }

    pub fn scratch_dir(&self) -> &Path {
        &self.scratch_dir
    }

    /// Runs one tool on `source`. Never fails: problems starting the tool are
    /// reported as an ERROR result.
    pub fn run_tool(&self, spec: &ToolSpec, source: &str, policy: &TimeoutPolicy) -> RunResult {
        let _guard = EXECUTION_LOCK.lock().unwrap_or_else(|p| p.into_inner());
        match self.try_run(spec, source, policy) {
            Ok(r) => r,
            Err(e) => RunResult {
                tool_id: spec.id.clone(),
                answer: Answer::Error,
                output: format!("failed to run {}: {e}{}", spec.id, timing_line(Duration::ZERO)),
                exit_code: None,
                elapsed_s: 0.0,
                terminated_by: TerminatedBy::Exit,
            },
        }
    }

    /// Runs `specs` one after another; a tool starts only after the previous
    /// one has been reaped. `progress` sees each start and each result.
    pub fn run_selection(
        &self,
        specs: &[ToolSpec],
        source: &str,
        policy: &TimeoutPolicy,
        progress: &mut dyn FnMut(Progress<'_>),
    ) -> Vec<RunResult> {
        let mut results = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            progress(Progress::Started(i));
            let r = self.run_tool(spec, source, policy);
            progress(Progress::Finished(i, &r));
            results.push(r);
        }
        results
    }

    fn problem_file(&self, source: &str) -> io::Result<tempfile::NamedTempFile> {
        fs::create_dir_all(&self.scratch_dir)?;
        let dir = fs::canonicalize(&self.scratch_dir)?;
        let mut f = tempfile::Builder::new().prefix("problem-").suffix(".trs").tempfile_in(dir)?;
        f.write_all(source.as_bytes())?;
        f.flush()?;
        Ok(f)
    }

    fn try_run(&self, spec: &ToolSpec, source: &str, policy: &TimeoutPolicy) -> io::Result<RunResult> {
        let problem = self.problem_file(source)?;
        let cmd = expand_command(spec, policy, problem.path(), &self.bin_root)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
        let working_dir = fs::canonicalize(&cmd.working_dir).map_err(|e| {
            io::Error::new(e.kind(), format!("tool directory {}: {e}", cmd.working_dir.display()))
        })?;
        let program = if cmd.program.contains('/') && Path::new(&cmd.program).is_relative() {
            working_dir.join(&cmd.program)
        } else {
            PathBuf::from(&cmd.program)
        };

        let (mut reader, writer) = io::pipe()?;
        let mut command = Command::new(&program);
        command
            .args(&cmd.args)
            .current_dir(&working_dir)
            .stdin(Stdio::null())
            .stdout(writer.try_clone()?)
            .stderr(writer)
            .process_group(0);

        let start = Instant::now();
        let spawned = command.spawn();
        // the Command holds the pipe's write ends
        drop(command);
        let mut child = spawned.map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", program.display())))?;
        let pgid = child.id() as libc::pid_t;

        let captured = Arc::new(Mutex::new(Capture::new(self.output_cap)));
        let (done_tx, done_rx) = mpsc::channel();
        {
            let captured = Arc::clone(&captured);
            thread::spawn(move || {
                let mut buf = [0u8; 8192];
                loop {
                    match reader.read(&mut buf) {
                        Ok(0) => break,
                        Ok(n) => captured.lock().unwrap_or_else(|p| p.into_inner()).push(&buf[..n]),
                        Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                        Err(_) => break,
                    }
                }
                let _ = done_tx.send(());
            });
        }

        let (status, terminated_by) = supervise(&mut child, pgid, start, policy)?;
        let elapsed = start.elapsed();
        // stragglers left behind by wrapper scripts would keep the pipe open
        signal_group(pgid, libc::SIGKILL);
        let _ = done_rx.recv_timeout(KILL_GRACE);
        drop(problem);

        let mut output = captured.lock().unwrap_or_else(|p| p.into_inner()).text();
        let exit_code = status.code();
        let answer = classify_answer(&output, terminated_by, exit_code);
        if exit_code.is_none() {
            if let Some(sig) = status.signal() {
                if terminated_by == TerminatedBy::Exit {
                    output.push_str(&format!("\n[terminated by signal {sig}]"));
                }
            }
        }
        output.push_str(&timing_line(elapsed));
        Ok(RunResult {
            tool_id: spec.id.clone(),
            answer,
            output,
            exit_code,
            elapsed_s: elapsed.as_secs_f64(),
            terminated_by,
        })
    }
}

fn signal_group(pgid: libc::pid_t, signal: libc::c_int) {
    // SAFETY: killpg has no memory-safety preconditions; ESRCH is expected
    // once the group is gone.
    unsafe {
        libc::killpg(pgid, signal);
    }
}

/// Waits for the child, escalating to SIGTERM and SIGKILL at the policy's
/// deadlines (measured from `start`).
fn supervise(
    child: &mut std::process::Child,
    pgid: libc::pid_t,
    start: Instant,
    policy: &TimeoutPolicy,
) -> io::Result<(ExitStatus, TerminatedBy)> {
    let mut escalation = TerminatedBy::Exit;
    loop {
        if let Some(status) = child.try_wait()? {
            return Ok((status, escalation));
        }
        let now = start.elapsed();
        let next_deadline = match escalation {
            TerminatedBy::Exit if now >= policy.term_after() => {
                signal_group(pgid, libc::SIGTERM);
                escalation = TerminatedBy::TermSignal;
                continue;
            }
            TerminatedBy::TermSignal if now >= policy.kill_after() => {
                signal_group(pgid, libc::SIGKILL);
                escalation = TerminatedBy::KillSignal;
                return Ok((child.wait()?, escalation));
            }
            TerminatedBy::Exit => policy.term_after(),
            TerminatedBy::TermSignal => policy.kill_after(),
            TerminatedBy::KillSignal => unreachable!("returned after SIGKILL"),
        };
        thread::sleep(POLL_INTERVAL.min(next_deadline.saturating_sub(now)).max(Duration::from_millis(1)));
    }
}

struct Capture {
    bytes: Vec<u8>,
    cap: usize,
    dropped: usize,
}

impl Capture {
    fn new(cap: usize) -> Self {
        Capture { bytes: Vec::new(), cap, dropped: 0 }
    }

    fn push(&mut self, chunk: &[u8]) {
        let room = self.cap.saturating_sub(self.bytes.len());
        let keep = room.min(chunk.len());
        self.bytes.extend_from_slice(&chunk[..keep]);
        self.dropped += chunk.len() - keep;
    }

    fn text(&self) -> String {
        let mut s = String::from_utf8_lossy(&self.bytes).into_owned();
        if self.dropped > 0 {
            if !s.ends_with('\n') {
                s.push('\n');
            }
            s.push_str(&format!("[output truncated: {} further bytes discarded]", self.dropped));
        }
        s
    }
}
