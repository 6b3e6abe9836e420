//! Throwaway tool installations for tests.
//!
//! A [`MockEnv`] is a temporary directory holding a config root, a binary
//! root with a set of shell-script mock tools, and a scratch directory. Every
//! mock takes the problem file as its last argument.

use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};

use tempfile::TempDir;

pub mod problems;

/// Directory under the binary root holding the generic mocks.
pub const MOCK_DIR: &str = "mocks";

/// The Saigawa config exactly as the original portal ships it.
pub const SAIGAWA_CONF: &str =
    "        TOOLDIR=\"Saigawa-2012/bin\"\n        TOOL=\"./starexec_run_saigawa -t $TO $FILE\"\n";

const MOCKS: &[(&str, &str)] = &[
    ("echo-yes", "echo YES\necho 'proof: trivially confluent'\n"),
    ("echo-no", "echo NO\n"),
    ("echo-maybe", "echo MAYBE\n"),
    ("echo-mixed-case", "echo\necho '  Yes'\n"),
    ("echo-args", "echo YES\necho \"args: $*\"\n"),
    ("echo-stderr", "echo YES\necho 'warning on stderr' >&2\n"),
    ("garbage-exit", "echo segfault\nexit 139\n"),
    ("sleeper-ignore-term", "trap '' TERM\nsleep 1000\n"),
    ("sleeper-exit-on-term", "sleep 1000\n"),
    // sleeper <seconds> <file>
    ("sleeper", "sleep \"$1\"\necho YES\n"),
    // timestamp-logger <log> <seconds> <file>
    (
        "timestamp-logger",
        "echo \"start $$ $(date +%s.%N)\" >> \"$1\"\nsleep \"$2\"\necho \"end $$ $(date +%s.%N)\" >> \"$1\"\necho YES\n",
    ),
    // signal-logger <log> <file>: logs SIGTERM arrival and keeps running
    (
        "signal-logger",
        "trap 'echo \"TERM $(date +%s.%N)\" >> \"$1\"' TERM\necho \"start $(date +%s.%N)\" >> \"$1\"\nwhile :; do sleep 0.05; done\n",
    ),
    // copy-input <dest> <file>
    ("copy-input", "cat \"$2\" > \"$1\"\necho YES\n"),
    ("flood", "head -c 3000000 /dev/zero | tr '\\0' a\necho\n"),
    ("leaves-child", "sleep 1000 &\necho YES\n"),
];

pub fn write_script(path: &Path, body: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, format!("#!/bin/sh\n{body}")).unwrap();
    fs::set_permissions(path, fs::Permissions::from_mode(0o755)).unwrap();
}

pub struct MockEnv {
    dir: TempDir,
}

impl MockEnv {
    /// Binary root with all mocks installed, an empty config root and an
    /// empty scratch directory.
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let env = MockEnv { dir };
        fs::create_dir_all(env.config_root()).unwrap();
        fs::create_dir_all(env.scratch_dir()).unwrap();
        for (name, body) in MOCKS {
            write_script(&env.bin_root().join(MOCK_DIR).join(name), body);
        }
        write_script(
            &env.bin_root().join("Saigawa-2012/bin/starexec_run_saigawa"),
            "echo YES\necho \"saigawa $*\"\n",
        );
        env
    }

    /// Like [`MockEnv::new`] with the Saigawa tool registered as 2012/trs/saigawa.
    pub fn with_saigawa() -> Self {
        let env = Self::new();
        env.add_config("2012", "trs", "saigawa", SAIGAWA_CONF);
        env
    }

    pub fn root(&self) -> &Path {
        self.dir.path()
    }

    pub fn config_root(&self) -> PathBuf {
        self.root().join("config")
    }

    pub fn bin_root(&self) -> PathBuf {
        self.root().join("bin")
    }

    pub fn scratch_dir(&self) -> PathBuf {
        self.root().join("scratch")
    }

    /// Path for tool-written logs, outside every scanned directory.
    pub fn log_path(&self, name: &str) -> PathBuf {
        self.root().join(name)
    }

    pub fn add_config(&self, year: &str, group: &str, name: &str, contents: &str) -> String {
        let path = self.config_root().join(year).join(group).join(format!("{name}.conf"));
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, contents).unwrap();
        format!("{year}/{group}/{name}")
    }

    /// Registers a mock under `year/group/name`, invoked as
    /// `./<mock> <args> $FILE`. Returns the tool id.
    pub fn add_mock(&self, year: &str, group: &str, name: &str, mock: &str, args: &str) -> String {
        let tool = if args.is_empty() {
            format!("./{mock} $FILE")
        } else {
            format!("./{mock} {args} $FILE")
        };
        self.add_config(year, group, name, &format!("TOOLDIR=\"{MOCK_DIR}\"\nTOOL=\"{tool}\"\n"))
    }

    /// Temporary problem files left in the scratch directory.
    pub fn scratch_files(&self) -> Vec<PathBuf> {
        match fs::read_dir(self.scratch_dir()) {
            Ok(rd) => rd.filter_map(|e| e.ok().map(|e| e.path())).collect(),
            Err(_) => Vec::new(),
        }
    }
}

impl Default for MockEnv {
    fn default() -> Self {
        Self::new()
    }
}

/// Parses `start|end <pid> <unix time>` lines written by `timestamp-logger`
/// into per-pid (start, end) intervals, in start order.
pub fn read_intervals(log: &Path) -> Vec<(f64, f64)> {
    let text = fs::read_to_string(log).unwrap_or_default();
    let mut starts = std::collections::HashMap::new();
    let mut out = Vec::new();
    for line in text.lines() {
        let parts: Vec<_> = line.split_whitespace().collect();
        if let [kind, pid, t] = parts[..] {
            let t: f64 = t.parse().unwrap();
            match kind {
                "start" => {
                    starts.insert(pid.to_string(), t);
                }
                "end" => {
                    let s = starts.remove(pid).expect("end without start");
                    out.push((s, t));
                }
                _ => {}
            }
        }
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// True if no two intervals overlap.
pub fn pairwise_disjoint(intervals: &[(f64, f64)]) -> bool {
    let mut v = intervals.to_vec();
    v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    v.windows(2).all(|w| w[0].1 <= w[1].0)
}
