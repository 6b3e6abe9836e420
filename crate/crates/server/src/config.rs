use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

pub const DEFAULT_COPS_BASE_URL: &str = "https://cops.uibk.ac.at";
pub const DEFAULT_COPS_PATH_TEMPLATE: &str = "/files/{number}.trs";

/// Largest accepted problem text, inline or uploaded.
pub const MAX_PROBLEM_BYTES: usize = 256 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Retention {
    pub max_jobs: usize,
    pub max_age: Duration,
}

impl Default for Retention {
    fn default() -> Self {
        Retention { max_jobs: 500, max_age: Duration::from_secs(24 * 60 * 60) }
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub config_root: PathBuf,
    pub bin_root: PathBuf,
    pub scratch_dir: PathBuf,
    pub cops_base_url: String,
    /// Path appended to the base URL; `{number}` is replaced by the problem number.
    pub cops_path_template: String,
    pub max_soft_timeout: u64,
    /// Reloads are refused while this is unset.
    pub reload_secret: Option<String>,
    pub listen_addr: SocketAddr,
    pub static_dir: Option<PathBuf>,
    pub retention: Retention,
    pub output_cap: usize,
}

impl ServiceConfig {
    pub fn new(config_root: impl Into<PathBuf>, bin_root: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            config_root: config_root.into(),
            bin_root: bin_root.into(),
            scratch_dir: std::env::temp_dir().join("cocoweb"),
            cops_base_url: DEFAULT_COPS_BASE_URL.to_string(),
            cops_path_template: DEFAULT_COPS_PATH_TEMPLATE.to_string(),
            max_soft_timeout: cocoweb_core::TimeoutPolicy::default().soft_s,
            reload_secret: None,
            listen_addr: SocketAddr::from(([127, 0, 0, 1], 8080)),
            static_dir: None,
            retention: Retention::default(),
            output_cap: cocoweb_core::engine::DEFAULT_OUTPUT_CAP,
        }
    }
}
