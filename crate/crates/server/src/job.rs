use std::time::{SystemTime, UNIX_EPOCH};

use cocoweb_core::{FormatCategory, Problem, RunResult, TimeoutPolicy};
use serde::{Deserialize, Serialize};

/// Where a submitted problem came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ProblemSource {
    Inline { text: String },
    Upload { filename: String, text: String },
    Database { number: u64 },
}

/// The problem source without the text, as reported back to clients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SourceSummary {
    Inline,
    Upload { filename: String },
    Database { number: u64 },
}

impl From<&ProblemSource> for SourceSummary {
    fn from(s: &ProblemSource) -> Self {
        match s {
            ProblemSource::Inline { .. } => SourceSummary::Inline,
            ProblemSource::Upload { filename, .. } => SourceSummary::Upload { filename: filename.clone() },
            ProblemSource::Database { number } => SourceSummary::Database { number: *number },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum JobState {
    Queued,
    Running { current_tool: usize },
    Done,
}

#[derive(Debug, Clone)]
pub struct Job {
    pub id: String,
    pub source: SourceSummary,
    pub problem_text: String,
    pub resolved_problem: Option<Problem>,
    pub category: FormatCategory,
    pub selected_tools: Vec<String>,
    pub policy: TimeoutPolicy,
    pub state: JobState,
    pub results: Vec<RunResult>,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
}

impl Job {
    pub fn new(
        source: SourceSummary,
        problem_text: String,
        selected_tools: Vec<String>,
        policy: TimeoutPolicy,
    ) -> Self {
        let category = cocoweb_core::infer_category(&problem_text);
        let resolved_problem = cocoweb_core::parse_problem(&problem_text).ok();
        Job {
            id: new_job_id(),
            source,
            problem_text,
            resolved_problem,
            category,
            selected_tools,
            policy,
            state: JobState::Queued,
            results: Vec::new(),
            created_at: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0),
        }
    }

    pub fn view(&self) -> JobView {
        JobView {
            id: self.id.clone(),
            problem_source: self.source.clone(),
            category: self.category,
            selected_tools: self.selected_tools.clone(),
            timeout_policy: self.policy,
            state: self.state,
            results: self.results.clone(),
            created_at: self.created_at,
        }
    }
}

/// 128 random bits, hex encoded.
fn new_job_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

/// What `GET /api/jobs/{id}` returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobView {
    pub id: String,
    pub problem_source: SourceSummary,
    pub category: FormatCategory,
    pub selected_tools: Vec<String>,
    pub timeout_policy: TimeoutPolicy,
    pub state: JobState,
    pub results: Vec<RunResult>,
    pub created_at: u64,
}
