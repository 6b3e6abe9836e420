//! The single FIFO worker that executes every job's tools.

use std::sync::mpsc;
use std::sync::Arc;
use std::thread;

use cocoweb_core::engine::Progress;
use cocoweb_core::{Engine, TimeoutPolicy, ToolSpec};

use crate::job::JobState;
use crate::store::JobStore;

#[derive(Debug, Clone)]
pub struct WorkItem {
    pub job_id: String,
    pub tools: Vec<ToolSpec>,
    pub problem_text: String,
    pub policy: TimeoutPolicy,
}

/// Handle to the worker thread. Jobs run in submission order, one tool at a
/// time; results are published to the store as each tool finishes.
#[derive(Clone)]
pub struct Worker {
    tx: mpsc::Sender<WorkItem>,
}

impl Worker {
    pub fn spawn(engine: Engine, store: Arc<dyn JobStore>) -> Self {
        let (tx, rx) = mpsc::channel::<WorkItem>();
        thread::Builder::new()
            .name("cocoweb-worker".into())
            .spawn(move || {
                for item in rx {
                    run_item(&engine, store.as_ref(), item);
                }
            })
            .expect("spawning the worker thread");
        Worker { tx }
    }

    pub fn enqueue(&self, item: WorkItem) {
        // the worker only stops when every sender is gone
        let _ = self.tx.send(item);
    }
}

fn run_item(engine: &Engine, store: &dyn JobStore, item: WorkItem) {
    let id = item.job_id.as_str();
    if item.tools.is_empty() {
        store.update(id, &mut |j| j.state = JobState::Done);
        return;
    }
    tracing::info!(job = id, tools = item.tools.len(), "job started");
    engine.run_selection(&item.tools, &item.problem_text, &item.policy, &mut |p| match p {
        Progress::Started(i) => {
            store.update(id, &mut |j| j.state = JobState::Running { current_tool: i });
        }
        Progress::Finished(i, r) => {
            store.update(id, &mut |j| {
                j.results.push(r.clone());
                j.state = if j.results.len() >= j.selected_tools.len() {
                    JobState::Done
                } else {
                    JobState::Running { current_tool: i + 1 }
                };
            });
        }
    });
    tracing::info!(job = id, "job done");
}
