//! Job storage.

use std::collections::{HashMap, VecDeque};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use parking_lot::RwLock;

use crate::config::Retention;
use crate::job::{Job, JobView};

/// Jobs are read and written whole; readers never observe a partial update.
pub trait JobStore: Send + Sync {
    fn insert(&self, job: Job);
    fn view(&self, id: &str) -> Option<JobView>;
    /// Applies `f` to the job atomically. Returns false if the job is gone.
    fn update(&self, id: &str, f: &mut dyn FnMut(&mut Job)) -> bool;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Default)]
struct Inner {
    jobs: HashMap<String, Job>,
    order: VecDeque<String>,
}

/// In-memory store keeping at most `max_jobs` jobs, none older than `max_age`.
pub struct MemoryJobStore {
    retention: Retention,
    inner: RwLock<Inner>,
}

impl MemoryJobStore {
    pub fn new(retention: Retention) -> Self {
        MemoryJobStore { retention, inner: RwLock::new(Inner::default()) }
    }

    fn evict(&self, inner: &mut Inner, now_ms: u64) {
        let max_age = self.retention.max_age.as_millis() as u64;
        while let Some(oldest) = inner.order.front() {
            let expired = inner.jobs.get(oldest).is_none_or(|j| now_ms.saturating_sub(j.created_at) > max_age);
            if !expired && inner.order.len() <= self.retention.max_jobs {
                break;
            }
            let id = inner.order.pop_front().unwrap();
            inner.jobs.remove(&id);
        }
    }
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or(Duration::ZERO).as_millis() as u64
}

impl JobStore for MemoryJobStore {
    fn insert(&self, job: Job) {
        let mut inner = self.inner.write();
        inner.order.push_back(job.id.clone());
        inner.jobs.insert(job.id.clone(), job);
        self.evict(&mut inner, now_ms());
    }

    fn view(&self, id: &str) -> Option<JobView> {
        self.inner.read().jobs.get(id).map(Job::view)
    }

    fn update(&self, id: &str, f: &mut dyn FnMut(&mut Job)) -> bool {
        match self.inner.write().jobs.get_mut(id) {
            Some(j) => {
                f(j);
                true
            }
            None => false,
        }
    }

    fn len(&self) -> usize {
        self.inner.read().jobs.len()
    }
}
