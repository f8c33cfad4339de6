//! Worker pool shared by the exhaustive sweeps.
//!
//! `TNUMLAB_THREADS` caps the number of workers; unset or unparsable means one
//! worker per available core.

use std::sync::OnceLock;

use rayon::{ThreadPool, ThreadPoolBuilder};

pub const THREADS_ENV: &str = "TNUMLAB_THREADS";

pub fn pool() -> &'static ThreadPool {
    static POOL: OnceLock<ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .unwrap_or(0);
        ThreadPoolBuilder::new()
            .num_threads(threads)
            .thread_name(|i| format!("tnumlab-{i}"))
            .build()
            .expect("failed to build worker pool")
    })
}

pub fn worker_count() -> usize {
    pool().current_num_threads()
}
