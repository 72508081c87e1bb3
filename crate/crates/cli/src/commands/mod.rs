use crate::args::Command;
use crate::error::{CliError, Result};

mod detect;
mod evaluate;
mod fit;
mod merge;
mod predict;
mod synth;

pub use detect::DetectionRecord;

pub fn dispatch(command: Command) -> Result<String> {
    match command {
        Command::Synth(a) => with_jobs(a.common.jobs, || synth::run(&a)),
        Command::Merge(a) => with_jobs(a.common.jobs, || merge::run(&a)),
        Command::Detect(a) => with_jobs(a.common.jobs, || detect::run(&a)),
        Command::Predict(a) => with_jobs(a.common.jobs, || predict::run(&a)),
        Command::Evaluate(a) => with_jobs(a.common.jobs, || evaluate::run(&a)),
        Command::Fit(a) => with_jobs(a.common.jobs, || fit::run(&a)),
    }
}

/// Runs `f` on a pool of `jobs` threads, or on the global pool.
fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        None => f(),
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))?
            .install(f),
    }
}
