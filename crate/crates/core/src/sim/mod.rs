//! Closed-loop harness: scenarios, schedules, metrics, sweeps and CSV output.

mod closed_loop;
pub mod metrics;
pub mod output;
mod pareto;
pub mod scenario;

pub use closed_loop::{run_closed_loop, single_step_costs, SimulationResult};
pub use pareto::{pareto_sweep, ParetoPoint, SweepMode};
pub use scenario::{build_large_scale, build_small_scale, builtin, Protocol, Scenario, Strategy};

/// Runs `f` on a pool of `jobs` threads (0 = one per zone, capped at the core count).
#[cfg(feature = "parallel")]
pub fn with_jobs<T: Send>(jobs: usize, n_zones: usize, f: impl FnOnce() -> T + Send) -> T {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let threads = if jobs == 0 { n_zones.clamp(1, cores) } else { jobs };
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
