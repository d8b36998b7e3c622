//! Running a job under the wall-clock limit.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::time::Duration;

use crate::fail::{Failure, Kind};

const STACK_SIZE: usize = 256 << 20;

/// Runs `job` on its own thread. The job is expected to watch the
/// deadline itself; if it has not returned by `1.25 × timeout`, the
/// interrupt flag is raised, and after a short grace period the run is
/// reported as timed out regardless.
pub fn limited<T: Send + 'static>(
    timeout: Option<Duration>,
    interrupt: Arc<AtomicBool>,
    job: impl FnOnce() -> Result<T, Failure> + Send + 'static,
) -> Result<T, Failure> {
    let (tx, rx) = mpsc::channel();
    std::thread::Builder::new()
        .stack_size(STACK_SIZE)
        .spawn(move || {
            let _ = tx.send(job());
        })
        .map_err(|e| Failure::new(Kind::Internal, format!("cannot start worker: {e}")))?;
    let Some(t) = timeout else {
        return rx
            .recv()
            .map_err(|_| Failure::new(Kind::Internal, "worker panicked"))?;
    };
    let lost = || Failure::new(Kind::Internal, "worker panicked");
    match rx.recv_timeout(t.mul_f64(1.25)) {
        Ok(r) => return r,
        Err(mpsc::RecvTimeoutError::Disconnected) => return Err(lost()),
        Err(mpsc::RecvTimeoutError::Timeout) => interrupt.store(true, Ordering::Relaxed),
    }
    match rx.recv_timeout(t.mul_f64(0.2)) {
        Ok(r) => r,
        Err(mpsc::RecvTimeoutError::Disconnected) => Err(lost()),
        Err(mpsc::RecvTimeoutError::Timeout) => Err(Failure::new(
            Kind::Timeout,
            format!("time limit of {:.3}s reached", t.as_secs_f64()),
        )),
    }
}
