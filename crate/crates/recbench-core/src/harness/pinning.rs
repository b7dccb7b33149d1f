//! Best-effort CPU core pinning for co-located instance workers.

use serde::Serialize;

/// What actually happened with core affinity during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PinningOutcome {
    /// Pinning was not requested.
    None,
    /// Every instance worker was pinned to its own core.
    Core,
    /// Pinning was requested but the platform refused affinity control;
    /// the run proceeded with floating threads.
    Unavailable,
}

impl PinningOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            PinningOutcome::None => "none",
            PinningOutcome::Core => "core",
            PinningOutcome::Unavailable => "unavailable",
        }
    }
}

pub fn available_cores() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Pins the calling thread to one core. Returns an error when the platform
/// refuses; callers treat that as "pinning unavailable" and keep running.
#[cfg(target_os = "linux")]
pub fn pin_current_thread(core: usize) -> std::io::Result<()> {
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_ZERO(&mut set);
        libc::CPU_SET(core, &mut set);
        // pid 0 = calling thread
        if libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set) != 0 {
            return Err(std::io::Error::last_os_error());
        }
    }
    Ok(())
}

#[cfg(not(target_os = "linux"))]
pub fn pin_current_thread(_core: usize) -> std::io::Result<()> {
    Err(std::io::Error::new(
        std::io::ErrorKind::Unsupported,
        "core pinning is only implemented for linux",
    ))
}
