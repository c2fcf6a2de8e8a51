//! Per-thread circuit-execution tally and statevector norm audit.
//!
//! Every full variational circuit run (encode, ansatz, readout) bumps the
//! counter of the calling thread. Training is single-threaded per run, so the
//! tally of a run is exact and deterministic.

use std::cell::Cell;

thread_local! {
    static EXECUTIONS: Cell<u64> = const { Cell::new(0) };
    static AUDIT_ENABLED: Cell<bool> = const { Cell::new(false) };
    static AUDIT_MAX_DEVIATION: Cell<f64> = const { Cell::new(0.0) };
    static AUDIT_STATES: Cell<u64> = const { Cell::new(0) };
}

/// Circuit executions recorded on this thread so far.
pub fn executions() -> u64 {
    EXECUTIONS.with(Cell::get)
}

pub(crate) fn record_execution() {
    EXECUTIONS.with(|c| c.set(c.get() + 1));
}

/// Counts circuit executions between construction and [`CircuitTally::count`].
#[derive(Debug)]
pub struct CircuitTally {
    start: u64,
}

impl CircuitTally {
    pub fn start() -> Self {
        CircuitTally {
            start: executions(),
        }
    }

    pub fn count(&self) -> u64 {
        executions() - self.start
    }
}

/// Result of a norm audit: the largest `|Σ|amp|² - 1|` seen across every
/// state produced while the audit was active.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormAudit {
    pub states_checked: u64,
    pub max_deviation: f64,
}

/// Runs `f` with the norm audit enabled on this thread.
pub fn with_norm_audit<T>(f: impl FnOnce() -> T) -> (T, NormAudit) {
    let was_enabled = AUDIT_ENABLED.with(|a| a.replace(true));
    let prev_dev = AUDIT_MAX_DEVIATION.with(|d| d.replace(0.0));
    let prev_states = AUDIT_STATES.with(|s| s.replace(0));
    let out = f();
    let audit = NormAudit {
        states_checked: AUDIT_STATES.with(|s| s.replace(prev_states)),
        max_deviation: AUDIT_MAX_DEVIATION.with(|d| d.replace(prev_dev)),
    };
    AUDIT_ENABLED.with(|a| a.set(was_enabled));
    (out, audit)
}

pub(crate) fn audit_enabled() -> bool {
    AUDIT_ENABLED.with(Cell::get)
}

pub(crate) fn audit_norm(norm_sqr: f64) {
    let dev = (norm_sqr - 1.0).abs();
    AUDIT_STATES.with(|s| s.set(s.get() + 1));
    AUDIT_MAX_DEVIATION.with(|d| {
        // NaN must poison the audit rather than vanish in max().
        if dev.is_nan() || dev > d.get() {
            d.set(if dev.is_nan() { f64::INFINITY } else { dev });
        }
    });
}
