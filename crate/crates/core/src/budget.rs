use core::fmt;

/// Limits on long-running solves.
///
/// The core crate has no clock, so wall-clock limits are expressed through a
/// caller-supplied `should_stop` predicate that is polled between iterations.
#[derive(Clone, Copy, Default)]
pub struct Budget<'a> {
    max_iterations: Option<usize>,
    should_stop: Option<&'a dyn Fn() -> bool>,
}

impl<'a> Budget<'a> {
    pub fn unlimited() -> Self {
        Budget::default()
    }

    pub fn with_max_iterations(mut self, iterations: usize) -> Self {
        self.max_iterations = Some(iterations);
        self
    }

    pub fn with_stop(mut self, should_stop: &'a dyn Fn() -> bool) -> Self {
        self.should_stop = Some(should_stop);
        self
    }

    pub fn max_iterations(&self) -> Option<usize> {
        self.max_iterations
    }

    pub(crate) fn stop_predicate(&self) -> Option<&'a dyn Fn() -> bool> {
        self.should_stop
    }

    /// True when the external stop predicate fired.
    pub fn interrupted(&self) -> bool {
        self.should_stop.map(|f| f()).unwrap_or(false)
    }

    /// True when `done` iterations exhaust the budget or the predicate fired.
    pub fn exhausted(&self, done: usize) -> bool {
        self.max_iterations.map(|m| done >= m).unwrap_or(false) || self.interrupted()
    }
}

impl fmt::Debug for Budget<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Budget")
            .field("max_iterations", &self.max_iterations)
            .field("has_stop", &self.should_stop.is_some())
            .finish()
    }
}
