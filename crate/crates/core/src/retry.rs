use std::thread;
use std::time::Duration;

/// Fixed-attempt retry with doubling backoff between attempts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { attempts: 3, base_delay: Duration::from_millis(250) }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        Self { attempts: 1, base_delay: Duration::ZERO }
    }

    /// Delay slept after the failed attempt `attempt` (zero-based).
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base_delay.saturating_mul(1 << attempt.min(16))
    }
}

pub(crate) enum Failure<E> {
    Retry(E),
    Fatal(E),
}

pub(crate) fn retry<T, E>(policy: &RetryPolicy, mut op: impl FnMut() -> Result<T, Failure<E>>) -> Result<T, E> {
    let attempts = policy.attempts.max(1);
    let mut attempt = 0;
    loop {
        match op() {
            Ok(value) => return Ok(value),
            Err(Failure::Fatal(err)) => return Err(err),
            Err(Failure::Retry(err)) => {
                attempt += 1;
                if attempt >= attempts {
                    return Err(err);
                }
                let delay = policy.delay(attempt - 1);
                log::debug!("attempt {attempt}/{attempts} failed, retrying in {delay:?}");
                thread::sleep(delay);
            }
        }
    }
}
