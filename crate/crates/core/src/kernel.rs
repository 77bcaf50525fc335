//! Deterministic discrete-event scheduler.
//!
//! Events are ordered by `(fire_time, sequence_no)`; the sequence number is
//! assigned at insertion so same-time events run first-in first-out.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::io::Write;

use crate::domain::{SimTime, DEFAULT_MAX_EVENTS};

#[derive(Debug, thiserror::Error)]
pub enum KernelError {
    #[error("invalid delay {0} s: must be finite and non-negative")]
    InvalidDelay(f64),
    #[error("event at {at} is before the current clock {now}")]
    InThePast { at: SimTime, now: SimTime },
    #[error("clock overflow")]
    ClockOverflow,
    #[error("event watchdog exceeded: more than {0} events executed")]
    Watchdog(u64),
    #[error("trace write failed: {0}")]
    Trace(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

struct Entry<P> {
    fire_time: SimTime,
    seq: u64,
    payload: P,
}

impl<P> PartialEq for Entry<P> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_time == other.fire_time && self.seq == other.seq
    }
}

impl<P> Eq for Entry<P> {}

impl<P> PartialOrd for Entry<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Entry<P> {
    // Reversed so the max-heap pops the smallest key.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_time
            .cmp(&self.fire_time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunStats {
    pub final_clock: SimTime,
    pub executed: u64,
}

pub struct EventQueue<P> {
    heap: BinaryHeap<Entry<P>>,
    cancelled: HashSet<u64>,
    clock: SimTime,
    next_seq: u64,
    executed: u64,
    max_events: u64,
    trace: Option<Box<dyn Write + Send>>,
}

impl<P> Default for EventQueue<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> fmt::Debug for EventQueue<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventQueue")
            .field("clock", &self.clock)
            .field("pending", &self.heap.len())
            .field("executed", &self.executed)
            .field("max_events", &self.max_events)
            .finish()
    }
}

impl<P> EventQueue<P> {
    pub fn new() -> Self {
        Self::with_max_events(DEFAULT_MAX_EVENTS)
    }

    pub fn with_max_events(max_events: u64) -> Self {
        Self {
            heap: BinaryHeap::new(),
            cancelled: HashSet::new(),
            clock: SimTime::ZERO,
            next_seq: 0,
            executed: 0,
            max_events,
            trace: None,
        }
    }

    /// Writes one `time_ps<TAB>payload` line per executed event.
    pub fn set_trace(&mut self, sink: Box<dyn Write + Send>) {
        self.trace = Some(sink);
    }

    pub fn now(&self) -> SimTime {
        self.clock
    }

    pub fn pending(&self) -> usize {
        self.heap.len() - self.cancelled.len()
    }

    pub fn executed(&self) -> u64 {
        self.executed
    }

    /// Schedules `payload` at `now + round(delay_s)`.
    pub fn schedule(&mut self, delay_s: f64, payload: P) -> Result<EventHandle, KernelError> {
        let delay = SimTime::from_secs(delay_s).ok_or(KernelError::InvalidDelay(delay_s))?;
        let at = self.clock.checked_add(delay).ok_or(KernelError::ClockOverflow)?;
        self.schedule_at(at, payload)
    }

    pub fn schedule_at(&mut self, at: SimTime, payload: P) -> Result<EventHandle, KernelError> {
        if at < self.clock {
            return Err(KernelError::InThePast { at, now: self.clock });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry {
            fire_time: at,
            seq,
            payload,
        });
        Ok(EventHandle(seq))
    }

    /// Cancels a pending event. Returns false if it already ran or was
    /// cancelled.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        if !self.heap.iter().any(|e| e.seq == handle.0) {
            return false;
        }
        self.cancelled.insert(handle.0)
    }

    fn pop(&mut self) -> Option<Entry<P>> {
        while let Some(entry) = self.heap.pop() {
            if self.cancelled.remove(&entry.seq) {
                continue;
            }
            return Some(entry);
        }
        None
    }
}

impl<P: fmt::Debug> EventQueue<P> {
    /// Executes events until the queue is empty, including events the
    /// handler schedules along the way.
    pub fn run_until_idle<E, F>(&mut self, mut handler: F) -> Result<RunStats, E>
    where
        E: From<KernelError>,
        F: FnMut(&mut Self, P) -> Result<(), E>,
    {
        let start = self.executed;
        while let Some(entry) = self.pop() {
            if self.executed - start >= self.max_events {
                return Err(KernelError::Watchdog(self.max_events).into());
            }
            debug_assert!(entry.fire_time >= self.clock);
            self.clock = entry.fire_time;
            self.executed += 1;
            if let Some(sink) = self.trace.as_mut() {
                writeln!(sink, "{}\t{:?}", entry.fire_time.as_ps(), entry.payload)
                    .map_err(KernelError::from)?;
            }
            handler(self, entry.payload)?;
        }
        if let Some(sink) = self.trace.as_mut() {
            sink.flush().map_err(KernelError::from)?;
        }
        Ok(RunStats {
            final_clock: self.clock,
            executed: self.executed - start,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::{Arc, Mutex};

    type Log = Vec<(u64, &'static str)>;

    fn run_logged(q: &mut EventQueue<&'static str>) -> (RunStats, Log) {
        let mut log = Vec::new();
        let stats = q
            .run_until_idle(|q, p| {
                log.push((q.now().as_ps(), p));
                Ok::<_, KernelError>(())
            })
            .unwrap();
        (stats, log)
    }

    #[test]
    fn empty_queue_is_identity() {
        let mut q = EventQueue::<&str>::new();
        let (stats, log) = run_logged(&mut q);
        assert_eq!(stats.final_clock, SimTime::ZERO);
        assert_eq!(stats.executed, 0);
        assert!(log.is_empty());
    }

    #[test]
    fn delay_is_converted_to_picoseconds() {
        let mut q = EventQueue::new();
        q.schedule(1e-4, "x").unwrap();
        let (stats, _) = run_logged(&mut q);
        assert_eq!(stats.final_clock.as_ps(), 100_000_000);
    }

    #[test]
    fn same_time_events_are_fifo() {
        let mut q = EventQueue::new();
        q.schedule(0.0, "a").unwrap();
        q.schedule(0.0, "b").unwrap();
        let (_, log) = run_logged(&mut q);
        assert_eq!(log, vec![(0, "a"), (0, "b")]);
    }

    #[test]
    fn zero_delay_runs_after_queued_same_time_events() {
        let mut q = EventQueue::new();
        q.schedule(1.0, "first").unwrap();
        q.schedule(1.0, "second").unwrap();
        let mut order = Vec::new();
        q.run_until_idle(|q, p| {
            order.push(p);
            if p == "first" {
                q.schedule(0.0, "spawned").unwrap();
            }
            Ok::<_, KernelError>(())
        })
        .unwrap();
        assert_eq!(order, vec!["first", "second", "spawned"]);
    }

    #[test]
    fn negative_delay_is_an_error() {
        let mut q = EventQueue::new();
        assert!(matches!(q.schedule(-1e-9, ()), Err(KernelError::InvalidDelay(_))));
        assert!(matches!(q.schedule(f64::NAN, ()), Err(KernelError::InvalidDelay(_))));
    }

    #[test]
    fn self_rescheduling_chain() {
        let mut q = EventQueue::new();
        q.schedule(1.0, 1u32).unwrap();
        let stats = q
            .run_until_idle(|q, step| {
                if step < 3 {
                    q.schedule(1.0, step + 1)?;
                }
                Ok::<_, KernelError>(())
            })
            .unwrap();
        assert_eq!(stats.final_clock.as_secs(), 3.0);
        assert_eq!(stats.executed, 3);
    }

    #[test]
    fn watchdog_stops_runaway_loops() {
        let mut q = EventQueue::with_max_events(10);
        q.schedule(0.0, ()).unwrap();
        let err = q
            .run_until_idle(|q, ()| {
                q.schedule(1e-9, ())?;
                Ok::<_, KernelError>(())
            })
            .unwrap_err();
        assert!(matches!(err, KernelError::Watchdog(10)));
        assert_eq!(q.executed(), 10);
    }

    #[test]
    fn cancelled_events_do_not_run() {
        let mut q = EventQueue::new();
        q.schedule(1.0, "keep").unwrap();
        let h = q.schedule(0.5, "drop").unwrap();
        assert!(q.cancel(h));
        assert!(!q.cancel(h));
        assert_eq!(q.pending(), 1);
        let (_, log) = run_logged(&mut q);
        assert_eq!(log, vec![(1_000_000_000_000, "keep")]);
    }

    #[test]
    fn scheduling_in_the_past_is_rejected() {
        let mut q = EventQueue::new();
        q.schedule(1.0, 0).unwrap();
        q.run_until_idle(|q, _| {
            let err = q.schedule_at(SimTime::ZERO, 1).unwrap_err();
            assert!(matches!(err, KernelError::InThePast { .. }));
            Ok::<_, KernelError>(())
        })
        .unwrap();
    }

    #[derive(Clone, Default)]
    struct Shared(Arc<Mutex<Vec<u8>>>);

    impl Write for Shared {
        fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
            self.0.lock().unwrap().extend_from_slice(buf);
            Ok(buf.len())
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }

    #[test]
    fn trace_lists_time_and_tag() {
        let sink = Shared::default();
        let mut q = EventQueue::new();
        q.set_trace(Box::new(sink.clone()));
        q.schedule(1e-9, "Ping").unwrap();
        q.schedule(2e-9, "Pong").unwrap();
        run_logged(&mut q);
        let text = String::from_utf8(sink.0.lock().unwrap().clone()).unwrap();
        assert_eq!(text, "1000\t\"Ping\"\n2000\t\"Pong\"\n");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn trace(delays: &[(u32, u8)]) -> Vec<(u64, usize)> {
            let mut q = EventQueue::new();
            for (i, (d, _)) in delays.iter().enumerate() {
                q.schedule(f64::from(*d) * 1e-9, (i, 0u8)).unwrap();
            }
            let mut out = Vec::new();
            q.run_until_idle(|q, (i, depth)| {
                out.push((q.now().as_ps(), i));
                let spawn = delays[i].1 % 3;
                if depth < 2 && spawn > 0 {
                    q.schedule(f64::from(spawn) * 1e-9, (i, depth + 1))?;
                }
                Ok::<_, KernelError>(())
            })
            .unwrap();
            out
        }

        proptest! {
            #[test]
            fn clock_is_monotone_and_runs_are_deterministic(
                delays in proptest::collection::vec((0u32..50, any::<u8>()), 0..40)
            ) {
                let a = trace(&delays);
                let b = trace(&delays);
                prop_assert_eq!(&a, &b);
                prop_assert!(a.windows(2).all(|w| w[0].0 <= w[1].0));
            }
        }
    }
}
