//! Discrete-event engine.
//!
//! A monotonic clock plus a priority queue of pending events. Ties on the
//! fire time dispatch in FIFO scheduling order (a monotone sequence number
//! breaks them), which pins the event order, and with it every downstream
//! result, for a given scenario and seed.

use alloc::collections::BinaryHeap;
use core::cmp::{Ordering, Reverse};

use crate::time::SimTime;

struct Scheduled<E> {
    fire_at: SimTime,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Scheduled<E> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_at == other.fire_at && self.seq == other.seq
    }
}
impl<E> Eq for Scheduled<E> {}
impl<E> PartialOrd for Scheduled<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<E> Ord for Scheduled<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.fire_at, self.seq).cmp(&(other.fire_at, other.seq))
    }
}

/// Event queue with a built-in clock. `E` is the caller's event type.
pub struct EventQueue<E> {
    now: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Reverse<Scheduled<E>>>,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        EventQueue {
            now: SimTime::ZERO,
            next_seq: 0,
            heap: BinaryHeap::new(),
        }
    }

    /// Current simulation time. Never moves backwards.
    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Queues `event` to fire at `fire_at`. Scheduling into the past is a
    /// programming error, not a recoverable condition, so it panics.
    pub fn schedule(&mut self, fire_at: SimTime, event: E) {
        assert!(
            fire_at >= self.now,
            "event scheduled in the past: fire_at {:?} < now {:?}",
            fire_at,
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Scheduled { fire_at, seq, event }));
    }

    /// Queues `event` to fire `delay` after the current time.
    pub fn schedule_in(&mut self, delay: SimTime, event: E) {
        self.schedule(self.now + delay, event);
    }

    /// Pops the earliest event if it fires at or before `bound`, advancing
    /// the clock to its fire time.
    pub fn pop_due(&mut self, bound: SimTime) -> Option<(SimTime, E)> {
        match self.heap.peek() {
            Some(Reverse(s)) if s.fire_at <= bound => {
                let Reverse(s) = self.heap.pop().unwrap();
                debug_assert!(s.fire_at >= self.now, "clock would move backwards");
                self.now = s.fire_at;
                Some((s.fire_at, s.event))
            }
            _ => None,
        }
    }

    /// Dispatches every event with fire_at <= t_end through `handler` in
    /// nondecreasing time order (FIFO among ties), including events the
    /// handler schedules inside the window. Afterwards the clock sits at
    /// t_end. Returns the number dispatched.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> u64
    where
        F: FnMut(&mut Self, E),
    {
        assert!(t_end >= self.now, "run_until target is in the past");
        let mut dispatched = 0;
        while let Some((_, event)) = self.pop_due(t_end) {
            handler(self, event);
            dispatched += 1;
        }
        self.now = t_end;
        dispatched
    }
}
