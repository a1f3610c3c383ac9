//! Cellular bottleneck link: per-destination FIFO queues drained by
//! trace-scheduled delivery opportunities, with DropTail or CoDel queue
//! management and optional Bernoulli loss applied at dequeue.
//!
//! Flows destined to the same queue share it (that is what makes fairness
//! experiments work); distinct queues are isolated but compete for the same
//! delivery opportunities round-robin, the way one base station schedules
//! several receivers. CoDel follows the RFC 8289 control law with per-queue
//! state.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::rng::SeededRng;
use crate::time::SimTime;

/// One packet copy traversing the link.
#[derive(Clone, Copy, Debug)]
pub struct Packet {
    pub flow: u32,
    pub seq: u64,
    /// Global transmission id (each retransmission is a new copy).
    pub tx: u64,
    pub size_bytes: u32,
    /// When the sender emitted this copy.
    pub sent_at: SimTime,
    /// When the copy entered the bottleneck queue.
    pub enqueued_at: SimTime,
}

/// Bottleneck buffer size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueueCap {
    Packets(u32),
    Unlimited,
}

/// Queue management discipline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Aqm {
    DropTail,
    Codel { target: SimTime, interval: SimTime },
}

/// CoDel defaults: 5 ms target, 100 ms interval.
pub const CODEL_DEFAULT_TARGET: SimTime = SimTime::from_millis(5);
pub const CODEL_DEFAULT_INTERVAL: SimTime = SimTime::from_millis(100);

/// Per-queue CoDel controller state.
#[derive(Clone, Copy, Debug)]
pub struct CodelState {
    target: SimTime,
    interval: SimTime,
    /// Deadline by which the sojourn must come back under target before
    /// dropping starts. None while the sojourn is below target.
    first_above_time: Option<SimTime>,
    /// Next scheduled drop while in the dropping state.
    drop_next: SimTime,
    /// Drop-rate index; the spacing to the next drop is interval/sqrt(count).
    count: u32,
    dropping: bool,
}

impl CodelState {
    pub fn new(target: SimTime, interval: SimTime) -> Self {
        CodelState {
            target,
            interval,
            first_above_time: None,
            drop_next: SimTime::ZERO,
            count: 0,
            dropping: false,
        }
    }

    pub fn dropping(&self) -> bool {
        self.dropping
    }
}

/// Verdict for the packet at the head of a queue.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodelVerdict {
    Keep,
    Drop,
}

/// One CoDel head-of-queue decision. `sojourn` is how long the head packet
/// has queued; `now` is the dequeue attempt time.
///
/// Control law: the first sojourn above target arms a deadline one interval
/// out; staying above target past it enters the dropping state, whose first
/// drop fires immediately and subsequent drops come interval/sqrt(count)
/// apart with count incrementing on each (so the second follows the first
/// by interval/sqrt(2), then interval/sqrt(3), ...). A sojourn below target
/// leaves the dropping state. Re-entering soon after leaving resumes with
/// count softened by two rather than starting over, per the RFC 8289
/// re-entry rule.
pub fn codel_decide(st: &mut CodelState, sojourn: SimTime, now: SimTime) -> CodelVerdict {
    if sojourn < st.target {
        st.first_above_time = None;
        st.dropping = false;
        return CodelVerdict::Keep;
    }
    if st.dropping {
        if now >= st.drop_next {
            st.count += 1;
            st.drop_next += interval_div_sqrt(st.interval, st.count);
            return CodelVerdict::Drop;
        }
        return CodelVerdict::Keep;
    }
    match st.first_above_time {
        None => {
            st.first_above_time = Some(now + st.interval);
            CodelVerdict::Keep
        }
        Some(deadline) if now >= deadline => {
            st.dropping = true;
            let recent = now.saturating_sub(st.drop_next)
                < SimTime::from_micros(16 * st.interval.as_micros());
            let resume = if st.count > 2 && recent { st.count - 2 } else { 1 };
            // This entry drop is number `resume`; the next comes
            // interval/sqrt(resume+1) later.
            st.count = resume + 1;
            st.drop_next = now + interval_div_sqrt(st.interval, st.count);
            CodelVerdict::Drop
        }
        Some(_) => CodelVerdict::Keep,
    }
}

fn interval_div_sqrt(interval: SimTime, k: u32) -> SimTime {
    let us = interval.as_micros() as f64 / libm::sqrt(k as f64);
    SimTime::from_micros(libm::round(us) as u64)
}

/// What a delivery opportunity did.
#[derive(Clone, Copy, Debug)]
pub enum OpportunityOutcome {
    /// No queue had a packet; the opportunity is wasted.
    Idle,
    /// Packet left the link toward the receiver.
    Forwarded(Packet),
    /// Packet used the opportunity but a Bernoulli draw discarded it
    /// (stochastic channel loss, not a congestion drop).
    Lost(Packet),
}

struct UeQueue {
    fifo: VecDeque<Packet>,
    codel: CodelState,
}

/// The shared bottleneck.
pub struct BottleneckLink {
    queues: Vec<UeQueue>,
    cap: QueueCap,
    use_codel: bool,
    rr_next: usize,
}

/// Result of offering a packet to the bottleneck buffer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnqueueResult {
    Queued,
    /// Buffer full: congestion drop at the tail.
    TailDropped,
}

impl BottleneckLink {
    pub fn new(num_queues: usize, cap: QueueCap, aqm: Aqm) -> Self {
        assert!(num_queues > 0, "link needs at least one queue");
        let (use_codel, codel) = match aqm {
            Aqm::DropTail => (false, CodelState::new(CODEL_DEFAULT_TARGET, CODEL_DEFAULT_INTERVAL)),
            Aqm::Codel { target, interval } => (true, CodelState::new(target, interval)),
        };
        let queues = (0..num_queues)
            .map(|_| UeQueue {
                fifo: VecDeque::new(),
                codel,
            })
            .collect();
        BottleneckLink {
            queues,
            cap,
            use_codel,
            rr_next: 0,
        }
    }

    pub fn num_queues(&self) -> usize {
        self.queues.len()
    }

    pub fn queue_len(&self, queue: usize) -> usize {
        self.queues[queue].fifo.len()
    }

    pub fn total_queued(&self) -> usize {
        self.queues.iter().map(|q| q.fifo.len()).sum()
    }

    /// Offers a packet to its destination queue.
    pub fn enqueue(&mut self, queue: usize, pkt: Packet) -> EnqueueResult {
        debug_assert!(pkt.enqueued_at >= pkt.sent_at);
        let q = &mut self.queues[queue];
        if let QueueCap::Packets(cap) = self.cap {
            if q.fifo.len() >= cap as usize {
                return EnqueueResult::TailDropped;
            }
        }
        q.fifo.push_back(pkt);
        EnqueueResult::Queued
    }

    /// Serves one trace delivery opportunity at `now`. Queues are visited
    /// round-robin so the opportunity is never wasted while any queue holds
    /// a deliverable packet. CoDel may discard head packets (appended to
    /// `aqm_drops`) before one is forwarded; a Bernoulli draw with
    /// probability `loss_prob` may then lose the forwarded packet in
    /// flight, consuming the opportunity.
    pub fn on_opportunity(
        &mut self,
        now: SimTime,
        loss_prob: f64,
        rng: &mut SeededRng,
        aqm_drops: &mut Vec<Packet>,
    ) -> OpportunityOutcome {
        let n = self.queues.len();
        for offset in 0..n {
            let qi = (self.rr_next + offset) % n;
            let q = &mut self.queues[qi];
            while let Some(&head) = q.fifo.front() {
                if self.use_codel {
                    let sojourn = now.saturating_sub(head.enqueued_at);
                    if codel_decide(&mut q.codel, sojourn, now) == CodelVerdict::Drop {
                        q.fifo.pop_front();
                        aqm_drops.push(head);
                        continue;
                    }
                }
                let pkt = q.fifo.pop_front().unwrap();
                self.rr_next = (qi + 1) % n;
                if loss_prob > 0.0 && rng.bernoulli(loss_prob) {
                    return OpportunityOutcome::Lost(pkt);
                }
                return OpportunityOutcome::Forwarded(pkt);
            }
        }
        OpportunityOutcome::Idle
    }
}
