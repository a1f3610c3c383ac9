//! The run loop: flow drivers (send window, retransmission, RTO) wired to
//! the bottleneck link over a discrete-event queue.
//!
//! Each flow is a greedy sender with unlimited data. Every transmission,
//! retransmissions included, is a distinct copy with a global `tx` id; the
//! receiver acks each arriving copy individually, so RTT samples are exact
//! and never suffer retransmission ambiguity. A copy is declared lost once
//! acks for three later copies of the same flow have arrived (the usual
//! dup-ack reordering threshold), or when the retransmission timer fires.
//!
//! Every run is a pure function of its [`ScenarioSpec`]: event ties break
//! FIFO, randomness comes from one seeded generator, and a digest over the
//! semantic event log lets callers assert replay equality cheaply.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

use crate::c2tcp::C2tcp;
use crate::cca::{AckSample, CongestionController, Cubic, CwndState, NewReno, Vegas, MIN_CWND};
use crate::engine::EventQueue;
use crate::link::{BottleneckLink, EnqueueResult, OpportunityOutcome, Packet, QueueCap};
use crate::metrics::{flow_metrics, jain_index, FlowMetrics, PacketFate, PacketRecord};
use crate::rng::SeededRng;
use crate::scenario::{AlgorithmSpec, OverlayBase, ScenarioError, ScenarioSpec};
use crate::time::SimTime;

/// Acks for this many later copies mark an older copy lost.
const REORDER_THRESHOLD: u8 = 3;

/// Retransmission timers back off exponentially but never beyond this.
const MAX_RTO: SimTime = SimTime::from_secs(60);

/// FNV-1a over the semantic event log. Two runs of the same scenario and
/// seed produce the same value bit for bit.
#[derive(Clone, Copy, Debug)]
struct EventDigest(u64);

impl EventDigest {
    fn new() -> Self {
        EventDigest(0xcbf2_9ce4_8422_2325)
    }

    fn write_u8(&mut self, b: u8) {
        self.0 = (self.0 ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
    }

    fn write_u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.write_u8(b);
        }
    }

    fn value(&self) -> u64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug)]
enum Ev {
    FlowStart { flow: u32 },
    Opportunity,
    Arrival { tx: u64 },
    Ack { tx: u64 },
    Rto { flow: u32 },
}

/// One in-flight copy, keyed by tx id in `FlowRuntime::outstanding`.
struct OutCopy {
    seq: u64,
    /// Acks seen for later copies of this flow.
    skip: u8,
}

/// Per-sequence bookkeeping while any copy is unresolved.
struct SeqState {
    acked: bool,
    /// Copies sent and not yet acked or written off.
    live: u32,
    /// Already queued for retransmission (avoid duplicates in `retx`).
    queued_retx: bool,
}

struct FlowRuntime {
    queue: usize,
    ctrl: Box<dyn CongestionController>,
    w: CwndState,
    started: bool,
    next_seq: u64,
    outstanding: BTreeMap<u64, OutCopy>,
    seqs: BTreeMap<u64, SeqState>,
    retx: VecDeque<u64>,
    /// Copies with tx below this belong to an already-penalized loss epoch;
    /// their losses trigger no further window reduction.
    recovery_end_tx: u64,
    rto_deadline: Option<SimTime>,
    /// A timer event is in the heap. At most one per flow; if the deadline
    /// moves the stale event re-aims itself when it fires.
    rto_event_live: bool,
    rto_backoff: u32,
    // Conservation counters: sent == delivered + aqm + tail + stoch
    //                                + queued + propagating, always.
    sent: u64,
    delivered: u64,
    aqm: u64,
    tail: u64,
    stoch: u64,
    queued: u64,
    propagating: u64,
}

fn build_controller(spec: &AlgorithmSpec) -> Box<dyn CongestionController> {
    match spec {
        AlgorithmSpec::NewReno => Box::new(NewReno::new()),
        AlgorithmSpec::Cubic => Box::new(Cubic::new()),
        AlgorithmSpec::Vegas => Box::new(Vegas::new()),
        AlgorithmSpec::C2tcp { base: OverlayBase::NewReno, cfg } => {
            Box::new(C2tcp::new(NewReno::new(), *cfg))
        }
        AlgorithmSpec::C2tcp { base: OverlayBase::Cubic, cfg } => {
            Box::new(C2tcp::new(Cubic::new(), *cfg))
        }
    }
}

/// Result summary for one flow.
#[derive(Clone, Debug)]
pub struct FlowReport {
    pub id: u32,
    pub algorithm: &'static str,
    pub metrics: FlowMetrics,
}

/// Everything a finished run yields.
#[derive(Clone, Debug)]
pub struct RunReport {
    /// Echo of the scenario that produced this report.
    pub spec: ScenarioSpec,
    pub flows: Vec<FlowReport>,
    pub total_throughput_mbps: f64,
    /// Fairness across flow throughputs; None for runs where no flow
    /// delivered anything.
    pub jain: Option<f64>,
    /// Events dispatched, for rough cost accounting.
    pub events: u64,
    /// Replay digest: equal for equal (spec, seed), load-bearing in tests.
    pub digest: u64,
    /// Full per-copy log, for timeseries and plotting.
    pub records: Vec<PacketRecord>,
}

struct World<'a> {
    spec: &'a ScenarioSpec,
    link: BottleneckLink,
    flows: Vec<FlowRuntime>,
    records: Vec<PacketRecord>,
    rng: SeededRng,
    digest: EventDigest,
    /// Index of the next trace opportunity to schedule.
    next_opportunity: u64,
    /// Receive buffer budget per destination, in packets. A saturating
    /// receiver's autotuned buffer converges to what its path holds, base
    /// BDP plus the bottleneck buffer; unlimited buffers leave it
    /// unclamped. Each flow's advertised window is this budget divided
    /// by the connections currently open to the same destination.
    rcv_budget: f64,
    scratch_drops: Vec<Packet>,
}

impl<'a> World<'a> {
    fn new(spec: &'a ScenarioSpec) -> Self {
        let cap = spec.resolved_queue_cap();
        let link = BottleneckLink::new(spec.num_queues(), cap, spec.aqm);
        let rcv_budget = match cap {
            QueueCap::Packets(n) => spec.bdp_packets() as f64 + n as f64,
            QueueCap::Unlimited => f64::INFINITY,
        };
        let flows = spec
            .flows
            .iter()
            .map(|fs| FlowRuntime {
                queue: fs.queue as usize,
                ctrl: build_controller(&fs.algorithm),
                w: CwndState::default(),
                started: false,
                next_seq: 0,
                outstanding: BTreeMap::new(),
                seqs: BTreeMap::new(),
                retx: VecDeque::new(),
                recovery_end_tx: 0,
                rto_deadline: None,
                rto_event_live: false,
                rto_backoff: 0,
                sent: 0,
                delivered: 0,
                aqm: 0,
                tail: 0,
                stoch: 0,
                queued: 0,
                propagating: 0,
            })
            .collect();
        World {
            spec,
            link,
            flows,
            records: Vec::new(),
            rng: SeededRng::new(spec.seed),
            digest: EventDigest::new(),
            next_opportunity: 0,
            rcv_budget,
            scratch_drops: Vec::new(),
        }
    }

    /// Advertised receive window for one flow: the destination's buffer
    /// budget split evenly across the connections open to it so far, and
    /// never below one segment.
    fn rwnd(&self, f: usize) -> f64 {
        let queue = self.flows[f].queue;
        let open = self
            .flows
            .iter()
            .filter(|fl| fl.started && fl.queue == queue)
            .count()
            .max(1);
        (self.rcv_budget / open as f64).max(MIN_CWND)
    }

    fn schedule_next_opportunity(&mut self, q: &mut EventQueue<Ev>) {
        let t = self.spec.trace.opportunity_time(self.next_opportunity);
        if t <= self.spec.duration {
            self.next_opportunity += 1;
            q.schedule(t, Ev::Opportunity);
        }
    }

    fn handle(&mut self, q: &mut EventQueue<Ev>, ev: Ev) {
        match ev {
            Ev::FlowStart { flow } => {
                let f = flow as usize;
                self.flows[f].started = true;
                self.digest.write_u8(1);
                self.digest.write_u64(flow as u64);
                self.pump(q, f);
                self.arm_rto(q, f, false);
            }
            Ev::Opportunity => {
                self.on_opportunity(q);
                self.schedule_next_opportunity(q);
            }
            Ev::Arrival { tx } => {
                let now = q.now();
                let rec = &mut self.records[tx as usize];
                rec.delivered_at = Some(now);
                rec.fate = PacketFate::Delivered;
                let fl = &mut self.flows[rec.flow as usize];
                fl.propagating -= 1;
                fl.delivered += 1;
                q.schedule_in(self.spec.one_way_delay, Ev::Ack { tx });
                self.digest.write_u8(6);
                self.digest.write_u64(tx);
            }
            Ev::Ack { tx } => self.on_ack(q, tx),
            Ev::Rto { flow } => self.on_rto_timer(q, flow as usize),
        }
        #[cfg(debug_assertions)]
        self.assert_conservation();
    }

    fn on_opportunity(&mut self, q: &mut EventQueue<Ev>) {
        let now = q.now();
        self.scratch_drops.clear();
        let outcome =
            self.link
                .on_opportunity(now, self.spec.loss_prob, &mut self.rng, &mut self.scratch_drops);
        for i in 0..self.scratch_drops.len() {
            let pkt = self.scratch_drops[i];
            self.records[pkt.tx as usize].fate = PacketFate::AqmDrop;
            let fl = &mut self.flows[pkt.flow as usize];
            fl.queued -= 1;
            fl.aqm += 1;
            self.digest.write_u8(2);
            self.digest.write_u64(pkt.tx);
        }
        match outcome {
            OpportunityOutcome::Idle => {
                self.digest.write_u8(3);
            }
            OpportunityOutcome::Forwarded(pkt) => {
                let fl = &mut self.flows[pkt.flow as usize];
                fl.queued -= 1;
                fl.propagating += 1;
                q.schedule_in(self.spec.one_way_delay, Ev::Arrival { tx: pkt.tx });
                self.digest.write_u8(4);
                self.digest.write_u64(pkt.tx);
            }
            OpportunityOutcome::Lost(pkt) => {
                self.records[pkt.tx as usize].fate = PacketFate::StochasticLoss;
                let fl = &mut self.flows[pkt.flow as usize];
                fl.queued -= 1;
                fl.stoch += 1;
                self.digest.write_u8(5);
                self.digest.write_u64(pkt.tx);
            }
        }
    }

    fn on_ack(&mut self, q: &mut EventQueue<Ev>, tx: u64) {
        let now = q.now();
        let f = self.records[tx as usize].flow as usize;
        let rwnd = self.rwnd(f);

        // Every outstanding copy older than this ack moved a step closer to
        // being declared lost. Each copy is visited at most
        // REORDER_THRESHOLD times over its lifetime.
        let mut newly_lost: Vec<u64> = Vec::new();
        {
            let fl = &mut self.flows[f];
            for (&t, copy) in fl.outstanding.range_mut(..tx) {
                copy.skip += 1;
                if copy.skip >= REORDER_THRESHOLD {
                    newly_lost.push(t);
                }
            }
        }
        let mut oldest_lost: Option<u64> = None;
        for &t in &newly_lost {
            self.write_off_copy(f, t);
            if oldest_lost.is_none_or(|m| t < m) {
                oldest_lost = Some(t);
            }
            self.digest.write_u8(7);
            self.digest.write_u64(t);
        }
        // One window reduction per loss epoch: losses inside the range of
        // copies that were in flight at the last reduction don't count again.
        if let Some(min_tx) = oldest_lost {
            let next_tx = self.records.len() as u64;
            let fl = &mut self.flows[f];
            if min_tx >= fl.recovery_end_tx {
                fl.ctrl.on_dupack_loss(&mut fl.w);
                fl.w.clamp_cwnd();
                fl.w.cwnd = fl.w.cwnd.min(rwnd);
                fl.recovery_end_tx = next_tx;
                self.digest.write_u8(8);
                self.digest.write_u64(fl.w.cwnd.to_bits());
            }
        }

        let fl = &mut self.flows[f];
        if let Some(copy) = fl.outstanding.remove(&tx) {
            fl.w.in_flight = fl.w.in_flight.saturating_sub(1);
            let entry = fl.seqs.get_mut(&copy.seq).expect("live copy has seq entry");
            entry.acked = true;
            entry.live -= 1;
            if entry.live == 0 && !entry.queued_retx {
                fl.seqs.remove(&copy.seq);
            }
            let rtt = now - self.records[tx as usize].sent_at;
            fl.w.observe_rtt(rtt);
            // Acks for copies sent before the last window reduction confirm
            // pre-cut traffic and must not regrow the window (recovery
            // freezes ack-driven growth, as in kernel stacks); copies sent
            // after the cut end recovery and resume growth.
            if tx >= fl.recovery_end_tx {
                let sample = AckSample {
                    acked_seq: copy.seq,
                    rtt,
                    now,
                    newly_acked: 1,
                };
                fl.ctrl.on_ack(&sample, &mut fl.w);
                fl.w.clamp_cwnd();
                fl.w.cwnd = fl.w.cwnd.min(rwnd);
            }
            fl.rto_backoff = 0;
            self.digest.write_u8(9);
            self.digest.write_u64(tx);
            self.digest.write_u64(fl.w.cwnd.to_bits());
        } else {
            // A copy we had written off arrived anyway. The data is at the
            // receiver: cancel any pending retransmission of the sequence.
            let seq = self.records[tx as usize].seq;
            if let Some(entry) = fl.seqs.get_mut(&seq) {
                entry.acked = true;
            }
            self.digest.write_u8(10);
            self.digest.write_u64(tx);
        }

        self.pump(q, f);
        self.arm_rto(q, f, true);
    }

    /// Removes one copy from the outstanding set (declared lost) and queues
    /// its sequence for retransmission if no other copy can still save it.
    fn write_off_copy(&mut self, f: usize, tx: u64) {
        let fl = &mut self.flows[f];
        let copy = fl.outstanding.remove(&tx).expect("writing off a live copy");
        fl.w.in_flight = fl.w.in_flight.saturating_sub(1);
        let entry = fl.seqs.get_mut(&copy.seq).expect("live copy has seq entry");
        entry.live -= 1;
        if !entry.acked && !entry.queued_retx {
            entry.queued_retx = true;
            fl.retx.push_back(copy.seq);
        }
        if entry.acked && entry.live == 0 && !entry.queued_retx {
            fl.seqs.remove(&copy.seq);
        }
    }

    fn on_rto_timer(&mut self, q: &mut EventQueue<Ev>, f: usize) {
        let now = q.now();
        let rwnd = self.rwnd(f);
        let fl = &mut self.flows[f];
        fl.rto_event_live = false;
        let Some(deadline) = fl.rto_deadline else {
            return; // everything acked since the timer was set
        };
        if now < deadline {
            // The deadline moved while this event sat in the heap.
            q.schedule(deadline, Ev::Rto { flow: f as u32 });
            fl.rto_event_live = true;
            return;
        }
        // Real timeout: write off everything in flight and restart from the
        // oldest unacknowledged sequence.
        let stranded: Vec<u64> = fl.outstanding.keys().copied().collect();
        for t in stranded {
            self.write_off_copy(f, t);
        }
        let next_tx = self.records.len() as u64;
        let fl = &mut self.flows[f];
        debug_assert_eq!(fl.w.in_flight, 0);
        fl.ctrl.on_rto(&mut fl.w);
        fl.w.clamp_cwnd();
        fl.w.cwnd = fl.w.cwnd.min(rwnd);
        fl.recovery_end_tx = next_tx;
        fl.rto_backoff += 1;
        fl.rto_deadline = None;
        self.digest.write_u8(11);
        self.digest.write_u64(f as u64);
        self.pump(q, f);
        self.arm_rto(q, f, true);
    }

    /// Keeps the retransmission timer consistent with the outstanding set.
    /// `restart` stamps a fresh deadline (progress was made or a timeout
    /// fired); otherwise an existing deadline stands.
    fn arm_rto(&mut self, q: &mut EventQueue<Ev>, f: usize, restart: bool) {
        let now = q.now();
        let fl = &mut self.flows[f];
        if fl.outstanding.is_empty() {
            fl.rto_deadline = None;
            return;
        }
        if restart || fl.rto_deadline.is_none() {
            let scale = 1u64 << fl.rto_backoff.min(16);
            let rto = fl.w.rto().as_micros().saturating_mul(scale);
            let rto = SimTime::from_micros(rto.min(MAX_RTO.as_micros()));
            fl.rto_deadline = Some(now + rto);
        }
        if !fl.rto_event_live {
            let d = fl.rto_deadline.expect("deadline set above");
            q.schedule(d, Ev::Rto { flow: f as u32 });
            fl.rto_event_live = true;
        }
    }

    /// Sends while the window has room: queued retransmissions first, then
    /// new data. Up to ceil(min(cwnd, rwnd)) copies may be in flight.
    fn pump(&mut self, q: &mut EventQueue<Ev>, f: usize) {
        let now = q.now();
        let mtu = self.spec.trace.mtu_bytes();
        let rwnd = self.rwnd(f);
        let fl = &mut self.flows[f];
        if !fl.started {
            return;
        }
        loop {
            debug_assert!(fl.w.cwnd >= MIN_CWND);
            let ceil = libm::ceil(fl.w.cwnd.min(rwnd));
            let limit = if ceil >= u32::MAX as f64 { u32::MAX } else { ceil as u32 };
            if fl.w.in_flight >= limit {
                break;
            }
            // Pull the next retransmission, discarding entries made stale by
            // late acks.
            let mut retx_seq = None;
            while let Some(s) = fl.retx.pop_front() {
                match fl.seqs.get_mut(&s) {
                    Some(entry) if !entry.acked => {
                        entry.queued_retx = false;
                        retx_seq = Some(s);
                        break;
                    }
                    Some(entry) => {
                        entry.queued_retx = false;
                        if entry.live == 0 {
                            fl.seqs.remove(&s);
                        }
                    }
                    None => {}
                }
            }
            let seq = match retx_seq {
                Some(s) => s,
                None => {
                    let s = fl.next_seq;
                    fl.next_seq += 1;
                    s
                }
            };
            let tx = self.records.len() as u64;
            self.records.push(PacketRecord {
                flow: f as u32,
                seq,
                size_bytes: mtu,
                sent_at: now,
                delivered_at: None,
                fate: PacketFate::Pending,
            });
            fl.outstanding.insert(tx, OutCopy { seq, skip: 0 });
            let entry = fl.seqs.entry(seq).or_insert(SeqState {
                acked: false,
                live: 0,
                queued_retx: false,
            });
            entry.live += 1;
            fl.w.in_flight += 1;
            fl.ctrl.on_sent(&mut fl.w);
            fl.sent += 1;
            let pkt = Packet {
                flow: f as u32,
                seq,
                tx,
                size_bytes: mtu,
                sent_at: now,
                enqueued_at: now,
            };
            match self.link.enqueue(fl.queue, pkt) {
                EnqueueResult::Queued => {
                    fl.queued += 1;
                    self.digest.write_u8(12);
                    self.digest.write_u64(tx);
                }
                EnqueueResult::TailDropped => {
                    // The sender doesn't learn this directly; the copy ages
                    // out through skip counting or the timer like any loss.
                    self.records[tx as usize].fate = PacketFate::TailDrop;
                    fl.tail += 1;
                    self.digest.write_u8(13);
                    self.digest.write_u64(tx);
                }
            }
        }
    }

    #[cfg(debug_assertions)]
    fn assert_conservation(&self) {
        let mut queued_total = 0;
        for (f, fl) in self.flows.iter().enumerate() {
            let accounted =
                fl.delivered + fl.aqm + fl.tail + fl.stoch + fl.queued + fl.propagating;
            debug_assert_eq!(fl.sent, accounted, "flow {f} leaks packets");
            queued_total += fl.queued as usize;
        }
        debug_assert_eq!(queued_total, self.link.total_queued(), "queue counters drifted");
    }

    fn into_report(self, events: u64) -> RunReport {
        let spec = self.spec;
        let rtt = spec.base_rtt();
        let flows: Vec<FlowReport> = spec
            .flows
            .iter()
            .enumerate()
            .map(|(i, fs)| FlowReport {
                id: i as u32,
                algorithm: fs.algorithm.name(),
                metrics: flow_metrics(&self.records, i as u32, spec.duration, spec.warmup, rtt),
            })
            .collect();
        let shares: Vec<f64> = flows.iter().map(|fr| fr.metrics.throughput_mbps).collect();
        RunReport {
            spec: spec.clone(),
            total_throughput_mbps: shares.iter().sum(),
            jain: jain_index(&shares),
            flows,
            events,
            digest: self.digest.value(),
            records: self.records,
        }
    }
}

/// Runs one scenario to completion and reports per-flow metrics, the replay
/// digest, and the full packet log.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<RunReport, ScenarioError> {
    spec.validate()?;
    let mut world = World::new(spec);
    let mut q = EventQueue::new();
    for (i, fl) in spec.flows.iter().enumerate() {
        q.schedule(fl.start, Ev::FlowStart { flow: i as u32 });
    }
    world.schedule_next_opportunity(&mut q);
    let events = q.run_until(spec.duration, |q, ev| world.handle(q, ev));
    Ok(world.into_report(events))
}
