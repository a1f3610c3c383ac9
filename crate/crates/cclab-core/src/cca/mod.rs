//! Loss-based congestion-controller contract and baseline algorithms.
//!
//! Controllers operate on a shared [`CwndState`] in units of MTU-sized
//! segments. The window is a positive real: fractional growth like
//! NewReno's cwnd += 1/cwnd per ack accumulates exactly, and the sender
//! rounds only when gating transmissions (up to ceil(cwnd) packets may be
//! in flight). Controllers only see ack samples and loss events; all
//! retransmission and RTT-estimation machinery lives in the flow driver.

mod cubic;
mod newreno;
mod vegas;

pub use cubic::{cubic_window, Cubic, CUBIC_BETA, CUBIC_C};
pub use newreno::NewReno;
pub use vegas::{Vegas, VEGAS_ALPHA, VEGAS_BETA};

use crate::time::SimTime;

/// Windows never fall below one segment.
pub const MIN_CWND: f64 = 1.0;

/// Initial window, per common practice for modern TCP stacks.
pub const INITIAL_CWND: f64 = 10.0;

/// One acknowledgment, as seen by a controller.
#[derive(Clone, Copy, Debug)]
pub struct AckSample {
    /// Highest sequence newly acknowledged by this ack.
    pub acked_seq: u64,
    /// Raw (unsmoothed) RTT measured for the newly acked packet.
    pub rtt: SimTime,
    /// Receive time of the ack at the sender.
    pub now: SimTime,
    /// Segments newly acknowledged (always 1 with per-packet acks).
    pub newly_acked: u32,
}

/// Shared window and RTT-estimator state for one flow.
#[derive(Clone, Copy, Debug)]
pub struct CwndState {
    /// Congestion window in segments. Invariant: cwnd >= MIN_CWND.
    pub cwnd: f64,
    /// Slow-start threshold in segments.
    pub ssthresh: f64,
    /// Segments currently outstanding (sent, not acked, not marked lost).
    pub in_flight: u32,
    /// Smoothed RTT (gain 1/8). Zero until the first sample.
    pub srtt: SimTime,
    /// RTT mean deviation (gain 1/4).
    pub rttvar: SimTime,
    /// Minimum RTT observed over the connection lifetime.
    pub min_rtt: SimTime,
}

impl Default for CwndState {
    fn default() -> Self {
        CwndState {
            cwnd: INITIAL_CWND,
            ssthresh: f64::INFINITY,
            in_flight: 0,
            srtt: SimTime::ZERO,
            rttvar: SimTime::ZERO,
            min_rtt: SimTime::MAX,
        }
    }
}

impl CwndState {
    /// Feeds one raw RTT sample into the RFC 6298 estimators.
    pub fn observe_rtt(&mut self, rtt: SimTime) {
        if rtt < self.min_rtt {
            self.min_rtt = rtt;
        }
        if self.srtt == SimTime::ZERO {
            self.srtt = rtt;
            self.rttvar = SimTime::from_micros(rtt.as_micros() / 2);
        } else {
            let srtt = self.srtt.as_micros() as i64;
            let var = self.rttvar.as_micros() as i64;
            let sample = rtt.as_micros() as i64;
            let err = (sample - srtt).abs();
            self.rttvar = SimTime::from_micros((var + (err - var) / 4).max(0) as u64);
            self.srtt = SimTime::from_micros((srtt + (sample - srtt) / 8).max(1) as u64);
        }
    }

    /// Retransmission timeout: srtt + 4*rttvar, floored at 200 ms.
    /// Before the first sample a conservative 1 s applies.
    pub fn rto(&self) -> SimTime {
        if self.srtt == SimTime::ZERO {
            return SimTime::from_millis(1_000);
        }
        let raw = self.srtt.as_micros() + 4 * self.rttvar.as_micros();
        SimTime::from_micros(raw.max(200_000))
    }

    pub fn clamp_cwnd(&mut self) {
        // f64::max also sends a NaN to the floor.
        self.cwnd = self.cwnd.max(MIN_CWND);
        self.ssthresh = self.ssthresh.max(MIN_CWND);
    }
}

/// Hooks a congestion-control algorithm implements. The flow driver calls
/// `on_ack` once per acknowledgment (after RTT estimators update), and the
/// loss hooks once per loss event: at most one `on_dupack_loss` per window
/// of data (fast-retransmit epoch), `on_rto` on retransmission timeout.
pub trait CongestionController {
    fn name(&self) -> &'static str;

    fn on_ack(&mut self, sample: &AckSample, w: &mut CwndState);

    /// Loss inferred from duplicate acks: window reduction, connection
    /// keeps flowing.
    fn on_dupack_loss(&mut self, w: &mut CwndState);

    /// Retransmission timeout: collapse to one segment.
    fn on_rto(&mut self, w: &mut CwndState);

    /// A packet entered the network. Most algorithms ignore this.
    fn on_sent(&mut self, _w: &mut CwndState) {}

    /// The algorithm's ssthresh recalculation at a congestion event,
    /// given the current window. Mutates internal epoch state where the
    /// algorithm keeps any (Cubic's w_max). Used by the loss hooks and by
    /// overlays that need “the base algorithm's backoff” without a real
    /// loss having happened.
    fn loss_ssthresh(&mut self, w: &CwndState) -> f64;
}

/// Algorithm selection by name. `c2tcp+...` names are composed one level
/// up (the overlay wraps one of these).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaseAlgorithm {
    NewReno,
    Cubic,
    Vegas,
}
