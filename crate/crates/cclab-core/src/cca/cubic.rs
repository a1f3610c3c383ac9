//! CUBIC congestion control (RFC 8312 shape): cubic window growth around
//! the last loss point, a Reno-friendly lower envelope, fast convergence,
//! and plain slow start (no hybrid slow-start).

use super::{AckSample, CongestionController, CwndState, MIN_CWND};
use crate::time::SimTime;

/// Cubic scaling constant (segments/s^3).
pub const CUBIC_C: f64 = 0.4;
/// Multiplicative decrease factor.
pub const CUBIC_BETA: f64 = 0.7;

/// The cubic growth curve W(t) = C*(t - K)^3 + w_max, with K chosen so the
/// curve leaves a loss at beta*w_max and returns to w_max at t = K:
/// K = cbrt(w_max*(1 - beta)/C). Time is seconds since the loss epoch began.
pub fn cubic_window(t_secs: f64, w_max: f64) -> f64 {
    let k = libm::cbrt(w_max * (1.0 - CUBIC_BETA) / CUBIC_C);
    let d = t_secs - k;
    CUBIC_C * d * d * d + w_max
}

#[derive(Clone, Debug)]
pub struct Cubic {
    w_max: f64,
    k: f64,
    epoch_start: Option<SimTime>,
    /// Reno-friendly window estimate, grown per ack within the epoch.
    w_est: f64,
}

impl Default for Cubic {
    fn default() -> Self {
        Self::new()
    }
}

impl Cubic {
    pub fn new() -> Self {
        Cubic {
            w_max: 0.0,
            k: 0.0,
            epoch_start: None,
            w_est: 0.0,
        }
    }

    fn begin_epoch(&mut self, now: SimTime, w: &CwndState) {
        self.epoch_start = Some(now);
        if w.cwnd < self.w_max {
            self.k = libm::cbrt(self.w_max * (1.0 - CUBIC_BETA) / CUBIC_C);
        } else {
            // No concave phase to replay: grow from here.
            self.w_max = w.cwnd;
            self.k = 0.0;
        }
        self.w_est = w.cwnd;
    }

    fn curve(&self, t_secs: f64) -> f64 {
        let d = t_secs - self.k;
        CUBIC_C * d * d * d + self.w_max
    }
}

impl CongestionController for Cubic {
    fn name(&self) -> &'static str {
        "cubic"
    }

    fn on_ack(&mut self, sample: &AckSample, w: &mut CwndState) {
        let acked = sample.newly_acked as f64;
        if w.cwnd < w.ssthresh {
            w.cwnd += acked;
            return;
        }
        if self.epoch_start.is_none() {
            self.begin_epoch(sample.now, w);
        }
        let t = (sample.now - self.epoch_start.unwrap()).as_secs_f64();
        let rtt = if w.srtt > SimTime::ZERO { w.srtt } else { sample.rtt };

        // Reno-friendly estimate: 3(1-beta)/(1+beta) segments per RTT.
        let alpha = 3.0 * (1.0 - CUBIC_BETA) / (1.0 + CUBIC_BETA);
        self.w_est += alpha * acked / w.cwnd;

        if self.curve(t) < self.w_est {
            // TCP-friendly region.
            if self.w_est > w.cwnd {
                w.cwnd = self.w_est;
            }
        } else {
            // Aim at the curve one RTT ahead, capped at 50% growth per RTT.
            let target = self
                .curve(t + rtt.as_secs_f64())
                .clamp(w.cwnd, 1.5 * w.cwnd);
            w.cwnd += acked * (target - w.cwnd) / w.cwnd;
        }
    }

    fn on_dupack_loss(&mut self, w: &mut CwndState) {
        w.ssthresh = self.loss_ssthresh(w);
        w.cwnd = w.ssthresh;
        w.clamp_cwnd();
    }

    fn on_rto(&mut self, w: &mut CwndState) {
        w.ssthresh = self.loss_ssthresh(w);
        w.cwnd = MIN_CWND;
        w.clamp_cwnd();
    }

    fn loss_ssthresh(&mut self, w: &CwndState) -> f64 {
        // Fast convergence: a loss before regaining the previous peak
        // lowers the remembered peak to free capacity for new flows.
        if w.cwnd < self.w_max {
            self.w_max = w.cwnd * (1.0 + CUBIC_BETA) / 2.0;
        } else {
            self.w_max = w.cwnd;
        }
        self.epoch_start = None;
        (w.cwnd * CUBIC_BETA).max(MIN_CWND)
    }
}
