//! The c2tcp overlay: a delay-condition controller layered on top of a
//! loss-based algorithm.
//!
//! Two tunables, an RTT target and a monitoring interval, drive a
//! three-state reaction evaluated on every ack after the base algorithm's
//! normal ack processing:
//!
//! * good condition (rtt < target): the window gets an extra additive boost
//!   of target/rtt segments, and any armed monitoring window is forgotten;
//! * first ack at or above target: arm a monitoring window ending one
//!   interval from now and wait, window untouched;
//! * still at or above target past the armed deadline: back off hard, ssthresh
//!   recomputed by the base algorithm's loss rule and cwnd dropped to one
//!   segment, then re-arm with the deadline shrinking as interval/sqrt(k)
//!   on the k-th consecutive backoff.
//!
//! The boost and the backoff both key off raw per-ack RTT, never smoothed
//! estimates, so reactions track the instantaneous channel.

use crate::cca::{AckSample, CongestionController, CwndState, MIN_CWND};
use crate::time::SimTime;

/// Errors from overlay configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum C2tcpConfigError {
    NonPositiveTarget,
    NonPositiveInterval,
}

impl core::fmt::Display for C2tcpConfigError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            C2tcpConfigError::NonPositiveTarget => write!(f, "c2tcp target must be positive"),
            C2tcpConfigError::NonPositiveInterval => write!(f, "c2tcp interval must be positive"),
        }
    }
}

/// Overlay tunables. Defaults: target 100 ms, interval 100 ms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct C2tcpConfig {
    target: SimTime,
    interval: SimTime,
}

impl Default for C2tcpConfig {
    fn default() -> Self {
        C2tcpConfig {
            target: SimTime::from_millis(100),
            interval: SimTime::from_millis(100),
        }
    }
}

impl C2tcpConfig {
    pub fn new(target: SimTime, interval: SimTime) -> Result<Self, C2tcpConfigError> {
        if target == SimTime::ZERO {
            return Err(C2tcpConfigError::NonPositiveTarget);
        }
        if interval == SimTime::ZERO {
            return Err(C2tcpConfigError::NonPositiveInterval);
        }
        Ok(C2tcpConfig { target, interval })
    }

    pub fn target(&self) -> SimTime {
        self.target
    }

    pub fn interval(&self) -> SimTime {
        self.interval
    }

    /// Retunes the target; takes effect from the next ack.
    pub fn set_target(&mut self, target: SimTime) -> Result<(), C2tcpConfigError> {
        if target == SimTime::ZERO {
            return Err(C2tcpConfigError::NonPositiveTarget);
        }
        self.target = target;
        Ok(())
    }

    /// Retunes the monitoring interval; takes effect from the next ack.
    pub fn set_interval(&mut self, interval: SimTime) -> Result<(), C2tcpConfigError> {
        if interval == SimTime::ZERO {
            return Err(C2tcpConfigError::NonPositiveInterval);
        }
        self.interval = interval;
        Ok(())
    }
}

/// Per-connection overlay state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConditionState {
    /// True when no monitoring window is armed (fresh, or condition was
    /// good since the last one).
    pub first_time: bool,
    /// Deadline of the armed monitoring window. Set by the arm branch
    /// before it is ever read.
    pub next_time: Option<SimTime>,
    /// Count of consecutive backoffs; the k-th backoff re-arms with
    /// interval/sqrt(k). Reset to 1 whenever the condition turns good.
    pub num_backoffs: u32,
}

impl Default for ConditionState {
    fn default() -> Self {
        ConditionState {
            first_time: true,
            next_time: None,
            num_backoffs: 1,
        }
    }
}

/// Which branch an ack took. Exactly one per ack.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum C2tcpAction {
    /// Good condition: additive boost applied.
    Boost,
    /// Monitoring window armed; window untouched.
    Arm,
    /// Deadline passed while the condition stayed bad: window reset.
    Reset,
    /// Inside an armed window; nothing to do yet.
    Hold,
}

/// The shrinking re-arm window: interval/sqrt(k), rounded to the nearest
/// microsecond.
pub fn backoff_window(interval: SimTime, k: u32) -> SimTime {
    debug_assert!(k >= 1);
    let us = interval.as_micros() as f64 / libm::sqrt(k as f64);
    SimTime::from_micros(libm::round(us) as u64)
}

/// Applies the overlay reaction for one ack. The base algorithm's on_ack
/// must already have run. `recalc_ssthresh` is the base algorithm's
/// loss-time ssthresh rule; it is consulted only on a reset.
pub fn c2tcp_on_ack(
    sample: &AckSample,
    w: &mut CwndState,
    cfg: &C2tcpConfig,
    st: &mut ConditionState,
    recalc_ssthresh: impl FnOnce(&CwndState) -> f64,
) -> C2tcpAction {
    let rtt = sample.rtt;
    let now = sample.now;
    if rtt < cfg.target {
        // Good condition: extra additive increase, forget any armed window.
        let boost = cfg.target.as_micros() as f64 / rtt.as_micros() as f64;
        w.cwnd += boost;
        st.first_time = true;
        st.num_backoffs = 1;
        C2tcpAction::Boost
    } else if st.first_time {
        st.next_time = Some(now + cfg.interval);
        st.first_time = false;
        C2tcpAction::Arm
    } else if now > st.next_time.expect("armed before read") {
        st.next_time = Some(now + backoff_window(cfg.interval, st.num_backoffs));
        st.num_backoffs += 1;
        w.ssthresh = recalc_ssthresh(w).max(MIN_CWND);
        w.cwnd = MIN_CWND;
        C2tcpAction::Reset
    } else {
        C2tcpAction::Hold
    }
}

/// A base algorithm wrapped with the overlay. The composed controller runs
/// the base hooks unchanged and layers the condition reaction on top of
/// each ack.
#[derive(Clone, Debug)]
pub struct C2tcp<C> {
    base: C,
    cfg: C2tcpConfig,
    st: ConditionState,
}

impl<C: CongestionController> C2tcp<C> {
    pub fn new(base: C, cfg: C2tcpConfig) -> Self {
        C2tcp {
            base,
            cfg,
            st: ConditionState::default(),
        }
    }

    pub fn config(&self) -> &C2tcpConfig {
        &self.cfg
    }

    pub fn config_mut(&mut self) -> &mut C2tcpConfig {
        &mut self.cfg
    }

    pub fn condition(&self) -> &ConditionState {
        &self.st
    }

    pub fn base(&self) -> &C {
        &self.base
    }

    /// Overlay reaction for the last ack, for logging and tests.
    pub fn last_action_of(&mut self, sample: &AckSample, w: &mut CwndState) -> C2tcpAction {
        c2tcp_on_ack(sample, w, &self.cfg, &mut self.st, |w| self.base.loss_ssthresh(w))
    }
}

impl<C: CongestionController> CongestionController for C2tcp<C> {
    fn name(&self) -> &'static str {
        match self.base.name() {
            "newreno" => "c2tcp+newreno",
            "cubic" => "c2tcp+cubic",
            "vegas" => "c2tcp+vegas",
            _ => "c2tcp",
        }
    }

    fn on_ack(&mut self, sample: &AckSample, w: &mut CwndState) {
        self.base.on_ack(sample, w);
        c2tcp_on_ack(sample, w, &self.cfg, &mut self.st, |w| {
            self.base.loss_ssthresh(w)
        });
    }

    fn on_dupack_loss(&mut self, w: &mut CwndState) {
        self.base.on_dupack_loss(w);
    }

    fn on_rto(&mut self, w: &mut CwndState) {
        self.base.on_rto(w);
    }

    fn on_sent(&mut self, w: &mut CwndState) {
        self.base.on_sent(w);
    }

    fn loss_ssthresh(&mut self, w: &CwndState) -> f64 {
        self.base.loss_ssthresh(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cca::{Cubic, NewReno, CUBIC_BETA};
    use crate::rng::SeededRng;

    fn cfg(target_ms: u64, interval_ms: u64) -> C2tcpConfig {
        C2tcpConfig::new(
            SimTime::from_millis(target_ms),
            SimTime::from_millis(interval_ms),
        )
        .unwrap()
    }

    fn sample(now: SimTime, rtt_ms: u64) -> AckSample {
        AckSample {
            acked_seq: 0,
            rtt: SimTime::from_millis(rtt_ms),
            now,
            newly_acked: 1,
        }
    }

    fn halve(w: &CwndState) -> f64 {
        (w.cwnd / 2.0).max(MIN_CWND)
    }

    #[test]
    fn good_condition_boosts_by_target_over_rtt() {
        let cfg = cfg(100, 100);
        let mut st = ConditionState::default();
        let mut w = CwndState {
            cwnd: 10.0,
            ..Default::default()
        };
        let a = c2tcp_on_ack(&sample(SimTime::from_millis(40), 50), &mut w, &cfg, &mut st, halve);
        assert_eq!(a, C2tcpAction::Boost);
        assert_eq!(w.cwnd, 12.0); // + 100/50
        assert!(st.first_time);
        assert_eq!(st.num_backoffs, 1);
    }

    #[test]
    fn boost_is_additive_not_multiplicative() {
        // Same rtt yields the same increment regardless of window size.
        let cfg = cfg(100, 100);
        let inc_at = |cwnd: f64| {
            let mut st = ConditionState::default();
            let mut w = CwndState {
                cwnd,
                ..Default::default()
            };
            c2tcp_on_ack(&sample(SimTime::from_millis(1), 40), &mut w, &cfg, &mut st, halve);
            w.cwnd - cwnd
        };
        assert_eq!(inc_at(2.0), inc_at(200.0));
        assert!((inc_at(2.0) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn rtt_equal_to_target_is_not_good() {
        let cfg = cfg(100, 100);
        let mut st = ConditionState::default();
        let mut w = CwndState::default();
        let a = c2tcp_on_ack(&sample(SimTime::from_millis(10), 100), &mut w, &cfg, &mut st, halve);
        assert_eq!(a, C2tcpAction::Arm);
        assert_eq!(st.next_time, Some(SimTime::from_millis(110)));
        assert!(!st.first_time);
        assert_eq!(w.cwnd, CwndState::default().cwnd);
    }

    #[test]
    fn deadline_is_exclusive() {
        let cfg = cfg(100, 100);
        let mut st = ConditionState::default();
        let mut w = CwndState {
            cwnd: 20.0,
            ..Default::default()
        };
        c2tcp_on_ack(&sample(SimTime::from_millis(0), 150), &mut w, &cfg, &mut st, halve);
        // Exactly at the deadline: still holding.
        let a = c2tcp_on_ack(&sample(SimTime::from_millis(100), 150), &mut w, &cfg, &mut st, halve);
        assert_eq!(a, C2tcpAction::Hold);
        assert_eq!(w.cwnd, 20.0);
        // One microsecond past: reset.
        let a = c2tcp_on_ack(
            &sample(SimTime::from_micros(100_001), 150),
            &mut w,
            &cfg,
            &mut st,
            halve,
        );
        assert_eq!(a, C2tcpAction::Reset);
        assert_eq!(w.cwnd, 1.0);
        assert_eq!(w.ssthresh, 10.0); // recalc on the pre-reset window
        assert_eq!(st.num_backoffs, 2);
    }

    #[test]
    fn consecutive_backoff_windows_shrink_by_sqrt() {
        assert_eq!(backoff_window(SimTime::from_millis(100), 1), SimTime::from_millis(100));
        // 100 ms / sqrt(2) = 70710.678 us -> 70711 us.
        assert_eq!(backoff_window(SimTime::from_millis(100), 2), SimTime::from_micros(70_711));
        // 100 ms / sqrt(4) = exactly 50 ms.
        assert_eq!(backoff_window(SimTime::from_millis(100), 4), SimTime::from_millis(50));
        let mut prev = backoff_window(SimTime::from_millis(100), 1);
        for k in 2..=10 {
            let wk = backoff_window(SimTime::from_millis(100), k);
            assert!(wk < prev, "window must shrink: k={k}");
            prev = wk;
        }
    }

    #[test]
    fn reset_rearms_with_shrinking_window() {
        let cfg = cfg(100, 100);
        let mut st = ConditionState::default();
        let mut w = CwndState {
            cwnd: 50.0,
            ..Default::default()
        };
        let mut now = SimTime::from_millis(0);
        c2tcp_on_ack(&sample(now, 200), &mut w, &cfg, &mut st, halve); // arm at 100
        let mut reset_times = Vec::new();
        // Acks every 1 ms with rtt stuck at 200 ms.
        for _ in 0..1000 {
            now += SimTime::from_millis(1);
            let a = c2tcp_on_ack(&sample(now, 200), &mut w, &cfg, &mut st, halve);
            if a == C2tcpAction::Reset {
                reset_times.push(now);
            }
        }
        assert!(reset_times.len() >= 5);
        // Gap between reset k and k+1 is interval/sqrt(k) up to ack spacing.
        for (k, pair) in reset_times.windows(2).enumerate() {
            let gap = (pair[1] - pair[0]).as_micros() as i64;
            let law = backoff_window(cfg.interval(), (k + 1) as u32).as_micros() as i64;
            assert!(
                (gap - law).abs() <= 1_000,
                "gap {} vs law {} at k={}",
                gap,
                law,
                k + 1
            );
        }
    }

    #[test]
    fn good_ack_disarms_monitoring() {
        // An excursion above target shorter than the interval never resets:
        // the next good ack disarms, and a later bad spell re-arms afresh.
        let cfg = cfg(100, 100);
        let mut st = ConditionState::default();
        let mut w = CwndState {
            cwnd: 30.0,
            ..Default::default()
        };
        c2tcp_on_ack(&sample(SimTime::from_millis(10), 120), &mut w, &cfg, &mut st, halve);
        assert!(!st.first_time);
        c2tcp_on_ack(&sample(SimTime::from_millis(60), 80), &mut w, &cfg, &mut st, halve);
        assert!(st.first_time);
        // Well past the stale deadline, but a fresh bad ack only arms.
        let a = c2tcp_on_ack(&sample(SimTime::from_millis(300), 120), &mut w, &cfg, &mut st, halve);
        assert_eq!(a, C2tcpAction::Arm);
        assert_eq!(st.next_time, Some(SimTime::from_millis(400)));
    }

    #[test]
    fn same_rtt_trace_different_history_different_outcome() {
        // Two identical 150 ms samples: one preceded by a long bad spell
        // (reset), one following a good ack (arm). The reaction depends on
        // history, not on the instantaneous RTT alone.
        let cfg = cfg(100, 100);
        let mut w = CwndState {
            cwnd: 30.0,
            ..Default::default()
        };

        let mut bad_history = ConditionState::default();
        c2tcp_on_ack(&sample(SimTime::from_millis(0), 150), &mut w, &cfg, &mut bad_history, halve);
        let a = c2tcp_on_ack(
            &sample(SimTime::from_millis(150), 150),
            &mut w,
            &cfg,
            &mut bad_history,
            halve,
        );
        assert_eq!(a, C2tcpAction::Reset);

        let mut good_history = ConditionState::default();
        let mut w2 = CwndState {
            cwnd: 30.0,
            ..Default::default()
        };
        c2tcp_on_ack(&sample(SimTime::from_millis(100), 50), &mut w2, &cfg, &mut good_history, halve);
        let a = c2tcp_on_ack(
            &sample(SimTime::from_millis(150), 150),
            &mut w2,
            &cfg,
            &mut good_history,
            halve,
        );
        assert_eq!(a, C2tcpAction::Arm);
    }

    #[test]
    fn composed_controller_boosts_after_base() {
        let mut cc = C2tcp::new(NewReno::new(), cfg(100, 100));
        let mut w = CwndState {
            cwnd: 10.0,
            ssthresh: 5.0, // congestion avoidance
            ..Default::default()
        };
        cc.on_ack(&sample(SimTime::from_millis(40), 50), &mut w);
        // Base adds 1/10, overlay adds 100/50 on the updated window.
        assert!((w.cwnd - 12.1).abs() < 1e-12);
    }

    #[test]
    fn composed_reset_uses_base_backoff_rule() {
        let mut cc = C2tcp::new(Cubic::new(), cfg(100, 100));
        let mut w = CwndState {
            cwnd: 40.0,
            ssthresh: 20.0,
            ..Default::default()
        };
        w.observe_rtt(SimTime::from_millis(200));
        cc.on_ack(&sample(SimTime::from_millis(0), 200), &mut w); // arm
        cc.on_ack(&sample(SimTime::from_millis(150), 200), &mut w); // reset
        assert_eq!(w.cwnd, 1.0);
        // Cubic's rule: ssthresh = beta * cwnd at the reset.
        let expect = 40.0 * CUBIC_BETA;
        assert!((w.ssthresh - expect).abs() < 1.0, "ssthresh {}", w.ssthresh);
        // And the reset opens slow start: cwnd < ssthresh.
        assert!(w.cwnd < w.ssthresh);
    }

    #[test]
    fn loss_hooks_delegate_to_base() {
        let mut cc = C2tcp::new(NewReno::new(), cfg(100, 100));
        let mut w = CwndState {
            cwnd: 12.0,
            ssthresh: 6.0,
            ..Default::default()
        };
        cc.on_dupack_loss(&mut w);
        assert_eq!(w.cwnd, 6.0);
        cc.on_rto(&mut w);
        assert_eq!(w.cwnd, 1.0);
        assert_eq!(cc.name(), "c2tcp+newreno");
    }

    #[test]
    fn retune_applies_from_next_ack() {
        let mut cfg = cfg(100, 100);
        let mut st = ConditionState::default();
        let mut w = CwndState {
            cwnd: 10.0,
            ..Default::default()
        };
        c2tcp_on_ack(&sample(SimTime::from_millis(0), 120), &mut w, &cfg, &mut st, halve);
        assert!(!st.first_time); // 120 >= 100: armed
        cfg.set_target(SimTime::from_millis(150)).unwrap();
        let a = c2tcp_on_ack(&sample(SimTime::from_millis(10), 120), &mut w, &cfg, &mut st, halve);
        assert_eq!(a, C2tcpAction::Boost); // 120 < 150 now
        assert!(cfg.set_target(SimTime::ZERO).is_err());
        assert!(cfg.set_interval(SimTime::ZERO).is_err());
    }

    #[test]
    fn exactly_one_branch_per_ack_under_fuzz() {
        // Random rtt streams: each ack takes exactly one branch and the
        // state transition matches that branch's contract.
        let mut rng = SeededRng::new(0xc27c9);
        for _ in 0..500 {
            let cfg = cfg(1 + rng.next_below(200), 1 + rng.next_below(300));
            let mut st = ConditionState::default();
            let mut w = CwndState {
                cwnd: 1.0 + rng.next_f64() * 100.0,
                ..Default::default()
            };
            let mut now = SimTime::ZERO;
            for _ in 0..200 {
                now += SimTime::from_micros(1 + rng.next_below(50_000));
                let rtt = SimTime::from_micros(1 + rng.next_below(400_000));
                let before = (st, w.cwnd);
                let s = AckSample {
                    acked_seq: 0,
                    rtt,
                    now,
                    newly_acked: 1,
                };
                let action = c2tcp_on_ack(&s, &mut w, &cfg, &mut st, halve);
                let (pre, pre_cwnd) = before;
                match action {
                    C2tcpAction::Boost => {
                        assert!(rtt < cfg.target());
                        assert!(w.cwnd > pre_cwnd);
                        assert!(st.first_time && st.num_backoffs == 1);
                    }
                    C2tcpAction::Arm => {
                        assert!(rtt >= cfg.target() && pre.first_time);
                        assert_eq!(w.cwnd, pre_cwnd);
                        assert_eq!(st.next_time, Some(now + cfg.interval()));
                    }
                    C2tcpAction::Reset => {
                        assert!(rtt >= cfg.target() && !pre.first_time);
                        assert!(now > pre.next_time.unwrap());
                        assert_eq!(w.cwnd, 1.0);
                        assert_eq!(st.num_backoffs, pre.num_backoffs + 1);
                    }
                    C2tcpAction::Hold => {
                        assert!(rtt >= cfg.target() && !pre.first_time);
                        assert!(now <= pre.next_time.unwrap());
                        assert_eq!(w.cwnd, pre_cwnd);
                        assert_eq!(st, pre);
                    }
                }
                assert!(w.cwnd >= 1.0);
            }
        }
    }
}
