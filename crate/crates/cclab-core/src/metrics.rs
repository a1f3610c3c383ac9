//! Per-packet accounting and summary statistics.
//!
//! Every transmitted copy gets one [`PacketRecord`]; summaries are pure
//! functions over those records so results never depend on sampling
//! happening during the run. Delay percentiles use the nearest-rank method
//! and per-packet delay excludes propagation, leaving queueing plus
//! transmission slotting, the part congestion control answers for.

use alloc::vec::Vec;

use crate::time::SimTime;

/// What finally happened to one transmitted copy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PacketFate {
    /// Still queued or propagating when the run ended.
    Pending,
    Delivered,
    /// CoDel head drop.
    AqmDrop,
    /// Buffer-full drop at enqueue.
    TailDrop,
    /// Bernoulli channel loss at dequeue.
    StochasticLoss,
}

/// Lifecycle of one packet copy.
#[derive(Clone, Copy, Debug)]
pub struct PacketRecord {
    pub flow: u32,
    pub seq: u64,
    pub size_bytes: u32,
    pub sent_at: SimTime,
    pub delivered_at: Option<SimTime>,
    pub fate: PacketFate,
}

/// Queueing + slotting delay of a delivered copy: total one-way latency
/// minus the propagation component (half of `round_trip_prop`). None for
/// undelivered copies.
pub fn per_packet_delay(rec: &PacketRecord, round_trip_prop: SimTime) -> Option<SimTime> {
    let delivered = rec.delivered_at?;
    let one_way = SimTime::from_micros(round_trip_prop.as_micros() / 2);
    Some((delivered - rec.sent_at).saturating_sub(one_way))
}

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest sample.
/// `p` in (0, 100]. None on an empty slice.
pub fn percentile(samples: &[SimTime], p: f64) -> Option<SimTime> {
    if samples.is_empty() {
        return None;
    }
    debug_assert!(p > 0.0 && p <= 100.0);
    let mut sorted: Vec<SimTime> = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let rank = libm::ceil(p / 100.0 * n as f64) as usize;
    Some(sorted[rank.clamp(1, n) - 1])
}

/// Average throughput: bits delivered over the window, in Mbps.
/// `duration` must be positive.
pub fn throughput_mbps(bytes: u64, duration: SimTime) -> f64 {
    assert!(duration > SimTime::ZERO, "throughput over an empty window");
    (bytes as f64 * 8.0) / duration.as_secs_f64() / 1e6
}

/// Jain fairness index: (sum x)^2 / (n * sum x^2). 1.0 is a perfectly even
/// split, 1/n is maximally lopsided. None if the shares are empty or all
/// zero.
pub fn jain_index(shares: &[f64]) -> Option<f64> {
    if shares.is_empty() {
        return None;
    }
    let sum: f64 = shares.iter().sum();
    let sum_sq: f64 = shares.iter().map(|x| x * x).sum();
    if sum_sq == 0.0 {
        return None;
    }
    Some(sum * sum / (shares.len() as f64 * sum_sq))
}

/// Summary for one flow over a run.
#[derive(Clone, Debug)]
pub struct FlowMetrics {
    pub flow: u32,
    pub throughput_mbps: f64,
    pub avg_delay: SimTime,
    pub p95_delay: SimTime,
    pub delivered: u64,
    pub aqm_drops: u64,
    pub tail_drops: u64,
    pub stochastic_losses: u64,
    pub sent: u64,
}

/// Computes one flow's metrics from the full record table. Packets
/// delivered before `warmup` are excluded from delay and throughput;
/// drop counters cover the whole run. `duration` is the experiment length.
pub fn flow_metrics(
    records: &[PacketRecord],
    flow: u32,
    duration: SimTime,
    warmup: SimTime,
    round_trip_prop: SimTime,
) -> FlowMetrics {
    assert!(duration > warmup, "warmup must leave a measurement window");
    let mut delays: Vec<SimTime> = Vec::new();
    let mut bytes: u64 = 0;
    let mut delivered = 0;
    let mut aqm_drops = 0;
    let mut tail_drops = 0;
    let mut stochastic_losses = 0;
    let mut sent = 0;
    for rec in records.iter().filter(|r| r.flow == flow) {
        sent += 1;
        match rec.fate {
            PacketFate::Delivered => {
                let at = rec.delivered_at.expect("delivered without timestamp");
                if at >= warmup {
                    delivered += 1;
                    bytes += rec.size_bytes as u64;
                    delays.push(per_packet_delay(rec, round_trip_prop).unwrap());
                }
            }
            PacketFate::AqmDrop => aqm_drops += 1,
            PacketFate::TailDrop => tail_drops += 1,
            PacketFate::StochasticLoss => stochastic_losses += 1,
            PacketFate::Pending => {}
        }
    }
    let window = duration - warmup;
    let avg_delay = if delays.is_empty() {
        SimTime::ZERO
    } else {
        let total: u64 = delays.iter().map(|d| d.as_micros()).sum();
        SimTime::from_micros(total / delays.len() as u64)
    };
    FlowMetrics {
        flow,
        throughput_mbps: throughput_mbps(bytes, window),
        avg_delay,
        p95_delay: percentile(&delays, 95.0).unwrap_or(SimTime::ZERO),
        delivered,
        aqm_drops,
        tail_drops,
        stochastic_losses,
        sent,
    }
}

/// Throughput time series: one (bin start, flow, Mbps) row per bin per
/// flow, bins of width `bin` covering [0, duration).
pub fn timeseries_throughput(
    records: &[PacketRecord],
    flows: &[u32],
    duration: SimTime,
    bin: SimTime,
) -> Vec<(SimTime, u32, f64)> {
    assert!(bin > SimTime::ZERO);
    let nbins = duration.as_micros().div_ceil(bin.as_micros());
    let mut bytes = alloc::collections::BTreeMap::new();
    for rec in records {
        if rec.fate != PacketFate::Delivered {
            continue;
        }
        let at = rec.delivered_at.unwrap();
        if at >= duration {
            continue;
        }
        let b = at.as_micros() / bin.as_micros();
        *bytes.entry((b, rec.flow)).or_insert(0u64) += rec.size_bytes as u64;
    }
    let mut out = Vec::new();
    for b in 0..nbins {
        for &f in flows {
            let by = bytes.get(&(b, f)).copied().unwrap_or(0);
            out.push((
                SimTime::from_micros(b * bin.as_micros()),
                f,
                throughput_mbps(by, bin),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ms(v: u64) -> SimTime {
        SimTime::from_millis(v)
    }

    #[test]
    fn delay_excludes_propagation() {
        let rec = PacketRecord {
            flow: 0,
            seq: 0,
            size_bytes: 1500,
            sent_at: ms(100),
            delivered_at: Some(ms(163)),
            fate: PacketFate::Delivered,
        };
        // 63 ms total, 20 ms one-way propagation -> 43 ms.
        assert_eq!(per_packet_delay(&rec, ms(40)), Some(ms(43)));
        let undelivered = PacketRecord {
            delivered_at: None,
            fate: PacketFate::TailDrop,
            ..rec
        };
        assert_eq!(per_packet_delay(&undelivered, ms(40)), None);
    }

    #[test]
    fn nearest_rank_percentile() {
        let samples: Vec<SimTime> = (1..=10).map(|i| ms(i * 10)).collect();
        // ceil(0.95 * 10) = 10th smallest = 100 ms.
        assert_eq!(percentile(&samples, 95.0), Some(ms(100)));
        assert_eq!(percentile(&samples, 50.0), Some(ms(50)));
        assert_eq!(percentile(&samples, 100.0), Some(ms(100)));
        assert_eq!(percentile(&samples, 5.0), Some(ms(10)));
        assert_eq!(percentile(&[], 95.0), None);
        assert_eq!(percentile(&[ms(7)], 99.0), Some(ms(7)));
        assert_eq!(percentile(&[ms(7)], 1.0), Some(ms(7)));
    }

    #[test]
    fn percentile_is_monotone_in_p() {
        let mut rng = crate::rng::SeededRng::new(5);
        let samples: Vec<SimTime> = (0..97)
            .map(|_| SimTime::from_micros(rng.next_below(1_000_000)))
            .collect();
        let mut last = SimTime::ZERO;
        for p in 1..=100 {
            let v = percentile(&samples, p as f64).unwrap();
            assert!(v >= last);
            last = v;
        }
        assert_eq!(percentile(&samples, 100.0).unwrap(), *samples.iter().max().unwrap());
    }

    #[test]
    fn throughput_arithmetic() {
        // 2000 packets of 1500 B in one second = 24 Mbps.
        let mbps = throughput_mbps(2000 * 1500, SimTime::from_secs(1));
        assert!((mbps - 24.0).abs() < 1e-12);
    }

    #[test]
    fn jain_examples() {
        assert_eq!(jain_index(&[5.0, 5.0, 5.0]), Some(1.0));
        let j = jain_index(&[2.0, 1.0]).unwrap();
        assert!((j - 0.9).abs() < 1e-12);
        let j = jain_index(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((j - 0.25).abs() < 1e-12);
        assert_eq!(jain_index(&[0.0, 0.0]), None);
        assert_eq!(jain_index(&[]), None);
    }

    fn delivered(flow: u32, seq: u64, sent_ms: u64, delivered_ms: u64) -> PacketRecord {
        PacketRecord {
            flow,
            seq,
            size_bytes: 1500,
            sent_at: ms(sent_ms),
            delivered_at: Some(ms(delivered_ms)),
            fate: PacketFate::Delivered,
        }
    }

    #[test]
    fn flow_metrics_counts_and_warmup() {
        let mut records = vec![
            delivered(0, 0, 0, 50),
            delivered(0, 1, 500, 560),
            delivered(0, 2, 1500, 1570),
        ];
        records.push(PacketRecord {
            flow: 0,
            seq: 3,
            size_bytes: 1500,
            sent_at: ms(1600),
            delivered_at: None,
            fate: PacketFate::TailDrop,
        });
        records.push(PacketRecord {
            flow: 1,
            seq: 0,
            size_bytes: 1500,
            sent_at: ms(10),
            delivered_at: Some(ms(80)),
            fate: PacketFate::Delivered,
        });
        let m = flow_metrics(&records, 0, SimTime::from_secs(2), SimTime::ZERO, ms(40));
        assert_eq!(m.delivered, 3);
        assert_eq!(m.tail_drops, 1);
        assert_eq!(m.sent, 4);
        // Delays: 30, 40, 50 ms after removing 20 ms propagation.
        assert_eq!(m.avg_delay, ms(40));
        assert_eq!(m.p95_delay, ms(50));
        // Warmup excludes the first packet: delays 40, 50.
        let m = flow_metrics(&records, 0, SimTime::from_secs(2), ms(500), ms(40));
        assert_eq!(m.delivered, 2);
        assert_eq!(m.avg_delay, ms(45));
        // Drop counters still cover the whole run.
        assert_eq!(m.tail_drops, 1);
    }

    #[test]
    fn timeseries_bins_per_flow() {
        let records = vec![
            delivered(0, 0, 0, 100),
            delivered(0, 1, 0, 900),
            delivered(1, 0, 0, 1100),
        ];
        let rows = timeseries_throughput(&records, &[0, 1], SimTime::from_secs(2), SimTime::from_secs(1));
        assert_eq!(rows.len(), 4);
        // Bin 0 flow 0: two packets = 24 kbit in 1 s.
        assert!((rows[0].2 - 0.024).abs() < 1e-12);
        assert_eq!(rows[1].2, 0.0);
        assert_eq!(rows[2].2, 0.0);
        assert!((rows[3].2 - 0.012).abs() < 1e-12);
    }
}
