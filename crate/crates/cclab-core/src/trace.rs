//! Capacity traces in the Mahimahi packet-delivery-opportunity format.
//!
//! A trace file is UTF-8 text, one base-10 non-negative integer per line
//! (LF or CRLF), each naming a millisecond at which the link may deliver one
//! MTU-sized packet. Timestamps are nondecreasing; repeated values mean
//! several opportunities in the same millisecond. The file loops forever
//! with period equal to its last timestamp, so `1\n2\n3\n` at a 1500-byte
//! MTU is a steady 12 Mbps and two entries per millisecond are 24 Mbps.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::time::SimTime;

/// Default delivery-opportunity size in bytes.
pub const DEFAULT_MTU_BYTES: u32 = 1500;

/// Errors from parsing or generating a trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceError {
    /// File had no timestamps.
    Empty,
    /// A line was not a bare base-10 non-negative integer.
    BadLine { line: usize },
    /// A timestamp was smaller than its predecessor.
    Decreasing { line: usize },
    /// The final timestamp was 0, which would make the loop period zero.
    ZeroPeriod,
    /// Generator rate or duration was not positive.
    BadRate,
    /// Generator parameters yield no delivery opportunities.
    NoOpportunities,
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceError::Empty => write!(f, "trace has no timestamps"),
            TraceError::BadLine { line } => {
                write!(f, "trace line {line}: not a base-10 non-negative integer")
            }
            TraceError::Decreasing { line } => {
                write!(f, "trace line {line}: timestamps must be nondecreasing")
            }
            TraceError::ZeroPeriod => {
                write!(f, "trace ends at 0 ms; the loop period must be at least 1 ms")
            }
            TraceError::BadRate => write!(f, "trace rate and duration must be positive"),
            TraceError::NoOpportunities => {
                write!(f, "rate too low to place a single opportunity in the duration")
            }
        }
    }
}

/// A parsed capacity trace: opportunity timestamps within one period, the
/// loop period, and the opportunity (packet) size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkTrace {
    opportunities_ms: Vec<u64>,
    period_ms: u64,
    mtu_bytes: u32,
}

impl LinkTrace {
    /// Builds a trace from raw parts, enforcing the format invariants.
    pub fn from_parts(
        opportunities_ms: Vec<u64>,
        period_ms: u64,
        mtu_bytes: u32,
    ) -> Result<Self, TraceError> {
        if opportunities_ms.is_empty() {
            return Err(TraceError::Empty);
        }
        if period_ms == 0 {
            return Err(TraceError::ZeroPeriod);
        }
        let mut prev = 0;
        for (i, &t) in opportunities_ms.iter().enumerate() {
            if t < prev {
                return Err(TraceError::Decreasing { line: i + 1 });
            }
            prev = t;
        }
        debug_assert!(*opportunities_ms.last().unwrap() <= period_ms);
        Ok(LinkTrace {
            opportunities_ms,
            period_ms,
            mtu_bytes,
        })
    }

    /// Parses trace-file text. The loop period is the last timestamp.
    pub fn parse(text: &str) -> Result<Self, TraceError> {
        let mut opportunities = Vec::new();
        let mut prev: u64 = 0;
        for (i, raw) in text.split('\n').enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.is_empty() {
                continue; // trailing newline or blank separator
            }
            if !line.bytes().all(|b| b.is_ascii_digit()) {
                return Err(TraceError::BadLine { line: i + 1 });
            }
            let t: u64 = line.parse().map_err(|_| TraceError::BadLine { line: i + 1 })?;
            if t < prev {
                return Err(TraceError::Decreasing { line: i + 1 });
            }
            prev = t;
            opportunities.push(t);
        }
        if opportunities.is_empty() {
            return Err(TraceError::Empty);
        }
        let period = *opportunities.last().unwrap();
        if period == 0 {
            return Err(TraceError::ZeroPeriod);
        }
        Ok(LinkTrace {
            opportunities_ms: opportunities,
            period_ms: period,
            mtu_bytes: DEFAULT_MTU_BYTES,
        })
    }

    /// Serializes back to trace-file text (LF line endings).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.opportunities_ms {
            out.push_str(itoa(*t).as_str());
            out.push('\n');
        }
        out
    }

    pub fn opportunities_per_period(&self) -> u64 {
        self.opportunities_ms.len() as u64
    }

    pub fn period_ms(&self) -> u64 {
        self.period_ms
    }

    pub fn mtu_bytes(&self) -> u32 {
        self.mtu_bytes
    }

    pub fn timestamps_ms(&self) -> &[u64] {
        &self.opportunities_ms
    }

    /// Long-run average rate in Mbps.
    pub fn mean_rate_mbps(&self) -> f64 {
        let bits = self.opportunities_ms.len() as f64 * self.mtu_bytes as f64 * 8.0;
        bits / (self.period_ms as f64 * 1000.0)
    }

    /// Absolute fire time of the k-th delivery opportunity (0-based),
    /// following the loop: iteration c covers (c*period, (c+1)*period].
    pub fn opportunity_time(&self, k: u64) -> SimTime {
        let n = self.opportunities_ms.len() as u64;
        let cycle = k / n;
        let idx = (k % n) as usize;
        SimTime::from_millis(cycle * self.period_ms + self.opportunities_ms[idx])
    }
}

/// Generates a constant-rate trace: `rate_mbps` for `duration_ms`, which
/// becomes the loop period. Opportunities are spread with an exact
/// cumulative-floor schedule, so capacity over any whole number of periods
/// is exact; if the schedule leaves no opportunity on the final millisecond
/// the last one is moved there to pin the period (at most one opportunity
/// of placement skew).
pub fn gen_constant_trace(rate_mbps: f64, duration_ms: u64) -> Result<LinkTrace, TraceError> {
    gen_step_trace(&[(rate_mbps, duration_ms)])
}

/// Generates a piecewise-constant trace from (rate_mbps, duration_ms)
/// segments, e.g. `[(24.0, 1000), (2.4, 1000)]` for a 24 -> 2.4 Mbps step
/// with a 2 s period.
pub fn gen_step_trace(segments: &[(f64, u64)]) -> Result<LinkTrace, TraceError> {
    if segments.is_empty() {
        return Err(TraceError::BadRate);
    }
    let mtu = DEFAULT_MTU_BYTES;
    let bits_per_packet = mtu as f64 * 8.0;
    let mut opportunities = Vec::new();
    let mut offset: u64 = 0;
    for &(rate_mbps, duration_ms) in segments {
        if rate_mbps <= 0.0 || !rate_mbps.is_finite() || duration_ms == 0 {
            return Err(TraceError::BadRate);
        }
        // Packets per millisecond; 24 Mbps at 1500 B is exactly 2.
        let ppm = rate_mbps * 1000.0 / bits_per_packet;
        let mut placed: u64 = 0;
        for t in 1..=duration_ms {
            let cum = libm::floor(ppm * t as f64) as u64;
            for _ in placed..cum {
                opportunities.push(offset + t);
            }
            placed = cum;
        }
        if placed == 0 {
            return Err(TraceError::NoOpportunities);
        }
        offset += duration_ms;
    }
    let period = offset;
    if let Some(last) = opportunities.last_mut() {
        if *last != period {
            *last = period;
        }
    }
    LinkTrace::from_parts(opportunities, period, mtu)
}

fn itoa(mut v: u64) -> String {
    if v == 0 {
        return String::from("0");
    }
    let mut buf = [0u8; 20];
    let mut i = buf.len();
    while v > 0 {
        i -= 1;
        buf[i] = b'0' + (v % 10) as u8;
        v /= 10;
    }
    String::from_utf8_lossy(&buf[i..]).into_owned()
}
