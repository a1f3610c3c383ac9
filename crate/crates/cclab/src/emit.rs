//! Report serialization: CSV, JSON, and a self-contained SVG chart.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use cclab_core::metrics::timeseries_throughput;
use cclab_core::scenario::{AlgorithmSpec, QueueCapSpec, ScenarioSpec};
use cclab_core::sim::RunReport;
use cclab_core::time::SimTime;

/// Leading columns of every metrics CSV. Byte-stable: golden files and
/// downstream parsers key on this exact line.
pub const METRICS_HEADER: &str = "flow_id,algorithm,throughput_mbps,avg_delay_ms,\
                                  p95_delay_ms,delivered,aqm_drops,tail_drops,stochastic_losses";

pub const TIMESERIES_HEADER: &str = "t_ms,flow_id,throughput_mbps";

const TIMESERIES_BIN: SimTime = SimTime::from_secs(1);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<OutputFormat> {
        match s {
            "csv" => Some(OutputFormat::Csv),
            "json" => Some(OutputFormat::Json),
            "svg" => Some(OutputFormat::Svg),
            _ => None,
        }
    }
}

fn metrics_row(out: &mut String, report: &RunReport, flow_idx: usize) {
    let fr = &report.flows[flow_idx];
    let m = &fr.metrics;
    let _ = writeln!(
        out,
        "{},{},{:.4},{:.3},{:.3},{},{},{},{}",
        fr.id,
        fr.algorithm,
        m.throughput_mbps,
        m.avg_delay.as_millis_f64(),
        m.p95_delay.as_millis_f64(),
        m.delivered,
        m.aqm_drops,
        m.tail_drops,
        m.stochastic_losses
    );
}

/// One row per flow under the fixed header.
pub fn metrics_csv(report: &RunReport) -> String {
    let mut out = String::new();
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for i in 0..report.flows.len() {
        metrics_row(&mut out, report, i);
    }
    out
}

/// Collated sweep table: the swept key and value prefix every flow row.
pub fn sweep_csv(key: &str, results: &[(f64, RunReport)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "sweep_key,sweep_value,{METRICS_HEADER}");
    for (value, report) in results {
        for i in 0..report.flows.len() {
            let _ = write!(out, "{key},{value},");
            metrics_row(&mut out, report, i);
        }
    }
    out
}

/// Per-flow delivered throughput in one-second bins.
pub fn timeseries_csv(report: &RunReport) -> String {
    let flows: Vec<u32> = report.flows.iter().map(|f| f.id).collect();
    let series =
        timeseries_throughput(&report.records, &flows, report.spec.duration, TIMESERIES_BIN);
    let mut out = String::new();
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for (t, flow, mbps) in series {
        let _ = writeln!(out, "{},{},{:.4}", t.as_millis(), flow, mbps);
    }
    out
}

#[derive(Serialize)]
struct FlowRowJson<'a> {
    flow_id: u32,
    algorithm: &'a str,
    throughput_mbps: f64,
    avg_delay_ms: f64,
    p95_delay_ms: f64,
    delivered: u64,
    aqm_drops: u64,
    tail_drops: u64,
    stochastic_losses: u64,
    sent: u64,
}

#[derive(Serialize)]
struct FlowEchoJson {
    algorithm: &'static str,
    start_s: f64,
    queue: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    interval_ms: Option<f64>,
}

#[derive(Serialize)]
struct ScenarioEchoJson {
    duration_s: f64,
    warmup_s: f64,
    seed: u64,
    one_way_delay_ms: f64,
    loss_prob: f64,
    queue_cap: String,
    aqm: String,
    trace_period_ms: u64,
    trace_mean_rate_mbps: f64,
    flows: Vec<FlowEchoJson>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    scenario: ScenarioEchoJson,
    flows: Vec<FlowRowJson<'a>>,
    total_throughput_mbps: f64,
    jain_index: Option<f64>,
    events: u64,
    digest: String,
}

fn scenario_echo(spec: &ScenarioSpec) -> ScenarioEchoJson {
    ScenarioEchoJson {
        duration_s: spec.duration.as_secs_f64(),
        warmup_s: spec.warmup.as_secs_f64(),
        seed: spec.seed,
        one_way_delay_ms: spec.one_way_delay.as_millis_f64(),
        loss_prob: spec.loss_prob,
        queue_cap: match spec.queue_cap {
            QueueCapSpec::Packets(n) => n.to_string(),
            QueueCapSpec::Bdp => "bdp".into(),
            QueueCapSpec::Unlimited => "unlimited".into(),
        },
        aqm: match spec.aqm {
            cclab_core::link::Aqm::DropTail => "droptail".into(),
            cclab_core::link::Aqm::Codel { target, interval } => format!(
                "codel target={}ms interval={}ms",
                target.as_millis_f64(),
                interval.as_millis_f64()
            ),
        },
        trace_period_ms: spec.trace.period_ms(),
        trace_mean_rate_mbps: spec.trace.mean_rate_mbps(),
        flows: spec
            .flows
            .iter()
            .map(|fl| {
                let (target_ms, interval_ms) = match &fl.algorithm {
                    AlgorithmSpec::C2tcp { cfg, .. } => (
                        Some(cfg.target().as_millis_f64()),
                        Some(cfg.interval().as_millis_f64()),
                    ),
                    _ => (None, None),
                };
                FlowEchoJson {
                    algorithm: fl.algorithm.name(),
                    start_s: fl.start.as_secs_f64(),
                    queue: fl.queue,
                    target_ms,
                    interval_ms,
                }
            })
            .collect(),
    }
}

/// JSON mirror of the CSV table plus the scenario echo and replay digest.
pub fn report_json(report: &RunReport) -> String {
    let doc = ReportJson {
        scenario: scenario_echo(&report.spec),
        flows: report
            .flows
            .iter()
            .map(|fr| FlowRowJson {
                flow_id: fr.id,
                algorithm: fr.algorithm,
                throughput_mbps: fr.metrics.throughput_mbps,
                avg_delay_ms: fr.metrics.avg_delay.as_millis_f64(),
                p95_delay_ms: fr.metrics.p95_delay.as_millis_f64(),
                delivered: fr.metrics.delivered,
                aqm_drops: fr.metrics.aqm_drops,
                tail_drops: fr.metrics.tail_drops,
                stochastic_losses: fr.metrics.stochastic_losses,
                sent: fr.metrics.sent,
            })
            .collect(),
        total_throughput_mbps: report.total_throughput_mbps,
        jain_index: report.jain,
        events: report.events,
        digest: format!("{:016x}", report.digest),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    text
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

const SVG_W: f64 = 860.0;
const SVG_H: f64 = 880.0;
const PLOT_L: f64 = 90.0;
const PLOT_R: f64 = 820.0;
const SCATTER_T: f64 = 60.0;
const SCATTER_B: f64 = 380.0;
const SHARE_T: f64 = 500.0;
const SHARE_B: f64 = 820.0;

/// Smallest "nice" bound (1/2/2.5/5 times a power of ten) at or above `v`.
fn nice_ceil(v: f64) -> f64 {
    if v.is_nan() || v <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    for m in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if m * mag >= v {
            return m * mag;
        }
    }
    10.0 * mag
}

fn svg_text(out: &mut String, x: f64, y: f64, anchor: &str, size: u32, text: &str) {
    let _ = writeln!(
        out,
        "<text x=\"{x:.1}\" y=\"{y:.1}\" text-anchor=\"{anchor}\" font-size=\"{size}\" \
         font-family=\"sans-serif\" fill=\"#333\">{text}</text>"
    );
}

/// Scatter of avg delay vs throughput. The delay axis is logarithmic and
/// runs high-to-low so that better operating points sit up and to the right.
fn scatter_panel(out: &mut String, report: &RunReport) {
    let delays: Vec<f64> = report
        .flows
        .iter()
        .map(|f| f.metrics.avg_delay.as_millis_f64().max(0.1))
        .collect();
    let thrs: Vec<f64> = report.flows.iter().map(|f| f.metrics.throughput_mbps).collect();
    let dmin = delays.iter().cloned().fold(f64::INFINITY, f64::min);
    let dmax = delays.iter().cloned().fold(0.0f64, f64::max);
    let mut lo_exp = dmin.log10().floor() as i32;
    let mut hi_exp = dmax.log10().ceil() as i32;
    if hi_exp <= lo_exp {
        hi_exp = lo_exp + 1;
    }
    // Room to breathe when every point shares a decade.
    if (dmax / dmin.max(1e-9)) < 2.0 {
        lo_exp -= 1;
        hi_exp += 1;
    }
    let (llo, lhi) = (lo_exp as f64, hi_exp as f64);
    let ymax = nice_ceil(thrs.iter().cloned().fold(0.0f64, f64::max) * 1.15);
    let x_of = |d: f64| PLOT_L + (lhi - d.log10()) / (lhi - llo) * (PLOT_R - PLOT_L);
    let y_of = |t: f64| SCATTER_B - t / ymax * (SCATTER_B - SCATTER_T);

    svg_text(out, (PLOT_L + PLOT_R) / 2.0, SCATTER_T - 28.0, "middle", 16, "Throughput vs delay");
    let _ = writeln!(
        out,
        r##"<rect x="{PLOT_L}" y="{SCATTER_T}" width="{:.1}" height="{:.1}" fill="none" stroke="#999"/>"##,
        PLOT_R - PLOT_L,
        SCATTER_B - SCATTER_T
    );
    for e in lo_exp..=hi_exp {
        let x = x_of(10f64.powi(e));
        let _ = writeln!(
            out,
            r##"<line x1="{x:.1}" y1="{SCATTER_T}" x2="{x:.1}" y2="{SCATTER_B}" stroke="#ddd"/>"##
        );
        svg_text(out, x, SCATTER_B + 18.0, "middle", 12, &format!("{}", 10f64.powi(e)));
    }
    let ysteps = 4;
    for i in 0..=ysteps {
        let v = ymax * i as f64 / ysteps as f64;
        let y = y_of(v);
        let _ = writeln!(
            out,
            r##"<line x1="{PLOT_L}" y1="{y:.1}" x2="{PLOT_R}" y2="{y:.1}" stroke="#eee"/>"##
        );
        svg_text(out, PLOT_L - 8.0, y + 4.0, "end", 12, &format!("{v}"));
    }
    svg_text(
        out,
        (PLOT_L + PLOT_R) / 2.0,
        SCATTER_B + 38.0,
        "middle",
        13,
        "avg delay (ms, log scale, lower is right)",
    );
    svg_text(out, PLOT_L - 60.0, (SCATTER_T + SCATTER_B) / 2.0, "middle", 13, "Mbps");
    for (i, fr) in report.flows.iter().enumerate() {
        let x = x_of(delays[i]);
        let y = y_of(thrs[i]);
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(out, r#"<circle cx="{x:.1}" cy="{y:.1}" r="6" fill="{color}"/>"#);
        svg_text(
            out,
            x,
            y - 10.0,
            "middle",
            12,
            &format!("{} #{}", fr.algorithm, fr.id),
        );
    }
}

/// Per-flow fraction of all delivered bytes, one-second bins.
fn share_panel(out: &mut String, report: &RunReport) {
    let flows: Vec<u32> = report.flows.iter().map(|f| f.id).collect();
    let series =
        timeseries_throughput(&report.records, &flows, report.spec.duration, TIMESERIES_BIN);
    let nflows = flows.len();
    let nbins = series.len().checked_div(nflows).unwrap_or(0);
    let duration_s = report.spec.duration.as_secs_f64().max(1e-9);
    let x_of = |t_s: f64| PLOT_L + t_s / duration_s * (PLOT_R - PLOT_L);
    let y_of = |share: f64| SHARE_B - share * (SHARE_B - SHARE_T);

    svg_text(out, (PLOT_L + PLOT_R) / 2.0, SHARE_T - 28.0, "middle", 16, "Share of delivered bandwidth");
    let _ = writeln!(
        out,
        r##"<rect x="{PLOT_L}" y="{SHARE_T}" width="{:.1}" height="{:.1}" fill="none" stroke="#999"/>"##,
        PLOT_R - PLOT_L,
        SHARE_B - SHARE_T
    );
    for i in 0..=4 {
        let share = i as f64 / 4.0;
        let y = y_of(share);
        let _ = writeln!(
            out,
            r##"<line x1="{PLOT_L}" y1="{y:.1}" x2="{PLOT_R}" y2="{y:.1}" stroke="#eee"/>"##
        );
        svg_text(out, PLOT_L - 8.0, y + 4.0, "end", 12, &format!("{share}"));
    }
    let xticks = 6;
    for i in 0..=xticks {
        let t = duration_s * i as f64 / xticks as f64;
        let x = x_of(t);
        svg_text(out, x, SHARE_B + 18.0, "middle", 12, &format!("{t:.0}"));
    }
    svg_text(out, (PLOT_L + PLOT_R) / 2.0, SHARE_B + 38.0, "middle", 13, "time (s)");

    for (fi, fr) in report.flows.iter().enumerate() {
        let color = PALETTE[fi % PALETTE.len()];
        let mut points = String::new();
        for b in 0..nbins {
            let base = b * nflows;
            let total: f64 = series[base..base + nflows].iter().map(|(_, _, m)| m).sum();
            let own = series[base + fi].2;
            let share = if total > 0.0 { own / total } else { 0.0 };
            let t_s = series[base].0.as_secs_f64() + TIMESERIES_BIN.as_secs_f64() / 2.0;
            let _ = write!(points, "{:.1},{:.1} ", x_of(t_s.min(duration_s)), y_of(share));
        }
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            points.trim_end()
        );
        let lx = PLOT_L + 10.0 + 170.0 * (fi % 4) as f64;
        let ly = SHARE_T + 16.0 + 18.0 * (fi / 4) as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{lx:.1}" y="{:.1}" width="10" height="10" fill="{color}"/>"#,
            ly - 9.0
        );
        svg_text(out, lx + 14.0, ly, "start", 12, &format!("{} #{}", fr.algorithm, fr.id));
    }
}

/// Two stacked panels: the delay/throughput operating point of each flow,
/// and how the flows split the link over time.
pub fn report_svg(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(out, r#"<rect width="{SVG_W}" height="{SVG_H}" fill="white"/>"#);
    scatter_panel(&mut out, report);
    share_panel(&mut out, report);
    out.push_str("</svg>\n");
    out
}

fn write_file(dir: &Path, name: &str, contents: &str) -> io::Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

/// Writes a run's artifacts into `dir` and returns the created paths.
/// CSV output always includes the per-second timeseries next to the
/// metrics table.
pub fn write_run_outputs(
    report: &RunReport,
    dir: &Path,
    format: OutputFormat,
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    match format {
        OutputFormat::Csv => {
            paths.push(write_file(dir, "metrics.csv", &metrics_csv(report))?);
            paths.push(write_file(dir, "timeseries.csv", &timeseries_csv(report))?);
        }
        OutputFormat::Json => {
            paths.push(write_file(dir, "report.json", &report_json(report))?);
        }
        OutputFormat::Svg => {
            paths.push(write_file(dir, "report.svg", &report_svg(report))?);
        }
    }
    Ok(paths)
}

/// Writes the collated sweep table into `dir`.
pub fn write_sweep_outputs(
    key: &str,
    results: &[(f64, RunReport)],
    dir: &Path,
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    Ok(vec![write_file(dir, "sweep.csv", &sweep_csv(key, results))?])
}
