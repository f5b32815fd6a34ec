//! Metrics tables.
//!
//! Raw rows hold one run each. Aggregate rows average the raw rows of one
//! sweep point, per robot, and lead with the columns
//! `objects, avg_d, TP_s, MP_s, MP_attempts, objects_rearranged` in that
//! order; standard deviations and counts follow. Multi-robot output is split
//! into one block per robot, each introduced by a `# robot=<id>` line.

use serde::{Deserialize, Serialize};

use crate::planner::RunMetrics;

/// One run of one robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub objects: usize,
    pub robot: String,
    pub rep: usize,
    pub seed: u64,
    pub d: usize,
    pub solved: bool,
    #[serde(rename = "TP_s")]
    pub tp_s: f64,
    #[serde(rename = "MP_s")]
    pub mp_s: f64,
    #[serde(rename = "MP_attempts")]
    pub mp_attempts: u64,
    pub executions: u64,
    pub objects_rearranged: u64,
    pub work: u64,
    pub work_bound: u64,
    /// Empty unless the run could not be set up.
    pub error: String,
}

impl RawRow {
    pub fn from_metrics(objects: usize, robot: &str, rep: usize, seed: u64, m: &RunMetrics) -> Self {
        RawRow {
            objects,
            robot: robot.to_string(),
            rep,
            seed,
            d: m.depth,
            solved: m.solved,
            tp_s: m.tp_seconds,
            mp_s: m.mp_seconds,
            mp_attempts: m.motion_attempts,
            executions: m.executions,
            objects_rearranged: m.objects_rearranged,
            work: m.work.total(),
            work_bound: m.work_bound,
            error: String::new(),
        }
    }

    pub fn failed(objects: usize, robot: &str, rep: usize, seed: u64, error: impl Into<String>) -> Self {
        RawRow {
            objects,
            robot: robot.to_string(),
            rep,
            seed,
            d: 0,
            solved: false,
            tp_s: 0.0,
            mp_s: 0.0,
            mp_attempts: 0,
            executions: 0,
            objects_rearranged: 0,
            work: 0,
            work_bound: 0,
            error: error.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        !self.error.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub objects: usize,
    pub avg_d: f64,
    #[serde(rename = "TP_s")]
    pub tp_s: f64,
    #[serde(rename = "MP_s")]
    pub mp_s: f64,
    #[serde(rename = "MP_attempts")]
    pub mp_attempts: f64,
    pub objects_rearranged: f64,
    pub std_d: f64,
    #[serde(rename = "std_TP_s")]
    pub std_tp_s: f64,
    #[serde(rename = "std_MP_s")]
    pub std_mp_s: f64,
    #[serde(rename = "std_MP_attempts")]
    pub std_mp_attempts: f64,
    pub std_objects_rearranged: f64,
    pub runs: usize,
    pub solved: usize,
    pub errors: usize,
}

/// Leading aggregate columns, fixed.
pub const AGGREGATE_HEADER: [&str; 6] = ["objects", "avg_d", "TP_s", "MP_s", "MP_attempts", "objects_rearranged"];

/// Aggregate rows of one robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotBlock {
    pub robot: String,
    pub rows: Vec<AggregateRow>,
}

/// Mean and sample standard deviation; zero spread for a single value.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn aggregate_point(objects: usize, rows: &[&RawRow]) -> AggregateRow {
    let ok: Vec<&&RawRow> = rows.iter().filter(|r| !r.is_error()).collect();
    let col = |f: fn(&RawRow) -> f64| mean_std(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
    let (avg_d, std_d) = col(|r| r.d as f64);
    let (tp_s, std_tp_s) = col(|r| r.tp_s);
    let (mp_s, std_mp_s) = col(|r| r.mp_s);
    let (mp_attempts, std_mp_attempts) = col(|r| r.mp_attempts as f64);
    let (objects_rearranged, std_objects_rearranged) = col(|r| r.objects_rearranged as f64);
    AggregateRow {
        objects,
        avg_d,
        tp_s,
        mp_s,
        mp_attempts,
        objects_rearranged,
        std_d,
        std_tp_s,
        std_mp_s,
        std_mp_attempts,
        std_objects_rearranged,
        runs: ok.len(),
        solved: ok.iter().filter(|r| r.solved).count(),
        errors: rows.len() - ok.len(),
    }
}

/// Groups raw rows by robot (first appearance order) and then by object
/// count (first appearance order).
pub fn aggregate(rows: &[RawRow]) -> Vec<RobotBlock> {
    let mut robots: Vec<&str> = Vec::new();
    for r in rows {
        if !robots.contains(&r.robot.as_str()) {
            robots.push(&r.robot);
        }
    }
    robots
        .into_iter()
        .map(|robot| {
            let mine: Vec<&RawRow> = rows.iter().filter(|r| r.robot == robot).collect();
            let mut points: Vec<usize> = Vec::new();
            for r in &mine {
                if !points.contains(&r.objects) {
                    points.push(r.objects);
                }
            }
            let rows = points
                .into_iter()
                .map(|n| {
                    let at: Vec<&RawRow> = mine.iter().copied().filter(|r| r.objects == n).collect();
                    aggregate_point(n, &at)
                })
                .collect();
            RobotBlock {
                robot: robot.to_string(),
                rows,
            }
        })
        .collect()
}

fn to_csv<T: Serialize>(rows: &[T], header_if_empty: &[&str]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(header_if_empty)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub const RAW_HEADER: [&str; 14] = [
    "objects",
    "robot",
    "rep",
    "seed",
    "d",
    "solved",
    "TP_s",
    "MP_s",
    "MP_attempts",
    "executions",
    "objects_rearranged",
    "work",
    "work_bound",
    "error",
];

pub fn raw_csv(rows: &[RawRow]) -> Result<String, csv::Error> {
    to_csv(rows, &RAW_HEADER)
}

/// Aggregate CSV. With more than one robot, every block starts with a
/// `# robot=<id>` line and blocks are separated by a blank line.
pub fn aggregate_csv(blocks: &[RobotBlock]) -> Result<String, csv::Error> {
    if blocks.len() <= 1 {
        let rows = blocks.first().map(|b| b.rows.as_slice()).unwrap_or_default();
        return to_csv(rows, &AGGREGATE_HEADER);
    }
    let mut out = String::new();
    for (i, b) in blocks.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("# robot={}\n", b.robot));
        out.push_str(&to_csv(&b.rows, &AGGREGATE_HEADER)?);
    }
    Ok(out)
}

/// (d, TP) pairs of every successful run, for plotting planning time against
/// depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub d: usize,
    #[serde(rename = "TP_s")]
    pub tp_s: f64,
}

pub fn plot_points(rows: &[RawRow]) -> Vec<PlotPoint> {
    rows.iter()
        .filter(|r| !r.is_error())
        .map(|r| PlotPoint { d: r.d, tp_s: r.tp_s })
        .collect()
}

pub fn plot_csv(points: &[PlotPoint]) -> Result<String, csv::Error> {
    to_csv(points, &["d", "TP_s"])
}

/// Everything a sweep produces, for JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub aggregate: Vec<RobotBlock>,
    pub raw: Vec<RawRow>,
    pub plot: Vec<PlotPoint>,
}

impl SweepReport {
    pub fn from_rows(raw: Vec<RawRow>) -> Self {
        SweepReport {
            aggregate: aggregate(&raw),
            plot: plot_points(&raw),
            raw,
        }
    }
}

/// Least-squares line through `(x, y)` pairs: slope, intercept, R².
pub fn linear_fit(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope, intercept, r2))
}
