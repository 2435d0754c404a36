//! CSV datasets and result files.
//!
//! Schemas (header row required, comma separated):
//!
//! | file            | columns                                        |
//! |-----------------|------------------------------------------------|
//! | `anchors.csv`   | `anchor_id,x_m,y_m,los` (`los` is 0 or 1)      |
//! | `imu.csv`       | `t_s,ax_body_mps2,ay_body_mps2,omega_z_radps`  |
//! | `uwb.csv`       | `t_s,anchor_id,range_m`                        |
//! | `truth.csv`     | `t_s,x_m,y_m,theta_rad`                        |
//! | `estimates.csv` | `t_s,x_m,y_m,mode`                             |
//! | `errors.csv`    | `t_s,error_m,mode`                             |
//!
//! Written values use six decimals and every file ends with one newline.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::fusion::FusionMode;
use crate::model::{validate_anchors, Anchor, ImuSample, RangeMeasurement, TimedPose, Trajectory};
use crate::montecarlo::MonteCarloTable;

pub const ANCHORS_HEADER: [&str; 4] = ["anchor_id", "x_m", "y_m", "los"];
pub const IMU_HEADER: [&str; 4] = ["t_s", "ax_body_mps2", "ay_body_mps2", "omega_z_radps"];
pub const UWB_HEADER: [&str; 3] = ["t_s", "anchor_id", "range_m"];
pub const TRUTH_HEADER: [&str; 4] = ["t_s", "x_m", "y_m", "theta_rad"];
pub const ESTIMATES_HEADER: [&str; 4] = ["t_s", "x_m", "y_m", "mode"];
pub const ERRORS_HEADER: [&str; 3] = ["t_s", "error_m", "mode"];

/// One parsed data row with its 1-based line number.
struct Row {
    line: u64,
    fields: Vec<String>,
}

struct Table {
    file: String,
    rows: Vec<Row>,
}

impl Table {
    fn parse_err(&self, line: u64, msg: impl Into<String>) -> Error {
        Error::Parse {
            file: self.file.clone(),
            line,
            msg: msg.into(),
        }
    }

    fn f64(&self, row: &Row, col: usize, name: &str) -> Result<f64> {
        let raw = &row.fields[col];
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.parse_err(
                row.line,
                format!("column {name}: expected a finite number, got {raw:?}"),
            )),
        }
    }

    fn u32(&self, row: &Row, col: usize, name: &str) -> Result<u32> {
        let raw = &row.fields[col];
        raw.parse::<u32>().map_err(|_| {
            self.parse_err(
                row.line,
                format!("column {name}: expected an unsigned integer, got {raw:?}"),
            )
        })
    }

    fn ordering(&self, index: usize, strict: bool) -> Result<()> {
        let times: Vec<f64> = self
            .rows
            .iter()
            .map(|r| r.fields[0].parse().unwrap_or(f64::NAN))
            .collect();
        for (i, w) in times.windows(2).enumerate().skip(index) {
            let bad = if strict { !(w[1] > w[0]) } else { !(w[1] >= w[0]) };
            if bad {
                return Err(self.parse_err(
                    self.rows[i + 1].line,
                    format!("timestamps out of order ({} s after {} s)", w[1], w[0]),
                ));
            }
        }
        Ok(())
    }
}

fn read_table(path: &Path, header: &[&str]) -> Result<Table> {
    let file = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::io(&file, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let parse_err = |line: u64, msg: String| Error::Parse {
        file: file.clone(),
        line,
        msg,
    };
    let got = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(parse_err(
            1,
            format!(
                "expected header {:?}, got {:?}",
                header.join(","),
                got.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, got {}", header.len(), rec.len()),
            ));
        }
        rows.push(Row {
            line,
            fields: rec.iter().map(str::to_owned).collect(),
        });
    }
    Ok(Table { file, rows })
}

pub fn read_anchors(path: &Path) -> Result<Vec<Anchor>> {
    let t = read_table(path, &ANCHORS_HEADER)?;
    let anchors = t
        .rows
        .iter()
        .map(|r| {
            let los = match r.fields[3].as_str() {
                "0" => false,
                "1" => true,
                other => return Err(t.parse_err(r.line, format!("column los: expected 0 or 1, got {other:?}"))),
            };
            Ok(Anchor::new(
                t.u32(r, 0, "anchor_id")?,
                t.f64(r, 1, "x_m")?,
                t.f64(r, 2, "y_m")?,
                los,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    validate_anchors(&anchors).map_err(|e| t.parse_err(0, e.to_string()))?;
    Ok(anchors)
}

pub fn read_imu(path: &Path) -> Result<Vec<ImuSample>> {
    let t = read_table(path, &IMU_HEADER)?;
    let samples = t
        .rows
        .iter()
        .map(|r| {
            Ok(ImuSample::new(
                t.f64(r, 0, "t_s")?,
                t.f64(r, 1, "ax_body_mps2")?,
                t.f64(r, 2, "ay_body_mps2")?,
                t.f64(r, 3, "omega_z_radps")?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    t.ordering(0, true)?;
    Ok(samples)
}

/// Ranges must be non-decreasing in time and cite a known anchor.
pub fn read_ranges(path: &Path, anchors: &[Anchor]) -> Result<Vec<RangeMeasurement>> {
    let t = read_table(path, &UWB_HEADER)?;
    let mut out = Vec::with_capacity(t.rows.len());
    for r in &t.rows {
        let m = RangeMeasurement::new(t.f64(r, 0, "t_s")?, t.u32(r, 1, "anchor_id")?, t.f64(r, 2, "range_m")?);
        if m.distance < 0.0 {
            return Err(t.parse_err(r.line, format!("negative range {}", m.distance)));
        }
        if !anchors.iter().any(|a| a.id == m.anchor_id) {
            return Err(Error::UnknownAnchor {
                file: t.file.clone(),
                line: r.line,
                anchor_id: m.anchor_id,
            });
        }
        out.push(m);
    }
    t.ordering(0, false)?;
    Ok(out)
}

pub fn read_truth(path: &Path) -> Result<Trajectory> {
    let t = read_table(path, &TRUTH_HEADER)?;
    let poses = t
        .rows
        .iter()
        .map(|r| {
            Ok(TimedPose::new(
                t.f64(r, 0, "t_s")?,
                t.f64(r, 1, "x_m")?,
                t.f64(r, 2, "y_m")?,
                t.f64(r, 3, "theta_rad")?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    t.ordering(0, true)?;
    Trajectory::new(poses).map_err(|e| t.parse_err(0, e.to_string()))
}

/// Estimated trajectories keyed by mode name. Heading is not stored.
pub fn read_estimates(path: &Path) -> Result<BTreeMap<String, Trajectory>> {
    let t = read_table(path, &ESTIMATES_HEADER)?;
    let mut out: BTreeMap<String, Trajectory> = BTreeMap::new();
    for r in &t.rows {
        let pose = TimedPose::new(t.f64(r, 0, "t_s")?, t.f64(r, 1, "x_m")?, t.f64(r, 2, "y_m")?, 0.0);
        out.entry(r.fields[3].clone())
            .or_default()
            .push(pose)
            .map_err(|e| t.parse_err(r.line, e.to_string()))?;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub anchors: Vec<Anchor>,
    pub imu: Vec<ImuSample>,
    pub ranges: Vec<RangeMeasurement>,
    /// Absent when no truth file was given; evaluation is then skipped.
    pub truth: Option<Trajectory>,
}

/// Loads a dataset. An empty `truth` path disables evaluation.
pub fn ingest(anchors: &Path, imu: &Path, uwb: &Path, truth: Option<&Path>) -> Result<Dataset> {
    let anchors = read_anchors(anchors)?;
    let imu = read_imu(imu)?;
    let ranges = read_ranges(uwb, &anchors)?;
    let truth = match truth {
        Some(p) if !p.as_os_str().is_empty() => Some(read_truth(p)?),
        _ => None,
    };
    Ok(Dataset {
        anchors,
        imu,
        ranges,
        truth,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn csv_text<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: AsRef<str>,
{
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(r.as_ref());
        s.push('\n');
    }
    s
}

pub fn write_anchors(path: &Path, anchors: &[Anchor]) -> Result<()> {
    let rows = anchors
        .iter()
        .map(|a| format!("{},{:.6},{:.6},{}", a.id, a.x, a.y, u8::from(a.los)));
    write(path, &csv_text(&ANCHORS_HEADER, rows))
}

/// Timestamps get nine decimals so sub-microsecond sample spacing survives.
pub fn write_imu(path: &Path, samples: &[ImuSample]) -> Result<()> {
    let rows = samples
        .iter()
        .map(|s| format!("{:.9},{:.9},{:.9},{:.9}", s.t, s.ax_body, s.ay_body, s.omega_z));
    write(path, &csv_text(&IMU_HEADER, rows))
}

pub fn write_ranges(path: &Path, ranges: &[RangeMeasurement]) -> Result<()> {
    let rows = ranges
        .iter()
        .map(|m| format!("{:.6},{},{:.6}", m.t, m.anchor_id, m.distance));
    write(path, &csv_text(&UWB_HEADER, rows))
}

pub fn write_truth(path: &Path, truth: &Trajectory) -> Result<()> {
    let rows = truth
        .iter()
        .map(|p| format!("{:.6},{:.6},{:.6},{:.6}", p.t, p.x, p.y, p.theta));
    write(path, &csv_text(&TRUTH_HEADER, rows))
}

pub fn write_estimates(path: &Path, runs: &[(String, &Trajectory)]) -> Result<()> {
    let rows = runs.iter().flat_map(|(mode, traj)| {
        traj.iter()
            .map(move |p| format!("{:.6},{:.6},{:.6},{mode}", p.t, p.x, p.y))
    });
    write(path, &csv_text(&ESTIMATES_HEADER, rows))
}

pub fn write_errors(path: &Path, reports: &[(String, &EvalReport)]) -> Result<()> {
    let rows = reports
        .iter()
        .flat_map(|(mode, r)| r.error_series.iter().map(move |(t, e)| format!("{t:.6},{e:.6},{mode}")));
    write(path, &csv_text(&ERRORS_HEADER, rows))
}

fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn report_fields(r: &EvalReport) -> String {
    format!(
        "\"rmse_m\": {:.6}, \"max_error_m\": {:.6}, \"n_samples\": {}",
        r.rmse, r.max_error, r.n_samples
    )
}

/// Writes `report.json`. Top-level figures repeat the first mode; `modes`
/// holds every mode.
pub fn write_report_json(path: &Path, reports: &[(String, &EvalReport)]) -> Result<()> {
    let mut s = String::from("{\n");
    if let Some((mode, r)) = reports.first() {
        let _ = writeln!(s, "  \"mode\": {},", json_str(mode));
        for field in report_fields(r).split(", ") {
            let _ = writeln!(s, "  {field},");
        }
    }
    s.push_str("  \"modes\": [");
    for (i, (mode, r)) in reports.iter().enumerate() {
        s.push_str(if i == 0 { "\n" } else { ",\n" });
        let _ = write!(s, "    {{\"mode\": {}, {}}}", json_str(mode), report_fields(r));
    }
    s.push_str(if reports.is_empty() { "]\n}\n" } else { "\n  ]\n}\n" });
    write(path, &s)
}

/// Writes `estimates.csv`, plus `errors.csv` and `report.json` for every
/// run that has a report.
pub fn emit(out_dir: &Path, runs: &[(FusionMode, &Trajectory, Option<&EvalReport>)]) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let named: Vec<(String, &Trajectory)> = runs.iter().map(|(m, t, _)| (m.to_string(), *t)).collect();
    write_estimates(&out_dir.join("estimates.csv"), &named)?;
    let reports: Vec<(String, &EvalReport)> = runs
        .iter()
        .filter_map(|(m, _, r)| r.map(|r| (m.to_string(), r)))
        .collect();
    if !reports.is_empty() {
        write_errors(&out_dir.join("errors.csv"), &reports)?;
        write_report_json(&out_dir.join("report.json"), &reports)?;
    }
    Ok(())
}

pub const SUMMARY_HEADER: [&str; 5] = ["mode", "mean_rmse_m", "std_rmse_m", "mean_max_error_m", "n_runs"];

/// Writes `summary.csv` and `summary.json` for a Monte-Carlo table.
pub fn write_summary(out_dir: &Path, table: &MonteCarloTable, seed: u64) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let rows = table.rows.iter().map(|r| {
        format!(
            "{},{:.6},{:.6},{:.6},{}",
            r.mode, r.mean_rmse, r.std_rmse, r.mean_max_error, r.n_runs
        )
    });
    write(&out_dir.join("summary.csv"), &csv_text(&SUMMARY_HEADER, rows))?;

    let mut s = String::from("{\n");
    let _ = writeln!(s, "  \"seed\": {seed},");
    let _ = writeln!(
        s,
        "  \"filter\": {{\"q\": {:.6e}, \"r\": {:.6e}, \"p0\": {:.6e}}},",
        table.filter.q, table.filter.r, table.filter.p0
    );
    let _ = writeln!(
        s,
        "  \"gain\": {{\"kx\": {:.6}, \"ky\": {:.6}}},",
        table.gain.kx, table.gain.ky
    );
    s.push_str("  \"modes\": [");
    for (i, r) in table.rows.iter().enumerate() {
        s.push_str(if i == 0 { "\n" } else { ",\n" });
        let _ = write!(
            s,
            "    {{\"mode\": {}, \"mean_rmse_m\": {:.6}, \"std_rmse_m\": {:.6}, \"mean_max_error_m\": {:.6}, \"n_runs\": {}}}",
            json_str(r.mode.as_str()),
            r.mean_rmse,
            r.std_rmse,
            r.mean_max_error,
            r.n_runs
        );
    }
    s.push_str("\n  ]\n}\n");
    write(&out_dir.join("summary.json"), &s)
}
