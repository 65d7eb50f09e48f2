//! JSON and CSV files read and written by the command-line tool.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! file parses back to the exact values and repeated runs give identical
//! bytes.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::IoError;
use crate::pareto::ObjectivePoint;
use crate::pipeline::{CellSummary, RunRow, SensitivityRow};
use crate::segment::Method;
use crate::segmentation::Segmentation;
use crate::stiffness::{StiffnessBounds, StiffnessParams};
use crate::trajectory::Trajectory;

fn io_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, message: impl ToString) -> IoError {
    IoError::Parse {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| parse_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory, IoError> {
    read_json(path)
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), IoError> {
    write_json(path, traj)
}

/// Segmentation output: 1-based labels plus the prior stiffness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentationFile {
    #[serde(rename = "M")]
    pub m: usize,
    pub labels: Vec<usize>,
    #[serde(rename = "K_prior")]
    pub k_prior: Vec<Vec<f64>>,
    pub objective: f64,
    pub method: Method,
}

impl SegmentationFile {
    pub fn new(seg: &Segmentation, prior: &StiffnessParams, objective: f64, method: Method) -> Self {
        Self {
            m: seg.m(),
            labels: seg.one_based(),
            k_prior: prior.values().to_vec(),
            objective,
            method,
        }
    }

    pub fn segmentation(&self) -> Result<Segmentation, crate::error::DataError> {
        let labels: Vec<i64> = self.labels.iter().map(|&l| l as i64).collect();
        Segmentation::from_one_based(&labels, self.m)
    }

    pub fn prior(&self, bounds: StiffnessBounds) -> Result<StiffnessParams, crate::error::DataError> {
        StiffnessParams::new(self.k_prior.clone(), bounds)
    }
}

pub fn read_segmentation(path: &Path) -> Result<SegmentationFile, IoError> {
    let file: SegmentationFile = read_json(path)?;
    file.segmentation().map_err(|source| IoError::Data {
        path: path.display().to_string(),
        source,
    })?;
    Ok(file)
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let as_io = |e: csv::Error| parse_err(path, e);
    w.write_record(header).map_err(as_io)?;
    for r in rows {
        w.write_record(r).map_err(as_io)?;
    }
    let bytes = w.into_inner().map_err(|e| parse_err(path, e))?;
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| parse_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| parse_err(path, e))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn expect_header(path: &Path, got: &[String], want: &[String]) -> Result<(), IoError> {
    for (i, w) in want.iter().enumerate() {
        match got.get(i) {
            Some(g) if g == w => {}
            Some(g) => {
                return Err(IoError::Schema {
                    path: path.display().to_string(),
                    column: g.clone(),
                })
            }
            None => {
                return Err(IoError::Schema {
                    path: path.display().to_string(),
                    column: format!("missing {w}"),
                })
            }
        }
    }
    if let Some(extra) = got.get(want.len()) {
        return Err(IoError::Schema {
            path: path.display().to_string(),
            column: extra.clone(),
        });
    }
    Ok(())
}

fn parse_f64(path: &Path, column: &str, s: &str) -> Result<f64, IoError> {
    s.parse()
        .map_err(|_| parse_err(path, format!("column {column}: `{s}` is not a number")))
}

fn theta_columns(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("theta_{i}")).collect()
}

fn run_header(d: usize) -> Vec<String> {
    let mut h = vec!["n".to_string()];
    h.extend(theta_columns(d));
    h.extend(["y_T", "y_C", "hv", "ms"].map(String::from));
    h
}

/// Columns `n, theta_1..theta_d, y_T, y_C, hv, ms`.
pub fn write_run_csv(path: &Path, rows: &[RunRow]) -> Result<(), IoError> {
    let d = rows.first().map_or(0, |r| r.theta.len());
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![r.n.to_string()];
            v.extend(r.theta.iter().map(|&t| num(t)));
            v.extend([num(r.y_t), num(r.y_c), num(r.hv), num(r.ms)]);
            v
        })
        .collect();
    write_rows(path, &run_header(d), &body)
}

pub fn read_run_csv(path: &Path) -> Result<Vec<RunRow>, IoError> {
    let (header, rows) = read_rows(path)?;
    let d = header.iter().filter(|h| h.starts_with("theta_")).count();
    expect_header(path, &header, &run_header(d))?;
    rows.iter()
        .map(|r| {
            let n = r[0]
                .parse()
                .map_err(|_| parse_err(path, format!("column n: `{}` is not an index", r[0])))?;
            let theta = (0..d)
                .map(|i| parse_f64(path, &header[i + 1], &r[i + 1]))
                .collect::<Result<Vec<_>, _>>()?;
            let f = |i: usize| parse_f64(path, &header[i], &r[i]);
            Ok(RunRow {
                n,
                theta,
                y_t: f(d + 1)?,
                y_c: f(d + 2)?,
                hv: f(d + 3)?,
                ms: f(d + 4)?,
                diverged: false,
            })
        })
        .collect()
}

/// Columns `y_T, y_C, theta_1..theta_d`.
pub fn write_pareto_csv(path: &Path, front: &[(Vec<f64>, ObjectivePoint)]) -> Result<(), IoError> {
    let d = front.first().map_or(0, |(t, _)| t.len());
    let mut header = vec!["y_T".to_string(), "y_C".to_string()];
    header.extend(theta_columns(d));
    let body: Vec<Vec<String>> = front
        .iter()
        .map(|(theta, y)| {
            let mut v = vec![num(y.y_t), num(y.y_c)];
            v.extend(theta.iter().map(|&t| num(t)));
            v
        })
        .collect();
    write_rows(path, &header, &body)
}

pub fn read_pareto_csv(path: &Path) -> Result<Vec<(Vec<f64>, ObjectivePoint)>, IoError> {
    let (header, rows) = read_rows(path)?;
    let d = header.len().saturating_sub(2);
    let mut want = vec!["y_T".to_string(), "y_C".to_string()];
    want.extend(theta_columns(d));
    expect_header(path, &header, &want)?;
    rows.iter()
        .map(|r| {
            let vals = r
                .iter()
                .zip(&header)
                .map(|(s, h)| parse_f64(path, h, s))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((vals[2..].to_vec(), ObjectivePoint::new(vals[0], vals[1])))
        })
        .collect()
}

/// One final hypervolume per run.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub prior: bool,
    pub seed: u64,
    pub final_hv: f64,
}

const SUMMARY_HEADER: [&str; 4] = ["method", "prior", "seed", "final_hv"];

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<(), IoError> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.method.to_string(),
                r.prior.to_string(),
                r.seed.to_string(),
                num(r.final_hv),
            ]
        })
        .collect();
    write_rows(path, &SUMMARY_HEADER.map(String::from), &body)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>, IoError> {
    let (header, rows) = read_rows(path)?;
    expect_header(path, &header, &SUMMARY_HEADER.map(String::from))?;
    rows.iter()
        .map(|r| {
            Ok(SummaryRow {
                method: r[0].parse().map_err(|e: String| parse_err(path, e))?,
                prior: r[1]
                    .parse()
                    .map_err(|_| parse_err(path, format!("column prior: `{}`", r[1])))?,
                seed: r[2]
                    .parse()
                    .map_err(|_| parse_err(path, format!("column seed: `{}`", r[2])))?,
                final_hv: parse_f64(path, "final_hv", &r[3])?,
            })
        })
        .collect()
}

/// Order statistics of several hypervolume curves at one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Pointwise quartiles over curves truncated to the shortest one.
pub fn learning_curve(curves: &[Vec<f64>]) -> Vec<CurvePoint> {
    let len = curves.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|i| {
            let mut v: Vec<f64> = curves.iter().map(|c| c[i]).collect();
            v.sort_by(f64::total_cmp);
            CurvePoint {
                n: i + 1,
                min: v[0],
                q1: quantile(&v, 0.25),
                median: quantile(&v, 0.5),
                q3: quantile(&v, 0.75),
                max: v[v.len() - 1],
            }
        })
        .collect()
}

const CURVE_HEADER: [&str; 8] = ["method", "prior", "n", "min", "q1", "median", "q3", "max"];

/// Learning curves of several (method, prior) groups in long format.
pub fn write_curve_csv(path: &Path, groups: &[(Method, bool, Vec<CurvePoint>)]) -> Result<(), IoError> {
    let body: Vec<Vec<String>> = groups
        .iter()
        .flat_map(|(method, prior, curve)| {
            curve.iter().map(move |p| {
                vec![
                    method.to_string(),
                    prior.to_string(),
                    p.n.to_string(),
                    num(p.min),
                    num(p.q1),
                    num(p.median),
                    num(p.q3),
                    num(p.max),
                ]
            })
        })
        .collect();
    write_rows(path, &CURVE_HEADER.map(String::from), &body)
}

fn parse_at<T: std::str::FromStr>(path: &Path, header: &[String], row: &[String], i: usize) -> Result<T, IoError> {
    row[i]
        .parse()
        .map_err(|_| parse_err(path, format!("column {}: cannot parse `{}`", header[i], row[i])))
}

/// Groups come back in file order; rows of one group must be contiguous.
pub fn read_curve_csv(path: &Path) -> Result<Vec<(Method, bool, Vec<CurvePoint>)>, IoError> {
    let (header, rows) = read_rows(path)?;
    expect_header(path, &header, &CURVE_HEADER.map(String::from))?;
    let mut out: Vec<(Method, bool, Vec<CurvePoint>)> = Vec::new();
    for r in &rows {
        let method: Method = parse_at(path, &header, r, 0)?;
        let prior: bool = parse_at(path, &header, r, 1)?;
        let f = |i| parse_at::<f64>(path, &header, r, i);
        let point = CurvePoint {
            n: parse_at(path, &header, r, 2)?,
            min: f(3)?,
            q1: f(4)?,
            median: f(5)?,
            q3: f(6)?,
            max: f(7)?,
        };
        match out.last_mut() {
            Some((m, p, curve)) if *m == method && *p == prior => curve.push(point),
            _ => out.push((method, prior, vec![point])),
        }
    }
    Ok(out)
}

const GRID_HEADER: [&str; 7] = ["method", "prior", "mean", "std", "median", "runs", "failed"];

/// One row per (method, prior) cell.
pub fn write_grid_csv(path: &Path, cells: &[CellSummary]) -> Result<(), IoError> {
    let body: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            vec![
                c.method.to_string(),
                c.use_prior.to_string(),
                num(c.mean),
                num(c.std),
                num(c.median),
                c.completed.to_string(),
                c.failed.to_string(),
            ]
        })
        .collect();
    write_rows(path, &GRID_HEADER.map(String::from), &body)
}

pub fn read_grid_csv(path: &Path) -> Result<Vec<CellSummary>, IoError> {
    let (header, rows) = read_rows(path)?;
    expect_header(path, &header, &GRID_HEADER.map(String::from))?;
    rows.iter()
        .map(|r| {
            Ok(CellSummary {
                method: parse_at(path, &header, r, 0)?,
                use_prior: parse_at(path, &header, r, 1)?,
                mean: parse_at(path, &header, r, 2)?,
                std: parse_at(path, &header, r, 3)?,
                median: parse_at(path, &header, r, 4)?,
                completed: parse_at(path, &header, r, 5)?,
                failed: parse_at(path, &header, r, 6)?,
            })
        })
        .collect()
}

/// Sensitivity summary as stored on disk; the per-seed values are not kept.
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityLine {
    pub m: usize,
    pub beta: f64,
    pub median: f64,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
    pub failed: usize,
}

impl From<&SensitivityRow> for SensitivityLine {
    fn from(r: &SensitivityRow) -> Self {
        Self {
            m: r.m,
            beta: r.beta,
            median: r.median,
            mean: r.mean,
            std: r.std,
            runs: r.finals.len(),
            failed: r.failed,
        }
    }
}

const SENSITIVITY_HEADER: [&str; 7] = ["M", "beta", "median", "mean", "std", "runs", "failed"];

pub fn write_sensitivity_csv(path: &Path, rows: &[SensitivityLine]) -> Result<(), IoError> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.m.to_string(),
                num(r.beta),
                num(r.median),
                num(r.mean),
                num(r.std),
                r.runs.to_string(),
                r.failed.to_string(),
            ]
        })
        .collect();
    write_rows(path, &SENSITIVITY_HEADER.map(String::from), &body)
}

pub fn read_sensitivity_csv(path: &Path) -> Result<Vec<SensitivityLine>, IoError> {
    let (header, rows) = read_rows(path)?;
    expect_header(path, &header, &SENSITIVITY_HEADER.map(String::from))?;
    rows.iter()
        .map(|r| {
            Ok(SensitivityLine {
                m: parse_at(path, &header, r, 0)?,
                beta: parse_at(path, &header, r, 1)?,
                median: parse_at(path, &header, r, 2)?,
                mean: parse_at(path, &header, r, 3)?,
                std: parse_at(path, &header, r, 4)?,
                runs: parse_at(path, &header, r, 5)?,
                failed: parse_at(path, &header, r, 6)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn run_csv_round_trip() {
        let d = dir();
        let p = d.path().join("run.csv");
        let rows = vec![
            RunRow {
                n: 1,
                theta: vec![10.0, 123.456789012345],
                y_t: 3.0,
                y_c: -1234.5,
                hv: 0.1,
                ms: 0.0,
                diverged: false,
            },
            RunRow {
                n: 2,
                theta: vec![999.9999999, 0.1 + 0.2],
                y_t: -0.0,
                y_c: -1e-300,
                hv: 1.0 / 3.0,
                ms: 0.0,
                diverged: false,
            },
        ];
        write_run_csv(&p, &rows).unwrap();
        assert_eq!(read_run_csv(&p).unwrap(), rows);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("n,theta_1,theta_2,y_T,y_C,hv,ms\n"));
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn run_csv_rejects_unknown_column() {
        let d = dir();
        let p = d.path().join("bad.csv");
        std::fs::write(&p, "n,theta_1,y_T,y_C,hv,wall\n1,2,3,4,5,6\n").unwrap();
        match read_run_csv(&p) {
            Err(IoError::Schema { column, .. }) => assert_eq!(column, "wall"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn segmentation_file_round_trip() {
        let d = dir();
        let p = d.path().join("seg.json");
        let seg = Segmentation::from_boundaries(8, &[3, 6]).unwrap();
        let k = StiffnessParams::new(
            vec![vec![10.0], vec![500.5], vec![20.0]],
            StiffnessBounds::default(),
        )
        .unwrap();
        let f = SegmentationFile::new(&seg, &k, -1.25, Method::Gmm);
        write_json(&p, &f).unwrap();
        let back = read_segmentation(&p).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.segmentation().unwrap(), seg);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("\"M\": 3") && text.contains("\"method\": \"gmm\""));
    }

    #[test]
    fn trajectory_file_round_trip() {
        let d = dir();
        let p = d.path().join("demo.json");
        let t = Trajectory::new(
            0.05,
            vec![vec![0.0, 1.0], vec![0.1, 1.1], vec![0.3, 1.0]],
            vec![vec![0.0, 0.5]; 3],
            None,
        )
        .unwrap();
        write_trajectory(&p, &t).unwrap();
        assert_eq!(read_trajectory(&p).unwrap(), t);
        std::fs::write(&p, r#"{"dt":0.05,"n_axes":1,"x":[[0],[1],[2]],"F":[[0],[0],[0]],"v":[]}"#)
            .unwrap();
        let err = read_trajectory(&p).unwrap_err().to_string();
        assert!(err.contains("`v`"), "{err}");
    }

    #[test]
    fn summary_and_pareto_round_trip() {
        let d = dir();
        let p = d.path().join("summary.csv");
        let rows = vec![
            SummaryRow {
                method: Method::Icsld,
                prior: true,
                seed: 3,
                final_hv: 0.75,
            },
            SummaryRow {
                method: Method::Sld,
                prior: false,
                seed: 4,
                final_hv: 0.5,
            },
        ];
        write_summary_csv(&p, &rows).unwrap();
        assert_eq!(read_summary_csv(&p).unwrap(), rows);

        let q = d.path().join("pareto.csv");
        let front = vec![
            (vec![10.0, 20.0], ObjectivePoint::new(3.0, -100.0)),
            (vec![30.0, 40.0], ObjectivePoint::new(1.0, -50.0)),
        ];
        write_pareto_csv(&q, &front).unwrap();
        assert_eq!(read_pareto_csv(&q).unwrap(), front);
    }

    #[test]
    fn curve_quartiles_are_ordered() {
        let curves = vec![vec![0.1, 0.2], vec![0.3, 0.3], vec![0.2, 0.5], vec![0.0, 0.4]];
        let c = learning_curve(&curves);
        assert_eq!(c.len(), 2);
        for p in &c {
            assert!(p.min <= p.q1 && p.q1 <= p.median && p.median <= p.q3 && p.q3 <= p.max);
        }
        assert!((c[0].median - 0.15).abs() < 1e-12);
    }

    #[test]
    fn aggregate_files_round_trip() {
        let d = dir();
        let curves = vec![
            (Method::Icsld, true, learning_curve(&[vec![0.1, 0.2], vec![0.3, 0.4]])),
            (Method::Gmm, false, learning_curve(&[vec![0.0, 0.5]])),
        ];
        let p = d.path().join("curve.csv");
        write_curve_csv(&p, &curves).unwrap();
        assert_eq!(read_curve_csv(&p).unwrap(), curves);

        let grid = vec![CellSummary {
            method: Method::Sld,
            use_prior: false,
            mean: 0.25,
            std: f64::NAN,
            median: 0.5,
            completed: 1,
            failed: 2,
        }];
        let p = d.path().join("grid.csv");
        write_grid_csv(&p, &grid).unwrap();
        let back = read_grid_csv(&p).unwrap();
        assert!(back[0].std.is_nan());
        assert_eq!((back[0].method, back[0].median, back[0].failed), (Method::Sld, 0.5, 2));

        let lines = vec![SensitivityLine {
            m: 3,
            beta: 10.0,
            median: 0.7,
            mean: 0.65,
            std: 0.1,
            runs: 10,
            failed: 0,
        }];
        let p = d.path().join("sens.csv");
        write_sensitivity_csv(&p, &lines).unwrap();
        assert_eq!(read_sensitivity_csv(&p).unwrap(), lines);
    }
}
