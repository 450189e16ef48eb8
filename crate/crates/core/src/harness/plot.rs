//! Long-format plot data from run directories.
//!
//! Every directory below the input root that holds a `summary.json` is one
//! run. For each run, the per-iteration R0 and MI of its realizations are
//! reduced to mean and standard deviation, giving one `<label>/R0` and one
//! `<label>/MI` series. A realization that stopped early keeps contributing
//! its last value, so late iterations still average over all realizations.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::experiment::{trace_file_name, Stats, TRACE_HEADER};
use crate::{Error, Result};

pub const PLOT_HEADER: &str = "series,iteration,mean,std";

#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub iteration: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<PlotPoint>,
}

/// One parsed trace row: iteration, R0, and MI if it was estimated.
type Row = (usize, f64, Option<f64>);

fn find_runs(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if dir.join("summary.json").is_file() {
        out.push(dir.to_path_buf());
    }
    let mut children: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    children.sort();
    for child in children {
        find_runs(&child, out)?;
    }
    Ok(())
}

fn parse_trace(path: &Path) -> Result<Vec<Row>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let format_err = |line: usize, message: &str| Error::Format {
        path: path.display().to_string(),
        message: format!("line {line}: {message}"),
    };
    let mut lines = text.lines();
    if lines.next() != Some(TRACE_HEADER) {
        return Err(format_err(1, "unexpected header"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 7 {
                return Err(format_err(i + 2, "expected 7 columns"));
            }
            let iteration = cols[0].parse().map_err(|_| format_err(i + 2, "bad iteration"))?;
            let r0 = cols[2].parse().map_err(|_| format_err(i + 2, "bad R0"))?;
            let mi = if cols[3].is_empty() {
                None
            } else {
                Some(cols[3].parse().map_err(|_| format_err(i + 2, "bad MI"))?)
            };
            Ok((iteration, r0, mi))
        })
        .collect()
}

fn read_run(dir: &Path) -> Result<Vec<Vec<Row>>> {
    let mut traces = Vec::new();
    for index in 0.. {
        let path = dir.join(trace_file_name(index));
        if !path.is_file() {
            break;
        }
        traces.push(parse_trace(&path)?);
    }
    if traces.is_empty() {
        return Err(Error::Format {
            path: dir.display().to_string(),
            message: "run directory has no trace files".into(),
        });
    }
    Ok(traces)
}

/// Mean/std per iteration of `value` over all iterations at which some
/// trace reports it; a trace that has already ended contributes its last
/// known value.
fn reduce(traces: &[Vec<Row>], value: impl Fn(&Row) -> Option<f64>) -> Vec<PlotPoint> {
    let iterations: BTreeSet<usize> = traces
        .iter()
        .flat_map(|t| t.iter().filter(|r| value(r).is_some()).map(|r| r.0))
        .collect();
    iterations
        .into_iter()
        .filter_map(|iteration| {
            let values: Vec<f64> = traces
                .iter()
                .filter_map(|t| {
                    if iteration <= t.last()?.0 {
                        t.iter().find(|r| r.0 == iteration).and_then(&value)
                    } else {
                        t.iter().rev().find_map(&value)
                    }
                })
                .collect();
            (!values.is_empty()).then(|| {
                let s = Stats::of(&values);
                PlotPoint {
                    iteration,
                    mean: s.mean,
                    std: s.std,
                }
            })
        })
        .collect()
}

fn run_label(root: &Path, dir: &Path) -> String {
    let rel = dir.strip_prefix(root).unwrap_or(dir);
    let parts: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
    if parts.is_empty() {
        "run".to_string()
    } else {
        parts.join("/")
    }
}

/// All series of every run below `root`, in path order.
pub fn collect_series(root: &Path) -> Result<Vec<Series>> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "input directory does not exist"),
        ));
    }
    let mut runs = Vec::new();
    find_runs(root, &mut runs)?;
    if runs.is_empty() {
        return Err(Error::Format {
            path: root.display().to_string(),
            message: "no run outputs (summary.json) found".into(),
        });
    }
    let mut series = Vec::with_capacity(2 * runs.len());
    for dir in runs {
        let label = run_label(root, &dir);
        let traces = read_run(&dir)?;
        series.push(Series {
            label: format!("{label}/R0"),
            points: reduce(&traces, |r| Some(r.1)),
        });
        series.push(Series {
            label: format!("{label}/MI"),
            points: reduce(&traces, |r| r.2),
        });
    }
    Ok(series)
}

pub fn series_csv(series: &[Series]) -> String {
    let mut out = String::from(PLOT_HEADER);
    out.push('\n');
    for s in series {
        for p in &s.points {
            let _ = writeln!(out, "{},{},{},{}", s.label, p.iteration, p.mean, p.std);
        }
    }
    out
}

/// Collect every run below `input` and write the long-format CSV to `output`.
pub fn emit_plot_data(input: &Path, output: &Path) -> Result<Vec<Series>> {
    let series = collect_series(input)?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(output, series_csv(&series)).map_err(|e| Error::io(output, e))?;
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::experiment::{simulate, write_run};
    use crate::harness::ExperimentConfig;

    fn tiny(iterations: usize) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.geometry.atoms_per_tx_layer = 4;
        cfg.geometry.atoms_per_rx_layer = 4;
        cfg.geometry.tx_layers = 1;
        cfg.geometry.rx_layers = 1;
        cfg.signaling.num_streams = 1;
        cfg.optimizer.max_iterations = iterations;
        cfg.optimizer.tolerance = 0.0;
        cfg.run.num_realizations = 2;
        cfg.run.mi_samples = 20;
        cfg.run.mi_interval = 2;
        cfg
    }

    #[test]
    fn single_run_gives_r0_and_mi_series() {
        let dir = tempfile::tempdir().unwrap();
        let out = simulate(&tiny(4)).unwrap();
        write_run(dir.path(), &out).unwrap();
        let series = emit_plot_data(dir.path(), &dir.path().join("plot.csv")).unwrap();
        let labels: Vec<&str> = series.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, ["run/R0", "run/MI"]);
        assert_eq!(series[0].points.len(), 4);
        assert_eq!(series[1].points.iter().map(|p| p.iteration).collect::<Vec<_>>(), [2, 4]);
        let mean = (out.traces[0][2].r0 + out.traces[1][2].r0) / 2.0;
        assert!((series[0].points[2].mean - mean).abs() < 1e-15);
        let text = fs::read_to_string(dir.path().join("plot.csv")).unwrap();
        assert_eq!(text.lines().count(), 1 + 4 + 2);
    }

    #[test]
    fn empty_traces_give_header_only() {
        let dir = tempfile::tempdir().unwrap();
        write_run(dir.path(), &simulate(&tiny(0)).unwrap()).unwrap();
        let target = dir.path().join("plot.csv");
        emit_plot_data(dir.path(), &target).unwrap();
        assert_eq!(fs::read_to_string(target).unwrap(), format!("{PLOT_HEADER}\n"));
    }

    #[test]
    fn missing_inputs_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_plot_data(&dir.path().join("absent"), &dir.path().join("p.csv")).is_err());
        assert!(emit_plot_data(dir.path(), &dir.path().join("p.csv")).is_err());
    }

    #[test]
    fn ended_traces_carry_their_last_value() {
        let short = vec![(1, 0.5, None), (2, 0.6, Some(1.0))];
        let long = vec![(1, 0.1, None), (2, 0.2, Some(0.5)), (3, 0.3, None), (4, 0.4, Some(0.7))];
        let r0 = reduce(&[short.clone(), long.clone()], |r| Some(r.1));
        assert_eq!(r0.len(), 4);
        assert!((r0[3].mean - 0.5).abs() < 1e-15);
        let mi = reduce(&[short, long], |r| r.2);
        assert_eq!(mi.iter().map(|p| p.iteration).collect::<Vec<_>>(), [2, 4]);
        assert!((mi[1].mean - 0.85).abs() < 1e-15);
    }
}
