//! Delimited-text and JSON artifacts. Numbers use Rust's shortest
//! round-trip formatting, which is locale independent.

use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::ensemble::TerminalSummary;
use crate::error::{Error, Result};
use crate::meanfield::{Landscape, MinimaSet, PhaseDiagram};
use crate::observables::{HistogramSeries, ObservableSeries};
use crate::params::minimal_kinetic_energy;
use crate::units::time_to_kappa_units;

pub const SERIES_HEADER: &str =
    "t_kappa,mean_abs_theta1,mean_abs_theta2,dtheta1,dtheta2,ekin_over_ekin0,kurtosis,p_theta2_neg,nematic_fraction";

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

/// `series.csv` contents; times in 1/kappa, kinetic energy relative to hbar kappa / 4.
pub fn series_csv(series: &ObservableSeries, kappa: f64) -> String {
    let e0 = minimal_kinetic_energy(kappa);
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    for k in 0..series.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            time_to_kappa_units(series.times[k], kappa),
            series.mean_abs_theta[k][0],
            series.mean_abs_theta[k][1],
            series.dtheta[k][0],
            series.dtheta[k][1],
            series.kinetic_energy[k] / e0,
            series.kurtosis[k],
            series.p_theta2_negative[k],
            series.nematic_fraction[k],
        );
    }
    out
}

/// Histogram matrix: one row per time, first column `t_kappa`, then one
/// column per bin labelled by its center.
pub fn histogram_csv(hist: &HistogramSeries, kappa: f64) -> String {
    let mut out = String::from("t_kappa");
    for c in hist.bin_centers() {
        let _ = write!(out, ",{c}");
    }
    out.push('\n');
    for (t, d) in hist.times.iter().zip(&hist.densities) {
        let _ = write!(out, "{}", time_to_kappa_units(*t, kappa));
        for x in d {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    out
}

pub fn terminal_csv(terminal: &[TerminalSummary]) -> String {
    let mut out = String::from("trajectory,theta1,theta2,ekin,error\n");
    for t in terminal {
        let (t1, t2) = t.theta.map(|x| (x[0].to_string(), x[1].to_string())).unwrap_or_default();
        let ke = t.kinetic_energy.map(|x| x.to_string()).unwrap_or_default();
        let err = t.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        let _ = writeln!(out, "{},{t1},{t2},{ke},{err}", t.index);
    }
    out
}

fn matrix_csv(axis: &[f64], cell: impl Fn(usize, usize) -> String) -> String {
    // rows are alpha2 (ascending), columns alpha1
    let mut out = String::from("alpha2\\alpha1");
    for a in axis {
        let _ = write!(out, ",{a}");
    }
    out.push('\n');
    for (i2, a2) in axis.iter().enumerate() {
        let _ = write!(out, "{a2}");
        for i1 in 0..axis.len() {
            let _ = write!(out, ",{}", cell(i1, i2));
        }
        out.push('\n');
    }
    out
}

/// Writes `phase_labels.csv` (0 paramagnetic, 1 nematic, 2 ferromagnetic),
/// `boundary_order.csv` (0 none, 1 second, 2 first order),
/// `bistable_paramagnetic.csv`, `bistable_nematic.csv` (metastable minimum
/// present) and the list `boundaries.csv`.
pub fn write_phase_diagram(dir: &Path, d: &PhaseDiagram) -> Result<()> {
    write_text(&dir.join("phase_labels.csv"), &matrix_csv(&d.axis, |i, j| d.cell(i, j).phase.code().to_string()))?;
    write_text(&dir.join("boundary_order.csv"), &matrix_csv(&d.axis, |i, j| d.boundary_code(i, j).to_string()))?;
    write_text(
        &dir.join("bistable_paramagnetic.csv"),
        &matrix_csv(&d.axis, |i, j| u8::from(d.cell(i, j).metastable_paramagnetic).to_string()),
    )?;
    write_text(
        &dir.join("bistable_nematic.csv"),
        &matrix_csv(&d.axis, |i, j| u8::from(d.cell(i, j).metastable_nematic).to_string()),
    )?;
    let mut b = String::from("alpha1,alpha2,phase_a,phase_b,order,jump\n");
    for x in &d.boundaries {
        let order = match x.order {
            crate::meanfield::TransitionOrder::First => "first",
            crate::meanfield::TransitionOrder::Second => "second",
        };
        let _ = writeln!(b, "{},{},{},{},{order},{}", x.alpha[0], x.alpha[1], x.phases[0].name(), x.phases[1].name(), x.jump);
    }
    write_text(&dir.join("boundaries.csv"), &b)
}

pub fn landscape_csv(l: &Landscape) -> String {
    let mut out = String::from("theta2\\theta1");
    for a in &l.axis {
        let _ = write!(out, ",{a}");
    }
    out.push('\n');
    for (i2, t2) in l.axis.iter().enumerate() {
        let _ = write!(out, "{t2}");
        for i1 in 0..l.axis.len() {
            let _ = write!(out, ",{}", l.at(i1, i2));
        }
        out.push('\n');
    }
    out
}

pub fn minima_csv(m: &MinimaSet) -> String {
    let mut out = String::from("theta1,theta2,beta_f,phase,global\n");
    for x in &m.minima {
        let _ = writeln!(out, "{},{},{},{},{}", x.theta1, x.theta2, x.value, x.phase.name(), x.global);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Sample, TrajectoryRecord};

    #[test]
    fn series_layout() {
        let rec = TrajectoryRecord {
            n_atoms: 2,
            samples: vec![Sample { time: 1.0, theta: [0.5, -0.25], sum_p2: 2.0 * 97.15, sum_p4: 3.0 }],
        };
        let s = ObservableSeries::from_records(&[rec], 0.5).unwrap();
        let csv = series_csv(&s, 388.6);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), SERIES_HEADER);
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 9);
        assert_eq!(row[0], "388.6");
        assert_eq!(row[1], "0.5");
        assert!((row[5].parse::<f64>().unwrap() - 1.0).abs() < 1e-3);
        assert_eq!(row[7], "1");
    }

    #[test]
    fn writes_create_directories() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b/c.txt");
        write_text(&p, "x\n").unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "x\n");
    }
}
