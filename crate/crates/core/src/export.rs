//! CSV writers for trajectories, diagnostics and minority-game runs. Every
//! file starts with a header row.

use crate::chaos::{LyapunovResult, ResidenceReport, SectionPoint};
use crate::error::{Error, Result};
use crate::minority::{GameRecord, SigmaSweep};
use crate::replicator::Trajectory;
use crate::scalar::Real;
use std::io::Write;

fn csv_err(e: csv::Error) -> Error {
    Error::Io(format!("csv: {e}"))
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(out)
}

fn fmt<T: Real>(v: T) -> String {
    format!("{:e}", v.to_f64_lossy())
}

/// `t,x1,..,xm,y1,..,yn[,H]`; the `H` column is present when the trajectory
/// carries a Hamiltonian series.
pub fn write_trajectory<T: Real, W: Write>(traj: &Trajectory<T>, out: W) -> Result<()> {
    let mut w = writer(out);
    let (m, n) = (traj.game.rows(), traj.game.cols());
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|j| format!("y{j}")));
    let hs = traj.hamiltonian_series.as_ref();
    if hs.is_some() {
        header.push("H".into());
    }
    w.write_record(&header).map_err(csv_err)?;
    for (k, s) in traj.samples.iter().enumerate() {
        let mut row = vec![fmt(s.t)];
        row.extend(s.profile.x().iter().chain(s.profile.y()).map(|v| fmt(*v)));
        if let Some(h) = hs {
            row.push(fmt(h[k]));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `t,lambda1,..,lambdaD` running estimates, unsorted (exponent `i` follows
/// the `i`-th frame vector).
pub fn write_lyapunov<T: Real, W: Write>(result: &LyapunovResult<T>, out: W) -> Result<()> {
    let mut w = writer(out);
    let d = result.exponents.len();
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("lambda{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for (t, v) in &result.convergence_series {
        let mut row = vec![fmt(*t)];
        row.extend(v.iter().map(|x| fmt(*x)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_section<T: Real, W: Write>(points: &[SectionPoint<T>], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["t", "x1", "x2", "y1", "y2", "direction"]).map_err(csv_err)?;
    for p in points {
        let mut row = vec![fmt(p.t)];
        row.extend(p.coords.iter().map(|c| fmt(*c)));
        row.push(p.crossing_direction.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Corners are 1-based in the file.
pub fn write_residence<T: Real, W: Write>(report: &ResidenceReport<T>, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["corner", "entry_t", "duration"]).map_err(csv_err)?;
    for e in &report.episodes {
        w.write_record([(e.corner + 1).to_string(), fmt(e.entry_t), fmt(e.duration)]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_minority_run<W: Write>(record: &GameRecord, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["t", "attendance", "minority_bit"]).map_err(csv_err)?;
    for (t, (a, b)) in record.attendance.iter().zip(&record.minority_bits).enumerate() {
        w.write_record([t.to_string(), a.to_string(), b.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sigma_sweep<W: Write>(sweep: &SigmaSweep, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["m", "sigma_mean", "sigma_stderr", "n_seeds"]).map_err(csv_err)?;
    for r in &sweep.rows {
        w.write_record([r.m.to_string(), fmt(r.sigma_mean), fmt(r.sigma_stderr), r.n_seeds.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
