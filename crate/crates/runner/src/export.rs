//! Trajectory files. Floats are written in their shortest round-trip form,
//! so an export/import cycle reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use chainqed_core::trajectory::{Trajectory, TrajectoryKind};

/// Header `t,<columns…>`, one row per output time.
pub fn write_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let mut header = vec!["t".to_string()];
    header.extend(traj.columns.iter().cloned());
    w.write_record(&header)?;
    for (t, row) in traj.times.iter().zip(&traj.rows) {
        let mut rec = Vec::with_capacity(row.len() + 1);
        rec.push(t.to_string());
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path, kind: TrajectoryKind) -> Result<Trajectory> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let header = r.headers()?.clone();
    if header.get(0) != Some("t") {
        bail!("{}: first column must be 't'", path.display());
    }
    let mut traj = Trajectory::new(kind, header.iter().skip(1).map(str::to_string).collect());
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        if vals.len() != traj.columns.len() + 1 {
            bail!("{}: row {} has {} fields", path.display(), i + 1, vals.len());
        }
        traj.push(vals[0], vals[1..].to_vec());
    }
    Ok(traj)
}

/// Full trajectory including metadata; stored states are not written.
pub fn write_json(traj: &Trajectory, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, traj)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<Trajectory> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        let mut tr = Trajectory::new(TrajectoryKind::MeanField, vec!["x".into(), "y".into()]);
        tr.push(0.0, vec![0.1, -1.0 / 3.0]);
        tr.push(0.1, vec![std::f64::consts::PI * 1e-300, 1e300 / 7.0]);
        tr.push(0.30000000000000004, vec![-0.0, f64::MIN_POSITIVE]);
        tr.meta.max_norm_drift = 2.0f64.sqrt() * 1e-12;
        tr
    }

    fn bits(tr: &Trajectory) -> Vec<u64> {
        tr.times.iter().chain(tr.rows.iter().flatten()).map(|v| v.to_bits()).collect()
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let tr = sample();
        write_csv(&tr, &p).unwrap();
        let back = read_csv(&p, TrajectoryKind::MeanField).unwrap();
        assert_eq!(back.columns, tr.columns);
        assert_eq!(bits(&back), bits(&tr));
    }

    #[test]
    fn json_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.json");
        let tr = sample();
        write_json(&tr, &p).unwrap();
        let back = read_json(&p).unwrap();
        assert_eq!(bits(&back), bits(&tr));
        assert_eq!(back.meta, tr.meta);
        assert_eq!(back.kind, tr.kind);
    }

    #[test]
    fn malformed_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "time,x\n0,1\n").unwrap();
        assert!(read_csv(&p, TrajectoryKind::Exact).is_err());
        std::fs::write(&p, "t,x\n0,abc\n").unwrap();
        assert!(read_csv(&p, TrajectoryKind::Exact).is_err());
    }
}
