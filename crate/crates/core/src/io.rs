//! CSV files: trajectories `t,x,r`, jumps `n,tau,x_pre,r_pre,r_post`,
//! chains `n,y,w,eta_expected[,eta_sampled]`, cycles `n,duration,displacement`
//! and bound-set diagnostics `t,n_bound`.
//!
//! Reals are written as `{:.14e}`.

use std::io::{Read, Write};
use std::str::FromStr;

use crate::engine::observer::PathObserver;
use crate::error::{Error, Result};
use crate::jumpchain::JumpRecord;
use crate::model::{JumpEvent, RatchetParams, RatchetState, Trajectory};
use crate::renewal::RenewalCycle;
use crate::Real;

fn num<T: Real>(v: T) -> String {
    format!("{:.14e}", v.as_f64())
}

fn writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

pub fn write_trajectory<T: Real, W: Write>(traj: &Trajectory<T>, w: W) -> Result<()> {
    let mut out = writer(w, &["t", "x", "r"])?;
    for s in &traj.samples {
        out.write_record([num(s.t), num(s.x), num(s.r)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_jumps<T: Real, W: Write>(jumps: &[JumpEvent<T>], w: W) -> Result<()> {
    let mut out = writer(w, &["n", "tau", "x_pre", "r_pre", "r_post"])?;
    for (n, j) in jumps.iter().enumerate() {
        out.write_record([(n + 1).to_string(), num(j.tau), num(j.x_pre), num(j.r_pre), num(j.r_post)])?;
    }
    out.flush()?;
    Ok(())
}

/// The `eta_sampled` column is written only if every record has one.
pub fn write_chain<T: Real, W: Write>(records: &[JumpRecord<T>], w: W) -> Result<()> {
    let sampled = !records.is_empty() && records.iter().all(|r| r.eta_sampled.is_some());
    let mut header = vec!["n", "y", "w", "eta_expected"];
    if sampled {
        header.push("eta_sampled");
    }
    let mut out = writer(w, &header)?;
    for (n, r) in records.iter().enumerate() {
        let mut row = vec![(n + 1).to_string(), num(r.y), num(r.w), num(r.eta_expected)];
        if let (true, Some(e)) = (sampled, r.eta_sampled) {
            row.push(num(e));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_cycles<T: Real, W: Write>(cycles: &[RenewalCycle<T>], w: W) -> Result<()> {
    let mut out = writer(w, &["n", "duration", "displacement"])?;
    for (n, c) in cycles.iter().enumerate() {
        out.write_record([(n + 1).to_string(), num(c.duration), num(c.displacement)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_diagnostics<T: Real, W: Write>(rows: &[(T, usize)], w: W) -> Result<()> {
    let mut out = writer(w, &["t", "n_bound"])?;
    for &(t, n) in rows {
        out.write_record([num(t), n.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Bound-set size after every boundary move of the dissociation variant.
#[derive(Clone, Debug, Default)]
pub struct BoundCountLog<T> {
    pub rows: Vec<(T, usize)>,
}

impl<T: Real> PathObserver<T> for BoundCountLog<T> {
    fn bound_count(&mut self, t: T, n: usize) {
        self.rows.push((t, n));
    }
}

fn rows<R: Read>(r: R, what: &'static str, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let got: Vec<String> = rd.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if got.len() < header.len() || got.iter().zip(header).any(|(a, b)| a != b) {
        return Err(Error::Parse {
            what,
            detail: format!("expected header {}, got {}", header.join(","), got.join(",")),
        });
    }
    rd.records().map(|r| r.map_err(Error::from)).collect()
}

fn field<V: FromStr>(rec: &csv::StringRecord, i: usize, what: &'static str) -> Result<V> {
    let s = rec.get(i).map(str::trim).unwrap_or("");
    s.parse().map_err(|_| Error::Parse {
        what,
        detail: format!("bad value `{s}` in column {}", i + 1),
    })
}

fn real<T: Real>(rec: &csv::StringRecord, i: usize, what: &'static str) -> Result<T> {
    let v: f64 = field(rec, i, what)?;
    if !v.is_finite() {
        return Err(Error::Parse {
            what,
            detail: format!("non-finite value in column {}", i + 1),
        });
    }
    Ok(T::lit(v))
}

pub fn read_samples<T: Real, R: Read>(r: R) -> Result<Vec<RatchetState<T>>> {
    const W: &str = "trajectory csv";
    rows(r, W, &["t", "x", "r"])?
        .iter()
        .map(|rec| {
            Ok(RatchetState {
                t: real(rec, 0, W)?,
                x: real(rec, 1, W)?,
                r: real(rec, 2, W)?,
            })
        })
        .collect()
}

pub fn read_jumps<T: Real, R: Read>(r: R) -> Result<Vec<JumpEvent<T>>> {
    const W: &str = "jump csv";
    rows(r, W, &["n", "tau", "x_pre", "r_pre", "r_post"])?
        .iter()
        .map(|rec| {
            Ok(JumpEvent {
                tau: real(rec, 1, W)?,
                x_pre: real(rec, 2, W)?,
                r_pre: real(rec, 3, W)?,
                r_post: real(rec, 4, W)?,
            })
        })
        .collect()
}

/// Rebuild a trajectory (without touch flags) from its two CSV files.
pub fn read_trajectory<T: Real, R1: Read, R2: Read>(
    params: RatchetParams<T>,
    samples: R1,
    jumps: R2,
) -> Result<Trajectory<T>> {
    Ok(Trajectory {
        params,
        samples: read_samples(samples)?,
        jumps: read_jumps(jumps)?,
        touches: Vec::new(),
    })
}

pub fn read_cycles<T: Real, R: Read>(r: R) -> Result<Vec<RenewalCycle<T>>> {
    const W: &str = "cycle csv";
    rows(r, W, &["n", "duration", "displacement"])?
        .iter()
        .map(|rec| {
            Ok(RenewalCycle {
                duration: real(rec, 1, W)?,
                displacement: real(rec, 2, W)?,
            })
        })
        .collect()
}

pub fn read_chain<T: Real, R: Read>(r: R) -> Result<Vec<JumpRecord<T>>> {
    const W: &str = "chain csv";
    rows(r, W, &["n", "y", "w", "eta_expected"])?
        .iter()
        .map(|rec| {
            Ok(JumpRecord {
                y: real(rec, 1, W)?,
                w: real(rec, 2, W)?,
                eta_expected: real(rec, 3, W)?,
                eta_sampled: match rec.get(4) {
                    Some(s) if !s.trim().is_empty() => Some(real(rec, 4, W)?),
                    _ => None,
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::simulate_path;
    use crate::rng::ReplicaStreams;

    #[test]
    fn trajectory_round_trip() {
        let p = RatchetParams::new(1.0_f64, 5.0, 1e-3).with_stride(10);
        let tr = simulate_path(&p, ReplicaStreams::new(1, 0)).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_trajectory(&tr, &mut a).unwrap();
        write_jumps(&tr.jumps, &mut b).unwrap();
        assert!(String::from_utf8_lossy(&a).starts_with("t,x,r\n0.00000000000000e0,"));
        let back = read_trajectory(p, &a[..], &b[..]).unwrap();
        assert_eq!(back.samples.len(), tr.samples.len());
        assert_eq!(back.jumps.len(), tr.jumps.len());
        for (u, v) in back.samples.iter().zip(&tr.samples) {
            assert!((u.x - v.x).abs() <= 1e-13 * v.x.abs().max(1.0));
        }
    }

    #[test]
    fn chain_columns_follow_content() {
        let mut rec = JumpRecord { y: 1.0_f64, w: 0.5, eta_expected: 2.0, eta_sampled: None };
        let mut a = Vec::new();
        write_chain(&[rec], &mut a).unwrap();
        assert!(String::from_utf8_lossy(&a).starts_with("n,y,w,eta_expected\n"));
        rec.eta_sampled = Some(1.5);
        let mut b = Vec::new();
        write_chain(&[rec], &mut b).unwrap();
        assert!(String::from_utf8_lossy(&b).starts_with("n,y,w,eta_expected,eta_sampled\n"));
        assert_eq!(read_chain::<f64, _>(&b[..]).unwrap(), vec![rec]);
        assert_eq!(read_chain::<f64, _>(&a[..]).unwrap()[0].eta_sampled, None);
    }

    #[test]
    fn cycles_round_trip_and_bad_input() {
        let c = vec![RenewalCycle { duration: 1.25_f64, displacement: 0.5 }];
        let mut a = Vec::new();
        write_cycles(&c, &mut a).unwrap();
        assert_eq!(read_cycles::<f64, _>(&a[..]).unwrap(), c);
        assert!(read_cycles::<f64, _>("n,dur\n1,2\n".as_bytes()).is_err());
        assert!(read_cycles::<f64, _>("n,duration,displacement\n1,abc,2\n".as_bytes()).is_err());
        assert!(read_samples::<f64, _>("t,x,r\n0,NaN,0\n".as_bytes()).is_err());
    }
}
