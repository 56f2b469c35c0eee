//! Timing helpers: median-of-repetitions wall time and log-log slope fits.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRecord {
    pub engine: String,
    pub polynomial: String,
    pub n: usize,
    pub d: usize,
    pub wall_time_ns: u64,
    pub max_abs_err: Option<f64>,
    pub repetitions: usize,
}

/// Runs `f` `reps` times and returns the median wall time in nanoseconds
/// (at least 1) together with the last result.
pub fn median_time<T>(reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<(u64, T)> {
    if reps == 0 {
        return Err(Error::InvalidArgument("repetitions must be positive".into()));
    }
    let mut times = Vec::with_capacity(reps);
    let mut last = None;
    for _ in 0..reps {
        let start = Instant::now();
        let out = f()?;
        times.push(start.elapsed().as_nanos().max(1) as u64);
        last = Some(out);
    }
    times.sort_unstable();
    Ok((times[reps / 2], last.expect("reps > 0")))
}

/// Least-squares slope of `ln t` against `ln n`; `None` with fewer than two
/// distinct sizes.
pub fn loglog_slope(points: &[(usize, u64)]) -> Option<f64> {
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, t)| (t as f64).ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if points.len() < 2 || sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

pub fn write_records<W: Write>(records: &[BenchRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
