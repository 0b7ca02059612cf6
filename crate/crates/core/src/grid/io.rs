//! Trajectory CSV ingestion.
//!
//! Two leading columns `t,value` (extra columns are ignored), an optional
//! header row, rows sorted by `t`. A time that appears twice encodes a
//! breakpoint: the first row is the left value, the second the right value.

use std::io::Read;
use std::path::Path;

use super::domain::TimeDomain;
use super::trajectory::Trajectory;
use crate::error::{Error, Result};

/// Raw `(t, value)` rows as they appear in the file.
pub fn read_samples<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(i as u64 + 1);
        if record.len() < 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected at least 2 columns, found {}", record.len()),
            });
        }
        let t = record[0].parse::<f64>();
        let v = record[1].parse::<f64>();
        match (t, v) {
            (Ok(t), Ok(v)) => {
                if !t.is_finite() || !v.is_finite() {
                    return Err(Error::Parse {
                        line,
                        message: "non-finite number".into(),
                    });
                }
                if let Some(&prev) = times.last() {
                    if t < prev {
                        return Err(Error::Parse {
                            line,
                            message: format!("time {t} is smaller than the previous time {prev}"),
                        });
                    }
                }
                times.push(t);
                values.push(v);
            }
            // header row
            (Err(_), _) if i == 0 => continue,
            (Err(e), _) | (_, Err(e)) => {
                return Err(Error::Parse {
                    line,
                    message: format!("cannot parse number: {e}"),
                })
            }
        }
    }
    if times.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no data rows".into(),
        });
    }
    Ok((times, values))
}

pub fn read_trajectory_csv<R: Read>(reader: R, domain: &TimeDomain) -> Result<Trajectory> {
    let (times, values) = read_samples(reader)?;
    Trajectory::from_samples(domain, &times, &values)
}

/// Reads a trajectory file whose horizon is taken from its last time stamp.
pub fn load_trajectory(path: impl AsRef<Path>, grid_points: usize) -> Result<Trajectory> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let (times, values) = read_samples(file)?;
    let horizon = *times.last().expect("read_samples returns at least one row");
    let domain = TimeDomain::uniform(horizon, grid_points)?;
    Trajectory::from_samples(&domain, &times, &values)
}
