//! Step-size parsing, trajectory and rate-table CSV, JSON reports, and
//! atomic file output.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::dynamics::{SaddleState, Trajectory};
use crate::error::{HisdError, Result};
use crate::frame::DirectionFrame;
use crate::lab::{Check, RateTable};
use crate::landscape::EnergyLandscape;

/// Parses a step size written as `p/q`, `2^-m` or a plain decimal.
///
/// Rationals are divided exactly as `f64`, so `1/256` is the dyadic value
/// with no decimal round-off.
pub fn parse_tau(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || HisdError::Parse(format!("cannot parse step size '{s}'"));
    let value = if let Some((p, q)) = s.split_once('/') {
        let p: f64 = p.trim().parse().map_err(|_| bad())?;
        let q: f64 = q.trim().parse().map_err(|_| bad())?;
        p / q
    } else if let Some((b, e)) = s.split_once('^') {
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        let e: i32 = e.trim().parse().map_err(|_| bad())?;
        b.powi(e)
    } else {
        s.parse().map_err(|_| bad())?
    };
    if !(value.is_finite() && value > 0.0) {
        return Err(HisdError::Parse(format!(
            "step size '{s}' must be positive and finite"
        )));
    }
    Ok(value)
}

/// Comma-separated list of step sizes. An empty list is an error.
pub fn parse_tau_list(s: &str) -> Result<Vec<f64>> {
    let taus = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(parse_tau)
        .collect::<Result<Vec<_>>>()?;
    if taus.is_empty() {
        return Err(HisdError::Parse("the step-size list is empty".into()));
    }
    Ok(taus)
}

/// Comma-separated coordinates, e.g. `-2,1`.
pub fn parse_vector(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| HisdError::Parse(format!("cannot parse '{p}' in vector '{s}'")))
        })
        .collect()
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trajectory_header(dim: usize, k: usize, energy: bool) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=dim).map(|j| format!("x{j}")));
    for i in 1..=k {
        h.extend((1..=dim).map(|j| format!("v{i}_{j}")));
    }
    if energy {
        h.push("energy".into());
    }
    h
}

/// One row per record. The energy column is written when `landscape` is given.
pub fn write_trajectory_csv<W: Write>(
    out: W,
    traj: &Trajectory,
    landscape: Option<&dyn EnergyLandscape>,
) -> Result<()> {
    let first = traj.initial();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(
        first.x.len(),
        traj.k(),
        landscape.is_some(),
    ))
    .map_err(csv_err)?;
    for s in traj.states() {
        let mut row = vec![fmt_f(s.t)];
        row.extend(s.x.iter().map(|&c| fmt_f(c)));
        for v in s.frame.vectors() {
            row.extend(v.iter().map(|&c| fmt_f(c)));
        }
        if let Some(l) = landscape {
            row.push(fmt_f(l.energy(&s.x)));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// States read back from a trajectory CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryCsv {
    pub dim: usize,
    pub k: usize,
    pub states: Vec<SaddleState>,
    pub energy: Option<Vec<f64>>,
}

fn csv_err(e: csv::Error) -> HisdError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HisdError::Io(io),
        other => HisdError::Parse(format!("csv: {other:?}")),
    }
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<TrajectoryCsv> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let energy = header.last().is_some_and(|h| h == "energy");
    let dim = header.iter().filter(|h| h.starts_with('x')).count();
    let body = header.len() - 1 - usize::from(energy);
    if dim == 0 || !body.is_multiple_of(dim) || body / dim < 2 {
        return Err(HisdError::Parse(format!(
            "unrecognized trajectory header: {}",
            header.join(",")
        )));
    }
    let k = body / dim - 1;
    if header != trajectory_header(dim, k, energy) {
        return Err(HisdError::Parse(format!(
            "unrecognized trajectory header: {}",
            header.join(",")
        )));
    }
    let mut states = Vec::new();
    let mut energies = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let vals = rec
            .iter()
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| HisdError::Parse(format!("row {}: cannot parse '{c}'", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        let x = vals[1..=dim].to_vec();
        let vectors = (0..k)
            .map(|i| vals[1 + dim * (i + 1)..1 + dim * (i + 2)].to_vec())
            .collect();
        let mut state = SaddleState::new(x, DirectionFrame::new(vectors)?)?;
        state.t = vals[0];
        states.push(state);
        if energy {
            energies.push(vals[vals.len() - 1]);
        }
    }
    Ok(TrajectoryCsv {
        dim,
        k,
        states,
        energy: energy.then_some(energies),
    })
}

/// `tau,err_x,rate_x,err_v1,rate_v1,...`; rate cells are empty where undefined.
pub fn write_rate_table_csv<W: Write>(out: W, table: &RateTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["tau".to_string(), "err_x".into(), "rate_x".into()];
    for i in 1..=table.k() {
        header.push(format!("err_v{i}"));
        header.push(format!("rate_v{i}"));
    }
    w.write_record(&header).map_err(csv_err)?;
    let cell = |r: Option<f64>| r.map(fmt_f).unwrap_or_default();
    for (row, rates) in table.rows.iter().zip(&table.rates) {
        let mut rec = vec![fmt_f(row.tau), fmt_f(row.err_x), cell(rates.rate_x)];
        for (e, r) in row.err_v.iter().zip(&rates.rate_v) {
            rec.push(fmt_f(*e));
            rec.push(cell(*r));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Top-level JSON document shared by all report-producing commands.
#[derive(Debug, Serialize)]
pub struct Report<'a, C: Serialize, R: Serialize, S: Serialize> {
    pub config: &'a C,
    pub rows: &'a [R],
    pub rates: &'a [S],
    pub checks: &'a [Check],
}

pub fn rate_table_report<'a, C: Serialize>(
    config: &'a C,
    table: &'a RateTable,
    checks: &'a [Check],
) -> Report<'a, C, crate::lab::ErrorReport, crate::lab::RateRow> {
    Report {
        config,
        rows: &table.rows,
        rates: &table.rates,
        checks,
    }
}

pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf)?;
        buf.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| HisdError::Io(e.error))?;
    Ok(())
}

pub fn read_trajectory_file(path: &Path) -> Result<TrajectoryCsv> {
    read_trajectory_csv(fs::File::open(path)?)
}
