//! File formats: parameter and signal JSON, trajectory CSV, report JSON.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{Context, Result};
use magswim_core::{Control, ControlSignal, State, SwimmerParams, Trajectory};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TRAJECTORY_HEADER: [&str; 7] = ["t", "x", "y", "theta", "alpha", "h_par", "h_perp"];

/// Parses a parameter file. Unknown or missing fields are rejected with the
/// line and column reported by the JSON parser.
pub fn parse_params(text: &str) -> Result<SwimmerParams> {
    let p: SwimmerParams = serde_json::from_str(text).context("malformed parameter file")?;
    Ok(p)
}

pub fn read_params(path: &Path) -> Result<SwimmerParams> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_params(&text).with_context(|| format!("in {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?).with_context(|| format!("writing {}", path.display()))
}

pub fn signal_to_json(sig: &ControlSignal) -> Result<String> {
    to_json(sig)
}

pub fn signal_from_json(text: &str) -> Result<ControlSignal> {
    serde_json::from_str(text).context("malformed control signal")
}

/// One row of the trajectory CSV.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub alpha: f64,
    pub h_par: f64,
    pub h_perp: f64,
}

impl TrajectoryRow {
    pub fn new(t: f64, z: &State, u: &Control) -> Self {
        TrajectoryRow {
            t,
            x: z.x,
            y: z.y,
            theta: z.theta,
            alpha: z.alpha,
            h_par: u.h_par,
            h_perp: u.h_perp,
        }
    }

    pub fn state(&self) -> State {
        State {
            x: self.x,
            y: self.y,
            theta: self.theta,
            alpha: self.alpha,
        }
    }
}

pub fn trajectory_rows(tr: &Trajectory) -> Vec<TrajectoryRow> {
    tr.times
        .iter()
        .zip(&tr.states)
        .zip(tr.controls())
        .map(|((&t, z), u)| TrajectoryRow::new(t, z, &u))
        .collect()
}

pub fn write_rows<W: Write>(out: W, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(TRAJECTORY_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<TrajectoryRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    anyhow::ensure!(
        header == TRAJECTORY_HEADER,
        "unexpected trajectory header {:?}, expected {:?}",
        header,
        TRAJECTORY_HEADER
    );
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

pub fn write_trajectory_csv(path: &Path, tr: &Trajectory) -> Result<()> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_rows(std::io::BufWriter::new(f), &trajectory_rows(tr))
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TrajectoryRow>> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_rows(std::io::BufReader::new(f))
}

/// Hex SHA-256 of the JSON encoding of `value`; ties a report to its inputs.
pub fn inputs_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Parses `x,y,theta,alpha`.
pub fn parse_state(s: &str) -> std::result::Result<State, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [x, y, theta, alpha] => Ok(State::new(x, y, theta, alpha)),
        _ => Err(format!("expected 4 comma-separated numbers, got {}", v.len())),
    }
}
