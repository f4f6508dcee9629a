//! CSV persistence for trajectories and single-state snapshots.
//!
//! Both formats open with a `#` version line. Snapshots carry the clock and
//! noise seed on a second `#` line so a run can be resumed exactly.

use std::io::{BufRead, BufReader, Read, Write};

use super::{SimState, Trajectory};
use crate::error::{Error, Result};
use crate::num::Real;

pub const TRAJECTORY_HEADER: &str = "# ioncavity-trajectory v1";
pub const SNAPSHOT_HEADER: &str = "# ioncavity-snapshot v1";

const TRAJECTORY_COLUMNS: [&str; 9] = ["time_s", "id", "species", "x_m", "y_m", "z_m", "vx_m_s", "vy_m_s", "vz_m_s"];
const SNAPSHOT_COLUMNS: [&str; 8] = ["id", "species", "x_m", "y_m", "z_m", "vx_m_s", "vy_m_s", "vz_m_s"];

fn fmt<T: Real>(v: T) -> String {
    // shortest round-trip representation
    format!("{:e}", v.as_f64())
}

fn parse<T: Real>(field: &str, line: u64) -> Result<T> {
    field
        .trim()
        .parse::<f64>()
        .map(T::lit)
        .map_err(|e| Error::Parse(format!("line {line}: bad number {field:?}: {e}")))
}

fn parse_index(field: &str, line: u64) -> Result<usize> {
    field
        .trim()
        .parse()
        .map_err(|e| Error::Parse(format!("line {line}: bad index {field:?}: {e}")))
}

fn check_columns(headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse(format!(
            "unexpected columns {:?}, expected {:?}",
            headers.iter().collect::<Vec<_>>(),
            expected
        )));
    }
    Ok(())
}

pub fn write_trajectory<T: Real, W: Write>(traj: &Trajectory<T>, mut out: W) -> Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_COLUMNS)?;
    for (f, &t) in traj.times.iter().enumerate() {
        for (id, (p, v)) in traj.positions[f].iter().zip(&traj.velocities[f]).enumerate() {
            w.write_record([
                fmt(t),
                id.to_string(),
                traj.species[id].to_string(),
                fmt(p[0]),
                fmt(p[1]),
                fmt(p[2]),
                fmt(v[0]),
                fmt(v[1]),
                fmt(v[2]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory<T: Real, R: Read>(input: R) -> Result<Trajectory<T>> {
    let mut input = BufReader::new(input);
    expect_line(&mut input, TRAJECTORY_HEADER)?;
    let mut r = csv::Reader::from_reader(input);
    check_columns(r.headers()?, &TRAJECTORY_COLUMNS)?;
    let mut traj = Trajectory {
        times: Vec::new(),
        positions: Vec::new(),
        velocities: Vec::new(),
        species: Vec::new(),
    };
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() + 1);
        let t: T = parse(&rec[0], line)?;
        let id = parse_index(&rec[1], line)?;
        let sp = parse_index(&rec[2], line)?;
        if id == 0 {
            traj.times.push(t);
            traj.positions.push(Vec::new());
            traj.velocities.push(Vec::new());
        }
        let frame = traj.times.len();
        if frame == 0 || traj.positions[frame - 1].len() != id {
            return Err(Error::Parse(format!("line {line}: ion id {id} out of sequence")));
        }
        if frame == 1 {
            traj.species.push(sp);
        } else if traj.species.get(id) != Some(&sp) {
            return Err(Error::Parse(format!("line {line}: species of ion {id} changed")));
        }
        traj.positions[frame - 1].push([parse(&rec[3], line)?, parse(&rec[4], line)?, parse(&rec[5], line)?]);
        traj.velocities[frame - 1].push([parse(&rec[6], line)?, parse(&rec[7], line)?, parse(&rec[8], line)?]);
    }
    if traj.positions.iter().any(|f| f.len() != traj.species.len()) {
        return Err(Error::Parse("frames have differing ion counts".into()));
    }
    Ok(traj)
}

pub fn write_snapshot<T: Real, W: Write>(state: &SimState<T>, mut out: W) -> Result<()> {
    writeln!(out, "{SNAPSHOT_HEADER}")?;
    writeln!(
        out,
        "# time_s={} step_index={} rng_seed={}",
        fmt(state.time),
        state.step_index,
        state.rng_seed
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SNAPSHOT_COLUMNS)?;
    for (id, ((p, v), s)) in state.positions.iter().zip(&state.velocities).zip(&state.species).enumerate() {
        w.write_record([
            id.to_string(),
            s.to_string(),
            fmt(p[0]),
            fmt(p[1]),
            fmt(p[2]),
            fmt(v[0]),
            fmt(v[1]),
            fmt(v[2]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot<T: Real, R: Read>(input: R) -> Result<SimState<T>> {
    let mut input = BufReader::new(input);
    expect_line(&mut input, SNAPSHOT_HEADER)?;
    let mut meta = String::new();
    input.read_line(&mut meta)?;
    let meta = meta
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("line 2: missing snapshot metadata".into()))?;
    let (mut time, mut step_index, mut rng_seed) = (None, None, None);
    for kv in meta.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line 2: malformed metadata {kv:?}")))?;
        let bad = |e: &dyn std::fmt::Display| Error::Parse(format!("line 2: bad {k}: {e}"));
        match k {
            "time_s" => time = Some(v.parse::<f64>().map_err(|e| bad(&e))?),
            "step_index" => step_index = Some(v.parse::<u64>().map_err(|e| bad(&e))?),
            "rng_seed" => rng_seed = Some(v.parse::<u64>().map_err(|e| bad(&e))?),
            _ => return Err(Error::Parse(format!("line 2: unknown metadata key {k:?}"))),
        }
    }
    let missing = |k: &str| Error::Parse(format!("line 2: missing {k}"));
    let mut r = csv::Reader::from_reader(input);
    check_columns(r.headers()?, &SNAPSHOT_COLUMNS)?;
    let (mut positions, mut velocities, mut species) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() + 2);
        if parse_index(&rec[0], line)? != positions.len() {
            return Err(Error::Parse(format!("line {line}: ion id out of sequence")));
        }
        species.push(parse_index(&rec[1], line)?);
        positions.push([parse(&rec[2], line)?, parse(&rec[3], line)?, parse(&rec[4], line)?]);
        velocities.push([parse(&rec[5], line)?, parse(&rec[6], line)?, parse(&rec[7], line)?]);
    }
    let mut state = SimState::new(positions, velocities, species, rng_seed.ok_or_else(|| missing("rng_seed"))?)?;
    state.time = T::lit(time.ok_or_else(|| missing("time_s"))?);
    state.step_index = step_index.ok_or_else(|| missing("step_index"))?;
    Ok(state)
}

fn expect_line<R: BufRead>(input: &mut R, expected: &str) -> Result<()> {
    let mut first = String::new();
    input.read_line(&mut first)?;
    if first.trim_end() != expected {
        return Err(Error::Parse(format!(
            "line 1: expected {expected:?}, found {:?}",
            first.trim_end()
        )));
    }
    Ok(())
}
