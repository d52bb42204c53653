//! Artifact files: atomic writes, trajectory/particle/scaling CSVs.
//!
//! Floats are printed with Rust's shortest round-trip formatting, so every
//! table reloads bit-for-bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use nlhv_core::dynamics::{RecordManifest, TrajectoryRecord};
use nlhv_core::estimators::{EigenTrajectory, ScalingPoint};
use nlhv_core::matrix::ModelParams;
use serde::{Deserialize, Serialize};

/// Writes `bytes` to a temporary file beside `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    // temp files are created owner-only; artifacts get the usual mode
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(fs::Permissions::from_mode(0o644))?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn bad_data(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

/// Splits a `# {json}` header line off a table.
fn split_header(text: &str) -> io::Result<(&str, &str)> {
    let (first, rest) = text.split_once('\n').ok_or_else(|| bad_data("empty table"))?;
    let json = first
        .strip_prefix("# ")
        .ok_or_else(|| bad_data("missing `# {json}` header line"))?;
    Ok((json, rest))
}

fn parse_f64(s: &str) -> io::Result<f64> {
    s.trim().parse().map_err(|_| bad_data(format!("bad number `{s}`")))
}

fn parse_usize(s: &str) -> io::Result<usize> {
    s.trim().parse().map_err(|_| bad_data(format!("bad integer `{s}`")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub format: String,
    pub record: RecordManifest,
    pub replicas: usize,
}

/// One row per recorded sample: energies, centre-of-mass momentum and the
/// sorted spectrum of every matrix.
pub fn trajectory_csv(records: &[TrajectoryRecord]) -> String {
    let mut out = String::new();
    let Some(first) = records.first() else {
        return out;
    };
    let (d, n) = (first.manifest.params.d, first.manifest.params.n);
    let header = TrajectoryHeader {
        format: "nlhv-trajectory/1".into(),
        record: first.manifest.clone(),
        replicas: records.len(),
    };
    let _ = writeln!(out, "# {}", serde_json::to_string(&header).expect("header serializes"));
    out.push_str("replica,sample,time,kinetic,potential");
    for a in 0..d {
        let _ = write!(out, ",com_{a}");
    }
    for a in 0..d {
        for i in 0..n {
            let _ = write!(out, ",lambda_{a}_{i}");
        }
    }
    out.push('\n');
    for (r, rec) in records.iter().enumerate() {
        for s in 0..rec.len() {
            let (k, u) = rec.energies[s];
            let _ = write!(out, "{r},{s},{},{k},{u}", rec.times[s]);
            for p in &rec.com_momenta[s] {
                let _ = write!(out, ",{p}");
            }
            for row in &rec.spectra[s].lambda {
                for l in row {
                    let _ = write!(out, ",{l}");
                }
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticlesHeader {
    pub format: String,
    pub params: ModelParams,
    /// Bath temperature, absent for isolated runs.
    pub temperature: Option<f64>,
}

/// One row per particle per tracked frame.
pub fn particles_csv(header: &ParticlesHeader, trajectories: &[EigenTrajectory]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}", serde_json::to_string(header).expect("header serializes"));
    let d = trajectories.first().map_or(header.params.d, |t| t.d);
    out.push_str("replica,frame,time,particle,residual");
    for a in 0..d {
        let _ = write!(out, ",x_{a}");
    }
    out.push('\n');
    for t in trajectories {
        for f in 0..t.frames() {
            for i in 0..t.n {
                let _ = write!(out, "{},{f},{},{i},{}", t.replica_id, t.times[f], t.residuals[f]);
                for x in t.position(f, i) {
                    let _ = write!(out, ",{x}");
                }
                out.push('\n');
            }
        }
    }
    out
}

/// Inverse of [`particles_csv`].
pub fn parse_particles(text: &str) -> io::Result<(ParticlesHeader, Vec<EigenTrajectory>)> {
    let (json, body) = split_header(text)?;
    let header: ParticlesHeader = serde_json::from_str(json).map_err(|e| bad_data(e.to_string()))?;
    let mut lines = body.lines();
    let columns: Vec<&str> = lines
        .next()
        .ok_or_else(|| bad_data("missing column row"))?
        .split(',')
        .collect();
    if columns.len() < 6 || columns[..5] != ["replica", "frame", "time", "particle", "residual"] {
        return Err(bad_data("unexpected particle columns"));
    }
    let d = columns.len() - 5;

    // replica -> frame -> (time, residual, particle -> position)
    type Frames = BTreeMap<usize, (f64, f64, BTreeMap<usize, Vec<f64>>)>;
    let mut by_replica: BTreeMap<u64, Frames> = BTreeMap::new();
    for (k, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() {
            return Err(bad_data(format!("row {} has {} cells", k + 1, cells.len())));
        }
        let replica = cells[0].trim().parse::<u64>().map_err(|_| bad_data("bad replica id"))?;
        let frame = parse_usize(cells[1])?;
        let time = parse_f64(cells[2])?;
        let particle = parse_usize(cells[3])?;
        let residual = parse_f64(cells[4])?;
        let x = cells[5..]
            .iter()
            .map(|c| parse_f64(c))
            .collect::<io::Result<Vec<_>>>()?;
        let entry = by_replica
            .entry(replica)
            .or_default()
            .entry(frame)
            .or_insert((time, residual, BTreeMap::new()));
        entry.2.insert(particle, x);
    }
    let mut out = Vec::new();
    for (replica, frames) in by_replica {
        let n = frames.values().next().map_or(0, |f| f.2.len());
        let mut times = Vec::new();
        let mut residuals = Vec::new();
        let mut positions = Vec::new();
        for (time, residual, particles) in frames.values() {
            if particles.len() != n || particles.keys().copied().ne(0..n) {
                return Err(bad_data(format!(
                    "replica {replica}: particle set changes between frames"
                )));
            }
            times.push(*time);
            residuals.push(*residual);
            for x in particles.values() {
                positions.extend_from_slice(x);
            }
        }
        let mut t =
            EigenTrajectory::from_positions(times, n, d, positions, replica).map_err(|e| bad_data(e.to_string()))?;
        t.residuals = residuals;
        out.push(t);
    }
    Ok((header, out))
}

/// Fixed column order of the scaling table.
pub const SCALING_COLUMNS: [&str; 15] = [
    "N",
    "T",
    "t_scaled",
    "nu_hat",
    "nu_stderr",
    "nu_pred",
    "hbar_emergent",
    "ratio",
    "irrotationality",
    "max_residual",
    "replicas",
    "pair_sum",
    "potential_sign",
    "continuity_sign",
    "hbar_definition",
];

pub fn scaling_csv(points: &[ScalingPoint], params: &ModelParams) -> String {
    let mut out = SCALING_COLUMNS.join(",");
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.n,
            p.temperature,
            p.t_scaled,
            p.nu_hat,
            p.nu_stderr,
            p.nu_pred,
            p.hbar_emergent,
            p.ratio(),
            p.irrotationality,
            p.max_residual,
            p.replicas,
            params.pair_sum.as_str(),
            crate::manifest::POTENTIAL_SIGN,
            crate::manifest::CONTINUITY_SIGN,
            crate::manifest::HBAR_DEFINITION,
        );
    }
    out
}

/// Numeric part of a scaling table row, as reloaded from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub temperature: f64,
    pub t_scaled: f64,
    pub nu_hat: f64,
    pub nu_stderr: f64,
    pub nu_pred: f64,
    pub hbar_emergent: f64,
    pub ratio: f64,
    pub irrotationality: f64,
    pub max_residual: f64,
    pub replicas: usize,
    pub flags: [String; 4],
}

pub fn parse_scaling(text: &str) -> io::Result<Vec<ScalingRow>> {
    let mut lines = text.lines();
    let head = lines.next().ok_or_else(|| bad_data("missing header row"))?;
    if head.split(',').ne(SCALING_COLUMNS.iter().copied()) {
        return Err(bad_data("unexpected scaling columns"));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != SCALING_COLUMNS.len() {
                return Err(bad_data("short scaling row"));
            }
            Ok(ScalingRow {
                n: parse_usize(c[0])?,
                temperature: parse_f64(c[1])?,
                t_scaled: parse_f64(c[2])?,
                nu_hat: parse_f64(c[3])?,
                nu_stderr: parse_f64(c[4])?,
                nu_pred: parse_f64(c[5])?,
                hbar_emergent: parse_f64(c[6])?,
                ratio: parse_f64(c[7])?,
                irrotationality: parse_f64(c[8])?,
                max_residual: parse_f64(c[9])?,
                replicas: parse_usize(c[10])?,
                flags: [c[11].into(), c[12].into(), c[13].into(), c[14].into()],
            })
        })
        .collect()
}

/// Reads the header of a trajectory table.
pub fn parse_trajectory_header(text: &str) -> io::Result<TrajectoryHeader> {
    let (json, _) = split_header(text)?;
    serde_json::from_str(json).map_err(|e| bad_data(e.to_string()))
}
