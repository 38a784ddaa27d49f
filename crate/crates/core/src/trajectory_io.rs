//! Line-delimited JSON trajectory files.
//!
//! ```text
//! {"fps":30.0,"frames":61,"units":"m"}
//! {"t":0.0,"points":[[x,y,z],...]}
//! ...
//! ```
//!
//! The header is followed by exactly `frames` frame records. Ground-truth
//! angles from the simulator go to a separate sidecar file so the
//! trajectory itself only carries what a camera would see.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perception::TrajectoryFrame;
use crate::scalar::Scalar;
use crate::simulator::EpisodeResult;

pub const UNITS: &str = "m";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryHeader {
    pub fps: f64,
    pub frames: usize,
    pub units: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    t: f64,
    points: Vec<[f64; 3]>,
}

/// Sidecar record with the simulator's ground truth, for test tooling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub ground_truth_theta: Vec<f64>,
    pub dropped_at: Option<usize>,
    pub caught: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T: Scalar = f64> {
    pub fps: f64,
    pub frames: Vec<TrajectoryFrame<T>>,
}

impl<T: Scalar> From<&EpisodeResult<T>> for Trajectory<T> {
    fn from(ep: &EpisodeResult<T>) -> Self {
        Self {
            fps: ep.fps.as_f64(),
            frames: ep.trajectory.clone(),
        }
    }
}

fn finite(what: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Contract(format!("refusing to encode non-finite {what}: {v}")))
    }
}

/// Serializes a trajectory. Non-finite numbers are rejected.
pub fn write_trajectory<T: Scalar, W: Write>(traj: &Trajectory<T>, mut out: W) -> Result<()> {
    let header = TrajectoryHeader {
        fps: finite("fps", traj.fps)?,
        frames: traj.frames.len(),
        units: UNITS.to_owned(),
    };
    let mut lines = Vec::with_capacity(traj.frames.len() + 1);
    lines.push(serde_json::to_string(&header).expect("header serializes"));
    for frame in &traj.frames {
        let mut points = Vec::with_capacity(frame.points.len());
        for p in &frame.points {
            points.push([
                finite("coordinate", p.x.as_f64())?,
                finite("coordinate", p.y.as_f64())?,
                finite("coordinate", p.z.as_f64())?,
            ]);
        }
        let record = FrameRecord {
            t: finite("timestamp", frame.t.as_f64())?,
            points,
        };
        lines.push(serde_json::to_string(&record).expect("frame serializes"));
    }
    for line in lines {
        writeln!(out, "{line}").map_err(|e| Error::io("<trajectory stream>", e))?;
    }
    Ok(())
}

pub fn save_trajectory<T: Scalar>(traj: &Trajectory<T>, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_trajectory(traj, &mut out)?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Parses a trajectory; `origin` only labels error messages.
pub fn read_trajectory<T: Scalar, R: BufRead>(input: R, origin: &Path) -> Result<Trajectory<T>> {
    let mut lines = input.lines().enumerate().filter_map(|(i, line)| match line {
        Ok(l) if l.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });

    let (line_no, header_line) = lines
        .next()
        .ok_or_else(|| Error::parse(origin, 1, "missing header record"))?;
    let header_line = header_line.map_err(|e| Error::io(origin, e))?;
    let header: TrajectoryHeader =
        serde_json::from_str(&header_line).map_err(|e| Error::parse(origin, line_no, format!("bad header: {e}")))?;
    if header.units != UNITS {
        return Err(Error::parse(
            origin,
            line_no,
            format!("unsupported units `{}` (expected `{UNITS}`)", header.units),
        ));
    }
    if !(header.fps.is_finite() && header.fps > 0.0) {
        return Err(Error::parse(origin, line_no, "fps must be positive"));
    }

    let mut frames: Vec<TrajectoryFrame<T>> = Vec::with_capacity(header.frames);
    for (line_no, line) in lines {
        let line = line.map_err(|e| Error::io(origin, e))?;
        if frames.len() == header.frames {
            return Err(Error::parse(
                origin,
                line_no,
                format!("more frame records than the {} declared", header.frames),
            ));
        }
        let record: FrameRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(origin, line_no, format!("bad frame record: {e}")))?;
        if !(record.t.is_finite() && record.t >= 0.0) {
            return Err(Error::parse(
                origin,
                line_no,
                "frame time must be finite and non-negative",
            ));
        }
        if let Some(prev) = frames.last() {
            if !(record.t > prev.t.as_f64()) {
                return Err(Error::parse(origin, line_no, "frame times must strictly increase"));
            }
        }
        let points = record
            .points
            .iter()
            .map(|[x, y, z]| Vector3::new(T::of(*x), T::of(*y), T::of(*z)))
            .collect();
        frames.push(TrajectoryFrame {
            t: T::of(record.t),
            points,
        });
    }
    if frames.len() != header.frames {
        return Err(Error::parse(
            origin,
            0,
            format!("header declares {} frames, found {}", header.frames, frames.len()),
        ));
    }
    Ok(Trajectory {
        fps: header.fps,
        frames,
    })
}

pub fn load_trajectory<T: Scalar>(path: &Path) -> Result<Trajectory<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trajectory(BufReader::new(file), path)
}

/// Writes the trajectory plus a `<stem>.truth.json` sidecar next to it.
pub fn export_episode<T: Scalar>(ep: &EpisodeResult<T>, path: &Path) -> Result<()> {
    save_trajectory(&Trajectory::from(ep), path)?;
    let truth = GroundTruthRecord {
        ground_truth_theta: ep.ground_truth_theta.iter().map(|t| t.as_f64()).collect(),
        dropped_at: ep.dropped_at,
        caught: ep.caught,
    };
    let sidecar = sidecar_path(path);
    let text = serde_json::to_string(&truth).expect("truth serializes");
    std::fs::write(&sidecar, text + "\n").map_err(|e| Error::io(&sidecar, e))
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    path.with_extension("truth.json")
}
