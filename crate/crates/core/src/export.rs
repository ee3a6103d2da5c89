//! CSV frames, audit tables and the checksummed run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::madelung::{ExchangeReport, FrameAnalysis};
use crate::state::velocity_fields;
use crate::streamlines::Streamline;

pub const FRAME_COLUMNS: [&str; 15] =
    ["x", "rho", "S", "v_a", "v_s", "k_a", "k_s", "k_c", "q", "q_r", "u", "k_q", "e", "qr_current", "node_flag"];

/// Written in place of phase-derived values on nodes.
pub const NODE_TOKEN: &str = "NODE";

pub fn frame_file_name(index: usize) -> String {
    format!("frames_{index:04}.csv")
}

fn push_value(line: &mut String, name: &str, x: f64, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::Numeric(format!("non-finite {name} = {v} at x = {x}")));
    }
    // Adding +0.0 folds −0.0 into 0.0.
    write!(line, ",{:.16e}", v + 0.0).expect("write to string");
    Ok(())
}

/// One row per storage slot, so a potential discontinuity appears twice:
/// left limit first, then right limit.
pub fn frame_csv(frame: &FrameAnalysis, exchange: &ExchangeReport) -> Result<String> {
    let e = &frame.eikonal;
    let en = &frame.energies;
    let vel = velocity_fields(e);
    let grid = e.rho.grid();
    let mut out = String::with_capacity(grid.storage_len() * 15 * 24);
    out.push_str(&FRAME_COLUMNS.join(","));
    out.push('\n');
    for (slot, &k) in grid.storage_points().iter().enumerate() {
        let x = grid.x(k);
        let node = e.node_mask[slot];
        write!(out, "{x:.16e}").expect("write to string");
        push_value(&mut out, "rho", x, e.rho.values()[slot])?;
        for (name, f) in [("S", &e.s), ("v_a", &vel.v_a), ("v_s", &vel.v_s)] {
            if node {
                out.push(',');
                out.push_str(NODE_TOKEN);
            } else {
                push_value(&mut out, name, x, f.values()[slot])?;
            }
        }
        for (name, f) in [
            ("k_a", &en.k_a),
            ("k_s", &en.k_s),
            ("k_c", &en.k_c),
            ("q", &en.q),
            ("q_r", &en.q_r),
            ("u", &en.u),
            ("k_q", &en.k_q),
            ("e", &en.e),
            ("qr_current", &exchange.qrvr_current),
        ] {
            push_value(&mut out, name, x, f.values()[slot])?;
        }
        writeln!(out, ",{}", node as u8).expect("write to string");
    }
    Ok(out)
}

/// `t,x,seed_index,status`, one row per sample.
pub fn streamlines_csv(lines: &[Streamline]) -> Result<String> {
    let mut out = String::from("t,x,seed_index,status\n");
    for (i, line) in lines.iter().enumerate() {
        for &(t, x) in &line.samples {
            if !(t.is_finite() && x.is_finite()) {
                return Err(Error::Numeric(format!("non-finite streamline sample for seed {i}")));
            }
            writeln!(out, "{t:.16e},{x:.16e},{i},{}", line.status.as_str()).expect("write to string");
        }
    }
    Ok(out)
}

/// Name, size and SHA-256 of an output file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Writes `contents` to `dir/name` and returns its record.
pub fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<FileRecord> {
    fs::write(dir.join(name), contents)?;
    Ok(FileRecord { name: name.to_string(), bytes: contents.len() as u64, sha256: sha256_hex(contents) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub points: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub discontinuities: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeRecord {
    pub t_start: f64,
    pub t_end: f64,
    pub frames: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicsRecord {
    pub basis: String,
    pub basis_states: usize,
    pub projection_residual: f64,
    pub energy: f64,
    /// The lowest two basis energies.
    pub e1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barrier_half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barrier_height: Option<f64>,
    pub current_mode: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamlineRecord {
    pub seeds: usize,
    pub complete: usize,
    pub crossings: usize,
    pub max_relative_mass_drift: f64,
    pub time_step: f64,
}

/// Everything needed to reproduce and verify a run. Deliberately free of
/// timestamps and host details so identical runs produce identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub scenario: String,
    pub units: String,
    pub grid: GridRecord,
    pub time: TimeRecord,
    pub physics: PhysicsRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub streamlines: Option<StreamlineRecord>,
    pub files: Vec<FileRecord>,
}

pub const MANIFEST_NAME: &str = "manifest.toml";

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Numeric(format!("cannot serialize manifest: {e}")))?;
        fs::write(dir.join(MANIFEST_NAME), text)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_NAME);
        let text = fs::read_to_string(&path)?;
        toml::from_str(&text).map_err(|e| Error::Parse { path: path.display().to_string(), message: e.to_string() })
    }

    /// Re-hashes every listed file; returns the names that no longer match.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for f in &self.files {
            let data = fs::read(dir.join(&f.name))?;
            if sha256_hex(&data) != f.sha256 {
                bad.push(f.name.clone());
            }
        }
        Ok(bad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::madelung::{CurrentMode, CurrentVariant};
    use crate::spectral::{evolve_frame, solve_fd_eigens, PotentialSpec};
    use crate::streamlines::StreamlineStatus;
    use num_complex::Complex64;

    #[test]
    fn sha256_of_a_known_string() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(frame_file_name(7), "frames_0007.csv");
    }

    #[test]
    fn frame_rows_follow_storage_and_mark_nodes() {
        let p = PotentialSpec::double_well(1.0, 0.25, 15.0);
        let g = p.grid(65).unwrap();
        let b = solve_fd_eigens(&p, &g, 2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let fr = evolve_frame(&b, &[Complex64::new(s, 0.0), Complex64::new(s, 0.0)], 0.3).unwrap();
        let f = FrameAnalysis::new(&fr, &p.sample(&g)).unwrap();
        let csv = frame_csv(&f, &f.exchange(CurrentVariant::QR, CurrentMode::Derived)).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], FRAME_COLUMNS.join(","));
        assert_eq!(lines.len(), 1 + g.storage_len());
        let wall: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(wall.len(), FRAME_COLUMNS.len());
        assert_eq!(&wall[2..5], &[NODE_TOKEN; 3]);
        assert_eq!(wall[14], "1");
        let (l, r) = g.slots(g.discontinuities()[0]);
        assert_eq!(lines[1 + l].split(',').next(), lines[1 + r].split(',').next());
        assert_ne!(lines[1 + l].split(',').nth(10), lines[1 + r].split(',').nth(10));
        assert!(!csv.contains("-0.0000000000000000e0"));
    }

    #[test]
    fn non_finite_streamline_samples_are_refused() {
        let ok = Streamline { seed_x: 0.0, samples: vec![(0.0, 0.5)], status: StreamlineStatus::Complete };
        assert_eq!(streamlines_csv(&[ok]).unwrap().lines().nth(1).unwrap().split(',').nth(3), Some("complete"));
        let bad = Streamline { seed_x: 0.0, samples: vec![(0.0, f64::NAN)], status: StreamlineStatus::Complete };
        assert!(matches!(streamlines_csv(&[bad]), Err(Error::Numeric(_))));
    }

    #[test]
    fn manifest_round_trips_and_detects_edits() {
        let dir = tempfile::tempdir().unwrap();
        let rec = write_file(dir.path(), "a.csv", b"x\n1\n").unwrap();
        assert_eq!(rec.bytes, 4);
        let m = RunManifest {
            tool: "madelung".into(),
            tool_version: "0".into(),
            command: "run".into(),
            scenario: "test".into(),
            units: "hbar = m = 1".into(),
            grid: GridRecord { points: 3, x_min: 0.0, x_max: 1.0, dx: 0.5, discontinuities: vec![] },
            time: TimeRecord { t_start: 0.0, t_end: 1.0, frames: 1, period: None },
            physics: PhysicsRecord {
                basis: "finite_difference".into(),
                basis_states: 1,
                projection_residual: 0.0,
                energy: 1.0,
                e1: 1.0,
                e2: None,
                barrier_half_width: None,
                barrier_height: None,
                current_mode: "derived".into(),
            },
            streamlines: None,
            files: vec![rec],
        };
        m.write(dir.path()).unwrap();
        assert_eq!(RunManifest::load(dir.path()).unwrap(), m);
        assert!(m.verify(dir.path()).unwrap().is_empty());
        std::fs::write(dir.path().join("a.csv"), b"x\n2\n").unwrap();
        assert_eq!(m.verify(dir.path()).unwrap(), vec!["a.csv".to_string()]);
    }
}
