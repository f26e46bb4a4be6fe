//! Run records, probes and the bit-exact snapshot format.
//!
//! Snapshot layout (little-endian): magic "FRLB", u32 version, u32 nx,
//! u32 ny, f64 h, 2 x f64 origin, f64 t, u32 species count, then one
//! row-major f64 body per species (u first, then v).

use super::{SolverError, StatePair};
use crate::domain::{DomainMask, GridGeom};
use crate::params::KineticParams;
use std::borrow::Cow;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"FRLB";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

pub fn write_snapshot(path: &Path, geom: &GridGeom, snap: &Snapshot) -> Result<(), SolverError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(SNAPSHOT_MAGIC)?;
    f.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    f.write_all(&(geom.nx as u32).to_le_bytes())?;
    f.write_all(&(geom.ny as u32).to_le_bytes())?;
    f.write_all(&geom.h.to_le_bytes())?;
    f.write_all(&geom.origin[0].to_le_bytes())?;
    f.write_all(&geom.origin[1].to_le_bytes())?;
    f.write_all(&snap.t.to_le_bytes())?;
    f.write_all(&2u32.to_le_bytes())?;
    for field in [&snap.u, &snap.v] {
        for value in field.iter() {
            f.write_all(&value.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(GridGeom, Snapshot), SolverError> {
    let corrupt = |reason: &str| SolverError::CorruptSnapshot {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    f.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(corrupt(&format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut f)?;
    if version != SNAPSHOT_VERSION {
        return Err(corrupt(&format!("unsupported version {version}")));
    }
    let nx = read_u32(&mut f)? as usize;
    let ny = read_u32(&mut f)? as usize;
    let h = read_f64(&mut f)?;
    let ox = read_f64(&mut f)?;
    let oy = read_f64(&mut f)?;
    let t = read_f64(&mut f)?;
    let species = read_u32(&mut f)?;
    if species != 2 {
        return Err(corrupt(&format!("expected 2 species, got {species}")));
    }
    let n = nx * ny;
    let mut read_field = || -> Result<Vec<f64>, SolverError> {
        let mut buf = vec![0u8; n * 8];
        f.read_exact(&mut buf)?;
        Ok(buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    };
    let u = read_field()?;
    let v = read_field()?;
    Ok((
        GridGeom {
            nx,
            ny,
            h,
            origin: [ox, oy],
        },
        Snapshot { t, u, v },
    ))
}

fn read_u32(f: &mut impl Read) -> Result<u32, SolverError> {
    let mut b = [0u8; 4];
    f.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(f: &mut impl Read) -> Result<f64, SolverError> {
    let mut b = [0u8; 8];
    f.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// A scalar sampled from the state at every cadence point.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Probe {
    PointU { ix: usize, iy: usize },
    PointV { ix: usize, iy: usize },
    /// Largest x where u crosses `theta` along grid row `iy`, linearly
    /// interpolated; NaN while no crossing exists.
    FrontX { iy: usize, theta: f64 },
    MinU,
    MaxU,
    /// Sum of u over inside cells times the cell area.
    MassU,
}

impl Probe {
    fn evaluate(&self, mask: &DomainMask, u: &[f64], v: &[f64]) -> f64 {
        let g = mask.geom();
        match *self {
            Probe::PointU { ix, iy } => u[g.idx(ix, iy)],
            Probe::PointV { ix, iy } => v[g.idx(ix, iy)],
            Probe::FrontX { iy, theta } => {
                let mut prev: Option<(f64, f64)> = None;
                let mut best = f64::NAN;
                for ix in 0..g.nx {
                    if !mask.is_inside(ix, iy) {
                        prev = None;
                        continue;
                    }
                    let (x, _) = g.cell_center(ix, iy);
                    let val = u[g.idx(ix, iy)];
                    if let Some((px, pv)) = prev {
                        if (pv >= theta) != (val >= theta) {
                            let frac = (theta - pv) / (val - pv);
                            best = px + frac * (x - px);
                        }
                    } else if val >= theta {
                        best = x;
                    }
                    prev = Some((x, val));
                }
                best
            }
            Probe::MinU => {
                let mut m = f64::INFINITY;
                for i in 0..u.len() {
                    if mask.inside_flags()[i] {
                        m = m.min(u[i]);
                    }
                }
                m
            }
            Probe::MaxU => {
                let mut m = f64::NEG_INFINITY;
                for i in 0..u.len() {
                    if mask.inside_flags()[i] {
                        m = m.max(u[i]);
                    }
                }
                m
            }
            Probe::MassU => {
                let a = g.h * g.h;
                let mut s = 0.0;
                for i in 0..u.len() {
                    if mask.inside_flags()[i] {
                        s += u[i];
                    }
                }
                s * a
            }
        }
    }
}

/// Probe samples as (t, probe_id, value) rows in deterministic order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProbeSeries {
    pub rows: Vec<(f64, u32, f64)>,
}

impl ProbeSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,probe_id,value\n");
        for (t, id, value) in &self.rows {
            out.push_str(&format!("{t},{id},{value}\n"));
        }
        out
    }

    /// Values of one probe over time.
    pub fn series(&self, probe_id: u32) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|(_, id, _)| *id == probe_id)
            .map(|(t, _, v)| (*t, *v))
            .collect()
    }
}

/// Where a run keeps its snapshots.
#[derive(Debug, Clone)]
pub enum SnapshotStore {
    Memory(Vec<Snapshot>),
    Disk { files: Vec<PathBuf> },
    None,
}

/// Everything one evolution produced: snapshot access, probe series, and
/// the run-health flags (bound excursions, edge contact).
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub geom: GridGeom,
    pub params: KineticParams,
    pub config: super::SolverConfig,
    pub dt: f64,
    pub probes: Vec<Probe>,
    pub probe_series: ProbeSeries,
    pub times: Vec<f64>,
    pub store: SnapshotStore,
    /// Largest [0,1] excursion seen during the run (always within the
    /// bound tolerance, or the run would have errored).
    pub max_excursion: f64,
    /// First time activity reached the edge-guard band, if ever.
    pub edge_contact: Option<f64>,
    pub final_state: Option<StatePair>,
}

impl RunRecord {
    pub(super) fn new(
        geom: GridGeom,
        params: KineticParams,
        config: super::SolverConfig,
        dt: f64,
        probes: &[Probe],
    ) -> Self {
        let store = if config.store_snapshots {
            SnapshotStore::Memory(Vec::new())
        } else {
            SnapshotStore::None
        };
        RunRecord {
            geom,
            params,
            config,
            dt,
            probes: probes.to_vec(),
            probe_series: ProbeSeries::default(),
            times: Vec::new(),
            store,
            max_excursion: 0.0,
            edge_contact: None,
            final_state: None,
        }
    }

    pub(super) fn observe(
        &mut self,
        mask: &DomainMask,
        u: &[f64],
        v: &[f64],
        t: f64,
        border_band: &[usize],
        edge_epsilon: f64,
    ) {
        for (id, probe) in self.probes.iter().enumerate() {
            let value = probe.evaluate(mask, u, v);
            self.probe_series.rows.push((t, id as u32, value));
        }
        if self.edge_contact.is_none() {
            for &i in border_band {
                if u[i] + (1.0 - v[i]) >= edge_epsilon {
                    self.edge_contact = Some(t);
                    break;
                }
            }
        }
        self.times.push(t);
        if let SnapshotStore::Memory(snaps) = &mut self.store {
            snaps.push(Snapshot {
                t,
                u: u.to_vec(),
                v: v.to_vec(),
            });
        }
    }

    pub fn snapshot_count(&self) -> usize {
        self.times.len()
    }

    pub fn snapshot(&self, i: usize) -> Result<Cow<'_, Snapshot>, SolverError> {
        match &self.store {
            SnapshotStore::Memory(snaps) => Ok(Cow::Borrowed(&snaps[i])),
            SnapshotStore::Disk { files } => {
                let (_, snap) = read_snapshot(&files[i])?;
                Ok(Cow::Owned(snap))
            }
            SnapshotStore::None => Err(SolverError::CorruptSnapshot {
                path: "<memory>".to_string(),
                reason: "run was configured without snapshot storage".to_string(),
            }),
        }
    }

    /// Persist all in-memory snapshots to `dir` and switch the store to
    /// disk-backed. File names are snap_NNNNN.frlb.
    pub fn persist_snapshots(&mut self, dir: &Path) -> Result<Vec<PathBuf>, SolverError> {
        std::fs::create_dir_all(dir)?;
        let snaps = match &self.store {
            SnapshotStore::Memory(snaps) => snaps,
            _ => {
                return Err(SolverError::CorruptSnapshot {
                    path: dir.display().to_string(),
                    reason: "only in-memory stores can be persisted".to_string(),
                })
            }
        };
        let mut files = Vec::with_capacity(snaps.len());
        for (i, snap) in snaps.iter().enumerate() {
            let path = dir.join(format!("snap_{i:05}.frlb"));
            write_snapshot(&path, &self.geom, snap)?;
            files.push(path);
        }
        self.store = SnapshotStore::Disk {
            files: files.clone(),
        };
        Ok(files)
    }

    /// Open a run persisted by `persist_snapshots`, lazily loading
    /// snapshots from disk as they are requested.
    pub fn open_disk_run(
        dir: &Path,
        params: KineticParams,
        config: super::SolverConfig,
    ) -> Result<Self, SolverError> {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().map(|e| e == "frlb").unwrap_or(false))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(SolverError::CorruptSnapshot {
                path: dir.display().to_string(),
                reason: "no .frlb snapshots found".to_string(),
            });
        }
        let (geom, first) = read_snapshot(&files[0])?;
        let mut times = vec![first.t];
        for f in &files[1..] {
            let (g2, snap) = read_snapshot(f)?;
            if g2 != geom {
                return Err(SolverError::CorruptSnapshot {
                    path: f.display().to_string(),
                    reason: "grid geometry differs between snapshots".to_string(),
                });
            }
            times.push(snap.t);
        }
        Ok(RunRecord {
            geom,
            params,
            config,
            dt: 0.0,
            probes: Vec::new(),
            probe_series: ProbeSeries::default(),
            times,
            store: SnapshotStore::Disk { files },
            max_excursion: 0.0,
            edge_contact: None,
            final_state: None,
        })
    }
}
