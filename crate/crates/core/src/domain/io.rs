//! Mask persistence: a portable bitmap-style text format and a binary
//! variant, with the analytic descriptor JSON written alongside.
//!
//! Text layout:
//! ```text
//! nx ny h origin_x origin_y
//! 0110...   (ny rows of nx characters, row 0 first)
//! ```
//! Binary layout: magic "FRMK", u32 version, u32 nx, u32 ny, f64 h,
//! 2 x f64 origin, then nx*ny bytes of 0/1, row-major, little-endian.

use super::{DomainError, DomainMask, GridGeom, MaskDescriptor};
use std::io::{Read, Write};
use std::path::Path;

const MASK_MAGIC: &[u8; 4] = b"FRMK";
const MASK_VERSION: u32 = 1;

pub fn write_mask_text(mask: &DomainMask, path: &Path) -> Result<(), DomainError> {
    let g = mask.geom();
    let mut out = String::with_capacity(g.n_cells() + g.ny + 64);
    out.push_str(&format!(
        "{} {} {} {} {}\n",
        g.nx, g.ny, g.h, g.origin[0], g.origin[1]
    ));
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            out.push(if mask.is_inside(ix, iy) { '1' } else { '0' });
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    write_descriptor(mask, path)?;
    Ok(())
}

pub fn read_mask_text(path: &Path) -> Result<DomainMask, DomainError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| DomainError::Malformed("missing header line".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(DomainError::Malformed(format!(
            "header must have 5 fields, got {}",
            fields.len()
        )));
    }
    let nx: usize = parse(fields[0], "nx")?;
    let ny: usize = parse(fields[1], "ny")?;
    let h: f64 = parse(fields[2], "h")?;
    let ox: f64 = parse(fields[3], "origin_x")?;
    let oy: f64 = parse(fields[4], "origin_y")?;
    let geom = GridGeom {
        nx,
        ny,
        h,
        origin: [ox, oy],
    };
    let mut inside = vec![false; geom.n_cells()];
    for iy in 0..ny {
        let row = lines
            .next()
            .ok_or_else(|| DomainError::Malformed(format!("missing row {iy}")))?;
        if row.len() != nx {
            return Err(DomainError::Malformed(format!(
                "row {iy} has {} cells, expected {nx}",
                row.len()
            )));
        }
        for (ix, ch) in row.chars().enumerate() {
            inside[geom.idx(ix, iy)] = match ch {
                '1' => true,
                '0' => false,
                other => {
                    return Err(DomainError::Malformed(format!(
                        "unexpected cell character {other:?}"
                    )))
                }
            };
        }
    }
    DomainMask::from_flags(geom, read_descriptor(path), inside)
}

pub fn write_mask_binary(mask: &DomainMask, path: &Path) -> Result<(), DomainError> {
    let g = mask.geom();
    let mut f = std::fs::File::create(path)?;
    f.write_all(MASK_MAGIC)?;
    f.write_all(&MASK_VERSION.to_le_bytes())?;
    f.write_all(&(g.nx as u32).to_le_bytes())?;
    f.write_all(&(g.ny as u32).to_le_bytes())?;
    f.write_all(&g.h.to_le_bytes())?;
    f.write_all(&g.origin[0].to_le_bytes())?;
    f.write_all(&g.origin[1].to_le_bytes())?;
    let body: Vec<u8> = mask
        .inside_flags()
        .iter()
        .map(|b| if *b { 1u8 } else { 0u8 })
        .collect();
    f.write_all(&body)?;
    write_descriptor(mask, path)?;
    Ok(())
}

pub fn read_mask_binary(path: &Path) -> Result<DomainMask, DomainError> {
    let mut f = std::fs::File::open(path)?;
    let mut magic = [0u8; 4];
    f.read_exact(&mut magic)?;
    if &magic != MASK_MAGIC {
        return Err(DomainError::Malformed(format!(
            "bad magic {magic:?} in {}",
            path.display()
        )));
    }
    let version = read_u32(&mut f)?;
    if version != MASK_VERSION {
        return Err(DomainError::Malformed(format!(
            "unsupported mask version {version}"
        )));
    }
    let nx = read_u32(&mut f)? as usize;
    let ny = read_u32(&mut f)? as usize;
    let h = read_f64(&mut f)?;
    let ox = read_f64(&mut f)?;
    let oy = read_f64(&mut f)?;
    let geom = GridGeom {
        nx,
        ny,
        h,
        origin: [ox, oy],
    };
    let mut body = vec![0u8; geom.n_cells()];
    f.read_exact(&mut body)?;
    let inside = body.into_iter().map(|b| b != 0).collect();
    DomainMask::from_flags(geom, read_descriptor(path), inside)
}

fn write_descriptor(mask: &DomainMask, mask_path: &Path) -> Result<(), DomainError> {
    let side = mask_path.with_extension("descriptor.json");
    let json = serde_json::to_string_pretty(&mask.descriptor_json())
        .expect("descriptor serializes");
    std::fs::write(side, json)?;
    Ok(())
}

fn read_descriptor(mask_path: &Path) -> MaskDescriptor {
    let side = mask_path.with_extension("descriptor.json");
    std::fs::read_to_string(side)
        .ok()
        .and_then(|text| serde_json::from_str::<serde_json::Value>(&text).ok())
        .and_then(|v| serde_json::from_value(v.get("descriptor")?.clone()).ok())
        .unwrap_or(MaskDescriptor::Custom {
            label: "imported".to_string(),
        })
}

fn parse<T: std::str::FromStr>(s: &str, name: &str) -> Result<T, DomainError> {
    s.parse()
        .map_err(|_| DomainError::Malformed(format!("cannot parse {name} from {s:?}")))
}

fn read_u32(f: &mut impl Read) -> Result<u32, DomainError> {
    let mut b = [0u8; 4];
    f.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(f: &mut impl Read) -> Result<f64, DomainError> {
    let mut b = [0u8; 8];
    f.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_exterior, Extent};

    #[test]
    fn text_and_binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = make_exterior(2.0, &Extent::centered(12.0, 10.0), 0.5).unwrap();

        let tpath = dir.path().join("mask.txt");
        write_mask_text(&m, &tpath).unwrap();
        let mt = read_mask_text(&tpath).unwrap();
        assert_eq!(mt.geom(), m.geom());
        assert_eq!(mt.inside_flags(), m.inside_flags());
        assert_eq!(mt.descriptor(), m.descriptor());

        let bpath = dir.path().join("mask.bin");
        write_mask_binary(&m, &bpath).unwrap();
        let mb = read_mask_binary(&bpath).unwrap();
        assert_eq!(mb.geom(), m.geom());
        assert_eq!(mb.inside_flags(), m.inside_flags());
        assert_eq!(mb.descriptor(), m.descriptor());
    }

    #[test]
    fn binary_rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"NOPE00000000").unwrap();
        assert!(matches!(
            read_mask_binary(&path),
            Err(DomainError::Malformed(_))
        ));
    }
}
