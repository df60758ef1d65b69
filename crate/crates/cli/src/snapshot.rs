//! Field snapshot format.
//!
//! ```text
//! SWARMSIM1\n
//! <role> <dims...>\n        # "rho na ny nx" or "q|p|m ny nx"
//! <spacings...>\n           # "da dx dy" or "dx dy"
//! <row-major f64 little-endian values>
//! ```
//!
//! Values are written verbatim, so a write/read round trip is bit-exact.

use crate::error::CliError;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use swarmsim_core::{AgeGrid, FieldRole, ScalarField, SpaceGrid, SwarmerField};

const MAGIC: &str = "SWARMSIM1";

#[derive(Debug)]
pub enum Snapshot {
    Scalar(ScalarField),
    Swarmer(SwarmerField),
}

fn snap_err(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Snapshot {
        path: path.display().to_string(),
        message: message.into(),
    }
}

pub fn write_scalar(path: &Path, field: &ScalarField) -> Result<(), CliError> {
    let g = field.grid();
    let mut header = String::new();
    header.push_str(MAGIC);
    header.push('\n');
    header.push_str(&format!("{} {} {}\n", field.role().tag(), g.ny, g.nx));
    header.push_str(&format!("{} {}\n", g.dx, g.dy));
    write_file(path, &header, field.values())
}

pub fn write_swarmer(path: &Path, field: &SwarmerField) -> Result<(), CliError> {
    let g = field.space();
    let a = field.age();
    let mut header = String::new();
    header.push_str(MAGIC);
    header.push('\n');
    header.push_str(&format!("rho {} {} {}\n", a.na, g.ny, g.nx));
    header.push_str(&format!("{} {} {}\n", a.da, g.dx, g.dy));
    write_file(path, &header, field.values())
}

fn write_file(path: &Path, header: &str, values: &[f64]) -> Result<(), CliError> {
    let mut buf = Vec::with_capacity(header.len() + values.len() * 8);
    buf.extend_from_slice(header.as_bytes());
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    file.write_all(&buf)
        .map_err(|e| CliError::io(path.display().to_string(), e))
}

/// Read any snapshot; swarmer grids are reconstructed with `a_min = 0`
/// (the activation age is configuration state, not snapshot state).
pub fn read(path: &Path) -> Result<Snapshot, CliError> {
    let mut file = fs::File::open(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)
        .map_err(|e| CliError::io(path.display().to_string(), e))?;

    let mut offset = 0usize;
    let mut next_line = || -> Result<String, CliError> {
        let rest = &bytes[offset.min(bytes.len())..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| snap_err(path, "truncated header"))?;
        let line = std::str::from_utf8(&rest[..end])
            .map_err(|_| snap_err(path, "header is not UTF-8"))?
            .to_string();
        offset += end + 1;
        Ok(line)
    };

    let magic = next_line()?;
    if magic != MAGIC {
        return Err(snap_err(path, format!("bad magic `{magic}`")));
    }
    let dims_line = next_line()?;
    let spacing_line = next_line()?;
    let mut dims = dims_line.split_whitespace();
    let tag = dims.next().ok_or_else(|| snap_err(path, "empty dims line"))?;
    let numbers: Vec<usize> = dims
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| snap_err(path, "non-integer dimension"))?;
    if numbers.iter().any(|&n| n == 0) {
        return Err(snap_err(path, "zero dimension in header"));
    }
    let spacings: Vec<f64> = spacing_line
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| snap_err(path, "bad spacing"))?;

    let payload = &bytes[offset..];
    let read_values = |count: usize| -> Result<Vec<f64>, CliError> {
        if payload.len() != count * 8 {
            return Err(snap_err(
                path,
                format!(
                    "payload holds {} bytes, expected {} for {count} values",
                    payload.len(),
                    count * 8
                ),
            ));
        }
        Ok(payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    };

    match tag {
        "rho" => {
            if numbers.len() != 3 || spacings.len() != 3 {
                return Err(snap_err(path, "swarmer header needs `rho na ny nx` and 3 spacings"));
            }
            let (na, ny, nx) = (numbers[0], numbers[1], numbers[2]);
            let (da, dx, dy) = (spacings[0], spacings[1], spacings[2]);
            let space = SpaceGrid::new(nx, ny, nx as f64 * dx, ny as f64 * dy)
                .map_err(|e| snap_err(path, e.to_string()))?;
            let age = AgeGrid::new(na, da, 0.0).map_err(|e| snap_err(path, e.to_string()))?;
            let values = read_values(na * ny * nx)?;
            let field = SwarmerField::from_values(space, age, values)
                .ok_or_else(|| snap_err(path, "dimension mismatch"))?;
            Ok(Snapshot::Swarmer(field))
        }
        tag => {
            let role = FieldRole::from_tag(tag)
                .ok_or_else(|| snap_err(path, format!("unknown role tag `{tag}`")))?;
            if numbers.len() != 2 || spacings.len() != 2 {
                return Err(snap_err(path, "scalar header needs `<role> ny nx` and 2 spacings"));
            }
            let (ny, nx) = (numbers[0], numbers[1]);
            let (dx, dy) = (spacings[0], spacings[1]);
            let grid = SpaceGrid::new(nx, ny, nx as f64 * dx, ny as f64 * dy)
                .map_err(|e| snap_err(path, e.to_string()))?;
            let values = read_values(ny * nx)?;
            let field = ScalarField::from_values(grid, role, values)
                .ok_or_else(|| snap_err(path, "dimension mismatch"))?;
            Ok(Snapshot::Scalar(field))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SpaceGrid {
        SpaceGrid::new(5, 4, 1.0, 0.5).unwrap()
    }

    #[test]
    fn scalar_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.snap");
        let field = ScalarField::from_fn(grid(), FieldRole::Q, |x, y| {
            (x * 13.7).sin() * y + 1.0 / 3.0
        });
        write_scalar(&path, &field).unwrap();
        let Snapshot::Scalar(back) = read(&path).unwrap() else {
            panic!("wrong kind");
        };
        assert_eq!(back.role(), FieldRole::Q);
        assert_eq!(back.grid(), field.grid());
        for (a, b) in back.values().iter().zip(field.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn swarmer_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rho.snap");
        let age = AgeGrid::new(7, 0.125, 0.0).unwrap();
        let field = SwarmerField::from_fn(grid(), age, |a, x, y| a * x - y / 7.0);
        write_swarmer(&path, &field).unwrap();
        let Snapshot::Swarmer(back) = read(&path).unwrap() else {
            panic!("wrong kind");
        };
        assert_eq!(back.age().na, 7);
        for (a, b) in back.values().iter().zip(field.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.snap");
        std::fs::write(&path, b"NOTMAGIC1\nq 4 5\n0.2 0.125\n").unwrap();
        let err = read(&path).unwrap_err();
        assert!(err.to_string().contains("bad magic"));
    }

    #[test]
    fn empty_dimension_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.snap");
        std::fs::write(&path, b"SWARMSIM1\nq 0 5\n0.2 0.125\n").unwrap();
        let err = read(&path).unwrap_err();
        assert!(err.to_string().contains("zero dimension"));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.snap");
        std::fs::write(&path, b"SWARMSIM1\nq 3 3\n0.5 0.5\n\x00\x00").unwrap();
        let err = read(&path).unwrap_err();
        assert!(err.to_string().contains("payload"));
    }
}
