//! Serialization of fields and tables: binary field dumps with a JSON
//! header, 16-bit PGM heatmaps, and CSV traces.

use crate::error::{Error, Result};
use crate::grid::{ComponentField, GridParams, PolarGrid};
use crate::symmetry::{component_shift, PinwheelConfig};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Header of a binary field dump. One JSON line, then row-major 64-bit
/// little-endian floats: the ns pole values followed by the ring values in
/// storage order (radial, angular, s).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DumpHeader {
    pub format: String,
    pub nr: usize,
    pub m: usize,
    pub ns: usize,
    pub r_max: f64,
    pub s_max: f64,
    pub dim: usize,
    pub n: usize,
    pub ell: usize,
    pub p: f64,
    pub beta: f64,
    pub endianness: String,
}

impl DumpHeader {
    pub fn new(field: &ComponentField, config: &PinwheelConfig) -> Self {
        let g = field.grid();
        Self {
            format: "polar-field/1".into(),
            nr: g.nr,
            m: g.m,
            ns: g.ns,
            r_max: g.r_max,
            s_max: g.s_max,
            dim: g.dim,
            n: g.n,
            ell: config.ell,
            p: config.p,
            beta: config.beta,
            endianness: "little".into(),
        }
    }
}

pub fn write_field_dump(path: &Path, field: &ComponentField, config: &PinwheelConfig) -> Result<()> {
    let header = DumpHeader::new(field, config);
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    let (pole, vals) = field.raw();
    for v in pole.iter().chain(vals.iter()) {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_dump(path: &Path) -> Result<(ComponentField, DumpHeader)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header_bytes = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let got = r.read(&mut byte)?;
        if got == 0 {
            return Err(Error::Dump("missing header terminator".into()));
        }
        if byte[0] == b'\n' {
            break;
        }
        header_bytes.push(byte[0]);
        if header_bytes.len() > 1 << 16 {
            return Err(Error::Dump("header too long".into()));
        }
    }
    let header: DumpHeader = serde_json::from_slice(&header_bytes)?;
    if header.endianness != "little" {
        return Err(Error::Dump(format!("unsupported endianness {}", header.endianness)));
    }
    let params = if header.dim == 2 {
        GridParams::plane(header.nr, header.m, header.r_max, header.ell.max(1), header.n)
    } else {
        GridParams::cylinder(
            header.nr,
            header.m,
            header.r_max,
            header.ns,
            header.s_max,
            header.dim,
            header.ell.max(1),
            header.n,
        )
    };
    let grid = PolarGrid::build(params)?;
    let count = header.ns + header.nr * header.m * header.ns;
    let mut payload = vec![0u8; count * 8];
    r.read_exact(&mut payload)
        .map_err(|_| Error::Dump(format!("payload shorter than {count} values")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Dump("trailing bytes after payload".into()));
    }
    let mut values = Vec::with_capacity(count);
    for chunk in payload.chunks_exact(8) {
        values.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    let pole = values[..header.ns].to_vec();
    let vals = values[header.ns..].to_vec();
    Ok((ComponentField::from_raw(grid, pole, vals), header))
}

/// Binary PGM (P5), maxval 65535, big-endian samples as the format requires.
pub fn write_pgm_u16(path: &Path, width: usize, height: usize, data: &[u16]) -> Result<()> {
    if data.len() != width * height {
        return Err(Error::Config(format!(
            "pgm data length {} does not match {width}x{height}",
            data.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{width} {height}\n65535\n")?;
    for v in data {
        w.write_all(&v.to_be_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Rasterize component j+1 of the tuple over the square [-r_max, r_max]²
/// (slab s = 0), normalized to the global max of the stored component.
pub fn component_heatmap(
    field: &ComponentField,
    component: usize,
    ell: usize,
    size: usize,
) -> Result<Vec<u16>> {
    let g = field.grid();
    let shift = component_shift(component, g.m, ell)?;
    let rotated = field.shifted(shift);
    let scale = field.max_abs();
    let mut out = vec![0u16; size * size];
    for py in 0..size {
        // Image rows run top-down.
        let y = g.r_max * (1.0 - 2.0 * (py as f64 + 0.5) / size as f64);
        for px in 0..size {
            let x = g.r_max * (2.0 * (px as f64 + 0.5) / size as f64 - 1.0);
            let v = rotated.sample_plane(x, y, 0);
            let t = if scale > 0.0 { (v / scale).clamp(0.0, 1.0) } else { 0.0 };
            out[py * size + px] = (t * 65535.0).round() as u16;
        }
    }
    Ok(out)
}

/// Write a CSV table; every row must have one entry per column.
pub fn write_csv(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        if row.len() != columns.len() {
            return Err(Error::Config("csv row length mismatch".into()));
        }
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::SplitMix64;
    use std::sync::Arc;

    fn grid() -> Arc<PolarGrid> {
        PolarGrid::build(GridParams::plane(16, 12, 6.0, 2, 1)).unwrap()
    }

    #[test]
    fn dump_round_trip_is_bit_exact() {
        let g = grid();
        let mut rng = SplitMix64::new(99);
        let f = ComponentField::random_smooth(&g, &mut rng);
        let cfg = PinwheelConfig::new(2, 1, 2, 2.0, -1.0).unwrap();
        let dir = std::env::temp_dir().join("pinwheel-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.bin");
        write_field_dump(&path, &f, &cfg).unwrap();
        let (back, header) = read_field_dump(&path).unwrap();
        assert_eq!(header.nr, 16);
        assert_eq!(header.beta, -1.0);
        let (p0, v0) = f.raw();
        let (p1, v1) = back.raw();
        assert_eq!(p0.len(), p1.len());
        for (a, b) in p0.iter().zip(p1).chain(v0.iter().zip(v1)) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // Corrupt: unknown header key must fail.
        let bytes = std::fs::read(&path).unwrap();
        let pos = bytes.iter().position(|&b| b == b'\n').unwrap();
        let mut hacked: serde_json::Value = serde_json::from_slice(&bytes[..pos]).unwrap();
        hacked["surprise"] = serde_json::json!(1);
        let mut out = serde_json::to_vec(&hacked).unwrap();
        out.push(b'\n');
        out.extend_from_slice(&bytes[pos + 1..]);
        let bad = dir.join("bad.bin");
        std::fs::write(&bad, out).unwrap();
        assert!(read_field_dump(&bad).is_err());
    }

    #[test]
    fn pgm_has_correct_header_and_size() {
        let g = grid();
        let f = ComponentField::gaussian_bumps(&g, &[[2.0, 0.0]], 0.8, 1.0);
        let dir = std::env::temp_dir().join("pinwheel-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("map.pgm");
        let img = component_heatmap(&f, 0, 2, 32).unwrap();
        write_pgm_u16(&path, 32, 32, &img).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n32 32\n65535\n"));
        assert_eq!(bytes.len(), b"P5\n32 32\n65535\n".len() + 32 * 32 * 2);
        // The bump sits on the +x axis: the right half of the image must be
        // brighter than the left.
        let right: u64 = (0..32).map(|r| img[r * 32 + 24] as u64).sum();
        let left: u64 = (0..32).map(|r| img[r * 32 + 8] as u64).sum();
        assert!(right > left);
    }

    #[test]
    fn csv_writes_rows() {
        let dir = std::env::temp_dir().join("pinwheel-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        write_csv(&path, &["a", "b"], &[vec![1.0, 2.0], vec![3.0, 4.5]]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "a,b");
        assert_eq!(lines.count(), 2);
    }
}
