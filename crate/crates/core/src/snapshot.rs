//! Text snapshots and PPM heatmaps of nodal fields.
//!
//! Snapshot layout:
//!
//! ```text
//! # nx=3 ny=2 dx=0.5 dy=0.5 x0=0 y0=0 time=0.25 field=Ez
//! 0 0 0
//! 0 0 0
//! ```
//!
//! Line `k + 2` holds row `j = k`; values carry 17 significant digits so a
//! read restores the written `f64` exactly.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField};

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub x0: f64,
    pub y0: f64,
    pub time: f64,
    pub field: String,
}

impl SnapshotHeader {
    pub fn for_field(field: &ScalarField, time: f64, name: &str) -> Self {
        let g = field.grid();
        SnapshotHeader {
            nx: g.nx,
            ny: g.ny,
            dx: g.dx,
            dy: g.dy,
            x0: g.x0,
            y0: g.y0,
            time,
            field: name.to_string(),
        }
    }

    pub fn grid(&self) -> Result<Grid2D> {
        Grid2D::new(self.x0, self.y0, self.dx, self.dy, self.nx, self.ny)
    }

    fn render(&self) -> String {
        format!(
            "# nx={} ny={} dx={:?} dy={:?} x0={:?} y0={:?} time={:?} field={}",
            self.nx, self.ny, self.dx, self.dy, self.x0, self.y0, self.time, self.field
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let bad = |reason: String| Error::Snapshot { line: 1, reason };
        let body = line
            .strip_prefix('#')
            .ok_or_else(|| bad("header must start with '#'".into()))?;
        let mut h = SnapshotHeader {
            nx: 0,
            ny: 0,
            dx: 0.0,
            dy: 0.0,
            x0: 0.0,
            y0: 0.0,
            time: 0.0,
            field: String::new(),
        };
        let mut seen = 0u8;
        for tok in body.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{tok}`")))?;
            let num = || v.parse::<f64>().map_err(|_| bad(format!("bad number for {k}: `{v}`")));
            let int = || v.parse::<usize>().map_err(|_| bad(format!("bad count for {k}: `{v}`")));
            let bit = match k {
                "nx" => {
                    h.nx = int()?;
                    0
                }
                "ny" => {
                    h.ny = int()?;
                    1
                }
                "dx" => {
                    h.dx = num()?;
                    2
                }
                "dy" => {
                    h.dy = num()?;
                    3
                }
                "x0" => {
                    h.x0 = num()?;
                    4
                }
                "y0" => {
                    h.y0 = num()?;
                    5
                }
                "time" => {
                    h.time = num()?;
                    6
                }
                "field" => {
                    h.field = v.to_string();
                    7
                }
                _ => return Err(bad(format!("unknown header key `{k}`"))),
            };
            seen |= 1 << bit;
        }
        if seen != 0xff {
            return Err(bad("header is missing fields (need nx ny dx dy x0 y0 time field)".into()));
        }
        Ok(h)
    }
}

/// Formats with 17 significant digits, trimming redundant zeros.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let s = format!("{v:.16e}");
    let (mant, exp) = s.split_once('e').expect("exponent form");
    let mant = mant.trim_end_matches('0').trim_end_matches('.');
    if exp == "0" {
        mant.to_string()
    } else {
        format!("{mant}e{exp}")
    }
}

pub fn write_snapshot(field: &ScalarField, header: &SnapshotHeader, path: &Path) -> Result<()> {
    let g = field.grid();
    if header.nx != g.nx || header.ny != g.ny {
        return Err(Error::Snapshot {
            line: 1,
            reason: format!("header {}x{} does not match field {}x{}", header.nx, header.ny, g.nx, g.ny),
        });
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", header.render())?;
    for row in field.values().chunks(g.nx) {
        let line: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, ScalarField)> {
    parse_snapshot(&fs::read_to_string(path)?)
}

pub fn parse_snapshot(text: &str) -> Result<(SnapshotHeader, ScalarField)> {
    let mut lines = text.lines();
    let header = SnapshotHeader::parse(lines.next().unwrap_or(""))?;
    let grid = header.grid().map_err(|e| Error::Snapshot {
        line: 1,
        reason: e.to_string(),
    })?;
    let mut values = Vec::with_capacity(grid.len());
    for j in 0..header.ny {
        let line_no = j + 2;
        let line = lines.next().ok_or_else(|| Error::Snapshot {
            line: line_no,
            reason: format!("expected {} rows, file ends after {j}", header.ny),
        })?;
        let before = values.len();
        for tok in line.split_whitespace() {
            values.push(tok.parse::<f64>().map_err(|_| Error::Snapshot {
                line: line_no,
                reason: format!("bad value `{tok}`"),
            })?);
        }
        if values.len() - before != header.nx {
            return Err(Error::Snapshot {
                line: line_no,
                reason: format!("expected {} values, found {}", header.nx, values.len() - before),
            });
        }
    }
    if let Some((k, _)) = lines.enumerate().find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::Snapshot {
            line: header.ny + 2 + k,
            reason: "trailing data after the last row".into(),
        });
    }
    Ok((header, ScalarField::from_values(grid, values)?))
}

/// Blue-white-red map on `[lo, hi]`; values outside are clamped.
pub fn colormap(v: f64, lo: f64, hi: f64) -> [u8; 3] {
    let s = if v.is_nan() { 0.5 } else { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) };
    let ramp = |f: f64| (255.0 * f).round() as u8;
    if s <= 0.5 {
        let f = s / 0.5;
        [ramp(f), ramp(f), 255]
    } else {
        let f = (1.0 - s) / 0.5;
        [255, ramp(f), ramp(f)]
    }
}

/// Binary PPM with one pixel per node; row `j = 0` is the bottom line.
pub fn write_heatmap(field: &ScalarField, path: &Path, range: (f64, f64)) -> Result<()> {
    let (lo, hi) = range;
    if !(lo < hi) {
        return Err(Error::param("heatmap range", format!("need lo < hi, got ({lo}, {hi})")));
    }
    let g = field.grid();
    let mut out = Vec::with_capacity(32 + 3 * g.len());
    write!(out, "P6\n{} {}\n255\n", g.nx, g.ny)?;
    for row in field.values().chunks(g.nx).rev() {
        for &v in row {
            out.extend_from_slice(&colormap(v, lo, hi));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Symmetric range around zero covering the field, or `(-1, 1)` for a zero field.
pub fn auto_range(field: &ScalarField) -> (f64, f64) {
    let m = field.max_abs();
    if m > 0.0 && m.is_finite() {
        (-m, m)
    } else {
        (-1.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(nx: usize, ny: usize) -> Grid2D {
        Grid2D::new(0.0, 0.0, 0.5, 0.5, nx, ny).unwrap()
    }

    #[test]
    fn zero_field_text() {
        let f = ScalarField::zeros(grid(2, 2));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.txt");
        write_snapshot(&f, &SnapshotHeader::for_field(&f, 0.0, "Ez"), &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with('#'));
        assert_eq!(&lines[1..], ["0 0", "0 0"]);
    }

    #[test]
    fn round_trip_is_exact() {
        let g = grid(5, 5);
        let f = ScalarField::from_fn(g, |x, y| (x * 7.3).sin() * 1e-9 + y.exp() / 3.0);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.txt");
        let h = SnapshotHeader::for_field(&f, 1.0 / 3.0, "Hy");
        write_snapshot(&f, &h, &p).unwrap();
        let (h2, f2) = read_snapshot(&p).unwrap();
        assert_eq!(h, h2);
        assert_eq!(f.values(), f2.values());
    }

    #[test]
    fn count_mismatch_reports_line() {
        let text = "# nx=5 ny=5 dx=0.5 dy=0.5 x0=0 y0=0 time=0 field=Ez\n\
                    0 0 0 0 0\n0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n";
        match parse_snapshot(text) {
            Err(Error::Snapshot { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_snapshot("nx=5"), Err(Error::Snapshot { line: 1, .. })));
    }

    #[test]
    fn heatmap_payload() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.ppm");
        let g = Grid2D::new(0.0, 0.0, 1.0, 1.0, 5, 5).unwrap();
        write_heatmap(&ScalarField::constant(g, 0.0), &p, (-1.0, 1.0)).unwrap();
        let bytes = fs::read(&p).unwrap();
        let header = b"P6\n5 5\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len() - header.len(), 75);
        assert!(bytes[header.len()..].iter().all(|&b| b == 255));

        write_heatmap(&ScalarField::constant(g, -3.0), &p, (-1.0, 1.0)).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert!(bytes[header.len()..].chunks(3).all(|c| c == [0, 0, 255]));
        assert!(write_heatmap(&ScalarField::constant(g, 0.0), &p, (1.0, 1.0)).is_err());
    }

    #[test]
    fn bottom_row_written_last() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.ppm");
        let g = Grid2D::new(0.0, 0.0, 1.0, 1.0, 5, 5).unwrap();
        let f = ScalarField::from_fn(g, |_, y| if y == 0.0 { 1.0 } else { -1.0 });
        write_heatmap(&f, &p, (-1.0, 1.0)).unwrap();
        let bytes = fs::read(&p).unwrap();
        let n = bytes.len();
        assert_eq!(&bytes[n - 3..], [255, 0, 0]);
        assert_eq!(&bytes[n - 18..n - 15], [0, 0, 255]);
    }

    #[test]
    fn value_formatting() {
        assert_eq!(format_value(0.0), "0");
        assert_eq!(format_value(1.0), "1");
        assert_eq!(format_value(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(format_value(-2.5e-300).parse::<f64>().unwrap(), -2.5e-300);
    }
}
