//! On-disk formats: WIGF field dumps, diagnostics CSV, and P5 heatmaps.
//!
//! WIGF layout (little-endian):
//!
//! | offset | size | content                                   |
//! |-------:|-----:|-------------------------------------------|
//! | 0      | 4    | magic `WIGF`                              |
//! | 4      | 2    | version `u16` = 1                         |
//! | 6      | 4    | `nx` (`u32`)                              |
//! | 10     | 4    | `np` (`u32`)                              |
//! | 14     | 32   | `x_min`, `x_max`, `p_min`, `p_max` (`f64`) |
//! | 46     | 8    | time (`f64`)                              |
//! | 54     | 8·nx·np | values (`f64`), x is the slow index    |

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::diagnostics::RunDiagnostics;
use crate::error::{Error, Result};
use crate::phase_space::{PhaseSpaceGrid, WignerField};

pub const WIGF_MAGIC: &[u8; 4] = b"WIGF";
pub const WIGF_VERSION: u16 = 1;
pub const WIGF_HEADER_LEN: usize = 54;

pub const CSV_HEADER: &str = "time,mean_x,mean_p,var_x,var_p,negativity,mass";

pub fn encode_dump(field: &WignerField) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(WIGF_HEADER_LEN + 8 * grid.len());
    out.extend_from_slice(WIGF_MAGIC);
    out.extend_from_slice(&WIGF_VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.nx() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.np() as u32).to_le_bytes());
    let (x_min, x_max) = grid.x_bounds();
    let (p_min, p_max) = grid.p_bounds();
    for v in [x_min, x_max, p_min, p_max, field.time] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn read_f64(bytes: &[u8], offset: usize) -> f64 {
    f64::from_le_bytes(bytes[offset..offset + 8].try_into().expect("8-byte slice"))
}

fn read_u32(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4-byte slice"))
}

pub fn decode_dump(bytes: &[u8]) -> std::result::Result<WignerField, String> {
    if bytes.len() < WIGF_HEADER_LEN {
        return Err(format!("truncated header ({} bytes)", bytes.len()));
    }
    if &bytes[..4] != WIGF_MAGIC {
        return Err("bad magic, not a WIGF dump".into());
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != WIGF_VERSION {
        return Err(format!("unsupported WIGF version {version}"));
    }
    let nx = read_u32(bytes, 6) as usize;
    let np = read_u32(bytes, 10) as usize;
    let grid = PhaseSpaceGrid::new(
        nx,
        np,
        read_f64(bytes, 14),
        read_f64(bytes, 22),
        read_f64(bytes, 30),
        read_f64(bytes, 38),
    )
    .map_err(|e| e.to_string())?;
    let time = read_f64(bytes, 46);
    let expected = WIGF_HEADER_LEN + 8 * grid.len();
    if bytes.len() != expected {
        return Err(format!("expected {expected} bytes, found {}", bytes.len()));
    }
    let values = bytes[WIGF_HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(WignerField::from_values(grid, values, time).expect("length checked above"))
}

pub fn write_dump(field: &WignerField, path: &Path) -> Result<()> {
    fs::write(path, encode_dump(field)).map_err(|e| Error::io(path, e))
}

pub fn read_dump(path: &Path) -> Result<WignerField> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dump(&bytes).map_err(|reason| Error::Format {
        path: path.to_path_buf(),
        reason,
    })
}

/// Diagnostics as CSV; floats use the shortest representation that parses back exactly.
pub fn diagnostics_csv(diag: &RunDiagnostics) -> String {
    let mut out = String::with_capacity(64 * (diag.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for k in 0..diag.len() {
        let row = [
            diag.times[k],
            diag.mean_x[k],
            diag.mean_p[k],
            diag.var_x[k],
            diag.var_p[k],
            diag.negativity[k],
            diag.mass_series[k],
        ];
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_diagnostics_csv(text: &str) -> std::result::Result<RunDiagnostics, String> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err("unexpected CSV header".into());
    }
    let mut diag = RunDiagnostics::default();
    for (n, line) in lines.enumerate() {
        let cells: Vec<f64> = line
            .split(',')
            .map(|c| c.parse::<f64>().map_err(|e| format!("row {}: {e}", n + 1)))
            .collect::<std::result::Result<_, _>>()?;
        if cells.len() != 7 {
            return Err(format!("row {}: expected 7 columns, found {}", n + 1, cells.len()));
        }
        diag.times.push(cells[0]);
        diag.mean_x.push(cells[1]);
        diag.mean_p.push(cells[2]);
        diag.var_x.push(cells[3]);
        diag.var_p.push(cells[4]);
        diag.negativity.push(cells[5]);
        diag.mass_series.push(cells[6]);
    }
    Ok(diag)
}

fn gray_levels(field: &WignerField) -> (Vec<u8>, f64, f64) {
    let grid = field.grid();
    let (nx, np) = (grid.nx(), grid.np());
    let (lo, hi) = (field.min_value(), field.max_value());
    let range = hi - lo;
    let mut pixels = Vec::with_capacity(grid.len());
    // image rows run from p_max down to p_min; columns follow x
    for j in (0..np).rev() {
        for i in 0..nx {
            let level = if range > 0.0 {
                ((field.at(i, j) - lo) / range * 255.0).round()
            } else {
                128.0
            };
            pixels.push(level.clamp(0.0, 255.0) as u8);
        }
    }
    (pixels, lo, hi)
}

/// 8-bit binary graymap, linear in the value between the field's min and max.
pub fn encode_heatmap(field: &WignerField) -> Vec<u8> {
    let (pixels, lo, hi) = gray_levels(field);
    let grid = field.grid();
    let mut out = format!(
        "P5\n# min={lo:e} max={hi:e} time={:e}\n{} {}\n255\n",
        field.time,
        grid.nx(),
        grid.np()
    )
    .into_bytes();
    out.extend_from_slice(&pixels);
    out
}

pub fn write_heatmap(field: &WignerField, path: &Path) -> Result<()> {
    fs::write(path, encode_heatmap(field)).map_err(|e| Error::io(path, e))
}

/// Panels side by side, each normalized to its own range, separated by a
/// 4-pixel white gutter. All panels must share a grid.
pub fn encode_panels(fields: &[&WignerField]) -> Vec<u8> {
    const GUTTER: usize = 4;
    let grid = fields[0].grid();
    let (nx, np) = (grid.nx(), grid.np());
    let width = fields.len() * nx + (fields.len() - 1) * GUTTER;
    let levels: Vec<(Vec<u8>, f64, f64)> = fields.iter().map(|f| gray_levels(f)).collect();
    let mut header = String::from("P5\n");
    for (k, (_, lo, hi)) in levels.iter().enumerate() {
        header.push_str(&format!("# panel{} min={lo:e} max={hi:e}\n", k + 1));
    }
    header.push_str(&format!("{width} {np}\n255\n"));
    let mut out = header.into_bytes();
    for row in 0..np {
        for (k, (pixels, _, _)) in levels.iter().enumerate() {
            if k > 0 {
                out.extend(std::iter::repeat_n(255u8, GUTTER));
            }
            out.extend_from_slice(&pixels[row * nx..(row + 1) * nx]);
        }
    }
    out
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(bytes).map_err(|e| Error::io(path, e))
}
