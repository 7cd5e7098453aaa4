//! File containers: the HSC1 binary cube format, NPY conversion, and PGM
//! band previews.
//!
//! HSC1 layout: magic `HSC1`, version u16 LE, dims H/W/L u32 LE, dtype tag
//! u8 (0 = f32, 1 = f64), then the payload row-major within a band and
//! band-major across bands. Measurements are stored with L = 1 and RGB
//! images with L = C.

use crate::error::{CliError, Result};
use cassi_core::{PlaneMatrix, RgbImage, SpectralCube};
use std::fs;
use std::io::Write;
use std::path::Path;

const MAGIC: &[u8; 4] = b"HSC1";
const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    fn tag(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Dtype::F32),
            1 => Ok(Dtype::F64),
            other => Err(CliError::Validation(format!("unknown dtype tag {other}"))),
        }
    }

    fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

/// Raw decoded container: dims plus the payload as f64.
pub struct RawCube {
    pub h: usize,
    pub w: usize,
    pub l: usize,
    pub dtype: Dtype,
    pub data: Vec<f64>,
}

fn encode(h: usize, w: usize, l: usize, data: &[f64], dtype: Dtype) -> Vec<u8> {
    let mut out = Vec::with_capacity(19 + data.len() * dtype.size());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&(l as u32).to_le_bytes());
    out.push(dtype.tag());
    match dtype {
        Dtype::F64 => {
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Dtype::F32 => {
            for v in data {
                out.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
    }
    out
}

pub fn write_raw(path: &Path, h: usize, w: usize, l: usize, data: &[f64], dtype: Dtype) -> Result<()> {
    let bytes = encode(h, w, l, data, dtype);
    fs::write(path, bytes).map_err(CliError::io(format!("writing {}", path.display())))
}

pub fn read_raw(path: &Path) -> Result<RawCube> {
    let bytes = fs::read(path).map_err(CliError::io(format!("reading {}", path.display())))?;
    if bytes.len() < 19 {
        return Err(CliError::Validation(format!(
            "{}: truncated header",
            path.display()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(CliError::Validation(format!(
            "{}: bad magic, not an HSC1 file",
            path.display()
        )));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(CliError::Validation(format!(
            "{}: unsupported version {version}",
            path.display()
        )));
    }
    let h = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let l = u32::from_le_bytes(bytes[14..18].try_into().unwrap()) as usize;
    let dtype = Dtype::from_tag(bytes[18])?;
    let expected = 19 + h * w * l * dtype.size();
    if bytes.len() != expected {
        return Err(CliError::Validation(format!(
            "{}: payload length {} does not match header ({expected} bytes expected)",
            path.display(),
            bytes.len()
        )));
    }
    let payload = &bytes[19..];
    let data: Vec<f64> = match dtype {
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
    };
    if !data.iter().all(|v| v.is_finite()) {
        return Err(CliError::Validation(format!(
            "{}: payload contains non-finite values",
            path.display()
        )));
    }
    Ok(RawCube { h, w, l, dtype, data })
}

pub fn write_cube(path: &Path, cube: &SpectralCube) -> Result<()> {
    let (h, w, l) = cube.dims();
    write_raw(path, h, w, l, cube.as_slice(), Dtype::F64)
}

pub fn read_cube(path: &Path) -> Result<SpectralCube> {
    let raw = read_raw(path)?;
    SpectralCube::from_vec(raw.h, raw.w, raw.l, raw.data).map_err(Into::into)
}

pub fn write_plane(path: &Path, plane: &PlaneMatrix) -> Result<()> {
    let (h, w) = plane.dims();
    write_raw(path, h, w, 1, plane.as_slice(), Dtype::F64)
}

pub fn read_plane(path: &Path) -> Result<PlaneMatrix> {
    let raw = read_raw(path)?;
    if raw.l != 1 {
        return Err(CliError::Validation(format!(
            "{}: expected a plane (L = 1), got L = {}",
            path.display(),
            raw.l
        )));
    }
    PlaneMatrix::from_vec(raw.h, raw.w, raw.data).map_err(Into::into)
}

pub fn write_rgb(path: &Path, image: &RgbImage) -> Result<()> {
    let (h, w, c) = image.dims();
    write_raw(path, h, w, c, image.as_slice(), Dtype::F64)
}

pub fn read_rgb(path: &Path) -> Result<RgbImage> {
    let raw = read_raw(path)?;
    RgbImage::from_vec(raw.h, raw.w, raw.l, raw.data).map_err(Into::into)
}

/// Writes an NPY v1.0 file with C-order shape (L, H, W), matching the HSC1
/// payload order byte for byte.
pub fn write_npy(path: &Path, h: usize, w: usize, l: usize, data: &[f64], dtype: Dtype) -> Result<()> {
    let descr = match dtype {
        Dtype::F32 => "<f4",
        Dtype::F64 => "<f8",
    };
    let header = format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': ({l}, {h}, {w}), }}");
    let mut header = header.into_bytes();
    // Pad so that magic(6) + version(2) + len(2) + header is 64-aligned and
    // newline-terminated.
    let unpadded = 10 + header.len() + 1;
    let padding = (64 - unpadded % 64) % 64;
    header.extend(std::iter::repeat_n(b' ', padding));
    header.push(b'\n');

    let mut out = Vec::new();
    out.extend_from_slice(b"\x93NUMPY");
    out.push(1);
    out.push(0);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(&header);
    match dtype {
        Dtype::F64 => {
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Dtype::F32 => {
            for v in data {
                out.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
    }
    fs::write(path, out).map_err(CliError::io(format!("writing {}", path.display())))
}

/// Reads the NPY dialect produced by [`write_npy`] (v1.0, little-endian
/// f4/f8, C order, 3-D shape).
pub fn read_npy(path: &Path) -> Result<RawCube> {
    let bytes = fs::read(path).map_err(CliError::io(format!("reading {}", path.display())))?;
    if bytes.len() < 10 || &bytes[0..6] != b"\x93NUMPY" {
        return Err(CliError::Validation(format!(
            "{}: not an NPY file",
            path.display()
        )));
    }
    if bytes[6] != 1 {
        return Err(CliError::Validation(format!(
            "{}: unsupported NPY version {}.{}",
            path.display(),
            bytes[6],
            bytes[7]
        )));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let header = std::str::from_utf8(&bytes[10..10 + header_len])
        .map_err(|_| CliError::Validation(format!("{}: malformed NPY header", path.display())))?;
    let dtype = if header.contains("'<f8'") {
        Dtype::F64
    } else if header.contains("'<f4'") {
        Dtype::F32
    } else {
        return Err(CliError::Validation(format!(
            "{}: unsupported NPY descr (need '<f4' or '<f8')",
            path.display()
        )));
    };
    if header.contains("'fortran_order': True") {
        return Err(CliError::Validation(format!(
            "{}: fortran-order NPY is not supported",
            path.display()
        )));
    }
    let shape_start = header
        .find("'shape':")
        .ok_or_else(|| CliError::Validation(format!("{}: NPY header lacks shape", path.display())))?;
    let rest = &header[shape_start..];
    let open = rest.find('(').ok_or_else(|| {
        CliError::Validation(format!("{}: malformed NPY shape", path.display()))
    })?;
    let close = rest.find(')').ok_or_else(|| {
        CliError::Validation(format!("{}: malformed NPY shape", path.display()))
    })?;
    let dims: Vec<usize> = rest[open + 1..close]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>().map_err(|_| {
                CliError::Validation(format!("{}: malformed NPY shape entry '{s}'", path.display()))
            })
        })
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(CliError::Validation(format!(
            "{}: expected a 3-D array, got shape {dims:?}",
            path.display()
        )));
    }
    let (l, h, w) = (dims[0], dims[1], dims[2]);
    let payload = &bytes[10 + header_len..];
    let expected = h * w * l * dtype.size();
    if payload.len() != expected {
        return Err(CliError::Validation(format!(
            "{}: payload length {} does not match shape",
            path.display(),
            payload.len()
        )));
    }
    let data: Vec<f64> = match dtype {
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
    };
    Ok(RawCube { h, w, l, dtype, data })
}

/// 8-bit binary PGM preview of one band, normalized by the cube maximum.
pub fn write_band_pgm(path: &Path, cube: &SpectralCube, band: usize) -> Result<()> {
    let (h, w, _) = cube.dims();
    let max = cube.max_value().max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(32 + h * w);
    write!(out, "P5\n{w} {h}\n255\n").expect("in-memory write");
    for v in cube.band(band) {
        let byte = (v / max * 255.0).round().clamp(0.0, 255.0) as u8;
        out.push(byte);
    }
    fs::write(path, out).map_err(CliError::io(format!("writing {}", path.display())))
}
