//! SIG1 binary signals and binary PGM images.
//!
//! SIG1 layout (little endian): magic `SIG1`, `u32` ndims, one `u32` per axis,
//! a `u8` flag (0 = real `f64` samples, 1 = complex `f64` pairs), then the
//! samples in row-major order. Sample spacing is not stored; loaded signals
//! have spacing 1.

use std::fs;
use std::path::Path;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{Shape, Signal};

const MAGIC: &[u8; 4] = b"SIG1";

pub fn encode_sig1(x: &Signal) -> Vec<u8> {
    let dims = x.shape().dims();
    let real = x.is_real();
    let width = if real { 8 } else { 16 };
    let mut out = Vec::with_capacity(9 + 4 * dims.len() + width * x.samples().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for d in &dims {
        out.extend_from_slice(&(*d as u32).to_le_bytes());
    }
    out.push(if real { 0 } else { 1 });
    for z in x.samples() {
        out.extend_from_slice(&z.re.to_le_bytes());
        if !real {
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

pub fn decode_sig1(bytes: &[u8]) -> Result<Signal> {
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes
            .get(pos..pos + n)
            .ok_or_else(|| Error::Format("truncated SIG1 data".into()))?;
        pos += n;
        Ok(s)
    };
    if take(4)? != MAGIC {
        return Err(Error::Format("missing SIG1 magic".into()));
    }
    let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap()) as usize;
    let ndims = u32_at(take(4)?);
    if !(1..=2).contains(&ndims) {
        return Err(Error::Format(format!("unsupported SIG1 dimension count {ndims}")));
    }
    let mut dims = Vec::with_capacity(ndims);
    for _ in 0..ndims {
        dims.push(u32_at(take(4)?));
    }
    let shape = Shape::from_dims(&dims)?;
    let complex = match take(1)?[0] {
        0 => false,
        1 => true,
        f => return Err(Error::Format(format!("unknown SIG1 sample flag {f}"))),
    };
    let f64_at = |s: &[u8]| f64::from_le_bytes(s.try_into().unwrap());
    let mut samples = Vec::with_capacity(shape.len());
    for _ in 0..shape.len() {
        let re = f64_at(take(8)?);
        let im = if complex { f64_at(take(8)?) } else { 0.0 };
        samples.push(Complex64::new(re, im));
    }
    if pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes after SIG1 samples", bytes.len() - pos)));
    }
    Signal::from_grid(shape, samples, 1.0)
}

pub fn write_sig1(path: &Path, x: &Signal) -> Result<()> {
    fs::write(path, encode_sig1(x))?;
    Ok(())
}

pub fn read_sig1(path: &Path) -> Result<Signal> {
    decode_sig1(&fs::read(path)?)
}

/// Binary PGM (P5, maxval 255) of the real part, mapping `[0, 1]` to
/// `[0, 255]` with clamping.
pub fn encode_pgm(x: &Signal) -> Result<Vec<u8>> {
    let (rows, cols) = match x.shape() {
        Shape::D2(r, c) => (r, c),
        s => return Err(Error::Dimension(format!("PGM export needs a 2D signal, got {s:?}"))),
    };
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend(x.samples().iter().map(|z| (z.re.clamp(0.0, 1.0) * 255.0).round() as u8));
    Ok(out)
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Signal> {
    let mut pos = 0usize;
    let mut fields = Vec::new();
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(Error::Format(format!("expected binary PGM (P5), found {}", fields[0])));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad PGM header field {s:?}")));
    let (cols, rows, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    if maxval != 255 {
        return Err(Error::Format(format!("only maxval 255 is supported, found {maxval}")));
    }
    pos += 1;
    let data = bytes
        .get(pos..pos + rows * cols)
        .ok_or_else(|| Error::Format("truncated PGM pixel data".into()))?;
    let values: Vec<f64> = data.iter().map(|&b| b as f64 / 255.0).collect();
    Signal::from_real(Shape::D2(rows, cols), &values)
}

pub fn write_pgm(path: &Path, x: &Signal) -> Result<()> {
    fs::write(path, encode_pgm(x)?)?;
    Ok(())
}

pub fn read_pgm(path: &Path) -> Result<Signal> {
    decode_pgm(&fs::read(path)?)
}

/// Load a signal from `.pgm` or SIG1 by extension.
pub fn read_signal(path: &Path) -> Result<Signal> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => read_pgm(path),
        _ => read_sig1(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig1_round_trip_real_and_complex() {
        let real = Signal::from_real(Shape::D2(4, 8), &(0..32).map(|i| i as f64 * 0.37 - 2.0).collect::<Vec<_>>()).unwrap();
        let bytes = encode_sig1(&real);
        assert_eq!(&bytes[..4], b"SIG1");
        assert_eq!(bytes[16], 0);
        assert_eq!(bytes.len(), 17 + 32 * 8);
        assert_eq!(decode_sig1(&bytes).unwrap(), real);

        let complex = real.map(|z| Complex64::new(z.re, -z.re * 0.5));
        let back = decode_sig1(&encode_sig1(&complex)).unwrap();
        assert_eq!(back, complex);
        assert!(((back.norm_sqr() - complex.norm_sqr()) / complex.norm_sqr()).abs() <= 1e-12);
    }

    #[test]
    fn sig1_rejects_garbage() {
        assert!(matches!(decode_sig1(b"SIG2"), Err(Error::Format(_))));
        let mut bytes = encode_sig1(&Signal::zeros(Shape::D1(4)));
        bytes.pop();
        assert!(matches!(decode_sig1(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn pgm_round_trip_on_byte_levels() {
        let values: Vec<f64> = (0..64).map(|i| (i * 4) as f64 / 255.0).collect();
        let x = Signal::from_real(Shape::D2(8, 8), &values).unwrap();
        let bytes = encode_pgm(&x).unwrap();
        assert!(bytes.starts_with(b"P5\n8 8\n255\n"));
        let y = decode_pgm(&bytes).unwrap();
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn pgm_header_comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n4 4\n255\n".to_vec();
        bytes.extend([255u8; 16]);
        let x = decode_pgm(&bytes).unwrap();
        assert!(x.samples().iter().all(|z| z.re == 1.0));
    }
}
