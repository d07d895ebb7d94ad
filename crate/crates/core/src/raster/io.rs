//! Binary map formats.
//!
//! * depth: `DPT1`, u32 width, u32 height, then `width * height` f32 (all little-endian)
//! * normals: `NRM1`, same header, then three f32 per pixel
//! * masks: binary PGM (`P5`, maxval 255, 0 background, 255 covered)

use std::path::Path;

use nalgebra::Vector3;

use super::maps::{DepthMap, Mask, NormalMap};
use crate::error::{Error, Result};

const DEPTH_MAGIC: &[u8; 4] = b"DPT1";
const NORMAL_MAGIC: &[u8; 4] = b"NRM1";

fn header(magic: &[u8; 4], width: u32, height: u32, capacity: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + capacity);
    out.extend_from_slice(magic);
    out.extend_from_slice(&width.to_le_bytes());
    out.extend_from_slice(&height.to_le_bytes());
    out
}

fn parse_header<'a>(bytes: &'a [u8], magic: &[u8; 4], floats_per_pixel: usize) -> Result<(u32, u32, &'a [u8]), String> {
    if bytes.len() < 12 || &bytes[..4] != magic {
        return Err(format!("missing {} header", String::from_utf8_lossy(magic)));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let expected = width as usize * height as usize * floats_per_pixel * 4;
    let body = &bytes[12..];
    if body.len() != expected {
        return Err(format!("expected {expected} payload bytes, found {}", body.len()));
    }
    Ok((width, height, body))
}

fn floats(body: &[u8]) -> impl Iterator<Item = f32> + '_ {
    body.chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
}

pub fn encode_depth(depth: &DepthMap) -> Vec<u8> {
    let mut out = header(DEPTH_MAGIC, depth.width(), depth.height(), depth.values().len() * 4);
    for &v in depth.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_depth(bytes: &[u8]) -> Result<DepthMap, String> {
    let (w, h, body) = parse_header(bytes, DEPTH_MAGIC, 1)?;
    DepthMap::new(w, h, floats(body).map(f64::from).collect()).map_err(|e| e.to_string())
}

pub fn encode_normals(normals: &NormalMap) -> Vec<u8> {
    let mut out = header(NORMAL_MAGIC, normals.width(), normals.height(), normals.values().len() * 12);
    for n in normals.values() {
        for c in n.iter() {
            out.extend_from_slice(&(*c as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_normals(bytes: &[u8]) -> Result<NormalMap, String> {
    let (w, h, body) = parse_header(bytes, NORMAL_MAGIC, 3)?;
    let flat: Vec<f64> = floats(body).map(f64::from).collect();
    let values = flat
        .chunks_exact(3)
        .map(|c| Vector3::new(c[0], c[1], c[2]))
        .collect();
    NormalMap::new(w, h, values).map_err(|e| e.to_string())
}

pub fn encode_pgm(mask: &Mask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend(mask.data().iter().map(|&b| if b { 255u8 } else { 0 }));
    out
}

/// Any nonzero sample counts as covered.
pub fn decode_pgm(bytes: &[u8]) -> Result<Mask, String> {
    let mut pos = 0;
    let mut token = || -> Result<String, String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PGM header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err("not a binary PGM (P5)".into());
    }
    let num = |s: String| s.parse::<u32>().map_err(|_| format!("bad PGM header field {s:?}"));
    let width = num(token()?)?;
    let height = num(token()?)?;
    let maxval = num(token()?)?;
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported PGM maxval {maxval}"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let body = &bytes[pos + 1..];
    let n = width as usize * height as usize;
    if body.len() != n {
        return Err(format!("expected {n} PGM samples, found {}", body.len()));
    }
    Mask::new(width, height, body.iter().map(|&b| b != 0).collect()).map_err(|e| e.to_string())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    Ok(std::fs::read(path)?)
}

pub fn read_depth(path: &Path) -> Result<DepthMap> {
    decode_depth(&read(path)?).map_err(|m| Error::format(path, m))
}

pub fn write_depth(path: &Path, depth: &DepthMap) -> Result<()> {
    Ok(std::fs::write(path, encode_depth(depth))?)
}

pub fn read_normals(path: &Path) -> Result<NormalMap> {
    decode_normals(&read(path)?).map_err(|m| Error::format(path, m))
}

pub fn write_normals(path: &Path, normals: &NormalMap) -> Result<()> {
    Ok(std::fs::write(path, encode_normals(normals))?)
}

pub fn read_mask(path: &Path) -> Result<Mask> {
    decode_pgm(&read(path)?).map_err(|m| Error::format(path, m))
}

pub fn write_mask(path: &Path, mask: &Mask) -> Result<()> {
    Ok(std::fs::write(path, encode_pgm(mask))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn depth_layout_is_bit_exact() {
        let d = DepthMap::new(2, 1, vec![0.0, 1.5]).unwrap();
        let bytes = encode_depth(&d);
        let mut expected = b"DPT1".to_vec();
        expected.extend_from_slice(&[2, 0, 0, 0, 1, 0, 0, 0]);
        expected.extend_from_slice(&0f32.to_le_bytes());
        expected.extend_from_slice(&1.5f32.to_le_bytes());
        assert_eq!(bytes, expected);
    }

    #[test]
    fn pgm_layout_and_comments() {
        let m = Mask::from_fn(3, 2, |x, y| x == y);
        let bytes = encode_pgm(&m);
        assert_eq!(&bytes[..11], b"P5\n3 2\n255\n");
        assert_eq!(&bytes[11..], &[255, 0, 0, 0, 255, 0]);
        let commented = b"P5\n# made by hand\n3 2\n255\n\xff\x00\x00\x00\x7f\x00";
        assert_eq!(decode_pgm(commented).unwrap(), m);
    }

    #[test]
    fn rejects_truncated_or_foreign_data() {
        assert!(decode_depth(b"NRM1\x01\0\0\0\x01\0\0\0\0\0\0\0").is_err());
        assert!(decode_depth(b"DPT1\x02\0\0\0\x01\0\0\0\0\0\0\0").is_err());
        assert!(decode_normals(b"NRM1\x01\0\0\0\x01\0\0\0").is_err());
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\0\0").is_err());
    }

    proptest! {
        #[test]
        fn maps_survive_encoding(w in 1u32..8, h in 1u32..8, seed in any::<u64>()) {
            let n = (w * h) as usize;
            let vals: Vec<f64> = (0..n)
                .map(|i| if (seed >> (i % 64)) & 1 == 1 { ((i as f32) * 0.37 + 1.0) as f64 } else { 0.0 })
                .collect();
            let d = DepthMap::new(w, h, vals.clone()).unwrap();
            prop_assert_eq!(decode_depth(&encode_depth(&d)).unwrap(), d);

            let normals: Vec<_> = vals.iter().map(|&v| Vector3::new(v as f32 as f64, -0.5, 0.25)).collect();
            let nm = NormalMap::new(w, h, normals).unwrap();
            prop_assert_eq!(decode_normals(&encode_normals(&nm)).unwrap(), nm);

            let m = Mask::new(w, h, vals.iter().map(|&v| v != 0.0).collect()).unwrap();
            prop_assert_eq!(decode_pgm(&encode_pgm(&m)).unwrap(), m);
        }
    }
}
