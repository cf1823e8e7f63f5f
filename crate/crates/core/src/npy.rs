//! Minimal NPY v1.0 support for little-endian `f32` arrays in C order.

use std::io::{self, Write};

use crate::error::{Error, Result};

const MAGIC: &[u8] = b"\x93NUMPY";
/// numpy pads the preamble plus header to a multiple of 64 bytes.
const ALIGN: usize = 64;

fn header(shape: &[usize]) -> Vec<u8> {
    let dims = match shape {
        [one] => format!("({one},)"),
        _ => format!(
            "({})",
            shape.iter().map(usize::to_string).collect::<Vec<_>>().join(", ")
        ),
    };
    let mut text = format!("{{'descr': '<f4', 'fortran_order': False, 'shape': {dims}, }}");
    let preamble = MAGIC.len() + 2 + 2;
    let unpadded = preamble + text.len() + 1;
    let padded = unpadded.div_ceil(ALIGN) * ALIGN;
    text.extend(std::iter::repeat(' ').take(padded - unpadded));
    text.push('\n');
    text.into_bytes()
}

pub fn write_f32<W: Write>(mut out: W, shape: &[usize], data: &[f32]) -> Result<()> {
    let expected: usize = shape.iter().product();
    if expected != data.len() {
        return Err(Error::Npy(format!(
            "shape {shape:?} needs {expected} values, got {}",
            data.len()
        )));
    }
    let header = header(shape);
    let write = |out: &mut W| -> io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&[1, 0])?;
        out.write_all(&(header.len() as u16).to_le_bytes())?;
        out.write_all(&header)?;
        let mut body = Vec::with_capacity(data.len() * 4);
        for v in data {
            body.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&body)
    };
    write(&mut out).map_err(|e| Error::Npy(e.to_string()))
}

pub fn to_bytes(shape: &[usize], data: &[f32]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_f32(&mut buf, shape, data)?;
    Ok(buf)
}

/// Parses a v1.0 `<f4` C-order array; returns `(shape, values)`.
pub fn read_f32(bytes: &[u8]) -> Result<(Vec<usize>, Vec<f32>)> {
    let bad = |msg: &str| Error::Npy(msg.to_string());
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(bad("missing NPY magic"));
    }
    if bytes[6..8] != [1, 0] {
        return Err(bad("only version 1.0 is supported"));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let body_start = 10 + header_len;
    let header = std::str::from_utf8(bytes.get(10..body_start).ok_or_else(|| bad("truncated header"))?)
        .map_err(|_| bad("header is not ASCII"))?;
    if !header.contains("'descr': '<f4'") {
        return Err(bad("dtype is not little-endian f32"));
    }
    if !header.contains("'fortran_order': False") {
        return Err(bad("only C order is supported"));
    }
    let open = header.find("'shape': (").ok_or_else(|| bad("no shape"))? + "'shape': (".len();
    let close = open + header[open..].find(')').ok_or_else(|| bad("unterminated shape"))?;
    let shape = header[open..close]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| bad("bad shape entry")))
        .collect::<Result<Vec<_>>>()?;
    let count: usize = shape.iter().product();
    let body = &bytes[body_start..];
    if body.len() != count * 4 {
        return Err(bad("body length does not match shape"));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((shape, values))
}
