//! Reader and writer for the `.npy` array format, version 1.0.
//!
//! Layout: magic `\x93NUMPY`, version bytes `1 0`, a little-endian `u16`
//! header length, an ASCII dictionary literal padded with spaces and ended by
//! `\n` so the payload starts on a 64-byte boundary, then raw little-endian
//! values. Only C-order `<f8` and `<f4` payloads of rank 2 or 3 are accepted;
//! `<f4` is widened to `f64` on load. Files are always written as `<f8`, with
//! a header byte-identical to the one numpy produces.

use std::path::Path;

use super::{write_atomic, FeatureMap, GramMatrix, Matrix};
use crate::error::{Error, Result};

const MAGIC: &[u8] = b"\x93NUMPY";
const PREAMBLE_LEN: usize = 10;
const ALIGN: usize = 64;

/// Contents of an array file: a 2-D matrix or a 3-D `C × H × W` feature map.
#[derive(Clone, Debug, PartialEq)]
pub enum Array {
    Matrix(Matrix),
    Feature(FeatureMap),
}

impl Array {
    pub fn shape(&self) -> Vec<usize> {
        match self {
            Array::Matrix(m) => vec![m.rows(), m.cols()],
            Array::Feature(f) => vec![f.channels(), f.height(), f.width()],
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            Array::Matrix(m) => m.data(),
            Array::Feature(f) => f.data(),
        }
    }

    /// Interprets the array as a feature map. A 2-D `C × n` matrix becomes a
    /// map of height 1.
    pub fn into_feature(self) -> Result<FeatureMap> {
        match self {
            Array::Feature(f) => Ok(f),
            Array::Matrix(m) => {
                let (rows, cols) = (m.rows(), m.cols());
                FeatureMap::new(rows, 1, cols, m.into_data())
            }
        }
    }

    pub fn into_matrix(self) -> Result<Matrix> {
        match self {
            Array::Matrix(m) => Ok(m),
            Array::Feature(f) => Err(Error::UnsupportedShape(vec![
                f.channels(),
                f.height(),
                f.width(),
            ])),
        }
    }

    pub fn into_gram(self) -> Result<GramMatrix> {
        GramMatrix::try_from(self.into_matrix()?)
    }
}

impl From<FeatureMap> for Array {
    fn from(f: FeatureMap) -> Self {
        Array::Feature(f)
    }
}

impl From<Matrix> for Array {
    fn from(m: Matrix) -> Self {
        Array::Matrix(m)
    }
}

impl From<GramMatrix> for Array {
    fn from(g: GramMatrix) -> Self {
        Array::Matrix(g.into())
    }
}

pub fn load_array(path: impl AsRef<Path>) -> Result<Array> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_array(&bytes)
}

pub fn save_array(value: &Array, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_array(value))
}

pub fn encode_array(value: &Array) -> Vec<u8> {
    let shape = value.shape();
    let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
    let mut header = format!(
        "{{'descr': '<f8', 'fortran_order': False, 'shape': ({}), }}",
        dims.join(", ")
    );
    let total = PREAMBLE_LEN + header.len() + 1;
    let pad = (ALIGN - total % ALIGN) % ALIGN;
    header.extend(std::iter::repeat(' ').take(pad));
    header.push('\n');

    let values = value.values();
    let mut out = Vec::with_capacity(PREAMBLE_LEN + header.len() + values.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Dtype {
    F8,
    F4,
}

impl Dtype {
    fn size(self) -> usize {
        match self {
            Dtype::F8 => 8,
            Dtype::F4 => 4,
        }
    }
}

pub fn decode_array(bytes: &[u8]) -> Result<Array> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::format(0, "missing array magic bytes"));
    }
    if bytes.len() < PREAMBLE_LEN {
        return Err(Error::format(bytes.len(), "truncated array preamble"));
    }
    let (header_len, header_start) = match (bytes[6], bytes[7]) {
        (1, 0) => (
            usize::from(u16::from_le_bytes([bytes[8], bytes[9]])),
            PREAMBLE_LEN,
        ),
        (2, 0) => {
            if bytes.len() < 12 {
                return Err(Error::format(bytes.len(), "truncated array preamble"));
            }
            let len = u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]);
            (len as usize, 12)
        }
        (major, minor) => {
            return Err(Error::format(
                6,
                format!("unsupported version {major}.{minor}"),
            ));
        }
    };
    let header_end = header_start + header_len;
    if bytes.len() < header_end {
        return Err(Error::format(bytes.len(), "truncated array header"));
    }
    let header = std::str::from_utf8(&bytes[header_start..header_end])
        .map_err(|e| Error::format(header_start + e.valid_up_to(), "header is not ASCII"))?;
    let (dtype, shape) = parse_header(header, header_start)?;

    if shape.len() != 2 && shape.len() != 3 {
        return Err(Error::UnsupportedShape(shape));
    }
    let count = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::format(header_start, "shape overflows"))?;
    let payload = &bytes[header_end..];
    let expected = count * dtype.size();
    if payload.len() != expected {
        return Err(Error::format(
            header_end + payload.len().min(expected),
            format!("payload is {} bytes, shape needs {expected}", payload.len()),
        ));
    }

    let mut data = Vec::with_capacity(count);
    for (i, chunk) in payload.chunks_exact(dtype.size()).enumerate() {
        let v = match dtype {
            Dtype::F8 => f64::from_le_bytes(chunk.try_into().expect("8-byte chunk")),
            Dtype::F4 => f64::from(f32::from_le_bytes(chunk.try_into().expect("4-byte chunk"))),
        };
        if !v.is_finite() {
            return Err(Error::format(
                header_end + i * dtype.size(),
                "non-finite value in payload",
            ));
        }
        data.push(v);
    }

    if shape.len() == 2 {
        Ok(Array::Matrix(Matrix::new(shape[0], shape[1], data)?))
    } else {
        if shape.contains(&0) {
            return Err(Error::UnsupportedShape(shape));
        }
        Ok(Array::Feature(FeatureMap::new(
            shape[0], shape[1], shape[2], data,
        )?))
    }
}

/// Parses the dictionary literal. `base` is the byte offset of the header
/// within the file, used for error positions.
fn parse_header(header: &str, base: usize) -> Result<(Dtype, Vec<usize>)> {
    let trimmed = header.trim_end();
    let inner = trimmed
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| Error::format(base, "header is not a dictionary literal"))?;

    let mut dtype = None;
    let mut fortran = None;
    let mut shape = None;
    let mut rest = inner;
    let mut offset = base + 1;

    loop {
        let skipped = rest.len() - rest.trim_start_matches([' ', ',']).len();
        rest = &rest[skipped..];
        offset += skipped;
        if rest.is_empty() {
            break;
        }
        let key_end = rest[1..]
            .find('\'')
            .filter(|_| rest.starts_with('\''))
            .ok_or_else(|| Error::format(offset, "expected quoted key"))?;
        let key = &rest[1..key_end + 1];
        let after_key = &rest[key_end + 2..];
        let value_str = after_key
            .trim_start()
            .strip_prefix(':')
            .ok_or_else(|| Error::format(offset + key_end + 2, "expected ':' after key"))?
            .trim_start();
        let value_offset = offset + (rest.len() - value_str.len());
        let value_len = value_extent(value_str)
            .ok_or_else(|| Error::format(value_offset, "unterminated value"))?;
        let value = &value_str[..value_len];

        match key {
            "descr" => {
                dtype = Some(match value {
                    "'<f8'" => Dtype::F8,
                    "'<f4'" => Dtype::F4,
                    other => {
                        return Err(Error::format(
                            value_offset,
                            format!("unsupported descr {other}, expected '<f8' or '<f4'"),
                        ))
                    }
                })
            }
            "fortran_order" => {
                fortran = Some(match value {
                    "False" => false,
                    "True" => true,
                    _ => return Err(Error::format(value_offset, "fortran_order must be a bool")),
                })
            }
            "shape" => shape = Some(parse_shape(value, value_offset)?),
            other => {
                return Err(Error::format(
                    offset,
                    format!("unknown header key '{other}'"),
                ));
            }
        }
        let consumed = rest.len() - value_str.len() + value_len;
        rest = &rest[consumed..];
        offset += consumed;
    }

    let dtype = dtype.ok_or_else(|| Error::format(base, "header has no 'descr'"))?;
    match fortran {
        Some(false) => {}
        Some(true) => {
            return Err(Error::format(
                base,
                "fortran_order arrays are not supported",
            ))
        }
        None => return Err(Error::format(base, "header has no 'fortran_order'")),
    }
    let shape = shape.ok_or_else(|| Error::format(base, "header has no 'shape'"))?;
    Ok((dtype, shape))
}

/// Length of the value literal at the start of `s`.
fn value_extent(s: &str) -> Option<usize> {
    if let Some(body) = s.strip_prefix('\'') {
        return body.find('\'').map(|i| i + 2);
    }
    if s.starts_with('(') {
        return s.find(')').map(|i| i + 1);
    }
    Some(s.find(',').unwrap_or(s.len()).min(s.trim_end().len()))
}

fn parse_shape(value: &str, offset: usize) -> Result<Vec<usize>> {
    let inner = value
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| Error::format(offset, "shape must be a tuple"))?;
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| Error::format(offset, format!("bad shape entry '{s}'")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hex(s: &str) -> Vec<u8> {
        (0..s.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&s[i..i + 2], 16).unwrap())
            .collect()
    }

    /// Bytes produced by `numpy.save` for the given header and payload.
    fn numpy_file(header: &str, payload_hex: &str) -> Vec<u8> {
        let mut out = b"\x93NUMPY\x01\x00v\x00".to_vec();
        let mut h = header.to_string();
        while h.len() < 0x75 {
            h.push(' ');
        }
        h.push('\n');
        out.extend_from_slice(h.as_bytes());
        out.extend(hex(payload_hex));
        out
    }

    #[test]
    fn reads_reference_f8_matrix() {
        let bytes = numpy_file(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (2, 2), }",
            "000000000000f83f00000000000000c0000000000000d03f9c7500883ce4377e",
        );
        let m = decode_array(&bytes).unwrap().into_matrix().unwrap();
        assert_eq!(m.data(), &[1.5, -2.0, 0.25, 1e300]);
        // The writer reproduces the reference bytes exactly.
        assert_eq!(encode_array(&Array::Matrix(m)), bytes);
    }

    #[test]
    fn reads_reference_f4_matrix() {
        let bytes = numpy_file(
            "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 2), }",
            "0000c03f000000c00000803e00004040",
        );
        let m = decode_array(&bytes).unwrap().into_matrix().unwrap();
        assert_eq!(m.data(), &[1.5, -2.0, 0.25, 3.0]);
    }

    #[test]
    fn reads_reference_feature_map() {
        let payload: String = (0..12)
            .map(|v| {
                (v as f64)
                    .to_le_bytes()
                    .iter()
                    .map(|b| format!("{b:02x}"))
                    .collect::<String>()
            })
            .collect();
        let bytes = numpy_file(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (3, 2, 2), }",
            &payload,
        );
        let f = decode_array(&bytes).unwrap().into_feature().unwrap();
        assert_eq!((f.channels(), f.height(), f.width()), (3, 2, 2));
        assert_eq!(f.row(2), &[8.0, 9.0, 10.0, 11.0]);
        assert_eq!(encode_array(&Array::Feature(f)), bytes);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let data: Vec<f64> = (0..48)
            .map(|i| (i as f64 * 0.37).sin() * 1e-3 + 1.0 / 3.0)
            .collect();
        let f = FeatureMap::new(3, 4, 4, data).unwrap();
        let back = decode_array(&encode_array(&f.clone().into())).unwrap();
        let Array::Feature(g) = back else {
            panic!("expected feature map")
        };
        for (a, b) in f.data().iter().zip(g.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn truncated_payload_is_a_format_error() {
        let f = FeatureMap::new(1, 2, 2, vec![1.0; 4]).unwrap();
        let bytes = encode_array(&f.into());
        let err = decode_array(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(matches!(err, Error::Format { offset, .. } if offset == bytes.len() - 3));
    }

    #[test]
    fn bad_magic_and_header() {
        assert!(matches!(
            decode_array(b"NOTNUMPY"),
            Err(Error::Format { offset: 0, .. })
        ));
        let bad = numpy_file(
            "{'descr': '<i8', 'fortran_order': False, 'shape': (1, 1), }",
            "",
        );
        assert!(matches!(decode_array(&bad), Err(Error::Format { offset, .. }) if offset > 10));
        let fortran = numpy_file(
            "{'descr': '<f8', 'fortran_order': True, 'shape': (1, 1), }",
            "",
        );
        assert!(matches!(decode_array(&fortran), Err(Error::Format { .. })));
    }

    #[test]
    fn rejects_other_ranks() {
        let one = numpy_file(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (2,), }",
            "",
        );
        assert!(matches!(decode_array(&one), Err(Error::UnsupportedShape(s)) if s == vec![2]));
        let four = numpy_file(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (1, 1, 1, 1), }",
            "0000000000000000",
        );
        assert!(matches!(
            decode_array(&four),
            Err(Error::UnsupportedShape(_))
        ));
    }

    #[test]
    fn key_order_is_free() {
        let bytes = numpy_file(
            "{'shape': (1, 2), 'fortran_order': False, 'descr': '<f8'}",
            "000000000000f03f0000000000000040",
        );
        let m = decode_array(&bytes).unwrap().into_matrix().unwrap();
        assert_eq!(m.data(), &[1.0, 2.0]);
    }

    #[test]
    fn nan_payload_rejected() {
        let bytes = numpy_file(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (1, 1), }",
            "000000000000f87f",
        );
        assert!(matches!(
            decode_array(&bytes),
            Err(Error::Format { offset: 128, .. })
        ));
    }
}
