//! Minimal NPY reader/writer for 2-D float arrays.
//!
//! Writing always produces version 1.0, `<f4`, C order, with the header padded
//! so the payload starts on a 64-byte boundary. Reading accepts versions 1.0,
//! 2.0 and 3.0, `f4`/`f8` in either byte order, and both memory orders.

use ndarray::{Array2, ArrayView2, ShapeBuilder};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;

fn err(msg: impl Into<String>) -> Error {
    Error::Npy(msg.into())
}

pub fn encode(data: ArrayView2<'_, f32>) -> Result<Vec<u8>> {
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite value at flat index {pos}")));
    }
    let (rows, cols) = data.dim();
    let mut dict = format!("{{'descr': '<f4', 'fortran_order': False, 'shape': ({rows}, {cols}), }}");
    // magic(6) + version(2) + header_len(2) + dict + '\n'
    let unpadded = 10 + dict.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    dict.extend(std::iter::repeat_n(' ', pad));
    dict.push('\n');
    let header_len = u16::try_from(dict.len()).map_err(|_| err("header too long for v1.0"))?;

    let mut out = Vec::with_capacity(10 + dict.len() + rows * cols * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    // iter() walks logical (row-major) order regardless of memory layout
    for v in data.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Dtype {
    F4 { little: bool },
    F8 { little: bool },
}

impl Dtype {
    fn size(self) -> usize {
        match self {
            Dtype::F4 { .. } => 4,
            Dtype::F8 { .. } => 8,
        }
    }

    fn parse(descr: &str) -> Result<Self> {
        let (order, kind) = descr.split_at(1.min(descr.len()));
        let little = match order {
            "<" => true,
            ">" => false,
            "=" => cfg!(target_endian = "little"),
            _ => return Err(err(format!("unsupported dtype '{descr}'"))),
        };
        match kind {
            "f4" => Ok(Dtype::F4 { little }),
            "f8" => Ok(Dtype::F8 { little }),
            _ => Err(err(format!("unsupported dtype '{descr}' (expected float32/float64)"))),
        }
    }

    fn read(self, chunk: &[u8]) -> f32 {
        match self {
            Dtype::F4 { little } => {
                let b: [u8; 4] = chunk.try_into().unwrap();
                if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) }
            }
            Dtype::F8 { little } => {
                let b: [u8; 8] = chunk.try_into().unwrap();
                (if little { f64::from_le_bytes(b) } else { f64::from_be_bytes(b) }) as f32
            }
        }
    }
}

struct Header {
    dtype: Dtype,
    fortran_order: bool,
    shape: Vec<usize>,
}

/// Extracts the raw text following `'key':` up to the next top-level comma or brace.
fn dict_value<'a>(dict: &'a str, key: &str) -> Result<&'a str> {
    let needle = format!("'{key}'");
    let start = dict
        .find(&needle)
        .or_else(|| dict.find(&format!("\"{key}\"")))
        .ok_or_else(|| err(format!("header is missing '{key}'")))?;
    let rest = dict[start + needle.len()..].trim_start();
    let rest = rest
        .strip_prefix(':')
        .ok_or_else(|| err(format!("malformed header near '{key}'")))?
        .trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')').map(|i| i + 1)
    } else {
        rest.find([',', '}'])
    }
    .ok_or_else(|| err(format!("malformed header near '{key}'")))?;
    Ok(rest[..end].trim())
}

fn parse_header(dict: &str) -> Result<Header> {
    let descr = dict_value(dict, "descr")?.trim_matches(|c| c == '\'' || c == '"');
    let dtype = Dtype::parse(descr)?;
    let fortran_order = match dict_value(dict, "fortran_order")? {
        "False" => false,
        "True" => true,
        other => return Err(err(format!("bad fortran_order '{other}'"))),
    };
    let shape_text = dict_value(dict, "shape")?;
    let inner = shape_text
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| err(format!("bad shape '{shape_text}'")))?;
    let shape = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.trim_end_matches('L').parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| err(format!("bad shape '{shape_text}'")))?;
    Ok(Header { dtype, fortran_order, shape })
}

pub fn decode(bytes: &[u8]) -> Result<Array2<f32>> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(err("bad magic (not an NPY file)"));
    }
    let (len_size, encoding_utf8) = match (bytes[6], bytes[7]) {
        (1, 0) => (2, false),
        (2, 0) => (4, false),
        (3, 0) => (4, true),
        (major, minor) => return Err(err(format!("unsupported NPY version {major}.{minor}"))),
    };
    if bytes.len() < 8 + len_size {
        return Err(err("truncated header"));
    }
    let header_len = if len_size == 2 {
        u16::from_le_bytes([bytes[8], bytes[9]]) as usize
    } else {
        u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize
    };
    let start = 8 + len_size;
    let payload_start = start + header_len;
    if bytes.len() < payload_start {
        return Err(err("truncated header"));
    }
    let raw = &bytes[start..payload_start];
    let dict = if encoding_utf8 {
        std::str::from_utf8(raw).map_err(|_| err("header is not UTF-8"))?
    } else {
        if !raw.is_ascii() {
            return Err(err("header is not ASCII"));
        }
        std::str::from_utf8(raw).unwrap()
    };
    let header = parse_header(dict)?;
    let [rows, cols] = header.shape[..] else {
        return Err(err(format!("expected a 2-D array, found shape {:?}", header.shape)));
    };
    let count = rows.checked_mul(cols).ok_or_else(|| err("shape overflows"))?;
    let size = header.dtype.size();
    let payload = &bytes[payload_start..];
    if payload.len() < count * size {
        return Err(err(format!(
            "truncated payload: need {} bytes, have {}",
            count * size,
            payload.len()
        )));
    }
    let values: Vec<f32> = payload[..count * size]
        .chunks_exact(size)
        .map(|c| header.dtype.read(c))
        .collect();
    let shape = (rows, cols);
    let array = if header.fortran_order {
        Array2::from_shape_vec(shape.f(), values)
    } else {
        Array2::from_shape_vec(shape, values)
    }
    .map_err(|e| err(e.to_string()))?;
    Ok(array.as_standard_layout().into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn header_is_aligned_and_payload_sized() {
        let m = array![[1.0f32, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let bytes = encode(m.view()).unwrap();
        assert_eq!(&bytes[..6], MAGIC);
        assert_eq!(&bytes[6..8], &[1, 0]);
        let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        assert_eq!((10 + header_len) % 64, 0);
        assert_eq!(10 + header_len, 128);
        assert_eq!(bytes.len() - 128, 24);
        assert_eq!(bytes[127], b'\n');
    }

    #[test]
    fn reads_f8_and_fortran_order() {
        // numpy.asfortranarray(np.arange(6, dtype='<f8').reshape(2, 3))
        let dict = "{'descr': '<f8', 'fortran_order': True, 'shape': (2, 3), }";
        let mut bytes = MAGIC.to_vec();
        bytes.extend_from_slice(&[1, 0]);
        bytes.extend_from_slice(&(dict.len() as u16).to_le_bytes());
        bytes.extend_from_slice(dict.as_bytes());
        for v in [0.0f64, 3.0, 1.0, 4.0, 2.0, 5.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let a = decode(&bytes).unwrap();
        assert_eq!(a, array![[0.0f32, 1.0, 2.0], [3.0, 4.0, 5.0]]);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(decode(b"NOTNPY0000"), Err(Error::Npy(_))));

        let one_d = "{'descr': '<f4', 'fortran_order': False, 'shape': (3,), }";
        let mut bytes = MAGIC.to_vec();
        bytes.extend_from_slice(&[1, 0]);
        bytes.extend_from_slice(&(one_d.len() as u16).to_le_bytes());
        bytes.extend_from_slice(one_d.as_bytes());
        bytes.extend_from_slice(&[0u8; 12]);
        let e = decode(&bytes).unwrap_err().to_string();
        assert!(e.contains("2-D"), "{e}");

        let ints = one_d.replace("<f4", "<i4").replace("(3,)", "(1, 3)");
        let mut bytes = MAGIC.to_vec();
        bytes.extend_from_slice(&[1, 0]);
        bytes.extend_from_slice(&(ints.len() as u16).to_le_bytes());
        bytes.extend_from_slice(ints.as_bytes());
        bytes.extend_from_slice(&[0u8; 12]);
        assert!(decode(&bytes).unwrap_err().to_string().contains("dtype"));

        let good = encode(array![[1.0f32, 2.0], [3.0, 4.0]].view()).unwrap();
        let e = decode(&good[..good.len() - 1]).unwrap_err().to_string();
        assert!(e.contains("truncated"), "{e}");
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(rows in 0usize..20, cols in 1usize..12, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = Array2::from_shape_fn((rows, cols), |_| {
                f32::from_bits(rng.random::<u32>() & 0xbf7f_ffff) // clears the top exponent bit: always finite
            });
            let back = decode(&encode(a.view()).unwrap()).unwrap();
            prop_assert_eq!(back.dim(), a.dim());
            for (x, y) in a.iter().zip(back.iter()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
