//! Binary Netpbm I/O: PBM (P4) and PGM (P5, 8- or 16-bit).
//!
//! Headers are `P4\n<w> <h>\n` and `P5\n<w> <h>\n<maxval>\n`. PBM rows are
//! packed MSB-first, 1 = black, each row padded to a whole byte. 16-bit PGM
//! samples are big-endian, as the Netpbm format requires.
//!
//! Writers stream rows and keep a running SHA-256 of every byte written.

use crate::error::{Error, Result};
use sha2::{Digest, Sha256};
use std::io::{BufRead, Write};

/// Receives consecutive bands of rows, top to bottom.
pub trait RowSink {
    /// `rows` holds one level index per pixel, `width` pixels per row.
    fn write_rows(&mut self, rows: &[u8], width: usize) -> Result<()>;
}

/// A `Write` wrapper that hashes what passes through it.
pub struct HashingWriter<W: Write> {
    inner: W,
    hasher: Sha256,
    bytes: u64,
}

impl<W: Write> HashingWriter<W> {
    pub fn new(inner: W) -> Self {
        Self {
            inner,
            hasher: Sha256::new(),
            bytes: 0,
        }
    }

    pub fn bytes_written(&self) -> u64 {
        self.bytes
    }

    /// Hex SHA-256 of everything written so far, and the inner writer.
    pub fn finish(mut self) -> Result<(String, W)> {
        self.inner.flush()?;
        Ok((hex(&self.hasher.finalize()), self.inner))
    }
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        self.bytes += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex(&Sha256::digest(data))
}

/// Streaming P4 writer. Any non-zero level is written as a black (1) bit.
pub struct PbmWriter<W: Write> {
    out: HashingWriter<W>,
    width: usize,
    height: usize,
    rows_written: usize,
    packed: Vec<u8>,
}

impl<W: Write> PbmWriter<W> {
    pub fn new(inner: W, width: usize, height: usize) -> Result<Self> {
        let mut out = HashingWriter::new(inner);
        write!(out, "P4\n{width} {height}\n")?;
        Ok(Self {
            out,
            width,
            height,
            rows_written: 0,
            packed: Vec::new(),
        })
    }

    pub fn finish(self) -> Result<(String, W)> {
        if self.rows_written != self.height {
            return Err(Error::Io(format!(
                "PBM expected {} rows, got {}",
                self.height, self.rows_written
            )));
        }
        self.out.finish()
    }
}

pub fn pack_row_bits(row: &[u8], packed: &mut Vec<u8>) {
    packed.clear();
    for chunk in row.chunks(8) {
        let mut byte = 0u8;
        for (k, &v) in chunk.iter().enumerate() {
            if v != 0 {
                byte |= 0x80 >> k;
            }
        }
        packed.push(byte);
    }
}

impl<W: Write> RowSink for PbmWriter<W> {
    fn write_rows(&mut self, rows: &[u8], width: usize) -> Result<()> {
        debug_assert_eq!(width, self.width);
        let mut packed = std::mem::take(&mut self.packed);
        for row in rows.chunks(width) {
            pack_row_bits(row, &mut packed);
            self.out.write_all(&packed)?;
            self.rows_written += 1;
        }
        self.packed = packed;
        Ok(())
    }
}

/// Streaming 8-bit P5 writer (maxval 255).
pub struct PgmWriter<W: Write> {
    out: HashingWriter<W>,
    height: usize,
    rows_written: usize,
}

impl<W: Write> PgmWriter<W> {
    pub fn new(inner: W, width: usize, height: usize) -> Result<Self> {
        let mut out = HashingWriter::new(inner);
        write!(out, "P5\n{width} {height}\n255\n")?;
        Ok(Self {
            out,
            height,
            rows_written: 0,
        })
    }

    pub fn finish(self) -> Result<(String, W)> {
        if self.rows_written != self.height {
            return Err(Error::Io(format!(
                "PGM expected {} rows, got {}",
                self.height, self.rows_written
            )));
        }
        self.out.finish()
    }
}

impl<W: Write> RowSink for PgmWriter<W> {
    fn write_rows(&mut self, rows: &[u8], width: usize) -> Result<()> {
        self.out.write_all(rows)?;
        self.rows_written += rows.len() / width;
        Ok(())
    }
}

/// Whole-image 16-bit P5 (maxval 65535).
pub fn write_pgm16<W: Write>(out: W, width: usize, height: usize, data: &[u16]) -> Result<String> {
    if data.len() != width * height {
        return Err(Error::Io("PGM16 size mismatch".to_string()));
    }
    let mut w = HashingWriter::new(out);
    write!(w, "P5\n{width} {height}\n65535\n")?;
    let mut buf = Vec::with_capacity(width * 2);
    for row in data.chunks(width) {
        buf.clear();
        for &v in row {
            buf.extend_from_slice(&v.to_be_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(w.finish()?.0)
}

/// A decoded 8-bit image: one sample per pixel, 0..=maxval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image8 {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub data: Vec<u8>,
}

fn header_token<R: BufRead>(input: &mut R) -> Result<String> {
    let mut token = Vec::new();
    loop {
        let mut byte = [0u8; 1];
        if input.read(&mut byte)? == 0 {
            break;
        }
        match byte[0] {
            b'#' if token.is_empty() => {
                let mut skip = Vec::new();
                input.read_until(b'\n', &mut skip)?;
            }
            b if b.is_ascii_whitespace() => {
                if !token.is_empty() {
                    break;
                }
            }
            b => token.push(b),
        }
    }
    if token.is_empty() {
        return Err(Error::Io("truncated Netpbm header".into()));
    }
    String::from_utf8(token).map_err(|_| Error::Io("non-ASCII Netpbm header".into()))
}

fn header_number<R: BufRead>(input: &mut R, what: &str) -> Result<usize> {
    let t = header_token(input)?;
    t.parse()
        .map_err(|_| Error::Io(format!("bad Netpbm {what} {t:?}")))
}

/// Read a P4 bitmap (1 = black becomes sample 1, maxval 1) or an 8-bit P5
/// greymap.
pub fn read_image8<R: BufRead>(mut input: R) -> Result<Image8> {
    let magic = header_token(&mut input)?;
    let width = header_number(&mut input, "width")?;
    let height = header_number(&mut input, "height")?;
    match magic.as_str() {
        "P4" => {
            let stride = width.div_ceil(8);
            let mut row = vec![0u8; stride];
            let mut data = Vec::with_capacity(width * height);
            for _ in 0..height {
                input.read_exact(&mut row)?;
                data.extend((0..width).map(|j| (row[j / 8] >> (7 - j % 8)) & 1));
            }
            Ok(Image8 {
                width,
                height,
                maxval: 1,
                data,
            })
        }
        "P5" => {
            let maxval = header_number(&mut input, "maxval")?;
            if maxval == 0 || maxval > 255 {
                return Err(Error::Io(format!(
                    "only 8-bit greymaps are supported, maxval {maxval}"
                )));
            }
            let mut data = vec![0u8; width * height];
            input.read_exact(&mut data)?;
            Ok(Image8 {
                width,
                height,
                maxval: maxval as u16,
                data,
            })
        }
        other => Err(Error::Io(format!("unsupported Netpbm type {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pbm_layout() {
        let mut buf = Vec::new();
        let mut w = PbmWriter::new(&mut buf, 10, 2).unwrap();
        let rows = [1, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1];
        w.write_rows(&rows, 10).unwrap();
        let (hash, _) = w.finish().unwrap();
        assert_eq!(&buf[..8], b"P4\n10 2\n");
        assert_eq!(&buf[8..], &[0b1000_0001, 0b1000_0000, 0, 0b0100_0000]);
        assert_eq!(hash, sha256_hex(&buf));
    }

    #[test]
    fn pgm_rows_must_complete() {
        let mut buf = Vec::new();
        let mut w = PgmWriter::new(&mut buf, 3, 2).unwrap();
        w.write_rows(&[1, 2, 3], 3).unwrap();
        assert!(w.finish().is_err());
    }

    #[test]
    fn pgm16_is_big_endian() {
        let mut buf = Vec::new();
        write_pgm16(&mut buf, 2, 1, &[0x0102, 0xfffe]).unwrap();
        assert_eq!(&buf[..13], b"P5\n2 1\n65535\n");
        assert_eq!(&buf[13..], &[1, 2, 0xff, 0xfe]);
    }

    #[test]
    fn pbm_and_pgm_round_trip() {
        let rows = [1u8, 0, 1, 1, 0, 0, 0, 0, 0, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 0];
        let mut buf = Vec::new();
        let mut w = PbmWriter::new(&mut buf, 10, 2).unwrap();
        w.write_rows(&rows, 10).unwrap();
        w.finish().unwrap();
        let img = read_image8(&buf[..]).unwrap();
        assert_eq!((img.width, img.height, img.maxval), (10, 2, 1));
        assert_eq!(img.data, rows);

        let mut buf = b"P5\n# comment\n3 1\n255\n".to_vec();
        buf.extend_from_slice(&[0, 128, 255]);
        let img = read_image8(&buf[..]).unwrap();
        assert_eq!(img.data, vec![0, 128, 255]);
        assert!(read_image8(&b"P6\n1 1\n255\n\0\0\0"[..]).is_err());
    }
}
