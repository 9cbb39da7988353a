//! Little-endian binary container primitives shared by the cube,
//! dictionary and coefficient file formats.

use std::io::Read;

use crate::error::{Error, Result};

pub(crate) struct Reader<R> {
    pub inner: R,
    pub kind: &'static str,
}

impl<R: Read> Reader<R> {
    pub fn new(inner: R, kind: &'static str) -> Self {
        Reader { inner, kind }
    }

    pub fn u8(&mut self, field: &'static str) -> Result<u8> {
        let mut buf = [0u8; 1];
        self.read_field(&mut buf, field)?;
        Ok(buf[0])
    }

    pub fn u32(&mut self, field: &'static str) -> Result<u32> {
        let mut buf = [0u8; 4];
        self.read_field(&mut buf, field)?;
        Ok(u32::from_le_bytes(buf))
    }

    pub fn f64(&mut self, field: &'static str) -> Result<f64> {
        let mut buf = [0u8; 8];
        self.read_field(&mut buf, field)?;
        Ok(f64::from_le_bytes(buf))
    }

    pub fn bytes(&mut self, count: usize, field: &'static str) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; count];
        self.read_field(&mut buf, field)?;
        Ok(buf)
    }

    pub fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let mut buf = [0u8; 4];
        self.read_field(&mut buf, "magic")?;
        if &buf != expected {
            return Err(Error::Format {
                kind: self.kind,
                field: "magic",
                detail: format!("expected {:?}, found {:?}", expected, buf),
            });
        }
        Ok(())
    }

    /// Reads exactly `count` f64 values and requires EOF afterwards.
    pub fn payload(&mut self, count: u64) -> Result<Vec<f64>> {
        let mut bytes = Vec::new();
        self.inner
            .read_to_end(&mut bytes)
            .map_err(|e| Error::Format { kind: self.kind, field: "payload", detail: e.to_string() })?;
        let expected = count * 8;
        if (bytes.len() as u64) < expected {
            return Err(Error::Truncated { kind: self.kind, expected, found: bytes.len() as u64 });
        }
        if bytes.len() as u64 > expected {
            return Err(Error::Format {
                kind: self.kind,
                field: "payload",
                detail: format!("{} trailing bytes after payload", bytes.len() as u64 - expected),
            });
        }
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn read_field(&mut self, buf: &mut [u8], field: &'static str) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| Error::Format {
            kind: self.kind,
            field,
            detail: format!("unexpected end of file: {e}"),
        })
    }
}
