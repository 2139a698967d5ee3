//! Little-endian byte helpers shared by the binary formats.

use crate::error::{Error, Result};
use crate::numeric::{DenseMatrix, SparseMatrix};

#[derive(Default)]
pub(crate) struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn with_header(magic: &[u8; 4], version: u16) -> Self {
        let mut w = Self::default();
        w.bytes(magic);
        w.u16(version);
        w
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.buf
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn bool(&mut self, v: bool) {
        self.u8(v as u8);
    }

    pub fn u16(&mut self, v: u16) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    pub fn f32(&mut self, v: f32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn opt_f64(&mut self, v: Option<f64>) {
        self.bool(v.is_some());
        if let Some(v) = v {
            self.f64(v);
        }
    }

    pub fn dense(&mut self, m: &DenseMatrix) {
        self.usize(m.rows());
        self.usize(m.cols());
        for &v in m.as_slice() {
            self.f64(v);
        }
    }

    pub fn dense_list(&mut self, ms: &[DenseMatrix]) {
        self.usize(ms.len());
        for m in ms {
            self.dense(m);
        }
    }

    /// CSR arrays as stored.
    pub fn sparse(&mut self, s: &SparseMatrix) {
        self.usize(s.rows());
        self.usize(s.cols());
        self.usize(s.nnz());
        let mut offset = 0;
        self.usize(0);
        for r in 0..s.rows() {
            offset += s.row(r).0.len();
            self.usize(offset);
        }
        for r in 0..s.rows() {
            for &c in s.row(r).0 {
                self.usize(c);
            }
        }
        for r in 0..s.rows() {
            for &v in s.row(r).1 {
                self.f64(v);
            }
        }
    }
}

pub(crate) struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    /// Checks magic and version and positions after the header.
    pub fn with_header(data: &'a [u8], magic: &[u8; 4], version: u16) -> Result<Self> {
        let mut r = Self::new(data);
        let found: [u8; 4] = r.take(4)?.try_into().expect("4 bytes");
        if &found != magic {
            return Err(Error::BadMagic {
                expected: *magic,
                found,
            });
        }
        let v = r.u16()?;
        if v != version {
            return Err(Error::VersionMismatch {
                found: v,
                expected: version,
            });
        }
        Ok(r)
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let left = self.data.len() - self.pos;
        if n > left {
            return Err(Error::Truncated {
                offset: self.pos,
                needed: n - left,
            });
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("exact length"))
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(Error::Malformed(format!("flag byte {b} at offset {}", self.pos - 1))),
        }
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Malformed("length exceeds address space".into()))
    }

    /// A length that must fit in the remaining bytes at `unit` bytes per
    /// element; guards allocations against corrupt counts.
    pub fn len(&mut self, unit: usize) -> Result<usize> {
        let n = self.usize()?;
        let left = self.data.len() - self.pos;
        match n.checked_mul(unit.max(1)) {
            Some(b) if b <= left => Ok(n),
            _ => Err(Error::Truncated {
                offset: self.pos,
                needed: n.saturating_mul(unit.max(1)).saturating_sub(left),
            }),
        }
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    pub fn opt_f64(&mut self) -> Result<Option<f64>> {
        Ok(if self.bool()? { Some(self.f64()?) } else { None })
    }

    pub fn dense(&mut self) -> Result<DenseMatrix> {
        let rows = self.usize()?;
        let cols = self.usize()?;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Malformed("matrix size overflows".into()))?;
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Malformed("matrix size overflows".into()))?)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        DenseMatrix::from_vec(rows, cols, data)
    }

    pub fn dense_list(&mut self) -> Result<Vec<DenseMatrix>> {
        let n = self.len(16)?;
        (0..n).map(|_| self.dense()).collect()
    }

    pub fn sparse(&mut self) -> Result<SparseMatrix> {
        let rows = self.usize()?;
        let cols = self.usize()?;
        let nnz = self.usize()?;
        let offsets_len = rows
            .checked_add(1)
            .ok_or_else(|| Error::Malformed("row count overflows".into()))?;
        let needed = offsets_len
            .checked_add(nnz.saturating_mul(2))
            .and_then(|w| w.checked_mul(8));
        let left = self.data.len() - self.pos;
        match needed {
            Some(b) if b <= left => {}
            _ => {
                return Err(Error::Truncated {
                    offset: self.pos,
                    needed: needed.unwrap_or(usize::MAX).saturating_sub(left),
                })
            }
        }
        let offsets = (0..offsets_len).map(|_| self.usize()).collect::<Result<Vec<_>>>()?;
        let cols_idx = (0..nnz).map(|_| self.usize()).collect::<Result<Vec<_>>>()?;
        let values = (0..nnz).map(|_| self.f64()).collect::<Result<Vec<_>>>()?;
        SparseMatrix::from_csr(rows, cols, offsets, cols_idx, values)
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(Error::Malformed(format!(
                "{} trailing bytes after offset {}",
                self.data.len() - self.pos,
                self.pos
            )));
        }
        Ok(())
    }
}
