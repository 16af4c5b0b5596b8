use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const EMBEDDING_MAGIC: &[u8; 6] = b"LXEMB\0";
pub const EMBEDDING_VERSION: u8 = 1;

/// Word vectors stored row-major, one row per vocabulary word.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub words: Vec<String>,
    pub index: HashMap<String, usize>,
    pub dim: usize,
    pub data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn zeros(words: Vec<String>, dim: usize) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let data = vec![0.0; words.len() * dim];
        EmbeddingMatrix {
            words,
            index,
            dim,
            data,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector(&self, word: &str) -> Option<&[f32]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    /// Binary layout (little endian):
    ///
    /// ```text
    /// magic "LXEMB\0" | version u8 | reserved u8
    /// rows u32 | dim u32
    /// rows × (word_len u32 | word utf-8 | row u32)
    /// rows × dim × f32
    /// crc32 u32 over all preceding bytes
    /// ```
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.data.len() * 4 + self.words.len() * 16);
        out.extend_from_slice(EMBEDDING_MAGIC);
        out.push(EMBEDDING_VERSION);
        out.push(0);
        out.extend_from_slice(&(self.words.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for (i, w) in self.words.iter().enumerate() {
            out.extend_from_slice(&(w.len() as u32).to_le_bytes());
            out.extend_from_slice(w.as_bytes());
            out.extend_from_slice(&(i as u32).to_le_bytes());
        }
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8], name: &str) -> Result<Self> {
        let corrupt = |m: &str| Error::Corrupt {
            segment: name.to_string(),
            message: m.to_string(),
        };
        if bytes.len() < 20 || &bytes[..6] != EMBEDDING_MAGIC {
            return Err(corrupt("bad magic"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().expect("4 bytes")) {
            return Err(Error::Checksum {
                segment: name.to_string(),
            });
        }
        if body[6] != EMBEDDING_VERSION {
            return Err(corrupt("unsupported version"));
        }
        let mut pos = 8;
        let u32_at = |pos: &mut usize| -> Result<u32> {
            let b = body.get(*pos..*pos + 4).ok_or_else(|| corrupt("truncated"))?;
            *pos += 4;
            Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
        };
        let rows = u32_at(&mut pos)? as usize;
        let dim = u32_at(&mut pos)? as usize;
        let mut words = vec![String::new(); rows];
        for _ in 0..rows {
            let len = u32_at(&mut pos)? as usize;
            let w = body.get(pos..pos + len).ok_or_else(|| corrupt("truncated"))?;
            let w = std::str::from_utf8(w).map_err(|_| corrupt("word is not utf-8"))?.to_string();
            pos += len;
            let row = u32_at(&mut pos)? as usize;
            *words.get_mut(row).ok_or_else(|| corrupt("row offset out of range"))? = w;
        }
        let floats = body.get(pos..).ok_or_else(|| corrupt("truncated"))?;
        if floats.len() != rows * dim * 4 {
            return Err(corrupt("matrix size mismatch"));
        }
        let mut m = EmbeddingMatrix::zeros(words, dim);
        for (x, chunk) in m.data.iter_mut().zip(floats.chunks_exact(4)) {
            *x = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let name = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        Self::from_bytes(&bytes, &name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bytes_round_trip_and_checksum() {
        let mut m = EmbeddingMatrix::zeros(vec!["new york".into(), "a".into(), "é".into()], 2);
        m.data.iter_mut().enumerate().for_each(|(i, x)| *x = i as f32 * 0.5 - 1.0);
        let bytes = m.to_bytes();
        assert_eq!(EmbeddingMatrix::from_bytes(&bytes, "t").unwrap(), m);
        let mut bad = bytes.clone();
        bad[20] ^= 0x01;
        assert!(matches!(EmbeddingMatrix::from_bytes(&bad, "t"), Err(Error::Checksum { .. })));
    }
}
