//! Binary artifact container.
//!
//! Layout: 4-byte magic, u16 version (LE), u32 metadata length (LE),
//! UTF-8 metadata (`key=value` lines), then length-prefixed binary blocks
//! (u64 LE length + bytes each). All multi-byte integers little-endian.
//! Readers reject unknown magic/version; writers emit deterministic bytes so
//! artifacts round-trip exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const VERSION: u16 = 1;

pub const MAGIC_SHOTS: [u8; 4] = *b"QSHT";
pub const MAGIC_DEFECTS: [u8; 4] = *b"QDEF";
pub const MAGIC_SOFT_DEFECTS: [u8; 4] = *b"QSDF";
pub const MAGIC_CORRECTIONS: [u8; 4] = *b"QCOR";
pub const MAGIC_MODEL: [u8; 4] = *b"QNNM";

#[derive(Clone, Debug, Default)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        Metadata::default()
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        debug_assert!(!key.contains('=') && !key.contains('\n'));
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Format(format!("missing metadata key `{key}`")))
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.require(key)?
            .parse()
            .map_err(|_| Error::Format(format!("metadata key `{key}` is not a valid value")))
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(k);
            s.push('=');
            s.push_str(v);
            s.push('\n');
        }
        s
    }

    fn from_text(text: &str) -> Result<Self> {
        let mut meta = Metadata::new();
        for line in text.lines() {
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad metadata line `{line}`")))?;
            meta.entries.push((k.to_string(), v.to_string()));
        }
        Ok(meta)
    }
}

pub struct Container {
    pub magic: [u8; 4],
    pub meta: Metadata,
    pub blocks: Vec<Vec<u8>>,
}

impl Container {
    pub fn new(magic: [u8; 4], meta: Metadata) -> Self {
        Container { magic, meta, blocks: Vec::new() }
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&self.magic)?;
        w.write_all(&VERSION.to_le_bytes())?;
        let meta = self.meta.to_text();
        let meta_len = u32::try_from(meta.len())
            .map_err(|_| Error::Size("metadata exceeds u32 length".into()))?;
        w.write_all(&meta_len.to_le_bytes())?;
        w.write_all(meta.as_bytes())?;
        for block in &self.blocks {
            w.write_all(&(block.len() as u64).to_le_bytes())?;
            w.write_all(block)?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read, expected_magic: [u8; 4]) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != expected_magic {
            return Err(Error::Format(format!(
                "magic mismatch: expected {:?}, found {:?}",
                std::str::from_utf8(&expected_magic).unwrap_or("?"),
                String::from_utf8_lossy(&magic)
            )));
        }
        let mut v = [0u8; 2];
        r.read_exact(&mut v)?;
        let version = u16::from_le_bytes(v);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported container version {version}")));
        }
        let mut l = [0u8; 4];
        r.read_exact(&mut l)?;
        let meta_len = u32::from_le_bytes(l) as usize;
        let mut meta_buf = vec![0u8; meta_len];
        r.read_exact(&mut meta_buf)?;
        let meta = Metadata::from_text(
            std::str::from_utf8(&meta_buf).map_err(|_| Error::Format("metadata is not UTF-8".into()))?,
        )?;
        let mut blocks = Vec::new();
        loop {
            let mut len_buf = [0u8; 8];
            match r.read_exact(&mut len_buf) {
                Ok(()) => {}
                Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
                Err(e) => return Err(e.into()),
            }
            let len = u64::from_le_bytes(len_buf) as usize;
            let mut block = vec![0u8; len];
            r.read_exact(&mut block)?;
            blocks.push(block);
        }
        Ok(Container { magic, meta, blocks })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path)?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, expected_magic: [u8; 4]) -> Result<Self> {
        let file = File::open(path)?;
        Container::read_from(BufReader::new(file), expected_magic)
    }
}

pub fn f32s_to_bytes(xs: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(xs.len() * 4);
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn bytes_to_f32s(bytes: &[u8]) -> Result<Vec<f32>> {
    if !bytes.len().is_multiple_of(4) {
        return Err(Error::Format("f32 block length not a multiple of 4".into()));
    }
    Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}

pub fn f64s_to_bytes(xs: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(xs.len() * 8);
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn bytes_to_f64s(bytes: &[u8]) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(Error::Format("f64 block length not a multiple of 8".into()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
        .collect())
}

/// FNV-1a of a canonical string; used as the config digest embedded in
/// artifact headers.
pub fn digest64(text: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_bytes_exact() {
        let mut meta = Metadata::new();
        meta.push("distance", 3);
        meta.push("basis", "Z");
        let mut c = Container::new(MAGIC_SHOTS, meta);
        c.blocks.push(vec![1, 2, 3, 4]);
        c.blocks.push(vec![]);
        c.blocks.push(vec![255; 9]);
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        let back = Container::read_from(buf.as_slice(), MAGIC_SHOTS).unwrap();
        let mut buf2 = Vec::new();
        back.write_to(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
        assert_eq!(back.meta.get("distance"), Some("3"));
        assert_eq!(back.blocks.len(), 3);
    }

    #[test]
    fn wrong_magic_rejected() {
        let c = Container::new(MAGIC_SHOTS, Metadata::new());
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        assert!(Container::read_from(buf.as_slice(), MAGIC_DEFECTS).is_err());
    }
}
