//! Flat weights archive: `<name>.manifest` (text) + `<name>.bin` (raw
//! little-endian tensors).
//!
//! Manifest lines are `name dtype shape offset`, where `shape` is a
//! comma-separated dimension list (`-` for a scalar) and `offset` the byte
//! offset into the binary file. Tensors are packed back to back from offset
//! 0, so offsets strictly increase and the last tensor ends exactly at the
//! end of the binary file. Blank lines and `#` comments are ignored.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
    U8,
}

impl Dtype {
    pub fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
            Dtype::U8 => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dtype::F32 => "f32",
            Dtype::F64 => "f64",
            Dtype::U8 => "u8",
        }
    }

    fn parse(s: &str) -> Option<Dtype> {
        match s {
            "f32" => Some(Dtype::F32),
            "f64" => Some(Dtype::F64),
            "u8" => Some(Dtype::U8),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub name: String,
    pub dtype: Dtype,
    pub shape: Vec<usize>,
    pub offset: u64,
}

impl Entry {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn byte_len(&self) -> u64 {
        self.numel() as u64 * self.dtype.width() as u64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    entries: Vec<Entry>,
}

const MAX_RANK: usize = 8;

impl Manifest {
    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Total payload size the binary file must have.
    pub fn total_bytes(&self) -> u64 {
        self.entries.last().map_or(0, |e| e.offset + e.byte_len())
    }

    /// Appends an entry packed right after the previous one.
    pub fn push(&mut self, name: &str, dtype: Dtype, shape: &[usize]) -> Result<&Entry> {
        check_name(name, 0)?;
        if self.get(name).is_some() {
            return Err(Error::Archive(format!("duplicate tensor `{name}`")));
        }
        let offset = self.total_bytes();
        self.entries.push(Entry {
            name: name.to_string(),
            dtype,
            shape: shape.to_vec(),
            offset,
        });
        Ok(self.entries.last().unwrap())
    }

    pub fn parse(text: &str) -> Result<Manifest> {
        let mut entries: Vec<Entry> = Vec::new();
        let mut expected: u64 = 0;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Manifest { line: line_no, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [name, dtype, shape, offset] = fields[..] else {
                return Err(err(format!("expected 4 fields, got {}", fields.len())));
            };
            check_name(name, line_no)?;
            let dtype = Dtype::parse(dtype).ok_or_else(|| err(format!("unknown dtype `{dtype}`")))?;
            let shape = parse_shape(shape).ok_or_else(|| err(format!("bad shape `{shape}`")))?;
            let offset: u64 = offset
                .parse()
                .map_err(|_| err(format!("bad offset `{offset}`")))?;
            if offset != expected {
                return Err(err(format!(
                    "offset {offset} breaks packing (expected {expected}); tensors must be contiguous and non-overlapping"
                )));
            }
            if entries.iter().any(|e| e.name == name) {
                return Err(err(format!("duplicate tensor `{name}`")));
            }
            let bytes = shape
                .iter()
                .try_fold(dtype.width() as u64, |acc, &d| acc.checked_mul(d as u64))
                .ok_or_else(|| err("tensor size overflows".to_string()))?;
            expected = offset
                .checked_add(bytes)
                .ok_or_else(|| err("archive size overflows".to_string()))?;
            entries.push(Entry {
                name: name.to_string(),
                dtype,
                shape,
                offset,
            });
        }
        Ok(Manifest { entries })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# name dtype shape offset\n");
        for e in &self.entries {
            let shape = if e.shape.is_empty() {
                "-".to_string()
            } else {
                e.shape
                    .iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            };
            out.push_str(&format!(
                "{} {} {} {}\n",
                e.name,
                e.dtype.as_str(),
                shape,
                e.offset
            ));
        }
        out
    }
}

fn check_name(name: &str, line: usize) -> Result<()> {
    let ok = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-' | '/'));
    if ok {
        Ok(())
    } else {
        Err(Error::Manifest {
            line,
            msg: format!("invalid tensor name `{name}`"),
        })
    }
}

fn parse_shape(s: &str) -> Option<Vec<usize>> {
    if s == "-" {
        return Some(Vec::new());
    }
    let dims: Option<Vec<usize>> = s.split(',').map(|d| d.parse().ok()).collect();
    dims.filter(|d| d.len() <= MAX_RANK)
}

/// A manifest together with its binary payload.
#[derive(Debug, Clone, Default)]
pub struct Archive {
    manifest: Manifest,
    data: Vec<u8>,
}

pub fn manifest_path(base: &Path) -> PathBuf {
    with_suffix(base, "manifest")
}

pub fn bin_path(base: &Path) -> PathBuf {
    with_suffix(base, "bin")
}

fn with_suffix(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

impl Archive {
    pub fn new() -> Self {
        Archive::default()
    }

    /// Pairs a parsed manifest with a payload, checking the size contract.
    pub fn from_parts(manifest: Manifest, data: Vec<u8>) -> Result<Archive> {
        if manifest.total_bytes() != data.len() as u64 {
            return Err(Error::Archive(format!(
                "manifest describes {} bytes but payload has {}",
                manifest.total_bytes(),
                data.len()
            )));
        }
        Ok(Archive { manifest, data })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.manifest.entries.iter().map(|e| e.name.as_str())
    }

    pub fn add_f32(&mut self, name: &str, shape: &[usize], values: &[f32]) -> Result<()> {
        self.add(name, Dtype::F32, shape, values.len(), |out| {
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        })
    }

    pub fn add_f64(&mut self, name: &str, shape: &[usize], values: &[f64]) -> Result<()> {
        self.add(name, Dtype::F64, shape, values.len(), |out| {
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        })
    }

    pub fn add_u8(&mut self, name: &str, shape: &[usize], values: &[u8]) -> Result<()> {
        self.add(name, Dtype::U8, shape, values.len(), |out| {
            out.extend_from_slice(values)
        })
    }

    fn add(
        &mut self,
        name: &str,
        dtype: Dtype,
        shape: &[usize],
        len: usize,
        write: impl FnOnce(&mut Vec<u8>),
    ) -> Result<()> {
        let numel: usize = shape.iter().product();
        if numel != len {
            return Err(Error::Archive(format!(
                "`{name}`: shape {shape:?} holds {numel} values, got {len}"
            )));
        }
        self.manifest.push(name, dtype, shape)?;
        write(&mut self.data);
        Ok(())
    }

    fn entry(&self, name: &str, dtype: Dtype) -> Result<&Entry> {
        let e = self
            .manifest
            .get(name)
            .ok_or_else(|| Error::Archive(format!("missing tensor `{name}`")))?;
        if e.dtype != dtype {
            return Err(Error::Archive(format!(
                "`{name}` is {}, expected {}",
                e.dtype.as_str(),
                dtype.as_str()
            )));
        }
        Ok(e)
    }

    fn bytes(&self, e: &Entry) -> &[u8] {
        &self.data[e.offset as usize..(e.offset + e.byte_len()) as usize]
    }

    /// Reads an f32 tensor (f64 tensors are narrowed).
    pub fn f32(&self, name: &str) -> Result<(Vec<usize>, Vec<f32>)> {
        if let Ok(e) = self.entry(name, Dtype::F64) {
            let (shape, v) = (e.shape.clone(), self.f64(name)?.1);
            return Ok((shape, v.into_iter().map(|x| x as f32).collect()));
        }
        let e = self.entry(name, Dtype::F32)?;
        let v = self
            .bytes(e)
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok((e.shape.clone(), v))
    }

    /// Reads a floating tensor at f64 precision (f32 tensors are widened).
    pub fn f64(&self, name: &str) -> Result<(Vec<usize>, Vec<f64>)> {
        if let Ok(e) = self.entry(name, Dtype::F32) {
            let v = self
                .bytes(e)
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect();
            return Ok((e.shape.clone(), v));
        }
        let e = self.entry(name, Dtype::F64)?;
        let v = self
            .bytes(e)
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok((e.shape.clone(), v))
    }

    pub fn u8(&self, name: &str) -> Result<(Vec<usize>, &[u8])> {
        let e = self.entry(name, Dtype::U8)?;
        Ok((e.shape.clone(), self.bytes(e)))
    }

    pub fn save(&self, base: &Path) -> Result<()> {
        if let Some(dir) = base.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let bin = bin_path(base);
        fs::write(&bin, &self.data).map_err(|e| Error::io(&bin, e))?;
        let man = manifest_path(base);
        fs::write(&man, self.manifest.to_text()).map_err(|e| Error::io(&man, e))?;
        Ok(())
    }

    pub fn load(base: &Path) -> Result<Archive> {
        let man = manifest_path(base);
        let text = fs::read_to_string(&man).map_err(|e| Error::io(&man, e))?;
        let manifest = Manifest::parse(&text)?;
        let bin = bin_path(base);
        let data = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
        Archive::from_parts(manifest, data)
    }
}

/// Name → tensor view, handy for loaders that look tensors up repeatedly.
pub fn index(archive: &Archive) -> HashMap<&str, &Entry> {
    archive
        .manifest
        .entries
        .iter()
        .map(|e| (e.name.as_str(), e))
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("sub/net");
        let mut a = Archive::new();
        a.add_f32("w", &[2, 3], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        a.add_u8("mask", &[4], &[1, 0, 1, 1]).unwrap();
        a.add_f64("scale", &[], &[0.5]).unwrap();
        a.save(&base).unwrap();
        let b = Archive::load(&base).unwrap();
        assert_eq!(
            b.f32("w").unwrap(),
            (vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
        );
        assert_eq!(b.u8("mask").unwrap().1, &[1, 0, 1, 1]);
        assert_eq!(b.f64("scale").unwrap().1, vec![0.5]);
        assert_eq!(b.data().len() as u64, b.manifest().total_bytes());
    }

    #[test]
    fn rejects_overlap_gap_and_size_mismatch() {
        assert!(Manifest::parse("a f32 2 0\nb f32 2 4\n").is_err());
        assert!(Manifest::parse("a f32 2 0\nb f32 2 12\n").is_err());
        assert!(Manifest::parse("a f32 2 4\n").is_err());
        let m = Manifest::parse("a f32 2 0\nb u8 3 8\n").unwrap();
        assert_eq!(m.total_bytes(), 11);
        assert!(Archive::from_parts(m.clone(), vec![0; 10]).is_err());
        assert!(Archive::from_parts(m, vec![0; 11]).is_ok());
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Manifest::parse("a f16 2 0").is_err());
        assert!(Manifest::parse("a f32 2x3 0").is_err());
        assert!(Manifest::parse("a f32 2").is_err());
        assert!(Manifest::parse("a f32 2 0\na f32 2 8").is_err());
        assert!(Manifest::parse("bad name f32 2 0").is_err());
        assert!(Manifest::parse("a f32 99999999999,99999999999,99999999999 0").is_err());
    }

    #[test]
    fn dtype_mismatch_and_missing() {
        let mut a = Archive::new();
        a.add_u8("m", &[1], &[3]).unwrap();
        assert!(a.f32("m").is_err());
        assert!(a.f32("nope").is_err());
        assert!(a.add_f32("x", &[2], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn manifest_text_round_trip(shapes in prop::collection::vec(prop::collection::vec(0usize..5, 0..4), 0..6)) {
            let mut m = Manifest::default();
            for (i, s) in shapes.iter().enumerate() {
                let dtype = [Dtype::F32, Dtype::F64, Dtype::U8][i % 3];
                m.push(&format!("t{i}.w"), dtype, s).unwrap();
            }
            prop_assert_eq!(Manifest::parse(&m.to_text()).unwrap(), m);
        }
    }
}
