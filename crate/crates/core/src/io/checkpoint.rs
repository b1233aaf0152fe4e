//! Versioned binary checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "TXL1"  version:u16  kind:u8
//! metadata: count:u32, then per entry key(len:u16, utf8) value(len:u32, utf8)
//! tensors:  count:u32, then per tensor name(len:u16, utf8) rank:u8 dims:u32*rank data:f32*numel
//! tensors64: same block with data:f64*numel
//! optimizer flag:u8; if 1: count:u32, then per entry
//!     name(len:u16, utf8) step:u64 lr:f64 beta1:f64 beta2:f64 eps:f64
//!     m: tensor block   v: tensor block
//! crc32 of everything before it:u32
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::autodiff::{AdamConfig, AdamState, ParamSet, Scalar, Tensor};
use crate::error::{Error, Result};
use crate::io::atomic::write_atomic;

pub const MAGIC: &[u8; 4] = b"TXL1";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    MaxEnt = 1,
    Knn = 2,
    BpNet = 3,
    Perceptual = 4,
    Generator = 5,
    Discriminator = 6,
    /// Generator, discriminator and their optimizer states mid-training.
    GanState = 7,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::MaxEnt,
        ModelKind::Knn,
        ModelKind::BpNet,
        ModelKind::Perceptual,
        ModelKind::Generator,
        ModelKind::Discriminator,
        ModelKind::GanState,
    ];

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == tag)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Named Adam state stored alongside the parameters it updates.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerEntry {
    pub name: String,
    pub state: AdamState<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: ModelKind,
    pub metadata: BTreeMap<String, String>,
    pub tensors: ParamSet<f32>,
    /// Full-precision tensors, for models trained in f64.
    pub tensors64: ParamSet<f64>,
    pub optimizers: Vec<OptimizerEntry>,
}

impl Checkpoint {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            metadata: BTreeMap::new(),
            tensors: ParamSet::new(),
            tensors64: ParamSet::new(),
            optimizers: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn meta(&self, key: &str) -> Result<&str> {
        self.metadata
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::CorruptCheckpoint(format!("missing metadata key {key:?}")))
    }

    /// Parses a metadata value.
    pub fn meta_parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.meta(key)?;
        raw.parse()
            .map_err(|_| Error::CorruptCheckpoint(format!("metadata {key} = {raw:?} is malformed")))
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor<f32>> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::CorruptCheckpoint(format!("missing tensor {name:?}")))
    }

    pub fn tensor64(&self, name: &str) -> Result<&Tensor<f64>> {
        self.tensors64
            .get(name)
            .ok_or_else(|| Error::CorruptCheckpoint(format!("missing tensor {name:?}")))
    }

    pub fn optimizer(&self, name: &str) -> Result<&AdamState<f32>> {
        self.optimizers
            .iter()
            .find(|o| o.name == name)
            .map(|o| &o.state)
            .ok_or_else(|| Error::CorruptCheckpoint(format!("missing optimizer state {name:?}")))
    }

    pub fn expect_kind(&self, kind: ModelKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::CorruptCheckpoint(format!("expected a {kind} checkpoint, found {}", self.kind)));
        }
        Ok(())
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let mut w = Writer::default();
        w.bytes(MAGIC);
        w.u16(FORMAT_VERSION);
        w.u8(self.kind.tag());
        w.u32(self.metadata.len())?;
        for (k, v) in &self.metadata {
            w.str16(k)?;
            w.str32(v)?;
        }
        w.tensors(&self.tensors)?;
        w.tensors(&self.tensors64)?;
        if self.optimizers.is_empty() {
            w.u8(0);
        } else {
            w.u8(1);
            w.u32(self.optimizers.len())?;
            for o in &self.optimizers {
                w.str16(&o.name)?;
                w.u64(o.state.step);
                let c = o.state.config;
                for v in [c.learning_rate, c.beta1, c.beta2, c.epsilon] {
                    w.f64(v);
                }
                w.tensors(&o.state.m)?;
                w.tensors(&o.state.v)?;
            }
        }
        let crc = crc32fast::hash(&w.buf);
        w.buf.extend(crc.to_le_bytes());
        Ok(w.buf)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 2 + 1 + 4 {
            return Err(Error::CorruptCheckpoint("file too short".into()));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::CorruptCheckpoint("bad magic".into()));
        }
        let (body, crc) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(body).to_le_bytes() != crc {
            return Err(Error::CorruptCheckpoint("CRC mismatch".into()));
        }
        let mut r = Reader { buf: body, pos: 4 };
        let version = r.u16()?;
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let tag = r.u8()?;
        let kind = ModelKind::from_tag(tag).ok_or_else(|| Error::CorruptCheckpoint(format!("unknown model kind {tag}")))?;
        let mut metadata = BTreeMap::new();
        for _ in 0..r.u32()? {
            let k = r.str16()?;
            let v = r.str32()?;
            metadata.insert(k, v);
        }
        let tensors = r.tensors()?;
        let tensors64 = r.tensors()?;
        let mut optimizers = Vec::new();
        match r.u8()? {
            0 => {}
            1 => {
                for _ in 0..r.u32()? {
                    let name = r.str16()?;
                    let step = r.u64()?;
                    let config = AdamConfig {
                        learning_rate: r.f64()?,
                        beta1: r.f64()?,
                        beta2: r.f64()?,
                        epsilon: r.f64()?,
                    };
                    let m = r.tensors()?;
                    let v = r.tensors()?;
                    m.check_compatible(&v, "checkpoint")
                        .map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
                    optimizers.push(OptimizerEntry {
                        name,
                        state: AdamState { config, step, m, v },
                    });
                }
            }
            f => return Err(Error::CorruptCheckpoint(format!("bad optimizer flag {f}"))),
        }
        if r.pos != body.len() {
            return Err(Error::CorruptCheckpoint(format!("{} trailing bytes", body.len() - r.pos)));
        }
        Ok(Self {
            kind,
            metadata,
            tensors,
            tensors64,
            optimizers,
        })
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<()> {
    write_atomic(path, &checkpoint.encode()?)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::decode(&std::fs::read(path)?)
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

fn too_large(what: &str) -> Error {
    Error::Config(format!("{what} too large for the checkpoint format"))
}

impl Writer {
    fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u16(&mut self, v: u16) {
        self.bytes(&v.to_le_bytes());
    }

    fn u32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| too_large("count"))?;
        self.bytes(&v.to_le_bytes());
        Ok(())
    }

    fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }

    fn str16(&mut self, s: &str) -> Result<()> {
        let n = u16::try_from(s.len()).map_err(|_| too_large("name"))?;
        self.u16(n);
        self.bytes(s.as_bytes());
        Ok(())
    }

    fn str32(&mut self, s: &str) -> Result<()> {
        self.u32(s.len())?;
        self.bytes(s.as_bytes());
        Ok(())
    }

    fn tensors<T: Element>(&mut self, set: &ParamSet<T>) -> Result<()> {
        self.u32(set.len())?;
        for (name, t) in set.iter() {
            self.str16(name)?;
            let rank = u8::try_from(t.shape().len()).map_err(|_| too_large("tensor rank"))?;
            self.u8(rank);
            for &d in t.shape() {
                self.u32(d)?;
            }
            for &v in t.data() {
                v.write_le(&mut self.buf);
            }
        }
        Ok(())
    }
}

/// Tensor element types the format stores.
trait Element: Scalar {
    const SIZE: usize;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
}

impl Element for f32 {
    const SIZE: usize = 4;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4 bytes"))
    }
}

impl Element for f64 {
    const SIZE: usize = 8;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::CorruptCheckpoint("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("exact length"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.array()?) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn string(&mut self, n: usize) -> Result<String> {
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::CorruptCheckpoint("invalid UTF-8".into()))
    }

    fn str16(&mut self) -> Result<String> {
        let n = self.u16()? as usize;
        self.string(n)
    }

    fn str32(&mut self) -> Result<String> {
        let n = self.u32()?;
        self.string(n)
    }

    fn tensors<T: Element>(&mut self) -> Result<ParamSet<T>> {
        let mut set = ParamSet::new();
        for _ in 0..self.u32()? {
            let name = self.str16()?;
            let rank = self.u8()? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(self.u32()?);
            }
            let numel = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .and_then(|n| n.checked_mul(T::SIZE))
                .ok_or_else(|| Error::CorruptCheckpoint("tensor too large".into()))?;
            let raw = self.take(numel)?;
            let data = raw.chunks_exact(T::SIZE).map(T::read_le).collect();
            if set.get(&name).is_some() {
                return Err(Error::CorruptCheckpoint(format!("duplicate tensor {name:?}")));
            }
            let t = Tensor::new(shape, data).map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
            set.insert(&name, t);
        }
        Ok(set)
    }
}
