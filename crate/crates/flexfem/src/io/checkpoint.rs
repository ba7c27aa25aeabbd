//! Binary simulation snapshots: time state, BDF history vectors, and the
//! structured-mesh descriptor, with bit-exact round trips.

use super::IoError;
use crate::linalg::DVector;
use std::path::Path;

const MAGIC: &[u8; 4] = b"FXCP";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct MeshDescriptor {
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub subdivisions: Vec<usize>,
    pub degree: usize,
    pub components: usize,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub time: f64,
    pub step_index: usize,
    pub time_step: f64,
    pub bdf_order: usize,
    pub mesh: MeshDescriptor,
    /// Named solution vectors, order preserved; BDF history entries are
    /// stored most recent first under their own names.
    pub vectors: Vec<(String, DVector)>,
}

impl Checkpoint {
    pub fn vector(&self, name: &str) -> Option<&DVector> {
        self.vectors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.buf.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IoError> {
        if self.pos + n > self.data.len() {
            return Err(IoError::CorruptCheckpoint(format!(
                "unexpected end of file at byte {}",
                self.data.len()
            )));
        }
        let slice = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }
    fn u32(&mut self) -> Result<u32, IoError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, IoError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, IoError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize, IoError> {
        usize::try_from(self.u64()?)
            .map_err(|_| IoError::CorruptCheckpoint("length overflows usize".to_string()))
    }
    fn str(&mut self) -> Result<String, IoError> {
        let len = self.usize()?;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| IoError::CorruptCheckpoint("name is not utf-8".to_string()))
    }
}

pub fn checkpoint_save(path: impl AsRef<Path>, checkpoint: &Checkpoint) -> Result<(), IoError> {
    let mut w = Writer { buf: Vec::new() };
    w.buf.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.f64(checkpoint.time);
    w.u64(checkpoint.step_index as u64);
    w.f64(checkpoint.time_step);
    w.u32(checkpoint.bdf_order as u32);

    let mesh = &checkpoint.mesh;
    w.u32(mesh.dim as u32);
    for axis in 0..mesh.dim {
        w.f64(mesh.lower[axis]);
        w.f64(mesh.upper[axis]);
        w.u64(mesh.subdivisions[axis] as u64);
    }
    w.u32(mesh.degree as u32);
    w.u32(mesh.components as u32);

    w.u64(checkpoint.vectors.len() as u64);
    for (name, vector) in &checkpoint.vectors {
        w.str(name);
        w.u64(vector.len() as u64);
        for i in 0..vector.len() {
            w.f64(vector[i]);
        }
    }
    std::fs::write(path.as_ref(), &w.buf)?;
    Ok(())
}

pub fn checkpoint_load(path: impl AsRef<Path>) -> Result<Checkpoint, IoError> {
    let data = std::fs::read(path.as_ref())?;
    let mut r = Reader {
        data: &data,
        pos: 0,
    };
    if r.take(4)? != MAGIC {
        return Err(IoError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(IoError::UnsupportedVersion(version));
    }
    let time = r.f64()?;
    let step_index = r.u64()? as usize;
    let time_step = r.f64()?;
    let bdf_order = r.u32()? as usize;

    let dim = r.u32()? as usize;
    if !(1..=3).contains(&dim) {
        return Err(IoError::CorruptCheckpoint(format!("dimension {dim}")));
    }
    let mut lower = Vec::with_capacity(dim);
    let mut upper = Vec::with_capacity(dim);
    let mut subdivisions = Vec::with_capacity(dim);
    for _ in 0..dim {
        lower.push(r.f64()?);
        upper.push(r.f64()?);
        subdivisions.push(r.usize()?);
    }
    let degree = r.u32()? as usize;
    let components = r.u32()? as usize;

    let n_vectors = r.usize()?;
    let mut vectors = Vec::with_capacity(n_vectors.min(1024));
    for _ in 0..n_vectors {
        let name = r.str()?;
        let len = r.usize()?;
        let mut values = Vec::with_capacity(len.min(1 << 24));
        for _ in 0..len {
            values.push(r.f64()?);
        }
        vectors.push((name, DVector::from_vec(values)));
    }
    if r.pos != data.len() {
        return Err(IoError::CorruptCheckpoint(format!(
            "{} trailing bytes",
            data.len() - r.pos
        )));
    }
    Ok(Checkpoint {
        time,
        step_index,
        time_step,
        bdf_order,
        mesh: MeshDescriptor {
            dim,
            lower,
            upper,
            subdivisions,
            degree,
            components,
        },
        vectors,
    })
}
