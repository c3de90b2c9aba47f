use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use super::{Real, WaveError, Wavefield};

pub const SNAPSHOT_MAGIC: &[u8; 9] = b"CTWS-SNAP";

const HEADER_LEN: usize = 9 + 4 * 4;

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotBackend {
    Memory,
    /// Files are created in this directory.
    File(PathBuf),
}

#[derive(Debug)]
enum Store {
    Memory(Vec<Vec<u8>>),
    File { file: File, path: PathBuf },
}

/// Interior wavefields indexed by time step, stored as little-endian f32.
/// A file store is laid out as the header followed by `nt` frames.
#[derive(Debug)]
pub struct SnapshotStore {
    dims: [usize; 3],
    nt: usize,
    written: Vec<bool>,
    store: Store,
    buf: Vec<u8>,
}

impl SnapshotStore {
    pub fn memory(dims: [usize; 3], nt: usize) -> Self {
        SnapshotStore {
            dims,
            nt,
            written: vec![false; nt],
            store: Store::Memory(vec![Vec::new(); nt]),
            buf: Vec::new(),
        }
    }

    /// Creates (truncating) `path` and writes the header.
    pub fn file(path: &Path, dims: [usize; 3], nt: usize) -> Result<Self, WaveError> {
        let mut file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(true)
            .open(path)?;
        file.write_all(&header(dims, nt)?)?;
        Ok(SnapshotStore {
            dims,
            nt,
            written: vec![false; nt],
            store: Store::File {
                file,
                path: path.to_path_buf(),
            },
            buf: Vec::new(),
        })
    }

    pub fn open(
        backend: &SnapshotBackend,
        name: &str,
        dims: [usize; 3],
        nt: usize,
    ) -> Result<Self, WaveError> {
        match backend {
            SnapshotBackend::Memory => Ok(Self::memory(dims, nt)),
            SnapshotBackend::File(dir) => Self::file(&dir.join(name), dims, nt),
        }
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn path(&self) -> Option<&Path> {
        match &self.store {
            Store::Memory(_) => None,
            Store::File { path, .. } => Some(path),
        }
    }

    fn frame_len(&self) -> usize {
        self.dims.iter().product()
    }

    fn check_step(&self, t: usize) -> Result<(), WaveError> {
        if t >= self.nt {
            return Err(WaveError::Snapshot(format!(
                "step {t} outside store of {} steps",
                self.nt
            )));
        }
        Ok(())
    }

    pub fn write(&mut self, t: usize, values: &[f32]) -> Result<(), WaveError> {
        self.check_step(t)?;
        if values.len() != self.frame_len() {
            return Err(WaveError::Snapshot(format!(
                "frame of {} values, store expects {}",
                values.len(),
                self.frame_len()
            )));
        }
        self.buf.clear();
        for v in values {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
        match &mut self.store {
            Store::Memory(frames) => frames[t].clone_from(&self.buf),
            Store::File { file, .. } => {
                file.seek(SeekFrom::Start((HEADER_LEN + t * self.buf.len()) as u64))?;
                file.write_all(&self.buf)?;
            }
        }
        self.written[t] = true;
        Ok(())
    }

    pub fn write_field<T: Real>(
        &mut self,
        t: usize,
        field: &Wavefield<T>,
        scratch: &mut Vec<f32>,
    ) -> Result<(), WaveError> {
        field.interior_f32_into(scratch);
        self.write(t, scratch)
    }

    pub fn read(&mut self, t: usize, out: &mut Vec<f32>) -> Result<(), WaveError> {
        self.check_step(t)?;
        if !self.written[t] {
            return Err(WaveError::Snapshot(format!("step {t} was never written")));
        }
        let bytes = 4 * self.frame_len();
        match &mut self.store {
            Store::Memory(frames) => self.buf.clone_from(&frames[t]),
            Store::File { file, .. } => {
                self.buf.resize(bytes, 0);
                file.seek(SeekFrom::Start((HEADER_LEN + t * bytes) as u64))?;
                file.read_exact(&mut self.buf)?;
            }
        }
        out.clear();
        out.extend(
            self.buf
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])),
        );
        Ok(())
    }

    /// The store's full byte image: header followed by every frame, with
    /// unwritten frames as zeros.
    pub fn encoded(&mut self) -> Result<Vec<u8>, WaveError> {
        let frame_bytes = 4 * self.frame_len();
        match &mut self.store {
            Store::Memory(frames) => {
                let mut out = header(self.dims, self.nt)?;
                for f in frames.iter() {
                    if f.is_empty() {
                        out.resize(out.len() + frame_bytes, 0);
                    } else {
                        out.extend_from_slice(f);
                    }
                }
                Ok(out)
            }
            Store::File { file, .. } => {
                file.flush()?;
                let mut out = Vec::new();
                file.seek(SeekFrom::Start(0))?;
                file.read_to_end(&mut out)?;
                out.resize(HEADER_LEN + self.nt * frame_bytes, 0);
                Ok(out)
            }
        }
    }

    /// Drops the store, deleting its file if it has one.
    pub fn remove(self) -> Result<(), WaveError> {
        if let Store::File { file, path } = self.store {
            drop(file);
            std::fs::remove_file(path)?;
        }
        Ok(())
    }
}

fn header(dims: [usize; 3], nt: usize) -> Result<Vec<u8>, WaveError> {
    let mut h = Vec::with_capacity(HEADER_LEN);
    h.extend_from_slice(SNAPSHOT_MAGIC);
    for v in [nt, dims[0], dims[1], dims[2]] {
        let v = u32::try_from(v)
            .map_err(|_| WaveError::Snapshot(format!("{v} does not fit the header")))?;
        h.extend_from_slice(&v.to_le_bytes());
    }
    Ok(h)
}
