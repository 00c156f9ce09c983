//! Binary snapshot cache.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   8 bytes  "RLNDSNAP"
//! version u32      = 1
//! key     u32 length + UTF-8 bytes
//! freq    u32 length + UTF-8 bytes (Display form of Frequency)
//! nodes   u64
//! windows u64
//! per window:
//!     start f64, end f64, edges u64
//!     per edge: src u32, dst u32, weight f64, timestamp f64
//! ```
//!
//! Node and edge features are recomputed on load, so the file holds only the raw
//! partition.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use sha2::{Digest, Sha256};

use super::{load_edge_list, partition_snapshots, DynamicGraph, EdgeSchema, Frequency, TemporalEdge};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"RLNDSNAP";
const VERSION: u32 = 1;

/// Cache key for a source file under a schema and frequency.
pub fn cache_key(file_bytes: &[u8], schema: &EdgeSchema, frequency: Frequency) -> String {
    let mut h = Sha256::new();
    h.update(file_bytes);
    h.update([0u8]);
    h.update(schema.to_string().as_bytes());
    let digest = h.finalize();
    let freq = frequency.to_string().replace(['.', '/'], "_");
    format!("{}-{}", &hex::encode(digest.as_slice())[..32], freq)
}

/// Directory of cached partitions.
#[derive(Debug, Clone)]
pub struct SnapshotCache {
    dir: PathBuf,
}

impl SnapshotCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.snap"))
    }

    pub fn write(&self, key: &str, g: &DynamicGraph) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.path_for(key);
        let tmp = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        {
            let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
            let mut w = BufWriter::new(file);
            write_graph(&mut w, key, g).map_err(|e| Error::io(&tmp, e))?;
            w.flush().map_err(|e| Error::io(&tmp, e))?;
        }
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Returns `Ok(None)` when no entry exists for `key`.
    pub fn read(&self, key: &str) -> Result<Option<DynamicGraph>> {
        let path = self.path_for(key);
        if !path.exists() {
            return Ok(None);
        }
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        read_graph(&mut BufReader::new(file), key).map(Some)
    }
}

/// Loads `path` through the cache in `cache_dir`, partitioning and storing on a miss.
pub fn load_cached(
    path: impl AsRef<Path>,
    schema: &EdgeSchema,
    frequency: Frequency,
    cache_dir: impl Into<PathBuf>,
) -> Result<DynamicGraph> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let key = cache_key(&bytes, schema, frequency);
    let cache = SnapshotCache::new(cache_dir);
    if let Some(g) = cache.read(&key)? {
        return Ok(g);
    }
    let edges = load_edge_list(path, schema)?;
    let g = partition_snapshots(&edges, frequency)?;
    cache.write(&key, &g)?;
    Ok(g)
}

fn write_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    w.write_u32::<LE>(s.len() as u32)?;
    w.write_all(s.as_bytes())
}

fn read_str<R: Read>(r: &mut R) -> Result<String> {
    let len = r.read_u32::<LE>().map_err(format_err)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf).map_err(format_err)?;
    String::from_utf8(buf).map_err(|_| Error::Format("string is not UTF-8".into()))
}

fn format_err(e: std::io::Error) -> Error {
    Error::Format(format!("truncated snapshot cache: {e}"))
}

fn write_graph<W: Write>(w: &mut W, key: &str, g: &DynamicGraph) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LE>(VERSION)?;
    write_str(w, key)?;
    write_str(w, &g.frequency.to_string())?;
    w.write_u64::<LE>(g.node_count as u64)?;
    w.write_u64::<LE>(g.len() as u64)?;
    for s in &g.snapshots {
        w.write_f64::<LE>(s.window.0)?;
        w.write_f64::<LE>(s.window.1)?;
        w.write_u64::<LE>(s.edge_count() as u64)?;
        for i in 0..s.edge_count() {
            w.write_u32::<LE>(s.src[i])?;
            w.write_u32::<LE>(s.dst[i])?;
            w.write_f64::<LE>(s.weights[i])?;
            w.write_f64::<LE>(s.timestamps[i])?;
        }
    }
    Ok(())
}

fn read_graph<R: Read>(r: &mut R, expected_key: &str) -> Result<DynamicGraph> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(format_err)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a snapshot cache file".into()));
    }
    let version = r.read_u32::<LE>().map_err(format_err)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported snapshot cache version {version}")));
    }
    let key = read_str(r)?;
    if key != expected_key {
        return Err(Error::Format(format!("cache key mismatch: {key}")));
    }
    let frequency: Frequency = read_str(r)?.parse()?;
    let node_count = r.read_u64::<LE>().map_err(format_err)? as usize;
    let n_windows = r.read_u64::<LE>().map_err(format_err)? as usize;
    let mut windows = Vec::with_capacity(n_windows);
    for _ in 0..n_windows {
        let start = r.read_f64::<LE>().map_err(format_err)?;
        let end = r.read_f64::<LE>().map_err(format_err)?;
        let n_edges = r.read_u64::<LE>().map_err(format_err)? as usize;
        let mut edges = Vec::with_capacity(n_edges);
        for _ in 0..n_edges {
            edges.push(TemporalEdge {
                src: r.read_u32::<LE>().map_err(format_err)?,
                dst: r.read_u32::<LE>().map_err(format_err)?,
                weight: r.read_f64::<LE>().map_err(format_err)?,
                timestamp: r.read_f64::<LE>().map_err(format_err)?,
            });
        }
        windows.push(((start, end), edges));
    }
    DynamicGraph::from_windows(windows, frequency, node_count)
}
