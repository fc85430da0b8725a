//! Checkpoint container.
//!
//! Layout: 8-byte magic `NMAPCKPT`, a 4-byte little-endian manifest byte
//! length, a UTF-8 JSON manifest, then the raw little-endian arrays
//! back-to-back in manifest order. Each manifest entry records `name`,
//! `dtype`, `shape`, and `offset`; offsets count bytes from the start of
//! the data section (the byte after the manifest). Optimizer accumulators
//! are stored under `opt/`-prefixed names; the RNG seed and free-form run
//! metadata live in the manifest itself.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::error::{AdError, AdResult};
use super::optim::RmsProp;
use super::params::ParamStore;
use super::scalar::Real;
use super::shape::Shape;

pub const MAGIC: &[u8; 8] = b"NMAPCKPT";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub dtype: String,
    pub shape: Vec<usize>,
    pub offset: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub meta: serde_json::Map<String, serde_json::Value>,
    pub entries: Vec<ManifestEntry>,
}

/// Serializes parameters, optimizer accumulators, the run seed, and `meta`
/// to `path`.
pub fn save<E: Real>(
    path: &Path,
    store: &ParamStore<E>,
    optimizer: Option<&RmsProp<E>>,
    seed: u64,
    meta: serde_json::Map<String, serde_json::Value>,
) -> AdResult<()> {
    let mut entries = Vec::new();
    let mut payload: Vec<u8> = Vec::new();
    let mut append = |name: String, shape: Vec<usize>, data: &[E]| {
        entries.push(ManifestEntry {
            name,
            dtype: E::DTYPE.to_string(),
            shape,
            offset: payload.len() as u64,
        });
        for v in data {
            payload.extend_from_slice(&v.to_le_bytes_vec());
        }
    };
    for id in store.ids() {
        append(store.name(id).to_string(), store.shape(id).dims().to_vec(), store.data(id));
    }
    if let Some(opt) = optimizer {
        for (name, values) in opt.state(store) {
            let len = values.len();
            append(name, vec![len], values);
        }
    }

    let manifest = Manifest { seed, meta, entries };
    let manifest_json = serde_json::to_vec(&manifest)
        .map_err(|e| AdError::Checkpoint(format!("manifest encode: {e}")))?;
    let manifest_len = u32::try_from(manifest_json.len())
        .map_err(|_| AdError::Checkpoint("manifest exceeds 4 GiB".to_string()))?;

    let mut out = Vec::with_capacity(12 + manifest_json.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&manifest_len.to_le_bytes());
    out.extend_from_slice(&manifest_json);
    out.extend_from_slice(&payload);
    fs::write(path, out)?;
    Ok(())
}

/// Parses the header and manifest without touching the data section.
pub fn read_manifest(path: &Path) -> AdResult<Manifest> {
    let bytes = fs::read(path)?;
    parse_manifest(&bytes).map(|(m, _)| m)
}

fn parse_manifest(bytes: &[u8]) -> AdResult<(Manifest, usize)> {
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(AdError::Checkpoint("missing NMAPCKPT magic".to_string()));
    }
    let mlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if bytes.len() < 12 + mlen {
        return Err(AdError::Checkpoint("truncated manifest".to_string()));
    }
    let manifest: Manifest = serde_json::from_slice(&bytes[12..12 + mlen])
        .map_err(|e| AdError::Checkpoint(format!("manifest decode: {e}")))?;
    Ok((manifest, 12 + mlen))
}

/// Result of a successful load: the stored seed plus manifest metadata.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub seed: u64,
    pub meta: serde_json::Map<String, serde_json::Value>,
}

/// Restores `store` (and `optimizer`, when given) from `path`.
///
/// Every model parameter must appear with an identical shape and the
/// element type in use; all violations are collected and reported together.
/// Optimizer entries are skipped when no optimizer is supplied.
pub fn load<E: Real>(
    path: &Path,
    store: &mut ParamStore<E>,
    mut optimizer: Option<&mut RmsProp<E>>,
) -> AdResult<LoadedRun> {
    let bytes = fs::read(path)?;
    let (manifest, data_start) = parse_manifest(&bytes)?;
    let data = &bytes[data_start..];

    let by_name: HashMap<&str, &ManifestEntry> =
        manifest.entries.iter().map(|e| (e.name.as_str(), e)).collect();

    let mut problems: Vec<String> = Vec::new();
    for id in store.ids() {
        let name = store.name(id).to_string();
        match by_name.get(name.as_str()) {
            None => problems.push(format!("{name}: missing from checkpoint")),
            Some(entry) => {
                if entry.shape != store.shape(id).dims() {
                    problems.push(format!(
                        "{name}: checkpoint shape {:?} vs model {}",
                        entry.shape,
                        store.shape(id)
                    ));
                } else if entry.dtype != E::DTYPE {
                    problems.push(format!(
                        "{name}: checkpoint dtype {} vs model {}",
                        entry.dtype,
                        E::DTYPE
                    ));
                }
            }
        }
    }
    for entry in &manifest.entries {
        let known = entry.name.starts_with("opt/")
            || store.lookup(&entry.name).is_some();
        if !known {
            problems.push(format!("{}: not a model parameter", entry.name));
        }
    }
    if !problems.is_empty() {
        return Err(AdError::Checkpoint(problems.join("; ")));
    }

    let read_entry = |entry: &ManifestEntry| -> AdResult<Vec<E>> {
        let count: usize = entry.shape.iter().product();
        let start = entry.offset as usize;
        let end = start + count * E::BYTE_WIDTH;
        if end > data.len() {
            return Err(AdError::Checkpoint(format!("{}: data out of range", entry.name)));
        }
        Ok(data[start..end].chunks_exact(E::BYTE_WIDTH).map(E::from_le_slice).collect())
    };

    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        let name = store.name(id).to_string();
        let entry = by_name[name.as_str()];
        let values = read_entry(entry)?;
        store.data_mut(id).copy_from_slice(&values);
    }
    if let Some(opt) = optimizer.as_deref_mut() {
        for entry in manifest.entries.iter().filter(|e| e.name.starts_with("opt/")) {
            let values = read_entry(entry)?;
            opt.load_state(store, &entry.name, values)?;
        }
    }
    Ok(LoadedRun { seed: manifest.seed, meta: manifest.meta })
}

/// Verifies a shape described by a manifest against an expected [`Shape`].
pub fn shapes_match(entry: &ManifestEntry, shape: &Shape) -> bool {
    entry.shape == shape.dims()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::optim::RmsPropConfig;
    use crate::autodiff::params::Init;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn store_with(names: &[(&str, Shape)]) -> ParamStore<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut store = ParamStore::new();
        for (name, shape) in names {
            store.register(name, shape.clone(), Init::Glorot, &mut rng).unwrap();
        }
        store
    }

    #[test]
    fn round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt_0.nmck");
        let mut store = store_with(&[("a/w", Shape::matrix(3, 4)), ("a/b", Shape::vector(4))]);
        let opt = RmsProp::new(RmsPropConfig::default(), &store);
        let mut meta = serde_json::Map::new();
        meta.insert("agent".into(), "nm-gru".into());
        save(&path, &store, Some(&opt), 123, meta).unwrap();

        let original: Vec<Vec<f32>> = store.ids().map(|id| store.data(id).to_vec()).collect();
        for id in store.ids().collect::<Vec<_>>() {
            store.data_mut(id).iter_mut().for_each(|v| *v = 0.0);
        }
        let mut opt2 = RmsProp::new(RmsPropConfig::default(), &store);
        let run = load(&path, &mut store, Some(&mut opt2)).unwrap();
        assert_eq!(run.seed, 123);
        assert_eq!(run.meta["agent"], "nm-gru");
        for (id, orig) in store.ids().zip(&original) {
            assert_eq!(store.data(id), orig.as_slice());
        }
    }

    #[test]
    fn header_layout_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.nmck");
        let store = store_with(&[("w", Shape::vector(2))]);
        save(&path, &store, None, 7, serde_json::Map::new()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], b"NMAPCKPT");
        let mlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let manifest: Manifest = serde_json::from_slice(&bytes[12..12 + mlen]).unwrap();
        assert_eq!(manifest.seed, 7);
        assert_eq!(manifest.entries.len(), 1);
        assert_eq!(manifest.entries[0].dtype, "f32");
        // two f32 values follow the manifest
        assert_eq!(bytes.len(), 12 + mlen + 8);
    }

    #[test]
    fn shape_mismatch_lists_offending_names() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.nmck");
        let saved = store_with(&[("a/w", Shape::matrix(3, 4)), ("a/b", Shape::vector(4))]);
        save(&path, &saved, None, 0, serde_json::Map::new()).unwrap();

        let mut other = store_with(&[("a/w", Shape::matrix(4, 3)), ("a/b", Shape::vector(4))]);
        let err = load(&path, &mut other, None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("a/w"), "{msg}");
        assert!(!msg.contains("a/b:"), "unaffected parameter blamed: {msg}");
    }

    #[test]
    fn missing_parameter_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.nmck");
        let saved = store_with(&[("a/w", Shape::vector(2))]);
        save(&path, &saved, None, 0, serde_json::Map::new()).unwrap();

        let mut other = store_with(&[("a/w", Shape::vector(2)), ("a/extra", Shape::vector(1))]);
        let err = load(&path, &mut other, None).unwrap_err();
        assert!(err.to_string().contains("a/extra"), "{err}");
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.nmck");
        std::fs::write(&path, b"NOTACKPT\0\0\0\0").unwrap();
        let mut store = store_with(&[("w", Shape::vector(1))]);
        assert!(matches!(load(&path, &mut store, None), Err(AdError::Checkpoint(_))));
    }
}
