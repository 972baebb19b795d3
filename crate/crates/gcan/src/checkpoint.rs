//! Shared on-disk format: a JSON header followed by flat little-endian f64
//! data. Used for parameter checkpoints and generated datasets.
//!
//! Layout: 4-byte magic `GCAN`, u32 little-endian header length, the UTF-8
//! JSON header, then the raw f64 payload.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::train::ParamStore;

const MAGIC: &[u8; 4] = b"GCAN";

pub fn write_blob(path: &Path, header: &Value, data: &[f64]) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    let header_bytes = serde_json::to_vec(header).map_err(|e| Error::Format(e.to_string()))?;
    file.write_all(MAGIC)?;
    file.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    file.write_all(&header_bytes)?;
    for v in data {
        file.write_all(&v.to_le_bytes())?;
    }
    file.flush()?;
    Ok(())
}

pub fn read_blob(path: &Path) -> Result<(Value, Vec<f64>)> {
    let mut file = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic; not a gcan blob".into()));
    }
    let mut len_bytes = [0u8; 4];
    file.read_exact(&mut len_bytes)?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    file.read_exact(&mut header_bytes)?;
    let header: Value =
        serde_json::from_slice(&header_bytes).map_err(|e| Error::Format(e.to_string()))?;
    let mut raw = Vec::new();
    file.read_to_end(&mut raw)?;
    if raw.len() % 8 != 0 {
        return Err(Error::Format(format!(
            "payload length {} is not a multiple of 8",
            raw.len()
        )));
    }
    let data = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((header, data))
}

/// Writes every parameter buffer with its name, shape, and offset.
pub fn save_params(store: &ParamStore, path: &Path) -> Result<()> {
    let mut params = Vec::new();
    let mut data = Vec::with_capacity(store.scalar_count());
    for (_, entry) in store.iter() {
        params.push(json!({
            "name": entry.name,
            "shape": entry.shape,
            "offset": data.len(),
            "len": entry.value.len(),
        }));
        data.extend_from_slice(&entry.value);
    }
    let header = json!({
        "version": 1,
        "kind": "checkpoint",
        "params": params,
    });
    write_blob(path, &header, &data)
}

/// Loads values into an existing store with identical names and shapes.
pub fn load_params(store: &mut ParamStore, path: &Path) -> Result<()> {
    let (header, data) = read_blob(path)?;
    if header["kind"] != "checkpoint" {
        return Err(Error::Format(format!(
            "expected a checkpoint blob, got kind {}",
            header["kind"]
        )));
    }
    let params = header["params"]
        .as_array()
        .ok_or_else(|| Error::Format("checkpoint header has no params array".into()))?;
    for p in params {
        let name = p["name"]
            .as_str()
            .ok_or_else(|| Error::Format("param entry without a name".into()))?;
        let offset = p["offset"].as_u64().unwrap_or(0) as usize;
        let len = p["len"].as_u64().unwrap_or(0) as usize;
        let id = store.id_of(name).ok_or_else(|| {
            Error::Format(format!("checkpoint param '{name}' not present in the model"))
        })?;
        let value = store.value_mut(id);
        if value.len() != len || offset + len > data.len() {
            return Err(Error::Format(format!(
                "checkpoint param '{name}' has {len} values, model expects {}",
                value.len()
            )));
        }
        value.copy_from_slice(&data[offset..offset + len]);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_round_trip_bit_exactly() {
        let dir = std::env::temp_dir().join(format!("gcan-ckpt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("test.ckpt");

        let mut store = ParamStore::new();
        store
            .register("a.w", &[2, 3], vec![0.1, -0.2, 0.3, f64::MIN_POSITIVE, 1e300, -0.0])
            .unwrap();
        store.register("b", &[1], vec![42.0]).unwrap();
        save_params(&store, &path).unwrap();

        let mut other = ParamStore::new();
        other.register("a.w", &[2, 3], vec![0.0; 6]).unwrap();
        other.register("b", &[1], vec![0.0]).unwrap();
        load_params(&mut other, &path).unwrap();
        for (id, entry) in store.iter() {
            let got = other.value(other.id_of(&entry.name).unwrap());
            for (x, y) in store.value(id).iter().zip(got) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = std::env::temp_dir().join(format!("gcan-bad-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.bin");
        std::fs::write(&path, b"not a blob at all").unwrap();
        assert!(read_blob(&path).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
