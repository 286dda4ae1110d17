//! On-disk gallery: `manifest.txt` plus one binary descriptor file per name.
//!
//! Descriptor file layout (little-endian):
//!
//! | offset | size | field                              |
//! |--------|------|------------------------------------|
//! | 0      | 4    | magic `LBPG`                       |
//! | 4      | 2    | format version (1)                 |
//! | 6      | 4    | sample count `n`                   |
//! | 10     | 8·n·3009 | histogram values as `f64`      |
//!
//! The manifest holds `version 1`, `theta_u <x>`, `fallback <x>` and one
//! `identity <name> <file>` line per enrolled name.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::gallery::Gallery;
use super::lbp::{LbpDescriptor, DESCRIPTOR_LEN};
use super::FaceIdError;

pub const MAGIC: &[u8; 4] = b"LBPG";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 10;

pub fn encode_samples(samples: &[LbpDescriptor]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + samples.len() * DESCRIPTOR_LEN * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(samples.len() as u32).to_le_bytes());
    for s in samples {
        for v in s.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_samples(bytes: &[u8]) -> Result<Vec<LbpDescriptor>, FaceIdError> {
    let corrupt = |m: &str| FaceIdError::CorruptStore(m.to_string());
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(corrupt("unsupported version"));
    }
    let count = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != count * DESCRIPTOR_LEN * 8 {
        return Err(corrupt("length does not match sample count"));
    }
    body.chunks_exact(DESCRIPTOR_LEN * 8)
        .map(|chunk| {
            let values = chunk
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect();
            LbpDescriptor::from_values(values).ok_or_else(|| corrupt("invalid histogram value"))
        })
        .collect()
}

pub fn save_gallery(gallery: &Gallery, dir: &Path) -> Result<(), FaceIdError> {
    fs::create_dir_all(dir)?;
    let mut manifest = format!(
        "version {VERSION}\ntheta_u {:?}\nfallback {:?}\n",
        gallery.threshold(),
        gallery.fallback_threshold()
    );
    for (name, samples) in gallery.entries() {
        let file = format!("{name}.lbp");
        fs::write(dir.join(&file), encode_samples(samples))?;
        manifest.push_str(&format!("identity {name} {file}\n"));
    }
    fs::write(dir.join("manifest.txt"), manifest)?;
    Ok(())
}

pub fn load_gallery(dir: &Path) -> Result<Gallery, FaceIdError> {
    let text = fs::read_to_string(dir.join("manifest.txt"))?;
    let corrupt = |m: String| FaceIdError::CorruptStore(m);
    let mut theta = None;
    let mut fallback = None;
    let mut entries = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.as_slice() {
            ["version", v] if *v == VERSION.to_string() => {}
            ["version", v] => return Err(corrupt(format!("unsupported manifest version {v}"))),
            ["theta_u", v] => theta = Some(v.parse::<f64>().map_err(|_| corrupt(format!("line {}: bad theta_u", n + 1)))?),
            ["fallback", v] => fallback = Some(v.parse::<f64>().map_err(|_| corrupt(format!("line {}: bad fallback", n + 1)))?),
            ["identity", name, file] => {
                let samples = decode_samples(&fs::read(dir.join(file))?)?;
                entries.insert(name.to_string(), samples);
            }
            _ => return Err(corrupt(format!("line {}: unrecognised entry", n + 1))),
        }
    }
    let theta = theta.ok_or_else(|| corrupt("missing theta_u".into()))?;
    Gallery::from_parts(entries, theta, fallback.unwrap_or(theta))
}
