//! Binary container for trained models and monitoring profiles.
//!
//! Layout: 4-byte magic `KANM`, little-endian `u32` format version,
//! little-endian `u32` header length, a JSON header describing the
//! architecture and a manifest of named float sections, then the sections'
//! raw `f64` little-endian payloads in manifest order. Floats never pass
//! through text, so save/load round-trips are bitwise exact.

use crate::error::{Error, Result};
use crate::model::{build_model, AeArchitecture, Model, Variant};
use serde::{Deserialize, Serialize};
use std::path::Path;

const MAGIC: [u8; 4] = *b"KANM";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ArchHeader {
    variant: String,
    layer_sizes: Vec<usize>,
    spline_grid: usize,
    spline_order: usize,
    spline_range: [f64; 2],
    rbf_centers: usize,
    rbf_range: [f64; 2],
    fourier_modes: usize,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct SectionHeader {
    name: String,
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: String,
    arch: ArchHeader,
    sections: Vec<SectionHeader>,
}

fn arch_header(model: &Model) -> ArchHeader {
    let arch = model.arch();
    let (spline_grid, spline_order, spline_range) = arch.spline_settings();
    let (rbf_centers, rbf_range) = arch.rbf_settings();
    ArchHeader {
        variant: arch.variant().name().to_string(),
        layer_sizes: arch.layer_sizes().to_vec(),
        spline_grid,
        spline_order,
        spline_range: [spline_range.0, spline_range.1],
        rbf_centers,
        rbf_range: [rbf_range.0, rbf_range.1],
        fourier_modes: arch.fourier_settings(),
        seed: model.seed(),
    }
}

fn arch_from_header(h: &ArchHeader) -> Result<AeArchitecture> {
    let variant: Variant = h.variant.parse()?;
    Ok(AeArchitecture::new(variant, h.layer_sizes.clone())?
        .with_spline(h.spline_grid, h.spline_order, (h.spline_range[0], h.spline_range[1]))
        .with_rbf(h.rbf_centers, (h.rbf_range[0], h.rbf_range[1]))
        .with_fourier_modes(h.fourier_modes))
}

/// Model parameter and buffer sections in canonical order.
fn model_sections(model: &Model) -> Vec<(String, Vec<f64>)> {
    let mut sections = Vec::new();
    for (l, layer) in model.layers().iter().enumerate() {
        for (name, arr) in layer.param_arrays() {
            sections.push((format!("layer{l}.{name}"), arr.to_vec()));
        }
        for (name, arr) in layer.buffers() {
            sections.push((format!("layer{l}.buffer.{name}"), arr.to_vec()));
        }
    }
    sections
}

/// Writes a container holding `model` plus caller-owned extra sections.
pub(crate) fn write_container(
    path: &Path,
    kind: &str,
    model: &Model,
    extras: &[(String, Vec<f64>)],
) -> Result<()> {
    let mut sections = model_sections(model);
    sections.extend(extras.iter().cloned());
    let header = Header {
        kind: kind.to_string(),
        arch: arch_header(model),
        sections: sections
            .iter()
            .map(|(name, data)| SectionHeader { name: name.clone(), len: data.len() })
            .collect(),
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| Error::Format(format!("header encoding failed: {e}")))?;
    let payload_len: usize = sections.iter().map(|(_, d)| d.len() * 8).sum();
    let mut bytes = Vec::with_capacity(12 + header_json.len() + payload_len);
    bytes.extend_from_slice(&MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&u32::try_from(header_json.len())
        .map_err(|_| Error::Format("header too large".into()))?
        .to_le_bytes());
    bytes.extend_from_slice(&header_json);
    for (_, data) in &sections {
        for v in data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Reads a container, rebuilds the model, and returns non-model sections.
pub(crate) fn read_container(
    path: &Path,
    expected_kind: &str,
) -> Result<(Model, Vec<(String, Vec<f64>)>)> {
    let bytes = std::fs::read(path)?;
    let fail = |msg: String| Error::Format(format!("{}: {msg}", path.display()));
    if bytes.len() < 12 {
        return Err(fail("file too short for container header".into()));
    }
    if bytes[0..4] != MAGIC {
        return Err(fail("bad magic (not a model container)".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(fail(format!("unsupported container version {version} (expected {VERSION})")));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload_start = 12 + header_len;
    if bytes.len() < payload_start {
        return Err(fail("truncated header".into()));
    }
    let header: Header = serde_json::from_slice(&bytes[12..payload_start])
        .map_err(|e| fail(format!("malformed header: {e}")))?;
    if header.kind != expected_kind {
        return Err(fail(format!(
            "container holds a '{}' (expected '{expected_kind}')",
            header.kind
        )));
    }
    let payload_len: usize = header.sections.iter().map(|s| s.len * 8).sum();
    if bytes.len() != payload_start + payload_len {
        return Err(fail(format!(
            "payload length {} does not match manifest ({payload_len} bytes expected)",
            bytes.len() - payload_start
        )));
    }

    let mut sections = Vec::with_capacity(header.sections.len());
    let mut offset = payload_start;
    for sh in &header.sections {
        let mut data = Vec::with_capacity(sh.len);
        for k in 0..sh.len {
            let at = offset + k * 8;
            data.push(f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()));
        }
        offset += sh.len * 8;
        sections.push((sh.name.clone(), data));
    }

    let arch = arch_from_header(&header.arch)?;
    let mut model = build_model(&arch, header.arch.seed)?;
    let mut extras = Vec::new();
    let mut cursor = 0;
    for (l, layer) in model.layers_mut().iter_mut().enumerate() {
        for (name, arr) in layer.param_arrays_mut() {
            let expect = format!("layer{l}.{name}");
            fill_from(&sections, &mut cursor, &expect, arr, path)?;
        }
        for (name, arr) in layer.buffers_mut() {
            let expect = format!("layer{l}.buffer.{name}");
            fill_from(&sections, &mut cursor, &expect, arr, path)?;
        }
    }
    for (name, data) in sections.into_iter().skip(cursor) {
        extras.push((name, data));
    }
    Ok((model, extras))
}

fn fill_from(
    sections: &[(String, Vec<f64>)],
    cursor: &mut usize,
    expect: &str,
    arr: &mut [f64],
    path: &Path,
) -> Result<()> {
    let (name, data) = sections.get(*cursor).ok_or_else(|| {
        Error::Format(format!("{}: missing section '{expect}'", path.display()))
    })?;
    if name != expect || data.len() != arr.len() {
        return Err(Error::Format(format!(
            "{}: section '{name}' (len {}) where '{expect}' (len {}) was expected",
            path.display(),
            data.len(),
            arr.len()
        )));
    }
    arr.copy_from_slice(data);
    *cursor += 1;
    Ok(())
}

impl Model {
    /// Saves the model (parameters, buffers, architecture, seed) to `path`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_container(path.as_ref(), "model", self, &[])
    }

    /// Loads a model previously written by [`Model::save`].
    pub fn load(path: impl AsRef<Path>) -> Result<Model> {
        let (model, extras) = read_container(path.as_ref(), "model")?;
        if let Some((name, _)) = extras.first() {
            return Err(Error::Format(format!(
                "{}: unexpected extra section '{name}' in model file",
                path.as_ref().display()
            )));
        }
        Ok(model)
    }
}
