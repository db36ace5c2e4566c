//! Map files: an 8-bit binary graymap (P5) of costs plus a plain-text
//! sidecar holding georeferencing.
//!
//! The sidecar sits next to the image with the extension replaced by
//! `.meta` and contains `key: value` lines:
//!
//! ```text
//! resolution: 0.1
//! origin_x: 0.0
//! origin_y: 0.0
//! lethal_min: 253
//! ```
//!
//! Image row 0 is grid row 0 (no vertical flip).

use std::collections::BTreeMap;
use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{GrayImage, ImageEncoder, ImageReader};
use thiserror::Error;

use crate::grid::{CostMap, Grid, GridError, GridMeta, LethalSet, Point};

#[derive(Debug, Error)]
pub enum MapIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: cannot decode graymap: {msg}")]
    Image { path: PathBuf, msg: String },
    #[error("{path}: {msg}")]
    Sidecar { path: PathBuf, msg: String },
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub fn sidecar_path(map: &Path) -> PathBuf {
    map.with_extension("meta")
}

/// Encode a grayscale grid as a binary P5 graymap.
pub fn encode_pgm(gray: &Grid<u8>) -> Vec<u8> {
    let mut buf = Vec::new();
    PnmEncoder::new(&mut buf)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(
            gray.as_slice(),
            gray.width() as u32,
            gray.height() as u32,
            image::ExtendedColorType::L8,
        )
        .expect("in-memory graymap encoding cannot fail");
    buf
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Grid<u8>, String> {
    let img = ImageReader::with_format(Cursor::new(bytes), image::ImageFormat::Pnm)
        .decode()
        .map_err(|e| e.to_string())?;
    let gray: GrayImage = img.into_luma8();
    let (w, h) = gray.dimensions();
    Grid::from_vec(w as usize, h as usize, gray.into_raw()).map_err(|e| e.to_string())
}

pub fn write_pgm(path: &Path, gray: &Grid<u8>) -> Result<(), MapIoError> {
    fs::write(path, encode_pgm(gray)).map_err(|source| MapIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn render_sidecar(cm: &CostMap) -> String {
    format!(
        "resolution: {}\norigin_x: {}\norigin_y: {}\nlethal_min: {}\n",
        cm.meta.resolution,
        cm.meta.origin.x,
        cm.meta.origin.y,
        cm.lethal.min().unwrap_or(255)
    )
}

/// Write `path` (graymap) and its `.meta` sidecar.
pub fn save_map(path: &Path, cm: &CostMap) -> Result<(), MapIoError> {
    write_pgm(path, &cm.cost)?;
    let side = sidecar_path(path);
    fs::write(&side, render_sidecar(cm)).map_err(|source| MapIoError::Io { path: side, source })
}

struct Sidecar {
    resolution: f64,
    origin: Point,
    lethal_min: u8,
}

fn parse_sidecar(path: &Path, text: &str) -> Result<Sidecar, MapIoError> {
    let err = |msg: String| MapIoError::Sidecar {
        path: path.to_path_buf(),
        msg,
    };
    let mut kv = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once(':')
            .or_else(|| line.split_once('='))
            .ok_or_else(|| err(format!("line {}: expected `key: value`", n + 1)))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let num = |key: &str| -> Result<Option<f64>, MapIoError> {
        kv.get(key)
            .map(|v| v.parse::<f64>().map_err(|_| err(format!("{key}: not a number: {v}"))))
            .transpose()
    };
    let resolution = num("resolution")?.ok_or_else(|| err("missing key `resolution`".into()))?;
    let origin = Point::new(num("origin_x")?.unwrap_or(0.0), num("origin_y")?.unwrap_or(0.0));
    let lethal_min = match kv.get("lethal_min") {
        Some(v) => v
            .parse::<u8>()
            .map_err(|_| err(format!("lethal_min: expected 0..=255, got {v}")))?,
        None => 253,
    };
    Ok(Sidecar {
        resolution,
        origin,
        lethal_min,
    })
}

pub fn load_map(path: &Path) -> Result<CostMap, MapIoError> {
    let bytes = fs::read(path).map_err(|source| MapIoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let cost = decode_pgm(&bytes).map_err(|msg| MapIoError::Image {
        path: path.to_path_buf(),
        msg,
    })?;
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|source| MapIoError::Io {
        path: side.clone(),
        source,
    })?;
    let sc = parse_sidecar(&side, &text)?;
    let meta = GridMeta::new(cost.width(), cost.height(), sc.resolution, sc.origin)?;
    Ok(CostMap::from_grid(meta, cost, LethalSet::from_min(sc.lethal_min))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Cell, COST_LETHAL, COST_UNKNOWN};

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let meta = GridMeta::new(7, 4, 0.05, Point::new(-1.0, 2.5)).unwrap();
        let mut cm = CostMap::new(meta, 0);
        cm.set(Cell::new(0, 6), COST_LETHAL);
        cm.set(Cell::new(3, 0), COST_UNKNOWN);
        cm.set(Cell::new(2, 2), 77);
        let path = dir.path().join("room.pgm");
        save_map(&path, &cm).unwrap();
        let back = load_map(&path).unwrap();
        assert_eq!(back, cm);
        assert!(fs::read(&path).unwrap().starts_with(b"P5"));
    }

    #[test]
    fn sidecar_defaults_and_errors() {
        let p = Path::new("x.meta");
        let sc = parse_sidecar(p, "resolution: 0.25\n# comment\n").unwrap();
        assert_eq!(sc.lethal_min, 253);
        assert_eq!(sc.origin, Point::new(0.0, 0.0));
        assert!(parse_sidecar(p, "origin_x: 1").is_err());
        assert!(parse_sidecar(p, "resolution: abc").is_err());
        assert!(parse_sidecar(p, "resolution 0.1").is_err());
        assert!(parse_sidecar(p, "resolution: 0.1\nlethal_min: 300").is_err());
    }

    #[test]
    fn missing_sidecar_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        write_pgm(&path, &Grid::new(3, 3, 0u8)).unwrap();
        assert!(matches!(load_map(&path), Err(MapIoError::Io { .. })));
    }
}
