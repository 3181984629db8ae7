//! Plain-text nuclear geometry: one nucleus per line as `x y z ppm`, with
//! coordinates in ångström. `#` starts a comment.

use std::path::Path;

use lg4nmr_core::vector::Vec3;

use crate::error::{LabError, Result};

const ANGSTROM: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    /// Positions in meters.
    pub positions: Vec<Vec3>,
    pub shifts_ppm: Vec<f64>,
}

pub fn parse_geometry(text: &str, path: &Path) -> Result<Geometry> {
    let mut positions = Vec::new();
    let mut shifts_ppm = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| LabError::Geometry { path: path.to_path_buf(), line: i + 1, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(err(format!("expected `x y z ppm`, found {} fields", fields.len())));
        }
        let mut v = [0.0f64; 4];
        for (slot, field) in v.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| err(format!("`{field}` is not a number")))?;
            if !slot.is_finite() {
                return Err(err(format!("`{field}` is not finite")));
            }
        }
        positions.push(Vec3::new(v[0] * ANGSTROM, v[1] * ANGSTROM, v[2] * ANGSTROM));
        shifts_ppm.push(v[3]);
    }
    if positions.is_empty() {
        return Err(LabError::Geometry { path: path.to_path_buf(), line: 0, message: "no nuclei listed".into() });
    }
    Ok(Geometry { positions, shifts_ppm })
}

pub fn load_geometry(path: &Path) -> Result<Geometry> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(format!("reading {}", path.display()), e))?;
    parse_geometry(&text, path)
}
