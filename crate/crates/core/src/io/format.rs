//! Surface files: TOML with one `[[polygon]]` table per polygon and one
//! `[[gluing]]` table per glued pair of sides.
//!
//! ```toml
//! format = 1
//! name = "example"
//!
//! [[polygon]]
//! vertices = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
//!
//! [[gluing]]
//! a = [0, 0]      # (polygon, edge); edge i runs from vertex i to i+1
//! b = [0, 2]
//! kind = "translation"   # or "half_translation"
//! ```

use crate::surface::{EdgeGluing, GluingKind, SurfaceSpec};
use crate::Point;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpecFile {
    pub format: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "polygon")]
    pub polygons: Vec<PolygonEntry>,
    #[serde(rename = "gluing")]
    pub gluings: Vec<GluingEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolygonEntry {
    pub vertices: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GluingEntry {
    pub a: [usize; 2],
    pub b: [usize; 2],
    pub kind: GluingKind,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    SyntaxError { line: usize, column: usize, message: String },
    #[error("schema violation{}: {message}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    SchemaViolation { line: Option<usize>, message: String },
    #[error("gluing {gluing}: side ({polygon}, {edge}) already glued by gluing {first}")]
    DuplicateEdgeReference { gluing: usize, first: usize, polygon: usize, edge: usize },
}

impl FormatError {
    pub fn name(&self) -> &'static str {
        match self {
            FormatError::SyntaxError { .. } => "SyntaxError",
            FormatError::SchemaViolation { .. } => "SchemaViolation",
            FormatError::DuplicateEdgeReference { .. } => "DuplicateEdgeReference",
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    (line, column)
}

/// Strict parse of a surface file.
pub fn parse_surface_file(bytes: &[u8]) -> Result<SurfaceSpec, FormatError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let (line, column) = line_col(&String::from_utf8_lossy(&bytes[..e.valid_up_to()]), e.valid_up_to());
        FormatError::SyntaxError { line, column, message: "invalid UTF-8".into() }
    })?;
    if let Err(e) = text.parse::<toml::Table>() {
        let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
        return Err(FormatError::SyntaxError { line, column, message: e.message().to_string() });
    }
    let file: SurfaceSpecFile = toml::from_str(text).map_err(|e| FormatError::SchemaViolation {
        line: e.span().map(|s| line_col(text, s.start).0),
        message: e.message().to_string(),
    })?;
    if file.format != FORMAT_VERSION {
        return Err(FormatError::SchemaViolation {
            line: None,
            message: format!("unsupported format version {}", file.format),
        });
    }
    let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, g) in file.gluings.iter().enumerate() {
        for side in [g.a, g.b] {
            let key = (side[0], side[1]);
            if let Some(&first) = seen.get(&key) {
                return Err(FormatError::DuplicateEdgeReference { gluing: i, first, polygon: key.0, edge: key.1 });
            }
            seen.insert(key, i);
        }
    }
    Ok(SurfaceSpec {
        name: file.name,
        polygons: file.polygons.iter().map(|p| p.vertices.iter().map(|v| Point::new(v[0], v[1])).collect()).collect(),
        gluings: file
            .gluings
            .iter()
            .map(|g| EdgeGluing { side_a: (g.a[0], g.a[1]), side_b: (g.b[0], g.b[1]), kind: g.kind })
            .collect(),
    })
}

pub fn serialize_surface_spec(spec: &SurfaceSpec) -> String {
    let file = SurfaceSpecFile {
        format: FORMAT_VERSION,
        name: spec.name.clone(),
        polygons: spec.polygons.iter().map(|p| PolygonEntry { vertices: p.iter().map(|v| [v.x, v.y]).collect() }).collect(),
        gluings: spec
            .gluings
            .iter()
            .map(|g| GluingEntry { a: [g.side_a.0, g.side_a.1], b: [g.side_b.0, g.side_b.1], kind: g.kind })
            .collect(),
    };
    toml::to_string(&file).expect("surface specs always serialize")
}
