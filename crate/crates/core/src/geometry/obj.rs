//! Minimal Wavefront OBJ support: `v` and triangular `f` records only.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{TriangleMesh, Vec3};
use crate::error::{Error, Result};

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_obj(&text, path)
}

/// Parses OBJ text. `origin` is only used in error messages.
pub fn parse_obj(text: &str, origin: &Path) -> Result<TriangleMesh> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let coords: Vec<f64> = parts
                    .map(|p| p.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| err(line_no, format!("bad vertex coordinate: {e}")))?;
                // A fourth (w) or colour components may follow; only xyz matter.
                if coords.len() < 3 {
                    return Err(err(line_no, "vertex needs three coordinates".into()));
                }
                if coords[..3].iter().any(|c| !c.is_finite()) {
                    return Err(err(line_no, "non-finite vertex coordinate".into()));
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let refs: Vec<&str> = parts.collect();
                if refs.len() != 3 {
                    return Err(err(
                        line_no,
                        format!("face has {} vertices; only triangles are supported", refs.len()),
                    ));
                }
                let mut face = [0usize; 3];
                for (slot, r) in face.iter_mut().zip(&refs) {
                    let idx = r.split('/').next().unwrap_or("");
                    let i: i64 = idx
                        .parse()
                        .map_err(|e| err(line_no, format!("bad face index {r:?}: {e}")))?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        return Err(err(line_no, "face index 0 is invalid".into()));
                    };
                    if resolved < 0 {
                        return Err(err(line_no, format!("face index {i} out of range")));
                    }
                    *slot = resolved as usize;
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, faces)
}

/// Serializes a mesh; positions carry nine fractional digits (1 nm).
pub fn write_obj(mesh: &TriangleMesh) -> String {
    write_obj_positions(mesh.vertices(), mesh.faces())
}

pub(crate) fn write_obj_positions(vertices: &[Vec3], faces: &[[usize; 3]]) -> String {
    let mut out = String::with_capacity(vertices.len() * 48 + faces.len() * 24);
    for v in vertices {
        let _ = writeln!(out, "v {:.9} {:.9} {:.9}", v.x, v.y, v.z);
    }
    for f in faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

pub fn save_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_obj(mesh)).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
