//! JSON body, pose and shape files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Joint, Landmarks, Pose, RiggedBody, ShapeParams, WeightTable};
use crate::error::{Error, Result};
use crate::geometry::{TriangleMesh, Vec3};

/// On-disk body representation (see `docs/body.schema.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyFile {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    pub joints: Vec<Joint>,
    pub shape_dirs: Vec<Vec<[f64; 3]>>,
    pub joint_shape_dirs: Vec<Vec<[f64; 3]>>,
    pub weights: Vec<Vec<f64>>,
    pub landmarks: Landmarks,
}

fn to_arrays(v: &[Vec3]) -> Vec<[f64; 3]> {
    v.iter().map(|p| [p.x, p.y, p.z]).collect()
}

fn to_vecs(v: &[[f64; 3]]) -> Vec<Vec3> {
    v.iter().map(|p| Vec3::from(*p)).collect()
}

impl From<&RiggedBody> for BodyFile {
    fn from(b: &RiggedBody) -> Self {
        BodyFile {
            vertices: to_arrays(b.template().vertices()),
            faces: b.template().faces().to_vec(),
            joints: b.joints().to_vec(),
            shape_dirs: b.shape_dirs().iter().map(|d| to_arrays(d)).collect(),
            joint_shape_dirs: b.joint_shape_dirs().iter().map(|d| to_arrays(d)).collect(),
            weights: b.weights().to_rows(),
            landmarks: b.landmarks(),
        }
    }
}

impl TryFrom<BodyFile> for RiggedBody {
    type Error = Error;

    fn try_from(f: BodyFile) -> Result<Self> {
        let template = TriangleMesh::new(to_vecs(&f.vertices), f.faces)?;
        let weights = WeightTable::from_rows(&f.weights, f.joints.len())?;
        RiggedBody::new(
            template,
            f.shape_dirs.iter().map(|d| to_vecs(d)).collect(),
            f.joints,
            f.joint_shape_dirs.iter().map(|d| to_vecs(d)).collect(),
            weights,
            f.landmarks,
        )
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        context: format!("parsing {}", path.display()),
        source: e,
    })
}

pub fn load_body(path: impl AsRef<Path>) -> Result<RiggedBody> {
    let file: BodyFile = read_json(path.as_ref())?;
    RiggedBody::try_from(file)
}

pub fn save_body(body: &RiggedBody, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string(&BodyFile::from(body)).map_err(|e| Error::Json {
        context: "serializing body".into(),
        source: e,
    })?;
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Shape file: a flat JSON array of coefficients.
pub fn load_shape(path: impl AsRef<Path>) -> Result<ShapeParams> {
    Ok(ShapeParams(read_json(path.as_ref())?))
}

/// Pose file: a flat JSON array of `3 * joints` axis-angle components,
/// optionally followed by a 3-component root translation.
pub fn load_pose(path: impl AsRef<Path>, joints: usize) -> Result<Pose> {
    let flat: Vec<f64> = read_json(path.as_ref())?;
    Pose::from_flat(&flat, joints)
}

impl Pose {
    pub fn from_flat(flat: &[f64], joints: usize) -> Result<Pose> {
        let translation = match flat.len() {
            n if n == 3 * joints => Vec3::zeros(),
            n if n == 3 * joints + 3 => Vec3::new(flat[n - 3], flat[n - 2], flat[n - 1]),
            n => {
                return Err(Error::invalid(format!(
                    "pose array has {n} values; expected {} or {}",
                    3 * joints,
                    3 * joints + 3
                )))
            }
        };
        let rotations = (0..joints)
            .map(|j| Vec3::new(flat[3 * j], flat[3 * j + 1], flat[3 * j + 2]))
            .collect();
        let pose = Pose { rotations, translation };
        pose.validate(joints)?;
        Ok(pose)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.rotations
            .iter()
            .chain(std::iter::once(&self.translation))
            .flat_map(|r| [r.x, r.y, r.z])
            .collect()
    }
}
