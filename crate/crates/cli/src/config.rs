//! Pipeline configuration file (JSON, see `docs/config.schema.json`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use drapestack::body::{generate_toy_body, load_body, load_pose, load_shape, ToyBodyConfig};
use drapestack::garments::TubeSpec;
use drapestack::geometry::load_obj;
use drapestack::{
    LossWeights, MaterialParams, Pose, ResolveConfig, RiggedBody, ShapeParams, SolverConfig, TriangleMesh,
};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Body file; when absent the toy body is generated from `toy_body`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub body: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub toy_body: Option<ToyBodyConfig>,
    pub garments: Vec<GarmentEntry>,
    /// Shape coefficients; missing trailing values are zero.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape_file: Option<PathBuf>,
    /// Flat axis-angle values per joint, optionally followed by a root
    /// translation. Absent means T-pose.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pose: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pose_file: Option<PathBuf>,
    pub solver: SolverConfig,
    pub weights: LossWeights,
    pub resolve: ResolveConfig,
    /// Output directory, relative to the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Seed recorded for reproducibility; the pipeline itself draws no
    /// random numbers.
    pub seed: u64,
    /// Add wall-clock times to the report.
    pub timings: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GarmentEntry {
    pub name: String,
    /// OBJ rest mesh aligned to the zero-body.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
    /// Procedural tube instead of a mesh file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tube: Option<TubeSpec>,
    /// 1 = innermost.
    pub layer: usize,
    /// Overrides the automatic held rule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub held: Option<bool>,
    /// Fields not given keep their defaults.
    pub material: MaterialParams,
}

/// Everything a command needs, loaded and validated.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub body: RiggedBody,
    pub beta: ShapeParams,
    pub pose: Pose,
    /// Sorted by layer.
    pub garments: Vec<LoadedGarment>,
    pub output: PathBuf,
}

#[derive(Debug, Clone)]
pub struct LoadedGarment {
    pub name: String,
    pub mesh: TriangleMesh,
    pub held: Option<bool>,
    pub material: MaterialParams,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    /// Structural checks that need no file access.
    pub fn validate(&self) -> CliResult<()> {
        if self.garments.is_empty() {
            return Err(config_err("at least one garment is required"));
        }
        if self.body.is_some() && self.toy_body.is_some() {
            return Err(config_err("give either `body` or `toy_body`, not both"));
        }
        if self.shape.is_some() && self.shape_file.is_some() {
            return Err(config_err("give either `shape` or `shape_file`, not both"));
        }
        if self.pose.is_some() && self.pose_file.is_some() {
            return Err(config_err("give either `pose` or `pose_file`, not both"));
        }
        let mut layers: Vec<usize> = self.garments.iter().map(|g| g.layer).collect();
        layers.sort_unstable();
        if layers.iter().enumerate().any(|(i, &l)| l != i + 1) {
            return Err(config_err(format!(
                "garment layers must be 1..{} without gaps or duplicates, got {:?}",
                self.garments.len(),
                self.garments.iter().map(|g| g.layer).collect::<Vec<_>>()
            )));
        }
        let mut names: Vec<&str> = self.garments.iter().map(|g| g.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(config_err("garment names must be unique"));
        }
        for g in &self.garments {
            if g.name.is_empty()
                || !g
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(config_err(format!(
                    "garment name {:?} must be non-empty ASCII letters, digits, '_' or '-'",
                    g.name
                )));
            }
            if g.mesh.is_some() == g.tube.is_some() {
                return Err(config_err(format!(
                    "garment {}: give exactly one of `mesh` or `tube`",
                    g.name
                )));
            }
            g.material
                .validate()
                .map_err(|e| config_err(format!("garment {}: {e}", g.name)))?;
        }
        self.solver.validate().map_err(|e| config_err(format!("solver: {e}")))?;
        self.weights
            .validate()
            .map_err(|e| config_err(format!("weights: {e}")))?;
        Ok(())
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn input<T>(path: &Path, r: drapestack::Result<T>) -> CliResult<T> {
    r.map_err(|source| CliError::ConfigInput {
        path: path.to_path_buf(),
        source,
    })
}

impl Pipeline {
    /// Reads and validates the config at `path` and every file it names.
    /// `out` overrides the configured output directory.
    pub fn load(path: &Path, out: Option<&Path>) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let config = PipelineConfig::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => config_err(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::from_config(config, &base, out)
    }

    /// Builds a pipeline with relative paths taken from `base`.
    pub fn from_config(config: PipelineConfig, base: &Path, out: Option<&Path>) -> CliResult<Self> {
        config.validate()?;
        let body = match &config.body {
            Some(p) => {
                let p = resolve(base, p);
                input(&p, load_body(&p))?
            }
            None => generate_toy_body(&config.toy_body.clone().unwrap_or_default())
                .map_err(|e| config_err(format!("toy_body: {e}")))?,
        };
        let mut beta = match (&config.shape, &config.shape_file) {
            (Some(v), _) => ShapeParams(v.clone()),
            (None, Some(p)) => {
                let p = resolve(base, p);
                input(&p, load_shape(&p))?
            }
            (None, None) => ShapeParams::zeros(body.shape_count()),
        };
        if beta.0.len() > body.shape_count() {
            return Err(config_err(format!(
                "{} shape values for a body with {} shape directions",
                beta.0.len(),
                body.shape_count()
            )));
        }
        beta.0.resize(body.shape_count(), 0.0);
        let pose = match (&config.pose, &config.pose_file) {
            (Some(v), _) => Pose::from_flat(v, body.joint_count()).map_err(|e| config_err(format!("pose: {e}")))?,
            (None, Some(p)) => {
                let p = resolve(base, p);
                input(&p, load_pose(&p, body.joint_count()))?
            }
            (None, None) => Pose::t_pose(body.joint_count()),
        };
        let mut entries = config.garments.clone();
        entries.sort_by_key(|g| g.layer);
        let garments = entries
            .into_iter()
            .map(|g| {
                let mesh = match (&g.mesh, &g.tube) {
                    (Some(p), _) => {
                        let p = resolve(base, p);
                        input(&p, load_obj(&p))?
                    }
                    (None, Some(t)) => t.mesh().map_err(|e| config_err(format!("garment {}: {e}", g.name)))?,
                    (None, None) => unreachable!("validated"),
                };
                Ok(LoadedGarment {
                    name: g.name,
                    mesh,
                    held: g.held,
                    material: g.material,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let output = match (out, &config.output) {
            (Some(o), _) => o.to_path_buf(),
            (None, Some(o)) => resolve(base, o),
            (None, None) => base.join("out"),
        };
        Ok(Self {
            config,
            body,
            beta,
            pose,
            garments,
            output,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(name: &str, layer: usize) -> GarmentEntry {
        GarmentEntry {
            name: name.into(),
            tube: Some(TubeSpec::default()),
            layer,
            ..Default::default()
        }
    }

    #[test]
    fn defaults_carry_published_constants() {
        let c = PipelineConfig::from_json(r#"{"garments": []}"#).unwrap();
        let w = c.weights;
        assert_eq!(
            [
                w.strain,
                w.gravity,
                w.bending,
                w.collision,
                w.repulsive,
                w.holding,
                w.multi_collision,
                w.distance
            ],
            [1.0, 1.0, 5.0, 250.0, 0.001, 100.0, 250.0, 25000.0]
        );
        let m = GarmentEntry::default().material;
        assert_eq!((m.lame_lambda, m.lame_mu), (4.44e4, 2.36e4));
        assert_eq!((m.repulsive_radius, m.distance_radius), (0.1, 0.1));
        assert_eq!(c.solver.clip_norm, 1.0);
        assert_eq!(c.resolve.passes, 10);
    }

    #[test]
    fn material_overrides_are_partial() {
        let c = PipelineConfig::from_json(
            r#"{"garments": [{"name": "a", "layer": 1, "tube": {}, "material": {"lame_mu": 1000.0}}]}"#,
        )
        .unwrap();
        let m = c.garments[0].material;
        assert_eq!(m.lame_mu, 1000.0);
        assert_eq!(m.lame_lambda, 4.44e4);
    }

    #[test]
    fn layers_must_be_contiguous() {
        let mut c = PipelineConfig {
            garments: vec![entry("a", 1), entry("b", 3)],
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.garments[1].layer = 1;
        assert!(c.validate().is_err());
        c.garments[1].layer = 2;
        c.validate().unwrap();
    }

    #[test]
    fn unknown_fields_and_bad_names_are_rejected() {
        assert!(PipelineConfig::from_json(r#"{"garmnts": []}"#).is_err());
        let c = PipelineConfig {
            garments: vec![entry("../x", 1)],
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn missing_mesh_is_a_config_error() {
        let c = PipelineConfig {
            garments: vec![GarmentEntry {
                name: "a".into(),
                mesh: Some("does-not-exist.obj".into()),
                layer: 1,
                ..Default::default()
            }],
            ..Default::default()
        };
        let err = Pipeline::from_config(c, Path::new("/nonexistent"), None).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::exit::CONFIG);
    }

    #[test]
    fn shape_is_padded_to_body() {
        let c = PipelineConfig {
            garments: vec![entry("a", 1)],
            shape: Some(vec![0.5]),
            ..Default::default()
        };
        let p = Pipeline::from_config(c, Path::new("."), None).unwrap();
        assert_eq!(p.beta.0, vec![0.5, 0.0]);
        assert!(p.pose.is_t_pose());
    }
}
