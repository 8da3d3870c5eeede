//! Structured run report and its plain-text table view.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::body::{Pose, RiggedBody, ShapeParams};
use crate::energy::{LossWeights, TermEnergies};
use crate::error::{Error, Result};
use crate::geometry::Topology;
use crate::postprocess::{
    detect_order_violations, detect_penetrations, posed_layers, self_collision_pairs, self_collision_threshold,
    OrderViolation, PenetrationRecord, Reference,
};
use crate::solver::{stack_energies, BodyFrame, LayerStack, StageStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GarmentReport {
    pub name: String,
    /// 1 = innermost.
    pub layer: usize,
    pub held: bool,
    pub vertices: usize,
    /// Unweighted term energies in the final state.
    pub terms: TermEnergies,
    /// Self-contact measure over pairs closer than twice the thickness.
    pub self_collision: f64,
    pub self_pairs: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenetrationCounts {
    pub body_garment: usize,
    pub garment_garment: usize,
    /// Non-adjacent vertex pairs within the self-contact threshold.
    pub self_collision: usize,
    pub order_violations: usize,
}

/// Optimizer progress of one solve phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSummary {
    pub phase: String,
    pub garment: String,
    pub stages: Vec<StageStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyReport {
    pub garments: Vec<GarmentReport>,
    /// Weighted objective of the final state.
    pub objective: f64,
    pub penetrations: PenetrationCounts,
    pub residuals: Vec<PenetrationRecord>,
    pub order_residuals: Vec<OrderViolation>,
    /// Row `m` holds the strain ratios of the first `m + 1` garments.
    /// `null` marks a zero single-drape strain.
    pub strain_ratios: Vec<Vec<Option<f64>>>,
    pub phases: Vec<PhaseSummary>,
    /// Wall-clock per phase; omitted unless requested since it breaks
    /// byte-identical reruns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, f64>>,
}

impl EnergyReport {
    /// Evaluates terms, penetration records, ordering violations and
    /// self-contact of a stack in its current state. Ratios, phases and
    /// timings are left empty.
    pub fn evaluate(
        stack: &LayerStack,
        body: &RiggedBody,
        beta: &ShapeParams,
        pose: &Pose,
        weights: &LossWeights,
    ) -> Result<Self> {
        let eval = stack_energies(stack, body, beta, pose, weights)?;
        let frame = BodyFrame::new(body, beta, pose)?;
        let layers = posed_layers(stack, &frame);
        let residuals = detect_penetrations(&layers, &frame.proxy)?;
        let order_residuals = detect_order_violations(&layers, &frame.proxy)?;
        let mut counts = PenetrationCounts {
            body_garment: residuals.iter().filter(|r| r.reference == Reference::Body).count(),
            garment_garment: residuals.iter().filter(|r| r.reference != Reference::Body).count(),
            self_collision: 0,
            order_violations: order_residuals.len(),
        };
        let mut garments = Vec::with_capacity(stack.len());
        for (k, (g, layer)) in stack.garments.iter().zip(&layers).enumerate() {
            let topo = Topology::from_faces(layer.positions.len(), &layer.faces);
            let pairs = self_collision_pairs(&layer.positions, &topo, self_collision_threshold(&g.material))?;
            let self_collision = crate::energy::repulsive_with(&layer.positions, &pairs)?.value;
            counts.self_collision += pairs.len();
            garments.push(GarmentReport {
                name: g.name.clone(),
                layer: k + 1,
                held: g.held,
                vertices: g.vertex_count(),
                terms: eval.terms[k],
                self_collision,
                self_pairs: pairs.len(),
            });
        }
        Ok(Self {
            garments,
            objective: eval.value,
            penetrations: counts,
            residuals,
            order_residuals,
            strain_ratios: Vec::new(),
            phases: Vec::new(),
            timings_ms: None,
        })
    }

    /// Concatenates reports of independent single-garment runs. Garment
    /// indices in records are renumbered by position in `parts`; every
    /// garment keeps layer 1.
    pub fn combine(parts: Vec<EnergyReport>) -> Self {
        let mut out = Self {
            garments: Vec::new(),
            objective: 0.0,
            penetrations: PenetrationCounts::default(),
            residuals: Vec::new(),
            order_residuals: Vec::new(),
            strain_ratios: Vec::new(),
            phases: Vec::new(),
            timings_ms: None,
        };
        for (k, part) in parts.into_iter().enumerate() {
            let base = out.garments.len();
            out.garments.extend(part.garments);
            out.objective += part.objective;
            out.penetrations.body_garment += part.penetrations.body_garment;
            out.penetrations.garment_garment += part.penetrations.garment_garment;
            out.penetrations.self_collision += part.penetrations.self_collision;
            out.penetrations.order_violations += part.penetrations.order_violations;
            out.residuals.extend(part.residuals.into_iter().map(|mut r| {
                r.garment += base;
                if let Reference::Garment(j) = &mut r.reference {
                    *j += base;
                }
                r
            }));
            out.order_residuals
                .extend(part.order_residuals.into_iter().map(|mut v| {
                    v.inner_garment += base;
                    v.outer_garment += base;
                    v
                }));
            out.phases.extend(part.phases);
            if k == 0 {
                out.strain_ratios = part.strain_ratios;
            }
            if let Some(t) = part.timings_ms {
                out.timings_ms.get_or_insert_with(BTreeMap::new).extend(t);
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Json {
            context: "serializing report".into(),
            source: e,
        })?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Json {
            context: "parsing report".into(),
            source: e,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json { source, .. } => Error::Json {
                context: format!("parsing {}", path.display()),
                source,
            },
            other => other,
        })
    }

    /// Aligned plain-text tables: per-term energies, penetration counts and
    /// the strain-ratio table.
    pub fn render_text(&self) -> String {
        let mut header = vec!["garment".to_string(), "layer".to_string()];
        header.extend(TermEnergies::NAMES.iter().map(|n| n.to_string()));
        header.push("self".to_string());
        let mut rows = vec![header];
        for g in &self.garments {
            let mut row = vec![g.name.clone(), g.layer.to_string()];
            row.extend(g.terms.values().iter().map(|v| format!("{v:.6e}")));
            row.push(format!("{:.6e}", g.self_collision));
            rows.push(row);
        }
        let mut out = String::new();
        write_table(&mut out, &rows);
        let _ = writeln!(out, "\nobjective {:.9e}", self.objective);
        let p = &self.penetrations;
        let _ = writeln!(
            out,
            "penetrations body_garment={} garment_garment={} self={} order_violations={}",
            p.body_garment, p.garment_garment, p.self_collision, p.order_violations
        );
        if !self.strain_ratios.is_empty() {
            let _ = writeln!(out, "\nstrain ratio (multi / single)");
            let width = self.strain_ratios.len();
            let mut rows = vec![std::iter::once("M".to_string())
                .chain((1..=width).map(|i| i.to_string()))
                .collect::<Vec<_>>()];
            for (m, row) in self.strain_ratios.iter().enumerate() {
                let mut r = vec![(m + 1).to_string()];
                r.extend(row.iter().map(|v| match v {
                    Some(v) => format!("{v:.2}"),
                    None => "-".to_string(),
                }));
                rows.push(r);
            }
            write_table(&mut out, &rows);
        }
        out
    }
}

fn write_table(out: &mut String, rows: &[Vec<String>]) {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                if c == 0 {
                    format!("{cell:<w$}", w = widths[c])
                } else {
                    format!("{cell:>w$}", w = widths[c])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EnergyReport {
        EnergyReport {
            garments: vec![GarmentReport {
                name: "shirt".into(),
                layer: 1,
                held: false,
                vertices: 10,
                terms: TermEnergies {
                    strain: 1.25,
                    bending: 0.1,
                    gravity: -0.3,
                    ..Default::default()
                },
                self_collision: 0.0,
                self_pairs: 0,
            }],
            objective: 1.0 / 3.0,
            penetrations: PenetrationCounts::default(),
            residuals: vec![PenetrationRecord {
                garment: 0,
                vertex: 3,
                reference: Reference::Body,
                depth: 1e-3,
            }],
            order_residuals: Vec::new(),
            strain_ratios: vec![vec![Some(1.0)], vec![Some(0.995), None]],
            phases: Vec::new(),
            timings_ms: None,
        }
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        let back = EnergyReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(!r.to_json().unwrap().contains("timings_ms"));
    }

    #[test]
    fn text_has_ratio_rows() {
        let text = sample().render_text();
        assert!(text.contains("strain ratio"));
        let lines: Vec<&str> = text.lines().collect();
        let at = lines.iter().position(|l| l.starts_with("strain ratio")).unwrap();
        assert_eq!(lines[at + 2].split_whitespace().collect::<Vec<_>>(), ["1", "1.00"]);
        assert_eq!(lines[at + 3].split_whitespace().collect::<Vec<_>>(), ["2", "0.99", "-"]);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&sample().to_json().unwrap()).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(EnergyReport::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn combine_renumbers_records() {
        let both = EnergyReport::combine(vec![sample(), sample()]);
        assert_eq!(both.garments.len(), 2);
        assert_eq!(both.residuals[1].garment, 1);
        assert_eq!(both.strain_ratios, sample().strain_ratios);
        assert!((both.objective - 2.0 / 3.0).abs() < 1e-15);
    }
}
