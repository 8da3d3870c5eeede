//! Drape and untangle runs. Results are assembled in memory and written
//! only once every step has succeeded.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use log::info;

use drapestack::geometry::write_obj;
use drapestack::postprocess::{resolve_stack, strain_ratio_table};
use drapestack::report::PhaseSummary;
use drapestack::solver::{drape_single, posed_state, untangle};
use drapestack::{EnergyReport, Garment, LayerStack};

use crate::config::{LoadedGarment, Pipeline};
use crate::error::{CliError, CliResult};

/// Files to write, relative to the output directory, plus the report.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub meshes: Vec<(String, String)>,
    pub report: EnergyReport,
}

pub const REPORT_FILE: &str = "report.json";

impl RunOutput {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
        for (name, text) in &self.meshes {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        }
        let path = dir.join(REPORT_FILE);
        std::fs::write(&path, self.report.to_json()?)
            .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        Ok(())
    }
}

struct Timer {
    enabled: bool,
    entries: BTreeMap<String, f64>,
}

impl Timer {
    fn time<T>(&mut self, key: String, f: impl FnOnce() -> CliResult<T>) -> CliResult<T> {
        let start = Instant::now();
        let out = f()?;
        if self.enabled {
            self.entries.insert(key, start.elapsed().as_secs_f64() * 1e3);
        }
        Ok(out)
    }

    fn finish(self) -> Option<BTreeMap<String, f64>> {
        self.enabled.then_some(self.entries)
    }
}

struct Draped {
    garment: Garment,
    report: EnergyReport,
}

/// Single drape followed by body penetration repair of one garment.
fn drape_one(p: &Pipeline, lg: &LoadedGarment, timer: &mut Timer) -> CliResult<Draped> {
    let mut garment = Garment::new(&lg.name, lg.mesh.clone(), lg.material, &p.body, lg.held)?;
    info!(
        "cmd=drape garment={} vertices={} held={}",
        lg.name,
        garment.vertex_count(),
        garment.held
    );
    let stats = timer.time(format!("single:{}", lg.name), || {
        Ok(drape_single(
            &mut garment,
            &p.body,
            &p.beta,
            &p.pose,
            &p.config.weights,
            &p.config.solver,
        )?)
    })?;
    let mut stack = LayerStack::new(vec![garment]);
    let resolution = timer.time(format!("postprocess:{}", lg.name), || {
        Ok(resolve_stack(&mut stack, &p.body, &p.beta, &p.pose, &p.config.resolve)?)
    })?;
    info!(
        "cmd=drape garment={} postprocess_passes={} residuals={}",
        lg.name,
        resolution.passes(),
        resolution.residuals.len()
    );
    let mut report = EnergyReport::evaluate(&stack, &p.body, &p.beta, &p.pose, &p.config.weights)?;
    let strain = report.garments[0].terms.strain;
    report.strain_ratios = strain_ratio_table(&[vec![strain]], &[strain])?;
    report.phases.push(PhaseSummary {
        phase: "single".into(),
        garment: lg.name.clone(),
        stages: stats.stages,
    });
    let garment = stack.garments.pop().expect("one garment");
    Ok(Draped { garment, report })
}

fn posed_obj(p: &Pipeline, g: &Garment) -> CliResult<String> {
    let posed = posed_state(g, &p.body, &p.beta, &p.pose)?;
    Ok(write_obj(&g.rest.with_vertices(posed)?))
}

/// Drapes every garment independently onto the body.
pub fn run_drape(p: &Pipeline) -> CliResult<RunOutput> {
    let mut timer = Timer {
        enabled: p.config.timings,
        entries: BTreeMap::new(),
    };
    let mut parts = Vec::new();
    let mut meshes = Vec::new();
    for lg in &p.garments {
        let d = drape_one(p, lg, &mut timer)?;
        meshes.push((format!("{}_single.obj", lg.name), posed_obj(p, &d.garment)?));
        parts.push(d.report);
    }
    let mut report = EnergyReport::combine(parts);
    report.timings_ms = timer.finish();
    Ok(RunOutput { meshes, report })
}

/// Drapes every garment, then untangles and repairs each prefix stack of
/// the layer order to fill the strain-ratio table. Meshes and terms come
/// from the full stack.
pub fn run_untangle(p: &Pipeline) -> CliResult<RunOutput> {
    let mut timer = Timer {
        enabled: p.config.timings,
        entries: BTreeMap::new(),
    };
    let draped: Vec<Draped> = p
        .garments
        .iter()
        .map(|lg| drape_one(p, lg, &mut timer))
        .collect::<CliResult<_>>()?;
    let single: Vec<f64> = draped.iter().map(|d| d.report.garments[0].terms.strain).collect();
    let mut phases: Vec<PhaseSummary> = draped.iter().flat_map(|d| d.report.phases.clone()).collect();
    let mut rows = vec![vec![single[0]]];
    let mut last = (
        LayerStack::new(vec![draped[0].garment.clone()]),
        draped[0].report.clone(),
    );
    for m in 2..=draped.len() {
        let mut stack = LayerStack::new(draped[..m].iter().map(|d| d.garment.clone()).collect());
        let label = stack
            .garments
            .iter()
            .map(|g| g.name.as_str())
            .collect::<Vec<_>>()
            .join("+");
        info!("cmd=untangle layers={m} stack={label}");
        let stats = timer.time(format!("untangle:{label}"), || {
            Ok(untangle(
                &mut stack,
                &p.body,
                &p.beta,
                &p.pose,
                &p.config.weights,
                &p.config.solver,
            )?)
        })?;
        let resolution = timer.time(format!("postprocess:{label}"), || {
            Ok(resolve_stack(&mut stack, &p.body, &p.beta, &p.pose, &p.config.resolve)?)
        })?;
        info!(
            "cmd=untangle layers={m} postprocess_passes={} residuals={} order_residuals={}",
            resolution.passes(),
            resolution.residuals.len(),
            resolution.order_residuals.len()
        );
        let report = EnergyReport::evaluate(&stack, &p.body, &p.beta, &p.pose, &p.config.weights)?;
        rows.push(report.garments.iter().map(|g| g.terms.strain).collect());
        phases.push(PhaseSummary {
            phase: "untangle".into(),
            garment: label,
            stages: stats.stages,
        });
        last = (stack, report);
    }
    let (stack, mut report) = last;
    report.strain_ratios = strain_ratio_table(&rows, &single)?;
    report.phases = phases;
    report.timings_ms = timer.finish();
    let meshes = stack
        .garments
        .iter()
        .enumerate()
        .map(|(k, g)| Ok((format!("{}_layer{}.obj", g.name, k + 1), posed_obj(p, g)?)))
        .collect::<CliResult<_>>()?;
    Ok(RunOutput { meshes, report })
}
