//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Run with `cargo test --release --test acceptance`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use drapestack::body::{axis_angle_matrix, forward_kinematics, generate_toy_body, lbs, shape_body, ToyBodyConfig};
use drapestack::energy::{
    bending, holding_mask, multi_loss, repulsive, single_loss, strain, GarmentEval, MaterialParams, RestState,
};
use drapestack::garments::{crossing_layers, TubeSpec};
use drapestack::geometry::{parse_obj, rest_frames, Topology, TriangleMesh};
use drapestack::gradcheck::{check_term, Term, DEFAULT_STEP};
use drapestack::solver::{drape_single, posed_state, BodyFrame};
use drapestack::{EnergyReport, Garment, LossWeights, Pose, RiggedBody, ShapeParams, SolverConfig, Vec3};
use drapestack_cli::{run_drape, run_untangle, GarmentEntry, Pipeline, PipelineConfig, RunOutput};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut gravity_abs: f64 = 0.0;
    for size in [50, 120, 200] {
        for term in Term::ALL {
            let r = check_term(term, size, 1, DEFAULT_STEP).map_err(|e| e.to_string())?;
            let w = worst.entry(term.name()).or_insert(0.0);
            *w = w.max(r.max_rel_error);
            if term == Term::Gravity {
                gravity_abs = gravity_abs.max(r.max_abs_error);
            }
        }
    }
    let elapsed = start.elapsed();
    let detail = worst
        .iter()
        .map(|(k, v)| format!("{k}={v:.1e}"))
        .collect::<Vec<_>>()
        .join(" ");
    for (k, v) in &worst {
        ensure(*v < 1e-4, format!("{k} relative error {v:e}; {detail}"))?;
    }
    ensure(gravity_abs < 1e-10, format!("gravity absolute error {gravity_abs:e}"))?;
    ensure(
        worst["gravity"] < 1e-10,
        format!("gravity relative error {:e}", worst["gravity"]),
    )?;
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!(
        "{detail} gravity_abs={gravity_abs:.1e} time={:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn closed_forms() -> Outcome {
    let m = MaterialParams::default();

    let rest = TriangleMesh::new(
        vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.3, 0.0, 0.1),
            Vec3::new(0.05, 0.25, -0.1),
        ],
        vec![[0, 1, 2]],
    )
    .map_err(|e| e.to_string())?;
    let frames = rest_frames(&rest).map_err(|e| e.to_string())?;
    let s: f64 = 1.07;
    let stretched: Vec<Vec3> = rest.vertices().iter().map(|v| v * s).collect();
    let e0 = rest.vertices()[1] - rest.vertices()[0];
    let e1 = rest.vertices()[2] - rest.vertices()[0];
    let volume = 0.5 * e0.cross(&e1).norm() * m.thickness;
    let want = (s * s - 1.0).powi(2) * (m.lame_lambda / 2.0 + m.lame_mu / 2.0) * volume;
    let got = strain(&stretched, rest.faces(), &frames, &m).value;
    ensure(rel(got, want) < 1e-9, format!("strain {got} vs {want}"))?;

    let flat = TriangleMesh::new(
        vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.5, 1.0, 0.0),
            Vec3::new(0.5, -1.0, 0.0),
        ],
        vec![[0, 1, 2], [1, 0, 3]],
    )
    .map_err(|e| e.to_string())?;
    let topo = Topology::new(&flat);
    let mut folded = flat.vertices().to_vec();
    folded[3] = Vec3::new(0.5, 0.0, 1.0);
    let want_b = 0.5 * m.bending_stiffness * FRAC_PI_2 * FRAC_PI_2;
    let got_b = bending(&folded, &topo.hinges, &m).value;
    ensure(rel(got_b, want_b) < 1e-9, format!("bending {got_b} vs {want_b}"))?;

    let pair = TriangleMesh::new(
        vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.2, 0.0, 0.0),
            Vec3::new(0.0, 0.2, 0.0),
            Vec3::new(0.0, 0.0, 0.05),
            Vec3::new(-0.2, 0.0, 0.05),
            Vec3::new(0.0, -0.2, 0.05),
        ],
        vec![[0, 1, 2], [3, 4, 5]],
    )
    .map_err(|e| e.to_string())?;
    let got_r = repulsive(pair.vertices(), &Topology::new(&pair), &m)
        .map_err(|e| e.to_string())?
        .value;
    let want_r = -(0.0025f64.ln());
    ensure((got_r - want_r).abs() < 1e-12, format!("repulsive {got_r} vs {want_r}"))?;
    Ok(format!(
        "strain_rel={:.1e} bending_rel={:.1e} repulsive_abs={:.1e}",
        rel(got, want),
        rel(got_b, want_b),
        (got_r - want_r).abs()
    ))
}

fn defaults() -> Outcome {
    let w = LossWeights::default();
    let got = [
        w.strain,
        w.gravity,
        w.bending,
        w.collision,
        w.repulsive,
        w.holding,
        w.multi_collision,
        w.distance,
    ];
    let want = [1.0, 1.0, 5.0, 250.0, 0.001, 100.0, 250.0, 25000.0];
    ensure(got == want, format!("weights {got:?}"))?;
    let m = MaterialParams::default();
    ensure(
        m.lame_lambda == 4.44e4 && m.lame_mu == 2.36e4,
        format!("lame {} {}", m.lame_lambda, m.lame_mu),
    )?;
    ensure(
        m.repulsive_radius == 0.1 && m.distance_radius == 0.1,
        format!("radii {} {}", m.repulsive_radius, m.distance_radius),
    )?;
    let clip = SolverConfig::default().clip_norm;
    ensure(clip == 1.0, format!("clip norm {clip}"))?;
    let mut counts = Vec::new();
    for (segments, rings) in [(48, 30), (37, 11), (20, 7)] {
        let mesh = TubeSpec {
            segments,
            rings,
            ..TubeSpec::default()
        }
        .mesh()
        .map_err(|e| e.to_string())?;
        let n = mesh.vertex_count();
        let held = holding_mask(&mesh).iter().filter(|h| **h).count();
        let want = (n as f64 * 0.1).ceil() as usize;
        ensure(held == want, format!("holding mask {held} of {n}, want {want}"))?;
        counts.push(format!("{held}/{n}"));
    }
    Ok(format!("holding={}", counts.join(",")))
}

fn pipeline(garments: Vec<GarmentEntry>) -> Result<Pipeline, String> {
    let config = PipelineConfig {
        garments,
        ..Default::default()
    };
    Pipeline::from_config(config, Path::new("."), None).map_err(|e| e.to_string())
}

fn obj_vertices(out: &RunOutput, k: usize) -> Result<Vec<Vec3>, String> {
    Ok(parse_obj(&out.meshes[k].1, Path::new(&out.meshes[k].0))
        .map_err(|e| e.to_string())?
        .vertices()
        .to_vec())
}

/// Mean downward displacement of the holding-mask vertices.
fn held_drift(rest: &TriangleMesh, posed: &[Vec3]) -> f64 {
    let mask = holding_mask(rest);
    let (sum, n) = rest
        .vertices()
        .iter()
        .zip(posed)
        .zip(&mask)
        .filter(|(_, m)| **m)
        .fold((0.0, 0usize), |(s, n), ((r, p), _)| (s + (r.y - p.y), n + 1));
    sum / n as f64
}

fn single_drape() -> Outcome {
    let start = Instant::now();
    let spec = TubeSpec::default();
    let rest = spec.mesh().map_err(|e| e.to_string())?;
    let mut detail = vec![format!("vertices={}", rest.vertex_count())];
    for held in [true, false] {
        let p = pipeline(vec![GarmentEntry {
            name: "skirt".into(),
            tube: Some(spec.clone()),
            layer: 1,
            held: Some(held),
            ..Default::default()
        }])?;
        let out = run_drape(&p).map_err(|e| e.to_string())?;
        let r = &out.report;
        let stages = &r.phases[0].stages;
        let initial = stages[0].initial;
        let last = stages.last().unwrap().best;
        let collision = r.garments[0].terms.collision_gb;
        let drift = held_drift(&rest, &obj_vertices(&out, 0)?);
        let tag = if held { "held" } else { "free" };
        ensure(collision < 1e-8, format!("{tag}: body collision {collision:e}"))?;
        ensure(
            last < initial,
            format!("{tag}: objective {last} not below initial {initial}"),
        )?;
        if held {
            ensure(drift < 0.01, format!("held drift {drift} m"))?;
        } else {
            ensure(drift > 0.05, format!("unheld drift {drift} m"))?;
        }
        detail.push(format!(
            "{tag}: collision={collision:.1e} L={initial:.4}->{last:.4} drift={drift:.4}m"
        ));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(300), format!("took {elapsed:?}"))?;
    detail.push(format!("time={:.1}s", elapsed.as_secs_f64()));
    Ok(detail.join(" "))
}

fn layer_entries(count: usize, order: &[usize]) -> Vec<GarmentEntry> {
    crossing_layers(count)
        .into_iter()
        .enumerate()
        .map(|(i, s)| GarmentEntry {
            name: format!("layer{}", i + 1),
            tube: Some(s),
            layer: order[i],
            ..Default::default()
        })
        .collect()
}

struct Untangled {
    m2: RunOutput,
    m3: RunOutput,
    m2_pipeline: Pipeline,
}

fn untangle_runs() -> Result<(Untangled, Duration), String> {
    let p2 = pipeline(layer_entries(2, &[1, 2]))?;
    let m2 = run_untangle(&p2).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let p3 = pipeline(layer_entries(3, &[1, 2, 3]))?;
    let m3 = run_untangle(&p3).map_err(|e| e.to_string())?;
    Ok((
        Untangled {
            m2,
            m3,
            m2_pipeline: p2,
        },
        start.elapsed(),
    ))
}

fn untangle_clean(u: &Untangled, m3_time: Duration) -> Outcome {
    let mut detail = Vec::new();
    for (m, out) in [(2, &u.m2), (3, &u.m3)] {
        let r = &out.report;
        let cross = r.penetrations.garment_garment;
        let order = r.order_residuals.len();
        ensure(cross == 0, format!("M={m}: {cross} cross-layer penetration records"))?;
        ensure(order == 0, format!("M={m}: {order} ordering violations"))?;
        detail.push(format!(
            "M={m}: cross={cross} order={order} body={}",
            r.penetrations.body_garment
        ));
    }
    ensure(m3_time < Duration::from_secs(600), format!("M=3 took {m3_time:?}"))?;
    detail.push(format!("M=3 time={:.1}s", m3_time.as_secs_f64()));
    Ok(detail.join(" "))
}

fn ratio_trend(r: &EnergyReport) -> Outcome {
    let t = &r.strain_ratios;
    let shown = t
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| v.map_or("-".to_string(), |v| format!("{v:.3}")))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join(" | ");
    ensure(t.len() == 3, format!("{} rows: {shown}", t.len()))?;
    ensure(t[0] == [Some(1.0)], format!("first row {:?}", t[0]))?;
    for (m, row) in t.iter().enumerate() {
        ensure(row.len() == m + 1, format!("row {} has {} entries", m + 1, row.len()))?;
        let vals: Vec<f64> = row
            .iter()
            .map(|v| v.ok_or_else(|| format!("undefined ratio: {shown}")))
            .collect::<Result<_, _>>()?;
        ensure(vals.iter().all(|v| *v >= 0.99), format!("ratio below 0.99: {shown}"))?;
        if m >= 1 {
            let outer = *vals.last().unwrap();
            ensure(
                vals.iter().all(|v| *v <= outer),
                format!("outermost not the row max: {shown}"),
            )?;
        }
    }
    Ok(shown)
}

fn mean_body_distance(frame: &BodyFrame, x: &[Vec3]) -> f64 {
    x.iter()
        .map(|p| frame.proxy.signed_distance(frame.proxy.nearest(p), p))
        .sum::<f64>()
        / x.len() as f64
}

fn body() -> Result<RiggedBody, String> {
    generate_toy_body(&ToyBodyConfig::default()).map_err(|e| e.to_string())
}

fn invariance(u: &Untangled) -> Outcome {
    let body = body()?;
    let beta = ShapeParams::zeros(body.shape_count());
    let pose = Pose::t_pose(body.joint_count());
    let m = MaterialParams::default();

    let mesh = TubeSpec {
        segments: 30,
        rings: 10,
        ..TubeSpec::default()
    }
    .mesh()
    .map_err(|e| e.to_string())?;
    let rest = RestState::new(&mesh, &m).map_err(|e| e.to_string())?;
    let x: Vec<Vec3> = mesh
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            p + Vec3::new(
                0.01 * (i as f64).sin(),
                0.008 * (1.3 * i as f64).cos(),
                0.005 * ((i % 7) as f64 - 3.0),
            )
        })
        .collect();
    let energies = |x: &[Vec3]| {
        (
            strain(x, &rest.faces, &rest.frames, &m).value,
            bending(x, &rest.topo.hinges, &m).value,
        )
    };
    let (s0, b0) = energies(&x);
    let mut worst: f64 = 0.0;
    for (axis, shift) in [
        ([0.0, 0.0, 0.0], [1.5, -0.4, 2.0]),
        ([0.3, -1.2, 0.7], [0.0, 0.0, 0.0]),
        ([-2.1, 0.4, 1.9], [-3.0, 7.0, 0.25]),
    ] {
        let r = axis_angle_matrix(&Vec3::from(axis));
        let t = Vec3::from(shift);
        let moved: Vec<Vec3> = x.iter().map(|p| r * p + t).collect();
        let (s1, b1) = energies(&moved);
        worst = worst.max(rel(s1, s0)).max(rel(b1, b0));
    }
    ensure(worst < 1e-9, format!("rigid motion changed energy by {worst:e}"))?;

    let shaped = shape_body(&body, &beta).map_err(|e| e.to_string())?;
    let transforms = forward_kinematics(&body, &shaped.joints, &pose).map_err(|e| e.to_string())?;
    let skinned = lbs(&shaped.vertices, body.weights(), &transforms).map_err(|e| e.to_string())?;
    ensure(skinned == body.template().vertices(), "LBS at zero pose moved the body")?;
    let garment = Garment::new("g", mesh.clone(), m, &body, None).map_err(|e| e.to_string())?;
    let posed = posed_state(&garment, &body, &beta, &pose).map_err(|e| e.to_string())?;
    ensure(posed == mesh.vertices(), "LBS at zero pose moved the garment")?;

    let mut draped = garment.clone();
    let quick = SolverConfig {
        iterations: 80,
        stages: 1,
        log_interval: 0,
        ..SolverConfig::default()
    };
    let w = LossWeights::default();
    drape_single(&mut draped, &body, &beta, &pose, &w, &quick).map_err(|e| e.to_string())?;
    let frame = BodyFrame::new(&body, &beta, &pose).map_err(|e| e.to_string())?;
    let positions = posed_state(&draped, &body, &beta, &pose).map_err(|e| e.to_string())?;
    let eval = GarmentEval {
        positions: &positions,
        rest: draped.rest_state(),
        anchor: mesh.vertices(),
        held: draped.held,
        material: &draped.material,
    };
    let single = single_loss(&eval, &frame.proxy, &w)
        .map_err(|e| e.to_string())?
        .energy
        .value;
    let multi = multi_loss(&[eval], &frame.proxy, &w).map_err(|e| e.to_string())?.value;
    let multi_gap = rel(multi, single);
    ensure(multi_gap < 1e-12, format!("single layer objective {multi} vs {single}"))?;

    let base = &u.m2_pipeline;
    let mut swapped_cfg = base.config.clone();
    for g in &mut swapped_cfg.garments {
        g.layer = 3 - g.layer;
    }
    let swapped = Pipeline::from_config(swapped_cfg, Path::new("."), None).map_err(|e| e.to_string())?;
    let swapped_out = run_untangle(&swapped).map_err(|e| e.to_string())?;
    let innermost = |out: &RunOutput| -> Result<(String, f64, f64), String> {
        let d0 = mean_body_distance(&frame, &obj_vertices(out, 0)?);
        let d1 = mean_body_distance(&frame, &obj_vertices(out, 1)?);
        let names = &out.report.garments;
        let name = if d0 < d1 { &names[0].name } else { &names[1].name };
        Ok((name.clone(), d0, d1))
    };
    let (a, a0, a1) = innermost(&u.m2)?;
    let (b, b0, b1) = innermost(&swapped_out)?;
    ensure(
        a != b,
        format!("{a} innermost in both orders ({a0:.4}/{a1:.4}, {b0:.4}/{b1:.4})"),
    )?;
    Ok(format!(
        "rigid={worst:.1e} multi_vs_single={multi_gap:.1e} innermost {a}->{b} ({a0:.4}/{a1:.4} vs {b0:.4}/{b1:.4} m)"
    ))
}

fn cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_drapestack"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!(
            "{args:?} exited {:?}: {}",
            o.status.code(),
            String::from_utf8_lossy(&o.stderr)
        ));
    }
    Ok(o.stdout)
}

fn snapshot(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let key = path.strip_prefix(dir).unwrap().display().to_string();
                files.insert(key, std::fs::read(&path).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(files)
}

/// Runs every command into a fresh directory and returns all outputs.
fn cli_session(root: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let t = ["--threads", "1", "--seed", "7"];
    let mut stdout = BTreeMap::new();
    let with = |args: &[&str]| -> Vec<String> { args.iter().chain(&t).map(|a| a.to_string()).collect() };
    let mut run = |key: &str, args: Vec<String>| -> Result<(), String> {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        stdout.insert(format!("stdout:{key}"), cli(&refs)?);
        Ok(())
    };
    run("gen-body", with(&["gen-body", "--out", &s(&root.join("body"))]))?;
    run(
        "gen-garment",
        with(&["gen-garment", "--kind", "layers", "--count", "2", "--out", &s(root)]),
    )?;
    let cfg_path = root.join("layers.json");
    let mut cfg = PipelineConfig::from_json(&std::fs::read_to_string(&cfg_path).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    cfg.solver.iterations = 150;
    cfg.solver.untangle_iterations = 150;
    cfg.solver.stages = 2;
    cfg.solver.log_interval = 0;
    std::fs::write(&cfg_path, cfg.to_json()).map_err(|e| e.to_string())?;
    let cfg = s(&cfg_path);
    run(
        "drape",
        with(&["drape", "--config", &cfg, "--out", &s(&root.join("drape"))]),
    )?;
    run(
        "untangle",
        with(&["untangle", "--config", &cfg, "--out", &s(&root.join("untangle"))]),
    )?;
    run("gradcheck", with(&["gradcheck", "--size", "50"]))?;
    let report = s(&root.join("untangle").join("report.json"));
    run("report-text", with(&["report", &report]))?;
    run(
        "report-structured",
        with(&["report", &report, "--format", "structured"]),
    )?;
    let mut all = snapshot(root)?;
    all.extend(stdout);
    Ok(all)
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = cli_session(a.path())?;
    let second = cli_session(b.path())?;
    let normalize = |m: BTreeMap<String, Vec<u8>>, root: &Path| -> BTreeMap<String, Vec<u8>> {
        let root = root.to_str().unwrap().as_bytes().to_vec();
        m.into_iter()
            .map(|(k, v)| {
                let text = String::from_utf8_lossy(&v).replace(std::str::from_utf8(&root).unwrap(), "<root>");
                (k, text.into_bytes())
            })
            .collect()
    };
    let first = normalize(first, a.path());
    let second = normalize(second, b.path());
    ensure(
        first.keys().eq(second.keys()),
        format!("different file sets: {:?} vs {:?}", first.keys(), second.keys()),
    )?;
    let differing: Vec<&String> = first
        .iter()
        .filter(|(k, v)| second[*k] != **v)
        .map(|(k, _)| k)
        .collect();
    ensure(differing.is_empty(), format!("outputs differ: {differing:?}"))?;
    Ok(format!("{} outputs identical across reruns", first.len()))
}

fn main() {
    let mut failed = 0;
    let mut report = |name: &str, outcome: std::thread::Result<Outcome>| {
        let line = match outcome {
            Ok(Ok(detail)) => format!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                format!("FAIL {name}: {why}")
            }
            Err(_) => {
                failed += 1;
                format!("FAIL {name}: panicked")
            }
        };
        println!("{line}");
    };
    let guard = |f: &dyn Fn() -> Outcome| catch_unwind(AssertUnwindSafe(f));

    report("gradient suite", guard(&gradient_suite));
    report("closed-form energies", guard(&closed_forms));
    report("default constants", guard(&defaults));
    report("single drape fixture", guard(&single_drape));
    let untangled = catch_unwind(untangle_runs);
    match &untangled {
        Ok(Ok((u, t))) => {
            report("untangle fixture", guard(&|| untangle_clean(u, *t)));
            report("strain ratio trend", guard(&|| ratio_trend(&u.m3.report)));
            report("invariance suite", guard(&|| invariance(u)));
        }
        Ok(Err(e)) => {
            for name in ["untangle fixture", "strain ratio trend", "invariance suite"] {
                report(name, Ok(Err(e.clone())));
            }
        }
        Err(_) => {
            for name in ["untangle fixture", "strain ratio trend", "invariance suite"] {
                report(name, Ok(Err("untangle run panicked".into())));
            }
        }
    }
    report("determinism", guard(&determinism));
    println!("{} criteria failed", failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
