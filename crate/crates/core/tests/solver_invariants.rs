use drapestack::body::{generate_toy_body, ToyBodyConfig};
use drapestack::energy::{strain, LossWeights, MaterialParams};
use drapestack::garments::{crossing_layers, TubeSpec};
use drapestack::solver::{drape_single, posed_state, stack_energies, untangle};
use drapestack::{Garment, LayerStack, Pose, RiggedBody, ShapeParams, SolverConfig, Vec3};

fn body() -> RiggedBody {
    generate_toy_body(&ToyBodyConfig::default()).unwrap()
}

fn small_skirt(body: &RiggedBody) -> Garment {
    let spec = TubeSpec {
        segments: 24,
        rings: 8,
        ..TubeSpec::default()
    };
    Garment::new("skirt", spec.mesh().unwrap(), MaterialParams::default(), body, None).unwrap()
}

fn coarse_layers(body: &RiggedBody) -> Vec<Garment> {
    crossing_layers(2)
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let spec = TubeSpec {
                segments: 20,
                rings: 6,
                ..s
            };
            Garment::new(
                format!("l{i}"),
                spec.mesh().unwrap(),
                MaterialParams::default(),
                body,
                None,
            )
            .unwrap()
        })
        .collect()
}

fn quick(iterations: usize) -> SolverConfig {
    SolverConfig {
        iterations,
        untangle_iterations: iterations,
        stages: 2,
        log_interval: 0,
        ..SolverConfig::default()
    }
}

fn rest_pose(body: &RiggedBody) -> (ShapeParams, Pose) {
    (ShapeParams::zeros(body.shape_count()), Pose::t_pose(body.joint_count()))
}

#[test]
fn zero_iterations_keep_the_input_and_report_direct_terms() {
    let body = body();
    let (beta, pose) = rest_pose(&body);
    let mut g = small_skirt(&body);
    let before = g.clone();
    let weights = LossWeights {
        gravity: 0.0,
        ..LossWeights::default()
    };
    let stats = drape_single(&mut g, &body, &beta, &pose, &weights, &quick(0)).unwrap();
    assert_eq!(g.delta_single, before.delta_single);
    assert_eq!(g.skin, before.skin);
    assert_eq!(stats.iterations(), 0);
    let posed = posed_state(&g, &body, &beta, &pose).unwrap();
    assert_eq!(posed, g.rest.vertices());
    let direct = strain(&posed, g.rest.faces(), &g.rest_state().frames, &g.material);
    assert_eq!(stats.terms[0].strain, direct.value);
    assert!(direct.value.abs() < 1e-20);
}

#[test]
fn drape_improves_and_never_touches_the_layer_field() {
    let body = body();
    let (beta, pose) = rest_pose(&body);
    let mut g = small_skirt(&body);
    g.delta_multi = (0..g.vertex_count())
        .map(|i| Vec3::new(0.0, 1e-4 * (i % 3) as f64, 0.0))
        .collect();
    let multi = g.delta_multi.clone();
    let stats = drape_single(&mut g, &body, &beta, &pose, &LossWeights::default(), &quick(150)).unwrap();
    assert_eq!(g.delta_multi, multi);
    assert!(stats.objective < stats.initial().unwrap());
    for s in &stats.stages {
        assert!(s.best <= s.initial);
    }
}

#[test]
fn unconverged_stage_hands_its_best_iterate_to_the_next() {
    let body = body();
    let (beta, pose) = rest_pose(&body);
    let mut g = small_skirt(&body);
    let stats = drape_single(&mut g, &body, &beta, &pose, &LossWeights::default(), &quick(40)).unwrap();
    assert!(!stats.stages[0].converged);
    assert_eq!(stats.stages[1].initial, stats.stages[0].best);
}

#[test]
fn drape_is_bit_reproducible() {
    let body = body();
    let (beta, pose) = rest_pose(&body);
    let run = || {
        let mut g = small_skirt(&body);
        let s = drape_single(&mut g, &body, &beta, &pose, &LossWeights::default(), &quick(60)).unwrap();
        (g.delta_single, g.skin.delta, s.objective)
    };
    let (a, b) = (run(), run());
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    assert_eq!(a.2.to_bits(), b.2.to_bits());
}

#[test]
fn single_layer_untangle_is_a_fixed_point() {
    let body = body();
    let (beta, pose) = rest_pose(&body);
    let mut g = small_skirt(&body);
    let weights = LossWeights::default();
    let draped = drape_single(&mut g, &body, &beta, &pose, &weights, &quick(100)).unwrap();
    let mut stack = LayerStack::new(vec![g.clone()]);
    let stats = untangle(&mut stack, &body, &beta, &pose, &weights, &quick(100)).unwrap();
    assert_eq!(stack.garments[0].delta_multi, g.delta_multi);
    assert_eq!(stats.iterations(), 0);
    let rel = (stats.objective - draped.objective).abs() / draped.objective.abs();
    assert!(rel < 1e-12, "relative difference {rel:e}");
    let direct = stack_energies(&stack, &body, &beta, &pose, &weights).unwrap();
    assert_eq!(direct.value, stats.objective);
}

#[test]
fn untangle_only_moves_the_layer_field() {
    let body = body();
    let (beta, pose) = rest_pose(&body);
    let weights = LossWeights::default();
    let mut layers = coarse_layers(&body);
    for g in &mut layers {
        drape_single(g, &body, &beta, &pose, &weights, &quick(50)).unwrap();
    }
    let frozen: Vec<_> = layers
        .iter()
        .map(|g| (g.delta_single.clone(), g.skin.clone()))
        .collect();
    let mut stack = LayerStack::new(layers);
    let stats = untangle(&mut stack, &body, &beta, &pose, &weights, &quick(80)).unwrap();
    assert!(stats.iterations() > 0);
    for (g, (ds, skin)) in stack.garments.iter().zip(&frozen) {
        assert_eq!(&g.delta_single, ds);
        assert_eq!(&g.skin, skin);
    }
    assert!(stack
        .garments
        .iter()
        .any(|g| g.delta_multi.iter().any(|d| *d != Vec3::zeros())));
}

#[test]
fn empty_stack_is_rejected() {
    let body = body();
    let (beta, pose) = rest_pose(&body);
    let mut stack = LayerStack::new(Vec::new());
    assert!(untangle(&mut stack, &body, &beta, &pose, &LossWeights::default(), &quick(10)).is_err());
}
