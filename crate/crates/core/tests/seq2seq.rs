use std::ops::ControlFlow;

use egoloc::data::{BoundingBox, Direction, FrameObservation, Keypoint, NormStats, TrackWindow, NUM_KEYPOINTS};
use egoloc::numerics::{adam_step, AdamConfig};
use egoloc::seq2seq::{
    evaluate_loss, train, FaultInjection, ModelConfig, Mode, NormBox, PreparedSample, Seq2Seq, SeedMode,
    TrainConfig, Variant,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn frame(t: usize, bbox: BoundingBox, rng: &mut ChaCha8Rng) -> FrameObservation {
    let mut pose = [Keypoint::MISSING; NUM_KEYPOINTS];
    for k in &mut pose {
        *k = Keypoint {
            x: bbox.x1 + rng.gen::<f64>() * bbox.width(),
            y: bbox.y1 + rng.gen::<f64>() * bbox.height(),
            confidence: 0.9,
        };
    }
    let mut imu = [0.0; 6];
    for v in &mut imu {
        *v = rng.gen_range(-1.0..1.0);
    }
    FrameObservation {
        frame_index: t as u64,
        bbox,
        pose,
        imu,
    }
}

/// A person drifting right at `vx` px/frame with random pose and IMU.
fn drifting(len: usize, x0: f64, vx: f64, seed: u64) -> TrackWindow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = (0..len)
        .map(|t| {
            let x = x0 + vx * t as f64;
            frame(t, BoundingBox::new(x, 60.0, x + 40.0, 200.0), &mut rng)
        })
        .collect();
    TrackWindow {
        frames,
        direction: Direction::Across,
        clip_id: "c".into(),
        person_id: 1,
    }
}

fn prepared(model: &Seq2Seq, windows: &[TrackWindow]) -> Vec<PreparedSample> {
    let stats = NormStats::fit(windows);
    windows
        .iter()
        .map(|w| model.prepare(&stats.normalize(w)).unwrap())
        .collect()
}

#[test]
fn default_shapes() {
    let model = Seq2Seq::init(ModelConfig::default(), 0).unwrap();
    let store = model.store();
    let shape = |n: &str| store.value(store.find(n).unwrap()).shape();
    assert_eq!(shape("encoder.layer0.w_ih"), (1536, 60));
    assert_eq!(shape("encoder.layer1.w_ih"), (1536, 384));
    assert_eq!(shape("decoder.layer0.w_ih"), (1536, 4));
    assert_eq!(shape("head.weight"), (4, 384));
    let l = Seq2Seq::init(ModelConfig::for_variant(Variant::LLstm), 0).unwrap();
    assert_eq!(l.store().value(l.store().find("encoder.layer0.w_ih").unwrap()).shape(), (1536, 4));
}

#[test]
fn init_is_seeded() {
    let a = Seq2Seq::init(ModelConfig::tiny(), 3).unwrap();
    let b = Seq2Seq::init(ModelConfig::tiny(), 3).unwrap();
    let c = Seq2Seq::init(ModelConfig::tiny(), 4).unwrap();
    assert_eq!(a.store(), b.store());
    assert_ne!(a.store(), c.store());
}

#[test]
fn zero_parameters_give_zero_context() {
    let mut model = Seq2Seq::init(ModelConfig::tiny(), 0).unwrap();
    for p in model.store_mut().iter_mut() {
        p.value = p.value.scale(0.0);
    }
    let stats = NormStats::default();
    let mut norm = stats.normalize(&drifting(5, 50.0, 3.0, 1));
    norm.boxes.truncate(5);
    let ctx = model.encode(&norm).unwrap();
    for m in ctx.hidden.iter().chain(&ctx.cell) {
        assert_eq!(m.max_abs(), 0.0);
    }
}

#[test]
fn encoder_is_order_sensitive() {
    let model = Seq2Seq::init(ModelConfig::tiny(), 0).unwrap();
    let stats = NormStats::default();
    let norm = stats.normalize(&drifting(5, 50.0, 12.0, 1));
    let mut rev = norm.clone();
    rev.boxes.reverse();
    rev.imu.reverse();
    rev.pose.reverse();
    assert_ne!(model.encode(&norm).unwrap(), model.encode(&rev).unwrap());
    let mut short = norm.clone();
    short.boxes.pop();
    assert!(model.encode(&short).is_err());
}

#[test]
fn teacher_forcing_extremes() {
    let model = Seq2Seq::init(ModelConfig::default(), 0).unwrap();
    let norm = NormStats::default().normalize(&drifting(20, 20.0, 5.0, 2));
    let mut obs = norm.clone();
    obs.boxes.truncate(10);
    let ctx = model.encode(&obs).unwrap();
    let seed = norm.boxes[10];
    let teacher: Vec<NormBox> = norm.boxes[11..].to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    let forced = model
        .decode(&ctx, seed, Some(&teacher), 1.0, Mode::Eval, &mut rng)
        .unwrap();
    assert_eq!(forced.outputs.len(), 9);
    assert_eq!(forced.inputs[0], seed);
    assert_eq!(&forced.inputs[1..], &teacher[..8]);
    assert!(forced.self_fed.iter().all(|&s| !s));

    let free = model
        .decode(&ctx, seed, Some(&teacher), 0.0, Mode::Eval, &mut rng)
        .unwrap();
    let other: Vec<NormBox> = teacher.iter().map(|b| b.map(|v| v + 0.3)).collect();
    let free2 = model
        .decode(&ctx, seed, Some(&other), 0.0, Mode::Eval, &mut rng)
        .unwrap();
    assert_eq!(free, free2);
    assert_eq!(&free.inputs[1..], &free.outputs[..8]);

    assert!(model.decode(&ctx, seed, Some(&teacher), 1.5, Mode::Eval, &mut rng).is_err());
    assert!(model.decode(&ctx, seed, None, 0.5, Mode::Train, &mut rng).is_err());
    assert!(model.decode(&ctx, seed, Some(&teacher[..3]), 0.5, Mode::Eval, &mut rng).is_err());
}

#[test]
fn perfect_prediction_has_zero_loss() {
    let cfg = ModelConfig::tiny();
    let mut model = Seq2Seq::init(cfg.clone(), 0).unwrap();
    let target = [0.2, 0.3, 0.4, 0.9];
    let store = model.store_mut();
    let head_b = store.find("head.bias").unwrap();
    for p in store.iter_mut() {
        p.value = p.value.scale(0.0);
    }
    for (i, v) in target.iter().enumerate() {
        store.value_mut(head_b).set(i, 0, *v);
    }
    let mut w = drifting(cfg.window_len(), 0.0, 0.0, 1);
    for f in &mut w.frames {
        f.bbox = BoundingBox::new(0.2 * 455.0, 0.3 * 256.0, 0.4 * 455.0, 0.9 * 256.0);
    }
    let sample = model.prepare(&NormStats::default().normalize(&w)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let loss = model.forward_loss(&sample, 0.5, Mode::Eval, &mut rng).unwrap();
    assert!(loss < 1e-24, "{loss}");
}

#[test]
fn location_variant_ignores_pose_and_imu() {
    let model = Seq2Seq::init(ModelConfig::for_variant(Variant::LLstm), 5).unwrap();
    let a = drifting(20, 30.0, 4.0, 1);
    let mut b = drifting(20, 30.0, 4.0, 99);
    for (fa, fb) in a.frames.iter().zip(&mut b.frames) {
        assert_eq!(fa.bbox, fb.bbox);
        fb.imu = [7.0; 6];
    }
    let stats = NormStats::fit([&a]);
    let pa = model.predict(&a, &stats, SeedMode::LastObserved).unwrap();
    let pb = model.predict(&b, &stats, SeedMode::LastObserved).unwrap();
    assert_eq!(pa, pb);

    let full = Seq2Seq::init(ModelConfig::default(), 5).unwrap();
    assert_ne!(
        full.predict(&a, &stats, SeedMode::LastObserved).unwrap(),
        full.predict(&b, &stats, SeedMode::LastObserved).unwrap()
    );
}

#[test]
fn full_network_gradient_check() {
    let cfg = ModelConfig::tiny();
    let mut model = Seq2Seq::init(cfg.clone(), 11).unwrap();
    let windows: Vec<_> = (0..2)
        .map(|i| drifting(cfg.window_len(), 40.0 + 30.0 * i as f64, 6.0, i))
        .collect();
    let samples = prepared(&model, &windows);
    for seed in 0..3 {
        let report = model.gradient_check(&samples, 0.5, seed, 1e-5).unwrap();
        assert!(report.max_relative_error() < 1e-5, "{:?}", report.worst());
    }
}

#[test]
fn gradient_check_with_dropout() {
    let cfg = ModelConfig {
        dropout: 0.3,
        ..ModelConfig::tiny()
    };
    let mut model = Seq2Seq::init(cfg.clone(), 2).unwrap();
    let samples = prepared(&model, &[drifting(cfg.window_len(), 40.0, 6.0, 3)]);
    let report = model.gradient_check(&samples, 0.5, 7, 1e-5).unwrap();
    assert!(report.max_relative_error() < 1e-5, "{:?}", report.worst());
}

#[test]
fn injected_fault_is_detected() {
    let cfg = ModelConfig::tiny();
    let mut model = Seq2Seq::init(cfg.clone(), 11).unwrap();
    model.set_fault_injection(Some(FaultInjection::FlipForgetGate));
    let samples = prepared(&model, &[drifting(cfg.window_len(), 40.0, 6.0, 0)]);
    let report = model.gradient_check(&samples, 0.5, 0, 1e-5).unwrap();
    assert!(report.max_relative_error() > 1e-3, "{report:?}");
}

#[test]
fn adam_reduces_loss() {
    let cfg = ModelConfig {
        hidden: 16,
        dropout: 0.0,
        ..ModelConfig::default()
    };
    let mut model = Seq2Seq::init(cfg.clone(), 0).unwrap();
    let samples = prepared(&model, &[drifting(20, 30.0, 5.0, 0), drifting(20, 200.0, -4.0, 1)]);
    let adam = AdamConfig::default().with_learning_rate(1e-2);
    let before = evaluate_loss(&model, &samples, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..50 {
        let mut grads = model.store().grad_buffer();
        for s in &samples {
            model.loss_and_grad(s, 0.5, Mode::Train, &mut rng, &mut grads).unwrap();
        }
        let store = model.store_mut();
        store.zero_grad();
        store.accumulate(&grads, 0.5);
        adam_step(store, &adam).unwrap();
    }
    let after = evaluate_loss(&model, &samples, 0.0).unwrap();
    assert!(after < 0.5 * before, "{before} -> {after}");
}

#[test]
fn prediction_is_deterministic_and_well_formed() {
    let model = Seq2Seq::init(ModelConfig::default(), 1).unwrap();
    let w = drifting(20, 30.0, 5.0, 0);
    let stats = NormStats::fit([&w]);
    let a = model.predict(&w, &stats, SeedMode::LastObserved).unwrap();
    let b = model.predict(&w, &stats, SeedMode::LastObserved).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 9);
    assert_eq!(a.offset(0), 2);
    for (bx, c) in a.boxes.iter().zip(&a.centers) {
        assert_eq!(*c, ((bx.x1 + bx.x2) / 2.0, (bx.y1 + bx.y2) / 2.0));
        assert!(bx.x1 >= 0.0 && bx.x2 <= 455.0 && bx.y1 >= 0.0 && bx.y2 <= 256.0);
    }
    let mut observed_only = w.clone();
    observed_only.frames.truncate(10);
    assert!(model.predict(&observed_only, &stats, SeedMode::LastObserved).is_ok());
    assert!(model.predict(&observed_only, &stats, SeedMode::OracleNext).is_err());
}

#[test]
fn learns_a_stationary_person() {
    let cfg = ModelConfig {
        hidden: 16,
        dropout: 0.0,
        ..ModelConfig::for_variant(Variant::LLstm)
    };
    let mut model = Seq2Seq::init(cfg, 0).unwrap();
    let windows: Vec<_> = (0..8).map(|i| drifting(20, 40.0 + 40.0 * i as f64, 0.0, i)).collect();
    let stats = NormStats::fit(&windows);
    let samples: Vec<_> = windows
        .iter()
        .map(|w| model.prepare(&stats.normalize(w)).unwrap())
        .collect();
    let tc = TrainConfig {
        epochs: 300,
        batch_size: 8,
        adam: AdamConfig::default().with_learning_rate(1e-2),
        ..TrainConfig::default()
    };
    train(&mut model, &samples, &tc, |_, _| Ok(ControlFlow::Continue(()))).unwrap();
    for w in &windows {
        let p = model.predict(w, &stats, SeedMode::LastObserved).unwrap();
        let truth = w.frames[0].bbox;
        for b in &p.boxes {
            let err = (b.x1 - truth.x1)
                .abs()
                .max((b.x2 - truth.x2).abs())
                .max((b.y1 - truth.y1).abs())
                .max((b.y2 - truth.y2).abs());
            assert!(err < 5.0, "{b:?} vs {truth:?}");
        }
    }
}

#[test]
fn training_is_reproducible() {
    let cfg = ModelConfig {
        hidden: 8,
        dropout: 0.5,
        ..ModelConfig::default()
    };
    let run = || {
        let mut model = Seq2Seq::init(cfg.clone(), 4).unwrap();
        let samples = prepared(&model, &[drifting(20, 30.0, 5.0, 0), drifting(20, 90.0, 2.0, 1)]);
        let tc = TrainConfig {
            epochs: 3,
            batch_size: 1,
            seed: 9,
            ..TrainConfig::default()
        };
        let hist = train(&mut model, &samples, &tc, |_, _| Ok(ControlFlow::Continue(()))).unwrap();
        (hist, model.into_store())
    };
    assert_eq!(run(), run());
}
