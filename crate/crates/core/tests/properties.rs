//! Cross-module invariants checked on random inputs.

use neuromouse_core::features::{featurize, FeatureSet};
use neuromouse_core::io::{load_trajectories, save_trajectories, LabeledTrajectory};
use neuromouse_core::lognormal::{decompose, reconstruct, FitConfig, LognormalStroke};
use neuromouse_core::surrogate::{human_surrogate, SurrogateConfig};
use neuromouse_core::synth::{generate_function_bot, SynthConfig};
use neuromouse_core::tags::{AttackType, Direction, ShapeKind, VpKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shape() -> impl Strategy<Value = ShapeKind> {
    prop::sample::select(ShapeKind::ALL.to_vec())
}

fn vp() -> impl Strategy<Value = VpKind> {
    prop::sample::select(VpKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bots_reach_their_keypoints_in_order(s in shape(), v in vp(), dir in 1u8..=8, seed in any::<u64>()) {
        let cfg = SynthConfig::default();
        let d = Direction::new(dir).unwrap();
        let t = generate_function_bot(s, v, d, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let pts = t.points();
        prop_assert!(pts.windows(2).all(|w| w[1].t > w[0].t));
        prop_assert!(pts.iter().all(|p| p.x.is_finite() && p.y.is_finite()));
        let ((ax, ay), (bx, by)) = cfg.layout.segment(d);
        let near = |p: &neuromouse_core::trajectory::Point, x: f64, y: f64| (p.x - x).hypot(p.y - y) <= 6.0 * cfg.endpoint_jitter_px + 1e-9;
        prop_assert!(near(&pts[0], ax, ay) && near(&pts[pts.len() - 1], bx, by));
    }

    #[test]
    fn every_feature_is_finite(dir in 1u8..=8, seed in any::<u64>(), bot in any::<bool>()) {
        let d = Direction::new(dir).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = if bot {
            generate_function_bot(ShapeKind::Exponential, VpKind::Logarithmic, d, &SynthConfig::default(), &mut rng).unwrap()
        } else {
            human_surrogate(d, &SurrogateConfig::default(), &mut rng).unwrap()
        };
        let (fv, dec) = featurize(FeatureSet::Combined, &t, &FitConfig::default()).unwrap();
        prop_assert_eq!(fv.len(), 43);
        prop_assert!(fv.values.iter().all(|v| v.is_finite()));
        prop_assert_eq!(fv.values[36], dec.unwrap().n() as f64);
    }

    #[test]
    fn saved_trajectories_reload_at_millisecond_precision(dir in 1u8..=8, seed in any::<u64>()) {
        let d = Direction::new(dir).unwrap();
        let t = human_surrogate(d, &SurrogateConfig::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let rec = LabeledTrajectory::new("h", AttackType::Human, t);
        let mut buf = Vec::new();
        save_trajectories(&mut buf, std::slice::from_ref(&rec)).unwrap();
        let back = load_trajectories(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(back[0].traj.direction(), Some(d));
        for (a, b) in back[0].traj.points().iter().zip(rec.traj.points()) {
            prop_assert_eq!((a.x, a.y), (b.x, b.y));
            prop_assert!((a.t - b.t).abs() <= 5e-4 + 1e-12);
        }
        let mut again = Vec::new();
        save_trajectories(&mut again, &back).unwrap();
        prop_assert_eq!(again, buf);
    }

    #[test]
    fn decomposition_never_exceeds_the_stroke_budget(
        d in 20.0..400.0f64, mu in -2.2..-0.6f64, sigma in 0.1..0.5f64, gain in 0.1..10.0f64,
    ) {
        let s = LognormalStroke::new(d, 0.05, mu, sigma);
        let end = 0.05 + (mu + 3.5 * sigma).exp();
        let times: Vec<f64> = (1..=(end * 200.0).ceil() as usize).map(|k| k as f64 / 200.0).collect();
        let vp = reconstruct(&[s], &times).scaled(gain);
        let cfg = FitConfig::default();
        let dec = decompose(&vp, &cfg).unwrap();
        prop_assert!(dec.n() >= 1 && dec.n() <= cfg.max_strokes);
        prop_assert!(dec.snr_db >= cfg.target_snr_db);
        prop_assert!(dec.strokes.windows(2).all(|w| w[0].peak_time() <= w[1].peak_time()));
        prop_assert!(((dec.strokes.iter().map(|s| s.d).sum::<f64>()) / (gain * d) - 1.0).abs() < 0.05);
    }
}
