//! Property tests. Oracles are written out here rather than reusing the
//! library's own helpers.

use hybridloc_core::channel::{extract_toa, MultipathTap};
use hybridloc_core::epoch::bucket_epochs;
use hybridloc_core::fusion::{classical_kf_step, sskf_update};
use hybridloc_core::imu::rotate_body_to_global;
use hybridloc_core::localization::min_max_box;
use hybridloc_core::montecarlo::{aggregate, RunResult};
use hybridloc_core::*;
use proptest::prelude::*;

fn pose_list() -> impl Strategy<Value = Vec<TimedPose>> {
    prop::collection::vec((0.01f64..2.0, -50.0f64..50.0, -50.0f64..50.0, -3.0f64..3.0), 1..40).prop_map(|v| {
        let mut t = 0.0;
        v.into_iter()
            .map(|(dt, x, y, th)| {
                t += dt;
                TimedPose::new(t, x, y, th)
            })
            .collect()
    })
}

fn anchor_ranges() -> impl Strategy<Value = Vec<(Anchor, f64)>> {
    prop::collection::vec((-20.0f64..20.0, -20.0f64..20.0, 0.0f64..30.0), 1..8).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (x, y, d))| (Anchor::new(i as u32, x, y, true), d))
            .collect()
    })
}

fn chord(a: &TimedPose, b: &TimedPose) -> f64 {
    ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt()
}

proptest! {
    #[test]
    fn interpolation_is_exact_at_knots(poses in pose_list()) {
        let traj = Trajectory::new(poses.clone()).unwrap();
        for p in &poses {
            let q = traj.interpolate(p.t).unwrap();
            prop_assert_eq!((q.x, q.y), (p.x, p.y));
        }
    }

    #[test]
    fn path_length_is_sum_of_chords_and_translation_invariant(poses in pose_list(), dx in -100.0f64..100.0, dy in -100.0f64..100.0) {
        let expected: f64 = poses.windows(2).map(|w| chord(&w[0], &w[1])).sum();
        let len = Trajectory::new(poses.clone()).unwrap().path_length().unwrap();
        prop_assert!((len - expected).abs() <= 1e-9 * expected.max(1.0));
        let moved: Vec<_> = poses.iter().map(|p| TimedPose::new(p.t, p.x + dx, p.y + dy, p.theta)).collect();
        let len2 = Trajectory::new(moved).unwrap().path_length().unwrap();
        prop_assert!((len - len2).abs() <= 1e-9 * expected.max(1.0));
    }

    #[test]
    fn path_length_adds_over_concatenation(poses in pose_list(), split in 0usize..40) {
        let k = split.min(poses.len() - 1);
        let whole = Trajectory::new(poses.clone()).unwrap().path_length().unwrap();
        let head = Trajectory::new(poses[..=k].to_vec()).unwrap().path_length().unwrap();
        let tail = Trajectory::new(poses[k..].to_vec()).unwrap().path_length().unwrap();
        prop_assert!((whole - head - tail).abs() <= 1e-9 * whole.max(1.0));
    }

    #[test]
    fn rotation_preserves_norm_and_composes(x in -10.0f64..10.0, y in -10.0f64..10.0, a in -7.0f64..7.0, b in -7.0f64..7.0) {
        let r = rotate_body_to_global([x, y], a);
        prop_assert!((r[0].hypot(r[1]) - x.hypot(y)).abs() < 1e-12);
        let two = rotate_body_to_global(r, b);
        let one = rotate_body_to_global([x, y], a + b);
        prop_assert!((two[0] - one[0]).abs() < 1e-9 && (two[1] - one[1]).abs() < 1e-9);
    }

    #[test]
    fn normalized_angle_in_half_open_interval(a in -100.0f64..100.0) {
        let n = hybridloc_core::model::normalize_angle(a);
        prop_assert!(n > -std::f64::consts::PI && n <= std::f64::consts::PI);
        let k = (a - n) / std::f64::consts::TAU;
        prop_assert!((k - k.round()).abs() < 1e-9);
    }

    #[test]
    fn min_max_matches_brute_force(ranges in anchor_ranges()) {
        // Each bound is the endpoint that no other interval cuts further.
        let lows_x: Vec<f64> = ranges.iter().map(|(a, d)| a.x - d).collect();
        let highs_x: Vec<f64> = ranges.iter().map(|(a, d)| a.x + d).collect();
        let lows_y: Vec<f64> = ranges.iter().map(|(a, d)| a.y - d).collect();
        let highs_y: Vec<f64> = ranges.iter().map(|(a, d)| a.y + d).collect();
        let pick = |c: &[f64], tighter: fn(f64, f64) -> bool| {
            *c.iter().find(|&&v| c.iter().all(|&w| !tighter(w, v))).unwrap()
        };
        let x_lo = pick(&lows_x, |w, v| w > v);
        let x_hi = pick(&highs_x, |w, v| w < v);
        let y_lo = pick(&lows_y, |w, v| w > v);
        let y_hi = pick(&highs_y, |w, v| w < v);
        let est = min_max(&ranges).unwrap();
        prop_assert!((est[0] - (x_lo + x_hi) / 2.0).abs() <= 1e-9);
        prop_assert!((est[1] - (y_lo + y_hi) / 2.0).abs() <= 1e-9);
    }

    #[test]
    fn min_max_is_translation_equivariant(ranges in anchor_ranges(), dx in -50.0f64..50.0, dy in -50.0f64..50.0) {
        let a = min_max(&ranges).unwrap();
        let shifted: Vec<_> = ranges.iter().map(|(an, d)| (Anchor::new(an.id, an.x + dx, an.y + dy, an.los), *d)).collect();
        let b = min_max(&shifted).unwrap();
        prop_assert!((b[0] - a[0] - dx).abs() < 1e-9 && (b[1] - a[1] - dy).abs() < 1e-9);
    }

    #[test]
    fn uniform_range_inflation_keeps_center_and_grows_box(ranges in anchor_ranges(), delta in 0.0f64..10.0) {
        let a = min_max_box(&ranges).unwrap();
        let inflated: Vec<_> = ranges.iter().map(|(an, d)| (*an, d + delta)).collect();
        let b = min_max_box(&inflated).unwrap();
        prop_assert!(b.x_lo <= a.x_lo && b.x_hi >= a.x_hi && b.y_lo <= a.y_lo && b.y_hi >= a.y_hi);
        let (ca, cb) = (a.center(), b.center());
        prop_assert!((ca[0] - cb[0]).abs() < 1e-9 && (ca[1] - cb[1]).abs() < 1e-9);
    }

    #[test]
    fn exact_ranges_put_truth_inside_box(ranges in anchor_ranges(), px in -20.0f64..20.0, py in -20.0f64..20.0) {
        let exact: Vec<_> = ranges.iter().map(|(a, _)| (*a, a.distance_to(px, py))).collect();
        let b = min_max_box(&exact).unwrap();
        prop_assert!(b.x_lo <= px + 1e-9 && px <= b.x_hi + 1e-9);
        prop_assert!(b.y_lo <= py + 1e-9 && py <= b.y_hi + 1e-9);
    }

    #[test]
    fn multilateration_recovers_exact_position(px in -10.0f64..10.0, py in -10.0f64..10.0, extra in prop::collection::vec((-15.0f64..15.0, -15.0f64..15.0), 0..4)) {
        let mut pts = vec![(-12.0, -12.0), (12.0, -12.0), (0.0, 14.0)];
        pts.extend(extra);
        let ranges: Vec<_> = pts.iter().enumerate()
            .map(|(i, &(x, y))| {
                let a = Anchor::new(i as u32, x, y, true);
                (a, a.distance_to(px, py))
            })
            .collect();
        let est = multilateration_ls(&ranges).unwrap();
        prop_assert!((est[0] - px).abs() < 1e-6 && (est[1] - py).abs() < 1e-6);
    }

    #[test]
    fn toa_ignores_tap_order(taps in prop::collection::vec((0.0f64..5.0, 0.0f64..1e-6), 1..20), rot in 0usize..20) {
        let taps: Vec<MultipathTap> = taps.into_iter()
            .map(|(m, d)| MultipathTap { magnitude: m, phase: 0.0, delay: d })
            .collect();
        let mut permuted = taps.clone();
        permuted.reverse();
        let k = rot % permuted.len();
        permuted.rotate_left(k);
        let a = extract_toa(&ChannelRealization::new(taps.clone(), true).unwrap());
        let b = extract_toa(&ChannelRealization::new(permuted, true).unwrap());
        prop_assert_eq!(a, b);
        // Oracle: earliest delay among the taps of maximal magnitude.
        let max = taps.iter().map(|t| t.magnitude).fold(f64::MIN, f64::max);
        let expected = taps.iter().filter(|t| t.magnitude == max).map(|t| t.delay).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(a, expected);
    }

    #[test]
    fn steady_state_gain_solves_riccati(q in 1e-6f64..1e3, r in 1e-6f64..1e3) {
        let g = compute_steady_state_gain(&FilterConfig::new(q, r, 0.0)).unwrap();
        // Predicted covariance solves P^2 - qP - qr = 0.
        let p = (q + (q * q + 4.0 * q * r).sqrt()) / 2.0;
        let k = p / (p + r);
        prop_assert!((g.kx - k).abs() < 1e-6, "kx {} vs {}", g.kx, k);
        prop_assert_eq!(g.kx, g.ky);
        prop_assert!(g.kx > 0.0 && g.kx < 1.0);
    }

    #[test]
    fn classical_gain_converges_to_steady_state(q in 1e-3f64..10.0, r in 1e-3f64..10.0) {
        let cfg = FilterConfig::new(q, r, 0.0);
        let mut s = FilterState::new(0.0, 0.0);
        let mut k = 0.0;
        for _ in 0..2000 {
            let prior = s.p + q;
            s = classical_kf_step(&s, [0.0, 0.0], Some([0.0, 0.0]), &cfg);
            k = prior / (prior + r);
        }
        let g = compute_steady_state_gain(&cfg).unwrap();
        prop_assert!((k - g.kx).abs() < 1e-6);
    }

    #[test]
    fn update_lands_on_segment(x in -50.0f64..50.0, y in -50.0f64..50.0, fx in -50.0f64..50.0, fy in -50.0f64..50.0, k in 0.0f64..=1.0) {
        let s = sskf_update(&FilterState::new(x, y), [fx, fy], &FilterGain::uniform(k).unwrap());
        let along = ((s.x - x) * (fx - x) + (s.y - y) * (fy - y)) / ((fx - x).powi(2) + (fy - y).powi(2)).max(1e-300);
        let cross = (s.x - x) * (fy - y) - (s.y - y) * (fx - x);
        prop_assert!(cross.abs() < 1e-9 * (1.0 + (fx - x).abs() + (fy - y).abs()).powi(2));
        if (fx - x).hypot(fy - y) > 1e-6 {
            prop_assert!((along - k).abs() < 1e-9);
        }
    }

    #[test]
    fn aggregate_is_permutation_invariant(vals in prop::collection::vec((0.0f64..5.0, 0.0f64..5.0), 2..30), seed in any::<u64>()) {
        let runs: Vec<Vec<RunResult>> = vals.iter().map(|&(a, b)| vec![RunResult { rmse: a, max_error: a + b }]).collect();
        let mut shuffled = runs.clone();
        // Deterministic Fisher-Yates driven by an LCG.
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let modes = [FusionMode::ImuOnly];
        let a = &aggregate(&modes, &runs)[0];
        let b = &aggregate(&modes, &shuffled)[0];
        prop_assert!((a.mean_rmse - b.mean_rmse).abs() < 1e-12);
        prop_assert!((a.std_rmse - b.std_rmse).abs() < 1e-12);
        prop_assert!((a.mean_max_error - b.mean_max_error).abs() < 1e-12);
    }

    #[test]
    fn buckets_cover_every_range(raw in prop::collection::vec((0.0f64..5.0, 1u32..5), 0..60), tol in 0.0f64..0.5) {
        let mut ranges: Vec<RangeMeasurement> = raw.iter().map(|&(t, a)| RangeMeasurement::new(t, a, 1.0)).collect();
        ranges.sort_by(|a, b| a.t.total_cmp(&b.t));
        let epochs = bucket_epochs(&ranges, tol);
        prop_assert!(epochs.windows(2).all(|w| w[1].t > w[0].t));
        let kept: usize = epochs.iter().map(|e| e.ranges.len()).sum();
        let mut dropped = 0;
        for e in &epochs {
            prop_assert!(e.ranges.iter().all(|r| r.t >= e.t && r.t - e.t <= tol));
            let mut ids: Vec<u32> = e.ranges.iter().map(|r| r.anchor_id).collect();
            ids.sort_unstable();
            ids.dedup();
            prop_assert_eq!(ids.len(), e.ranges.len());
            // Inputs inside this epoch's window that were not kept must be
            // later duplicates of a kept anchor.
            let window: Vec<_> = ranges.iter().filter(|r| r.t >= e.t && r.t - e.t <= tol).collect();
            for r in e.ranges.iter() {
                let first = window.iter().filter(|w| w.anchor_id == r.anchor_id).map(|w| w.t).fold(f64::INFINITY, f64::min);
                prop_assert!(r.t <= first);
            }
            dropped += window.len() - e.ranges.len();
        }
        prop_assert_eq!(kept + dropped, ranges.len());
    }

    #[test]
    fn max_error_bounds_rmse(poses in pose_list(), ex in -3.0f64..3.0, noise in prop::collection::vec(-1.0f64..1.0, 40)) {
        let truth = Trajectory::new(poses.clone()).unwrap();
        let est = Trajectory::new(
            poses.iter().zip(noise.iter().cycle()).map(|(p, n)| TimedPose::new(p.t, p.x + ex * n, p.y - n, 0.0)).collect(),
        ).unwrap();
        let r = evaluate(&est, &truth).unwrap();
        prop_assert!(r.max_error >= r.rmse);
    }
}
