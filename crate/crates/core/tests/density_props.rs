// SPDX-License-Identifier: Apache-2.0

mod common;

use botnet_core::bot_scoring::{BotScoreRecord, ScoreCache, DEFAULT_PAIRS};
use botnet_core::density::{
    bimodality_report, find_modes, kde2d, kde2d_direct, kde2d_with, select_bandwidth, write_grid_files, BandwidthRule,
    DensityParams, Modality,
};
use botnet_core::Execution;
use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn points(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    (0..n).map(|_| (rng.random_range(lo..hi), rng.random_range(lo..hi))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn matches_naive_double_sum(seed in any::<u64>(), n in 1usize..200, g in 2usize..40, hx in 0.02f64..0.4, hy in 0.02f64..0.4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = points(&mut rng, n, 0.0, 1.0);
        let want = kde_oracle(&pts, (hx, hy), g);
        let sep = kde2d(&pts, (hx, hy), g).unwrap();
        let direct = kde2d_direct(&pts, (hx, hy), g, Execution::Sequential).unwrap();
        for ((w, s), d) in want.iter().zip(&sep.density).zip(&direct.density) {
            prop_assert!((s - w).abs() <= 1e-12);
            prop_assert!((d - w).abs() <= 1e-12);
        }
    }

    #[test]
    fn permutation_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = points(&mut rng, 120, 0.0, 1.0);
        let a = kde2d(&pts, (0.08, 0.11), 33).unwrap();
        pts.shuffle(&mut rng);
        let b = kde2d(&pts, (0.08, 0.11), 33).unwrap();
        for (x, y) in a.density.iter().zip(&b.density) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn translation_moves_argmax(seed in any::<u64>(), dc in -8i64..8, dr in -8i64..8) {
        let g = 65usize;
        let cell = 1.0 / (g - 1) as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let center = (rng.random_range(24..40) as f64 * cell, rng.random_range(24..40) as f64 * cell);
        let pts: Vec<(f64, f64)> = (0..30).map(|_| (center.0 + rng.random_range(-0.02..0.02), center.1 + rng.random_range(-0.02..0.02))).collect();
        let moved: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x + dc as f64 * cell, y + dr as f64 * cell)).collect();
        let a = kde2d(&pts, (0.05, 0.05), g).unwrap().argmax();
        let b = kde2d(&moved, (0.05, 0.05), g).unwrap().argmax();
        prop_assert_eq!((b.0 as i64 - a.0 as i64, b.1 as i64 - a.1 as i64), (dc, dr));
    }

    #[test]
    fn mass_is_at_most_one(seed in any::<u64>(), h in 0.01f64..0.3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = points(&mut rng, 50, 0.0, 1.0);
        let m = kde2d(&pts, (h, h), 129).unwrap().mass();
        prop_assert!(m > 0.0 && m <= 1.0 + 1e-9, "mass {}", m);
    }
}

#[test]
fn interior_mass_approaches_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let pts = points(&mut rng, 40, 0.4, 0.6);
    let masses: Vec<f64> = [0.1, 0.05, 0.02].iter().map(|&h| kde2d(&pts, (h, h), 257).unwrap().mass()).collect();
    assert!(masses.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{masses:?}");
    assert!((masses[2] - 1.0).abs() < 1e-3, "{masses:?}");
}

#[test]
fn single_bump_has_one_mode() {
    let grid = kde2d(&[(0.3, 0.7)], (0.1, 0.1), 51).unwrap();
    let r = find_modes(&grid, 0.05, 0.1);
    assert_eq!(r.modes.len(), 1);
    assert_eq!(r.classification, Modality::Unimodal);
    assert!((r.modes[0].x - 0.3).abs() < 1e-9 && (r.modes[0].y - 0.7).abs() < 1e-9);
}

#[test]
fn strategies_are_bitwise_equal() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let pts = points(&mut rng, 400, 0.0, 1.0);
    let a = kde2d_with(&pts, (0.07, 0.09), 64, Execution::Sequential).unwrap();
    let b = kde2d_with(&pts, (0.07, 0.09), 64, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn scott_bandwidth_formula() {
    let pts = [(0.1, 0.2), (0.4, 0.2), (0.7, 0.8), (0.9, 0.5)];
    let (hx, hy) = select_bandwidth(&pts, BandwidthRule::Scott).unwrap();
    let sd = |v: [f64; 4]| {
        let m = v.iter().sum::<f64>() / 4.0;
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 3.0).sqrt()
    };
    let factor = 4f64.powf(-1.0 / 6.0);
    assert!((hx - sd([0.1, 0.4, 0.7, 0.9]) * factor).abs() < 1e-15);
    assert!((hy - sd([0.2, 0.2, 0.8, 0.5]) * factor).abs() < 1e-15);
}

#[test]
fn failing_pair_does_not_stop_the_rest() {
    let mut cache = ScoreCache::new();
    for i in 0..30 {
        let mut r = BotScoreRecord::new(format!("a{i}"), ts(0));
        let v = if i % 2 == 0 { 0.2 } else { 0.8 };
        r.content = Some(v);
        r.sentiment = Some(v + 0.01 * (i as f64 % 3.0));
        r.network = Some(v);
        r.temporal = Some(1.0 - v);
        cache.insert(r);
    }
    let report = bimodality_report(&cache, &DEFAULT_PAIRS, &DensityParams::default()).unwrap();
    assert!(report[0].outcome.is_ok());
    assert!(report[1].outcome.is_err(), "friend scores are absent");
    assert!(report[3].outcome.is_ok());
    let dir = tempfile::tempdir().unwrap();
    let written = write_grid_files(dir.path(), &report[0]).unwrap().unwrap();
    let csv = std::fs::read_to_string(&written.0).unwrap();
    assert_eq!(csv.lines().count(), 128);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 128);
    assert!(write_grid_files(dir.path(), &report[1]).unwrap().is_none());
}
