#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rampsvm::data::{generate_synthetic, Dataset, SyntheticSpec};

pub const EX1_POINTS: [[f64; 2]; 5] = [[-2.0, 1.0], [-1.0, -1.0], [-5.0, -3.0], [1.0, 3.0], [1.0, 0.0]];
pub const EX1_LABELS: [f64; 5] = [1.0, 1.0, -1.0, -1.0, -1.0];

/// The five-point example on its printed coordinates.
pub fn example1_raw() -> Dataset {
    Dataset::new(EX1_POINTS.iter().map(|p| p.to_vec()).collect(), EX1_LABELS.to_vec(), "example1").unwrap()
}

/// The five-point example with every feature mapped onto [-1, 1], the
/// coordinates on which its reported optima hold.
pub fn example1() -> Dataset {
    example1_raw().scale_to_unit_box()
}

/// Small random instance for oracle comparisons: two noisy clouds, or
/// uniform points with random labels.
pub fn small_instance(seed: u64, max_n: usize, max_d: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(4..=max_n);
    let d = rng.random_range(1..=max_d);
    if rng.random_bool(0.6) {
        let balance = rng.random_range(0.3..0.7);
        let outliers = rng.random_range(0.0..0.3);
        let separation = rng.random_range(0.5..3.0);
        loop {
            let spec = SyntheticSpec {
                n,
                d,
                class_balance: balance,
                outlier_rate: outliers,
                separation,
                seed: rng.random(),
            };
            // tiny n can round a class away
            if let Ok(mut ds) = generate_synthetic(&spec) {
                ds.name = format!("synthetic-{seed}");
                return ds;
            }
        }
    } else {
        loop {
            let x: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| (rng.random_range(-2.0f64..2.0) * 4.0).round() / 4.0).collect())
                .collect();
            let y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
            if let Ok(ds) = Dataset::new(x, y, format!("uniform-{seed}")) {
                return ds;
            }
        }
    }
}

pub fn synthetic(n: usize, d: usize, seed: u64) -> Dataset {
    generate_synthetic(&SyntheticSpec {
        n,
        d,
        class_balance: 0.5,
        outlier_rate: 0.1,
        separation: 2.0,
        seed,
    })
    .unwrap()
}
