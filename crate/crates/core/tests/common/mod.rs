#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wauc_core::{MarkerDataset, SubjectRecord};

/// Shape limits for a random clustered dataset.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub markers: usize,
    pub times: usize,
    pub max_subjects: usize,
    pub max_cluster: usize,
}

/// Values on a coarse half-integer grid so that ties are common.
pub fn random_dataset(seed: u64, shape: Shape) -> MarkerDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=shape.max_subjects);
    let j = rng.random_range(1..=shape.max_subjects);
    let mut group = |count: usize, prefix: &str, shift: i32| -> Vec<SubjectRecord> {
        (0..count)
            .map(|i| {
                let mut s = SubjectRecord::new(format!("{prefix}{i}"));
                for l in 0..shape.markers {
                    for k in 0..shape.times {
                        for _ in 0..rng.random_range(1..=shape.max_cluster) {
                            s.push(l, k, f64::from(rng.random_range(-6..=6) + shift) / 2.0);
                        }
                    }
                }
                s
            })
            .collect()
    };
    let d = group(m, "d", 2);
    let nd = group(j, "n", 0);
    MarkerDataset::validated(shape.markers, shape.times, d, nd).unwrap()
}

/// One continuous measurement per subject and marker.
pub fn singleton_dataset(seed: u64, markers: usize, m: usize, j: usize) -> MarkerDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut group = |count: usize, shift: f64| -> Vec<SubjectRecord> {
        (0..count)
            .map(|i| {
                let common: f64 = rng.random();
                let mut s = SubjectRecord::new(i.to_string());
                for l in 0..markers {
                    s.push(l, 0, shift + common + rng.random::<f64>());
                }
                s
            })
            .collect()
    };
    let d = group(m, 0.4);
    let nd = group(j, 0.0);
    MarkerDataset::validated(markers, 1, d, nd).unwrap()
}
