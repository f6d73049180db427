#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use toricstack::stackyfan::StackyFan;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("data").join(name)
}

pub fn fixture(name: &str) -> StackyFan {
    let text = std::fs::read_to_string(data(name)).expect("fixture exists");
    StackyFan::from_json(&text).expect("fixture parses")
}

/// The surface corpus used across tests.
pub fn surface_corpus() -> Vec<(&'static str, StackyFan)> {
    ["p2.json", "p112.json", "p123.json", "hirzebruch-stacky.json"]
        .into_iter()
        .map(|n| (n, fixture(n)))
        .collect()
}

fn det2(a: &[i64], b: &[i64]) -> i64 {
    a[0] * b[1] - a[1] * b[0]
}

fn complete_surface<R: Rng>(rng: &mut R) -> Option<StackyFan> {
    let n = rng.gen_range(3..=6);
    let mut rays: Vec<Vec<i64>> = Vec::new();
    while rays.len() < n {
        let v = vec![rng.gen_range(-4..=4), rng.gen_range(-4..=4)];
        if v != [0, 0] {
            rays.push(v);
        }
    }
    rays.sort_by(|a, b| {
        let ta = (a[1] as f64).atan2(a[0] as f64);
        let tb = (b[1] as f64).atan2(b[0] as f64);
        ta.partial_cmp(&tb).expect("finite angles")
    });
    for k in 0..n {
        if det2(&rays[k], &rays[(k + 1) % n]) <= 0 {
            return None;
        }
    }
    let cones = (0..n).map(|k| vec![k, (k + 1) % n]).collect();
    Some(StackyFan::new(2, rays, cones))
}

fn weighted_space<R: Rng>(rng: &mut R) -> StackyFan {
    let mut rays = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
    let k = rng.gen_range(0..3);
    rays[k][k] = rng.gen_range(1..=4);
    rays.push((0..3).map(|_| -rng.gen_range(1..=4)).collect());
    let cones = vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]];
    StackyFan::new(3, rays, cones)
}

fn line_times_plane<R: Rng>(rng: &mut R) -> StackyFan {
    let rays = vec![
        vec![rng.gen_range(1..=4), 0, 0],
        vec![-rng.gen_range(1..=4), 0, 0],
        vec![0, rng.gen_range(1..=2), 0],
        vec![0, 0, 1],
        vec![0, -rng.gen_range(1..=4), -rng.gen_range(1..=4)],
    ];
    let mut cones = Vec::new();
    for e in [0, 1] {
        for (a, b) in [(2, 3), (3, 4), (4, 2)] {
            cones.push(vec![e, a, b]);
        }
    }
    StackyFan::new(3, rays, cones)
}

/// A valid fan with `d ≤ 3`, `n ≤ 6` and entries bounded by 4 in absolute value.
pub fn random_fan<R: Rng>(rng: &mut R) -> StackyFan {
    loop {
        let mut fan = match rng.gen_range(0..4) {
            0 => StackyFan::new(1, vec![vec![rng.gen_range(1..=4)], vec![-rng.gen_range(1..=4)]], vec![vec![0], vec![1]]),
            1 => match complete_surface(rng) {
                Some(f) => f,
                None => continue,
            },
            2 => weighted_space(rng),
            _ => line_times_plane(rng),
        };
        if fan.d > 1 && fan.cones.len() > 3 && rng.gen_bool(0.3) {
            let drop = rng.gen_range(0..fan.cones.len());
            fan.cones.remove(drop);
        }
        if fan.validate().valid {
            return fan;
        }
    }
}

pub fn random_fans(seed: u64, count: usize) -> Vec<StackyFan> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_fan(&mut rng)).collect()
}

