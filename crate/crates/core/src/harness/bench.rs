//! Seeded desk-scale benchmark networks and their synthetic inputs.
//!
//! No trained weights ship with the crate, so both networks are built around ten random
//! binary class prototypes: hidden units prefer one prototype, output units prefer the
//! hidden units of their class. Inputs drawn from [`class_inputs`] are noisy prototype
//! images, which gives the networks a clear decision to make.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::snn::{LayerSpec, SnnTopology, WeightMatrix};

pub const CLASSES: usize = 10;
pub const MLP_INPUTS: usize = 784;
pub const MLP_HIDDEN: usize = 128;
pub const CNN_SIDE: usize = 16;

const PROTOTYPE_DENSITY: f64 = 0.3;

fn prototypes(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<bool>> {
    (0..CLASSES).map(|_| (0..n).map(|_| rng.gen_bool(PROTOTYPE_DENSITY)).collect()).collect()
}

fn matrix(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> WeightMatrix {
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            // Stored as f32 on disk; keep the in-memory network identical to a reloaded one.
            data.push(f(i, j) as f32 as f64);
        }
    }
    WeightMatrix::new(rows, cols, data).expect("dimensions match")
}

/// 784-128-10 fully connected network.
pub fn desk_mlp(seed: u64) -> SnnTopology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let protos = prototypes(&mut rng, MLP_INPUTS);
    let w1 = matrix(MLP_INPUTS, MLP_HIDDEN, |i, h| {
        if protos[h % CLASSES][i] {
            rng.gen_range(0.6..1.0)
        } else {
            rng.gen_range(-0.25..0.05)
        }
    });
    let w2 = matrix(MLP_HIDDEN, CLASSES, |h, k| {
        if h % CLASSES == k {
            rng.gen_range(0.6..1.0)
        } else {
            rng.gen_range(-0.3..0.1)
        }
    });
    SnnTopology::new(
        vec![LayerSpec::dense(MLP_INPUTS, MLP_HIDDEN, 20.0), LayerSpec::dense(MLP_HIDDEN, CLASSES, 2.0)],
        vec![w1, w2],
    )
    .expect("desk MLP is consistent")
}

/// 16×16 input, two valid 3×3 convolutions (4 then 8 channels) and a 1152-10 classifier.
pub fn desk_cnn(seed: u64) -> SnnTopology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (c1, c2) = (4, 8);
    let k1 = matrix(9, c1, |_, _| rng.gen_range(-0.2..1.0));
    let k2 = matrix(9 * c1, c2, |_, _| rng.gen_range(-0.2..0.6));
    let flat = (CNN_SIDE - 4) * (CNN_SIDE - 4) * c2;
    let w3 = matrix(flat, CLASSES, |_, _| rng.gen_range(-0.3..0.5));
    SnnTopology::new(
        vec![
            LayerSpec::conv(CNN_SIDE, CNN_SIDE, 1, 3, c1, 1, 1.0),
            LayerSpec::conv(CNN_SIDE - 2, CNN_SIDE - 2, c1, 3, c2, 1, 4.0),
            LayerSpec::dense(flat, CLASSES, 20.0),
        ],
        vec![k1, k2, w3],
    )
    .expect("desk CNN is consistent")
}

/// Uniform input: every neuron fires with probability `rate`.
pub fn uniform_values(n: usize, rate: f64) -> Vec<f64> {
    vec![rate; n]
}

/// `count` noisy prototype images for the desk MLP (same seed as the network), with the
/// class of each.
pub fn class_inputs(network_seed: u64, input_seed: u64, count: usize) -> Vec<(usize, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(network_seed);
    let protos = prototypes(&mut rng, MLP_INPUTS);
    let mut rng = ChaCha8Rng::seed_from_u64(input_seed);
    (0..count)
        .map(|_| {
            let k = rng.gen_range(0..CLASSES);
            let values = protos[k]
                .iter()
                .map(|&on| if on { rng.gen_range(0.1..0.3) } else { rng.gen_range(0.0..0.1) })
                .collect();
            (k, values)
        })
        .collect()
}

/// Write a benchmark as `<dir>/<name>.json` plus `<dir>/<name>.bin`.
pub fn save(topology: &SnnTopology, dir: &std::path::Path, name: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    crate::snn::io::save_topology(topology, &dir.join(format!("{name}.json")), &dir.join(format!("{name}.bin")))
}
