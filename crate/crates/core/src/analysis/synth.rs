//! Synthetic training trajectories.
//!
//! Each element starts uniformly in `±init_range` and then takes a Gaussian
//! random-walk step per training step, with a step scale that decays
//! geometrically: `σ_k = σ0 · γ^k`. Values are held in f32 and quantized to
//! the requested element type when a step is emitted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::element::{ElementType, TensorBuffer};
use crate::par::*;

const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    pub elements: usize,
    /// Number of steps the iterator yields, counting the initial state.
    pub steps: usize,
    pub element_type: ElementType,
    pub sigma0: f64,
    pub gamma: f64,
    pub init_range: f64,
    pub seed: u64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            elements: 1 << 20,
            steps: 50,
            element_type: ElementType::Bf16,
            sigma0: 0.005,
            gamma: 0.9,
            init_range: 0.005,
            seed: 0,
        }
    }
}

impl TrajectoryConfig {
    pub fn sigma(&self, k: usize) -> f64 {
        self.sigma0 * self.gamma.powi(k as i32)
    }

    /// First step whose walk scale has fallen to a tenth of `sigma0`.
    pub fn convergence_step(&self) -> usize {
        if self.gamma.is_nan() || self.gamma >= 1.0 {
            return usize::MAX;
        }
        (0..).find(|&k| self.sigma(k) <= self.sigma0 / 10.0).unwrap()
    }
}

/// Yields the shard at steps `0..steps`. Output depends only on the config,
/// not on the number of threads.
#[derive(Debug, Clone)]
pub struct Trajectory {
    config: TrajectoryConfig,
    state: Vec<f32>,
    next_step: usize,
}

impl Trajectory {
    pub fn new(config: TrajectoryConfig) -> Self {
        let mut state = vec![0f32; config.elements];
        let range = config.init_range;
        state
            .par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(chunk, values)| {
                let mut rng = chunk_rng(config.seed, 0, chunk);
                for v in values {
                    *v = rng.random_range(-range..=range) as f32;
                }
            });
        Self {
            config,
            state,
            next_step: 0,
        }
    }

    pub fn config(&self) -> &TrajectoryConfig {
        &self.config
    }

    /// Current full-precision values.
    pub fn values(&self) -> &[f32] {
        &self.state
    }

    fn advance(&mut self) {
        // Walk from step k to k + 1 uses sigma_k.
        let k = self.next_step - 1;
        let sigma = self.config.sigma(k);
        let seed = self.config.seed;
        self.state
            .par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(chunk, values)| {
                let mut rng = chunk_rng(seed, k as u64 + 1, chunk);
                for v in values {
                    let z: f64 = rng.sample(StandardNormal);
                    *v = (*v as f64 + sigma * z) as f32;
                }
            });
    }

    fn emit(&self) -> TensorBuffer {
        let ty = self.config.element_type;
        let width = ty.width();
        let mut bytes = vec![0u8; self.state.len() * width];
        bytes
            .par_chunks_mut(CHUNK * width)
            .zip(self.state.par_chunks(CHUNK))
            .for_each(|(out, values)| {
                let mut buf = Vec::with_capacity(out.len());
                for &v in values {
                    ty.encode_f32(v, &mut buf);
                }
                out.copy_from_slice(&buf);
            });
        TensorBuffer::new(bytes, ty).expect("bytes sized from the element count")
    }
}

fn chunk_rng(seed: u64, step: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((step << 32) | chunk as u64);
    rng
}

impl Iterator for Trajectory {
    type Item = TensorBuffer;

    fn next(&mut self) -> Option<TensorBuffer> {
        if self.next_step >= self.config.steps {
            return None;
        }
        if self.next_step > 0 {
            self.advance();
        }
        self.next_step += 1;
        Some(self.emit())
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.config.steps - self.next_step;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Trajectory {}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> TrajectoryConfig {
        TrajectoryConfig {
            elements: 100_000,
            steps: 5,
            seed,
            ..TrajectoryConfig::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a: Vec<_> = Trajectory::new(small(3)).collect();
        let b: Vec<_> = Trajectory::new(small(3)).collect();
        let c: Vec<_> = Trajectory::new(small(4)).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 5);
    }

    #[test]
    fn initial_values_stay_in_range() {
        let t = Trajectory::new(small(1));
        assert!(t.values().iter().all(|v| v.abs() <= 0.005));
        let mean = t.values().iter().map(|&v| v as f64).sum::<f64>() / t.values().len() as f64;
        assert!(mean.abs() < 1e-4, "{mean}");
    }

    #[test]
    fn walk_step_scale_matches_sigma() {
        let mut t = Trajectory::new(small(9));
        t.next();
        let before = t.values().to_vec();
        t.next();
        let n = before.len() as f64;
        let var = before
            .iter()
            .zip(t.values())
            .map(|(&a, &b)| (b as f64 - a as f64).powi(2))
            .sum::<f64>()
            / n;
        let sigma = 0.005;
        // Sample variance of n normals: relative standard error sqrt(2/n).
        assert!((var / (sigma * sigma) - 1.0).abs() < 5.0 * (2.0 / n).sqrt(), "{var}");
    }

    #[test]
    fn convergence_step_for_defaults() {
        // 0.9^k <= 0.1 first holds at k = 22.
        let cfg = TrajectoryConfig::default();
        assert_eq!(cfg.convergence_step(), 22);
        assert!(cfg.sigma(22) <= 0.0005 && cfg.sigma(21) > 0.0005);
    }

    #[test]
    fn element_type_controls_width() {
        let cfg = TrajectoryConfig {
            element_type: ElementType::Fp32,
            ..small(0)
        };
        let first = Trajectory::new(cfg).next().unwrap();
        assert_eq!(first.len(), 400_000);
    }
}
