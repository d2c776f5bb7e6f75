use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::linear::Linear;
use super::{ModelConfig, AGENT_FEATURES, HEAD_WIDTH};

/// Weights of the four blocks: agent encoder (two layers), map encoder
/// (key and value layers), trajectory heads and confidence head.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub agent_hidden: Linear,
    pub agent_out: Linear,
    pub map_key: Linear,
    pub map_value: Linear,
    /// All `k` trajectory heads stacked: row block `m` is head `m`.
    pub heads: Linear,
    pub confidence: Linear,
}

/// Typical magnitude of map features in meters, used to scale the
/// initial map-encoder weights.
const MAP_FEATURE_SCALE: f64 = 20.0;

impl ModelParams {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        Self::zeros_with_input(cfg, AGENT_FEATURES)
    }

    /// Zero parameters with a custom agent input width (tracks of
    /// `inputs / 2 + 1` points).
    pub fn zeros_with_input(cfg: &ModelConfig, inputs: usize) -> Self {
        Self {
            agent_hidden: Linear::zeros(inputs, cfg.h),
            agent_out: Linear::zeros(cfg.h, cfg.d),
            map_key: Linear::zeros(2, cfg.d),
            map_value: Linear::zeros(2, cfg.d),
            heads: Linear::zeros(cfg.d, cfg.k * HEAD_WIDTH),
            confidence: Linear::zeros(cfg.d, cfg.k),
        }
    }

    /// He-style Gaussian initialization, fully determined by `seed`.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let he = |n: usize| (2.0 / n as f64).sqrt();
        Self {
            agent_hidden: Linear::random(AGENT_FEATURES, cfg.h, he(AGENT_FEATURES), &mut rng),
            agent_out: Linear::random(cfg.h, cfg.d, he(cfg.h), &mut rng),
            map_key: Linear::random(2, cfg.d, 1.0 / MAP_FEATURE_SCALE, &mut rng),
            map_value: Linear::random(2, cfg.d, 1.0 / MAP_FEATURE_SCALE, &mut rng),
            heads: Linear::random(cfg.d, cfg.k * HEAD_WIDTH, 0.1 / (cfg.d as f64).sqrt(), &mut rng),
            confidence: Linear::random(cfg.d, cfg.k, 0.1 / (cfg.d as f64).sqrt(), &mut rng),
        }
    }

    pub fn d(&self) -> usize {
        self.agent_out.outputs
    }

    pub fn k(&self) -> usize {
        self.confidence.outputs
    }

    pub fn h(&self) -> usize {
        self.agent_hidden.outputs
    }

    pub fn agent_inputs(&self) -> usize {
        self.agent_hidden.inputs
    }

    pub fn layers(&self) -> [(&'static str, &Linear); 6] {
        [
            ("agent_hidden", &self.agent_hidden),
            ("agent_out", &self.agent_out),
            ("map_key", &self.map_key),
            ("map_value", &self.map_value),
            ("heads", &self.heads),
            ("confidence", &self.confidence),
        ]
    }

    pub fn layers_mut(&mut self) -> [(&'static str, &mut Linear); 6] {
        [
            ("agent_hidden", &mut self.agent_hidden),
            ("agent_out", &mut self.agent_out),
            ("map_key", &mut self.map_key),
            ("map_value", &mut self.map_value),
            ("heads", &mut self.heads),
            ("confidence", &mut self.confidence),
        ]
    }

    /// Named tensors with shapes, weights before biases per layer.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::with_capacity(12);
        for (name, l) in self.layers() {
            out.push((format!("{name}.weight"), vec![l.outputs, l.inputs], &l.weight[..]));
            out.push((format!("{name}.bias"), vec![l.outputs], &l.bias[..]));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(12);
        for (_, l) in self.layers_mut() {
            out.push(&mut l.weight[..]);
            out.push(&mut l.bias[..]);
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|(_, l)| l.param_count()).sum()
    }

    /// All parameters concatenated in tensor order.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        for (_, _, t) in self.tensors() {
            v.extend_from_slice(t);
        }
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length");
        let mut off = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
    }

    pub fn fill(&mut self, value: f64) {
        for t in self.tensors_mut() {
            t.fill(value);
        }
    }

    /// `self += other`, tensor by tensor.
    pub fn add_assign(&mut self, other: &ModelParams) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b.2) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            for x in t.iter_mut() {
                *x *= s;
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|(_, _, t)| t.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Name of the first tensor holding a non-finite value.
    pub fn first_non_finite(&self) -> Option<String> {
        self.tensors()
            .into_iter()
            .find(|(_, _, t)| t.iter().any(|x| !x.is_finite()))
            .map(|(n, _, _)| n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_follow_config() {
        let cfg = ModelConfig::default().with_d(12);
        let p = ModelParams::init(&cfg, 3);
        assert_eq!(p.d(), 12);
        assert_eq!(p.k(), 6);
        assert_eq!(p.heads.outputs, 6 * 60);
        assert_eq!(p.agent_inputs(), 38);
        let flat = p.to_flat();
        assert_eq!(flat.len(), p.param_count());
        let mut q = ModelParams::zeros(&cfg);
        q.set_flat(&flat);
        assert_eq!(p, q);
        assert_eq!(ModelParams::init(&cfg, 3), p);
        assert_ne!(ModelParams::init(&cfg, 4), p);
    }
}
