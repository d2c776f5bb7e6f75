use super::linear::{axpy, dot, log_sum_exp, relu_inplace, softmax};
use super::params::ModelParams;
use super::{ModelError, PredictionSet, Result, HEAD_WIDTH};
use crate::distill;
use crate::geo::LocalPoint;
use crate::scenario::{Scene, FUTURE_LEN};

/// Frame-to-frame displacements of a track, flattened `[dx0, dy0, dx1, ...]`.
pub fn agent_features(track: &[LocalPoint]) -> Vec<f64> {
    track
        .windows(2)
        .flat_map(|w| {
            let d = w[1] - w[0];
            [d.x, d.y]
        })
        .collect()
}

fn check_shape(block: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(ModelError::Shape { block, expected, got })
    }
}

fn check_finite(block: &'static str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ModelError::NonFinite { block })
    }
}

/// ReLU derivative, taken as 0 at the kink.
#[inline]
fn relu_grad(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Returns (hidden pre-activation, hidden, h_a).
fn agent_forward(features: &[f64], p: &ModelParams) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let pre = p.agent_hidden.forward(features);
    let mut hidden = pre.clone();
    relu_inplace(&mut hidden);
    let h_a = p.agent_out.forward(&hidden);
    (pre, hidden, h_a)
}

/// Agent embedding `h_a` from an observed track.
pub fn encode_agent(track: &[LocalPoint], p: &ModelParams) -> Result<Vec<f64>> {
    let features = agent_features(track);
    check_shape("agent_encoder", p.agent_inputs(), features.len())?;
    Ok(agent_forward(&features, p).2)
}

/// Keys and values of a map point set, each stored row-major `n × d`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MapKv {
    pub d: usize,
    pub keys: Vec<f64>,
    pub values: Vec<f64>,
}

impl MapKv {
    pub fn len(&self) -> usize {
        if self.d == 0 {
            0
        } else {
            self.keys.len() / self.d
        }
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn key(&self, i: usize) -> &[f64] {
        &self.keys[i * self.d..(i + 1) * self.d]
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }
}

/// Keys and values before the ReLU.
fn map_pre(features: &[f64], p: &ModelParams) -> MapKv {
    let d = p.d();
    let n = features.len() / 2;
    let mut kv = MapKv {
        d,
        keys: vec![0.0; n * d],
        values: vec![0.0; n * d],
    };
    let (wk, bk, wv, bv) = (
        &p.map_key.weight,
        &p.map_key.bias,
        &p.map_value.weight,
        &p.map_value.bias,
    );
    for ((f, k), v) in features
        .chunks_exact(2)
        .zip(kv.keys.chunks_exact_mut(d))
        .zip(kv.values.chunks_exact_mut(d))
    {
        let (x, y) = (f[0], f[1]);
        for j in 0..d {
            k[j] = bk[j] + wk[2 * j] * x + wk[2 * j + 1] * y;
            v[j] = bv[j] + wv[2 * j] * x + wv[2 * j + 1] * y;
        }
    }
    kv
}

fn activate(pre: &MapKv) -> MapKv {
    let mut kv = pre.clone();
    relu_inplace(&mut kv.keys);
    relu_inplace(&mut kv.values);
    kv
}

fn map_forward(features: &[f64], p: &ModelParams) -> MapKv {
    let mut kv = map_pre(features, p);
    relu_inplace(&mut kv.keys);
    relu_inplace(&mut kv.values);
    kv
}

fn relative_features(points: &[LocalPoint], origin: LocalPoint) -> Vec<f64> {
    points
        .iter()
        .flat_map(|&q| {
            let r = q - origin;
            [r.x, r.y]
        })
        .collect()
}

/// Keys and values for map points relative to `origin` (the target's last
/// observed position).
pub fn encode_map(points: &[LocalPoint], origin: LocalPoint, p: &ModelParams) -> MapKv {
    map_forward(&relative_features(points, origin), p)
}

fn attention(h_a: &[f64], kv: &MapKv) -> Vec<f64> {
    let scale = 1.0 / (h_a.len() as f64).sqrt();
    let scores: Vec<f64> = (0..kv.len()).map(|i| dot(h_a, kv.key(i)) * scale).collect();
    softmax(&scores)
}

fn fuse_with(h_a: &[f64], kv: &MapKv, weights: &[f64]) -> Vec<f64> {
    let mut xi = h_a.to_vec();
    for (i, &w) in weights.iter().enumerate() {
        axpy(w, kv.value(i), &mut xi);
    }
    xi
}

/// Single-query attention of the agent embedding over map keys, added
/// residually: `ξ = h_a + Σ softmax(h_a·key / √d)_i value_i`.
pub fn fuse(h_a: &[f64], kv: &MapKv) -> Vec<f64> {
    if kv.is_empty() {
        return h_a.to_vec();
    }
    fuse_with(h_a, kv, &attention(h_a, kv))
}

/// Cumulative sums of the head steps, flattened per mode, relative to the
/// last observed position.
fn cumulative(steps: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; steps.len()];
    for (mode_out, mode) in out.chunks_exact_mut(HEAD_WIDTH).zip(steps.chunks_exact(HEAD_WIDTH)) {
        let (mut x, mut y) = (0.0, 0.0);
        for (o, s) in mode_out.chunks_exact_mut(2).zip(mode.chunks_exact(2)) {
            x += s[0];
            y += s[1];
            o[0] = x;
            o[1] = y;
        }
    }
    out
}

pub fn decode(xi: &[f64], origin: LocalPoint, p: &ModelParams) -> PredictionSet {
    let rel = cumulative(&p.heads.forward(xi));
    let trajectories = rel
        .chunks_exact(HEAD_WIDTH)
        .map(|m| {
            m.chunks_exact(2)
                .map(|s| LocalPoint::new(origin.x + s[0], origin.y + s[1]))
                .collect()
        })
        .collect();
    PredictionSet {
        trajectories,
        confidences: softmax(&p.confidence.forward(xi)),
    }
}

fn ade(traj: &[LocalPoint], future: &[LocalPoint]) -> f64 {
    traj.iter().zip(future).map(|(a, b)| a.distance(b)).sum::<f64>() / future.len() as f64
}

/// Mode with the lowest average displacement error; ties go to the lowest
/// index.
pub fn winner_mode(pred: &PredictionSet, future: &[LocalPoint]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (m, t) in pred.trajectories.iter().enumerate() {
        let e = ade(t, future);
        if e < best.1 {
            best = (m, e);
        }
    }
    best.0
}

/// Winner-takes-all loss: mean squared point error of the best mode plus
/// the negative log confidence of that mode.
pub fn model_loss(pred: &PredictionSet, future: &[LocalPoint]) -> f64 {
    let m = winner_mode(pred, future);
    let reg = pred.trajectories[m]
        .iter()
        .zip(future)
        .map(|(a, b)| {
            let r = *a - *b;
            r.x * r.x + r.y * r.y
        })
        .sum::<f64>()
        / future.len() as f64;
    reg - pred.confidences[m].ln()
}

/// Everything the network needs from one scene, relative to the target's
/// last observed position.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    /// Map point features `[x0, y0, x1, y1, ...]`.
    pub map: Vec<f64>,
    /// Ground-truth future, flattened.
    pub future: Vec<f64>,
}

impl Sample {
    pub fn new(track: &[LocalPoint], points: &[LocalPoint], future: &[LocalPoint]) -> Result<Self> {
        let origin = *track.last().ok_or(ModelError::Shape {
            block: "agent_encoder",
            expected: 2,
            got: 0,
        })?;
        check_shape("future", FUTURE_LEN, future.len())?;
        Ok(Self {
            features: agent_features(track),
            map: relative_features(points, origin),
            future: relative_features(future, origin),
        })
    }

    pub fn from_scene(scene: &Scene, points: &[LocalPoint]) -> Result<Self> {
        Self::new(scene.target_track(), points, &scene.future)
    }

    pub fn map_len(&self) -> usize {
        self.map.len() / 2
    }
}

struct Forward {
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
    h_a: Vec<f64>,
    kv_pre: MapKv,
    kv: MapKv,
    attention: Vec<f64>,
    xi: Vec<f64>,
    /// Predicted positions relative to the origin, `k × 60`.
    traj: Vec<f64>,
    logits: Vec<f64>,
}

fn forward(p: &ModelParams, s: &Sample) -> Result<Forward> {
    check_shape("agent_encoder", p.agent_inputs(), s.features.len())?;
    let (hidden_pre, hidden, h_a) = agent_forward(&s.features, p);
    check_finite("agent_encoder", &h_a)?;
    let kv_pre = map_pre(&s.map, p);
    let kv = activate(&kv_pre);
    check_finite("map_encoder", &kv.keys)?;
    check_finite("map_encoder", &kv.values)?;
    let attention = if kv.is_empty() {
        Vec::new()
    } else {
        attention(&h_a, &kv)
    };
    let xi = fuse_with(&h_a, &kv, &attention);
    check_finite("fusion", &xi)?;
    let traj = cumulative(&p.heads.forward(&xi));
    let logits = p.confidence.forward(&xi);
    check_finite("decoder", &traj)?;
    check_finite("decoder", &logits)?;
    Ok(Forward {
        hidden_pre,
        hidden,
        h_a,
        kv_pre,
        kv,
        attention,
        xi,
        traj,
        logits,
    })
}

/// Smallest distance of any ReLU pre-activation from the kink at zero.
pub fn relu_margin(p: &ModelParams, s: &Sample) -> Result<f64> {
    let f = forward(p, s)?;
    Ok(f.hidden_pre
        .iter()
        .chain(&f.kv_pre.keys)
        .chain(&f.kv_pre.values)
        .fold(f64::INFINITY, |m, z| m.min(z.abs())))
}

/// Fusion embedding `ξ` of a sample.
pub fn embed_sample(p: &ModelParams, s: &Sample) -> Result<Vec<f64>> {
    Ok(forward(p, s)?.xi)
}

/// Weights of the task loss and the embedding distillation term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    pub regression: f64,
    pub classification: f64,
    pub distill: f64,
    pub total: f64,
    pub winner: usize,
}

impl LossParts {
    pub fn model(&self) -> f64 {
        self.regression + self.classification
    }
}

fn winner_flat(traj: &[f64], future: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (m, t) in traj.chunks_exact(HEAD_WIDTH).enumerate() {
        let e = t
            .chunks_exact(2)
            .zip(future.chunks_exact(2))
            .map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1]))
            .sum::<f64>()
            / FUTURE_LEN as f64;
        if e < best.1 {
            best = (m, e);
        }
    }
    best.0
}

fn losses(f: &Forward, s: &Sample, w: LossWeights, teacher: Option<&[f64]>) -> Result<LossParts> {
    let m = winner_flat(&f.traj, &s.future);
    let t = &f.traj[m * HEAD_WIDTH..(m + 1) * HEAD_WIDTH];
    let regression = t
        .chunks_exact(2)
        .zip(s.future.chunks_exact(2))
        .map(|(a, b)| {
            let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
            dx * dx + dy * dy
        })
        .sum::<f64>()
        / FUTURE_LEN as f64;
    let classification = log_sum_exp(&f.logits) - f.logits[m];
    let distill = match distill_target(w, teacher) {
        Some(t) => distill::distill_loss(t, &f.xi).map_err(|e| ModelError::Config(e.to_string()))?,
        None => 0.0,
    };
    let total = if distill_target(w, teacher).is_some() {
        distill::total_loss_weighted(regression + classification, distill, w.alpha, w.beta)
    } else {
        w.alpha * (regression + classification)
    };
    let parts = LossParts {
        regression,
        classification,
        distill,
        total,
        winner: m,
    };
    if !total.is_finite() {
        return Err(ModelError::NonFinite { block: "loss" });
    }
    Ok(parts)
}

/// The distillation term is dropped entirely when `β = 0`, so a run with
/// `β = 0` is bit-identical to one without a teacher.
fn distill_target(w: LossWeights, teacher: Option<&[f64]>) -> Option<&[f64]> {
    teacher.filter(|_| w.beta != 0.0)
}

/// Loss of one sample without gradients.
pub fn sample_loss(p: &ModelParams, s: &Sample, w: LossWeights, teacher: Option<&[f64]>) -> Result<LossParts> {
    losses(&forward(p, s)?, s, w, teacher)
}

/// Loss of one sample; its parameter gradient is added into `grad`.
pub fn loss_and_gradient(
    p: &ModelParams,
    s: &Sample,
    w: LossWeights,
    teacher: Option<&[f64]>,
    grad: &mut ModelParams,
) -> Result<LossParts> {
    let f = forward(p, s)?;
    let parts = losses(&f, s, w, teacher)?;
    let (d, k, m) = (p.d(), p.k(), parts.winner);

    // Decoder. Position t is the sum of steps 0..=t, so the gradient of
    // step τ is the sum of the position gradients at t ≥ τ.
    let mut dy = vec![0.0; k * HEAD_WIDTH];
    let t = &f.traj[m * HEAD_WIDTH..(m + 1) * HEAD_WIDTH];
    let c = 2.0 * w.alpha / FUTURE_LEN as f64;
    let (mut gx, mut gy) = (0.0, 0.0);
    for i in (0..FUTURE_LEN).rev() {
        gx += c * (t[2 * i] - s.future[2 * i]);
        gy += c * (t[2 * i + 1] - s.future[2 * i + 1]);
        dy[m * HEAD_WIDTH + 2 * i] = gx;
        dy[m * HEAD_WIDTH + 2 * i + 1] = gy;
    }
    let mut dlogits = softmax(&f.logits);
    dlogits[m] -= 1.0;
    for g in &mut dlogits {
        *g *= w.alpha;
    }
    let mut dxi = vec![0.0; d];
    p.heads.backward(&f.xi, &dy, &mut grad.heads, Some(&mut dxi));
    p.confidence
        .backward(&f.xi, &dlogits, &mut grad.confidence, Some(&mut dxi));
    if let Some(t) = distill_target(w, teacher) {
        let g = distill::distill_gradient(t, &f.xi).map_err(|e| ModelError::Config(e.to_string()))?;
        axpy(w.beta, &g, &mut dxi);
    }

    // Fusion and map encoder.
    let mut dh_a = dxi.clone();
    if !f.kv.is_empty() {
        let scale = 1.0 / (d as f64).sqrt();
        let da: Vec<f64> = (0..f.kv.len()).map(|i| dot(&dxi, f.kv.value(i))).collect();
        let mean: f64 = f.attention.iter().zip(&da).map(|(a, g)| a * g).sum();
        let (gk, gv) = (&mut grad.map_key, &mut grad.map_value);
        for (i, feat) in s.map.chunks_exact(2).enumerate() {
            let a = f.attention[i];
            let ds = a * (da[i] - mean) * scale;
            let (x, y) = (feat[0], feat[1]);
            let (key, key_pre, value_pre) = (f.kv.key(i), f.kv_pre.key(i), f.kv_pre.value(i));
            for j in 0..d {
                dh_a[j] += ds * key[j];
                let g = relu_grad(key_pre[j]) * ds * f.h_a[j];
                gk.weight[2 * j] += g * x;
                gk.weight[2 * j + 1] += g * y;
                gk.bias[j] += g;
                let g = relu_grad(value_pre[j]) * a * dxi[j];
                gv.weight[2 * j] += g * x;
                gv.weight[2 * j + 1] += g * y;
                gv.bias[j] += g;
            }
        }
    }

    // Agent encoder.
    let mut dhidden = vec![0.0; p.h()];
    p.agent_out
        .backward(&f.hidden, &dh_a, &mut grad.agent_out, Some(&mut dhidden));
    for (g, &z) in dhidden.iter_mut().zip(&f.hidden_pre) {
        *g *= relu_grad(z);
    }
    p.agent_hidden
        .backward(&s.features, &dhidden, &mut grad.agent_hidden, None);
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Linear, ModelConfig};

    fn lp(x: f64, y: f64) -> LocalPoint {
        LocalPoint::new(x, y)
    }

    fn toy_params(d: usize, k: usize, inputs: usize, h: usize) -> ModelParams {
        let cfg = ModelConfig {
            d,
            k,
            h,
            ..ModelConfig::default()
        };
        ModelParams::zeros_with_input(&cfg, inputs)
    }

    #[test]
    fn stationary_agent_with_zero_bias_encodes_to_zero() {
        let p = ModelParams::init(&ModelConfig::default(), 1);
        let mut p = p;
        p.agent_hidden.bias.fill(0.0);
        p.agent_out.bias.fill(0.0);
        let track = vec![lp(4.0, -2.0); 20];
        assert!(encode_agent(&track, &p).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn wrong_track_length_is_a_shape_error() {
        let p = ModelParams::init(&ModelConfig::default(), 1);
        let err = encode_agent(&[lp(0.0, 0.0); 5], &p).unwrap_err();
        assert!(matches!(
            err,
            ModelError::Shape {
                block: "agent_encoder",
                expected: 38,
                got: 8
            }
        ));
    }

    #[test]
    fn toy_agent_encoder_by_hand() {
        // Track (0,0) → (1,0) → (1,2): features [1, 0, 0, 2].
        let mut p = toy_params(2, 1, 4, 2);
        p.agent_hidden = Linear {
            inputs: 4,
            outputs: 2,
            weight: vec![1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0],
            bias: vec![0.0, 0.5],
        };
        p.agent_out = Linear {
            inputs: 2,
            outputs: 2,
            weight: vec![1.0, 2.0, 3.0, 4.0],
            bias: vec![0.1, 0.0],
        };
        // hidden = relu([1 + 2, -1 + 0.5]) = [3, 0]
        // h_a = [1*3 + 0.1, 3*3] = [3.1, 9]
        let h = encode_agent(&[lp(0.0, 0.0), lp(1.0, 0.0), lp(1.0, 2.0)], &p).unwrap();
        assert_eq!(h, vec![3.1, 9.0]);
    }

    #[test]
    fn toy_map_encoder_by_hand() {
        let mut p = toy_params(2, 1, 38, 4);
        p.map_key = Linear {
            inputs: 2,
            outputs: 2,
            weight: vec![1.0, 0.0, 0.0, -1.0],
            bias: vec![0.0, 1.0],
        };
        p.map_value = Linear {
            inputs: 2,
            outputs: 2,
            weight: vec![2.0, 1.0, 0.0, 0.0],
            bias: vec![-1.0, 3.0],
        };
        let origin = lp(10.0, 10.0);
        let kv = encode_map(&[lp(12.0, 10.0), lp(10.0, 13.0), lp(9.0, 9.0)], origin, &p);
        // features (2,0), (0,3), (-1,-1)
        assert_eq!(kv.keys, vec![2.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        assert_eq!(kv.values, vec![3.0, 3.0, 2.0, 3.0, 0.0, 3.0]);
        // A point at the origin only sees the biases.
        let kv = encode_map(&[origin], origin, &p);
        assert_eq!(kv.keys, vec![0.0, 1.0]);
        assert_eq!(kv.values, vec![0.0, 3.0]);
        assert!(encode_map(&[], origin, &p).is_empty());
    }

    #[test]
    fn fuse_degenerate_cases() {
        let h = vec![1.0, -2.0];
        assert_eq!(fuse(&h, &MapKv::default()), h);
        let one = MapKv {
            d: 2,
            keys: vec![5.0, 1.0],
            values: vec![0.5, 0.25],
        };
        assert_eq!(fuse(&h, &one), vec![1.5, -1.75]);
        let two = MapKv {
            d: 2,
            keys: vec![5.0, 1.0, 5.0, 1.0],
            values: vec![0.5, 0.25, 0.5, 0.25],
        };
        assert_eq!(fuse(&h, &two), vec![1.5, -1.75]);
    }

    #[test]
    fn zero_model_predicts_standing_still() {
        let p = toy_params(4, 3, 38, 4);
        let origin = lp(3.0, -1.0);
        let pred = decode(&[0.0; 4], origin, &p);
        assert_eq!(pred.k(), 3);
        for t in &pred.trajectories {
            assert_eq!(t.len(), 30);
            assert!(t.iter().all(|&q| q == origin));
        }
        assert!(pred.confidences.iter().all(|&c| (c - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn toy_decoder_by_hand() {
        // d = 2, k = 2. Head 0 steps (+xi0, 0) every step, head 1 steps
        // (0, -xi1); confidence logits (xi0, xi1).
        let mut p = toy_params(2, 2, 38, 2);
        for t in 0..30 {
            p.heads.weight[(2 * t) * 2] = 1.0;
            p.heads.weight[(60 + 2 * t + 1) * 2 + 1] = -1.0;
        }
        p.confidence.weight = vec![1.0, 0.0, 0.0, 1.0];
        let pred = decode(&[0.5, 2.0], lp(1.0, 1.0), &p);
        assert_eq!(pred.trajectories[0][0], lp(1.5, 1.0));
        assert_eq!(pred.trajectories[0][29], lp(16.0, 1.0));
        assert_eq!(pred.trajectories[1][9], lp(1.0, -19.0));
        let e = (1.5f64).exp();
        assert!((pred.confidences[1] - e / (1.0 + e)).abs() < 1e-15);
    }

    #[test]
    fn loss_closed_forms() {
        let gt: Vec<LocalPoint> = (0..30).map(|t| lp(t as f64, 0.0)).collect();
        let exact = PredictionSet {
            trajectories: vec![gt.clone()],
            confidences: vec![1.0],
        };
        assert_eq!(model_loss(&exact, &gt), 0.0);

        let off = |dx: f64| gt.iter().map(|&q| q + lp(dx, 0.0)).collect::<Vec<_>>();
        let pred = PredictionSet {
            trajectories: vec![off(1.0), off(2.0)],
            confidences: vec![0.5, 0.5],
        };
        assert_eq!(winner_mode(&pred, &gt), 0);
        assert!((model_loss(&pred, &gt) - (1.0 + 2f64.ln())).abs() < 1e-15);

        // Ties go to the lowest index.
        let tie = PredictionSet {
            trajectories: vec![off(-1.0), off(1.0)],
            confidences: vec![0.25, 0.75],
        };
        assert_eq!(winner_mode(&tie, &gt), 0);
    }

    #[test]
    fn sample_loss_matches_prediction_loss() {
        let cfg = ModelConfig::default().with_d(8);
        let p = ModelParams::init(&cfg, 9);
        let track: Vec<LocalPoint> = (0..20).map(|t| lp(100.0 + t as f64, 50.0 + 0.3 * t as f64)).collect();
        let future: Vec<LocalPoint> = (20..50).map(|t| lp(100.0 + t as f64, 50.0 + 0.2 * t as f64)).collect();
        let map = vec![lp(110.0, 55.0), lp(130.0, 40.0), lp(90.0, 60.0)];
        let s = Sample::new(&track, &map, &future).unwrap();
        let parts = sample_loss(&p, &s, LossWeights::default(), None).unwrap();
        let origin = track[19];
        let h = encode_agent(&track, &p).unwrap();
        let xi = fuse(&h, &encode_map(&map, origin, &p));
        let pred = decode(&xi, origin, &p);
        assert!((parts.total - model_loss(&pred, &future)).abs() < 1e-9);
        assert_eq!(parts.distill, 0.0);
    }
}
