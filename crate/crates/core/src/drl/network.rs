//! Dense dueling Q-network on plain `Vec<f64>` buffers, with exact
//! backpropagation.

use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    /// Uniform in `±√(6 / fan_in)`, zero bias.
    pub fn new<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / inputs as f64).sqrt();
        Dense {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| rng.gen_range(-limit..limit)).collect(),
            bias: vec![0.0; outputs],
        }
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inputs);
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }

    /// Accumulates `dW += dz xᵀ`, `db += dz` into `grad` and returns `Wᵀ dz`.
    fn backward(&self, x: &[f64], dz: &[f64], grad: &mut Dense) -> Vec<f64> {
        let mut dx = vec![0.0; self.inputs];
        for (o, &d) in dz.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            grad.bias[o] += d;
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let grow = &mut grad.weights[o * self.inputs..(o + 1) * self.inputs];
            for k in 0..self.inputs {
                grow[k] += d * x[k];
                dx[k] += d * row[k];
            }
        }
        dx
    }
}

pub fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// `Q(a) = value + advantage(a) − mean(advantage)`.
pub fn dueling_aggregate(value: f64, advantages: &[f64]) -> Vec<f64> {
    let mean = advantages.iter().sum::<f64>() / advantages.len() as f64;
    advantages.iter().map(|a| value + a - mean).collect()
}

/// Shared ReLU trunk followed by separate value and advantage streams.
///
/// With hidden sizes `[h₁, …, h_k]` the trunk holds the layers up to
/// `h_{k−1}`; layer `h_k` is instantiated twice, once per stream, before the
/// linear value (1 output) and advantage (`|A|` outputs) heads.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub trunk: Vec<Dense>,
    pub value_hidden: Option<Dense>,
    pub advantage_hidden: Option<Dense>,
    pub value_out: Dense,
    pub advantage_out: Dense,
}

/// Intermediate activations of one forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Input followed by every trunk layer's post-ReLU output.
    trunk: Vec<Vec<f64>>,
    value_hidden: Option<Vec<f64>>,
    advantage_hidden: Option<Vec<f64>>,
    pub value: f64,
    pub advantages: Vec<f64>,
    pub q: Vec<f64>,
}

impl QNetwork {
    pub fn new<R: Rng + ?Sized>(inputs: usize, hidden: &[usize], actions: usize, rng: &mut R) -> Self {
        let mut trunk = Vec::new();
        let mut width = inputs;
        let split = hidden.len().saturating_sub(1);
        for &h in &hidden[..split] {
            trunk.push(Dense::new(width, h, rng));
            width = h;
        }
        let (value_hidden, advantage_hidden, head_in) = match hidden.last() {
            Some(&h) => (
                Some(Dense::new(width, h, rng)),
                Some(Dense::new(width, h, rng)),
                h,
            ),
            None => (None, None, width),
        };
        QNetwork {
            trunk,
            value_hidden,
            advantage_hidden,
            value_out: Dense::new(head_in, 1, rng),
            advantage_out: Dense::new(head_in, actions, rng),
        }
    }

    /// Same shapes, all parameters zero.
    pub fn zeros_like(&self) -> Self {
        let z = |d: &Dense| Dense::zeros(d.inputs, d.outputs);
        QNetwork {
            trunk: self.trunk.iter().map(z).collect(),
            value_hidden: self.value_hidden.as_ref().map(z),
            advantage_hidden: self.advantage_hidden.as_ref().map(z),
            value_out: z(&self.value_out),
            advantage_out: z(&self.advantage_out),
        }
    }

    pub fn inputs(&self) -> usize {
        self.trunk.first().map_or(self.value_out_input_layer().inputs, |d| d.inputs)
    }

    fn value_out_input_layer(&self) -> &Dense {
        self.value_hidden.as_ref().unwrap_or(&self.value_out)
    }

    pub fn actions(&self) -> usize {
        self.advantage_out.outputs
    }

    /// Hidden widths in construction order.
    pub fn hidden_sizes(&self) -> Vec<usize> {
        let mut h: Vec<usize> = self.trunk.iter().map(|d| d.outputs).collect();
        if let Some(v) = &self.value_hidden {
            h.push(v.outputs);
        }
        h
    }

    /// Layers in a fixed order with stable names.
    pub fn layers(&self) -> Vec<(String, &Dense)> {
        let mut out: Vec<(String, &Dense)> = self
            .trunk
            .iter()
            .enumerate()
            .map(|(k, d)| (format!("trunk.{k}"), d))
            .collect();
        if let Some(d) = &self.value_hidden {
            out.push(("value.hidden".into(), d));
        }
        if let Some(d) = &self.advantage_hidden {
            out.push(("advantage.hidden".into(), d));
        }
        out.push(("value.out".into(), &self.value_out));
        out.push(("advantage.out".into(), &self.advantage_out));
        out
    }

    pub fn layers_mut(&mut self) -> Vec<&mut Dense> {
        let mut out: Vec<&mut Dense> = self.trunk.iter_mut().collect();
        if let Some(d) = &mut self.value_hidden {
            out.push(d);
        }
        if let Some(d) = &mut self.advantage_hidden {
            out.push(d);
        }
        out.push(&mut self.value_out);
        out.push(&mut self.advantage_out);
        out
    }

    /// Every parameter buffer, weights then bias per layer.
    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.layers_mut()
            .into_iter()
            .flat_map(|d| [&mut d.weights, &mut d.bias])
            .collect()
    }

    /// All parameters concatenated in [`tensors_mut`](Self::tensors_mut) order.
    pub fn flat_parameters(&self) -> Vec<f64> {
        self.layers()
            .into_iter()
            .flat_map(|(_, d)| d.weights.iter().chain(&d.bias).copied().collect::<Vec<_>>())
            .collect()
    }

    pub fn set_flat_parameters(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        assert_eq!(offset, flat.len(), "parameter count mismatch");
    }

    pub fn num_parameters(&self) -> usize {
        self.layers().iter().map(|(_, d)| d.weights.len() + d.bias.len()).sum()
    }

    pub fn trace(&self, input: &[f64]) -> Trace {
        let mut trunk = vec![input.to_vec()];
        for layer in &self.trunk {
            let mut z = layer.forward(trunk.last().unwrap());
            relu_in_place(&mut z);
            trunk.push(z);
        }
        let features = trunk.last().unwrap();
        let stream = |layer: &Option<Dense>| {
            layer.as_ref().map(|d| {
                let mut z = d.forward(features);
                relu_in_place(&mut z);
                z
            })
        };
        let value_hidden = stream(&self.value_hidden);
        let advantage_hidden = stream(&self.advantage_hidden);
        let value = self.value_out.forward(value_hidden.as_deref().unwrap_or(features))[0];
        let advantages = self.advantage_out.forward(advantage_hidden.as_deref().unwrap_or(features));
        let q = dueling_aggregate(value, &advantages);
        Trace {
            trunk,
            value_hidden,
            advantage_hidden,
            value,
            advantages,
            q,
        }
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.trace(input).q
    }

    /// Accumulates `∂loss/∂θ` into `grad` given `dq = ∂loss/∂Q` for the pass
    /// recorded in `trace`.
    pub fn backward(&self, trace: &Trace, dq: &[f64], grad: &mut QNetwork) {
        let total: f64 = dq.iter().sum();
        let mean = total / dq.len() as f64;
        let d_adv: Vec<f64> = dq.iter().map(|d| d - mean).collect();
        let features = trace.trunk.last().unwrap();

        let value_in = trace.value_hidden.as_deref().unwrap_or(features);
        let d_value_in = self.value_out.backward(value_in, &[total], &mut grad.value_out);
        let adv_in = trace.advantage_hidden.as_deref().unwrap_or(features);
        let d_adv_in = self.advantage_out.backward(adv_in, &d_adv, &mut grad.advantage_out);

        let mut d_features = vec![0.0; features.len()];
        let streams = [
            (&self.value_hidden, &mut grad.value_hidden, &trace.value_hidden, d_value_in),
            (
                &self.advantage_hidden,
                &mut grad.advantage_hidden,
                &trace.advantage_hidden,
                d_adv_in,
            ),
        ];
        for (layer, g, act, upstream) in streams {
            match (layer, g, act) {
                (Some(layer), Some(g), Some(act)) => {
                    let dz: Vec<f64> = upstream.iter().zip(act).map(|(d, a)| if *a > 0.0 { *d } else { 0.0 }).collect();
                    let dx = layer.backward(features, &dz, g);
                    for (f, d) in d_features.iter_mut().zip(dx) {
                        *f += d;
                    }
                }
                _ => {
                    for (f, d) in d_features.iter_mut().zip(upstream) {
                        *f += d;
                    }
                }
            }
        }

        let mut upstream = d_features;
        for k in (0..self.trunk.len()).rev() {
            let act = &trace.trunk[k + 1];
            let dz: Vec<f64> = upstream.iter().zip(act).map(|(d, a)| if *a > 0.0 { *d } else { 0.0 }).collect();
            upstream = self.trunk[k].backward(&trace.trunk[k], &dz, &mut grad.trunk[k]);
        }
    }

    /// Copies every parameter from `other` (shapes must match).
    pub fn copy_from(&mut self, other: &QNetwork) {
        self.clone_from(other);
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_layer_with_relu() {
        let d = Dense {
            inputs: 2,
            outputs: 2,
            weights: vec![1.0, 0.0, 0.0, 1.0],
            bias: vec![0.0, 0.0],
        };
        let mut out = d.forward(&[-1.0, 2.0]);
        relu_in_place(&mut out);
        assert_eq!(out, vec![0.0, 2.0]);
    }

    #[test]
    fn dueling_examples() {
        assert_eq!(dueling_aggregate(1.0, &[1.0, 3.0]), vec![0.0, 2.0]);
        assert_eq!(dueling_aggregate(1.0, &[6.0, 8.0]), vec![0.0, 2.0]);
    }

    #[test]
    fn layout_follows_hidden_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = QNetwork::new(7, &[16, 8], 9, &mut rng);
        assert_eq!(net.trunk.len(), 1);
        assert_eq!(net.value_hidden.as_ref().unwrap().outputs, 8);
        assert_eq!(net.inputs(), 7);
        assert_eq!(net.actions(), 9);
        assert_eq!(net.hidden_sizes(), vec![16, 8]);
        assert_eq!(net.forward(&[0.1; 7]).len(), 9);
        let flat = QNetwork::new(3, &[], 4, &mut rng);
        assert_eq!(flat.inputs(), 3);
        assert!(flat.hidden_sizes().is_empty());
    }

    #[test]
    fn argmax_lowest_on_ties() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0]), 0);
    }
}
