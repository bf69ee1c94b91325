use super::network::QNetwork;

/// RMSProp: `s ← ρ s + (1 − ρ) g²`, `θ ← θ − η g / (√s + ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
    mean_square: Vec<Vec<f64>>,
}

impl RmsProp {
    pub fn new(net: &QNetwork, learning_rate: f64, decay: f64, epsilon: f64) -> Self {
        let mut shapes = net.clone();
        RmsProp {
            learning_rate,
            decay,
            epsilon,
            mean_square: shapes.tensors_mut().into_iter().map(|t| vec![0.0; t.len()]).collect(),
        }
    }

    pub fn step(&mut self, net: &mut QNetwork, grad: &mut QNetwork) {
        let params = net.tensors_mut();
        let grads = grad.tensors_mut();
        for ((p, g), s) in params.into_iter().zip(grads).zip(&mut self.mean_square) {
            for ((pk, gk), sk) in p.iter_mut().zip(g.iter()).zip(s.iter_mut()) {
                *sk = self.decay * *sk + (1.0 - self.decay) * gk * gk;
                *pk -= self.learning_rate * gk / (sk.sqrt() + self.epsilon);
            }
        }
    }
}

/// Euclidean norm over every gradient buffer.
pub fn gradient_norm(grad: &mut QNetwork) -> f64 {
    grad.tensors_mut()
        .iter()
        .flat_map(|t| t.iter())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt()
}

/// Rescales the gradient to norm `max_norm` if it is larger; returns the
/// norm before clipping.
pub fn clip_gradient(grad: &mut QNetwork, max_norm: f64) -> f64 {
    let norm = gradient_norm(grad);
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for t in grad.tensors_mut() {
            for g in t.iter_mut() {
                *g *= scale;
            }
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn first_step_moves_by_learning_rate_over_sqrt_one_minus_decay() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = QNetwork::new(2, &[], 2, &mut rng);
        let before = net.clone();
        let mut grad = net.zeros_like();
        grad.value_out.bias[0] = 2.0;
        let mut opt = RmsProp::new(&net, 0.01, 0.9, 1e-12);
        opt.step(&mut net, &mut grad);
        let moved = before.value_out.bias[0] - net.value_out.bias[0];
        assert!((moved - 0.01 / 0.1f64.sqrt()).abs() < 1e-9);
        assert_eq!(net.advantage_out, before.advantage_out);
    }

    #[test]
    fn clipping_caps_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = QNetwork::new(2, &[3], 2, &mut rng);
        let mut grad = net.zeros_like();
        grad.value_out.bias[0] = 30.0;
        grad.advantage_out.bias[1] = 40.0;
        assert_eq!(clip_gradient(&mut grad, 10.0), 50.0);
        assert!((gradient_norm(&mut grad) - 10.0).abs() < 1e-12);
    }
}
