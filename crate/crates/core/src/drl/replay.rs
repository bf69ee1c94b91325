use rand::seq::index;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

/// Fixed-capacity ring buffer of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        ReplayBuffer {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Overwrites the oldest transition once full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// `batch` distinct positions drawn uniformly.
    pub fn sample_indices<R: Rng + ?Sized>(&self, rng: &mut R, batch: usize) -> Vec<usize> {
        index::sample(rng, self.items.len(), batch.min(self.items.len())).into_vec()
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn t(k: usize) -> Transition {
        Transition {
            state: vec![k as f64],
            action: 0,
            reward: 0.0,
            next_state: vec![],
        }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut b = ReplayBuffer::new(3);
        for k in 0..5 {
            b.push(t(k));
        }
        assert_eq!(b.len(), 3);
        let mut seen: Vec<f64> = (0..3).map(|i| b.get(i).state[0]).collect();
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn batches_have_distinct_indices() {
        let mut b = ReplayBuffer::new(100);
        for k in 0..100 {
            b.push(t(k));
        }
        let mut rng = substream(5, Stream::Replay);
        let mut idx = b.sample_indices(&mut rng, 64);
        idx.sort_unstable();
        idx.dedup();
        assert_eq!(idx.len(), 64);
    }

    #[test]
    fn sampling_is_uniform_chi_square() {
        let n = 50;
        let mut b = ReplayBuffer::new(n);
        for k in 0..n {
            b.push(t(k));
        }
        let mut rng = substream(17, Stream::Replay);
        let mut counts = vec![0f64; n];
        let draws = 4000;
        for _ in 0..draws {
            for i in b.sample_indices(&mut rng, 10) {
                counts[i] += 1.0;
            }
        }
        let expected = (draws * 10) as f64 / n as f64;
        let stat: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        let p = 1.0 - ChiSquared::new((n - 1) as f64).unwrap().cdf(stat);
        assert!(p > 0.001, "chi-square {stat}, p {p}");
    }
}
