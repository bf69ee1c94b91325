//! Network checkpoints: one JSON header line, then one line of
//! space-separated values per tensor (weights then bias, layer by layer).

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::network::{Dense, QNetwork};
use crate::error::DrlError;

const FORMAT: &str = "aoi-relay-qnetwork";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerShape {
    pub name: String,
    pub inputs: usize,
    pub outputs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub config_digest: String,
    pub inputs: usize,
    pub actions: usize,
    pub hidden: Vec<usize>,
    pub layers: Vec<LayerShape>,
}

pub fn save<W: Write>(mut out: W, net: &QNetwork, config_digest: &str) -> Result<(), DrlError> {
    let layers = net.layers();
    let header = CheckpointHeader {
        format: FORMAT.into(),
        version: 1,
        config_digest: config_digest.into(),
        inputs: net.inputs(),
        actions: net.actions(),
        hidden: net.hidden_sizes(),
        layers: layers
            .iter()
            .map(|(name, d)| LayerShape {
                name: name.clone(),
                inputs: d.inputs,
                outputs: d.outputs,
            })
            .collect(),
    };
    let json = serde_json::to_string(&header).map_err(|e| DrlError::Checkpoint(e.to_string()))?;
    writeln!(out, "{json}")?;
    for (_, d) in layers {
        for tensor in [&d.weights, &d.bias] {
            let line: Vec<String> = tensor.iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

/// Loads a checkpoint, returning the network and its header. When
/// `expected_digest` is given, a different recorded digest is an error.
pub fn load<R: BufRead>(input: R, expected_digest: Option<&str>) -> Result<(QNetwork, CheckpointHeader), DrlError> {
    let bad = |m: String| DrlError::Checkpoint(m);
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| bad("empty checkpoint".into()))??;
    let header: CheckpointHeader = serde_json::from_str(&first).map_err(|e| bad(format!("header: {e}")))?;
    if header.format != FORMAT {
        return Err(bad(format!("unknown format {:?}", header.format)));
    }
    if let Some(d) = expected_digest {
        if d != header.config_digest {
            return Err(bad(format!(
                "config digest mismatch: checkpoint {}, expected {d}",
                header.config_digest
            )));
        }
    }
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let mut net = QNetwork::new(header.inputs, &header.hidden, header.actions, &mut rng);
    let mut read_tensor = |len: usize, what: &str| -> Result<Vec<f64>, DrlError> {
        let line = lines.next().ok_or_else(|| bad(format!("missing tensor {what}")))??;
        let values: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
        let values = values.map_err(|e| bad(format!("{what}: {e}")))?;
        if values.len() != len {
            return Err(bad(format!("{what}: expected {len} values, found {}", values.len())));
        }
        Ok(values)
    };
    let names: Vec<String> = net.layers().into_iter().map(|(n, _)| n).collect();
    if names.len() != header.layers.len() {
        return Err(bad("layer count does not match hidden sizes".into()));
    }
    for ((layer, name), shape) in net.layers_mut().into_iter().zip(names).zip(&header.layers) {
        if shape.name != name || shape.inputs != layer.inputs || shape.outputs != layer.outputs {
            return Err(bad(format!("layer {name} does not match header entry {:?}", shape.name)));
        }
        let w = read_tensor(layer.weights.len(), &format!("{name}.weights"))?;
        let b = read_tensor(layer.bias.len(), &format!("{name}.bias"))?;
        *layer = Dense {
            inputs: layer.inputs,
            outputs: layer.outputs,
            weights: w,
            bias: b,
        };
    }
    Ok((net, header))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = QNetwork::new(7, &[5, 4], 9, &mut rng);
        let mut buf = Vec::new();
        save(&mut buf, &net, "abc").unwrap();
        let (back, header) = load(&buf[..], Some("abc")).unwrap();
        assert_eq!(back, net);
        assert_eq!(header.hidden, vec![5, 4]);
        assert!(load(&buf[..], Some("other")).is_err());
    }

    #[test]
    fn truncated_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = QNetwork::new(3, &[2], 4, &mut rng);
        let mut buf = Vec::new();
        save(&mut buf, &net, "d").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: Vec<&str> = text.lines().take(3).collect();
        assert!(load(cut.join("\n").as_bytes(), None).is_err());
    }
}
