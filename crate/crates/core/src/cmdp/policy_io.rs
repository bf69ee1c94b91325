//! Text persistence of policy tables.
//!
//! ```text
//! #config-digest=<hex>
//! #lambda=<value>
//! #bellman-residual=<value>
//! state_index,alpha,beta
//! 0,0,0
//! ...
//! ```

use std::io::{BufRead, Write};

use super::PolicyTable;
use crate::error::PolicyIoError;
use crate::model::{Action, AoiBound, SystemConfig};

pub fn write_policy<W: Write>(mut out: W, policy: &PolicyTable, cfg: &SystemConfig) -> std::io::Result<()> {
    writeln!(out, "#config-digest={}", cfg.digest())?;
    writeln!(out, "#lambda={:?}", policy.lambda)?;
    writeln!(out, "#bellman-residual={:?}", policy.bellman_residual)?;
    writeln!(out, "#sweeps={}", policy.sweeps)?;
    writeln!(out, "#reference-state={}", policy.reference_state)?;
    writeln!(out, "state_index,alpha,beta")?;
    for s in 0..policy.len() {
        let a = policy.action(s);
        writeln!(out, "{s},{},{}", a.alpha, a.beta)?;
    }
    Ok(())
}

/// Reads a policy written by [`write_policy`] for `cfg`. Files produced for a
/// different configuration are rejected by digest.
pub fn read_policy<R: BufRead>(input: R, cfg: &SystemConfig) -> Result<PolicyTable, PolicyIoError> {
    let bound = match cfg.bound() {
        AoiBound::Finite(n) => n,
        AoiBound::Unbounded => {
            return Err(PolicyIoError::Malformed {
                line: 0,
                reason: "policy tables need a finite aoi_bound".into(),
            })
        }
    };
    let num_sources = cfg.num_sources();
    let mut digest = None;
    let mut lambda = f64::NAN;
    let mut residual = f64::NAN;
    let mut sweeps = 0;
    let mut reference = 0;
    let mut actions = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        let malformed = |reason: String| PolicyIoError::Malformed { line: lineno, reason };
        let text = line.trim();
        if text.is_empty() || text == "state_index,alpha,beta" {
            continue;
        }
        if let Some(header) = text.strip_prefix('#') {
            let (key, value) = header
                .split_once('=')
                .ok_or_else(|| malformed(format!("header without `=`: {text}")))?;
            let num = |v: &str| v.parse::<f64>().map_err(|e| malformed(format!("{key}: {e}")));
            match key {
                "config-digest" => digest = Some(value.to_string()),
                "lambda" => lambda = num(value)?,
                "bellman-residual" => residual = num(value)?,
                "sweeps" => sweeps = num(value)? as usize,
                "reference-state" => reference = num(value)? as usize,
                _ => {}
            }
            continue;
        }
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != 3 {
            return Err(malformed(format!("expected 3 fields, found {}", fields.len())));
        }
        let parse = |f: &str| f.trim().parse::<usize>().map_err(|e| malformed(format!("{f:?}: {e}")));
        let (s, alpha, beta) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
        if s != actions.len() {
            return Err(malformed(format!("expected state {}, found {s}", actions.len())));
        }
        let action = Action::new(alpha, beta);
        if !action.is_valid(num_sources) {
            return Err(malformed(format!("action {action} out of range")));
        }
        actions.push(action.index(num_sources) as u16);
    }
    let expected = cfg.digest();
    match digest {
        None => {
            return Err(PolicyIoError::Malformed {
                line: 1,
                reason: "missing #config-digest header".into(),
            })
        }
        Some(found) if found != expected => return Err(PolicyIoError::DigestMismatch { expected, found }),
        Some(_) => {}
    }
    let states = crate::kernel::simplex_size(bound).pow(num_sources as u32);
    if actions.len() != states {
        return Err(PolicyIoError::Malformed {
            line: 0,
            reason: format!("{} states listed, expected {states}", actions.len()),
        });
    }
    let mut policy = PolicyTable::new(num_sources, bound, actions);
    policy.lambda = lambda;
    policy.bellman_residual = residual;
    policy.sweeps = sweeps;
    policy.reference_state = reference;
    Ok(policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::StateIndexer;

    fn cfg(budget: f64) -> SystemConfig {
        SystemConfig::unweighted(vec![0.5, 0.6], 0.7, 0.8, budget, AoiBound::Finite(2)).unwrap()
    }

    #[test]
    fn roundtrip() {
        let c = cfg(1.0);
        let idx = StateIndexer::for_config(&c).unwrap();
        let mut p = PolicyTable::constant(&idx, Action::new(2, 1));
        p.lambda = 1.5;
        p.bellman_residual = 3e-4;
        let mut buf = Vec::new();
        write_policy(&mut buf, &p, &c).unwrap();
        let back = read_policy(&buf[..], &c).unwrap();
        assert_eq!(back, PolicyTable { sweeps: 0, ..p });
    }

    #[test]
    fn digest_mismatch_rejected() {
        let c = cfg(1.0);
        let idx = StateIndexer::for_config(&c).unwrap();
        let p = PolicyTable::constant(&idx, Action::IDLE);
        let mut buf = Vec::new();
        write_policy(&mut buf, &p, &c).unwrap();
        let err = read_policy(&buf[..], &cfg(1.2)).unwrap_err();
        assert!(matches!(err, PolicyIoError::DigestMismatch { .. }));
    }

    #[test]
    fn truncated_file_rejected() {
        let c = cfg(1.0);
        let text = format!("#config-digest={}\nstate_index,alpha,beta\n0,0,0\n", c.digest());
        assert!(matches!(
            read_policy(text.as_bytes(), &c),
            Err(PolicyIoError::Malformed { .. })
        ));
    }
}
