use std::io::BufReader;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use aoi_relay::cmdp::policy_io::{read_policy, write_policy};
use aoi_relay::cmdp::{solve_mdp, Problem, SolverConfig};
use aoi_relay::config_file::{PolicyKind, RunConfig};
use aoi_relay::drl::checkpoint;
use aoi_relay::drl::network::QNetwork;
use aoi_relay::kernel::TransitionKernel;
use aoi_relay::{AoiBound, SystemConfig};

#[test]
fn policy_table_survives_write_and_read() {
    let cfg = SystemConfig::unweighted(vec![0.5, 0.6], 0.7, 0.8, 1.0, AoiBound::Finite(4)).unwrap();
    let kernel = TransitionKernel::build(&cfg).unwrap();
    let sol = solve_mdp(&Problem::new(&kernel, &cfg), 0.8, &SolverConfig::default()).unwrap();
    let mut buf = Vec::new();
    write_policy(&mut buf, &sol.policy, &cfg).unwrap();
    let back = read_policy(BufReader::new(&buf[..]), &cfg).unwrap();
    assert_eq!(back, sol.policy);

    let other = cfg.with_budget(1.1).unwrap();
    assert!(read_policy(BufReader::new(&buf[..]), &other).is_err());
}

#[test]
fn checkpoint_restores_identical_outputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let net = QNetwork::new(6, &[7, 5], 9, &mut rng);
    let mut buf = Vec::new();
    checkpoint::save(&mut buf, &net, "abc").unwrap();
    let (back, header) = checkpoint::load(BufReader::new(&buf[..]), Some("abc")).unwrap();
    assert_eq!(header.hidden, vec![7, 5]);
    let x = [0.1, -0.2, 0.3, 0.0, 1.0, -1.0];
    assert_eq!(back.forward(&x), net.forward(&x));
    assert!(checkpoint::load(BufReader::new(&buf[..]), Some("xyz")).is_err());
}

#[test]
fn shipped_configs_parse() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            RunConfig::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 2);
    let two = RunConfig::read(std::path::Path::new(&format!("{root}/two_source.cfg"))).unwrap();
    assert_eq!(two.system.bound(), AoiBound::Finite(6));
    assert_eq!(two.sim.policy, PolicyKind::Cmdp);
}
