use macac_core::algorithms::{EnvDims, Learner};
use macac_core::buffers::{squeeze_agent, squeeze_iaicc, squeeze_joint, EpisodeLog};
use macac_core::env::{BoxPushing, ToyEnv, ToySpec, Warehouse};
use macac_core::harness::{preset, Method, Scale};
use macac_core::macdec::{run_episode, EpisodeOptions, MacroEnv};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn episode<E: MacroEnv>(env: &mut E, seed: u64, epsilon: f64) -> EpisodeLog {
    let cfg = preset("box-pushing", 6, Method::MacIac, Scale::Desk).unwrap().learner;
    let learner = Learner::new(cfg, EnvDims::of(env), seed).unwrap();
    let mut log = EpisodeLog::new(0);
    let opts = EpisodeOptions {
        epsilon,
        gamma: 0.95,
        seed,
    };
    run_episode(env, &mut learner.policy(), &opts, &mut log).unwrap();
    log
}

/// Structural invariants every squeezed view of an episode must satisfy.
fn check(log: &EpisodeLog, gamma: f64) {
    let len = log.len();
    assert_eq!(log.states.len(), len + 1);
    for (i, stream) in log.agents.iter().enumerate() {
        let rows = squeeze_agent(stream, gamma, log.end()).unwrap();
        assert_eq!(rows.iter().map(|r| r.tau).sum::<usize>(), len);
        let mut t = 0;
        for r in &rows {
            assert_eq!(r.t_start, t);
            assert!(r.tau >= 1);
            t += r.tau;
        }
        let last = rows.last().unwrap();
        assert_eq!(last.terminal, log.terminal);
        assert!(rows[..rows.len() - 1].iter().all(|r| !r.terminal && !r.truncated));

        let own: Vec<f64> = stream.iter().map(|r| r.r).collect();
        let seq = squeeze_iaicc(&log.joint, &own, i, gamma, log.end()).unwrap();
        assert_eq!(seq.actor, rows);
        assert_eq!(seq.masked_rows().count(), rows.len());
        assert!(seq.critic.last().unwrap().mask);
        for (k, row) in seq.masked_rows() {
            assert!(row.start_row <= k);
            assert_eq!(seq.critic[row.start_row].joint.t_start + row.tau, row.joint.t_start + row.joint.tau);
        }
    }
    let joint = squeeze_joint(&log.joint, gamma, log.end()).unwrap();
    assert_eq!(joint.iter().map(|r| r.tau).sum::<usize>(), len);
    assert!(joint[0].fresh.iter().all(|&f| f));
    for pair in joint.windows(2) {
        assert_eq!(pair[1].fresh, pair[0].ended);
        assert!(pair[0].ended.iter().any(|&e| e));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn box_pushing_episodes_squeeze_consistently(seed in any::<u64>(), eps in 0.0f64..=1.0) {
        check(&episode(&mut BoxPushing::new(8).unwrap(), seed, eps), 0.95);
    }

    #[test]
    fn warehouse_episodes_squeeze_consistently(seed in any::<u64>(), eps in 0.0f64..=1.0) {
        check(&episode(&mut Warehouse::new(), seed, eps), 0.9);
    }

    #[test]
    fn toy_episodes_squeeze_consistently(spec_seed in 0u64..1000, seed in any::<u64>()) {
        let spec = ToySpec::random(&mut ChaCha8Rng::seed_from_u64(spec_seed), 2, 3);
        check(&episode(&mut ToyEnv::new(spec).unwrap(), seed, 1.0), 1.0);
    }
}

#[test]
fn episode_logs_round_trip_through_jsonl() {
    let log = episode(&mut Warehouse::new(), 5, 1.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("episode.jsonl");
    log.write_jsonl(&path).unwrap();
    let back = EpisodeLog::read_jsonl(&path).unwrap();
    assert_eq!(back.joint, log.joint);
    assert_eq!(back.agents, log.agents);
}
