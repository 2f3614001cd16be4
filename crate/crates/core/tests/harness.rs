use macac_core::harness::{
    aggregate_dirs, evaluate_config, load_trial, preset, run_trials, seed_dir, Method, Scale,
};

#[test]
fn every_trial_of_a_multi_seed_run_reloads() {
    let mut cfg = preset("warehouse", 0, Method::NaiveMacIacc, Scale::Desk).unwrap();
    cfg.episodes = 8;
    cfg.eval_period = 4;
    cfg.eval_episodes = 1;
    cfg.seeds = vec![1, 2];
    let dir = tempfile::tempdir().unwrap();
    let results = run_trials(&cfg, dir.path(), 2).unwrap();
    assert_eq!(results.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![1, 2]);
    for r in &results {
        assert_eq!(r.dir, seed_dir(dir.path(), r.seed));
        assert_eq!(r.evals.iter().map(|p| p.episode).collect::<Vec<_>>(), vec![0, 4, 8]);
        let (stored, learner) = load_trial(&r.dir).unwrap();
        assert_eq!(stored.seeds, vec![r.seed]);
        let again = evaluate_config(&stored, &learner, r.seed, 1).unwrap();
        assert_eq!(again.mean_return, r.final_return().unwrap());
    }
    let rows = aggregate_dirs(&[dir.path().to_path_buf()]).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|row| row.method == "naive-mac-iacc"));
}
