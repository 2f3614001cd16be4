use macac_core::nn::gradcheck::{check_gradients, RandomLoss};
use macac_core::nn::{Architecture, HeadKind, LayerSizes, RecurrentNet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_sizes(input: usize) -> LayerSizes {
    LayerSizes {
        input,
        fc1: 8,
        fc2: 8,
        gru: 6,
        fc3: 8,
    }
}

fn random_case(rng: &mut ChaCha8Rng, head: HeadKind, len: usize) -> (RecurrentNet<f64>, Vec<Vec<f64>>, RandomLoss) {
    let input = rng.gen_range(2..6);
    let arch = Architecture::new(small_sizes(input), head.clone());
    let net = RecurrentNet::<f64>::new(arch, rng);
    let out_dim = head.output_dim();
    let inputs = (0..len)
        .map(|_| (0..input).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let loss = RandomLoss {
        head,
        weights: (0..len)
            .map(|_| (0..out_dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect(),
        masks: (0..len).map(|_| if rng.gen_bool(0.8) { 1.0 } else { 0.0 }).collect(),
    };
    (net, inputs, loss)
}

#[test]
fn bptt_matches_finite_differences_for_both_heads() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..10 {
        let head = if case % 2 == 0 {
            HeadKind::Value
        } else {
            HeadKind::Policy {
                groups: vec![3, 2],
            }
        };
        let len = 1 + case % 8;
        let (net, inputs, loss) = random_case(&mut rng, head, len);
        let report = check_gradients(&net, &inputs, &loss, 1e-3).unwrap();
        assert!(report.n_params <= 2000);
        assert!(
            report.max_rel_error <= 1e-4,
            "case {case}: {} at {}",
            report.max_rel_error,
            report.worst_param
        );
    }
}
