//! Minimal recurrent network stack: the fixed MLP-GRU-MLP architecture,
//! backpropagation through time, Adam, target copies and checkpoints.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod net;

pub use adam::Adam;
pub use checkpoint::Checkpoint;
pub use net::{Architecture, Gradients, HeadKind, LayerSizes, RecurrentNet, SequenceOutput};

/// Frozen copy of `net` used as a bootstrap target. Target copies are plain
/// values: later updates to the source never reach them.
pub fn target_sync(net: &RecurrentNet<f32>) -> RecurrentNet<f32> {
    net.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn target_copy_is_a_snapshot() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = RecurrentNet::<f32>::new(
            Architecture::new(LayerSizes::decentralized(4), HeadKind::Value),
            &mut rng,
        );
        let target = target_sync(&net);
        assert_eq!(target, net);

        let mut opt = Adam::new(0.01, net.num_params());
        let grads = Gradients {
            values: vec![1.0; net.num_params()],
        };
        opt.step(&mut net, &grads).unwrap();
        assert_ne!(target, net);
        opt.step(&mut net, &grads).unwrap();
        let resynced = target_sync(&net);
        assert_eq!(resynced, net);
        assert_ne!(resynced, target);
    }
}
