use crate::error::{Error, Result};

/// Bootstrapped targets over a sequence of squeezed rows.
///
/// Row `k` sums up to `n_step` consecutive rewards starting at `k`, each
/// discounted by `gamma` raised to the summed durations before it, then
/// bootstraps from `next_values[e]` (the target critic at the end of the last
/// summed row `e`) unless `e` is the final row of a terminated episode.
/// `n_step` 0 and 1 both give `r^c_k + gamma^tau_k V(h'_k)`.
pub fn td_targets(
    rewards: &[f64],
    taus: &[usize],
    next_values: &[f64],
    last_terminal: bool,
    gamma: f64,
    n_step: i64,
) -> Result<Vec<f64>> {
    if n_step < 0 {
        return Err(Error::Config(format!("n-step {n_step} is negative")));
    }
    let k_len = rewards.len();
    for (what, len) in [("durations", taus.len()), ("next values", next_values.len())] {
        if len != k_len {
            return Err(Error::LengthMismatch {
                what,
                left: k_len,
                right: len,
            });
        }
    }
    let n = (n_step as usize).max(1);
    let mut out = Vec::with_capacity(k_len);
    for k in 0..k_len {
        let end = (k + n).min(k_len);
        let mut acc = 0.0;
        let mut disc = 1.0;
        for l in k..end {
            acc += disc * rewards[l];
            disc *= gamma.powi(taus[l] as i32);
        }
        let e = end - 1;
        if !(e + 1 == k_len && last_terminal) {
            acc += disc * next_values[e];
        }
        out.push(acc);
    }
    Ok(out)
}
