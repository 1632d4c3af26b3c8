//! Defender protocols that restart synchronously under adversarial
//! collisions: [`Resync`] for non-distinguishable sensing and [`Resync2`]
//! for distinguishable sensing.

mod resync;
mod resync2;

pub use resync::{DefensePhase, EpochRecord, Resync, ResyncParams};
pub use resync2::{Resync2, Resync2Params};

use crate::env::Arm;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DefenseError {
    #[error("gap must lie in (0, 1], got {0}")]
    GapOutOfRange(f64),
    #[error("arm {0} has no reliable observations")]
    NoObservations(Arm),
    #[error("optimal set not built yet")]
    OptUnset,
    #[error("invalid protocol parameters: {0}")]
    BadParams(String),
}

/// Exploration length for the non-distinguishable protocol:
/// `8 K ceil(ln(2 K^2 T) / gap^2)`, natural logarithm. An explicit override
/// replaces the formula wholesale.
pub fn compute_t0(
    arms: usize,
    horizon: u64,
    gap: f64,
    override_t0: Option<u64>,
) -> Result<u64, DefenseError> {
    if let Some(t0) = override_t0 {
        return Ok(t0);
    }
    Ok(8 * arms as u64 * log_obs_ceil(arms, horizon, gap)?)
}

/// Exploration budget for the distinguishable-sensing protocol:
/// `16 K ceil(ln(2 K^2 T) / gap^2)`, so that `t0 / 2K` epochs of one
/// observation per arm reach the same per-arm count as [`compute_t0`].
pub fn compute_t0_dc(
    arms: usize,
    horizon: u64,
    gap: f64,
    override_t0: Option<u64>,
) -> Result<u64, DefenseError> {
    if let Some(t0) = override_t0 {
        return Ok(t0);
    }
    Ok(16 * arms as u64 * log_obs_ceil(arms, horizon, gap)?)
}

fn log_obs_ceil(arms: usize, horizon: u64, gap: f64) -> Result<u64, DefenseError> {
    if !(gap > 0.0 && gap <= 1.0) {
        return Err(DefenseError::GapOutOfRange(gap));
    }
    let k = arms as f64;
    let inner = (2.0 * k * k * horizon as f64).ln() / (gap * gap);
    Ok(inner.ceil() as u64)
}

/// The `n` empirically best arms by `sums[i] / obs[i]`, ties broken toward
/// the lower arm index, returned sorted ascending by arm index.
pub fn build_opt(obs: &[u64], sums: &[f64], n: usize) -> Result<Vec<Arm>, DefenseError> {
    if n == 0 || n > obs.len() {
        return Err(DefenseError::BadParams(format!(
            "need 1 <= n <= K, got n={n} K={}",
            obs.len()
        )));
    }
    if let Some(i) = obs.iter().position(|&o| o == 0) {
        return Err(DefenseError::NoObservations(i + 1));
    }
    let mut idx: Vec<Arm> = (1..=obs.len()).collect();
    idx.sort_by(|&a, &b| {
        let ma = sums[a - 1] / obs[a - 1] as f64;
        let mb = sums[b - 1] / obs[b - 1] as f64;
        mb.partial_cmp(&ma).unwrap().then(a.cmp(&b))
    });
    let mut top: Vec<Arm> = idx.into_iter().take(n).collect();
    top.sort_unstable();
    Ok(top)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t0_matches_direct_evaluation() {
        // 8 * 10 * ceil(ln(2e7) / 0.0025) = 80 * 6725.
        assert_eq!(compute_t0(10, 100_000, 0.05, None).unwrap(), 538_000);
        // Override wins.
        assert_eq!(compute_t0(10, 100_000, 0.05, Some(3000)).unwrap(), 3000);
        // 8 * ceil(ln 2) = 8.
        assert_eq!(compute_t0(1, 1, 1.0, None).unwrap(), 8);
    }

    #[test]
    fn t0_rejects_bad_gap() {
        assert!(compute_t0(10, 100, 0.0, None).is_err());
        assert!(compute_t0(10, 100, -0.3, None).is_err());
    }

    #[test]
    fn t0_dc_uses_doubled_constant() {
        assert_eq!(
            compute_t0_dc(10, 100_000, 0.05, None).unwrap(),
            2 * compute_t0(10, 100_000, 0.05, None).unwrap()
        );
    }

    // Brute-force oracle: enumerate all n-subsets and take the best total
    // mean, breaking ties toward lexicographically smaller index sets.
    fn best_subset(obs: &[u64], sums: &[f64], n: usize) -> Vec<Arm> {
        let k = obs.len();
        let mut best: Option<(Vec<Arm>, f64)> = None;
        for mask in 0u32..(1 << k) {
            if mask.count_ones() as usize != n {
                continue;
            }
            let subset: Vec<Arm> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect();
            let total: f64 = subset.iter().map(|&a| sums[a - 1] / obs[a - 1] as f64).sum();
            let better = match &best {
                None => true,
                Some((cur, cur_total)) => {
                    total > cur_total + 1e-12
                        || ((total - cur_total).abs() <= 1e-12 && subset < *cur)
                }
            };
            if better {
                best = Some((subset, total));
            }
        }
        best.unwrap().0
    }

    #[test]
    fn build_opt_against_brute_force() {
        let obs = vec![10, 10, 10];
        let sums = vec![1.0, 9.0, 8.0];
        assert_eq!(build_opt(&obs, &sums, 2).unwrap(), vec![2, 3]);
        assert_eq!(build_opt(&obs, &sums, 2).unwrap(), best_subset(&obs, &sums, 2));

        // All-equal means: lower indices win.
        let flat = vec![5.0, 5.0, 5.0, 5.0];
        let obs4 = vec![10, 10, 10, 10];
        assert_eq!(build_opt(&obs4, &flat, 2).unwrap(), vec![1, 2]);
        assert_eq!(build_opt(&obs4, &flat, 2).unwrap(), best_subset(&obs4, &flat, 2));
    }

    // Any ranking correct at granularity below the gap recovers the true
    // top-n index set.
    #[test]
    fn half_gap_correct_ranking_recovers_optimal_set() {
        let true_means = [0.9, 0.7, 0.5, 0.3];
        let gap = 0.2;
        let obs = vec![100; 4];
        // Perturb each empirical mean by less than gap/2 in the worst
        // direction; the selected set must still match.
        let sums: Vec<f64> = true_means
            .iter()
            .enumerate()
            .map(|(i, m)| (m + if i % 2 == 0 { -0.09 } else { 0.09 }) * 100.0)
            .collect();
        assert_eq!(build_opt(&obs, &sums, 2).unwrap(), vec![1, 2]);
        assert!(gap / 2.0 > 0.09);
    }

    #[test]
    fn build_opt_requires_observations_everywhere() {
        let err = build_opt(&[3, 0, 2], &[1.0, 0.0, 1.0], 2).unwrap_err();
        assert!(matches!(err, DefenseError::NoObservations(2)));
    }
}
