use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Step;
use crate::rational::to_f64;

/// Independent random stream for `(seed, stream)`. Monte Carlo trial `k`
/// uses stream `k`, so results do not depend on scheduling order.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws one support state of `step.next`.
///
/// When the common denominator of the weights fits in 64 bits the draw is
/// exact: a uniform integer below the denominator is compared against the
/// cumulative numerators.
pub fn sample_step<S: Clone, R: Rng + ?Sized>(step: &Step<S>, rng: &mut R) -> S {
    let support = step.next.support();
    if support.len() == 1 {
        return support[0].0.clone();
    }
    let common = support
        .iter()
        .fold(BigInt::one(), |acc, (_, w)| acc.lcm(w.denom()));
    if let Some(den) = common.to_u64() {
        let draw = rng.random_range(0..den);
        let mut acc = 0u64;
        for (s, w) in support {
            let scaled = (w.numer() * (&common / w.denom()))
                .to_u64()
                .expect("scaled weight fits below the denominator");
            acc += scaled;
            if draw < acc {
                return s.clone();
            }
        }
    } else {
        let draw: f64 = rng.random();
        let mut acc = 0.0;
        for (s, w) in support {
            acc += to_f64(w);
            if draw < acc {
                return s.clone();
            }
        }
    }
    support[support.len() - 1].0.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pta::{ActionId, ActionKind, Distribution};
    use crate::rational::rat;

    fn flip() -> Step<u8> {
        Step::new(
            0,
            ActionId::new("flip", ActionKind::Internal),
            Distribution::fair(1, 2),
        )
    }

    #[test]
    fn point_distribution_is_certain() {
        let step = Step::deterministic(0u8, ActionId::new("a", ActionKind::Internal), 7);
        let mut rng = trial_rng(1, 0);
        assert!((0..100).all(|_| sample_step(&step, &mut rng) == 7));
    }

    #[test]
    fn same_seed_same_sequence() {
        let step = flip();
        let draw = |seed| {
            let mut rng = trial_rng(seed, 3);
            (0..64).map(|_| sample_step(&step, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }

    #[test]
    fn fair_flip_frequency() {
        let step = flip();
        let mut rng = trial_rng(2024, 0);
        let n = 100_000;
        let left = (0..n).filter(|_| sample_step(&step, &mut rng) == 1).count();
        let freq = left as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.01, "left frequency {freq}");
    }

    #[test]
    fn skewed_weights_are_respected() {
        let step = Step::new(
            0u8,
            ActionId::new("a", ActionKind::Internal),
            Distribution::new(vec![(1, rat(1, 3)), (2, rat(2, 3))]).unwrap(),
        );
        let mut rng = trial_rng(7, 1);
        let n = 60_000;
        let ones = (0..n).filter(|_| sample_step(&step, &mut rng) == 1).count();
        assert!((ones as f64 / n as f64 - 1.0 / 3.0).abs() < 0.01);
    }
}
