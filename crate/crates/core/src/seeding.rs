//! Derived random streams and discrete sampling.
//!
//! Every stochastic routine in this crate draws from ChaCha8 keyed by a
//! single master seed. Independent substreams are selected through the
//! 64-bit ChaCha stream id, composed as
//!
//! `(domain << 48) | (term << 32) | index`
//!
//! where `domain` names the subsystem, `term` the quantity being
//! estimated, and `index` the trial/epoch. Trials therefore own disjoint
//! streams regardless of worker scheduling, which makes parallel runs
//! byte-reproducible.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DOMAIN_BOUND: u64 = 1;
pub const DOMAIN_DETECT: u64 = 2;
pub const DOMAIN_SIM: u64 = 3;
pub const DOMAIN_MINIMAX: u64 = 4;

/// Dedicated stream for `(master, domain, term, index)`.
pub fn stream(master: u64, domain: u64, term: u64, index: u64) -> ChaCha8Rng {
    debug_assert!(domain < (1 << 16));
    debug_assert!(term < (1 << 16));
    debug_assert!(index < (1 << 32));
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream((domain << 48) | (term << 32) | index);
    rng
}

/// Cumulative-inversion sampler over a finite pmf.
#[derive(Debug, Clone)]
pub struct CumulativeSampler {
    cum: Vec<f64>,
}

impl CumulativeSampler {
    pub fn new(pmf: &[f64]) -> Self {
        let mut acc = 0.0;
        let cum = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { cum }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.cum.last().copied().unwrap_or(1.0);
        match self
            .cum
            .binary_search_by(|c| c.partial_cmp(&u).unwrap())
        {
            Ok(i) => i + 1,
            Err(i) => i,
        }
        .min(self.cum.len() - 1)
    }
}
