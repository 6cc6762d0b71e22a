//! Planted-truth crowdsourcing data.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::inference::AnswerMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub tasks: usize,
    pub workers: usize,
    pub choices: u32,
    /// Fraction of workers who answer correctly with probability `1 - quality`.
    pub adversarial_frac: f64,
    /// Probability an honest worker answers correctly.
    pub quality: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig { tasks: 100, workers: 30, choices: 2, adversarial_frac: 0.3, quality: 0.8, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDataset {
    pub answers: AnswerMatrix,
    pub truth: Vec<u32>,
    pub adversarial: Vec<bool>,
}

/// Every worker answers every task. Wrong answers are uniform over the other choices.
pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticDataset> {
    if !(0.0..=1.0).contains(&cfg.adversarial_frac) || !(0.0..=1.0).contains(&cfg.quality) {
        return Err(Error::Config("adversarial fraction and quality must lie in [0, 1]".into()));
    }
    if cfg.choices < 2 || cfg.tasks == 0 || cfg.workers == 0 {
        return Err(Error::Config("need at least one task, one worker and two choices".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let truth: Vec<u32> = (0..cfg.tasks).map(|_| rng.gen_range(0..cfg.choices)).collect();
    let num_adv = (cfg.adversarial_frac * cfg.workers as f64).round() as usize;
    let mut adversarial: Vec<bool> = (0..cfg.workers).map(|j| j < num_adv).collect();
    adversarial.shuffle(&mut rng);
    let mut rows = vec![Vec::with_capacity(cfg.workers); cfg.tasks];
    for (i, row) in rows.iter_mut().enumerate() {
        for &adv in &adversarial {
            let p = if adv { 1.0 - cfg.quality } else { cfg.quality };
            let answer = if rng.gen_bool(p) {
                truth[i]
            } else {
                let k = rng.gen_range(0..cfg.choices - 1);
                if k >= truth[i] {
                    k + 1
                } else {
                    k
                }
            };
            row.push(answer);
        }
    }
    Ok(SyntheticDataset { answers: AnswerMatrix::dense(cfg.choices, &rows)?, truth, adversarial })
}
