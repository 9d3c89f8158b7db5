use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Label, LabeledSentence, Result};

/// Train / validation / test fractions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SplitRatios {
    pub const DEFAULT: SplitRatios = SplitRatios {
        train: 0.70,
        validation: 0.15,
        test: 0.15,
    };

    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let parts = [train, validation, test];
        if parts.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(CorpusError::Manifest(format!("ratios must be non-negative: {parts:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CorpusError::Manifest(format!("ratios sum to {sum}, not 1")));
        }
        Ok(SplitRatios {
            train,
            validation,
            test,
        })
    }

    fn as_array(&self) -> [f64; 3] {
        [self.train, self.validation, self.test]
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl TryFrom<[f64; 3]> for SplitRatios {
    type Error = CorpusError;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        SplitRatios::new(v[0], v[1], v[2])
    }
}

impl From<SplitRatios> for [f64; 3] {
    fn from(r: SplitRatios) -> Self {
        r.as_array()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSplit {
    pub train: Vec<LabeledSentence>,
    pub validation: Vec<LabeledSentence>,
    pub test: Vec<LabeledSentence>,
    pub seed: u64,
    pub ratios: SplitRatios,
}

/// Keeps every causal sentence and `target` uniformly chosen non-causal ones,
/// preserving input order.
pub fn subsample_negatives(
    sents: &[LabeledSentence],
    target: usize,
    seed: u64,
) -> Result<Vec<LabeledSentence>> {
    let negatives: Vec<usize> = sents
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.label.is_causal())
        .map(|(i, _)| i)
        .collect();
    if target > negatives.len() {
        return Err(CorpusError::NotEnoughNegatives {
            target,
            available: negatives.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; sents.len()];
    for k in rand::seq::index::sample(&mut rng, negatives.len(), target) {
        keep[negatives[k]] = true;
    }
    Ok(sents
        .iter()
        .enumerate()
        .filter(|(i, s)| s.label.is_causal() || keep[*i])
        .map(|(_, s)| s.clone())
        .collect())
}

/// Per-class shuffle followed by per-class proportional allocation.
///
/// Each class is allocated by largest remainder: floors first, then the
/// leftover sentences go to the parts with the largest fractional share
/// (ties in train, validation, test order). Every part's class count is then
/// within one sentence of its exact share.
pub fn stratified_split(
    sents: &[LabeledSentence],
    ratios: SplitRatios,
    seed: u64,
) -> Result<CorpusSplit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // (part, original index)
    let mut assigned: Vec<(usize, usize)> = Vec::with_capacity(sents.len());
    for label in [Label::Causal, Label::NonCausal] {
        let mut members: Vec<usize> = sents
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == label)
            .map(|(i, _)| i)
            .collect();
        if members.len() < 3 {
            return Err(CorpusError::ClassTooSmall {
                label,
                count: members.len(),
            });
        }
        members.shuffle(&mut rng);
        let sizes = allocate(members.len(), ratios.as_array());
        let mut offset = 0;
        for (part, size) in sizes.into_iter().enumerate() {
            assigned.extend(members[offset..offset + size].iter().map(|&i| (part, i)));
            offset += size;
        }
    }
    assigned.sort_unstable_by_key(|&(_, i)| i);

    let mut parts: [Vec<LabeledSentence>; 3] = Default::default();
    for (part, i) in assigned {
        parts[part].push(sents[i].clone());
    }
    let [train, validation, test] = parts;
    Ok(CorpusSplit {
        train,
        validation,
        test,
        seed,
        ratios,
    })
}

fn allocate(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let exact = ratios.map(|r| r * n as f64);
    // guard against 0.7 * 100 = 69.999...
    let mut sizes = exact.map(|e| (e + 1e-9).floor() as usize);
    while sizes.iter().sum::<usize>() > n {
        let last = sizes.iter().rposition(|&s| s > 0).unwrap_or(0);
        sizes[last] -= 1;
    }
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - sizes[a] as f64;
        let fb = exact[b] - sizes[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &part in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[part] += 1;
        left -= 1;
    }
    sizes
}
