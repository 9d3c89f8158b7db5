//! Shared fixtures and oracles for the integration tests.

#![allow(dead_code)]

use std::path::Path;

use causaldet::corpus::{stratified_split, write_split, Label, LabeledSentence, Source, SplitRatios};
use causaldet::embeddings::{write_word2vec, EmbeddingMatrix, EmbeddingSequence, Word2VecFormat};
use causaldet::eval::PredictionSet;
use causaldet::neuralnet::{forward_eval, BiGruAttParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MARKERS: [&str; 4] = ["because", "caused", "triggers", "due"];
pub const FILLERS: [&str; 16] = [
    "the", "storm", "river", "prices", "market", "city", "rain", "water", "road", "people", "moved", "rose",
    "fell", "quickly", "north", "quiet",
];

/// `n` sentences, even indices causal. A causal sentence carries exactly one
/// marker word; non-causal ones are fillers only, so the classes separate.
pub fn toy_corpus(n: usize, seed: u64) -> Vec<LabeledSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let causal = i % 2 == 0;
            let len = rng.gen_range(4..=9);
            let mut words: Vec<&str> = (0..len).map(|_| FILLERS[rng.gen_range(0..FILLERS.len())]).collect();
            if causal {
                let at = rng.gen_range(0..=words.len());
                words.insert(at, MARKERS[rng.gen_range(0..MARKERS.len())]);
            }
            let text = format!("{} .", words.join(" "));
            LabeledSentence::new(format!("toy-{i:03}"), &text, Label::from_causal(causal), Source::Semeval).unwrap()
        })
        .collect()
}

/// Uniform(-1, 1) vectors for every toy word.
pub fn toy_vectors(dim: usize, seed: u64) -> EmbeddingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<(String, Vec<f32>)> = FILLERS
        .iter()
        .chain(MARKERS.iter())
        .map(|w| (w.to_string(), (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()))
        .collect();
    EmbeddingMatrix::from_rows(dim, rows).unwrap()
}

/// Writes a split of a toy corpus plus text-format vectors into `dir`
/// (`dir/split`, `dir/vectors.txt`).
pub fn toy_workspace(dir: &Path, n: usize, dim: usize) {
    let sents = toy_corpus(n, 7);
    let split = stratified_split(&sents, SplitRatios::DEFAULT, 13).unwrap();
    write_split(&split, dir.join("split"), Some("toy")).unwrap();
    write_word2vec(&toy_vectors(dim, 3), dir.join("vectors.txt"), Word2VecFormat::Text).unwrap();
}

pub fn random_sequence<R: Rng>(rng: &mut R, len: usize, dim: usize) -> EmbeddingSequence {
    EmbeddingSequence::new(dim, (0..len * dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect())
}

pub struct GradientErrors {
    /// max |a - n| / max(|a|, |n|, floor) for each requested floor
    pub relative: Vec<f64>,
    pub absolute: f64,
}

/// Compares the analytic gradient with central differences (step 1e-5)
/// over every parameter.
pub fn gradient_errors(
    p: &BiGruAttParams<f64>,
    seqs: &[EmbeddingSequence],
    targets: &[u8],
    floors: &[f64],
) -> GradientErrors {
    let refs: Vec<&EmbeddingSequence> = seqs.iter().collect();
    let analytic = forward_eval(p, &refs, targets).unwrap().backward(p).unwrap();
    let loss = |q: &BiGruAttParams<f64>| forward_eval(q, &refs, targets).unwrap().loss();
    let h = 1e-5;
    let mut probe = p.clone();
    let mut out = GradientErrors {
        relative: vec![0.0; floors.len()],
        absolute: 0.0,
    };
    for (b, grads) in analytic.blocks().iter().enumerate() {
        for (i, &a) in grads.iter().enumerate() {
            let orig = probe.blocks_mut()[b][i];
            probe.blocks_mut()[b][i] = orig + h;
            let up = loss(&probe);
            probe.blocks_mut()[b][i] = orig - h;
            let down = loss(&probe);
            probe.blocks_mut()[b][i] = orig;
            let n = (up - down) / (2.0 * h);
            let diff = (a - n).abs();
            out.absolute = out.absolute.max(diff);
            for (w, f) in out.relative.iter_mut().zip(floors) {
                *w = w.max(diff / a.abs().max(n.abs()).max(*f));
            }
        }
    }
    out
}

/// Relative error with a 1e-8 floor.
pub fn max_gradient_error(p: &BiGruAttParams<f64>, seqs: &[EmbeddingSequence], targets: &[u8]) -> f64 {
    gradient_errors(p, seqs, targets, &[1e-8]).relative[0]
}

/// Average precision by walking every cutoff of the ranking (descending
/// probability, ties by ascending id) and counting true positives afresh.
pub fn brute_force_ap(preds: &PredictionSet) -> f64 {
    let mut ranked: Vec<_> = preds.records().iter().collect();
    ranked.sort_by(|a, b| b.probability.total_cmp(&a.probability).then_with(|| a.id.cmp(&b.id)));
    let n_pos = ranked.iter().filter(|r| r.gold == 1).count();
    let mut sum = 0.0;
    for k in 1..=ranked.len() {
        if ranked[k - 1].gold == 1 {
            let tp = ranked[..k].iter().filter(|r| r.gold == 1).count();
            sum += tp as f64 / k as f64;
        }
    }
    100.0 * sum / n_pos as f64
}

/// F1 in percent at threshold 0.5; 0 when nothing is predicted or found.
pub fn f1_percent(probs: &[f64], gold: &[u8]) -> f64 {
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fneg = 0.0;
    for (&p, &g) in probs.iter().zip(gold) {
        match (p >= 0.5, g == 1) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fneg += 1.0,
            _ => {}
        }
    }
    if tp == 0.0 {
        return 0.0;
    }
    let (p, r) = (tp / (tp + fp), tp / (tp + fneg));
    100.0 * 2.0 * p * r / (p + r)
}

/// Exact randomization p-value over all 2^n swap patterns (without the
/// Monte Carlo add-one correction).
pub fn exhaustive_art(a: &[f64], b: &[f64], gold: &[u8]) -> f64 {
    let n = a.len();
    assert!(n <= 20);
    let observed = (f1_percent(a, gold) - f1_percent(b, gold)).abs();
    let mut hits = 0usize;
    for mask in 0u32..(1 << n) {
        let (mut xa, mut xb) = (a.to_vec(), b.to_vec());
        for k in 0..n {
            if mask >> k & 1 == 1 {
                std::mem::swap(&mut xa[k], &mut xb[k]);
            }
        }
        if (f1_percent(&xa, gold) - f1_percent(&xb, gold)).abs() >= observed - 1e-12 {
            hits += 1;
        }
    }
    hits as f64 / (1u64 << n) as f64
}
