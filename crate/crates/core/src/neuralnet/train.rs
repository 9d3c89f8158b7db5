use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::Real;
use super::model::{forward_batch, forward_eval, Dropout};
use super::optim::{clip_gradients, AdamConfig, AdamState, LrSchedule};
use super::params::{BiGruAttParams, ResetPlacement};
use super::NnError;
use crate::corpus::LabeledSentence;
use crate::embeddings::{concat_contextual, embed, ContextualVectors, EmbeddingMatrix, EmbeddingSequence};
use crate::eval::{prf1, PredictionRecord, PredictionSet, DEFAULT_THRESHOLD};
use crate::text::tokenize;

/// Batch size used for forward passes that need no gradient.
const INFERENCE_BATCH: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub adam: AdamConfig,
    pub lr_decay: f64,
    pub lr_decay_every: usize,
    pub clip_norm: f64,
    pub dropout: f64,
    pub hidden: usize,
    pub depth: usize,
    pub reset: ResetPlacement,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 32,
            lr: 2e-3,
            adam: AdamConfig::default(),
            lr_decay: 0.75,
            lr_decay_every: 20,
            clip_norm: 0.25,
            dropout: 0.5,
            hidden: 128,
            depth: 1,
            reset: ResetPlacement::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Batch size tuned for a known dataset name.
    pub fn default_batch_size(dataset: &str) -> Option<usize> {
        match dataset {
            "semeval" => Some(128),
            "causaltb" => Some(32),
            "eventsl" => Some(16),
            "biocausal_small" => Some(32),
            "biocausal_large" => Some(256),
            _ => None,
        }
    }

    pub fn for_dataset(dataset: &str) -> Self {
        let mut c = TrainConfig::default();
        if let Some(b) = Self::default_batch_size(dataset) {
            c.batch_size = b;
        }
        c
    }

    pub fn schedule(&self) -> LrSchedule {
        LrSchedule {
            initial: self.lr,
            factor: self.lr_decay,
            every: self.lr_decay_every,
        }
    }

    /// Every violated constraint, one message each.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                out.push(msg.to_string());
            }
        };
        need(self.epochs > 0, "epochs must be positive");
        need(self.batch_size > 0, "batch_size must be positive");
        need(self.lr > 0.0 && self.lr.is_finite(), "lr must be positive");
        need((0.0..1.0).contains(&self.adam.beta1), "beta1 must be in [0, 1)");
        need((0.0..1.0).contains(&self.adam.beta2), "beta2 must be in [0, 1)");
        need(self.adam.eps > 0.0, "eps must be positive");
        need(self.lr_decay > 0.0 && self.lr_decay <= 1.0, "lr_decay must be in (0, 1]");
        need(self.lr_decay_every > 0, "lr_decay_every must be positive");
        need(self.clip_norm > 0.0, "clip_norm must be positive");
        need((0.0..1.0).contains(&self.dropout), "dropout must be in [0, 1)");
        need(self.hidden > 0, "hidden must be positive");
        need(self.depth == 1, "depth must be 1");
        out
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(NnError::Config(problems.join("; ")))
        }
    }
}

/// A sentence ready for the network.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub id: String,
    pub seq: EmbeddingSequence,
    pub label: u8,
}

/// Tokenizes and embeds sentences, appending contextual vectors when given.
pub fn prepare_examples(
    sents: &[LabeledSentence],
    matrix: &EmbeddingMatrix,
    contextual: Option<&ContextualVectors>,
) -> Result<Vec<Example>, NnError> {
    sents
        .iter()
        .map(|s| {
            let tokens = tokenize(&s.text).map_err(|e| NnError::Dimension(format!("{}: {e}", s.id)))?;
            let mut seq = embed(matrix, &tokens);
            if let Some(ctx) = contextual {
                let c = ctx
                    .get(&s.id)
                    .ok_or_else(|| crate::embeddings::EmbeddingError::MissingContext(s.id.clone()))?;
                seq = concat_contextual(&seq, c, &s.id)?;
            }
            Ok(Example {
                id: s.id.clone(),
                seq,
                label: s.label.as_target(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based
    pub epoch: usize,
    pub lr: f64,
    /// Mean over training sentences of the per-batch mean loss, weighted by
    /// batch size.
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_f1: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    /// Parameters at the epoch with the best validation F1 (first such epoch).
    pub params: BiGruAttParams<T>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_f1: f64,
}

/// Probabilities for `examples` with dropout disabled.
pub fn infer<T: Real>(params: &BiGruAttParams<T>, examples: &[Example]) -> Result<PredictionSet, NnError> {
    let mut records = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(INFERENCE_BATCH) {
        let inputs: Vec<&EmbeddingSequence> = chunk.iter().map(|e| &e.seq).collect();
        let trace = forward_eval(params, &inputs, &[])?;
        for (e, &p) in chunk.iter().zip(trace.probabilities()) {
            records.push(PredictionRecord {
                id: e.id.clone(),
                probability: p.as_f64(),
                gold: e.label,
            });
        }
    }
    PredictionSet::new(records).map_err(NnError::Dimension)
}

fn mean_loss<T: Real>(params: &BiGruAttParams<T>, examples: &[Example]) -> Result<f64, NnError> {
    let mut total = 0.0;
    for chunk in examples.chunks(INFERENCE_BATCH) {
        let inputs: Vec<&EmbeddingSequence> = chunk.iter().map(|e| &e.seq).collect();
        let targets: Vec<u8> = chunk.iter().map(|e| e.label).collect();
        total += forward_eval(params, &inputs, &targets)?.loss().as_f64() * chunk.len() as f64;
    }
    Ok(total / examples.len() as f64)
}

/// Trains a fresh model. Initialization draws from stream 0 of the seed,
/// shuffling and dropout masks from stream 1. `on_epoch` sees every record
/// as soon as it is produced.
pub fn train<T: Real>(
    train_set: &[Example],
    validation: &[Example],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome<T>, NnError> {
    config.validate()?;
    if train_set.is_empty() || validation.is_empty() {
        return Err(NnError::Config("training and validation sets must be non-empty".into()));
    }
    let d_in = train_set[0].seq.dim();
    if let Some(e) = train_set.iter().chain(validation).find(|e| e.seq.dim() != d_in) {
        return Err(NnError::Dimension(format!(
            "{} has input dim {}, expected {d_in}",
            e.id,
            e.seq.dim()
        )));
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = BiGruAttParams::<T>::init(d_in, config.hidden, config.reset, &mut init_rng);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut adam = AdamState::new(&params, config.adam);
    let schedule = config.schedule();

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut best: Option<(usize, f64, BiGruAttParams<T>)> = None;
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let lr = schedule.at(epoch);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            let inputs: Vec<&EmbeddingSequence> = batch.iter().map(|&i| &train_set[i].seq).collect();
            let targets: Vec<u8> = batch.iter().map(|&i| train_set[i].label).collect();
            let diverged = |e: NnError| NnError::Diverged {
                epoch: epoch + 1,
                batch: batch_idx + 1,
                message: e.to_string(),
            };
            let dropout = Dropout {
                rate: config.dropout,
                rng: &mut rng,
            };
            let trace = forward_batch(&params, &inputs, &targets, Some(dropout)).map_err(diverged)?;
            let mut grads = trace.backward(&params).map_err(diverged)?;
            clip_gradients(&mut grads, config.clip_norm);
            adam.step(&mut params, &grads, lr);
            if !params.is_finite() {
                return Err(diverged(NnError::NonFinite("parameters after update".into())));
            }
            loss_sum += trace.loss().as_f64() * batch.len() as f64;
        }

        let predictions = infer(&params, validation)?;
        let record = EpochRecord {
            epoch: epoch + 1,
            lr,
            train_loss: loss_sum / train_set.len() as f64,
            val_loss: mean_loss(&params, validation)?,
            val_f1: prf1(&predictions, DEFAULT_THRESHOLD).f1,
        };
        on_epoch(&record);
        if best.as_ref().is_none_or(|(_, f1, _)| record.val_f1 > *f1) {
            best = Some((record.epoch, record.val_f1, params.clone()));
        }
        history.push(record);
    }

    let (best_epoch, best_val_f1, params) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        params,
        history,
        best_epoch,
        best_val_f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, Source};
    use crate::embeddings::EmbeddingMatrix;

    #[test]
    fn defaults_and_validation() {
        let c = TrainConfig::for_dataset("semeval");
        assert_eq!(c.batch_size, 128);
        assert_eq!(TrainConfig::for_dataset("eventsl").batch_size, 16);
        assert_eq!(TrainConfig::for_dataset("biocausal_large").batch_size, 256);
        assert!(c.validate().is_ok());
        let bad = TrainConfig {
            batch_size: 0,
            dropout: 1.0,
            ..c
        };
        assert_eq!(bad.problems().len(), 2);
        assert!(matches!(bad.validate(), Err(NnError::Config(_))));
    }

    #[test]
    fn config_serializes_round_trip() {
        let c = TrainConfig {
            reset: ResetPlacement::BeforeMatmul,
            seed: 17,
            ..TrainConfig::default()
        };
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"before\""));
        assert_eq!(serde_json::from_str::<TrainConfig>(&s).unwrap(), c);
    }

    #[test]
    fn prepare_examples_embeds_and_checks_context() {
        let m = EmbeddingMatrix::from_rows(2, vec![("flu".to_string(), vec![1.0, 2.0])]).unwrap();
        let s = LabeledSentence::new("a", "Flu causes fever", Label::Causal, Source::Biocausal).unwrap();
        let ex = prepare_examples(std::slice::from_ref(&s), &m, None).unwrap();
        assert_eq!(ex[0].seq.len(), 3);
        assert_eq!(ex[0].seq.vector(0), &[1.0, 2.0]);
        assert_eq!(ex[0].seq.vector(1), &[0.0, 0.0]);
        assert_eq!(ex[0].label, 1);

        let mut ctx = ContextualVectors::new(3);
        assert!(matches!(
            prepare_examples(std::slice::from_ref(&s), &m, Some(&ctx)),
            Err(NnError::Embedding(_))
        ));
        ctx.insert("a", EmbeddingSequence::new(3, vec![0.5; 9])).unwrap();
        let ex = prepare_examples(&[s], &m, Some(&ctx)).unwrap();
        assert_eq!(ex[0].seq.dim(), 5);
        assert_eq!(ex[0].seq.vector(2), &[0.0, 0.0, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn infer_on_empty_input_is_empty() {
        let p = BiGruAttParams::<f32>::zeros(2, 2);
        assert!(infer(&p, &[]).unwrap().is_empty());
    }
}
