//! L2-regularized logistic regression over TF-IDF word n-gram features.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::LabeledSentence;
use crate::text::{fit_tfidf, tokenize, SparseVector, TextError, TfidfModel};

pub const DEFAULT_L2: f64 = 1.0;
pub const DEFAULT_MAX_ITERS: usize = 5_000;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const BUNDLE_VERSION: u32 = 1;

/// Sufficient-decrease constant of the backtracking line search.
const ARMIJO: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("training data is empty")]
    Empty,
    #[error("feature index {found} outside a model with {expected} weights")]
    Dimension { expected: usize, found: usize },
    #[error("invalid regularization strength {0}")]
    Regularization(f64),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2: f64,
}

/// Outcome of the solver besides the model itself.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    pub iterations: usize,
    pub objective: f64,
    pub gradient_norm: f64,
    pub converged: bool,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

struct Problem<'a> {
    data: &'a [(SparseVector, u8)],
    dim: usize,
    l2: f64,
}

impl Problem<'_> {
    fn margins(&self, w: &[f64], b: f64) -> Vec<f64> {
        self.data.iter().map(|(x, _)| x.dot(w) + b).collect()
    }

    /// Mean cross-entropy plus `(λ/2)‖w‖²`.
    fn objective_from(&self, w: &[f64], margins: &[f64]) -> f64 {
        let n = self.data.len() as f64;
        let ce: f64 = margins
            .iter()
            .zip(self.data)
            .map(|(&z, (_, y))| softplus(z) - f64::from(*y) * z)
            .sum();
        ce / n + 0.5 * self.l2 * w.iter().map(|v| v * v).sum::<f64>()
    }

    fn objective(&self, w: &[f64], b: f64) -> f64 {
        self.objective_from(w, &self.margins(w, b))
    }

    fn gradient_from(&self, w: &[f64], margins: &[f64]) -> (Vec<f64>, f64) {
        let n = self.data.len() as f64;
        let mut gw: Vec<f64> = w.iter().map(|v| self.l2 * v).collect();
        let mut gb = 0.0;
        for (&z, (x, y)) in margins.iter().zip(self.data) {
            let r = (sigmoid(z) - f64::from(*y)) / n;
            gb += r;
            for (&i, &v) in x.indices.iter().zip(&x.values) {
                gw[i] += r * v;
            }
        }
        (gw, gb)
    }
}

fn norm(gw: &[f64], gb: f64) -> f64 {
    (gw.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt()
}

/// Gradient of the training objective at `(w, b)`.
pub fn lr_gradient(data: &[(SparseVector, u8)], l2: f64, w: &[f64], b: f64) -> (Vec<f64>, f64) {
    let p = Problem { data, dim: w.len(), l2 };
    p.gradient_from(w, &p.margins(w, b))
}

/// Training objective at `(w, b)`.
pub fn lr_objective(data: &[(SparseVector, u8)], l2: f64, w: &[f64], b: f64) -> f64 {
    Problem { data, dim: w.len(), l2 }.objective(w, b)
}

/// Full-batch gradient descent from zero with a backtracking line search that
/// starts at the inverse of a curvature bound. Stops once the gradient norm
/// falls below `tol` or after `max_iters` iterations.
pub fn fit_lr(
    data: &[(SparseVector, u8)],
    dim: usize,
    l2: f64,
    max_iters: usize,
    tol: f64,
) -> Result<(LinearModel, FitStats), BaselineError> {
    if data.is_empty() {
        return Err(BaselineError::Empty);
    }
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(BaselineError::Regularization(l2));
    }
    let positives = data.iter().filter(|(_, y)| *y == 1).count();
    if positives == 0 || positives == data.len() {
        return Err(BaselineError::SingleClass);
    }
    for (x, _) in data {
        if let Some(i) = x.max_index().filter(|&i| i >= dim) {
            return Err(BaselineError::Dimension { expected: dim, found: i });
        }
    }
    let problem = Problem { data, dim, l2 };
    // Curvature bound: λ + (‖x‖² + 1)/4 over the augmented input [x, 1].
    let max_sq = data.iter().map(|(x, _)| x.norm().powi(2)).fold(0.0, f64::max);
    let initial_step = 1.0 / (l2 + (max_sq + 1.0) / 4.0);

    let mut w = vec![0.0; problem.dim];
    let mut b = 0.0;
    let mut margins = problem.margins(&w, b);
    let mut f = problem.objective_from(&w, &margins);
    let mut iterations = 0;
    let (mut gw, mut gb) = problem.gradient_from(&w, &margins);
    let mut gnorm = norm(&gw, gb);

    while gnorm >= tol && iterations < max_iters {
        iterations += 1;
        let g2 = gnorm * gnorm;
        // rounding slack: near the optimum the decrease falls below f's ulp
        let slack = 4.0 * f64::EPSILON * f.abs();
        let mut step = initial_step;
        loop {
            let w_new: Vec<f64> = w.iter().zip(&gw).map(|(v, g)| v - step * g).collect();
            let b_new = b - step * gb;
            let m_new = problem.margins(&w_new, b_new);
            let f_new = problem.objective_from(&w_new, &m_new);
            if f_new <= f - ARMIJO * step * g2 + slack {
                w = w_new;
                b = b_new;
                margins = m_new;
                f = f_new;
                break;
            }
            step *= 0.5;
            if step < initial_step * 1e-12 {
                return Ok(finish(w, b, l2, iterations, f, gnorm, false));
            }
        }
        (gw, gb) = problem.gradient_from(&w, &margins);
        gnorm = norm(&gw, gb);
    }
    let converged = gnorm < tol;
    Ok(finish(w, b, l2, iterations, f, gnorm, converged))
}

fn finish(w: Vec<f64>, b: f64, l2: f64, iterations: usize, f: f64, gnorm: f64, converged: bool) -> (LinearModel, FitStats) {
    (
        LinearModel { weights: w, bias: b, l2 },
        FitStats {
            iterations,
            objective: f,
            gradient_norm: gnorm,
            converged,
        },
    )
}

/// `σ(w·x + b)`.
pub fn predict_lr(model: &LinearModel, x: &SparseVector) -> Result<f64, BaselineError> {
    if let Some(i) = x.max_index().filter(|&i| i >= model.weights.len()) {
        return Err(BaselineError::Dimension {
            expected: model.weights.len(),
            found: i,
        });
    }
    Ok(sigmoid(x.dot(&model.weights) + model.bias))
}

/// Vectorizer and classifier stored together.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrBundle {
    pub version: u32,
    pub tfidf: TfidfModel,
    pub model: LinearModel,
    pub stats: FitStats,
}

impl LrBundle {
    /// Fits the vectorizer and the classifier on `train`.
    pub fn fit(train: &[LabeledSentence], l2: f64, max_iters: usize, tol: f64) -> Result<Self, BaselineError> {
        let tokens = train.iter().map(|s| tokenize(&s.text)).collect::<Result<Vec<_>, _>>()?;
        let tfidf = fit_tfidf(&tokens)?;
        let data: Vec<(SparseVector, u8)> = tokens
            .iter()
            .zip(train)
            .map(|(t, s)| (tfidf.transform(t), s.label.as_target()))
            .collect();
        let (model, stats) = fit_lr(&data, tfidf.vocab_size(), l2, max_iters, tol)?;
        Ok(LrBundle {
            version: BUNDLE_VERSION,
            tfidf,
            model,
            stats,
        })
    }

    pub fn predict(&self, text: &str) -> Result<f64, BaselineError> {
        predict_lr(&self.model, &self.tfidf.transform(&tokenize(text)?))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), BaselineError> {
        let path = path.as_ref();
        let bytes = serde_json::to_vec(self).map_err(|e| BaselineError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut tmp_name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        tmp_name.push(".tmp");
        let tmp = path.with_file_name(tmp_name);
        let io = |e| BaselineError::Io {
            path: path.to_path_buf(),
            source: e,
        };
        std::fs::write(&tmp, bytes).map_err(io)?;
        std::fs::rename(&tmp, path).map_err(io)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BaselineError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| BaselineError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let format = |message: String| BaselineError::Format {
            path: path.to_path_buf(),
            message,
        };
        let bundle: LrBundle = serde_json::from_slice(&bytes).map_err(|e| format(e.to_string()))?;
        if bundle.version != BUNDLE_VERSION {
            return Err(format(format!("unsupported bundle version {}", bundle.version)));
        }
        if bundle.model.weights.len() != bundle.tfidf.vocab_size() {
            return Err(format(format!(
                "{} weights for a vocabulary of {}",
                bundle.model.weights.len(),
                bundle.tfidf.vocab_size()
            )));
        }
        Ok(bundle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, Source};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sv(pairs: &[(usize, f64)]) -> SparseVector {
        SparseVector {
            indices: pairs.iter().map(|p| p.0).collect(),
            values: pairs.iter().map(|p| p.1).collect(),
        }
    }

    fn random_problem(seed: u64, n: usize, dim: usize) -> Vec<(SparseVector, u8)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut data: Vec<(SparseVector, u8)> = (0..n)
            .map(|_| {
                let mut pairs = Vec::new();
                for i in 0..dim {
                    if rng.gen_bool(0.6) {
                        pairs.push((i, rng.gen_range(-1.0..1.0)));
                    }
                }
                let x = sv(&pairs);
                let y = u8::from(rng.gen::<f64>() < 1.0 / (1.0 + (-x.dot(&truth)).exp()));
                (x, y)
            })
            .collect();
        data[0].1 = 0;
        data[1].1 = 1;
        data
    }

    #[test]
    fn heavy_regularization_predicts_the_prior() {
        let data = vec![(sv(&[(0, 1.0)]), 1), (sv(&[(1, 1.0)]), 0), (sv(&[(0, 0.5), (2, 0.5)]), 0), (sv(&[(2, 1.0)]), 0)];
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for l2 in [10.0, 100.0, 1000.0] {
            let (m, stats) = fit_lr(&data, 3, l2, 200_000, 1e-7).unwrap();
            assert!(stats.converged, "{l2}: {stats:?}");
            let w_max = m.weights.iter().fold(0.0f64, |a, w| a.max(w.abs()));
            let gap = (predict_lr(&m, &sv(&[(0, 1.0)])).unwrap() - 0.25).abs();
            assert!(w_max < prev.0 && gap < prev.1);
            prev = (w_max, gap);
        }
        assert!(prev.0 < 1e-3 && prev.1 < 1e-3, "{prev:?}");
    }

    #[test]
    fn separable_pair_is_fit() {
        let data = vec![(sv(&[(0, 1.0)]), 1), (sv(&[(1, 1.0)]), 0)];
        let (m, _) = fit_lr(&data, 2, 1e-3, 10_000, 1e-8).unwrap();
        for (x, y) in &data {
            let p = predict_lr(&m, x).unwrap();
            assert_eq!(u8::from(p >= 0.5), *y);
        }
    }

    #[test]
    fn optimum_gradient_matches_finite_differences() {
        let data = random_problem(5, 60, 10);
        let (m, stats) = fit_lr(&data, 10, 0.1, 10_000, 1e-8).unwrap();
        assert!(stats.converged);
        let h = 1e-6;
        let mut probe = m.weights.clone();
        let mut norm2 = 0.0;
        for i in 0..10 {
            probe[i] = m.weights[i] + h;
            let up = lr_objective(&data, 0.1, &probe, m.bias);
            probe[i] = m.weights[i] - h;
            let down = lr_objective(&data, 0.1, &probe, m.bias);
            probe[i] = m.weights[i];
            norm2 += ((up - down) / (2.0 * h)).powi(2);
        }
        let db = (lr_objective(&data, 0.1, &m.weights, m.bias + h) - lr_objective(&data, 0.1, &m.weights, m.bias - h)) / (2.0 * h);
        norm2 += db * db;
        assert!(norm2.sqrt() < 1e-6, "{}", norm2.sqrt());
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let data = random_problem(6, 30, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (gw, gb) = lr_gradient(&data, 0.7, &w, 0.3);
        let h = 1e-6;
        for i in 0..10 {
            let mut a = w.clone();
            let mut b = w.clone();
            a[i] += h;
            b[i] -= h;
            let num = (lr_objective(&data, 0.7, &a, 0.3) - lr_objective(&data, 0.7, &b, 0.3)) / (2.0 * h);
            assert!((num - gw[i]).abs() < 1e-7);
        }
        let num = (lr_objective(&data, 0.7, &w, 0.3 + h) - lr_objective(&data, 0.7, &w, 0.3 - h)) / (2.0 * h);
        assert!((num - gb).abs() < 1e-7);
    }

    #[test]
    fn predict_examples() {
        let zero = LinearModel { weights: vec![0.0; 3], bias: 0.0, l2: 1.0 };
        assert_eq!(predict_lr(&zero, &sv(&[(1, 4.0)])).unwrap(), 0.5);
        let m = LinearModel { weights: vec![0.5, -1.0, 2.0], bias: -0.25, l2: 1.0 };
        assert!((predict_lr(&m, &sv(&[])).unwrap() - 1.0 / (1.0 + 0.25f64.exp())).abs() < 1e-15);
        let x = sv(&[(0, 0.2), (1, 0.4), (2, 0.1)]);
        let z: f64 = 0.5 * 0.2 - 1.0 * 0.4 + 2.0 * 0.1 - 0.25;
        assert!((predict_lr(&m, &x).unwrap() - 1.0 / (1.0 + (-z).exp())).abs() < 1e-12);
        assert!(matches!(predict_lr(&m, &sv(&[(3, 1.0)])), Err(BaselineError::Dimension { .. })));
    }

    #[test]
    fn input_errors() {
        let one_class = vec![(sv(&[(0, 1.0)]), 1), (sv(&[(1, 1.0)]), 1)];
        assert!(matches!(fit_lr(&one_class, 2, 1.0, 10, 1e-6), Err(BaselineError::SingleClass)));
        assert!(matches!(fit_lr(&[], 2, 1.0, 10, 1e-6), Err(BaselineError::Empty)));
        let wide = vec![(sv(&[(5, 1.0)]), 1), (sv(&[(1, 1.0)]), 0)];
        assert!(matches!(fit_lr(&wide, 2, 1.0, 10, 1e-6), Err(BaselineError::Dimension { .. })));
    }

    #[test]
    fn bundle_round_trip() {
        let s = |id: &str, text: &str, causal| LabeledSentence::new(id, text, Label::from_causal(causal), Source::Semeval).unwrap();
        let train = vec![
            s("a", "smoke causes cancer", true),
            s("b", "the cat sat on the mat", false),
            s("c", "rain caused the flood", true),
            s("d", "a dog in the park", false),
        ];
        let bundle = LrBundle::fit(&train, DEFAULT_L2, DEFAULT_MAX_ITERS, DEFAULT_TOL).unwrap();
        assert!(bundle.stats.converged);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lr.json");
        bundle.save(&path).unwrap();
        let back = LrBundle::load(&path).unwrap();
        assert_eq!(back, bundle);
        assert_eq!(back.predict("smoke causes fire").unwrap(), bundle.predict("smoke causes fire").unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn fit_never_worsens_objective_and_is_deterministic(seed in any::<u64>(), l2 in 0.01f64..10.0) {
            let data = random_problem(seed, 25, 6);
            let (a, stats) = fit_lr(&data, 6, l2, 500, 1e-6).unwrap();
            let (b, _) = fit_lr(&data, 6, l2, 500, 1e-6).unwrap();
            prop_assert!(stats.objective <= lr_objective(&data, l2, &[0.0; 6], 0.0));
            prop_assert_eq!(a.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>(), b.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>());
            prop_assert_eq!(a.bias.to_bits(), b.bias.to_bits());
        }
    }
}
