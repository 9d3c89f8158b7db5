//! Forward computation and reverse-mode gradients of the BiGRU + attention
//! classifier.
//!
//! The single-sentence functions ([`gru_step`], [`bigru_forward`], [`attend`],
//! [`predict`], [`loss`]) are the plain definitions. Training goes through
//! [`forward_batch`], which packs a mini-batch time-major (sentences sorted by
//! decreasing length, so the sentences still running at step `t` are a prefix)
//! and records every intermediate needed by [`ForwardTrace::backward`].

use rand::Rng;

use super::linalg::{dot, gemm, sigmoid, Mat, MatMut, Real};
use super::params::{BiGruAttParams, GruCellParams, ResetPlacement};
use super::NnError;
use crate::embeddings::EmbeddingSequence;

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` inside the loss.
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionOutput<T> {
    /// Raw scores `u_att · h_i`.
    pub scores: Vec<T>,
    /// Softmax-normalized weights.
    pub weights: Vec<T>,
    /// Weighted sum of the states.
    pub sentence: Vec<T>,
}

fn check_finite<T: Real>(values: &[T], what: &str) -> Result<(), NnError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NnError::NonFinite(what.to_string()))
    }
}

/// One GRU recurrence step.
pub fn gru_step<T: Real>(
    cell: &GruCellParams<T>,
    reset: ResetPlacement,
    x: &[T],
    h_prev: &[T],
) -> Result<Vec<T>, NnError> {
    let (d_in, d_h) = (cell.d_in, cell.d_h);
    if x.len() != d_in || h_prev.len() != d_h {
        return Err(NnError::Dimension(format!(
            "gru_step: x has {} values (want {d_in}), h has {} (want {d_h})",
            x.len(),
            h_prev.len()
        )));
    }
    let w_row = |gate: usize, j: usize| &cell.w[(gate * d_h + j) * d_in..(gate * d_h + j + 1) * d_in];
    let u_row = |gate: usize, j: usize| &cell.u[(gate * d_h + j) * d_h..(gate * d_h + j + 1) * d_h];

    let z: Vec<T> = (0..d_h)
        .map(|j| sigmoid(dot(w_row(0, j), x) + dot(u_row(0, j), h_prev) + cell.b[j]))
        .collect();
    let r: Vec<T> = (0..d_h)
        .map(|j| sigmoid(dot(w_row(1, j), x) + dot(u_row(1, j), h_prev) + cell.b[d_h + j]))
        .collect();
    let rh: Vec<T> = r.iter().zip(h_prev).map(|(&a, &b)| a * b).collect();
    let h: Vec<T> = (0..d_h)
        .map(|j| {
            let recurrent = match reset {
                ResetPlacement::AfterMatmul => r[j] * dot(u_row(2, j), h_prev),
                ResetPlacement::BeforeMatmul => dot(u_row(2, j), &rh),
            };
            let cand = (dot(w_row(2, j), x) + recurrent + cell.b[2 * d_h + j]).tanh();
            (T::one() - z[j]) * h_prev[j] + z[j] * cand
        })
        .collect();
    check_finite(&h, "GRU state")?;
    Ok(h)
}

/// Runs both directions over a sentence (`n × d_in`, row-major) from zero
/// initial states. Row `i` of the result is `[h_i^f; h_i^b]`.
pub fn bigru_forward<T: Real>(params: &BiGruAttParams<T>, seq: &[T]) -> Result<Vec<T>, NnError> {
    let (d_in, d_h) = (params.d_in(), params.d_h());
    if seq.is_empty() || seq.len() % d_in != 0 {
        return Err(NnError::Dimension(format!(
            "bigru_forward: {} input values is not a non-empty multiple of {d_in}",
            seq.len()
        )));
    }
    let n = seq.len() / d_in;
    let mut out = vec![T::zero(); n * 2 * d_h];
    let mut h = vec![T::zero(); d_h];
    for i in 0..n {
        h = gru_step(&params.forward, params.reset, &seq[i * d_in..(i + 1) * d_in], &h)?;
        out[i * 2 * d_h..i * 2 * d_h + d_h].copy_from_slice(&h);
    }
    let mut h = vec![T::zero(); d_h];
    for i in (0..n).rev() {
        h = gru_step(&params.backward, params.reset, &seq[i * d_in..(i + 1) * d_in], &h)?;
        out[i * 2 * d_h + d_h..(i + 1) * 2 * d_h].copy_from_slice(&h);
    }
    Ok(out)
}

/// Linear self-attention over the rows of `states` (`n × u_att.len()`).
pub fn attend<T: Real>(u_att: &[T], states: &[T]) -> AttentionOutput<T> {
    let width = u_att.len();
    assert!(width > 0 && !states.is_empty() && states.len() % width == 0, "attend: bad shapes");
    let scores: Vec<T> = states.chunks_exact(width).map(|h| dot(u_att, h)).collect();
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let exp: Vec<T> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: T = exp.iter().copied().sum();
    let weights: Vec<T> = exp.into_iter().map(|e| e / total).collect();
    let mut sentence = vec![T::zero(); width];
    for (a, h) in weights.iter().zip(states.chunks_exact(width)) {
        for (s, &x) in sentence.iter_mut().zip(h) {
            *s += *a * x;
        }
    }
    AttentionOutput {
        scores,
        weights,
        sentence,
    }
}

/// `σ(u_p · s + b_p)`.
pub fn predict<T: Real>(u_p: &[T], b_p: T, s: &[T]) -> T {
    sigmoid(dot(u_p, s) + b_p)
}

/// Binary cross-entropy with clamped probability.
pub fn loss<T: Real>(p: T, y: u8) -> T {
    let lo = T::from_f64_lossy(PROB_CLAMP);
    let p = p.max(lo).min(T::one() - lo);
    if y == 1 {
        -p.ln()
    } else {
        -(T::one() - p).ln()
    }
}

/// Inverted-dropout settings for a training forward pass.
pub struct Dropout<'r, R: Rng + ?Sized> {
    pub rate: f64,
    pub rng: &'r mut R,
}

impl<R: Rng + ?Sized> Dropout<'_, R> {
    fn mask<T: Real>(&mut self, len: usize) -> Vec<T> {
        let keep = T::from_f64_lossy(1.0 / (1.0 - self.rate));
        (0..len)
            .map(|_| if self.rng.gen::<f64>() < self.rate { T::zero() } else { keep })
            .collect()
    }
}

/// Time-major packing of a batch: sentences sorted by decreasing length.
#[derive(Clone, Debug)]
struct Packing {
    /// batch index -> sorted position
    position: Vec<usize>,
    lengths: Vec<usize>,
    /// active sentences per time step
    batch_sizes: Vec<usize>,
    /// first packed row of each time step
    offsets: Vec<usize>,
    rows: usize,
}

impl Packing {
    fn new(lengths: &[usize]) -> Self {
        let mut order: Vec<usize> = (0..lengths.len()).collect();
        order.sort_by(|&a, &b| lengths[b].cmp(&lengths[a]));
        let mut position = vec![0; lengths.len()];
        for (p, &b) in order.iter().enumerate() {
            position[b] = p;
        }
        let steps = lengths.iter().copied().max().unwrap_or(0);
        let batch_sizes: Vec<usize> = (0..steps)
            .map(|t| lengths.iter().filter(|&&l| l > t).count())
            .collect();
        let mut offsets = Vec::with_capacity(steps);
        let mut rows = 0;
        for &k in &batch_sizes {
            offsets.push(rows);
            rows += k;
        }
        Packing {
            position,
            lengths: lengths.to_vec(),
            batch_sizes,
            offsets,
            rows,
        }
    }

    fn max_batch(&self) -> usize {
        self.batch_sizes.first().copied().unwrap_or(0)
    }

    /// Packed row of sentence `b`'s token `i` as read by each direction.
    fn forward_row(&self, b: usize, i: usize) -> usize {
        self.offsets[i] + self.position[b]
    }

    fn backward_row(&self, b: usize, i: usize) -> usize {
        self.offsets[self.lengths[b] - 1 - i] + self.position[b]
    }
}

/// Activations of one direction, each `rows × d_h` packed.
#[derive(Clone, Debug)]
struct DirectionTrace<T> {
    x: Vec<T>,
    h_prev: Vec<T>,
    z: Vec<T>,
    r: Vec<T>,
    /// `U_h h_prev` (after) or `U_h (r ⊙ h_prev)` (before)
    c: Vec<T>,
    /// `r ⊙ h_prev`; only filled for [`ResetPlacement::BeforeMatmul`]
    rh: Vec<T>,
    cand: Vec<T>,
    h: Vec<T>,
}

fn run_direction<T: Real>(
    cell: &GruCellParams<T>,
    reset: ResetPlacement,
    pack: &Packing,
    x: Vec<T>,
) -> DirectionTrace<T> {
    let (d_in, d_h) = (cell.d_in, cell.d_h);
    let g = 3 * d_h;
    let rows = pack.rows;
    let mut gi = vec![T::zero(); rows * g];
    gemm(
        T::one(),
        Mat::dense(&x, rows, d_in),
        Mat::dense(&cell.w, g, d_in).t(),
        T::zero(),
        MatMut::dense(&mut gi, rows, g),
    );
    for row in gi.chunks_exact_mut(g) {
        for (v, &b) in row.iter_mut().zip(&cell.b) {
            *v += b;
        }
    }

    let zeros = || vec![T::zero(); rows * d_h];
    let mut tr = DirectionTrace {
        x,
        h_prev: zeros(),
        z: zeros(),
        r: zeros(),
        c: zeros(),
        rh: if reset == ResetPlacement::BeforeMatmul { zeros() } else { Vec::new() },
        cand: zeros(),
        h: zeros(),
    };
    let mut gh = vec![T::zero(); pack.max_batch() * g];
    let u_zr = Mat::dense(&cell.u[..2 * d_h * d_h], 2 * d_h, d_h).t();
    let u_h = Mat::dense(&cell.u[2 * d_h * d_h..], d_h, d_h).t();

    for (t, (&k, &o)) in pack.batch_sizes.iter().zip(&pack.offsets).enumerate() {
        let span = o * d_h..(o + k) * d_h;
        if t > 0 {
            let prev = pack.offsets[t - 1] * d_h;
            let (head, tail) = (&tr.h[prev..prev + k * d_h], &mut tr.h_prev[span.clone()]);
            tail.copy_from_slice(head);
        }
        let hp = &tr.h_prev[span.clone()];
        match reset {
            ResetPlacement::AfterMatmul => gemm(
                T::one(),
                Mat::dense(hp, k, d_h),
                Mat::dense(&cell.u, g, d_h).t(),
                T::zero(),
                MatMut::dense(&mut gh[..k * g], k, g),
            ),
            ResetPlacement::BeforeMatmul => gemm(
                T::one(),
                Mat::dense(hp, k, d_h),
                u_zr,
                T::zero(),
                MatMut::new(&mut gh, k, 2 * d_h, g),
            ),
        }
        for i in 0..k {
            let gi_row = &gi[(o + i) * g..(o + i + 1) * g];
            let gh_row = &gh[i * g..(i + 1) * g];
            let base = (o + i) * d_h;
            for j in 0..d_h {
                tr.z[base + j] = sigmoid(gi_row[j] + gh_row[j]);
                tr.r[base + j] = sigmoid(gi_row[d_h + j] + gh_row[d_h + j]);
            }
        }
        if reset == ResetPlacement::BeforeMatmul {
            for idx in span.clone() {
                tr.rh[idx] = tr.r[idx] * tr.h_prev[idx];
            }
            gemm(
                T::one(),
                Mat::dense(&tr.rh[span.clone()], k, d_h),
                u_h,
                T::zero(),
                MatMut::new(&mut gh[2 * d_h..], k, d_h, g),
            );
        }
        for i in 0..k {
            let gi_row = &gi[(o + i) * g..(o + i + 1) * g];
            let gh_row = &gh[i * g..(i + 1) * g];
            let base = (o + i) * d_h;
            for j in 0..d_h {
                let idx = base + j;
                let c = gh_row[2 * d_h + j];
                let pre = match reset {
                    ResetPlacement::AfterMatmul => gi_row[2 * d_h + j] + tr.r[idx] * c,
                    ResetPlacement::BeforeMatmul => gi_row[2 * d_h + j] + c,
                };
                let cand = pre.tanh();
                let z = tr.z[idx];
                tr.c[idx] = c;
                tr.cand[idx] = cand;
                tr.h[idx] = (T::one() - z) * tr.h_prev[idx] + z * cand;
            }
        }
    }
    tr
}

/// Accumulates one direction's parameter gradients given `d_out`, the loss
/// gradient with respect to every packed output state.
fn backprop_direction<T: Real>(
    cell: &GruCellParams<T>,
    reset: ResetPlacement,
    pack: &Packing,
    tr: &DirectionTrace<T>,
    d_out: &[T],
    grad: &mut GruCellParams<T>,
) {
    let (d_in, d_h) = (cell.d_in, cell.d_h);
    let g = 3 * d_h;
    let rows = pack.rows;
    let kmax = pack.max_batch();
    let mut dgi = vec![T::zero(); rows * g];
    let mut dgh = vec![T::zero(); rows * g];
    let mut carry = vec![T::zero(); kmax * d_h];
    let mut next = vec![T::zero(); kmax * d_h];
    let mut d_rh = vec![T::zero(); kmax * d_h];
    let one = T::one();

    for (&k, &o) in pack.batch_sizes.iter().zip(&pack.offsets).rev() {
        for i in 0..k {
            for j in 0..d_h {
                let idx = (o + i) * d_h + j;
                let dh = d_out[idx] + carry[i * d_h + j];
                let (z, r, c, cand, hp) = (tr.z[idx], tr.r[idx], tr.c[idx], tr.cand[idx], tr.h_prev[idx]);
                let dpre = dh * z * (one - cand * cand);
                let dpz = dh * (cand - hp) * z * (one - z);
                next[i * d_h + j] = dh * (one - z);
                let gi_row = (o + i) * g;
                dgi[gi_row + j] = dpz;
                dgi[gi_row + 2 * d_h + j] = dpre;
                dgh[gi_row + j] = dpz;
                match reset {
                    ResetPlacement::AfterMatmul => {
                        let dpr = dpre * c * r * (one - r);
                        dgi[gi_row + d_h + j] = dpr;
                        dgh[gi_row + d_h + j] = dpr;
                        dgh[gi_row + 2 * d_h + j] = dpre * r;
                    }
                    ResetPlacement::BeforeMatmul => {
                        dgh[gi_row + 2 * d_h + j] = dpre;
                    }
                }
            }
        }
        let step = &mut dgh[o * g..(o + k) * g];
        match reset {
            ResetPlacement::AfterMatmul => gemm(
                one,
                Mat::dense(step, k, g),
                Mat::dense(&cell.u, g, d_h),
                one,
                MatMut::dense(&mut next[..k * d_h], k, d_h),
            ),
            ResetPlacement::BeforeMatmul => {
                gemm(
                    one,
                    Mat::dense(step, k, g).cols(2 * d_h, d_h),
                    Mat::dense(&cell.u[2 * d_h * d_h..], d_h, d_h),
                    T::zero(),
                    MatMut::dense(&mut d_rh[..k * d_h], k, d_h),
                );
                for i in 0..k {
                    for j in 0..d_h {
                        let idx = (o + i) * d_h + j;
                        let (r, hp) = (tr.r[idx], tr.h_prev[idx]);
                        let drh = d_rh[i * d_h + j];
                        let dpr = drh * hp * r * (one - r);
                        step[i * g + d_h + j] = dpr;
                        dgi[(o + i) * g + d_h + j] = dpr;
                        next[i * d_h + j] += drh * r;
                    }
                }
                gemm(
                    one,
                    Mat::dense(step, k, g).cols(0, 2 * d_h),
                    Mat::dense(&cell.u[..2 * d_h * d_h], 2 * d_h, d_h),
                    one,
                    MatMut::dense(&mut next[..k * d_h], k, d_h),
                );
            }
        }
        carry[..k * d_h].copy_from_slice(&next[..k * d_h]);
    }

    gemm(
        one,
        Mat::dense(&dgi, rows, g).t(),
        Mat::dense(&tr.x, rows, d_in),
        one,
        MatMut::dense(&mut grad.w, g, d_in),
    );
    for row in dgi.chunks_exact(g) {
        for (b, &d) in grad.b.iter_mut().zip(row) {
            *b += d;
        }
    }
    match reset {
        ResetPlacement::AfterMatmul => gemm(
            one,
            Mat::dense(&dgh, rows, g).t(),
            Mat::dense(&tr.h_prev, rows, d_h),
            one,
            MatMut::dense(&mut grad.u, g, d_h),
        ),
        ResetPlacement::BeforeMatmul => {
            let (u_zr, u_h) = grad.u.split_at_mut(2 * d_h * d_h);
            gemm(
                one,
                Mat::dense(&dgh, rows, g).cols(0, 2 * d_h).t(),
                Mat::dense(&tr.h_prev, rows, d_h),
                one,
                MatMut::dense(u_zr, 2 * d_h, d_h),
            );
            gemm(
                one,
                Mat::dense(&dgh, rows, g).cols(2 * d_h, d_h).t(),
                Mat::dense(&tr.rh, rows, d_h),
                one,
                MatMut::dense(u_h, d_h, d_h),
            );
        }
    }
}

/// Everything recorded by a batched forward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace<T> {
    pack: Packing,
    directions: [DirectionTrace<T>; 2],
    /// per-sentence start row into `states`
    starts: Vec<usize>,
    /// concatenated `[h^f; h^b]` rows after output dropout
    states: Vec<T>,
    state_mask: Option<Vec<T>>,
    attention: Vec<AttentionOutput<T>>,
    probabilities: Vec<T>,
    targets: Vec<u8>,
    loss: T,
}

impl<T: Real> ForwardTrace<T> {
    pub fn probabilities(&self) -> &[T] {
        &self.probabilities
    }

    /// Mean clamped cross-entropy over the batch.
    pub fn loss(&self) -> T {
        self.loss
    }

    pub fn attention(&self) -> &[AttentionOutput<T>] {
        &self.attention
    }

    /// `[h^f; h^b]` rows of sentence `b` (after output dropout).
    pub fn states(&self, b: usize) -> &[T] {
        let w = self.attention[b].sentence.len();
        let n = self.pack.lengths[b];
        &self.states[self.starts[b] * w..(self.starts[b] + n) * w]
    }

    /// Gradient of the mean batch loss with respect to every parameter.
    /// Word vectors are inputs and receive no gradient.
    pub fn backward(&self, params: &BiGruAttParams<T>) -> Result<BiGruAttParams<T>, NnError> {
        let d_h = params.d_h();
        let w = 2 * d_h;
        let mut grad = params.zeros_like();
        let batch = T::from_usize(self.targets.len()).expect("batch size");
        let lo = T::from_f64_lossy(PROB_CLAMP);
        let hi = T::one() - lo;

        let mut d_states = vec![T::zero(); self.states.len()];
        for (b, att) in self.attention.iter().enumerate() {
            let p = self.probabilities[b];
            let y = T::from_u8(self.targets[b]).expect("target");
            let d_logit = if p > lo && p < hi { (p - y) / batch } else { T::zero() };
            grad.b_p[0] += d_logit;
            for (g, &s) in grad.u_p.iter_mut().zip(&att.sentence) {
                *g += d_logit * s;
            }
            let ds: Vec<T> = params.u_p.iter().map(|&u| d_logit * u).collect();
            let states = self.states(b);
            let da: Vec<T> = states.chunks_exact(w).map(|h| dot(h, &ds)).collect();
            let mean_da = att.weights.iter().zip(&da).fold(T::zero(), |acc, (&a, &d)| acc + a * d);
            let start = self.starts[b] * w;
            for (i, h) in states.chunks_exact(w).enumerate() {
                let a = att.weights[i];
                let d_score = a * (da[i] - mean_da);
                let row = &mut d_states[start + i * w..start + (i + 1) * w];
                for c in 0..w {
                    grad.u_att[c] += d_score * h[c];
                    row[c] = a * ds[c] + d_score * params.u_att[c];
                }
            }
        }
        if let Some(mask) = &self.state_mask {
            for (d, &m) in d_states.iter_mut().zip(mask) {
                *d *= m;
            }
        }

        let rows = self.pack.rows;
        let mut d_fwd = vec![T::zero(); rows * d_h];
        let mut d_bwd = vec![T::zero(); rows * d_h];
        for b in 0..self.targets.len() {
            for i in 0..self.pack.lengths[b] {
                let src = (self.starts[b] + i) * w;
                let f = self.pack.forward_row(b, i) * d_h;
                let r = self.pack.backward_row(b, i) * d_h;
                d_fwd[f..f + d_h].copy_from_slice(&d_states[src..src + d_h]);
                d_bwd[r..r + d_h].copy_from_slice(&d_states[src + d_h..src + w]);
            }
        }
        backprop_direction(&params.forward, params.reset, &self.pack, &self.directions[0], &d_fwd, &mut grad.forward);
        backprop_direction(&params.backward, params.reset, &self.pack, &self.directions[1], &d_bwd, &mut grad.backward);

        if !grad.is_finite() {
            return Err(NnError::NonFinite("gradient".into()));
        }
        Ok(grad)
    }
}

/// Batched forward pass. `targets` may be empty for pure inference; dropout
/// (input and output of the BiGRU) is applied only when given.
pub fn forward_batch<T: Real, R: Rng + ?Sized>(
    params: &BiGruAttParams<T>,
    inputs: &[&EmbeddingSequence],
    targets: &[u8],
    mut dropout: Option<Dropout<'_, R>>,
) -> Result<ForwardTrace<T>, NnError> {
    let (d_in, d_h) = (params.d_in(), params.d_h());
    let w = 2 * d_h;
    if inputs.is_empty() {
        return Err(NnError::Dimension("empty batch".into()));
    }
    if !targets.is_empty() && targets.len() != inputs.len() {
        return Err(NnError::Dimension(format!(
            "{} inputs but {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    for seq in inputs {
        if seq.dim() != d_in || seq.is_empty() {
            return Err(NnError::Dimension(format!(
                "input of {} tokens × dim {} does not fit a model with input dim {d_in}",
                seq.len(),
                seq.dim()
            )));
        }
    }
    let dropout_active = dropout.as_ref().is_some_and(|d| d.rate > 0.0);
    let lengths: Vec<usize> = inputs.iter().map(|s| s.len()).collect();
    let pack = Packing::new(&lengths);

    let mut x_fwd = vec![T::zero(); pack.rows * d_in];
    let mut x_bwd = vec![T::zero(); pack.rows * d_in];
    for (b, seq) in inputs.iter().enumerate() {
        let mask: Option<Vec<T>> = match dropout.as_mut() {
            Some(d) if dropout_active => Some(d.mask(seq.len() * d_in)),
            _ => None,
        };
        for i in 0..seq.len() {
            let f = pack.forward_row(b, i) * d_in;
            let r = pack.backward_row(b, i) * d_in;
            for (c, &v) in seq.vector(i).iter().enumerate() {
                let mut v = T::from_f32(v).expect("f32 input");
                if let Some(m) = &mask {
                    v *= m[i * d_in + c];
                }
                x_fwd[f + c] = v;
                x_bwd[r + c] = v;
            }
        }
    }

    let fwd = run_direction(&params.forward, params.reset, &pack, x_fwd);
    let bwd = run_direction(&params.backward, params.reset, &pack, x_bwd);

    let mut starts = Vec::with_capacity(inputs.len());
    let mut states = Vec::with_capacity(pack.rows * w);
    for b in 0..inputs.len() {
        starts.push(states.len() / w);
        for i in 0..lengths[b] {
            let f = pack.forward_row(b, i) * d_h;
            let r = pack.backward_row(b, i) * d_h;
            states.extend_from_slice(&fwd.h[f..f + d_h]);
            states.extend_from_slice(&bwd.h[r..r + d_h]);
        }
    }
    let state_mask = match dropout.as_mut() {
        Some(d) if dropout_active => {
            let mask: Vec<T> = d.mask(states.len());
            for (s, &m) in states.iter_mut().zip(&mask) {
                *s *= m;
            }
            Some(mask)
        }
        _ => None,
    };

    let mut attention = Vec::with_capacity(inputs.len());
    let mut probabilities = Vec::with_capacity(inputs.len());
    for b in 0..inputs.len() {
        let rows = &states[starts[b] * w..(starts[b] + lengths[b]) * w];
        let att = attend(&params.u_att, rows);
        probabilities.push(predict(&params.u_p, params.b_p[0], &att.sentence));
        attention.push(att);
    }
    check_finite(&probabilities, "output probability")?;

    let batch_loss = if targets.is_empty() {
        T::zero()
    } else {
        let total: T = probabilities.iter().zip(targets).map(|(&p, &y)| loss(p, y)).sum();
        total / T::from_usize(targets.len()).expect("batch size")
    };
    if !batch_loss.is_finite() {
        return Err(NnError::NonFinite("loss".into()));
    }

    Ok(ForwardTrace {
        pack,
        directions: [fwd, bwd],
        starts,
        states,
        state_mask,
        attention,
        probabilities,
        targets: targets.to_vec(),
        loss: batch_loss,
    })
}

/// Forward pass without dropout.
pub fn forward_eval<T: Real>(
    params: &BiGruAttParams<T>,
    inputs: &[&EmbeddingSequence],
    targets: &[u8],
) -> Result<ForwardTrace<T>, NnError> {
    forward_batch::<T, rand_chacha::ChaCha8Rng>(params, inputs, targets, None)
}
