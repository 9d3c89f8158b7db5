use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linalg::Real;

/// Where the reset gate enters the candidate state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResetPlacement {
    /// `tanh(W_h x + r ⊙ (U_h h) + b_h)`
    #[default]
    #[serde(rename = "after")]
    AfterMatmul,
    /// `tanh(W_h x + U_h (r ⊙ h) + b_h)`
    #[serde(rename = "before")]
    BeforeMatmul,
}

impl std::str::FromStr for ResetPlacement {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "after" => Ok(ResetPlacement::AfterMatmul),
            "before" => Ok(ResetPlacement::BeforeMatmul),
            other => Err(format!("unknown reset placement {other:?} (after|before)")),
        }
    }
}

impl std::fmt::Display for ResetPlacement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ResetPlacement::AfterMatmul => "after",
            ResetPlacement::BeforeMatmul => "before",
        })
    }
}

/// One GRU cell. Gate blocks are stacked row-wise in the order update (z),
/// reset (r), candidate (h).
#[derive(Clone, Debug, PartialEq)]
pub struct GruCellParams<T> {
    pub d_in: usize,
    pub d_h: usize,
    /// `3·d_h × d_in`
    pub w: Vec<T>,
    /// `3·d_h × d_h`
    pub u: Vec<T>,
    /// `3·d_h`
    pub b: Vec<T>,
}

impl<T: Real> GruCellParams<T> {
    pub fn zeros(d_in: usize, d_h: usize) -> Self {
        GruCellParams {
            d_in,
            d_h,
            w: vec![T::zero(); 3 * d_h * d_in],
            u: vec![T::zero(); 3 * d_h * d_h],
            b: vec![T::zero(); 3 * d_h],
        }
    }

    pub fn w_z(&self) -> &[T] {
        &self.w[..self.d_h * self.d_in]
    }

    pub fn w_r(&self) -> &[T] {
        &self.w[self.d_h * self.d_in..2 * self.d_h * self.d_in]
    }

    pub fn w_h(&self) -> &[T] {
        &self.w[2 * self.d_h * self.d_in..]
    }

    pub fn u_z(&self) -> &[T] {
        &self.u[..self.d_h * self.d_h]
    }

    pub fn u_r(&self) -> &[T] {
        &self.u[self.d_h * self.d_h..2 * self.d_h * self.d_h]
    }

    pub fn u_h(&self) -> &[T] {
        &self.u[2 * self.d_h * self.d_h..]
    }

    pub fn b_z(&self) -> &[T] {
        &self.b[..self.d_h]
    }

    pub fn b_r(&self) -> &[T] {
        &self.b[self.d_h..2 * self.d_h]
    }

    pub fn b_h(&self) -> &[T] {
        &self.b[2 * self.d_h..]
    }
}

/// All trainable weights of the bidirectional GRU with linear self-attention
/// and logistic output.
#[derive(Clone, Debug, PartialEq)]
pub struct BiGruAttParams<T> {
    pub forward: GruCellParams<T>,
    pub backward: GruCellParams<T>,
    /// `2·d_h`
    pub u_att: Vec<T>,
    /// `2·d_h`
    pub u_p: Vec<T>,
    /// length 1
    pub b_p: Vec<T>,
    pub reset: ResetPlacement,
}

/// Names of the parameter blocks in [`BiGruAttParams::blocks`] order.
pub const BLOCK_NAMES: [&str; 9] = [
    "forward.w",
    "forward.u",
    "forward.b",
    "backward.w",
    "backward.u",
    "backward.b",
    "u_att",
    "u_p",
    "b_p",
];

impl<T: Real> BiGruAttParams<T> {
    pub fn zeros(d_in: usize, d_h: usize) -> Self {
        BiGruAttParams {
            forward: GruCellParams::zeros(d_in, d_h),
            backward: GruCellParams::zeros(d_in, d_h),
            u_att: vec![T::zero(); 2 * d_h],
            u_p: vec![T::zero(); 2 * d_h],
            b_p: vec![T::zero()],
            reset: ResetPlacement::default(),
        }
    }

    /// Zero tensor with the same shapes (gradient / moment buffers).
    pub fn zeros_like(&self) -> Self {
        BiGruAttParams {
            reset: self.reset,
            ..Self::zeros(self.d_in(), self.d_h())
        }
    }

    pub fn d_in(&self) -> usize {
        self.forward.d_in
    }

    pub fn d_h(&self) -> usize {
        self.forward.d_h
    }

    pub fn blocks(&self) -> [&[T]; 9] {
        [
            &self.forward.w,
            &self.forward.u,
            &self.forward.b,
            &self.backward.w,
            &self.backward.u,
            &self.backward.b,
            &self.u_att,
            &self.u_p,
            &self.b_p,
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut Vec<T>; 9] {
        [
            &mut self.forward.w,
            &mut self.forward.u,
            &mut self.forward.b,
            &mut self.backward.w,
            &mut self.backward.u,
            &mut self.backward.b,
            &mut self.u_att,
            &mut self.u_p,
            &mut self.b_p,
        ]
    }

    pub fn num_params(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|x| x.is_finite()))
    }

    /// Checks every block against the shapes implied by `d_in`, `d_h`.
    pub fn check_shapes(&self) -> Result<(), String> {
        let want = Self::zeros(self.d_in(), self.d_h());
        if self.backward.d_in != self.d_in() || self.backward.d_h != self.d_h() {
            return Err("forward and backward cells disagree on dimensions".into());
        }
        for ((name, have), want) in BLOCK_NAMES.iter().zip(self.blocks()).zip(want.blocks()) {
            if have.len() != want.len() {
                return Err(format!("{name}: {} values, expected {}", have.len(), want.len()));
            }
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> BiGruAttParams<U> {
        let conv = |v: &Vec<T>| v.iter().map(|&x| U::from_f64_lossy(x.as_f64())).collect();
        let cell = |c: &GruCellParams<T>| GruCellParams {
            d_in: c.d_in,
            d_h: c.d_h,
            w: conv(&c.w),
            u: conv(&c.u),
            b: conv(&c.b),
        };
        BiGruAttParams {
            forward: cell(&self.forward),
            backward: cell(&self.backward),
            u_att: conv(&self.u_att),
            u_p: conv(&self.u_p),
            b_p: conv(&self.b_p),
            reset: self.reset,
        }
    }

    /// Fresh parameters: GRU weights, biases, `u_p` and `b_p` uniform in
    /// `±1/√d_h`; `u_att` Glorot-uniform with `fan_in = 2·d_h`, `fan_out = 1`.
    pub fn init<R: Rng + ?Sized>(d_in: usize, d_h: usize, reset: ResetPlacement, rng: &mut R) -> Self {
        let mut p = Self::zeros(d_in, d_h);
        p.reset = reset;
        let k = 1.0 / (d_h as f64).sqrt();
        let glorot = (6.0 / (2 * d_h + 1) as f64).sqrt();
        let mut fill = |v: &mut [T], bound: f64| {
            for x in v {
                *x = T::from_f64_lossy(rng.gen_range(-bound..bound));
            }
        };
        for cell in [&mut p.forward, &mut p.backward] {
            fill(&mut cell.w, k);
            fill(&mut cell.u, k);
            fill(&mut cell.b, k);
        }
        fill(&mut p.u_att, glorot);
        fill(&mut p.u_p, k);
        fill(&mut p.b_p, k);
        p
    }
}
