//! Float abstraction and a bounds-checked strided GEMM.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar type the network runs in: `f32` for training, `f64` for gradient
/// checking.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Default + Debug + Send + Sync + Sum + AddAssign + SubAssign + MulAssign + 'static
{
    const NAME: &'static str;

    /// # Safety
    /// All pointer/stride combinations must stay inside their allocations.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("float conversion")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("float conversion")
    }
}

impl Real for f32 {
    const NAME: &'static str = "f32";

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f32,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Real for f64 {
    const NAME: &'static str = "f64";

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

/// Read-only strided matrix view.
#[derive(Clone, Copy)]
pub(crate) struct Mat<'a, T> {
    data: &'a [T],
    rows: usize,
    cols: usize,
    rs: usize,
    cs: usize,
}

impl<'a, T> Mat<'a, T> {
    /// Row-major `rows x cols` matrix with row stride `stride`.
    pub fn new(data: &'a [T], rows: usize, cols: usize, stride: usize) -> Self {
        let m = Mat {
            data,
            rows,
            cols,
            rs: stride,
            cs: 1,
        };
        m.check(data.len());
        m
    }

    pub fn dense(data: &'a [T], rows: usize, cols: usize) -> Self {
        Self::new(data, rows, cols, cols)
    }

    pub fn t(self) -> Self {
        Mat {
            rows: self.cols,
            cols: self.rows,
            rs: self.cs,
            cs: self.rs,
            ..self
        }
    }

    /// Columns `start..start + cols`.
    pub fn cols(self, start: usize, cols: usize) -> Self {
        assert!(start + cols <= self.cols);
        let offset = if self.rows == 0 || cols == 0 { 0 } else { start * self.cs };
        Mat {
            data: &self.data[offset..],
            cols,
            ..self
        }
    }

    fn check(&self, len: usize) {
        if self.rows > 0 && self.cols > 0 {
            let last = (self.rows - 1) * self.rs + (self.cols - 1) * self.cs;
            assert!(last < len, "matrix view out of bounds");
        }
    }
}

/// Mutable row-major view with row stride.
pub(crate) struct MatMut<'a, T> {
    data: &'a mut [T],
    rows: usize,
    cols: usize,
    rs: usize,
}

impl<'a, T> MatMut<'a, T> {
    pub fn new(data: &'a mut [T], rows: usize, cols: usize, stride: usize) -> Self {
        if rows > 0 && cols > 0 {
            assert!((rows - 1) * stride + cols <= data.len(), "matrix view out of bounds");
        }
        MatMut {
            data,
            rows,
            cols,
            rs: stride,
        }
    }

    pub fn dense(data: &'a mut [T], rows: usize, cols: usize) -> Self {
        Self::new(data, rows, cols, cols)
    }
}

/// `c = alpha * a * b + beta * c`. With `beta == 0`, `c` is not read.
pub(crate) fn gemm<T: Real>(alpha: T, a: Mat<'_, T>, b: Mat<'_, T>, beta: T, c: MatMut<'_, T>) {
    assert_eq!(a.cols, b.rows, "inner dimensions differ");
    assert_eq!((a.rows, b.cols), (c.rows, c.cols), "output shape differs");
    if c.rows == 0 || c.cols == 0 {
        return;
    }
    if a.cols == 0 {
        for r in 0..c.rows {
            for v in &mut c.data[r * c.rs..r * c.rs + c.cols] {
                *v = if beta == T::zero() { T::zero() } else { *v * beta };
            }
        }
        return;
    }
    // SAFETY: every view was bounds-checked on construction against its slice.
    unsafe {
        T::gemm_raw(
            a.rows,
            a.cols,
            b.cols,
            alpha,
            a.data.as_ptr(),
            a.rs as isize,
            a.cs as isize,
            b.data.as_ptr(),
            b.rs as isize,
            b.cs as isize,
            beta,
            c.data.as_mut_ptr(),
            c.rs as isize,
            1,
        )
    }
}

#[inline]
pub(crate) fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], m: usize, k: usize, b: &[f64], n: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    c[i * n + j] += a[i * k + p] * b[p * n + j];
                }
            }
        }
        c
    }

    #[test]
    fn gemm_matches_naive_with_transposes_and_column_slices() {
        let a: Vec<f64> = (0..12).map(|x| x as f64 * 0.5 - 2.0).collect(); // 3x4
        let b: Vec<f64> = (0..20).map(|x| (x as f64).sin()).collect(); // 4x5
        let mut c = vec![f64::NAN; 15];
        gemm(1.0, Mat::dense(&a, 3, 4), Mat::dense(&b, 4, 5), 0.0, MatMut::dense(&mut c, 3, 5));
        let want = naive(&a, 3, 4, &b, 5);
        for (x, y) in c.iter().zip(&want) {
            assert!((x - y).abs() < 1e-12);
        }

        // (b^T)^T a^T^T: c2 = (a^T)^T... compute b^T * a^T = (a b)^T
        let mut ct = vec![0.0; 15];
        gemm(1.0, Mat::dense(&b, 4, 5).t(), Mat::dense(&a, 3, 4).t(), 0.0, MatMut::dense(&mut ct, 5, 3));
        for i in 0..3 {
            for j in 0..5 {
                assert!((ct[j * 3 + i] - want[i * 5 + j]).abs() < 1e-12);
            }
        }

        // columns 1..3 of b
        let mut cs = vec![1.0; 6];
        gemm(1.0, Mat::dense(&a, 3, 4), Mat::dense(&b, 4, 5).cols(1, 2), 1.0, MatMut::dense(&mut cs, 3, 2));
        for i in 0..3 {
            for j in 0..2 {
                assert!((cs[i * 2 + j] - 1.0 - want[i * 5 + j + 1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    #[should_panic(expected = "out of bounds")]
    fn views_are_bounds_checked() {
        let a = [0.0f32; 5];
        let _ = Mat::dense(&a, 2, 3);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!(sigmoid(-800.0f64) >= 0.0);
        assert_eq!(sigmoid(800.0f64), 1.0);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
    }
}
