//! Uniform grids, sampled fields, quadrature and Fourier sums.
//!
//! Every continuous integral in the crate is realized here: trapezoid
//! quadrature on endpoint-inclusive grids, rectangle-rule Fourier sums
//! `Σ_j v_j exp(±i k x_j) h` evaluated through FFTs (or a chirp-z transform
//! when the target frequency grid is arbitrary), and local polynomial
//! interpolation used wherever a sampled function is read off-grid.

use std::f64::consts::PI;
use std::ops::{Add, Mul};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform endpoint-inclusive grid with `n` points on `[min, max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    min: f64,
    max: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min >= max {
            return Err(Error::InvalidRange { min, max });
        }
        if n < 2 {
            return Err(Error::InvalidCount(n));
        }
        Ok(Self { min, max, n })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.max
        } else {
            self.min + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.point(i))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.points().collect()
    }

    /// Index of the grid point equal to `x` (up to rounding), if any.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let u = (x - self.min) / self.step();
        let i = u.round();
        if i < 0.0 || i >= self.n as f64 || (u - i).abs() > 1e-9 {
            return None;
        }
        Some(i as usize)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }

    /// Trapezoid weights: `step` everywhere, half at both endpoints.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.step();
        let mut w = vec![h; self.n];
        w[0] *= 0.5;
        w[self.n - 1] *= 0.5;
        w
    }

    /// Frequency grid conjugate to this one: `n` points spanning
    /// `[-π/step, π/step)` with spacing `2π/(n·step)`.
    pub fn conjugate(&self) -> Grid1D {
        let h = self.step();
        let dk = 2.0 * PI / (self.n as f64 * h);
        let min = -PI / h;
        Grid1D {
            min,
            max: min + (self.n - 1) as f64 * dk,
            n: self.n,
        }
    }

    /// Whether `other` is the FFT-compatible partner of this grid
    /// (same size, `step·other.step·n = 2π`).
    fn is_fft_partner(&self, other: &Grid1D) -> bool {
        self.n == other.n
            && ((self.step() * other.step() * self.n as f64) / (2.0 * PI) - 1.0).abs() < 1e-12
    }
}

/// Uniform 2-D grid over the `(q, p)` plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub q: Grid1D,
    pub p: Grid1D,
}

impl Grid2D {
    pub fn new(q: Grid1D, p: Grid1D) -> Self {
        Self { q, p }
    }

    pub fn square(half_width: f64, n: usize) -> Result<Self> {
        let g = Grid1D::symmetric(half_width, n)?;
        Ok(Self { q: g, p: g })
    }

    pub fn cell_area(&self) -> f64 {
        self.q.step() * self.p.step()
    }
}

/// Values that can be integrated and interpolated: `f64` and `Complex64`.
pub trait Scalar: Copy + Add<Output = Self> + Mul<f64, Output = Self> + Send + Sync {
    fn zero() -> Self;
    fn to_complex(self) -> C64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn to_complex(self) -> C64 {
        C64::new(self, 0.0)
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn to_complex(self) -> C64 {
        self
    }
}

/// Samples of a function on a [`Grid1D`].
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField1D<T> {
    grid: Grid1D,
    values: Vec<T>,
}

impl<T: Scalar> SampledField1D<T> {
    pub fn new(grid: Grid1D, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> T) -> Self {
        let values = grid.points().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> SampledField1D<U> {
        SampledField1D {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn to_complex(&self) -> SampledField1D<C64> {
        self.map(Scalar::to_complex)
    }

    /// Sixth-order Lagrange interpolation; zero outside the sampled support.
    pub fn interpolate(&self, x: f64) -> T {
        interpolate_uniform(&self.values, &self.grid, x)
    }
}

/// Trapezoid-rule integral over `[min, max]`.
pub fn trapezoid_integral<T: Scalar>(field: &SampledField1D<T>) -> T {
    trapezoid(field.values(), field.grid().step())
}

pub(crate) fn trapezoid<T: Scalar>(values: &[T], step: f64) -> T {
    let n = values.len();
    let interior = values[1..n - 1].iter().fold(T::zero(), |acc, &v| acc + v);
    (interior + (values[0] + values[n - 1]) * 0.5) * step
}

/// Sign of the exponent in a Fourier sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `F(k) = Σ_j v_j exp(sign·i·k·x_j)·step` on the conjugate frequency grid.
pub fn dft_1d<T: Scalar>(field: &SampledField1D<T>, sign: Sign) -> SampledField1D<C64> {
    let target = field.grid().conjugate();
    dft_onto(field, sign, &target)
}

/// Same Fourier sum as [`dft_1d`], evaluated on an arbitrary uniform `target` grid.
pub fn dft_onto<T: Scalar>(field: &SampledField1D<T>, sign: Sign, target: &Grid1D) -> SampledField1D<C64> {
    let grid = field.grid();
    let values: Vec<C64> = field.values().iter().map(|v| v.to_complex()).collect();
    let s = sign.value();
    let h = grid.step();
    let out = if grid.is_fft_partner(target) {
        fft_sum(&values, grid.min(), h, s * target.min(), s * target.step())
    } else {
        ChirpPlan::new(values.len(), grid.min(), h, s * target.min(), s * target.step(), target.len())
            .apply(&values)
    };
    SampledField1D {
        grid: *target,
        values: out.into_iter().map(|v| v * h).collect(),
    }
}

/// Inverse of [`dft_1d`]: `(1/2π) Σ_m F(k_m) exp(-i k_m x) dk` on `target`.
pub fn idft_1d(spectrum: &SampledField1D<C64>, target: &Grid1D) -> SampledField1D<C64> {
    let mut out = dft_onto(spectrum, Sign::Minus, target);
    out.values.iter_mut().for_each(|v| *v /= 2.0 * PI);
    out
}

/// `Σ_j v_j exp(i k_m x_j)` for `x_j = x0 + j h`, `k_m = k0 + m dk`, with `dk·h·n = 2π`.
fn fft_sum(values: &[C64], x0: f64, h: f64, k0: f64, dk: f64) -> Vec<C64> {
    let n = values.len();
    let mut buf: Vec<C64> = values
        .iter()
        .enumerate()
        .map(|(j, &v)| v * C64::cis(k0 * j as f64 * h))
        .collect();
    // exp(+2πi mj/n) for dk > 0 is rustfft's inverse direction
    let mut planner = FftPlanner::new();
    let fft = if dk > 0.0 {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    fft.process(&mut buf);
    buf.iter()
        .enumerate()
        .map(|(m, &v)| v * C64::cis(k0 * x0 + m as f64 * dk * x0))
        .collect()
}

/// Bluestein chirp-z plan for `out[m] = Σ_j v_j exp(i k_m x_j)` with
/// `x_j = x0 + j h`, `k_m = k0 + m dk` and arbitrary `dk·h`.
///
/// The kernel transform is computed once, so one plan can be applied to many
/// input vectors sharing the same geometry.
pub struct ChirpPlan {
    n_in: usize,
    n_out: usize,
    len: usize,
    pre: Vec<C64>,
    post: Vec<C64>,
    kernel: Vec<C64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    direct: Option<Vec<f64>>,
    x0: f64,
    h: f64,
    k0: f64,
    dk: f64,
}

const DIRECT_LIMIT: usize = 1 << 12;

impl ChirpPlan {
    pub fn new(n_in: usize, x0: f64, h: f64, k0: f64, dk: f64, n_out: usize) -> Self {
        let alpha = dk * h;
        let len = (n_in + n_out - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let direct = (n_in * n_out <= DIRECT_LIMIT).then(Vec::new);
        let (pre, post, kernel) = if direct.is_some() {
            (Vec::new(), Vec::new(), Vec::new())
        } else {
            let pre = (0..n_in)
                .map(|j| {
                    let jf = j as f64;
                    C64::cis(k0 * (x0 + jf * h) + 0.5 * alpha * jf * jf)
                })
                .collect();
            let post = (0..n_out)
                .map(|m| {
                    let mf = m as f64;
                    C64::cis(mf * dk * x0 + 0.5 * alpha * mf * mf)
                })
                .collect();
            let mut kernel = vec![C64::new(0.0, 0.0); len];
            for d in -(n_in as i64 - 1)..(n_out as i64) {
                let df = d as f64;
                kernel[d.rem_euclid(len as i64) as usize] = C64::cis(-0.5 * alpha * df * df);
            }
            forward.process(&mut kernel);
            (pre, post, kernel)
        };
        Self {
            n_in,
            n_out,
            len,
            pre,
            post,
            kernel,
            forward,
            inverse,
            direct,
            x0,
            h,
            k0,
            dk,
        }
    }

    pub fn apply(&self, values: &[C64]) -> Vec<C64> {
        assert_eq!(values.len(), self.n_in, "chirp plan input length");
        if self.direct.is_some() {
            return (0..self.n_out)
                .map(|m| {
                    let k = self.k0 + m as f64 * self.dk;
                    values
                        .iter()
                        .enumerate()
                        .map(|(j, &v)| v * C64::cis(k * (self.x0 + j as f64 * self.h)))
                        .sum()
                })
                .collect();
        }
        let mut buf = vec![C64::new(0.0, 0.0); self.len];
        for (b, (&v, &p)) in buf.iter_mut().zip(values.iter().zip(&self.pre)) {
            *b = v * p;
        }
        self.forward.process(&mut buf);
        for (b, &k) in buf.iter_mut().zip(&self.kernel) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.len as f64;
        (0..self.n_out).map(|m| buf[m] * self.post[m] * scale).collect()
    }
}

/// Sixth-order Lagrange weights for nodes `-2..=3` at fractional offset `t`.
pub(crate) fn lagrange6(t: f64) -> [f64; 6] {
    let mut w = [1.0; 6];
    for (a, wa) in w.iter_mut().enumerate() {
        let xa = a as f64 - 2.0;
        for b in 0..6 {
            if b != a {
                let xb = b as f64 - 2.0;
                *wa *= (t - xb) / (xa - xb);
            }
        }
    }
    w
}

/// Stencil for reading a uniform grid at `x`: first index and weights.
/// Returns `None` when `x` is further than the stencil reach outside the grid.
pub(crate) fn stencil(grid: &Grid1D, x: f64) -> Option<(i64, [f64; 6])> {
    let u = (x - grid.min()) / grid.step();
    if !u.is_finite() || u < -3.0 || u > grid.len() as f64 + 2.0 {
        return None;
    }
    let base = u.floor();
    let mut t = u - base;
    let mut base = base as i64;
    if t > 1.0 - 1e-12 {
        base += 1;
        t = 0.0;
    }
    Some((base - 2, lagrange6(t)))
}

/// Interpolate uniformly sampled values at `x`, treating the function as
/// zero outside the grid.
pub fn interpolate_uniform<T: Scalar>(values: &[T], grid: &Grid1D, x: f64) -> T {
    let Some((start, w)) = stencil(grid, x) else {
        return T::zero();
    };
    let n = values.len() as i64;
    let mut acc = T::zero();
    for (o, &wo) in w.iter().enumerate() {
        let i = start + o as i64;
        if (0..n).contains(&i) && wo != 0.0 {
            acc = acc + values[i as usize] * wo;
        }
    }
    acc
}

/// Lagrange weights for arbitrary distinct `nodes` at `x`.
pub(crate) fn lagrange_weights(nodes: &[f64], x: f64) -> Vec<f64> {
    nodes
        .iter()
        .enumerate()
        .map(|(a, &xa)| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(b, _)| b != a)
                .fold(1.0, |acc, (_, &xb)| acc * (x - xb) / (xa - xb))
        })
        .collect()
}
