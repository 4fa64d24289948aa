//! Classical phase-space states, quantum states, and their characteristic
//! functions.
//!
//! Conventions: `m = ħ = 1`, `[q̂, p̂] = i`, `p̂ = -i d/dq`. The phase-space
//! field stores `f(q_i, p_j)` with rows indexed by position.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::{lagrange6, trapezoid, Grid1D, Grid2D};

/// Normalization tolerance for sampled Gaussian states.
pub const NORM_TOL: f64 = 1e-6;
/// Probability allowed in the outer guard band of a position grid.
pub const LEAK_TOL: f64 = 1e-6;

/// First and second moments of a Gaussian state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    #[serde(rename = "qbar")]
    pub mean_q: f64,
    #[serde(rename = "pbar")]
    pub mean_p: f64,
    #[serde(rename = "sqq")]
    pub sqq: f64,
    #[serde(rename = "spp")]
    pub spp: f64,
    #[serde(rename = "sqp")]
    pub sqp: f64,
}

impl GaussianParams {
    pub fn new(mean_q: f64, mean_p: f64, sqq: f64, spp: f64, sqp: f64) -> Result<Self> {
        let g = Self { mean_q, mean_p, sqq, spp, sqp };
        g.validate()?;
        Ok(g)
    }

    /// Minimum-uncertainty vacuum: `(0, 0, ½, ½, 0)`.
    pub fn vacuum() -> Self {
        Self { mean_q: 0.0, mean_p: 0.0, sqq: 0.5, spp: 0.5, sqp: 0.0 }
    }

    /// Centered, uncorrelated Gaussian with equal variances.
    pub fn isotropic(variance: f64) -> Result<Self> {
        Self::new(0.0, 0.0, variance, variance, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.mean_q, self.mean_p, self.sqq, self.spp, self.sqp]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.sqq <= 0.0 || self.spp <= 0.0 || self.det() <= 0.0 {
            return Err(Error::CovarianceNotPositiveDefinite {
                sqq: self.sqq,
                spp: self.spp,
                sqp: self.sqp,
            });
        }
        Ok(())
    }

    /// `σqq·σpp − σqp²`.
    pub fn det(&self) -> f64 {
        self.sqq * self.spp - self.sqp * self.sqp
    }

    /// Bivariate normal density at `(q, p)`.
    pub fn density(&self, q: f64, p: f64) -> f64 {
        let d = self.det();
        let dq = q - self.mean_q;
        let dp = p - self.mean_p;
        let quad = (self.spp * dq * dq - 2.0 * self.sqp * dq * dp + self.sqq * dp * dp) / d;
        (-0.5 * quad).exp() / (2.0 * PI * d.sqrt())
    }

    /// `⟨exp(i(k1 q + k2 p))⟩` in closed form.
    pub fn characteristic(&self, k1: f64, k2: f64) -> C64 {
        let var = k1 * k1 * self.sqq + 2.0 * k1 * k2 * self.sqp + k2 * k2 * self.spp;
        C64::from_polar((-0.5 * var).exp(), k1 * self.mean_q + k2 * self.mean_p)
    }
}

/// Fluctuation-free classical state: a point in phase space. Never sampled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointState {
    #[serde(rename = "qbar")]
    pub q: f64,
    #[serde(rename = "pbar")]
    pub p: f64,
}

impl PointState {
    pub fn new(q: f64, p: f64) -> Self {
        Self { q, p }
    }
}

/// Sampled classical density `f(q, p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceField {
    grid: Grid2D,
    values: DMatrix<f64>,
}

impl PhaseSpaceField {
    pub fn new(grid: Grid2D, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != grid.q.len() || values.ncols() != grid.p.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.q.len() * grid.p.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let qs = grid.q.to_vec();
        let ps = grid.p.to_vec();
        let values = DMatrix::from_fn(qs.len(), ps.len(), |i, j| f(qs[i], ps[j]));
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// 2-D trapezoid integral of `g(q, p)·f(q, p)`.
    pub fn integrate_with(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        let wq = self.grid.q.trapezoid_weights();
        let wp = self.grid.p.trapezoid_weights();
        let qs = self.grid.q.to_vec();
        let ps = self.grid.p.to_vec();
        let mut total = 0.0;
        for j in 0..ps.len() {
            let col = self.values.column(j);
            let mut acc = 0.0;
            for i in 0..qs.len() {
                acc += wq[i] * col[i] * g(qs[i], ps[j]);
            }
            total += wp[j] * acc;
        }
        total
    }

    pub fn integral(&self) -> f64 {
        self.integrate_with(|_, _| 1.0)
    }

    /// Means and covariances by quadrature: `(q̄, p̄, σqq, σpp, σqp)`.
    pub fn moments(&self) -> GaussianParams {
        let norm = self.integral();
        let mq = self.integrate_with(|q, _| q) / norm;
        let mp = self.integrate_with(|_, p| p) / norm;
        GaussianParams {
            mean_q: mq,
            mean_p: mp,
            sqq: self.integrate_with(|q, _| (q - mq) * (q - mq)) / norm,
            spp: self.integrate_with(|_, p| (p - mp) * (p - mp)) / norm,
            sqp: self.integrate_with(|q, p| (q - mq) * (p - mp)) / norm,
        }
    }

    /// Position marginal `∫ f(q, p) dp` on the q grid.
    pub fn position_marginal(&self) -> Vec<f64> {
        let h = self.grid.p.step();
        (0..self.values.nrows())
            .map(|i| {
                let row: Vec<f64> = self.values.row(i).iter().copied().collect();
                trapezoid(&row, h)
            })
            .collect()
    }

    /// Momentum marginal `∫ f(q, p) dq` on the p grid.
    pub fn momentum_marginal(&self) -> Vec<f64> {
        let h = self.grid.q.step();
        (0..self.values.ncols())
            .map(|j| trapezoid(self.values.column(j).as_slice(), h))
            .collect()
    }

    /// Nonnegativity and normalization checks.
    pub fn check_invariants(&self, tol: f64) -> (bool, bool) {
        let nonneg = self.values.iter().all(|&v| v >= -tol);
        let norm = (self.integral() - 1.0).abs() <= tol;
        (nonneg, norm)
    }
}

/// Pure state `ψ(q)` sampled on a position grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    grid: Grid1D,
    amplitudes: Vec<C64>,
}

impl WaveFunction {
    /// Checks length and unit norm (within [`NORM_TOL`]).
    pub fn new(grid: Grid1D, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: amplitudes.len() });
        }
        let wf = Self { grid, amplitudes };
        let norm = wf.norm_squared();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::GridTooSmall { mass: (1.0 - norm).abs() });
        }
        Ok(wf)
    }

    pub(crate) fn from_parts(grid: Grid1D, amplitudes: Vec<C64>) -> Self {
        Self { grid, amplitudes }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_squared(&self) -> f64 {
        let dens: Vec<f64> = self.amplitudes.iter().map(|a| a.norm_sqr()).collect();
        trapezoid(&dens, self.grid.step())
    }

    /// Position density `|ψ(q)|²`.
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨q^n⟩` by quadrature.
    pub fn position_moment(&self, n: i32) -> f64 {
        let vals: Vec<f64> = self
            .grid
            .points()
            .zip(&self.amplitudes)
            .map(|(q, a)| q.powi(n) * a.norm_sqr())
            .collect();
        trapezoid(&vals, self.grid.step())
    }

    /// Momentum-space density `|φ(p)|²` with `φ(p) = (2π)^{-1/2} ∫ψ(q) e^{-ipq} dq`.
    pub fn momentum_density(&self, pgrid: &Grid1D) -> Vec<f64> {
        let field = crate::grids::SampledField1D::new(self.grid, self.amplitudes.clone())
            .expect("grid and amplitudes agree");
        crate::grids::dft_onto(&field, crate::grids::Sign::Minus, pgrid)
            .values()
            .iter()
            .map(|z| z.norm_sqr() / (2.0 * PI))
            .collect()
    }

    /// Probability within the outer `fraction` of the grid on each side.
    pub fn guard_mass(&self, fraction: f64) -> f64 {
        guard_mass(&self.density(), &self.grid, fraction)
    }
}

pub(crate) fn guard_mass(density: &[f64], grid: &Grid1D, fraction: f64) -> f64 {
    let n = density.len();
    let band = ((n as f64 * fraction).ceil() as usize).clamp(3, n / 2);
    let h = grid.step();
    density[..band].iter().chain(&density[n - band..]).sum::<f64>() * h
}

/// Density matrix `ρ(q_i, q_j)` on a position grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    grid: Grid1D,
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    /// Checks shape, Hermiticity (to 1e-10, then enforced exactly) and unit trace.
    pub fn new(grid: Grid1D, entries: DMatrix<C64>) -> Result<Self> {
        let n = grid.len();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::ShapeMismatch { expected: n * n, got: entries.len() });
        }
        let mut rho = Self { grid, entries };
        let scale = rho.entries.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let skew = (&rho.entries - rho.entries.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if skew > 1e-10 * scale.max(1.0) {
            return Err(Error::Parse(format!("density matrix not Hermitian (deviation {skew:.2e})")));
        }
        rho.hermitize();
        let tr = rho.trace();
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(Error::GridTooSmall { mass: (1.0 - tr).abs() });
        }
        Ok(rho)
    }

    pub(crate) fn from_parts(grid: Grid1D, entries: DMatrix<C64>) -> Self {
        let mut rho = Self { grid, entries };
        rho.hermitize();
        rho
    }

    fn hermitize(&mut self) {
        let n = self.entries.nrows();
        for i in 0..n {
            let d = self.entries[(i, i)].re;
            self.entries[(i, i)] = C64::new(d, 0.0);
            for j in (i + 1)..n {
                let avg = 0.5 * (self.entries[(i, j)] + self.entries[(j, i)].conj());
                self.entries[(i, j)] = avg;
                self.entries[(j, i)] = avg.conj();
            }
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.entries.nrows()).map(|i| self.entries[(i, i)].re).collect()
    }

    /// Trapezoid quadrature of the diagonal.
    pub fn trace(&self) -> f64 {
        trapezoid(&self.diagonal(), self.grid.step())
    }

    /// Eigenvalues of the discretized operator `ρ·step`, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let op = &self.entries * C64::new(self.grid.step(), 0.0);
        let mut ev: Vec<f64> = SymmetricEigen::new(op).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `Tr[ρ σ]` by quadrature over both indices.
    pub fn overlap(&self, other: &DensityMatrix) -> f64 {
        let h = self.grid.step();
        self.entries.component_mul(&other.entries.transpose()).sum().re * h * h
    }

    pub fn guard_mass(&self, fraction: f64) -> f64 {
        guard_mass(&self.diagonal(), &self.grid, fraction)
    }
}

/// Classical states in the three supported representations.
#[derive(Clone, Debug, PartialEq)]
pub enum ClassicalState {
    Field(PhaseSpaceField),
    Point(PointState),
    Gaussian(GaussianParams),
}

/// Samples the bivariate normal density with the given moments.
pub fn gaussian_phase_density(params: &GaussianParams, grid: &Grid2D) -> Result<PhaseSpaceField> {
    params.validate()?;
    let f = PhaseSpaceField::from_fn(*grid, |q, p| params.density(q, p));
    let lost = 1.0 - f.integral();
    if lost.abs() > NORM_TOL {
        return Err(Error::GridTooSmall { mass: lost });
    }
    Ok(f)
}

/// Minimum-uncertainty Gaussian wave function
/// `ψ(q) = (2πσqq)^{-1/4} exp(-(q-q̄)²/(4σqq) + i p̄ q)`.
pub fn gaussian_wavefunction(params: &GaussianParams, grid: &Grid1D) -> Result<WaveFunction> {
    params.validate()?;
    let product = params.sqq * params.spp;
    if params.sqp.abs() > 1e-12 || (product - 0.25).abs() > 1e-12 {
        return Err(Error::NotMinimumUncertainty { product, sqp: params.sqp });
    }
    let amp = (2.0 * PI * params.sqq).powf(-0.25);
    let amplitudes = grid
        .points()
        .map(|q| {
            let d = q - params.mean_q;
            C64::from_polar(amp * (-d * d / (4.0 * params.sqq)).exp(), params.mean_p * q)
        })
        .collect();
    let wf = WaveFunction::from_parts(*grid, amplitudes);
    let norm = wf.norm_squared();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::GridTooSmall { mass: (1.0 - norm).abs() });
    }
    Ok(wf)
}

/// Rank-one projector `ρ(q, q') = ψ(q)·conj(ψ(q'))`.
pub fn density_from_wavefunction(psi: &WaveFunction) -> DensityMatrix {
    let a = psi.amplitudes();
    let n = a.len();
    let entries = DMatrix::from_fn(n, n, |i, j| a[i] * a[j].conj());
    DensityMatrix { grid: *psi.grid(), entries }
}

/// `χ(k1, k2) = ∫∫ exp(i(k1 q + k2 p)) f(q, p) dq dp` by 2-D trapezoid quadrature.
pub fn classical_characteristic(f: &PhaseSpaceField, k1: f64, k2: f64) -> C64 {
    let g = f.grid();
    let wq = g.q.trapezoid_weights();
    let wp = g.p.trapezoid_weights();
    let row_phase: Vec<C64> = g.p.points().zip(&wp).map(|(p, &w)| C64::cis(k2 * p) * w).collect();
    let mut total = C64::new(0.0, 0.0);
    for (i, q) in g.q.points().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (j, ph) in row_phase.iter().enumerate() {
            acc += ph * f.values[(i, j)];
        }
        total += acc * C64::cis(k1 * q) * wq[i];
    }
    total
}

/// Characteristic function of a point state: `exp(i(k1 q̄ + k2 p̄))`.
pub fn point_characteristic(point: &PointState, k1: f64, k2: f64) -> C64 {
    C64::cis(k1 * point.q + k2 * point.p)
}

/// Reads `ρ(q_j + shift, q_j)` column by column with sixth-order interpolation
/// along the first index; entries beyond the grid are zero.
pub(crate) struct ShiftedDiagonal<'a> {
    rho: &'a DensityMatrix,
}

impl<'a> ShiftedDiagonal<'a> {
    pub(crate) fn new(rho: &'a DensityMatrix) -> Self {
        Self { rho }
    }

    /// Fills `out[j] = ρ(q_j + shift, q_j)`.
    pub(crate) fn fill(&self, shift: f64, out: &mut [C64]) {
        let n = self.rho.entries.nrows() as i64;
        let u = shift / self.rho.grid.step();
        let base = u.floor();
        let w = lagrange6(u - base);
        let base = base as i64 - 2;
        for (j, slot) in out.iter_mut().enumerate() {
            let col = self.rho.entries.column(j);
            let mut acc = C64::new(0.0, 0.0);
            for (o, &wo) in w.iter().enumerate() {
                let i = j as i64 + base + o as i64;
                if (0..n).contains(&i) && wo != 0.0 {
                    acc += col[i as usize] * wo;
                }
            }
            *slot = acc;
        }
    }
}

/// Shared leakage guard for position-grid quantum states.
pub(crate) fn check_leakage(rho: &DensityMatrix) -> Result<()> {
    let mass = rho.guard_mass(0.02);
    if mass > LEAK_TOL {
        return Err(Error::GridLeakage { mass });
    }
    Ok(())
}

/// `χ(k1, k2) = Tr[ρ exp(i(k1 q̂ + k2 p̂))]`.
///
/// With `[q̂, p̂] = i`, `exp(i(k1 q̂ + k2 p̂)) = exp(i k1 q̂) exp(i k2 p̂) exp(i k1 k2 / 2)`
/// and `exp(i k2 p̂)` translates by `k2`, so
/// `χ = exp(i k1 k2 / 2) ∫ ρ(q + k2, q) exp(i k1 q) dq`.
pub fn quantum_characteristic(rho: &DensityMatrix, k1: f64, k2: f64) -> Result<C64> {
    let span = rho.grid.span();
    if k2.abs() > span {
        return Err(Error::ArgumentOutsideGrid { shift: k2, span });
    }
    if k2 != 0.0 {
        check_leakage(rho)?;
    }
    let reader = ShiftedDiagonal::new(rho);
    let mut buf = vec![C64::new(0.0, 0.0); rho.grid.len()];
    let w = rho.grid.trapezoid_weights();
    let one_sided = |k1: f64, k2: f64, buf: &mut [C64]| -> C64 {
        reader.fill(k2, buf);
        let sum: C64 = rho
            .grid
            .points()
            .zip(buf.iter().zip(&w))
            .map(|(q, (&r, &wq))| r * C64::cis(k1 * q) * wq)
            .sum();
        sum * C64::cis(0.5 * k1 * k2)
    };
    // average with the mirrored evaluation so χ(-k) = conj χ(k) holds exactly
    let forward = one_sided(k1, k2, &mut buf);
    let mirrored = one_sided(-k1, -k2, &mut buf);
    Ok(0.5 * (forward + mirrored.conj()))
}
