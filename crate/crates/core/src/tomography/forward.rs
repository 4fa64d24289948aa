//! Forward tomographic transforms.
//!
//! The kernel `δ(X − μq − νp)` is never discretized. Each slice is obtained
//! from the characteristic function along its ray, `χ(kμ, kν)`, followed by a
//! 1-D Fourier inversion `W(X) = (1/2π) ∫ exp(−ikX) χ(kμ, kν) dk`. Only
//! `k ≥ 0` is computed; the negative half follows from `χ(−k) = conj χ(k)`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::field::{DeltaSlice, GaussianTomogram, Ray, TomogramField, TomogramSlice};
use crate::error::{Error, Result};
use crate::grids::{ChirpPlan, Grid1D};
use crate::states::{
    check_leakage, density_from_wavefunction, ClassicalState, DensityMatrix, GaussianParams,
    PhaseSpaceField, PointState, ShiftedDiagonal, WaveFunction,
};

/// Largest ratio of a slice's boundary value to its peak before the X grid
/// is declared too small.
pub const EDGE_TOL: f64 = 1e-6;

/// `σ_XX(μ, ν) = μ²σqq + ν²σpp + 2μνσqp`.
pub fn sigma_xx(g: &GaussianTomogram, ray: &Ray) -> f64 {
    g.sigma_xx(ray)
}

/// Normal density in `X` with mean `μq̄ + νp̄` and variance `σ_XX(μ, ν)`.
pub fn gaussian_tomogram_eval(g: &GaussianTomogram, ray: &Ray, x: f64) -> f64 {
    g.eval(ray, x)
}

/// Output of the classical transform: sampled slices, or the analytic delta
/// descriptors of a point state.
#[derive(Clone, Debug, PartialEq)]
pub enum ClassicalTomogram {
    Sampled(TomogramField),
    Singular(Vec<DeltaSlice>),
}

pub fn radon_classical(state: &ClassicalState, rays: &[Ray], xgrid: &Grid1D) -> Result<ClassicalTomogram> {
    Ok(match state {
        ClassicalState::Field(f) => ClassicalTomogram::Sampled(radon_phase_field(f, rays, xgrid)?),
        ClassicalState::Gaussian(p) => ClassicalTomogram::Sampled(radon_gaussian(p, rays, xgrid)?),
        ClassicalState::Point(p) => ClassicalTomogram::Singular(radon_point(p, rays)?),
    })
}

/// Samples the analytic Gaussian tomogram on every ray.
pub fn radon_gaussian(params: &GaussianParams, rays: &[Ray], xgrid: &Grid1D) -> Result<TomogramField> {
    params.validate()?;
    let g = GaussianTomogram::new(*params, 0.0);
    let slices = rays
        .iter()
        .map(|ray| {
            let ray = Ray::new(ray.mu, ray.nu)?;
            let values: Vec<f64> = xgrid.points().map(|x| g.eval(&ray, x)).collect();
            check_edges(&values, xgrid)?;
            TomogramSlice::new(ray, *xgrid, values)
        })
        .collect::<Result<Vec<_>>>()?;
    TomogramField::new(slices, 0.0)
}

/// Delta slice at `X = μq̄ + νp̄` for each ray.
pub fn radon_point(point: &PointState, rays: &[Ray]) -> Result<Vec<DeltaSlice>> {
    rays.iter()
        .map(|r| {
            let ray = Ray::new(r.mu, r.nu)?;
            Ok(DeltaSlice { ray, location: ray.mu * point.q + ray.nu * point.p })
        })
        .collect()
}

/// Half-band frequency grid for a slice: spacing `2π/(n·dX)`, strictly below `kmax`.
fn half_band(xgrid: &Grid1D, kmax: f64) -> (f64, usize) {
    let dk = 2.0 * PI / (xgrid.len() as f64 * xgrid.step());
    let count = ((kmax / dk) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (dk, count)
}

/// `W(X) = (dk/2π)·[2 Re Σ_m χ_m exp(−i k_m X) − χ_0]` for `k_m = m·dk`.
pub(crate) fn slice_from_half_spectrum(chi: &[C64], dk: f64, xgrid: &Grid1D) -> Vec<f64> {
    let plan = ChirpPlan::new(chi.len(), 0.0, dk, -xgrid.min(), -xgrid.step(), xgrid.len());
    plan.apply(chi)
        .into_iter()
        .map(|s| dk / (2.0 * PI) * (2.0 * s.re - chi[0].re))
        .collect()
}

fn check_edges(values: &[f64], xgrid: &Grid1D) -> Result<()> {
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let edge = values[0].abs().max(values[values.len() - 1].abs());
    if edge > EDGE_TOL * peak {
        return Err(Error::XGridTooSmall {
            needed: xgrid.min().abs().max(xgrid.max().abs()) * (1.0 + edge / peak.max(f64::MIN_POSITIVE)),
            min: xgrid.min(),
            max: xgrid.max(),
        });
    }
    Ok(())
}

/// Bounding box `(qmin, qmax, pmin, pmax)` of cells above `1e-13` of the peak.
fn support_box(f: &PhaseSpaceField) -> (f64, f64, f64, f64) {
    let v = f.values();
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let thresh = 1e-13 * peak;
    let g = f.grid();
    let (mut qi, mut qa, mut pi, mut pa) = (usize::MAX, 0, usize::MAX, 0);
    for j in 0..v.ncols() {
        for i in 0..v.nrows() {
            if v[(i, j)].abs() > thresh {
                qi = qi.min(i);
                qa = qa.max(i);
                pi = pi.min(j);
                pa = pa.max(j);
            }
        }
    }
    if qi == usize::MAX {
        return (0.0, 0.0, 0.0, 0.0);
    }
    (g.q.point(qi), g.q.point(qa), g.p.point(pi), g.p.point(pa))
}

/// Classical tomogram of a sampled density through the Fourier-slice route.
///
/// `χ(kμ, kν)` is the 2-D trapezoid sum, evaluated as a chirp-z transform
/// over `p` for every row followed by a direct sum over `q`.
pub fn radon_phase_field(f: &PhaseSpaceField, rays: &[Ray], xgrid: &Grid1D) -> Result<TomogramField> {
    let (q0, q1, p0, p1) = support_box(f);
    let g = *f.grid();
    let wq = g.q.trapezoid_weights();
    let wp = g.p.trapezoid_weights();
    let qs = g.q.to_vec();
    // rows pre-weighted by the p quadrature weights
    let rows: Vec<Vec<C64>> = (0..qs.len())
        .map(|i| (0..wp.len()).map(|j| C64::new(f.get(i, j) * wp[j], 0.0)).collect())
        .collect();

    let slices = rays
        .par_iter()
        .map(|r| {
            let ray = Ray::new(r.mu, r.nu)?;
            let corners = [
                ray.mu * q0 + ray.nu * p0,
                ray.mu * q0 + ray.nu * p1,
                ray.mu * q1 + ray.nu * p0,
                ray.mu * q1 + ray.nu * p1,
            ];
            let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo < xgrid.min() || hi > xgrid.max() {
                return Err(Error::XGridTooSmall {
                    needed: lo.abs().max(hi.abs()),
                    min: xgrid.min(),
                    max: xgrid.max(),
                });
            }
            let mut kmax = PI / xgrid.step();
            if ray.mu != 0.0 {
                kmax = kmax.min(PI / (ray.mu.abs() * g.q.step()));
            }
            if ray.nu != 0.0 {
                kmax = kmax.min(PI / (ray.nu.abs() * g.p.step()));
            }
            let (dk, count) = half_band(xgrid, kmax);
            let plan = ChirpPlan::new(wp.len(), g.p.min(), g.p.step(), 0.0, dk * ray.nu, count);
            let mut chi = vec![C64::new(0.0, 0.0); count];
            for (i, row) in rows.iter().enumerate() {
                if row.iter().all(|v| v.re == 0.0) {
                    continue;
                }
                let inner = plan.apply(row);
                let step = C64::cis(dk * ray.mu * qs[i]);
                let mut phase = C64::new(wq[i], 0.0);
                for (m, c) in chi.iter_mut().enumerate() {
                    if m % 64 == 0 {
                        phase = C64::cis(m as f64 * dk * ray.mu * qs[i]) * wq[i];
                    }
                    *c += inner[m] * phase;
                    phase *= step;
                }
            }
            let values = slice_from_half_spectrum(&chi, dk, xgrid);
            check_edges(&values, xgrid)?;
            TomogramSlice::new(ray, *xgrid, values)
        })
        .collect::<Result<Vec<_>>>()?;
    TomogramField::new(slices, 0.0)
}

/// Quantum tomogram `W(X; μ, ν) = Tr[ρ δ(X − μq̂ − νp̂)]`.
///
/// For `ν ≠ 0` the slice is the Fourier inversion of
/// `χ(kμ, kν) = exp(ik²μν/2) ∫ ρ(q + kν, q) exp(ikμq) dq`; for `ν = 0` it is
/// the closed form `ρ(X/μ, X/μ)/|μ|`.
pub fn tomogram_quantum(rho: &DensityMatrix, rays: &[Ray], xgrid: &Grid1D) -> Result<TomogramField> {
    check_leakage(rho)?;
    let grid = *rho.grid();
    let qs = grid.to_vec();
    let w = grid.trapezoid_weights();
    let diag = rho.diagonal();
    let reader = ShiftedDiagonal::new(rho);

    let slices = rays
        .par_iter()
        .map(|r| {
            let ray = Ray::new(r.mu, r.nu)?;
            let values = if ray.nu == 0.0 {
                xgrid
                    .points()
                    .map(|x| crate::grids::interpolate_uniform(&diag, &grid, x / ray.mu) / ray.mu.abs())
                    .collect()
            } else {
                let mut kmax = (PI / xgrid.step()).min(grid.span() / ray.nu.abs());
                if ray.mu != 0.0 {
                    kmax = kmax.min(PI / (ray.mu.abs() * grid.step()));
                }
                let (dk, count) = half_band(xgrid, kmax);
                let mut shifted = vec![C64::new(0.0, 0.0); qs.len()];
                let one_sided = |k: f64, shifted: &mut [C64]| -> C64 {
                    reader.fill(k * ray.nu, shifted);
                    let sum: C64 = qs
                        .iter()
                        .zip(shifted.iter().zip(&w))
                        .map(|(&q, (&v, &wq))| v * C64::cis(k * ray.mu * q) * wq)
                        .sum();
                    sum * C64::cis(0.5 * k * k * ray.mu * ray.nu)
                };
                let chi: Vec<C64> = (0..count)
                    .map(|m| {
                        let k = m as f64 * dk;
                        let fwd = one_sided(k, &mut shifted);
                        let back = one_sided(-k, &mut shifted);
                        0.5 * (fwd + back.conj())
                    })
                    .collect();
                slice_from_half_spectrum(&chi, dk, xgrid)
            };
            check_edges(&values, xgrid)?;
            TomogramSlice::new(ray, *xgrid, values)
        })
        .collect::<Result<Vec<_>>>()?;
    TomogramField::new(slices, 0.0)
}

/// Quantum tomogram of a pure state.
pub fn tomogram_wavefunction(psi: &WaveFunction, rays: &[Ray], xgrid: &Grid1D) -> Result<TomogramField> {
    tomogram_quantum(&density_from_wavefunction(psi), rays, xgrid)
}
