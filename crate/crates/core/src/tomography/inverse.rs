//! Inverse transforms from unit-circle tomograms.
//!
//! Both inversions use the homogeneity of tomograms to restrict the
//! `(μ, ν)` integral to slices on the unit circle.
//!
//! Phase space: filtered backprojection,
//! `f(q, p) = ∫₀^π Q_θ(q cosθ + p sinθ) dθ`, where `Q_θ` is the slice filtered
//! by the band-limited ramp `|k|` (cut at the slice Nyquist frequency
//! `π/dX`). The ramp is applied as a spatial convolution with the kernel
//! `h(0) = 1/(4dX²)`, `h(m odd) = −1/(m²π²dX²)`, `h(m even) = 0`, which keeps
//! the zero-frequency response exact.
//!
//! Density operator: with `[q̂, p̂] = i`,
//! `exp(−i(μq̂ + νp̂)) = exp(−iμq̂) exp(−iνp̂) exp(iμν/2)` and
//! `⟨q| exp(−iνp̂) |q'⟩ = δ(q − ν − q')`, so
//! `⟨q| exp(i(X − μq̂ − νp̂)) |q'⟩ = exp(iX) δ(ν − (q − q')) exp(−iμ(q + q')/2)`.
//! Substituting into the operator-valued inversion integral and carrying out
//! the `ν` integral gives
//! `ρ(q, q') = (1/2π) ∫ dμ ∫ dX W(X, μ, q − q') exp(i(X − μ(q + q')/2))`.
//! The inner `X` integral is the characteristic function `χ(μ, q − q')`, read
//! from the unit-circle slices through homogeneity, so
//! `ρ(x + y/2, x − y/2) = (1/2π) ∫ χ(μ, y) exp(−iμx) dμ`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::field::{angular_nodes, angular_stencil, fold_direction, AngularNode, TomogramField};
use crate::error::{Error, Result};
use crate::grids::{interpolate_uniform, ChirpPlan, Grid1D, Grid2D};
use crate::states::{DensityMatrix, PhaseSpaceField};

/// Minimum number of unit-circle angles accepted by the inversions.
pub const MIN_ANGLES: usize = 64;
/// Negative values above `-CLIP_TOL` in a reconstructed density are set to zero.
pub const CLIP_TOL: f64 = 1e-6;

fn unit_nodes(w: &TomogramField) -> Result<(Vec<AngularNode>, Grid1D)> {
    let xgrid = w.common_xgrid()?;
    let nodes = angular_nodes(w.slices());
    if nodes.len() < MIN_ANGLES {
        return Err(Error::InsufficientAngularSampling { got: nodes.len(), needed: MIN_ANGLES });
    }
    for pair in nodes.windows(2) {
        if pair[1].theta - pair[0].theta < 1e-12 {
            return Err(Error::DuplicateRay {
                mu: pair[1].theta.cos(),
                nu: pair[1].theta.sin(),
            });
        }
    }
    Ok((nodes, xgrid))
}

/// Periodic trapezoid weights over `θ ∈ [0, π)`.
fn angular_weights(nodes: &[AngularNode]) -> Vec<f64> {
    let k = nodes.len();
    (0..k)
        .map(|i| {
            let next = if i + 1 == k { nodes[0].theta + PI } else { nodes[i + 1].theta };
            let prev = if i == 0 { nodes[k - 1].theta - PI } else { nodes[i - 1].theta };
            0.5 * (next - prev)
        })
        .collect()
}

/// Slice values along the node direction `(cosθ, sinθ)`.
fn oriented_values(w: &TomogramField, node: &AngularNode, xgrid: &Grid1D) -> Vec<f64> {
    let slice = &w.slices()[node.slice];
    if node.orient > 0.0 {
        slice.values().to_vec()
    } else {
        xgrid.points().map(|x| slice.interpolate(-x)).collect()
    }
}

/// Inverse Radon transform onto `grid` by filtered backprojection.
pub fn inverse_radon(w: &TomogramField, grid: &Grid2D) -> Result<PhaseSpaceField> {
    let (nodes, xgrid) = unit_nodes(w)?;
    let weights = angular_weights(&nodes);
    let tau = xgrid.step();
    let n_in = xgrid.len() as i64;

    let reach = [grid.q.min(), grid.q.max()]
        .iter()
        .flat_map(|&q| [grid.p.min(), grid.p.max()].map(|p| q.hypot(p)))
        .fold(0.0f64, f64::max);
    let lo = ((-reach - xgrid.min()) / tau).floor() as i64 - 4;
    let hi = ((reach - xgrid.min()) / tau).ceil() as i64 + 4;
    let qgrid = Grid1D::new(xgrid.min() + lo as f64 * tau, xgrid.min() + hi as f64 * tau, (hi - lo + 1) as usize)?;

    let c0 = 1.0 / (4.0 * tau * tau);
    let codd = -1.0 / (PI * PI * tau * tau);
    let filtered: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|node| {
            let p = oriented_values(w, node, &xgrid);
            (lo..=hi)
                .map(|n| {
                    let mut acc = if (0..n_in).contains(&n) { c0 * p[n as usize] } else { 0.0 };
                    // only odd offsets n − k contribute
                    let first = if n.rem_euclid(2) == 1 { 0 } else { 1 };
                    let mut k = first;
                    while k < n_in {
                        let m = (n - k) as f64;
                        acc += codd * p[k as usize] / (m * m);
                        k += 2;
                    }
                    tau * acc
                })
                .collect()
        })
        .collect();

    let trig: Vec<(f64, f64)> = nodes.iter().map(|n| (n.theta.cos(), n.theta.sin())).collect();
    let ps = grid.p.to_vec();
    let columns: Vec<Vec<f64>> = ps
        .par_iter()
        .map(|&p| {
            grid.q
                .points()
                .map(|q| {
                    let mut f = 0.0;
                    for ((qv, &(c, s)), &wt) in filtered.iter().zip(&trig).zip(&weights) {
                        f += wt * interpolate_uniform(qv, &qgrid, q * c + p * s);
                    }
                    if (-CLIP_TOL..0.0).contains(&f) {
                        0.0
                    } else {
                        f
                    }
                })
                .collect()
        })
        .collect();
    let values = DMatrix::from_fn(grid.q.len(), grid.p.len(), |i, j| columns[j][i]);
    PhaseSpaceField::new(*grid, values)
}

/// Characteristic function `χ(k1, k2)` tabulated on polar rays from the
/// unit-circle slices of a tomogram, interpolated in `k` (sixth order) and
/// angle (fourth order).
pub struct PolarCharacteristic {
    nodes: Vec<AngularNode>,
    kgrid: Grid1D,
    table: Vec<Vec<C64>>,
}

impl PolarCharacteristic {
    pub fn new(w: &TomogramField) -> Result<Self> {
        let (nodes, xgrid) = unit_nodes(w)?;
        let n = xgrid.len();
        let len = (16 * n).next_power_of_two();
        let dx = xgrid.step();
        let dk = 2.0 * PI / (len as f64 * dx);
        let count = ((PI / dx) / dk).floor() as usize + 1;
        let kgrid = Grid1D::new(0.0, (count - 1) as f64 * dk, count)?;
        let fft = FftPlanner::new().plan_fft_inverse(len);
        let table = nodes
            .iter()
            .map(|node| {
                let p = oriented_values(w, node, &xgrid);
                let mut buf = vec![C64::new(0.0, 0.0); len];
                for (b, v) in buf.iter_mut().zip(&p) {
                    *b = C64::new(*v, 0.0);
                }
                fft.process(&mut buf);
                (0..count)
                    .map(|m| buf[m] * C64::cis(m as f64 * dk * xgrid.min()) * dx)
                    .collect()
            })
            .collect();
        Ok(Self { nodes, kgrid, table })
    }

    /// Largest tabulated `|k|`.
    pub fn kmax(&self) -> f64 {
        self.kgrid.max()
    }

    fn along(&self, node: usize, k: f64) -> C64 {
        if k.abs() > self.kgrid.max() {
            return C64::new(0.0, 0.0);
        }
        let z = interpolate_uniform(&self.table[node], &self.kgrid, k.abs());
        if k < 0.0 {
            z.conj()
        } else {
            z
        }
    }

    /// `⟨exp(i(k1 q + k2 p))⟩`.
    pub fn eval(&self, k1: f64, k2: f64) -> C64 {
        if k1 == 0.0 && k2 == 0.0 {
            return C64::new(1.0, 0.0);
        }
        let (theta, c) = fold_direction(k1, k2);
        angular_stencil(&self.nodes, theta)
            .into_iter()
            .map(|(idx, odd, weight)| self.along(idx, if odd { -c } else { c }) * weight)
            .sum()
    }
}

/// Density reconstruction together with its smallest eigenvalue.
#[derive(Clone, Debug)]
pub struct DensityReconstruction {
    pub density: DensityMatrix,
    pub min_eigenvalue: f64,
}

/// Reconstructs `ρ(q, q')` on `qgrid` without the nonnegativity gate.
pub fn reconstruct_density_raw(w: &TomogramField, qgrid: &Grid1D) -> Result<DensityReconstruction> {
    let chi = PolarCharacteristic::new(w)?;
    let n = qgrid.len();
    let h = qgrid.step();
    let span = qgrid.span();
    let mu_max = (PI / h).min(chi.kmax());
    let dmu = PI / span;
    let half = (mu_max / dmu).floor() as i64;
    let mus: Vec<f64> = (-half..=half).map(|l| l as f64 * dmu).collect();
    let mu0 = mus[0];

    let offsets: Vec<i64> = (-(n as i64 - 1)..=(n as i64 - 1)).collect();
    let bands: Vec<(i64, Vec<C64>)> = offsets
        .par_iter()
        .map(|&m| {
            let y = m as f64 * h;
            let coeffs: Vec<C64> = mus.iter().map(|&mu| chi.eval(mu, y)).collect();
            let start = m.min(0).unsigned_abs() as usize;
            let count = n - m.unsigned_abs() as usize;
            // x_b = (q_{b+m} + q_b)/2 for b = start..start+count
            let x0 = qgrid.min() + (start as f64 + 0.5 * m as f64) * h;
            let plan = ChirpPlan::new(mus.len(), mu0, dmu, -x0, -h, count);
            let vals = plan.apply(&coeffs).into_iter().map(|z| z * dmu / (2.0 * PI)).collect();
            (m, vals)
        })
        .collect();

    let mut entries = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for (m, vals) in bands {
        let start = m.min(0).unsigned_abs() as usize;
        for (i, v) in vals.into_iter().enumerate() {
            let b = start + i;
            let a = (b as i64 + m) as usize;
            entries[(a, b)] = v;
        }
    }
    let density = DensityMatrix::from_parts(*qgrid, entries);
    let min_eigenvalue = density.min_eigenvalue();
    Ok(DensityReconstruction { density, min_eigenvalue })
}

/// Reconstructs the density operator and rejects results whose minimum
/// eigenvalue falls below `-tol`.
pub fn reconstruct_density(w: &TomogramField, qgrid: &Grid1D, tol: f64) -> Result<DensityMatrix> {
    let rec = reconstruct_density_raw(w, qgrid)?;
    if rec.min_eigenvalue < -tol {
        return Err(Error::NonPhysical { min_eigenvalue: rec.min_eigenvalue, tol });
    }
    Ok(rec.density)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{density_from_wavefunction, gaussian_phase_density, gaussian_wavefunction, GaussianParams};
    use crate::tomography::{radon_gaussian, tomogram_wavefunction, unit_circle_rays};

    #[test]
    fn gaussian_round_trip() {
        let params = GaussianParams::new(0.4, -0.3, 0.8, 0.6, 0.2).unwrap();
        let grid = Grid2D::square(6.0, 128).unwrap();
        let xgrid = Grid1D::symmetric(10.0, 512).unwrap();
        let w = radon_gaussian(&params, &unit_circle_rays(128), &xgrid).unwrap();
        let f = inverse_radon(&w, &grid).unwrap();
        let exact = gaussian_phase_density(&params, &grid).unwrap();
        let l1 = (f.values() - exact.values()).abs().sum() * grid.cell_area();
        assert!(l1 < 1e-3, "L1 {l1}");
        let m = f.moments();
        assert!((m.mean_q - 0.4).abs() < 1e-3 && (m.mean_p + 0.3).abs() < 1e-3);
        assert!((m.sqq - 0.8).abs() < 1e-3 && (m.spp - 0.6).abs() < 1e-3 && (m.sqp - 0.2).abs() < 1e-3);
    }

    #[test]
    fn too_few_angles() {
        let xgrid = Grid1D::symmetric(8.0, 128).unwrap();
        let w = radon_gaussian(&GaussianParams::vacuum(), &unit_circle_rays(32), &xgrid).unwrap();
        let grid = Grid2D::square(4.0, 32).unwrap();
        assert!(matches!(inverse_radon(&w, &grid), Err(Error::InsufficientAngularSampling { got: 32, .. })));
    }

    #[test]
    fn polar_characteristic_of_vacuum() {
        let xgrid = Grid1D::symmetric(8.0, 256).unwrap();
        let w = radon_gaussian(&GaussianParams::vacuum(), &unit_circle_rays(64), &xgrid).unwrap();
        let chi = PolarCharacteristic::new(&w).unwrap();
        for &(k1, k2) in &[(0.3, 0.0), (-1.0, 2.0), (1.5, -0.7), (0.0, -2.5)] {
            let exact = (-(k1 * k1 + k2 * k2) / 4.0f64).exp();
            assert!((chi.eval(k1, k2) - C64::new(exact, 0.0)).norm() < 1e-7);
        }
    }

    #[test]
    fn ground_state_density_reconstruction() {
        let qgrid = Grid1D::symmetric(7.0, 128).unwrap();
        let psi = gaussian_wavefunction(&GaussianParams::vacuum(), &qgrid).unwrap();
        let xgrid = Grid1D::symmetric(8.0, 256).unwrap();
        let w = tomogram_wavefunction(&psi, &unit_circle_rays(64), &xgrid).unwrap();
        let rho = reconstruct_density(&w, &qgrid, 1e-6).unwrap();
        let exact = density_from_wavefunction(&psi);
        assert!((rho.trace() - 1.0).abs() < 1e-3);
        assert!(rho.overlap(&exact) > 0.999, "fidelity {}", rho.overlap(&exact));
    }

    #[test]
    fn sub_heisenberg_gaussian_is_not_physical() {
        let qgrid = Grid1D::symmetric(7.0, 128).unwrap();
        let xgrid = Grid1D::symmetric(8.0, 256).unwrap();
        let params = GaussianParams::isotropic(0.4).unwrap();
        let w = radon_gaussian(&params, &unit_circle_rays(64), &xgrid).unwrap();
        let rec = reconstruct_density_raw(&w, &qgrid).unwrap();
        assert!(rec.min_eigenvalue < -1e-3, "{}", rec.min_eigenvalue);
        assert!(matches!(reconstruct_density(&w, &qgrid, 1e-6), Err(Error::NonPhysical { .. })));
    }
}
