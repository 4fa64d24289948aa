//! Free motion (`V = 0`, `m = ħ = 1`) in the classical, wave-function,
//! density-matrix and tomographic pictures, plus residuals of the
//! tomographic kinetic equations.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grids::{interpolate_uniform, Grid1D};
use crate::states::{
    guard_mass, ClassicalState, DensityMatrix, GaussianParams, PhaseSpaceField, PointState, WaveFunction,
};
use crate::tomography::{GaussianTomogram, Ray, TomogramField, TomogramSlice};

/// Mass a sheared field may lose across the grid boundary.
pub const SHEAR_LOSS_TOL: f64 = 1e-6;
/// Fraction of the grid on each side watched for aliasing.
pub const GUARD_FRACTION: f64 = 0.05;
/// Probability allowed inside the guard bands after evolution.
pub const GUARD_TOL: f64 = 1e-6;

/// `(q0, p0) = (q − p t, p)`.
pub fn integrals_of_motion(q: f64, p: f64, t: f64) -> (f64, f64) {
    (q - p * t, p)
}

/// Sheared moments of a Gaussian phase-space density.
pub fn evolve_gaussian(params: &GaussianParams, t: f64) -> GaussianParams {
    GaussianParams {
        mean_q: params.mean_q + params.mean_p * t,
        mean_p: params.mean_p,
        sqq: params.sqq + 2.0 * t * params.sqp + t * t * params.spp,
        spp: params.spp,
        sqp: params.sqp + t * params.spp,
    }
}

pub fn evolve_point(point: &PointState, t: f64) -> PointState {
    PointState::new(point.q + point.p * t, point.p)
}

/// `f(q, p, t) = f0(q − p t, p)` on the same grid.
pub fn evolve_phase_field(f0: &PhaseSpaceField, t: f64) -> Result<PhaseSpaceField> {
    if t == 0.0 {
        return Ok(f0.clone());
    }
    let grid = *f0.grid();
    let v = f0.values();
    let columns: Vec<Vec<f64>> = (0..grid.p.len())
        .into_par_iter()
        .map(|j| {
            let p = grid.p.point(j);
            let col: Vec<f64> = v.column(j).iter().copied().collect();
            grid.q.points().map(|q| interpolate_uniform(&col, &grid.q, q - p * t)).collect()
        })
        .collect();
    let values = DMatrix::from_fn(grid.q.len(), grid.p.len(), |i, j| columns[j][i]);
    let out = PhaseSpaceField::new(grid, values)?;
    let lost = (f0.integral() - out.integral()).abs();
    if lost > SHEAR_LOSS_TOL {
        return Err(Error::SupportLeavesGrid { mass: lost });
    }
    Ok(out)
}

pub fn evolve_classical(state: &ClassicalState, t: f64) -> Result<ClassicalState> {
    Ok(match state {
        ClassicalState::Field(f) => ClassicalState::Field(evolve_phase_field(f, t)?),
        ClassicalState::Point(p) => ClassicalState::Point(evolve_point(p, t)),
        ClassicalState::Gaussian(g) => ClassicalState::Gaussian(evolve_gaussian(g, t)),
    })
}

/// Unitary `exp(−i p̂² t / 2)` on a periodic position grid, applied by FFT.
struct FreePropagator {
    n: usize,
    phases: Vec<C64>,
    forward: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inverse: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl FreePropagator {
    fn new(grid: &Grid1D, t: f64) -> Self {
        let n = grid.len();
        let dk = 2.0 * PI / (n as f64 * grid.step());
        let phases = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                let k = m * dk;
                C64::cis(-0.5 * k * k * t)
            })
            .collect();
        let mut planner = FftPlanner::new();
        Self { n, phases, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    fn apply(&self, buf: &mut [C64]) {
        self.forward.process(buf);
        let scale = 1.0 / self.n as f64;
        for (b, ph) in buf.iter_mut().zip(&self.phases) {
            *b *= ph * scale;
        }
        self.inverse.process(buf);
    }
}

fn check_guard(density: &[f64], grid: &Grid1D) -> Result<()> {
    let mass = guard_mass(density, grid, GUARD_FRACTION);
    if mass > GUARD_TOL {
        return Err(Error::PacketLeavesGrid { mass });
    }
    Ok(())
}

/// Spectral free evolution of a wave function.
pub fn evolve_wavefunction(psi: &WaveFunction, t: f64) -> Result<WaveFunction> {
    if t == 0.0 {
        return Ok(psi.clone());
    }
    let grid = *psi.grid();
    let mut buf = psi.amplitudes().to_vec();
    FreePropagator::new(&grid, t).apply(&mut buf);
    let out = WaveFunction::from_parts(grid, buf);
    check_guard(&out.density(), &grid)?;
    Ok(out)
}

/// Free evolution by direct quadrature of `G(q, q', t) = (2πit)^{−1/2} exp(i(q − q')²/2t)`.
pub fn evolve_wavefunction_kernel(psi: &WaveFunction, t: f64) -> Result<WaveFunction> {
    if t == 0.0 {
        return Ok(psi.clone());
    }
    let grid = *psi.grid();
    let w = grid.trapezoid_weights();
    let pref = (C64::new(0.0, 2.0 * PI * t)).powf(-0.5);
    let amps: Vec<C64> = grid
        .to_vec()
        .par_iter()
        .map(|&q| {
            grid.points()
                .zip(psi.amplitudes())
                .zip(&w)
                .map(|((qp, a), wi)| C64::cis((q - qp) * (q - qp) / (2.0 * t)) * a * *wi)
                .sum::<C64>()
                * pref
        })
        .collect();
    let out = WaveFunction::from_parts(grid, amps);
    check_guard(&out.density(), &grid)?;
    Ok(out)
}

/// `ρ(t) = U(t) ρ U(t)†` with the spectral propagator.
pub fn evolve_density(rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    if t == 0.0 {
        return Ok(rho.clone());
    }
    let grid = *rho.grid();
    let n = grid.len();
    let prop = FreePropagator::new(&grid, t);
    let propagate_columns = |m: &DMatrix<C64>| -> DMatrix<C64> {
        let cols: Vec<Vec<C64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut buf: Vec<C64> = m.column(j).iter().copied().collect();
                prop.apply(&mut buf);
                buf
            })
            .collect();
        DMatrix::from_fn(n, n, |i, j| cols[j][i])
    };
    let half = propagate_columns(rho.entries());
    let full = propagate_columns(&half.adjoint()).adjoint();
    let out = DensityMatrix::from_parts(grid, full);
    check_guard(&out.diagonal(), &grid)?;
    Ok(out)
}

/// `W(X, μ, ν, t) = W0(X, μ, ν + μt)` on the stored ray set.
pub fn evolve_tomogram(w0: &TomogramField, t: f64) -> Result<TomogramField> {
    if t == 0.0 {
        return Ok(w0.clone());
    }
    let lookup = w0.lookup();
    let slices = w0
        .slices()
        .par_iter()
        .map(|s| {
            let shifted = Ray { mu: s.ray.mu, nu: s.ray.nu + s.ray.mu * t };
            let values = lookup.sample(&shifted, s.xgrid())?;
            TomogramSlice::new(s.ray, *s.xgrid(), values)
        })
        .collect::<Result<Vec<_>>>()?;
    TomogramField::new(slices, w0.time() + t)
}

/// Gaussian tomogram advanced by the classical shear of its moments.
pub fn evolve_gaussian_tomogram(g: &GaussianTomogram, t: f64) -> GaussianTomogram {
    GaussianTomogram::new(evolve_gaussian(&g.params, t), g.time + t)
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Smallest positive spacing between values of `key` among rays that agree in `other`.
fn neighbour_step(rays: &[Ray], key: fn(&Ray) -> f64, other: fn(&Ray) -> f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (i, a) in rays.iter().enumerate() {
        for b in &rays[i + 1..] {
            if same(other(a), other(b)) {
                let d = (key(a) - key(b)).abs();
                if d > 1e-12 && best.is_none_or(|h| d < h) {
                    best = Some(d);
                }
            }
        }
    }
    best
}

fn find_slice(w: &TomogramField, mu: f64, nu: f64) -> Option<&TomogramSlice> {
    w.slices().iter().find(|s| same(s.ray.mu, mu) && same(s.ray.nu, nu))
}

/// `max |∂W/∂t − μ ∂W/∂ν|` over a trajectory, by centered differences.
///
/// Time samples must be uniformly spaced; `dν` is the smallest ν spacing
/// between stored rays with equal μ. Every ray with both ν neighbours
/// contributes at interior times.
pub fn free_kinetic_residual(trajectory: &[TomogramField]) -> Result<f64> {
    if trajectory.len() < 3 {
        return Err(Error::InsufficientSampling(format!("{} time samples, need 3", trajectory.len())));
    }
    let dt = trajectory[1].time() - trajectory[0].time();
    for pair in trajectory.windows(2) {
        if !same(pair[1].time() - pair[0].time(), dt) || dt == 0.0 {
            return Err(Error::NonUniformTimes);
        }
    }
    let xgrid = trajectory[0].common_xgrid()?;
    for w in trajectory {
        if w.common_xgrid()? != xgrid {
            return Err(Error::InconsistentXGrids);
        }
    }
    let rays = trajectory[0].rays();
    let dnu = neighbour_step(&rays, |r| r.nu, |r| r.mu)
        .ok_or_else(|| Error::InsufficientSampling("no ν-neighbour rays".into()))?;
    let mut worst: Option<f64> = None;
    for k in 1..trajectory.len() - 1 {
        let (prev, cur, next) = (&trajectory[k - 1], &trajectory[k], &trajectory[k + 1]);
        for s in cur.slices() {
            let (mu, nu) = (s.ray.mu, s.ray.nu);
            let (Some(up), Some(down), Some(before), Some(after)) = (
                find_slice(cur, mu, nu + dnu),
                find_slice(cur, mu, nu - dnu),
                find_slice(prev, mu, nu),
                find_slice(next, mu, nu),
            ) else {
                continue;
            };
            for i in 0..s.values().len() {
                let dwdt = (after.values()[i] - before.values()[i]) / (2.0 * dt);
                let dwdnu = (up.values()[i] - down.values()[i]) / (2.0 * dnu);
                let r = (dwdt - mu * dwdnu).abs();
                worst = Some(worst.map_or(r, |w: f64| w.max(r)));
            }
        }
    }
    worst.ok_or_else(|| Error::InsufficientSampling("no ray has both ν neighbours at interior times".into()))
}

/// `max |(X ∂X + μ ∂μ + ν ∂ν + 1) W|` by centered differences.
///
/// Requires rays with both μ and ν neighbours at the inferred spacings.
pub fn scaling_constraint_residual(w: &TomogramField) -> Result<f64> {
    w.common_xgrid()?;
    let rays = w.rays();
    let missing = || Error::InsufficientSampling("no ray has both μ and ν neighbours".into());
    let dmu = neighbour_step(&rays, |r| r.mu, |r| r.nu).ok_or_else(missing)?;
    let dnu = neighbour_step(&rays, |r| r.nu, |r| r.mu).ok_or_else(missing)?;
    let mut worst: Option<f64> = None;
    for s in w.slices() {
        let (mu, nu) = (s.ray.mu, s.ray.nu);
        let (Some(mp), Some(mm), Some(np), Some(nm)) = (
            find_slice(w, mu + dmu, nu),
            find_slice(w, mu - dmu, nu),
            find_slice(w, mu, nu + dnu),
            find_slice(w, mu, nu - dnu),
        ) else {
            continue;
        };
        let v = s.values();
        let dx = s.xgrid().step();
        for i in 1..v.len() - 1 {
            let x = s.xgrid().point(i);
            let r = x * (v[i + 1] - v[i - 1]) / (2.0 * dx)
                + mu * (mp.values()[i] - mm.values()[i]) / (2.0 * dmu)
                + nu * (np.values()[i] - nm.values()[i]) / (2.0 * dnu)
                + v[i];
            worst = Some(worst.map_or(r.abs(), |m: f64| m.max(r.abs())));
        }
    }
    worst.ok_or_else(missing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::Grid2D;
    use crate::states::{density_from_wavefunction, gaussian_phase_density, gaussian_wavefunction};
    use crate::tomography::{radon_gaussian, unit_circle_rays};

    #[test]
    fn integrals_of_motion_examples() {
        assert_eq!(integrals_of_motion(3.0, 1.0, 2.0), (1.0, 1.0));
        assert_eq!(integrals_of_motion(0.7, -0.2, 0.0), (0.7, -0.2));
        let p = evolve_point(&PointState::new(0.5, -1.5), 2.0);
        assert_eq!(integrals_of_motion(p.q, p.p, 2.0), (0.5, -1.5));
    }

    #[test]
    fn point_and_gaussian_shear() {
        assert_eq!(evolve_point(&PointState::new(0.0, 1.0), 2.0), PointState::new(2.0, 1.0));
        let g = evolve_gaussian(&GaussianParams::vacuum(), 1.0);
        assert_eq!((g.sqq, g.sqp, g.spp), (1.0, 0.5, 0.5));
        let two = evolve_gaussian(&evolve_gaussian(&GaussianParams::vacuum(), 0.75), 1.25);
        assert_eq!(two, evolve_gaussian(&GaussianParams::vacuum(), 2.0));
    }

    #[test]
    fn sheared_field_moments() {
        let grid = Grid2D::square(8.0, 256).unwrap();
        let f = gaussian_phase_density(&GaussianParams::vacuum(), &grid).unwrap();
        let ft = evolve_phase_field(&f, 1.0).unwrap();
        let m = ft.moments();
        assert!((m.sqq - 1.0).abs() < 1e-6 && (m.sqp - 0.5).abs() < 1e-6 && (m.spp - 0.5).abs() < 1e-6);
        let back = evolve_phase_field(&ft, -1.0).unwrap();
        let err = (back.values() - f.values()).abs().max();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn shear_off_grid_is_rejected() {
        let grid = Grid2D::square(4.0, 64).unwrap();
        let f = gaussian_phase_density(&GaussianParams::vacuum(), &grid).unwrap();
        assert!(matches!(evolve_phase_field(&f, 5.0), Err(Error::SupportLeavesGrid { .. })));
    }

    #[test]
    fn ground_state_spreads() {
        let grid = Grid1D::symmetric(12.0, 512).unwrap();
        let psi = gaussian_wavefunction(&GaussianParams::vacuum(), &grid).unwrap();
        let pgrid = Grid1D::symmetric(6.0, 101).unwrap();
        let before = psi.momentum_density(&pgrid);
        let psit = evolve_wavefunction(&psi, 1.0).unwrap();
        assert!((psit.norm_squared() - 1.0).abs() < 1e-8);
        assert!((psit.position_moment(2) - 1.0).abs() < 1e-8);
        let after = psit.momentum_density(&pgrid);
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-8);
        }
        assert_eq!(evolve_wavefunction(&psi, 0.0).unwrap(), psi);
    }

    #[test]
    fn kernel_agrees_with_spectral_route() {
        let grid = Grid1D::symmetric(10.0, 512).unwrap();
        let psi = gaussian_wavefunction(&GaussianParams::new(0.5, 0.8, 0.5, 0.5, 0.0).unwrap(), &grid).unwrap();
        let a = evolve_wavefunction(&psi, 0.8).unwrap();
        let b = evolve_wavefunction_kernel(&psi, 0.8).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-6);
        }
    }

    #[test]
    fn packet_leaving_grid_is_detected() {
        let grid = Grid1D::symmetric(6.0, 128).unwrap();
        let psi = gaussian_wavefunction(&GaussianParams::new(0.0, 2.0, 0.5, 0.5, 0.0).unwrap(), &grid).unwrap();
        assert!(matches!(evolve_wavefunction(&psi, 2.0), Err(Error::PacketLeavesGrid { .. })));
    }

    #[test]
    fn density_evolution_matches_pure_state() {
        let grid = Grid1D::symmetric(10.0, 128).unwrap();
        let psi = gaussian_wavefunction(&GaussianParams::new(0.3, -0.4, 0.5, 0.5, 0.0).unwrap(), &grid).unwrap();
        let rho = density_from_wavefunction(&psi);
        let rho_t = evolve_density(&rho, 1.5).unwrap();
        let direct = density_from_wavefunction(&evolve_wavefunction(&psi, 1.5).unwrap());
        let err = (rho_t.entries() - direct.entries()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(err < 1e-8, "{err}");
        assert!((rho_t.trace() - 1.0).abs() < 1e-8);
        let (e0, e1) = (rho.eigenvalues(), rho_t.eigenvalues());
        for (a, b) in e0.iter().zip(&e1) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn gaussian_tomogram_evolution() {
        let g = GaussianTomogram::new(GaussianParams::vacuum(), 0.0);
        let gt = evolve_gaussian_tomogram(&g, 1.0);
        assert_eq!(gt.sigma_xx(&Ray { mu: 1.0, nu: 0.0 }), 1.0);
        assert_eq!(gt.time, 1.0);
        assert_eq!(evolve_gaussian_tomogram(&g, 0.0), g);
    }

    #[test]
    fn sampled_tomogram_evolution_matches_shear() {
        let params = GaussianParams::new(0.2, 0.5, 0.6, 0.5, 0.1).unwrap();
        let xgrid = Grid1D::symmetric(10.0, 256).unwrap();
        let w = radon_gaussian(&params, &unit_circle_rays(96), &xgrid).unwrap();
        let wt = evolve_tomogram(&w, 0.7).unwrap();
        let exact = GaussianTomogram::new(evolve_gaussian(&params, 0.7), 0.7);
        assert_eq!(wt.time(), 0.7);
        for s in wt.slices() {
            for (x, v) in xgrid.points().zip(s.values()) {
                assert!((exact.eval(&s.ray, x) - v).abs() < 1e-4);
            }
        }
    }

    fn stencil_rays(mu: f64, nu: f64, h: f64) -> Vec<Ray> {
        vec![
            Ray { mu, nu },
            Ray { mu: mu + h, nu },
            Ray { mu: mu - h, nu },
            Ray { mu, nu: nu + h },
            Ray { mu, nu: nu - h },
        ]
    }

    fn gaussian_trajectory(params: &GaussianParams, rays: &[Ray], xgrid: &Grid1D, dt: f64) -> Vec<TomogramField> {
        (0..3)
            .map(|k| {
                let t = k as f64 * dt;
                radon_gaussian(&evolve_gaussian(params, t), rays, xgrid).unwrap().with_time(t)
            })
            .collect()
    }

    #[test]
    fn kinetic_residual_converges() {
        let params = GaussianParams::vacuum();
        let xgrid = Grid1D::symmetric(8.0, 257).unwrap();
        let coarse = free_kinetic_residual(&gaussian_trajectory(&params, &stencil_rays(0.5, 0.3, 1e-2), &xgrid, 1e-2))
            .unwrap();
        let fine = free_kinetic_residual(&gaussian_trajectory(&params, &stencil_rays(0.5, 0.3, 5e-3), &xgrid, 5e-3))
            .unwrap();
        assert!(coarse < 1e-3);
        let ratio = coarse / fine;
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn kinetic_residual_rejects_static_tomogram() {
        let xgrid = Grid1D::symmetric(8.0, 257).unwrap();
        let w = radon_gaussian(&GaussianParams::vacuum(), &stencil_rays(0.8, 0.4, 1e-2), &xgrid).unwrap();
        let traj: Vec<_> = (0..3).map(|k| w.clone().with_time(k as f64 * 1e-2)).collect();
        assert!(free_kinetic_residual(&traj).unwrap() > 1e-2);
        assert!(matches!(free_kinetic_residual(&traj[..2]), Err(Error::InsufficientSampling(_))));
        let mut uneven = traj.clone();
        uneven[2] = uneven[2].clone().with_time(0.5);
        assert_eq!(free_kinetic_residual(&uneven), Err(Error::NonUniformTimes));
    }

    #[test]
    fn scaling_residual_of_sampled_vacuum() {
        let xgrid = Grid1D::symmetric(8.0, 801).unwrap();
        let rays = stencil_rays(0.6, 0.8, 1e-2);
        let w = radon_gaussian(&GaussianParams::vacuum(), &rays, &xgrid).unwrap();
        let r = scaling_constraint_residual(&w).unwrap();
        assert!(r < 1e-3, "{r}");

        let doubled: Vec<TomogramSlice> = w
            .slices()
            .iter()
            .map(|s| TomogramSlice::new(s.ray, xgrid, s.values().iter().map(|v| 2.0 * v).collect()).unwrap())
            .collect();
        let r2 = scaling_constraint_residual(&TomogramField::new(doubled, 0.0).unwrap()).unwrap();
        assert!((r2 - 2.0 * r).abs() < 1e-12);

        let frozen: Vec<TomogramSlice> = w
            .slices()
            .iter()
            .map(|s| TomogramSlice::new(s.ray, xgrid, w.slices()[0].values().to_vec()).unwrap())
            .collect();
        let bad = scaling_constraint_residual(&TomogramField::new(frozen, 0.0).unwrap()).unwrap();
        assert!(bad > 1e-2, "{bad}");
    }
}
