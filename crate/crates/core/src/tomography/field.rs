use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::{interpolate_uniform, lagrange_weights, trapezoid, Grid1D};
use crate::states::GaussianParams;

/// Direction `(μ, ν)` of the observable `X = μq + νp`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub mu: f64,
    pub nu: f64,
}

impl Ray {
    pub fn new(mu: f64, nu: f64) -> Result<Self> {
        if !(mu.is_finite() && nu.is_finite()) || (mu == 0.0 && nu == 0.0) {
            return Err(Error::DegenerateRay);
        }
        Ok(Self { mu, nu })
    }

    /// `μ = s·cosθ`, `ν = s⁻¹·sinθ`: a `θ`-rotated, `s`-scaled position axis.
    pub fn from_angle(theta: f64, s: f64) -> Self {
        Self { mu: s * theta.cos(), nu: theta.sin() / s }
    }

    pub fn unit(theta: f64) -> Self {
        Self::from_angle(theta, 1.0)
    }

    pub fn norm(&self) -> f64 {
        self.mu.hypot(self.nu)
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self { mu: lambda * self.mu, nu: lambda * self.nu }
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() < 1e-9
    }

    pub fn approx_eq(&self, other: &Ray) -> bool {
        let scale = self.norm().max(other.norm());
        (self.mu - other.mu).abs() <= 1e-12 * scale && (self.nu - other.nu).abs() <= 1e-12 * scale
    }

    /// If `other = λ·self`, returns `λ`.
    pub fn ratio(&self, other: &Ray) -> Option<f64> {
        let cross = self.mu * other.nu - self.nu * other.mu;
        if cross.abs() > 1e-12 * self.norm() * other.norm() {
            return None;
        }
        Some((self.mu * other.mu + self.nu * other.nu) / (self.mu * self.mu + self.nu * self.nu))
    }
}

/// `count` unit-circle rays at angles `iπ/count`, `i = 0..count`.
pub fn unit_circle_rays(count: usize) -> Vec<Ray> {
    (0..count).map(|i| Ray::unit(i as f64 * PI / count as f64)).collect()
}

/// One tomogram slice `W(X; μ, ν)` sampled on an X grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TomogramSlice {
    pub ray: Ray,
    xgrid: Grid1D,
    values: Vec<f64>,
}

impl TomogramSlice {
    pub fn new(ray: Ray, xgrid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != xgrid.len() {
            return Err(Error::ShapeMismatch { expected: xgrid.len(), got: values.len() });
        }
        Ray::new(ray.mu, ray.nu)?;
        Ok(Self { ray, xgrid, values })
    }

    pub fn xgrid(&self) -> &Grid1D {
        &self.xgrid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.xgrid.step())
    }

    pub fn interpolate(&self, x: f64) -> f64 {
        interpolate_uniform(&self.values, &self.xgrid, x)
    }

    /// `∫ exp(ikX) W(X) dX` by trapezoid quadrature.
    pub fn characteristic(&self, k: f64) -> C64 {
        let w = self.xgrid.trapezoid_weights();
        self.xgrid
            .points()
            .zip(self.values.iter().zip(&w))
            .map(|(x, (&v, &wx))| C64::cis(k * x) * (v * wx))
            .sum()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Point-state slice: `W(X; μ, ν) = δ(X − location)`, kept analytic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaSlice {
    pub ray: Ray,
    pub location: f64,
}

/// Sampled tomogram over a finite ray set at a given time.
#[derive(Clone, Debug, PartialEq)]
pub struct TomogramField {
    slices: Vec<TomogramSlice>,
    time: f64,
}

impl TomogramField {
    pub fn new(slices: Vec<TomogramSlice>, time: f64) -> Result<Self> {
        for (i, a) in slices.iter().enumerate() {
            if slices[..i].iter().any(|b| a.ray.approx_eq(&b.ray)) {
                return Err(Error::DuplicateRay { mu: a.ray.mu, nu: a.ray.nu });
            }
        }
        Ok(Self { slices, time })
    }

    pub fn slices(&self) -> &[TomogramSlice] {
        &self.slices
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn rays(&self) -> Vec<Ray> {
        self.slices.iter().map(|s| s.ray).collect()
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn find(&self, ray: &Ray) -> Option<&TomogramSlice> {
        self.slices.iter().find(|s| s.ray.approx_eq(ray))
    }

    pub fn common_xgrid(&self) -> Result<Grid1D> {
        let first = self
            .slices
            .first()
            .ok_or_else(|| Error::InsufficientSampling("empty tomogram".into()))?
            .xgrid;
        if self.slices.iter().any(|s| s.xgrid != first) {
            return Err(Error::InconsistentXGrids);
        }
        Ok(first)
    }

    /// `(nonnegative within nonneg_tol, every slice normalized within norm_tol)`.
    pub fn check_invariants(&self, nonneg_tol: f64, norm_tol: f64) -> (bool, bool) {
        let nonneg = self.slices.iter().all(|s| s.min_value() >= -nonneg_tol);
        let norm = self.slices.iter().all(|s| (s.integral() - 1.0).abs() <= norm_tol);
        (nonneg, norm)
    }

    pub fn lookup(&self) -> RayLookup<'_> {
        RayLookup::new(self)
    }
}

/// Angular node of a unit-circle slice: direction `(cosθ, sinθ) = orient·ray`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct AngularNode {
    pub theta: f64,
    pub slice: usize,
    pub orient: f64,
}

/// Folds `(μ, ν)` to `c·(cosθ, sinθ)` with `θ ∈ [0, π)`; returns `(θ, c)`.
pub(crate) fn fold_direction(mu: f64, nu: f64) -> (f64, f64) {
    let r = mu.hypot(nu);
    let mut theta = nu.atan2(mu);
    let mut c = r;
    if theta < 0.0 {
        theta += PI;
        c = -c;
    }
    if theta >= PI {
        theta -= PI;
        c = -c;
    }
    (theta, c)
}

pub(crate) fn angular_nodes(slices: &[TomogramSlice]) -> Vec<AngularNode> {
    let mut nodes: Vec<AngularNode> = slices
        .iter()
        .enumerate()
        .filter(|(_, s)| s.ray.is_unit())
        .map(|(i, s)| {
            let (theta, c) = fold_direction(s.ray.mu, s.ray.nu);
            AngularNode { theta, slice: i, orient: c.signum() }
        })
        .collect();
    nodes.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    nodes
}

/// Angular interpolation stencil around `theta ∈ [0, π)`: for each of the
/// four nearest nodes in the π-periodic extension, `(node index, parity, weight)`
/// where the node's direction at that extension is `(-1)^parity` times its own.
pub(crate) fn angular_stencil(nodes: &[AngularNode], theta: f64) -> Vec<(usize, bool, f64)> {
    let k = nodes.len() as i64;
    let upper = nodes.partition_point(|n| n.theta <= theta) as i64;
    let ext: Vec<(usize, bool, f64)> = (upper - 2..upper + 2)
        .map(|e| {
            let m = e.div_euclid(k);
            let idx = e.rem_euclid(k) as usize;
            (idx, m.rem_euclid(2) == 1, nodes[idx].theta + m as f64 * PI)
        })
        .collect();
    let angles: Vec<f64> = ext.iter().map(|e| e.2).collect();
    let w = lagrange_weights(&angles, theta);
    ext.into_iter().zip(w).map(|((i, odd, _), w)| (i, odd, w)).collect()
}

/// Minimum number of unit-circle slices for angular interpolation.
pub const MIN_INTERPOLATION_ANGLES: usize = 16;

/// Evaluates a tomogram at arbitrary rays using exact matches, the
/// homogeneity identity `W(λX, λμ, λν) = |λ|⁻¹ W(X, μ, ν)`, and fourth-order
/// angular interpolation across stored unit-circle slices.
pub struct RayLookup<'a> {
    field: &'a TomogramField,
    nodes: Vec<AngularNode>,
}

/// `W(X, ray) = Σ weight · W_slice(X / scale) / |scale|`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Contribution {
    pub slice: usize,
    pub scale: f64,
    pub weight: f64,
}

impl<'a> RayLookup<'a> {
    fn new(field: &'a TomogramField) -> Self {
        Self { field, nodes: angular_nodes(&field.slices) }
    }

    pub(crate) fn contributions(&self, mu: f64, nu: f64) -> Result<Vec<Contribution>> {
        let target = Ray::new(mu, nu)?;
        for (i, s) in self.field.slices.iter().enumerate() {
            if let Some(scale) = s.ray.ratio(&target) {
                return Ok(vec![Contribution { slice: i, scale, weight: 1.0 }]);
            }
        }
        if self.nodes.len() < MIN_INTERPOLATION_ANGLES {
            return Err(Error::RayNotRepresentable { mu, nu });
        }
        let (theta, c) = fold_direction(mu, nu);
        Ok(angular_stencil(&self.nodes, theta)
            .into_iter()
            .map(|(idx, odd, weight)| {
                let node = self.nodes[idx];
                let parity = if odd { -1.0 } else { 1.0 };
                Contribution { slice: node.slice, scale: c * parity * node.orient, weight }
            })
            .collect())
    }

    pub fn value(&self, x: f64, mu: f64, nu: f64) -> Result<f64> {
        Ok(self
            .contributions(mu, nu)?
            .iter()
            .map(|c| c.weight * self.field.slices[c.slice].interpolate(x / c.scale) / c.scale.abs())
            .sum())
    }

    /// Samples the slice for `ray` on `xgrid`.
    pub fn sample(&self, ray: &Ray, xgrid: &Grid1D) -> Result<Vec<f64>> {
        let contributions = self.contributions(ray.mu, ray.nu)?;
        Ok(xgrid
            .points()
            .map(|x| {
                contributions
                    .iter()
                    .map(|c| c.weight * self.field.slices[c.slice].interpolate(x / c.scale) / c.scale.abs())
                    .sum()
            })
            .collect())
    }

    /// `⟨exp(i(k1 q + k2 p))⟩ = ∫ exp(iX) W(X, k1, k2) dX`.
    pub fn characteristic(&self, k1: f64, k2: f64) -> Result<C64> {
        if k1 == 0.0 && k2 == 0.0 {
            return Ok(C64::new(1.0, 0.0));
        }
        Ok(self
            .contributions(k1, k2)?
            .iter()
            .map(|c| self.field.slices[c.slice].characteristic(c.scale) * c.weight)
            .sum())
    }
}

/// Analytic Gaussian tomogram.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianTomogram {
    #[serde(flatten)]
    pub params: GaussianParams,
    pub time: f64,
}

impl GaussianTomogram {
    pub fn new(params: GaussianParams, time: f64) -> Self {
        Self { params, time }
    }

    /// `σ_XX(μ, ν) = μ²σqq + ν²σpp + 2μνσqp`.
    pub fn sigma_xx(&self, ray: &Ray) -> f64 {
        let p = &self.params;
        ray.mu * ray.mu * p.sqq + ray.nu * ray.nu * p.spp + 2.0 * ray.mu * ray.nu * p.sqp
    }

    /// `⟨X⟩ = μq̄ + νp̄`.
    pub fn mean(&self, ray: &Ray) -> f64 {
        ray.mu * self.params.mean_q + ray.nu * self.params.mean_p
    }

    /// Normal density in X with mean `μq̄ + νp̄` and variance `σ_XX(μ, ν)`.
    pub fn eval(&self, ray: &Ray, x: f64) -> f64 {
        let var = self.sigma_xx(ray);
        let d = x - self.mean(ray);
        (-d * d / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
    }

    /// `∫ exp(ikX) W(X) dX`.
    pub fn characteristic(&self, ray: &Ray, k: f64) -> C64 {
        self.params.characteristic(k * ray.mu, k * ray.nu)
    }

    /// `[X∂X + μ∂μ + ν∂ν + 1] W` from the analytic partial derivatives.
    pub fn scaling_residual(&self, ray: &Ray, x: f64) -> f64 {
        let p = &self.params;
        let (mu, nu) = (ray.mu, ray.nu);
        let s = self.sigma_xx(ray);
        let u = x - self.mean(ray);
        let w = self.eval(ray, x);
        let ds_dmu = 2.0 * mu * p.sqq + 2.0 * nu * p.sqp;
        let ds_dnu = 2.0 * nu * p.spp + 2.0 * mu * p.sqp;
        let dlog = |ds: f64, dm: f64| -0.5 * ds / s + u * dm / s + u * u * ds / (2.0 * s * s);
        let dw_dx = -u / s * w;
        let dw_dmu = w * dlog(ds_dmu, p.mean_q);
        let dw_dnu = w * dlog(ds_dnu, p.mean_p);
        x * dw_dx + mu * dw_dmu + nu * dw_dnu + w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_construction() {
        assert_eq!(Ray::new(0.0, 0.0), Err(Error::DegenerateRay));
        let r = Ray::from_angle(PI / 3.0, 2.0);
        assert!((r.mu - 1.0).abs() < 1e-15);
        assert!((r.nu - (PI / 3.0).sin() / 2.0).abs() < 1e-15);
        assert_eq!(Ray::new(1.0, 2.0).unwrap().ratio(&Ray { mu: -2.0, nu: -4.0 }), Some(-2.0));
        assert_eq!(Ray::new(1.0, 2.0).unwrap().ratio(&Ray { mu: 2.0, nu: 1.0 }), None);
    }

    #[test]
    fn fold_keeps_vector() {
        for &(mu, nu) in &[(1.0, 0.0), (-1.0, 0.0), (0.3, -0.7), (-0.2, -0.1), (-2.0, 1.0)] {
            let (theta, c) = fold_direction(mu, nu);
            assert!((0.0..PI).contains(&theta));
            assert!((c * theta.cos() - mu).abs() < 1e-14);
            assert!((c * theta.sin() - nu).abs() < 1e-14);
        }
    }

    #[test]
    fn duplicate_rays_rejected() {
        let g = Grid1D::symmetric(5.0, 11).unwrap();
        let s = TomogramSlice::new(Ray::unit(0.0), g, vec![0.0; 11]).unwrap();
        assert!(matches!(
            TomogramField::new(vec![s.clone(), s], 0.0),
            Err(Error::DuplicateRay { .. })
        ));
    }

    #[test]
    fn sigma_xx_examples() {
        let vac = GaussianTomogram::new(GaussianParams::vacuum(), 0.0);
        for i in 0..12 {
            let theta = i as f64 * 0.37;
            assert!((vac.sigma_xx(&Ray::unit(theta)) - 0.5).abs() < 1e-15);
        }
        let g = GaussianTomogram::new(GaussianParams::new(0.0, 0.0, 1.0, 1.0, 0.3).unwrap(), 0.0);
        assert!((g.sigma_xx(&Ray { mu: 1.0, nu: 1.0 }) - 2.6).abs() < 1e-15);
        let g = GaussianTomogram::new(GaussianParams::new(0.0, 0.0, 0.7, 1.9, 0.1).unwrap(), 0.0);
        assert_eq!(g.sigma_xx(&Ray { mu: 1.0, nu: 0.0 }), 0.7);
        assert_eq!(g.sigma_xx(&Ray { mu: 0.0, nu: 1.0 }), 1.9);
    }

    #[test]
    fn gaussian_eval_examples() {
        let vac = GaussianTomogram::new(GaussianParams::vacuum(), 0.0);
        let peak = vac.eval(&Ray { mu: 1.0, nu: 0.0 }, 0.0);
        assert!((peak - 1.0 / PI.sqrt()).abs() < 1e-15);

        let g = GaussianTomogram::new(GaussianParams::new(1.2, -0.7, 0.9, 0.4, 0.2).unwrap(), 0.0);
        let ray = Ray { mu: 0.6, nu: 1.3 };
        let xg = Grid1D::symmetric(10.0, 2001).unwrap();
        let vals: Vec<f64> = xg.points().map(|x| g.eval(&ray, x)).collect();
        let argmax = (0..vals.len()).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
        assert!((xg.point(argmax) - g.mean(&ray)).abs() <= xg.step());
        assert!((trapezoid(&vals, xg.step()) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn gaussian_scaling_residual_vanishes() {
        let g = GaussianTomogram::new(GaussianParams::new(0.4, -1.1, 0.8, 0.35, -0.2).unwrap(), 0.0);
        for &(mu, nu) in &[(1.0, 0.0), (0.3, 0.9), (-1.4, 0.2), (0.0, 2.0)] {
            for &x in &[-2.0, -0.3, 0.0, 0.7, 1.9] {
                assert!(g.scaling_residual(&Ray { mu, nu }, x).abs() < 1e-12);
            }
        }
    }
}
