//! Tomographic moments and covariances, the Schrödinger–Robertson test, the
//! Weyl–Heisenberg group and the positive-type test, and classification.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::scaling_constraint_residual;
use crate::error::{Error, Result};
use crate::grids::Grid1D;
use crate::tomography::{GaussianTomogram, Ray, TomogramField, TomogramSlice};

/// Highest moment order accepted for sampled slices.
pub const MAX_SAMPLED_ORDER: u32 = 4;
/// Largest estimated contribution of the truncated tails to a moment.
pub const TAIL_TOL: f64 = 1e-6;
pub const SR_TOL_ANALYTIC: f64 = 1e-9;
pub const SR_TOL_SAMPLED: f64 = 1e-4;
pub const PT_TOL_ANALYTIC: f64 = 1e-9;
pub const PT_TOL_SAMPLED: f64 = 1e-6;

/// A tomogram given either by samples or in closed form.
#[derive(Clone, Debug, PartialEq)]
pub enum Tomogram {
    Sampled(TomogramField),
    Gaussian(GaussianTomogram),
}

impl From<TomogramField> for Tomogram {
    fn from(w: TomogramField) -> Self {
        Tomogram::Sampled(w)
    }
}

impl From<GaussianTomogram> for Tomogram {
    fn from(g: GaussianTomogram) -> Self {
        Tomogram::Gaussian(g)
    }
}

impl Tomogram {
    fn source(&self) -> Source {
        match self {
            Tomogram::Sampled(_) => Source::Sampled,
            Tomogram::Gaussian(_) => Source::Analytic,
        }
    }
}

/// Where a slice for a moment comes from.
#[derive(Clone, Copy, Debug)]
pub enum MomentSource<'a> {
    Slice(&'a TomogramSlice),
    Gaussian(&'a GaussianTomogram, Ray),
}

/// `⟨Xⁿ⟩` of a tomogram slice.
pub fn tomographic_moment(src: MomentSource<'_>, n: u32) -> Result<f64> {
    match src {
        MomentSource::Slice(s) => slice_moment(s, n),
        MomentSource::Gaussian(g, ray) => Ok(gaussian_moment(g.mean(&ray), g.sigma_xx(&ray), n)),
    }
}

/// Raw normal moments: `E[Xⁿ] = m E[Xⁿ⁻¹] + (n − 1) s E[Xⁿ⁻²]`.
fn gaussian_moment(mean: f64, var: f64, n: u32) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 1..=n {
        let next = mean * cur + (k - 1) as f64 * var * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn slice_moment(s: &TomogramSlice, n: u32) -> Result<f64> {
    if n > MAX_SAMPLED_ORDER {
        return Err(Error::MomentOrderTooHigh(n));
    }
    let g = s.xgrid();
    let v = s.values();
    // Tail beyond the grid bounded by the edge density times |X|ⁿ over one grid span.
    let edge = v[0].abs().max(v[v.len() - 1].abs());
    let reach = g.min().abs().max(g.max().abs());
    let estimate = edge * reach.powi(n as i32) * g.span();
    if estimate > TAIL_TOL {
        return Err(Error::TailTruncation { order: n, estimate });
    }
    let weights = g.trapezoid_weights();
    Ok(g.points().zip(v).zip(&weights).map(|((x, w), c)| x.powi(n as i32) * w * c).sum())
}

/// Origin of a covariance record; fixes the default Schrödinger–Robertson tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Analytic,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceRecord {
    pub mean_q: f64,
    pub mean_p: f64,
    pub sqq: f64,
    pub spp: f64,
    pub sqp: f64,
    pub source: Source,
}

impl CovarianceRecord {
    pub fn sr_tolerance(&self) -> f64 {
        match self.source {
            Source::Analytic => SR_TOL_ANALYTIC,
            Source::Sampled => SR_TOL_SAMPLED,
        }
    }
}

/// Mean and variance along `ray`, from a stored slice parallel to it.
fn ray_statistics(w: &TomogramField, ray: Ray) -> Result<(f64, f64)> {
    let (slice, scale) = w
        .slices()
        .iter()
        .find_map(|s| s.ray.ratio(&ray).map(|l| (s, l)))
        .ok_or(Error::MissingRay { mu: ray.mu, nu: ray.nu })?;
    let m1 = slice_moment(slice, 1)?;
    let m2 = slice_moment(slice, 2)?;
    Ok((scale * m1, scale * scale * (m2 - m1 * m1)))
}

/// Means from rays `(1, 0)` and `(0, 1)`; `σqp = ½ (Var(1, 1) − σqq − σpp)`.
pub fn covariance_from_tomogram(t: &Tomogram) -> Result<CovarianceRecord> {
    let (q, p, d) = (Ray { mu: 1.0, nu: 0.0 }, Ray { mu: 0.0, nu: 1.0 }, Ray { mu: 1.0, nu: 1.0 });
    let stats = |ray: Ray| -> Result<(f64, f64)> {
        match t {
            Tomogram::Sampled(w) => ray_statistics(w, ray),
            Tomogram::Gaussian(g) => Ok((g.mean(&ray), g.sigma_xx(&ray))),
        }
    };
    let (mean_q, sqq) = stats(q)?;
    let (mean_p, spp) = stats(p)?;
    let (_, sdd) = stats(d)?;
    Ok(CovarianceRecord { mean_q, mean_p, sqq, spp, sqp: 0.5 * (sdd - sqq - spp), source: t.source() })
}

/// `(σqqσpp − σqp², lhs ≥ ¼ − tol)` with the record's default tolerance.
pub fn sr_test(c: &CovarianceRecord) -> (f64, bool) {
    let lhs = c.sqq * c.spp - c.sqp * c.sqp;
    (lhs, lhs >= 0.25 - c.sr_tolerance())
}

/// Weyl–Heisenberg element `e^{iτ} exp(i(μq̂ + νp̂))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WHElement {
    pub mu: f64,
    pub nu: f64,
    pub tau: f64,
}

impl WHElement {
    pub fn new(mu: f64, nu: f64, tau: f64) -> Self {
        Self { mu, nu, tau }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn inverse(&self) -> Self {
        Self::new(-self.mu, -self.nu, -self.tau)
    }
}

/// Group law from `e^A e^B = e^{A+B} e^{[A,B]/2}` with `[q̂, p̂] = i`:
/// `(μa+μb, νa+νb, τa+τb − (μa νb − νa μb)/2)`.
pub fn wh_compose(a: &WHElement, b: &WHElement) -> WHElement {
    WHElement::new(a.mu + b.mu, a.nu + b.nu, a.tau + b.tau - 0.5 * (a.mu * b.nu - a.nu * b.mu))
}

fn characteristic(t: &Tomogram, mu: f64, nu: f64) -> Result<C64> {
    if mu == 0.0 && nu == 0.0 {
        return Ok(C64::new(1.0, 0.0));
    }
    match t {
        Tomogram::Gaussian(g) => Ok(g.params.characteristic(mu, nu)),
        Tomogram::Sampled(w) => w.lookup().characteristic(mu, nu).map_err(|e| match e {
            Error::RayNotRepresentable { mu, nu } => Error::UnreachableRay { mu, nu },
            other => other,
        }),
    }
}

/// `φ(μ, ν, τ) = e^{iτ} ∫ exp(iX) W(X, μ, ν) dX`.
pub fn group_function(t: &Tomogram, g: &WHElement) -> Result<C64> {
    Ok(C64::cis(g.tau) * characteristic(t, g.mu, g.nu)?)
}

/// Smallest eigenvalue of `M(j, k) = φ(g_j⁻¹ ∘ g_k)` and whether it clears `−tol`.
pub fn positive_type_test(t: &Tomogram, elements: &[WHElement], tol: f64) -> Result<(f64, bool)> {
    for (i, a) in elements.iter().enumerate() {
        if elements[..i].contains(a) {
            return Err(Error::DuplicateElements);
        }
    }
    let n = elements.len();
    if n == 0 {
        return Err(Error::InsufficientSampling("no group elements".into()));
    }
    let composed: Vec<WHElement> = (0..n * n)
        .map(|idx| wh_compose(&elements[idx / n].inverse(), &elements[idx % n]))
        .collect();
    let mut keys: Vec<(u64, u64)> = composed.iter().map(|g| (g.mu.to_bits(), g.nu.to_bits())).collect();
    keys.sort_unstable();
    keys.dedup();
    let values = keys
        .par_iter()
        .map(|&(mu, nu)| characteristic(t, f64::from_bits(mu), f64::from_bits(nu)).map(|c| ((mu, nu), c)))
        .collect::<Result<HashMap<_, _>>>()?;
    let mut m = DMatrix::from_fn(n, n, |j, k| {
        let g = composed[j * n + k];
        C64::cis(g.tau) * values[&(g.mu.to_bits(), g.nu.to_bits())]
    });
    m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let min = SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((min, min >= -tol))
}

/// `(μ, ν)` on a `side × side` grid over `[−half_width, half_width]²`, `τ = 0`.
pub fn lattice(side: usize, half_width: f64) -> Result<Vec<WHElement>> {
    let axis = Grid1D::symmetric(half_width, side)?;
    Ok(axis.points().flat_map(|mu| axis.points().map(move |nu| WHElement::new(mu, nu, 0.0))).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ClassicalOnly,
    QuantumAdmissible,
    Indeterminate,
    Invalid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    /// Points per axis of the base lattice.
    pub lattice_side: usize,
    pub lattice_half_width: f64,
    /// Each refinement maps `side` to `2·side − 1` on the same square.
    pub refinements: usize,
    pub nonneg_tol: f64,
    pub norm_tol: f64,
    /// Defaults to the analytic or sampled tolerance by tomogram kind.
    pub pt_tol: Option<f64>,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            lattice_side: 7,
            lattice_half_width: 2.0,
            refinements: 1,
            nonneg_tol: 1e-9,
            norm_tol: 1e-6,
            pt_tol: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub nonneg_ok: bool,
    pub norm_ok: bool,
    /// Absent when the ray set has no μ/ν neighbours for differencing.
    pub homogeneity_residual: Option<f64>,
    pub sr_lhs: f64,
    pub sr_ok: bool,
    pub pt_min_eigenvalue: f64,
    pub pt_ok: bool,
    /// Points per axis of the finest lattice evaluated.
    pub pt_lattice_side: usize,
    pub verdict: Verdict,
}

fn gaussian_homogeneity(g: &GaussianTomogram) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..8 {
        let ray = Ray::unit(i as f64 * std::f64::consts::PI / 8.0);
        let sd = g.sigma_xx(&ray).sqrt();
        for k in -8..=8 {
            let x = g.mean(&ray) + 0.5 * k as f64 * sd;
            worst = worst.max(g.scaling_residual(&ray, x).abs());
        }
    }
    worst
}

pub fn classify(t: &Tomogram, config: &ClassifyConfig) -> Result<ClassificationReport> {
    let (nonneg_ok, norm_ok, homogeneity_residual) = match t {
        Tomogram::Gaussian(g) => {
            g.params.validate()?;
            (true, true, Some(gaussian_homogeneity(g)))
        }
        Tomogram::Sampled(w) => {
            let (nonneg, norm) = w.check_invariants(config.nonneg_tol, config.norm_tol);
            let residual = match scaling_constraint_residual(w) {
                Ok(r) => Some(r),
                Err(Error::InsufficientSampling(_)) => None,
                Err(e) => return Err(e),
            };
            (nonneg, norm, residual)
        }
    };
    let mut report = ClassificationReport {
        nonneg_ok,
        norm_ok,
        homogeneity_residual,
        sr_lhs: f64::NAN,
        sr_ok: false,
        pt_min_eigenvalue: f64::NAN,
        pt_ok: false,
        pt_lattice_side: 0,
        verdict: Verdict::Invalid,
    };
    if !nonneg_ok || !norm_ok {
        return Ok(report);
    }

    let (lhs, sr_ok) = sr_test(&covariance_from_tomogram(t)?);
    report.sr_lhs = lhs;
    report.sr_ok = sr_ok;

    let tol = config.pt_tol.unwrap_or(match t.source() {
        Source::Analytic => PT_TOL_ANALYTIC,
        Source::Sampled => PT_TOL_SAMPLED,
    });
    let mut side = config.lattice_side;
    let mut passes = 0;
    loop {
        let (min, ok) = positive_type_test(t, &lattice(side, config.lattice_half_width)?, tol)?;
        report.pt_min_eigenvalue = min;
        report.pt_ok = ok;
        report.pt_lattice_side = side;
        if !ok || passes == config.refinements {
            break;
        }
        passes += 1;
        side = 2 * side - 1;
    }

    report.verdict = if !report.sr_ok || !report.pt_ok {
        Verdict::ClassicalOnly
    } else if config.refinements > 0 {
        Verdict::QuantumAdmissible
    } else {
        Verdict::Indeterminate
    };
    Ok(report)
}
