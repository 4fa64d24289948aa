//! `tomokit`: tomograms, free evolution, reconstruction and quantumness
//! tests from the command line.

mod error;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use tomokit::dynamics::{
    evolve_density, evolve_gaussian, evolve_gaussian_tomogram, evolve_phase_field, evolve_point, evolve_tomogram,
    evolve_wavefunction, free_kinetic_residual, scaling_constraint_residual,
};
use tomokit::grids::Grid1D;
use tomokit::io;
use tomokit::quantumness::{
    classify, covariance_from_tomogram, tomographic_moment, ClassificationReport, ClassifyConfig, MomentSource,
    Tomogram,
};
use tomokit::states::{density_from_wavefunction, gaussian_wavefunction, DensityMatrix, WaveFunction};
use tomokit::tomography::{
    radon_gaussian, radon_phase_field, radon_point, reconstruct_density_raw, inverse_radon, tomogram_quantum,
    tomogram_wavefunction, GaussianTomogram, Ray, TomogramField, TomogramSlice, CLIP_TOL, EDGE_TOL,
};

use crate::error::CliError;
use crate::input::{load_state, load_tomograms, parse_grid, parse_ray, phase_grid, State};
use crate::output::Artifacts;

#[derive(Parser)]
#[command(name = "tomokit", version, about = "Symplectic tomography of a free particle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the tomogram of a state on a ray set.
    Tomogram(TomogramArgs),
    /// Evolve a state or tomogram freely to the given times.
    Evolve(EvolveArgs),
    /// Reconstruct a phase-space density from a unit-circle tomogram.
    ReconstructPhase(ReconstructPhaseArgs),
    /// Reconstruct a density matrix from a unit-circle tomogram.
    ReconstructDensity(ReconstructDensityArgs),
    /// Tomographic moments and covariances.
    Moments(MomentsArgs),
    /// Classical/quantum classification of a state or tomogram.
    Classify(ClassifyArgs),
    /// Residuals of the free kinetic equation and of the scaling constraint.
    Residuals(ResidualsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Picture {
    Classical,
    Quantum,
    Wavefunction,
    Density,
    Tomogram,
}

#[derive(Args, Serialize)]
struct Sampling {
    /// Number of ray angles, uniform on [0, π).
    #[arg(long, default_value_t = 128)]
    angles: usize,
    /// Ray scaling s: μ = s cosθ, ν = s⁻¹ sinθ.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// X grid as min:max:n.
    #[arg(long, default_value = "-8:8:512", value_parser = parse_grid, allow_hyphen_values = true)]
    xgrid: Grid1D,
    /// Position grid for quantum states built from Gaussian parameters.
    #[arg(long, default_value = "-8:8:256", value_parser = parse_grid, allow_hyphen_values = true)]
    qgrid: Grid1D,
}

impl Sampling {
    fn rays(&self) -> Result<Vec<Ray>, CliError> {
        if self.angles == 0 || self.scale <= 0.0 || !self.scale.is_finite() {
            return Err(CliError::Config("--angles must be positive and --scale a positive number".into()));
        }
        Ok((0..self.angles)
            .map(|i| Ray::from_angle(i as f64 * std::f64::consts::PI / self.angles as f64, self.scale))
            .collect())
    }
}

#[derive(Args, Serialize)]
struct TomogramArgs {
    #[arg(long)]
    state: PathBuf,
    /// Classical (phase-space) or quantum (operator) transform.
    #[arg(long, value_enum)]
    picture: Option<Picture>,
    #[command(flatten)]
    sampling: Sampling,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct EvolveArgs {
    #[arg(long, required_unless_present = "tomogram")]
    state: Option<PathBuf>,
    #[arg(long, conflicts_with = "state")]
    tomogram: Option<PathBuf>,
    /// Times, comma separated or repeated.
    #[arg(long = "t", value_delimiter = ',', required = true, allow_hyphen_values = true)]
    times: Vec<f64>,
    #[arg(long, value_enum, default_value = "tomogram")]
    picture: Picture,
    #[command(flatten)]
    sampling: Sampling,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct ReconstructPhaseArgs {
    #[arg(long)]
    tomogram: PathBuf,
    #[arg(long, default_value = "-6:6:256", value_parser = parse_grid, allow_hyphen_values = true)]
    qgrid: Grid1D,
    /// Defaults to the q grid.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pgrid: Option<Grid1D>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct ReconstructDensityArgs {
    #[arg(long)]
    tomogram: PathBuf,
    #[arg(long, default_value = "-8:8:256", value_parser = parse_grid, allow_hyphen_values = true)]
    qgrid: Grid1D,
    /// Most negative eigenvalue accepted.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct MomentsArgs {
    #[arg(long, required_unless_present = "tomogram")]
    state: Option<PathBuf>,
    #[arg(long, conflicts_with = "state")]
    tomogram: Option<PathBuf>,
    /// Ray as mu,nu; repeatable. Defaults to (1,0), (0,1) and (1,1).
    #[arg(long = "ray", value_parser = parse_ray, allow_hyphen_values = true)]
    rays: Vec<Ray>,
    /// Highest moment order.
    #[arg(long, default_value_t = 4)]
    order: u32,
    #[command(flatten)]
    sampling: Sampling,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ClassifyArgs {
    #[arg(long, required_unless_present = "tomogram")]
    state: Option<PathBuf>,
    #[arg(long, conflicts_with = "state")]
    tomogram: Option<PathBuf>,
    /// Points per axis of the base (μ, ν) lattice.
    #[arg(long, default_value_t = 7)]
    lattice: usize,
    #[arg(long, default_value_t = 2.0)]
    half_width: f64,
    #[arg(long, default_value_t = 1)]
    refinements: usize,
    #[arg(long)]
    pt_tol: Option<f64>,
    #[command(flatten)]
    sampling: Sampling,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ResidualsArgs {
    #[arg(long, required_unless_present = "tomogram")]
    state: Option<PathBuf>,
    #[arg(long, conflicts_with = "state")]
    tomogram: Option<PathBuf>,
    /// Centre ray of the finite-difference stencil (Gaussian states).
    #[arg(long, default_value = "0.5,0.3", value_parser = parse_ray, allow_hyphen_values = true)]
    ray: Ray,
    /// Finite-difference step in t, μ and ν.
    #[arg(long, default_value_t = 1e-2)]
    step: f64,
    #[arg(long, default_value = "-8:8:801", value_parser = parse_grid, allow_hyphen_values = true)]
    xgrid: Grid1D,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn tolerances() -> Value {
    json!({
        "edge": EDGE_TOL,
        "clip": CLIP_TOL,
        "norm": tomokit::states::NORM_TOL,
        "leakage": tomokit::states::LEAK_TOL,
        "guard": tomokit::dynamics::GUARD_TOL,
        "shear_loss": tomokit::dynamics::SHEAR_LOSS_TOL,
        "tail": tomokit::quantumness::TAIL_TOL,
        "sr_analytic": tomokit::quantumness::SR_TOL_ANALYTIC,
        "sr_sampled": tomokit::quantumness::SR_TOL_SAMPLED,
        "pt_analytic": tomokit::quantumness::PT_TOL_ANALYTIC,
        "pt_sampled": tomokit::quantumness::PT_TOL_SAMPLED,
    })
}

fn field_details(fields: &[TomogramField]) -> Value {
    let first = &fields[0];
    json!({
        "rays": first.rays(),
        "xgrid": first.common_xgrid().ok(),
        "times": fields.iter().map(|f| f.time()).collect::<Vec<_>>(),
    })
}

fn pure_state(state: &State, qgrid: &Grid1D) -> Result<WaveFunction, CliError> {
    match state {
        State::Gaussian(p) => Ok(gaussian_wavefunction(p, qgrid)?),
        State::WaveFunction(psi) => Ok(psi.clone()),
        _ => Err(CliError::Config("this picture needs a pure quantum state".into())),
    }
}

fn density_state(state: &State, qgrid: &Grid1D) -> Result<DensityMatrix, CliError> {
    match state {
        State::Density(rho) => Ok(rho.clone()),
        other => Ok(density_from_wavefunction(&pure_state(other, qgrid)?)),
    }
}

fn default_picture(state: &State) -> Picture {
    match state {
        State::WaveFunction(_) | State::Density(_) => Picture::Quantum,
        _ => Picture::Classical,
    }
}

/// Sampled tomogram of a non-point state.
fn sample_tomogram(state: &State, picture: Picture, sampling: &Sampling) -> Result<TomogramField, CliError> {
    let rays = sampling.rays()?;
    let xgrid = &sampling.xgrid;
    Ok(match (state, picture) {
        (State::Gaussian(p), Picture::Classical) => radon_gaussian(p, &rays, xgrid)?,
        (State::PhaseField(f), Picture::Classical) => radon_phase_field(f, &rays, xgrid)?,
        (State::Density(rho), Picture::Quantum) => tomogram_quantum(rho, &rays, xgrid)?,
        (State::Gaussian(_) | State::WaveFunction(_), Picture::Quantum) => {
            tomogram_wavefunction(&pure_state(state, &sampling.qgrid)?, &rays, xgrid)?
        }
        (State::Point(_), _) => return Err(CliError::Config("point states have singular tomograms".into())),
        _ => return Err(CliError::Config(format!("picture {picture:?} does not apply to this state"))),
    })
}

fn run_tomogram(args: &TomogramArgs) -> Result<(), CliError> {
    let state = load_state(&args.state)?;
    let picture = args.picture.unwrap_or_else(|| default_picture(&state));
    let out = Artifacts::new("tomogram", args, tolerances());
    if let State::Point(p) = &state {
        let slices = radon_point(p, &args.sampling.rays()?)?;
        return out.csv(&args.out, "mu,nu,location", json!({ "rays": slices.len() }), |w| {
            io::write_delta_slices(&slices, w)
        });
    }
    let w = sample_tomogram(&state, picture, &args.sampling)?;
    let fields = [w];
    out.csv(&args.out, "mu,nu,x,w", field_details(&fields), |buf| io::write_tomograms(&fields, false, buf))
}

#[derive(Serialize)]
struct Timed<T: Serialize> {
    t: f64,
    #[serde(flatten)]
    state: T,
}

fn run_evolve(args: &EvolveArgs) -> Result<(), CliError> {
    let out = Artifacts::new("evolve", args, tolerances());
    let times = &args.times;
    if args.picture == Picture::Tomogram {
        let w0 = match (&args.tomogram, &args.state) {
            (Some(path), _) => load_tomograms(path)?.remove(0),
            (None, Some(path)) => {
                let state = load_state(path)?;
                let picture = default_picture(&state);
                sample_tomogram(&state, picture, &args.sampling)?
            }
            (None, None) => unreachable!("clap requires a source"),
        };
        let fields = times.iter().map(|&t| evolve_tomogram(&w0, t)).collect::<Result<Vec<_>, _>>()?;
        return out.csv(&args.out, "t,mu,nu,x,w", field_details(&fields), |buf| {
            io::write_tomograms(&fields, true, buf)
        });
    }
    let Some(path) = &args.state else {
        return Err(CliError::Config(format!("picture {:?} needs --state", args.picture)));
    };
    let state = load_state(path)?;
    let qgrid = &args.sampling.qgrid;
    match (args.picture, &state) {
        (Picture::Classical, State::Gaussian(p)) => {
            let traj: Vec<_> = times.iter().map(|&t| Timed { t, state: evolve_gaussian(p, t) }).collect();
            out.json(&args.out, "gaussian trajectory", &traj)
        }
        (Picture::Classical, State::Point(p)) => {
            let traj: Vec<_> = times.iter().map(|&t| Timed { t, state: evolve_point(p, t) }).collect();
            out.json(&args.out, "point trajectory", &traj)
        }
        (Picture::Classical, State::PhaseField(f)) => {
            let fields = times.iter().map(|&t| evolve_phase_field(f, t)).collect::<Result<Vec<_>, _>>()?;
            let pairs: Vec<_> = times.iter().copied().zip(fields.iter()).collect();
            out.csv(&args.out, "t,q,p,f", json!({ "times": times }), |buf| io::write_phase_fields(&pairs, true, buf))
        }
        (Picture::Wavefunction, _) => {
            let psi = pure_state(&state, qgrid)?;
            let states = times.iter().map(|&t| evolve_wavefunction(&psi, t)).collect::<Result<Vec<_>, _>>()?;
            let pairs: Vec<_> = times.iter().copied().zip(states.iter()).collect();
            out.csv(&args.out, "t,q,re,im", json!({ "times": times }), |buf| io::write_wavefunctions(&pairs, true, buf))
        }
        (Picture::Density, _) => {
            let rho = density_state(&state, qgrid)?;
            let states = times.iter().map(|&t| evolve_density(&rho, t)).collect::<Result<Vec<_>, _>>()?;
            let pairs: Vec<_> = times.iter().copied().zip(states.iter()).collect();
            out.csv(&args.out, "t,q,qp,re,im", json!({ "times": times }), |buf| io::write_densities(&pairs, true, buf))
        }
        (picture, _) => Err(CliError::Config(format!("picture {picture:?} does not apply to this state"))),
    }
}

fn run_reconstruct_phase(args: &ReconstructPhaseArgs) -> Result<(), CliError> {
    let w = load_tomograms(&args.tomogram)?.remove(0);
    let f = inverse_radon(&w, &phase_grid(args.qgrid, args.pgrid))?;
    let out = Artifacts::new("reconstruct-phase", args, tolerances());
    let details = json!({ "integral": f.integral(), "moments": f.moments() });
    out.csv(&args.out, "q,p,f", details, |buf| io::write_phase_fields(&[(w.time(), &f)], false, buf))
}

fn run_reconstruct_density(args: &ReconstructDensityArgs) -> Result<(), CliError> {
    let w = load_tomograms(&args.tomogram)?.remove(0);
    let rec = reconstruct_density_raw(&w, &args.qgrid)?;
    if rec.min_eigenvalue < -args.tol {
        return Err(tomokit::Error::NonPhysical { min_eigenvalue: rec.min_eigenvalue, tol: args.tol }.into());
    }
    let out = Artifacts::new("reconstruct-density", args, tolerances());
    let details = json!({ "trace": rec.density.trace(), "min_eigenvalue": rec.min_eigenvalue });
    out.csv(&args.out, "q,qp,re,im", details, |buf| io::write_densities(&[(w.time(), &rec.density)], false, buf))
}

/// Tomogram from `--state` (Gaussian states stay analytic) or `--tomogram`.
fn load_tomogram_source(
    state: &Option<PathBuf>,
    tomogram: &Option<PathBuf>,
    sampling: &Sampling,
) -> Result<Vec<Tomogram>, CliError> {
    if let Some(path) = tomogram {
        return Ok(load_tomograms(path)?.into_iter().map(Tomogram::from).collect());
    }
    let path = state.as_ref().expect("clap requires a source");
    let state = load_state(path)?;
    Ok(vec![match &state {
        State::Gaussian(p) => GaussianTomogram::new(*p, 0.0).into(),
        other => sample_tomogram(other, default_picture(other), sampling)?.into(),
    }])
}

fn time_of(t: &Tomogram) -> f64 {
    match t {
        Tomogram::Sampled(w) => w.time(),
        Tomogram::Gaussian(g) => g.time,
    }
}

#[derive(Serialize)]
struct RayMoments {
    mu: f64,
    nu: f64,
    moments: Vec<f64>,
    mean: f64,
    variance: f64,
}

fn ray_moments(t: &Tomogram, ray: Ray, order: u32) -> Result<RayMoments, CliError> {
    let moments = match t {
        Tomogram::Gaussian(g) => (0..=order.max(2))
            .map(|n| tomographic_moment(MomentSource::Gaussian(g, ray), n))
            .collect::<Result<Vec<_>, _>>()?,
        Tomogram::Sampled(w) => {
            let parallel = w.slices().iter().find_map(|s| s.ray.ratio(&ray).map(|l| (s, l)));
            let (slice, scale) = match parallel {
                Some((s, l)) => (s.clone(), l),
                None => {
                    let xgrid = w.common_xgrid()?;
                    (TomogramSlice::new(ray, xgrid, w.lookup().sample(&ray, &xgrid)?)?, 1.0)
                }
            };
            (0..=order.max(2))
                .map(|n| tomographic_moment(MomentSource::Slice(&slice), n).map(|m| scale.powi(n as i32) * m))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    let (mean, variance) = (moments[1], moments[2] - moments[1] * moments[1]);
    Ok(RayMoments { mu: ray.mu, nu: ray.nu, moments: moments[..=order as usize].to_vec(), mean, variance })
}

fn run_moments(args: &MomentsArgs) -> Result<(), CliError> {
    let tomograms = load_tomogram_source(&args.state, &args.tomogram, &args.sampling)?;
    let rays = if args.rays.is_empty() {
        vec![Ray { mu: 1.0, nu: 0.0 }, Ray { mu: 0.0, nu: 1.0 }, Ray { mu: 1.0, nu: 1.0 }]
    } else {
        args.rays.clone()
    };
    let mut report = Vec::new();
    for t in &tomograms {
        let per_ray = rays.iter().map(|&r| ray_moments(t, r, args.order)).collect::<Result<Vec<_>, _>>()?;
        for m in &per_ray {
            println!("t={} ray=({}, {}) mean={:.6e} variance={:.6e}", time_of(t), m.mu, m.nu, m.mean, m.variance);
        }
        report.push(json!({
            "t": time_of(t),
            "rays": per_ray,
            "covariance": covariance_from_tomogram(t).ok(),
        }));
    }
    match &args.out {
        Some(path) => Artifacts::new("moments", args, tolerances()).json(path, "moments", &report),
        None => Ok(()),
    }
}

fn print_report(r: &ClassificationReport) {
    let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6e}"));
    println!("{:<22}{}", "nonneg_ok", r.nonneg_ok);
    println!("{:<22}{}", "norm_ok", r.norm_ok);
    println!("{:<22}{}", "homogeneity_residual", opt(r.homogeneity_residual));
    println!("{:<22}{:.12}", "sr_lhs", r.sr_lhs);
    println!("{:<22}{}", "sr_ok", r.sr_ok);
    println!("{:<22}{:.6e}", "pt_min_eigenvalue", r.pt_min_eigenvalue);
    println!("{:<22}{}", "pt_ok", r.pt_ok);
    println!("{:<22}{}", "pt_lattice_side", r.pt_lattice_side);
    println!("{:<22}{}", "verdict", serde_json::to_value(r.verdict).unwrap().as_str().unwrap_or_default());
}

fn run_classify(args: &ClassifyArgs) -> Result<(), CliError> {
    let t = load_tomogram_source(&args.state, &args.tomogram, &args.sampling)?.remove(0);
    let config = ClassifyConfig {
        lattice_side: args.lattice,
        lattice_half_width: args.half_width,
        refinements: args.refinements,
        pt_tol: args.pt_tol,
        ..ClassifyConfig::default()
    };
    let report = classify(&t, &config)?;
    print_report(&report);
    match &args.out {
        Some(path) => Artifacts::new("classify", args, tolerances()).json(path, "classification report", &report),
        None => Ok(()),
    }
}

fn stencil(ray: Ray, h: f64) -> Vec<Ray> {
    let (mu, nu) = (ray.mu, ray.nu);
    vec![
        Ray { mu, nu },
        Ray { mu: mu + h, nu },
        Ray { mu: mu - h, nu },
        Ray { mu, nu: nu + h },
        Ray { mu, nu: nu - h },
    ]
}

fn run_residuals(args: &ResidualsArgs) -> Result<(), CliError> {
    let report = if let Some(path) = &args.tomogram {
        let fields = load_tomograms(path)?;
        json!({
            "kinetic_residual": free_kinetic_residual(&fields).ok(),
            "scaling_residual": scaling_constraint_residual(&fields[0]).ok(),
        })
    } else {
        let path = args.state.as_ref().expect("clap requires a source");
        let State::Gaussian(p) = load_state(path)? else {
            return Err(CliError::Config("residuals from --state need a Gaussian state".into()));
        };
        let g = GaussianTomogram::new(p, 0.0);
        let kinetic = |h: f64| -> Result<f64, CliError> {
            let rays = stencil(args.ray, h);
            let traj = (0..3)
                .map(|k| {
                    let gt = evolve_gaussian_tomogram(&g, k as f64 * h);
                    radon_gaussian(&gt.params, &rays, &args.xgrid).map(|w| w.with_time(gt.time))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(free_kinetic_residual(&traj)?)
        };
        let (coarse, fine) = (kinetic(args.step)?, kinetic(args.step / 2.0)?);
        let scaling = scaling_constraint_residual(&radon_gaussian(&p, &stencil(args.ray, args.step), &args.xgrid)?)?;
        json!({
            "kinetic_residual": coarse,
            "kinetic_residual_half_step": fine,
            "convergence_ratio": coarse / fine,
            "scaling_residual": scaling,
        })
    };
    println!("{}", serde_json::to_string(&report).expect("report serializes"));
    match &args.out {
        Some(path) => Artifacts::new("residuals", args, tolerances()).json(path, "residuals", &report),
        None => Ok(()),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Tomogram(a) => run_tomogram(a),
        Command::Evolve(a) => run_evolve(a),
        Command::ReconstructPhase(a) => run_reconstruct_phase(a),
        Command::ReconstructDensity(a) => run_reconstruct_density(a),
        Command::Moments(a) => run_moments(a),
        Command::Classify(a) => run_classify(a),
        Command::Residuals(a) => run_residuals(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tomokit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
