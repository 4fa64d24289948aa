//! Acceptance suite: one pass/fail line per criterion.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tomokit::dynamics::{
    evolve_density, evolve_gaussian_tomogram, evolve_phase_field, evolve_tomogram, free_kinetic_residual,
    scaling_constraint_residual,
};
use tomokit::grids::{Grid1D, Grid2D};
use tomokit::quantumness::{
    covariance_from_tomogram, lattice, positive_type_test, sr_test, Tomogram, PT_TOL_ANALYTIC,
};
use tomokit::states::{
    density_from_wavefunction, gaussian_phase_density, gaussian_wavefunction, ClassicalState, GaussianParams,
};
use tomokit::tomography::{
    inverse_radon, radon_classical, radon_gaussian, radon_phase_field, reconstruct_density, tomogram_quantum,
    tomogram_wavefunction, unit_circle_rays, ClassicalTomogram, GaussianTomogram, Ray, TomogramField, CLIP_TOL,
};
use tomokit::Error;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn slice_values<'a>(w: &'a TomogramField, ray: &Ray) -> &'a [f64] {
    w.find(ray).expect("ray present").values()
}

fn round_trip_radon() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(7);
    let grid = Grid2D::square(7.0, 256).map_err(|e| e.to_string())?;
    let xgrid = Grid1D::symmetric(11.0, 512).map_err(|e| e.to_string())?;
    let rays = unit_circle_rays(128);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let sqq = rng.random_range(0.3..0.9);
        let spp = rng.random_range(0.3..0.9);
        let corr: f64 = rng.random_range(-0.5..0.5);
        let params = GaussianParams::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            sqq,
            spp,
            corr * (sqq * spp).sqrt(),
        )
        .map_err(|e| e.to_string())?;
        let f = gaussian_phase_density(&params, &grid).map_err(|e| e.to_string())?;
        let ClassicalTomogram::Sampled(w) =
            radon_classical(&ClassicalState::Field(f.clone()), &rays, &xgrid).map_err(|e| e.to_string())?
        else {
            return Err("sampled field gave a singular tomogram".into());
        };
        let back = inverse_radon(&w, &grid).map_err(|e| e.to_string())?;
        let l1 = (back.values() - f.values()).abs().sum() * grid.cell_area();
        worst = worst.max(l1);
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst < 1e-3 && secs < 30.0, format!("max L1 {worst:.3e} (< 1e-3), {secs:.1} s (< 30 s)"))
}

fn density_reconstruction() -> Outcome {
    let qgrid = Grid1D::symmetric(8.0, 256).map_err(|e| e.to_string())?;
    let xgrid = Grid1D::symmetric(8.0, 512).map_err(|e| e.to_string())?;
    let rays = unit_circle_rays(128);
    let psi = gaussian_wavefunction(&GaussianParams::vacuum(), &qgrid).map_err(|e| e.to_string())?;
    let w = tomogram_wavefunction(&psi, &rays, &xgrid).map_err(|e| e.to_string())?;
    let rec = reconstruct_density(&w, &qgrid, CLIP_TOL).map_err(|e| e.to_string())?;
    let fidelity = rec.overlap(&density_from_wavefunction(&psi));

    let classical = GaussianParams::isotropic(0.4).map_err(|e| e.to_string())?;
    let wc = radon_gaussian(&classical, &rays, &xgrid).map_err(|e| e.to_string())?;
    let flagged = match reconstruct_density(&wc, &qgrid, CLIP_TOL) {
        Err(Error::NonPhysical { min_eigenvalue, .. }) => min_eigenvalue,
        Err(e) => return Err(e.to_string()),
        Ok(_) => return Err("classical 0.4 Gaussian reconstructed without a flag".into()),
    };
    check(
        fidelity > 0.999 && flagged < -1e-3,
        format!("fidelity {fidelity:.6} (> 0.999), classical 0.4 flagged min eigenvalue {flagged:.3e} (< -1e-3)"),
    )
}

fn propagator_equivalence() -> Outcome {
    let start = Instant::now();
    let test_rays = [Ray { mu: 1.0, nu: 0.0 }, Ray { mu: 0.0, nu: 1.0 }, Ray { mu: 0.6, nu: 0.8 }, Ray { mu: 1.2, nu: -0.5 }];
    let times = [0.5, 1.0, 1.5];
    let mut stored = unit_circle_rays(128);
    stored.extend(test_rays.iter().filter(|r| !stored.iter().any(|s| s.approx_eq(r))).copied().collect::<Vec<_>>());
    let xgrid = Grid1D::symmetric(20.0, 1024).map_err(|e| e.to_string())?;

    let qgrid = Grid1D::symmetric(12.0, 256).map_err(|e| e.to_string())?;
    let params = GaussianParams::new(0.5, 0.3, 0.5, 0.5, 0.0).map_err(|e| e.to_string())?;
    let rho = density_from_wavefunction(&gaussian_wavefunction(&params, &qgrid).map_err(|e| e.to_string())?);
    let w0 = tomogram_quantum(&rho, &stored, &xgrid).map_err(|e| e.to_string())?;
    let mut quantum = 0.0f64;
    for &t in &times {
        let direct = tomogram_quantum(&evolve_density(&rho, t).map_err(|e| e.to_string())?, &test_rays, &xgrid)
            .map_err(|e| e.to_string())?;
        let shifted = evolve_tomogram(&w0, t).map_err(|e| e.to_string())?;
        for r in &test_rays {
            quantum = quantum.max(max_abs_diff(slice_values(&direct, r), slice_values(&shifted, r)));
        }
    }

    let grid = Grid2D::square(8.0, 256).map_err(|e| e.to_string())?;
    let classical = GaussianParams::new(0.3, -0.2, 0.6, 0.4, 0.1).map_err(|e| e.to_string())?;
    let f = gaussian_phase_density(&classical, &grid).map_err(|e| e.to_string())?;
    let c0 = radon_phase_field(&f, &stored, &xgrid).map_err(|e| e.to_string())?;
    let mut classical_err = 0.0f64;
    for &t in &times {
        let ft = evolve_phase_field(&f, t).map_err(|e| e.to_string())?;
        let direct = radon_phase_field(&ft, &test_rays, &xgrid).map_err(|e| e.to_string())?;
        let shifted = evolve_tomogram(&c0, t).map_err(|e| e.to_string())?;
        for r in &test_rays {
            classical_err = classical_err.max(max_abs_diff(slice_values(&direct, r), slice_values(&shifted, r)));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        quantum < 1e-4 && classical_err < 1e-4 && secs < 60.0,
        format!("quantum {quantum:.3e}, classical {classical_err:.3e} (< 1e-4), {secs:.1} s (< 60 s)"),
    )
}

fn stencil(mu: f64, nu: f64, h: f64) -> Vec<Ray> {
    vec![
        Ray { mu, nu },
        Ray { mu: mu + h, nu },
        Ray { mu: mu - h, nu },
        Ray { mu, nu: nu + h },
        Ray { mu, nu: nu - h },
    ]
}

fn kinetic_residual() -> Outcome {
    let xgrid = Grid1D::symmetric(8.0, 801).map_err(|e| e.to_string())?;
    let params = GaussianParams::new(0.2, -0.3, 0.7, 0.5, 0.1).map_err(|e| e.to_string())?;
    let residual = |h: f64| -> Result<f64, String> {
        let mut rays = unit_circle_rays(256);
        rays.extend(stencil(0.5, 0.3, h));
        let w0 = radon_gaussian(&params, &rays, &xgrid).map_err(|e| e.to_string())?;
        let traj = (0..3)
            .map(|k| evolve_tomogram(&w0, k as f64 * h))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        free_kinetic_residual(&traj).map_err(|e| e.to_string())
    };
    let (coarse, fine) = (residual(1e-2)?, residual(5e-3)?);
    let ratio = coarse / fine;
    check(
        coarse < 1e-3 && (3.5..=4.5).contains(&ratio),
        format!("residual {coarse:.3e} at step 1e-2 (< 1e-3), halving ratio {ratio:.3} (in [3.5, 4.5])"),
    )
}

fn constant_of_motion() -> Outcome {
    let params = GaussianParams::new(0.3, -0.2, 0.7, 0.5, 0.15).map_err(|e| e.to_string())?;
    let times = [0.0, 0.5, 1.0, 5.0];
    let lhs = |t: &Tomogram| covariance_from_tomogram(t).map(|c| sr_test(&c).0).map_err(|e| e.to_string());

    let g0 = GaussianTomogram::new(params, 0.0);
    let reference = lhs(&g0.into())?;
    let mut analytic = 0.0f64;
    for &t in &times {
        analytic = analytic.max((lhs(&evolve_gaussian_tomogram(&g0, t).into())? - reference).abs());
    }

    let xgrid = Grid1D::symmetric(40.0, 2048).map_err(|e| e.to_string())?;
    let w0 = radon_gaussian(&params, &unit_circle_rays(128), &xgrid).map_err(|e| e.to_string())?;
    let mut sampled = 0.0f64;
    for &t in &times {
        let wt = evolve_tomogram(&w0, t).map_err(|e| e.to_string())?;
        sampled = sampled.max((lhs(&wt.into())? - reference).abs());
    }
    check(
        analytic < 1e-10 && sampled < 1e-4,
        format!("analytic drift {analytic:.3e} (< 1e-10), sampled drift {sampled:.3e} (< 1e-4)"),
    )
}

fn homogeneity() -> Outcome {
    let xgrid = Grid1D::symmetric(16.0, 1024).map_err(|e| e.to_string())?;
    let base = [Ray { mu: 0.8, nu: 0.6 }, Ray { mu: -0.3, nu: 0.9 }];
    let lambdas = [-2.0, -1.0, 0.5, 2.0];
    let rays: Vec<Ray> =
        base.iter().flat_map(|r| std::iter::once(*r).chain(lambdas.iter().map(move |&l| r.scaled(l)))).collect();

    let qgrid = Grid1D::symmetric(10.0, 256).map_err(|e| e.to_string())?;
    let psi = gaussian_wavefunction(&GaussianParams::new(0.4, -0.3, 0.5, 0.5, 0.0).map_err(|e| e.to_string())?, &qgrid)
        .map_err(|e| e.to_string())?;
    let grid = Grid2D::square(7.0, 200).map_err(|e| e.to_string())?;
    let f = gaussian_phase_density(&GaussianParams::new(-0.2, 0.3, 0.6, 0.45, -0.1).map_err(|e| e.to_string())?, &grid)
        .map_err(|e| e.to_string())?;
    let fields = [
        tomogram_wavefunction(&psi, &rays, &xgrid).map_err(|e| e.to_string())?,
        radon_phase_field(&f, &rays, &xgrid).map_err(|e| e.to_string())?,
    ];
    let mut worst = 0.0f64;
    for w in &fields {
        for r in &base {
            let s = w.find(r).unwrap();
            for &l in &lambdas {
                let sl = w.find(&r.scaled(l)).unwrap();
                for (x, v) in xgrid.points().zip(s.values()) {
                    if xgrid.contains(l * x) {
                        worst = worst.max((sl.interpolate(l * x) - v / l.abs()).abs());
                    }
                }
            }
        }
    }

    let sgrid = Grid1D::symmetric(8.0, 801).map_err(|e| e.to_string())?;
    let ws = tomogram_wavefunction(&psi, &stencil(0.6, 0.8, 1e-2), &sgrid).map_err(|e| e.to_string())?;
    let residual = scaling_constraint_residual(&ws).map_err(|e| e.to_string())?;
    check(
        worst < 1e-4 && residual < 1e-3,
        format!("max homogeneity deviation {worst:.3e} (< 1e-4), scaling residual {residual:.3e} (< 1e-3)"),
    )
}

fn classifier_concordance() -> Outcome {
    let coarse = lattice(7, 2.0).map_err(|e| e.to_string())?;
    let fine = lattice(13, 2.0).map_err(|e| e.to_string())?;
    let mut disagreements = Vec::new();
    let mut refined = 0;
    let mut boundary = f64::NAN;
    for i in 0..21 {
        let s2 = 0.2 + 0.03 * i as f64;
        let t: Tomogram = GaussianTomogram::new(GaussianParams::isotropic(s2).map_err(|e| e.to_string())?, 0.0).into();
        let (lhs, sr_ok) = sr_test(&covariance_from_tomogram(&t).map_err(|e| e.to_string())?);
        let (_, mut pt_ok) = positive_type_test(&t, &coarse, PT_TOL_ANALYTIC).map_err(|e| e.to_string())?;
        if pt_ok != sr_ok {
            refined += 1;
            pt_ok = positive_type_test(&t, &fine, PT_TOL_ANALYTIC).map_err(|e| e.to_string())?.1;
        }
        if (lhs - 0.25).abs() > 1e-3 {
            if pt_ok != sr_ok {
                disagreements.push(s2);
            }
        } else {
            boundary = lhs;
        }
    }
    let boundary_err = (boundary - 0.25).abs();
    check(
        disagreements.is_empty() && boundary_err < 1e-9,
        format!(
            "{} disagreements off the boundary ({refined} refined), boundary lhs error {boundary_err:.1e} (< 1e-9)",
            disagreements.len()
        ),
    )
}

fn marginals() -> Outcome {
    let grid = Grid2D::new(
        Grid1D::symmetric(8.0, 256).map_err(|e| e.to_string())?,
        Grid1D::symmetric(7.0, 240).map_err(|e| e.to_string())?,
    );
    let f = gaussian_phase_density(&GaussianParams::new(0.3, -0.4, 0.7, 0.5, 0.2).map_err(|e| e.to_string())?, &grid)
        .map_err(|e| e.to_string())?;
    let q_ray = Ray { mu: 1.0, nu: 0.0 };
    let p_ray = Ray { mu: 0.0, nu: 1.0 };
    let wq = radon_phase_field(&f, &[q_ray], &grid.q).map_err(|e| e.to_string())?;
    let wp = radon_phase_field(&f, &[p_ray], &grid.p).map_err(|e| e.to_string())?;
    let classical = max_abs_diff(wq.slices()[0].values(), &f.position_marginal())
        .max(max_abs_diff(wp.slices()[0].values(), &f.momentum_marginal()));

    let qgrid = Grid1D::symmetric(8.0, 256).map_err(|e| e.to_string())?;
    let psi = gaussian_wavefunction(&GaussianParams::new(0.5, 0.7, 0.5, 0.5, 0.0).map_err(|e| e.to_string())?, &qgrid)
        .map_err(|e| e.to_string())?;
    let pgrid = Grid1D::symmetric(8.0, 300).map_err(|e| e.to_string())?;
    let wq = tomogram_wavefunction(&psi, &[q_ray], &qgrid).map_err(|e| e.to_string())?;
    let wp = tomogram_wavefunction(&psi, &[p_ray], &pgrid).map_err(|e| e.to_string())?;
    let quantum = max_abs_diff(wq.slices()[0].values(), &psi.density())
        .max(max_abs_diff(wp.slices()[0].values(), &psi.momentum_density(&pgrid)));
    check(
        classical < 1e-6 && quantum < 1e-6,
        format!("classical {classical:.3e}, quantum {quantum:.3e} (< 1e-6)"),
    )
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_tomokit"))
        .args(args)
        .current_dir(dir)
        .stdout(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("tomokit {args:?} exited with {status}"))
    }
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("state.json"), r#"{"qbar":0.3,"pbar":-0.2,"sqq":0.5,"spp":0.5,"sqp":0}"#)
        .map_err(|e| e.to_string())?;
    let jobs: [&[&str]; 5] = [
        &["tomogram", "--state", "state.json", "--angles", "64", "--xgrid", "-8:8:256", "--out", "w.csv"],
        &["evolve", "--state", "state.json", "--t", "0.5,1", "--picture", "density", "--qgrid", "-8:8:96", "--out", "rho.csv"],
        &["reconstruct-phase", "--tomogram", "w.csv", "--qgrid", "-5:5:64", "--out", "f.csv"],
        &["classify", "--state", "state.json", "--out", "report.json"],
        &["moments", "--tomogram", "w.csv", "--out", "moments.json"],
    ];
    let artifacts = [
        "w.csv", "w.meta.json", "rho.csv", "rho.meta.json", "f.csv", "f.meta.json", "report.json", "report.meta.json",
        "moments.json", "moments.meta.json",
    ];
    let mut runs = Vec::new();
    for _ in 0..2 {
        for job in jobs {
            run_cli(dir.path(), job)?;
        }
        let bytes = artifacts
            .iter()
            .map(|a| std::fs::read(dir.path().join(a)).map_err(|e| format!("{a}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        runs.push(bytes);
    }
    let differing: Vec<&str> =
        artifacts.iter().zip(runs[0].iter().zip(&runs[1])).filter(|(_, (a, b))| a != b).map(|(n, _)| *n).collect();
    check(differing.is_empty(), format!("{} artifacts compared, {} differ {:?}", artifacts.len(), differing.len(), differing))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("round-trip Radon", round_trip_radon),
        ("density reconstruction", density_reconstruction),
        ("propagator equivalence", propagator_equivalence),
        ("kinetic residual", kinetic_residual),
        ("constant of motion", constant_of_motion),
        ("homogeneity", homogeneity),
        ("classifier concordance", classifier_concordance),
        ("marginal identities", marginals),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} ({name}): PASS: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
