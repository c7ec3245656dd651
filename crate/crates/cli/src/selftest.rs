//! The three DN oracle checks: flat surface, shifted strip, finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use muskat_core::dn::{dn_apply, dn_oracle_fd, DnOptions};
use muskat_core::spectral::multiplier_m;
use muskat_core::{DomainSpec, Result, SurfaceField};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub refinement_ratios: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelfTestReport {
    pub passed: bool,
    pub seed: u64,
    pub checks: Vec<Check>,
}

fn flat(seed: u64) -> Result<Check> {
    let spec = DomainSpec::new(1, 64, 65, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..spec.n_modes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let f = SurfaceField::from_grid(spec, &values)?;
    let g = dn_apply(&SurfaceField::zeros(spec), &f, &DnOptions::default())?;
    let err = (&g - &f.apply(&multiplier_m(spec))?).l2_norm() / f.l2_norm();
    Ok(Check {
        name: "flat_surface",
        passed: err <= 1e-12,
        measured: err,
        tolerance: 1e-12,
        refinement_ratios: Vec::new(),
    })
}

fn shifted() -> Result<Check> {
    let spec = DomainSpec::new(1, 16, 1025, 1.0)?;
    let f = SurfaceField::cosine(spec, &[1], 1.0)?;
    let g = dn_apply(&SurfaceField::constant(spec, 0.2), &f, &DnOptions::with_tol(1e-12))?;
    let expect = 1.2f64.tanh();
    let err = (2.0 * g.coeff(&[1]).expect("mode 1 on lattice").norm() - expect).abs() / expect;
    Ok(Check {
        name: "shifted_strip",
        passed: err <= 1e-6,
        measured: err,
        tolerance: 1e-6,
        refinement_ratios: Vec::new(),
    })
}

fn fd_oracle() -> Result<Check> {
    let spec = DomainSpec::new(1, 16, 4097, 1.0)?;
    let eta = SurfaceField::cosine(spec, &[1], 0.05)?;
    let f = SurfaceField::cosine(spec, &[1], 1.0)?;
    let reference = dn_apply(&eta, &f, &DnOptions::with_tol(1e-13))?;
    let errs = [65, 129, 257, 513]
        .iter()
        .map(|&n| Ok((&dn_oracle_fd(&eta, &f, n)? - &reference).l2_norm() / reference.l2_norm()))
        .collect::<Result<Vec<f64>>>()?;
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    let last = errs[errs.len() - 1];
    Ok(Check {
        name: "fd_oracle",
        passed: last <= 1e-4 && ratios.iter().all(|r| (3.5..=4.5).contains(r)),
        measured: last,
        tolerance: 1e-4,
        refinement_ratios: ratios,
    })
}

pub fn run_selftest(seed: u64) -> Result<SelfTestReport> {
    let checks = vec![flat(seed)?, shifted()?, fd_oracle()?];
    Ok(SelfTestReport {
        passed: checks.iter().all(|c| c.passed),
        seed,
        checks,
    })
}
