//! Steady traveling waves `γ∂₁η = G(η)(η + φ₀)` by Picard iteration of
//! `T(η) = (γ∂₁ − m(D))⁻¹ [R(η)(η + φ₀) + m(D)φ₀]`.

use serde::{Deserialize, Serialize};

use crate::dn::{dn_apply, dn_remainder, DnOptions};
use crate::error::{Error, Result};
use crate::norms::sobolev_norm;
use crate::spectral::{multiplier_m, partial, resolvent_gamma, SurfaceField};

#[derive(Clone, Debug)]
pub struct WaveConfig {
    pub gamma: f64,
    phi0: SurfaceField,
    pub s: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub dn: DnOptions,
}

impl WaveConfig {
    /// Removes the mean of `phi0`.
    pub fn new(gamma: f64, phi0: SurfaceField) -> Self {
        Self {
            gamma,
            phi0: phi0.with_zero_mean(),
            s: 2.5,
            tol: 1e-10,
            max_iter: 100,
            dn: DnOptions::with_tol(1e-12),
        }
    }

    pub fn phi0(&self) -> &SurfaceField {
        &self.phi0
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be > 0, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iterate_norm: f64,
    pub step_norm: f64,
}

#[derive(Clone, Debug)]
pub struct TravelingWaveSolution {
    pub eta_star: SurfaceField,
    pub history: Vec<IterationRecord>,
    /// Largest ratio of successive step norms.
    pub contraction_estimate: f64,
    /// `‖T(η*) − η*‖_{H^s}`.
    pub fixed_point_residual: f64,
    /// `‖γ∂₁η* − G(η*)(η* + φ₀)‖_{H^{s−1/2}}`.
    pub steady_residual: f64,
}

impl TravelingWaveSolution {
    /// `step_k / step_{k−1}` for `k ≥ 2` (1-based), skipping zero steps.
    pub fn step_ratios(&self) -> Vec<f64> {
        step_ratios(&self.history)
    }
}

fn step_ratios(history: &[IterationRecord]) -> Vec<f64> {
    history
        .windows(2)
        .filter(|w| w[0].step_norm > 0.0)
        .map(|w| w[1].step_norm / w[0].step_norm)
        .collect()
}

pub fn t_phi_map(eta: &SurfaceField, cfg: &WaveConfig) -> Result<SurfaceField> {
    let spec = *eta.spec();
    if cfg.phi0.spec() != &spec {
        return Err(Error::SpecMismatch);
    }
    let g = eta + &cfg.phi0;
    let r = dn_remainder(eta, &g, &cfg.dn)?;
    let forcing = &r + &cfg.phi0.apply(&multiplier_m(spec))?;
    Ok(resolvent_gamma(&forcing, cfg.gamma).with_zero_mean())
}

pub fn steady_residual(eta: &SurfaceField, cfg: &WaveConfig) -> Result<f64> {
    let spec = *eta.spec();
    let lhs = eta.apply(&partial(spec, 0))?.scale(cfg.gamma);
    let g = dn_apply(eta, &(eta + &cfg.phi0), &cfg.dn)?;
    Ok(sobolev_norm(&(&lhs - &g), cfg.s - 0.5))
}

pub fn solve_traveling_wave(cfg: &WaveConfig) -> Result<TravelingWaveSolution> {
    cfg.validate()?;
    let spec = *cfg.phi0.spec();
    let mut eta = SurfaceField::zeros(spec);
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut growing = 0;
    for it in 1..=cfg.max_iter {
        let next = t_phi_map(&eta, cfg)?;
        let step = sobolev_norm(&(&next - &eta), cfg.s);
        history.push(IterationRecord {
            iterate_norm: sobolev_norm(&next, cfg.s),
            step_norm: step,
        });
        eta = next;
        if let [.., a, b] = history.as_slice() {
            if a.step_norm > 0.0 && b.step_norm > a.step_norm {
                growing += 1;
                if growing >= 3 {
                    return Err(Error::ContractionFailure {
                        iterations: it,
                        ratio: b.step_norm / a.step_norm,
                    });
                }
            } else {
                growing = 0;
            }
        }
        if step < cfg.tol {
            let fixed_point_residual = sobolev_norm(&(&t_phi_map(&eta, cfg)? - &eta), cfg.s);
            let steady = steady_residual(&eta, cfg)?;
            let contraction_estimate = step_ratios(&history).into_iter().fold(0.0, f64::max);
            return Ok(TravelingWaveSolution {
                eta_star: eta,
                history,
                contraction_estimate,
                fixed_point_residual,
                steady_residual: steady,
            });
        }
    }
    Err(Error::NoConvergence {
        solver: "traveling_wave_picard",
        iterations: cfg.max_iter,
        last_step: history.last().map_or(f64::NAN, |h| h.step_norm),
    })
}

/// `‖η*₁ − η*₂‖_{H^s} / ‖φ₀,₁ − φ₀,₂‖_{H^s}`; 0 when the forcings coincide.
pub fn lipschitz_probe(cfg: &WaveConfig, perturbed: &WaveConfig) -> Result<f64> {
    let dphi = sobolev_norm(&cfg.phi0.try_sub(&perturbed.phi0)?, cfg.s);
    if dphi == 0.0 {
        return Ok(0.0);
    }
    let a = solve_traveling_wave(cfg)?;
    let b = solve_traveling_wave(perturbed)?;
    Ok(sobolev_norm(&(&a.eta_star - &b.eta_star), cfg.s) / dphi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DomainSpec;
    use approx::assert_relative_eq;

    fn spec() -> DomainSpec {
        DomainSpec::new(1, 16, 33, 1.0).unwrap()
    }

    #[test]
    fn map_examples() {
        let s = spec();
        let cfg = WaveConfig::new(0.0, SurfaceField::zeros(s));
        assert_eq!(t_phi_map(&SurfaceField::zeros(s), &cfg).unwrap().l2_norm(), 0.0);

        let phi = SurfaceField::cosine(s, &[1], 0.01).unwrap();
        let cfg = WaveConfig::new(0.0, phi.clone());
        let out = t_phi_map(&SurfaceField::zeros(s), &cfg).unwrap();
        assert!((&out + &phi).l2_norm() < 1e-17);
        assert_eq!(out.mean(), 0.0);
    }

    #[test]
    fn phi0_mean_removed() {
        let s = spec();
        let cfg = WaveConfig::new(1.0, SurfaceField::constant(s, 3.0));
        assert_eq!(cfg.phi0().l2_norm(), 0.0);
    }

    #[test]
    fn free_problem_is_trivial() {
        let s = spec();
        let sol = solve_traveling_wave(&WaveConfig::new(1.0, SurfaceField::zeros(s))).unwrap();
        assert_eq!(sol.eta_star.l2_norm(), 0.0);
        assert_eq!(sol.steady_residual, 0.0);
    }

    #[test]
    fn moving_wave_leading_order() {
        let s = spec();
        let phi = SurfaceField::cosine(s, &[1], 0.01).unwrap();
        let sol = solve_traveling_wave(&WaveConfig::new(1.0, phi)).unwrap();
        let t = 1f64.tanh();
        let lead = 0.005 * t / (1.0 + t * t).sqrt();
        assert_relative_eq!(lead, 0.003029, epsilon = 1e-6);
        let amp = sol.eta_star.coeff(&[1]).unwrap().norm();
        assert!((amp - lead).abs() <= 0.05 * lead, "{amp} vs {lead}");
        assert!(sol.contraction_estimate < 1.0);
        assert!(sol.fixed_point_residual <= 1e-10);
        assert!(sol.steady_residual <= 1e-9);
    }

    #[test]
    fn lipschitz_identical_is_zero() {
        let s = spec();
        let cfg = WaveConfig::new(0.0, SurfaceField::cosine(s, &[1], 0.01).unwrap());
        assert_eq!(lipschitz_probe(&cfg, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn lipschitz_small_forcing_near_one() {
        let s = spec();
        let a = WaveConfig::new(0.0, SurfaceField::cosine(s, &[1], 0.01).unwrap());
        let b = WaveConfig::new(0.0, SurfaceField::cosine(s, &[1], 0.01 * (1.0 + 1e-3)).unwrap());
        let r = lipschitz_probe(&a, &b).unwrap();
        assert!((r - 1.0).abs() < 0.1, "{r}");
    }
}
