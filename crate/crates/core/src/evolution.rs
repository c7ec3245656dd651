//! Perturbations `f = η − η*` of a traveling wave:
//! `∂_t f = (γ∂₁ − m(D)) f + N(f)` with
//! `N(f) = R(η*)(η* + φ₀) − R(η* + f)(η* + φ₀ + f)`.
//!
//! The stiff linear part is integrated exactly by the semigroup; the
//! production stepper is the second-order exponential (integrating-factor)
//! scheme, and a Picard-iterated trapezoid Duhamel solve serves as reference.

use serde::{Deserialize, Serialize};

use crate::dn::{dn_remainder, solve_vw, DnOptions};
use crate::error::{Error, Result};
use crate::norms::sobolev_norm;
use crate::spectral::{semigroup_multiplier, SurfaceField};
use crate::util::linear_fit;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Etdrk2,
    DuhamelPicard,
}

#[derive(Clone, Debug)]
pub struct EvolutionConfig {
    pub gamma: f64,
    pub phi0: SurfaceField,
    pub eta_star: SurfaceField,
    pub f0: SurfaceField,
    pub dt: f64,
    pub t_final: f64,
    pub integrator: Integrator,
    pub s: f64,
    pub dn: DnOptions,
    /// `false` drops `N` (pure semigroup evolution).
    pub nonlinear: bool,
    /// Blow-up when `‖f‖_{H^s}` exceeds this multiple of `‖f₀‖_{H^s}`.
    pub blowup_factor: f64,
    /// Collocation intervals per step for the Duhamel integrator.
    pub duhamel_substeps: usize,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
}

impl EvolutionConfig {
    /// Defaults: `dt = 0.05/max(1,|γ|)`, `t_final = 20`, ETDRK2, `s = 2.5`.
    /// Means of `phi0`, `eta_star` and `f0` are removed.
    pub fn new(gamma: f64, phi0: SurfaceField, eta_star: SurfaceField, f0: SurfaceField) -> Self {
        Self {
            gamma,
            phi0: phi0.with_zero_mean(),
            eta_star: eta_star.with_zero_mean(),
            f0: f0.with_zero_mean(),
            dt: 0.05 / gamma.abs().max(1.0),
            t_final: 20.0,
            integrator: Integrator::Etdrk2,
            s: 2.5,
            dn: DnOptions::with_tol(1e-12),
            nonlinear: true,
            blowup_factor: 10.0,
            duhamel_substeps: 4,
            picard_tol: 1e-13,
            picard_max_iter: 50,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "t_final must be >= 0, got {}",
                self.t_final
            )));
        }
        let spec = self.f0.spec();
        if self.phi0.spec() != spec || self.eta_star.spec() != spec {
            return Err(Error::SpecMismatch);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayReport {
    pub times: Vec<f64>,
    pub hs_norms: Vec<f64>,
    /// Running trapezoid of `‖f‖²_{H^{s+1/2}}`.
    pub hs_half_l2_accum: Vec<f64>,
    /// `−slope` of `ln‖f‖_{H^s}` over the tail half; `None` for zero data.
    pub fitted_rate: Option<f64>,
    /// `tanh(b)`, the linear rate of the slowest mode.
    pub c0_reference: f64,
    pub monotone: bool,
    #[serde(skip)]
    pub final_state: Option<SurfaceField>,
}

/// Time stepper with the base remainder cached. Every DN solve runs the same
/// fixed number of sweeps so that `N` is a smooth map and `N(0) = 0` holds
/// bit for bit.
pub struct Evolver {
    cfg: EvolutionConfig,
    dn: DnOptions,
    base_g: SurfaceField,
    base_r: SurfaceField,
}

impl Evolver {
    pub fn new(cfg: EvolutionConfig) -> Result<Self> {
        cfg.validate()?;
        let base_g = &cfg.eta_star + &cfg.phi0;
        let dn = match cfg.dn.fixed_sweeps {
            Some(_) => cfg.dn,
            None => {
                let k_base = solve_vw(&cfg.eta_star, &base_g, &cfg.dn)?.iterations;
                let eta1 = &cfg.eta_star + &cfg.f0;
                let k_pert = if cfg.nonlinear {
                    solve_vw(&eta1, &(&base_g + &cfg.f0), &cfg.dn)?.iterations
                } else {
                    0
                };
                DnOptions {
                    fixed_sweeps: Some(k_base.max(k_pert) + 3),
                    ..cfg.dn
                }
            }
        };
        let base_r = if cfg.nonlinear {
            dn_remainder(&cfg.eta_star, &base_g, &dn)?
        } else {
            SurfaceField::zeros(*cfg.f0.spec())
        };
        Ok(Self {
            cfg,
            dn,
            base_g,
            base_r,
        })
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.cfg
    }

    /// Sweep count used by every DN solve.
    pub fn dn_sweeps(&self) -> usize {
        self.dn.fixed_sweeps.unwrap_or(0)
    }

    pub fn nonlinear_rhs(&self, f: &SurfaceField) -> Result<SurfaceField> {
        let spec = *f.spec();
        if !self.cfg.nonlinear || f.coeffs().iter().all(|c| c.norm() == 0.0) {
            return Ok(SurfaceField::zeros(spec));
        }
        let eta = &self.cfg.eta_star + f;
        let g = &self.base_g + f;
        let r = dn_remainder(&eta, &g, &self.dn)?;
        Ok((&self.base_r - &r).with_zero_mean())
    }

    /// `a = S f + dt S N(f)`, `f⁺ = a + (dt/2)(N(a) − S N(f))`.
    pub fn step_etdrk2(&self, f: &SurfaceField, dt: f64) -> Result<SurfaceField> {
        let sg = semigroup_multiplier(*f.spec(), dt, self.cfg.gamma)?;
        let nf = self.nonlinear_rhs(f)?;
        let s_nf = nf.apply(&sg)?;
        let a = &f.apply(&sg)? + &s_nf.scale(dt);
        let na = self.nonlinear_rhs(&a)?;
        Ok(&a + &(&na - &s_nf).scale(0.5 * dt))
    }

    /// ETDRK2 from `f0` to `t_end` in `ceil(t_end/dt)` equal steps.
    pub fn integrate(&self, t_end: f64, dt: f64) -> Result<SurfaceField> {
        let n = (t_end / dt).round().max(1.0) as usize;
        let h = t_end / n as f64;
        let mut f = self.cfg.f0.clone();
        for _ in 0..n {
            f = self.step_etdrk2(&f, h)?;
        }
        Ok(f)
    }

    /// Mild solution on `[0, t_short]` with `n` trapezoid intervals, solved by
    /// Picard iteration of the whole trajectory. Returns every collocation
    /// value.
    pub fn duhamel_trajectory(&self, t_short: f64, n: usize) -> Result<Vec<SurfaceField>> {
        if n == 0 || !(t_short > 0.0) {
            return Err(Error::InvalidArgument(
                "duhamel solve needs t_short > 0 and at least one interval".into(),
            ));
        }
        let spec = *self.cfg.f0.spec();
        let h = t_short / n as f64;
        let sg = semigroup_multiplier(spec, h, self.cfg.gamma)?;
        let mut traj: Vec<SurfaceField> = Vec::with_capacity(n + 1);
        traj.push(self.cfg.f0.clone());
        for k in 1..=n {
            traj.push(traj[k - 1].apply(&sg)?);
        }
        let mut prev_diff = f64::INFINITY;
        let mut growing = 0;
        for it in 1..=self.cfg.picard_max_iter {
            let nl: Vec<SurfaceField> = traj
                .iter()
                .map(|f| self.nonlinear_rhs(f))
                .collect::<Result<_>>()?;
            let mut next = Vec::with_capacity(n + 1);
            next.push(self.cfg.f0.clone());
            for k in 1..=n {
                let carry = &next[k - 1] + &nl[k - 1].scale(0.5 * h);
                next.push(&carry.apply(&sg)? + &nl[k].scale(0.5 * h));
            }
            let diff = next
                .iter()
                .zip(&traj)
                .map(|(a, b)| sobolev_norm(&(a - b), self.cfg.s))
                .fold(0.0, f64::max);
            let scale = next
                .iter()
                .map(|a| sobolev_norm(a, self.cfg.s))
                .fold(0.0, f64::max);
            traj = next;
            if diff <= self.cfg.picard_tol * scale {
                return Ok(traj);
            }
            if diff > prev_diff {
                growing += 1;
                if growing >= 3 {
                    return Err(Error::NoConvergence {
                        solver: "duhamel_picard",
                        iterations: it,
                        last_step: diff,
                    });
                }
            } else {
                growing = 0;
            }
            prev_diff = diff;
        }
        Err(Error::NoConvergence {
            solver: "duhamel_picard",
            iterations: self.cfg.picard_max_iter,
            last_step: prev_diff,
        })
    }

    fn advance(&self, f: &SurfaceField, dt: f64) -> Result<SurfaceField> {
        match self.cfg.integrator {
            Integrator::Etdrk2 => self.step_etdrk2(f, dt),
            Integrator::DuhamelPicard => {
                let sub = Evolver {
                    cfg: EvolutionConfig {
                        f0: f.clone(),
                        ..self.cfg.clone()
                    },
                    dn: self.dn,
                    base_g: self.base_g.clone(),
                    base_r: self.base_r.clone(),
                };
                let traj = sub.duhamel_trajectory(dt, self.cfg.duhamel_substeps.max(1))?;
                Ok(traj.last().expect("non-empty").clone())
            }
        }
    }

    pub fn evolve(&self) -> Result<DecayReport> {
        let cfg = &self.cfg;
        let n = (cfg.t_final / cfg.dt).round() as usize;
        let dt = if n > 0 { cfg.t_final / n as f64 } else { cfg.dt };
        let mut f = cfg.f0.clone();
        let n0 = sobolev_norm(&f, cfg.s);
        let limit = cfg.blowup_factor * n0;
        let mut times = vec![0.0];
        let mut hs = vec![n0];
        let mut half_prev = sobolev_norm(&f, cfg.s + 0.5).powi(2);
        let mut accum = vec![0.0];
        for k in 1..=n {
            f = self.advance(&f, dt)?;
            let t = k as f64 * dt;
            let nk = sobolev_norm(&f, cfg.s);
            if !nk.is_finite() || nk > limit {
                return Err(Error::BlowupDetected {
                    time: t,
                    norm: nk,
                    limit,
                });
            }
            let half = sobolev_norm(&f, cfg.s + 0.5).powi(2);
            accum.push(accum[k - 1] + 0.5 * dt * (half + half_prev));
            half_prev = half;
            times.push(t);
            hs.push(nk);
        }
        let monotone = hs.windows(2).all(|w| w[1] <= w[0]);
        Ok(DecayReport {
            fitted_rate: fit_decay_rate(&times, &hs),
            c0_reference: cfg.f0.spec().b().tanh(),
            times,
            hs_norms: hs,
            hs_half_l2_accum: accum,
            monotone,
            final_state: Some(f),
        })
    }
}

/// `−slope` of the least-squares line through `(t, ln n)` over the tail half.
pub fn fit_decay_rate(times: &[f64], norms: &[f64]) -> Option<f64> {
    let start = times.len() / 2;
    let (t, y): (Vec<f64>, Vec<f64>) = times[start..]
        .iter()
        .zip(&norms[start..])
        .filter(|(_, n)| **n > 0.0)
        .map(|(t, n)| (*t, n.ln()))
        .unzip();
    if t.len() < 2 {
        return None;
    }
    Some(-linear_fit(&t, &y).0)
}

pub fn nonlinear_rhs(f: &SurfaceField, cfg: &EvolutionConfig) -> Result<SurfaceField> {
    Evolver::new(cfg.clone())?.nonlinear_rhs(f)
}

pub fn step_etdrk2(f: &SurfaceField, dt: f64, cfg: &EvolutionConfig) -> Result<SurfaceField> {
    Evolver::new(cfg.clone())?.step_etdrk2(f, dt)
}

pub fn evolve(cfg: &EvolutionConfig) -> Result<DecayReport> {
    Evolver::new(cfg.clone())?.evolve()
}

/// Mild solution at `t_short` using `cfg.duhamel_substeps` intervals per
/// `cfg.dt`.
pub fn duhamel_picard(cfg: &EvolutionConfig, t_short: f64) -> Result<SurfaceField> {
    let n = ((t_short / cfg.dt).ceil() as usize).max(1) * cfg.duhamel_substeps.max(1);
    let traj = Evolver::new(cfg.clone())?.duhamel_trajectory(t_short, n)?;
    Ok(traj.last().expect("non-empty").clone())
}
