//! Sobolev, dyadic (Littlewood–Paley), and Chemin–Lerner norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{StripField, SurfaceField};
use crate::util::{pairwise_sum, trapezoid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormVariant {
    Sobolev,
    SobolevSharp,
    AnisoWeightDiag,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub s: f64,
    pub variant: NormVariant,
    pub q: f64,
}

impl NormSpec {
    pub fn new(s: f64, variant: NormVariant, q: f64) -> Result<Self> {
        if !(s >= 0.0) {
            return Err(Error::InvalidArgument(format!("s must be >= 0, got {s}")));
        }
        if !(q >= 1.0) {
            return Err(Error::InvalidArgument(format!("q must be in [1, inf], got {q}")));
        }
        Ok(Self { s, variant, q })
    }

    /// Surface norm selected by the variant. The anisotropic variant weights
    /// each nonzero mode by `aniso_weight(ξ)^s` (zero mode dropped).
    pub fn surface(&self, f: &SurfaceField) -> f64 {
        match self.variant {
            NormVariant::Sobolev => sobolev_norm(f, self.s),
            NormVariant::SobolevSharp => dyadic_norm(f, self.s, true),
            NormVariant::AnisoWeightDiag => {
                let spec = f.spec();
                let terms: Vec<f64> = f
                    .coeffs()
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(i, c)| {
                        let w = aniso_weight(&spec.wavenumber(i)[..spec.d()]).unwrap_or(0.0);
                        w.powf(self.s) * c.norm_sqr()
                    })
                    .collect();
                pairwise_sum(&terms).sqrt()
            }
        }
    }

    pub fn strip(&self, v: &StripField) -> f64 {
        chemin_lerner_norm(v, self.q, self.s, self.variant == NormVariant::SobolevSharp)
    }
}

/// `(Σ ⟨ξ⟩^{2s} |f̂(ξ)|²)^{1/2}`.
pub fn sobolev_norm(f: &SurfaceField, s: f64) -> f64 {
    let spec = f.spec();
    let terms: Vec<f64> = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let r2 = spec.wavenumber_norm(i).powi(2);
            (1.0 + r2).powf(s) * c.norm_sqr()
        })
        .collect();
    pairwise_sum(&terms).sqrt()
}

/// `(ξ₁² + |ξ|⁴)/|ξ|²`.
pub fn aniso_weight(xi: &[f64]) -> Result<f64> {
    let r2: f64 = xi.iter().map(|x| x * x).sum();
    if xi.is_empty() || r2 == 0.0 {
        return Err(Error::InvalidArgument("aniso_weight undefined at ξ = 0".into()));
    }
    Ok((xi[0] * xi[0] + r2 * r2) / r2)
}

/// Smooth radial cutoff: 1 on `[0, 1/2]`, 0 on `[1, ∞)`.
pub fn chi(r: f64) -> f64 {
    if r <= 0.5 {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        let t = 2.0 * r - 1.0;
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// Dyadic weight `φ_j(r)`; `φ₀ = χ`.
pub fn phi_j(j: usize, r: f64) -> f64 {
    if j == 0 {
        chi(r)
    } else {
        let scale = 2f64.powi(j as i32);
        chi(r / scale) - chi(2.0 * r / scale)
    }
}

/// Index of the last block that can be nonzero on this lattice.
pub fn max_block(f: &SurfaceField) -> usize {
    let spec = f.spec();
    let rmax = (spec.nx() as f64 / 2.0) * (spec.d() as f64).sqrt();
    let mut j = 0;
    while 2f64.powi(j as i32 - 1) < rmax {
        j += 1;
    }
    // blocks j have support below 2^j; one more keeps the sum telescoped to 1
    j + 1
}

/// `Δ_j f`.
pub fn dyadic_block(f: &SurfaceField, j: usize) -> SurfaceField {
    let spec = *f.spec();
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| c * phi_j(j, spec.wavenumber_norm(i)))
        .collect();
    SurfaceField::from_coeffs(spec, coeffs).expect("same lattice")
}

/// `max_ξ |Σ_j φ_j(ξ) − 1|` over the lattice.
pub fn partition_residual(f: &SurfaceField) -> f64 {
    let spec = f.spec();
    let jmax = max_block(f);
    (0..spec.n_modes())
        .map(|i| {
            let r = spec.wavenumber_norm(i);
            let s: f64 = (0..=jmax).map(|j| phi_j(j, r)).sum();
            (s - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// `(Σ_j 2^{2sj} ‖Δ_j f‖²)^{1/2}`, from `j = 1` when `sharp`.
pub fn dyadic_norm(f: &SurfaceField, s: f64, sharp: bool) -> f64 {
    let start = usize::from(sharp);
    let terms: Vec<f64> = (start..=max_block(f))
        .map(|j| 2f64.powf(2.0 * s * j as f64) * dyadic_block(f, j).l2_norm().powi(2))
        .collect();
    pairwise_sum(&terms).sqrt()
}

/// Per-block `(j, ‖Δ_j f‖, cumulative (Σ_{i≤j} ‖Δ_i f‖²)^{1/2})`.
pub fn dyadic_table(f: &SurfaceField) -> Vec<(usize, f64, f64)> {
    let mut acc = 0.0;
    (0..=max_block(f))
        .map(|j| {
            let n = dyadic_block(f, j).l2_norm();
            acc += n * n;
            (j, n, acc.sqrt())
        })
        .collect()
}

fn lq_z(z: &[f64], vals: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        vals.iter().fold(0.0, |m: f64, v| m.max(*v))
    } else {
        let p: Vec<f64> = vals.iter().map(|v| v.powf(q)).collect();
        trapezoid(z, &p).powf(1.0 / q)
    }
}

/// `(Σ_j 2^{2sj} ‖Δ_j v‖²_{L^q_z L²_x})^{1/2}` with trapezoid in z.
pub fn chemin_lerner_norm(v: &StripField, q: f64, s: f64, sharp: bool) -> f64 {
    let spec = *v.spec();
    let probe = SurfaceField::zeros(spec);
    let jmax = max_block(&probe);
    let mags: Vec<f64> = (0..spec.n_modes()).map(|i| spec.wavenumber_norm(i)).collect();
    let start = usize::from(sharp);
    let terms: Vec<f64> = (start..=jmax)
        .map(|j| {
            let weights: Vec<f64> = mags.iter().map(|&r| phi_j(j, r)).collect();
            if weights.iter().all(|w| *w == 0.0) {
                return 0.0;
            }
            let per_z: Vec<f64> = v
                .slabs()
                .iter()
                .map(|slab| {
                    let sq: Vec<f64> = slab
                        .iter()
                        .zip(&weights)
                        .map(|(c, w)| (c * w).norm_sqr())
                        .collect();
                    pairwise_sum(&sq).sqrt()
                })
                .collect();
            2f64.powf(2.0 * s * j as f64) * lq_z(v.z_nodes(), &per_z, q).powi(2)
        })
        .collect();
    pairwise_sum(&terms).sqrt()
}

/// `‖v‖_{L̃^∞ H^s} + ‖v‖_{L̃^1 H^{s+1}}`.
pub fn norm_u(v: &StripField, s: f64) -> f64 {
    chemin_lerner_norm(v, f64::INFINITY, s, false) + chemin_lerner_norm(v, 1.0, s + 1.0, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DomainSpec;
    use approx::assert_relative_eq;

    fn spec() -> DomainSpec {
        DomainSpec::new(1, 32, 33, 1.0).unwrap()
    }

    #[test]
    fn sobolev_examples() {
        let s = spec();
        assert_eq!(sobolev_norm(&SurfaceField::zeros(s), 1.0), 0.0);
        let c = SurfaceField::from_fn(s, |x| x[0].cos());
        assert_relative_eq!(sobolev_norm(&c, 0.0), 0.5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(sobolev_norm(&c, 1.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn aniso_examples() {
        assert_eq!(aniso_weight(&[1.0, 0.0]).unwrap(), 2.0);
        assert!(aniso_weight(&[0.0, 0.0]).is_err());
        let t = 1e-4;
        assert_relative_eq!(aniso_weight(&[0.0, t]).unwrap(), t * t, max_relative = 1e-12);
        assert_relative_eq!(aniso_weight(&[t, 0.0]).unwrap(), 1.0 + t * t, epsilon = 1e-15);
    }

    #[test]
    fn dyadic_examples() {
        let s = spec();
        let c = SurfaceField::constant(s, 2.0);
        assert_eq!(dyadic_block(&c, 0), c);
        for j in 1..6 {
            assert_eq!(dyadic_block(&c, j).l2_norm(), 0.0);
        }
        assert_eq!(dyadic_norm(&c, 1.0, true), 0.0);

        let f = SurfaceField::cosine(s, &[4], 1.0).unwrap();
        assert_eq!(phi_j(3, 4.0), 1.0);
        assert!((&dyadic_block(&f, 3) - &f).l2_norm() < 1e-15);
        for j in [0, 1, 2, 4, 5] {
            assert_eq!(dyadic_block(&f, j).l2_norm(), 0.0);
        }

        let g = SurfaceField::from_fn(s, |x| (x[0].sin() * 2.0).exp());
        let mut sum = SurfaceField::zeros(s);
        for j in 0..=max_block(&g) {
            sum = &sum + &dyadic_block(&g, j);
        }
        assert!((&sum - &g).l2_norm() < 1e-14 * g.l2_norm());
        assert!(partition_residual(&g) <= 1e-14);
    }

    #[test]
    fn chemin_lerner_examples() {
        let s = spec();
        assert_eq!(chemin_lerner_norm(&StripField::zeros(s), 2.0, 1.0, false), 0.0);

        let f = SurfaceField::from_fn(s, |x| x[0].cos() + 0.3 * (3.0 * x[0]).sin());
        let v = StripField::constant_in_z(&f);
        assert_relative_eq!(
            chemin_lerner_norm(&v, f64::INFINITY, 1.5, false),
            dyadic_norm(&f, 1.5, false),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            norm_u(&v, 1.0),
            dyadic_norm(&f, 1.0, false) + dyadic_norm(&f, 2.0, false),
            max_relative = 1e-13
        );

        // e^z cos x on a fine grid: q = 1, s = 0
        let fine = DomainSpec::new(1, 16, 2049, 1.0).unwrap();
        let w = StripField::from_fn(fine, |x, z| z.exp() * x[0].cos());
        let cos = SurfaceField::from_fn(fine, |x| x[0].cos());
        let expect = (1.0 - (-1f64).exp()) * dyadic_norm(&cos, 0.0, false);
        assert_relative_eq!(chemin_lerner_norm(&w, 1.0, 0.0, false), expect, max_relative = 1e-6);
    }

    #[test]
    fn norm_u_monotone_in_s() {
        let s = spec();
        let v = StripField::from_fn(s, |x, z| (x[0] + z).sin() * (1.0 + z));
        let mut prev = 0.0;
        for k in 0..5 {
            let n = norm_u(&v, 0.5 * k as f64);
            assert!(n >= prev);
            prev = n;
        }
    }
}
