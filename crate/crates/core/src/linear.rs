//! Linearized traveling-wave system on the flat strip:
//!
//! ```text
//! u + ∇p + ∇𝔓η = F,  div u = G   in Ω
//! u_n + γ∂₁η = H,    p = K       on z = 0
//! u_n = 0                        on z = −b
//! ```
//!
//! solved mode by mode: compatibility function ψ, symbol division for η, a
//! tridiagonal vertical solve for p, then reconstruction of u.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    cosh_ratio_raw, partial, poisson_extension, DomainSpec, StripField, SurfaceField,
};
use crate::util::trapezoid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Data `(F, G, H, K)`; `f_vec` holds the `d` horizontal components followed
/// by the vertical one.
#[derive(Clone, Debug)]
pub struct LinearData {
    pub f_vec: Vec<StripField>,
    pub g: StripField,
    pub h: SurfaceField,
    pub k: SurfaceField,
}

impl LinearData {
    pub fn zeros(spec: DomainSpec) -> Self {
        Self {
            f_vec: vec![StripField::zeros(spec); spec.d() + 1],
            g: StripField::zeros(spec),
            h: SurfaceField::zeros(spec),
            k: SurfaceField::zeros(spec),
        }
    }

    pub fn spec(&self) -> &DomainSpec {
        self.g.spec()
    }

    fn validate(&self) -> Result<()> {
        let spec = self.spec();
        if self.f_vec.len() != spec.d() + 1 {
            return Err(Error::SizeMismatch {
                expected: spec.d() + 1,
                got: self.f_vec.len(),
            });
        }
        let strips_ok = self
            .f_vec
            .iter()
            .all(|f| f.spec() == spec && f.nz() == self.g.nz());
        if !strips_ok || self.h.spec() != spec || self.k.spec() != spec {
            return Err(Error::SpecMismatch);
        }
        Ok(())
    }

    /// Root-sum-square of the component norms.
    pub fn norm(&self) -> f64 {
        let mut s: f64 = self.f_vec.iter().map(|f| f.l2_norm().powi(2)).sum();
        s += self.g.l2_norm().powi(2) + self.h.l2_norm().powi(2) + self.k.l2_norm().powi(2);
        s.sqrt()
    }
}

/// Residual norms of the five equations, relative to the data norm, plus the
/// zero-mode compatibility residual.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearResiduals {
    pub momentum: f64,
    pub divergence: f64,
    pub top_kinematic: f64,
    pub top_dirichlet: f64,
    pub bottom_normal: f64,
    pub compatibility: f64,
}

impl LinearResiduals {
    pub fn max(&self) -> f64 {
        [
            self.momentum,
            self.divergence,
            self.top_kinematic,
            self.top_dirichlet,
            self.bottom_normal,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct LinearSolution {
    pub u: Vec<StripField>,
    pub p: StripField,
    pub eta: SurfaceField,
    pub residuals: LinearResiduals,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearOptions {
    pub gamma: f64,
    /// Tolerance on zero-mode conditions.
    pub tol: f64,
    /// Relative tolerance on the top Neumann residual of the pressure solve.
    /// `None` uses `max(tol, h²(1+κ_max)²)`, the size of the vertical
    /// truncation error at the highest resolved mode.
    pub residual_tol: Option<f64>,
}

impl Default for LinearOptions {
    fn default() -> Self {
        Self {
            gamma: 0.0,
            tol: 1e-10,
            residual_tol: None,
        }
    }
}

impl LinearOptions {
    fn residual_tol(&self, spec: &DomainSpec) -> f64 {
        self.residual_tol.unwrap_or_else(|| {
            let kmax = (0..spec.n_modes())
                .map(|i| spec.wavenumber_norm(i))
                .fold(0.0, f64::max);
            self.tol.max(spec.dz().powi(2) * (1.0 + kmax).powi(2))
        })
    }
}

fn columns(v: &StripField) -> Vec<Vec<Complex64>> {
    let n = v.slab_coeffs(0).len();
    (0..n)
        .map(|i| v.slabs().iter().map(|s| s[i]).collect())
        .collect()
}

fn from_columns(spec: DomainSpec, cols: &[Vec<Complex64>]) -> Result<StripField> {
    let nz = cols[0].len();
    StripField::from_slabs(
        spec,
        (0..nz).map(|k| cols.iter().map(|c| c[k]).collect()).collect(),
    )
}

/// z-derivative on the nodes: five-point centered inside, five-point
/// one-sided near the ends (fourth order), except the bottom node, which uses
/// the three-point one-sided stencil of the pressure solver's Neumann row.
pub fn dz_fd(v: &StripField) -> StripField {
    const BOTTOM: [f64; 5] = [-18.0, 24.0, -6.0, 0.0, 0.0];
    const EDGE: [[f64; 5]; 2] = [
        [-25.0, 48.0, -36.0, 16.0, -3.0],
        [-3.0, -10.0, 18.0, -6.0, 1.0],
    ];
    const CENTER: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
    let z = v.z_nodes();
    let nz = z.len();
    let scale = 1.0 / (12.0 * (z[1] - z[0]));
    v.map_slabs(|k, s| {
        let (first, w, sign) = if k == 0 {
            (0, &BOTTOM, 1.0)
        } else if k < 2 {
            (0, &EDGE[k], 1.0)
        } else if k + 2 >= nz {
            (0, &EDGE[nz - 1 - k], -1.0)
        } else {
            (k - 2, &CENTER, 1.0)
        };
        let mut out = vec![ZERO; s.len()];
        for (j, &wj) in w.iter().enumerate() {
            if wj == 0.0 {
                continue;
            }
            // top stencils are the bottom ones mirrored
            let src = v.slab_coeffs(if sign > 0.0 { first + j } else { nz - 1 - j });
            let c = sign * wj * scale;
            for (o, x) in out.iter_mut().zip(src) {
                *o += c * x;
            }
        }
        out
    })
}

fn horizontal_grad(v: &StripField) -> Vec<StripField> {
    let spec = *v.spec();
    (0..spec.d())
        .map(|ax| v.apply(&partial(spec, ax)).expect("same spec"))
        .collect()
}

/// `∂_z𝔓η`, exact per mode.
fn dz_poisson(eta: &SurfaceField) -> StripField {
    let spec = *eta.spec();
    let pe = poisson_extension(eta);
    pe.map_slabs(|_, s| {
        s.iter()
            .enumerate()
            .map(|(i, c)| c * spec.wavenumber_norm(i))
            .collect()
    })
}

/// Per-mode vertical solve of `−∂_z²p + |ξ|²p = f`, `p(0) = k`,
/// `−∂_z p(−b) = l`.
#[derive(Clone, Debug)]
pub struct UdlnSolution {
    pub p: StripField,
    /// Max-norm residuals of the discrete interior equation, the Dirichlet
    /// row, and the one-sided Neumann row.
    pub residual_interior: f64,
    pub residual_top: f64,
    pub residual_bottom: f64,
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [Complex64]) -> Result<()> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::LinearSolve("zero pivot in tridiagonal solve".into()));
    }
    c[0] = sup[0] / beta;
    rhs[0] /= beta;
    for i in 1..n {
        beta = diag[i] - sub[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::LinearSolve("zero pivot in tridiagonal solve".into()));
        }
        if i < n - 1 {
            c[i] = sup[i] / beta;
        }
        let prev = rhs[i - 1];
        rhs[i] = (rhs[i] - sub[i] * prev) / beta;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= c[i] * next;
    }
    Ok(())
}

fn solve_mode(kappa: f64, h: f64, f: &[Complex64], k: Complex64, l: Complex64) -> Result<Vec<Complex64>> {
    let nz = f.len();
    let n = nz - 1;
    let k2 = kappa * kappa;
    let ih2 = 1.0 / (h * h);
    // unknowns p_0..p_{n−1}; p_n = k
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![ZERO; n];
    // one-sided Neumann row with p_2 eliminated through the first interior row
    diag[0] = 1.0;
    sup[0] = -(1.0 - 0.5 * h * h * k2);
    rhs[0] = h * l + 0.5 * h * h * f[1];
    for i in 1..n {
        sub[i] = -ih2;
        diag[i] = 2.0 * ih2 + k2;
        sup[i] = -ih2;
        rhs[i] = f[i];
    }
    rhs[n - 1] += ih2 * k;
    thomas(&sub, &diag, &sup, &mut rhs)?;
    rhs.push(k);
    Ok(rhs)
}

pub fn solve_udln(f: &StripField, k: &SurfaceField, l: &SurfaceField) -> Result<UdlnSolution> {
    let spec = *f.spec();
    if k.spec() != &spec || l.spec() != &spec {
        return Err(Error::SpecMismatch);
    }
    let z = f.z_nodes();
    let h = z[1] - z[0];
    let fcols = columns(f);
    let cols: Vec<Vec<Complex64>> = (0..spec.n_modes())
        .into_par_iter()
        .map(|i| solve_mode(spec.wavenumber_norm(i), h, &fcols[i], k.coeffs()[i], l.coeffs()[i]))
        .collect::<Result<_>>()?;

    let nz = z.len();
    let ih2 = 1.0 / (h * h);
    let mut r_int: f64 = 0.0;
    let mut r_top: f64 = 0.0;
    let mut r_bot: f64 = 0.0;
    for (i, p) in cols.iter().enumerate() {
        let k2 = spec.wavenumber_norm(i).powi(2);
        for j in 1..nz - 1 {
            let lap = -(p[j + 1] - 2.0 * p[j] + p[j - 1]) * ih2 + k2 * p[j];
            r_int = r_int.max((lap - fcols[i][j]).norm());
        }
        r_top = r_top.max((p[nz - 1] - k.coeffs()[i]).norm());
        let dz0 = (-3.0 * p[0] + 4.0 * p[1] - p[2]) * (0.5 / h);
        r_bot = r_bot.max((-dz0 - l.coeffs()[i]).norm());
    }
    Ok(UdlnSolution {
        p: from_columns(spec, &cols)?,
        residual_interior: r_int,
        residual_top: r_top,
        residual_bottom: r_bot,
    })
}

/// `Ξk`: the harmonic extension with `p = k` on top and no flux below,
/// `k̂(ξ)·cosh((z+b)|ξ|)/cosh(b|ξ|)`.
pub fn xi_operator(k: &SurfaceField, z_nodes: &[f64]) -> StripField {
    let spec = *k.spec();
    let b = spec.b();
    let slabs = z_nodes
        .iter()
        .map(|&z| {
            k.coeffs()
                .iter()
                .enumerate()
                .map(|(i, c)| c * cosh_ratio_raw(spec.wavenumber_norm(i), z, 0.0, b))
                .collect()
        })
        .collect();
    StripField::from_parts(spec, z_nodes.to_vec(), slabs).expect("node count matches")
}

/// ψ̂(ξ) = ∫ f̂ cosh((z+b)|ξ|)/cosh(b|ξ|) dz − k̂ m(ξ) − ĥ₊ + ĥ₋ sech(b|ξ|).
pub fn compute_psi(
    f: &StripField,
    h_plus: &SurfaceField,
    h_minus: &SurfaceField,
    k: &SurfaceField,
) -> Result<SurfaceField> {
    let spec = *f.spec();
    if h_plus.spec() != &spec || h_minus.spec() != &spec || k.spec() != &spec {
        return Err(Error::SpecMismatch);
    }
    let b = spec.b();
    let z = f.z_nodes();
    let coeffs = (0..spec.n_modes())
        .map(|i| {
            let r = spec.wavenumber_norm(i);
            let w: Vec<f64> = z.iter().map(|&zz| cosh_ratio_raw(r, zz, 0.0, b)).collect();
            let re: Vec<f64> = f.slabs().iter().zip(&w).map(|(s, w)| s[i].re * w).collect();
            let im: Vec<f64> = f.slabs().iter().zip(&w).map(|(s, w)| s[i].im * w).collect();
            let integral = Complex64::new(trapezoid(z, &re), trapezoid(z, &im));
            integral - k.coeffs()[i] * (r * (b * r).tanh()) - h_plus.coeffs()[i]
                + h_minus.coeffs()[i] / (b * r).cosh()
        })
        .collect();
    SurfaceField::from_coeffs(spec, coeffs)
}

/// `|∫ Ĝ(0, z) dz − Ĥ(0)|`.
pub fn check_compatibility(data: &LinearData) -> f64 {
    let z = data.g.z_nodes();
    let g0: Vec<f64> = data.g.slabs().iter().map(|s| s[0].re).collect();
    (trapezoid(z, &g0) - data.h.coeffs()[0].re).abs()
}

/// η̂ = ψ̂ / (−iγξ₁ + |ξ|tanh(b|ξ|)), η̂(0) = 0.
pub fn solve_eta_symbol(psi: &SurfaceField, gamma: f64, tol: f64) -> Result<SurfaceField> {
    let z0 = psi.coeffs()[0].norm();
    if z0 > tol {
        return Err(Error::NonzeroMean { value: z0, tol });
    }
    let spec = *psi.spec();
    let b = spec.b();
    let mut coeffs: Vec<Complex64> = psi
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if i == 0 {
                return ZERO;
            }
            let r = spec.wavenumber_norm(i);
            let sym = Complex64::new(r * (b * r).tanh(), -gamma * spec.wavenumber(i)[0]);
            c / sym
        })
        .collect();
    // Nyquist line: ξ₁ and −ξ₁ coincide, keep the conjugate-symmetric part
    let old = coeffs.clone();
    for (i, c) in coeffs.iter_mut().enumerate() {
        *c = 0.5 * (old[i] + old[spec.neg_index(i)].conj());
    }
    SurfaceField::from_coeffs(spec, coeffs)
}

/// Solve the pressure problem: returns `(p, η)` with
/// `−Δp = f`, `p = k` and `−∂_z p − ∂_z𝔓η + γ∂₁η = h₊` on top,
/// `−∂_z p − ∂_z𝔓η = h₋` below.
pub fn solve_t2(
    f: &StripField,
    h_plus: &SurfaceField,
    h_minus: &SurfaceField,
    k: &SurfaceField,
    opts: &LinearOptions,
) -> Result<(StripField, SurfaceField)> {
    let psi = compute_psi(f, h_plus, h_minus, k)?;
    let z0 = psi.coeffs()[0].norm();
    if z0 > opts.tol {
        return Err(Error::CompatibilityViolation {
            residual: z0,
            tol: opts.tol,
        });
    }
    solve_t2_from_psi(f, h_plus, h_minus, k, psi.with_zero_mean(), opts)
}

fn solve_t2_from_psi(
    f: &StripField,
    h_plus: &SurfaceField,
    h_minus: &SurfaceField,
    k: &SurfaceField,
    psi: SurfaceField,
    opts: &LinearOptions,
) -> Result<(StripField, SurfaceField)> {
    let spec = *f.spec();
    let b = spec.b();
    let eta = solve_eta_symbol(&psi, opts.gamma, opts.tol)?;
    let mut l = h_minus.clone();
    for (i, c) in l.coeffs_mut().iter_mut().enumerate() {
        let r = spec.wavenumber_norm(i);
        *c += r * (-b * r).exp() * eta.coeffs()[i];
    }
    let p = solve_udln(f, k, &l)?.p;

    // top Neumann condition holds only up to the vertical truncation error
    let dzp = dz_fd(&p).top();
    let scale = [h_plus.l2_norm(), h_minus.l2_norm(), k.l2_norm(), f.l2_norm()]
        .into_iter()
        .fold(0.0, f64::max);
    let mut resid = SurfaceField::zeros(spec);
    for (i, c) in resid.coeffs_mut().iter_mut().enumerate() {
        let r = spec.wavenumber_norm(i);
        let g1 = Complex64::new(0.0, opts.gamma * spec.wavenumber(i)[0]);
        *c = -dzp.coeffs()[i] - r * eta.coeffs()[i] + g1 * eta.coeffs()[i]
            - h_plus.coeffs()[i];
    }
    let rel = if scale > 0.0 { resid.l2_norm() / scale } else { resid.l2_norm() };
    let tol = opts.residual_tol(&spec);
    if rel > tol {
        return Err(Error::ResidualExceedsTol {
            which: "top Neumann condition",
            residual: rel,
            tol,
        });
    }
    Ok((p, eta))
}

/// Forward map `(u, p, η) ↦ (F, G, H, K)` with spectral x-derivatives, the
/// node z-derivative of [`dz_fd`], and the exact `∂_z𝔓η`.
pub fn apply_t3(u: &[StripField], p: &StripField, eta: &SurfaceField, gamma: f64) -> Result<LinearData> {
    let spec = *p.spec();
    let d = spec.d();
    if u.len() != d + 1 {
        return Err(Error::SizeMismatch {
            expected: d + 1,
            got: u.len(),
        });
    }
    let pe = poisson_extension(eta);
    let gp = horizontal_grad(p);
    let gpe = horizontal_grad(&pe);
    let dzp = dz_fd(p);
    let dzpe = dz_poisson(eta);
    let mut f_vec = Vec::with_capacity(d + 1);
    for ax in 0..d {
        f_vec.push(u[ax].try_add(&gp[ax])?.try_add(&gpe[ax])?);
    }
    f_vec.push(u[d].try_add(&dzp)?.try_add(&dzpe)?);

    let mut g = dz_fd(&u[d]);
    for (ax, comp) in u.iter().take(d).enumerate() {
        g = g.try_add(&comp.apply(&partial(spec, ax))?)?;
    }
    let d1eta = eta.apply(&partial(spec, 0))?;
    let h = &u[d].top() + &d1eta.scale(gamma);
    Ok(LinearData {
        f_vec,
        g,
        h,
        k: p.top(),
    })
}

/// Full solve: `(f, h₊, h₋, k) = (G − div F, H − F_n|₀, −F_n|₋b, K)`, then the
/// pressure solve, then `u = F − ∇p − ∇𝔓η`.
pub fn solve_t3(data: &LinearData, opts: &LinearOptions) -> Result<LinearSolution> {
    data.validate()?;
    let spec = *data.spec();
    let d = spec.d();
    let compat = check_compatibility(data);
    if compat > opts.tol {
        return Err(Error::CompatibilityViolation {
            residual: compat,
            tol: opts.tol,
        });
    }
    let mut div_f = dz_fd(&data.f_vec[d]);
    for ax in 0..d {
        div_f = div_f.try_add(&data.f_vec[ax].apply(&partial(spec, ax))?)?;
    }
    let f = data.g.try_sub(&div_f)?;
    let h_plus = &data.h - &data.f_vec[d].top();
    let h_minus = data.f_vec[d].bottom().scale(-1.0);
    let psi = compute_psi(&f, &h_plus, &h_minus, &data.k)?;
    // with V^s data the zero mode of ψ is a quadrature artifact of div F
    let (p, eta) = solve_t2_from_psi(&f, &h_plus, &h_minus, &data.k, psi.with_zero_mean(), opts)?;

    let pe = poisson_extension(&eta);
    let gp = horizontal_grad(&p);
    let gpe = horizontal_grad(&pe);
    let mut u = Vec::with_capacity(d + 1);
    for ax in 0..d {
        u.push(data.f_vec[ax].try_sub(&gp[ax])?.try_sub(&gpe[ax])?);
    }
    u.push(data.f_vec[d].try_sub(&dz_fd(&p))?.try_sub(&dz_poisson(&eta))?);

    let fwd = apply_t3(&u, &p, &eta, opts.gamma)?;
    let scale = data.norm().max(f64::MIN_POSITIVE);
    let momentum = fwd
        .f_vec
        .iter()
        .zip(&data.f_vec)
        .map(|(a, b)| a.try_sub(b).map(|x| x.l2_norm().powi(2)))
        .sum::<Result<f64>>()?
        .sqrt();
    let residuals = LinearResiduals {
        momentum: momentum / scale,
        divergence: fwd.g.try_sub(&data.g)?.l2_norm() / scale,
        top_kinematic: (&fwd.h - &data.h).l2_norm() / scale,
        top_dirichlet: (&fwd.k - &data.k).l2_norm() / scale,
        bottom_normal: u[d].bottom().l2_norm() / scale,
        compatibility: compat,
    };
    Ok(LinearSolution {
        u,
        p,
        eta,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(nz: usize) -> DomainSpec {
        DomainSpec::new(1, 16, nz, 1.0).unwrap()
    }

    #[test]
    fn udln_harmonic_extension() {
        let s = spec(129);
        let k = SurfaceField::cosine(s, &[1], 1.0).unwrap();
        let zero = SurfaceField::zeros(s);
        let sol = solve_udln(&StripField::zeros(s), &k, &zero).unwrap();
        let exact = xi_operator(&k, &s.z_nodes());
        let err = sol.p.try_sub(&exact).unwrap().max_abs_coeff();
        assert!(err < s.dz().powi(2), "err {err}");
        assert!(sol.residual_interior < 1e-10);
        assert!(sol.residual_bottom < 1e-12);
        assert_eq!(sol.residual_top, 0.0);

        let z = solve_udln(&StripField::zeros(s), &zero, &zero).unwrap();
        assert_eq!(z.p.max_abs_coeff(), 0.0);
    }

    #[test]
    fn udln_manufactured() {
        // p = cos(x) z²: −Δp = cos(x)(z² − 2), k = 0, −∂_z p(−b) = 2b cos x;
        // the stencils are exact on quadratics
        let s = spec(65);
        let exact = StripField::from_fn(s, |x, z| x[0].cos() * z * z);
        let f = StripField::from_fn(s, |x, z| x[0].cos() * (z * z - 2.0));
        let l = SurfaceField::cosine(s, &[1], 2.0).unwrap();
        let sol = solve_udln(&f, &SurfaceField::zeros(s), &l).unwrap();
        assert!(sol.p.try_sub(&exact).unwrap().max_abs_coeff() < 1e-12);

        // p = cos(x) sin(z): −Δp = 2 cos(x) sin(z), −∂_z p(−b) = −cos(1) cos x
        let errs: Vec<f64> = [65, 129]
            .iter()
            .map(|&nz| {
                let s = spec(nz);
                let exact = StripField::from_fn(s, |x, z| x[0].cos() * z.sin());
                let f = exact.scale(2.0);
                let l = SurfaceField::cosine(s, &[1], -1f64.cos()).unwrap();
                let sol = solve_udln(&f, &SurfaceField::zeros(s), &l).unwrap();
                sol.p.try_sub(&exact).unwrap().max_abs_coeff()
            })
            .collect();
        assert!(errs[0] < 1e-3);
        let ratio = errs[0] / errs[1];
        assert!((3.5..4.5).contains(&ratio), "{errs:?}");
    }

    #[test]
    fn xi_examples() {
        let s = spec(33);
        let z = s.z_nodes();
        let c = xi_operator(&SurfaceField::constant(s, 2.0), &z);
        assert!(c.slabs().iter().all(|sl| sl[0].re == 2.0));
        let k = SurfaceField::cosine(s, &[1], 1.0).unwrap();
        let x = xi_operator(&k, &z);
        assert_relative_eq!(x.bottom().coeff(&[1]).unwrap().re * 2.0, 0.6480542736638855, epsilon = 1e-14);
    }

    #[test]
    fn psi_examples() {
        let s = spec(33);
        let zero_strip = StripField::zeros(s);
        let zero = SurfaceField::zeros(s);
        let mut k = SurfaceField::zeros(s);
        let mut hp = SurfaceField::zeros(s);
        for m in [1i64, -1] {
            let i = s.index_of(&[m]).unwrap();
            k.coeffs_mut()[i] = Complex64::new(1.0, 0.0);
            hp.coeffs_mut()[i] = Complex64::new(-1f64.tanh(), 0.0);
        }
        let psi = compute_psi(&zero_strip, &hp, &zero, &k).unwrap();
        assert!(psi.coeff(&[1]).unwrap().norm() < 1e-15);

        let cos = SurfaceField::cosine(s, &[1], 1.0).unwrap();
        let psi = compute_psi(&zero_strip, &cos, &zero, &zero).unwrap();
        assert!((&psi + &cos).l2_norm() < 1e-16);
    }

    #[test]
    fn compatibility_examples() {
        let s = spec(33);
        let mut data = LinearData::zeros(s);
        assert_eq!(check_compatibility(&data), 0.0);
        data.g = StripField::constant_in_z(&SurfaceField::constant(s, 1.0));
        data.h = SurfaceField::constant(s, 1.0);
        assert!(check_compatibility(&data) < 1e-15);
        let mut d2 = LinearData::zeros(s);
        d2.h = SurfaceField::cosine(s, &[1], 1.0).unwrap();
        assert_eq!(check_compatibility(&d2), 0.0);
    }

    #[test]
    fn eta_symbol_examples() {
        let s = spec(33);
        assert_eq!(solve_eta_symbol(&SurfaceField::zeros(s), 1.0, 1e-12).unwrap().l2_norm(), 0.0);
        let mut psi = SurfaceField::zeros(s);
        psi.coeffs_mut()[s.index_of(&[1]).unwrap()] = Complex64::new(1.0, 0.0);
        psi.coeffs_mut()[s.index_of(&[-1]).unwrap()] = Complex64::new(1.0, 0.0);
        let eta = solve_eta_symbol(&psi, 1.0, 1e-12).unwrap();
        assert_relative_eq!(eta.coeff(&[1]).unwrap().norm(), 1.0 / (1.0 + 1f64.tanh().powi(2)).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(eta.coeff(&[1]).unwrap().norm(), 0.79555, epsilon = 1e-5);

        let cos = SurfaceField::cosine(s, &[1], 1.0).unwrap();
        let eta0 = solve_eta_symbol(&cos, 0.0, 1e-12).unwrap();
        assert!((&eta0 - &cos.scale(1.0 / 1f64.tanh())).l2_norm() < 1e-15);

        let bad = SurfaceField::constant(s, 1e-3);
        assert!(matches!(solve_eta_symbol(&bad, 0.0, 1e-10), Err(Error::NonzeroMean { .. })));
    }

    #[test]
    fn t2_examples() {
        let s = spec(65);
        let zs = StripField::zeros(s);
        let z = SurfaceField::zeros(s);
        let opts = LinearOptions {
            gamma: 1.0,
            ..Default::default()
        };
        let (p, eta) = solve_t2(&zs, &z, &z, &z, &opts).unwrap();
        assert_eq!(p.max_abs_coeff(), 0.0);
        assert_eq!(eta.l2_norm(), 0.0);

        let hp = SurfaceField::cosine(s, &[1], 1.0).unwrap();
        let (_, eta) = solve_t2(&zs, &hp, &z, &z, &opts).unwrap();
        let amp = eta.coeff(&[1]).unwrap().norm();
        assert_relative_eq!(amp, 0.5 / (1.0 + 1f64.tanh().powi(2)).sqrt(), epsilon = 1e-14);

        let bad = SurfaceField::constant(s, 1.0);
        assert!(matches!(
            solve_t2(&zs, &bad, &z, &z, &opts),
            Err(Error::CompatibilityViolation { .. })
        ));
    }

    #[test]
    fn t3_zero_data() {
        let s = spec(33);
        let sol = solve_t3(&LinearData::zeros(s), &LinearOptions::default()).unwrap();
        assert_eq!(sol.p.max_abs_coeff(), 0.0);
        assert_eq!(sol.eta.l2_norm(), 0.0);
        assert!(sol.u.iter().all(|u| u.max_abs_coeff() == 0.0));
    }

    #[test]
    fn t3_bottom_normal_vanishes() {
        let s = spec(65);
        let mut data = LinearData::zeros(s);
        data.f_vec[1] = StripField::from_fn(s, |x, z| (x[0] + 0.3).cos() * (1.0 + z * z));
        data.f_vec[0] = StripField::from_fn(s, |x, z| (2.0 * x[0]).sin() * z);
        data.h = SurfaceField::cosine(s, &[2], 0.3).unwrap();
        data.k = SurfaceField::cosine(s, &[1], 0.1).unwrap();
        let sol = solve_t3(
            &data,
            &LinearOptions {
                gamma: 0.5,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(sol.u[1].bottom().l2_norm() <= 1e-12);
        assert!(sol.eta.mean() == 0.0);
        assert!(sol.residuals.momentum < 1e-14);
        assert!(sol.residuals.top_dirichlet == 0.0);
    }
}
