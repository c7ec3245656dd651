//! Dirichlet–Neumann operator `G(η)f = m(D)f + R(η)f` on the strip, computed
//! by straightening the fluid domain and iterating the coupled
//! forward/backward vertical system for `(v, w)`; plus a finite-difference
//! oracle for `d = 1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::norm_u;
use crate::spectral::{
    cosh_ratio_raw, d_of_z, dealias_in_place, multiplier_m, partial, transform_forward,
    transform_inverse, DomainSpec, StripField, SurfaceField,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dealias {
    #[default]
    TwoThirds,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DnOptions {
    /// Relative stopping tolerance on `norm_U(v^{k+1} − v^k)`.
    pub tol: f64,
    pub max_iter: usize,
    pub dealias: Dealias,
    /// `DiffeoViolation` when `min ∂_zϱ` on the grid is at or below this.
    pub margin: f64,
    /// Regularity index of the `norm_U` stopping test.
    pub s_check: f64,
    /// Run exactly this many sweeps, ignoring `tol`. Makes the result a
    /// smooth function of the inputs (used by the time stepper).
    pub fixed_sweeps: Option<usize>,
}

impl Default for DnOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            dealias: Dealias::TwoThirds,
            margin: 0.1,
            s_check: 1.0,
            fixed_sweeps: None,
        }
    }
}

impl DnOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Coefficient fields of the straightening `ϱ = ((z+b)/b) e^{z|D|}η + z`.
#[derive(Clone, Debug)]
pub struct StraightenedCoefficients {
    pub rho: StripField,
    pub dz_rho: StripField,
    pub grad_rho: Vec<StripField>,
    pub min_dz_rho: f64,
    // grid values per slab: a = ∂_zϱ − 1, ∇ϱ, β = (|∇ϱ|² − a)/∂_zϱ
    a_grid: Vec<Vec<f64>>,
    g_grid: Vec<Vec<Vec<f64>>>,
    beta_grid: Vec<Vec<f64>>,
}

/// Coefficients of `ϱ`, `∂_zϱ`, `∇ϱ` at one height `z` (any real `z`; the
/// formulas extend analytically below the bed).
pub(crate) struct SlabCoeffs {
    pub rho: Vec<Complex64>,
    pub dz_rho: Vec<Complex64>,
    pub grad: Vec<Vec<Complex64>>,
}

pub(crate) fn straightening_at(eta: &SurfaceField, z: f64) -> SlabCoeffs {
    let spec = eta.spec();
    let b = spec.b();
    let lam = (z + b) / b;
    let n = spec.n_modes();
    let mut rho = vec![ZERO; n];
    let mut dz = vec![ZERO; n];
    let mut grad = vec![vec![ZERO; n]; spec.d()];
    for (i, &e) in eta.coeffs().iter().enumerate() {
        let k = spec.wavenumber(i);
        let r = spec.wavenumber_norm(i);
        let ext = e * (r * z).exp();
        rho[i] = lam * ext;
        dz[i] = ext / b + lam * r * ext;
        for (ax, g) in grad.iter_mut().enumerate() {
            g[i] = lam * Complex64::new(0.0, k[ax]) * ext;
        }
    }
    rho[0] += z;
    dz[0] += 1.0;
    // Nyquist lines: keep the derivative symbol conjugate-symmetric
    let sym = |c: &mut Vec<Complex64>| {
        let old = c.clone();
        for (i, x) in c.iter_mut().enumerate() {
            *x = 0.5 * (old[i] + old[spec.neg_index(i)].conj());
        }
    };
    for g in grad.iter_mut() {
        sym(g);
    }
    SlabCoeffs {
        rho,
        dz_rho: dz,
        grad,
    }
}

pub fn build_straightening(eta: &SurfaceField, margin: f64) -> Result<StraightenedCoefficients> {
    let spec = *eta.spec();
    let z_nodes = spec.z_nodes();
    let d = spec.d();
    let slabs: Vec<SlabCoeffs> = z_nodes.par_iter().map(|&z| straightening_at(eta, z)).collect();

    let grids: Vec<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> = slabs
        .par_iter()
        .map(|s| {
            let dz = transform_inverse(&spec, &s.dz_rho);
            let g: Vec<Vec<f64>> = s.grad.iter().map(|c| transform_inverse(&spec, c)).collect();
            let a: Vec<f64> = dz.iter().map(|x| x - 1.0).collect();
            let beta = (0..dz.len())
                .map(|p| {
                    let g2: f64 = g.iter().map(|gi| gi[p] * gi[p]).sum();
                    (g2 - a[p]) / dz[p]
                })
                .collect();
            (a, g, beta)
        })
        .collect();
    let min_dz_rho = grids
        .iter()
        .flat_map(|(a, _, _)| a.iter())
        .fold(f64::INFINITY, |m, a| m.min(1.0 + a));
    if min_dz_rho <= margin {
        return Err(Error::DiffeoViolation { min_dz_rho, margin });
    }

    let mut a_grid = Vec::with_capacity(grids.len());
    let mut g_grid = vec![Vec::with_capacity(grids.len()); d];
    let mut beta_grid = Vec::with_capacity(grids.len());
    for (a, g, beta) in grids {
        a_grid.push(a);
        for (ax, gi) in g.into_iter().enumerate() {
            g_grid[ax].push(gi);
        }
        beta_grid.push(beta);
    }

    let mut rho = Vec::with_capacity(slabs.len());
    let mut dz_rho = Vec::with_capacity(slabs.len());
    let mut grad: Vec<Vec<Vec<Complex64>>> = vec![Vec::with_capacity(slabs.len()); d];
    for s in slabs {
        rho.push(s.rho);
        dz_rho.push(s.dz_rho);
        for (ax, g) in s.grad.into_iter().enumerate() {
            grad[ax].push(g);
        }
    }
    Ok(StraightenedCoefficients {
        rho: StripField::from_slabs(spec, rho)?,
        dz_rho: StripField::from_slabs(spec, dz_rho)?,
        grad_rho: grad
            .into_iter()
            .map(|g| StripField::from_slabs(spec, g))
            .collect::<Result<_>>()?,
        min_dz_rho,
        a_grid,
        g_grid,
        beta_grid,
    })
}

fn to_field(spec: &DomainSpec, values: &[f64], dealias: Dealias) -> Vec<Complex64> {
    let mut c = transform_forward(spec, values).expect("grid size");
    if dealias == Dealias::TwoThirds {
        dealias_in_place(spec, &mut c);
    }
    let old = c.clone();
    for (i, x) in c.iter_mut().enumerate() {
        *x = 0.5 * (old[i] + old[spec.neg_index(i)].conj());
    }
    c
}

/// `Q_a[v] = ∇ϱ·∇v − β ∂_z v` and `Q_b[v] = −a∇v + ∇ϱ ∂_z v`, formed on the
/// grid. `dz_v` is the vertical derivative to use (the solver passes the
/// relation `𝒟(z)v + w + Q_a` from the previous sweep).
pub fn q_nonlinearities(
    v: &StripField,
    dz_v: &StripField,
    coeffs: &StraightenedCoefficients,
    dealias: Dealias,
) -> Result<(StripField, Vec<StripField>)> {
    let spec = *v.spec();
    if coeffs.a_grid.len() != v.nz() || dz_v.nz() != v.nz() {
        return Err(Error::SpecMismatch);
    }
    let d = spec.d();
    let derivs: Vec<Vec<Complex64>> = (0..d)
        .map(|ax| partial(spec, ax).symbol().to_vec())
        .collect();
    let out: Vec<(Vec<Complex64>, Vec<Vec<Complex64>>)> = (0..v.nz())
        .into_par_iter()
        .map(|k| {
            let vs = v.slab_coeffs(k);
            let grad_v: Vec<Vec<f64>> = derivs
                .iter()
                .map(|sym| {
                    let c: Vec<Complex64> = vs.iter().zip(sym).map(|(a, s)| a * s).collect();
                    transform_inverse(&spec, &c)
                })
                .collect();
            let dzv = transform_inverse(&spec, dz_v.slab_coeffs(k));
            let a = &coeffs.a_grid[k];
            let beta = &coeffs.beta_grid[k];
            let n = dzv.len();
            let qa: Vec<f64> = (0..n)
                .map(|p| {
                    let mut s = -beta[p] * dzv[p];
                    for ax in 0..d {
                        s += coeffs.g_grid[ax][k][p] * grad_v[ax][p];
                    }
                    s
                })
                .collect();
            let qb: Vec<Vec<Complex64>> = (0..d)
                .map(|ax| {
                    let vals: Vec<f64> = (0..n)
                        .map(|p| -a[p] * grad_v[ax][p] + coeffs.g_grid[ax][k][p] * dzv[p])
                        .collect();
                    to_field(&spec, &vals, dealias)
                })
                .collect();
            (to_field(&spec, &qa, dealias), qb)
        })
        .collect();
    let mut qa = Vec::with_capacity(out.len());
    let mut qb: Vec<Vec<Vec<Complex64>>> = vec![Vec::with_capacity(out.len()); d];
    for (a, b) in out {
        qa.push(a);
        for (ax, c) in b.into_iter().enumerate() {
            qb[ax].push(c);
        }
    }
    Ok((
        StripField::from_slabs(spec, qa)?,
        qb.into_iter()
            .map(|s| StripField::from_slabs(spec, s))
            .collect::<Result<_>>()?,
    ))
}

/// Per-mode vertical kernels on the node grid.
struct VerticalTables {
    /// `step[k][i] = C(z_{k−1}, z_k)` for `k ≥ 1`, with `C(a, c) = cosh((a+b)κ)/cosh((c+b)κ)`.
    step: Vec<Vec<f64>>,
    /// `C(z_k, 0)`.
    to_top: Vec<Vec<f64>>,
    /// `𝒟(z_k) = κ tanh((z_k+b)κ)`.
    dsym: Vec<Vec<f64>>,
}

impl VerticalTables {
    fn new(spec: &DomainSpec, z: &[f64]) -> Self {
        let b = spec.b();
        let kappa: Vec<f64> = (0..spec.n_modes()).map(|i| spec.wavenumber_norm(i)).collect();
        let step = (0..z.len())
            .map(|k| {
                if k == 0 {
                    vec![1.0; kappa.len()]
                } else {
                    kappa.iter().map(|&r| cosh_ratio_raw(r, z[k - 1], z[k], b)).collect()
                }
            })
            .collect();
        let to_top = z
            .iter()
            .map(|&zk| kappa.iter().map(|&r| cosh_ratio_raw(r, zk, 0.0, b)).collect())
            .collect();
        let dsym = z
            .iter()
            .map(|&zk| kappa.iter().map(|&r| d_of_z(r, zk, b)).collect())
            .collect();
        Self {
            step,
            to_top,
            dsym,
        }
    }
}

/// Composite-trapezoid `w(z) = ∫_{−b}^z C(z′, z) g(z′) dz′` per mode.
fn integrate_up(tables: &VerticalTables, z: &[f64], g: &StripField) -> Vec<Vec<Complex64>> {
    let nz = z.len();
    let n = g.slab_coeffs(0).len();
    let mut w = vec![vec![ZERO; n]; nz];
    for k in 1..nz {
        let h2 = 0.5 * (z[k] - z[k - 1]);
        let (lo, hi) = w.split_at_mut(k);
        let prev = &lo[k - 1];
        let cur = &mut hi[0];
        let gp = g.slab_coeffs(k - 1);
        let gc = g.slab_coeffs(k);
        for i in 0..n {
            cur[i] = tables.step[k][i] * (prev[i] + h2 * gp[i]) + h2 * gc[i];
        }
    }
    w
}

/// Composite-trapezoid `J(z) = ∫_z^0 C(z, z′) h(z′) dz′` per mode.
fn integrate_down(tables: &VerticalTables, z: &[f64], h: &StripField) -> Vec<Vec<Complex64>> {
    let nz = z.len();
    let n = h.slab_coeffs(0).len();
    let mut j = vec![vec![ZERO; n]; nz];
    for k in (0..nz - 1).rev() {
        let h2 = 0.5 * (z[k + 1] - z[k]);
        let (lo, hi) = j.split_at_mut(k + 1);
        let cur = &mut lo[k];
        let next = &hi[0];
        let hn = h.slab_coeffs(k + 1);
        let hc = h.slab_coeffs(k);
        for i in 0..n {
            cur[i] = tables.step[k + 1][i] * (next[i] + h2 * hn[i]) + h2 * hc[i];
        }
    }
    j
}

/// Converged straightened harmonic extension and its auxiliary field.
#[derive(Clone, Debug)]
pub struct HarmonicPair {
    pub v: StripField,
    pub w: StripField,
    pub qa: StripField,
    pub qb: Vec<StripField>,
    pub iterations: usize,
    /// `norm_U(v^{k+1} − v^k)` per sweep (empty in fixed-sweep mode).
    pub step_history: Vec<f64>,
}

impl HarmonicPair {
    /// Largest ratio of successive step norms (0 when fewer than 2 steps).
    pub fn contraction_factor(&self) -> f64 {
        self.step_history
            .windows(2)
            .filter(|s| s[0] > 0.0)
            .map(|s| s[1] / s[0])
            .fold(0.0, f64::max)
    }
}

pub fn solve_vw(eta: &SurfaceField, f: &SurfaceField, opts: &DnOptions) -> Result<HarmonicPair> {
    let spec = *eta.spec();
    if f.spec() != &spec {
        return Err(Error::SpecMismatch);
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {}", opts.tol)));
    }
    let coeffs = build_straightening(eta, opts.margin)?;
    let z = spec.z_nodes();
    let tables = VerticalTables::new(&spec, &z);
    let d = spec.d();
    let derivs: Vec<Vec<Complex64>> = (0..d)
        .map(|ax| partial(spec, ax).symbol().to_vec())
        .collect();

    let base: Vec<Vec<Complex64>> = tables
        .to_top
        .iter()
        .map(|row| row.iter().zip(f.coeffs()).map(|(c, x)| c * x).collect())
        .collect();
    let mut v = StripField::from_slabs(spec, base.clone())?;
    let mut w = StripField::zeros(spec);
    let mut qa = StripField::zeros(spec);
    let mut qb = vec![StripField::zeros(spec); d];
    let mut history = Vec::new();
    let sweeps = opts.fixed_sweeps.unwrap_or(opts.max_iter);

    for it in 1..=sweeps {
        let dz_v = v.map_slabs(|k, s| {
            s.iter()
                .enumerate()
                .map(|(i, c)| tables.dsym[k][i] * c + w.slab_coeffs(k)[i] + qa.slab_coeffs(k)[i])
                .collect()
        });
        let (qa_new, qb_new) = q_nonlinearities(&v, &dz_v, &coeffs, opts.dealias)?;
        let src = qa_new.map_slabs(|k, a| {
            (0..a.len())
                .map(|i| {
                    let mut s = -tables.dsym[k][i] * a[i];
                    for ax in 0..d {
                        s += derivs[ax][i] * qb_new[ax].slab_coeffs(k)[i];
                    }
                    s
                })
                .collect()
        });
        let w_new = StripField::from_slabs(spec, integrate_up(&tables, &z, &src))?;
        let hsrc = w_new.zip_with(&qa_new, |a, b| a + b);
        let jdown = integrate_down(&tables, &z, &hsrc);
        let v_new = StripField::from_slabs(
            spec,
            base.iter()
                .zip(&jdown)
                .map(|(b0, j)| b0.iter().zip(j).map(|(x, y)| x - y).collect())
                .collect(),
        )?;

        let (step, scale) = if opts.fixed_sweeps.is_some() {
            (0.0, 0.0)
        } else {
            (
                norm_u(&v_new.zip_with(&v, |a, b| a - b), opts.s_check),
                norm_u(&v_new, opts.s_check),
            )
        };
        if opts.fixed_sweeps.is_none() {
            history.push(step);
        }
        v = v_new;
        w = w_new;
        qa = qa_new;
        qb = qb_new;
        if !step.is_finite() {
            break;
        }
        let done = step <= opts.tol * scale;
        if (opts.fixed_sweeps.is_none() && done) || (opts.fixed_sweeps == Some(it)) {
            return Ok(HarmonicPair {
                v,
                w,
                qa,
                qb,
                iterations: it,
                step_history: history,
            });
        }
    }
    Err(Error::NoConvergence {
        solver: "dn_picard",
        iterations: history.len(),
        last_step: history.last().copied().unwrap_or(f64::NAN),
    })
}

/// `R(η)f = w|_{z=0}`.
pub fn dn_remainder(eta: &SurfaceField, f: &SurfaceField, opts: &DnOptions) -> Result<SurfaceField> {
    Ok(solve_vw(eta, f, opts)?.w.top())
}

/// `G(η)f = m(D)f + R(η)f`.
pub fn dn_apply(eta: &SurfaceField, f: &SurfaceField, opts: &DnOptions) -> Result<SurfaceField> {
    let r = dn_remainder(eta, f, opts)?;
    let mf = f.apply(&multiplier_m(*f.spec()))?;
    Ok(&mf + &r)
}

/// Periodic spectral differentiation matrix on the `d = 1` grid.
fn spectral_diff_matrix(spec: &DomainSpec) -> DMatrix<f64> {
    let n = spec.nx();
    let sym = partial(*spec, 0);
    let mut dm = DMatrix::zeros(n, n);
    for l in 0..n {
        let mut e = vec![0.0; n];
        e[l] = 1.0;
        let c: Vec<Complex64> = transform_forward(spec, &e)
            .expect("size")
            .iter()
            .zip(sym.symbol())
            .map(|(a, s)| a * s)
            .collect();
        let col = transform_inverse(spec, &c);
        for j in 0..n {
            dm[(j, l)] = col[j];
        }
    }
    dm
}

struct GridCoeffs {
    a11: Vec<f64>,
    a12: Vec<f64>,
    a22: Vec<f64>,
}

fn grid_coeffs(eta: &SurfaceField, z: f64) -> GridCoeffs {
    let spec = eta.spec();
    let s = straightening_at(eta, z);
    let dz = transform_inverse(spec, &s.dz_rho);
    let gx = transform_inverse(spec, &s.grad[0]);
    GridCoeffs {
        a12: gx.iter().map(|g| -g).collect(),
        a22: dz.iter().zip(&gx).map(|(d, g)| (1.0 + g * g) / d).collect(),
        a11: dz,
    }
}

/// Independent reference for `G(η)f` when `d = 1`: solves `div(𝒜∇v) = 0` on
/// the straightened strip, Fourier collocation in x and second-order
/// differences on `nz_fd` uniform levels in z, then returns the top conormal
/// trace `−∂_xϱ ∂_x v + (1 + (∂_xϱ)²)/∂_zϱ · ∂_z v`.
pub fn dn_oracle_fd(eta: &SurfaceField, f: &SurfaceField, nz_fd: usize) -> Result<SurfaceField> {
    let spec = *eta.spec();
    if spec.d() != 1 {
        return Err(Error::InvalidArgument("finite-difference oracle needs d = 1".into()));
    }
    if f.spec() != &spec {
        return Err(Error::SpecMismatch);
    }
    if nz_fd < 5 {
        return Err(Error::InvalidArgument(format!("nz_fd must be >= 5, got {nz_fd}")));
    }
    let n = spec.nx();
    let b = spec.b();
    let nlev = nz_fd - 1;
    let h = b / nlev as f64;
    let zk = |k: isize| -b + k as f64 * h;
    let dmat = spectral_diff_matrix(&spec);
    let fvals = f.to_grid();
    let fvec = DVector::from_vec(fvals.clone());

    let coeffs_at: Vec<GridCoeffs> = (-1..=nlev as isize).map(|k| grid_coeffs(eta, zk(k))).collect();
    let cf = |k: isize| &coeffs_at[(k + 1) as usize];
    let half: Vec<Vec<f64>> = (-1..nlev as isize)
        .map(|k| grid_coeffs(eta, zk(k) + 0.5 * h).a22)
        .collect();
    let a22h = |k: isize| &half[(k + 1) as usize];

    let diag = |v: &[f64]| DMatrix::from_diagonal(&DVector::from_column_slice(v));
    let inv_h2 = 1.0 / (h * h);
    let inv_2h = 0.5 / h;

    // block rows k = 0..nlev−1: L_k v_{k−1} + D_k v_k + U_k v_{k+1} = r_k
    let mut lower = Vec::with_capacity(nlev);
    let mut mid = Vec::with_capacity(nlev);
    let mut upper = Vec::with_capacity(nlev);
    let mut rhs = Vec::with_capacity(nlev);
    for k in 0..nlev as isize {
        let c = cf(k);
        let up = a22h(k);
        let dn = a22h(k - 1);
        let dk = &dmat * diag(&c.a11) * &dmat
            - diag(&up.iter().zip(dn).map(|(a, b)| (a + b) * inv_h2).collect::<Vec<_>>());
        let cross = &dmat * diag(&c.a12) * inv_2h;
        let uk = diag(&up.iter().map(|a| a * inv_h2).collect::<Vec<_>>())
            + &cross
            + diag(&cf(k + 1).a12) * &dmat * inv_2h;
        let lk = diag(&dn.iter().map(|a| a * inv_h2).collect::<Vec<_>>())
            - &cross
            - diag(&cf(k - 1).a12) * &dmat * inv_2h;
        let mut r = DVector::zeros(n);
        let (lk, uk) = if k == 0 {
            // mirrored ghost level v_{−1} = v_1
            (DMatrix::zeros(n, n), uk + lk)
        } else {
            (lk, uk)
        };
        if k == nlev as isize - 1 {
            r -= &uk * &fvec;
            upper.push(DMatrix::zeros(n, n));
        } else {
            upper.push(uk);
        }
        lower.push(lk);
        mid.push(dk);
        rhs.push(r);
    }

    // block Thomas
    let mut cprime: Vec<DMatrix<f64>> = Vec::with_capacity(nlev);
    let mut dprime: Vec<DVector<f64>> = Vec::with_capacity(nlev);
    for k in 0..nlev {
        let (m, r) = if k == 0 {
            (mid[0].clone(), rhs[0].clone())
        } else {
            (
                &mid[k] - &lower[k] * &cprime[k - 1],
                &rhs[k] - &lower[k] * &dprime[k - 1],
            )
        };
        let lu = m.lu();
        let cp = lu
            .solve(&upper[k])
            .ok_or_else(|| Error::LinearSolve(format!("singular block at level {k}")))?;
        let dp = lu
            .solve(&r)
            .ok_or_else(|| Error::LinearSolve(format!("singular block at level {k}")))?;
        cprime.push(cp);
        dprime.push(dp);
    }
    let mut sol: Vec<DVector<f64>> = vec![DVector::zeros(n); nlev + 1];
    sol[nlev] = fvec.clone();
    for k in (0..nlev).rev() {
        sol[k] = if k == nlev - 1 {
            dprime[k].clone()
        } else {
            &dprime[k] - &cprime[k] * &sol[k + 1]
        };
    }

    let top = cf(nlev as isize);
    let dzv = (3.0 * &sol[nlev] - 4.0 * &sol[nlev - 1] + &sol[nlev - 2]) / (2.0 * h);
    let dxf = &dmat * &fvec;
    let trace: Vec<f64> = (0..n)
        .map(|j| top.a12[j] * dxf[j] + top.a22[j] * dzv[j])
        .collect();
    SurfaceField::from_grid(spec, &trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(nz: usize) -> DomainSpec {
        DomainSpec::new(1, 16, nz, 1.0).unwrap()
    }

    #[test]
    fn straightening_examples() {
        let s = spec(17);
        let flat = build_straightening(&SurfaceField::zeros(s), 0.1).unwrap();
        assert_eq!(flat.min_dz_rho, 1.0);
        assert_eq!(flat.grad_rho[0].max_abs_coeff(), 0.0);
        for (k, z) in s.z_nodes().iter().enumerate() {
            assert_eq!(flat.rho.slab_coeffs(k)[0].re, *z);
        }

        let c = build_straightening(&SurfaceField::constant(s, 0.3), 0.1).unwrap();
        assert_relative_eq!(c.min_dz_rho, 1.3, epsilon = 1e-14);
        assert_relative_eq!(c.rho.top().mean(), 0.3, epsilon = 1e-15);
        assert_relative_eq!(c.rho.bottom().mean(), -1.0, epsilon = 1e-15);

        let eta = SurfaceField::cosine(s, &[1], 0.05).unwrap();
        let st = build_straightening(&eta, 0.1).unwrap();
        let top = st.dz_rho.top().to_grid();
        assert_relative_eq!(top[0], 1.1, epsilon = 1e-14);
        assert!((&st.rho.top() - &eta).l2_norm() < 1e-16);
        assert!(st.grad_rho[0].bottom().l2_norm() == 0.0);

        let big = SurfaceField::cosine(s, &[1], 0.6).unwrap();
        assert!(matches!(
            build_straightening(&big, 0.1),
            Err(Error::DiffeoViolation { .. })
        ));
    }

    #[test]
    fn q_vanish_for_flat_surface() {
        let s = spec(17);
        let st = build_straightening(&SurfaceField::zeros(s), 0.1).unwrap();
        let v = StripField::from_fn(s, |x, z| (x[0] + z).sin());
        let (qa, qb) = q_nonlinearities(&v, &v, &st, Dealias::TwoThirds).unwrap();
        assert_eq!(qa.max_abs_coeff(), 0.0);
        assert_eq!(qb[0].max_abs_coeff(), 0.0);
    }

    #[test]
    fn q_constant_surface_algebra() {
        let s = spec(17);
        let c = 0.2;
        let st = build_straightening(&SurfaceField::constant(s, c), 0.1).unwrap();
        let v = StripField::from_fn(s, |x, z| x[0].cos() * (1.0 + z));
        let dzv = StripField::from_fn(s, |x, _| x[0].sin());
        let (qa, qb) = q_nonlinearities(&v, &dzv, &st, Dealias::Off).unwrap();
        let ratio = (c / 1.0) / (1.0 + c);
        for k in 0..s.nz() {
            let expect_a = dzv.slab(k).scale(ratio);
            assert!((&qa.slab(k) - &expect_a).l2_norm() < 1e-15);
            let dx = v.slab(k).apply(&partial(s, 0)).unwrap().scale(-c);
            assert!((&qb[0].slab(k) - &dx).l2_norm() < 1e-15);
        }
        assert!(qa.symmetry_defect() < 1e-15);
    }

    #[test]
    fn flat_surface_single_sweep() {
        let s = spec(33);
        let f = SurfaceField::from_fn(s, |x| x[0].cos() + 0.2 * (3.0 * x[0]).sin());
        let pair = solve_vw(&SurfaceField::zeros(s), &f, &DnOptions::default()).unwrap();
        assert_eq!(pair.iterations, 1);
        assert_eq!(pair.w.max_abs_coeff(), 0.0);
        assert_eq!(pair.v.top(), f);
        let g = dn_apply(&SurfaceField::zeros(s), &f, &DnOptions::default()).unwrap();
        let mf = f.apply(&multiplier_m(s)).unwrap();
        assert!((&g - &mf).l2_norm() == 0.0);
    }

    #[test]
    fn shifted_strip_converges_quadratically() {
        let f_mode1 = |nz| {
            let s = spec(nz);
            let eta = SurfaceField::constant(s, 0.2);
            let f = SurfaceField::cosine(s, &[1], 1.0).unwrap();
            let g = dn_apply(&eta, &f, &DnOptions::with_tol(1e-13)).unwrap();
            (g.coeff(&[1]).unwrap().re * 2.0 - 1.2f64.tanh()).abs()
        };
        let e1 = f_mode1(65);
        let e2 = f_mode1(129);
        assert!(e1 < 1e-4);
        let ratio = e1 / e2;
        assert!((3.7..4.3).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn small_wave_contracts() {
        let s = spec(65);
        let eta = SurfaceField::cosine(s, &[1], 0.05).unwrap();
        let f = SurfaceField::cosine(s, &[1], 1.0).unwrap();
        let pair = solve_vw(&eta, &f, &DnOptions::with_tol(1e-12)).unwrap();
        assert!(pair.contraction_factor() < 0.5);
        assert!(pair.w.bottom().l2_norm() == 0.0);
        assert_eq!(pair.v.top(), f);
        assert!(pair.qa.bottom().l2_norm() < 1e-17);
        let g = dn_apply(&eta, &f, &DnOptions::with_tol(1e-12)).unwrap();
        assert_eq!(g.mean(), 0.0);
    }

    #[test]
    fn large_amplitude_is_rejected() {
        let s = spec(33);
        let eta = SurfaceField::cosine(s, &[1], 0.7).unwrap();
        let f = SurfaceField::cosine(s, &[1], 1.0).unwrap();
        let err = dn_apply(&eta, &f, &DnOptions::default()).unwrap_err();
        assert!(err.is_convergence_failure());
    }

    #[test]
    fn fd_oracle_flat_case() {
        let s = spec(9);
        let f = SurfaceField::cosine(s, &[2], 1.0).unwrap();
        let g = dn_oracle_fd(&SurfaceField::zeros(s), &f, 129).unwrap();
        let mf = f.apply(&multiplier_m(s)).unwrap();
        let rel = (&g - &mf).l2_norm() / mf.l2_norm();
        assert!(rel < 1e-3, "rel {rel}");
        let s2 = DomainSpec::new(2, 8, 9, 1.0).unwrap();
        assert!(dn_oracle_fd(&SurfaceField::zeros(s2), &SurfaceField::zeros(s2), 33).is_err());
    }
}
