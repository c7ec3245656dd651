//! Periodic grids, Fourier transforms, and the exact Fourier-multiplier
//! kernels every other module is built from.
//!
//! Horizontal period is fixed to 2π per dimension. Coefficients are true
//! Fourier coefficients: the forward transform divides by `nx^d`, so a
//! constant field `c` has `coeff(0) = c` and `cos(x₁)` has `coeff(±1) = 1/2`.
//!
//! Lattice storage is row-major over the full `nx^d` lattice, first
//! dimension slowest, with each axis in FFT order `0, 1, …, nx/2−1, −nx/2,
//! …, −1`. The index `nx/2` is the Nyquist mode; it is its own conjugate, so
//! every multiplier is projected onto its conjugate-symmetric part there to
//! keep fields real.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::pairwise_sum;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    d: usize,
    nx: usize,
    nz: usize,
    b: f64,
}

impl DomainSpec {
    pub fn new(d: usize, nx: usize, nz: usize, b: f64) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::InvalidDomain(format!("d must be 1 or 2, got {d}")));
        }
        if nx < 8 || nx % 2 != 0 {
            return Err(Error::InvalidDomain(format!(
                "nx must be even and >= 8, got {nx}"
            )));
        }
        if nz < 9 || nz % 2 == 0 {
            return Err(Error::InvalidDomain(format!(
                "nz must be odd and >= 9, got {nz}"
            )));
        }
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::InvalidDomain(format!("depth b must be > 0, got {b}")));
        }
        Ok(Self { d, nx, nz, b })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Same horizontal lattice, different vertical resolution.
    pub fn with_nz(&self, nz: usize) -> Result<Self> {
        Self::new(self.d, self.nx, nz, self.b)
    }

    /// Number of lattice points (and grid points), `nx^d`.
    pub fn n_modes(&self) -> usize {
        self.nx.pow(self.d as u32)
    }

    fn axis_wavenumber(&self, i: usize) -> i64 {
        if i < self.nx / 2 {
            i as i64
        } else {
            i as i64 - self.nx as i64
        }
    }

    fn axis_index(&self, k: i64) -> Option<usize> {
        let half = (self.nx / 2) as i64;
        if k.abs() > half {
            return None;
        }
        Some(k.rem_euclid(self.nx as i64) as usize)
    }

    fn split(&self, idx: usize) -> [usize; 2] {
        if self.d == 1 {
            [idx, 0]
        } else {
            [idx / self.nx, idx % self.nx]
        }
    }

    /// Integer wavenumber of a lattice index; unused components are 0.
    pub fn wavenumber_int(&self, idx: usize) -> [i64; 2] {
        let [i1, i2] = self.split(idx);
        if self.d == 1 {
            [self.axis_wavenumber(i1), 0]
        } else {
            [self.axis_wavenumber(i1), self.axis_wavenumber(i2)]
        }
    }

    pub fn wavenumber(&self, idx: usize) -> [f64; 2] {
        let [k1, k2] = self.wavenumber_int(idx);
        [k1 as f64, k2 as f64]
    }

    pub fn wavenumber_norm(&self, idx: usize) -> f64 {
        let [k1, k2] = self.wavenumber(idx);
        k1.hypot(k2)
    }

    /// Lattice index of an integer mode vector (length `d`); `±nx/2` both map
    /// to the Nyquist index.
    pub fn index_of(&self, mode: &[i64]) -> Option<usize> {
        if mode.len() != self.d {
            return None;
        }
        let i1 = self.axis_index(mode[0])?;
        if self.d == 1 {
            Some(i1)
        } else {
            Some(i1 * self.nx + self.axis_index(mode[1])?)
        }
    }

    /// Index of `−ξ`.
    pub fn neg_index(&self, idx: usize) -> usize {
        let [i1, i2] = self.split(idx);
        let n1 = (self.nx - i1) % self.nx;
        if self.d == 1 {
            n1
        } else {
            n1 * self.nx + (self.nx - i2) % self.nx
        }
    }

    pub fn is_self_conjugate(&self, idx: usize) -> bool {
        self.neg_index(idx) == idx
    }

    /// Grid point `j` in row-major order.
    pub fn grid_point(&self, j: usize) -> [f64; 2] {
        let h = 2.0 * PI / self.nx as f64;
        let [j1, j2] = self.split(j);
        [j1 as f64 * h, j2 as f64 * h]
    }

    pub fn dz(&self) -> f64 {
        self.b / (self.nz - 1) as f64
    }

    /// `nz` uniform nodes on `[−b, 0]`, endpoints exact.
    pub fn z_nodes(&self) -> Vec<f64> {
        let n = self.nz - 1;
        (0..self.nz)
            .map(|k| {
                if k == n {
                    0.0
                } else {
                    -self.b + self.b * k as f64 / n as f64
                }
            })
            .collect()
    }

    /// Largest retained `|ξ_i|` under the two-thirds rule.
    pub fn dealias_cutoff(&self) -> i64 {
        ((self.nx as i64) - 1) / 3
    }

    fn check_same(&self, other: &DomainSpec) -> Result<()> {
        if self.d == other.d && self.nx == other.nx && self.b == other.b {
            Ok(())
        } else {
            Err(Error::SpecMismatch)
        }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

fn fft_nd(data: &mut [Complex64], nx: usize, d: usize, inverse: bool) {
    let fft = plan(nx, inverse);
    fft.process(data);
    if d == 2 {
        let mut t = vec![ZERO; data.len()];
        for i in 0..nx {
            for j in 0..nx {
                t[j * nx + i] = data[i * nx + j];
            }
        }
        fft.process(&mut t);
        for i in 0..nx {
            for j in 0..nx {
                data[i * nx + j] = t[j * nx + i];
            }
        }
    }
}

/// Grid values to Fourier coefficients (divides by `nx^d`).
pub fn transform_forward(spec: &DomainSpec, values: &[f64]) -> Result<Vec<Complex64>> {
    let n = spec.n_modes();
    if values.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: values.len(),
        });
    }
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut data, spec.nx, spec.d, false);
    let scale = 1.0 / n as f64;
    for c in data.iter_mut() {
        *c *= scale;
    }
    Ok(data)
}

/// Fourier coefficients to real grid values.
pub fn transform_inverse(spec: &DomainSpec, coeffs: &[Complex64]) -> Vec<f64> {
    let mut data = coeffs.to_vec();
    fft_nd(&mut data, spec.nx, spec.d, true);
    data.into_iter().map(|c| c.re).collect()
}

/// A real function on the torus, stored as conjugate-symmetric coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceField {
    spec: DomainSpec,
    coeffs: Vec<Complex64>,
}

impl SurfaceField {
    pub fn zeros(spec: DomainSpec) -> Self {
        Self {
            coeffs: vec![ZERO; spec.n_modes()],
            spec,
        }
    }

    pub fn from_coeffs(spec: DomainSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != spec.n_modes() {
            return Err(Error::SizeMismatch {
                expected: spec.n_modes(),
                got: coeffs.len(),
            });
        }
        Ok(Self { spec, coeffs })
    }

    pub fn from_grid(spec: DomainSpec, values: &[f64]) -> Result<Self> {
        let mut f = Self {
            coeffs: transform_forward(&spec, values)?,
            spec,
        };
        f.symmetrize();
        Ok(f)
    }

    /// Sample `g` on the grid and transform.
    pub fn from_fn(spec: DomainSpec, g: impl Fn([f64; 2]) -> f64) -> Self {
        let values: Vec<f64> = (0..spec.n_modes()).map(|j| g(spec.grid_point(j))).collect();
        Self::from_grid(spec, &values).expect("grid size matches spec")
    }

    pub fn constant(spec: DomainSpec, c: f64) -> Self {
        let mut f = Self::zeros(spec);
        f.coeffs[0] = Complex64::new(c, 0.0);
        f
    }

    /// `amplitude · cos(mode · x)`, i.e. `amplitude/2` on `±mode`.
    pub fn cosine(spec: DomainSpec, mode: &[i64], amplitude: f64) -> Result<Self> {
        let idx = spec.index_of(mode).ok_or_else(|| {
            Error::InvalidArgument(format!("mode {mode:?} outside the lattice"))
        })?;
        let mut f = Self::zeros(spec);
        let neg = spec.neg_index(idx);
        if idx == neg {
            // zero mode or Nyquist: cos is already real on the lattice
            f.coeffs[idx] += Complex64::new(amplitude, 0.0);
        } else {
            f.coeffs[idx] += Complex64::new(0.5 * amplitude, 0.0);
            f.coeffs[neg] += Complex64::new(0.5 * amplitude, 0.0);
        }
        Ok(f)
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, mode: &[i64]) -> Option<Complex64> {
        self.spec.index_of(mode).map(|i| self.coeffs[i])
    }

    pub fn to_grid(&self) -> Vec<f64> {
        transform_inverse(&self.spec, &self.coeffs)
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn with_zero_mean(mut self) -> Self {
        self.coeffs[0] = ZERO;
        self
    }

    /// Largest `|coeff(−ξ) − conj(coeff(ξ))|`.
    pub fn symmetry_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[self.spec.neg_index(i)] - self.coeffs[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Project onto the conjugate-symmetric (real) subspace.
    pub fn symmetrize(&mut self) {
        let old = self.coeffs.clone();
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            *c = 0.5 * (old[i] + old[self.spec.neg_index(i)].conj());
        }
    }

    pub fn apply(&self, mult: &Multiplier) -> Result<SurfaceField> {
        self.spec.check_same(&mult.spec)?;
        Ok(self.apply_unchecked(mult))
    }

    pub(crate) fn apply_unchecked(&self, mult: &Multiplier) -> SurfaceField {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&mult.symbol)
            .map(|(c, s)| c * s)
            .collect();
        SurfaceField {
            spec: self.spec,
            coeffs,
        }
    }

    /// Coefficient `ℓ²` norm; equals the normalized grid `L²` norm.
    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.coeffs.iter().map(|c| c.norm_sqr()).collect();
        pairwise_sum(&sq).sqrt()
    }

    /// Normalized `L²` pairing `(2π)^{−d} ∫ f g`.
    pub fn inner(&self, other: &SurfaceField) -> f64 {
        let terms: Vec<f64> = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .collect();
        pairwise_sum(&terms)
    }

    pub fn scale(&self, alpha: f64) -> SurfaceField {
        SurfaceField {
            spec: self.spec,
            coeffs: self.coeffs.iter().map(|c| c * alpha).collect(),
        }
    }

    pub fn try_add(&self, other: &SurfaceField) -> Result<SurfaceField> {
        self.spec.check_same(&other.spec)?;
        Ok(self + other)
    }

    pub fn try_sub(&self, other: &SurfaceField) -> Result<SurfaceField> {
        self.spec.check_same(&other.spec)?;
        Ok(self - other)
    }

    /// Zero every mode with some `|ξ_i| > nx/3`.
    pub fn dealiased(&self) -> SurfaceField {
        let mut out = self.clone();
        dealias_in_place(&self.spec, &mut out.coeffs);
        out
    }

    /// Translate by whole grid cells: result(x) = self(x − shift·h).
    pub fn shift_grid(&self, shift: &[usize]) -> SurfaceField {
        let nx = self.spec.nx;
        let g = self.to_grid();
        let mut out = vec![0.0; g.len()];
        for (j, v) in g.iter().enumerate() {
            let target = if self.spec.d == 1 {
                (j + shift[0]) % nx
            } else {
                let (j1, j2) = (j / nx, j % nx);
                ((j1 + shift[0]) % nx) * nx + (j2 + shift.get(1).copied().unwrap_or(0)) % nx
            };
            out[target] = *v;
        }
        SurfaceField::from_grid(self.spec, &out).expect("same size")
    }

    pub fn max_abs_on_grid(&self) -> f64 {
        self.to_grid().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn dealias_in_place(spec: &DomainSpec, coeffs: &mut [Complex64]) {
    let cut = spec.dealias_cutoff();
    for (i, c) in coeffs.iter_mut().enumerate() {
        let [k1, k2] = spec.wavenumber_int(i);
        if k1.abs() > cut || k2.abs() > cut {
            *c = ZERO;
        }
    }
}

impl Add for &SurfaceField {
    type Output = SurfaceField;
    fn add(self, rhs: &SurfaceField) -> SurfaceField {
        debug_assert_eq!(self.coeffs.len(), rhs.coeffs.len());
        SurfaceField {
            spec: self.spec,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &SurfaceField {
    type Output = SurfaceField;
    fn sub(self, rhs: &SurfaceField) -> SurfaceField {
        debug_assert_eq!(self.coeffs.len(), rhs.coeffs.len());
        SurfaceField {
            spec: self.spec,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul<&SurfaceField> for f64 {
    type Output = SurfaceField;
    fn mul(self, rhs: &SurfaceField) -> SurfaceField {
        rhs.scale(self)
    }
}

impl Neg for &SurfaceField {
    type Output = SurfaceField;
    fn neg(self) -> SurfaceField {
        self.scale(-1.0)
    }
}

/// A Fourier multiplier tabulated on the lattice.
#[derive(Clone, Debug)]
pub struct Multiplier {
    spec: DomainSpec,
    name: String,
    symbol: Vec<Complex64>,
}

impl Multiplier {
    /// Tabulate `symbol(ξ)`, then project onto conjugate-symmetric tables.
    /// This only changes lattice points on a Nyquist line, where `ξ` and the
    /// aliased `−ξ` carry the same wavenumber.
    pub fn from_symbol(
        spec: DomainSpec,
        name: impl Into<String>,
        symbol: impl Fn([f64; 2]) -> Complex64,
    ) -> Self {
        let raw: Vec<Complex64> = (0..spec.n_modes())
            .map(|i| symbol(spec.wavenumber(i)))
            .collect();
        let table = (0..raw.len())
            .map(|i| 0.5 * (raw[i] + raw[spec.neg_index(i)].conj()))
            .collect();
        Self {
            spec,
            name: name.into(),
            symbol: table,
        }
    }

    pub fn descriptor(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    pub fn symbol_at(&self, mode: &[i64]) -> Option<Complex64> {
        self.spec.index_of(mode).map(|i| self.symbol[i])
    }

    pub fn compose(&self, other: &Multiplier) -> Result<Multiplier> {
        self.spec.check_same(&other.spec)?;
        Ok(Multiplier {
            spec: self.spec,
            name: format!("{}∘{}", self.name, other.name),
            symbol: self
                .symbol
                .iter()
                .zip(&other.symbol)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    /// Largest `|symbol(−ξ) − conj(symbol(ξ))|`.
    pub fn symmetry_defect(&self) -> f64 {
        (0..self.symbol.len())
            .map(|i| (self.symbol[self.spec.neg_index(i)] - self.symbol[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    fn map(&self, name: impl Into<String>, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        Multiplier {
            spec: self.spec,
            name: name.into(),
            symbol: self
                .symbol
                .iter()
                .enumerate()
                .map(|(i, &s)| f(i, s))
                .collect(),
        }
    }
}

/// `m(ξ) = |ξ| tanh(b|ξ|)`, the flat-strip Dirichlet–Neumann symbol.
pub fn multiplier_m(spec: DomainSpec) -> Multiplier {
    let b = spec.b;
    Multiplier::from_symbol(spec, "m(D)", move |[k1, k2]| {
        let r = k1.hypot(k2);
        Complex64::new(r * (b * r).tanh(), 0.0)
    })
}

/// `|D|`.
pub fn abs_d(spec: DomainSpec) -> Multiplier {
    Multiplier::from_symbol(spec, "|D|", |[k1, k2]| Complex64::new(k1.hypot(k2), 0.0))
}

/// `∂_{x_axis}` (axis 0 is `x₁`).
pub fn partial(spec: DomainSpec, axis: usize) -> Multiplier {
    Multiplier::from_symbol(spec, format!("∂{}", axis + 1), move |k| {
        Complex64::new(0.0, k[axis])
    })
}

/// Generator `γ∂₁ − m(D)` of the linearized evolution.
pub fn generator(spec: DomainSpec, gamma: f64) -> Multiplier {
    let b = spec.b;
    Multiplier::from_symbol(spec, format!("{gamma}∂1-m(D)"), move |[k1, k2]| {
        let r = k1.hypot(k2);
        Complex64::new(-r * (b * r).tanh(), gamma * k1)
    })
}

/// `e^{(γ∂₁ − m(D))t}` restricted to the zero-mean sector.
pub fn semigroup_multiplier(spec: DomainSpec, t: f64, gamma: f64) -> Result<Multiplier> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "semigroup time must be >= 0, got {t}"
        )));
    }
    let gen = generator(spec, gamma);
    Ok(gen.map(format!("exp(t={t}·({}))", gen.name), |i, s| {
        if i == 0 {
            ZERO
        } else {
            (s * t).exp()
        }
    }))
}

/// `(γ∂₁ − m(D))^{−1}` with output zero mode 0.
pub fn resolvent_multiplier(spec: DomainSpec, gamma: f64) -> Multiplier {
    let gen = generator(spec, gamma);
    gen.map(format!("({})^-1", gen.name), |i, s| {
        if i == 0 {
            ZERO
        } else {
            s.inv()
        }
    })
}

/// Solve `(γ∂₁ − m(D)) u = g − mean(g)` with `mean(u) = 0`.
pub fn resolvent_gamma(g: &SurfaceField, gamma: f64) -> SurfaceField {
    g.apply_unchecked(&resolvent_multiplier(g.spec, gamma))
}

pub(crate) fn cosh_ratio_raw(xi: f64, z_num: f64, z_den: f64, b: f64) -> f64 {
    let a = (z_num + b) * xi;
    let c = (z_den + b) * xi;
    ((z_num - z_den) * xi).exp() * (1.0 + (-2.0 * a).exp()) / (1.0 + (-2.0 * c).exp())
}

/// `cosh((z_num+b)|ξ|) / cosh((z_den+b)|ξ|)` without overflow.
pub fn cosh_ratio(xi_mag: f64, z_num: f64, z_den: f64, b: f64) -> Result<f64> {
    let inside = |z: f64| (-b..=0.0).contains(&z);
    if !inside(z_num) || !inside(z_den) {
        return Err(Error::InvalidArgument(format!(
            "cosh_ratio arguments ({z_num}, {z_den}) outside [-{b}, 0]"
        )));
    }
    if !(xi_mag >= 0.0) {
        return Err(Error::InvalidArgument(format!("|ξ| must be >= 0, got {xi_mag}")));
    }
    Ok(cosh_ratio_raw(xi_mag, z_num, z_den, b))
}

/// `𝒟(z) = |ξ| tanh((z+b)|ξ|)`.
pub(crate) fn d_of_z(xi: f64, z: f64, b: f64) -> f64 {
    xi * ((z + b) * xi).tanh()
}

/// A z-indexed stack of coefficient slabs on the nodes of `[−b, 0]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StripField {
    spec: DomainSpec,
    z_nodes: Vec<f64>,
    slabs: Vec<Vec<Complex64>>,
}

impl StripField {
    pub fn zeros(spec: DomainSpec) -> Self {
        Self {
            z_nodes: spec.z_nodes(),
            slabs: vec![vec![ZERO; spec.n_modes()]; spec.nz],
            spec,
        }
    }

    pub fn from_slabs(spec: DomainSpec, slabs: Vec<Vec<Complex64>>) -> Result<Self> {
        if slabs.len() != spec.nz {
            return Err(Error::SizeMismatch {
                expected: spec.nz,
                got: slabs.len(),
            });
        }
        if let Some(bad) = slabs.iter().find(|s| s.len() != spec.n_modes()) {
            return Err(Error::SizeMismatch {
                expected: spec.n_modes(),
                got: bad.len(),
            });
        }
        Ok(Self {
            z_nodes: spec.z_nodes(),
            slabs,
            spec,
        })
    }

    /// Same as [`StripField::from_slabs`] but with explicit z nodes (used by
    /// the file loader, which must keep the stored values bit for bit).
    pub fn from_parts(
        spec: DomainSpec,
        z_nodes: Vec<f64>,
        slabs: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        let mut f = Self::from_slabs(spec, slabs)?;
        if z_nodes.len() != spec.nz {
            return Err(Error::SizeMismatch {
                expected: spec.nz,
                got: z_nodes.len(),
            });
        }
        f.z_nodes = z_nodes;
        Ok(f)
    }

    /// Sample `g(x, z)` on the grid at every node.
    pub fn from_fn(spec: DomainSpec, g: impl Fn([f64; 2], f64) -> f64) -> Self {
        let z_nodes = spec.z_nodes();
        let slabs = z_nodes
            .iter()
            .map(|&z| {
                let values: Vec<f64> = (0..spec.n_modes())
                    .map(|j| g(spec.grid_point(j), z))
                    .collect();
                SurfaceField::from_grid(spec, &values)
                    .expect("grid size matches spec")
                    .into_coeffs()
            })
            .collect();
        Self {
            spec,
            z_nodes,
            slabs,
        }
    }

    /// Every slab equal to `f`.
    pub fn constant_in_z(f: &SurfaceField) -> Self {
        let spec = f.spec;
        Self {
            z_nodes: spec.z_nodes(),
            slabs: vec![f.coeffs.clone(); spec.nz],
            spec,
        }
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn z_nodes(&self) -> &[f64] {
        &self.z_nodes
    }

    pub fn nz(&self) -> usize {
        self.slabs.len()
    }

    pub fn slab_coeffs(&self, k: usize) -> &[Complex64] {
        &self.slabs[k]
    }

    pub fn slab_coeffs_mut(&mut self, k: usize) -> &mut [Complex64] {
        &mut self.slabs[k]
    }

    pub fn slab(&self, k: usize) -> SurfaceField {
        SurfaceField {
            spec: self.spec,
            coeffs: self.slabs[k].clone(),
        }
    }

    pub fn set_slab(&mut self, k: usize, f: &SurfaceField) {
        self.slabs[k].copy_from_slice(&f.coeffs);
    }

    pub fn top(&self) -> SurfaceField {
        self.slab(self.nz() - 1)
    }

    pub fn bottom(&self) -> SurfaceField {
        self.slab(0)
    }

    pub fn slabs(&self) -> &[Vec<Complex64>] {
        &self.slabs
    }

    /// Apply a horizontal multiplier to every slab.
    pub fn apply(&self, mult: &Multiplier) -> Result<StripField> {
        self.spec.check_same(&mult.spec)?;
        Ok(self.map_slabs(|_, s| s.iter().zip(&mult.symbol).map(|(c, m)| c * m).collect()))
    }

    pub(crate) fn map_slabs(&self, f: impl Fn(usize, &[Complex64]) -> Vec<Complex64>) -> Self {
        Self {
            spec: self.spec,
            z_nodes: self.z_nodes.clone(),
            slabs: self
                .slabs
                .iter()
                .enumerate()
                .map(|(k, s)| f(k, s))
                .collect(),
        }
    }

    pub fn zip_with(&self, other: &StripField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        debug_assert_eq!(self.slabs.len(), other.slabs.len());
        self.map_slabs(|k, s| s.iter().zip(&other.slabs[k]).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn try_sub(&self, other: &StripField) -> Result<StripField> {
        self.check_compatible(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn try_add(&self, other: &StripField) -> Result<StripField> {
        self.check_compatible(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn scale(&self, alpha: f64) -> StripField {
        self.map_slabs(|_, s| s.iter().map(|c| c * alpha).collect())
    }

    fn check_compatible(&self, other: &StripField) -> Result<()> {
        self.spec.check_same(&other.spec)?;
        if self.slabs.len() != other.slabs.len() {
            return Err(Error::SpecMismatch);
        }
        Ok(())
    }

    pub fn symmetry_defect(&self) -> f64 {
        (0..self.nz())
            .map(|k| self.slab(k).symmetry_defect())
            .fold(0.0, f64::max)
    }

    /// Largest coefficient modulus over all slabs.
    pub fn max_abs_coeff(&self) -> f64 {
        self.slabs
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Discrete `L²(Ω)` norm: trapezoid in z of the slab `ℓ²` norms squared.
    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = (0..self.nz()).map(|k| self.slab(k).l2_norm().powi(2)).collect();
        crate::util::trapezoid(&self.z_nodes, &sq).sqrt()
    }
}

/// `𝔓η`: slab at `z` carries `e^{|ξ|z} η̂(ξ)`.
pub fn poisson_extension(eta: &SurfaceField) -> StripField {
    let spec = eta.spec;
    let mags: Vec<f64> = (0..spec.n_modes()).map(|i| spec.wavenumber_norm(i)).collect();
    let z_nodes = spec.z_nodes();
    let slabs = z_nodes
        .iter()
        .map(|&z| {
            eta.coeffs
                .iter()
                .zip(&mags)
                .map(|(c, &r)| c * (r * z).exp())
                .collect()
        })
        .collect();
    StripField {
        spec,
        z_nodes,
        slabs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec1(nx: usize) -> DomainSpec {
        DomainSpec::new(1, nx, 9, 1.0).unwrap()
    }

    #[test]
    fn domain_validation() {
        assert!(DomainSpec::new(3, 16, 9, 1.0).is_err());
        assert!(DomainSpec::new(1, 15, 9, 1.0).is_err());
        assert!(DomainSpec::new(1, 16, 10, 1.0).is_err());
        assert!(DomainSpec::new(1, 16, 9, 0.0).is_err());
        let s = DomainSpec::new(1, 16, 9, 2.0).unwrap();
        let z = s.z_nodes();
        assert_eq!(z[0], -2.0);
        assert_eq!(z[8], 0.0);
        assert_eq!(z[4], -1.0);
    }

    #[test]
    fn lattice_indexing_2d() {
        let s = DomainSpec::new(2, 8, 9, 1.0).unwrap();
        for i in 0..s.n_modes() {
            let k = s.wavenumber_int(i);
            assert_eq!(s.index_of(&k[..2]), Some(i));
            let n = s.neg_index(i);
            let kn = s.wavenumber_int(n);
            // -ξ modulo the lattice
            assert_eq!((k[0] + kn[0]).rem_euclid(8), 0);
            assert_eq!((k[1] + kn[1]).rem_euclid(8), 0);
        }
        assert!(s.is_self_conjugate(0));
        assert!(s.is_self_conjugate(s.index_of(&[4, 0]).unwrap()));
        assert!(!s.is_self_conjugate(s.index_of(&[1, 0]).unwrap()));
    }

    #[test]
    fn constant_and_single_harmonic() {
        let s = spec1(16);
        let one = SurfaceField::from_fn(s, |_| 1.0);
        assert_relative_eq!(one.coeffs()[0].re, 1.0, epsilon = 1e-15);
        assert!(one.coeffs()[1..].iter().all(|c| c.norm() < 1e-15));

        let c = SurfaceField::from_fn(s, |x| x[0].cos());
        for i in 0..16 {
            let k = s.wavenumber_int(i)[0];
            let expect = if k.abs() == 1 { 0.5 } else { 0.0 };
            assert!((c.coeffs()[i] - Complex64::new(expect, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn round_trip_random_2d() {
        let s = DomainSpec::new(2, 16, 9, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g: Vec<f64> = (0..s.n_modes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = SurfaceField::from_grid(s, &g).unwrap();
        let back = f.to_grid();
        let err: f64 = g.iter().zip(&back).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let nrm: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(err / nrm < 1e-13);
        assert!(f.symmetry_defect() < 1e-15);
    }

    #[test]
    fn transform_rejects_wrong_size() {
        let s = spec1(16);
        assert!(matches!(
            transform_forward(&s, &[0.0; 15]),
            Err(Error::SizeMismatch { expected: 16, got: 15 })
        ));
    }

    #[test]
    fn m_symbol_values() {
        let s = spec1(16);
        let m = multiplier_m(s);
        assert_eq!(m.symbol_at(&[0]).unwrap().re, 0.0);
        assert_relative_eq!(m.symbol_at(&[1]).unwrap().re, 1f64.tanh(), epsilon = 1e-15);
        assert_relative_eq!(m.symbol_at(&[2]).unwrap().re, 2.0 * 2f64.tanh(), epsilon = 1e-15);
        assert_relative_eq!(m.symbol_at(&[1]).unwrap().re, 0.761594155955765, epsilon = 1e-14);
        assert_relative_eq!(m.symbol_at(&[2]).unwrap().re, 1.928055160151634, epsilon = 1e-14);
    }

    #[test]
    fn apply_multiplier_examples() {
        let s = spec1(16);
        let m = multiplier_m(s);
        let c = SurfaceField::constant(s, 3.0);
        assert!(c.apply(&m).unwrap().l2_norm() == 0.0);

        let cos = SurfaceField::from_fn(s, |x| x[0].cos());
        let out = cos.apply(&m).unwrap();
        let expect = cos.scale(1f64.tanh());
        assert!((&out - &expect).l2_norm() < 1e-15);

        let sin = SurfaceField::from_fn(s, |x| x[0].sin());
        let d = sin.apply(&partial(s, 0)).unwrap();
        assert!((&d - &cos).l2_norm() < 1e-15);

        let other = DomainSpec::new(1, 32, 9, 1.0).unwrap();
        assert!(matches!(cos.apply(&multiplier_m(other)), Err(Error::SpecMismatch)));
    }

    #[test]
    fn multipliers_are_conjugate_symmetric() {
        let s = DomainSpec::new(2, 8, 9, 1.3).unwrap();
        for m in [
            multiplier_m(s),
            partial(s, 0),
            partial(s, 1),
            generator(s, 0.7),
            resolvent_multiplier(s, 0.7),
            semigroup_multiplier(s, 0.4, -1.1).unwrap(),
        ] {
            assert!(m.symmetry_defect() < 1e-15, "{}", m.descriptor());
        }
    }

    #[test]
    fn poisson_extension_examples() {
        let s = DomainSpec::new(1, 16, 9, 1.0).unwrap();
        let c = SurfaceField::constant(s, 2.5);
        let pc = poisson_extension(&c);
        for k in 0..9 {
            assert!((&pc.slab(k) - &c).l2_norm() < 1e-15);
        }
        let cos = SurfaceField::from_fn(s, |x| x[0].cos());
        let p = poisson_extension(&cos);
        assert_eq!(p.top(), cos);
        let expect = cos.scale((-1f64).exp());
        assert!((&p.bottom() - &expect).l2_norm() < 1e-15);
    }

    #[test]
    fn cosh_ratio_examples() {
        assert_eq!(cosh_ratio(0.0, -0.3, 0.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(cosh_ratio(3.0, -0.4, -0.4, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        let big = cosh_ratio(1e4, -1.0, 0.0, 1.0).unwrap();
        assert!(big.is_finite() && big >= 0.0 && big <= 2.0 * (-1e4f64).exp() + 1e-300);
        // moderate |ξ|: direct evaluation is fine and must agree
        for &(xi, zn, zd) in &[(2.0, -0.5, 0.0), (7.5, -0.9, -0.1), (20.0, -0.2, -0.7)] {
            let direct = ((zn + 1.0) * xi as f64).cosh() / ((zd + 1.0) * xi as f64).cosh();
            assert_relative_eq!(cosh_ratio(xi, zn, zd, 1.0).unwrap(), direct, max_relative = 1e-13);
        }
        assert!(cosh_ratio(1.0, 0.5, 0.0, 1.0).is_err());
        assert!(cosh_ratio(1.0, 0.0, -1.5, 1.0).is_err());
    }

    #[test]
    fn resolvent_examples() {
        let s = spec1(16);
        let c = SurfaceField::constant(s, 1.0);
        assert_eq!(resolvent_gamma(&c, 0.3).l2_norm(), 0.0);

        let cos = SurfaceField::from_fn(s, |x| x[0].cos());
        let r0 = resolvent_gamma(&cos, 0.0);
        let expect = cos.scale(-1.0 / 1f64.tanh());
        assert!((&r0 - &expect).l2_norm() < 1e-15);

        let r1 = resolvent_gamma(&cos, 1.0);
        let amp = r1.coeff(&[1]).unwrap().norm();
        assert_relative_eq!(amp, 0.5 / (1.0 + 1f64.tanh().powi(2)).sqrt(), epsilon = 1e-15);
        assert!((amp - 0.39778).abs() < 1e-5);
    }

    #[test]
    fn semigroup_examples() {
        let s = spec1(16);
        assert!(semigroup_multiplier(s, -1.0, 0.0).is_err());
        let s0 = semigroup_multiplier(s, 0.0, 1.0).unwrap();
        assert_eq!(s0.symbol()[0].norm(), 0.0);
        assert!(s0.symbol()[1..].iter().all(|z| (z - 1.0).norm() < 1e-15));

        let s1 = semigroup_multiplier(s, 1.0, 0.0).unwrap();
        assert_relative_eq!(s1.symbol_at(&[1]).unwrap().re, (-1f64.tanh()).exp(), epsilon = 1e-15);

        let a = semigroup_multiplier(s, 0.3, 0.8).unwrap();
        let b = semigroup_multiplier(s, 0.45, 0.8).unwrap();
        let ab = semigroup_multiplier(s, 0.75, 0.8).unwrap();
        let comp = a.compose(&b).unwrap();
        for (x, y) in comp.symbol().iter().zip(ab.symbol()) {
            assert!((x - y).norm() < 1e-13);
        }
    }
}
