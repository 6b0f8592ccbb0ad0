//! Periodic grids, the physical/spectral transform pair, Fourier multipliers,
//! the I-operator symbol and Sobolev norms.
//!
//! Spectral coefficients follow `c(xi_k) = (L/K) sum_j f(x_j) exp(-i x_j xi_k)` with
//! `x_j = -L/2 + j L/K` and `xi_k = (2 pi / L) k`, `k = -K/2 .. K/2-1`. They are stored in
//! natural order: slot `k + K/2` holds mode `k`. Under this normalization a product of
//! trigonometric polynomials has coefficients `(1/L) sum_{k+l=q} a_k b_l`, which is the
//! discrete image of the line convolution with `d xi / 2 pi`.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().expect("fft planner poisoned");
    if forward {
        p.plan_fft_forward(len)
    } else {
        p.plan_fft_inverse(len)
    }
}

/// Periodic spatial lattice of length `L` with `K` points and its dual wavenumber lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    length: f64,
    modes: usize,
}

impl Grid {
    pub fn new(length: f64, modes: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if modes < 8 || modes % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "mode count must be even and >= 8, got {modes}"
            )));
        }
        Ok(Self { length, modes })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Wavenumber spacing `2 pi / L`.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.modes as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.modes).map(|j| self.x(j)).collect()
    }

    /// The unpaired mode `-K/2`.
    pub fn k_min(&self) -> i64 {
        -((self.modes / 2) as i64)
    }

    /// Largest index of the negation-symmetric part of the lattice, `K/2 - 1`.
    pub fn k_max(&self) -> i64 {
        (self.modes / 2) as i64 - 1
    }

    pub fn xi(&self, k: i64) -> f64 {
        k as f64 * self.dxi()
    }

    /// Wavenumbers in natural (storage) order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (self.k_min()..=self.k_max()).map(|k| self.xi(k)).collect()
    }

    pub fn slot(&self, k: i64) -> usize {
        (k - self.k_min()) as usize
    }

    /// Largest |xi| on the symmetric lattice.
    pub fn lattice_max(&self) -> f64 {
        self.xi(self.k_max())
    }
}

/// Symmetric block of lattice modes `|k| <= kmax`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Band {
    pub kmax: i64,
}

impl Band {
    pub fn full(grid: &Grid) -> Self {
        Self { kmax: grid.k_max() }
    }

    /// Modes retained by a dealiasing mask keeping the fraction `fraction` of `K/2`.
    pub fn retained(grid: &Grid, fraction: f64) -> Self {
        let k = (fraction * grid.modes() as f64 / 2.0 + 1e-9).floor() as i64;
        Self { kmax: k.clamp(0, grid.k_max()) }
    }

    pub fn contains(&self, k: i64) -> bool {
        k.abs() <= self.kmax
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    ToSpectral,
    ToPhysical,
}

/// Transform between physical samples and natural-order spectral coefficients.
pub fn transform(grid: &Grid, data: &[C64], direction: Direction) -> Vec<C64> {
    match direction {
        Direction::ToSpectral => forward(grid, data),
        Direction::ToPhysical => inverse(grid, data),
    }
}

fn sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn forward(grid: &Grid, values: &[C64]) -> Vec<C64> {
    let n = grid.modes();
    assert_eq!(values.len(), n, "sample count does not match grid");
    let mut buf = values.to_vec();
    plan(n, true).process(&mut buf);
    let scale = grid.dx();
    (grid.k_min()..=grid.k_max())
        .map(|k| buf[k.rem_euclid(n as i64) as usize] * (scale * sign(k)))
        .collect()
}

fn inverse(grid: &Grid, coeffs: &[C64]) -> Vec<C64> {
    let n = grid.modes();
    assert_eq!(coeffs.len(), n, "coefficient count does not match grid");
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for (i, k) in (grid.k_min()..=grid.k_max()).enumerate() {
        buf[k.rem_euclid(n as i64) as usize] = coeffs[i] * sign(k);
    }
    plan(n, false).process(&mut buf);
    let scale = 1.0 / grid.length();
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Evaluates trigonometric polynomials on a refined grid of `points` samples and back.
///
/// Products of band-limited inputs formed on the refined grid are exact as long as the
/// product's spectrum does not wrap onto the retained band.
#[derive(Clone)]
pub struct Refined {
    grid: Grid,
    points: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Refined {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Refined")
            .field("grid", &self.grid)
            .field("points", &self.points)
            .finish()
    }
}

impl Refined {
    pub fn new(grid: Grid, points: usize) -> Self {
        assert!(points >= grid.modes());
        Self { grid, points, fwd: plan(points, true), inv: plan(points, false) }
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn to_physical(&self, coeffs: &[C64]) -> Vec<C64> {
        let p = self.points as i64;
        let mut buf = vec![C64::new(0.0, 0.0); self.points];
        for (i, k) in (self.grid.k_min()..=self.grid.k_max()).enumerate() {
            buf[k.rem_euclid(p) as usize] = coeffs[i] * sign(k);
        }
        self.inv.process(&mut buf);
        let scale = 1.0 / self.grid.length();
        buf.iter_mut().for_each(|v| *v *= scale);
        buf
    }

    /// Coefficients of the grid modes only; everything above is discarded.
    pub fn to_spectral(&self, values: &[C64]) -> Vec<C64> {
        assert_eq!(values.len(), self.points);
        let p = self.points as i64;
        let mut buf = values.to_vec();
        self.fwd.process(&mut buf);
        let scale = self.grid.length() / self.points as f64;
        (self.grid.k_min()..=self.grid.k_max())
            .map(|k| buf[k.rem_euclid(p) as usize] * (scale * sign(k)))
            .collect()
    }

    /// `L/P * sum` over the refined grid.
    pub fn integrate(&self, values: &[C64]) -> C64 {
        values.iter().sum::<C64>() * (self.grid.length() / self.points as f64)
    }
}

/// Complex state on a grid with synchronized physical samples and spectral coefficients.
///
/// Every constructor zeroes the unpaired mode `-K/2` so the stored lattice is symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<C64>,
    coeffs: Vec<C64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        let z = vec![C64::new(0.0, 0.0); grid.modes()];
        Self { grid, values: z.clone(), coeffs: z }
    }

    pub fn from_values(grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.modes() {
            return Err(Error::InconsistentField(format!(
                "{} samples for a {}-point grid",
                values.len(),
                grid.modes()
            )));
        }
        Self::from_coeffs(grid, forward(&grid, &values))
    }

    pub fn from_coeffs(grid: Grid, mut coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != grid.modes() {
            return Err(Error::InconsistentField(format!(
                "{} coefficients for a {}-mode grid",
                coeffs.len(),
                grid.modes()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InconsistentField("non-finite coefficient".into()));
        }
        coeffs[0] = C64::new(0.0, 0.0);
        let values = inverse(&grid, &coeffs);
        Ok(Self { grid, values, coeffs })
    }

    pub fn from_fn(grid: Grid, f: impl FnMut(f64) -> C64) -> Self {
        let values = grid.xs().into_iter().map(f).collect();
        Self::from_values(grid, values).expect("sample count matches grid")
    }

    /// Field whose coefficients are given mode by mode; modes outside the symmetric lattice are ignored.
    pub fn from_mode_fn(grid: Grid, c: impl FnMut(i64) -> C64) -> Self {
        let coeffs = (grid.k_min()..=grid.k_max()).map(c).collect();
        Self::from_coeffs(grid, coeffs).expect("coefficient count matches grid")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    /// Coefficient of mode `k`; zero outside the symmetric lattice.
    pub fn coeff(&self, k: i64) -> C64 {
        if k.abs() > self.grid.k_max() {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[self.grid.slot(k)]
        }
    }

    /// Relative mismatch between the stored samples and the transform of the stored coefficients.
    pub fn consistency_error(&self) -> f64 {
        let v = inverse(&self.grid, &self.coeffs);
        let num: f64 = v.iter().zip(&self.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = self.values.iter().map(|a| a.norm_sqr()).sum();
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }

    pub fn check_consistency(&self) -> Result<()> {
        if self.values.len() != self.grid.modes() || self.coeffs.len() != self.grid.modes() {
            return Err(Error::InconsistentField("length mismatch".into()));
        }
        let err = self.consistency_error();
        if err > 1e-10 {
            return Err(Error::InconsistentField(format!("transform mismatch {err:e}")));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == C64::new(0.0, 0.0))
    }

    /// `||f||_2` by Parseval.
    pub fn l2_norm(&self) -> f64 {
        sobolev_norm(self, 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest |k| carrying a nonzero coefficient (0 for the zero field).
    pub fn support_kmax(&self) -> i64 {
        (self.grid.k_min() + 1..=self.grid.k_max())
            .filter(|&k| self.coeff(k) != C64::new(0.0, 0.0))
            .map(i64::abs)
            .max()
            .unwrap_or(0)
    }

    /// Zeroes every mode outside `band`.
    pub fn restricted(&self, band: Band) -> Field {
        let coeffs = (self.grid.k_min()..=self.grid.k_max())
            .map(|k| if band.contains(k) { self.coeff(k) } else { C64::new(0.0, 0.0) })
            .collect();
        Field::from_coeffs(self.grid, coeffs).expect("same grid")
    }

    pub fn scaled(&self, factor: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Relative L2 distance to `other` (absolute when `self` is zero).
    pub fn relative_distance(&self, other: &Field) -> f64 {
        let num: f64 = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = self.coeffs.iter().map(|a| a.norm_sqr()).sum();
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}

/// Multiplies every coefficient by `symbol(xi)`.
pub fn apply_symbol(f: &Field, symbol: impl Fn(f64) -> C64) -> Field {
    let g = *f.grid();
    let coeffs = (g.k_min()..=g.k_max())
        .zip(f.coeffs())
        .map(|(k, c)| c * symbol(g.xi(k)))
        .collect();
    Field::from_coeffs(g, coeffs).expect("symbol produced a non-finite coefficient")
}

pub fn derivative(f: &Field) -> Field {
    apply_symbol(f, |xi| C64::new(0.0, xi))
}

/// `<xi> = 1 + |xi|`.
pub fn japanese(xi: f64) -> f64 {
    1.0 + xi.abs()
}

/// Parameters of the I-operator symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ISymbol {
    /// Frequency threshold `N`; `f64::INFINITY` makes `I` the identity.
    pub threshold: f64,
    /// Sobolev index `s`.
    pub s: f64,
}

impl ISymbol {
    pub fn new(threshold: f64, s: f64) -> Result<Self> {
        if !(threshold >= 1.0) {
            return Err(Error::InvalidParameter(format!("N must be >= 1, got {threshold}")));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParameter(format!("s must lie in (0, 1), got {s}")));
        }
        if !(s > 0.5 && s <= 2.0 / 3.0) {
            log::warn!("Sobolev index s = {s} is outside (1/2, 2/3]");
        }
        Ok(Self { threshold, s })
    }

    /// Symbol with `m = 1` everywhere.
    pub fn identity() -> Self {
        Self { threshold: f64::INFINITY, s: 0.6 }
    }

    /// `m(xi)`: 1 for `|xi| <= N`, `(|xi|/N)^(s-1)` above.
    pub fn m(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a <= self.threshold {
            1.0
        } else {
            (a / self.threshold).powf(self.s - 1.0)
        }
    }

    /// `g(xi) = m(xi)^2 xi^2`.
    pub fn g(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a <= self.threshold {
            xi * xi
        } else {
            self.threshold.powf(2.0 - 2.0 * self.s) * a.powf(2.0 * self.s)
        }
    }

    /// `g'(xi)`; at `|xi| = N` the mean of the one-sided derivatives.
    pub fn dg(&self, xi: f64) -> f64 {
        let a = xi.abs();
        let n = self.threshold;
        let outer = |a: f64| 2.0 * self.s * n.powf(2.0 - 2.0 * self.s) * a.powf(2.0 * self.s - 1.0);
        let mag = if a < n {
            2.0 * a
        } else if a > n {
            outer(a)
        } else {
            0.5 * (2.0 * a + outer(a))
        };
        mag * xi.signum()
    }

    /// `g''(xi)`; at `|xi| = N` the mean of the one-sided values.
    pub fn d2g(&self, xi: f64) -> f64 {
        let a = xi.abs();
        let n = self.threshold;
        let s = self.s;
        let outer = |a: f64| 2.0 * s * (2.0 * s - 1.0) * n.powf(2.0 - 2.0 * s) * a.powf(2.0 * s - 2.0);
        if a < n {
            2.0
        } else if a > n {
            outer(a)
        } else {
            0.5 * (2.0 + outer(a))
        }
    }
}

/// Applies the I-operator.
pub fn apply_i(f: &Field, symbol: &ISymbol) -> Field {
    apply_symbol(f, |xi| C64::new(symbol.m(xi), 0.0))
}

/// `||<xi>^s c||` with the Parseval weight `d xi / 2 pi`.
pub fn sobolev_norm(f: &Field, s: f64) -> f64 {
    let g = f.grid();
    let w = g.dxi() / (2.0 * PI);
    let sum: f64 = (g.k_min()..=g.k_max())
        .zip(f.coeffs())
        .map(|(k, c)| japanese(g.xi(k)).powf(2.0 * s) * c.norm_sqr())
        .sum();
    (w * sum).sqrt()
}
