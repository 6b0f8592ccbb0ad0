//! Mass, energy, the modified energies `E^1`, `E^2`, and the correction multipliers.
//!
//! With `g(xi) = m(xi)^2 xi^2`:
//!
//! * `sigma_4 = g_1 xi_3 + g_2 xi_4 + g_3 xi_1 + g_4 xi_2` and `M_4 = -sigma_4 / (2 xi_12 xi_14)`,
//!   extended to the resonant set by its directional limits;
//! * `E^2 = -Lambda_2(m_1 xi_1 m_2 xi_2) + 1/2 Lambda_4(M_4)`;
//! * `d/dt E^2 = Lambda_6(M_6) + Lambda_8(M_8)` along the gauged flow.
//!
//! `M_6` and `M_8` are available both in symmetrized pointwise form and as single
//! representatives ([`M6Rep`], [`M8Rep`]). A representative differs from the symmetrized
//! multiplier by a permutation average over like slots, so both have the same `Lambda`
//! value; lattice sums use the representatives because they are 36 and 576 times cheaper.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data;
use crate::error::{Error, Result};
use crate::evolution::{Model, Solver};
use crate::multilinear::{lambda_n, LambdaEstimate, Multiplier, MultiplierN};
use crate::spectral::{apply_i, Band, Field, Grid, ISymbol, Refined, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance for resonance detection on continuous tuples.
pub const RESONANCE_TOLERANCE: f64 = 1e-10;

/// The Lambda_8 constant implied by the increment identity.
pub const C2_ANALYTIC: C64 = C64::new(0.0, 1.0 / 2304.0);

pub fn mass(f: &Field) -> f64 {
    f.l2_norm().powi(2)
}

/// `int |f_x|^2 - 1/2 Im int |f|^2 f conj(f)_x`, by spectral differentiation and quadrature
/// on a grid of `2K` points (exact for the band-limited integrand).
pub fn energy_physical(f: &Field) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    let g = f.grid();
    let r = Refined::new(*g, 2 * g.modes());
    let dc: Vec<C64> = (g.k_min()..=g.k_max()).zip(f.coeffs()).map(|(k, c)| c * C64::new(0.0, g.xi(k))).collect();
    let u = r.to_physical(f.coeffs());
    let ux = r.to_physical(&dc);
    let kinetic: Vec<C64> = ux.iter().map(|v| C64::new(v.norm_sqr(), 0.0)).collect();
    let quartic: Vec<C64> = u.iter().zip(&ux).map(|(a, b)| a.norm_sqr() * a * b.conj()).collect();
    r.integrate(&kinetic).re - 0.5 * r.integrate(&quartic).im
}

/// `-Lambda_2(xi_1 xi_2) + 1/8 Lambda_4(xi_1 + xi_3 - xi_2 - xi_4)`.
pub fn energy_spectral(f: &Field) -> Result<f64> {
    let q = lambda_n(&MultiplierN::new(2, |x| C64::new(-x[0] * x[1], 0.0))?, f)?;
    let c = lambda_n(&MultiplierN::new(4, |x| C64::new((x[0] + x[2] - x[1] - x[3]) / 8.0, 0.0))?, f)?;
    Ok((q.value + c.value).re)
}

pub fn modified_energy_1(f: &Field, symbol: &ISymbol) -> f64 {
    energy_physical(&apply_i(f, symbol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModifiedEnergy {
    pub value: f64,
    /// `||d_x I f||_2^2`.
    pub quadratic: f64,
    /// `1/2 Lambda_4(M_4)`.
    pub quartic: C64,
    pub imag_residual: f64,
}

pub fn modified_energy_2(f: &Field, symbol: &ISymbol) -> Result<ModifiedEnergy> {
    modified_energy_2_in(f, symbol, Band { kmax: f.support_kmax() })
}

/// `E^2` with the `M_4` tables sized for `band`.
pub fn modified_energy_2_in(f: &Field, symbol: &ISymbol, band: Band) -> Result<ModifiedEnergy> {
    let g = f.grid();
    let quadratic: f64 = (g.k_min()..=g.k_max())
        .zip(f.coeffs())
        .map(|(k, c)| symbol.g(g.xi(k)) * c.norm_sqr())
        .sum::<f64>()
        / g.length();
    let m4 = M4::lattice(*symbol, g, band.kmax.max(f.support_kmax()));
    let quartic = 0.5 * lambda_n(&m4, f)?.value;
    Ok(ModifiedEnergy {
        value: quadratic + quartic.re,
        quadratic,
        quartic,
        imag_residual: quartic.im.abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySnapshot {
    pub mass: f64,
    pub energy: f64,
    pub e1: f64,
    pub e2: f64,
    pub imag_residual: f64,
}

pub fn snapshot(f: &Field, symbol: &ISymbol) -> Result<EnergySnapshot> {
    let e2 = modified_energy_2(f, symbol)?;
    Ok(EnergySnapshot {
        mass: mass(f),
        energy: energy_physical(f),
        e1: modified_energy_1(f, symbol),
        e2: e2.value,
        imag_residual: e2.imag_residual,
    })
}

/// Largest to fourth-largest frequency magnitudes of a tuple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqOrdering {
    /// Slot indices (0-based) of soprano, alto, tenor, baritone.
    pub indices: [usize; 4],
    pub magnitudes: [f64; 4],
}

impl FreqOrdering {
    pub fn new(xi: &[f64]) -> Result<Self> {
        if xi.len() < 4 {
            return Err(Error::InvalidParameter(format!("need at least four frequencies, got {}", xi.len())));
        }
        let mut idx: Vec<usize> = (0..xi.len()).collect();
        // stable sort: ties keep slot order
        idx.sort_by(|&a, &b| xi[b].abs().total_cmp(&xi[a].abs()));
        let indices = [idx[0], idx[1], idx[2], idx[3]];
        Ok(Self { indices, magnitudes: indices.map(|i| xi[i].abs()) })
    }

    pub fn soprano(&self) -> f64 {
        self.magnitudes[0]
    }
    pub fn alto(&self) -> f64 {
        self.magnitudes[1]
    }
    pub fn tenor(&self) -> f64 {
        self.magnitudes[2]
    }
    pub fn baritone(&self) -> f64 {
        self.magnitudes[3]
    }
}

fn check_hyperplane(xi: &[f64]) -> Result<()> {
    let sum: f64 = xi.iter().sum();
    let scale = xi.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if sum.abs() > 1e-9 * scale.max(1.0) {
        return Err(Error::OffHyperplane { sum });
    }
    Ok(())
}

pub fn sigma4(xi: &[f64; 4], symbol: &ISymbol) -> Result<f64> {
    check_hyperplane(xi)?;
    let g = xi.map(|x| symbol.g(x));
    Ok(g[0] * xi[2] + g[1] * xi[3] + g[2] * xi[0] + g[3] * xi[1])
}

/// `sum_j (-1)^(j-1) m_j^2 xi_j^2`.
pub fn sigma6(xi: &[f64; 6], symbol: &ISymbol) -> Result<f64> {
    check_hyperplane(xi)?;
    Ok(alternating_g(xi, symbol))
}

fn alternating_g(xi: &[f64], symbol: &ISymbol) -> f64 {
    xi.iter().enumerate().map(|(j, &x)| if j % 2 == 0 { symbol.g(x) } else { -symbol.g(x) }).sum()
}

#[inline]
fn m4_generic(xi: [f64; 4], g: [f64; 4]) -> f64 {
    let s = g[0] * xi[2] + g[1] * xi[3] + g[2] * xi[0] + g[3] * xi[1];
    -s / (2.0 * (xi[0] + xi[1]) * (xi[0] + xi[3]))
}

/// Limit on `xi_12 = 0` (equivalently `xi_14 = 0`) with `xi_1 != xi_3`.
#[inline]
fn m4_single(x1: f64, x3: f64, g1: f64, g3: f64, dg1: f64, dg3: f64) -> f64 {
    -(dg1 * x3 - dg3 * x1 + g3 - g1) / (2.0 * (x1 - x3))
}

/// Limit at `(a, -a, a, -a)`.
#[inline]
fn m4_double(a: f64, dg: f64, d2g: f64) -> f64 {
    dg - 0.5 * a * d2g
}

/// `M_4` on a continuous tuple, without the hyperplane check.
pub fn m4_unchecked(xi: [f64; 4], symbol: &ISymbol) -> f64 {
    let scale = xi.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let tol = RESONANCE_TOLERANCE * scale;
    let r12 = (xi[0] + xi[1]).abs() <= tol;
    let r14 = (xi[0] + xi[3]).abs() <= tol;
    let double = |a: f64| m4_double(a, symbol.dg(a), symbol.d2g(a));
    if r12 || r14 {
        let (x1, x3) = (xi[0], xi[2]);
        if (r12 && r14) || (x1 - x3).abs() <= tol {
            return double(0.25 * (xi[0] - xi[1] + xi[2] - xi[3]));
        }
        return m4_single(x1, x3, symbol.g(x1), symbol.g(x3), symbol.dg(x1), symbol.dg(x3));
    }
    m4_generic(xi, xi.map(|x| symbol.g(x)))
}

pub fn m4(xi: &[f64; 4], symbol: &ISymbol) -> Result<f64> {
    check_hyperplane(xi)?;
    Ok(m4_unchecked(*xi, symbol))
}

/// `g`, `g'`, `g''` on lattice indices `-r..=r`; indices outside are evaluated directly.
#[derive(Debug, Clone)]
struct GTable {
    symbol: ISymbol,
    dxi: f64,
    r: i64,
    g: Vec<f64>,
    dg: Vec<f64>,
    d2g: Vec<f64>,
}

impl GTable {
    fn new(symbol: ISymbol, dxi: f64, r: i64) -> Self {
        let r = r.max(0);
        let xs: Vec<f64> = (-r..=r).map(|k| k as f64 * dxi).collect();
        Self {
            symbol,
            dxi,
            r,
            g: xs.iter().map(|&x| symbol.g(x)).collect(),
            dg: xs.iter().map(|&x| symbol.dg(x)).collect(),
            d2g: xs.iter().map(|&x| symbol.d2g(x)).collect(),
        }
    }

    #[inline]
    fn g(&self, k: i64) -> f64 {
        if k.abs() <= self.r {
            self.g[(k + self.r) as usize]
        } else {
            self.symbol.g(k as f64 * self.dxi)
        }
    }

    #[inline]
    fn dg(&self, k: i64) -> f64 {
        if k.abs() <= self.r {
            self.dg[(k + self.r) as usize]
        } else {
            self.symbol.dg(k as f64 * self.dxi)
        }
    }

    #[inline]
    fn d2g(&self, k: i64) -> f64 {
        if k.abs() <= self.r {
            self.d2g[(k + self.r) as usize]
        } else {
            self.symbol.d2g(k as f64 * self.dxi)
        }
    }

    /// `M_4` at lattice indices, with exact integer resonance tests.
    #[inline]
    fn m4(&self, k: [i64; 4]) -> f64 {
        let d = self.dxi;
        let r12 = k[0] + k[1] == 0;
        let r14 = k[0] + k[3] == 0;
        if r12 || r14 {
            if k[0] == k[2] {
                let a = k[0];
                return m4_double(a as f64 * d, self.dg(a), self.d2g(a));
            }
            let (a, b) = (k[0], k[2]);
            return m4_single(a as f64 * d, b as f64 * d, self.g(a), self.g(b), self.dg(a), self.dg(b));
        }
        let xi = k.map(|kk| kk as f64 * d);
        m4_generic(xi, k.map(|kk| self.g(kk)))
    }
}

/// `M_4` as a multiplier.
#[derive(Debug, Clone)]
pub struct M4 {
    symbol: ISymbol,
    table: Arc<GTable>,
}

impl M4 {
    pub fn new(symbol: ISymbol) -> Self {
        Self { symbol, table: Arc::new(GTable::new(symbol, 1.0, -1)) }
    }

    /// Precomputes `g` and its derivatives on the lattice of `grid` up to index `radius`.
    pub fn lattice(symbol: ISymbol, grid: &Grid, radius: i64) -> Self {
        Self { symbol, table: Arc::new(GTable::new(symbol, grid.dxi(), radius)) }
    }

    pub fn symbol(&self) -> &ISymbol {
        &self.symbol
    }

    fn table_for(&self, dxi: f64) -> std::borrow::Cow<'_, GTable> {
        if self.table.dxi == dxi {
            std::borrow::Cow::Borrowed(&*self.table)
        } else {
            std::borrow::Cow::Owned(GTable::new(self.symbol, dxi, -1))
        }
    }
}

impl Multiplier for M4 {
    fn arity(&self) -> usize {
        4
    }
    fn eval(&self, xi: &[f64]) -> C64 {
        C64::new(m4_unchecked([xi[0], xi[1], xi[2], xi[3]], &self.symbol), 0.0)
    }
    fn eval_lattice(&self, k: &[i64], dxi: f64) -> C64 {
        C64::new(self.table_for(dxi).m4([k[0], k[1], k[2], k[3]]), 0.0)
    }
}

/// Bracket of the `M_6` representative: the four elongated `M_4` terms weighted by the
/// frequency that follows the merged block.
fn m6_bracket(xi: &[f64], symbol: &ISymbol) -> f64 {
    let m = |a: f64, b: f64, c: f64, d: f64| m4_unchecked([a, b, c, d], symbol);
    m(xi[0] + xi[1] + xi[2], xi[3], xi[4], xi[5]) * xi[1]
        + m(xi[0], xi[1] + xi[2] + xi[3], xi[4], xi[5]) * xi[2]
        + m(xi[0], xi[1], xi[2] + xi[3] + xi[4], xi[5]) * xi[3]
        + m(xi[0], xi[1], xi[2], xi[3] + xi[4] + xi[5]) * xi[4]
}

fn m8_bracket(xi: &[f64], symbol: &ISymbol) -> f64 {
    let m = |a: f64, b: f64, c: f64, d: f64| m4_unchecked([a, b, c, d], symbol);
    let s = |r: std::ops::Range<usize>| xi[r].iter().sum::<f64>();
    m(s(0..5), xi[5], xi[6], xi[7]) - m(xi[0], s(1..6), xi[6], xi[7]) + m(xi[0], xi[1], s(2..7), xi[7])
        - m(xi[0], xi[1], xi[2], s(3..8))
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else { return out };
        let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).expect("exists");
        p.swap(i, j);
        p[i + 1..].reverse();
    }
}

/// Calls `f` on every rearrangement of `xi` that permutes odd slots among themselves and even
/// slots among themselves.
fn for_each_like_slot_permutation(xi: &[f64], mut f: impl FnMut(&[f64])) {
    let half = xi.len() / 2;
    let perms = permutations(half);
    let mut y = [0.0; 8];
    for p in &perms {
        for q in &perms {
            for i in 0..half {
                y[2 * i] = xi[2 * p[i]];
                y[2 * i + 1] = xi[2 * q[i] + 1];
            }
            f(&y[..xi.len()]);
        }
    }
}

/// Symmetrized `M_6 = -(i/6) sigma_6 - (i/72) sum over like-slot permutations of the bracket`.
pub fn m6(xi: &[f64; 6], symbol: &ISymbol) -> Result<C64> {
    check_hyperplane(xi)?;
    Ok(m6_unchecked(xi, symbol))
}

pub fn m6_unchecked(xi: &[f64], symbol: &ISymbol) -> C64 {
    let mut sum = 0.0;
    for_each_like_slot_permutation(xi, |y| sum += m6_bracket(y, symbol));
    -I * (alternating_g(xi, symbol) / 6.0) - I * (sum / 72.0)
}

/// Symmetrized `M_8 = C_2 sum over like-slot permutations of the alternating bracket`.
pub fn m8(xi: &[f64; 8], symbol: &ISymbol, c2: C64) -> Result<C64> {
    check_hyperplane(xi)?;
    Ok(m8_unchecked(xi, symbol, c2))
}

pub fn m8_unchecked(xi: &[f64], symbol: &ISymbol, c2: C64) -> C64 {
    let mut sum = 0.0;
    for_each_like_slot_permutation(xi, |y| sum += m8_bracket(y, symbol));
    c2 * sum
}

/// Representative of `M_6`:
/// `-(i/2)(g(xi_1) - g(xi_6)) - (i/2) * bracket`.
///
/// On the lattice, elongated arguments outside `band` contribute zero, matching the
/// Galerkin truncation of the flow on that band.
#[derive(Debug, Clone)]
pub struct M6Rep {
    table: Arc<GTable>,
    band: Option<Band>,
}

impl M6Rep {
    pub fn new(symbol: ISymbol, grid: &Grid, band: Option<Band>) -> Self {
        let r = band.map(|b| b.kmax).unwrap_or(grid.k_max());
        Self { table: Arc::new(GTable::new(symbol, grid.dxi(), r)), band }
    }
}

impl Multiplier for M6Rep {
    fn arity(&self) -> usize {
        6
    }
    fn eval(&self, xi: &[f64]) -> C64 {
        let s = &self.table.symbol;
        -0.5 * I * (s.g(xi[0]) - s.g(xi[5]) + m6_bracket(xi, s))
    }
    fn eval_lattice(&self, k: &[i64], _dxi: f64) -> C64 {
        let t = &*self.table;
        let d = t.dxi;
        let inside = |m: i64| self.band.map_or(true, |b| b.contains(m));
        let mut acc = t.g(k[0]) - t.g(k[5]);
        let m = k[0] + k[1] + k[2];
        if k[1] != 0 && inside(m) {
            acc += t.m4([m, k[3], k[4], k[5]]) * (k[1] as f64 * d);
        }
        let m = k[1] + k[2] + k[3];
        if k[2] != 0 && inside(m) {
            acc += t.m4([k[0], m, k[4], k[5]]) * (k[2] as f64 * d);
        }
        let m = k[2] + k[3] + k[4];
        if k[3] != 0 && inside(m) {
            acc += t.m4([k[0], k[1], m, k[5]]) * (k[3] as f64 * d);
        }
        let m = k[3] + k[4] + k[5];
        if k[4] != 0 && inside(m) {
            acc += t.m4([k[0], k[1], k[2], m]) * (k[4] as f64 * d);
        }
        -0.5 * I * acc
    }
}

/// The alternating bracket of `M_8` for one slot ordering, without the constant `C_2`.
#[derive(Debug, Clone)]
pub struct M8Rep {
    table: Arc<GTable>,
    band: Option<Band>,
}

impl M8Rep {
    pub fn new(symbol: ISymbol, grid: &Grid, band: Option<Band>) -> Self {
        let r = band.map(|b| b.kmax).unwrap_or(grid.k_max());
        Self { table: Arc::new(GTable::new(symbol, grid.dxi(), r)), band }
    }

    /// Number of like-slot orderings collapsed into one representative.
    pub const ORDERINGS: f64 = 576.0;
}

impl Multiplier for M8Rep {
    fn arity(&self) -> usize {
        8
    }
    fn eval(&self, xi: &[f64]) -> C64 {
        C64::new(m8_bracket(xi, &self.table.symbol), 0.0)
    }
    fn eval_lattice(&self, k: &[i64], _dxi: f64) -> C64 {
        let t = &*self.table;
        let inside = |m: i64| self.band.map_or(true, |b| b.contains(m));
        let mut acc = 0.0;
        let m = k[0] + k[1] + k[2] + k[3] + k[4];
        if inside(m) {
            acc += t.m4([m, k[5], k[6], k[7]]);
        }
        let m = k[1] + k[2] + k[3] + k[4] + k[5];
        if inside(m) {
            acc -= t.m4([k[0], m, k[6], k[7]]);
        }
        let m = k[2] + k[3] + k[4] + k[5] + k[6];
        if inside(m) {
            acc += t.m4([k[0], k[1], m, k[7]]);
        }
        let m = k[3] + k[4] + k[5] + k[6] + k[7];
        if inside(m) {
            acc -= t.m4([k[0], k[1], k[2], m]);
        }
        C64::new(acc, 0.0)
    }
}

/// `Lambda_6(M_6; f)` and the `C_2`-free Lambda_8 basis value `Lambda_8(sum of orderings; f)`.
pub fn increment_terms(f: &Field, symbol: &ISymbol, band: Band) -> Result<(LambdaEstimate, LambdaEstimate)> {
    let l6 = lambda_n(&M6Rep::new(*symbol, f.grid(), Some(band)), f)?;
    let mut l8 = lambda_n(&M8Rep::new(*symbol, f.grid(), Some(band)), f)?;
    l8.value *= M8Rep::ORDERINGS;
    Ok((l6, l8))
}

/// One evaluation of the increment identity at a state of the flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementSample {
    /// Fourth-order centered difference of `E^2` along the solver.
    pub fd: C64,
    pub lambda6: C64,
    /// `Lambda_8` of the bracket summed over orderings; `Lambda_8(M_8) = C_2 * basis`.
    pub lambda8_basis: C64,
}

impl IncrementSample {
    /// `|fd - Lambda_6 - C_2 basis| / max(|Lambda_6|, |Lambda_8|, |fd|)`.
    pub fn relative_residual(&self, c2: C64) -> f64 {
        let l8 = c2 * self.lambda8_basis;
        let scale = self.lambda6.norm().max(l8.norm()).max(self.fd.norm());
        if scale == 0.0 {
            return 0.0;
        }
        (self.fd - self.lambda6 - l8).norm() / scale
    }
}

/// Evaluates both sides of the increment identity at `f` using steps `+-h`, `+-2h` of the
/// gauged solver.
pub fn increment_sample(solver: &Solver, f: &Field, symbol: &ISymbol, h: f64) -> Result<IncrementSample> {
    if !matches!(solver.model(), Model::Gauged) {
        return Err(Error::InvalidParameter("the increment identity holds for the gauged model".into()));
    }
    let band = solver.band();
    let f = f.restricted(band);
    let e2 = |t: f64| -> Result<f64> {
        let mut c = f.coeffs().to_vec();
        let steps = (t / h).round().abs() as usize;
        for _ in 0..steps {
            c = solver.step_coeffs(&c, h * t.signum());
        }
        Ok(modified_energy_2_in(&Field::from_coeffs(*f.grid(), c)?, symbol, band)?.value)
    };
    let fd = (e2(-2.0 * h)? - 8.0 * e2(-h)? + 8.0 * e2(h)? - e2(2.0 * h)?) / (12.0 * h);
    let (l6, l8) = increment_terms(&f, symbol, band)?;
    Ok(IncrementSample { fd: C64::new(fd, 0.0), lambda6: l6.value, lambda8_basis: l8.value })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub modes: usize,
    pub length: f64,
    pub symbol: ISymbol,
    /// Number of random fields in the fit.
    pub fields: usize,
    pub seed: u64,
    pub dt: f64,
    /// Sobolev decay of the random data.
    pub data_s: f64,
    /// `||f||_2` of every random field.
    pub norm: f64,
    pub dealias_fraction: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            modes: 12,
            length: 2.0 * PI,
            symbol: ISymbol { threshold: 2.0, s: 0.6 },
            fields: 10,
            seed: 1,
            dt: 1e-4,
            data_s: 0.6,
            norm: 0.9 * (2.0 * PI).sqrt(),
            dealias_fraction: 2.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub c2: C64,
    /// `||fd - Lambda_6 - C_2 basis|| / ||fd||` over the fitted samples.
    pub residual: f64,
    /// Same with the Lambda_8 term removed.
    pub residual_without_m8: f64,
    pub samples: Vec<IncrementSample>,
}

/// Residual above which the fit is treated as an assembly error.
pub const CALIBRATION_TOLERANCE: f64 = 1e-5;

/// Least-squares fit of `fd - Lambda_6 = C_2 * basis` over samples.
pub fn fit_c2(samples: &[IncrementSample]) -> Result<Calibration> {
    let num: C64 = samples.iter().map(|s| s.lambda8_basis.conj() * (s.fd - s.lambda6)).sum();
    let den: f64 = samples.iter().map(|s| s.lambda8_basis.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::CalibrationFailed("Lambda_8 basis vanishes on every sample".into()));
    }
    let c2 = num / den;
    let norm: f64 = samples.iter().map(|s| s.fd.norm_sqr()).sum::<f64>().sqrt();
    let res: f64 = samples.iter().map(|s| (s.fd - s.lambda6 - c2 * s.lambda8_basis).norm_sqr()).sum::<f64>().sqrt();
    let res0: f64 = samples.iter().map(|s| (s.fd - s.lambda6).norm_sqr()).sum::<f64>().sqrt();
    Ok(Calibration {
        c2,
        residual: res / norm,
        residual_without_m8: res0 / norm,
        samples: samples.to_vec(),
    })
}

/// Determines `C_2` from the exact increment identity on random rough fields.
pub fn calibrate_c2(config: &CalibrationConfig) -> Result<Calibration> {
    if config.modes > 16 {
        return Err(Error::InvalidParameter(format!("calibration needs K <= 16, got {}", config.modes)));
    }
    if config.fields < 10 {
        return Err(Error::InvalidParameter(format!("calibration needs >= 10 fields, got {}", config.fields)));
    }
    let grid = Grid::new(config.length, config.modes)?;
    let solver = Solver::new(Model::Gauged, grid, config.dealias_fraction)?;
    let band = solver.band();
    let samples = (0..config.fields as u64)
        .map(|i| {
            let seed = config.seed.wrapping_mul(1_000_003).wrapping_add(i);
            let f = data::rescaled(&data::rough(grid, band, config.data_s, seed), config.norm);
            increment_sample(&solver, &f, &config.symbol, config.dt)
        })
        .collect::<Result<Vec<_>>>()?;
    let cal = fit_c2(&samples)?;
    if !(cal.residual < CALIBRATION_TOLERANCE) {
        return Err(Error::CalibrationFailed(format!(
            "relative residual {:e} after fitting C2 = {}",
            cal.residual, cal.c2
        )));
    }
    Ok(cal)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyDiagnostics {
    pub mass: f64,
    pub energy: f64,
    /// `||d_x f||_2^2 / E(f)`.
    pub gradient_ratio: f64,
    /// `||d_x I f||_2^2 / E^2(f)`.
    pub modified_ratio: f64,
}

/// Gagliardo-Nirenberg type ratios; requires `||f||_2 < sqrt(2 pi)`.
pub fn diagnostics(f: &Field, symbol: &ISymbol) -> Result<EnergyDiagnostics> {
    let norm = f.l2_norm();
    if norm >= (2.0 * PI).sqrt() {
        return Err(Error::SmallnessViolated { norm });
    }
    let g = f.grid();
    let grad: f64 = (g.k_min()..=g.k_max()).zip(f.coeffs()).map(|(k, c)| g.xi(k).powi(2) * c.norm_sqr()).sum::<f64>() / g.length();
    let e = energy_physical(f);
    let e2 = modified_energy_2(f, symbol)?;
    Ok(EnergyDiagnostics {
        mass: norm * norm,
        energy: e,
        gradient_ratio: grad / e,
        modified_ratio: e2.quadratic / e2.value,
    })
}

/// Frequency regimes of the multiplier bound sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundRegime {
    /// `|M_4| / (m^2(N_sop) N_sop)` on arbitrary tuples.
    M4Soprano,
    /// `|M_4| / (m^2(N_sop) N_tenor)` with `|xi_1| ~ |xi_3| >= N >> |xi_2|, |xi_4|`.
    M4Tenor,
    /// `|M_4 - m_1^2 xi_2^2 / (2 xi_1)| / N_tenor` with `|xi_1| ~ |xi_2| >= N >> |xi_3|, |xi_4|`.
    M4Remainder,
    /// `|M_8| / (N_sop m^2(N_sop))`.
    M8Soprano,
    /// `|M_6| / (m^2(N_sop) N_sop^2)` with `N_tenor >= N`.
    M6HighTenor,
    /// `|M_6| / (N_sop N_tenor)` with `N_sop ~ N_alto >= N >> N_tenor`.
    M6LowTenor,
}

impl BoundRegime {
    pub const ALL: [BoundRegime; 6] = [
        BoundRegime::M4Soprano,
        BoundRegime::M4Tenor,
        BoundRegime::M4Remainder,
        BoundRegime::M8Soprano,
        BoundRegime::M6HighTenor,
        BoundRegime::M6LowTenor,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BoundRegime::M4Soprano => "m4_soprano",
            BoundRegime::M4Tenor => "m4_tenor",
            BoundRegime::M4Remainder => "m4_remainder",
            BoundRegime::M8Soprano => "m8_soprano",
            BoundRegime::M6HighTenor => "m6_high_tenor",
            BoundRegime::M6LowTenor => "m6_low_tenor",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepStats {
    pub regime: BoundRegime,
    pub threshold: f64,
    pub tuples: usize,
    pub sup_ratio: f64,
    pub mean_ratio: f64,
}

/// `N * 10^u` with `u` uniform in `[lo, hi]` and a random sign.
fn scaled(rng: &mut ChaCha8Rng, n: f64, lo: f64, hi: f64) -> f64 {
    let mag = n * 10f64.powf(rng.random_range(lo..hi));
    if rng.random::<bool>() {
        mag
    } else {
        -mag
    }
}

fn sweep_tuple(regime: BoundRegime, n: f64, rng: &mut ChaCha8Rng, out: &mut [f64; 8]) -> usize {
    let close = |x: &mut [f64], last: usize| x[last] = -x[..last].iter().sum::<f64>();
    match regime {
        BoundRegime::M4Soprano => {
            for x in out.iter_mut().take(3) {
                *x = scaled(rng, n, -2.0, 1.5);
            }
            close(out, 3);
            4
        }
        BoundRegime::M4Tenor => {
            out[0] = scaled(rng, n, 0.0, 1.5);
            out[1] = scaled(rng, n, -3.0, -1.0);
            out[3] = scaled(rng, n, -3.0, -1.0);
            out[2] = -(out[0] + out[1] + out[3]);
            4
        }
        BoundRegime::M4Remainder => {
            out[0] = scaled(rng, n, 0.0, 1.5);
            out[2] = scaled(rng, n, -3.0, -1.0);
            out[3] = scaled(rng, n, -3.0, -1.0);
            out[1] = -(out[0] + out[2] + out[3]);
            4
        }
        BoundRegime::M8Soprano => {
            for x in out.iter_mut().take(7) {
                *x = scaled(rng, n, -2.0, 1.5);
            }
            close(out, 7);
            8
        }
        BoundRegime::M6HighTenor => loop {
            for x in out.iter_mut().take(5) {
                *x = scaled(rng, n, 0.0, 1.5);
            }
            close(out, 5);
            if FreqOrdering::new(&out[..6]).expect("six slots").tenor() >= n {
                return 6;
            }
        },
        BoundRegime::M6LowTenor => {
            let a = rng.random_range(0..6);
            let mut b = rng.random_range(0..5);
            if b >= a {
                b += 1;
            }
            out[a] = scaled(rng, n, 0.0, 1.5);
            for (j, x) in out.iter_mut().enumerate().take(6) {
                if j != a && j != b {
                    *x = scaled(rng, n, -3.0, -1.0);
                }
            }
            out[b] = 0.0;
            out[b] = -out[..6].iter().sum::<f64>();
            6
        }
    }
}

fn sweep_ratio(regime: BoundRegime, xi: &[f64], symbol: &ISymbol) -> f64 {
    let ord = FreqOrdering::new(xi).expect("at least four slots");
    let (sop, ten) = (ord.soprano(), ord.tenor());
    let m2 = symbol.m(sop).powi(2);
    match regime {
        BoundRegime::M4Soprano => m4_unchecked([xi[0], xi[1], xi[2], xi[3]], symbol).abs() / (m2 * sop),
        BoundRegime::M4Tenor => m4_unchecked([xi[0], xi[1], xi[2], xi[3]], symbol).abs() / (m2 * ten),
        BoundRegime::M4Remainder => {
            let main = symbol.m(xi[0]).powi(2) * xi[1] * xi[1] / (2.0 * xi[0]);
            (m4_unchecked([xi[0], xi[1], xi[2], xi[3]], symbol) - main).abs() / ten
        }
        BoundRegime::M8Soprano => m8_unchecked(xi, symbol, C2_ANALYTIC).norm() / (sop * m2),
        BoundRegime::M6HighTenor => m6_unchecked(xi, symbol).norm() / (m2 * sop * sop),
        BoundRegime::M6LowTenor => m6_unchecked(xi, symbol).norm() / (sop * ten),
    }
}

const SWEEP_CHUNK: usize = 2048;

/// Empirical sup and mean of the regime's ratio over `tuples` random tuples scaled by `N`.
pub fn bound_sweep(regime: BoundRegime, symbol: &ISymbol, tuples: usize, seed: u64) -> SweepStats {
    let n = symbol.threshold;
    let chunks = tuples.div_ceil(SWEEP_CHUNK);
    let parts: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = SWEEP_CHUNK.min(tuples - c * SWEEP_CHUNK);
            let mut xi = [0.0; 8];
            let (mut sup, mut sum) = (0.0f64, 0.0);
            for _ in 0..len {
                let k = sweep_tuple(regime, n, &mut rng, &mut xi);
                let r = sweep_ratio(regime, &xi[..k], symbol);
                sup = sup.max(r);
                sum += r;
            }
            (sup, sum)
        })
        .collect();
    let sup = parts.iter().map(|p| p.0).fold(0.0, f64::max);
    let sum: f64 = parts.iter().map(|p| p.1).sum();
    SweepStats { regime, threshold: n, tuples, sup_ratio: sup, mean_ratio: sum / tuples.max(1) as f64 }
}
