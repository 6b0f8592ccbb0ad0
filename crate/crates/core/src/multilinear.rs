//! Multilinear functionals `Lambda_n(M; f) = C_n sum_{xi_1+...+xi_n=0} M(xi) prod g_j(xi_j)`
//! on the wavenumber lattice, with `g_j = c` in odd slots and `g_j(xi) = conj(c(-xi))` in
//! even slots, and `C_n = (d xi / 2 pi)^(n-1)` so that `Lambda_2(1; f) = ||f||_2^2`.
//!
//! Exact sums enumerate the `n-1` free lattice variables with the last one determined.
//! Blocks of the first variable are reduced in a fixed order, so results do not depend
//! on the number of worker threads.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Band, Field, C64};

/// Largest arity handled by the lattice engine.
pub const MAX_ARITY: usize = 12;

/// A function on the hyperplane `xi_1 + ... + xi_n = 0`.
pub trait Multiplier: Send + Sync {
    fn arity(&self) -> usize;

    fn eval(&self, xi: &[f64]) -> C64;

    /// Evaluation at the lattice point `xi_j = k_j dxi`. Implementations may use the integer
    /// indices directly (exact resonance tests, precomputed tables, Galerkin truncation).
    fn eval_lattice(&self, k: &[i64], dxi: f64) -> C64 {
        let mut xi = [0.0; MAX_ARITY];
        for (x, &kk) in xi.iter_mut().zip(k) {
            *x = kk as f64 * dxi;
        }
        self.eval(&xi[..k.len()])
    }
}

type EvalFn = dyn Fn(&[f64]) -> C64 + Send + Sync;

/// Multiplier backed by a closure.
#[derive(Clone)]
pub struct MultiplierN {
    n: usize,
    f: Arc<EvalFn>,
}

impl MultiplierN {
    pub fn new(n: usize, f: impl Fn(&[f64]) -> C64 + Send + Sync + 'static) -> Result<Self> {
        if n < 2 || n % 2 != 0 || n > MAX_ARITY {
            return Err(Error::InvalidParameter(format!("multiplier arity must be even in 2..={MAX_ARITY}, got {n}")));
        }
        Ok(Self { n, f: Arc::new(f) })
    }

    pub fn constant(n: usize, value: C64) -> Result<Self> {
        Self::new(n, move |_| value)
    }
}

impl std::fmt::Debug for MultiplierN {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MultiplierN({})", self.n)
    }
}

impl Multiplier for MultiplierN {
    fn arity(&self) -> usize {
        self.n
    }

    fn eval(&self, xi: &[f64]) -> C64 {
        (self.f)(xi)
    }
}

impl<M: Multiplier + ?Sized> Multiplier for Arc<M> {
    fn arity(&self) -> usize {
        (**self).arity()
    }
    fn eval(&self, xi: &[f64]) -> C64 {
        (**self).eval(xi)
    }
    fn eval_lattice(&self, k: &[i64], dxi: f64) -> C64 {
        (**self).eval_lattice(k, dxi)
    }
}

impl<M: Multiplier + ?Sized> Multiplier for &M {
    fn arity(&self) -> usize {
        (**self).arity()
    }
    fn eval(&self, xi: &[f64]) -> C64 {
        (**self).eval(xi)
    }
    fn eval_lattice(&self, k: &[i64], dxi: f64) -> C64 {
        (**self).eval_lattice(k, dxi)
    }
}

/// `X^k_j(M)`: slot `j` (1-based) of `M` receives `xi_j + ... + xi_{j+k}`.
///
/// With a band attached, lattice evaluation vanishes whenever the merged frequency falls
/// outside it. This is the form in which elongations arise from the Galerkin-truncated
/// evolution on that band.
#[derive(Clone)]
pub struct Elongated<M> {
    inner: M,
    j: usize,
    k: usize,
    band: Option<Band>,
}

impl<M: Multiplier> Elongated<M> {
    pub fn within(mut self, band: Band) -> Self {
        self.band = Some(band);
        self
    }
}

pub fn elongate<M: Multiplier>(m: M, j: usize, k: usize) -> Result<Elongated<M>> {
    let n = m.arity();
    if j < 1 || j > n {
        return Err(Error::IndexOutOfRange(format!("elongation slot {j} for arity {n}")));
    }
    if k % 2 != 0 || k == 0 {
        return Err(Error::InvalidParameter(format!("elongation count must be even and positive, got {k}")));
    }
    if n + k > MAX_ARITY {
        return Err(Error::InvalidParameter(format!("elongated arity {} exceeds {MAX_ARITY}", n + k)));
    }
    Ok(Elongated { inner: m, j, k, band: None })
}

impl<M: Multiplier> Multiplier for Elongated<M> {
    fn arity(&self) -> usize {
        self.inner.arity() + self.k
    }

    fn eval(&self, xi: &[f64]) -> C64 {
        let mut buf = [0.0; MAX_ARITY];
        let j = self.j - 1;
        buf[..j].copy_from_slice(&xi[..j]);
        buf[j] = xi[j..=j + self.k].iter().sum();
        let n = self.inner.arity();
        buf[j + 1..n].copy_from_slice(&xi[j + self.k + 1..]);
        self.inner.eval(&buf[..n])
    }

    fn eval_lattice(&self, k: &[i64], dxi: f64) -> C64 {
        let mut buf = [0i64; MAX_ARITY];
        let j = self.j - 1;
        buf[..j].copy_from_slice(&k[..j]);
        let merged: i64 = k[j..=j + self.k].iter().sum();
        if let Some(b) = self.band {
            if !b.contains(merged) {
                return C64::new(0.0, 0.0);
            }
        }
        buf[j] = merged;
        let n = self.inner.arity();
        buf[j + 1..n].copy_from_slice(&k[j + self.k + 1..]);
        self.inner.eval_lattice(&buf[..n], dxi)
    }
}

/// `M` with its slots reindexed: slot `i` of the result feeds slot `perm[i]` of `M`.
#[derive(Clone)]
pub struct Permuted<M> {
    pub inner: M,
    pub perm: Vec<usize>,
}

impl<M: Multiplier> Multiplier for Permuted<M> {
    fn arity(&self) -> usize {
        self.inner.arity()
    }
    fn eval(&self, xi: &[f64]) -> C64 {
        let mut buf = [0.0; MAX_ARITY];
        for (i, &p) in self.perm.iter().enumerate() {
            buf[p] = xi[i];
        }
        self.inner.eval(&buf[..xi.len()])
    }
    fn eval_lattice(&self, k: &[i64], dxi: f64) -> C64 {
        let mut buf = [0i64; MAX_ARITY];
        for (i, &p) in self.perm.iter().enumerate() {
            buf[p] = k[i];
        }
        self.inner.eval_lattice(&buf[..k.len()], dxi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub value: C64,
    /// Zero for exact sums.
    pub stderr: f64,
    /// Lattice tuples (exact) or samples (Monte Carlo) visited.
    pub terms: u64,
}

impl LambdaEstimate {
    pub fn zero() -> Self {
        Self { value: C64::new(0.0, 0.0), stderr: 0.0, terms: 0 }
    }
}

impl std::ops::Add for LambdaEstimate {
    type Output = LambdaEstimate;
    fn add(self, o: Self) -> Self {
        Self {
            value: self.value + o.value,
            stderr: self.stderr.hypot(o.stderr),
            terms: self.terms + o.terms,
        }
    }
}

/// Grid-size cap for the exact `n`-linear sum (`None`: unlimited).
pub fn exact_cap(n: usize) -> Option<usize> {
    match n {
        2 => None,
        4 => Some(512),
        6 => Some(32),
        8 => Some(16),
        _ => Some(8),
    }
}

fn check_cap(n: usize, f: &Field) -> Result<()> {
    let Some(cap) = exact_cap(n) else { return Ok(()) };
    let modes = f.grid().modes();
    if modes <= cap {
        return Ok(());
    }
    // a band-limited field costs no more than a full field on the capped grid
    let support = 2 * f.support_kmax() as usize + 1;
    if support <= cap - 1 {
        return Ok(());
    }
    Err(Error::ArityTooLarge { arity: n, modes, cap })
}

/// Odd- and even-slot coefficient tables over `-r..=r`.
struct Slots {
    r: i64,
    odd: Vec<C64>,
    even: Vec<C64>,
}

impl Slots {
    fn new(f: &Field) -> Self {
        let r = f.support_kmax();
        let odd = (-r..=r).map(|k| f.coeff(k)).collect();
        let even = (-r..=r).map(|k| f.coeff(-k).conj()).collect();
        Self { r, odd, even }
    }

    #[inline]
    fn get(&self, slot: usize, k: i64) -> C64 {
        let i = (k + self.r) as usize;
        if slot % 2 == 0 {
            self.odd[i]
        } else {
            self.even[i]
        }
    }
}

fn normalization(f: &Field, n: usize) -> f64 {
    (f.grid().dxi() / (2.0 * PI)).powi(n as i32 - 1)
}

/// Exact lattice value of `Lambda_n(M; f)`.
pub fn lambda_n<M: Multiplier + ?Sized>(m: &M, f: &Field) -> Result<LambdaEstimate> {
    let n = m.arity();
    if n < 2 || n % 2 != 0 || n > MAX_ARITY {
        return Err(Error::InvalidParameter(format!("arity {n}")));
    }
    check_cap(n, f)?;
    if f.is_zero() {
        return Ok(LambdaEstimate::zero());
    }
    let slots = Slots::new(f);
    let dxi = f.grid().dxi();
    let r = slots.r;
    let blocks: Vec<(C64, u64)> = (-r..=r).into_par_iter().map(|k1| block_sum(m, &slots, n, k1, dxi)).collect();
    let (sum, terms) = blocks.iter().fold((C64::new(0.0, 0.0), 0u64), |(s, t), (v, c)| (s + v, t + c));
    Ok(LambdaEstimate { value: sum * normalization(f, n), stderr: 0.0, terms })
}

fn block_sum<M: Multiplier + ?Sized>(m: &M, slots: &Slots, n: usize, k1: i64, dxi: f64) -> (C64, u64) {
    let r = slots.r;
    let zero = C64::new(0.0, 0.0);
    let first = slots.get(0, k1);
    if first == zero {
        return (zero, 0);
    }
    let mut ks = [0i64; MAX_ARITY];
    ks[0] = k1;
    if n == 2 {
        ks[1] = -k1;
        return (m.eval_lattice(&ks[..2], dxi) * first * slots.get(1, -k1), 1);
    }
    // slots 1..=mid are free and enumerated by an odometer; slot n-2 is free and innermost;
    // slot n-1 is determined
    let mid = n - 3;
    let mut prefix = [zero; MAX_ARITY];
    let mut partial = [0i64; MAX_ARITY];
    prefix[0] = first;
    partial[0] = k1;
    for i in 1..=mid {
        ks[i] = -r;
        prefix[i] = prefix[i - 1] * slots.get(i, -r);
        partial[i] = partial[i - 1] - r;
    }
    let mut acc = zero;
    let mut count = 0u64;
    loop {
        let p = prefix[mid];
        if p != zero {
            let s = partial[mid];
            let lo = (-r).max(-r - s);
            let hi = r.min(r - s);
            for kl in lo..=hi {
                let kn = -(s + kl);
                let w = p * slots.get(n - 2, kl) * slots.get(n - 1, kn);
                count += 1;
                if w == zero {
                    continue;
                }
                ks[n - 2] = kl;
                ks[n - 1] = kn;
                acc += m.eval_lattice(&ks[..n], dxi) * w;
            }
        }
        // advance the odometer
        let mut i = mid;
        loop {
            if i == 0 {
                return (acc, count);
            }
            if ks[i] < r {
                ks[i] += 1;
                break;
            }
            ks[i] = -r;
            i -= 1;
        }
        for j in i..=mid {
            prefix[j] = prefix[j - 1] * slots.get(j, ks[j]);
            partial[j] = partial[j - 1] + ks[j];
        }
    }
}

/// Samples per deterministic RNG chunk.
const CHUNK: usize = 4096;

/// Importance-sampled `Lambda_n(M; f)`.
///
/// The first `n-1` frequencies are drawn independently with probability proportional to
/// `|g_j|`; the last one is forced onto the hyperplane. Chunk `c` of the sample stream uses
/// ChaCha stream `c` of `seed`, so the estimate is independent of thread count.
pub fn lambda_n_sampled<M: Multiplier + ?Sized>(m: &M, f: &Field, samples: usize, seed: u64) -> Result<LambdaEstimate> {
    let n = m.arity();
    if n < 2 || n % 2 != 0 || n > MAX_ARITY {
        return Err(Error::InvalidParameter(format!("arity {n}")));
    }
    if samples < 10_000 {
        return Err(Error::InvalidParameter(format!("at least 1e4 samples required, got {samples}")));
    }
    if f.is_zero() {
        // degenerate proposal: the integrand vanishes identically
        return Ok(LambdaEstimate::zero());
    }
    let slots = Slots::new(f);
    let r = slots.r;
    let cdf = |v: &[C64]| -> (Vec<f64>, f64) {
        let mut acc = 0.0;
        let c: Vec<f64> = v
            .iter()
            .map(|z| {
                acc += z.norm();
                acc
            })
            .collect();
        (c, acc)
    };
    let (cdf_odd, z_odd) = cdf(&slots.odd);
    let (cdf_even, z_even) = cdf(&slots.even);
    let dxi = f.grid().dxi();
    let chunks = samples.div_ceil(CHUNK);

    let partials: Vec<(C64, f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(samples - c * CHUNK);
            let mut ks = [0i64; MAX_ARITY];
            let (mut s, mut s_re2, mut s_im2) = (C64::new(0.0, 0.0), 0.0, 0.0);
            for _ in 0..len {
                let mut weight = C64::new(1.0, 0.0);
                let mut sum = 0i64;
                for (slot, k) in ks.iter_mut().enumerate().take(n - 1) {
                    let (table, z) = if slot % 2 == 0 { (&cdf_odd, z_odd) } else { (&cdf_even, z_even) };
                    let u: f64 = rng.random::<f64>() * z;
                    let idx = table.partition_point(|&x| x <= u).min(table.len() - 1);
                    *k = idx as i64 - r;
                    let g = slots.get(slot, *k);
                    // g / p = z * g / |g|
                    weight *= g / g.norm() * z;
                    sum += *k;
                }
                let kn = -sum;
                let v = if kn.abs() <= r {
                    ks[n - 1] = kn;
                    weight * slots.get(n - 1, kn) * m.eval_lattice(&ks[..n], dxi)
                } else {
                    C64::new(0.0, 0.0)
                };
                s += v;
                s_re2 += v.re * v.re;
                s_im2 += v.im * v.im;
            }
            (s, s_re2, s_im2)
        })
        .collect();
    let (s, s_re2, s_im2) = partials.iter().fold((C64::new(0.0, 0.0), 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let nf = samples as f64;
    let mean = s / nf;
    let var = (s_re2 / nf - mean.re * mean.re) + (s_im2 / nf - mean.im * mean.im);
    let scale = normalization(f, n);
    Ok(LambdaEstimate {
        value: mean * scale,
        stderr: (var.max(0.0) / (nf - 1.0)).sqrt() * scale,
        terms: samples as u64,
    })
}

/// `M(xi) sum_j (-1)^j xi_j^2`.
struct Dispersed<M>(M);

impl<M: Multiplier> Multiplier for Dispersed<M> {
    fn arity(&self) -> usize {
        self.0.arity()
    }
    fn eval(&self, xi: &[f64]) -> C64 {
        self.0.eval(xi) * dispersion(xi)
    }
    fn eval_lattice(&self, k: &[i64], dxi: f64) -> C64 {
        let d: i64 = k.iter().enumerate().map(|(i, &kk)| if i % 2 == 0 { -kk * kk } else { kk * kk }).sum();
        if d == 0 {
            return C64::new(0.0, 0.0);
        }
        self.0.eval_lattice(k, dxi) * (d as f64 * dxi * dxi)
    }
}

/// `sum_j (-1)^j xi_j^2` with 1-based `j`.
pub fn dispersion(xi: &[f64]) -> f64 {
    xi.iter().enumerate().map(|(i, x)| if i % 2 == 0 { -x * x } else { x * x }).sum()
}

/// `sum_j X^2_j(M) xi_{j+1}`.
struct CubicTerm<M> {
    parts: Vec<Elongated<M>>,
}

impl<M: Multiplier> Multiplier for CubicTerm<M> {
    fn arity(&self) -> usize {
        self.parts[0].arity()
    }
    fn eval(&self, xi: &[f64]) -> C64 {
        self.parts.iter().enumerate().map(|(j, p)| p.eval(xi) * xi[j + 1]).sum()
    }
    fn eval_lattice(&self, k: &[i64], dxi: f64) -> C64 {
        self.parts
            .iter()
            .enumerate()
            .filter(|(j, _)| k[j + 1] != 0)
            .map(|(j, p)| p.eval_lattice(k, dxi) * (k[j + 1] as f64 * dxi))
            .sum()
    }
}

/// `sum_j (-1)^(j-1) X^4_j(M)`.
struct QuinticTerm<M> {
    parts: Vec<Elongated<M>>,
}

impl<M: Multiplier> Multiplier for QuinticTerm<M> {
    fn arity(&self) -> usize {
        self.parts[0].arity()
    }
    fn eval(&self, xi: &[f64]) -> C64 {
        self.parts.iter().enumerate().map(|(j, p)| if j % 2 == 0 { p.eval(xi) } else { -p.eval(xi) }).sum()
    }
    fn eval_lattice(&self, k: &[i64], dxi: f64) -> C64 {
        self.parts
            .iter()
            .enumerate()
            .map(|(j, p)| if j % 2 == 0 { p.eval_lattice(k, dxi) } else { -p.eval_lattice(k, dxi) })
            .sum()
    }
}

/// Right side of the time-derivative identity for `Lambda_n(M; w)` along the gauged flow:
///
/// `i Lambda_n(M sum (-1)^j xi_j^2) - i Lambda_{n+2}(sum X^2_j(M) xi_{j+1})
///  + (i/2) Lambda_{n+4}(sum (-1)^(j-1) X^4_j(M))`.
///
/// Elongations are truncated to `band`, the Galerkin band of the evolution `f` came from.
pub fn ddt_lambda_rhs<M: Multiplier + Clone>(m: &M, f: &Field, band: Band) -> Result<LambdaEstimate> {
    let n = m.arity();
    let t1 = lambda_n(&Dispersed(m.clone()), f)?;
    let cubic = CubicTerm {
        parts: (1..=n).map(|j| elongate(m.clone(), j, 2).map(|e| e.within(band))).collect::<Result<_>>()?,
    };
    let t2 = lambda_n(&cubic, f)?;
    let quintic = QuinticTerm {
        parts: (1..=n).map(|j| elongate(m.clone(), j, 4).map(|e| e.within(band))).collect::<Result<_>>()?,
    };
    let t3 = lambda_n(&quintic, f)?;
    let i = C64::new(0.0, 1.0);
    Ok(LambdaEstimate {
        value: i * t1.value - i * t2.value + 0.5 * i * t3.value,
        stderr: 0.0,
        terms: t1.terms + t2.terms + t3.terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use rand_distr::{Distribution, StandardNormal};

    fn random_field(grid: Grid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Field::from_mode_fn(grid, |_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            C64::new(a, b) * 0.3
        })
    }

    fn one(n: usize) -> MultiplierN {
        MultiplierN::constant(n, C64::new(1.0, 0.0)).unwrap()
    }

    /// Reference sum over the full cube of lattice tuples.
    fn brute(m: &dyn Multiplier, f: &Field) -> C64 {
        let n = m.arity();
        let r = f.grid().k_max();
        let side = (2 * r + 1) as usize;
        let mut acc = C64::new(0.0, 0.0);
        let mut ks = vec![0i64; n];
        for idx in 0..side.pow(n as u32) {
            let mut rem = idx;
            for k in ks.iter_mut() {
                *k = (rem % side) as i64 - r;
                rem /= side;
            }
            if ks.iter().sum::<i64>() != 0 {
                continue;
            }
            let mut w = C64::new(1.0, 0.0);
            for (j, &k) in ks.iter().enumerate() {
                w *= if j % 2 == 0 { f.coeff(k) } else { f.coeff(-k).conj() };
            }
            acc += w * m.eval_lattice(&ks, f.grid().dxi());
        }
        acc * normalization(f, n)
    }

    #[test]
    fn lambda2_is_mass() {
        let g = Grid::new(3.0, 32).unwrap();
        let f = random_field(g, 1);
        let l = lambda_n(&one(2), &f).unwrap();
        assert!((l.value.re - f.l2_norm().powi(2)).abs() < 1e-10 * l.value.re);
        assert!(l.value.im.abs() < 1e-12);
    }

    #[test]
    fn zero_field_gives_zero() {
        let g = Grid::new(3.0, 16).unwrap();
        let z = Field::zeros(g);
        for n in [2, 4, 6, 8] {
            assert_eq!(lambda_n(&one(n), &z).unwrap().value, C64::new(0.0, 0.0));
        }
        let s = lambda_n_sampled(&one(6), &z, 20_000, 1).unwrap();
        assert_eq!((s.value, s.stderr), (C64::new(0.0, 0.0), 0.0));
    }

    #[test]
    fn engine_matches_brute_force() {
        let g = Grid::new(2.0, 8).unwrap();
        let f = random_field(g, 5);
        let m = MultiplierN::new(4, |x| C64::new(x[0] * x[1] - x[2], x[3] + 0.5)).unwrap();
        let a = lambda_n(&m, &f).unwrap().value;
        let b = brute(&m, &f);
        assert!((a - b).norm() < 1e-12 * b.norm().max(1.0));
        let m6 = MultiplierN::new(6, |x| C64::new(x[0] - x[5] * x[2], x[1] * x[4])).unwrap();
        let a = lambda_n(&m6, &f).unwrap().value;
        let b = brute(&m6, &f);
        assert!((a - b).norm() < 1e-12 * b.norm().max(1.0));
    }

    #[test]
    fn antisymmetric_quartic_vanishes() {
        let g = Grid::new(2.0 * PI, 16).unwrap();
        let m = MultiplierN::new(4, |x| C64::new(x[1] + x[2], 0.0)).unwrap();
        for seed in 0..5 {
            let f = random_field(g, seed);
            let v = lambda_n(&m, &f).unwrap().value;
            let scale = lambda_n(&MultiplierN::new(4, |x| C64::new(x[1].abs() + x[2].abs(), 0.0)).unwrap(), &f).unwrap().value.norm();
            assert!(v.norm() < 1e-12 * scale.max(1.0), "{v}");
        }
    }

    #[test]
    fn arity_caps() {
        let g = Grid::new(2.0 * PI, 64).unwrap();
        let f = random_field(g, 0);
        assert!(matches!(lambda_n(&one(6), &f), Err(Error::ArityTooLarge { .. })));
        assert!(matches!(lambda_n(&one(8), &Field::zeros(Grid::new(1.0, 32).unwrap()).clone()), Ok(_)));
        let g = Grid::new(2.0 * PI, 32).unwrap();
        assert!(matches!(lambda_n(&one(8), &random_field(g, 0)), Err(Error::ArityTooLarge { .. })));
        assert!(lambda_n(&one(6), &random_field(g, 0)).is_ok());
    }

    #[test]
    fn permutations_of_like_slots_leave_lambda_invariant() {
        let g = Grid::new(2.0 * PI, 12).unwrap();
        let f = random_field(g, 11);
        let m = MultiplierN::new(6, |x| C64::new(x[0] * x[3] + x[4], x[1] - 2.0 * x[2] * x[5])).unwrap();
        let base = lambda_n(&m, &f).unwrap().value;
        for perm in [vec![2, 1, 0, 3, 4, 5], vec![0, 5, 2, 1, 4, 3], vec![4, 3, 0, 5, 2, 1]] {
            let p = Permuted { inner: m.clone(), perm };
            let v = lambda_n(&p, &f).unwrap().value;
            assert!((v - base).norm() < 1e-10 * base.norm());
        }
    }

    #[test]
    fn conjugation_symmetric_multipliers_give_real_values() {
        // M(-x2,-x1,-x4,-x3) = conj M(x)
        let g = Grid::new(2.0 * PI, 16).unwrap();
        let f = random_field(g, 2);
        let m = MultiplierN::new(4, |x| C64::new(x[0] * x[0] + x[1] * x[1] + x[2] * x[3], x[0] + x[1] - x[2] - x[3])).unwrap();
        // check the premise numerically before using it
        let t = [1.0, -3.0, 4.0, -2.0];
        let lhs = m.eval(&[-t[1], -t[0], -t[3], -t[2]]);
        assert!((lhs - m.eval(&t).conj()).norm() < 1e-12);
        let v = lambda_n(&m, &f).unwrap().value;
        assert!(v.im.abs() < 1e-9 * v.norm(), "{v}");
    }

    #[test]
    fn elongation() {
        let m2 = MultiplierN::new(2, |x| C64::new(x[0], 10.0 * x[1])).unwrap();
        let e = elongate(m2.clone(), 1, 2).unwrap();
        assert_eq!(e.arity(), 4);
        let x = [1.0, 2.0, 3.0, -6.0];
        assert_eq!(e.eval(&x), m2.eval(&[6.0, -6.0]));
        let e2 = elongate(m2.clone(), 2, 2).unwrap();
        assert_eq!(e2.eval(&[1.0, -1.0, 2.0, -2.0]), m2.eval(&[1.0, -1.0]));
        let e1 = elongate(one(2), 2, 4).unwrap();
        assert_eq!(e1.eval(&[1.0, 2.0, 3.0, 4.0, 5.0, -15.0]), C64::new(1.0, 0.0));
        assert!(elongate(one(2), 3, 2).is_err());
        assert!(elongate(one(2), 0, 2).is_err());
        assert!(elongate(one(2), 1, 3).is_err());
        // band truncation on the lattice
        let b = elongate(one(2), 1, 2).unwrap().within(Band { kmax: 3 });
        assert_eq!(b.eval_lattice(&[2, 2, 1, -5], 1.0), C64::new(0.0, 0.0));
        assert_eq!(b.eval_lattice(&[2, 2, -1, -3], 1.0), C64::new(1.0, 0.0));
    }

    #[test]
    fn sampled_matches_exact() {
        let g = Grid::new(2.0 * PI, 16).unwrap();
        let f = random_field(g, 21);
        let m = MultiplierN::new(6, |x| C64::new(1.0 + x[0] * x[1] / 10.0, x[2] / 5.0)).unwrap();
        let exact = lambda_n(&m, &f).unwrap().value;
        let seeds = 200;
        let mut inside = 0;
        for seed in 0..seeds {
            let s = lambda_n_sampled(&m, &f, 10_000, seed).unwrap();
            if (s.value - exact).norm() <= 3.0 * s.stderr {
                inside += 1;
            }
        }
        assert!(inside as f64 >= 0.99 * seeds as f64, "{inside}/{seeds}");
    }

    #[test]
    fn sampled_stderr_scales() {
        let g = Grid::new(2.0 * PI, 16).unwrap();
        let f = random_field(g, 4);
        let m = one(6);
        let a = lambda_n_sampled(&m, &f, 40_000, 9).unwrap();
        let b = lambda_n_sampled(&m, &f, 80_000, 9).unwrap();
        let ratio = a.stderr / b.stderr;
        assert!((ratio - 2f64.sqrt()).abs() < 0.15, "ratio {ratio}");
        assert!(lambda_n_sampled(&m, &f, 100, 0).is_err());
        // fixed seed is reproducible
        assert_eq!(a, lambda_n_sampled(&m, &f, 40_000, 9).unwrap());
    }

    #[test]
    fn ddt_of_mass_vanishes() {
        let g = Grid::new(2.0 * PI, 16).unwrap();
        let f = random_field(g, 8);
        let d = ddt_lambda_rhs(&one(2), &f, Band::full(&g)).unwrap();
        assert!(d.value.norm() < 1e-12, "{}", d.value);
        assert_eq!(ddt_lambda_rhs(&one(2), &Field::zeros(g), Band::full(&g)).unwrap().value, C64::new(0.0, 0.0));
    }
}
