//! Integrating-factor RK4 for the three models.
//!
//! The state is the vector of spectral coefficients. The dispersive part is diagonal and is
//! propagated exactly; the nonlinearity is formed on a refined grid of `3K` points, which
//! is alias-free for quintic products of band-limited data, and is then masked to the
//! retained band. The resulting scheme integrates the Galerkin truncation of each model on
//! that band exactly up to the Runge-Kutta error.

use serde::{Deserialize, Serialize};

use crate::energies;
use crate::error::{Error, Result};
use crate::spectral::{Band, Field, Grid, ISymbol, Refined, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    /// `i u_t + u_xx = i lambda (|u|^2 u)_x`.
    Dnls { lambda: f64 },
    /// `i w_t + w_xx = -i w^2 conj(w)_x - |w|^4 w / 2`.
    Gauged,
    /// `i u_t = u_xx + i a |u|^2 u_x + i b u^2 conj(u)_x + c u^3 conj(u)^2`.
    Quintic { a: f64, b: f64, c: f64 },
}

impl Model {
    /// Linear part written as `c_t = i omega(xi) c`.
    fn omega(&self, xi: f64) -> f64 {
        match self {
            Model::Dnls { .. } | Model::Gauged => -xi * xi,
            Model::Quintic { .. } => xi * xi,
        }
    }

    /// The same model with every nonlinear coupling set to zero.
    pub fn linear_only(&self) -> Model {
        match self {
            Model::Dnls { .. } | Model::Gauged => Model::Dnls { lambda: 0.0 },
            Model::Quintic { .. } => Model::Quintic { a: 0.0, b: 0.0, c: 0.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Snapshot every this many steps.
    #[serde(default = "default_stride")]
    pub sample_every: usize,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
}

fn default_stride() -> usize {
    1
}

fn default_dealias() -> f64 {
    2.0 / 3.0
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0) {
            return Err(Error::InvalidParameter(format!("T_final must be >= 0, got {}", self.t_final)));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "dealias fraction must lie in (0, 1], got {}",
                self.dealias_fraction
            )));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidParameter("sample_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// Pseudospectral right-hand side and stepper for one model on one grid.
#[derive(Debug, Clone)]
pub struct Solver {
    model: Model,
    grid: Grid,
    band: Band,
    refined: Refined,
    omega: Vec<f64>,
}

impl Solver {
    pub fn new(model: Model, grid: Grid, dealias_fraction: f64) -> Result<Self> {
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "dealias fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }
        let band = Band::retained(&grid, dealias_fraction);
        let omega = (grid.k_min()..=grid.k_max()).map(|k| model.omega(grid.xi(k))).collect();
        Ok(Self { model, grid, band, refined: Refined::new(grid, 3 * grid.modes()), omega })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Retained (Galerkin) band.
    pub fn band(&self) -> Band {
        self.band
    }

    fn mask(&self, c: &mut [C64]) {
        for (k, z) in (self.grid.k_min()..=self.grid.k_max()).zip(c.iter_mut()) {
            if !self.band.contains(k) {
                *z = C64::new(0.0, 0.0);
            }
        }
    }

    fn dx_coeffs(&self, c: &[C64]) -> Vec<C64> {
        (self.grid.k_min()..=self.grid.k_max())
            .zip(c)
            .map(|(k, z)| z * C64::new(0.0, self.grid.xi(k)))
            .collect()
    }

    /// Nonlinear part of `c_t` for band-limited coefficients `c`.
    pub fn nonlinear(&self, c: &[C64]) -> Vec<C64> {
        let r = &self.refined;
        let u = r.to_physical(c);
        let mut out = match self.model {
            Model::Dnls { lambda } => {
                if lambda == 0.0 {
                    return vec![C64::new(0.0, 0.0); c.len()];
                }
                let cubic: Vec<C64> = u.iter().map(|z| z * z.norm_sqr()).collect();
                let mut d = self.dx_coeffs(&r.to_spectral(&cubic));
                d.iter_mut().for_each(|z| *z *= lambda);
                d
            }
            Model::Gauged => {
                let ux = r.to_physical(&self.dx_coeffs(c));
                let prod: Vec<C64> = u
                    .iter()
                    .zip(&ux)
                    .map(|(w, wx)| {
                        let n2 = w.norm_sqr();
                        -(w * w) * wx.conj() + C64::new(0.0, 0.5) * (n2 * n2) * w
                    })
                    .collect();
                r.to_spectral(&prod)
            }
            Model::Quintic { a, b, c: cq } => {
                if a == 0.0 && b == 0.0 && cq == 0.0 {
                    return vec![C64::new(0.0, 0.0); c.len()];
                }
                let ux = r.to_physical(&self.dx_coeffs(c));
                let prod: Vec<C64> = u
                    .iter()
                    .zip(&ux)
                    .map(|(w, wx)| {
                        let n2 = w.norm_sqr();
                        a * n2 * wx + b * (w * w) * wx.conj() - C64::new(0.0, cq) * (n2 * n2) * w
                    })
                    .collect();
                r.to_spectral(&prod)
            }
        };
        self.mask(&mut out);
        out
    }

    /// Full `c_t`.
    pub fn rhs_coeffs(&self, c: &[C64]) -> Vec<C64> {
        let mut n = self.nonlinear(c);
        for ((z, w), om) in n.iter_mut().zip(c).zip(&self.omega) {
            *z += C64::new(0.0, *om) * w;
        }
        n
    }

    pub fn rhs(&self, f: &Field) -> Result<Field> {
        self.check(f)?;
        Field::from_coeffs(self.grid, self.rhs_coeffs(f.coeffs()))
    }

    fn check(&self, f: &Field) -> Result<()> {
        if f.grid() != &self.grid {
            return Err(Error::InconsistentField("field lives on a different grid".into()));
        }
        f.check_consistency()
    }

    fn propagate(&self, c: &[C64], h: f64) -> Vec<C64> {
        c.iter().zip(&self.omega).map(|(z, om)| z * C64::from_polar(1.0, om * h)).collect()
    }

    /// One Lawson (integrating-factor) RK4 step of size `h`; negative `h` steps backwards.
    pub fn step_coeffs(&self, c: &[C64], h: f64) -> Vec<C64> {
        let axpy = |x: &[C64], a: f64, y: &[C64]| -> Vec<C64> { x.iter().zip(y).map(|(p, q)| p + q * a).collect() };
        let half = 0.5 * h;
        let k1 = self.nonlinear(c);
        let c_half = self.propagate(c, half);
        let k2 = self.nonlinear(&self.propagate(&axpy(c, half, &k1), half));
        let k3 = self.nonlinear(&axpy(&c_half, half, &k2));
        let k4 = self.nonlinear(&axpy(&self.propagate(c, h), h, &self.propagate(&k3, half)));
        let e1 = self.propagate(&k1, h);
        let e23: Vec<C64> = k2.iter().zip(&k3).map(|(a, b)| (a + b) * 2.0).collect();
        let e23 = self.propagate(&e23, half);
        let base = self.propagate(c, h);
        base.iter()
            .zip(&e1)
            .zip(&e23)
            .zip(&k4)
            .map(|(((b, a1), a23), a4)| b + (a1 + a23 + a4) * (h / 6.0))
            .collect()
    }

    pub fn step(&self, f: &Field, h: f64) -> Result<Field> {
        self.check(f)?;
        let c = self.step_coeffs(f.coeffs(), h);
        if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { time: h });
        }
        Field::from_coeffs(self.grid, c)
    }

    /// Heuristic ceiling `0.5 / (max|xi| max|u|^2)` for the transported derivative term.
    pub fn step_budget(&self, f: &Field) -> f64 {
        let amp = f.max_abs().powi(2);
        let xi = self.grid.xi(self.band.kmax).max(self.grid.dxi());
        if amp == 0.0 {
            f64::INFINITY
        } else {
            0.5 / (xi * amp)
        }
    }
}

/// `c_t` for `model`, using the full lattice as the retained band.
pub fn rhs(model: Model, f: &Field) -> Result<Field> {
    Solver::new(model, *f.grid(), 1.0)?.rhs(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub mass: f64,
    pub energy: f64,
    pub e1: Option<f64>,
    pub e2: Option<f64>,
    pub max_abs: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Field>,
    pub diagnostics: Vec<Diagnostics>,
    /// Retained band the trajectory was integrated on.
    pub band: Band,
}

impl Trajectory {
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.diagnostics[0].mass;
        let sup = self.diagnostics.iter().map(|d| (d.mass - m0).abs()).fold(0.0, f64::max);
        if m0 == 0.0 {
            sup
        } else {
            sup / m0
        }
    }

    pub fn energy_drift(&self) -> f64 {
        let e0 = self.diagnostics[0].energy;
        self.diagnostics.iter().map(|d| (d.energy - e0).abs()).fold(0.0, f64::max)
    }

    pub fn last(&self) -> &Field {
        self.snapshots.last().expect("trajectory is never empty")
    }
}

fn diagnose(f: &Field, symbol: Option<&ISymbol>, band: Band) -> Result<Diagnostics> {
    let (e1, e2) = match symbol {
        Some(sym) => (
            Some(energies::modified_energy_1(f, sym)),
            Some(energies::modified_energy_2_in(f, sym, band)?.value),
        ),
        None => (None, None),
    };
    Ok(Diagnostics {
        mass: energies::mass(f),
        energy: energies::energy_physical(f),
        e1,
        e2,
        max_abs: f.max_abs(),
    })
}

/// Integrates `f0` to `config.t_final`. The step is shrunk so that it divides `t_final`.
/// When `symbol` is given each snapshot also records `E^1` and `E^2`.
pub fn evolve(model: Model, config: &SolverConfig, f0: &Field, symbol: Option<&ISymbol>) -> Result<Trajectory> {
    config.validate()?;
    let solver = Solver::new(model, *f0.grid(), config.dealias_fraction)?;
    evolve_with(&solver, config, f0, symbol)
}

pub fn evolve_with(solver: &Solver, config: &SolverConfig, f0: &Field, symbol: Option<&ISymbol>) -> Result<Trajectory> {
    config.validate()?;
    solver.check(f0)?;
    let f0 = f0.restricted(solver.band());
    if matches!(solver.model(), Model::Gauged) && f0.l2_norm() >= (2.0 * std::f64::consts::PI).sqrt() {
        log::warn!("gauged run with ||w0||_2 = {} >= sqrt(2 pi)", f0.l2_norm());
    }
    let budget = solver.step_budget(&f0);
    if config.dt > budget {
        log::warn!("dt = {} exceeds the heuristic step budget {budget:.3e}", config.dt);
    }
    let steps = if config.t_final == 0.0 { 0 } else { (config.t_final / config.dt - 1e-9).ceil() as usize };
    let h = if steps == 0 { 0.0 } else { config.t_final / steps as f64 };

    let band = solver.band();
    let mut times = vec![0.0];
    let mut diagnostics = vec![diagnose(&f0, symbol, band)?];
    let mut snapshots = vec![f0.clone()];
    let mut c = f0.into_coeffs();
    for n in 1..=steps {
        c = solver.step_coeffs(&c, h);
        let t = n as f64 * h;
        if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { time: t });
        }
        if n % config.sample_every == 0 || n == steps {
            let f = Field::from_coeffs(solver.grid, c.clone()).map_err(|_| Error::NonFinite { time: t })?;
            diagnostics.push(diagnose(&f, symbol, band)?);
            snapshots.push(f);
            times.push(t);
        }
    }
    Ok(Trajectory { times, snapshots, diagnostics, band })
}
