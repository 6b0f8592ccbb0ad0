//! The gauge map `G f = exp(-i F) f` and its inverse, with `F(x)` the running integral
//! of `|f|^2` from the left edge of the grid.
//!
//! On the torus the integral from minus infinity is replaced by the integral from the left
//! edge, which is only faithful when the data is negligible near the boundary. Every
//! application therefore comes with a [`GaugeReport`].

use serde::{Deserialize, Serialize};

use crate::spectral::{Field, Grid, C64};

/// Default boundary-tail tolerance relative to `max |f|`.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GaugeDirection {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaugeReport {
    /// `sup |f|` over the outermost 5% of the grid at each end.
    pub boundary_tail: f64,
    /// Phase discontinuity across the periodic seam, equal to `||f||_2^2`.
    pub wraparound_phase_jump: f64,
    /// Whether `boundary_tail` met the requested tolerance.
    pub tail_ok: bool,
}

/// `F(x_j) = int_{x_0}^{x_j} |f|^2`, evaluated exactly for band-limited `f`.
///
/// `|f|^2` is formed on a grid of `2K` points, where it is resolved without aliasing, and
/// integrated term by term in Fourier space.
pub fn antiderivative_density(f: &Field) -> Vec<f64> {
    let g = f.grid();
    if f.is_zero() {
        return vec![0.0; g.modes()];
    }
    let fine = Grid::new(g.length(), 2 * g.modes()).expect("doubled grid is valid");
    let u = Field::from_mode_fn(fine, |k| if k >= g.k_min() && k <= g.k_max() { f.coeff(k) } else { C64::new(0.0, 0.0) });
    let rho = Field::from_values(fine, u.values().iter().map(|v| C64::new(v.norm_sqr(), 0.0)).collect())
        .expect("same grid");
    let mean = rho.coeff(0).re / g.length();
    let periodic = Field::from_mode_fn(fine, |k| if k == 0 { C64::new(0.0, 0.0) } else { rho.coeff(k) / C64::new(0.0, fine.xi(k)) });
    let p0 = periodic.values()[0].re;
    (0..g.modes())
        .map(|j| mean * (g.x(j) - g.x(0)) + periodic.values()[2 * j].re - p0)
        .collect()
}

pub fn boundary_tail(f: &Field) -> f64 {
    let n = f.values().len();
    let edge = ((0.05 * n as f64).ceil() as usize).max(1);
    f.values()[..edge]
        .iter()
        .chain(&f.values()[n - edge..])
        .map(|v| v.norm())
        .fold(0.0, f64::max)
}

pub fn report(f: &Field, tolerance: f64) -> GaugeReport {
    let tail = boundary_tail(f);
    let scale = f.max_abs();
    GaugeReport {
        boundary_tail: tail,
        wraparound_phase_jump: f.l2_norm().powi(2),
        tail_ok: tail <= tolerance * scale,
    }
}

/// Applies `G` or `G^{-1}` with the default tail tolerance.
pub fn gauge_apply(f: &Field, direction: GaugeDirection) -> (Field, GaugeReport) {
    gauge_apply_with(f, direction, DEFAULT_TAIL_TOLERANCE)
}

pub fn gauge_apply_with(f: &Field, direction: GaugeDirection, tolerance: f64) -> (Field, GaugeReport) {
    let rep = report(f, tolerance);
    if !rep.tail_ok {
        log::warn!(
            "gauge: boundary tail {:e} exceeds {:e} x max|f|; the map is not faithful to the line",
            rep.boundary_tail,
            tolerance
        );
    }
    let sign = match direction {
        GaugeDirection::Forward => -1.0,
        GaugeDirection::Inverse => 1.0,
    };
    let phase = antiderivative_density(f);
    let values = f
        .values()
        .iter()
        .zip(&phase)
        .map(|(v, p)| v * C64::from_polar(1.0, sign * p))
        .collect();
    let out = Field::from_values(*f.grid(), values).expect("same grid");
    (out, rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bump(grid: Grid) -> Field {
        Field::from_fn(grid, |x| C64::new((-x * x / 2.0).exp(), 0.3 * (-x * x / 2.0).exp() * x))
    }

    #[test]
    fn zero_field() {
        let g = Grid::new(20.0, 64).unwrap();
        let z = Field::zeros(g);
        assert!(antiderivative_density(&z).iter().all(|&v| v == 0.0));
        let (w, rep) = gauge_apply(&z, GaugeDirection::Forward);
        assert!(w.is_zero());
        assert_eq!(rep.wraparound_phase_jump, 0.0);
    }

    #[test]
    fn constant_density_gives_ramp() {
        // |f|^2 = 4 on the grid samples
        let g = Grid::new(10.0, 32).unwrap();
        let f = Field::from_fn(g, |x| C64::new(0.0, 2.0 * PI * x / 10.0).exp() * 2.0);
        let dens = antiderivative_density(&f);
        for (j, d) in dens.iter().enumerate() {
            assert!((d - 4.0 * (g.x(j) - g.x(0))).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_total_matches_quadrature() {
        let g = Grid::new(30.0, 256).unwrap();
        let f = bump(g);
        let fine = Grid::new(30.0, 1024).unwrap();
        // oracle: trapezoid for |f|^2 on a grid four times finer
        let dens = |x: f64| (-x * x).exp() * (1.0 + 0.09 * x * x);
        let oracle: f64 = fine.xs().iter().map(|&x| dens(x)).sum::<f64>() * fine.dx();
        let total = *antiderivative_density(&f).last().unwrap();
        assert!((total - oracle).abs() < 1e-8);
        assert!((total - f.l2_norm().powi(2)).abs() < 1e-8);
        let d = antiderivative_density(&f);
        assert!(d.windows(2).all(|w| w[1] >= w[0] - 1e-14));
    }

    #[test]
    fn modulus_and_round_trip() {
        let g = Grid::new(30.0, 256).unwrap();
        let f = bump(g);
        let (w, rep) = gauge_apply(&f, GaugeDirection::Forward);
        assert!(rep.tail_ok);
        for (a, b) in w.values().iter().zip(f.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
        assert!((w.l2_norm() - f.l2_norm()).abs() < 1e-12 * f.l2_norm());
        let (back, _) = gauge_apply(&w, GaugeDirection::Inverse);
        assert!(back.relative_distance(&f) < 1e-10);
    }

    #[test]
    fn wide_data_is_flagged() {
        let g = Grid::new(6.0, 64).unwrap();
        let f = bump(g);
        let (_, rep) = gauge_apply(&f, GaugeDirection::Forward);
        assert!(!rep.tail_ok);
        assert!(rep.boundary_tail > 0.0);
    }
}
