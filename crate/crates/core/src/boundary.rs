//! Outer-boundary closure: analytic incident waves, convolutional PML
//! profiles and memory variables, and the total-field/scattered-field split.
//!
//! The non-PML box carries the total field and the PML collar carries the
//! scattered field (total minus incident). Because the incident wave is
//! known analytically everywhere, crossing the split is a pointwise
//! add/subtract of [`IncidentWave::eval`] on the stencil reads that straddle
//! it.

use crate::emcore::EMState;
use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField};
use crate::levelset::{IndexBox, LayerMask};

/// Which side of the front a causal plane wave occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// `chi(t - x)`: the wave fills `x < t`, front moving right from `x = 0`.
    Causal,
    /// `chi(x - t)`: the wave fills `x > t`.
    Literal,
    /// No window; a pure periodic sine.
    Unwindowed,
}

/// Incident wave travelling along `+x` with `E_z = -H_y` and `H_x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IncidentWave {
    None,
    Gaussian { sigma: f64, gamma: f64 },
    PlaneSine { omega: f64, window: Window },
}

impl IncidentWave {
    pub fn validate(&self) -> Result<()> {
        match *self {
            IncidentWave::None => Ok(()),
            IncidentWave::Gaussian { sigma, gamma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::param("wave.sigma", format!("must be > 0, got {sigma}")));
                }
                if !gamma.is_finite() {
                    return Err(Error::param("wave.gamma", "must be finite"));
                }
                Ok(())
            }
            IncidentWave::PlaneSine { omega, .. } => {
                if !(omega > 0.0 && omega.is_finite()) {
                    return Err(Error::param("wave.omega", format!("must be > 0, got {omega}")));
                }
                Ok(())
            }
        }
    }

    /// `(H_x, H_y, E_z)` at `(x, y)` and time `t`.
    #[inline]
    pub fn eval(&self, x: f64, _y: f64, t: f64) -> (f64, f64, f64) {
        let ez = match *self {
            IncidentWave::None => return (0.0, 0.0, 0.0),
            IncidentWave::Gaussian { sigma, gamma } => {
                let s = (x - gamma - t) / sigma;
                s / sigma * (-s * s).exp()
            }
            IncidentWave::PlaneSine { omega, window } => {
                let on = match window {
                    Window::Causal => t - x > 0.0,
                    Window::Literal => x - t > 0.0,
                    Window::Unwindowed => true,
                };
                if on {
                    (omega * (x - t)).sin()
                } else {
                    0.0
                }
            }
        };
        (0.0, -ez, ez)
    }

    pub fn is_none(&self) -> bool {
        matches!(self, IncidentWave::None)
    }
}

pub fn incident_eval(wave: &IncidentWave, x: f64, y: f64, t: f64) -> (f64, f64, f64) {
    wave.eval(x, y, t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlParams {
    /// Collar thickness in cells.
    pub thickness: usize,
    /// Polynomial grading order.
    pub order: f64,
    /// Target normal-incidence reflection coefficient.
    pub reflection: f64,
}

impl Default for PmlParams {
    fn default() -> Self {
        PmlParams {
            thickness: 10,
            order: 3.0,
            reflection: 1e-6,
        }
    }
}

impl PmlParams {
    pub fn validate(&self) -> Result<()> {
        if self.thickness < 5 {
            return Err(Error::param("pml.thickness", format!("must be >= 5, got {}", self.thickness)));
        }
        if !(self.order >= 2.0 && self.order.is_finite()) {
            return Err(Error::param("pml.order", format!("must be >= 2, got {}", self.order)));
        }
        if !(self.reflection > 0.0 && self.reflection < 1.0) {
            return Err(Error::param(
                "pml.reflection",
                format!("must lie in (0, 1), got {}", self.reflection),
            ));
        }
        Ok(())
    }

    /// `sigma_max = -(m + 1) ln(R0) / (2 delta)` for unit impedance.
    pub fn sigma_max(&self, spacing: f64) -> f64 {
        let delta = self.thickness as f64 * spacing;
        -(self.order + 1.0) * self.reflection.ln() / (2.0 * delta)
    }
}

/// Polynomially graded damping profiles. `interior` is the non-PML box; the
/// depth of a node is its distance past the box edge.
pub fn pml_profiles(params: &PmlParams, grid: &Grid2D, interior: &IndexBox) -> Result<(ScalarField, ScalarField)> {
    let l = params.thickness;
    if interior.i_lo < l || interior.j_lo < l || interior.i_hi + l >= grid.nx || interior.j_hi + l >= grid.ny {
        return Err(Error::Grid(format!(
            "a {l}-cell PML does not fit around the interior box {interior:?}"
        )));
    }
    let delta = l as f64;
    let smax_x = params.sigma_max(grid.dx);
    let smax_y = params.sigma_max(grid.dy);
    let depth = |k: usize, lo: usize, hi: usize| -> f64 {
        if k < lo {
            (lo - k) as f64
        } else if k > hi {
            (k - hi) as f64
        } else {
            0.0
        }
    };
    let mut sx = ScalarField::zeros(*grid);
    let mut sy = ScalarField::zeros(*grid);
    for j in 0..grid.ny {
        let dy = depth(j, interior.j_lo, interior.j_hi);
        for i in 0..grid.nx {
            let dx = depth(i, interior.i_lo, interior.i_hi);
            sx.set(i, j, smax_x * (dx / delta).powf(params.order));
            sy.set(i, j, smax_y * (dy / delta).powf(params.order));
        }
    }
    Ok((sx, sy))
}

/// Sweep direction of the underlying scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// Recursive-convolution memory for the four spatial derivatives the TMz
/// update uses, stored only for PML nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PmlMemory {
    /// `d(H_y)/dx` in the `E_z` equation.
    pub hy_x: Vec<f64>,
    /// `d(H_x)/dy` in the `E_z` equation.
    pub hx_y: Vec<f64>,
    /// `d(E_z)/dy` in the `H_x` equation.
    pub ez_y: Vec<f64>,
    /// `d(E_z)/dx` in the `H_y` equation.
    pub ez_x: Vec<f64>,
}

impl PmlMemory {
    pub fn zeros(n: usize) -> Self {
        PmlMemory {
            hy_x: vec![0.0; n],
            hx_y: vec![0.0; n],
            ez_y: vec![0.0; n],
            ez_x: vec![0.0; n],
        }
    }

    pub fn reset(&mut self) {
        for v in [&mut self.hy_x, &mut self.hx_y, &mut self.ez_y, &mut self.ez_x] {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    pub fn max_abs(&self) -> f64 {
        [&self.hy_x, &self.hx_y, &self.ez_y, &self.ez_x]
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Per-PML-node recursion coefficients `b = exp(-sigma dt)`, `a = b - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PmlLayer {
    /// Grid index of every PML node that the scheme updates.
    pub nodes: Vec<usize>,
    pub bx: Vec<f64>,
    pub by: Vec<f64>,
    pub ax: Vec<f64>,
    pub ay: Vec<f64>,
    /// Committed memory of the forward sweeps.
    pub forward: PmlMemory,
}

impl PmlLayer {
    /// Builds the coefficients for the given profiles. Outer-ring nodes are
    /// excluded; they hold a zero scattered field.
    pub fn new(sigma_x: &ScalarField, sigma_y: &ScalarField, mask: &LayerMask, dt: f64) -> Self {
        let g = *sigma_x.grid();
        let nodes: Vec<usize> = (0..g.len())
            .filter(|&k| {
                let (i, j) = g.ij(k);
                mask.pml_flags()[k] && !g.on_edge(i, j)
            })
            .collect();
        let coef = |s: f64| {
            let b = (-s * dt).exp();
            (b, b - 1.0)
        };
        let (bx, ax): (Vec<f64>, Vec<f64>) = nodes.iter().map(|&k| coef(sigma_x.values()[k])).unzip();
        let (by, ay): (Vec<f64>, Vec<f64>) = nodes.iter().map(|&k| coef(sigma_y.values()[k])).unzip();
        let forward = PmlMemory::zeros(nodes.len());
        PmlLayer {
            nodes,
            bx,
            by,
            ax,
            ay,
            forward,
        }
    }
}

/// Initial state: incident field on non-PML exterior nodes, zero inside the
/// PEC and zero scattered field in the PML.
pub fn tfsf_init(grid: &Grid2D, wave: &IncidentWave, mask: &LayerMask, time: f64) -> EMState {
    let mut s = EMState::zeros(*grid, time);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if mask.in_pml(i, j) || !mask.layer(i, j).is_exterior() {
                continue;
            }
            let (hx, hy, ez) = wave.eval(grid.x(i), grid.y(j), time);
            s.hx.set(i, j, hx);
            s.hy.set(i, j, hy);
            s.ez.set(i, j, ez);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_values() {
        let w = IncidentWave::Gaussian { sigma: 0.1, gamma: -0.1 };
        assert_eq!(w.eval(0.3, 0.5, 0.4), (0.0, 0.0, 0.0));
        let (hx, hy, ez) = w.eval(0.0, 0.5, 0.0);
        assert_eq!(hx, 0.0);
        assert_abs_diff_eq!(ez, 10.0 * (-1.0_f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(ez, 3.67879, epsilon = 1e-5);
        assert_abs_diff_eq!(hy, -ez, epsilon = 0.0);
    }

    #[test]
    fn plane_wave_values() {
        let w = IncidentWave::PlaneSine { omega: 2.0 * PI / 0.3, window: Window::Causal };
        let (_, hy, ez) = w.eval(0.325, 0.1, 0.4);
        assert_abs_diff_eq!(ez, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hy, 1.0, epsilon = 1e-12);
        // Ahead of the front.
        assert_eq!(w.eval(0.5, 0.1, 0.4).2, 0.0);
        let lit = IncidentWave::PlaneSine { omega: 2.0 * PI / 0.3, window: Window::Literal };
        assert_eq!(lit.eval(0.325, 0.1, 0.4).2, 0.0);
        assert!(lit.eval(0.5, 0.1, 0.4).2 != 0.0);
    }

    #[test]
    fn incident_satisfies_tmz_to_second_order() {
        let w = IncidentWave::Gaussian { sigma: 0.1, gamma: -0.1 };
        let residual = |h: f64| {
            let (x, t) = (0.23, 0.17);
            let k = 0.5 * h;
            let dt_ez = (w.eval(x, 0.0, t + k).2 - w.eval(x, 0.0, t - k).2) / (2.0 * k);
            let dx_hy = (w.eval(x + h, 0.0, t).1 - w.eval(x - h, 0.0, t).1) / (2.0 * h);
            (dt_ez - dx_hy).abs()
        };
        // Equal steps would cancel the leading terms exactly.
        let (r1, r2) = (residual(1e-2), residual(5e-3));
        assert!(r1 > 0.0);
        let order = (r1 / r2).log2();
        assert!((1.8..2.2).contains(&order), "order {order}");
    }

    #[test]
    fn profiles() {
        let g = Grid2D::covering(0.0, 1.0, 0.0, 1.0, 0.05, 10).unwrap();
        let interior = IndexBox { i_lo: 10, i_hi: 30, j_lo: 10, j_hi: 30 };
        let p = PmlParams::default();
        let (sx, sy) = pml_profiles(&p, &g, &interior).unwrap();
        let smax = p.sigma_max(0.05);
        assert_eq!(sx.at(10, 15), 0.0);
        assert_abs_diff_eq!(sx.at(0, 15), smax, epsilon = 1e-12);
        assert_abs_diff_eq!(sx.at(35, 15), smax / 8.0, epsilon = 1e-12);
        assert_eq!(sy.at(35, 15), 0.0);
        assert!(sx.at(0, 0) > 0.0 && sy.at(0, 0) > 0.0);
        let too_tight = IndexBox { i_lo: 5, ..interior };
        assert!(pml_profiles(&p, &g, &too_tight).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(PmlParams { thickness: 4, ..Default::default() }.validate().is_err());
        assert!(PmlParams { reflection: 1.0, ..Default::default() }.validate().is_err());
        assert!(PmlParams { order: 1.0, ..Default::default() }.validate().is_err());
        assert!(IncidentWave::Gaussian { sigma: 0.0, gamma: 0.0 }.validate().is_err());
        assert!(IncidentWave::PlaneSine { omega: -1.0, window: Window::Causal }.validate().is_err());
    }

    use crate::config::{Domain, SimConfig};
    use crate::emcore::{Closure, EMState, Scheme, Simulation};
    use crate::levelset::PecShape;

    fn free_space(domain: Domain, h: f64, thickness: usize, t: f64) -> Simulation {
        let cfg = SimConfig {
            domain,
            spacing: h,
            t_final: t,
            closure: Closure::Pml(PmlParams { thickness, ..PmlParams::default() }),
            ..SimConfig::default()
        };
        Simulation::from_config(&cfg).unwrap()
    }

    fn unit() -> Domain {
        Domain { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 }
    }

    fn pulse(sim: &Simulation) -> EMState {
        let g = *sim.grid();
        let mut s = EMState::zeros(g, 0.0);
        s.ez = ScalarField::from_fn(g, |x, y| {
            let r2 = (x - 0.5).powi(2) + (y - 0.5).powi(2);
            (-r2 / (0.05 * 0.05)).exp()
        });
        s
    }

    /// Largest deviation on the unit square from a run on a domain too large
    /// for the pulse to reach its boundary within `t`.
    fn reflection(thickness: usize, h: f64, t: f64) -> f64 {
        let mut small = free_space(unit(), h, thickness, t);
        let big_dom = Domain { x_min: -1.0, x_max: 2.0, y_min: -1.0, y_max: 2.0 };
        let mut big = free_space(big_dom, h, thickness, t);
        let steps = small.params().steps;
        let (mut a, mut b) = (pulse(&small), pulse(&big));
        let (gs, gb) = (*small.grid(), *big.grid());
        let ib = *small.interior();
        let mut worst: f64 = 0.0;
        let chunk = 4;
        let mut done = 0;
        while done < steps {
            let n = chunk.min(steps - done);
            a = small.advance(a, n, Scheme::Bfecc).unwrap();
            b = big.advance(b, n, Scheme::Bfecc).unwrap();
            done += n;
            for j in ib.j_lo..=ib.j_hi {
                for i in ib.i_lo..=ib.i_hi {
                    let (x, y) = gs.point(i, j);
                    let (p, q) = gb.node_at(x, y, 1e-9 * h).expect("aligned grids");
                    worst = worst.max((a.ez.at(i, j) - b.ez.at(p, q)).abs());
                }
            }
        }
        worst
    }

    #[test]
    fn zero_damping_matches_plain_scheme() {
        let h = 1.0 / 20.0;
        let mut pml = free_space(unit(), h, 6, 0.1);
        let g = *pml.grid();
        let zero = ScalarField::zeros(g);
        pml.override_pml_profiles(&zero, &zero);
        let params = *pml.params();
        let mut plain = Simulation::assemble(
            g,
            IndexBox::whole(&g),
            &PecShape::None,
            IncidentWave::None,
            Closure::Periodic,
            params,
            crate::extension::ExtensionParams::default(),
        )
        .unwrap();
        let mut s = EMState::zeros(g, 0.0);
        s.ez = ScalarField::from_fn(g, |x, y| (4.0 * x).sin() * (3.0 * y).cos());
        s.hx = ScalarField::from_fn(g, |x, y| x * y - 0.3);
        s.hy = ScalarField::from_fn(g, |x, y| (x + 2.0 * y).exp() * 0.1);
        let a = pml.theta_forward(&s).unwrap();
        let b = plain.theta_forward(&s).unwrap();
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                for (fa, fb) in [(&a.ez, &b.ez), (&a.hx, &b.hx), (&a.hy, &b.hy)] {
                    assert!((fa.at(i, j) - fb.at(i, j)).abs() < 1e-14, "({i},{j})");
                }
            }
        }
    }

    #[test]
    fn outgoing_pulse_is_absorbed() {
        let h = 1.0 / 80.0;
        let r10 = reflection(10, h, 1.2);
        let r20 = reflection(20, h, 1.2);
        assert!(r10 < 1e-3, "{r10}");
        assert!(r10 / r20 >= 10.0, "{r10} {r20}");
    }

    #[test]
    fn scattered_field_stays_bounded() {
        let cfg = SimConfig {
            spacing: 1.0 / 40.0,
            t_final: 2.0,
            shape: PecShape::Disk { center: (0.5, 0.5), radius: 0.2 },
            wave: IncidentWave::Gaussian { sigma: 0.1, gamma: -0.1 },
            ..SimConfig::default()
        };
        let mut sim = Simulation::from_config(&cfg).unwrap();
        let peak = 10.0 * (-0.5f64).exp() / 2f64.sqrt();
        let mut s = sim.initial_state();
        for _ in 0..sim.params().steps / 4 {
            s = sim.advance(s, 4, Scheme::Bfecc).unwrap();
            assert!(s.max_abs() < 2.0 * peak, "{}", s.max_abs());
        }
        // The pulse has left the box by t = 2; what remains in the collar is
        // the absorbed tail.
        let g = *sim.grid();
        let mask = &sim.bundle().mask;
        let tail = (0..g.len())
            .filter(|&k| mask.pml_flags()[k])
            .map(|k| s.ez.values()[k].abs())
            .fold(0.0, f64::max);
        assert!(tail < 0.05 * peak, "{tail}");
        assert!(sim.pml_memory().unwrap().max_abs().is_finite());
    }
}
