//! The theta-blended forward/backward schemes for the TMz system, the BFECC
//! wrapper around them, and the time loop.
//!
//! With `eps = mu = 1` the system is
//!
//! ```text
//! dHx/dt = -dEz/dy,   dHy/dt = dEz/dx,   dEz/dt = dHy/dx - dHx/dy
//! ```
//!
//! and one forward sweep is `u' = u + theta*(avg4(u) - u) + dt * D(u)` with
//! centred differences `D`; at `theta = 4/5` the first part is the 5-point
//! mean. The backward sweep flips the sign of `D`.

use rayon::prelude::*;

use crate::boundary::{pml_profiles, tfsf_init, Direction, IncidentWave, PmlLayer, PmlMemory, PmlParams};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::extension::{ExtensionParams, GhostPlan};
use crate::grid::{Grid2D, ScalarField};
use crate::levelset::{IndexBox, LevelSetBundle, PecShape};

/// `(H_x, H_y, E_z)` at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct EMState {
    pub hx: ScalarField,
    pub hy: ScalarField,
    pub ez: ScalarField,
    pub time: f64,
}

impl EMState {
    pub fn zeros(grid: Grid2D, time: f64) -> Self {
        EMState {
            hx: ScalarField::zeros(grid),
            hy: ScalarField::zeros(grid),
            ez: ScalarField::zeros(grid),
            time,
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        self.ez.grid()
    }

    pub fn fields(&self) -> [(&'static str, &ScalarField); 3] {
        [("Ez", &self.ez), ("Hx", &self.hx), ("Hy", &self.hy)]
    }

    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.ez
            .first_non_finite()
            .or_else(|| self.hx.first_non_finite())
            .or_else(|| self.hy.first_non_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.ez.max_abs().max(self.hx.max_abs()).max(self.hy.max_abs())
    }
}

/// Time-stepping parameters. `dt` is chosen so that `steps * dt == t_final`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub theta: f64,
    pub dt: f64,
    pub cfl: f64,
    pub t_final: f64,
    pub steps: usize,
}

impl SolverParams {
    /// `N = round(T / (cfl*dx))`, then `dt = T/N`. With `T = 0` no steps are
    /// taken and `dt` keeps its nominal value.
    pub fn from_cfl(theta: f64, cfl: f64, t_final: f64, spacing: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::param("solver.theta", format!("must lie in [0, 1], got {theta}")));
        }
        if !(cfl > 0.0 && cfl.is_finite()) {
            return Err(Error::param("solver.cfl", format!("CFL must be > 0, got {cfl}")));
        }
        if !(t_final >= 0.0 && t_final.is_finite()) {
            return Err(Error::param("solver.t_final", format!("must be >= 0, got {t_final}")));
        }
        let nominal = cfl * spacing;
        let (steps, dt) = if t_final == 0.0 {
            (0, nominal)
        } else {
            let n = ((t_final / nominal).round() as usize).max(1);
            (n, t_final / n as f64)
        };
        Ok(SolverParams {
            theta,
            dt,
            cfl: dt / spacing,
            t_final,
            steps,
        })
    }
}

/// How the outermost nodes are closed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Closure {
    /// Wrap-around neighbours; the grid omits the duplicate right/top edge.
    Periodic,
    /// PML collar outside the domain, TF/SF split at its inner edge.
    Pml(PmlParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeKind {
    /// Not updated by the scheme (PEC interior, outer ring).
    Frozen,
    Plain,
    /// Total-field node with a PML neighbour.
    Interface,
    /// Scattered-field node inside the collar.
    Pml,
}

/// Which underlying march to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Bfecc,
    /// The first-order theta scheme alone.
    ForwardOnly,
}

/// A fully assembled problem: grid, geometry, closure and parameters.
#[derive(Debug, Clone)]
pub struct Simulation {
    grid: Grid2D,
    interior: IndexBox,
    bundle: LevelSetBundle,
    plan: GhostPlan,
    params: SolverParams,
    extension: ExtensionParams,
    wave: IncidentWave,
    closure: Closure,
    kinds: Vec<NodeKind>,
    pml: Option<PmlLayer>,
    step: usize,
}

impl Simulation {
    pub fn from_config(cfg: &SimConfig) -> Result<Self> {
        let d = &cfg.domain;
        let h = cfg.spacing;
        let (grid, interior) = match cfg.closure {
            Closure::Periodic => {
                let cx = crate::grid::cell_count(d.x_max - d.x_min, h)?;
                let cy = crate::grid::cell_count(d.y_max - d.y_min, h)?;
                let g = Grid2D::new(d.x_min, d.y_min, h, h, cx, cy)?;
                (g, IndexBox::whole(&g))
            }
            Closure::Pml(p) => {
                p.validate()?;
                let l = p.thickness;
                let g = Grid2D::covering(d.x_min, d.x_max, d.y_min, d.y_max, h, l)?;
                let b = IndexBox {
                    i_lo: l,
                    i_hi: g.nx - 1 - l,
                    j_lo: l,
                    j_hi: g.ny - 1 - l,
                };
                (g, b)
            }
        };
        let params = SolverParams::from_cfl(cfg.theta, cfg.cfl, cfg.t_final, h)?;
        Self::assemble(grid, interior, &cfg.shape, cfg.wave, cfg.closure, params, cfg.extension)
    }

    /// Lower-level constructor used by tests that need a custom grid.
    pub fn assemble(
        grid: Grid2D,
        interior: IndexBox,
        shape: &PecShape,
        wave: IncidentWave,
        closure: Closure,
        params: SolverParams,
        extension: ExtensionParams,
    ) -> Result<Self> {
        shape.validate()?;
        wave.validate()?;
        extension.validate()?;
        let (x_lo, x_hi) = (grid.x(interior.i_lo), grid.x(interior.i_hi));
        let (y_lo, y_hi) = (grid.y(interior.j_lo), grid.y(interior.j_hi));
        for (c, r) in shape.bounding_circles() {
            if c.0 - r <= x_lo || c.0 + r >= x_hi || c.1 - r <= y_lo || c.1 + r >= y_hi {
                return Err(Error::param(
                    "pec",
                    format!("obstacle at {c:?} with radius {r} is not strictly inside the non-PML region"),
                ));
            }
        }
        let pml_box = matches!(closure, Closure::Pml(_)).then_some(interior);
        let bundle = LevelSetBundle::from_shape(shape, &grid, pml_box)?;
        let plan = GhostPlan::new(&bundle)?;

        let mask = &bundle.mask;
        let periodic = matches!(closure, Closure::Periodic);
        let kinds = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.ij(k);
                if !periodic && grid.on_edge(i, j) {
                    return NodeKind::Frozen;
                }
                if mask.layers()[k].is_pec() {
                    return NodeKind::Frozen;
                }
                if mask.pml_flags()[k] {
                    return NodeKind::Pml;
                }
                let straddles = !periodic
                    && [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
                        .iter()
                        .any(|&(a, b)| mask.in_pml(a, b));
                if straddles {
                    NodeKind::Interface
                } else {
                    NodeKind::Plain
                }
            })
            .collect();

        let pml = match closure {
            Closure::Pml(p) => {
                let (sx, sy) = pml_profiles(&p, &grid, &interior)?;
                Some(PmlLayer::new(&sx, &sy, mask, params.dt))
            }
            Closure::Periodic => None,
        };

        Ok(Simulation {
            grid,
            interior,
            bundle,
            plan,
            params,
            extension,
            wave,
            closure,
            kinds,
            pml,
            step: 0,
        })
    }

    /// Replaces the damping profiles (tests of the plain-scheme limit).
    pub fn override_pml_profiles(&mut self, sigma_x: &ScalarField, sigma_y: &ScalarField) {
        if self.pml.is_some() {
            self.pml = Some(PmlLayer::new(sigma_x, sigma_y, &self.bundle.mask, self.params.dt));
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn interior(&self) -> &IndexBox {
        &self.interior
    }

    pub fn bundle(&self) -> &LevelSetBundle {
        &self.bundle
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn wave(&self) -> &IncidentWave {
        &self.wave
    }

    pub fn closure(&self) -> &Closure {
        &self.closure
    }

    pub fn pml_memory(&self) -> Option<&PmlMemory> {
        self.pml.as_ref().map(|p| &p.forward)
    }

    /// Incident field on the total-field region at `t = 0`.
    pub fn initial_state(&self) -> EMState {
        tfsf_init(&self.grid, &self.wave, &self.bundle.mask, 0.0)
    }

    pub fn ghosts(&self, state: &EMState) -> Result<EMState> {
        self.plan.apply(state, &self.bundle, &self.extension)
    }

    /// One forward sweep of the theta scheme. Ghost values must already be
    /// in place. Commits the PML memory.
    pub fn theta_forward(&mut self, state: &EMState) -> Result<EMState> {
        let mut mem = self.pml.as_ref().map(|p| p.forward.clone());
        let out = self.sweep(state, Direction::Forward, mem.as_mut())?;
        if let (Some(p), Some(m)) = (self.pml.as_mut(), mem) {
            p.forward = m;
        }
        Ok(out)
    }

    /// One backward sweep (time-reversed scheme), with fresh PML memory.
    pub fn theta_backward(&self, state: &EMState) -> Result<EMState> {
        let mut mem = self.pml.as_ref().map(|p| PmlMemory::zeros(p.nodes.len()));
        self.sweep(state, Direction::Backward, mem.as_mut())
    }

    /// Ghosts, forward, ghosts, backward, compensate, ghosts, final forward.
    pub fn bfecc_step(&mut self, state: &EMState) -> Result<EMState> {
        let (next, _) = self.bfecc_step_traced(state)?;
        Ok(next)
    }

    /// [`Simulation::bfecc_step`] that also returns the back-and-forth error
    /// `e = (U - U~)/2`.
    pub fn bfecc_step_traced(&mut self, state: &EMState) -> Result<(EMState, EMState)> {
        let u_n = self.ghosts(state)?;
        let mut trial = self.pml.as_ref().map(|p| p.forward.clone());
        let u_star = self.sweep(&u_n, Direction::Forward, trial.as_mut())?;
        let u_star = self.ghosts(&u_star)?;
        let mut back = self.pml.as_ref().map(|p| PmlMemory::zeros(p.nodes.len()));
        let u_back = self.sweep(&u_star, Direction::Backward, back.as_mut())?;

        let mut err = EMState::zeros(self.grid, u_n.time);
        let mut comp = u_n.clone();
        for (dst, (e, (a, b))) in [
            (&mut comp.ez, (&mut err.ez, (&u_n.ez, &u_back.ez))),
            (&mut comp.hx, (&mut err.hx, (&u_n.hx, &u_back.hx))),
            (&mut comp.hy, (&mut err.hy, (&u_n.hy, &u_back.hy))),
        ] {
            let kinds = &self.kinds;
            dst.values_mut()
                .par_iter_mut()
                .zip(e.values_mut().par_iter_mut())
                .enumerate()
                .for_each(|(k, (d, ek))| {
                    if kinds[k] != NodeKind::Frozen {
                        let v = 0.5 * (a.values()[k] - b.values()[k]);
                        *ek = v;
                        *d = a.values()[k] + v;
                    }
                });
        }
        let comp = self.ghosts(&comp)?;
        let next = self.theta_forward(&comp)?;
        self.step += 1;
        Ok((next, err))
    }

    /// Ghost pass then zero every PEC-interior node.
    pub fn finalize(&self, state: &EMState) -> Result<EMState> {
        let mut out = self.ghosts(state)?;
        self.plan.zero_interior(&mut out);
        Ok(out)
    }

    /// Advances `state` by `steps` steps of the chosen scheme.
    pub fn advance(&mut self, mut state: EMState, steps: usize, scheme: Scheme) -> Result<EMState> {
        for _ in 0..steps {
            state = match scheme {
                Scheme::Bfecc => self.bfecc_step(&state)?,
                Scheme::ForwardOnly => {
                    let g = self.ghosts(&state)?;
                    let next = self.theta_forward(&g)?;
                    self.step += 1;
                    next
                }
            };
        }
        Ok(state)
    }

    /// Initial condition, `N` steps, finalize.
    pub fn run(&mut self, scheme: Scheme) -> Result<EMState> {
        let s = self.initial_state();
        let s = self.advance(s, self.params.steps, scheme)?;
        self.finalize(&s)
    }

    /// Runs once and returns the finalized state after each requested step
    /// count (ascending).
    pub fn run_checkpoints(&mut self, checkpoints: &[usize]) -> Result<Vec<EMState>> {
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut state = self.initial_state();
        let mut done = 0;
        for &c in checkpoints {
            if c < done {
                return Err(Error::param("checkpoints", "must be ascending"));
            }
            state = self.advance(state, c - done, Scheme::Bfecc)?;
            done = c;
            out.push(self.finalize(&state)?);
        }
        Ok(out)
    }

    fn sweep(&self, state: &EMState, dir: Direction, memory: Option<&mut PmlMemory>) -> Result<EMState> {
        let g = self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let theta = self.params.theta;
        let s = dir.sign();
        let cx = s * self.params.dt / (2.0 * g.dx);
        let cy = s * self.params.dt / (2.0 * g.dy);
        let periodic = matches!(self.closure, Closure::Periodic);
        let (ez, hx, hy) = (state.ez.values(), state.hx.values(), state.hy.values());
        let pml_flags = self.bundle.mask.pml_flags();
        let time = state.time;
        let wave = &self.wave;

        let mut out = EMState::zeros(g, time + s * self.params.dt);
        let neighbours = |i: usize, j: usize| -> [usize; 4] {
            if periodic {
                let il = if i == 0 { nx - 1 } else { i - 1 };
                let ir = if i + 1 == nx { 0 } else { i + 1 };
                let jd = if j == 0 { ny - 1 } else { j - 1 };
                let ju = if j + 1 == ny { 0 } else { j + 1 };
                [j * nx + il, j * nx + ir, jd * nx + i, ju * nx + i]
            } else {
                let k = j * nx + i;
                [k - 1, k + 1, k - nx, k + nx]
            }
        };
        // Reads of a neighbour converted to the frame (total or scattered) of
        // the updating node.
        let converted = |k: usize, nb: [usize; 4]| -> [[f64; 5]; 3] {
            let own_pml = pml_flags[k];
            let mut vals = [[ez[k], 0.0, 0.0, 0.0, 0.0], [hx[k], 0.0, 0.0, 0.0, 0.0], [hy[k], 0.0, 0.0, 0.0, 0.0]];
            for (slot, &q) in nb.iter().enumerate() {
                let (mut e, mut a, mut b) = (ez[q], hx[q], hy[q]);
                if pml_flags[q] != own_pml {
                    let (qi, qj) = g.ij(q);
                    let (ihx, ihy, iez) = wave.eval(g.x(qi), g.y(qj), time);
                    let sgn = if own_pml { -1.0 } else { 1.0 };
                    e += sgn * iez;
                    a += sgn * ihx;
                    b += sgn * ihy;
                }
                vals[0][slot + 1] = e;
                vals[1][slot + 1] = a;
                vals[2][slot + 1] = b;
            }
            vals
        };
        let kinds = &self.kinds;

        out.ez
            .values_mut()
            .par_chunks_mut(nx)
            .zip(out.hx.values_mut().par_chunks_mut(nx))
            .zip(out.hy.values_mut().par_chunks_mut(nx))
            .enumerate()
            .for_each(|(j, ((oez, ohx), ohy))| {
                for i in 0..nx {
                    let k = j * nx + i;
                    match kinds[k] {
                        NodeKind::Frozen | NodeKind::Pml => {
                            oez[i] = ez[k];
                            ohx[i] = hx[k];
                            ohy[i] = hy[k];
                        }
                        NodeKind::Plain => {
                            let [l, r, d, u] = neighbours(i, j);
                            let (e, a, b) = theta_update(
                                theta,
                                cx,
                                cy,
                                [ez[k], ez[l], ez[r], ez[d], ez[u]],
                                [hx[k], hx[l], hx[r], hx[d], hx[u]],
                                [hy[k], hy[l], hy[r], hy[d], hy[u]],
                            );
                            oez[i] = e;
                            ohx[i] = a;
                            ohy[i] = b;
                        }
                        NodeKind::Interface => {
                            let [e5, a5, b5] = converted(k, neighbours(i, j));
                            let (e, a, b) = theta_update(theta, cx, cy, e5, a5, b5);
                            oez[i] = e;
                            ohx[i] = a;
                            ohy[i] = b;
                        }
                    }
                }
            });

        if let (Some(layer), Some(mem)) = (self.pml.as_ref(), memory) {
            let dt = s * self.params.dt;
            let (ihx, ihy) = (1.0 / (2.0 * g.dx), 1.0 / (2.0 * g.dy));
            let updates: Vec<[f64; 7]> = layer
                .nodes
                .par_iter()
                .enumerate()
                .map(|(p, &k)| {
                    let (i, j) = g.ij(k);
                    let [e5, a5, b5] = converted(k, neighbours(i, j));
                    let d_hy_x = (b5[2] - b5[1]) * ihx;
                    let d_hx_y = (a5[4] - a5[3]) * ihy;
                    let d_ez_y = (e5[4] - e5[3]) * ihy;
                    let d_ez_x = (e5[2] - e5[1]) * ihx;
                    let (bx, by, ax, ay) = (layer.bx[p], layer.by[p], layer.ax[p], layer.ay[p]);
                    let m_hy_x = bx * mem.hy_x[p] + ax * d_hy_x;
                    let m_hx_y = by * mem.hx_y[p] + ay * d_hx_y;
                    let m_ez_y = by * mem.ez_y[p] + ay * d_ez_y;
                    let m_ez_x = bx * mem.ez_x[p] + ax * d_ez_x;
                    let e = relax(theta, &e5) + dt * ((d_hy_x + m_hy_x) - (d_hx_y + m_hx_y));
                    let a = relax(theta, &a5) - dt * (d_ez_y + m_ez_y);
                    let b = relax(theta, &b5) + dt * (d_ez_x + m_ez_x);
                    [e, a, b, m_hy_x, m_hx_y, m_ez_y, m_ez_x]
                })
                .collect();
            for (p, (&k, v)) in layer.nodes.iter().zip(&updates).enumerate() {
                out.ez.values_mut()[k] = v[0];
                out.hx.values_mut()[k] = v[1];
                out.hy.values_mut()[k] = v[2];
                mem.hy_x[p] = v[3];
                mem.hx_y[p] = v[4];
                mem.ez_y[p] = v[5];
                mem.ez_x[p] = v[6];
            }
        }

        let finite = [&out.ez, &out.hx, &out.hy]
            .iter()
            .all(|f| f.values().par_iter().all(|v| v.is_finite()));
        if !finite {
            let (i, j) = out.first_non_finite().unwrap_or((0, 0));
            return Err(Error::Instability {
                sweep: match dir {
                    Direction::Forward => "forward",
                    Direction::Backward => "backward",
                },
                step: self.step,
                i,
                j,
            });
        }
        Ok(out)
    }
}

/// `c + theta * (avg4 - c)` for a `[c, l, r, d, u]` stencil. The pairing
/// `(l + r) + (d + u)` keeps the sum bitwise symmetric under reflection.
#[inline(always)]
fn relax(theta: f64, s: &[f64; 5]) -> f64 {
    let avg4 = 0.25 * ((s[1] + s[2]) + (s[3] + s[4]));
    s[0] + theta * (avg4 - s[0])
}

#[inline(always)]
fn theta_update(theta: f64, cx: f64, cy: f64, ez: [f64; 5], hx: [f64; 5], hy: [f64; 5]) -> (f64, f64, f64) {
    let e = relax(theta, &ez) + cx * (hy[2] - hy[1]) - cy * (hx[4] - hx[3]);
    let a = relax(theta, &hx) - cy * (ez[4] - ez[3]);
    let b = relax(theta, &hy) + cx * (ez[2] - ez[1]);
    (e, a, b)
}

/// Builds the problem described by `config` and returns its finalized
/// terminal state.
pub fn run(config: &SimConfig) -> Result<EMState> {
    Simulation::from_config(config)?.run(Scheme::Bfecc)
}
