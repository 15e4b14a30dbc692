//! Error norms against a nested fine-grid reference, and the study drivers.
//!
//! All runs of a study are independent and execute on the rayon pool. Every
//! reduction walks nodes in row-major order so results are bitwise
//! reproducible regardless of thread count.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::config::{FieldName, SimConfig};
use crate::emcore::{EMState, Scheme, Simulation};
use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField};
use crate::levelset::IndexBox;

/// Exterior band `-width < φ < 0` where errors are measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollarSpec {
    pub width: f64,
}

impl Default for CollarSpec {
    fn default() -> Self {
        CollarSpec { width: 0.1 }
    }
}

/// Where errors are measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Collar(CollarSpec),
    /// Every exterior node of the non-PML region (free-space checks).
    Interior,
}

pub fn collar_mask(phi: &ScalarField, collar: CollarSpec) -> Result<Vec<bool>> {
    let w = collar.width;
    let mask: Vec<bool> = phi.values().iter().map(|&p| p < 0.0 && p > -w).collect();
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptyCollar(format!(
            "no node with -{w} < phi < 0 at spacing {}",
            phi.grid().dx
        )));
    }
    Ok(mask)
}

/// The nodes errors are taken over for `region` in `sim`.
pub fn region_mask(sim: &Simulation, region: Region) -> Result<Vec<bool>> {
    let phi = &sim.bundle().phi;
    match region {
        Region::Collar(c) => collar_mask(phi, c),
        Region::Interior => {
            let g = sim.grid();
            let b = sim.interior();
            Ok((0..g.len())
                .map(|k| {
                    let (i, j) = g.ij(k);
                    b.contains(i, j) && phi.values()[k] < 0.0
                })
                .collect())
        }
    }
}

fn check_shapes(u: &ScalarField, v: &ScalarField, mask: &[bool]) {
    assert_eq!(u.grid(), v.grid(), "fields live on different grids");
    assert_eq!(mask.len(), u.grid().len(), "mask does not match the grid");
}

/// `ΔxΔy · Σ_mask |u - v|`.
pub fn l1_collar_error(u: &ScalarField, u_ref: &ScalarField, mask: &[bool]) -> f64 {
    check_shapes(u, u_ref, mask);
    let g = u.grid();
    let mut sum = 0.0;
    for ((a, b), &m) in u.values().iter().zip(u_ref.values()).zip(mask) {
        if m {
            sum += (a - b).abs();
        }
    }
    g.dx * g.dy * sum
}

pub fn linf_collar_error(u: &ScalarField, u_ref: &ScalarField, mask: &[bool]) -> f64 {
    check_shapes(u, u_ref, mask);
    u.values()
        .iter()
        .zip(u_ref.values())
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold(0.0, |acc, ((a, b), _)| acc.max((a - b).abs()))
}

/// `ΔxΔy · Σ_mask |u|` and `max_mask |u|`.
pub fn collar_norms(u: &ScalarField, mask: &[bool]) -> (f64, f64) {
    let zero = ScalarField::zeros(*u.grid());
    (l1_collar_error(u, &zero, mask), linf_collar_error(u, &zero, mask))
}

fn integer_ratio(a: f64, b: f64, what: &str) -> Result<usize> {
    let r = a / b;
    let n = r.round();
    if n < 1.0 || (r - n).abs() > 1e-6 {
        return Err(Error::Misaligned(format!("{what}: ratio {r} is not a positive integer")));
    }
    Ok(n as usize)
}

fn integer_offset(a: f64, b: f64, h: f64, what: &str) -> Result<usize> {
    let r = (a - b) / h;
    let n = r.round();
    if n < 0.0 || (r - n).abs() > 1e-6 {
        return Err(Error::Misaligned(format!("{what}: origin offset {r} cells is not a whole node count")));
    }
    Ok(n as usize)
}

/// Copies the fine values at nodes coinciding with `coarse` nodes.
pub fn restrict(fine: &ScalarField, coarse: &Grid2D) -> Result<ScalarField> {
    restrict_within(fine, coarse, &IndexBox::whole(coarse))
}

/// [`restrict`] limited to the coarse nodes in `window`; the rest are zero.
/// Lets grids whose padding differs be compared on their common region.
pub fn restrict_within(fine: &ScalarField, coarse: &Grid2D, window: &IndexBox) -> Result<ScalarField> {
    let f = fine.grid();
    let rx = integer_ratio(coarse.dx, f.dx, "x spacing")?;
    let ry = integer_ratio(coarse.dy, f.dy, "y spacing")?;
    let ox = integer_offset(coarse.x(window.i_lo), f.x0, f.dx, "x origin")?;
    let oy = integer_offset(coarse.y(window.j_lo), f.y0, f.dy, "y origin")?;
    if ox + rx * (window.i_hi - window.i_lo) >= f.nx || oy + ry * (window.j_hi - window.j_lo) >= f.ny {
        return Err(Error::Misaligned("coarse grid extends past the fine grid".into()));
    }
    let mut out = ScalarField::zeros(*coarse);
    for j in window.j_lo..=window.j_hi {
        for i in window.i_lo..=window.i_hi {
            out.set(i, j, fine.at(ox + rx * (i - window.i_lo), oy + ry * (j - window.j_lo)));
        }
    }
    Ok(out)
}

/// `log2(coarse / fine)`, or `None` when either error is non-positive or
/// the error grows under refinement.
pub fn observed_order(e_coarse: f64, e_fine: f64) -> Option<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0) || e_fine > e_coarse {
        return None;
    }
    Some((e_coarse / e_fine).log2())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldError {
    pub l1: f64,
    pub linf: f64,
    pub nodes: usize,
    /// Against the previous (coarser) row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub resolution: f64,
    /// Indexed like [`FieldName::ALL`].
    pub fields: [FieldError; 3],
}

impl ErrorReport {
    pub fn field(&self, f: FieldName) -> &FieldError {
        &self.fields[f as usize]
    }
}

fn field_of(s: &EMState, f: FieldName) -> &ScalarField {
    match f {
        FieldName::Ez => &s.ez,
        FieldName::Hx => &s.hx,
        FieldName::Hy => &s.hy,
    }
}

/// Everything a convergence, CFL or long-time study needs.
#[derive(Debug, Clone)]
pub struct StudyPlan {
    pub base: SimConfig,
    pub resolutions: Vec<f64>,
    pub reference: f64,
    pub region: Region,
}

impl StudyPlan {
    pub fn from_config(cfg: &SimConfig) -> Self {
        StudyPlan {
            base: cfg.clone(),
            resolutions: cfg.study.resolutions.clone(),
            reference: cfg.study.reference,
            region: if cfg.shape.is_none() {
                Region::Interior
            } else {
                Region::Collar(CollarSpec { width: cfg.study.collar })
            },
        }
    }

    pub fn at(&self, spacing: f64, cfl: f64) -> SimConfig {
        SimConfig {
            spacing,
            cfl,
            ..self.base.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolutions.is_empty() {
            return Err(Error::param("study.resolutions", "need at least one resolution"));
        }
        for &h in &self.resolutions {
            integer_ratio(h, self.reference, "study.resolutions")?;
        }
        if let Region::Collar(c) = self.region {
            if !(c.width > 0.0) {
                return Err(Error::param("study.collar", "width must be > 0"));
            }
            if let Some(&h) = self.resolutions.iter().find(|&&h| c.width < 2.0 * h * (1.0 - 1e-9)) {
                return Err(Error::param(
                    "study.collar",
                    format!("width {} must be at least twice the spacing {h}", c.width),
                ));
            }
        }
        Ok(())
    }
}

/// Runs `cfg` with BFECC and returns the simulation (for its geometry) and
/// the final state.
pub fn run_case(cfg: &SimConfig) -> Result<(Simulation, EMState)> {
    let mut sim = Simulation::from_config(cfg)?;
    let state = sim.run(Scheme::Bfecc)?;
    Ok((sim, state))
}

fn compare(sim: &Simulation, state: &EMState, reference: &EMState, region: Region) -> Result<[FieldError; 3]> {
    if (state.time - reference.time).abs() > 1e-9 * (1.0 + reference.time.abs()) {
        return Err(Error::Misaligned(format!(
            "final times differ: {} vs reference {}",
            state.time, reference.time
        )));
    }
    let mask = region_mask(sim, region)?;
    let nodes = mask.iter().filter(|&&m| m).count();
    let mut out = [FieldError { l1: 0.0, linf: 0.0, nodes, order: None }; 3];
    for f in FieldName::ALL {
        let r = restrict_within(field_of(reference, f), sim.grid(), sim.interior())?;
        let u = field_of(state, f);
        out[f as usize].l1 = l1_collar_error(u, &r, &mask);
        out[f as usize].linf = linf_collar_error(u, &r, &mask);
    }
    Ok(out)
}

fn run_all(cfgs: &[SimConfig]) -> Result<Vec<(Simulation, EMState)>> {
    cfgs.par_iter().map(run_case).collect()
}

/// Reference run plus one run per resolution; per-field collar errors with
/// orders against the previous row.
pub fn convergence_study(plan: &StudyPlan) -> Result<Vec<ErrorReport>> {
    plan.validate()?;
    let (_, reference) = run_case(&plan.at(plan.reference, plan.base.cfl))?;
    convergence_against(plan, &reference)
}

/// [`convergence_study`] with an already computed reference state.
pub fn convergence_against(plan: &StudyPlan, reference: &EMState) -> Result<Vec<ErrorReport>> {
    plan.validate()?;
    let cfl = plan.base.cfl;
    let cfgs: Vec<SimConfig> = plan.resolutions.iter().map(|&h| plan.at(h, cfl)).collect();
    let runs = run_all(&cfgs)?;
    let mut reports: Vec<ErrorReport> = Vec::with_capacity(plan.resolutions.len());
    for (&h, (sim, state)) in plan.resolutions.iter().zip(&runs) {
        let mut fields = compare(sim, state, reference, plan.region)?;
        if let Some(prev) = reports.last() {
            for (f, p) in fields.iter_mut().zip(&prev.fields) {
                f.order = observed_order(p.l1, f.l1);
            }
        }
        reports.push(ErrorReport { resolution: h, fields });
    }
    Ok(reports)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflRow {
    pub cfl: f64,
    pub rel_l1: f64,
    pub rel_linf: f64,
}

/// Ez norms over the collar at the base spacing for each CFL, relative to
/// the reference resolution at `reference_cfl`.
pub fn cfl_study(plan: &StudyPlan, cfl_list: &[f64], reference_cfl: f64) -> Result<Vec<CflRow>> {
    integer_ratio(plan.base.spacing, plan.reference, "grid.resolution vs study.reference")?;
    let (_, reference) = run_case(&plan.at(plan.reference, reference_cfl))?;
    cfl_against(plan, cfl_list, &reference)
}

/// [`cfl_study`] with an already computed reference state.
pub fn cfl_against(plan: &StudyPlan, cfl_list: &[f64], reference: &EMState) -> Result<Vec<CflRow>> {
    let h = plan.base.spacing;
    integer_ratio(h, plan.reference, "grid.resolution vs study.reference")?;
    let cfgs: Vec<SimConfig> = cfl_list.iter().map(|&c| plan.at(h, c)).collect();
    let runs = run_all(&cfgs)?;
    cfl_list
        .iter()
        .zip(&runs)
        .map(|(&cfl, (sim, state))| {
            if (state.time - reference.time).abs() > 1e-9 * (1.0 + reference.time.abs()) {
                return Err(Error::Misaligned(format!(
                    "final times differ: {} vs reference {}",
                    state.time, reference.time
                )));
            }
            let mask = region_mask(sim, plan.region)?;
            let r = restrict_within(&reference.ez, sim.grid(), sim.interior())?;
            let (l1, linf) = collar_norms(&state.ez, &mask);
            let (r1, rinf) = collar_norms(&r, &mask);
            Ok(CflRow {
                cfl,
                rel_l1: l1 / r1,
                rel_linf: linf / rinf,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongtimeRow {
    pub t: f64,
    pub linf: f64,
}

/// Collar l∞ of Ez at each terminal time. A single run with checkpoints is
/// used when every time is a whole number of steps; otherwise one run per
/// time.
pub fn longtime_study(plan: &StudyPlan, t_list: &[f64]) -> Result<Vec<LongtimeRow>> {
    if t_list.is_empty() {
        return Ok(Vec::new());
    }
    let t_max = t_list.iter().cloned().fold(0.0, f64::max);
    let cfg = SimConfig {
        t_final: t_max,
        ..plan.base.clone()
    };
    let mut sim = Simulation::from_config(&cfg)?;
    let dt = sim.params().dt;
    let steps: Vec<Option<usize>> = t_list
        .iter()
        .map(|&t| {
            let n = (t / dt).round();
            ((t / dt - n).abs() < 1e-6).then_some(n as usize)
        })
        .collect();
    let ascending = t_list.windows(2).all(|w| w[0] <= w[1]);
    let states: Vec<EMState> = if ascending && steps.iter().all(Option::is_some) {
        let s: Vec<usize> = steps.into_iter().flatten().collect();
        sim.run_checkpoints(&s)?
    } else {
        let cfgs: Vec<SimConfig> = t_list
            .iter()
            .map(|&t| SimConfig {
                t_final: t,
                ..plan.base.clone()
            })
            .collect();
        run_all(&cfgs)?.into_iter().map(|(_, s)| s).collect()
    };
    let mask = region_mask(&sim, plan.region)?;
    Ok(t_list
        .iter()
        .zip(&states)
        .map(|(&t, s)| LongtimeRow {
            t,
            linf: collar_norms(&s.ez, &mask).1,
        })
        .collect())
}

fn order_text(o: Option<f64>, first: bool) -> String {
    match o {
        Some(v) => format!("{v:.2}"),
        None if first => "-".into(),
        None => "N.A".into(),
    }
}

fn spacing_text(h: f64) -> String {
    let n = 1.0 / h;
    if (n - n.round()).abs() < 1e-9 {
        format!("1/{}", n.round())
    } else {
        format!("{h}")
    }
}

/// Aligned text table, one block per field.
pub fn format_table(reports: &[ErrorReport]) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "{:<6} {:>10} {:>12} {:>7} {:>12} {:>7}", "field", "dx", "l1 error", "order", "linf error", "order");
    for f in FieldName::ALL {
        let mut prev: Option<f64> = None;
        for (n, r) in reports.iter().enumerate() {
            let e = r.field(f);
            let linf_order = prev.and_then(|p| observed_order(p, e.linf));
            prev = Some(e.linf);
            let _ = writeln!(
                o,
                "{:<6} {:>10} {:>12.3e} {:>7} {:>12.3e} {:>7}",
                f.as_str(),
                spacing_text(r.resolution),
                e.l1,
                order_text(e.order, n == 0),
                e.linf,
                order_text(linf_order, n == 0)
            );
        }
    }
    o
}

/// Comma-separated: resolution, field, l1, order, linf.
pub fn format_csv(reports: &[ErrorReport]) -> String {
    let mut o = String::from("resolution,field,l1,order,linf\n");
    for f in FieldName::ALL {
        for r in reports {
            let e = r.field(f);
            let order = e.order.map(|v| format!("{v:?}")).unwrap_or_default();
            let _ = writeln!(o, "{:?},{},{:?},{order},{:?}", r.resolution, f.as_str(), e.l1, e.linf);
        }
    }
    o
}

pub fn format_cfl_table(rows: &[CflRow]) -> (String, String) {
    let mut text = format!("{:>6} {:>10} {:>10}\n", "cfl", "rel l1", "rel linf");
    let mut csv = String::from("cfl,rel_l1,rel_linf\n");
    for r in rows {
        let _ = writeln!(text, "{:>6} {:>10.4} {:>10.4}", r.cfl, r.rel_l1, r.rel_linf);
        let _ = writeln!(csv, "{:?},{:?},{:?}", r.cfl, r.rel_l1, r.rel_linf);
    }
    (text, csv)
}

pub fn format_longtime_table(rows: &[LongtimeRow]) -> (String, String) {
    let mut text = format!("{:>6} {:>14} {:>10}\n", "T", "linf Ez", "change");
    let mut csv = String::from("t,linf\n");
    let first = rows.first().map(|r| r.linf);
    for r in rows {
        let change = first.map(|f| (r.linf - f) / f * 100.0).unwrap_or(0.0);
        let _ = writeln!(text, "{:>6} {:>14.8} {:>9.3}%", r.t, r.linf, change);
        let _ = writeln!(csv, "{:?},{:?}", r.t, r.linf);
    }
    (text, csv)
}
