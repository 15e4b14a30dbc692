//! Signed-distance representations of PEC obstacles, their normal and
//! tangent fields, and the per-node layer classification that drives ghost
//! construction.
//!
//! Sign convention: `phi > 0` inside the conductor and `phi < 0` outside, so
//! `n = grad(phi)/|grad(phi)|` points *into* the PEC. Nodes with `phi == 0`
//! count as inside. The PEC conditions `E x n = 0` and `H . n = 0` are
//! invariant under flipping `n`, so no correction is applied anywhere.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField, VectorField};

/// Value stored at every node when there is no obstacle at all.
pub const NO_PEC_DISTANCE: f64 = -1.0e6;

/// Guard on `|grad(phi)|` when normalising.
pub const NORMAL_GUARD: f64 = 1e-10;

/// Second-boundary nodes closer than this fraction of a cell to the interface
/// are demoted, keeping `u/phi` away from tiny denominators.
pub const SECOND_LAYER_DEMOTION: f64 = 0.1;

/// Half of the notch opening of a wedge (the notch spans a right angle).
const NOTCH_HALF_ANGLE: f64 = FRAC_PI_4;

/// Obstacle geometry.
#[derive(Debug, Clone, PartialEq)]
pub enum PecShape {
    None,
    Disk {
        center: (f64, f64),
        radius: f64,
    },
    /// A disk with a right-angle notch cut out around `bisector`, i.e. a
    /// 3/4-disk whose arc subtends 3*pi/2.
    Wedge {
        center: (f64, f64),
        radius: f64,
        bisector: f64,
    },
    Union(Vec<PecShape>),
}

impl PecShape {
    pub fn signed_distance(&self, p: (f64, f64)) -> f64 {
        match self {
            PecShape::None => NO_PEC_DISTANCE,
            PecShape::Disk { center, radius } => sdf_disk(*center, *radius, p),
            PecShape::Wedge {
                center,
                radius,
                bisector,
            } => sdf_wedge(*center, *radius, *bisector, p),
            PecShape::Union(members) => sdf_union(members, p),
        }
    }

    pub fn is_none(&self) -> bool {
        match self {
            PecShape::None => true,
            PecShape::Union(m) => m.iter().all(PecShape::is_none),
            _ => false,
        }
    }

    /// Circles enclosing each solid member, used for overlap and clearance
    /// checks.
    pub fn bounding_circles(&self) -> Vec<((f64, f64), f64)> {
        match self {
            PecShape::None => Vec::new(),
            PecShape::Disk { center, radius } | PecShape::Wedge { center, radius, .. } => {
                vec![(*center, *radius)]
            }
            PecShape::Union(m) => m.iter().flat_map(PecShape::bounding_circles).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PecShape::None => Ok(()),
            PecShape::Disk { center, radius } | PecShape::Wedge { center, radius, .. } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::param("pec.radius", format!("must be > 0, got {radius}")));
                }
                if !(center.0.is_finite() && center.1.is_finite()) {
                    return Err(Error::param("pec.center", "must be finite"));
                }
                if let PecShape::Wedge { bisector, .. } = self {
                    if !bisector.is_finite() {
                        return Err(Error::param("pec.bisector", "must be finite"));
                    }
                }
                Ok(())
            }
            PecShape::Union(members) => {
                if members.is_empty() {
                    return Err(Error::param("pec.shapes", "a union needs at least one member"));
                }
                for m in members {
                    m.validate()?;
                }
                let circles = self.bounding_circles();
                for (a, (ca, ra)) in circles.iter().enumerate() {
                    for (cb, rb) in &circles[a + 1..] {
                        let d = (ca.0 - cb.0).hypot(ca.1 - cb.1);
                        if d < ra + rb {
                            return Err(Error::param(
                                "pec.shapes",
                                format!("members centred at {ca:?} and {cb:?} overlap"),
                            ));
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

/// Exact signed distance to a disk, positive inside.
pub fn sdf_disk(center: (f64, f64), radius: f64, p: (f64, f64)) -> f64 {
    radius - (p.0 - center.0).hypot(p.1 - center.1)
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

fn segment_distance(rel: (f64, f64), dir: (f64, f64), len: f64) -> f64 {
    let t = (rel.0 * dir.0 + rel.1 * dir.1).clamp(0.0, len);
    (rel.0 - t * dir.0).hypot(rel.1 - t * dir.1)
}

/// Exact signed distance to a 3/4-disk whose right-angle notch is centred on
/// `bisector` (radians, measured from +x).
pub fn sdf_wedge(center: (f64, f64), radius: f64, bisector: f64, p: (f64, f64)) -> f64 {
    let rel = (p.0 - center.0, p.1 - center.1);
    let r = rel.0.hypot(rel.1);
    let offset = wrap_angle(rel.1.atan2(rel.0) - bisector);
    let in_notch = r > 0.0 && offset.abs() < NOTCH_HALF_ANGLE;

    let edges = [bisector - NOTCH_HALF_ANGLE, bisector + NOTCH_HALF_ANGLE].map(|a| (a.cos(), a.sin()));

    let to_arc = if in_notch {
        edges
            .iter()
            .map(|e| (rel.0 - radius * e.0).hypot(rel.1 - radius * e.1))
            .fold(f64::INFINITY, f64::min)
    } else {
        (r - radius).abs()
    };
    let to_edges = edges
        .iter()
        .map(|&e| segment_distance(rel, e, radius))
        .fold(f64::INFINITY, f64::min);
    let dist = to_arc.min(to_edges);

    if r < radius && !in_notch {
        dist
    } else {
        -dist
    }
}

/// Signed distance of a union of disjoint shapes: the maximum over members.
pub fn sdf_union(shapes: &[PecShape], p: (f64, f64)) -> f64 {
    shapes
        .iter()
        .map(|s| s.signed_distance(p))
        .fold(NO_PEC_DISTANCE, f64::max)
}

/// Node-wise exact signed distance. Values within `1e-10 * dx` of zero are
/// snapped to exactly zero so that boundary nodes classify identically under
/// mirror symmetry.
pub fn sample_sdf(shape: &PecShape, grid: &Grid2D) -> ScalarField {
    let snap = 1e-10 * grid.dx.min(grid.dy);
    ScalarField::from_fn(*grid, |x, y| {
        let d = shape.signed_distance((x, y));
        if d.abs() < snap {
            0.0
        } else {
            d
        }
    })
}

/// Pseudo-time relaxation of `phi_t = sgn(phi0) (1 - |grad(phi)|)` with a
/// first-order Godunov Hamiltonian, smoothed sign `phi0/sqrt(phi0^2 + dx^2)`
/// and pseudo-time step `0.5 dx`.
pub fn redistance(phi0: &ScalarField, iterations: usize) -> Result<ScalarField> {
    let g = *phi0.grid();
    let h = g.dx.min(g.dy);
    let dtau = 0.5 * h;
    let sign: Vec<f64> = phi0
        .values()
        .iter()
        .map(|&p| p / (p * p + h * h).sqrt())
        .collect();

    let mut cur = phi0.clone();
    let mut next = phi0.clone();
    for _ in 0..iterations {
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.idx(i, j);
                let p = cur.values()[k];
                // Out-of-grid neighbours are linearly extrapolated, which makes
                // the one-sided differences coincide at the edges.
                let (dxm, dxp) = one_sided(&cur, i, j, true);
                let (dym, dyp) = one_sided(&cur, i, j, false);
                let s = sign[k];
                let grad = if phi0.values()[k] > 0.0 {
                    (dxm.max(0.0).powi(2).max(dxp.min(0.0).powi(2))
                        + dym.max(0.0).powi(2).max(dyp.min(0.0).powi(2)))
                    .sqrt()
                } else {
                    (dxm.min(0.0).powi(2).max(dxp.max(0.0).powi(2))
                        + dym.min(0.0).powi(2).max(dyp.max(0.0).powi(2)))
                    .sqrt()
                };
                let v = p - dtau * s * (grad - 1.0);
                if !v.is_finite() {
                    return Err(Error::RedistanceDivergence { i, j });
                }
                next.values_mut()[k] = v;
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

fn one_sided(f: &ScalarField, i: usize, j: usize, along_x: bool) -> (f64, f64) {
    let g = f.grid();
    let (n, pos, h) = if along_x { (g.nx, i, g.dx) } else { (g.ny, j, g.dy) };
    let at = |q: usize| if along_x { f.at(q, j) } else { f.at(i, q) };
    let c = at(pos);
    let minus = (pos > 0).then(|| (c - at(pos - 1)) / h);
    let plus = (pos + 1 < n).then(|| (at(pos + 1) - c) / h);
    match (minus, plus) {
        (Some(m), Some(p)) => (m, p),
        (Some(m), None) => (m, m),
        (None, Some(p)) => (p, p),
        (None, None) => (0.0, 0.0),
    }
}

/// Guarded unit normals `grad(phi)/max(|grad(phi)|, 1e-10)` from centred
/// differences and tangents `t = (n_y, -n_x)`.
pub fn normals(phi: &ScalarField) -> (VectorField, VectorField) {
    let g = *phi.grid();
    let mut n = VectorField::zeros(g);
    let mut t = VectorField::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (gx, gy) = (phi.ddx(i, j), phi.ddy(i, j));
            let norm = gx.hypot(gy).max(NORMAL_GUARD);
            let (nx, ny) = (gx / norm, gy / norm);
            n.x.set(i, j, nx);
            n.y.set(i, j, ny);
            t.x.set(i, j, ny);
            t.y.set(i, j, -nx);
        }
    }
    (n, t)
}

/// Per-node role in ghost construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layer {
    Exterior,
    /// Exterior node whose four neighbours are all exterior, at least one of
    /// them in the first boundary layer. Extension data is sampled here.
    SecondBoundary,
    /// Exterior node with at least one neighbour inside the PEC.
    FirstBoundary,
    /// Interior node with at least one exterior neighbour.
    FirstGhost,
    DeepPec,
}

impl Layer {
    /// Nodes the time-stepping scheme updates.
    #[inline]
    pub fn is_exterior(self) -> bool {
        matches!(self, Layer::Exterior | Layer::SecondBoundary | Layer::FirstBoundary)
    }

    #[inline]
    pub fn is_pec(self) -> bool {
        !self.is_exterior()
    }
}

/// Inclusive index box of non-PML nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexBox {
    pub i_lo: usize,
    pub i_hi: usize,
    pub j_lo: usize,
    pub j_hi: usize,
}

impl IndexBox {
    pub fn whole(grid: &Grid2D) -> Self {
        IndexBox {
            i_lo: 0,
            i_hi: grid.nx - 1,
            j_lo: 0,
            j_hi: grid.ny - 1,
        }
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.i_lo && i <= self.i_hi && j >= self.j_lo && j <= self.j_hi
    }
}

/// Layer tag plus PML membership for every node.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerMask {
    grid: Grid2D,
    layers: Vec<Layer>,
    pml: Vec<bool>,
}

impl LayerMask {
    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn layer(&self, i: usize, j: usize) -> Layer {
        self.layers[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    #[inline]
    pub fn in_pml(&self, i: usize, j: usize) -> bool {
        self.pml[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn pml_flags(&self) -> &[bool] {
        &self.pml
    }

    pub fn count(&self, layer: Layer) -> usize {
        self.layers.iter().filter(|&&l| l == layer).count()
    }

    pub fn has_pec(&self) -> bool {
        self.layers.iter().any(|l| l.is_pec())
    }
}

fn neighbours(g: &Grid2D, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> {
    let (nx, ny) = (g.nx, g.ny);
    [
        (i.wrapping_sub(1), j),
        (i + 1, j),
        (i, j.wrapping_sub(1)),
        (i, j + 1),
    ]
    .into_iter()
    .filter(move |&(a, b)| a < nx && b < ny)
}

/// Tags every node by its position relative to the interface. `interior` is
/// the non-PML index box (`None`: no PML).
pub fn classify_layers(phi: &ScalarField, interior: Option<IndexBox>) -> Result<LayerMask> {
    let g = *phi.grid();
    let inside = |i: usize, j: usize| phi.at(i, j) >= 0.0;
    let interior = interior.unwrap_or_else(|| IndexBox::whole(&g));

    let mut layers = vec![Layer::Exterior; g.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let touches_other = neighbours(&g, i, j).any(|(a, b)| inside(a, b) != inside(i, j));
            layers[g.idx(i, j)] = match (inside(i, j), touches_other) {
                (true, true) => Layer::FirstGhost,
                (true, false) => Layer::DeepPec,
                (false, true) => Layer::FirstBoundary,
                (false, false) => Layer::Exterior,
            };
        }
    }
    let demote_below = SECOND_LAYER_DEMOTION * g.dx.min(g.dy);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.idx(i, j);
            if layers[k] != Layer::Exterior {
                continue;
            }
            let near_first = neighbours(&g, i, j).any(|(a, b)| layers[g.idx(a, b)] == Layer::FirstBoundary);
            if near_first && phi.at(i, j).abs() >= demote_below {
                layers[k] = Layer::SecondBoundary;
            }
        }
    }

    for j in 0..g.ny {
        for i in 0..g.nx {
            if layers[g.idx(i, j)] != Layer::FirstGhost {
                continue;
            }
            let found = (j.saturating_sub(2)..=(j + 2).min(g.ny - 1)).any(|b| {
                (i.saturating_sub(2)..=(i + 2).min(g.nx - 1))
                    .any(|a| layers[g.idx(a, b)] == Layer::FirstBoundary)
            });
            if !found {
                return Err(Error::Geometry(format!(
                    "ghost node ({i}, {j}) has no first-boundary node within two cells"
                )));
            }
        }
    }

    let pml = (0..g.len())
        .map(|k| {
            let (i, j) = g.ij(k);
            !interior.contains(i, j)
        })
        .collect();
    Ok(LayerMask { grid: g, layers, pml })
}

/// Everything the ghost construction needs to know about the geometry.
#[derive(Debug, Clone)]
pub struct LevelSetBundle {
    pub phi: ScalarField,
    pub n: VectorField,
    pub t: VectorField,
    pub mask: LayerMask,
}

impl LevelSetBundle {
    pub fn from_phi(phi: ScalarField, interior: Option<IndexBox>) -> Result<Self> {
        phi.grid().require_stencil()?;
        let (n, t) = normals(&phi);
        let mask = classify_layers(&phi, interior)?;
        Ok(LevelSetBundle { phi, n, t, mask })
    }

    pub fn from_shape(shape: &PecShape, grid: &Grid2D, interior: Option<IndexBox>) -> Result<Self> {
        Self::from_phi(sample_sdf(shape, grid), interior)
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        self.phi.grid()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_grid(n: usize) -> Grid2D {
        Grid2D::covering(0.0, 1.0, 0.0, 1.0, 1.0 / n as f64, 0).unwrap()
    }

    /// Brute-force |distance| to a densely sampled wedge boundary.
    fn wedge_boundary_distance(c: (f64, f64), r: f64, bis: f64, p: (f64, f64)) -> f64 {
        let samples = 200_000;
        let mut best = f64::INFINITY;
        // Arc of 3*pi/2 starting at the upper notch edge.
        let a0 = bis + FRAC_PI_4;
        for s in 0..=samples {
            let a = a0 + 1.5 * PI * s as f64 / samples as f64;
            best = best.min((p.0 - c.0 - r * a.cos()).hypot(p.1 - c.1 - r * a.sin()));
        }
        for edge in [bis - FRAC_PI_4, bis + FRAC_PI_4] {
            for s in 0..=samples / 4 {
                let t = r * s as f64 / (samples / 4) as f64;
                best = best.min((p.0 - c.0 - t * edge.cos()).hypot(p.1 - c.1 - t * edge.sin()));
            }
        }
        best
    }

    #[test]
    fn disk_values() {
        let c = (0.5, 0.5);
        assert_abs_diff_eq!(sdf_disk(c, 0.2, (0.5, 0.5)), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(sdf_disk(c, 0.2, (0.9, 0.5)), -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(sdf_disk(c, 0.2, (0.5, 0.7)), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn wedge_values() {
        assert_abs_diff_eq!(sdf_wedge((0.3, 0.3), 0.15, PI, (0.3, 0.3)), 0.0, epsilon = 1e-15);
        let v = sdf_wedge((0.5, 0.5), 0.2, PI, (0.6, 0.5));
        let oracle = wedge_boundary_distance((0.5, 0.5), 0.2, PI, (0.6, 0.5));
        assert_abs_diff_eq!(oracle, 0.1, epsilon = 1e-6);
        assert_abs_diff_eq!(v, 0.1, epsilon = 1e-12);
        // Far field outside the notch cone sees only the arc.
        for &(x, y) in &[(1.0, 0.5), (0.5, 1.0), (0.5, -0.2), (1.2, 1.1)] {
            let d = (x - 0.5_f64).hypot(y - 0.5);
            assert_abs_diff_eq!(sdf_wedge((0.5, 0.5), 0.2, PI, (x, y)), -(d - 0.2), epsilon = 1e-14);
        }
    }

    #[test]
    fn wedge_matches_brute_force_distance() {
        let (c, r, bis) = ((0.5, 0.5), 0.2, PI);
        let mut state = 12345u64;
        let mut uniform = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let p = (0.1 + 0.8 * uniform(), 0.1 + 0.8 * uniform());
            let v = sdf_wedge(c, r, bis, p);
            let oracle = wedge_boundary_distance(c, r, bis, p);
            assert!((v.abs() - oracle).abs() < 1e-5 * r, "p={p:?}: {v} vs {oracle}");
            let rel = (p.0 - c.0, p.1 - c.1);
            let ang = wrap_angle(rel.1.atan2(rel.0) - bis);
            let inside = rel.0.hypot(rel.1) < r && ang.abs() > FRAC_PI_4;
            assert_eq!(v > 0.0, inside, "sign at {p:?}");
        }
    }

    #[test]
    fn union_values() {
        let a = PecShape::Disk { center: (0.3, 0.3), radius: 0.15 };
        let b = PecShape::Disk { center: (0.6, 0.6), radius: 0.15 };
        let u = PecShape::Union(vec![a.clone(), b.clone()]);
        let v = u.signed_distance((0.45, 0.45));
        assert_abs_diff_eq!(v, -(0.045_f64.sqrt() - 0.15), epsilon = 1e-14);
        assert_abs_diff_eq!(v, -0.0621320343559643, epsilon = 1e-12);
        let single = PecShape::Union(vec![a.clone()]);
        assert_eq!(single.signed_distance((0.2, 0.9)), a.signed_distance((0.2, 0.9)));
        assert_eq!(u.signed_distance((0.32, 0.28)), a.signed_distance((0.32, 0.28)));
        assert!(u.validate().is_ok());
        let overlapping = PecShape::Union(vec![a.clone(), PecShape::Disk { center: (0.4, 0.3), radius: 0.15 }]);
        assert!(overlapping.validate().is_err());
    }

    #[test]
    fn sampling() {
        let g = unit_grid(20);
        let disk = PecShape::Disk { center: (0.5, 0.5), radius: 0.2 };
        let phi = sample_sdf(&disk, &g);
        assert_eq!(phi.at(14, 10), 0.0);
        assert_abs_diff_eq!(phi.at(11, 10), 0.15, epsilon = 1e-14);
        let none = sample_sdf(&PecShape::None, &g);
        assert!(none.values().iter().all(|&v| v == NO_PEC_DISTANCE));
        let mask = classify_layers(&none, None).unwrap();
        assert_eq!(mask.count(Layer::Exterior), g.len());
    }

    #[test]
    fn normals_of_planar_field_are_exact() {
        let g = unit_grid(16);
        let phi = ScalarField::from_fn(g, |x, _| x - 0.5);
        let (n, t) = normals(&phi);
        for j in 0..g.ny {
            for i in 0..g.nx {
                assert_abs_diff_eq!(n.x.at(i, j), 1.0, epsilon = 1e-14);
                assert_abs_diff_eq!(n.y.at(i, j), 0.0, epsilon = 1e-14);
                assert_abs_diff_eq!(t.x.at(i, j), 0.0, epsilon = 1e-14);
                assert_abs_diff_eq!(t.y.at(i, j), -1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn disk_normal_points_into_pec() {
        let g = unit_grid(20);
        let phi = sample_sdf(&PecShape::Disk { center: (0.5, 0.5), radius: 0.2 }, &g);
        let (n, _) = normals(&phi);
        assert_abs_diff_eq!(n.x.at(18, 10), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(n.y.at(18, 10), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_phi_gives_guarded_zero_normal() {
        let g = unit_grid(10);
        let (n, t) = normals(&ScalarField::constant(g, 3.0));
        assert!(n.x.values().iter().chain(n.y.values()).all(|&v| v == 0.0));
        assert!(t.x.values().iter().chain(t.y.values()).all(|&v| v == 0.0));
    }

    #[test]
    fn half_plane_layers() {
        let g = Grid2D::new(0.0, 0.0, 0.1, 0.1, 11, 5).unwrap();
        let phi = ScalarField::from_fn(g, |x, _| x - 0.5);
        let mask = classify_layers(&phi, None).unwrap();
        for j in 0..5 {
            assert_eq!(mask.layer(5, j), Layer::FirstGhost);
            assert_eq!(mask.layer(4, j), Layer::FirstBoundary);
            assert_eq!(mask.layer(3, j), Layer::SecondBoundary);
            for i in 0..=2 {
                assert_eq!(mask.layer(i, j), Layer::Exterior);
            }
            for i in 6..11 {
                assert_eq!(mask.layer(i, j), Layer::DeepPec);
            }
        }
        // Idempotent, sign-pattern only.
        let scaled = ScalarField::from_fn(g, |x, _| 7.0 * (x - 0.5));
        assert_eq!(classify_layers(&scaled, None).unwrap().layers(), mask.layers());
    }

    #[test]
    fn disk_layers_form_closed_rings() {
        let g = unit_grid(40);
        let b = LevelSetBundle::from_shape(&PecShape::Disk { center: (0.5, 0.5), radius: 0.2 }, &g, None).unwrap();
        let m = &b.mask;
        assert!(m.count(Layer::FirstGhost) > 0 && m.count(Layer::FirstBoundary) > 0);
        for j in 0..g.ny {
            for i in 0..g.nx {
                let l = m.layer(i, j);
                let phi = b.phi.at(i, j);
                let nb: Vec<_> = neighbours(&g, i, j).collect();
                match l {
                    Layer::FirstGhost => {
                        assert!(phi >= 0.0);
                        assert!(nb.iter().any(|&(a, c)| b.phi.at(a, c) < 0.0));
                        assert!(nb.iter().any(|&(a, c)| matches!(m.layer(a, c), Layer::FirstGhost | Layer::DeepPec)));
                    }
                    Layer::FirstBoundary => {
                        assert!(phi < 0.0);
                        assert!(nb.iter().any(|&(a, c)| b.phi.at(a, c) >= 0.0));
                    }
                    Layer::SecondBoundary => {
                        assert!(phi < 0.0);
                        assert!(nb.iter().all(|&(a, c)| b.phi.at(a, c) < 0.0));
                        assert!(nb.iter().any(|&(a, c)| m.layer(a, c) == Layer::FirstBoundary));
                    }
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn redistance_keeps_exact_plane() {
        let g = unit_grid(40);
        let (c, s) = (0.6_f64.cos(), 0.6_f64.sin());
        let phi = ScalarField::from_fn(g, |x, y| c * (x - 0.5) + s * (y - 0.45));
        let once = redistance(&phi, 1).unwrap();
        let change = phi
            .values()
            .iter()
            .zip(once.values())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(change < 1e-10, "max change {change}");
    }

    #[test]
    fn redistance_recovers_plane_distance() {
        let g = unit_grid(80);
        let h = g.dx;
        let exact = ScalarField::from_fn(g, |x, _| x - 0.5);
        let phi0 = ScalarField::from_fn(g, |x, _| 2.0 * (x - 0.5));
        let phi = redistance(&phi0, 200).unwrap();
        let mut err = 0.0_f64;
        for (k, &e) in exact.values().iter().enumerate() {
            if e.abs() < 5.0 * h {
                err = err.max((phi.values()[k] - e).abs());
            }
        }
        assert!(err < 10.0 * h * h, "error {err}");
    }

    #[test]
    fn redistance_flattens_scaled_disk_gradient() {
        let g = unit_grid(80);
        let h = g.dx;
        let phi0 = ScalarField::from_fn(g, |x, y| 3.0 * sdf_disk((0.5, 0.5), 0.2, (x, y)));
        let phi = redistance(&phi0, 200).unwrap();
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                if phi.at(i, j).abs() < 3.0 * h {
                    let gn = phi.ddx(i, j).hypot(phi.ddy(i, j));
                    assert!((0.9..=1.1).contains(&gn), "|grad| = {gn} at ({i},{j})");
                }
            }
        }
    }
}
