//! INI-style experiment configuration.
//!
//! ```text
//! [grid]
//! resolution = 1/160
//!
//! [pec]
//! type = disk
//! center = 0.5, 0.5
//! radius = 0.2
//!
//! [wave]
//! type = plane
//! omega = 2pi/0.3
//! ```
//!
//! Keys may also be written fully qualified (`pec.radius = 0.2`), which is
//! the form `--override` uses. Numbers accept fractions and multiples of
//! `pi` (`1/640`, `3pi/4`, `2pi/0.3`).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::boundary::{IncidentWave, PmlParams, Window};
use crate::emcore::Closure;
use crate::error::{Error, Result};
use crate::extension::ExtensionParams;
use crate::levelset::PecShape;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for Domain {
    fn default() -> Self {
        Domain {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldName {
    Ez,
    Hx,
    Hy,
}

impl FieldName {
    pub const ALL: [FieldName; 3] = [FieldName::Ez, FieldName::Hx, FieldName::Hy];

    pub fn as_str(self) -> &'static str {
        match self {
            FieldName::Ez => "Ez",
            FieldName::Hx => "Hx",
            FieldName::Hy => "Hy",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ez" => Some(FieldName::Ez),
            "hx" | "bx" => Some(FieldName::Hx),
            "hy" | "by" => Some(FieldName::Hy),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub snapshots: Vec<FieldName>,
    pub heatmap: bool,
    /// Colour range; `None` means symmetric about zero at the field maximum.
    pub heatmap_range: Option<(f64, f64)>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            snapshots: FieldName::ALL.to_vec(),
            heatmap: true,
            heatmap_range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    pub resolutions: Vec<f64>,
    pub reference: f64,
    pub collar: f64,
    pub cfl_list: Vec<f64>,
    pub reference_cfl: f64,
    pub t_list: Vec<f64>,
}

impl Default for StudySpec {
    fn default() -> Self {
        StudySpec {
            resolutions: vec![1.0 / 20.0, 1.0 / 40.0, 1.0 / 80.0, 1.0 / 160.0],
            reference: 1.0 / 640.0,
            collar: 0.1,
            cfl_list: vec![0.1, 0.2, 0.4, 0.64, 0.8, 1.0],
            reference_cfl: 1.0,
            t_list: vec![3.8, 6.8, 9.8, 12.8],
        }
    }
}

/// Every parameter of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub domain: Domain,
    pub spacing: f64,
    pub theta: f64,
    pub cfl: f64,
    pub t_final: f64,
    pub closure: Closure,
    pub shape: PecShape,
    pub wave: IncidentWave,
    pub extension: ExtensionParams,
    pub output: OutputSpec,
    pub study: StudySpec,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            domain: Domain::default(),
            spacing: 1.0 / 40.0,
            theta: 0.8,
            cfl: 1.0,
            t_final: 0.0,
            closure: Closure::Pml(PmlParams::default()),
            shape: PecShape::None,
            wave: IncidentWave::None,
            extension: ExtensionParams::default(),
            output: OutputSpec::default(),
            study: StudySpec::default(),
        }
    }
}

impl SimConfig {
    pub fn pml(&self) -> Option<PmlParams> {
        match self.closure {
            Closure::Pml(p) => Some(p),
            Closure::Periodic => None,
        }
    }

    /// Checks every invariant; parameter errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        if !(d.x_max > d.x_min && d.y_max > d.y_min) {
            return Err(Error::param("grid.x_max", "domain must have positive extent"));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::param("grid.resolution", format!("must be > 0, got {}", self.spacing)));
        }
        crate::grid::cell_count(d.x_max - d.x_min, self.spacing)
            .and_then(|_| crate::grid::cell_count(d.y_max - d.y_min, self.spacing))
            .map_err(|e| Error::param("grid.resolution", e.to_string()))?;
        crate::emcore::SolverParams::from_cfl(self.theta, self.cfl, self.t_final, self.spacing)?;
        if let Closure::Pml(p) = self.closure {
            p.validate()?;
        }
        self.shape.validate()?;
        self.wave.validate()?;
        self.extension.validate()?;

        let s = &self.study;
        if !(s.collar > 0.0) {
            return Err(Error::param("study.collar", "must be > 0"));
        }
        for (c, r) in self.shape.bounding_circles() {
            let clear = (c.0 - r - d.x_min)
                .min(d.x_max - c.0 - r)
                .min(c.1 - r - d.y_min)
                .min(d.y_max - c.1 - r);
            if clear < s.collar {
                return Err(Error::param(
                    "pec",
                    format!("obstacle at {c:?} needs at least {} clearance from the domain edge", s.collar),
                ));
            }
        }
        if !(s.reference > 0.0) {
            return Err(Error::param("study.reference", "must be > 0"));
        }
        for &r in &s.resolutions {
            let ratio = r / s.reference;
            if !(r > 0.0) || ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-8 * ratio {
                return Err(Error::param(
                    "study.resolutions",
                    format!("{r} is not an integer multiple of the reference spacing {}", s.reference),
                ));
            }
        }
        if s.cfl_list.iter().any(|&c| !(c > 0.0)) || !(s.reference_cfl > 0.0) {
            return Err(Error::param("study.cfl_list", "CFL > 0 required"));
        }
        if s.t_list.iter().any(|&t| !(t >= 0.0)) {
            return Err(Error::param("study.t_list", "times must be >= 0"));
        }
        if let Some((lo, hi)) = self.output.heatmap_range {
            if !(lo < hi) {
                return Err(Error::param("output.heatmap_range", "need lo < hi"));
            }
        }
        Ok(())
    }
}

/// Parses config text with no overrides.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    parse_config_with_overrides(text, &[])
}

/// Parses config text, then applies `key=value` overrides in order.
pub fn parse_config_with_overrides(text: &str, overrides: &[String]) -> Result<SimConfig> {
    let mut entries = Vec::new();
    let mut section = String::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| Error::Config {
                line: line_no,
                key: line.to_string(),
                reason: "unterminated section header".into(),
            })?;
            section = name.trim().to_ascii_lowercase();
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
            line: line_no,
            key: line.to_string(),
            reason: "expected `key = value`".into(),
        })?;
        let k = k.trim().to_ascii_lowercase();
        let key = if k.contains('.') || section.is_empty() {
            k
        } else {
            format!("{section}.{k}")
        };
        entries.push((line_no, key, v.trim().to_string()));
    }
    for (n, o) in overrides.iter().enumerate() {
        let (k, v) = o.split_once('=').ok_or_else(|| Error::Config {
            line: 0,
            key: o.clone(),
            reason: format!("override #{} must be `key=value`", n + 1),
        })?;
        entries.push((0, k.trim().to_ascii_lowercase(), v.trim().to_string()));
    }

    let mut builder = Builder::default();
    let mut lines: HashMap<String, usize> = HashMap::new();
    for (line, key, value) in &entries {
        builder.set(key, value).map_err(|reason| Error::Config {
            line: *line,
            key: key.clone(),
            reason,
        })?;
        lines.insert(key.clone(), *line);
    }
    let cfg = builder.finish().map_err(|(key, reason)| Error::Config {
        line: lines.get(&key).copied().unwrap_or(0),
        key,
        reason,
    })?;
    cfg.validate().map_err(|e| match e {
        Error::Param { name, reason } => {
            let line = lines
                .iter()
                .filter(|(k, _)| k.as_str() == name || k.starts_with(&format!("{name}.")))
                .map(|(_, &l)| l)
                .max()
                .unwrap_or(0);
            Error::Config {
                line,
                key: name.to_string(),
                reason,
            }
        }
        other => other,
    })?;
    Ok(cfg)
}

fn strip_comment(line: &str) -> &str {
    let cut = line.find('#').unwrap_or(line.len());
    &line[..cut]
}

/// Evaluates `a`, `a/b`, `pi`, `3pi/4`, `2*pi/0.3`, with an optional sign.
pub fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty number".into());
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest.trim()),
        None => (false, s.strip_prefix('+').unwrap_or(s).trim()),
    };
    if let Ok(v) = body.parse::<f64>() {
        return Ok(if neg { -v } else { v });
    }
    let mut parts = body.split('/');
    let mut value = product(parts.next().unwrap_or(""))?;
    for d in parts {
        let den = product(d)?;
        if den == 0.0 {
            return Err(format!("division by zero in `{s}`"));
        }
        value /= den;
    }
    if !value.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(if neg { -value } else { value })
}

fn product(s: &str) -> std::result::Result<f64, String> {
    let mut acc = 1.0;
    for f in s.split('*') {
        let f = f.trim();
        let v = if f.eq_ignore_ascii_case("pi") {
            PI
        } else if let Some(coef) = f.strip_suffix("pi").or_else(|| f.strip_suffix("PI")) {
            coef.trim().parse::<f64>().map_err(|_| format!("bad number `{f}`"))? * PI
        } else {
            f.parse::<f64>().map_err(|_| format!("bad number `{f}`"))?
        };
        acc *= v;
    }
    Ok(acc)
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_number).collect()
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    match parse_list(s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        other => Err(format!("expected two numbers, got {}", other.len())),
    }
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    s.trim().parse().map_err(|_| format!("expected a non-negative integer, got `{s}`"))
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, got `{s}`")),
    }
}

/// `disk(cx, cy, r)` or `wedge(cx, cy, r, bisector)`, `;`-separated.
fn parse_shapes(s: &str) -> std::result::Result<Vec<PecShape>, String> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let open = p.find('(').ok_or_else(|| format!("expected `kind(args)`, got `{p}`"))?;
            let args = p[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| format!("missing `)` in `{p}`"))?;
            let a = parse_list(args)?;
            match (p[..open].trim().to_ascii_lowercase().as_str(), a.as_slice()) {
                ("disk", [x, y, r]) => Ok(PecShape::Disk { center: (*x, *y), radius: *r }),
                ("wedge", [x, y, r]) => Ok(PecShape::Wedge { center: (*x, *y), radius: *r, bisector: PI }),
                ("wedge", [x, y, r, b]) => Ok(PecShape::Wedge { center: (*x, *y), radius: *r, bisector: *b }),
                (kind, args) => Err(format!("cannot build `{kind}` from {} arguments", args.len())),
            }
        })
        .collect()
}

#[derive(Debug, Default)]
struct Builder {
    cfg: SimConfigDraft,
}

#[derive(Debug)]
struct SimConfigDraft {
    base: SimConfig,
    closure: String,
    pml: PmlParams,
    pec_type: String,
    center: (f64, f64),
    radius: f64,
    bisector: f64,
    shapes: Vec<PecShape>,
    wave_type: String,
    sigma: f64,
    gamma: f64,
    omega: f64,
    window: Window,
}

impl Default for SimConfigDraft {
    fn default() -> Self {
        SimConfigDraft {
            base: SimConfig::default(),
            closure: "pml".into(),
            pml: PmlParams::default(),
            pec_type: "none".into(),
            center: (0.5, 0.5),
            radius: 0.2,
            bisector: PI,
            shapes: Vec::new(),
            wave_type: "none".into(),
            sigma: 0.1,
            gamma: -0.1,
            omega: 2.0 * PI / 0.3,
            window: Window::Causal,
        }
    }
}

impl Builder {
    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let d = &mut self.cfg;
        let c = &mut d.base;
        match key {
            "grid.x_min" => c.domain.x_min = parse_number(v)?,
            "grid.x_max" => c.domain.x_max = parse_number(v)?,
            "grid.y_min" => c.domain.y_min = parse_number(v)?,
            "grid.y_max" => c.domain.y_max = parse_number(v)?,
            "grid.domain" => match parse_list(v)?.as_slice() {
                [a, b, e, f] => c.domain = Domain { x_min: *a, x_max: *b, y_min: *e, y_max: *f },
                _ => return Err("expected x_min, x_max, y_min, y_max".into()),
            },
            "grid.resolution" | "grid.spacing" => c.spacing = parse_number(v)?,
            "solver.theta" => c.theta = parse_number(v)?,
            "solver.cfl" => c.cfl = parse_number(v)?,
            "solver.t_final" | "solver.t" => c.t_final = parse_number(v)?,
            "solver.closure" => d.closure = v.to_ascii_lowercase(),
            "pec.type" => d.pec_type = v.to_ascii_lowercase(),
            "pec.center" => d.center = parse_pair(v)?,
            "pec.radius" => d.radius = parse_number(v)?,
            "pec.bisector" => d.bisector = parse_number(v)?,
            "pec.shapes" => d.shapes = parse_shapes(v)?,
            "wave.type" => d.wave_type = v.to_ascii_lowercase(),
            "wave.sigma" => d.sigma = parse_number(v)?,
            "wave.gamma" => d.gamma = parse_number(v)?,
            "wave.omega" => d.omega = parse_number(v)?,
            "wave.window" => {
                d.window = match v.to_ascii_lowercase().as_str() {
                    "causal" => Window::Causal,
                    "literal" => Window::Literal,
                    "none" => Window::Unwindowed,
                    other => return Err(format!("unknown window `{other}` (causal|literal|none)")),
                }
            }
            "pml.thickness" => d.pml.thickness = parse_usize(v)?,
            "pml.order" => d.pml.order = parse_number(v)?,
            "pml.reflection" => d.pml.reflection = parse_number(v)?,
            "extension.ratio" => c.extension.ratio = parse_number(v)?,
            "extension.iterations" => c.extension.iterations = parse_usize(v)?,
            "extension.tolerance" => c.extension.tolerance = parse_number(v)?,
            "output.snapshots" => {
                c.output.snapshots = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| FieldName::parse(s).ok_or_else(|| format!("unknown field `{}`", s.trim())))
                    .collect::<std::result::Result<_, _>>()?
            }
            "output.heatmap" => c.output.heatmap = parse_bool(v)?,
            "output.heatmap_range" => {
                c.output.heatmap_range = if v.eq_ignore_ascii_case("auto") { None } else { Some(parse_pair(v)?) }
            }
            "study.resolutions" => c.study.resolutions = parse_list(v)?,
            "study.reference" => c.study.reference = parse_number(v)?,
            "study.collar" => c.study.collar = parse_number(v)?,
            "study.cfl_list" => c.study.cfl_list = parse_list(v)?,
            "study.reference_cfl" => c.study.reference_cfl = parse_number(v)?,
            "study.t_list" => c.study.t_list = parse_list(v)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    fn finish(self) -> std::result::Result<SimConfig, (String, String)> {
        let d = self.cfg;
        let mut c = d.base;
        c.closure = match d.closure.as_str() {
            "pml" => Closure::Pml(d.pml),
            "periodic" => Closure::Periodic,
            other => return Err(("solver.closure".into(), format!("unknown closure `{other}` (pml|periodic)"))),
        };
        c.shape = match d.pec_type.as_str() {
            "none" => PecShape::None,
            "disk" => PecShape::Disk { center: d.center, radius: d.radius },
            "wedge" => PecShape::Wedge { center: d.center, radius: d.radius, bisector: d.bisector },
            "union" => PecShape::Union(d.shapes),
            other => return Err(("pec.type".into(), format!("unknown shape `{other}` (none|disk|wedge|union)"))),
        };
        c.wave = match d.wave_type.as_str() {
            "none" => IncidentWave::None,
            "gaussian" => IncidentWave::Gaussian { sigma: d.sigma, gamma: d.gamma },
            "plane" | "sine" => IncidentWave::PlaneSine { omega: d.omega, window: d.window },
            other => return Err(("wave.type".into(), format!("unknown wave `{other}` (none|gaussian|plane)"))),
        };
        Ok(c)
    }
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

fn shape_term(s: &PecShape) -> String {
    match s {
        PecShape::Disk { center, radius } => format!("disk({:?}, {:?}, {:?})", center.0, center.1, radius),
        PecShape::Wedge { center, radius, bisector } => {
            format!("wedge({:?}, {:?}, {:?}, {:?})", center.0, center.1, radius, bisector)
        }
        _ => String::new(),
    }
}

/// Canonical text form; `parse_config(&render_config(c)) == c`.
pub fn render_config(c: &SimConfig) -> String {
    let mut o = String::new();
    let d = &c.domain;
    let _ = writeln!(o, "[grid]\ndomain = {}\nresolution = {:?}\n", list(&[d.x_min, d.x_max, d.y_min, d.y_max]), c.spacing);
    let closure = match c.closure {
        Closure::Pml(_) => "pml",
        Closure::Periodic => "periodic",
    };
    let _ = writeln!(
        o,
        "[solver]\ntheta = {:?}\ncfl = {:?}\nt_final = {:?}\nclosure = {closure}\n",
        c.theta, c.cfl, c.t_final
    );
    o.push_str("[pec]\n");
    match &c.shape {
        PecShape::None => o.push_str("type = none\n"),
        PecShape::Disk { center, radius } => {
            let _ = writeln!(o, "type = disk\ncenter = {:?}, {:?}\nradius = {:?}", center.0, center.1, radius);
        }
        PecShape::Wedge { center, radius, bisector } => {
            let _ = writeln!(
                o,
                "type = wedge\ncenter = {:?}, {:?}\nradius = {:?}\nbisector = {:?}",
                center.0, center.1, radius, bisector
            );
        }
        PecShape::Union(members) => {
            let terms: Vec<String> = members.iter().map(shape_term).collect();
            let _ = writeln!(o, "type = union\nshapes = {}", terms.join("; "));
        }
    }
    o.push_str("\n[wave]\n");
    match c.wave {
        IncidentWave::None => o.push_str("type = none\n"),
        IncidentWave::Gaussian { sigma, gamma } => {
            let _ = writeln!(o, "type = gaussian\nsigma = {sigma:?}\ngamma = {gamma:?}");
        }
        IncidentWave::PlaneSine { omega, window } => {
            let w = match window {
                Window::Causal => "causal",
                Window::Literal => "literal",
                Window::Unwindowed => "none",
            };
            let _ = writeln!(o, "type = plane\nomega = {omega:?}\nwindow = {w}");
        }
    }
    if let Closure::Pml(p) = c.closure {
        let _ = writeln!(
            o,
            "\n[pml]\nthickness = {}\norder = {:?}\nreflection = {:?}",
            p.thickness, p.order, p.reflection
        );
    }
    let e = &c.extension;
    let _ = writeln!(
        o,
        "\n[extension]\nratio = {:?}\niterations = {}\ntolerance = {:?}",
        e.ratio, e.iterations, e.tolerance
    );
    let snaps: Vec<&str> = c.output.snapshots.iter().map(|f| f.as_str()).collect();
    let range = match c.output.heatmap_range {
        Some((lo, hi)) => format!("{lo:?}, {hi:?}"),
        None => "auto".into(),
    };
    let _ = writeln!(
        o,
        "\n[output]\nsnapshots = {}\nheatmap = {}\nheatmap_range = {range}",
        snaps.join(", "),
        c.output.heatmap
    );
    let s = &c.study;
    let _ = writeln!(
        o,
        "\n[study]\nresolutions = {}\nreference = {:?}\ncollar = {:?}\ncfl_list = {}\nreference_cfl = {:?}\nt_list = {}",
        list(&s.resolutions),
        s.reference,
        s.collar,
        list(&s.cfl_list),
        s.reference_cfl,
        list(&s.t_list)
    );
    o
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c.domain, Domain::default());
        assert_eq!(c.spacing, 1.0 / 40.0);
        assert_eq!(c.theta, 0.8);
        assert_eq!(c.cfl, 1.0);
        assert_eq!(c.shape, PecShape::None);
        assert_eq!(c.wave, IncidentWave::None);
    }

    #[test]
    fn dotted_keys_build_the_disk() {
        let c = parse_config("pec.type=disk\npec.center=0.5,0.5\npec.radius=0.2\n").unwrap();
        assert_eq!(c.shape, PecShape::Disk { center: (0.5, 0.5), radius: 0.2 });
    }

    #[test]
    fn zero_cfl_is_rejected_with_line() {
        let err = parse_config("[grid]\nresolution = 1/20\n[solver]\ncfl = 0\n").unwrap_err();
        match err {
            Error::Config { line, key, reason } => {
                assert_eq!(line, 4);
                assert_eq!(key, "solver.cfl");
                assert!(reason.contains("CFL"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let err = parse_config("[solver]\ncfl = 1\nbogus = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, ref key, .. } if key == "solver.bogus"));
        let err = parse_config("[solver]\ncfl = abc\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_number("1/640").unwrap(), 1.0 / 640.0);
        assert_eq!(parse_number("2pi/0.3").unwrap(), 2.0 * PI / 0.3);
        assert_eq!(parse_number("-0.1").unwrap(), -0.1);
        assert_eq!(parse_number("3*pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_number("pi").unwrap(), PI);
        assert!(parse_number("1/0").is_err());
        assert!(parse_number("x").is_err());
    }

    #[test]
    fn union_of_wedges() {
        let c = parse_config(
            "[pec]\ntype = union\nshapes = wedge(0.3, 0.3, 0.15); wedge(0.6, 0.6, 0.15, pi)\n",
        )
        .unwrap();
        let w = |x: f64| PecShape::Wedge { center: (x, x), radius: 0.15, bisector: PI };
        assert_eq!(c.shape, PecShape::Union(vec![w(0.3), w(0.6)]));
    }

    #[test]
    fn overrides_apply_last() {
        let c = parse_config_with_overrides("[solver]\ncfl = 1\n", &["solver.cfl=0.5".into()]).unwrap();
        assert_eq!(c.cfl, 0.5);
        assert!(parse_config_with_overrides("", &["solver.cfl".into()]).is_err());
    }

    #[test]
    fn clearance_and_nesting_checks() {
        assert!(parse_config("[pec]\ntype = disk\ncenter = 0.15, 0.5\nradius = 0.1\n").is_err());
        assert!(parse_config("[study]\nresolutions = 1/20, 1/30\nreference = 1/640\n").is_err());
    }

    #[test]
    fn render_round_trips() {
        let text = "[grid]\nresolution = 1/160\n[pec]\ntype = union\nshapes = wedge(0.3,0.3,0.15); wedge(0.6,0.6,0.15)\n\
                    [wave]\ntype = plane\nomega = 2pi/0.2\n[output]\nheatmap_range = -1, 1\n";
        let c = parse_config(text).unwrap();
        assert_eq!(parse_config(&render_config(&c)).unwrap(), c);
        let mut p = SimConfig { closure: Closure::Periodic, ..SimConfig::default() };
        p.wave = IncidentWave::Gaussian { sigma: 0.1, gamma: -0.1 };
        assert_eq!(parse_config(&render_config(&p)).unwrap(), p);
    }
}
