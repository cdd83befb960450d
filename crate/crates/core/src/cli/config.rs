use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use ini::{Ini, ParseOption};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::geometry::{BoundaryGrading, DomainSpec, Family, MeshOptions};
use crate::rigidity::Window;
use crate::spectral::EigenMethod;
use crate::sphereband::{BandShape, BandSpec};

/// Requested number of eigenpairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeCount {
    Count(usize),
    /// Every interior unknown (dense solver).
    All,
}

/// Weight `ψ` of the heat-content experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    One,
    /// Harmonic extension of a seeded zero-average boundary function.
    Harmonic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatContentConfig {
    pub weight: Weight,
    pub window: Window,
    /// Relative tolerances on `c0, c1, c2`.
    pub tolerances: [f64; 3],
}

impl Default for HeatContentConfig {
    fn default() -> Self {
        Self { weight: Weight::One, window: Window::default(), tolerances: [0.005, 0.02, 0.10] }
    }
}

/// Everything one experiment run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub refine: usize,
    pub mesh_options: MeshOptions,
    pub times: Vec<f64>,
    /// Trace times of the interior check; defaults to `times`.
    pub taus: Vec<f64>,
    pub mode_count: ModeCount,
    pub tolerance: f64,
    pub method: EigenMethod,
    pub li_yau_constant: Option<f64>,
    /// Verdict threshold; `None` selects the per-command default.
    pub threshold: Option<f64>,
    pub seed: u64,
    pub heat_content: HeatContentConfig,
    pub band: BandSpec,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let times: Vec<f64> = (0..6).map(|n| 0.05 * f64::from(1 << n)).collect();
        Self {
            domain: DomainSpec::disk(1.0, 0.05),
            refine: 0,
            mesh_options: MeshOptions::default(),
            taus: times.clone(),
            times,
            mode_count: ModeCount::Count(150),
            tolerance: 1e-6,
            method: EigenMethod::Auto,
            li_yau_constant: None,
            threshold: None,
            seed: 42,
            heat_content: HeatContentConfig::default(),
            band: BandSpec::cap(PI / 2.0, 2000),
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub refine: Option<usize>,
    pub modes: Option<usize>,
    pub threshold: Option<f64>,
    pub seed: Option<u64>,
}

const KEYS: &[(&str, &[&str])] = &[
    (
        "domain",
        &[
            "family",
            "radius",
            "a",
            "b",
            "inner",
            "outer",
            "eps",
            "m",
            "vertices",
            "side",
            "h",
            "refine",
            "interface_radius",
            "grading_first_width",
            "grading_ratio",
        ],
    ),
    ("times", &["values", "start", "stop", "count", "spacing"]),
    ("taus", &["values", "start", "stop", "count", "spacing"]),
    ("solver", &["modes", "tolerance", "method", "li_yau_constant", "threshold", "seed"]),
    ("heatcontent", &["weight", "t_min", "t_max", "samples", "tol_c0", "tol_c1", "tol_c2"]),
    ("band", &["shape", "theta1", "theta2", "theta0", "points"]),
    ("output", &["dir"]),
];

type Section = BTreeMap<String, String>;

fn parse_f64(section: &str, key: &str, v: &str) -> Result<f64> {
    v.trim().parse().map_err(|_| invalid(format!("[{section}] {key}: expected a number, got {v:?}")))
}

fn parse_int<T: std::str::FromStr>(section: &str, key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| invalid(format!("[{section}] {key}: expected an integer, got {v:?}")))
}

struct Reader<'a> {
    name: &'static str,
    map: Option<&'a Section>,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.and_then(|m| m.get(key)).map(String::as_str)
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key).map(|v| parse_f64(self.name, key, v)).transpose()
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn req(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| invalid(format!("[{}] missing key {key}", self.name)))
    }

    fn int<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key).map(|v| parse_int(self.name, key, v)).transpose()
    }
}

fn parse_domain(r: &Reader) -> Result<(DomainSpec, usize, MeshOptions)> {
    let defaults = ExperimentConfig::default();
    if r.map.is_none() {
        return Ok((defaults.domain, 0, MeshOptions::default()));
    }
    let h = r.f64_or("h", defaults.domain.target_h)?;
    let family = match r.raw("family").unwrap_or("disk").trim() {
        "disk" => Family::Disk { radius: r.f64_or("radius", 1.0)? },
        "ellipse" => Family::Ellipse { a: r.req("a")?, b: r.req("b")? },
        "annulus" => Family::Annulus { inner: r.req("inner")?, outer: r.req("outer")? },
        "radial" => Family::Radial { eps: r.req("eps")?, m: r.int("m")?.ok_or_else(|| invalid("[domain] missing key m"))? },
        "square" => DomainSpec::square(r.req("side")?, h).family,
        "polygon" => {
            let text = r.raw("vertices").ok_or_else(|| invalid("[domain] missing key vertices"))?;
            let vertices = text
                .split(';')
                .filter(|s| !s.trim().is_empty())
                .map(|pair| {
                    let xy: Vec<&str> = pair.split_whitespace().collect();
                    match xy.as_slice() {
                        [x, y] => Ok([parse_f64("domain", "vertices", x)?, parse_f64("domain", "vertices", y)?]),
                        _ => Err(invalid(format!("[domain] vertices: expected `x y`, got {pair:?}"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Family::Polygon { vertices }
        }
        other => return Err(invalid(format!("[domain] unknown family {other:?}"))),
    };
    let spec = DomainSpec::new(family, h);
    spec.validate()?;
    let grading = match (r.f64("grading_first_width")?, r.f64("grading_ratio")?) {
        (None, None) => None,
        (Some(first_width), Some(ratio)) => Some(BoundaryGrading { first_width, ratio }),
        _ => return Err(invalid("[domain] grading needs both grading_first_width and grading_ratio")),
    };
    let options = MeshOptions { interface_radius: r.f64("interface_radius")?, grading };
    Ok((spec, r.int("refine")?.unwrap_or(0), options))
}

fn parse_times(r: &Reader, default: &[f64]) -> Result<Vec<f64>> {
    let Some(map) = r.map else { return Ok(default.to_vec()) };
    let times = if let Some(values) = map.get("values") {
        if ["start", "stop", "count", "spacing"].iter().any(|k| map.contains_key(*k)) {
            return Err(invalid(format!("[{}] give either values or a generator, not both", r.name)));
        }
        values
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|v| parse_f64(r.name, "values", v))
            .collect::<Result<Vec<_>>>()?
    } else {
        let (start, stop) = (r.req("start")?, r.req("stop")?);
        let count: usize = r.int("count")?.ok_or_else(|| invalid(format!("[{}] missing key count", r.name)))?;
        if count == 0 || (count == 1 && start != stop) {
            return Err(invalid(format!("[{}] count must be >= 2 unless start = stop", r.name)));
        }
        let geometric = match r.raw("spacing").unwrap_or("geometric").trim() {
            "geometric" | "log" => true,
            "linear" => false,
            other => return Err(invalid(format!("[{}] unknown spacing {other:?}", r.name))),
        };
        if geometric && !(start > 0.0 && stop > 0.0) {
            return Err(invalid(format!("[{}] geometric spacing needs positive endpoints", r.name)));
        }
        let last = count.saturating_sub(1).max(1) as f64;
        (0..count)
            .map(|i| {
                let s = i as f64 / last;
                if i + 1 == count {
                    stop
                } else if geometric {
                    start * (stop / start).powf(s)
                } else {
                    start + (stop - start) * s
                }
            })
            .collect()
    };
    if times.is_empty() {
        return Err(invalid(format!("[{}] time list is empty", r.name)));
    }
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(invalid(format!("[{}] times must be positive, got {t}", r.name)));
    }
    Ok(times)
}

fn parse_band(r: &Reader) -> Result<BandSpec> {
    let default = ExperimentConfig::default().band;
    if r.map.is_none() {
        return Ok(default);
    }
    let points = r.int("points")?.unwrap_or(default.n_points);
    let spec = match r.raw("shape").unwrap_or("band").trim() {
        "band" => BandSpec::band(r.req("theta1")?, r.req("theta2")?, points),
        "cap" => BandSpec::cap(r.f64_or("theta0", PI / 2.0)?, points),
        other => return Err(invalid(format!("[band] unknown shape {other:?}"))),
    };
    spec.validate()?;
    Ok(spec)
}

impl ExperimentConfig {
    /// Parses the sectioned `key = value` format. Unknown sections and keys
    /// are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let opt = ParseOption { enabled_escape: false, ..Default::default() };
        let ini = Ini::load_from_str_opt(text, opt)
            .map_err(|e| Error::Parse { line: e.line, message: e.msg.to_string() })?;
        let mut sections: BTreeMap<&'static str, Section> = BTreeMap::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if props.iter().next().is_some() {
                    return Err(invalid("keys before the first section header"));
                }
                continue;
            };
            let (canon, allowed) = KEYS
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| invalid(format!("unknown section [{name}]")))?;
            let section = sections.entry(canon).or_default();
            for (k, v) in props.iter() {
                if !allowed.contains(&k) {
                    return Err(invalid(format!("[{name}] unknown key {k}")));
                }
                section.insert(k.to_string(), v.to_string());
            }
        }
        let reader = |name: &'static str| Reader { name, map: sections.get(name) };
        let mut cfg = Self::default();

        (cfg.domain, cfg.refine, cfg.mesh_options) = parse_domain(&reader("domain"))?;
        cfg.times = parse_times(&reader("times"), &cfg.times)?;
        cfg.taus = parse_times(&reader("taus"), &cfg.times)?;

        let solver = reader("solver");
        if let Some(m) = solver.raw("modes") {
            cfg.mode_count = match m.trim() {
                "all" => ModeCount::All,
                v => ModeCount::Count(parse_int("solver", "modes", v)?),
            };
        }
        cfg.tolerance = solver.f64_or("tolerance", cfg.tolerance)?;
        if let Some(m) = solver.raw("method") {
            cfg.method = match m.trim() {
                "auto" => EigenMethod::Auto,
                "dense" => EigenMethod::Dense,
                "lanczos" => EigenMethod::Lanczos,
                other => return Err(invalid(format!("[solver] unknown method {other:?}"))),
            };
        }
        cfg.li_yau_constant = solver.f64("li_yau_constant")?;
        cfg.threshold = solver.f64("threshold")?;
        cfg.seed = solver.int("seed")?.unwrap_or(cfg.seed);

        let hc = reader("heatcontent");
        if let Some(w) = hc.raw("weight") {
            cfg.heat_content.weight = match w.trim() {
                "one" => Weight::One,
                "harmonic" => Weight::Harmonic,
                other => return Err(invalid(format!("[heatcontent] unknown weight {other:?}"))),
            };
        }
        let w = &mut cfg.heat_content.window;
        w.t_min = hc.f64_or("t_min", w.t_min)?;
        w.t_max = hc.f64_or("t_max", w.t_max)?;
        w.samples = hc.int("samples")?.unwrap_or(w.samples);
        for (i, key) in ["tol_c0", "tol_c1", "tol_c2"].iter().enumerate() {
            cfg.heat_content.tolerances[i] = hc.f64_or(key, cfg.heat_content.tolerances[i])?;
        }

        cfg.band = parse_band(&reader("band"))?;
        if let Some(dir) = reader("output").raw("dir") {
            cfg.output_dir = PathBuf::from(dir.trim());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        if let Some(r) = o.refine {
            self.refine = r;
        }
        if let Some(m) = o.modes {
            self.mode_count = ModeCount::Count(m);
        }
        if o.threshold.is_some() {
            self.threshold = o.threshold;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.band.validate()?;
        if self.times.is_empty() || self.taus.is_empty() {
            return Err(invalid("time lists must be nonempty"));
        }
        if let Some(t) = self.times.iter().chain(&self.taus).find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(invalid(format!("times must be positive, got {t}")));
        }
        if self.mode_count == ModeCount::Count(0) {
            return Err(invalid("mode count must be at least 1"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(invalid(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if let Some(t) = self.threshold {
            if !(t.is_finite() && t >= 0.0) {
                return Err(invalid(format!("threshold must be nonnegative, got {t}")));
            }
        }
        if self.refine > 6 {
            return Err(invalid(format!("refine = {} would exceed the mesh size budget", self.refine)));
        }
        let w = &self.heat_content.window;
        if !(w.t_min > 0.0 && w.t_max > w.t_min) || w.samples < 6 {
            return Err(invalid("[heatcontent] window needs 0 < t_min < t_max and samples >= 6"));
        }
        Ok(())
    }

    /// Normalized rendering of the resolved configuration; its digest is
    /// the config hash recorded in outputs.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|t| format!("{t:?}")).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "domain.family={:?}", self.domain.family);
        let _ = writeln!(s, "domain.h={:?}", self.domain.target_h);
        let _ = writeln!(s, "domain.refine={}", self.refine);
        let _ = writeln!(s, "domain.options={:?}", self.mesh_options);
        let _ = writeln!(s, "times={}", list(&self.times));
        let _ = writeln!(s, "taus={}", list(&self.taus));
        let _ = writeln!(s, "solver.modes={:?}", self.mode_count);
        let _ = writeln!(s, "solver.tolerance={:?}", self.tolerance);
        let _ = writeln!(s, "solver.method={:?}", self.method);
        let _ = writeln!(s, "solver.li_yau_constant={:?}", self.li_yau_constant);
        let _ = writeln!(s, "solver.threshold={:?}", self.threshold);
        let _ = writeln!(s, "solver.seed={}", self.seed);
        let _ = writeln!(s, "heatcontent={:?}", self.heat_content);
        let _ = writeln!(s, "band={:?}", self.band);
        s
    }

    /// SHA-256 of [`canonical`](Self::canonical), lowercase hex. The output
    /// directory is deliberately excluded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl BandShape {
    pub(crate) fn label(&self) -> String {
        match *self {
            BandShape::Band { theta1, theta2 } => format!("band({theta1}, {theta2})"),
            BandShape::Cap { theta0 } => format!("cap({theta0})"),
        }
    }
}
