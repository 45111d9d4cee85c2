//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use grwflow::identities::{all_ids, HcalSpec, IdentityPlan, VEvolutionForm};
use grwflow::warp::TimelikeMode;
use grwflow::{FlowConfig, FlowSpeed, InitProfile, Integrator, MeshSpec, MetricSpec, Topology, WarpKind, WarpingFunction};

#[derive(Debug, Clone, PartialEq)]
pub enum PrescribedSource {
    Constant(f64),
    SliceMatching(f64),
    Grid(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checks {
    pub identities: Vec<String>,
    pub ricci_sign: f64,
    pub triple_center: f64,
    pub triple_ds: f64,
    pub v_evolution: VEvolutionForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub dir: PathBuf,
    pub series_every: u64,
    /// 0 writes only the initial and final fields.
    pub fields_every: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSpec,
    pub warp: WarpingFunction,
    pub prescribed: PrescribedSource,
    pub init: InitProfile,
    pub flow: FlowConfig,
    pub checks: Checks,
    pub out: Output,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}", .0.join("; "))]
pub struct ConfigErrors(pub Vec<String>);

const KEYS: &[&str] = &[
    "mesh.m",
    "mesh.topology",
    "mesh.n",
    "mesh.L",
    "mesh.metric",
    "mesh.phi_amplitude",
    "warp.kind",
    "warp.a",
    "warp.b",
    "warp.omega",
    "prescribed.kind",
    "prescribed.value",
    "prescribed.slice",
    "prescribed.file",
    "init.kind",
    "init.level",
    "init.amplitude",
    "init.center",
    "init.width",
    "flow.integrator",
    "flow.speed",
    "flow.cfl",
    "flow.s_end",
    "flow.checkpoint_every",
    "flow.eps_sl",
    "flow.stop_after_steps",
    "checks.upper_barrier_delta",
    "checks.timelike_mode",
    "checks.timelike_range",
    "checks.prescribed_min_delta",
    "checks.identities",
    "checks.ricci_sign",
    "checks.triple_center",
    "checks.triple_ds",
    "checks.v_evolution",
    "out.dir",
    "out.series_every",
    "out.fields_every",
];

struct Doc {
    values: BTreeMap<String, String>,
    errors: Vec<String>,
}

impl Doc {
    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn num(&mut self, key: &str, default: Option<f64>) -> f64 {
        match self.values.get(key).map(String::as_str) {
            Some(v) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => x,
                _ => {
                    self.errors.push(format!("{key}: expected a finite number, got '{v}'"));
                    f64::NAN
                }
            },
            None => default.unwrap_or_else(|| {
                self.errors.push(format!("{key}: required"));
                f64::NAN
            }),
        }
    }

    fn count(&mut self, key: &str, default: Option<u64>) -> u64 {
        match self.values.get(key).map(String::as_str) {
            Some(v) => v.parse::<u64>().unwrap_or_else(|_| {
                self.errors.push(format!("{key}: expected a non-negative integer, got '{v}'"));
                0
            }),
            None => default.unwrap_or_else(|| {
                self.errors.push(format!("{key}: required"));
                0
            }),
        }
    }

    fn choice<'a>(&mut self, key: &str, options: &[&'a str], default: Option<&'a str>) -> &'a str {
        match self.values.get(key).map(String::as_str) {
            Some(v) => match options.iter().find(|o| **o == v) {
                Some(o) => o,
                None => {
                    self.errors.push(format!("{key}: expected one of {}, got '{v}'", options.join("|")));
                    options[0]
                }
            },
            None => default.unwrap_or_else(|| {
                self.errors.push(format!("{key}: required"));
                options[0]
            }),
        }
    }

    /// A number, or `off` for None.
    fn optional_num(&mut self, key: &str, default: Option<f64>) -> Option<f64> {
        match self.values.get(key).map(String::as_str) {
            Some("off") => None,
            Some(_) => Some(self.num(key, None)),
            None => default,
        }
    }

    fn fail(&mut self, key: &str, msg: impl std::fmt::Display) {
        self.errors.push(format!("{key}: {msg}"));
    }
}

fn tokenize(text: &str) -> Doc {
    let mut doc = Doc { values: BTreeMap::new(), errors: Vec::new() };
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            doc.errors.push(format!("line {}: expected 'key = value'", i + 1));
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            doc.errors.push(format!("{k}: unknown key (line {})", i + 1));
            continue;
        }
        if v.is_empty() {
            doc.errors.push(format!("{k}: empty value (line {})", i + 1));
            continue;
        }
        if doc.values.insert(k.to_string(), v.to_string()).is_some() {
            doc.errors.push(format!("{k}: given more than once (line {})", i + 1));
        }
    }
    doc
}

/// Parses and validates a configuration. Relative paths are resolved
/// against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<RunConfig, ConfigErrors> {
    let mut d = tokenize(text);

    let m = d.count("mesh.m", Some(1));
    if !(m == 1 || m == 2) {
        d.fail("mesh.m", format!("must be 1 or 2, got {m}"));
    }
    let topology = match d.choice("mesh.topology", &["torus", "rectangle"], Some("torus")) {
        "torus" => Topology::Periodic,
        _ => Topology::DirichletRectangle,
    };
    let n = match d.raw("mesh.n").map(|v| v.parse::<i64>()) {
        Some(Ok(n)) if n > 0 => n as usize,
        Some(_) => {
            let v = d.raw("mesh.n").unwrap_or_default().to_string();
            d.fail("mesh.n", format!("expected a positive integer, got '{v}'"));
            0
        }
        None => {
            d.fail("mesh.n", "required");
            0
        }
    };
    let min_n = if topology == Topology::Periodic { 3 } else { 4 };
    if n > 0 && n < min_n {
        d.fail("mesh.n", format!("needs at least {min_n} nodes per axis"));
    }
    let default_len = if topology == Topology::Periodic { TAU } else { 1.0 };
    let length = d.num("mesh.L", Some(default_len));
    if !(length > 0.0) {
        d.fail("mesh.L", "must be positive");
    }
    let metric = match d.choice("mesh.metric", &["flat", "conformal_sine"], Some("flat")) {
        "flat" => {
            if d.raw("mesh.phi_amplitude").is_some() {
                d.fail("mesh.phi_amplitude", "only used with mesh.metric = conformal_sine");
            }
            MetricSpec::Flat
        }
        _ => MetricSpec::ConformalSine { amplitude: d.num("mesh.phi_amplitude", None) },
    };
    let mesh = MeshSpec { m: m as usize, topology, n, length, metric };

    let warp_kind = match d.choice("warp.kind", &["constant", "sinusoidal", "tanh"], Some("constant")) {
        "constant" => WarpKind::Constant { a: d.num("warp.a", Some(1.0)) },
        "sinusoidal" => WarpKind::Sinusoidal {
            a: d.num("warp.a", None),
            b: d.num("warp.b", None),
            omega: d.num("warp.omega", None),
        },
        _ => WarpKind::Tanh { a: d.num("warp.a", None), b: d.num("warp.b", None) },
    };
    let warp = match WarpingFunction::new(warp_kind) {
        Ok(w) => w,
        Err(e) => {
            d.fail("warp", e);
            WarpingFunction::constant(1.0).unwrap()
        }
    };

    let init = match d.choice("init.kind", &["constant", "bump", "sine"], Some("constant")) {
        "constant" => InitProfile::Constant { level: d.num("init.level", Some(0.0)) },
        "sine" => InitProfile::Sine { level: d.num("init.level", Some(0.0)), amplitude: d.num("init.amplitude", None) },
        _ => InitProfile::Bump {
            level: d.num("init.level", Some(0.0)),
            amplitude: d.num("init.amplitude", None),
            center: d.num("init.center", Some(length / 2.0)),
            width: d.num("init.width", Some(1.0)),
        },
    };

    let prescribed = match d.choice("prescribed.kind", &["constant", "slice_matching", "grid"], Some("constant")) {
        "constant" => PrescribedSource::Constant(d.num("prescribed.value", Some(0.0))),
        "slice_matching" => {
            let level = match init {
                InitProfile::Constant { level } | InitProfile::Sine { level, .. } | InitProfile::Bump { level, .. } => {
                    level
                }
            };
            PrescribedSource::SliceMatching(d.num("prescribed.slice", Some(level)))
        }
        _ => match d.raw("prescribed.file") {
            Some(p) => {
                let path = base.join(p);
                if !path.is_file() {
                    d.fail("prescribed.file", format!("no such file '{}'", path.display()));
                }
                PrescribedSource::Grid(path)
            }
            None => {
                d.fail("prescribed.file", "required for prescribed.kind = grid");
                PrescribedSource::Constant(0.0)
            }
        },
    };

    let integrator = match d.choice("flow.integrator", &["euler", "rk4"], Some("euler")) {
        "euler" => Integrator::Euler,
        _ => Integrator::Rk4,
    };
    let speed = match d.choice("flow.speed", &["graphical", "normal"], Some("graphical")) {
        "graphical" => FlowSpeed::Graphical,
        _ => FlowSpeed::Normal,
    };
    let defaults = FlowConfig::default();
    let timelike_mode = match d.choice("checks.timelike_mode", &["off", "strict", "nonneg"], Some("off")) {
        "off" => None,
        "strict" => Some(TimelikeMode::Strict),
        _ => Some(TimelikeMode::NonNeg),
    };
    let timelike_range = match d.raw("checks.timelike_range") {
        None => None,
        Some(v) => {
            let parts: Vec<Option<f64>> = v.split(',').map(|p| p.trim().parse::<f64>().ok()).collect();
            match parts.as_slice() {
                [Some(a), Some(b)] if a <= b => Some((*a, *b)),
                _ => {
                    d.fail("checks.timelike_range", format!("expected 'lo, hi' with lo <= hi, got '{v}'"));
                    None
                }
            }
        }
    };
    let stop_after_steps = if d.raw("flow.stop_after_steps").is_some() {
        Some(d.count("flow.stop_after_steps", None))
    } else {
        None
    };
    let flow = FlowConfig {
        integrator,
        speed,
        cfl: d.num("flow.cfl", Some(defaults.cfl)),
        s_end: d.num("flow.s_end", None),
        eps_sl: d.num("flow.eps_sl", Some(defaults.eps_sl)),
        checkpoint_every: d.count("flow.checkpoint_every", Some(0)),
        upper_barrier: d.optional_num("checks.upper_barrier_delta", defaults.upper_barrier),
        timelike: timelike_mode,
        timelike_range,
        prescribed_min: d.optional_num("checks.prescribed_min_delta", None),
        stop_after_steps,
    };
    if let Err(e) = flow.validate() {
        d.fail("flow", e);
    }

    let known = all_ids();
    let identities: Vec<String> = match d.raw("checks.identities") {
        None | Some("all") => known.iter().map(|s| s.to_string()).collect(),
        Some(list) => list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
    };
    for id in &identities {
        if !known.contains(&id.as_str()) {
            d.fail("checks.identities", format!("unknown identity '{id}'"));
        }
    }
    let ricci_sign = d.num("checks.ricci_sign", Some(-1.0));
    if ricci_sign != 1.0 && ricci_sign != -1.0 {
        d.fail("checks.ricci_sign", "must be 1 or -1");
    }
    let triple_center = d.num("checks.triple_center", Some(0.05));
    let triple_ds = d.num("checks.triple_ds", Some(0.01));
    if !(triple_ds > 0.0 && triple_center - triple_ds >= 0.0) {
        d.fail("checks.triple_ds", "need 0 < triple_ds <= triple_center");
    }
    let v_evolution = match d.choice("checks.v_evolution", &["rederived", "printed"], Some("rederived")) {
        "rederived" => VEvolutionForm::Rederived,
        _ => VEvolutionForm::AsPrinted,
    };
    let checks = Checks {
        identities,
        ricci_sign,
        triple_center,
        triple_ds,
        v_evolution,
    };

    let out = Output {
        dir: base.join(d.raw("out.dir").unwrap_or("out")),
        series_every: d.count("out.series_every", Some(1)),
        fields_every: d.count("out.fields_every", Some(0)),
    };
    if out.series_every == 0 {
        d.fail("out.series_every", "must be at least 1");
    }

    if d.errors.is_empty() {
        Ok(RunConfig { mesh, warp, prescribed, init, flow, checks, out })
    } else {
        Err(ConfigErrors(d.errors))
    }
}

impl RunConfig {
    /// Canonical text form with absolute paths; parses back to the same config.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("mesh.m", self.mesh.m.to_string());
        kv("mesh.topology", if self.mesh.topology == Topology::Periodic { "torus" } else { "rectangle" }.into());
        kv("mesh.n", self.mesh.n.to_string());
        kv("mesh.L", self.mesh.length.to_string());
        match self.mesh.metric {
            MetricSpec::ConformalSine { amplitude } => {
                kv("mesh.metric", "conformal_sine".into());
                kv("mesh.phi_amplitude", amplitude.to_string());
            }
            _ => kv("mesh.metric", "flat".into()),
        }
        match self.warp.kind {
            WarpKind::Constant { a } => {
                kv("warp.kind", "constant".into());
                kv("warp.a", a.to_string());
            }
            WarpKind::Sinusoidal { a, b, omega } => {
                kv("warp.kind", "sinusoidal".into());
                kv("warp.a", a.to_string());
                kv("warp.b", b.to_string());
                kv("warp.omega", omega.to_string());
            }
            WarpKind::Tanh { a, b } => {
                kv("warp.kind", "tanh".into());
                kv("warp.a", a.to_string());
                kv("warp.b", b.to_string());
            }
        }
        match &self.prescribed {
            PrescribedSource::Constant(v) => {
                kv("prescribed.kind", "constant".into());
                kv("prescribed.value", v.to_string());
            }
            PrescribedSource::SliceMatching(c) => {
                kv("prescribed.kind", "slice_matching".into());
                kv("prescribed.slice", c.to_string());
            }
            PrescribedSource::Grid(p) => {
                kv("prescribed.kind", "grid".into());
                kv("prescribed.file", absolute(p).display().to_string());
            }
        }
        match self.init {
            InitProfile::Constant { level } => {
                kv("init.kind", "constant".into());
                kv("init.level", level.to_string());
            }
            InitProfile::Sine { level, amplitude } => {
                kv("init.kind", "sine".into());
                kv("init.level", level.to_string());
                kv("init.amplitude", amplitude.to_string());
            }
            InitProfile::Bump { level, amplitude, center, width } => {
                kv("init.kind", "bump".into());
                kv("init.level", level.to_string());
                kv("init.amplitude", amplitude.to_string());
                kv("init.center", center.to_string());
                kv("init.width", width.to_string());
            }
        }
        let f = &self.flow;
        kv("flow.integrator", if f.integrator == Integrator::Euler { "euler" } else { "rk4" }.into());
        kv("flow.speed", if f.speed == FlowSpeed::Graphical { "graphical" } else { "normal" }.into());
        kv("flow.cfl", f.cfl.to_string());
        kv("flow.s_end", f.s_end.to_string());
        kv("flow.eps_sl", f.eps_sl.to_string());
        kv("flow.checkpoint_every", f.checkpoint_every.to_string());
        if let Some(k) = f.stop_after_steps {
            kv("flow.stop_after_steps", k.to_string());
        }
        let opt = |x: Option<f64>| x.map_or("off".to_string(), |v| v.to_string());
        let c = &self.checks;
        kv("checks.upper_barrier_delta", opt(f.upper_barrier));
        kv("checks.prescribed_min_delta", opt(f.prescribed_min));
        kv(
            "checks.timelike_mode",
            match f.timelike {
                None => "off",
                Some(TimelikeMode::Strict) => "strict",
                Some(TimelikeMode::NonNeg) => "nonneg",
            }
            .into(),
        );
        if let Some((a, b)) = f.timelike_range {
            kv("checks.timelike_range", format!("{a}, {b}"));
        }
        kv("checks.identities", c.identities.join(", "));
        kv("checks.ricci_sign", c.ricci_sign.to_string());
        kv("checks.triple_center", c.triple_center.to_string());
        kv("checks.triple_ds", c.triple_ds.to_string());
        kv(
            "checks.v_evolution",
            if c.v_evolution == VEvolutionForm::Rederived { "rederived" } else { "printed" }.into(),
        );
        kv("out.dir", absolute(&self.out.dir).display().to_string());
        kv("out.series_every", self.out.series_every.to_string());
        kv("out.fields_every", self.out.fields_every.to_string());
        s
    }

    /// Identity ladder plan; grid-file curvature cannot be rebuilt per level.
    pub fn identity_plan(&self, ladder: Vec<usize>) -> Result<IdentityPlan, ConfigErrors> {
        let hcal = match self.prescribed {
            PrescribedSource::Constant(v) => HcalSpec::Constant(v),
            PrescribedSource::SliceMatching(c) => HcalSpec::SliceMatching(c),
            PrescribedSource::Grid(_) => {
                return Err(ConfigErrors(vec![
                    "prescribed.kind: grid curvature cannot be used on an identity ladder".into()
                ]))
            }
        };
        let mut plan = IdentityPlan::new(self.mesh, self.warp, self.init, hcal, ladder);
        plan.integrator = self.flow.integrator;
        plan.cfl = self.flow.cfl;
        plan.eps_sl = self.flow.eps_sl;
        plan.ricci_sigma = self.checks.ricci_sign;
        plan.triple_center = self.checks.triple_center;
        plan.triple_ds = self.checks.triple_ds;
        plan.v_form = self.checks.v_evolution;
        Ok(plan)
    }
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}
