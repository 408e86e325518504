//! Line-oriented run configuration.
//!
//! Each non-empty line is `section.key = value`; `#` starts a comment. Lists
//! are comma separated. Every problem in a document is collected and
//! reported with its line number.
//!
//! ```text
//! mesh.nx = 16
//! mesh.ny = 16
//! mesh.dirichlet_sides = left, right
//! constitutive.p = 2
//! boundary.kind = ramp
//! boundary.left = 0
//! boundary.right = 1
//! boundary.t_ramp = 0.05
//! initial.u0 = 0
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use crate::boundary::{BoundaryData, InitialData};
use crate::constitutive::{ConstitutiveSpec, Eta, Profile};
use crate::coupling::CouplingConfig;
use crate::error::{Error, Result};
use crate::estimates::lambda_from_q;
use crate::expr::Expr;
use crate::mesh::{build_rect_mesh, Mesh, Side};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    /// 1-based line, or `None` for a missing key.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

pub(crate) fn format_issues(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub dirichlet_sides: Vec<Side>,
}

impl MeshConfig {
    pub fn issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if self.nx == 0 {
            issues.push("nx must be >= 1".to_string());
        }
        if self.ny == 0 {
            issues.push("ny must be >= 1".to_string());
        }
        if !(self.lx > 0.0 && self.lx.is_finite()) {
            issues.push(format!("lx must be > 0 (got {})", self.lx));
        }
        if !(self.ly > 0.0 && self.ly.is_finite()) {
            issues.push(format!("ly must be > 0 (got {})", self.ly));
        }
        if self.dirichlet_sides.is_empty() {
            issues.push("dirichlet_sides must name at least one side".to_string());
        }
        issues
    }

    pub fn build(&self) -> Result<Mesh> {
        build_rect_mesh(self.nx, self.ny, self.lx, self.ly, &self.dirichlet_sides)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Vtk,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Vtk => "vtk",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub formats: Vec<OutputFormat>,
    /// Write field snapshots every `stride` steps.
    pub stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            formats: vec![OutputFormat::Csv],
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    pub constitutive: ConstitutiveSpec,
    pub coupling: CouplingConfig,
    pub boundary: BoundaryData,
    pub initial: InitialData,
    pub output: OutputConfig,
}

const KEYS: &[&str] = &[
    "mesh.nx",
    "mesh.ny",
    "mesh.lx",
    "mesh.ly",
    "mesh.dirichlet_sides",
    "constitutive.p",
    "constitutive.delta",
    "constitutive.sigma0.shape",
    "constitutive.sigma0.params",
    "constitutive.kappa.shape",
    "constitutive.kappa.params",
    "constitutive.eta",
    "constitutive.eta1",
    "constitutive.g",
    "constitutive.h",
    "coupling.t_final",
    "coupling.steps",
    "coupling.eps_schedule",
    "coupling.fp_rtol",
    "coupling.fp_max_iter",
    "coupling.omega",
    "coupling.kacanov_rtol",
    "coupling.kacanov_max_iter",
    "coupling.kacanov_linear_rtol",
    "coupling.linear_rtol",
    "coupling.linear_max_iter",
    "coupling.q",
    "coupling.r",
    "coupling.lambda",
    "coupling.lumped",
    "coupling.warm_start",
    "boundary.kind",
    "boundary.left",
    "boundary.right",
    "boundary.bottom",
    "boundary.top",
    "boundary.a",
    "boundary.b",
    "boundary.t_ramp",
    "initial.u0",
    "initial.projection",
    "output.dir",
    "output.formats",
    "output.stride",
];

struct Entry {
    line: usize,
    value: String,
}

struct Doc {
    entries: BTreeMap<String, Entry>,
    issues: Vec<ConfigIssue>,
}

impl Doc {
    fn read(text: &str) -> Doc {
        let mut doc = Doc {
            entries: BTreeMap::new(),
            issues: Vec::new(),
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                doc.issue(Some(line), format!("expected 'section.key = value', found '{content}'"));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                doc.issue(Some(line), format!("unknown key '{key}'"));
                continue;
            }
            if let Some(prev) = doc.entries.get(key) {
                let msg = format!("duplicate key '{key}' (first set on line {})", prev.line);
                doc.issue(Some(line), msg);
                continue;
            }
            doc.entries.insert(
                key.to_string(),
                Entry {
                    line,
                    value: value.to_string(),
                },
            );
        }
        doc
    }

    fn issue(&mut self, line: Option<usize>, message: String) {
        self.issues.push(ConfigIssue { line, message });
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    /// Parses `key` with `parse`; falls back to `default`, or reports a
    /// missing key when there is none.
    fn value<T>(&mut self, key: &str, default: Option<T>, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Option<T> {
        match self.entries.get(key) {
            Some(e) => {
                let line = e.line;
                match parse(&e.value) {
                    Ok(v) => Some(v),
                    Err(msg) => {
                        self.issue(Some(line), format!("{key}: {msg}"));
                        None
                    }
                }
            }
            None => {
                if default.is_none() {
                    self.issue(None, format!("missing required key '{key}'"));
                }
                default
            }
        }
    }

    fn f64(&mut self, key: &str, default: Option<f64>) -> Option<f64> {
        self.value(key, default, parse_f64)
    }

    fn usize(&mut self, key: &str, default: Option<usize>) -> Option<usize> {
        self.value(key, default, |s| s.parse::<usize>().map_err(|_| format!("expected a non-negative integer, found '{s}'")))
    }

    fn bool(&mut self, key: &str, default: bool) -> bool {
        self.value(key, Some(default), |s| match s {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(format!("expected true or false, found '{s}'")),
        })
        .unwrap_or(default)
    }

    fn f64_list(&mut self, key: &str, default: Option<Vec<f64>>) -> Option<Vec<f64>> {
        self.value(key, default, |s| split_list(s).into_iter().map(parse_f64).collect())
    }

    /// Attaches module-level validation messages to the line of the key
    /// they name, falling back to the first line of the section.
    fn attach(&mut self, section: &str, messages: Vec<String>) {
        for msg in messages {
            let token = msg.split([' ', ':', '=']).next().unwrap_or("");
            let line = [format!("{section}.{token}"), format!("{section}.{token}.shape")]
                .iter()
                .find_map(|k| self.line(k))
                .or_else(|| {
                    self.entries
                        .iter()
                        .filter(|(k, _)| k.starts_with(&format!("{section}.")))
                        .map(|(_, e)| e.line)
                        .min()
                });
            self.issue(line, format!("{section}: {msg}"));
        }
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("expected a number, found '{}'", s.trim()))
}

fn split_list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect()
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut doc = Doc::read(text);

    let mesh = MeshConfig {
        nx: doc.usize("mesh.nx", None).unwrap_or(1),
        ny: doc.usize("mesh.ny", None).unwrap_or(1),
        lx: doc.f64("mesh.lx", Some(1.0)).unwrap_or(1.0),
        ly: doc.f64("mesh.ly", Some(1.0)).unwrap_or(1.0),
        dirichlet_sides: doc
            .value("mesh.dirichlet_sides", Some(vec![Side::Left, Side::Right]), |s| {
                split_list(s)
                    .into_iter()
                    .map(|t| Side::parse(t).ok_or_else(|| format!("unknown side '{t}'")))
                    .collect()
            })
            .unwrap_or_default(),
    };
    doc.attach("mesh", mesh.issues());

    let constitutive = parse_constitutive(&mut doc);
    let coupling = parse_coupling(&mut doc);
    let boundary = parse_boundary(&mut doc, &mesh.dirichlet_sides);
    let initial = parse_initial(&mut doc);

    let output = OutputConfig {
        dir: doc.value("output.dir", Some(None), |s| Ok(Some(PathBuf::from(s)))).flatten(),
        formats: doc
            .value("output.formats", Some(vec![OutputFormat::Csv]), |s| {
                split_list(s)
                    .into_iter()
                    .map(|t| match t {
                        "csv" => Ok(OutputFormat::Csv),
                        "vtk" => Ok(OutputFormat::Vtk),
                        other => Err(format!("unknown format '{other}' (expected csv or vtk)")),
                    })
                    .collect()
            })
            .unwrap_or_default(),
        stride: doc.usize("output.stride", Some(1)).unwrap_or(1),
    };
    if output.stride == 0 {
        doc.attach("output", vec!["stride must be >= 1".to_string()]);
    }

    if doc.issues.is_empty() {
        Ok(RunConfig {
            mesh,
            constitutive,
            coupling,
            boundary,
            initial: initial.expect("initial data parsed without issues"),
            output,
        })
    } else {
        Err(Error::Parse { issues: doc.issues })
    }
}

fn parse_profile(doc: &mut Doc, name: &str) -> Profile {
    let shape_key = format!("constitutive.{name}.shape");
    let params_key = format!("constitutive.{name}.params");
    let shape = doc
        .value(&shape_key, Some("constant".to_string()), |s| Ok(s.to_string()))
        .unwrap_or_default();
    let Some(params) = doc.f64_list(&params_key, Some(vec![1.0])) else {
        return Profile::Constant(1.0);
    };
    match Profile::from_shape(&shape, &params) {
        Ok(p) => p,
        Err(msg) => {
            let line = doc.line(&params_key).or(doc.line(&shape_key));
            doc.issue(line, format!("constitutive.{name}: {msg}"));
            Profile::Constant(1.0)
        }
    }
}

fn parse_constitutive(doc: &mut Doc) -> ConstitutiveSpec {
    let p = doc.f64("constitutive.p", None).unwrap_or(2.0);
    let delta = doc.f64("constitutive.delta", Some(0.0)).unwrap_or(0.0);
    let sigma0 = parse_profile(doc, "sigma0");
    let kappa = parse_profile(doc, "kappa");
    let eta = doc.f64("constitutive.eta", Some(0.0)).unwrap_or(0.0);
    let eta1 = doc.f64("constitutive.eta1", Some(eta)).unwrap_or(eta);
    let g = doc.f64("constitutive.g", Some(1.0)).unwrap_or(1.0);
    let h = doc.f64("constitutive.h", Some(0.0)).unwrap_or(0.0);
    let spec = ConstitutiveSpec {
        p,
        delta,
        sigma0,
        kappa,
        eta1,
        eta: Eta::Constant(eta),
        a_coeff: None,
        g,
        h,
    };
    doc.attach("constitutive", spec.issues());
    spec
}

fn parse_coupling(doc: &mut Doc) -> CouplingConfig {
    let d = CouplingConfig::default();
    let mut c = d.clone();
    c.t_final = doc.f64("coupling.t_final", Some(d.t_final)).unwrap_or(d.t_final);
    c.steps = doc.usize("coupling.steps", Some(d.steps)).unwrap_or(d.steps);
    c.eps_schedule = doc
        .f64_list("coupling.eps_schedule", Some(d.eps_schedule.clone()))
        .unwrap_or(d.eps_schedule);
    c.fp_rtol = doc.f64("coupling.fp_rtol", Some(d.fp_rtol)).unwrap_or(d.fp_rtol);
    c.fp_max_iter = doc.usize("coupling.fp_max_iter", Some(d.fp_max_iter)).unwrap_or(d.fp_max_iter);
    c.omega = doc.f64("coupling.omega", Some(d.omega)).unwrap_or(d.omega);
    c.kacanov.rtol = doc.f64("coupling.kacanov_rtol", Some(d.kacanov.rtol)).unwrap_or(d.kacanov.rtol);
    c.kacanov.max_iter = doc
        .usize("coupling.kacanov_max_iter", Some(d.kacanov.max_iter))
        .unwrap_or(d.kacanov.max_iter);
    c.kacanov.linear_rtol = doc
        .f64("coupling.kacanov_linear_rtol", Some(d.kacanov.linear_rtol))
        .unwrap_or(d.kacanov.linear_rtol);
    c.linear.rtol = doc.f64("coupling.linear_rtol", Some(d.linear.rtol)).unwrap_or(d.linear.rtol);
    c.linear.max_iter = doc
        .usize("coupling.linear_max_iter", Some(d.linear.max_iter))
        .unwrap_or(d.linear.max_iter);
    c.kacanov.linear_max_iter = c.linear.max_iter;
    c.params.q = doc.f64("coupling.q", Some(d.params.q)).unwrap_or(d.params.q);
    c.params.r = doc.f64("coupling.r", Some(d.params.r)).unwrap_or(d.params.r);
    let lambda = lambda_from_q(c.params.q);
    c.params.lambda = doc.f64("coupling.lambda", Some(lambda)).unwrap_or(lambda);
    c.lumped = doc.bool("coupling.lumped", d.lumped);
    c.warm_start = doc.bool("coupling.warm_start", d.warm_start);
    doc.attach("coupling", c.issues());
    c
}

fn parse_boundary(doc: &mut Doc, sides: &[Side]) -> BoundaryData {
    let kind = doc
        .value("boundary.kind", Some("sides".to_string()), |s| match s {
            "sides" | "linear_x" | "ramp" => Ok(s.to_string()),
            other => Err(format!("unknown kind '{other}' (expected sides, linear_x or ramp)")),
        })
        .unwrap_or_default();
    let side_keys: Vec<String> = Side::ALL.iter().map(|s| format!("boundary.{s}")).collect();
    let used: Vec<&str> = match kind.as_str() {
        "linear_x" => vec!["boundary.a", "boundary.b"],
        "ramp" => side_keys.iter().map(String::as_str).chain(["boundary.t_ramp"]).collect(),
        _ => side_keys.iter().map(String::as_str).collect(),
    };
    let stray: Vec<(usize, String)> = doc
        .entries
        .iter()
        .filter(|(k, _)| k.starts_with("boundary.") && *k != "boundary.kind" && !used.contains(&k.as_str()))
        .map(|(k, e)| (e.line, k.clone()))
        .collect();
    for (line, key) in stray {
        doc.issue(Some(line), format!("{key} is not used by boundary kind '{kind}'"));
    }

    let mut values = BTreeMap::new();
    for side in Side::ALL {
        if let Some(v) = doc.f64(&format!("boundary.{side}"), Some(f64::NAN)).filter(|v| !v.is_nan()) {
            values.insert(side, v);
        }
    }
    let data = match kind.as_str() {
        "linear_x" => BoundaryData::LinearX {
            a: doc.f64("boundary.a", None).unwrap_or(0.0),
            b: doc.f64("boundary.b", None).unwrap_or(0.0),
        },
        "ramp" => BoundaryData::Ramp {
            values,
            t_ramp: doc.f64("boundary.t_ramp", None).unwrap_or(1.0),
        },
        _ => BoundaryData::Sides(values),
    };
    doc.attach("boundary", data.issues(sides));
    data
}

fn parse_initial(doc: &mut Doc) -> Option<InitialData> {
    let expr = doc.value("initial.u0", None, Expr::parse)?;
    let projection = doc
        .value("initial.projection", Some("nodal".to_string()), |s| match s {
            "nodal" | "element_average" => Ok(s.to_string()),
            other => Err(format!("unknown projection '{other}' (expected nodal or element_average)")),
        })?;
    Some(if projection == "element_average" {
        InitialData::ElementAverage(expr)
    } else {
        InitialData::Expression(expr)
    })
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Serializes every key, including defaults. Only configurations built
    /// from documents (constant `η`, named profile shapes) can be written.
    pub fn to_text(&self) -> Result<String> {
        let mut s = String::new();
        let m = &self.mesh;
        let sides: Vec<&str> = m.dirichlet_sides.iter().map(|s| s.name()).collect();
        let _ = writeln!(s, "mesh.nx = {}\nmesh.ny = {}", m.nx, m.ny);
        let _ = writeln!(s, "mesh.lx = {:?}\nmesh.ly = {:?}", m.lx, m.ly);
        let _ = writeln!(s, "mesh.dirichlet_sides = {}", sides.join(", "));

        let c = &self.constitutive;
        let Eta::Constant(eta) = c.eta else {
            return Err(Error::Config("a custom loss factor cannot be serialized".to_string()));
        };
        if c.a_coeff.is_some() {
            return Err(Error::Config("a custom flux coefficient cannot be serialized".to_string()));
        }
        let _ = writeln!(s, "constitutive.p = {:?}\nconstitutive.delta = {:?}", c.p, c.delta);
        for (name, profile) in [("sigma0", &c.sigma0), ("kappa", &c.kappa)] {
            if matches!(profile, Profile::Custom { .. }) {
                return Err(Error::Config(format!("a custom {name} profile cannot be serialized")));
            }
            let _ = writeln!(s, "constitutive.{name}.shape = {}", profile.shape_name());
            let _ = writeln!(s, "constitutive.{name}.params = {}", join(&profile.params()));
        }
        let _ = writeln!(s, "constitutive.eta = {eta:?}\nconstitutive.eta1 = {:?}", c.eta1);
        let _ = writeln!(s, "constitutive.g = {:?}\nconstitutive.h = {:?}", c.g, c.h);

        let k = &self.coupling;
        let _ = writeln!(s, "coupling.t_final = {:?}\ncoupling.steps = {}", k.t_final, k.steps);
        let _ = writeln!(s, "coupling.eps_schedule = {}", join(&k.eps_schedule));
        let _ = writeln!(s, "coupling.fp_rtol = {:?}\ncoupling.fp_max_iter = {}", k.fp_rtol, k.fp_max_iter);
        let _ = writeln!(s, "coupling.omega = {:?}", k.omega);
        let _ = writeln!(s, "coupling.kacanov_rtol = {:?}", k.kacanov.rtol);
        let _ = writeln!(s, "coupling.kacanov_max_iter = {}", k.kacanov.max_iter);
        let _ = writeln!(s, "coupling.kacanov_linear_rtol = {:?}", k.kacanov.linear_rtol);
        let _ = writeln!(s, "coupling.linear_rtol = {:?}", k.linear.rtol);
        let _ = writeln!(s, "coupling.linear_max_iter = {}", k.linear.max_iter);
        let _ = writeln!(s, "coupling.q = {:?}\ncoupling.r = {:?}", k.params.q, k.params.r);
        let _ = writeln!(s, "coupling.lambda = {:?}", k.params.lambda);
        let _ = writeln!(s, "coupling.lumped = {}\ncoupling.warm_start = {}", k.lumped, k.warm_start);

        let write_sides = |s: &mut String, values: &BTreeMap<Side, f64>| {
            for (side, v) in values {
                let _ = writeln!(s, "boundary.{side} = {v:?}");
            }
        };
        match &self.boundary {
            BoundaryData::Sides(values) => {
                let _ = writeln!(s, "boundary.kind = sides");
                write_sides(&mut s, values);
            }
            BoundaryData::LinearX { a, b } => {
                let _ = writeln!(s, "boundary.kind = linear_x\nboundary.a = {a:?}\nboundary.b = {b:?}");
            }
            BoundaryData::Ramp { values, t_ramp } => {
                let _ = writeln!(s, "boundary.kind = ramp");
                write_sides(&mut s, values);
                let _ = writeln!(s, "boundary.t_ramp = {t_ramp:?}");
            }
        }

        let (expr, projection) = match &self.initial {
            InitialData::Expression(e) => (e, "nodal"),
            InitialData::ElementAverage(e) => (e, "element_average"),
        };
        let _ = writeln!(s, "initial.u0 = {expr}\ninitial.projection = {projection}");

        let o = &self.output;
        if let Some(dir) = &o.dir {
            let _ = writeln!(s, "output.dir = {}", dir.display());
        }
        let formats: Vec<&str> = o.formats.iter().map(|f| f.name()).collect();
        let _ = writeln!(s, "output.formats = {}\noutput.stride = {}", formats.join(", "), o.stride);
        Ok(s)
    }
}
