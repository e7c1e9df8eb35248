//! INI run configuration.
//!
//! ```ini
//! [grid]
//! a = -2
//! b = 2
//! c = -2
//! d = 2
//! M = 128
//! N = 128
//!
//! [physics]
//! epsilon = 0.1
//! Dpp = 0.2
//! Dqq = 0.2
//! Dpq = 0.05
//! gamma = 1
//!
//! [initial]
//! a11 = -1
//! a22 = -1
//! a12 = 0
//! x0 = 0.1
//! xi0 = -0.2
//!
//! [potential]
//! V = harmonic(1, 1)
//!
//! [run]
//! dt = 0.00390625
//! T = 0.5
//! ```
//!
//! Optional keys: `physics.allow_indefinite_diffusion`, `initial.renormalize`,
//! `run.friction` (`collocation` | `galerkin`), `run.record_every`,
//! `output.dir`, `output.snapshot_every`, `output.record_local`, `output.heatmap`.
//! Any other key is rejected.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;

use crate::error::{Result, WpfpError};
use crate::grid::{build_grid, GaussianIC};
use crate::potential::{ExternalPotential, PotentialSpec};
use crate::splitting::{FrictionScheme, PhysicalParams, RunConfig};

const SCHEMA: &[(&str, &[&str])] = &[
    ("grid", &["a", "b", "c", "d", "M", "N"]),
    ("physics", &["epsilon", "Dpp", "Dqq", "Dpq", "gamma", "allow_indefinite_diffusion"]),
    ("initial", &["a11", "a22", "a12", "x0", "xi0", "renormalize"]),
    ("potential", &["V"]),
    ("run", &["dt", "T", "friction", "record_every"]),
    ("output", &["dir", "snapshot_every", "record_local", "heatmap"]),
];

/// Output options that do not affect the numerics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputOptions {
    pub dir: Option<PathBuf>,
    pub snapshot_every: Option<usize>,
    pub record_local: bool,
    pub heatmap: bool,
}

#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub run: RunConfig,
    pub output: OutputOptions,
}

/// 1-based line of `key` inside `[section]`, for diagnostics.
fn locate(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in src.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = name.trim().to_string();
        } else if current == section && t.split(['=', ':']).next().map(str::trim) == Some(key) {
            return Some(i + 1);
        }
    }
    None
}

struct Table<'a> {
    src: &'a str,
    values: HashMap<(String, String), String>,
}

impl Table<'_> {
    fn err<T>(&self, section: &str, key: &str, msg: impl std::fmt::Display) -> Result<T> {
        let at = match locate(self.src, section, key) {
            Some(l) => format!("line {l}, "),
            None => String::new(),
        };
        Err(WpfpError::Config(format!("{at}[{section}] {key}: {msg}")))
    }

    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.values.get(&(section.to_string(), key.to_string())).map(String::as_str)
    }

    fn opt<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some(v) => match v.parse() {
                Ok(x) => Ok(Some(x)),
                Err(e) => self.err(section, key, format!("cannot parse '{v}': {e}")),
            },
        }
    }

    fn req<T: FromStr>(&self, section: &str, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.opt(section, key)? {
            Some(v) => Ok(v),
            None => Err(WpfpError::Config(format!("[{section}] {key}: missing required key"))),
        }
    }

    fn flag(&self, section: &str, key: &str) -> Result<bool> {
        Ok(self.opt(section, key)?.unwrap_or(false))
    }
}

fn parse_call(expr: &str) -> Option<(&str, Vec<&str>)> {
    let expr = expr.trim();
    let open = expr.find('(')?;
    let inner = expr[open + 1..].strip_suffix(')')?;
    let args = if inner.trim().is_empty() { Vec::new() } else { inner.split(',').map(str::trim).collect() };
    Some((expr[..open].trim(), args))
}

/// Parses a whitelisted potential expression such as `harmonic(1, 1)`.
pub fn parse_potential(expr: &str) -> Result<PotentialSpec> {
    let Some((name, args)) = parse_call(expr) else {
        return Err(WpfpError::Config(format!("potential '{expr}' is not of the form name(args)")));
    };
    let nums: Vec<f64> = args
        .iter()
        .map(|a| a.parse::<f64>().map_err(|e| WpfpError::Config(format!("potential argument '{a}': {e}"))))
        .collect::<Result<_>>()?;
    let arity = |n: usize| -> Result<()> {
        if nums.len() == n {
            Ok(())
        } else {
            Err(WpfpError::Config(format!("{name} takes {n} argument(s), got {}", nums.len())))
        }
    };
    let spec = match name {
        "polynomial" => PotentialSpec::External(ExternalPotential::Polynomial(nums.clone())),
        "harmonic" => {
            arity(2)?;
            PotentialSpec::External(ExternalPotential::Harmonic { c2: nums[0], c1: nums[1] })
        }
        "double_well" => {
            arity(0)?;
            PotentialSpec::External(ExternalPotential::DoubleWell)
        }
        "harmonic_plus_sine" => {
            arity(1)?;
            PotentialSpec::External(ExternalPotential::HarmonicPlusSine { amplitude: nums[0] })
        }
        "arctan_step" => {
            arity(1)?;
            PotentialSpec::External(ExternalPotential::ArctanStep { steepness: nums[0] })
        }
        "self_consistent" => {
            arity(1)?;
            PotentialSpec::self_consistent(nums[0])?
        }
        other => return Err(WpfpError::Config(format!("unknown potential '{other}'"))),
    };
    spec.validate()?;
    Ok(spec)
}

/// Inverse of [`parse_potential`].
pub fn format_potential(spec: &PotentialSpec) -> String {
    match spec {
        PotentialSpec::SelfConsistent { alpha } => format!("self_consistent({alpha})"),
        PotentialSpec::External(v) => match v {
            ExternalPotential::Polynomial(c) => {
                format!("polynomial({})", c.iter().map(f64::to_string).collect::<Vec<_>>().join(", "))
            }
            ExternalPotential::Harmonic { c2, c1 } => format!("harmonic({c2}, {c1})"),
            ExternalPotential::DoubleWell => "double_well()".into(),
            ExternalPotential::HarmonicPlusSine { amplitude } => {
                format!("harmonic_plus_sine({amplitude})")
            }
            ExternalPotential::ArctanStep { steepness } => format!("arctan_step({steepness})"),
        },
    }
}

/// Parses and validates configuration text.
pub fn parse_config(src: &str) -> Result<LoadedConfig> {
    let ini = Ini::load_from_str(src)
        .map_err(|e| WpfpError::Config(format!("line {}, column {}: {}", e.line, e.col, e.msg)))?;
    let known: HashMap<&str, HashSet<&str>> =
        SCHEMA.iter().map(|(s, keys)| (*s, keys.iter().copied().collect())).collect();
    let mut values = HashMap::new();
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if let Some((k, _)) = props.iter().next() {
                return Err(WpfpError::Config(format!("key '{k}' appears outside any section")));
            }
            continue;
        };
        let Some(keys) = known.get(section) else {
            return Err(WpfpError::Config(format!("unknown section [{section}]")));
        };
        for (k, v) in props.iter() {
            let table = Table { src, values: HashMap::new() };
            if !keys.contains(k) {
                return table.err(section, k, "unknown key");
            }
            if values.insert((section.to_string(), k.to_string()), v.to_string()).is_some() {
                return table.err(section, k, "duplicate key");
            }
        }
    }
    let t = Table { src, values };

    let grid = build_grid(
        t.req("grid", "a")?,
        t.req("grid", "b")?,
        t.req("grid", "c")?,
        t.req("grid", "d")?,
        t.req("grid", "M")?,
        t.req("grid", "N")?,
    )?;
    let potential = match t.raw("potential", "V") {
        Some(expr) => parse_potential(expr).or_else(|e| t.err("potential", "V", e))?,
        None => return Err(WpfpError::Config("[potential] V: missing required key".into())),
    };
    let params = PhysicalParams {
        epsilon: t.req("physics", "epsilon")?,
        dpp: t.req("physics", "Dpp")?,
        dqq: t.req("physics", "Dqq")?,
        dpq: t.req("physics", "Dpq")?,
        gamma: t.req("physics", "gamma")?,
        potential,
        allow_indefinite_diffusion: t.flag("physics", "allow_indefinite_diffusion")?,
    };
    let ic = GaussianIC {
        a11: t.req("initial", "a11")?,
        a22: t.req("initial", "a22")?,
        a12: t.opt("initial", "a12")?.unwrap_or(0.0),
        x0: t.req("initial", "x0")?,
        xi0: t.req("initial", "xi0")?,
    };
    let mut run = RunConfig::new(grid, params, ic, t.req("run", "dt")?, t.req("run", "T")?);
    run.renormalize = t.flag("initial", "renormalize")?;
    run.friction = match t.raw("run", "friction") {
        None | Some("collocation") => FrictionScheme::Collocation,
        Some("galerkin") => FrictionScheme::Galerkin,
        Some(other) => return t.err("run", "friction", format!("expected collocation or galerkin, got '{other}'")),
    };
    if let Some(k) = t.opt("run", "record_every")? {
        run.record_every = k;
    }
    let output = OutputOptions {
        dir: t.raw("output", "dir").map(PathBuf::from),
        snapshot_every: t.opt("output", "snapshot_every")?,
        record_local: t.flag("output", "record_local")?,
        heatmap: t.flag("output", "heatmap")?,
    };
    run.snapshot_every = output.snapshot_every;
    run.record_local = output.record_local;
    run.validate()?;
    Ok(LoadedConfig { run, output })
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let src = std::fs::read_to_string(path).map_err(|source| WpfpError::Io { path: path.to_path_buf(), source })?;
    parse_config(&src).map_err(|e| match e {
        WpfpError::Config(msg) => WpfpError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Serializes a run configuration so that [`parse_config`] reproduces it.
pub fn to_ini_string(run: &RunConfig, output: &OutputOptions) -> String {
    let g = &run.grid;
    let p = &run.params;
    let mut ini = Ini::new();
    ini.with_section(Some("grid"))
        .set("a", g.a.to_string())
        .set("b", g.b.to_string())
        .set("c", g.c.to_string())
        .set("d", g.d.to_string())
        .set("M", g.nx.to_string())
        .set("N", g.nxi.to_string());
    let mut physics = ini.with_section(Some("physics"));
    physics
        .set("epsilon", p.epsilon.to_string())
        .set("Dpp", p.dpp.to_string())
        .set("Dqq", p.dqq.to_string())
        .set("Dpq", p.dpq.to_string())
        .set("gamma", p.gamma.to_string());
    if p.allow_indefinite_diffusion {
        physics.set("allow_indefinite_diffusion", "true");
    }
    let mut initial = ini.with_section(Some("initial"));
    initial
        .set("a11", run.ic.a11.to_string())
        .set("a22", run.ic.a22.to_string())
        .set("a12", run.ic.a12.to_string())
        .set("x0", run.ic.x0.to_string())
        .set("xi0", run.ic.xi0.to_string());
    if run.renormalize {
        initial.set("renormalize", "true");
    }
    ini.with_section(Some("potential")).set("V", format_potential(&p.potential));
    let mut r = ini.with_section(Some("run"));
    r.set("dt", run.dt.to_string()).set("T", run.t_final.to_string());
    if run.friction == FrictionScheme::Galerkin {
        r.set("friction", "galerkin");
    }
    if run.record_every != 1 {
        r.set("record_every", run.record_every.to_string());
    }
    let mut o = ini.with_section(Some("output"));
    if let Some(dir) = &output.dir {
        o.set("dir", dir.display().to_string());
    }
    if let Some(k) = output.snapshot_every {
        o.set("snapshot_every", k.to_string());
    }
    if output.record_local {
        o.set("record_local", "true");
    }
    if output.heatmap {
        o.set("heatmap", "true");
    }
    let mut buf = Vec::new();
    ini.write_to(&mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("ini output is UTF-8")
}
