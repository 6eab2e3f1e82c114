//! The sectioned `key = value` run configuration.
//!
//! ```text
//! seed = 42
//!
//! [potential]
//! gamma = 1
//! mu = 0.2
//! delta = 0
//!
//! [curve]
//! kind = ring
//! nodes = 256
//!
//! [time]
//! dt = 1e-3
//! t_end = 0.5
//! output_every = 50
//! ```
//!
//! `#` starts a comment. Keys are validated as they are read; unknown sections
//! and keys are rejected.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use vortexlab_core::dynamics::SignConvention;
use vortexlab_core::geometry::{CurveKind, MIN_NODES};
use vortexlab_core::kernel::{eta_min, PotentialParams, DELTA_MAX};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Debug, PartialEq)]
pub enum CurveSource {
    Seed {
        kind: CurveKind,
        nodes: usize,
        scale: f64,
        amplitude: f64,
    },
    /// Path as written in the file, and the same path resolved against the
    /// directory of the configuration.
    File { written: String, resolved: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    pub output_every: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EtaSetting {
    Auto,
    Value(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub potential: Option<PotentialParams>,
    pub curve: Option<CurveSource>,
    pub time: Option<TimeSection>,
    pub mollifier_h: Option<f64>,
    pub eta: EtaSetting,
    pub directory: PathBuf,
    pub prefix: String,
    pub sign_convention: SignConvention,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: DEFAULT_SEED,
            potential: None,
            curve: None,
            time: None,
            mollifier_h: None,
            eta: EtaSetting::Auto,
            directory: PathBuf::from("."),
            prefix: "vortexlab".to_owned(),
            sign_convention: SignConvention::Field,
        }
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("potential", &["gamma", "mu", "delta"]),
    ("curve", &["kind", "nodes", "scale", "amplitude", "file"]),
    ("time", &["dt", "t_end", "output_every"]),
    ("field", &["mollifier_h"]),
    ("bounds", &["eta"]),
    ("output", &["directory", "prefix"]),
    ("convention", &["sign_convention"]),
];

type Raw = BTreeMap<String, BTreeMap<String, (usize, String)>>;

fn tokenize(text: &str) -> Result<Raw, ConfigError> {
    let mut raw = Raw::new();
    raw.insert(String::new(), BTreeMap::new());
    let mut section = String::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return err(format!("line {lineno}: malformed section header"));
            };
            let name = name.trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return err(format!("line {lineno}: unknown section [{name}]"));
            }
            if raw.contains_key(name) {
                return err(format!("line {lineno}: section [{name}] appears twice"));
            }
            section = name.to_owned();
            raw.insert(section.clone(), BTreeMap::new());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return err(format!("line {lineno}: expected `key = value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        let known = if section.is_empty() {
            key == "seed"
        } else {
            SECTIONS
                .iter()
                .find(|(s, _)| *s == section)
                .is_some_and(|(_, keys)| keys.contains(&key))
        };
        if !known {
            let place = if section.is_empty() {
                "at top level".to_owned()
            } else {
                format!("in [{section}]")
            };
            return err(format!("line {lineno}: unknown key `{key}` {place}"));
        }
        let value = value.trim_matches('"').to_owned();
        let entries = raw.get_mut(&section).expect("section inserted above");
        if entries.insert(key.to_owned(), (lineno, value)).is_some() {
            return err(format!("line {lineno}: duplicate key `{key}`"));
        }
    }
    Ok(raw)
}

struct Section<'a> {
    name: &'a str,
    entries: Option<&'a BTreeMap<String, (usize, String)>>,
}

impl Section<'_> {
    fn present(&self) -> bool {
        self.entries.is_some()
    }

    fn get_str(&self, key: &str) -> Option<&str> {
        self.entries?.get(key).map(|(_, v)| v.as_str())
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        let Some((line, v)) = self.entries.and_then(|e| e.get(key)) else {
            return Ok(None);
        };
        v.parse().map(Some).map_err(|_| {
            ConfigError(format!(
                "line {line}: cannot parse `{key} = {v}` in [{}]",
                self.name
            ))
        })
    }

    fn require<T: FromStr>(&self, key: &str, required: &str) -> Result<T, ConfigError> {
        match self.parse(key)? {
            Some(v) => Ok(v),
            None => err(format!(
                "[{}] is missing `{key}` (required keys: {required})",
                self.name
            )),
        }
    }
}

impl RunConfig {
    /// Read and validate a configuration file. Relative paths inside it are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let raw = tokenize(text)?;
        let section = |name: &'static str| Section {
            name,
            entries: raw.get(name),
        };
        let mut cfg = RunConfig::default();

        let top = Section {
            name: "top level",
            entries: raw.get(""),
        };
        if let Some(seed) = top.parse::<u64>("seed")? {
            cfg.seed = seed;
        }

        let pot = section("potential");
        if pot.present() {
            let gamma: f64 = pot.require("gamma", "gamma, mu")?;
            let mu: f64 = pot.require("mu", "gamma, mu")?;
            let delta: f64 = pot.parse("delta")?.unwrap_or(0.0);
            if !(gamma > 0.0 && gamma.is_finite()) {
                return err("gamma must be finite and > 0");
            }
            if !(mu > 0.0 && mu.is_finite()) {
                return err("mu must be finite and > 0");
            }
            if !(0.0..=DELTA_MAX).contains(&delta) {
                return err(format!("delta must lie in [0, 4/5], got {delta}"));
            }
            cfg.potential = Some(
                PotentialParams::new(gamma, mu, delta).map_err(|e| ConfigError(e.to_string()))?,
            );
        }

        let curve = section("curve");
        if curve.present() {
            cfg.curve = Some(parse_curve(&curve, base_dir)?);
        }

        let time = section("time");
        if time.present() {
            let required = "dt, t_end";
            let dt: f64 = time.require("dt", required)?;
            let t_end: f64 = time.require("t_end", required)?;
            let output_every: usize = time.parse("output_every")?.unwrap_or(1);
            if !(dt > 0.0 && dt.is_finite()) {
                return err("dt must be finite and > 0");
            }
            if !(t_end.is_finite() && t_end >= dt) {
                return err("t_end must be finite and >= dt");
            }
            if output_every == 0 {
                return err("output_every must be >= 1");
            }
            cfg.time = Some(TimeSection {
                dt,
                t_end,
                output_every,
            });
        }

        let field = section("field");
        if let Some(h) = field.parse::<f64>("mollifier_h")? {
            if !(h > 0.0 && h.is_finite()) {
                return err("mollifier_h must be finite and > 0");
            }
            cfg.mollifier_h = Some(h);
        }

        let bounds = section("bounds");
        match bounds.get_str("eta") {
            None | Some("auto") => {}
            Some(_) => {
                let eta: f64 = bounds.require("eta", "eta")?;
                if !(eta > 0.0 && eta.is_finite()) {
                    return err("eta must be finite and > 0, or \"auto\"");
                }
                if let Some(p) = &cfg.potential {
                    let lo = eta_min(p);
                    if eta < lo {
                        return err(format!(
                            "eta must be at least max(mu^(-6/(4+delta)), mu^(-10/(4+delta))) = {lo}"
                        ));
                    }
                }
                cfg.eta = EtaSetting::Value(eta);
            }
        }

        let output = section("output");
        if let Some(dir) = output.get_str("directory") {
            cfg.directory = PathBuf::from(dir);
        }
        if let Some(prefix) = output.get_str("prefix") {
            if prefix.is_empty() || prefix.contains(['/', '\\']) {
                return err("prefix must be a non-empty file name stem");
            }
            cfg.prefix = prefix.to_owned();
        }

        let conv = section("convention");
        if let Some(s) = conv.get_str("sign_convention") {
            cfg.sign_convention = s.parse().map_err(|_| {
                ConfigError(format!(
                    "sign_convention must be `field` or `literal`, got `{s}`"
                ))
            })?;
        }
        Ok(cfg)
    }

    /// Serialize to the same format; [`RunConfig::parse`] of the result gives
    /// back an equal configuration.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(p) = &self.potential {
            let _ = write!(
                s,
                "\n[potential]\ngamma = {}\nmu = {}\ndelta = {}\n",
                p.gamma(),
                p.mu(),
                p.delta()
            );
        }
        match &self.curve {
            Some(CurveSource::Seed {
                kind,
                nodes,
                scale,
                amplitude,
            }) => {
                let _ = write!(
                    s,
                    "\n[curve]\nkind = {}\nnodes = {nodes}\nscale = {scale}\namplitude = {amplitude}\n",
                    kind.as_str()
                );
            }
            Some(CurveSource::File { written, .. }) => {
                let _ = write!(s, "\n[curve]\nfile = {written}\n");
            }
            None => {}
        }
        if let Some(t) = &self.time {
            let _ = write!(
                s,
                "\n[time]\ndt = {}\nt_end = {}\noutput_every = {}\n",
                t.dt, t.t_end, t.output_every
            );
        }
        if let Some(h) = self.mollifier_h {
            let _ = write!(s, "\n[field]\nmollifier_h = {h}\n");
        }
        match self.eta {
            EtaSetting::Auto => s.push_str("\n[bounds]\neta = auto\n"),
            EtaSetting::Value(v) => {
                let _ = write!(s, "\n[bounds]\neta = {v}\n");
            }
        }
        let _ = write!(
            s,
            "\n[output]\ndirectory = {}\nprefix = {}\n",
            self.directory.display(),
            self.prefix
        );
        let _ = write!(
            s,
            "\n[convention]\nsign_convention = {}\n",
            self.sign_convention.as_str()
        );
        s
    }

    pub fn require_potential(&self) -> Result<PotentialParams, ConfigError> {
        self.potential.ok_or_else(|| {
            ConfigError(
                "missing [potential] section (required keys: gamma, mu; optional: delta)".into(),
            )
        })
    }

    pub fn require_curve(&self) -> Result<&CurveSource, ConfigError> {
        self.curve.as_ref().ok_or_else(|| {
            ConfigError("missing [curve] section (required keys: kind, nodes; or file)".into())
        })
    }

    pub fn require_time(&self) -> Result<TimeSection, ConfigError> {
        self.time.ok_or_else(|| {
            ConfigError(
                "missing [time] section (required keys: dt, t_end; optional: output_every)".into(),
            )
        })
    }

    /// The split radius, with `auto` resolved to the smallest admissible value.
    pub fn resolved_eta(&self) -> Result<f64, ConfigError> {
        let p = self.require_potential()?;
        Ok(match self.eta {
            EtaSetting::Auto => eta_min(&p),
            EtaSetting::Value(v) => v,
        })
    }

    /// Output directory, with `VORTEXLAB_OUTPUT_DIR` taking precedence.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os("VORTEXLAB_OUTPUT_DIR") {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.directory.clone(),
        }
    }
}

fn parse_curve(curve: &Section<'_>, base_dir: &Path) -> Result<CurveSource, ConfigError> {
    if let Some(file) = curve.get_str("file") {
        if ["kind", "nodes", "scale", "amplitude"]
            .iter()
            .any(|k| curve.get_str(k).is_some())
        {
            return err(
                "[curve] takes either `file` or `kind`/`nodes`/`scale`/`amplitude`, not both",
            );
        }
        let resolved = base_dir.join(file);
        if !resolved.is_file() {
            return err(format!("curve file {} does not exist", resolved.display()));
        }
        return Ok(CurveSource::File {
            written: file.to_owned(),
            resolved,
        });
    }
    let required = "kind, nodes; optional: scale, amplitude";
    let kind_str: String = curve.require("kind", required)?;
    let kind: CurveKind = kind_str.parse().map_err(|_| {
        ConfigError(format!(
            "kind must be ring, perturbed_ring or trefoil, got `{kind_str}`"
        ))
    })?;
    let nodes: usize = curve.require("nodes", required)?;
    let scale: f64 = curve.parse("scale")?.unwrap_or(1.0);
    let amplitude: f64 = curve.parse("amplitude")?.unwrap_or(0.0);
    if nodes < MIN_NODES {
        return err(format!("nodes must be at least {MIN_NODES}"));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return err("scale must be finite and > 0");
    }
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return err("amplitude must be finite and >= 0");
    }
    if kind == CurveKind::PerturbedRing && amplitude >= scale {
        return err("amplitude must be smaller than scale for a perturbed ring");
    }
    Ok(CurveSource::Seed {
        kind,
        nodes,
        scale,
        amplitude,
    })
}
