//! Plain-text curve and field files, CSV outputs and the JSON bound report.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use vortexlab_core::dynamics::Frame;
use vortexlab_core::field::{Particle, StretchingBoundReport, VorticityField};
use vortexlab_core::geometry::ClosedCurve;
use vortexlab_core::gronwall::SandboxSample;
use vortexlab_core::Vec3;

pub const SNAPSHOT_HEADER: &str = "step,t,node,x,y,z";
pub const DIAG_HEADER: &str = "step,t,length,min_sep,max_curvature,mean_speed,max_speed";
pub const SANDBOX_HEADER: &str = "t,E,envelope,margin";

#[derive(Debug)]
pub enum FormatError {
    Io(io::Error),
    Parse { line: usize, msg: String },
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatError::Io(e) => write!(f, "{e}"),
            FormatError::Parse { line, msg } => write!(f, "line {line}: {msg}"),
        }
    }
}

impl std::error::Error for FormatError {}

impl From<io::Error> for FormatError {
    fn from(e: io::Error) -> Self {
        FormatError::Io(e)
    }
}

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError::Parse {
        line,
        msg: msg.into(),
    })
}

/// 17 significant digits: enough to round-trip any `f64`.
pub struct Full(pub f64);

impl fmt::Display for Full {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.16e}", self.0)
    }
}

fn parse_floats<const K: usize>(line: &str, lineno: usize) -> Result<[f64; K], FormatError> {
    let mut out = [0.0; K];
    let mut it = line.split_whitespace();
    for slot in out.iter_mut() {
        let Some(tok) = it.next() else {
            return parse_err(lineno, format!("expected {K} numbers"));
        };
        *slot = match tok.parse() {
            Ok(v) => v,
            Err(_) => return parse_err(lineno, format!("not a number: `{tok}`")),
        };
    }
    if it.next().is_some() {
        return parse_err(lineno, format!("expected {K} numbers"));
    }
    Ok(out)
}

/// Non-blank lines with their 1-based line numbers.
fn content_lines(r: impl BufRead) -> impl Iterator<Item = Result<(usize, String), FormatError>> {
    r.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((i + 1, l))),
        Err(e) => Some(Err(e.into())),
    })
}

fn header_value<'a>(
    tok: Option<&'a str>,
    key: &str,
    lineno: usize,
) -> Result<&'a str, FormatError> {
    match tok
        .and_then(|t| t.strip_prefix(key))
        .and_then(|t| t.strip_prefix('='))
    {
        Some(v) => Ok(v),
        None => parse_err(lineno, format!("expected `{key}=<value>` in the header")),
    }
}

pub fn read_curve(r: impl BufRead) -> Result<ClosedCurve, FormatError> {
    let mut lines = content_lines(r);
    let Some(first) = lines.next() else {
        return parse_err(1, "empty curve file");
    };
    let (lineno, header) = first?;
    let n: usize = header_value(header.split_whitespace().next(), "N", lineno)?
        .parse()
        .or_else(|_| parse_err(lineno, "N must be a non-negative integer"))?;
    let mut nodes = Vec::with_capacity(n);
    let mut last = lineno;
    for l in lines {
        let (lineno, line) = l?;
        last = lineno;
        if nodes.len() == n {
            return parse_err(lineno, format!("more than N={n} nodes"));
        }
        nodes.push(Vec3::from_array(parse_floats::<3>(&line, lineno)?));
    }
    if nodes.len() != n {
        return parse_err(last, format!("expected {n} nodes, found {}", nodes.len()));
    }
    ClosedCurve::new(nodes).or_else(|e| parse_err(lineno, e.to_string()))
}

pub fn write_curve(mut w: impl Write, c: &ClosedCurve) -> io::Result<()> {
    writeln!(w, "N={}", c.len())?;
    for p in c.nodes() {
        writeln!(w, "{} {} {}", Full(p.x), Full(p.y), Full(p.z))?;
    }
    w.flush()
}

pub fn load_curve(path: &Path) -> Result<ClosedCurve, FormatError> {
    read_curve(BufReader::new(File::open(path)?))
}

pub fn read_field(r: impl BufRead) -> Result<VorticityField, FormatError> {
    let mut lines = content_lines(r);
    let Some(first) = lines.next() else {
        return parse_err(1, "empty field file");
    };
    let (lineno, header) = first?;
    let mut toks = header.split_whitespace();
    let m: usize = header_value(toks.next(), "M", lineno)?
        .parse()
        .or_else(|_| parse_err(lineno, "M must be a non-negative integer"))?;
    let h: f64 = header_value(toks.next(), "h", lineno)?
        .parse()
        .or_else(|_| parse_err(lineno, "h must be a number"))?;
    let mut particles = Vec::with_capacity(m);
    let mut last = lineno;
    for l in lines {
        let (lineno, line) = l?;
        last = lineno;
        if particles.len() == m {
            return parse_err(lineno, format!("more than M={m} particles"));
        }
        let [px, py, pz, wx, wy, wz] = parse_floats::<6>(&line, lineno)?;
        particles.push(Particle {
            position: Vec3::new(px, py, pz),
            weight: Vec3::new(wx, wy, wz),
        });
    }
    if particles.len() != m {
        return parse_err(
            last,
            format!("expected {m} particles, found {}", particles.len()),
        );
    }
    VorticityField::new(particles, h).or_else(|e| parse_err(lineno, e.to_string()))
}

pub fn write_field(mut w: impl Write, f: &VorticityField) -> io::Result<()> {
    writeln!(w, "M={} h={}", f.len(), Full(f.mollifier_h()))?;
    for q in f.particles() {
        let (p, v) = (q.position, q.weight);
        writeln!(
            w,
            "{} {} {} {} {} {}",
            Full(p.x),
            Full(p.y),
            Full(p.z),
            Full(v.x),
            Full(v.y),
            Full(v.z)
        )?;
    }
    w.flush()
}

pub fn load_field(path: &Path) -> Result<VorticityField, FormatError> {
    read_field(BufReader::new(File::open(path)?))
}

pub fn write_snapshot_header(w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "{SNAPSHOT_HEADER}")
}

pub fn write_snapshot_rows(w: &mut impl Write, f: &Frame) -> io::Result<()> {
    for (k, p) in f.curve.nodes().iter().enumerate() {
        writeln!(
            w,
            "{},{},{k},{},{},{}",
            f.step,
            Full(f.t),
            Full(p.x),
            Full(p.y),
            Full(p.z)
        )?;
    }
    Ok(())
}

pub fn write_diag_header(w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "{DIAG_HEADER}")
}

pub fn write_diag_row(w: &mut impl Write, f: &Frame) -> io::Result<()> {
    let d = &f.diagnostics;
    writeln!(
        w,
        "{},{},{},{},{},{},{}",
        f.step,
        Full(f.t),
        Full(d.length),
        Full(d.min_separation),
        Full(d.max_curvature),
        Full(f.mean_speed),
        Full(f.max_speed)
    )
}

pub fn write_sandbox_csv(mut w: impl Write, series: &[SandboxSample]) -> io::Result<()> {
    writeln!(w, "{SANDBOX_HEADER}")?;
    for s in series {
        writeln!(
            w,
            "{},{},{},{}",
            Full(s.t),
            Full(s.e),
            Full(s.envelope),
            Full(s.margin)
        )?;
    }
    w.flush()
}

/// Create `path` (and its parent directory) for buffered writing.
pub fn create(path: &Path) -> io::Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessJson {
    pub i: usize,
    pub j: usize,
    pub r: f64,
    pub k: f64,
    pub bound: f64,
}

/// Serialized form of a [`StretchingBoundReport`]. Non-finite numbers become `null`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReportJson {
    pub stretching: f64,
    pub bound: f64,
    pub ratio: Option<f64>,
    pub kappa1: f64,
    pub kappa2: f64,
    pub eta: f64,
    pub sigma: f64,
    pub enstrophy: f64,
    pub verdict: &'static str,
    pub witnesses: Vec<WitnessJson>,
    pub mollifier_h: f64,
    pub particles: usize,
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rosenhead_bound: Option<f64>,
    pub strain_trace_max: f64,
}

impl BoundReportJson {
    pub fn new(r: &StretchingBoundReport, field: &VorticityField, delta: f64) -> Self {
        BoundReportJson {
            stretching: r.stretching,
            bound: r.bound,
            ratio: r.ratio.is_finite().then_some(r.ratio),
            kappa1: r.kappa1,
            kappa2: r.kappa2,
            eta: r.eta,
            sigma: r.sigma,
            enstrophy: r.enstrophy,
            verdict: r.verdict.as_str(),
            witnesses: r
                .witnesses
                .iter()
                .map(|w| WitnessJson {
                    i: w.i,
                    j: w.j,
                    r: w.r,
                    k: w.k,
                    bound: w.bound,
                })
                .collect(),
            mollifier_h: field.mollifier_h(),
            particles: field.len(),
            delta,
            rosenhead_bound: r.rosenhead_bound,
            strain_trace_max: r.strain_trace_max,
        }
    }
}
