//! The subcommands. Each returns the process exit status.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use vortexlab_core::dynamics::{run_simulation, SimulationConfig, Trajectory};
use vortexlab_core::field::{stretching_bound_check, VorticityField};
use vortexlab_core::geometry::{seed_curve, ClosedCurve};
use vortexlab_core::gronwall::{gronwall_sandbox, GronwallParams};
use vortexlab_core::Error;

use crate::config::{ConfigError, CurveSource, RunConfig};
use crate::formats::{self, BoundReportJson};
use crate::verify::{self, Grade, Level, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_BLOW_UP: i32 = 2;
pub const EXIT_IO: i32 = 3;

fn config_failure(e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {e}");
    EXIT_FAILURE
}

fn io_failure(what: &Path, e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {}: {e}", what.display());
    EXIT_IO
}

pub fn snapshot_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir()
        .join(format!("{}_snapshots.csv", cfg.prefix))
}

pub fn diag_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir().join(format!("{}_diag.csv", cfg.prefix))
}

pub fn bound_report_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir().join(format!("{}_bound.json", cfg.prefix))
}

pub fn field_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir().join(format!("{}_field.txt", cfg.prefix))
}

enum CurveLoad {
    Config(ConfigError),
    Io(PathBuf, formats::FormatError),
}

fn load_curve(src: &CurveSource) -> Result<ClosedCurve, CurveLoad> {
    match src {
        CurveSource::Seed {
            kind,
            nodes,
            scale,
            amplitude,
        } => seed_curve(*kind, *nodes, *scale, *amplitude)
            .map_err(|e| CurveLoad::Config(ConfigError(e.to_string()))),
        CurveSource::File { resolved, .. } => {
            formats::load_curve(resolved).map_err(|e| CurveLoad::Io(resolved.clone(), e))
        }
    }
}

fn curve_from_config(cfg: &RunConfig) -> Result<ClosedCurve, i32> {
    let src = cfg.require_curve().map_err(config_failure)?;
    load_curve(src).map_err(|e| match e {
        CurveLoad::Config(e) => config_failure(e),
        CurveLoad::Io(path, e) => io_failure(&path, e),
    })
}

fn write_trajectory(cfg: &RunConfig, traj: &Trajectory) -> Result<(), (PathBuf, io::Error)> {
    let snap = snapshot_path(cfg);
    let diag = diag_path(cfg);
    let mut s = formats::create(&snap).map_err(|e| (snap.clone(), e))?;
    let mut d = formats::create(&diag).map_err(|e| (diag.clone(), e))?;
    let res = (|| {
        formats::write_snapshot_header(&mut s)?;
        formats::write_diag_header(&mut d)?;
        for f in &traj.frames {
            formats::write_snapshot_rows(&mut s, f)?;
            formats::write_diag_row(&mut d, f)?;
        }
        s.flush()?;
        d.flush()
    })();
    res.map_err(|e| (snap, e))
}

/// Run the filament scenario. 0 on completion, 2 on blow-up (files hold the
/// frames recorded before the abort), 3 on I/O failure.
pub fn simulate(cfg: &RunConfig) -> i32 {
    let (potential, time) = match (cfg.require_potential(), cfg.require_time()) {
        (Ok(p), Ok(t)) => (p, t),
        (Err(e), _) | (_, Err(e)) => return config_failure(e),
    };
    let curve = match curve_from_config(cfg) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let mut sim =
        match SimulationConfig::new(potential, curve, time.dt, time.t_end, time.output_every) {
            Ok(s) => s,
            Err(e) => return config_failure(e),
        };
    sim.sign_convention = cfg.sign_convention;

    let (traj, abort) = match run_simulation(&sim) {
        Ok(t) => (t, None),
        Err(a) => (a.partial, Some(a.error)),
    };
    for w in &traj.warnings {
        eprintln!("warning: step {} (t = {}): {:?}", w.step, w.t, w.issue);
    }
    if let Err((path, e)) = write_trajectory(cfg, &traj) {
        return io_failure(&path, e);
    }
    match abort {
        Some(e @ Error::BlowUp { .. }) => {
            eprintln!("error: {e}; {} frames written", traj.frames.len());
            EXIT_BLOW_UP
        }
        Some(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
        None => {
            if let Some(f) = traj.frames.last() {
                let d = &f.diagnostics;
                println!(
                    "step {} t = {}: length {:.12e}, min_sep {:.6e}, max_curvature {:.6e}, mean_speed {:.12e}, max_speed {:.12e}",
                    f.step, f.t, d.length, d.min_separation, d.max_curvature, f.mean_speed, f.max_speed
                );
            }
            EXIT_OK
        }
    }
}

/// Evaluate the stretching bound on a particle field and write the report.
/// 0 whatever the verdict; 3 if the field cannot be read or the report
/// cannot be written.
pub fn diagnose(cfg: &RunConfig, field_file: &Path) -> i32 {
    let (p, eta) = match (cfg.require_potential(), cfg.resolved_eta()) {
        (Ok(p), Ok(eta)) => (p, eta),
        (Err(e), _) | (_, Err(e)) => return config_failure(e),
    };
    let field = match formats::load_field(field_file) {
        Ok(f) => f,
        Err(e) => return io_failure(field_file, e),
    };
    let report = match stretching_bound_check(&field, &p, eta) {
        Ok(r) => r,
        Err(e) => return config_failure(e),
    };
    let json = BoundReportJson::new(&report, &field, p.delta());
    let text = serde_json::to_string_pretty(&json).expect("report serializes");
    let out = bound_report_path(cfg);
    let written = formats::create(&out).and_then(|mut w| {
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")?;
        w.flush()
    });
    if let Err(e) = written {
        return io_failure(&out, e);
    }
    // A closed pipe (`| head`) is not an error; the report file is written.
    let _ = writeln!(io::stdout().lock(), "{text}");
    eprintln!(
        "verdict {} (ratio {:.6e}, {} witness pairs)",
        report.verdict.as_str(),
        report.ratio,
        report.witnesses.len()
    );
    EXIT_OK
}

/// Export the particle field of the configured curve: one particle per node,
/// weight `gamma * tangent / N`, width `[field] mollifier_h`.
pub fn export_field(cfg: &RunConfig, out: Option<&Path>) -> i32 {
    let p = match cfg.require_potential() {
        Ok(p) => p,
        Err(e) => return config_failure(e),
    };
    let Some(h) = cfg.mollifier_h else {
        return config_failure("missing [field] section (required keys: mollifier_h)");
    };
    let curve = match curve_from_config(cfg) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let field = match VorticityField::from_curve(&curve, p.gamma(), h) {
        Ok(f) => f,
        Err(e) => return config_failure(e),
    };
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| field_path(cfg));
    match formats::create(&path).and_then(|w| formats::write_field(w, &field)) {
        Ok(()) => {
            println!("{}", path.display());
            EXIT_OK
        }
        Err(e) => io_failure(&path, e),
    }
}

/// Run the verification suites. 0 iff every assertion-grade suite passes.
pub fn verify(level: Level, seed: u64, out_dir: Option<&Path>) -> i32 {
    let report = verify::run(level, seed);
    for s in &report.suites {
        let grade = match s.grade {
            Grade::Assertion => "",
            Grade::Report => " [report]",
        };
        println!(
            "{:<6} {:<34} {:>8} checked {:>6} failed {:>8.3}s{grade}",
            s.status.as_str(),
            s.name,
            s.checked,
            s.failed,
            s.seconds
        );
        if s.status != Status::Pass {
            for w in &s.witnesses {
                println!("         {w}");
            }
        }
        for n in &s.notes {
            println!("         note: {n}");
        }
    }
    println!(
        "{} ({} suites, seed {}, {:.2}s)",
        if report.passed { "PASS" } else { "FAIL" },
        report.suites.len(),
        report.seed,
        report.seconds
    );
    if let Some(dir) = out_dir {
        let path = dir.join("verify_report.json");
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        if let Err(e) = formats::create(&path).and_then(|mut w| {
            w.write_all(text.as_bytes())?;
            w.flush()
        }) {
            return io_failure(&path, e);
        }
        let path = dir.join("sandbox.csv");
        let g = GronwallParams::new(1.0, 1.0, 3.0, 2.0).expect("fixed parameters");
        let rate = g.rate();
        let run =
            gronwall_sandbox(&g, |_, e| rate * e, |_, _| 0.0, 1.0, 1e-3).expect("fixed parameters");
        if let Err(e) =
            formats::create(&path).and_then(|w| formats::write_sandbox_csv(w, &run.series))
        {
            return io_failure(&path, e);
        }
    }
    if report.passed {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}
