//! The result document and the curve files.
//!
//! Floats are written as the shortest decimal that parses back to the same
//! binary value. JSON objects are emitted with sorted keys, so reloading a
//! report and emitting it again reproduces it byte for byte. Values that are
//! not finite (unbounded interval ends, undefined trends) appear as `null`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::pipeline::{Solved, Violation};

/// Shortest round-trip decimal.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:?}")
    }
}

pub const CSV_HEADER: &str = "x,g1,g2,V,W_of_Fx,in_E1,in_E2";

/// One row per window node, ascending in `x`.
pub fn curve_csv(s: &Solved) -> String {
    let p = &s.problem.payoffs;
    let mut out = String::with_capacity(64 * (s.v.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (i, (x, v)) in s.v.grid().iter().zip(s.v.values()).enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_float(*x),
            format_float(p.g1().eval(*x)),
            format_float(p.g2().eval(*x)),
            format_float(*v),
            format_float(s.w.values()[i]),
            u8::from(s.regions.in_e1[i]),
            u8::from(s.regions.in_e2[i]),
        );
    }
    out
}

/// The same schema on the padded grid, for plotting the boundary layers.
pub fn plot_csv(s: &Solved) -> String {
    let p = &s.problem.payoffs;
    let tol = s.problem.tol_contact;
    let touch = |v: f64, g: f64| (v - g).abs() <= tol * v.abs().max(g.abs());
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    let w = s.envelope.w.values();
    for (i, (x, v)) in s.v_full.grid().iter().zip(s.v_full.values()).enumerate() {
        let (g1, g2) = (p.g1().eval(*x), p.g2().eval(*x));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_float(*x),
            format_float(g1),
            format_float(g2),
            format_float(*v),
            format_float(w[i]),
            u8::from(touch(*v, g1)),
            u8::from(touch(*v, g2)),
        );
    }
    out
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Canonical text of a JSON document.
pub fn canonical_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

/// Parses and re-emits a JSON document.
pub fn reemit(text: &str) -> Result<String> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Config {
        line: e.line(),
        message: format!("invalid JSON: {e}"),
    })?;
    Ok(canonical_json(&v))
}

/// SHA-256 of the canonical JSON form of the effective configuration.
pub fn config_hash(config: &Config) -> String {
    let text = canonical_json(&to_value(config));
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Relative error of a solution against a reference curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveError {
    pub max_rel_error: f64,
    pub at: f64,
    pub range: (f64, f64),
}

/// `max |V − ref| / max(|ref|, 1e-12·scale)` over window nodes in `range`.
pub fn curve_error(s: &Solved, reference: impl Fn(f64) -> f64, range: (f64, f64)) -> CurveError {
    let scale = s.v.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (1e-12 * scale).max(f64::MIN_POSITIVE);
    let mut worst = CurveError {
        max_rel_error: 0.0,
        at: f64::NAN,
        range,
    };
    for (x, v) in s.v.grid().iter().zip(s.v.values()) {
        if *x < range.0 || *x > range.1 {
            continue;
        }
        let r = reference(*x);
        let e = (v - r).abs() / r.abs().max(floor);
        if e > worst.max_rel_error || worst.at.is_nan() {
            worst.max_rel_error = e;
            worst.at = *x;
        }
    }
    worst
}

/// The top-level result document without the Monte Carlo section.
pub fn solution_document(config: &Config, s: &Solved, extra: Vec<(&str, Value)>) -> Value {
    let env = &s.envelope;
    let mut doc = json!({
        "provenance": {
            "config_hash": config_hash(config),
            "crate": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "seeds": {
                "mc": config.mc.params.seed,
                "probe": config.mc.probes.random_seed,
            },
        },
        "config": to_value(config),
        "grid": {
            "window": [s.v.grid()[0], s.v.grid()[s.v.len() - 1]],
            "nodes": s.v.len(),
            "padded_nodes": s.v_full.len(),
        },
        "curves": {
            "x": s.v.grid(),
            "V": s.v.values(),
            "y": s.w.grid(),
            "W": s.w.values(),
        },
        "fundamental": {
            "method": to_value(&s.fundamental.method()),
            "x_ref": s.fundamental.x_ref(),
            "max_residual": s.fundamental.max_residual(&s.problem.model),
            "natural_trend": to_value(&s.fundamental.natural_trend()),
        },
        "envelope": {
            "bracket_gap": env.bracket_gap,
            "bracket_gap_rel": env.bracket_gap_rel,
            "iterations": env.iterations,
            "tol_fix": env.tol_fix,
            "pins": to_value(&env.pins),
            "policy": to_value(&s.problem.policy),
        },
        "truncation_warning": s.truncation_warning,
        "regions": to_value(&s.regions),
        "smooth_fit": to_value(&s.smooth_fit),
        "measure_sign": to_value(&s.signs),
        "growth": to_value(&s.growth),
        "saddle": to_value(&s.saddle),
        "mc": Value::Null,
    });
    let obj = doc.as_object_mut().expect("object literal");
    for (k, v) in extra {
        obj.insert(k.to_string(), v);
    }
    doc
}

pub fn violations_document(v: &[Violation]) -> Value {
    json!({ "violations": to_value(&v), "count": v.len() })
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the requested files and returns their paths.
pub fn emit_outputs(config: &Config, s: &Solved, doc: &Value) -> Result<Vec<PathBuf>> {
    let o = &config.output;
    let mut written = Vec::new();
    if o.csv {
        let p = o.dir.join("solution.csv");
        write(&p, &curve_csv(s))?;
        written.push(p);
    }
    if o.json {
        let p = o.dir.join("report.json");
        write(&p, &canonical_json(doc))?;
        written.push(p);
    }
    if o.plot {
        let p = o.dir.join("plot.csv");
        write(&p, &plot_csv(s))?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::solve;

    fn small() -> (Config, Solved) {
        let c = Config::parse("[payoff]\ncatalog = game_call\n[grid]\nn_points = 101\n").unwrap();
        let s = solve(&c.setup().unwrap().problem).unwrap();
        (c, s)
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 123456789.125, 5e-324, 2.5] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_float(2.5), "2.5");
    }

    #[test]
    fn csv_has_header_and_one_row_per_node() {
        let (_, s) = small();
        let csv = curve_csv(&s);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), s.v.len() + 1);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(s.v.len() >= 101);
    }

    #[test]
    fn json_reemission_is_identical() {
        let (c, s) = small();
        let text = canonical_json(&solution_document(&c, &s, vec![]));
        assert_eq!(reemit(&text).unwrap(), text);
    }

    #[test]
    fn hash_tracks_the_config() {
        let (c, _) = small();
        let mut d = c.clone();
        assert_eq!(config_hash(&c), config_hash(&d));
        d.mc.params.seed += 1;
        assert_ne!(config_hash(&c), config_hash(&d));
        assert_eq!(config_hash(&c).len(), 64);
    }
}
