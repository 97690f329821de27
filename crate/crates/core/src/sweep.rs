//! Batch driver: resolved configuration, distance sweeps, endpoint
//! search and the Monte-Carlo verification report.
//!
//! Configuration files are flat `key=value` lines with `#` comments; keys
//! are the lower_snake_case names printed by [`SweepConfig::to_text`].

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::channel::ProtocolParams;
use crate::error::{Error, Result};
use crate::events::EveEta;
use crate::keyrate::{evaluate_point, max_distance, ClampMode, KeyRatePoint, MaxDistance, MuGrid, RateOptions, SearchConfig};
use crate::validation::{run_validation, Check, Verdict};

pub const CSV_HEADER: &str = "distance_km,r_original,r_ad,b_opt,mu_opt_original,mu_opt_ad,plob";

/// Everything a sweep, endpoint search or verification run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub params: ProtocolParams,
    pub l_min_km: f64,
    pub l_max_km: f64,
    pub l_step_km: f64,
    pub mu_grid: MuGrid,
    pub clamp: ClampMode,
    pub ie_eta: EveEta,
    pub homogeneous_b: bool,
    /// Whether `max-distance` searches the distilled rate.
    pub use_ad: bool,
    pub r_floor: f64,
    pub out: Option<PathBuf>,
    pub seed: u64,
    /// Detection rounds per verification point.
    pub n_mc: u64,
    /// Distillation blocks per verification point.
    pub n_mc_blocks: u64,
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            params: ProtocolParams::default(),
            l_min_km: 0.0,
            l_max_km: 450.0,
            l_step_km: 5.0,
            mu_grid: MuGrid::default(),
            clamp: ClampMode::PerEvent,
            ie_eta: EveEta::Arm,
            homogeneous_b: true,
            use_ad: true,
            r_floor: 1e-12,
            out: None,
            seed: 20_240_601,
            n_mc: 100_000_000,
            n_mc_blocks: 1_000_000,
            workers: 1,
        }
    }
}

/// Named scenarios: `(name, e_d, δ)`.
pub const PRESETS: [(&str, f64, f64); 9] = [
    ("ideal", 0.0, 0.0),
    ("ed10", 0.10, 0.0),
    ("ed30", 0.30, 0.0),
    ("ed50", 0.50, 0.0),
    ("d15", 0.0, 0.15),
    ("d23", 0.0, 0.23),
    ("d25", 0.0, 0.25),
    ("d20ed15", 0.15, 0.20),
    ("d10ed10", 0.10, 0.10),
];

fn param_err(field: &'static str, constraint: impl Into<String>) -> Error {
    Error::Param {
        field,
        constraint: constraint.into(),
    }
}

pub fn parse_clamp(s: &str) -> Result<ClampMode> {
    match s {
        "per-event" => Ok(ClampMode::PerEvent),
        "total" => Ok(ClampMode::Total),
        _ => Err(param_err("clamp", "expected per-event or total")),
    }
}

pub fn clamp_name(c: ClampMode) -> &'static str {
    match c {
        ClampMode::PerEvent => "per-event",
        ClampMode::Total => "total",
    }
}

pub fn parse_ie_eta(s: &str) -> Result<EveEta> {
    match s {
        "arm" => Ok(EveEta::Arm),
        "arm-etad" => Ok(EveEta::ArmEtaD),
        _ => Err(param_err("ie_eta", "expected arm or arm-etad")),
    }
}

pub fn ie_eta_name(e: EveEta) -> &'static str {
    match e {
        EveEta::Arm => "arm",
        EveEta::ArmEtaD => "arm-etad",
    }
}

fn parse_num<T: std::str::FromStr>(field: &'static str, v: &str) -> Result<T> {
    v.parse().map_err(|_| param_err(field, format!("cannot parse {v:?}")))
}

fn parse_bool(field: &'static str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(param_err(field, "expected true or false")),
    }
}

impl SweepConfig {
    /// Defaults with the scenario parameters of a named preset.
    pub fn preset(name: &str) -> Result<Self> {
        let (_, e_d, delta) = PRESETS
            .iter()
            .find(|(n, ..)| *n == name)
            .ok_or_else(|| param_err("preset", format!("unknown preset {name:?}")))?;
        let mut c = Self::default();
        c.params.e_d = *e_d;
        c.params.delta = *delta;
        Ok(c)
    }

    /// Set one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let p = &mut self.params;
        match key {
            "alpha_db_per_km" => p.alpha_db_per_km = parse_num("alpha_db_per_km", value)?,
            "eta_d" => p.eta_d = parse_num("eta_d", value)?,
            "p_d" => p.p_d = parse_num("p_d", value)?,
            "f" => p.f = parse_num("f", value)?,
            "e_d" => p.e_d = parse_num("e_d", value)?,
            "delta" => p.delta = parse_num("delta", value)?,
            "b_max" => p.b_max = parse_num("b_max", value)?,
            "l_min_km" => self.l_min_km = parse_num("l_min_km", value)?,
            "l_max_km" => self.l_max_km = parse_num("l_max_km", value)?,
            "l_step_km" => self.l_step_km = parse_num("l_step_km", value)?,
            "mu_min" => self.mu_grid.min = parse_num("mu_min", value)?,
            "mu_max" => self.mu_grid.max = parse_num("mu_max", value)?,
            "mu_points" => self.mu_grid.points = parse_num("mu_points", value)?,
            "mu_zoom_points" => self.mu_grid.zoom_points = parse_num("mu_zoom_points", value)?,
            "clamp" => self.clamp = parse_clamp(value)?,
            "ie_eta" => self.ie_eta = parse_ie_eta(value)?,
            "homogeneous_b" => self.homogeneous_b = parse_bool("homogeneous_b", value)?,
            "use_ad" => self.use_ad = parse_bool("use_ad", value)?,
            "r_floor" => self.r_floor = parse_num("r_floor", value)?,
            "out" => self.out = (!value.is_empty()).then(|| PathBuf::from(value)),
            "seed" => self.seed = parse_num("seed", value)?,
            "n_mc" => self.n_mc = parse_num("n_mc", value)?,
            "n_mc_blocks" => self.n_mc_blocks = parse_num("n_mc_blocks", value)?,
            "workers" => self.workers = parse_num("workers", value)?,
            _ => return Err(param_err("key", format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Apply `key=value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: i + 1,
                message: format!("expected key=value, got {line:?}"),
            })?;
            self.set(k.trim(), v.trim()).map_err(|e| Error::Config {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn load(path: &Path, base: SweepConfig) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config {
            line: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        let mut c = base;
        c.apply_text(&text)?;
        Ok(c)
    }

    /// The resolved configuration in the file format; parsing it back
    /// yields an identical config.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let g = &self.mu_grid;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("alpha_db_per_km", p.alpha_db_per_km.to_string());
        kv("eta_d", p.eta_d.to_string());
        kv("p_d", p.p_d.to_string());
        kv("f", p.f.to_string());
        kv("e_d", p.e_d.to_string());
        kv("delta", p.delta.to_string());
        kv("b_max", p.b_max.to_string());
        kv("l_min_km", self.l_min_km.to_string());
        kv("l_max_km", self.l_max_km.to_string());
        kv("l_step_km", self.l_step_km.to_string());
        kv("mu_min", g.min.to_string());
        kv("mu_max", g.max.to_string());
        kv("mu_points", g.points.to_string());
        kv("mu_zoom_points", g.zoom_points.to_string());
        kv("clamp", clamp_name(self.clamp).into());
        kv("ie_eta", ie_eta_name(self.ie_eta).into());
        kv("homogeneous_b", self.homogeneous_b.to_string());
        kv("use_ad", self.use_ad.to_string());
        kv("r_floor", self.r_floor.to_string());
        kv("out", self.out.as_ref().map(|p| p.display().to_string()).unwrap_or_default());
        kv("seed", self.seed.to_string());
        kv("n_mc", self.n_mc.to_string());
        kv("n_mc_blocks", self.n_mc_blocks.to_string());
        kv("workers", self.workers.to_string());
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.params.with_mu(self.mu_grid.min).validate()?;
        self.mu_grid.validate()?;
        if !(self.l_min_km >= 0.0) {
            return Err(param_err("l_min_km", "must be >= 0"));
        }
        if !(self.l_step_km > 0.0) {
            return Err(param_err("l_step_km", "must be > 0"));
        }
        if !(self.l_max_km >= self.l_min_km) || !self.l_max_km.is_finite() {
            return Err(param_err("l_max_km", "must be finite and >= l_min_km"));
        }
        if !(self.r_floor >= 0.0) {
            return Err(param_err("r_floor", "must be >= 0"));
        }
        if self.n_mc == 0 {
            return Err(param_err("n_mc", "must be >= 1"));
        }
        if self.n_mc_blocks == 0 {
            return Err(param_err("n_mc_blocks", "must be >= 1"));
        }
        if self.workers == 0 {
            return Err(param_err("workers", "must be >= 1"));
        }
        Ok(())
    }

    pub fn rate_options(&self) -> RateOptions {
        RateOptions {
            clamp: self.clamp,
            eve_eta: self.ie_eta,
            homogeneous: self.homogeneous_b,
            ..Default::default()
        }
    }

    /// Sweep distances `l_min + k·l_step ≤ l_max`.
    pub fn distances(&self) -> Vec<f64> {
        let n = ((self.l_max_km - self.l_min_km) / self.l_step_km + 1e-9).floor() as usize;
        (0..=n).map(|k| self.l_min_km + k as f64 * self.l_step_km).collect()
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| param_err("workers", e.to_string()))
    }
}

/// Optimised rates on the configured distance grid, in grid order.
pub fn sweep_points(config: &SweepConfig) -> Result<Vec<KeyRatePoint>> {
    config.validate()?;
    let opts = config.rate_options();
    let distances = config.distances();
    config.pool()?.install(|| {
        distances
            .par_iter()
            .map(|&l| evaluate_point(&config.params, l, &config.mu_grid, &opts))
            .collect()
    })
}

fn csv_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        String::new()
    }
}

/// One CSV row; an infinite PLOB bound is left empty.
pub fn csv_row(p: &KeyRatePoint) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        csv_float(p.distance_km),
        csv_float(p.r_original),
        csv_float(p.r_ad),
        p.b_opt,
        csv_float(p.mu_opt_original),
        csv_float(p.mu_opt_ad),
        csv_float(p.plob),
    )
}

pub fn to_csv(points: &[KeyRatePoint]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for p in points {
        s.push_str(&csv_row(p));
        s.push('\n');
    }
    s
}

/// Inverse of [`to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<KeyRatePoint>> {
    let bad = |line: usize, message: String| Error::Config { line, message };
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(bad(1, "unexpected header".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad(i + 2, format!("expected 7 fields, got {}", f.len())));
            }
            let num = |s: &str| -> Result<f64> {
                if s.is_empty() {
                    return Ok(f64::INFINITY);
                }
                s.parse().map_err(|_| bad(i + 2, format!("bad number {s:?}")))
            };
            Ok(KeyRatePoint {
                distance_km: num(f[0])?,
                r_original: num(f[1])?,
                r_ad: num(f[2])?,
                b_opt: f[3].parse().map_err(|_| bad(i + 2, format!("bad block size {:?}", f[3])))?,
                mu_opt_original: num(f[4])?,
                mu_opt_ad: num(f[5])?,
                plob: num(f[6])?,
            })
        })
        .collect()
}

fn write_file(path: &Path, contents: &str, append: bool) -> Result<()> {
    let err = |e: std::io::Error| Error::Output {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut file = fs::OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(path)
        .map_err(err)?;
    file.write_all(contents.as_bytes()).map_err(err)
}

/// Run the sweep and write the CSV to the configured output, if any.
/// Returns the CSV text.
pub fn run_sweep(config: &SweepConfig) -> Result<String> {
    let csv = to_csv(&sweep_points(config)?);
    if let Some(path) = &config.out {
        write_file(path, &csv, false)?;
    }
    Ok(csv)
}

pub const MAX_DISTANCE_HEADER: &str = "use_ad,distance_km,b_at_endpoint,mu_at_endpoint";

/// Endpoint of the positive-rate region. With an output path, a row is
/// appended to that CSV (the header is written when the file is new).
pub fn run_max_distance(config: &SweepConfig, use_ad: bool) -> Result<MaxDistance> {
    config.validate()?;
    let search = SearchConfig {
        r_floor: config.r_floor,
        ..Default::default()
    };
    let md = max_distance(&config.params, use_ad, &config.mu_grid, &config.rate_options(), &search)?;
    if let Some(path) = &config.out {
        let mut text = String::new();
        if fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true) {
            text.push_str(MAX_DISTANCE_HEADER);
            text.push('\n');
        }
        let _ = writeln!(text, "{use_ad},{:e},{},{:e}", md.distance_km, md.b, md.mu);
        write_file(path, &text, true)?;
    }
    Ok(md)
}

/// Outcome of a verification run.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub verdict: Verdict,
}

impl VerifyReport {
    pub fn text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let flag = if c.z() > Verdict::HARD_Z {
                "FAIL"
            } else if c.z() > Verdict::SOFT_Z {
                "warn"
            } else {
                "ok"
            };
            let _ = writeln!(s, "{flag:4} {:<60} analytic={:.9e} mc={:.9e} sigma={:.3e} z={:.2}", c.label, c.analytic, c.estimate, c.sigma, c.z());
        }
        let v = &self.verdict;
        let _ = writeln!(
            s,
            "{} checks, {} beyond {}σ (allowed {}), {} beyond {}σ, max z {:.2}: {}",
            v.checks,
            v.beyond_soft,
            Verdict::SOFT_Z,
            v.allowed_beyond_soft,
            v.beyond_hard,
            Verdict::HARD_Z,
            v.max_z,
            if v.passed() { "PASS" } else { "FAIL" }
        );
        s
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("label,analytic,estimate,sigma,z\n");
        for c in &self.checks {
            let _ = writeln!(s, "{},{:e},{:e},{:e},{:e}", c.label, c.analytic, c.estimate, c.sigma, c.z());
        }
        s
    }
}

/// Analytic-versus-Monte-Carlo grid; the CSV report goes to the
/// configured output, if any.
pub fn run_verify(config: &SweepConfig) -> Result<VerifyReport> {
    config.validate()?;
    let checks = config
        .pool()?
        .install(|| run_validation(config.n_mc_blocks, config.n_mc, config.seed))?;
    let report = VerifyReport {
        verdict: Verdict::of(&checks),
        checks,
    };
    if let Some(path) = &config.out {
        write_file(path, &report.csv(), false)?;
    }
    Ok(report)
}
