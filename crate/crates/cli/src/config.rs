//! Run configuration: a flat TOML table whose keys carry their units.

use std::path::{Path, PathBuf};

use bathmodes::{DiscretizationGrid, IdMode, Method, QuadratureRule};
use sha2::{Digest, Sha256};
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}` has the wrong unit suffix; expected `{expected}`")]
    UnitSuffix { key: String, expected: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("key `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("{0}")]
    Conflict(String),
}

type Result<T> = std::result::Result<T, ConfigError>;

/// Every accepted key. Keys with a unit carry it as their last `_` segment.
pub const KEYS: &[&str] = &[
    "exponent_s",
    "coupling_alpha",
    "cutoff_frequency_cm1",
    "tabulated_file",
    "smoothing_lambda",
    "aaa_tolerance",
    "aaa_max_degree",
    "omega_floor_cm1",
    "temperature_k",
    "method",
    "cutoff_time_fs",
    "omega_lo_cm1",
    "omega_hi_cm1",
    "time_points",
    "frequency_points",
    "rank",
    "tolerance",
    "quadrature_rule",
    "ld_ratio",
    "ld_modes",
    "mdm_modes",
    "bsdo_modes",
    "bsdo_intervals_cm1",
    "verification_points",
    "verification_time_fs",
    "reference_omega_lo_cm1",
    "reference_omega_hi_cm1",
    "oracle_tolerance",
    "output_dir",
];

const UNIT_SUFFIXES: &[&str] = &["cm1", "fs", "k"];

/// Other unit spellings recognised only to produce a clearer error.
const FOREIGN_SUFFIXES: &[&str] = &["ev", "mev", "thz", "hz", "ps", "ns", "as", "s", "c", "kelvin", "invcm", "wavenumber"];

#[derive(Debug, Clone, PartialEq)]
pub enum Smoothing {
    None,
    Gcv,
    Lambda(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SdSource {
    PowerLaw { exponent_s: f64, coupling_alpha: f64, cutoff_frequency_cm1: f64 },
    Tabulated { file: PathBuf, smoothing: Smoothing, aaa_tolerance: f64, aaa_max_degree: usize, omega_floor_cm1: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: SdSource,
    /// 0 means zero temperature.
    pub temperature_k: f64,
    pub methods: Vec<Method>,
    pub grid: DiscretizationGrid,
    pub id_mode: IdMode,
    pub quadrature: QuadratureRule,
    pub ld_ratio: f64,
    pub ld_modes: usize,
    pub mdm_modes: usize,
    pub bsdo_modes: usize,
    pub bsdo_intervals: Vec<[f64; 2]>,
    pub verification_points: usize,
    pub verification_time_fs: f64,
    pub reference_window: [f64; 2],
    pub oracle_tolerance: f64,
    pub output_dir: PathBuf,
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let table = parse_table(&text)?;
    RunConfig::from_table(table, path.parent())
}

pub fn parse_table(text: &str) -> Result<Table> {
    text.parse::<Table>().map_err(|e| ConfigError::Parse(e.to_string()))
}

fn check_key(key: &str) -> Result<()> {
    if KEYS.contains(&key) {
        return Ok(());
    }
    let stem = |k: &str| match k.rsplit_once('_') {
        Some((s, suffix)) if UNIT_SUFFIXES.contains(&suffix) || FOREIGN_SUFFIXES.contains(&suffix) => s.to_string(),
        _ => k.to_string(),
    };
    let given = stem(key);
    for known in KEYS {
        if known.rsplit_once('_').is_some_and(|(_, u)| UNIT_SUFFIXES.contains(&u)) && stem(known) == given {
            return Err(ConfigError::UnitSuffix { key: key.to_string(), expected: known.to_string() });
        }
    }
    Err(ConfigError::UnknownKey(key.to_string()))
}

struct Reader {
    table: Table,
}

impl Reader {
    fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid { key: key.to_string(), message: message.into() }
    }

    fn has(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Float(v)) if v.is_finite() => Ok(Some(*v)),
            Some(Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(v) => Err(Self::invalid(key, format!("expected a finite number, got {v}"))),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn required_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.table.get(key) {
            None => Ok(default),
            Some(Value::Integer(v)) if *v >= 0 => Ok(*v as usize),
            Some(v) => Err(Self::invalid(key, format!("expected a nonnegative integer, got {v}"))),
        }
    }

    fn str(&self, key: &str) -> Result<Option<&str>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(Self::invalid(key, format!("expected a string, got {v}"))),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Reader::invalid(key, format!("must be positive (got {v})")))
    }
}

fn parse_methods(value: Option<&Value>) -> Result<Vec<Method>> {
    let names: Vec<String> = match value {
        None => vec!["id".into()],
        Some(Value::String(s)) => s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| v.as_str().map(str::to_string).ok_or_else(|| Reader::invalid("method", "list entries must be strings")))
            .collect::<Result<_>>()?,
        Some(v) => return Err(Reader::invalid("method", format!("expected a string or list, got {v}"))),
    };
    if names.is_empty() {
        return Err(Reader::invalid("method", "method list is empty"));
    }
    let mut methods = Vec::new();
    for name in &names {
        if name.eq_ignore_ascii_case("all") {
            methods.extend(Method::ALL);
        } else {
            methods.push(name.parse::<Method>().map_err(|e| Reader::invalid("method", e.to_string()))?);
        }
    }
    let mut unique = Vec::new();
    for m in methods {
        if !unique.contains(&m) {
            unique.push(m);
        }
    }
    Ok(unique)
}

fn parse_intervals(value: &Value) -> Result<Vec<[f64; 2]>> {
    let key = "bsdo_intervals_cm1";
    let bad = || Reader::invalid(key, "expected [lo, hi] or a list of [lo, hi] pairs");
    let number = |v: &Value| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)).ok_or_else(bad);
    let Value::Array(items) = value else { return Err(bad()) };
    let pairs: Vec<&Value> = if items.iter().all(|v| !v.is_array()) { vec![value] } else { items.iter().collect() };
    let mut out = Vec::new();
    for p in pairs {
        let Value::Array(pair) = p else { return Err(bad()) };
        if pair.len() != 2 {
            return Err(bad());
        }
        let (lo, hi) = (number(&pair[0])?, number(&pair[1])?);
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Reader::invalid(key, format!("empty interval [{lo}, {hi}]")));
        }
        out.push([lo, hi]);
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// Parses a command-line value as a TOML value, falling back to a plain string.
pub fn override_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Builds a config from an optional file plus `key = value` overrides applied on top.
pub fn load_with_overrides(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.to_path_buf(), source })?;
            parse_table(&text)?
        }
        None => Table::new(),
    };
    for (key, raw) in overrides {
        check_key(key)?;
        let mut value = override_value(raw);
        if key == "tabulated_file" {
            // relative to the working directory, not the config file
            let file = PathBuf::from(raw);
            let abs = if file.is_relative() { std::env::current_dir().map(|d| d.join(&file)).unwrap_or(file) } else { file };
            value = Value::String(abs.display().to_string());
        }
        table.insert(key.clone(), value);
    }
    RunConfig::from_table(table, path.and_then(Path::parent))
}

impl RunConfig {
    /// Validates a parsed table. Relative `tabulated_file` paths resolve against `base_dir`.
    pub fn from_table(table: Table, base_dir: Option<&Path>) -> Result<Self> {
        for key in table.keys() {
            check_key(key)?;
        }
        let r = Reader { table };

        let model_keys = ["exponent_s", "coupling_alpha", "cutoff_frequency_cm1"];
        let table_keys = ["smoothing_lambda", "aaa_tolerance", "aaa_max_degree", "omega_floor_cm1"];
        let has_model = model_keys.iter().any(|k| r.has(k));
        let has_table = r.has("tabulated_file");
        let source = match (has_model, has_table) {
            (true, true) => {
                return Err(ConfigError::Conflict(
                    "give either a power-law model (exponent_s, coupling_alpha, cutoff_frequency_cm1) or tabulated_file, not both".into(),
                ))
            }
            (false, false) => {
                return Err(ConfigError::Missing("spectral density source: exponent_s/coupling_alpha/cutoff_frequency_cm1 or tabulated_file".into()))
            }
            (true, false) => {
                if let Some(k) = table_keys.iter().find(|k| r.has(k)) {
                    return Err(Reader::invalid(k, "only applies to a tabulated spectral density"));
                }
                SdSource::PowerLaw {
                    exponent_s: positive("exponent_s", r.required_f64("exponent_s")?)?,
                    coupling_alpha: positive("coupling_alpha", r.required_f64("coupling_alpha")?)?,
                    cutoff_frequency_cm1: positive("cutoff_frequency_cm1", r.required_f64("cutoff_frequency_cm1")?)?,
                }
            }
            (false, true) => {
                let file = PathBuf::from(r.str("tabulated_file")?.unwrap_or_default());
                let file = match base_dir {
                    Some(dir) if file.is_relative() => dir.join(file),
                    _ => file,
                };
                let smoothing = match r.table.get("smoothing_lambda") {
                    None => Smoothing::Gcv,
                    Some(Value::String(s)) if s == "gcv" => Smoothing::Gcv,
                    Some(Value::String(s)) if s == "none" => Smoothing::None,
                    Some(_) => match r.f64("smoothing_lambda")? {
                        Some(l) if l >= 0.0 => Smoothing::Lambda(l),
                        _ => return Err(Reader::invalid("smoothing_lambda", "expected \"gcv\", \"none\" or a number >= 0")),
                    },
                };
                let omega_floor_cm1 = r.f64_or("omega_floor_cm1", 0.0)?;
                if omega_floor_cm1 < 0.0 {
                    return Err(Reader::invalid("omega_floor_cm1", "must be >= 0"));
                }
                let aaa_max_degree = r.usize_or("aaa_max_degree", bathmodes::tabulated::DEFAULT_AAA_MAX_DEGREE)?;
                if aaa_max_degree == 0 {
                    return Err(Reader::invalid("aaa_max_degree", "must be at least 1"));
                }
                SdSource::Tabulated {
                    file,
                    smoothing,
                    aaa_tolerance: positive(
                        "aaa_tolerance",
                        r.f64_or("aaa_tolerance", bathmodes::tabulated::DEFAULT_AAA_TOLERANCE)?,
                    )?,
                    aaa_max_degree,
                    omega_floor_cm1,
                }
            }
        };

        let temperature_k = r.required_f64("temperature_k")?;
        if temperature_k < 0.0 {
            return Err(Reader::invalid("temperature_k", "must be >= 0"));
        }
        let methods = parse_methods(r.table.get("method"))?;

        let default_time_points = if has_table { 1000 } else { 500 };
        let grid = DiscretizationGrid::new(
            r.f64_or("cutoff_time_fs", 1000.0)?,
            r.f64_or("omega_lo_cm1", -500.0)?,
            r.f64_or("omega_hi_cm1", 500.0)?,
            r.usize_or("time_points", default_time_points)?,
            r.usize_or("frequency_points", 2000)?,
        )
        .map_err(|e| Reader::invalid("cutoff_time_fs/omega_lo_cm1/omega_hi_cm1/time_points/frequency_points", e.to_string()))?;

        let id_mode = match (r.has("rank"), r.has("tolerance")) {
            (true, true) => return Err(ConfigError::Conflict("give either rank or tolerance, not both".into())),
            (false, true) => IdMode::Tolerance(positive("tolerance", r.required_f64("tolerance")?)?),
            _ => {
                let rank = r.usize_or("rank", 20)?;
                if rank == 0 {
                    return Err(Reader::invalid("rank", "must be at least 1"));
                }
                IdMode::Rank(rank)
            }
        };
        let quadrature = match r.str("quadrature_rule")? {
            None => QuadratureRule::default(),
            Some(s) => s.parse().map_err(|e: bathmodes::Error| Reader::invalid("quadrature_rule", e.to_string()))?,
        };

        let ld_ratio = r.f64_or("ld_ratio", 1.1)?;
        if !(ld_ratio > 1.0) {
            return Err(Reader::invalid("ld_ratio", format!("must exceed 1 (got {ld_ratio})")));
        }
        let even = |key: &str| -> Result<usize> {
            let m = r.usize_or(key, 20)?;
            if m == 0 || m % 2 != 0 {
                return Err(Reader::invalid(key, format!("must be a positive even number (got {m})")));
            }
            Ok(m)
        };
        let ld_modes = even("ld_modes")?;
        let mdm_modes = even("mdm_modes")?;
        let bsdo_modes = r.usize_or("bsdo_modes", 20)?;
        if bsdo_modes == 0 {
            return Err(Reader::invalid("bsdo_modes", "must be at least 1"));
        }
        let bsdo_intervals = match r.table.get("bsdo_intervals_cm1") {
            None => vec![[grid.omega_lo, grid.omega_hi]],
            Some(v) => parse_intervals(v)?,
        };

        let verification_points = r.usize_or("verification_points", 2000)?;
        if verification_points < 2 {
            return Err(Reader::invalid("verification_points", "need at least 2"));
        }
        let verification_time_fs = positive("verification_time_fs", r.f64_or("verification_time_fs", grid.cutoff_time_fs)?)?;
        let reference_window = [
            r.f64_or("reference_omega_lo_cm1", grid.omega_lo)?,
            r.f64_or("reference_omega_hi_cm1", grid.omega_hi)?,
        ];
        if !(reference_window[0] < reference_window[1]) {
            return Err(Reader::invalid("reference_omega_lo_cm1", "reference window is empty"));
        }
        let oracle_tolerance = positive("oracle_tolerance", r.f64_or("oracle_tolerance", bathmodes::ORACLE_TOLERANCE)?)?;
        let output_dir = PathBuf::from(r.str("output_dir")?.unwrap_or("out"));

        Ok(Self {
            source,
            temperature_k,
            methods,
            grid,
            id_mode,
            quadrature,
            ld_ratio,
            ld_modes,
            mdm_modes,
            bsdo_modes,
            bsdo_intervals,
            verification_points,
            verification_time_fs,
            reference_window,
            oracle_tolerance,
            output_dir,
        })
    }

    pub fn from_toml_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        Self::from_table(parse_table(text)?, base_dir)
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.source, SdSource::Tabulated { .. })
    }

    /// Fully resolved configuration, defaults included, as flat keys.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new();
        let mut put = |k: &str, v: Value| {
            t.insert(k.to_string(), v);
        };
        match &self.source {
            SdSource::PowerLaw { exponent_s, coupling_alpha, cutoff_frequency_cm1 } => {
                put("exponent_s", Value::Float(*exponent_s));
                put("coupling_alpha", Value::Float(*coupling_alpha));
                put("cutoff_frequency_cm1", Value::Float(*cutoff_frequency_cm1));
            }
            SdSource::Tabulated { file, smoothing, aaa_tolerance, aaa_max_degree, omega_floor_cm1 } => {
                put("tabulated_file", Value::String(file.display().to_string()));
                put(
                    "smoothing_lambda",
                    match smoothing {
                        Smoothing::None => Value::String("none".into()),
                        Smoothing::Gcv => Value::String("gcv".into()),
                        Smoothing::Lambda(l) => Value::Float(*l),
                    },
                );
                put("aaa_tolerance", Value::Float(*aaa_tolerance));
                put("aaa_max_degree", Value::Integer(*aaa_max_degree as i64));
                put("omega_floor_cm1", Value::Float(*omega_floor_cm1));
            }
        }
        put("temperature_k", Value::Float(self.temperature_k));
        put("method", Value::Array(self.methods.iter().map(|m| Value::String(m.label().into())).collect()));
        put("cutoff_time_fs", Value::Float(self.grid.cutoff_time_fs));
        put("omega_lo_cm1", Value::Float(self.grid.omega_lo));
        put("omega_hi_cm1", Value::Float(self.grid.omega_hi));
        put("time_points", Value::Integer(self.grid.time_points as i64));
        put("frequency_points", Value::Integer(self.grid.frequency_points as i64));
        match self.id_mode {
            IdMode::Rank(r) => put("rank", Value::Integer(r as i64)),
            IdMode::Tolerance(e) => put("tolerance", Value::Float(e)),
        }
        put(
            "quadrature_rule",
            Value::String(match self.quadrature {
                QuadratureRule::Trapezoid => "trapezoid".into(),
                QuadratureRule::Rectangle => "rectangle".into(),
            }),
        );
        put("ld_ratio", Value::Float(self.ld_ratio));
        put("ld_modes", Value::Integer(self.ld_modes as i64));
        put("mdm_modes", Value::Integer(self.mdm_modes as i64));
        put("bsdo_modes", Value::Integer(self.bsdo_modes as i64));
        put(
            "bsdo_intervals_cm1",
            Value::Array(
                self.bsdo_intervals
                    .iter()
                    .map(|[a, b]| Value::Array(vec![Value::Float(*a), Value::Float(*b)]))
                    .collect(),
            ),
        );
        put("verification_points", Value::Integer(self.verification_points as i64));
        put("verification_time_fs", Value::Float(self.verification_time_fs));
        put("reference_omega_lo_cm1", Value::Float(self.reference_window[0]));
        put("reference_omega_hi_cm1", Value::Float(self.reference_window[1]));
        put("oracle_tolerance", Value::Float(self.oracle_tolerance));
        put("output_dir", Value::String(self.output_dir.display().to_string()));
        t
    }

    /// SHA-256 over every field that affects results. The output directory is
    /// excluded; a tabulated source contributes its file contents rather than its path.
    pub fn hash(&self) -> Result<String> {
        let mut t = self.to_table();
        t.remove("output_dir");
        let mut h = Sha256::new();
        if let SdSource::Tabulated { file, .. } = &self.source {
            t.remove("tabulated_file");
            let bytes = std::fs::read(file).map_err(|source| ConfigError::Io { path: file.clone(), source })?;
            h.update(Sha256::digest(&bytes));
        }
        h.update(t.to_string().as_bytes());
        Ok(hex::encode(h.finalize()))
    }
}
