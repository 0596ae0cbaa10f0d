//! Run configuration: a single JSON document, validated key by key so that
//! every error names the offending key by its dotted path.

use equimap_core::evolve::Tolerances;
use equimap_core::EvolutionConfig;
use serde_json::{Map, Value};
use std::fmt;
use std::path::{Path, PathBuf};

/// Error tied to one configuration key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

fn err<T>(key: impl Into<String>, message: impl Into<String>) -> Result<T> {
    Err(ConfigError { key: key.into(), message: message.into() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub n: usize,
    pub r_max: f64,
    pub xi_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_final: f64,
    pub monitor_stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitKind {
    MapBump { a: f64 },
    PsiMinusFile { path: PathBuf },
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitConfig {
    pub kind: InitKind,
    pub mass_rescale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputConfig {
    pub trajectory_path: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
    pub snapshot_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub init: InitConfig,
    pub outputs: OutputConfig,
    pub tolerances: Tolerances,
}

/// One JSON object together with its dotted path, for key-naming errors.
struct Section<'a> {
    path: String,
    map: &'a Map<String, Value>,
}

impl<'a> Section<'a> {
    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        match self.map.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => err(self.key(k), "unknown key"),
            None => Ok(()),
        }
    }

    fn get(&self, k: &str) -> Option<&'a Value> {
        self.map.get(k).filter(|v| !v.is_null())
    }

    fn section(&self, k: &str) -> Result<Section<'a>> {
        match self.get(k) {
            Some(Value::Object(map)) => Ok(Section { path: self.key(k), map }),
            Some(_) => err(self.key(k), "expected an object"),
            None => err(self.key(k), "missing"),
        }
    }

    fn opt_section(&self, k: &str) -> Result<Option<Section<'a>>> {
        if self.get(k).is_none() {
            return Ok(None);
        }
        self.section(k).map(Some)
    }

    fn opt_f64(&self, k: &str) -> Result<Option<f64>> {
        match self.get(k) {
            None => Ok(None),
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Ok(Some(x)),
                _ => err(self.key(k), format!("expected a finite number, got {v}")),
            },
        }
    }

    fn f64(&self, k: &str) -> Result<f64> {
        self.opt_f64(k)?.map_or_else(|| err(self.key(k), "missing"), Ok)
    }

    fn opt_usize(&self, k: &str) -> Result<Option<usize>> {
        match self.get(k) {
            None => Ok(None),
            Some(v) => match v.as_u64() {
                Some(x) => Ok(Some(x as usize)),
                None => err(self.key(k), format!("expected a non-negative integer, got {v}")),
            },
        }
    }

    fn usize(&self, k: &str) -> Result<usize> {
        self.opt_usize(k)?.map_or_else(|| err(self.key(k), "missing"), Ok)
    }

    fn opt_str(&self, k: &str) -> Result<Option<&'a str>> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => err(self.key(k), format!("expected a string, got {v}")),
        }
    }

    fn str(&self, k: &str) -> Result<&'a str> {
        self.opt_str(k)?.map_or_else(|| err(self.key(k), "missing"), Ok)
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = PathBuf::from(p);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Read and validate a configuration file. Relative paths inside it are
    /// resolved against the directory holding the file.
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(RunConfig::parse(&text, &base)?)
    }

    pub fn parse(text: &str, base: &Path) -> Result<RunConfig> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError {
            key: "<document>".into(),
            message: format!("invalid JSON: {e}"),
        })?;
        let Value::Object(map) = &value else {
            return err("<document>", "expected a JSON object");
        };
        let root = Section { path: String::new(), map };
        root.only(&["grid", "time", "init", "outputs", "tolerances"])?;

        let g = root.section("grid")?;
        g.only(&["n", "r_max", "xi_max"])?;
        let grid = GridConfig { n: g.usize("n")?, r_max: g.f64("r_max")?, xi_max: g.opt_f64("xi_max")? };
        if grid.n < 8 {
            return err("grid.n", format!("must be at least 8, got {}", grid.n));
        }
        if grid.r_max <= 0.0 {
            return err("grid.r_max", format!("must be positive, got {}", grid.r_max));
        }
        if let Some(x) = grid.xi_max {
            if x <= 0.0 {
                return err("grid.xi_max", format!("must be positive, got {x}"));
            }
        }

        let t = root.section("time")?;
        t.only(&["dt", "t_final", "monitor_stride"])?;
        let time = TimeConfig {
            dt: t.f64("dt")?,
            t_final: t.f64("t_final")?,
            monitor_stride: t.opt_usize("monitor_stride")?.unwrap_or(1),
        };
        if !(time.dt > 0.0 && time.dt <= 0.1) {
            return err("time.dt", format!("must lie in (0, 0.1], got {}", time.dt));
        }
        if time.t_final <= 0.0 {
            return err("time.t_final", format!("must be positive, got {}", time.t_final));
        }
        let k = time.t_final / time.dt;
        if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
            return err("time.t_final", format!("must be an integer multiple of time.dt (ratio {k})"));
        }
        if time.monitor_stride == 0 {
            return err("time.monitor_stride", "must be at least 1");
        }

        let i = root.section("init")?;
        let kind = match i.str("kind")? {
            "map_bump" => {
                i.only(&["kind", "a", "mass_rescale"])?;
                let a = if i.get("mass_rescale").is_some() { i.opt_f64("a")?.unwrap_or(0.0) } else { i.f64("a")? };
                InitKind::MapBump { a }
            }
            "psi_minus_file" => {
                i.only(&["kind", "path", "mass_rescale"])?;
                InitKind::PsiMinusFile { path: resolve(base, i.str("path")?) }
            }
            "zero" => {
                i.only(&["kind"])?;
                InitKind::Zero
            }
            other => {
                return err(
                    "init.kind",
                    format!("unknown kind `{other}` (expected map_bump, psi_minus_file or zero)"),
                )
            }
        };
        let mass_rescale = i.opt_f64("mass_rescale")?;
        if let Some(m) = mass_rescale {
            let upper = if matches!(kind, InitKind::MapBump { .. }) { 4.0 } else { 8.0 };
            if !(m > 0.0 && m < upper) {
                return err("init.mass_rescale", format!("must lie in (0, {upper}), got {m}"));
            }
        }
        let init = InitConfig { kind, mass_rescale };

        let mut outputs = OutputConfig::default();
        if let Some(o) = root.opt_section("outputs")? {
            o.only(&["trajectory_path", "report_path", "snapshot_path"])?;
            outputs.trajectory_path = o.opt_str("trajectory_path")?.map(|p| resolve(base, p));
            outputs.report_path = o.opt_str("report_path")?.map(|p| resolve(base, p));
            outputs.snapshot_path = o.opt_str("snapshot_path")?.map(|p| resolve(base, p));
        }

        let mut tolerances = Tolerances::default();
        if let Some(t) = root.opt_section("tolerances")? {
            t.only(&["mass_drift", "compat_alarm"])?;
            if let Some(x) = t.opt_f64("mass_drift")? {
                if x <= 0.0 {
                    return err("tolerances.mass_drift", "must be positive");
                }
                tolerances.mass_drift = x;
            }
            if let Some(x) = t.opt_f64("compat_alarm")? {
                if x <= 0.0 {
                    return err("tolerances.compat_alarm", "must be positive");
                }
                tolerances.compat_alarm = x;
            }
        }

        Ok(RunConfig { grid, time, init, outputs, tolerances })
    }

    pub fn evolution(&self) -> EvolutionConfig {
        let mut c = EvolutionConfig::new(self.grid.n, self.grid.r_max, self.time.dt, self.time.t_final);
        c.monitor_stride = self.time.monitor_stride;
        c.xi_max = self.grid.xi_max;
        c.tolerances = self.tolerances;
        c.keep_snapshots = self.outputs.snapshot_path.is_some();
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{
        "grid": {"n": 128, "r_max": 16.0},
        "time": {"dt": 0.01, "t_final": 0.1, "monitor_stride": 2},
        "init": {"kind": "map_bump", "a": 0.5},
        "outputs": {"trajectory_path": "out/run.csv"}
    }"#;

    fn key_of(text: &str) -> String {
        RunConfig::parse(text, Path::new("")).unwrap_err().key
    }

    #[test]
    fn parses_a_full_config() {
        let c = RunConfig::parse(GOOD, Path::new("/cfg")).unwrap();
        assert_eq!(c.grid, GridConfig { n: 128, r_max: 16.0, xi_max: None });
        assert_eq!(c.time.monitor_stride, 2);
        assert_eq!(c.init.kind, InitKind::MapBump { a: 0.5 });
        assert_eq!(c.outputs.trajectory_path, Some(PathBuf::from("/cfg/out/run.csv")));
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.evolution().steps().unwrap(), 10);
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(key_of(&GOOD.replace(r#""dt": 0.01, "#, "")), "time.dt");
        assert_eq!(key_of(&GOOD.replace(r#""dt": 0.01"#, r#""dt": "x""#)), "time.dt");
        assert_eq!(key_of(&GOOD.replace(r#""dt": 0.01"#, r#""dt": 0.5"#)), "time.dt");
        assert_eq!(key_of(&GOOD.replace(r#""t_final": 0.1"#, r#""t_final": 0.105"#)), "time.t_final");
        assert_eq!(key_of(&GOOD.replace(r#""n": 128"#, r#""n": -3"#)), "grid.n");
        assert_eq!(key_of(&GOOD.replace(r#""r_max": 16.0"#, r#""rmax": 16.0"#)), "grid.rmax");
        assert_eq!(key_of(&GOOD.replace("map_bump", "gaussian")), "init.kind");
        assert_eq!(key_of(&GOOD.replace(r#", "a": 0.5"#, "")), "init.a");
        assert_eq!(key_of(r#"{"grid": {"n": 128, "r_max": 1}}"#), "time");
        assert_eq!(key_of("[1]"), "<document>");
        assert_eq!(key_of("{"), "<document>");
    }

    #[test]
    fn mass_rescale_bounds() {
        let with = |m: &str| GOOD.replace(r#""a": 0.5"#, &format!(r#""mass_rescale": {m}"#));
        assert!(RunConfig::parse(&with("0.1"), Path::new("")).is_ok());
        assert_eq!(key_of(&with("5.0")), "init.mass_rescale");
    }
}
