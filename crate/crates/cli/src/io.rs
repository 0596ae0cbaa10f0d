//! Field files, trajectory snapshots and report persistence.

use anyhow::{anyhow, bail, Context, Result};
use equimap_core::evolve::Snapshot;
use equimap_core::{Complex64, PsiPair, RadialField, RadialGrid};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Node matching tolerance for field files.
pub const NODE_TOLERANCE: f64 = 1e-12;

/// Parse `r value_re value_im` lines; blank lines and `#` comments are skipped.
pub fn parse_field(text: &str, grid: &RadialGrid) -> Result<RadialField> {
    let mut values = Vec::with_capacity(grid.n());
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 3 {
            bail!("line {}: expected `r value_re value_im`, got {} columns", lineno + 1, cols.len());
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| anyhow!("line {}: `{s}` is not a finite number", lineno + 1))
        };
        let (r, re, im) = (num(cols[0])?, num(cols[1])?, num(cols[2])?);
        let j = values.len();
        if j >= grid.n() {
            bail!("line {}: more than n = {} rows", lineno + 1, grid.n());
        }
        let node = grid.nodes()[j];
        if (r - node).abs() > NODE_TOLERANCE * node.max(1.0) {
            bail!("line {}: r = {r} does not match grid node {j} at r = {node}", lineno + 1);
        }
        values.push(Complex64::new(re, im));
    }
    if values.len() != grid.n() {
        bail!("expected {} rows, found {}", grid.n(), values.len());
    }
    Ok(RadialField::new(grid, values)?)
}

pub fn read_field(path: &Path, grid: &RadialGrid) -> Result<RadialField> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_field(&text, grid).with_context(|| format!("field file {}", path.display()))
}

pub fn format_field(f: &RadialField) -> String {
    let mut out = String::with_capacity(f.grid().n() * 72);
    for (r, v) in f.grid().nodes().iter().zip(f.values()) {
        out.push_str(&format!("{r:.16e} {:.16e} {:.16e}\n", v.re, v.im));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Pretty JSON with a trailing newline, to a file or to stdout.
pub fn emit_json(value: &impl Serialize, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => write_text(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct StoredSnapshot {
    t: f64,
    plus_re: Vec<f64>,
    plus_im: Vec<f64>,
    minus_re: Vec<f64>,
    minus_im: Vec<f64>,
}

/// Snapshots of one run with the grid they live on.
#[derive(Debug, Serialize, Deserialize)]
pub struct StoredTrajectory {
    n: usize,
    r_max: f64,
    dt: f64,
    snapshots: Vec<StoredSnapshot>,
}

impl StoredTrajectory {
    pub fn new(grid: &RadialGrid, dt: f64, snapshots: &[Snapshot]) -> Self {
        StoredTrajectory {
            n: grid.n(),
            r_max: grid.r_max(),
            dt,
            snapshots: snapshots
                .iter()
                .map(|s| StoredSnapshot {
                    t: s.t,
                    plus_re: s.state.plus.re(),
                    plus_im: s.state.plus.im(),
                    minus_re: s.state.minus.re(),
                    minus_im: s.state.minus.im(),
                })
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<(RadialGrid, Vec<Snapshot>)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let stored: StoredTrajectory =
            serde_json::from_str(&text).with_context(|| format!("trajectory file {}", path.display()))?;
        let grid = RadialGrid::new(stored.n, stored.r_max)?;
        let field = |re: &[f64], im: &[f64]| -> Result<RadialField> {
            if re.len() != grid.n() || im.len() != grid.n() {
                bail!("snapshot length does not match n = {}", grid.n());
            }
            let v = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
            Ok(RadialField::new(&grid, v)?)
        };
        let snapshots = stored
            .snapshots
            .iter()
            .map(|s| {
                Ok(Snapshot {
                    t: s.t,
                    state: PsiPair::new(field(&s.plus_re, &s.plus_im)?, field(&s.minus_re, &s.minus_im)?)?,
                })
            })
            .collect::<Result<Vec<_>>>()
            .with_context(|| format!("trajectory file {}", path.display()))?;
        Ok((grid, snapshots))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_text_round_trip() {
        let g = RadialGrid::new(16, 4.0).unwrap();
        let f = RadialField::from_fn(&g, |r| Complex64::new(r.sin(), -r * 1e-300));
        let back = parse_field(&format_field(&f), &g).unwrap();
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn field_text_errors() {
        let g = RadialGrid::new(16, 4.0).unwrap();
        let text = format_field(&RadialField::zeros(&g));
        let lines: Vec<&str> = text.lines().collect();
        assert!(parse_field(&lines[..15].join("\n"), &g).is_err());
        let shifted = text.replacen("1.2500000000000000e-1", "1.2500000001000000e-1", 1);
        let e = parse_field(&shifted, &g).unwrap_err().to_string();
        assert!(e.contains("line 1"), "{e}");
        assert!(parse_field(&text.replacen(' ', " x ", 1), &g).is_err());
        let commented = format!("# header\n\n{text}");
        assert!(parse_field(&commented, &g).is_ok());
    }
}
