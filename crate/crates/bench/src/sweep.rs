//! `sweep`: simulated speedup over an `(alpha, c, gamma)` grid.

use std::fs;
use std::path::Path;

use pearl_lab::engines::EngineKind;
use pearl_lab::simulator::{argmax_gamma, sweep_cell, SweepCell};
use rayon::prelude::*;

use crate::error::{BenchError, Result};
use crate::plot;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub engine: EngineKind,
    pub alphas: Vec<f64>,
    pub cs: Vec<f64>,
    pub gammas: Vec<usize>,
    pub steps: usize,
    pub seed: u64,
}

/// Best window for one `(alpha, c)` row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowBest {
    pub alpha: f64,
    pub c: f64,
    pub gamma: usize,
}

/// Parses `0.6,0.8`.
pub fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| BenchError::config("grid", format!("`{x}` is not a number")))
        })
        .collect()
}

/// Parses `1-8`, `2,4,8` or a mix such as `1-3,8`.
pub fn parse_range(s: &str) -> Result<Vec<usize>> {
    let bad = |x: &str| BenchError::config("gammas", format!("`{x}` is not a window or range"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.parse().map_err(|_| bad(part))?, b.parse().map_err(|_| bad(part))?);
                if a > b {
                    return Err(bad(part));
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad(part))?),
        }
    }
    Ok(out)
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.engine == EngineKind::Ar {
            return Err(BenchError::config("engine", "sweeps need sd or pearl"));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(BenchError::config("alphas", "need values in [0, 1]"));
        }
        if self.cs.is_empty() || self.cs.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(BenchError::config("cs", "need positive values"));
        }
        if self.gammas.is_empty() || self.gammas.contains(&0) {
            return Err(BenchError::config("gammas", "need windows of at least 1"));
        }
        if self.steps == 0 {
            return Err(BenchError::config("steps", "must be at least 1"));
        }
        Ok(())
    }

    fn rows(&self) -> Vec<(f64, f64)> {
        self.alphas
            .iter()
            .flat_map(|&a| self.cs.iter().map(move |&c| (a, c)))
            .collect()
    }
}

/// All cells, ordered by alpha, then c, then gamma. Cells are seeded
/// independently so the order of evaluation does not matter.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepCell>> {
    spec.validate()?;
    let jobs: Vec<(f64, f64, usize)> = spec
        .rows()
        .into_iter()
        .flat_map(|(a, c)| spec.gammas.iter().map(move |&g| (a, c, g)))
        .collect();
    jobs.into_par_iter()
        .map(|(a, c, g)| Ok(sweep_cell(spec.engine, a, c, g, spec.steps, spec.seed)?))
        .collect()
}

pub fn row_bests(spec: &SweepSpec, cells: &[SweepCell]) -> Vec<RowBest> {
    cells
        .chunks(spec.gammas.len())
        .map(|row| RowBest {
            alpha: row[0].alpha,
            c: row[0].c,
            gamma: argmax_gamma(row).expect("non-empty row"),
        })
        .collect()
}

pub fn write_csv<W: std::io::Write>(cells: &[SweepCell], w: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["gamma", "alpha", "c", "speedup_mean", "speedup_stderr"])?;
    for cell in cells {
        w.write_record([
            cell.gamma.to_string(),
            cell.alpha.to_string(),
            cell.c.to_string(),
            format!("{:.6}", cell.speedup_mean),
            format!("{:.6}", cell.speedup_stderr),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn heatmap(spec: &SweepSpec, cells: &[SweepCell]) -> String {
    let rows: Vec<(String, Vec<f64>)> = cells
        .chunks(spec.gammas.len())
        .map(|row| {
            (
                format!("a={} c={}", row[0].alpha, row[0].c),
                row.iter().map(|x| x.speedup_mean).collect(),
            )
        })
        .collect();
    let marks: Vec<Option<usize>> = row_bests(spec, cells)
        .iter()
        .map(|b| spec.gammas.iter().position(|&g| g == b.gamma))
        .collect();
    let columns: Vec<String> = spec.gammas.iter().map(|g| format!("g={g}")).collect();
    plot::heatmap(&rows, &columns, &marks, &format!("{} simulated speedup", spec.engine))
}

/// Writes `sweep.csv` and `sweep.svg` into `out`.
pub fn cmd_sweep(spec: &SweepSpec, out: &Path) -> Result<Vec<RowBest>> {
    let cells = run_sweep(spec)?;
    fs::create_dir_all(out).map_err(|e| BenchError::io(out, e))?;
    let path = out.join("sweep.csv");
    let file = fs::File::create(&path).map_err(|e| BenchError::io(&path, e))?;
    write_csv(&cells, file).map_err(|e| BenchError::io(&path, e.into()))?;
    let path = out.join("sweep.svg");
    fs::write(&path, heatmap(spec, &cells)).map_err(|e| BenchError::io(&path, e))?;
    Ok(row_bests(spec, &cells))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_range("1-4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_range("1-2, 8").unwrap(), vec![1, 2, 8]);
        assert!(parse_range("4-1").is_err());
        assert!(parse_range("x").is_err());
        assert_eq!(parse_floats("0.6, 0.8").unwrap(), vec![0.6, 0.8]);
        assert!(parse_floats("0.6,,").is_err());
    }

    #[test]
    fn single_cell_csv() {
        let spec = SweepSpec {
            engine: EngineKind::Pearl,
            alphas: vec![0.8],
            cs: vec![5.0],
            gammas: vec![5],
            steps: 2_000,
            seed: 1,
        };
        let cells = run_sweep(&spec).unwrap();
        let mut buf = Vec::new();
        write_csv(&cells, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "gamma,alpha,c,speedup_mean,speedup_stderr");
        assert!(lines[1].starts_with("5,0.8,5,"));
    }

    #[test]
    fn zero_alpha_speculation_is_slower() {
        let spec = SweepSpec {
            engine: EngineKind::Sd,
            alphas: vec![0.0],
            cs: vec![3.0, 5.0],
            gammas: (1..=6).collect(),
            steps: 1_000,
            seed: 2,
        };
        assert!(run_sweep(&spec).unwrap().iter().all(|c| c.speedup_mean < 1.0));
    }

    #[test]
    fn invalid_grids_rejected() {
        let mut spec = SweepSpec {
            engine: EngineKind::Ar,
            alphas: vec![0.5],
            cs: vec![3.0],
            gammas: vec![1],
            steps: 10,
            seed: 0,
        };
        assert!(run_sweep(&spec).is_err());
        spec.engine = EngineKind::Sd;
        spec.gammas = vec![0];
        assert!(run_sweep(&spec).is_err());
    }
}
