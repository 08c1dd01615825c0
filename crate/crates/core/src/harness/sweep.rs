//! Grids of comparisons over monitor parameters.
//!
//! A grid file lists the values to cross:
//!
//! ```toml
//! alpha = [0.01, 0.05, 0.1]
//! interval = [20.0, 25.0, 30.0]
//! seeds = [1, 2, 3]      # optional; defaults to the scenario seed
//! ```
//!
//! Points are ordered alpha-major. Each table row holds the per-column
//! median over seeds.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::compare::{compare, write_table, ComparisonSummary};
use crate::harness::config::ScenarioConfig;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub alpha: Vec<f64>,
    pub interval: Vec<f64>,
    #[serde(default)]
    pub seeds: Vec<u64>,
}

impl Grid {
    pub fn from_toml(text: &str) -> Result<Self> {
        let grid: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_empty() || self.interval.is_empty() {
            return Err(Error::Config("grid needs at least one alpha and one interval".into()));
        }
        Ok(())
    }

    /// Grid points in alpha-major order.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.alpha
            .iter()
            .flat_map(|&a| self.interval.iter().map(move |&i| (a, i)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub parameters: String,
    pub alpha: f64,
    pub interval: f64,
    /// Per-seed results, in seed order.
    pub per_seed: Vec<ComparisonSummary>,
    pub median: ComparisonSummary,
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

pub fn median_summary(rows: &[ComparisonSummary]) -> ComparisonSummary {
    let col = |f: fn(&ComparisonSummary) -> f64| median(&mut rows.iter().map(f).collect::<Vec<_>>());
    ComparisonSummary {
        reduced: col(|s| s.reduced),
        overall: col(|s| s.overall),
        best: col(|s| s.best),
        makespan: col(|s| s.makespan),
    }
}

/// Runs one comparison per grid point and seed; rows come back in grid order.
pub fn sweep(base: &ScenarioConfig, grid: &Grid) -> Result<Vec<SweepRow>> {
    grid.validate()?;
    let seeds = if grid.seeds.is_empty() { vec![base.seed] } else { grid.seeds.clone() };
    let points = grid.points();
    let jobs: Vec<(usize, u64)> =
        (0..points.len()).flat_map(|p| seeds.iter().map(move |&s| (p, s))).collect();

    let results: Vec<Result<ComparisonSummary>> = jobs
        .par_iter()
        .map(|&(p, seed)| {
            let (alpha, interval) = points[p];
            let mut config = base.with_seed(seed);
            config.monitor.alpha = alpha;
            config.monitor.interval = interval;
            config.validate()?;
            Ok(compare(&config)?.summary)
        })
        .collect();

    let mut results = results.into_iter();
    let mut rows = Vec::with_capacity(points.len());
    for &(alpha, interval) in &points {
        let per_seed = results.by_ref().take(seeds.len()).collect::<Result<Vec<_>>>()?;
        rows.push(SweepRow {
            parameters: format!("{alpha}, {interval}s"),
            alpha,
            interval,
            median: median_summary(&per_seed),
            per_seed,
        });
    }
    Ok(rows)
}

pub fn write_sweep(dir: &Path, rows: &[SweepRow]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(crate::harness::report::io_err)?;
    let table: Vec<_> = rows.iter().map(|r| (r.parameters.clone(), r.median)).collect();
    write_table(&dir.join("table.csv"), &table)
}
