// Copyright 2026 The itree Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "itree", version, about = "Sample interfering binary trees")]
pub struct Cli {
    /// Worker threads for event generation; outputs do not depend on it.
    #[arg(long, global = true, env = "ITREE_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Generate events with one sampler.
    Sample(SampleArgs),
    /// Write the exact outcome distribution.
    Exact(ExactArgs),
    /// Recover (λ, θ↓, θ↑) from original-basis step amplitudes.
    SolveBasis(SolveBasisArgs),
    /// Write the circuit as OpenQASM 2.0.
    ExportQasm(ExportQasmArgs),
    /// Compare samplers against the exact distribution over a λ grid.
    Compare(CompareArgs),
    /// Histogram an event file.
    Hist(HistArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Statevector,
    TwoQubit,
    Qica,
    QicaLiteral,
    Mcmc,
}

impl From<SamplerArg> for itree::samplers::Method {
    fn from(m: SamplerArg) -> Self {
        use itree::samplers::Method;
        match m {
            SamplerArg::Statevector => Method::Statevector,
            SamplerArg::TwoQubit => Method::TwoQubit,
            SamplerArg::Qica => Method::Qica,
            SamplerArg::QicaLiteral => Method::QicaLiteral,
            SamplerArg::Mcmc => Method::Mcmc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Brute,
    Matrix,
    TwoQubitEnum,
    Statevector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObservableArg {
    FirstLeftDepth,
    NumLeftBranches,
}

impl From<ObservableArg> for itree::analysis::Observable {
    fn from(o: ObservableArg) -> Self {
        match o {
            ObservableArg::FirstLeftDepth => itree::analysis::Observable::FirstLeftDepth,
            ObservableArg::NumLeftBranches => itree::analysis::Observable::NumLeftBranches,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[arg(long, value_enum)]
    pub method: SamplerArg,
    /// Config JSON.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub events: usize,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ExactArgs {
    #[arg(long, value_enum)]
    pub algorithm: AlgorithmArg,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SolveBasisArgs {
    /// JSON with the fields aLdd, aLdu, aLud, aLuu, aRdd, aRdu, aRud, aRuu.
    #[arg(long)]
    pub amplitudes: PathBuf,
    /// Write the result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExportQasmArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Emit only ry, x and cx gates.
    #[arg(long)]
    pub decomposed: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// `start:stop:count` in radians; `pi`, `pi/K` and `K*pi` are accepted.
    #[arg(long)]
    pub lambda_sweep: String,
    /// Comma-separated sampler names.
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    pub methods: Vec<SamplerArg>,
    #[arg(long)]
    pub events: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for sweep.csv, summary.csv and manifest.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct HistArgs {
    /// Event CSV written by `sample`.
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long, value_enum)]
    pub observable: ObservableArg,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_radians(s: &str) -> Result<f64, String> {
    use std::f64::consts::PI;
    let s = s.trim();
    let bad = || format!("bad angle {:?}", s);
    if s == "pi" {
        return Ok(PI);
    }
    if let Some(div) = s.strip_prefix("pi/") {
        return div.parse::<f64>().map(|d| PI / d).map_err(|_| bad());
    }
    if let Some(k) = s.strip_suffix("*pi") {
        return k.parse::<f64>().map(|k| k * PI).map_err(|_| bad());
    }
    s.parse::<f64>().map_err(|_| bad())
}

/// Parse `start:stop:count` into an evenly spaced grid.
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:stop:count, got {:?}", spec));
    }
    let start = parse_radians(parts[0])?;
    let stop = parse_radians(parts[1])?;
    let count: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| format!("bad count {:?}", parts[2]))?;
    match count {
        0 => Err("sweep count must be at least 1".into()),
        1 => Ok(vec![start]),
        _ => {
            let step = (stop - start) / (count - 1) as f64;
            let mut grid: Vec<f64> = (0..count).map(|i| start + step * i as f64).collect();
            grid[count - 1] = stop;
            Ok(grid)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn sweep_parsing() {
        assert_eq!(
            parse_sweep("0:pi/2:3").unwrap(),
            vec![0.0, FRAC_PI_2 / 2.0, FRAC_PI_2]
        );
        assert_eq!(parse_sweep("0.5:0.5:1").unwrap(), vec![0.5]);
        assert_eq!(parse_sweep("0:0.5*pi:2").unwrap(), vec![0.0, 0.5 * PI]);
        assert!(parse_sweep("0:1").is_err());
        assert!(parse_sweep("0:1:0").is_err());
        assert!(parse_sweep("a:1:2").is_err());
    }

    #[test]
    fn methods_list() {
        let cli = Cli::try_parse_from([
            "itree",
            "compare",
            "--config",
            "c.json",
            "--lambda-sweep",
            "0:1:2",
            "--methods",
            "two-qubit,mcmc",
            "--events",
            "10",
            "--out-dir",
            "o",
        ])
        .unwrap();
        match cli.command {
            Command::Compare(a) => {
                assert_eq!(a.methods, vec![SamplerArg::TwoQubit, SamplerArg::Mcmc])
            }
            _ => panic!("wrong subcommand"),
        }
    }
}
