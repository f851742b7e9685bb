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

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use itree::analysis::{
    chi_square_merged, estimate, exact_bin_probabilities, histogram, tv_distance, tv_noise_floor,
    write_sweep_csv, Estimate, Observable, SweepResult,
};
use itree::circuit::{build_circuit, decompose, qasm_export, statevector_run};
use itree::event::{read_events_csv, write_events_csv};
use itree::model::{decouple, solve_rotation_angle, StepAmplitudes};
use itree::oracle::{
    brute_force_distribution, exact_observable_expectation, matrix_product_distribution,
    OutcomeDistribution, MATRIX_PRODUCT_MAX_N,
};
use itree::samplers::{enumerate_two_qubit_distribution, Method};
use itree::ModelConfig;

use crate::args::*;
use crate::manifest::RunManifest;
use crate::{CliError, CliResult, EXIT_CONFIG};

pub fn dispatch(command: &Command) -> CliResult<()> {
    match command {
        Command::Sample(a) => sample(a),
        Command::Exact(a) => exact(a),
        Command::SolveBasis(a) => solve_basis(a),
        Command::ExportQasm(a) => export_qasm(a),
        Command::Compare(a) => compare(a),
        Command::Hist(a) => hist(a),
    }
}

pub fn load_config(path: &Path) -> CliResult<ModelConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("{}: {}", path.display(), e)))?;
    ModelConfig::from_json(&text).map_err(|e| {
        let mut err = CliError::from(e);
        err.code = EXIT_CONFIG;
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn path_arg(p: &Path) -> String {
    p.display().to_string()
}

fn sample(a: &SampleArgs) -> CliResult<()> {
    let start = Instant::now();
    let mut config = load_config(&a.config)?;
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    let method = Method::from(a.method);
    let events = method.sample(&config, a.events)?;
    let mut buf = Vec::new();
    write_events_csv(&mut buf, &events).expect("write to memory");
    write_file(&a.out, &buf)?;

    let mut m = RunManifest::new("sample");
    m.argv = vec![
        "sample".into(),
        "--method".into(),
        method.label().into(),
        "--config".into(),
        path_arg(&a.config),
        "--events".into(),
        a.events.to_string(),
        "--seed".into(),
        config.seed.to_string(),
        "--out".into(),
        path_arg(&a.out),
    ];
    m.method = Some(method.label().into());
    m.events = Some(a.events);
    m.seed = Some(config.seed);
    m.config = Some(config);
    m.outputs = vec![a.out.clone()];
    m.wall_time_seconds = start.elapsed().as_secs_f64();
    m.write(&RunManifest::path_for(&a.out))
}

fn exact(a: &ExactArgs) -> CliResult<()> {
    let start = Instant::now();
    let config = load_config(&a.config)?;
    let (label, dist) = match a.algorithm {
        AlgorithmArg::Brute => ("brute", brute_force_distribution(&config)?),
        AlgorithmArg::Matrix => ("matrix", matrix_product_distribution(&config)?),
        AlgorithmArg::TwoQubitEnum => {
            ("two-qubit-enum", enumerate_two_qubit_distribution(&config)?)
        }
        AlgorithmArg::Statevector => ("statevector", statevector_run(&config)?),
    };
    let mut buf = Vec::new();
    dist.write_csv(&mut buf).expect("write to memory");
    write_file(&a.out, &buf)?;

    let mut m = RunManifest::new("exact");
    m.argv = vec![
        "exact".into(),
        "--algorithm".into(),
        label.into(),
        "--config".into(),
        path_arg(&a.config),
        "--out".into(),
        path_arg(&a.out),
    ];
    m.method = Some(label.into());
    m.seed = Some(config.seed);
    m.config = Some(config);
    m.outputs = vec![a.out.clone()];
    m.wall_time_seconds = start.elapsed().as_secs_f64();
    m.write(&RunManifest::path_for(&a.out))
}

#[derive(Debug, Serialize)]
struct BasisSolution {
    lambda: f64,
    theta_down: f64,
    theta_up: f64,
}

fn solve_basis(a: &SolveBasisArgs) -> CliResult<()> {
    let start = Instant::now();
    let text = fs::read_to_string(&a.amplitudes)
        .map_err(|e| CliError::config(format!("{}: {}", a.amplitudes.display(), e)))?;
    let amps: StepAmplitudes = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {}", a.amplitudes.display(), e)))?;
    amps.check_finite()?;
    let report = amps.validate_unitarity();
    if !report.pass {
        return Err(CliError::new(
            EXIT_CONFIG,
            "NotUnitary",
            format!(
                "row norm residuals {:e}, {:e}",
                report.residuals[0], report.residuals[1]
            ),
        ));
    }
    let lambda = solve_rotation_angle(&amps)?;
    let dec = decouple(&amps, lambda)?;
    let out = BasisSolution {
        lambda,
        theta_down: dec.theta_down(),
        theta_up: dec.theta_up(),
    };
    let json = serde_json::to_string_pretty(&out).expect("solution serializes") + "\n";
    let Some(path) = &a.out else {
        print!("{}", json);
        return Ok(());
    };
    write_file(path, json.as_bytes())?;
    let mut m = RunManifest::new("solve-basis");
    m.argv = vec![
        "solve-basis".into(),
        "--amplitudes".into(),
        path_arg(&a.amplitudes),
        "--out".into(),
        path_arg(path),
    ];
    m.outputs = vec![path.clone()];
    m.wall_time_seconds = start.elapsed().as_secs_f64();
    m.write(&RunManifest::path_for(path))
}

fn export_qasm(a: &ExportQasmArgs) -> CliResult<()> {
    let start = Instant::now();
    let config = load_config(&a.config)?;
    let circuit = build_circuit(&config);
    let circuit = if a.decomposed {
        decompose(&circuit)
    } else {
        circuit
    };
    let text = qasm_export(&circuit, a.decomposed)?;
    write_file(&a.out, text.as_bytes())?;

    let mut m = RunManifest::new("export-qasm");
    m.argv = vec!["export-qasm".into(), "--config".into(), path_arg(&a.config)];
    if a.decomposed {
        m.argv.push("--decomposed".into());
    }
    m.argv.extend(["--out".into(), path_arg(&a.out)]);
    m.config = Some(config);
    m.outputs = vec![a.out.clone()];
    m.wall_time_seconds = start.elapsed().as_secs_f64();
    m.write(&RunManifest::path_for(&a.out))
}

fn hist(a: &HistArgs) -> CliResult<()> {
    let start = Instant::now();
    let file = fs::File::open(&a.events).map_err(|e| CliError::io(&a.events, e))?;
    let events = read_events_csv(std::io::BufReader::new(file))?;
    let h = histogram(&events, a.observable.into())?;
    let mut buf = Vec::new();
    h.write_csv(&mut buf).expect("write to memory");
    write_file(&a.out, &buf)?;

    let observable = Observable::from(a.observable);
    let mut m = RunManifest::new("hist");
    m.argv = vec![
        "hist".into(),
        "--events".into(),
        path_arg(&a.events),
        "--observable".into(),
        observable.name().into(),
        "--out".into(),
        path_arg(&a.out),
    ];
    m.events = Some(events.len());
    m.outputs = vec![a.out.clone()];
    m.wall_time_seconds = start.elapsed().as_secs_f64();
    m.write(&RunManifest::path_for(&a.out))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{:.16e}", v)).unwrap_or_default()
}

/// One row of `summary.csv`.
struct SummaryRow {
    lambda: f64,
    method: &'static str,
    tv: Option<f64>,
    noise_floor: Option<f64>,
    chi2: [Option<(f64, usize)>; 2],
}

fn compare(a: &CompareArgs) -> CliResult<()> {
    let start = Instant::now();
    let mut template = load_config(&a.config)?;
    if let Some(seed) = a.seed {
        template.seed = seed;
    }
    let grid = parse_sweep(&a.lambda_sweep).map_err(CliError::config)?;
    itree::analysis::check_lambda_grid(&grid)?;
    let methods: Vec<Method> = a.methods.iter().map(|&m| m.into()).collect();
    let with_oracle = template.n_steps <= MATRIX_PRODUCT_MAX_N;

    let mut sweeps: Vec<SweepResult> = methods
        .iter()
        .map(|m| SweepResult {
            method: m.label().into(),
            lambdas: grid.clone(),
            estimates: Vec::new(),
        })
        .collect();
    let mut exact_sweep = SweepResult {
        method: "exact".into(),
        lambdas: grid.clone(),
        estimates: Vec::new(),
    };
    let mut summary = Vec::new();

    for &lambda in &grid {
        let config = template.with_lambda(lambda);
        let oracle: Option<OutcomeDistribution> = if with_oracle {
            Some(matrix_product_distribution(&config)?)
        } else {
            None
        };
        if let Some(dist) = &oracle {
            exact_sweep.estimates.push(
                Observable::ALL.map(|o| Estimate::exact(exact_observable_expectation(dist, o))),
            );
        }
        for (method, sweep) in methods.iter().zip(sweeps.iter_mut()) {
            let events = method.sample(&config, a.events)?;
            if events.is_empty() {
                sweep.estimates.push([Estimate::exact(f64::NAN); 2]);
                summary.push(SummaryRow {
                    lambda,
                    method: method.label(),
                    tv: None,
                    noise_floor: None,
                    chi2: [None, None],
                });
                continue;
            }
            sweep.estimates.push([
                estimate(&events, Observable::ALL[0])?,
                estimate(&events, Observable::ALL[1])?,
            ]);
            let mut row = SummaryRow {
                lambda,
                method: method.label(),
                tv: None,
                noise_floor: None,
                chi2: [None, None],
            };
            if let Some(dist) = &oracle {
                let empirical = OutcomeDistribution::from_events(config.n_steps, &events)?;
                row.tv = Some(tv_distance(&empirical, dist)?);
                row.noise_floor = Some(tv_noise_floor(dist, events.len()));
                for (k, obs) in Observable::ALL.iter().enumerate() {
                    let h = histogram(&events, *obs)?;
                    let expected: Vec<(u32, f64)> = exact_bin_probabilities(dist, *obs)
                        .into_iter()
                        .map(|(b, p)| (b, p * events.len() as f64))
                        .collect();
                    row.chi2[k] = chi_square_merged(&h, &expected)
                        .ok()
                        .map(|c| (c.statistic, c.dof));
                }
            }
            summary.push(row);
        }
    }
    if with_oracle {
        sweeps.push(exact_sweep);
    }

    let sweep_path = a.out_dir.join("sweep.csv");
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &sweeps).expect("write to memory");
    write_file(&sweep_path, &buf)?;

    let summary_path = a.out_dir.join("summary.csv");
    let mut text = String::from("lambda,method,oracle,tv,noise_floor,chi2_first_left,dof_first_left,chi2_num_left,dof_num_left\n");
    for r in &summary {
        let chi = |k: usize| match r.chi2[k] {
            Some((s, d)) => (format!("{:.16e}", s), d.to_string()),
            None => (String::new(), String::new()),
        };
        let (c0, d0) = chi(0);
        let (c1, d1) = chi(1);
        let _ = writeln!(
            text,
            "{:.16e},{},{},{},{},{},{},{},{}",
            r.lambda,
            r.method,
            if with_oracle { "matrix" } else { "none" },
            fmt_opt(r.tv),
            fmt_opt(r.noise_floor),
            c0,
            d0,
            c1,
            d1
        );
    }
    write_file(&summary_path, text.as_bytes())?;

    let mut m = RunManifest::new("compare");
    m.argv = vec![
        "compare".into(),
        "--config".into(),
        path_arg(&a.config),
        "--lambda-sweep".into(),
        a.lambda_sweep.clone(),
        "--methods".into(),
        methods
            .iter()
            .map(|m| m.label())
            .collect::<Vec<_>>()
            .join(","),
        "--events".into(),
        a.events.to_string(),
        "--seed".into(),
        template.seed.to_string(),
        "--out-dir".into(),
        path_arg(&a.out_dir),
    ];
    m.method = Some(
        methods
            .iter()
            .map(|m| m.label())
            .collect::<Vec<_>>()
            .join(","),
    );
    m.events = Some(a.events);
    m.seed = Some(template.seed);
    m.config = Some(template);
    m.outputs = vec![sweep_path, summary_path];
    m.wall_time_seconds = start.elapsed().as_secs_f64();
    m.write(&a.out_dir.join("manifest.json"))
}
