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

//! The `(N+1)`-qubit tree circuit.
//!
//! Qubit 0 holds the spin (`|0⟩` = down), qubit `i` records the move at step
//! `i` (`|1⟩` = left). The circuit rotates the spin into the decoupled basis,
//! applies one spin-controlled `ry` per spin value and step, and rotates back.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::event::Event;
use crate::model::ModelConfig;
use crate::oracle::{OutcomeDistribution, MATRIX_PRODUCT_MAX_N};

pub const STATEVECTOR_MAX_N: usize = MATRIX_PRODUCT_MAX_N;
pub const UNITARY_MAX_N: usize = 6;

pub const SPIN_QUBIT: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// `[[cos φ/2, −sin φ/2], [sin φ/2, cos φ/2]]`.
    Ry {
        qubit: usize,
        angle: f64,
    },
    X {
        qubit: usize,
    },
    Cx {
        control: usize,
        target: usize,
    },
    /// `ry(angle)` on `target` when `control` reads `control_value`.
    Cry {
        angle: f64,
        control: usize,
        control_value: bool,
        target: usize,
    },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Ry { qubit, .. } | Gate::X { qubit } => vec![qubit],
            Gate::Cx { control, target }
            | Gate::Cry {
                control, target, ..
            } => vec![control, target],
        }
    }

    pub fn is_standard(&self) -> bool {
        !matches!(self, Gate::Cry { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let qubits = gate.qubits();
        if let Some(&q) = qubits.iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::InvalidGate(format!(
                "qubit {} out of range for {} qubits",
                q, self.n_qubits
            )));
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::InvalidGate(format!(
                "control equals target ({})",
                qubits[0]
            )));
        }
        if let Gate::Ry { angle, .. } | Gate::Cry { angle, .. } = gate {
            if !angle.is_finite() {
                return Err(Error::NonFinite("gate angle"));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}

/// `ry` angle that sends `|0⟩` to `sin θ|0⟩ + cos θ|1⟩`, i.e. puts the left
/// amplitude `cos θ` on the `|1⟩` outcome.
pub fn path_rotation_angle(theta: f64) -> f64 {
    PI - 2.0 * theta
}

/// Abstract circuit: `ry(2λ)` on the spin, two controlled rotations per step
/// (control-on-0 for spin down first), then `ry(−2λ)`.
pub fn build_circuit(config: &ModelConfig) -> Circuit {
    let params = config.params();
    let n = params.n_steps();
    let mut circuit = Circuit::new(n + 1);
    let mut push = |g| circuit.push(g).expect("tree circuit gates are valid");
    push(Gate::Ry {
        qubit: SPIN_QUBIT,
        angle: 2.0 * params.lambda,
    });
    for step in 0..n {
        for (theta, control_value) in [
            (params.theta_down[step], false),
            (params.theta_up[step], true),
        ] {
            push(Gate::Cry {
                angle: path_rotation_angle(theta),
                control: SPIN_QUBIT,
                control_value,
                target: step + 1,
            });
        }
    }
    push(Gate::Ry {
        qubit: SPIN_QUBIT,
        angle: -2.0 * params.lambda,
    });
    circuit
}

/// Rewrite every controlled rotation with `ry`, `x` and `cx`:
/// `cry(φ) = ry(φ/4)·cx·ry(−φ/2)·cx·ry(φ/4)` on the target, and a
/// control-on-0 gate is conjugated by `x` on the control.
pub fn decompose(circuit: &Circuit) -> Circuit {
    let mut out = Circuit::new(circuit.n_qubits());
    for &gate in circuit.gates() {
        match gate {
            Gate::Cry {
                angle,
                control,
                control_value,
                target,
            } => {
                let flip = !control_value;
                if flip {
                    out.gates.push(Gate::X { qubit: control });
                }
                out.gates.extend_from_slice(&[
                    Gate::Ry {
                        qubit: target,
                        angle: angle / 4.0,
                    },
                    Gate::Cx { control, target },
                    Gate::Ry {
                        qubit: target,
                        angle: -angle / 2.0,
                    },
                    Gate::Cx { control, target },
                    Gate::Ry {
                        qubit: target,
                        angle: angle / 4.0,
                    },
                ]);
                if flip {
                    out.gates.push(Gate::X { qubit: control });
                }
            }
            other => out.gates.push(other),
        }
    }
    out
}

/// Dense real statevector; bit `q` of the index is qubit `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<f64>,
}

impl Statevector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![0.0; 1 << n_qubits];
        amps[0] = 1.0;
        Statevector { n_qubits, amps }
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a * a).sum()
    }

    /// Apply a 2x2 real matrix to `target` on the amplitude pairs whose
    /// `control` bit matches.
    fn apply_pairs(&mut self, target: usize, control: Option<(usize, bool)>, m: [[f64; 2]; 2]) {
        let stride = 1usize << target;
        for (block, chunk) in self.amps.chunks_mut(2 * stride).enumerate() {
            let base = block * 2 * stride;
            let (lo, hi) = chunk.split_at_mut(stride);
            for (k, (a0, a1)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                if let Some((c, v)) = control {
                    if ((base + k) >> c) & 1 != v as usize {
                        continue;
                    }
                }
                let (x, y) = (*a0, *a1);
                *a0 = m[0][0] * x + m[0][1] * y;
                *a1 = m[1][0] * x + m[1][1] * y;
            }
        }
    }

    pub fn apply(&mut self, gate: &Gate) {
        match *gate {
            Gate::Ry { qubit, angle } => self.apply_pairs(qubit, None, ry_matrix(angle)),
            Gate::X { qubit } => self.apply_pairs(qubit, None, [[0.0, 1.0], [1.0, 0.0]]),
            Gate::Cx { control, target } => {
                self.apply_pairs(target, Some((control, true)), [[0.0, 1.0], [1.0, 0.0]])
            }
            Gate::Cry {
                angle,
                control,
                control_value,
                target,
            } => self.apply_pairs(target, Some((control, control_value)), ry_matrix(angle)),
        }
    }
}

pub fn ry_matrix(angle: f64) -> [[f64; 2]; 2] {
    let (s, c) = (0.5 * angle).sin_cos();
    [[c, -s], [s, c]]
}

fn initial_state(config: &ModelConfig) -> Statevector {
    let mut sv = Statevector::zero(config.n_steps + 1);
    let spin = config.initial_spin();
    sv.amps[0] = spin[0];
    sv.amps[1] = spin[1];
    sv
}

fn check_statevector_limit(n: usize) -> Result<()> {
    if n > STATEVECTOR_MAX_N {
        return Err(Error::TooLarge {
            what: "statevector",
            n,
            limit: STATEVECTOR_MAX_N,
        });
    }
    Ok(())
}

/// Simulate the abstract circuit and return the measurement distribution.
pub fn statevector_run(config: &ModelConfig) -> Result<OutcomeDistribution> {
    check_statevector_limit(config.n_steps)?;
    let mut sv = initial_state(config);
    for gate in build_circuit(config).gates() {
        sv.apply(gate);
    }
    let probs = sv.amps.iter().map(|a| a * a).collect();
    let mut dist = OutcomeDistribution::new(config.n_steps, probs, "statevector")?;
    dist.config_hash = crate::oracle::config_hash(config);
    Ok(dist)
}

/// Draw `m` events from the statevector distribution.
pub fn sample_events_statevector(config: &ModelConfig, m: usize) -> Result<Vec<Event>> {
    if m == 0 {
        check_statevector_limit(config.n_steps)?;
        return Ok(Vec::new());
    }
    let dist = statevector_run(config)?;
    Ok(dist.sample(config.seed, m))
}

fn gate_matrix(gate: &Gate, dim: usize) -> DMatrix<f64> {
    let bit = |i: usize, q: usize| (i >> q) & 1;
    DMatrix::from_fn(dim, dim, |i, j| {
        let (target, control, m) = match *gate {
            Gate::Ry { qubit, angle } => (qubit, None, ry_matrix(angle)),
            Gate::X { qubit } => (qubit, None, [[0.0, 1.0], [1.0, 0.0]]),
            Gate::Cx { control, target } => (target, Some((control, 1)), [[0.0, 1.0], [1.0, 0.0]]),
            Gate::Cry {
                angle,
                control,
                control_value,
                target,
            } => (
                target,
                Some((control, control_value as usize)),
                ry_matrix(angle),
            ),
        };
        let rest = !(1usize << target);
        if i & rest != j & rest {
            return 0.0;
        }
        match control {
            Some((c, v)) if bit(j, c) != v => (i == j) as u8 as f64,
            _ => m[bit(i, target)][bit(j, target)],
        }
    })
}

/// Dense unitary `G_k ⋯ G_1` of the whole circuit, built from explicit
/// per-gate matrices (independent of the statevector kernels).
pub fn circuit_unitary(circuit: &Circuit) -> Result<DMatrix<f64>> {
    let n = circuit.n_qubits();
    if n > UNITARY_MAX_N + 1 {
        return Err(Error::TooLarge {
            what: "circuit unitary",
            n: n.saturating_sub(1),
            limit: UNITARY_MAX_N,
        });
    }
    let dim = 1usize << n;
    Ok(circuit
        .gates()
        .iter()
        .fold(DMatrix::identity(dim, dim), |acc, g| {
            gate_matrix(g, dim) * acc
        }))
}

fn fmt_angle(x: f64) -> String {
    format!("{:.16e}", x)
}

const CRY_DEFS: &str = "\
gate cry1(theta) c, t { ry(theta/4) t; cx c, t; ry(-theta/2) t; cx c, t; ry(theta/4) t; }
gate cry0(theta) c, t { x c; ry(theta/4) t; cx c, t; ry(-theta/2) t; cx c, t; ry(theta/4) t; x c; }
";

/// Emit OpenQASM 2.0. With `decomposed` the circuit must contain only
/// `ry`, `x` and `cx`; otherwise controlled rotations are written with the
/// custom gates `cry0`/`cry1` defined in the header.
pub fn qasm_export(circuit: &Circuit, decomposed: bool) -> Result<String> {
    if decomposed {
        if let Some(g) = circuit.gates().iter().find(|g| !g.is_standard()) {
            return Err(Error::UnsupportedGate(format!("{:?}", g)));
        }
    }
    let n = circuit.n_qubits();
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    out.push_str("// q[0]: spin (0 = down, 1 = up); q[i]: move at step i (1 = left)\n");
    if !decomposed {
        out.push_str(CRY_DEFS);
    }
    let _ = writeln!(out, "qreg q[{}];", n);
    let _ = writeln!(out, "creg c[{}];", n);
    for gate in circuit.gates() {
        let _ = match *gate {
            Gate::Ry { qubit, angle } => writeln!(out, "ry({}) q[{}];", fmt_angle(angle), qubit),
            Gate::X { qubit } => writeln!(out, "x q[{}];", qubit),
            Gate::Cx { control, target } => writeln!(out, "cx q[{}], q[{}];", control, target),
            Gate::Cry {
                angle,
                control,
                control_value,
                target,
            } => writeln!(
                out,
                "cry{}({}) q[{}], q[{}];",
                control_value as u8,
                fmt_angle(angle),
                control,
                target
            ),
        };
    }
    for q in 0..n {
        let _ = writeln!(out, "measure q[{}] -> c[{}];", q, q);
    }
    Ok(out)
}

/// Number of gate application lines in emitted QASM.
pub fn count_gate_lines(qasm: &str) -> usize {
    qasm.lines()
        .map(str::trim)
        .filter(|l| {
            ["ry(", "x ", "cx ", "cry0(", "cry1("]
                .iter()
                .any(|p| l.starts_with(p))
        })
        .count()
}

fn parse_qubit(arg: &str) -> Result<usize> {
    let arg = arg.trim();
    arg.strip_prefix("q[")
        .and_then(|s| s.strip_suffix(']'))
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad qubit reference {:?}", arg)))
}

/// Read back the subset of OpenQASM 2.0 written by [`qasm_export`].
pub fn parse_qasm(text: &str) -> Result<Circuit> {
    let mut circuit: Option<Circuit> = None;
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty()
            || line.starts_with("//")
            || line.starts_with("OPENQASM")
            || line.starts_with("include")
            || line.starts_with("gate ")
            || line.starts_with("creg")
            || line.starts_with("measure")
        {
            continue;
        }
        let stmt = line
            .strip_suffix(';')
            .ok_or_else(|| Error::Parse(format!("missing ';' in {:?}", line)))?;
        if let Some(rest) = stmt.strip_prefix("qreg ") {
            let n = rest
                .trim()
                .strip_prefix("q[")
                .and_then(|s| s.strip_suffix(']'))
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad qreg {:?}", line)))?;
            circuit = Some(Circuit::new(n));
            continue;
        }
        let c = circuit
            .as_mut()
            .ok_or_else(|| Error::Parse("gate before qreg".into()))?;
        let (head, args) = stmt
            .split_once(' ')
            .ok_or_else(|| Error::Parse(format!("bad statement {:?}", line)))?;
        let (name, angle) = match head.split_once('(') {
            Some((name, a)) => {
                let a = a
                    .strip_suffix(')')
                    .and_then(|a| a.parse::<f64>().ok())
                    .ok_or_else(|| Error::Parse(format!("bad angle in {:?}", line)))?;
                (name, Some(a))
            }
            None => (head, None),
        };
        let qubits = args
            .split(',')
            .map(parse_qubit)
            .collect::<Result<Vec<_>>>()?;
        let gate = match (name, angle, qubits.as_slice()) {
            ("ry", Some(angle), &[qubit]) => Gate::Ry { qubit, angle },
            ("x", None, &[qubit]) => Gate::X { qubit },
            ("cx", None, &[control, target]) => Gate::Cx { control, target },
            ("cry0" | "cry1", Some(angle), &[control, target]) => Gate::Cry {
                angle,
                control,
                control_value: name == "cry1",
                target,
            },
            _ => return Err(Error::UnsupportedGate(line.to_string())),
        };
        c.push(gate)?;
    }
    circuit.ok_or_else(|| Error::Parse("no qreg declaration".into()))
}
