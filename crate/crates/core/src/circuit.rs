//! Timestep-ordered Clifford circuits for memory experiments.
//!
//! A circuit is a list of timesteps; each timestep holds a set of operations
//! touching disjoint qubits. The text serialization is line-oriented: a
//! `#`-prefixed metadata header, then one timestep per line with `OP q [q2]`
//! tokens in canonical (first-qubit sorted) order. Round-trips are byte-exact.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    pub fn as_str(self) -> &'static str {
        match self {
            Basis::X => "X",
            Basis::Z => "Z",
        }
    }

    pub fn parse(s: &str) -> Result<Basis> {
        match s {
            "X" => Ok(Basis::X),
            "Z" => Ok(Basis::Z),
            _ => Err(Error::invalid(format!("unknown basis `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Standard,
    Zxxz,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Zxxz => "zxxz",
        }
    }

    pub fn parse(s: &str) -> Result<Variant> {
        match s {
            "standard" => Ok(Variant::Standard),
            "zxxz" => Ok(Variant::Zxxz),
            _ => Err(Error::invalid(format!("unknown variant `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    /// Prepare |0> (ground state).
    Prep(usize),
    GateX(usize),
    GateH(usize),
    GateCz(usize, usize),
    Measure(usize),
    Reset(usize),
    Idle(usize),
}

impl Op {
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Op::Prep(q) | Op::GateX(q) | Op::GateH(q) | Op::Measure(q) | Op::Reset(q) | Op::Idle(q) => (q, None),
            Op::GateCz(a, b) => (a, Some(b)),
        }
    }

    fn mnemonic(&self) -> &'static str {
        match self {
            Op::Prep(_) => "P",
            Op::GateX(_) => "X",
            Op::GateH(_) => "H",
            Op::GateCz(_, _) => "CZ",
            Op::Measure(_) => "M",
            Op::Reset(_) => "R",
            Op::Idle(_) => "I",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Timestep {
    pub ops: Vec<Op>,
}

/// Circuit metadata carried through every artifact derived from it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitMeta {
    pub distance: usize,
    pub rounds: usize,
    pub basis: Basis,
    pub bitstring: Vec<bool>,
    pub variant: Variant,
}

impl CircuitMeta {
    pub fn bitstring_str(&self) -> String {
        self.bitstring.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub timesteps: Vec<Timestep>,
    pub meta: CircuitMeta,
}

impl Circuit {
    /// Total number of measurement operations.
    pub fn n_measurements(&self) -> usize {
        self.timesteps
            .iter()
            .flat_map(|t| &t.ops)
            .filter(|op| matches!(op, Op::Measure(_)))
            .count()
    }

    /// Global outcome index of each measurement, in execution order:
    /// `(timestep, qubit)` pairs.
    pub fn measurement_order(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (t, step) in self.timesteps.iter().enumerate() {
            for op in &step.ops {
                if let Op::Measure(q) = op {
                    out.push((t, *q));
                }
            }
        }
        out
    }

    /// Every qubit appears in at most one operation per timestep.
    pub fn check_wellformed(&self) -> Result<()> {
        let mut seen = vec![usize::MAX; self.n_qubits];
        for (t, step) in self.timesteps.iter().enumerate() {
            for op in &step.ops {
                let (a, b) = op.qubits();
                for q in [Some(a), b].into_iter().flatten() {
                    if q >= self.n_qubits {
                        return Err(Error::invalid(format!("op touches qubit {q} out of range")));
                    }
                    if seen[q] == t {
                        return Err(Error::invalid(format!("qubit {q} used twice in timestep {t}")));
                    }
                    seen[q] = t;
                }
            }
        }
        Ok(())
    }

    /// Canonicalize op order inside each timestep (sorted by qubit ids).
    pub fn canonicalize(&mut self) {
        for step in &mut self.timesteps {
            for op in &mut step.ops {
                if let Op::GateCz(a, b) = op {
                    if a > b {
                        std::mem::swap(a, b);
                    }
                }
            }
            step.ops.sort_by_key(|op| {
                let (a, b) = op.qubits();
                (a, b.unwrap_or(0))
            });
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# distance={}", self.meta.distance);
        let _ = writeln!(s, "# rounds={}", self.meta.rounds);
        let _ = writeln!(s, "# basis={}", self.meta.basis.as_str());
        let _ = writeln!(s, "# bitstring={}", self.meta.bitstring_str());
        let _ = writeln!(s, "# variant={}", self.meta.variant.as_str());
        let _ = writeln!(s, "# qubits={}", self.n_qubits);
        for step in &self.timesteps {
            let mut first = true;
            for op in &step.ops {
                if !first {
                    s.push(' ');
                }
                first = false;
                let (a, b) = op.qubits();
                match b {
                    Some(b) => {
                        let _ = write!(s, "{} {} {}", op.mnemonic(), a, b);
                    }
                    None => {
                        let _ = write!(s, "{} {}", op.mnemonic(), a);
                    }
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut header = std::collections::HashMap::new();
        let mut timesteps = Vec::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some((k, v)) = rest.split_once('=') {
                    header.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut ops = Vec::new();
            let mut toks = line.split_whitespace().peekable();
            while let Some(tok) = toks.next() {
                let mut arg = || -> Result<usize> {
                    toks.next()
                        .ok_or_else(|| Error::Format(format!("truncated op `{tok}`")))?
                        .parse()
                        .map_err(|_| Error::Format(format!("bad qubit index after `{tok}`")))
                };
                let op = match tok {
                    "P" => Op::Prep(arg()?),
                    "X" => Op::GateX(arg()?),
                    "H" => Op::GateH(arg()?),
                    "CZ" => {
                        let a = arg()?;
                        let b = arg()?;
                        Op::GateCz(a, b)
                    }
                    "M" => Op::Measure(arg()?),
                    "R" => Op::Reset(arg()?),
                    "I" => Op::Idle(arg()?),
                    _ => return Err(Error::Format(format!("unknown op `{tok}`"))),
                };
                ops.push(op);
            }
            timesteps.push(Timestep { ops });
        }
        let get = |k: &str| -> Result<&String> {
            header.get(k).ok_or_else(|| Error::Format(format!("missing header `{k}`")))
        };
        let distance: usize =
            get("distance")?.parse().map_err(|_| Error::Format("bad distance".into()))?;
        let rounds: usize = get("rounds")?.parse().map_err(|_| Error::Format("bad rounds".into()))?;
        let n_qubits: usize = get("qubits")?.parse().map_err(|_| Error::Format("bad qubits".into()))?;
        let basis = Basis::parse(get("basis")?)?;
        let variant = Variant::parse(get("variant")?)?;
        let bit_text = get("bitstring")?;
        let bitstring: Vec<bool> = bit_text
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Format("bitstring must be 0/1".into())),
            })
            .collect::<Result<_>>()?;
        let mut circuit = Circuit {
            n_qubits,
            timesteps,
            meta: CircuitMeta { distance, rounds, basis, bitstring, variant },
        };
        circuit.canonicalize();
        circuit.check_wellformed()?;
        Ok(circuit)
    }
}
