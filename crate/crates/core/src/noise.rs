//! Circuit-level Pauli noise channels and analog (soft) readout.
//!
//! The uniform models attach one error channel per operation:
//! after each single-qubit gate or idle, Y with probability eta*p/(eta+2) and
//! X, Z each with p/(eta+2); after each CZ, each Pauli pair containing a Y
//! with probability eta*p/(7*eta+8) and each of the remaining eight non-identity
//! pairs with p/(7*eta+8); an X with probability p before each measurement and
//! after each reset or the initial preparation. eta = 1 reproduces the
//! depolarizing model; eta may be infinite.
//!
//! Soft readout models an analog outcome for a projected bit i as a Gaussian
//! with mean mu_i (fixed at -1, +1) and a per-class standard deviation, and
//! thresholds it back to a bit. The implied assignment error rate is
//! p_m = erfc(SNR / sqrt(2)) / 2 with SNR = |mu0 - mu1| / (2 sigma); the
//! assignment mechanism is applied on top of the circuit-level channels.

use std::collections::BTreeMap;

use crate::circuit::{Circuit, Op};
use crate::error::{Error, Result};
use crate::rng::CounterRng;

pub const MU0: f64 = -1.0;
pub const MU1: f64 = 1.0;

/// Pauli on one or two qubits, bit-encoded: bit0 = X on q1, bit1 = Z on q1,
/// bit2 = X on q2, bit3 = Z on q2.
pub type PauliBits = u8;

pub const P1_X: PauliBits = 0b01;
pub const P1_Z: PauliBits = 0b10;
pub const P1_Y: PauliBits = 0b11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum OpClass {
    Gate1,
    Gate2,
    Idle,
    Measure,
    Reset,
}

impl OpClass {
    pub fn as_str(self) -> &'static str {
        match self {
            OpClass::Gate1 => "gate1",
            OpClass::Gate2 => "gate2",
            OpClass::Idle => "idle",
            OpClass::Measure => "measure",
            OpClass::Reset => "reset",
        }
    }
}

/// Gaussian readout parameters. Means are fixed at -1 (bit 0) and +1 (bit 1).
#[derive(Clone, Debug, PartialEq)]
pub struct SoftReadoutParams {
    pub pm_ancilla: f64,
    pub pm_data: f64,
    pub sigma_ancilla: f64,
    pub sigma_data: f64,
    pub threshold: f64,
}

impl SoftReadoutParams {
    /// Build from assignment error rates; sigma is derived by inverting
    /// p_m = erfc(1 / (sigma sqrt(2))) / 2 numerically.
    pub fn from_assignment_errors(pm_ancilla: f64, pm_data: f64, threshold: f64) -> Result<Self> {
        for pm in [pm_ancilla, pm_data] {
            if !(0.0..0.5).contains(&pm) {
                return Err(Error::invalid(format!("assignment error {pm} outside [0, 0.5)")));
            }
        }
        Ok(SoftReadoutParams {
            pm_ancilla,
            pm_data,
            sigma_ancilla: sigma_from_pm(pm_ancilla),
            sigma_data: sigma_from_pm(pm_data),
            threshold,
        })
    }
}

/// Uniform circuit-level noise parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseParams {
    /// Error probability per operation.
    pub p: f64,
    /// Y-bias; 1 = depolarizing, may be infinite.
    pub eta: f64,
    /// Per-class probability overrides.
    pub overrides: BTreeMap<OpClass, f64>,
    pub soft: Option<SoftReadoutParams>,
}

impl NoiseParams {
    pub fn depolarizing(p: f64) -> Self {
        NoiseParams { p, eta: 1.0, overrides: BTreeMap::new(), soft: None }
    }

    pub fn biased(p: f64, eta: f64) -> Self {
        NoiseParams { p, eta, overrides: BTreeMap::new(), soft: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.p) {
            return Err(Error::invalid(format!("p = {} outside [0, 1)", self.p)));
        }
        if self.eta < 0.0 || self.eta.is_nan() {
            return Err(Error::invalid(format!("eta = {} must be >= 0", self.eta)));
        }
        for (&class, &p) in &self.overrides {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::invalid(format!("override {} = {p} outside [0, 1)", class.as_str())));
            }
        }
        Ok(())
    }

    fn class_p(&self, class: OpClass) -> f64 {
        *self.overrides.get(&class).unwrap_or(&self.p)
    }

    /// Canonical text used to digest noise configuration into artifact
    /// metadata.
    pub fn canonical_string(&self) -> String {
        let mut s = format!("p={};eta={}", self.p, self.eta);
        for (class, p) in &self.overrides {
            s.push_str(&format!(";{}={}", class.as_str(), p));
        }
        if let Some(soft) = &self.soft {
            s.push_str(&format!(
                ";pm_a={};pm_d={};t={}",
                soft.pm_ancilla, soft.pm_data, soft.threshold
            ));
        }
        s
    }
}

/// Single-qubit channel components (X, Y, Z) for an error budget `p`.
fn one_qubit_components(p: f64, eta: f64) -> [(PauliBits, f64); 3] {
    let (py, pxz) = if eta.is_infinite() { (p, 0.0) } else { (eta * p / (eta + 2.0), p / (eta + 2.0)) };
    [(P1_X, pxz), (P1_Y, py), (P1_Z, pxz)]
}

/// The seven two-qubit Pauli pairs containing at least one Y.
fn pair_has_y(bits: PauliBits) -> bool {
    (bits & 0b0011) == 0b0011 || (bits & 0b1100) == 0b1100
}

/// Two-qubit channel components: all 15 non-identity pairs.
fn two_qubit_components(p: f64, eta: f64) -> Vec<(PauliBits, f64)> {
    let (py, po) = if eta.is_infinite() {
        (p / 7.0, 0.0)
    } else {
        (eta * p / (7.0 * eta + 8.0), p / (7.0 * eta + 8.0))
    };
    (1u8..16)
        .map(|bits| (bits, if pair_has_y(bits) { py } else { po }))
        .collect()
}

/// When a channel acts relative to its timestep's operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum When {
    Before,
    After,
}

#[derive(Clone, Debug)]
pub struct Channel {
    pub timestep: usize,
    pub when: When,
    pub class: OpClass,
    pub q1: usize,
    pub q2: Option<usize>,
    /// Non-zero components (pauli bits, probability).
    pub components: Vec<(PauliBits, f64)>,
    pub total: f64,
}

/// A circuit together with its noise-channel annotations.
#[derive(Clone, Debug)]
pub struct NoisyCircuit {
    pub circuit: Circuit,
    pub params: NoiseParams,
    pub channels: Vec<Channel>,
}

/// Attach channels to every operation of the circuit per the uniform model.
pub fn attach_noise(circuit: &Circuit, params: &NoiseParams) -> Result<NoisyCircuit> {
    params.validate()?;
    let mut channels = Vec::new();
    for (t, step) in circuit.timesteps.iter().enumerate() {
        for op in &step.ops {
            let (class, when) = match op {
                Op::GateX(_) | Op::GateH(_) => (OpClass::Gate1, When::After),
                Op::GateCz(_, _) => (OpClass::Gate2, When::After),
                Op::Idle(_) => (OpClass::Idle, When::After),
                Op::Measure(_) => (OpClass::Measure, When::Before),
                Op::Reset(_) | Op::Prep(_) => (OpClass::Reset, When::After),
            };
            let p = params.class_p(class);
            if p == 0.0 {
                continue;
            }
            let (q1, q2) = op.qubits();
            let components: Vec<(PauliBits, f64)> = match class {
                OpClass::Gate1 | OpClass::Idle => {
                    one_qubit_components(p, params.eta).into_iter().filter(|&(_, w)| w > 0.0).collect()
                }
                OpClass::Gate2 => {
                    two_qubit_components(p, params.eta).into_iter().filter(|&(_, w)| w > 0.0).collect()
                }
                // Classification and reset errors are X flips.
                OpClass::Measure | OpClass::Reset => vec![(P1_X, p)],
            };
            let total: f64 = components.iter().map(|&(_, w)| w).sum();
            channels.push(Channel { timestep: t, when, class, q1, q2, components, total });
        }
    }
    Ok(NoisyCircuit { circuit: circuit.clone(), params: params.clone(), channels })
}

/// Analog readout value for a projected bit.
pub fn soften(bit: bool, sigma: f64, rng: &mut CounterRng) -> f64 {
    let mu = if bit { MU1 } else { MU0 };
    if sigma == 0.0 {
        return mu;
    }
    mu + sigma * rng.next_normal()
}

/// Threshold an analog outcome: 0 if m <= t else 1.
#[inline]
pub fn harden(m: f64, t: f64) -> bool {
    m > t
}

/// Assignment error probability for a signal-to-noise ratio.
pub fn pm_from_snr(snr: f64) -> f64 {
    0.5 * libm::erfc(snr / std::f64::consts::SQRT_2)
}

/// Invert pm = erfc(1/(sigma sqrt 2))/2 for sigma (mu = -1/+1 fixed).
/// pm = 0 maps to sigma = 0 (noiseless readout).
pub fn sigma_from_pm(pm: f64) -> f64 {
    assert!((0.0..0.5).contains(&pm), "pm outside [0, 0.5)");
    if pm == 0.0 {
        return 0.0;
    }
    // SNR = sqrt(2) * erfcinv(2 pm); bisection on the monotone map.
    let target = 2.0 * pm;
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if libm::erfc(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let erfcinv = 0.5 * (lo + hi);
    1.0 / (std::f64::consts::SQRT_2 * erfcinv)
}

/// Gaussian density ratio machinery shared by the soft decoders: posterior
/// that the projected bit was 1 given analog outcome m, with equal priors.
pub fn posterior_one(m: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return if m > 0.0 { 1.0 } else { 0.0 };
    }
    // N1/(N0+N1) = 1/(1 + exp((  (m-mu1)^2 - (m-mu0)^2 ) / (2 sigma^2)))
    let e = ((m - MU1) * (m - MU1) - (m - MU0) * (m - MU0)) / (2.0 * sigma * sigma);
    1.0 / (1.0 + e.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Basis, Variant};
    use crate::layout::{build_layout, build_memory_circuit};

    fn small_circuit() -> Circuit {
        let l = build_layout(3, Variant::Zxxz).unwrap();
        build_memory_circuit(&l, 3, Basis::Z, &vec![false; 9]).unwrap()
    }

    #[test]
    fn channel_totals_equal_p() {
        let c = small_circuit();
        for eta in [0.0, 0.5, 1.0, 2.0, 100.0, f64::INFINITY] {
            let noisy = attach_noise(&c, &NoiseParams::biased(1e-3, eta)).unwrap();
            for ch in &noisy.channels {
                assert!((ch.total - 1e-3).abs() < 1e-15, "eta {eta} total {}", ch.total);
                for &(_, w) in &ch.components {
                    assert!(w >= 0.0 && w <= 1.0);
                }
            }
        }
    }

    #[test]
    fn eta_one_is_depolarizing() {
        let c = small_circuit();
        let a = attach_noise(&c, &NoiseParams::depolarizing(2e-3)).unwrap();
        let b = attach_noise(&c, &NoiseParams::biased(2e-3, 1.0)).unwrap();
        assert_eq!(a.channels.len(), b.channels.len());
        for (x, y) in a.channels.iter().zip(&b.channels) {
            assert_eq!(x.components, y.components);
        }
        // p/3 and p/15 exactly.
        for ch in &a.channels {
            match ch.class {
                OpClass::Gate1 | OpClass::Idle => {
                    for &(_, w) in &ch.components {
                        assert_eq!(w, 2e-3 / 3.0);
                    }
                }
                OpClass::Gate2 => {
                    assert_eq!(ch.components.len(), 15);
                    for &(_, w) in &ch.components {
                        assert_eq!(w, 2e-3 / 15.0);
                    }
                }
                _ => {}
            }
        }
    }

    #[test]
    fn eta_zero_has_no_y() {
        let c = small_circuit();
        let noisy = attach_noise(&c, &NoiseParams::biased(1e-3, 0.0)).unwrap();
        for ch in &noisy.channels {
            for &(bits, _) in &ch.components {
                let y1 = (bits & 0b11) == 0b11;
                let y2 = (bits & 0b1100) == 0b1100;
                assert!(!y1 && !y2, "Y component present at eta = 0");
            }
        }
    }

    #[test]
    fn eta_infinite_only_y() {
        let c = small_circuit();
        let noisy = attach_noise(&c, &NoiseParams::biased(1e-3, f64::INFINITY)).unwrap();
        for ch in &noisy.channels {
            match ch.class {
                OpClass::Gate1 | OpClass::Idle => {
                    assert_eq!(ch.components.len(), 1);
                    assert_eq!(ch.components[0].0, P1_Y);
                    assert!((ch.components[0].1 - 1e-3).abs() < 1e-18);
                }
                OpClass::Gate2 => {
                    assert_eq!(ch.components.len(), 7);
                    for &(bits, w) in &ch.components {
                        assert!(pair_has_y(bits));
                        assert!((w - 1e-3 / 7.0).abs() < 1e-18);
                    }
                }
                _ => {}
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        let c = small_circuit();
        assert!(attach_noise(&c, &NoiseParams::depolarizing(1.0)).is_err());
        assert!(attach_noise(&c, &NoiseParams::depolarizing(-0.1)).is_err());
        assert!(attach_noise(&c, &NoiseParams::biased(0.1, -1.0)).is_err());
    }

    #[test]
    fn sigma_inversion_examples() {
        // pm = 1% -> sigma ~ 0.4299.
        let s = sigma_from_pm(0.01);
        assert!((s - 0.4299).abs() < 5e-4, "sigma {s}");
        // Round trip at several rates.
        for pm in [0.001, 0.01, 0.1, 0.3] {
            let sigma = sigma_from_pm(pm);
            let back = pm_from_snr(1.0 / sigma);
            assert!((back - pm).abs() < 1e-12, "pm {pm} back {back}");
        }
        // pm = 50% corresponds to SNR = 0.
        assert!((pm_from_snr(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn soften_degenerate_sigma() {
        let mut rng = CounterRng::new(0, 0);
        assert_eq!(soften(true, 0.0, &mut rng), 1.0);
        assert_eq!(soften(false, 0.0, &mut rng), -1.0);
    }

    #[test]
    fn harden_boundary_cases() {
        assert!(!harden(0.0, 0.0)); // m == t -> 0
        assert!(!harden(f64::NEG_INFINITY, 0.0));
        assert!(harden(f64::INFINITY, 0.0));
        assert!(harden(1e-12, 0.0));
    }

    #[test]
    fn empirical_flip_rate_matches_erfc() {
        // pm = 10%: flip rate of harden(soften(bit)) over 1e6 draws within
        // 3 binomial sigma.
        let pm = 0.10;
        let sigma = sigma_from_pm(pm);
        let mut rng = CounterRng::new(7, 3);
        let n = 1_000_000;
        let mut flips = 0u64;
        for i in 0..n {
            let bit = i % 2 == 0;
            let m = soften(bit, sigma, &mut rng);
            if harden(m, 0.0) != bit {
                flips += 1;
            }
        }
        let rate = flips as f64 / n as f64;
        let sd = (pm * (1.0 - pm) / n as f64).sqrt();
        assert!((rate - pm).abs() < 3.0 * sd, "rate {rate} expected {pm} sd {sd}");
    }

    #[test]
    fn posterior_symmetry_and_limits() {
        let sigma = sigma_from_pm(0.05);
        assert!((posterior_one(0.0, sigma) - 0.5).abs() < 1e-12);
        assert!(posterior_one(5.0, sigma) > 0.999);
        assert!(posterior_one(-5.0, sigma) < 0.001);
        assert_eq!(posterior_one(0.5, 0.0), 1.0);
        assert_eq!(posterior_one(-0.5, 0.0), 0.0);
    }
}
