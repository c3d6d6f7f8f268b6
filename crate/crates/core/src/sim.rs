//! Pauli-frame Monte Carlo sampling.
//!
//! Each shot propagates an X/Z flip frame through the Clifford circuit:
//! H swaps the components, CZ maps an X flip on one qubit to a Z flip on the
//! other, X gates act trivially (phases are not tracked), measurement records
//! the X component as an outcome flip relative to the noiseless reference,
//! and reset clears the frame. Noise channels are sampled with geometric
//! skips over the channel list; every channel of the uniform model fires with
//! the same probability, so runs of equal-probability channels are walked in
//! O(#fires) per shot.
//!
//! Shot `i` draws exclusively from `CounterRng::new(master_seed, i)` (soft
//! readout from a derived substream), making batches bit-identical for a
//! fixed `(circuit, shots, master_seed)` regardless of thread count.

use rayon::prelude::*;

use crate::bits::{BitMatrix, BitVec};
use crate::chp;
use crate::circuit::{Basis, Circuit, Op};
use crate::container::{self, Container, Metadata};
use crate::error::{Error, Result};
use crate::layout::{CodeLayout, MeasurementMap};
use crate::noise::{self, NoisyCircuit, PauliBits, When};
use crate::rng::CounterRng;

/// X/Z flip frame over the circuit's qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub x: Vec<u64>,
    pub z: Vec<u64>,
}

impl Frame {
    pub fn new(n_qubits: usize) -> Self {
        let w = n_qubits.div_ceil(64);
        Frame { x: vec![0; w], z: vec![0; w] }
    }

    #[inline]
    pub fn clear(&mut self) {
        self.x.fill(0);
        self.z.fill(0);
    }

    #[inline]
    pub fn get_x(&self, q: usize) -> bool {
        (self.x[q / 64] >> (q % 64)) & 1 == 1
    }

    #[inline]
    pub fn get_z(&self, q: usize) -> bool {
        (self.z[q / 64] >> (q % 64)) & 1 == 1
    }

    #[inline]
    fn h(&mut self, q: usize) {
        let (w, b) = (q / 64, q % 64);
        let xv = (self.x[w] >> b) & 1;
        let zv = (self.z[w] >> b) & 1;
        self.x[w] ^= (xv ^ zv) << b;
        self.z[w] ^= (xv ^ zv) << b;
    }

    #[inline]
    fn cz(&mut self, a: usize, b: usize) {
        let xa = (self.x[a / 64] >> (a % 64)) & 1;
        let xb = (self.x[b / 64] >> (b % 64)) & 1;
        self.z[b / 64] ^= xa << (b % 64);
        self.z[a / 64] ^= xb << (a % 64);
    }

    #[inline]
    fn reset(&mut self, q: usize) {
        let (w, b) = (q / 64, q % 64);
        self.x[w] &= !(1 << b);
        self.z[w] &= !(1 << b);
    }

    /// Apply an encoded one- or two-qubit Pauli.
    #[inline]
    pub fn apply_pauli(&mut self, q1: usize, q2: usize, bits: PauliBits) {
        if bits & 0b0001 != 0 {
            self.x[q1 / 64] ^= 1 << (q1 % 64);
        }
        if bits & 0b0010 != 0 {
            self.z[q1 / 64] ^= 1 << (q1 % 64);
        }
        if bits & 0b0100 != 0 {
            self.x[q2 / 64] ^= 1 << (q2 % 64);
        }
        if bits & 0b1000 != 0 {
            self.z[q2 / 64] ^= 1 << (q2 % 64);
        }
    }
}

/// Precompiled per-timestep operations for fast frame walking. X gates and
/// idles are dropped (they do not move frames).
#[derive(Clone, Debug)]
pub struct PlanStep {
    pub h: Vec<usize>,
    pub cz: Vec<(usize, usize)>,
    /// (qubit, global measurement index)
    pub measures: Vec<(usize, usize)>,
    pub resets: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct CircuitPlan {
    pub n_qubits: usize,
    pub n_measurements: usize,
    pub steps: Vec<PlanStep>,
    /// Timestep indices holding ancilla resets (one per full QEC round).
    pub round_reset_steps: Vec<usize>,
}

impl CircuitPlan {
    pub fn new(circuit: &Circuit) -> Self {
        let mut steps = Vec::with_capacity(circuit.timesteps.len());
        let mut meas = 0usize;
        let mut round_reset_steps = Vec::new();
        for (t, step) in circuit.timesteps.iter().enumerate() {
            let mut ps = PlanStep { h: Vec::new(), cz: Vec::new(), measures: Vec::new(), resets: Vec::new() };
            let mut has_reset = false;
            for op in &step.ops {
                match *op {
                    Op::GateH(q) => ps.h.push(q),
                    Op::GateCz(a, b) => ps.cz.push((a, b)),
                    Op::Measure(q) => {
                        ps.measures.push((q, meas));
                        meas += 1;
                    }
                    Op::Reset(q) => {
                        ps.resets.push(q);
                        has_reset = true;
                    }
                    Op::Prep(q) => ps.resets.push(q),
                    Op::GateX(_) | Op::Idle(_) => {}
                }
            }
            if has_reset {
                round_reset_steps.push(t);
            }
            steps.push(ps);
        }
        CircuitPlan { n_qubits: circuit.n_qubits, n_measurements: meas, steps, round_reset_steps }
    }

    /// Walk one timestep; `on_flip` receives (measurement index) for every
    /// outcome flipped by the frame.
    #[inline]
    pub fn apply_step(&self, t: usize, frame: &mut Frame, mut on_flip: impl FnMut(usize)) {
        let step = &self.steps[t];
        for &q in &step.h {
            frame.h(q);
        }
        for &(a, b) in &step.cz {
            frame.cz(a, b);
        }
        for &(q, m) in &step.measures {
            if frame.get_x(q) {
                on_flip(m);
            }
        }
        for &q in &step.resets {
            frame.reset(q);
        }
    }
}

/// Noiseless expectation for every measurement plus the logical observable.
#[derive(Clone, Debug)]
pub struct ReferenceFrame {
    pub outcomes: Vec<bool>,
    pub logical: bool,
}

/// Noiseless reference via stabilizer simulation, including the prepared
/// bitstring and all echo X layers. Projective randomness resolves to 0.
pub fn reference_frame(circuit: &Circuit, layout: &CodeLayout) -> ReferenceFrame {
    let outcomes = chp::reference_outcomes(circuit);
    let map = MeasurementMap::for_circuit(circuit.meta.rounds, circuit.meta.distance);
    let support = match circuit.meta.basis {
        Basis::Z => &layout.logical_z_support,
        Basis::X => &layout.logical_x_support,
    };
    let logical = support.iter().fold(false, |acc, &q| acc ^ outcomes[map.final_data(q)]);
    ReferenceFrame { outcomes, logical }
}

/// Compiled channel ready for sampling.
#[derive(Clone, Debug)]
struct CompiledChannel {
    step: usize,
    when: When,
    q1: usize,
    q2: usize,
    /// Cumulative probability thresholds paired with Pauli bits.
    cum: Vec<(f64, PauliBits)>,
    total: f64,
}

/// Channels grouped into runs of equal total probability so geometric
/// skipping stays valid under per-class overrides.
struct SamplingPlan {
    channels: Vec<CompiledChannel>,
    segments: Vec<(usize, usize, f64)>, // (start, len, p)
}

fn compile_channels(noisy: &NoisyCircuit) -> SamplingPlan {
    let mut channels: Vec<CompiledChannel> = noisy
        .channels
        .iter()
        .map(|ch| {
            let mut cum = Vec::with_capacity(ch.components.len());
            let mut acc = 0.0;
            for &(bits, w) in &ch.components {
                acc += w;
                cum.push((acc, bits));
            }
            CompiledChannel {
                step: ch.timestep,
                when: ch.when,
                q1: ch.q1,
                q2: ch.q2.unwrap_or(usize::MAX),
                cum,
                total: ch.total,
            }
        })
        .collect();
    channels.sort_by_key(|c| (c.step, c.when == When::After, c.q1));
    let mut segments = Vec::new();
    let mut start = 0;
    while start < channels.len() {
        let p = channels[start].total;
        let mut end = start + 1;
        while end < channels.len() && channels[end].total == p {
            end += 1;
        }
        segments.push((start, end - start, p));
        start = end;
    }
    SamplingPlan { channels, segments }
}

/// Measurement outcomes (and optional analog outcomes) for a batch of shots.
#[derive(Clone, Debug)]
pub struct ShotBatch {
    pub circuit_meta: crate::circuit::CircuitMeta,
    pub seed: u64,
    pub shots: usize,
    pub measurements: usize,
    /// Canonical noise parameter string and its digest.
    pub noise: String,
    pub digest: u64,
    /// Soft readout parameters when the batch carries analog outcomes.
    pub soft_params: Option<noise::SoftReadoutParams>,
    /// rows = measurements, cols = shots.
    pub hard: BitMatrix,
    /// Measurement-major analog outcomes, `soft[m * shots + s]`.
    pub soft: Option<Vec<f32>>,
}

impl ShotBatch {
    #[inline]
    pub fn outcome(&self, meas: usize, shot: usize) -> bool {
        self.hard.get(meas, shot)
    }

    #[inline]
    pub fn soft_outcome(&self, meas: usize, shot: usize) -> f32 {
        self.soft.as_ref().expect("batch has no soft block")[meas * self.shots + shot]
    }

    pub fn measurement_map(&self) -> MeasurementMap {
        MeasurementMap::for_circuit(self.circuit_meta.rounds, self.circuit_meta.distance)
    }
}

const MAX_BATCH_BYTES: u128 = 1 << 38; // 256 GiB address guard

/// Sample `n_shots` independent Pauli-frame shots.
pub fn sample(noisy: &NoisyCircuit, layout: &CodeLayout, n_shots: usize, master_seed: u64) -> Result<ShotBatch> {
    let circuit = &noisy.circuit;
    let plan = CircuitPlan::new(circuit);
    let m = plan.n_measurements;
    let soft_on = noisy.params.soft.is_some();
    let bytes = (n_shots as u128) * (m as u128) * if soft_on { 33 } else { 1 } / 8;
    if bytes > MAX_BATCH_BYTES {
        return Err(Error::Size(format!(
            "batch of {n_shots} shots x {m} measurements needs ~{bytes} bytes"
        )));
    }
    let reference = reference_frame(circuit, layout);
    let sampling = compile_channels(noisy);
    let soft_params = noisy.params.soft.clone();

    let mut hard = BitMatrix::zeros(m, n_shots);
    let mut soft: Option<Vec<f32>> = if soft_on { Some(vec![0f32; m * n_shots]) } else { None };

    // Ancilla measurements use sigma_ancilla; final data measurements
    // sigma_data. Build a per-measurement sigma table once.
    let map = MeasurementMap::for_circuit(circuit.meta.rounds, circuit.meta.distance);
    let sigma_table: Vec<f64> = if let Some(sp) = &soft_params {
        (0..m)
            .map(|i| {
                let final_base = map.ancilla_rounds * map.n_ancillas;
                if i >= final_base && i < final_base + map.n_data {
                    sp.sigma_data
                } else {
                    sp.sigma_ancilla
                }
            })
            .collect()
    } else {
        Vec::new()
    };

    let n_blocks = n_shots.div_ceil(64);
    let block_results: Vec<(Vec<u64>, Vec<f32>)> = (0..n_blocks)
        .into_par_iter()
        .map(|block| {
            let mut col_words = vec![0u64; m];
            let mut soft_block = if soft_on { vec![0f32; m * 64] } else { Vec::new() };
            let mut frame = Frame::new(plan.n_qubits);
            let mut flips: Vec<u64> = vec![0; m.div_ceil(64)];
            let shot_lo = block * 64;
            let shot_hi = (shot_lo + 64).min(n_shots);
            for shot in shot_lo..shot_hi {
                let lane = shot - shot_lo;
                let mut rng = CounterRng::new(master_seed, shot as u64);
                // Sample fired channels with geometric skips per segment.
                let mut fires: Vec<(u32, PauliBits)> = Vec::new();
                for &(start, len, p) in &sampling.segments {
                    let mut pos = 0u64;
                    loop {
                        let skip = rng.geometric_skip(p);
                        if skip == u64::MAX || pos + skip >= len as u64 {
                            break;
                        }
                        pos += skip;
                        let ch = &sampling.channels[start + pos as usize];
                        let u = rng.next_f64() * ch.total;
                        let mut bits = ch.cum.last().unwrap().1;
                        for &(threshold, b) in &ch.cum {
                            if u < threshold {
                                bits = b;
                                break;
                            }
                        }
                        fires.push(((start + pos as usize) as u32, bits));
                        pos += 1;
                    }
                }
                fires.sort_unstable_by_key(|&(i, _)| i);
                // Propagate.
                frame.clear();
                flips.fill(0);
                let mut cursor = 0usize;
                for t in 0..plan.steps.len() {
                    while cursor < fires.len() {
                        let ch = &sampling.channels[fires[cursor].0 as usize];
                        if ch.step == t && ch.when == When::Before {
                            frame.apply_pauli(ch.q1, ch.q2, fires[cursor].1);
                            cursor += 1;
                        } else {
                            break;
                        }
                    }
                    plan.apply_step(t, &mut frame, |meas| {
                        flips[meas / 64] ^= 1u64 << (meas % 64);
                    });
                    while cursor < fires.len() {
                        let ch = &sampling.channels[fires[cursor].0 as usize];
                        if ch.step == t && ch.when == When::After {
                            frame.apply_pauli(ch.q1, ch.q2, fires[cursor].1);
                            cursor += 1;
                        } else {
                            break;
                        }
                    }
                }
                debug_assert_eq!(cursor, fires.len());
                // Outcomes = reference xor flips; soft pass afterwards.
                if let Some(sp) = &soft_params {
                    let mut rng_soft = rng.substream(1);
                    for meas in 0..m {
                        let flipped = (flips[meas / 64] >> (meas % 64)) & 1 == 1;
                        let projected = reference.outcomes[meas] ^ flipped;
                        let analog = noise::soften(projected, sigma_table[meas], &mut rng_soft);
                        let bit = noise::harden(analog, sp.threshold);
                        soft_block[meas * 64 + lane] = analog as f32;
                        if bit {
                            col_words[meas] |= 1u64 << lane;
                        }
                    }
                } else {
                    for meas in 0..m {
                        let flipped = (flips[meas / 64] >> (meas % 64)) & 1 == 1;
                        if reference.outcomes[meas] ^ flipped {
                            col_words[meas] |= 1u64 << lane;
                        }
                    }
                }
            }
            (col_words, soft_block)
        })
        .collect();

    for (block, (col_words, soft_block)) in block_results.into_iter().enumerate() {
        let shot_lo = block * 64;
        let lanes = (shot_lo + 64).min(n_shots) - shot_lo;
        for meas in 0..m {
            hard.row_mut(meas)[block] = col_words[meas];
            if let Some(soft_vec) = soft.as_mut() {
                soft_vec[meas * n_shots + shot_lo..meas * n_shots + shot_lo + lanes]
                    .copy_from_slice(&soft_block[meas * 64..meas * 64 + lanes]);
            }
        }
    }

    Ok(ShotBatch {
        circuit_meta: circuit.meta.clone(),
        seed: master_seed,
        shots: n_shots,
        measurements: m,
        noise: noisy.params.canonical_string(),
        digest: container::digest64(&batch_digest_text(circuit, &noisy.params, master_seed)),
        soft_params,
        hard,
        soft,
    })
}

fn batch_digest_text(circuit: &Circuit, params: &noise::NoiseParams, seed: u64) -> String {
    format!(
        "d={};rounds={};basis={};bits={};variant={};noise={};seed={}",
        circuit.meta.distance,
        circuit.meta.rounds,
        circuit.meta.basis.as_str(),
        circuit.meta.bitstring_str(),
        circuit.meta.variant.as_str(),
        params.canonical_string(),
        seed
    )
}

/// Where to inject a deterministic Pauli for oracle checks.
#[derive(Clone, Copy, Debug)]
pub enum InjectAt {
    /// Before the operations of the timestep execute.
    Before(usize),
    /// After the operations of the timestep execute.
    After(usize),
}

/// Propagate a deterministic single-location injection through the noiseless
/// circuit; returns the flipped measurement indices.
pub fn propagate_injection(circuit: &Circuit, at: InjectAt, paulis: &[(usize, PauliBits)]) -> BitVec {
    let plan = CircuitPlan::new(circuit);
    let mut frame = Frame::new(plan.n_qubits);
    let mut flips = BitVec::zeros(plan.n_measurements);
    let inject_step = match at {
        InjectAt::Before(t) | InjectAt::After(t) => t,
    };
    for t in 0..plan.steps.len() {
        if t == inject_step {
            if let InjectAt::Before(_) = at {
                for &(q, bits) in paulis {
                    frame.apply_pauli(q, usize::MAX, bits);
                }
            }
        }
        plan.apply_step(t, &mut frame, |m| flips.flip(m));
        if t == inject_step {
            if let InjectAt::After(_) = at {
                for &(q, bits) in paulis {
                    frame.apply_pauli(q, usize::MAX, bits);
                }
            }
        }
    }
    flips
}

// ---------------------------------------------------------------------------
// Container IO

impl ShotBatch {
    pub fn to_container(&self) -> Container {
        let mut meta = Metadata::new();
        meta.push("distance", self.circuit_meta.distance);
        meta.push("rounds", self.circuit_meta.rounds);
        meta.push("basis", self.circuit_meta.basis.as_str());
        meta.push("bitstring", self.circuit_meta.bitstring_str());
        meta.push("variant", self.circuit_meta.variant.as_str());
        meta.push("seed", self.seed);
        meta.push("shots", self.shots);
        meta.push("measurements", self.measurements);
        meta.push("noise", &self.noise);
        meta.push("digest", format!("{:016x}", self.digest));
        meta.push("soft", self.soft.is_some() as u8);
        if let Some(sp) = &self.soft_params {
            meta.push("pm_ancilla", sp.pm_ancilla);
            meta.push("pm_data", sp.pm_data);
            meta.push("threshold", sp.threshold);
        }
        let mut c = Container::new(container::MAGIC_SHOTS, meta);
        // File rows are shots (row-padded to whole bytes); memory is
        // measurement-major, so transpose on the way out.
        c.blocks.push(self.hard.transposed().to_padded_bytes());
        if let Some(soft) = &self.soft {
            let mut shot_major = vec![0f32; soft.len()];
            for meas in 0..self.measurements {
                for shot in 0..self.shots {
                    shot_major[shot * self.measurements + meas] = soft[meas * self.shots + shot];
                }
            }
            c.blocks.push(container::f32s_to_bytes(&shot_major));
        }
        c
    }

    pub fn from_container(c: &Container) -> Result<ShotBatch> {
        let meta = &c.meta;
        let distance: usize = meta.parse("distance")?;
        let rounds: usize = meta.parse("rounds")?;
        let basis = Basis::parse(meta.require("basis")?)?;
        let variant = crate::circuit::Variant::parse(meta.require("variant")?)?;
        let bitstring: Vec<bool> = meta
            .require("bitstring")?
            .chars()
            .map(|ch| ch == '1')
            .collect();
        let seed: u64 = meta.parse("seed")?;
        let shots: usize = meta.parse("shots")?;
        let measurements: usize = meta.parse("measurements")?;
        let noise = meta.require("noise")?.to_string();
        let digest = u64::from_str_radix(meta.require("digest")?, 16)
            .map_err(|_| Error::Format("bad digest".into()))?;
        let soft_flag: u8 = meta.parse("soft")?;
        let soft_params = if soft_flag == 1 {
            Some(noise::SoftReadoutParams::from_assignment_errors(
                meta.parse("pm_ancilla")?,
                meta.parse("pm_data")?,
                meta.parse("threshold")?,
            )?)
        } else {
            None
        };
        let hard_shot_major = BitMatrix::from_padded_bytes(shots, measurements, &c.blocks[0])
            .ok_or_else(|| Error::Format("hard block size mismatch".into()))?;
        let hard = hard_shot_major.transposed();
        let soft = if soft_flag == 1 {
            let shot_major = container::bytes_to_f32s(&c.blocks[1])?;
            if shot_major.len() != shots * measurements {
                return Err(Error::Format("soft block size mismatch".into()));
            }
            let mut meas_major = vec![0f32; shot_major.len()];
            for shot in 0..shots {
                for meas in 0..measurements {
                    meas_major[meas * shots + shot] = shot_major[shot * measurements + meas];
                }
            }
            Some(meas_major)
        } else {
            None
        };
        Ok(ShotBatch {
            circuit_meta: crate::circuit::CircuitMeta { distance, rounds, basis, bitstring, variant },
            seed,
            shots,
            measurements,
            noise,
            digest,
            soft_params,
            hard,
            soft,
        })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        self.to_container().save(path)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<ShotBatch> {
        ShotBatch::from_container(&Container::load(path, container::MAGIC_SHOTS)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Variant;
    use crate::layout::{build_layout, build_memory_circuit};
    use crate::noise::NoiseParams;

    fn setup(d: usize, rounds: usize, basis: Basis, variant: Variant) -> (CodeLayout, Circuit) {
        let l = build_layout(d, variant).unwrap();
        let c = build_memory_circuit(&l, rounds, basis, &vec![false; d * d]).unwrap();
        (l, c)
    }

    #[test]
    fn noiseless_outcomes_equal_reference() {
        for variant in [Variant::Standard, Variant::Zxxz] {
            for basis in [Basis::X, Basis::Z] {
                let (l, c) = setup(3, 3, basis, variant);
                let noisy = attach(&c, 0.0);
                let batch = sample(&noisy, &l, 70, 11).unwrap();
                let reference = reference_frame(&c, &l);
                for m in 0..batch.measurements {
                    for s in 0..batch.shots {
                        assert_eq!(batch.outcome(m, s), reference.outcomes[m], "meas {m} shot {s}");
                    }
                }
            }
        }
    }

    fn attach(c: &Circuit, p: f64) -> NoisyCircuit {
        crate::noise::attach_noise(c, &NoiseParams::depolarizing(p)).unwrap()
    }

    #[test]
    fn all_ones_prep_round1_ancilla_outcomes_trivial() {
        // d=3 Z basis all-ones: every ancilla support has even weight, so the
        // prepared bitstring does not shift the round-1 expectations relative
        // to the all-zeros prep.
        let l = build_layout(3, Variant::Zxxz).unwrap();
        let ones = reference_frame(&build_memory_circuit(&l, 3, Basis::Z, &vec![true; 9]).unwrap(), &l);
        let zeros = reference_frame(&build_memory_circuit(&l, 3, Basis::Z, &vec![false; 9]).unwrap(), &l);
        let map = MeasurementMap::for_circuit(3, 3);
        for rank in 0..8 {
            assert_eq!(ones.outcomes[map.ancilla(1, rank)], zeros.outcomes[map.ancilla(1, rank)]);
        }
    }

    #[test]
    fn noiseless_logical_parity_matches_bitstring() {
        // Z basis: the prep-dependent part of the noiseless logical outcome
        // is exactly the prepared parity on the logical support (the echo X
        // layers add a bitstring-independent offset that the reference frame
        // absorbs). With a single round there are no echo layers at all and
        // the raw parity equals the prepared parity.
        let l = build_layout(3, Variant::Zxxz).unwrap();
        let mut bits = vec![false; 9];
        bits[0] = true; // on both supports
        bits[4] = true;
        let expect: bool = l.logical_z_support.iter().fold(false, |a, &q| a ^ bits[q]);
        for rounds in [1usize, 2, 4] {
            let with_bits = reference_frame(&build_memory_circuit(&l, rounds, Basis::Z, &bits).unwrap(), &l);
            let with_zero =
                reference_frame(&build_memory_circuit(&l, rounds, Basis::Z, &vec![false; 9]).unwrap(), &l);
            assert_eq!(with_bits.logical ^ with_zero.logical, expect, "rounds {rounds}");
            if rounds == 1 {
                assert_eq!(with_bits.logical, expect);
                assert!(!with_zero.logical);
            }
        }
    }

    #[test]
    fn determinism_across_thread_counts() {
        let (l, c) = setup(3, 4, Basis::Z, Variant::Zxxz);
        let noisy = attach(&c, 2e-3);
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool8 = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
        let b1 = pool1.install(|| sample(&noisy, &l, 500, 97).unwrap());
        let b8 = pool8.install(|| sample(&noisy, &l, 500, 97).unwrap());
        assert_eq!(b1.hard, b8.hard);
        assert_eq!(b1.soft, b8.soft);
    }

    #[test]
    fn batch_file_roundtrip_byte_exact() {
        let (l, c) = setup(3, 2, Basis::Z, Variant::Zxxz);
        let mut params = NoiseParams::depolarizing(1e-2);
        params.soft =
            Some(crate::noise::SoftReadoutParams::from_assignment_errors(0.01, 0.001, 0.0).unwrap());
        let noisy = crate::noise::attach_noise(&c, &params).unwrap();
        let batch = sample(&noisy, &l, 100, 5).unwrap();
        let mut buf = Vec::new();
        batch.to_container().write_to(&mut buf).unwrap();
        let back = ShotBatch::from_container(
            &Container::read_from(buf.as_slice(), container::MAGIC_SHOTS).unwrap(),
        )
        .unwrap();
        let mut buf2 = Vec::new();
        back.to_container().write_to(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
        assert_eq!(back.hard, batch.hard);
        assert_eq!(back.soft, batch.soft);
    }

    #[test]
    fn harden_soft_reproduces_hard_block() {
        let (l, c) = setup(3, 3, Basis::Z, Variant::Zxxz);
        let mut params = NoiseParams::depolarizing(1e-3);
        params.soft =
            Some(crate::noise::SoftReadoutParams::from_assignment_errors(0.05, 0.01, 0.0).unwrap());
        let noisy = crate::noise::attach_noise(&c, &params).unwrap();
        let batch = sample(&noisy, &l, 300, 21).unwrap();
        let sp = batch.soft_params.as_ref().unwrap();
        for m in 0..batch.measurements {
            for s in 0..batch.shots {
                let analog = batch.soft_outcome(m, s) as f64;
                assert_eq!(crate::noise::harden(analog, sp.threshold), batch.outcome(m, s));
            }
        }
    }

    #[test]
    fn oversize_batch_rejected() {
        let (l, c) = setup(3, 300, Basis::Z, Variant::Zxxz);
        let noisy = attach(&c, 1e-3);
        let err = sample(&noisy, &l, usize::MAX / 2, 0).unwrap_err();
        assert!(matches!(err, Error::Size(_)));
    }

    #[test]
    fn injected_flip_before_measurement_flips_that_outcome() {
        let (l, c) = setup(3, 3, Basis::Z, Variant::Zxxz);
        // Find the first ancilla measurement timestep.
        let plan = CircuitPlan::new(&c);
        let t = plan
            .steps
            .iter()
            .position(|s| !s.measures.is_empty())
            .unwrap();
        let (q, m) = plan.steps[t].measures[0];
        let flips = propagate_injection(&c, InjectAt::Before(t), &[(q, crate::noise::P1_X)]);
        assert!(flips.get(m));
        let _ = l;
    }
}
