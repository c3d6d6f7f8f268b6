//! Detector error model extraction.
//!
//! Every channel component (one Pauli at one circuit location) is propagated
//! noiselessly to find the detectors it triggers and whether it flips the
//! measured logical observable. Propagation terminates early once the frame
//! becomes round-periodic: from then on consecutive rounds flip identical
//! outcome sets, so no further detectors fire until the final block, which is
//! evaluated directly from the stationary frame.
//!
//! Mechanisms with identical (detector set, logical flip) signatures merge
//! with p <- p1(1-p2) + p2(1-p1), folded in location order.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::circuit::Basis;
use crate::error::{Error, Result};
use crate::layout::{CodeLayout, MeasurementMap, StabType};
use crate::noise::{NoisyCircuit, PauliBits, When};
use crate::sim::{CircuitPlan, Frame};

#[derive(Clone, Debug, PartialEq)]
pub struct Mechanism {
    pub probability: f64,
    /// Sorted detector ids.
    pub detectors: Vec<u32>,
    pub logical_flip: bool,
    /// Measurement index when this mechanism is a readout assignment error
    /// on an ancilla (the component soft decoding reweights per shot).
    pub assignment: Option<u32>,
}

#[derive(Clone, Debug)]
pub struct DetectorErrorModel {
    pub rounds: usize,
    pub n_ancillas: usize,
    pub basis: Basis,
    pub mechanisms: Vec<Mechanism>,
}

impl DetectorErrorModel {
    pub fn n_detectors(&self) -> usize {
        self.rounds * self.n_ancillas
    }

    /// One line per mechanism: `p det_id... [L]`, stably sorted.
    pub fn to_text(&self) -> String {
        let mut lines: Vec<(Vec<u32>, bool, String)> = self
            .mechanisms
            .iter()
            .map(|m| {
                let mut line = format!("{:.12e}", m.probability);
                for d in &m.detectors {
                    let _ = write!(line, " {d}");
                }
                if m.logical_flip {
                    line.push_str(" L");
                }
                (m.detectors.clone(), m.logical_flip, line)
            })
            .collect();
        lines.sort();
        let mut out = String::new();
        for (_, _, line) in lines {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

/// XOR-combination of two independent flip probabilities.
#[inline]
pub fn combine_p(p1: f64, p2: f64) -> f64 {
    p1 * (1.0 - p2) + p2 * (1.0 - p1)
}

/// Linear map from flipped measurement indices to flipped detector ids, plus
/// the logical flip, shared by extraction and the propagation oracles.
pub struct DetectorMap {
    map: MeasurementMap,
    rounds: usize,
    n_ancillas: usize,
    /// For each measurement index, the detector ids it participates in.
    meas_to_detectors: Vec<Vec<u32>>,
    /// Final-block data measurements on the logical support.
    logical_meas: Vec<usize>,
}

impl DetectorMap {
    pub fn new(layout: &CodeLayout, rounds: usize, basis: Basis) -> DetectorMap {
        let map = MeasurementMap::for_circuit(rounds, layout.distance);
        let a_count = map.n_ancillas;
        // d(r) = m(r) ^ m(r-1): measurement (r, a) appears in detectors (r, a)
        // and (r+1, a); the final detector additionally reads the support's
        // data measurements.
        let mut meas_to_detectors = vec![Vec::new(); map.total];
        for rank in 0..a_count {
            for r in 1..rounds {
                let det = ((r - 1) * a_count + rank) as u32;
                meas_to_detectors[map.ancilla(r, rank)].push(det);
                if r + 1 < rounds {
                    let next = (r * a_count + rank) as u32;
                    meas_to_detectors[map.ancilla(r, rank)].push(next);
                }
            }
            let anc = &layout.ancillas[rank];
            let matches_basis = matches!(
                (anc.stab_type, basis),
                (StabType::Z, Basis::Z) | (StabType::X, Basis::X)
            );
            if matches_basis {
                let final_det = ((rounds - 1) * a_count + rank) as u32;
                if rounds >= 2 {
                    meas_to_detectors[map.ancilla(rounds - 1, rank)].push(final_det);
                }
                for &q in &anc.support {
                    meas_to_detectors[map.final_data(q)].push(final_det);
                }
            }
        }
        let support = match basis {
            Basis::Z => &layout.logical_z_support,
            Basis::X => &layout.logical_x_support,
        };
        let logical_meas = support.iter().map(|&q| map.final_data(q)).collect();
        DetectorMap { map, rounds, n_ancillas: a_count, meas_to_detectors, logical_meas }
    }

    pub fn n_detectors(&self) -> usize {
        self.rounds * self.n_ancillas
    }

    /// Detectors and logical flip from a set of flipped measurements.
    pub fn flips_to_detectors(&self, flipped: &[usize]) -> (Vec<u32>, bool) {
        let mut scratch = vec![0u8; self.n_detectors()];
        self.flips_to_detectors_with(flipped, &mut scratch)
    }

    /// Scratch-reusing variant for hot loops; `scratch` must be zeroed and is
    /// returned zeroed.
    pub fn flips_to_detectors_with(
        &self,
        flipped: &[usize],
        scratch: &mut [u8],
    ) -> (Vec<u32>, bool) {
        let mut touched: Vec<u32> = Vec::new();
        let mut logical = false;
        for &m in flipped {
            for &d in &self.meas_to_detectors[m] {
                if scratch[d as usize] == 0 {
                    touched.push(d);
                }
                scratch[d as usize] ^= 1;
            }
            if self.logical_meas.contains(&m) {
                logical = !logical;
            }
        }
        let mut dets: Vec<u32> = Vec::with_capacity(touched.len());
        for d in touched {
            if scratch[d as usize] == 1 {
                dets.push(d);
            }
            scratch[d as usize] = 0;
        }
        dets.sort_unstable();
        (dets, logical)
    }

    pub fn measurement_map(&self) -> &MeasurementMap {
        &self.map
    }
}

/// Propagate one injected Pauli from a channel location, with round-periodic
/// early termination. Returns flipped measurement indices.
fn propagate_component(
    plan: &CircuitPlan,
    start_step: usize,
    when: When,
    q1: usize,
    q2: usize,
    bits: PauliBits,
) -> Vec<usize> {
    let mut frame = Frame::new(plan.n_qubits);
    let mut flips: Vec<usize> = Vec::new();
    let reset_steps = &plan.round_reset_steps;
    let n_rounds = reset_steps.len();
    // Round index whose reset step is the next boundary >= t.
    let mut snapshot: Option<Frame> = None;
    let mut round_flips: Vec<usize> = Vec::new();
    let mut t = start_step;
    if when == When::Before {
        frame.apply_pauli(q1, q2, bits);
    }
    let mut boundary_cursor = reset_steps.partition_point(|&s| s < start_step);
    while t < plan.steps.len() {
        plan.apply_step(t, &mut frame, |m| {
            flips.push(m);
            round_flips.push(m);
        });
        if t == start_step && when == When::After {
            frame.apply_pauli(q1, q2, bits);
        }
        // Round boundary bookkeeping.
        if boundary_cursor < n_rounds && t == reset_steps[boundary_cursor] {
            let completed_round = boundary_cursor + 1; // 1-based QEC round index
            if let Some(prev) = &snapshot {
                if *prev == frame && completed_round < n_rounds {
                    // Stationary: every remaining QEC round repeats this
                    // round's flip pattern exactly. Emit the repeats and jump
                    // to the final block with the (unchanged) frame.
                    let stride = plan_round_meas_stride(plan);
                    for r in completed_round + 1..=n_rounds {
                        for &m in &round_flips {
                            flips.push(m + (r - completed_round) * stride);
                        }
                    }
                    t = reset_steps[n_rounds - 1] + 1;
                    boundary_cursor = n_rounds;
                    round_flips.clear();
                    snapshot = None;
                    continue;
                }
            }
            snapshot = Some(frame.clone());
            round_flips.clear();
            boundary_cursor += 1;
        }
        t += 1;
    }
    flips
}

/// Propagation entry point for oracle checks outside this module.
pub fn propagate_for_tests(
    plan: &CircuitPlan,
    start_step: usize,
    when: When,
    q1: usize,
    q2: usize,
    bits: PauliBits,
) -> Vec<usize> {
    propagate_component(plan, start_step, when, q1, q2, bits)
}

/// Measurement-index stride between consecutive QEC rounds.
fn plan_round_meas_stride(plan: &CircuitPlan) -> usize {
    // All full rounds measure the same ancilla set.
    let first_reset = plan.round_reset_steps[0];
    plan.steps[..=first_reset].iter().map(|s| s.measures.len()).sum()
}

/// Extract the detector error model of an annotated circuit.
pub fn extract_dem(noisy: &NoisyCircuit, layout: &CodeLayout, basis: Basis) -> Result<DetectorErrorModel> {
    let circuit = &noisy.circuit;
    if circuit.meta.basis != basis {
        return Err(Error::Mismatch(format!(
            "circuit basis {} vs requested {}",
            circuit.meta.basis.as_str(),
            basis.as_str()
        )));
    }
    let plan = CircuitPlan::new(circuit);
    let dmap = DetectorMap::new(layout, circuit.meta.rounds, basis);

    let mut merged: HashMap<(Vec<u32>, bool), (f64, Option<u32>)> = HashMap::new();
    let mut order: Vec<(Vec<u32>, bool)> = Vec::new();
    let mut add = |dets: Vec<u32>, flip: bool, p: f64, assignment: Option<u32>| {
        if p <= 0.0 || (dets.is_empty() && !flip) {
            return;
        }
        let key = (dets, flip);
        match merged.get_mut(&key) {
            Some(entry) => {
                entry.0 = combine_p(entry.0, p);
                if entry.1.is_none() {
                    entry.1 = assignment;
                }
            }
            None => {
                merged.insert(key.clone(), (p, assignment));
                order.push(key);
            }
        }
    };

    let mut scratch = vec![0u8; dmap.n_detectors()];
    for ch in &noisy.channels {
        for &(bits, p) in &ch.components {
            let flipped = propagate_component(
                &plan,
                ch.timestep,
                ch.when,
                ch.q1,
                ch.q2.unwrap_or(usize::MAX),
                bits,
            );
            let (dets, logical) = dmap.flips_to_detectors_with(&flipped, &mut scratch);
            add(dets, logical, p, None);
        }
    }

    // Readout assignment mechanisms (soft model): each hardened outcome flips
    // independently with its class rate, on top of the circuit channels.
    if let Some(sp) = &noisy.params.soft {
        let map = dmap.measurement_map();
        if sp.pm_ancilla > 0.0 {
            for rank in 0..map.n_ancillas {
                for r in 1..circuit.meta.rounds {
                    let meas = map.ancilla(r, rank);
                    let (dets, logical) = dmap.flips_to_detectors(&[meas]);
                    add(dets, logical, sp.pm_ancilla, Some(meas as u32));
                }
            }
        }
        if sp.pm_data > 0.0 {
            for q in 0..map.n_data {
                let meas = map.final_data(q);
                let (dets, logical) = dmap.flips_to_detectors(&[meas]);
                // Data readout assignment errors are space-like; they are not
                // reweighted per shot, so they fold into the circuit component.
                add(dets, logical, sp.pm_data, None);
            }
        }
    }

    let mechanisms = order
        .into_iter()
        .map(|key| {
            let (p, assignment) = merged[&key];
            Mechanism { probability: p, detectors: key.0, logical_flip: key.1, assignment }
        })
        .collect();
    Ok(DetectorErrorModel {
        rounds: circuit.meta.rounds,
        n_ancillas: dmap.n_ancillas,
        basis,
        mechanisms,
    })
}

/// Sample the DEM directly (flip each mechanism independently); used by the
/// consistency oracle against circuit sampling.
pub fn sample_dem_defect_rates(dem: &DetectorErrorModel, shots: usize, seed: u64) -> Vec<f64> {
    use rayon::prelude::*;
    let n_det = dem.n_detectors();
    let counts: Vec<u64> = (0..shots)
        .into_par_iter()
        .fold(
            || vec![0u64; n_det],
            |mut acc, shot| {
                let mut rng = crate::rng::CounterRng::new(seed, shot as u64);
                let mut fired = vec![false; n_det];
                for m in &dem.mechanisms {
                    if rng.below(m.probability) {
                        for &d in &m.detectors {
                            fired[d as usize] ^= true;
                        }
                    }
                }
                for (a, f) in acc.iter_mut().zip(fired) {
                    *a += f as u64;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; n_det],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    counts.into_iter().map(|c| c as f64 / shots as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Variant;
    use crate::layout::{build_layout, build_memory_circuit};
    use crate::noise::{attach_noise, NoiseParams};

    #[test]
    fn merge_arithmetic() {
        assert!((combine_p(0.1, 0.1) - 0.18).abs() < 1e-15);
        assert!((combine_p(0.0, 0.3) - 0.3).abs() < 1e-15);
        assert!(combine_p(0.5, 0.5) == 0.5);
    }

    /// Naive full-circuit propagation, no early termination.
    fn propagate_naive(
        plan: &CircuitPlan,
        start_step: usize,
        when: When,
        q1: usize,
        q2: usize,
        bits: PauliBits,
    ) -> Vec<usize> {
        let mut frame = Frame::new(plan.n_qubits);
        let mut flips = Vec::new();
        for t in 0..plan.steps.len() {
            if t == start_step && when == When::Before {
                frame.apply_pauli(q1, q2, bits);
            }
            plan.apply_step(t, &mut frame, |m| flips.push(m));
            if t == start_step && when == When::After {
                frame.apply_pauli(q1, q2, bits);
            }
        }
        flips
    }

    #[test]
    fn periodic_shortcut_matches_naive_propagation() {
        for variant in [Variant::Standard, Variant::Zxxz] {
            for basis in [Basis::X, Basis::Z] {
                let l = build_layout(3, variant).unwrap();
                let c = build_memory_circuit(&l, 9, basis, &vec![false; 9]).unwrap();
                let noisy = attach_noise(&c, &NoiseParams::depolarizing(1e-3)).unwrap();
                let plan = CircuitPlan::new(&c);
                let dmap = DetectorMap::new(&l, 9, basis);
                for ch in &noisy.channels {
                    for &(bits, _) in &ch.components {
                        let q2 = ch.q2.unwrap_or(usize::MAX);
                        let fast =
                            propagate_component(&plan, ch.timestep, ch.when, ch.q1, q2, bits);
                        let slow = propagate_naive(&plan, ch.timestep, ch.when, ch.q1, q2, bits);
                        let a = dmap.flips_to_detectors(&fast);
                        let b = dmap.flips_to_detectors(&slow);
                        assert_eq!(a, b, "step {} q {} bits {bits:#x}", ch.timestep, ch.q1);
                    }
                }
            }
        }
    }

    #[test]
    fn premeasure_flip_triggers_time_pair() {
        // X right before the round-r ancilla measurement fires detectors
        // (r, a) and (r+1, a).
        let l = build_layout(3, Variant::Zxxz).unwrap();
        let rounds = 5;
        let c = build_memory_circuit(&l, rounds, Basis::Z, &vec![false; 9]).unwrap();
        let plan = CircuitPlan::new(&c);
        let dmap = DetectorMap::new(&l, rounds, Basis::Z);
        let a = 8; // A = 8 ancillas per round
        for r in 1..rounds {
            for rank in 0..a {
                let step = plan
                    .steps
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| !s.measures.is_empty())
                    .nth(r - 1)
                    .map(|(t, _)| t)
                    .unwrap();
                let qubit = l.ancilla_qubit(rank);
                let flips = propagate_component(
                    &plan,
                    step,
                    When::Before,
                    qubit,
                    usize::MAX,
                    crate::noise::P1_X,
                );
                let (dets, logical) = dmap.flips_to_detectors(&flips);
                let expected = vec![
                    ((r - 1) * a + rank) as u32,
                    (r * a + rank) as u32,
                ];
                // Non-basis ancillas have no final-round detector: at the last
                // QEC round their pair truncates to a single detector.
                let anc = &l.ancillas[rank];
                let has_final = matches!(
                    (anc.stab_type, Basis::Z),
                    (StabType::Z, Basis::Z) | (StabType::X, Basis::X)
                );
                if r == rounds - 1 && !has_final {
                    assert_eq!(dets, vec![((r - 1) * a + rank) as u32], "r {r} rank {rank}");
                } else {
                    assert_eq!(dets, expected, "r {r} rank {rank}");
                }
                assert!(!logical);
            }
        }
    }

    #[test]
    fn data_x_between_rounds_fires_adjacent_pair() {
        // A single X on a bulk data qubit between rounds r and r+1 produces
        // exactly two basis-type defects at round r+1 on adjacent plaquettes.
        for variant in [Variant::Standard, Variant::Zxxz] {
            let l = build_layout(3, variant).unwrap();
            let rounds = 6;
            let c = build_memory_circuit(&l, rounds, Basis::Z, &vec![false; 9]).unwrap();
            let plan = CircuitPlan::new(&c);
            let dmap = DetectorMap::new(&l, rounds, Basis::Z);
            let bulk = 4; // center qubit (1, 1)
            let r = 2;
            let step = plan.round_reset_steps[r - 1]; // reset of round r
            let flips =
                propagate_component(&plan, step, When::After, bulk, usize::MAX, crate::noise::P1_X);
            let (dets, logical) = dmap.flips_to_detectors(&flips);
            assert_eq!(dets.len(), 2, "variant {variant:?} dets {dets:?}");
            for &d in &dets {
                let round = d as usize / 8 + 1;
                let rank = d as usize % 8;
                assert_eq!(round, r + 1, "defect at wrong round");
                let anc = &l.ancillas[rank];
                assert_eq!(anc.stab_type, StabType::Z, "X error must fire Z-type cells");
                assert!(anc.support.contains(&bulk), "fired cell must neighbor the qubit");
            }
            assert!(!logical);
        }
    }

    #[test]
    fn dem_deterministic_and_probabilities_valid() {
        let l = build_layout(3, Variant::Zxxz).unwrap();
        let c = build_memory_circuit(&l, 4, Basis::Z, &vec![false; 9]).unwrap();
        let noisy = attach_noise(&c, &NoiseParams::biased(2e-3, 0.5)).unwrap();
        let a = extract_dem(&noisy, &l, Basis::Z).unwrap();
        let b = extract_dem(&noisy, &l, Basis::Z).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert!(!a.mechanisms.is_empty());
        for m in &a.mechanisms {
            assert!(m.probability > 0.0 && m.probability < 0.5);
            assert!(!m.detectors.is_empty() || m.logical_flip);
            assert!(m.detectors.windows(2).all(|w| w[0] < w[1]));
            // No undetectable logical flips in this circuit family.
            assert!(!(m.detectors.is_empty() && m.logical_flip));
        }
    }

    #[test]
    fn y_component_is_symmetric_difference_of_x_and_z() {
        // For every 1q channel location: detectors(Y) = detectors(X) xor
        // detectors(Z), by linearity of propagation.
        let l = build_layout(3, Variant::Zxxz).unwrap();
        let c = build_memory_circuit(&l, 4, Basis::Z, &vec![false; 9]).unwrap();
        let noisy = attach_noise(&c, &NoiseParams::depolarizing(1e-3)).unwrap();
        let plan = CircuitPlan::new(&c);
        let dmap = DetectorMap::new(&l, 4, Basis::Z);
        for ch in &noisy.channels {
            if ch.components.len() != 3 {
                continue;
            }
            let q2 = ch.q2.unwrap_or(usize::MAX);
            let img = |bits: PauliBits| {
                let f = propagate_component(&plan, ch.timestep, ch.when, ch.q1, q2, bits);
                dmap.flips_to_detectors(&f)
            };
            let (dx, lx) = img(crate::noise::P1_X);
            let (dz, lz) = img(crate::noise::P1_Z);
            let (dy, ly) = img(crate::noise::P1_Y);
            let mut sym: Vec<u32> = dx
                .iter()
                .filter(|d| !dz.contains(d))
                .chain(dz.iter().filter(|d| !dx.contains(d)))
                .copied()
                .collect();
            sym.sort_unstable();
            assert_eq!(dy, sym);
            assert_eq!(ly, lx ^ lz);
        }
    }
}
