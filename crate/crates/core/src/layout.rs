//! Rotated surface-code layouts and memory-experiment circuits.
//!
//! Geometry: data qubits on a d x d grid, id = y*d + x. Stabilizer cells sit
//! on the (d+1) x (d+1) corner lattice; cell (a, b) covers the data qubits
//! among {(a-1,b-1), (a,b-1), (a-1,b), (a,b)}. Interior cells have weight 4.
//! Weight-2 cells: X-type on the left/right edges, Z-type on top/bottom, so
//! a logical Z string is any column and a logical X string any row.
//!
//! CZ scheduling: X-type cells interact in the N-shaped corner order
//! (NW, SW, NE, SE); Z-type cells in the Z-shaped order (SE, SW, NE, NW).
//! Weight-2 cells use the layers their in-grid corners would use in the bulk.
//! A mid-round ancilla fault then propagates onto a diagonal (or mixed-type)
//! data pair, never onto a same-type pair aligned with a logical string.
//!
//! Circuit variants: `standard` compiles each round with Hadamards on the odd
//! data sublattice at both ends of the round (plus the all-data H layers g, k)
//! so every ancilla measures a pure XXXX / ZZZZ operator. `zxxz` drops those
//! odd-sublattice H pairs; each ancilla then measures the same plaquette as a
//! ZXXZ-patterned operator and the code is the odd-sublattice-conjugated
//! surface code. Plaquette geometry, defects and logical supports are
//! identical between the variants.

use crate::circuit::{Basis, Circuit, CircuitMeta, Op, Timestep, Variant};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StabType {
    X,
    Z,
}

/// One ancilla-measured stabilizer cell.
#[derive(Clone, Debug)]
pub struct Ancilla {
    /// Corner-lattice coordinates (a, b) with a, b in 0..=d.
    pub cell: (usize, usize),
    pub stab_type: StabType,
    /// Data-qubit ids in CZ-layer order (absent layers skipped).
    pub support: Vec<usize>,
    /// Data partner per CZ layer (f, h, j, l).
    pub layer_partner: [Option<usize>; 4],
    /// Support entries measured in the rotated (X) basis under the zxxz
    /// compilation; these are the middle-layer corners.
    pub rotated: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct CodeLayout {
    pub distance: usize,
    pub variant: Variant,
    /// Grid coordinates of data qubit `i` (x, y) = (i % d, i / d).
    pub data_coords: Vec<(usize, usize)>,
    pub ancillas: Vec<Ancilla>,
    pub logical_x_support: Vec<usize>,
    pub logical_z_support: Vec<usize>,
}

impl CodeLayout {
    pub fn n_data(&self) -> usize {
        self.distance * self.distance
    }

    pub fn n_ancillas(&self) -> usize {
        self.ancillas.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_data() + self.n_ancillas()
    }

    /// Physical qubit id of ancilla `rank`.
    pub fn ancilla_qubit(&self, rank: usize) -> usize {
        self.n_data() + rank
    }

    /// Data qubits on the odd checkerboard ((x + y) odd); the sublattice whose
    /// per-round H pairs distinguish the two compilation variants.
    pub fn odd_sublattice(&self) -> Vec<usize> {
        (0..self.n_data()).filter(|&q| (q % self.distance + q / self.distance) % 2 == 1).collect()
    }

    /// Data qubits that the final readout rotates with an H for the given
    /// basis (prep uses the same set).
    pub fn readout_rotation(&self, basis: Basis) -> Vec<usize> {
        match (self.variant, basis) {
            (Variant::Standard, Basis::Z) => Vec::new(),
            (Variant::Standard, Basis::X) => (0..self.n_data()).collect(),
            (Variant::Zxxz, Basis::Z) => self.odd_sublattice(),
            (Variant::Zxxz, Basis::X) => {
                (0..self.n_data()).filter(|&q| (q % self.distance + q / self.distance).is_multiple_of(2)).collect()
            }
        }
    }
}

fn cell_type(a: usize, b: usize) -> StabType {
    if (a + b) % 2 == 1 {
        StabType::X
    } else {
        StabType::Z
    }
}

/// Corner order per CZ layer: X cells trace an N, Z cells a Z.
/// Corners as (dx, dy) offsets from (a-1, b-1): NW=(0,0), NE=(1,0),
/// SW=(0,1), SE=(1,1).
const SCHEDULE_X: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)]; // NW, SW, NE, SE
const SCHEDULE_Z: [(usize, usize); 4] = [(1, 1), (0, 1), (1, 0), (0, 0)]; // SE, SW, NE, NW

/// Construct the layout for odd distance `d >= 3`.
pub fn build_layout(d: usize, variant: Variant) -> Result<CodeLayout> {
    if d < 3 || d.is_multiple_of(2) {
        return Err(Error::invalid(format!("distance must be odd and >= 3, got {d}")));
    }
    let data_coords: Vec<(usize, usize)> = (0..d * d).map(|i| (i % d, i / d)).collect();
    let mut ancillas = Vec::new();
    for b in 0..=d {
        for a in 0..=d {
            let ty = cell_type(a, b);
            let interior = (1..d).contains(&a) && (1..d).contains(&b);
            let on_lr_edge = (a == 0 || a == d) && (1..d).contains(&b);
            let on_tb_edge = (b == 0 || b == d) && (1..d).contains(&a);
            let present = interior
                || (on_lr_edge && ty == StabType::X)
                || (on_tb_edge && ty == StabType::Z);
            if !present {
                continue;
            }
            let schedule = match ty {
                StabType::X => &SCHEDULE_X,
                StabType::Z => &SCHEDULE_Z,
            };
            let mut layer_partner = [None; 4];
            let mut support = Vec::new();
            let mut rotated = Vec::new();
            for (layer, &(dx, dy)) in schedule.iter().enumerate() {
                let (x, y) = (a + dx, b + dy);
                if x == 0 || y == 0 || x > d || y > d {
                    continue;
                }
                let (x, y) = (x - 1, y - 1);
                let q = y * d + x;
                layer_partner[layer] = Some(q);
                support.push(q);
                // Middle layers (h, j) are the basis-rotated corners.
                rotated.push(layer == 1 || layer == 2);
            }
            debug_assert!(support.len() == 2 || support.len() == 4);
            ancillas.push(Ancilla { cell: (a, b), stab_type: ty, support, layer_partner, rotated });
        }
    }
    let logical_x_support: Vec<usize> = (0..d).collect(); // row y = 0
    let logical_z_support: Vec<usize> = (0..d).map(|y| y * d).collect(); // column x = 0
    Ok(CodeLayout { distance: d, variant, data_coords, ancillas, logical_x_support, logical_z_support })
}

/// Build the full memory-experiment circuit.
///
/// Structure: ground-state prep, conditional X layer for the prepared
/// bitstring, then `rounds - 1` full QEC rounds (H layers, four CZ layers,
/// the mid-round all-qubit X layer, ancilla measure + reset), and finally the
/// data-qubit basis rotation followed by a simultaneous measurement of all
/// qubits.
pub fn build_memory_circuit(
    layout: &CodeLayout,
    rounds: usize,
    basis: Basis,
    bitstring: &[bool],
) -> Result<Circuit> {
    if rounds == 0 {
        return Err(Error::invalid("rounds must be >= 1"));
    }
    let d = layout.distance;
    if bitstring.len() != d * d {
        return Err(Error::invalid(format!(
            "bitstring length {} != d^2 = {}",
            bitstring.len(),
            d * d
        )));
    }
    let n_data = layout.n_data();
    let n_qubits = layout.n_qubits();
    let all_data: Vec<usize> = (0..n_data).collect();
    let all_ancilla: Vec<usize> = (0..layout.n_ancillas()).map(|r| layout.ancilla_qubit(r)).collect();
    let odd: Vec<usize> = layout.odd_sublattice();
    let rotation: Vec<usize> = layout.readout_rotation(basis);

    let mut steps: Vec<Timestep> = Vec::new();
    let pad = |ops: Vec<Op>| -> Timestep {
        let mut used = vec![false; n_qubits];
        for op in &ops {
            let (a, b) = op.qubits();
            used[a] = true;
            if let Some(b) = b {
                used[b] = true;
            }
        }
        let mut ops = ops;
        for (q, used) in used.iter().enumerate() {
            if !used {
                ops.push(Op::Idle(q));
            }
        }
        Timestep { ops }
    };

    // Ground-state prep on every qubit.
    steps.push(Timestep { ops: (0..n_qubits).map(Op::Prep).collect() });

    // Conditional X layer preparing the bitstring.
    let flips: Vec<Op> = (0..n_data).filter(|&q| bitstring[q]).map(Op::GateX).collect();
    if !flips.is_empty() {
        steps.push(pad(flips));
    }

    let full_rounds = rounds - 1;
    let cz_layer = |layer: usize| -> Vec<Op> {
        layout
            .ancillas
            .iter()
            .enumerate()
            .filter_map(|(rank, anc)| {
                anc.layer_partner[layer].map(|q| Op::GateCz(layout.ancilla_qubit(rank), q))
            })
            .collect()
    };

    for round in 0..full_rounds {
        // Round-opening H layer: ancillas, the odd-sublattice frame pairs for
        // the standard compilation, and (in the first round) the basis prep
        // rotation.
        let mut hs: Vec<usize> = all_ancilla.clone();
        let mut data_h = vec![false; n_data];
        if layout.variant == Variant::Standard {
            for &q in &odd {
                data_h[q] = true;
            }
        }
        if round == 0 {
            for &q in &rotation {
                data_h[q] ^= true;
            }
        }
        hs.extend((0..n_data).filter(|&q| data_h[q]));
        steps.push(pad(hs.into_iter().map(Op::GateH).collect()));

        steps.push(pad(cz_layer(0)));
        steps.push(pad(all_data.iter().map(|&q| Op::GateH(q)).collect()));
        steps.push(pad(cz_layer(1)));
        // Mid-round dynamical-decoupling X on every qubit.
        steps.push(Timestep { ops: (0..n_qubits).map(Op::GateX).collect() });
        steps.push(pad(cz_layer(2)));
        steps.push(pad(all_data.iter().map(|&q| Op::GateH(q)).collect()));
        steps.push(pad(cz_layer(3)));

        // Round-closing H layer.
        let mut hs: Vec<usize> = all_ancilla.clone();
        if layout.variant == Variant::Standard {
            hs.extend(odd.iter().copied());
        }
        steps.push(pad(hs.into_iter().map(Op::GateH).collect()));

        steps.push(pad(all_ancilla.iter().map(|&q| Op::Measure(q)).collect()));
        steps.push(pad(all_ancilla.iter().map(|&q| Op::Reset(q)).collect()));
    }

    // Final basis rotation on data qubits. With no preceding QEC round the
    // prep rotation never ran, so the readout is already in the prep frame.
    if full_rounds > 0 && !rotation.is_empty() {
        steps.push(pad(rotation.iter().map(|&q| Op::GateH(q)).collect()));
    }
    // Simultaneous measurement of every qubit.
    steps.push(Timestep { ops: (0..n_qubits).map(Op::Measure).collect() });

    let mut circuit = Circuit {
        n_qubits,
        timesteps: steps,
        meta: CircuitMeta {
            distance: d,
            rounds,
            basis,
            bitstring: bitstring.to_vec(),
            variant: layout.variant,
        },
    };
    circuit.canonicalize();
    circuit.check_wellformed()?;
    Ok(circuit)
}

/// Measurement bookkeeping for a memory circuit: global outcome indices per
/// ancilla round and for the final simultaneous block.
#[derive(Clone, Debug)]
pub struct MeasurementMap {
    pub n_ancillas: usize,
    pub n_data: usize,
    /// rounds - 1 ancilla measurement rounds.
    pub ancilla_rounds: usize,
    pub total: usize,
}

impl MeasurementMap {
    pub fn for_circuit(meta_rounds: usize, d: usize) -> MeasurementMap {
        let n_data = d * d;
        let n_ancillas = n_data - 1;
        let ancilla_rounds = meta_rounds - 1;
        MeasurementMap {
            n_ancillas,
            n_data,
            ancilla_rounds,
            total: ancilla_rounds * n_ancillas + n_data + n_ancillas,
        }
    }

    /// Outcome index of ancilla `rank` in QEC round `r` (1-based, r <= rounds-1).
    #[inline]
    pub fn ancilla(&self, r: usize, rank: usize) -> usize {
        debug_assert!(r >= 1 && r <= self.ancilla_rounds);
        (r - 1) * self.n_ancillas + rank
    }

    /// Outcome index of data qubit `q` in the final simultaneous block.
    #[inline]
    pub fn final_data(&self, q: usize) -> usize {
        self.ancilla_rounds * self.n_ancillas + q
    }

    /// Outcome index of ancilla `rank` in the final simultaneous block.
    #[inline]
    pub fn final_ancilla(&self, rank: usize) -> usize {
        self.ancilla_rounds * self.n_ancillas + self.n_data + rank
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d3_counts() {
        let l = build_layout(3, Variant::Zxxz).unwrap();
        assert_eq!(l.n_data(), 9);
        assert_eq!(l.n_ancillas(), 8);
        let x = l.ancillas.iter().filter(|a| a.stab_type == StabType::X).count();
        let z = l.ancillas.iter().filter(|a| a.stab_type == StabType::Z).count();
        assert_eq!((x, z), (4, 4));
        let w4 = l.ancillas.iter().filter(|a| a.support.len() == 4).count();
        let w2 = l.ancillas.iter().filter(|a| a.support.len() == 2).count();
        assert_eq!((w4, w2), (4, 4));
    }

    #[test]
    fn rejects_bad_distance() {
        assert!(build_layout(2, Variant::Zxxz).is_err());
        assert!(build_layout(1, Variant::Zxxz).is_err());
        assert!(build_layout(4, Variant::Standard).is_err());
    }

    #[test]
    fn counts_match_formulas() {
        for d in [3usize, 5, 7, 9] {
            let l = build_layout(d, Variant::Zxxz).unwrap();
            assert_eq!(l.n_ancillas(), d * d - 1);
            let w4 = l.ancillas.iter().filter(|a| a.support.len() == 4).count();
            let w2 = l.ancillas.iter().filter(|a| a.support.len() == 2).count();
            assert_eq!(w4, (d - 1) * (d - 1));
            assert_eq!(w2, 2 * (d - 1));
        }
    }

    #[test]
    fn stabilizers_commute_pairwise() {
        // Opposite-type supports must overlap on an even number of qubits.
        for d in [3usize, 5] {
            let l = build_layout(d, Variant::Zxxz).unwrap();
            for a in &l.ancillas {
                for b in &l.ancillas {
                    if a.stab_type == b.stab_type {
                        continue;
                    }
                    let overlap =
                        a.support.iter().filter(|q| b.support.contains(q)).count();
                    assert_eq!(overlap % 2, 0, "cells {:?} {:?}", a.cell, b.cell);
                }
            }
        }
    }

    #[test]
    fn logicals_anticommute_and_commute_with_stabilizers() {
        for d in [3usize, 5, 7] {
            let l = build_layout(d, Variant::Zxxz).unwrap();
            let common: Vec<_> =
                l.logical_x_support.iter().filter(|q| l.logical_z_support.contains(q)).collect();
            assert_eq!(common.len(), 1);
            // X_L vs Z-type cells, Z_L vs X-type cells: even overlap.
            for a in &l.ancillas {
                let logical = match a.stab_type {
                    StabType::Z => &l.logical_x_support,
                    StabType::X => &l.logical_z_support,
                };
                let overlap = a.support.iter().filter(|q| logical.contains(q)).count();
                assert_eq!(overlap % 2, 0, "cell {:?}", a.cell);
            }
        }
    }

    #[test]
    fn plaquettes_are_connected_neighbor_sets() {
        for d in [3usize, 5] {
            let l = build_layout(d, Variant::Zxxz).unwrap();
            for a in &l.ancillas {
                // All support qubits lie in the 2x2 block of cell (a, b).
                let (ca, cb) = a.cell;
                for &q in &a.support {
                    let (x, y) = l.data_coords[q];
                    assert!(x + 1 >= ca && x <= ca && y + 1 >= cb && y <= cb);
                }
            }
        }
    }

    #[test]
    fn cz_count_per_round() {
        // d=7: 4 * 7 * 6 = 168 per round.
        let l = build_layout(7, Variant::Zxxz).unwrap();
        let c = build_memory_circuit(&l, 3, Basis::Z, &vec![false; 49]).unwrap();
        let total_cz = c
            .timesteps
            .iter()
            .flat_map(|t| &t.ops)
            .filter(|op| matches!(op, Op::GateCz(_, _)))
            .count();
        assert_eq!(total_cz, 2 * 168);
        let sum_weights: usize = l.ancillas.iter().map(|a| a.support.len()).sum();
        assert_eq!(sum_weights, 168);
    }

    #[test]
    fn circuit_is_deterministic() {
        let l = build_layout(3, Variant::Zxxz).unwrap();
        let bits = vec![true, false, false, true, false, true, false, false, true];
        let a = build_memory_circuit(&l, 4, Basis::X, &bits).unwrap();
        let b = build_memory_circuit(&l, 4, Basis::X, &bits).unwrap();
        assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn text_roundtrip_byte_exact() {
        for variant in [Variant::Standard, Variant::Zxxz] {
            let l = build_layout(3, variant).unwrap();
            for basis in [Basis::X, Basis::Z] {
                for rounds in [1usize, 2, 5] {
                    let mut bits = vec![false; 9];
                    bits[4] = true;
                    let c = build_memory_circuit(&l, rounds, basis, &bits).unwrap();
                    let text = c.to_text();
                    let back = Circuit::from_text(&text).unwrap();
                    assert_eq!(back, c);
                    assert_eq!(back.to_text(), text);
                }
            }
        }
    }

    #[test]
    fn n1_structure() {
        // One round: prep, final rotation handling, measure-all. 8 ancilla
        // outcomes + 9 data outcomes.
        let l = build_layout(3, Variant::Zxxz).unwrap();
        let c = build_memory_circuit(&l, 1, Basis::Z, &vec![false; 9]).unwrap();
        assert_eq!(c.n_measurements(), 17);
        let m = MeasurementMap::for_circuit(1, 3);
        assert_eq!(m.total, 17);
        assert_eq!(m.ancilla_rounds, 0);
    }

    #[test]
    fn mid_round_x_layer_between_cz_2_and_3() {
        let l = build_layout(3, Variant::Zxxz).unwrap();
        let c = build_memory_circuit(&l, 3, Basis::Z, &vec![false; 9]).unwrap();
        // Find CZ layer timesteps per round; between the 2nd and 3rd there
        // must be exactly one all-qubit X layer.
        let mut cz_steps = Vec::new();
        let mut x_steps = Vec::new();
        for (t, step) in c.timesteps.iter().enumerate() {
            if step.ops.iter().any(|o| matches!(o, Op::GateCz(_, _))) {
                cz_steps.push(t);
            }
            let n_x = step.ops.iter().filter(|o| matches!(o, Op::GateX(_))).count();
            if n_x == c.n_qubits {
                x_steps.push(t);
            }
        }
        assert_eq!(cz_steps.len(), 8); // 2 rounds of 4 layers
        assert_eq!(x_steps.len(), 2); // one per round
        for r in 0..2 {
            let (h2, j3) = (cz_steps[4 * r + 1], cz_steps[4 * r + 2]);
            assert!(x_steps[r] > h2 && x_steps[r] < j3);
        }
    }

    #[test]
    fn measurement_map_indices() {
        let m = MeasurementMap::for_circuit(4, 3);
        assert_eq!(m.total, 3 * 8 + 9 + 8);
        assert_eq!(m.ancilla(1, 0), 0);
        assert_eq!(m.ancilla(3, 7), 23);
        assert_eq!(m.final_data(0), 24);
        assert_eq!(m.final_ancilla(0), 33);
    }
}
