//! Defects, logical flips, and soft defect probabilities.
//!
//! Detector indexing: `(r, a) -> (r-1)*A + a` with QEC rounds `r = 1..N-1`
//! over all `A` ancillas, plus a final round `N` row per ancilla whose
//! entries are populated only for the basis-matching type (inferred from the
//! data-qubit readout); the remaining final entries stay 0.

use rayon::prelude::*;

use crate::bits::{BitMatrix, BitVec};
use crate::circuit::Basis;
use crate::container::{self, Container, Metadata};
use crate::error::{Error, Result};
use crate::layout::{CodeLayout, StabType};
use crate::noise::{posterior_one, SoftReadoutParams};
use crate::sim::{ReferenceFrame, ShotBatch};

#[derive(Clone, Debug)]
pub struct DefectTensor {
    pub rounds: usize,
    pub n_ancillas: usize,
    /// rows = detectors ((rounds-1 + 1) * A), cols = shots.
    pub defects: BitMatrix,
    /// Whether the measured logical outcome differs from the noiseless
    /// expectation, per shot.
    pub p_true: BitVec,
    pub shots: usize,
}

impl DefectTensor {
    #[inline]
    pub fn n_detectors(&self) -> usize {
        self.rounds * self.n_ancillas
    }

    #[inline]
    pub fn detector(&self, round: usize, ancilla: usize) -> usize {
        debug_assert!(round >= 1 && round <= self.rounds);
        (round - 1) * self.n_ancillas + ancilla
    }

    #[inline]
    pub fn get(&self, round: usize, ancilla: usize, shot: usize) -> bool {
        self.defects.get(self.detector(round, ancilla), shot)
    }

    /// Fired detector ids for one shot.
    pub fn fired(&self, shot: usize) -> Vec<usize> {
        self.defects.set_rows_in_col(shot)
    }

    /// Empirical defect rate per detector.
    pub fn rates(&self) -> Vec<f64> {
        (0..self.n_detectors())
            .map(|d| self.defects.count_ones_row(d) as f64 / self.shots as f64)
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct SoftDefectTensor {
    pub rounds: usize,
    pub n_ancillas: usize,
    /// Detector-major probabilities, `probs[det * shots + s]`.
    pub probs: Vec<f32>,
    /// From hardened outcomes.
    pub p_true: BitVec,
    pub shots: usize,
}

impl SoftDefectTensor {
    #[inline]
    pub fn n_detectors(&self) -> usize {
        self.rounds * self.n_ancillas
    }

    #[inline]
    pub fn get(&self, round: usize, ancilla: usize, shot: usize) -> f32 {
        self.probs[((round - 1) * self.n_ancillas + ancilla) * self.shots + shot]
    }
}

fn check_batch(batch: &ShotBatch, layout: &CodeLayout, basis: Basis) -> Result<()> {
    if batch.circuit_meta.distance != layout.distance {
        return Err(Error::Mismatch(format!(
            "batch distance {} vs layout {}",
            batch.circuit_meta.distance, layout.distance
        )));
    }
    if batch.circuit_meta.basis != basis {
        return Err(Error::Mismatch(format!(
            "batch basis {} vs requested {}",
            batch.circuit_meta.basis.as_str(),
            basis.as_str()
        )));
    }
    if batch.circuit_meta.variant != layout.variant {
        return Err(Error::Mismatch("batch variant differs from layout".into()));
    }
    let map = batch.measurement_map();
    if map.total != batch.measurements {
        return Err(Error::Mismatch(format!(
            "batch holds {} measurements, map expects {}",
            batch.measurements, map.total
        )));
    }
    Ok(())
}

/// Hard defects for every shot.
///
/// d(1,a) = m(1,a) xor reference; d(r,a) = m(r,a) xor m(r-1,a) xor the
/// reference change; the final round compares the data-readout parity of
/// each basis-matching support against that ancilla's last outcome.
pub fn compute_defects(
    batch: &ShotBatch,
    frame: &ReferenceFrame,
    layout: &CodeLayout,
    basis: Basis,
) -> Result<DefectTensor> {
    check_batch(batch, layout, basis)?;
    let map = batch.measurement_map();
    let a_count = map.n_ancillas;
    let rounds = batch.circuit_meta.rounds;
    let n_det = rounds * a_count;
    let mut defects = BitMatrix::zeros(n_det, batch.shots);

    let words = batch.shots.div_ceil(64);
    for rank in 0..a_count {
        // QEC-round chains.
        for r in 1..rounds {
            let det = (r - 1) * a_count + rank;
            let cur = map.ancilla(r, rank);
            let mut reference = frame.outcomes[cur];
            if r == 1 {
                let (dst, src) = (det, cur);
                for w in 0..words {
                    defects.row_mut(dst)[w] = batch.hard.row(src)[w];
                }
            } else {
                let prev = map.ancilla(r - 1, rank);
                reference ^= frame.outcomes[prev];
                for w in 0..words {
                    defects.row_mut(det)[w] = batch.hard.row(cur)[w] ^ batch.hard.row(prev)[w];
                }
            }
            defects.xor_row_const(det, reference);
        }
        // Final round from data readout, basis-matching ancillas only.
        let anc = &layout.ancillas[rank];
        let matches_basis = match (anc.stab_type, basis) {
            (StabType::Z, Basis::Z) | (StabType::X, Basis::X) => true,
            _ => false,
        };
        if !matches_basis {
            continue;
        }
        let det = (rounds - 1) * a_count + rank;
        let mut reference = false;
        for &q in &anc.support {
            let idx = map.final_data(q);
            reference ^= frame.outcomes[idx];
            for w in 0..words {
                defects.row_mut(det)[w] ^= batch.hard.row(idx)[w];
            }
        }
        if rounds >= 2 {
            let prev = map.ancilla(rounds - 1, rank);
            reference ^= frame.outcomes[prev];
            for w in 0..words {
                defects.row_mut(det)[w] ^= batch.hard.row(prev)[w];
            }
        }
        defects.xor_row_const(det, reference);
    }

    let p_true = logical_flip(batch, frame, layout, basis)?;
    Ok(DefectTensor { rounds, n_ancillas: a_count, defects, p_true, shots: batch.shots })
}

/// Parity of the data readout on the logical support, relative to the
/// noiseless expectation.
pub fn logical_flip(
    batch: &ShotBatch,
    frame: &ReferenceFrame,
    layout: &CodeLayout,
    basis: Basis,
) -> Result<BitVec> {
    check_batch(batch, layout, basis)?;
    let map = batch.measurement_map();
    let support = match basis {
        Basis::Z => &layout.logical_z_support,
        Basis::X => &layout.logical_x_support,
    };
    let words = batch.shots.div_ceil(64);
    let mut acc = vec![0u64; words];
    for &q in support {
        let row = batch.hard.row(map.final_data(q));
        for w in 0..words {
            acc[w] ^= row[w];
        }
    }
    let mut out = BitVec::zeros(batch.shots);
    for s in 0..batch.shots {
        let bit = (acc[s / 64] >> (s % 64)) & 1 == 1;
        out.set(s, bit ^ frame.logical);
    }
    Ok(out)
}

/// Probability that each detector fired, given the analog outcomes.
///
/// Posteriors use the symmetric Gaussian model with equal priors; the
/// reference frame enters by complementing posteriors where it flips the
/// expected outcome. Final-round probabilities combine the support's data
/// posteriors with the last ancilla posterior through the parity recursion.
pub fn soft_defect_probs(
    batch: &ShotBatch,
    params: &SoftReadoutParams,
    frame: &ReferenceFrame,
    layout: &CodeLayout,
    basis: Basis,
) -> Result<SoftDefectTensor> {
    check_batch(batch, layout, basis)?;
    let soft = batch
        .soft
        .as_ref()
        .ok_or_else(|| Error::invalid("batch has no soft block"))?;
    let map = batch.measurement_map();
    let a_count = map.n_ancillas;
    let rounds = batch.circuit_meta.rounds;
    let n_det = rounds * a_count;
    let shots = batch.shots;
    let mut probs = vec![0f32; n_det * shots];

    // u(m, s): posterior that the projected bit differs from the reference.
    let flip_posterior = |meas: usize, shot: usize, sigma: f64| -> f64 {
        let p1 = posterior_one(soft[meas * shots + shot] as f64, sigma);
        if frame.outcomes[meas] {
            1.0 - p1
        } else {
            p1
        }
    };
    let combine = |a: f64, b: f64| a * (1.0 - b) + b * (1.0 - a);

    let prob_rows: Vec<Vec<f32>> = (0..a_count)
        .into_par_iter()
        .map(|rank| {
            let mut rows = vec![0f32; rounds * shots];
            for r in 1..rounds {
                let cur = map.ancilla(r, rank);
                for s in 0..shots {
                    let u_cur = flip_posterior(cur, s, params.sigma_ancilla);
                    let p = if r == 1 {
                        u_cur
                    } else {
                        let prev = map.ancilla(r - 1, rank);
                        combine(u_cur, flip_posterior(prev, s, params.sigma_ancilla))
                    };
                    rows[(r - 1) * shots + s] = p as f32;
                }
            }
            let anc = &layout.ancillas[rank];
            let matches_basis = matches!(
                (anc.stab_type, basis),
                (StabType::Z, Basis::Z) | (StabType::X, Basis::X)
            );
            if matches_basis {
                for s in 0..shots {
                    let mut p = 0.0f64;
                    for &q in &anc.support {
                        p = combine(p, flip_posterior(map.final_data(q), s, params.sigma_data));
                    }
                    if rounds >= 2 {
                        p = combine(
                            p,
                            flip_posterior(map.ancilla(rounds - 1, rank), s, params.sigma_ancilla),
                        );
                    }
                    rows[(rounds - 1) * shots + s] = p as f32;
                }
            }
            rows
        })
        .collect();
    for (rank, rows) in prob_rows.into_iter().enumerate() {
        for r in 0..rounds {
            let det = r * a_count + rank;
            probs[det * shots..(det + 1) * shots].copy_from_slice(&rows[r * shots..(r + 1) * shots]);
        }
    }

    let p_true = logical_flip(batch, frame, layout, basis)?;
    Ok(SoftDefectTensor { rounds, n_ancillas: a_count, probs, p_true, shots })
}

// ---------------------------------------------------------------------------
// Container IO

impl DefectTensor {
    pub fn to_container(&self) -> Container {
        let mut meta = Metadata::new();
        meta.push("rounds", self.rounds);
        meta.push("ancillas", self.n_ancillas);
        meta.push("shots", self.shots);
        let mut c = Container::new(container::MAGIC_DEFECTS, meta);
        c.blocks.push(self.defects.transposed().to_padded_bytes());
        c.blocks.push(self.p_true.to_padded_bytes());
        c
    }

    pub fn from_container(c: &Container) -> Result<DefectTensor> {
        let rounds: usize = c.meta.parse("rounds")?;
        let n_ancillas: usize = c.meta.parse("ancillas")?;
        let shots: usize = c.meta.parse("shots")?;
        let n_det = rounds * n_ancillas;
        let defects = BitMatrix::from_padded_bytes(shots, n_det, &c.blocks[0])
            .ok_or_else(|| Error::Format("defect block size mismatch".into()))?
            .transposed();
        let p_true = BitVec::from_padded_bytes(shots, &c.blocks[1])
            .ok_or_else(|| Error::Format("p_true block size mismatch".into()))?;
        Ok(DefectTensor { rounds, n_ancillas, defects, p_true, shots })
    }
}

impl SoftDefectTensor {
    pub fn to_container(&self) -> Container {
        let mut meta = Metadata::new();
        meta.push("rounds", self.rounds);
        meta.push("ancillas", self.n_ancillas);
        meta.push("shots", self.shots);
        let mut c = Container::new(container::MAGIC_SOFT_DEFECTS, meta);
        let n_det = self.n_detectors();
        let mut shot_major = vec![0f32; self.probs.len()];
        for det in 0..n_det {
            for s in 0..self.shots {
                shot_major[s * n_det + det] = self.probs[det * self.shots + s];
            }
        }
        c.blocks.push(container::f32s_to_bytes(&shot_major));
        c.blocks.push(self.p_true.to_padded_bytes());
        c
    }

    pub fn from_container(c: &Container) -> Result<SoftDefectTensor> {
        let rounds: usize = c.meta.parse("rounds")?;
        let n_ancillas: usize = c.meta.parse("ancillas")?;
        let shots: usize = c.meta.parse("shots")?;
        let n_det = rounds * n_ancillas;
        let shot_major = container::bytes_to_f32s(&c.blocks[0])?;
        if shot_major.len() != n_det * shots {
            return Err(Error::Format("probability block size mismatch".into()));
        }
        let mut probs = vec![0f32; shot_major.len()];
        for s in 0..shots {
            for det in 0..n_det {
                probs[det * shots + s] = shot_major[s * n_det + det];
            }
        }
        let p_true = BitVec::from_padded_bytes(shots, &c.blocks[1])
            .ok_or_else(|| Error::Format("p_true block size mismatch".into()))?;
        Ok(SoftDefectTensor { rounds, n_ancillas, probs, p_true, shots })
    }
}
