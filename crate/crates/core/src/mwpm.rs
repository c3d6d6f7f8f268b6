//! Exact minimum-weight perfect matching decoding, hard and soft.
//!
//! Decoding builds the derived graph on the fired detectors: Dijkstra
//! shortest-path distances under the edge weights, one boundary option per
//! detector (virtual twin vertices let the boundary absorb any subset), and
//! a zero-weight clique among the twins. Exact blossom matching runs on
//! quantized integer weights; the quantization divides by the maximum edge
//! weight, so uniformly rescaled graphs decode identically. Pairs whose
//! direct distance is no better than their two boundary legs are pruned,
//! which never changes the optimal value.
//!
//! The soft variant replaces, per shot, the assignment-error component of
//! each ancilla time edge with the posterior q = L/(1+L) from that shot's
//! analog outcome and re-runs the same machinery.

use rayon::prelude::*;

use crate::bits::{BitMatrix, BitVec};
use crate::blossom;
use crate::container::{self, Container, Metadata};
use crate::dem::combine_p;
use crate::error::{Error, Result};
use crate::graph::MatchingGraph;
use crate::noise::{posterior_one, SoftReadoutParams};
use crate::sim::ShotBatch;
use crate::syndrome::DefectTensor;

const QUANT: f64 = 65536.0;

/// A perfect matching of fired detectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    /// Detector pairs / detector-boundary pairs, canonically sorted.
    pub pairs: Vec<(u32, Option<u32>)>,
    /// Total weight in quantized integer units.
    pub weight_int: u64,
    /// Total weight in log-likelihood units.
    pub weight: f64,
    /// XOR of flip bits along all matched shortest paths.
    pub flip: bool,
}

impl Matching {
    pub fn empty() -> Matching {
        Matching { pairs: Vec::new(), weight_int: 0, weight: 0.0, flip: false }
    }
}

/// Compiled decoder: graph plus quantized weights and optional all-pairs
/// path cache.
pub struct Decoder {
    pub graph: MatchingGraph,
    int_weights: Vec<u32>,
    /// f64 weight per integer unit.
    scale: f64,
    cache: Option<PathCache>,
}

struct PathCache {
    n: usize,
    dist: Vec<u32>,
    flip: BitMatrix,
    bdist: Vec<u32>,
    bflip: BitVec,
}

/// Quantize weights relative to the maximum; exact under uniform rescaling.
fn quantize(weights: &[f64]) -> (Vec<u32>, f64) {
    let wmax = weights.iter().copied().fold(0.0f64, f64::max);
    if wmax <= 0.0 {
        return (vec![0; weights.len()], 1.0);
    }
    let ints = weights.iter().map(|&w| ((w / wmax) * QUANT).round() as u32).collect();
    (ints, wmax / QUANT)
}

struct DijkstraOut {
    dist: Vec<u32>,
    flip: BitVec,
    bdist: u32,
    bflip: bool,
}

fn dijkstra(graph: &MatchingGraph, int_weights: &[u32], src: usize) -> DijkstraOut {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let n = graph.n_detectors();
    let mut dist = vec![u32::MAX; n];
    let mut flip = BitVec::zeros(n);
    let mut heap: BinaryHeap<Reverse<(u32, usize)>> = BinaryHeap::new();
    dist[src] = 0;
    heap.push(Reverse((0, src)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &ei in &graph.adj[v] {
            let e = &graph.edges[ei as usize];
            let Some(other) = e.v else { continue };
            let u = if e.u as usize == v { other as usize } else { e.u as usize };
            let nd = d + int_weights[ei as usize];
            if nd < dist[u] {
                dist[u] = nd;
                flip.set(u, flip.get(v) ^ e.flip);
                heap.push(Reverse((nd, u)));
            }
        }
    }
    // Boundary leg: best over all boundary edges.
    let mut bdist = u32::MAX;
    let mut bflip = false;
    for (ei, e) in graph.edges.iter().enumerate() {
        if e.v.is_none() && dist[e.u as usize] != u32::MAX {
            let d = dist[e.u as usize].saturating_add(int_weights[ei]);
            if d < bdist {
                bdist = d;
                bflip = flip.get(e.u as usize) ^ e.flip;
            }
        }
    }
    DijkstraOut { dist, flip, bdist, bflip }
}

impl Decoder {
    pub fn new(graph: MatchingGraph) -> Decoder {
        let weights: Vec<f64> = graph.edges.iter().map(|e| e.weight()).collect();
        let (int_weights, scale) = quantize(&weights);
        Decoder { graph, int_weights, scale, cache: None }
    }

    /// Precompute all-pairs shortest paths (memory n^2 / 2 words); decode
    /// then costs O(k^2) lookups plus matching per shot.
    pub fn build_cache(&mut self) {
        let n = self.graph.n_detectors();
        let rows: Vec<DijkstraOut> = (0..n)
            .into_par_iter()
            .map(|src| dijkstra(&self.graph, &self.int_weights, src))
            .collect();
        let mut dist = vec![u32::MAX; n * n];
        let mut flip = BitMatrix::zeros(n, n);
        let mut bdist = vec![u32::MAX; n];
        let mut bflip = BitVec::zeros(n);
        for (src, row) in rows.into_iter().enumerate() {
            dist[src * n..(src + 1) * n].copy_from_slice(&row.dist);
            for (v, _) in row.dist.iter().enumerate().filter(|&(_, &d)| d != u32::MAX) {
                flip.set(src, v, row.flip.get(v));
            }
            bdist[src] = row.bdist;
            bflip.set(src, row.bflip);
        }
        self.cache = Some(PathCache { n, dist, flip, bdist, bflip });
    }

    fn paths_for(&self, fired: &[u32]) -> PairTable {
        let k = fired.len();
        match &self.cache {
            Some(c) => {
                let mut dist = vec![u32::MAX; k * k];
                let mut flip = BitVec::zeros(k * k);
                for (i, &fi) in fired.iter().enumerate() {
                    for (j, &fj) in fired.iter().enumerate() {
                        dist[i * k + j] = c.dist[fi as usize * c.n + fj as usize];
                        flip.set(i * k + j, c.flip.get(fi as usize, fj as usize));
                    }
                }
                let bdist = fired.iter().map(|&f| c.bdist[f as usize]).collect();
                let mut bflip = BitVec::zeros(k);
                for (i, &f) in fired.iter().enumerate() {
                    bflip.set(i, c.bflip.get(f as usize));
                }
                PairTable { k, dist, flip, bdist, bflip }
            }
            None => pair_table_by_dijkstra(&self.graph, &self.int_weights, fired),
        }
    }

    /// Exact MWPM decode of one fired-detector set.
    pub fn decode(&self, fired: &[u32]) -> Result<(bool, Matching)> {
        let fired = normalize_fired(&self.graph, fired)?;
        let table = self.paths_for(&fired);
        let matching = match_with_blossom(&fired, &table, self.scale)?;
        Ok((matching.flip, matching))
    }

    /// Exhaustive minimum-weight pairing, the cross-check oracle for small
    /// fired sets. Ties break lexicographically on the sorted pair list.
    pub fn decode_exhaustive(&self, fired: &[u32], limit: usize) -> Result<(bool, Matching)> {
        let fired = normalize_fired(&self.graph, fired)?;
        if fired.len() > limit {
            return Err(Error::invalid(format!(
                "{} fired detectors exceed exhaustive limit {limit}",
                fired.len()
            )));
        }
        let table = self.paths_for(&fired);
        let matching = match_exhaustive(&fired, &table, self.scale)?;
        Ok((matching.flip, matching))
    }

    /// Soft decode: per-shot reweighting of ancilla-assignment time edges
    /// from the analog outcomes, then exact matching.
    pub fn soft_decode(
        &self,
        fired: &[u32],
        batch: &ShotBatch,
        shot: usize,
        params: &SoftReadoutParams,
    ) -> Result<(bool, Matching)> {
        let fired = normalize_fired(&self.graph, fired)?;
        if batch.soft.is_none() {
            return Err(Error::invalid("soft decode requires analog outcomes"));
        }
        let weights: Vec<f64> = self
            .graph
            .edges
            .iter()
            .map(|e| match e.assignment {
                Some((meas, _)) => {
                    let analog = batch.soft_outcome(meas as usize, shot) as f64;
                    let hard = batch.outcome(meas as usize, shot);
                    let p1 = posterior_one(analog, params.sigma_ancilla);
                    // Posterior that the hardened bit is wrong.
                    let q = if hard { 1.0 - p1 } else { p1 };
                    let q = q.min(0.5);
                    let p = combine_p(q, e.p_circuit).clamp(1e-15, 0.5);
                    ((1.0 - p) / p).ln()
                }
                None => e.weight(),
            })
            .collect();
        let (int_weights, scale) = quantize(&weights);
        let table = pair_table_by_dijkstra(&self.graph, &int_weights, &fired);
        let matching = match_with_blossom(&fired, &table, scale)?;
        Ok((matching.flip, matching))
    }

    /// Corrections for a whole defect tensor.
    pub fn decode_batch(&self, defects: &DefectTensor) -> Result<BitVec> {
        let corrections: Vec<Result<bool>> = (0..defects.shots)
            .into_par_iter()
            .map(|s| {
                let fired: Vec<u32> = defects.fired(s).into_iter().map(|d| d as u32).collect();
                self.decode(&fired).map(|(c, _)| c)
            })
            .collect();
        let mut out = BitVec::zeros(defects.shots);
        for (s, c) in corrections.into_iter().enumerate() {
            out.set(s, c?);
        }
        Ok(out)
    }

    /// Soft corrections for a whole batch (defects from hardened outcomes).
    pub fn soft_decode_batch(
        &self,
        defects: &DefectTensor,
        batch: &ShotBatch,
        params: &SoftReadoutParams,
    ) -> Result<BitVec> {
        let corrections: Vec<Result<bool>> = (0..defects.shots)
            .into_par_iter()
            .map(|s| {
                let fired: Vec<u32> = defects.fired(s).into_iter().map(|d| d as u32).collect();
                self.soft_decode(&fired, batch, s, params).map(|(c, _)| c)
            })
            .collect();
        let mut out = BitVec::zeros(defects.shots);
        for (s, c) in corrections.into_iter().enumerate() {
            out.set(s, c?);
        }
        Ok(out)
    }
}

struct PairTable {
    k: usize,
    dist: Vec<u32>,
    flip: BitVec,
    bdist: Vec<u32>,
    bflip: BitVec,
}

fn normalize_fired(graph: &MatchingGraph, fired: &[u32]) -> Result<Vec<u32>> {
    let n = graph.n_detectors() as u32;
    let mut fired: Vec<u32> = fired.to_vec();
    fired.sort_unstable();
    fired.dedup();
    if let Some(&bad) = fired.iter().find(|&&d| d >= n) {
        return Err(Error::invalid(format!("detector id {bad} outside graph ({n} detectors)")));
    }
    Ok(fired)
}

fn pair_table_by_dijkstra(graph: &MatchingGraph, int_weights: &[u32], fired: &[u32]) -> PairTable {
    let k = fired.len();
    let runs: Vec<DijkstraOut> = fired
        .par_iter()
        .map(|&f| dijkstra(graph, int_weights, f as usize))
        .collect();
    let mut dist = vec![u32::MAX; k * k];
    let mut flip = BitVec::zeros(k * k);
    let mut bdist = vec![u32::MAX; k];
    let mut bflip = BitVec::zeros(k);
    for (i, run) in runs.into_iter().enumerate() {
        for (j, &fj) in fired.iter().enumerate() {
            dist[i * k + j] = run.dist[fj as usize];
            flip.set(i * k + j, run.flip.get(fj as usize));
        }
        bdist[i] = run.bdist;
        bflip.set(i, run.bflip);
    }
    PairTable { k, dist, flip, bdist, bflip }
}

fn match_with_blossom(fired: &[u32], table: &PairTable, scale: f64) -> Result<Matching> {
    let k = table.k;
    if k == 0 {
        return Ok(Matching::empty());
    }
    // Matching a pair (i, j) directly instead of sending both to the
    // boundary saves gain(i, j) = bd(i) + bd(j) - dist(i, j). The optimum is
    // therefore sum(bd) minus a maximum-weight matching over positive-gain
    // pairs, which keeps the graph sparse and lets independent clusters
    // solve separately.
    for i in 0..k {
        if table.bdist[i] == u32::MAX {
            return Err(Error::Numeric(format!(
                "detector {} is not connected to the boundary",
                fired[i]
            )));
        }
    }
    let mut gain_edges: Vec<(usize, usize, i64)> = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let d = table.dist[i * k + j];
            if d == u32::MAX {
                continue;
            }
            let gain = table.bdist[i] as i64 + table.bdist[j] as i64 - d as i64;
            if gain > 0 {
                gain_edges.push((i, j, gain));
            }
        }
    }
    // Connected clusters of the gain graph are independent subproblems.
    let mut cluster = vec![usize::MAX; k];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (ei, &(i, j, _)) in gain_edges.iter().enumerate() {
        adj[i].push(ei);
        adj[j].push(ei);
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for start in 0..k {
        if cluster[start] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![start];
        cluster[start] = id;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &ei in &adj[v] {
                let (a, b, _) = gain_edges[ei];
                for u in [a, b] {
                    if cluster[u] == usize::MAX {
                        cluster[u] = id;
                        members.push(u);
                        stack.push(u);
                    }
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }

    let mut mate = vec![usize::MAX; k];
    for members in &clusters {
        if members.len() < 2 {
            continue;
        }
        let index_of: std::collections::HashMap<usize, usize> =
            members.iter().enumerate().map(|(local, &g)| (g, local)).collect();
        let local_edges: Vec<(usize, usize, i64)> = gain_edges
            .iter()
            .filter(|&&(i, j, _)| cluster[i] == cluster[members[0]] && cluster[j] == cluster[members[0]])
            .map(|&(i, j, g)| (index_of[&i], index_of[&j], g))
            .collect();
        let local_mate = blossom::max_weight_matching(members.len(), &local_edges, false);
        for (local, &m) in local_mate.iter().enumerate() {
            if m != usize::MAX {
                mate[members[local]] = members[m];
            }
        }
    }

    let mut pairs = Vec::new();
    let mut weight_int = 0u64;
    let mut flip = false;
    for i in 0..k {
        let m = mate[i];
        if m != usize::MAX {
            if i < m {
                pairs.push((fired[i], Some(fired[m])));
                weight_int += table.dist[i * k + m] as u64;
                flip ^= table.flip.get(i * k + m);
            }
        } else {
            pairs.push((fired[i], None));
            weight_int += table.bdist[i] as u64;
            flip ^= table.bflip.get(i);
        }
    }
    pairs.sort_unstable();
    Ok(Matching { pairs, weight_int, weight: weight_int as f64 * scale, flip })
}

fn match_exhaustive(fired: &[u32], table: &PairTable, scale: f64) -> Result<Matching> {
    let k = table.k;
    if k == 0 {
        return Ok(Matching::empty());
    }
    struct Search<'a> {
        table: &'a PairTable,
        fired: &'a [u32],
        used: Vec<bool>,
        current: Vec<(u32, Option<u32>)>,
        weight: u64,
        flip: bool,
        best: Option<(u64, Vec<(u32, Option<u32>)>, bool)>,
    }
    impl Search<'_> {
        fn go(&mut self) {
            let k = self.table.k;
            let Some(i) = (0..k).find(|&i| !self.used[i]) else {
                let mut pairs = self.current.clone();
                pairs.sort_unstable();
                let candidate = (self.weight, pairs, self.flip);
                if self
                    .best
                    .as_ref()
                    .is_none_or(|b| (candidate.0, &candidate.1) < (b.0, &b.1))
                {
                    self.best = Some(candidate);
                }
                return;
            };
            self.used[i] = true;
            for j in i + 1..k {
                if self.used[j] {
                    continue;
                }
                let d = self.table.dist[i * k + j];
                if d == u32::MAX {
                    continue;
                }
                self.used[j] = true;
                self.current.push((self.fired[i], Some(self.fired[j])));
                self.weight += d as u64;
                self.flip ^= self.table.flip.get(i * k + j);
                self.go();
                self.flip ^= self.table.flip.get(i * k + j);
                self.weight -= d as u64;
                self.current.pop();
                self.used[j] = false;
            }
            if self.table.bdist[i] != u32::MAX {
                self.current.push((self.fired[i], None));
                self.weight += self.table.bdist[i] as u64;
                self.flip ^= self.table.bflip.get(i);
                self.go();
                self.flip ^= self.table.bflip.get(i);
                self.weight -= self.table.bdist[i] as u64;
                self.current.pop();
            }
            self.used[i] = false;
        }
    }
    let mut search = Search {
        table,
        fired,
        used: vec![false; k],
        current: Vec::new(),
        weight: 0,
        flip: false,
        best: None,
    };
    search.go();
    let (weight_int, pairs, flip) =
        search.best.ok_or_else(|| Error::Numeric("no pairing covers the fired set".into()))?;
    Ok(Matching { pairs, weight_int, weight: weight_int as f64 * scale, flip })
}

// ---------------------------------------------------------------------------
// Correction file IO (QCOR)

/// Corrections aligned with a batch, plus the true-flip labels needed for
/// fidelity analysis.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionRecord {
    pub shots: usize,
    pub rounds: usize,
    pub decoder: String,
    pub digest: u64,
    pub corrections: BitVec,
    pub p_true: BitVec,
}

impl CorrectionRecord {
    pub fn to_container(&self) -> Container {
        let mut meta = Metadata::new();
        meta.push("shots", self.shots);
        meta.push("rounds", self.rounds);
        meta.push("decoder", &self.decoder);
        meta.push("digest", format!("{:016x}", self.digest));
        let mut c = Container::new(container::MAGIC_CORRECTIONS, meta);
        c.blocks.push(self.corrections.to_padded_bytes());
        c.blocks.push(self.p_true.to_padded_bytes());
        c
    }

    pub fn from_container(c: &Container) -> Result<CorrectionRecord> {
        let shots: usize = c.meta.parse("shots")?;
        let rounds: usize = c.meta.parse("rounds")?;
        let decoder = c.meta.require("decoder")?.to_string();
        let digest = u64::from_str_radix(c.meta.require("digest")?, 16)
            .map_err(|_| Error::Format("bad digest".into()))?;
        let corrections = BitVec::from_padded_bytes(shots, &c.blocks[0])
            .ok_or_else(|| Error::Format("correction block size mismatch".into()))?;
        let p_true = BitVec::from_padded_bytes(shots, &c.blocks[1])
            .ok_or_else(|| Error::Format("p_true block size mismatch".into()))?;
        Ok(CorrectionRecord { shots, rounds, decoder, digest, corrections, p_true })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        self.to_container().save(path)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<CorrectionRecord> {
        CorrectionRecord::from_container(&Container::load(path, container::MAGIC_CORRECTIONS)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Basis, Variant};
    use crate::dem::extract_dem;
    use crate::graph::build_matching_graph;
    use crate::layout::{build_layout, build_memory_circuit};
    use crate::noise::{attach_noise, NoiseParams};
    use crate::rng::CounterRng;

    fn decoder_for(d: usize, rounds: usize, p: f64) -> Decoder {
        let l = build_layout(d, Variant::Zxxz).unwrap();
        let c = build_memory_circuit(&l, rounds, Basis::Z, &vec![false; d * d]).unwrap();
        let noisy = attach_noise(&c, &NoiseParams::depolarizing(p)).unwrap();
        let dem = extract_dem(&noisy, &l, Basis::Z).unwrap();
        Decoder::new(build_matching_graph(&dem).unwrap())
    }

    #[test]
    fn empty_fired_set_is_trivial() {
        let dec = decoder_for(3, 4, 1e-3);
        let (c, m) = dec.decode(&[]).unwrap();
        assert!(!c);
        assert_eq!(m, Matching::empty());
    }

    #[test]
    fn unknown_detector_rejected() {
        let dec = decoder_for(3, 3, 1e-3);
        assert!(dec.decode(&[10_000]).is_err());
    }

    #[test]
    fn time_pair_matches_together() {
        // Two time-adjacent defects on one ancilla (a measurement error)
        // match to each other, correction 0, and beat two boundary legs.
        let dec = decoder_for(3, 6, 1e-3);
        let a = 8;
        let rank = 1usize; // bulk ancilla
        let fired = [a + rank as u32, 2 * a + rank as u32];
        let (c, m) = dec.decode(&fired).unwrap();
        assert!(!c);
        assert_eq!(m.pairs, vec![(fired[0], Some(fired[1]))]);
        let (ce, me) = dec.decode_exhaustive(&fired, 10).unwrap();
        assert_eq!(ce, c);
        assert_eq!(me.weight_int, m.weight_int);
    }

    #[test]
    fn blossom_weight_equals_exhaustive_on_random_shots() {
        // Small version of the acceptance oracle: random sampled shots with
        // <= 10 fired detectors.
        use crate::sim::{reference_frame, sample};
        use crate::syndrome::compute_defects;
        let l = build_layout(3, Variant::Zxxz).unwrap();
        let rounds = 7;
        let c = build_memory_circuit(&l, rounds, Basis::Z, &vec![false; 9]).unwrap();
        let noisy = attach_noise(&c, &NoiseParams::depolarizing(3e-3)).unwrap();
        let batch = sample(&noisy, &l, 400, 20260808).unwrap();
        let frame = reference_frame(&c, &l);
        let defects = compute_defects(&batch, &frame, &l, Basis::Z).unwrap();
        let dem = extract_dem(&noisy, &l, Basis::Z).unwrap();
        let mut dec = Decoder::new(build_matching_graph(&dem).unwrap());
        dec.build_cache();
        let mut checked = 0;
        for s in 0..batch.shots {
            let fired: Vec<u32> = defects.fired(s).into_iter().map(|d| d as u32).collect();
            if fired.is_empty() || fired.len() > 10 {
                continue;
            }
            let (_, blossom) = dec.decode(&fired).unwrap();
            let (_, oracle) = dec.decode_exhaustive(&fired, 10).unwrap();
            assert_eq!(blossom.weight_int, oracle.weight_int, "shot {s} fired {fired:?}");
            checked += 1;
        }
        assert!(checked > 30, "only {checked} usable shots");
    }

    #[test]
    fn scaling_invariance() {
        // Doubling every edge weight leaves quantized weights, matchings and
        // corrections identical.
        let dec = decoder_for(3, 5, 2e-3);
        let mut scaled_graph = dec.graph.clone();
        for e in scaled_graph.edges.iter_mut() {
            // weight = ln((1-p)/p); build p' so that w' = 2w exactly in the
            // quantization (relative weights matter only).
            let w = e.weight() * 2.0;
            let p = 1.0 / (1.0 + w.exp());
            e.p = p;
        }
        let dec2 = Decoder::new(scaled_graph);
        let mut rng = CounterRng::new(5, 5);
        // Only detectors with incident edges can fire in real data.
        let connected: Vec<u32> = (0..dec.graph.n_detectors())
            .filter(|&d| !dec.graph.adj[d].is_empty())
            .map(|d| d as u32)
            .collect();
        for _ in 0..50 {
            let fired: Vec<u32> = (0..6)
                .map(|_| connected[rng.below_n(connected.len() as u64) as usize])
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            let (c1, m1) = dec.decode(&fired).unwrap();
            let (c2, m2) = dec2.decode(&fired).unwrap();
            assert_eq!(c1, c2);
            assert_eq!(m1.pairs, m2.pairs);
        }
    }

    #[test]
    fn cache_and_dijkstra_agree() {
        let mut dec = decoder_for(3, 6, 1e-3);
        let connected: Vec<u32> = (0..dec.graph.n_detectors())
            .filter(|&d| !dec.graph.adj[d].is_empty())
            .map(|d| d as u32)
            .collect();
        let draw = |seed: u64| -> Vec<u32> {
            let mut rng = CounterRng::new(33, seed);
            (0..8)
                .map(|_| connected[rng.below_n(connected.len() as u64) as usize])
                .collect()
        };
        let no_cache_results: Vec<_> =
            (0..30).map(|i| dec.decode(&draw(i)).unwrap().1).collect();
        dec.build_cache();
        for (i, expected) in no_cache_results.iter().enumerate() {
            let got = dec.decode(&draw(i as u64)).unwrap().1;
            assert_eq!(&got, expected);
        }
    }

    #[test]
    fn correction_record_roundtrip() {
        let mut corrections = BitVec::zeros(10);
        corrections.set(3, true);
        let mut p_true = BitVec::zeros(10);
        p_true.set(3, true);
        p_true.set(7, true);
        let rec = CorrectionRecord {
            shots: 10,
            rounds: 5,
            decoder: "mwpm".into(),
            digest: 0xabcd,
            corrections,
            p_true,
        };
        let mut buf = Vec::new();
        rec.to_container().write_to(&mut buf).unwrap();
        let back = CorrectionRecord::from_container(
            &Container::read_from(buf.as_slice(), container::MAGIC_CORRECTIONS).unwrap(),
        )
        .unwrap();
        assert_eq!(back, rec);
    }
}
