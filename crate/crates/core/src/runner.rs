//! Pipeline orchestration shared by the CLI and the acceptance suite:
//! sample batches to disk, decode them with any of the four decoders, train
//! the recurrent decoder, and emit fit tables and plots.

use std::fs;
use std::path::PathBuf;

use crate::analysis::{self, FidelityPoint};
use crate::circuit::{Basis, Circuit};
use crate::config::{DecoderKind, RunConfig};
use crate::dem::extract_dem;
use crate::error::{Error, Result};
use crate::graph::build_matching_graph;
use crate::layout::{build_layout, build_memory_circuit, CodeLayout};
use crate::mwpm::{CorrectionRecord, Decoder};
use crate::nn::io as nn_io;
use crate::nn::train::{evaluate_dataset, train, DefectDataset};
use crate::nn::{Model, ModelMeta};
use crate::sim::{reference_frame, sample, ReferenceFrame, ShotBatch};
use crate::syndrome::{compute_defects, soft_defect_probs};

pub struct Pipeline {
    pub cfg: RunConfig,
}

/// One experiment leg: a (rounds, bitstring) pair.
#[derive(Clone, Debug)]
pub struct Leg {
    pub rounds: usize,
    pub bits_index: usize,
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Pipeline {
        Pipeline { cfg }
    }

    pub fn legs(&self) -> Vec<Leg> {
        let mut out = Vec::new();
        for &rounds in &self.cfg.rounds {
            for bits_index in 0..self.cfg.bitstrings.len() {
                out.push(Leg { rounds, bits_index });
            }
        }
        out
    }

    pub fn layout(&self) -> Result<CodeLayout> {
        build_layout(self.cfg.distance, self.cfg.variant)
    }

    pub fn circuit(&self, leg: &Leg) -> Result<(CodeLayout, Circuit)> {
        let layout = self.layout()?;
        let circuit = build_memory_circuit(
            &layout,
            leg.rounds,
            self.cfg.basis,
            &self.cfg.bitstrings[leg.bits_index],
        )?;
        Ok((layout, circuit))
    }

    fn leg_seed(&self, leg: &Leg, purpose: u64) -> u64 {
        // Distinct stream per (seed, rounds, bitstring, purpose).
        crate::container::digest64(&format!(
            "{}:{}:{}:{}",
            self.cfg.seed, leg.rounds, leg.bits_index, purpose
        ))
    }

    pub fn batch_path(&self, leg: &Leg) -> PathBuf {
        self.cfg.out.join(format!(
            "shots_d{}_{}_r{}_b{}_{:016x}.qsht",
            self.cfg.distance,
            self.cfg.basis.as_str(),
            leg.rounds,
            leg.bits_index,
            self.cfg.digest()
        ))
    }

    pub fn corrections_path(&self, leg: &Leg) -> PathBuf {
        self.cfg.out.join(format!(
            "corr_{}_d{}_{}_r{}_b{}_{:016x}.qcor",
            self.cfg.decoder.as_str(),
            self.cfg.distance,
            self.cfg.basis.as_str(),
            leg.rounds,
            leg.bits_index,
            self.cfg.digest()
        ))
    }

    pub fn summary_path(&self) -> PathBuf {
        self.cfg.out.join(format!(
            "decode_{}_d{}_{}_{:016x}.csv",
            self.cfg.decoder.as_str(),
            self.cfg.distance,
            self.cfg.basis.as_str(),
            self.cfg.digest()
        ))
    }

    pub fn sample_leg(&self, leg: &Leg) -> Result<ShotBatch> {
        let (layout, circuit) = self.circuit(leg)?;
        let noisy = crate::noise::attach_noise(&circuit, &self.cfg.noise)?;
        let mut batch = sample(&noisy, &layout, self.cfg.shots, self.leg_seed(leg, 0))?;
        batch.digest = self.cfg.digest();
        Ok(batch)
    }

    /// Generate and write every leg's batch file.
    pub fn run_sample(&self) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.cfg.out)?;
        let mut paths = Vec::new();
        for leg in self.legs() {
            let batch = self.sample_leg(&leg)?;
            let path = self.batch_path(&leg);
            batch.save(&path)?;
            paths.push(path);
        }
        Ok(paths)
    }

    /// Decode one leg's batch with the configured decoder.
    pub fn decode_batch(
        &self,
        leg: &Leg,
        batch: &ShotBatch,
        nn_model: Option<&Model<f32>>,
    ) -> Result<CorrectionRecord> {
        let (layout, circuit) = self.circuit(leg)?;
        if batch.digest != self.cfg.digest() {
            return Err(Error::Mismatch(format!(
                "batch digest {:016x} does not match config digest {:016x}",
                batch.digest,
                self.cfg.digest()
            )));
        }
        let frame: ReferenceFrame = reference_frame(&circuit, &layout);
        let defects = compute_defects(batch, &frame, &layout, self.cfg.basis)?;
        let corrections = match self.cfg.decoder {
            DecoderKind::Mwpm | DecoderKind::SoftMwpm => {
                let noisy = crate::noise::attach_noise(&circuit, &self.cfg.noise)?;
                let dem = extract_dem(&noisy, &layout, self.cfg.basis)?;
                let mut decoder = Decoder::new(build_matching_graph(&dem)?);
                if self.cfg.decoder == DecoderKind::Mwpm {
                    decoder.build_cache();
                    decoder.decode_batch(&defects)?
                } else {
                    let params = self
                        .cfg
                        .noise
                        .soft
                        .clone()
                        .ok_or_else(|| Error::invalid("soft decoding requires soft noise"))?;
                    decoder.soft_decode_batch(&defects, batch, &params)?
                }
            }
            DecoderKind::Nn | DecoderKind::SoftNn => {
                let model = nn_model.ok_or_else(|| Error::invalid("nn decoding requires a model"))?;
                let ds = if self.cfg.decoder == DecoderKind::SoftNn {
                    let params = self
                        .cfg
                        .noise
                        .soft
                        .clone()
                        .ok_or_else(|| Error::invalid("soft decoding requires soft noise"))?;
                    let soft = soft_defect_probs(batch, &params, &frame, &layout, self.cfg.basis)?;
                    DefectDataset::from_soft(&soft)
                } else {
                    DefectDataset::from_defects(&defects)
                };
                evaluate_dataset(model, &ds)?
            }
        };
        Ok(CorrectionRecord {
            shots: batch.shots,
            rounds: leg.rounds,
            decoder: self.cfg.decoder.as_str().to_string(),
            digest: self.cfg.digest(),
            corrections,
            p_true: defects.p_true,
        })
    }

    fn load_nn_model(&self) -> Result<Option<Model<f32>>> {
        match self.cfg.decoder {
            DecoderKind::Nn | DecoderKind::SoftNn => {
                let path = self
                    .cfg
                    .model_path
                    .as_ref()
                    .ok_or_else(|| Error::invalid("decoder.model path required for nn decoding"))?;
                if !path.exists() {
                    return Err(Error::invalid(format!("model file {} does not exist", path.display())));
                }
                let (model, _) = nn_io::load_model::<f32>(path)?;
                Ok(Some(model))
            }
            _ => Ok(None),
        }
    }

    /// Decode every leg (loading batches from disk), write correction files
    /// and the per-round summary CSV. Returns the pooled fidelity points.
    pub fn run_decode(&self) -> Result<Vec<FidelityPoint>> {
        fs::create_dir_all(&self.cfg.out)?;
        let model = self.load_nn_model()?;
        let mut raw_points = Vec::new();
        for leg in self.legs() {
            let path = self.batch_path(&leg);
            if !path.exists() {
                return Err(Error::invalid(format!(
                    "batch file {} not found (run `sample` first)",
                    path.display()
                )));
            }
            let batch = ShotBatch::load(&path)?;
            let record = self.decode_batch(&leg, &batch, model.as_ref())?;
            record.save(self.corrections_path(&leg))?;
            let mut point = analysis::fidelity(&record.corrections, &record.p_true);
            point.rounds = leg.rounds;
            raw_points.push(point);
        }
        let pooled = analysis::pool_points(&raw_points);
        let mut csv = format!(
            "# decoder={}\n# digest={:016x}\n# noise={}\n# distance={}\n",
            self.cfg.decoder.as_str(),
            self.cfg.digest(),
            self.cfg.noise.canonical_string(),
            self.cfg.distance
        );
        csv.push_str(&analysis::fidelity_csv(&pooled));
        fs::write(self.summary_path(), csv)?;
        Ok(pooled)
    }

    /// Training datasets: one per leg at `shots`, with validation splits of
    /// shots/9 drawn from independent seeds (a 90/10 split of the generated
    /// data).
    pub fn training_data(&self) -> Result<(Vec<DefectDataset>, Vec<DefectDataset>)> {
        let layout = self.layout()?;
        let soft_input = self.cfg.decoder == DecoderKind::SoftNn;
        let mut train_sets = Vec::new();
        let mut val_sets = Vec::new();
        for leg in self.legs() {
            let (_, circuit) = self.circuit(&leg)?;
            let noisy = crate::noise::attach_noise(&circuit, &self.cfg.noise)?;
            let frame = reference_frame(&circuit, &layout);
            for (is_val, shots, purpose) in
                [(false, self.cfg.shots, 0u64), (true, (self.cfg.shots / 9).max(1), 1u64)]
            {
                let batch = sample(&noisy, &layout, shots, self.leg_seed(&leg, purpose))?;
                let ds = if soft_input {
                    let params = self.cfg.noise.soft.clone().unwrap();
                    DefectDataset::from_soft(&soft_defect_probs(
                        &batch,
                        &params,
                        &frame,
                        &layout,
                        self.cfg.basis,
                    )?)
                } else {
                    DefectDataset::from_defects(&compute_defects(
                        &batch,
                        &frame,
                        &layout,
                        self.cfg.basis,
                    )?)
                };
                if is_val {
                    val_sets.push(ds);
                } else {
                    train_sets.push(ds);
                }
            }
        }
        Ok((train_sets, val_sets))
    }

    pub fn model_path(&self) -> PathBuf {
        self.cfg.out.join(format!(
            "decoder_{}_d{}_{}_{:016x}.qnnm",
            self.cfg.decoder.as_str(),
            self.cfg.distance,
            self.cfg.basis.as_str(),
            self.cfg.digest()
        ))
    }

    /// Train the recurrent decoder on freshly generated data; writes the
    /// model and its history CSV. Returns (model path, best val loss).
    pub fn run_train(&self) -> Result<(PathBuf, f64)> {
        fs::create_dir_all(&self.cfg.out)?;
        let (train_sets, val_sets) = self.training_data()?;
        let a = (self.cfg.distance * self.cfg.distance) - 1;
        let meta = ModelMeta {
            distance: self.cfg.distance,
            input_width: a,
            final_width: a,
            n_l: default_n_l(self.cfg.distance),
        };
        let mut model: Model<f32> = Model::init(meta, self.cfg.train.seed);
        let history = train(&mut model, &train_sets, &val_sets, &self.cfg.train)?;
        let model_path = self.model_path();
        nn_io::save_model(&model, self.cfg.digest(), &model_path)?;
        let history_path = model_path.with_extension("history.csv");
        fs::write(history_path, nn_io::history_csv(&history))?;
        Ok((model_path, history.best_val_loss))
    }

    /// Fit the decay of the summary CSV written by `run_decode`.
    pub fn run_fit(&self) -> Result<analysis::FidelityFit> {
        let (points, _) = read_summary(&self.summary_path())?;
        let fit = analysis::fit_fidelity(&points, self.cfg.fit_start)?;
        let fit_path = self.cfg.out.join(format!(
            "fit_{}_d{}_{}_{:016x}.csv",
            self.cfg.decoder.as_str(),
            self.cfg.distance,
            self.cfg.basis.as_str(),
            self.cfg.digest()
        ));
        let mut csv = analysis::fidelity_csv(&fit.used);
        csv.push_str(&format!(
            "# eps={:.9e} eps_err={:.9e} r0={:.4} start={}\n",
            fit.eps, fit.eps_err, fit.r0, fit.start
        ));
        fs::write(fit_path, csv)?;
        Ok(fit)
    }

    pub fn run_dem_dump(&self) -> Result<PathBuf> {
        fs::create_dir_all(&self.cfg.out)?;
        let leg = Leg { rounds: *self.cfg.rounds.first().unwrap(), bits_index: 0 };
        let (layout, circuit) = self.circuit(&leg)?;
        let noisy = crate::noise::attach_noise(&circuit, &self.cfg.noise)?;
        let dem = extract_dem(&noisy, &layout, self.cfg.basis)?;
        let path = self.cfg.out.join(format!(
            "dem_d{}_{}_r{}_{:016x}.txt",
            self.cfg.distance,
            self.cfg.basis.as_str(),
            leg.rounds,
            self.cfg.digest()
        ));
        fs::write(&path, dem.to_text())?;
        Ok(path)
    }
}

pub fn default_n_l(distance: usize) -> usize {
    match distance {
        3 => 64,
        5 => 96,
        7 => 128,
        d => 64 + 16 * (d.saturating_sub(3)) / 2 * 2,
    }
}

/// Parse a decode summary CSV; returns (points, digest).
pub fn read_summary(path: &std::path::Path) -> Result<(Vec<FidelityPoint>, u64)> {
    let text = fs::read_to_string(path)?;
    let mut digest = 0u64;
    let mut points = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# digest=") {
            digest = u64::from_str_radix(rest.trim(), 16)
                .map_err(|_| Error::Format("bad digest in summary".into()))?;
            continue;
        }
        if line.starts_with('#') || line.starts_with("rounds,") || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Format(format!("bad summary line `{line}`")));
        }
        points.push(FidelityPoint {
            rounds: fields[0].parse().map_err(|_| Error::Format("bad rounds".into()))?,
            fidelity: fields[1].parse().map_err(|_| Error::Format("bad fidelity".into()))?,
            stderr: fields[2].parse().map_err(|_| Error::Format("bad stderr".into()))?,
            shots: fields[3].parse().map_err(|_| Error::Format("bad shots".into()))?,
        });
    }
    Ok((points, digest))
}

/// Multi-config report: per-config fidelity plot + fit, and a suppression
/// fit when two or more distances are present. Refuses mixed noise digests
/// unless `force`.
pub fn run_report(configs: &[RunConfig], force: bool) -> Result<Vec<PathBuf>> {
    if configs.is_empty() {
        return Err(Error::invalid("report needs at least one config"));
    }
    let noise_digest = configs[0].noise_digest();
    for cfg in configs {
        if cfg.noise_digest() != noise_digest && !force {
            return Err(Error::Mismatch(
                "configs mix different noise models; pass --force to combine them".into(),
            ));
        }
    }
    let mut outputs = Vec::new();
    let mut eps_pairs: Vec<(usize, f64, f64)> = Vec::new();
    let mut fid_series = Vec::new();
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    for (i, cfg) in configs.iter().enumerate() {
        let pipeline = Pipeline::new(cfg.clone());
        let (points, digest) = read_summary(&pipeline.summary_path())?;
        if digest != cfg.digest() && !force {
            return Err(Error::Mismatch(format!(
                "summary digest {digest:016x} does not match config {:016x}",
                cfg.digest()
            )));
        }
        let fit = pipeline.run_fit()?;
        let line: Vec<(f64, f64)> = points
            .iter()
            .map(|p| {
                let f = (1.0 - 2.0 * fit.eps).powf(p.rounds as f64 - fit.r0);
                (p.rounds as f64, f)
            })
            .collect();
        fid_series.push(crate::svg::Series {
            label: format!(
                "{} d={} eps={:.2e}",
                cfg.decoder.as_str(),
                cfg.distance,
                fit.eps
            ),
            color: colors[i % colors.len()].to_string(),
            points: points.iter().map(|p| (p.rounds as f64, p.fidelity)).collect(),
            line,
        });
        eps_pairs.push((cfg.distance, fit.eps, fit.eps_err));
    }
    let out_dir = configs[0].out.clone();
    fs::create_dir_all(&out_dir)?;
    let fid_plot = crate::svg::Plot {
        title: format!("logical fidelity (noise {:016x})", noise_digest),
        x_label: "QEC rounds".into(),
        y_label: "F_L".into(),
        log_y: true,
        series: fid_series,
    };
    let fid_path = out_dir.join("report_fidelity.svg");
    fs::write(&fid_path, fid_plot.render())?;
    outputs.push(fid_path);

    let distances: std::collections::BTreeSet<usize> =
        eps_pairs.iter().map(|&(d, _, _)| d).collect();
    if distances.len() >= 2 {
        let fit = analysis::fit_lambda(&eps_pairs)?;
        let lambda_path = out_dir.join("report_lambda.csv");
        fs::write(&lambda_path, analysis::lambda_csv(&fit))?;
        outputs.push(lambda_path.clone());
        let line: Vec<(f64, f64)> = eps_pairs
            .iter()
            .map(|&(d, _, _)| {
                (d as f64, fit.c / fit.lambda.powf((d as f64 + 1.0) / 2.0))
            })
            .collect();
        let plot = crate::svg::Plot {
            title: format!("error suppression: lambda = {:.2} +- {:.2}", fit.lambda, fit.lambda_err),
            x_label: "distance".into(),
            y_label: "eps_L".into(),
            log_y: true,
            series: vec![crate::svg::Series {
                label: "eps_L(d)".into(),
                color: "#1f77b4".into(),
                points: eps_pairs.iter().map(|&(d, e, _)| (d as f64, e)).collect(),
                line,
            }],
        };
        let lsvg = out_dir.join("report_lambda.svg");
        fs::write(&lsvg, plot.render())?;
        outputs.push(lsvg);
    }
    Ok(outputs)
}

// ---------------------------------------------------------------------------
// Oracle checks (the `oracle-check` subcommand): fast deterministic
// cross-validations of the independent computation routes.

pub struct OracleReport {
    pub lines: Vec<(String, bool)>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|(_, ok)| *ok)
    }
}

pub fn run_oracle_checks() -> OracleReport {
    let mut lines = Vec::new();

    // Exhaustive pairing vs blossom on sampled d=3 shots.
    {
        let ok = (|| -> Result<bool> {
            let layout = build_layout(3, crate::circuit::Variant::Zxxz)?;
            let circuit = build_memory_circuit(&layout, 7, Basis::Z, &[false; 9])?;
            let noisy = crate::noise::attach_noise(&circuit, &crate::noise::NoiseParams::depolarizing(3e-3))?;
            let batch = sample(&noisy, &layout, 500, 0xE0)?;
            let frame = reference_frame(&circuit, &layout);
            let defects = compute_defects(&batch, &frame, &layout, Basis::Z)?;
            let dem = extract_dem(&noisy, &layout, Basis::Z)?;
            let mut dec = Decoder::new(build_matching_graph(&dem)?);
            dec.build_cache();
            let mut checked = 0;
            for s in 0..batch.shots {
                let fired: Vec<u32> = defects.fired(s).into_iter().map(|d| d as u32).collect();
                if fired.is_empty() || fired.len() > 10 {
                    continue;
                }
                let (_, blossom) = dec.decode(&fired)?;
                let (_, oracle) = dec.decode_exhaustive(&fired, 10)?;
                if blossom.weight_int != oracle.weight_int {
                    return Ok(false);
                }
                checked += 1;
            }
            Ok(checked > 50)
        })()
        .unwrap_or(false);
        lines.push(("matching: blossom weight == exhaustive enumeration".to_string(), ok));
    }

    // Finite-difference gradient check on a tiny f64 model.
    {
        let ok = crate::nn::gradcheck::run(20, 1e-4).map(|worst| worst < 1e-4).unwrap_or(false);
        lines.push(("nn: analytic gradient == central finite differences".to_string(), ok));
    }

    // Propagation oracles.
    {
        let ok = propagation_oracles().unwrap_or(false);
        lines.push(("propagation: single-error detector signatures".to_string(), ok));
    }

    // Soft readout calibration.
    {
        let mut ok = true;
        for pm in [0.001, 0.01, 0.1] {
            let sigma = crate::noise::sigma_from_pm(pm);
            let mut rng = crate::rng::CounterRng::new(0xCA1, (pm * 1e6) as u64);
            let n = 1_000_000u64;
            let mut flips = 0u64;
            for i in 0..n {
                let bit = i % 2 == 0;
                let m = crate::noise::soften(bit, sigma, &mut rng);
                if crate::noise::harden(m, 0.0) != bit {
                    flips += 1;
                }
            }
            let rate = flips as f64 / n as f64;
            let sd = (pm * (1.0 - pm) / n as f64).sqrt();
            if (rate - pm).abs() >= 3.0 * sd {
                ok = false;
            }
        }
        lines.push(("soft readout: empirical assignment rate == erfc model".to_string(), ok));
    }

    // Fit recovery.
    {
        let points: Vec<FidelityPoint> = [3usize, 7, 13, 21]
            .iter()
            .map(|&r| FidelityPoint {
                rounds: r,
                fidelity: (1.0 - 2.0 * 0.01f64).powf(r as f64),
                stderr: 1e-9,
                shots: 1,
            })
            .collect();
        let ok = analysis::fit_fidelity(&points, 3)
            .map(|f| (f.eps - 0.01).abs() < 1e-12 && f.r0.abs() < 1e-9)
            .unwrap_or(false);
        let pairs: Vec<(usize, f64, f64)> = [3usize, 5, 7]
            .iter()
            .map(|&d| (d, 8e-4 / 4f64.powf((d as f64 + 1.0) / 2.0), 0.0))
            .collect();
        let ok2 = analysis::fit_lambda(&pairs)
            .map(|f| (f.lambda - 4.0).abs() < 1e-12)
            .unwrap_or(false);
        lines.push(("fits: exact synthetic recovery".to_string(), ok && ok2));
    }

    OracleReport { lines }
}

fn propagation_oracles() -> Result<bool> {
    use crate::dem::DetectorMap;
    use crate::noise::{P1_X, When};
    use crate::sim::CircuitPlan;
    let layout = build_layout(3, crate::circuit::Variant::Zxxz)?;
    let rounds = 6;
    let circuit = build_memory_circuit(&layout, rounds, Basis::Z, &[false; 9])?;
    let plan = CircuitPlan::new(&circuit);
    let dmap = DetectorMap::new(&layout, rounds, Basis::Z);
    // Pre-measurement flip on each ancilla at round 2 fires (2,a),(3,a).
    let a = 8;
    let measure_step = plan
        .steps
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.measures.is_empty())
        .nth(1)
        .map(|(t, _)| t)
        .unwrap();
    for rank in 0..a {
        let flips = crate::dem::propagate_for_tests(
            &plan,
            measure_step,
            When::Before,
            layout.ancilla_qubit(rank),
            usize::MAX,
            P1_X,
        );
        let (dets, logical) = dmap.flips_to_detectors(&flips);
        if dets != vec![(a + rank) as u32, (2 * a + rank) as u32] || logical {
            return Ok(false);
        }
    }
    // Data X between rounds 2 and 3 on the bulk qubit: two Z-type defects at
    // round 3 on its neighbours.
    let step = plan.round_reset_steps[1];
    let flips = crate::dem::propagate_for_tests(&plan, step, When::After, 4, usize::MAX, P1_X);
    let (dets, logical) = dmap.flips_to_detectors(&flips);
    if dets.len() != 2 || logical {
        return Ok(false);
    }
    for &d in &dets {
        let (round, rank) = (d as usize / a + 1, d as usize % a);
        let anc = &layout.ancillas[rank];
        if round != 3
            || anc.stab_type != crate::layout::StabType::Z
            || !anc.support.contains(&4)
        {
            return Ok(false);
        }
    }
    Ok(true)
}
