//! Run configuration: flat `key=value` sections in UTF-8 text.
//!
//! ```text
//! [experiment]
//! distance=3
//! basis=Z
//! rounds=[1,37,4]        # pattern start,stop,step -> {1,5,...,37}
//! bitstrings=zeros,ones  # or explicit 0/1 strings
//! shots=500000
//!
//! [noise]
//! p=0.001
//! eta=1
//! pm_ancilla=0.01        # optional; enables soft readout
//! pm_data=0.001
//! threshold=0
//!
//! [decoder]
//! kind=mwpm              # mwpm | soft-mwpm | nn | soft-nn
//! model=decoder.qnnm
//!
//! [train]
//! learning_rate=1e-3
//! batch_size=256
//! dropout=0.2
//! ...
//!
//! [run]
//! seed=1
//! out=out
//! variant=zxxz
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::circuit::{Basis, Variant};
use crate::container::digest64;
use crate::error::{Error, Result};
use crate::nn::train::TrainConfig;
use crate::noise::{NoiseParams, OpClass, SoftReadoutParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoderKind {
    Mwpm,
    SoftMwpm,
    Nn,
    SoftNn,
}

impl DecoderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DecoderKind::Mwpm => "mwpm",
            DecoderKind::SoftMwpm => "soft-mwpm",
            DecoderKind::Nn => "nn",
            DecoderKind::SoftNn => "soft-nn",
        }
    }

    pub fn parse(s: &str) -> Result<DecoderKind> {
        match s {
            "mwpm" => Ok(DecoderKind::Mwpm),
            "soft-mwpm" => Ok(DecoderKind::SoftMwpm),
            "nn" => Ok(DecoderKind::Nn),
            "soft-nn" => Ok(DecoderKind::SoftNn),
            _ => Err(Error::invalid(format!("unknown decoder kind `{s}`"))),
        }
    }

    pub fn is_soft(self) -> bool {
        matches!(self, DecoderKind::SoftMwpm | DecoderKind::SoftNn)
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub distance: usize,
    pub basis: Basis,
    pub variant: Variant,
    pub rounds: Vec<usize>,
    pub bitstrings: Vec<Vec<bool>>,
    pub shots: usize,
    pub noise: NoiseParams,
    pub decoder: DecoderKind,
    pub model_path: Option<PathBuf>,
    pub train: TrainConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: usize,
    pub fit_start: usize,
}

/// Expand `[i,j,k]` to {i, i+k, ..., <=j}; a bare comma list stays as-is.
pub fn expand_rounds(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    let parse_int = |s: &str| -> Result<usize> {
        s.trim().parse().map_err(|_| Error::invalid(format!("bad rounds entry `{s}`")))
    };
    if let Some(inner) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::invalid("rounds pattern must be [start,stop,step]"));
        }
        let (start, stop, step) = (parse_int(parts[0])?, parse_int(parts[1])?, parse_int(parts[2])?);
        if step == 0 || start == 0 {
            return Err(Error::invalid("rounds pattern needs start >= 1 and step >= 1"));
        }
        Ok((start..=stop).step_by(step).collect())
    } else {
        let mut out = Vec::new();
        for part in text.split(',') {
            let r = parse_int(part)?;
            if r == 0 {
                return Err(Error::invalid("rounds must be >= 1"));
            }
            out.push(r);
        }
        Ok(out)
    }
}

fn parse_bitstrings(text: &str, n: usize) -> Result<Vec<Vec<bool>>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        let bits = match part {
            "zeros" => vec![false; n],
            "ones" => vec![true; n],
            other => {
                if other.len() != n {
                    return Err(Error::invalid(format!(
                        "bitstring `{other}` has length {}, expected {n}",
                        other.len()
                    )));
                }
                other
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(Error::invalid("bitstrings must be 0/1, `zeros` or `ones`")),
                    })
                    .collect::<Result<Vec<bool>>>()?
            }
        };
        out.push(bits);
    }
    Ok(out)
}

type Sections = BTreeMap<String, BTreeMap<String, String>>;

fn parse_sections(text: &str) -> Result<Sections> {
    let mut sections: Sections = BTreeMap::new();
    let mut current = String::from("");
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            sections.entry(current.clone()).or_default();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("line {}: expected key=value", lineno + 1)))?;
        sections
            .entry(current.clone())
            .or_default()
            .insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(sections)
}

fn get<'a>(s: &'a Sections, section: &str, key: &str) -> Option<&'a str> {
    s.get(section).and_then(|m| m.get(key)).map(|v| v.as_str())
}

fn parse_or<T: std::str::FromStr>(s: &Sections, section: &str, key: &str, default: T) -> Result<T> {
    match get(s, section, key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::invalid(format!("[{section}] {key}: bad value `{v}`"))),
    }
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<RunConfig> {
        let s = parse_sections(text)?;
        let distance: usize = parse_or(&s, "experiment", "distance", 3)?;
        let basis = Basis::parse(get(&s, "experiment", "basis").unwrap_or("Z"))?;
        let variant = Variant::parse(get(&s, "run", "variant").unwrap_or("zxxz"))?;
        let rounds = expand_rounds(get(&s, "experiment", "rounds").unwrap_or("[1,25,2]"))?;
        let bitstrings =
            parse_bitstrings(get(&s, "experiment", "bitstrings").unwrap_or("zeros"), distance * distance)?;
        let shots: usize = parse_or(&s, "experiment", "shots", 10_000)?;
        if shots == 0 {
            return Err(Error::invalid("shots must be > 0"));
        }

        let p: f64 = parse_or(&s, "noise", "p", 1e-3)?;
        let eta_text = get(&s, "noise", "eta").unwrap_or("1");
        let eta: f64 = if eta_text == "inf" {
            f64::INFINITY
        } else {
            eta_text.parse().map_err(|_| Error::invalid("bad eta"))?
        };
        let mut noise = NoiseParams::biased(p, eta);
        for (key, class) in [
            ("p_gate1", OpClass::Gate1),
            ("p_gate2", OpClass::Gate2),
            ("p_idle", OpClass::Idle),
            ("p_measure", OpClass::Measure),
            ("p_reset", OpClass::Reset),
        ] {
            if let Some(v) = get(&s, "noise", key) {
                let p: f64 =
                    v.parse().map_err(|_| Error::invalid(format!("bad override {key}")))?;
                noise.overrides.insert(class, p);
            }
        }
        let pm_a = get(&s, "noise", "pm_ancilla");
        let pm_d = get(&s, "noise", "pm_data");
        if pm_a.is_some() || pm_d.is_some() {
            let pa: f64 = pm_a.unwrap_or("0").parse().map_err(|_| Error::invalid("bad pm_ancilla"))?;
            let pd: f64 = pm_d.unwrap_or("0").parse().map_err(|_| Error::invalid("bad pm_data"))?;
            let threshold: f64 = parse_or(&s, "noise", "threshold", 0.0)?;
            noise.soft = Some(SoftReadoutParams::from_assignment_errors(pa, pd, threshold)?);
        }
        noise.validate()?;

        let decoder = DecoderKind::parse(get(&s, "decoder", "kind").unwrap_or("mwpm"))?;
        let model_path = get(&s, "decoder", "model").map(PathBuf::from);

        let train = TrainConfig {
            learning_rate: parse_or(&s, "train", "learning_rate", 1e-3)?,
            batch_size: parse_or(&s, "train", "batch_size", 256)?,
            dropout: parse_or(&s, "train", "dropout", 0.2)?,
            lstm_dropout: parse_or(&s, "train", "lstm_dropout", false)?,
            w_aux: parse_or(&s, "train", "w_aux", 0.5)?,
            patience: parse_or(&s, "train", "patience", 20)?,
            max_epochs: parse_or(&s, "train", "max_epochs", 200)?,
            seed: parse_or(&s, "train", "seed", 0)?,
            second_stage_lr: match get(&s, "train", "second_stage_lr") {
                None => None,
                Some(v) => {
                    Some(v.parse().map_err(|_| Error::invalid("bad second_stage_lr"))?)
                }
            },
        };

        let seed: u64 = parse_or(&s, "run", "seed", 0)?;
        let out = PathBuf::from(get(&s, "run", "out").unwrap_or("out"));
        let threads: usize = parse_or(&s, "run", "threads", 0)?;
        let fit_start: usize = parse_or(&s, "run", "fit_start", 3)?;

        let cfg = RunConfig {
            distance,
            basis,
            variant,
            rounds,
            bitstrings,
            shots,
            noise,
            decoder,
            model_path,
            train,
            seed,
            out,
            threads,
            fit_start,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.distance < 3 || self.distance.is_multiple_of(2) {
            return Err(Error::invalid("distance must be odd and >= 3"));
        }
        if self.rounds.is_empty() {
            return Err(Error::invalid("rounds list is empty"));
        }
        if matches!(self.decoder, DecoderKind::SoftMwpm | DecoderKind::SoftNn)
            && self.noise.soft.is_none()
        {
            return Err(Error::invalid("soft decoding requires pm_ancilla/pm_data in [noise]"));
        }
        Ok(())
    }

    /// Canonical digest over everything that shapes the data.
    pub fn digest(&self) -> u64 {
        let bits: Vec<String> = self.bitstrings.iter().map(|b| bits_str(b)).collect();
        digest64(&format!(
            "d={};basis={};variant={};rounds={:?};bits={:?};shots={};noise={};seed={}",
            self.distance,
            self.basis.as_str(),
            self.variant.as_str(),
            self.rounds,
            bits,
            self.shots,
            self.noise.canonical_string(),
            self.seed,
        ))
    }

    /// Digest of the noise block alone (used to compare multi-distance runs).
    pub fn noise_digest(&self) -> u64 {
        digest64(&self.noise.canonical_string())
    }
}

pub fn bits_str(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_pattern_expansion() {
        assert_eq!(expand_rounds("[1,37,4]").unwrap(), vec![1, 5, 9, 13, 17, 21, 25, 29, 33, 37]);
        assert_eq!(expand_rounds("[1,25,2]").unwrap().len(), 13);
        assert_eq!(expand_rounds("10,30,50").unwrap(), vec![10, 30, 50]);
        assert!(expand_rounds("[0,5,1]").is_err());
        assert!(expand_rounds("[1,5]").is_err());
    }

    #[test]
    fn full_config_parses() {
        let text = "
[experiment]
distance=3
basis=Z
rounds=[1,9,4]
bitstrings=zeros,ones
shots=1000

[noise]
p=0.001
eta=0.5
pm_ancilla=0.01
pm_data=0.001

[decoder]
kind=soft-mwpm

[run]
seed=7
out=artifacts
";
        let cfg = RunConfig::from_text(text).unwrap();
        assert_eq!(cfg.rounds, vec![1, 5, 9]);
        assert_eq!(cfg.bitstrings.len(), 2);
        assert!(cfg.noise.soft.is_some());
        assert_eq!(cfg.decoder, DecoderKind::SoftMwpm);
        assert_eq!(cfg.seed, 7);
        // Digest is stable and sensitive to the seed.
        let cfg2 = RunConfig::from_text(&text.replace("seed=7", "seed=8")).unwrap();
        assert_ne!(cfg.digest(), cfg2.digest());
        assert_eq!(cfg.noise_digest(), cfg2.noise_digest());
    }

    #[test]
    fn soft_decoder_requires_soft_noise() {
        let text = "
[experiment]
distance=3
shots=10
[decoder]
kind=soft-nn
";
        assert!(RunConfig::from_text(text).is_err());
    }

    #[test]
    fn bad_bitstring_rejected() {
        let text = "
[experiment]
distance=3
bitstrings=01
shots=10
";
        assert!(RunConfig::from_text(text).is_err());
    }
}
