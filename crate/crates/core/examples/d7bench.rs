use surfmem::circuit::{Basis, Variant};
use surfmem::layout::{build_layout, build_memory_circuit};
use surfmem::noise::{attach_noise, NoiseParams};
use surfmem::sim::{reference_frame, sample};
use surfmem::syndrome::compute_defects;
use surfmem::dem::extract_dem;
use surfmem::graph::build_matching_graph;
use surfmem::mwpm::Decoder;
use surfmem::analysis::fidelity;

fn main() {
    let d = 7; let rounds = 150; let p = 1e-3; let shots = 3000;
    let l = build_layout(d, Variant::Zxxz).unwrap();
    let c = build_memory_circuit(&l, rounds, Basis::Z, &vec![false; d*d]).unwrap();
    let noisy = attach_noise(&c, &NoiseParams::depolarizing(p)).unwrap();
    let mut t = std::time::Instant::now();
    let batch = sample(&noisy, &l, shots, 5).unwrap();
    println!("sample {shots}: {:?}", t.elapsed());
    let frame = reference_frame(&c, &l);
    t = std::time::Instant::now();
    let defects = compute_defects(&batch, &frame, &l, Basis::Z).unwrap();
    let mean_fired: f64 = defects.rates().iter().sum();
    println!("defects: {:?} (mean fired {mean_fired:.1})", t.elapsed());
    t = std::time::Instant::now();
    let dem = extract_dem(&noisy, &l, Basis::Z).unwrap();
    println!("dem ({} mechs): {:?}", dem.mechanisms.len(), t.elapsed());
    t = std::time::Instant::now();
    let mut dec = Decoder::new(build_matching_graph(&dem).unwrap());
    dec.build_cache();
    println!("graph+cache: {:?}", t.elapsed());
    t = std::time::Instant::now();
    let corr = dec.decode_batch(&defects).unwrap();
    let dt = t.elapsed();
    println!("decode {shots}: {:?} ({:.2} ms/shot) -> 1e5 shots ~ {:.0}s", dt, dt.as_secs_f64()*1000.0/shots as f64, dt.as_secs_f64()*1e5/shots as f64);
    let pt = fidelity(&corr, &defects.p_true);
    println!("F({rounds}) = {:.4} +- {:.4}", pt.fidelity, pt.stderr);
}
