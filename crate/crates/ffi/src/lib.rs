//! C ABI for the surface-code memory laboratory.
//!
//! Opaque handles wrap the core types; every function returns an error code
//! (`SM_OK` = 0) and writes results through out-pointers. The header mirror
//! of this interface lives in `include/surfmem.h`. Handles are freed with
//! their matching `*_free` function; passing null is safe there and nowhere
//! else.

#![allow(unused_unsafe)] // explicit unsafe blocks kept inside unsafe fns
// The safety contract is uniform and documented at the crate level: handles
// must come from this API and buffers must satisfy the documented lengths.
#![allow(clippy::missing_safety_doc)]

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use surfmem::circuit::{Basis, Variant};
use surfmem::config::RunConfig;
use surfmem::dem::extract_dem;
use surfmem::graph::build_matching_graph;
use surfmem::layout::{build_layout, build_memory_circuit, CodeLayout};
use surfmem::mwpm::Decoder;
use surfmem::nn::train::{evaluate_dataset, DefectDataset};
use surfmem::nn::{io as nn_io, Model};
use surfmem::noise::{attach_noise, NoiseParams, NoisyCircuit, SoftReadoutParams};
use surfmem::sim::{reference_frame, sample, ShotBatch};
use surfmem::syndrome::{compute_defects, soft_defect_probs};
use surfmem::Error;

pub const SM_OK: i32 = 0;
pub const SM_ERR_INVALID: i32 = 1;
pub const SM_ERR_IO: i32 = 2;
pub const SM_ERR_RUNTIME: i32 = 3;
pub const SM_ERR_PANIC: i32 = 4;

fn code_of(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::Format(_) | Error::Mismatch(_) | Error::Size(_) => SM_ERR_INVALID,
        Error::Io(_) => SM_ERR_IO,
        Error::Numeric(_) => SM_ERR_RUNTIME,
    }
}

thread_local! {
    static LAST_ERROR: std::cell::RefCell<std::ffi::CString> =
        std::cell::RefCell::new(std::ffi::CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = std::ffi::CString::new(cleaned).unwrap();
    });
}

/// Message of the most recent error on this thread. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn sm_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

fn run_ffi<T>(out: *mut T, f: impl FnOnce() -> Result<T, Error>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(value)) => {
            if out.is_null() {
                set_error("null output pointer");
                return SM_ERR_INVALID;
            }
            unsafe { ptr::write(out, value) };
            SM_OK
        }
        Ok(Err(e)) => {
            set_error(&e.to_string());
            code_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            SM_ERR_PANIC
        }
    }
}

// ---------------------------------------------------------------------------
// Handles

pub struct SmLayout {
    layout: CodeLayout,
}

pub struct SmCircuit {
    layout: CodeLayout,
    noisy: NoisyCircuit,
}

pub struct SmBatch {
    batch: ShotBatch,
}

pub struct SmDecoder {
    layout: CodeLayout,
    decoder: Decoder,
    soft: Option<SoftReadoutParams>,
}

pub struct SmModel {
    model: Model<f32>,
}

unsafe fn str_arg<'a>(ptr: *const c_char) -> Result<&'a str, Error> {
    if ptr.is_null() {
        return Err(Error::InvalidInput("null string argument".into()));
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| Error::InvalidInput("argument is not UTF-8".into()))
}

fn basis_arg(basis: u8) -> Result<Basis, Error> {
    match basis {
        0 => Ok(Basis::Z),
        1 => Ok(Basis::X),
        _ => Err(Error::InvalidInput("basis must be 0 (Z) or 1 (X)".into())),
    }
}

/// Build a rotated surface-code layout. `variant`: 0 = zxxz, 1 = standard.
#[no_mangle]
pub unsafe extern "C" fn sm_layout_new(distance: usize, variant: u8, out: *mut *mut SmLayout) -> i32 {
    run_ffi(out, || {
        let variant = match variant {
            0 => Variant::Zxxz,
            1 => Variant::Standard,
            _ => return Err(Error::InvalidInput("variant must be 0 (zxxz) or 1 (standard)".into())),
        };
        let layout = build_layout(distance, variant)?;
        Ok(Box::into_raw(Box::new(SmLayout { layout })))
    })
}

#[no_mangle]
pub unsafe extern "C" fn sm_layout_free(layout: *mut SmLayout) {
    if !layout.is_null() {
        drop(unsafe { Box::from_raw(layout) });
    }
}

/// Build a memory circuit with uniform noise. `bitstring` must hold d*d
/// bytes of 0/1 (null = all zeros). `eta` may be infinity. Assignment error
/// rates at 0 disable soft readout.
#[no_mangle]
pub unsafe extern "C" fn sm_circuit_new(
    layout: *const SmLayout,
    rounds: usize,
    basis: u8,
    bitstring: *const u8,
    p: f64,
    eta: f64,
    pm_ancilla: f64,
    pm_data: f64,
    out: *mut *mut SmCircuit,
) -> i32 {
    run_ffi(out, || {
        let layout = unsafe { layout.as_ref() }
            .ok_or_else(|| Error::InvalidInput("null layout".into()))?;
        let d = layout.layout.distance;
        let bits: Vec<bool> = if bitstring.is_null() {
            vec![false; d * d]
        } else {
            unsafe { std::slice::from_raw_parts(bitstring, d * d) }.iter().map(|&b| b != 0).collect()
        };
        let circuit = build_memory_circuit(&layout.layout, rounds, basis_arg(basis)?, &bits)?;
        let mut params = NoiseParams::biased(p, eta);
        if pm_ancilla > 0.0 || pm_data > 0.0 {
            params.soft = Some(SoftReadoutParams::from_assignment_errors(pm_ancilla, pm_data, 0.0)?);
        }
        let noisy = attach_noise(&circuit, &params)?;
        Ok(Box::into_raw(Box::new(SmCircuit { layout: layout.layout.clone(), noisy })))
    })
}

#[no_mangle]
pub unsafe extern "C" fn sm_circuit_free(circuit: *mut SmCircuit) {
    if !circuit.is_null() {
        drop(unsafe { Box::from_raw(circuit) });
    }
}

/// Serialize the circuit to its line-oriented text form. The result must be
/// freed with `sm_string_free`.
#[no_mangle]
pub unsafe extern "C" fn sm_circuit_to_text(circuit: *const SmCircuit, out: *mut *mut c_char) -> i32 {
    run_ffi(out, || {
        let circuit = unsafe { circuit.as_ref() }
            .ok_or_else(|| Error::InvalidInput("null circuit".into()))?;
        let text = circuit.noisy.circuit.to_text();
        Ok(std::ffi::CString::new(text)
            .map_err(|_| Error::InvalidInput("circuit text contains NUL".into()))?
            .into_raw())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { std::ffi::CString::from_raw(s) });
    }
}

/// Monte Carlo sample a batch of shots.
#[no_mangle]
pub unsafe extern "C" fn sm_sample(
    circuit: *const SmCircuit,
    shots: usize,
    seed: u64,
    out: *mut *mut SmBatch,
) -> i32 {
    run_ffi(out, || {
        let c = unsafe { circuit.as_ref() }
            .ok_or_else(|| Error::InvalidInput("null circuit".into()))?;
        let batch = sample(&c.noisy, &c.layout, shots, seed)?;
        Ok(Box::into_raw(Box::new(SmBatch { batch })))
    })
}

#[no_mangle]
pub unsafe extern "C" fn sm_batch_free(batch: *mut SmBatch) {
    if !batch.is_null() {
        drop(unsafe { Box::from_raw(batch) });
    }
}

#[no_mangle]
pub unsafe extern "C" fn sm_batch_shots(batch: *const SmBatch, out: *mut usize) -> i32 {
    run_ffi(out, || {
        let b = unsafe { batch.as_ref() }.ok_or_else(|| Error::InvalidInput("null batch".into()))?;
        Ok(b.batch.shots)
    })
}

#[no_mangle]
pub unsafe extern "C" fn sm_batch_save(batch: *const SmBatch, path: *const c_char) -> i32 {
    let mut unit = ();
    run_ffi(&mut unit, || {
        let b = unsafe { batch.as_ref() }.ok_or_else(|| Error::InvalidInput("null batch".into()))?;
        b.batch.save(unsafe { str_arg(path) }?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn sm_batch_load(path: *const c_char, out: *mut *mut SmBatch) -> i32 {
    run_ffi(out, || {
        let batch = ShotBatch::load(unsafe { str_arg(path) }?)?;
        Ok(Box::into_raw(Box::new(SmBatch { batch })))
    })
}

/// Compile the matching decoder for a circuit (with the all-pairs cache).
#[no_mangle]
pub unsafe extern "C" fn sm_decoder_new(circuit: *const SmCircuit, out: *mut *mut SmDecoder) -> i32 {
    run_ffi(out, || {
        let c = unsafe { circuit.as_ref() }
            .ok_or_else(|| Error::InvalidInput("null circuit".into()))?;
        let dem = extract_dem(&c.noisy, &c.layout, c.noisy.circuit.meta.basis)?;
        let mut decoder = Decoder::new(build_matching_graph(&dem)?);
        decoder.build_cache();
        Ok(Box::into_raw(Box::new(SmDecoder {
            layout: c.layout.clone(),
            decoder,
            soft: c.noisy.params.soft.clone(),
        })))
    })
}

#[no_mangle]
pub unsafe extern "C" fn sm_decoder_free(decoder: *mut SmDecoder) {
    if !decoder.is_null() {
        drop(unsafe { Box::from_raw(decoder) });
    }
}

/// Decode every shot of a batch. `corrections` and `true_flips` must hold
/// `shots` bytes; they receive 0/1. `soft` selects soft matching (requires
/// the circuit to carry analog readout).
#[no_mangle]
pub unsafe extern "C" fn sm_decode_batch(
    decoder: *const SmDecoder,
    circuit: *const SmCircuit,
    batch: *const SmBatch,
    soft: u8,
    corrections: *mut u8,
    true_flips: *mut u8,
) -> i32 {
    let mut unit = ();
    run_ffi(&mut unit, || {
        let dec = unsafe { decoder.as_ref() }
            .ok_or_else(|| Error::InvalidInput("null decoder".into()))?;
        let c = unsafe { circuit.as_ref() }
            .ok_or_else(|| Error::InvalidInput("null circuit".into()))?;
        let b = unsafe { batch.as_ref() }.ok_or_else(|| Error::InvalidInput("null batch".into()))?;
        if corrections.is_null() || true_flips.is_null() {
            return Err(Error::InvalidInput("null output buffer".into()));
        }
        let frame = reference_frame(&c.noisy.circuit, &c.layout);
        let defects = compute_defects(&b.batch, &frame, &dec.layout, c.noisy.circuit.meta.basis)?;
        let corr = if soft != 0 {
            let params =
                dec.soft.as_ref().ok_or_else(|| Error::InvalidInput("decoder lacks soft parameters".into()))?;
            dec.decoder.soft_decode_batch(&defects, &b.batch, params)?
        } else {
            dec.decoder.decode_batch(&defects)?
        };
        let out_c = unsafe { std::slice::from_raw_parts_mut(corrections, b.batch.shots) };
        let out_t = unsafe { std::slice::from_raw_parts_mut(true_flips, b.batch.shots) };
        for s in 0..b.batch.shots {
            out_c[s] = corr.get(s) as u8;
            out_t[s] = defects.p_true.get(s) as u8;
        }
        Ok(())
    })
}

/// Load a trained recurrent decoder model.
#[no_mangle]
pub unsafe extern "C" fn sm_model_load(path: *const c_char, out: *mut *mut SmModel) -> i32 {
    run_ffi(out, || {
        let (model, _) = nn_io::load_model::<f32>(unsafe { str_arg(path) }?)?;
        Ok(Box::into_raw(Box::new(SmModel { model })))
    })
}

#[no_mangle]
pub unsafe extern "C" fn sm_model_free(model: *mut SmModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Decode a batch with the recurrent model (hard defects, or soft defect
/// probabilities when `soft` is nonzero).
#[no_mangle]
pub unsafe extern "C" fn sm_model_decode_batch(
    model: *const SmModel,
    circuit: *const SmCircuit,
    batch: *const SmBatch,
    soft: u8,
    corrections: *mut u8,
    true_flips: *mut u8,
) -> i32 {
    let mut unit = ();
    run_ffi(&mut unit, || {
        let m = unsafe { model.as_ref() }.ok_or_else(|| Error::InvalidInput("null model".into()))?;
        let c = unsafe { circuit.as_ref() }
            .ok_or_else(|| Error::InvalidInput("null circuit".into()))?;
        let b = unsafe { batch.as_ref() }.ok_or_else(|| Error::InvalidInput("null batch".into()))?;
        if corrections.is_null() || true_flips.is_null() {
            return Err(Error::InvalidInput("null output buffer".into()));
        }
        let frame = reference_frame(&c.noisy.circuit, &c.layout);
        let defects = compute_defects(&b.batch, &frame, &c.layout, c.noisy.circuit.meta.basis)?;
        let ds = if soft != 0 {
            let params = c
                .noisy
                .params
                .soft
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("circuit lacks analog readout".into()))?;
            DefectDataset::from_soft(&soft_defect_probs(
                &b.batch,
                params,
                &frame,
                &c.layout,
                c.noisy.circuit.meta.basis,
            )?)
        } else {
            DefectDataset::from_defects(&defects)
        };
        let corr = evaluate_dataset(&m.model, &ds)?;
        let out_c = unsafe { std::slice::from_raw_parts_mut(corrections, b.batch.shots) };
        let out_t = unsafe { std::slice::from_raw_parts_mut(true_flips, b.batch.shots) };
        for s in 0..b.batch.shots {
            out_c[s] = corr.get(s) as u8;
            out_t[s] = defects.p_true.get(s) as u8;
        }
        Ok(())
    })
}

/// Parse a run-configuration file and report its digest; a cheap way for
/// bindings to validate configs.
#[no_mangle]
pub unsafe extern "C" fn sm_config_digest(path: *const c_char, out: *mut u64) -> i32 {
    run_ffi(out, || {
        let cfg = RunConfig::load(unsafe { str_arg(path) }?)?;
        Ok(cfg.digest())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lifecycle_and_decode_through_c_abi() {
        unsafe {
        let mut layout: *mut SmLayout = ptr::null_mut();
        assert_eq!(sm_layout_new(3, 0, &mut layout), SM_OK);
        let mut circuit: *mut SmCircuit = ptr::null_mut();
        assert_eq!(
            sm_circuit_new(layout, 5, 0, ptr::null(), 1e-3, 1.0, 0.0, 0.0, &mut circuit),
            SM_OK
        );
        let mut batch: *mut SmBatch = ptr::null_mut();
        assert_eq!(sm_sample(circuit, 200, 7, &mut batch), SM_OK);
        let mut shots = 0usize;
        assert_eq!(sm_batch_shots(batch, &mut shots), SM_OK);
        assert_eq!(shots, 200);
        let mut decoder: *mut SmDecoder = ptr::null_mut();
        assert_eq!(sm_decoder_new(circuit, &mut decoder), SM_OK);
        let mut corrections = vec![0u8; 200];
        let mut flips = vec![0u8; 200];
        assert_eq!(
            sm_decode_batch(decoder, circuit, batch, 0, corrections.as_mut_ptr(), flips.as_mut_ptr()),
            SM_OK
        );
        // At p = 1e-3 over 4 rounds the decoder should match the truth for
        // the overwhelming majority of shots.
        let wrong = corrections.iter().zip(&flips).filter(|(c, t)| c != t).count();
        assert!(wrong < 20, "{wrong} mismatches");
        sm_decoder_free(decoder);
        sm_batch_free(batch);
        sm_circuit_free(circuit);
        sm_layout_free(layout);
        }
    }

    #[test]
    fn error_paths_set_messages() {
        unsafe {
        let mut layout: *mut SmLayout = ptr::null_mut();
        let rc = sm_layout_new(4, 0, &mut layout);
        assert_eq!(rc, SM_ERR_INVALID);
        let msg = unsafe { CStr::from_ptr(sm_last_error()) }.to_str().unwrap();
        assert!(msg.contains("odd"), "{msg}");
        let mut batch: *mut SmBatch = ptr::null_mut();
        assert_eq!(sm_batch_load(c"/nonexistent/file.qsht".as_ptr(), &mut batch), SM_ERR_IO);
        }
    }

    #[test]
    fn batch_file_roundtrip_through_abi() {
        unsafe {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("batch.qsht");
        let cpath = std::ffi::CString::new(path.to_str().unwrap()).unwrap();
        let mut layout: *mut SmLayout = ptr::null_mut();
        sm_layout_new(3, 0, &mut layout);
        let mut circuit: *mut SmCircuit = ptr::null_mut();
        sm_circuit_new(layout, 3, 0, ptr::null(), 2e-3, 1.0, 0.01, 0.001, &mut circuit);
        let mut batch: *mut SmBatch = ptr::null_mut();
        sm_sample(circuit, 64, 3, &mut batch);
        assert_eq!(sm_batch_save(batch, cpath.as_ptr()), SM_OK);
        let mut loaded: *mut SmBatch = ptr::null_mut();
        assert_eq!(sm_batch_load(cpath.as_ptr(), &mut loaded), SM_OK);
        let (a, b) = unsafe { (&(*batch).batch, &(*loaded).batch) };
        assert_eq!(a.hard, b.hard);
        assert_eq!(a.soft, b.soft);
        sm_batch_free(batch);
        sm_batch_free(loaded);
        sm_circuit_free(circuit);
        sm_layout_free(layout);
        }
    }
}
