// Copyright 2026 The pfc-snn Authors
// SPDX-License-Identifier: Apache-2.0

//! C ABI over the simulator.
//!
//! Objects cross the boundary as opaque pointers created by `*_new` /
//! `*_load` / `pfc_run_experiment` and released by the matching `*_free`.
//! Every fallible call returns a [`PfcStatus`]; on failure the message is
//! kept per thread and can be fetched with [`pfc_last_error`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use pfc_snn::config::ExperimentConfig;
use pfc_snn::experiment::{run_experiment, Category, ResultsSummary};
use pfc_snn::topology::{build_network, Network};
use pfc_snn::{Error, N_INPUT};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Dataset = 5,
    NotFound = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Stimulus categories, matching the order used in summaries.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfcCategory {
    Target = 0,
    NonTarget = 1,
    ContextTarget = 2,
    ContextNonTarget = 3,
}

impl From<PfcCategory> for Category {
    fn from(c: PfcCategory) -> Self {
        match c {
            PfcCategory::Target => Category::Target,
            PfcCategory::NonTarget => Category::NonTarget,
            PfcCategory::ContextTarget => Category::ContextTarget,
            PfcCategory::ContextNonTarget => Category::ContextNonTarget,
        }
    }
}

/// Experiment configuration.
pub struct PfcConfig(ExperimentConfig);

/// A live network that can be stepped tick by tick.
pub struct PfcNetwork(Network);

/// Outcome of one experiment condition.
pub struct PfcResult {
    summary: ResultsSummary,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PfcStatus {
    match e {
        Error::Condition { source, .. } => status_of(source),
        Error::Io { .. } => PfcStatus::Io,
        Error::Config { .. } => PfcStatus::Config,
        Error::BadMagic { .. }
        | Error::Truncated { .. }
        | Error::CountMismatch { .. }
        | Error::EmptyClass(_) => PfcStatus::Dataset,
        _ => PfcStatus::InvalidArgument,
    }
}

fn fail(status: PfcStatus, msg: impl Into<String>) -> PfcStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), PfcStatus>) -> PfcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PfcStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(PfcStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: pfc_snn::Result<T>) -> Result<T, PfcStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, PfcStatus> {
    if p.is_null() {
        return Err(fail(PfcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PfcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, PfcStatus> {
    p.as_ref()
        .ok_or_else(|| fail(PfcStatus::NullPointer, format!("{what} is null")))
}

unsafe fn obj_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, PfcStatus> {
    p.as_mut()
        .ok_or_else(|| fail(PfcStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<T>(p: *mut T, v: T, what: &str) -> Result<(), PfcStatus> {
    if p.is_null() {
        return Err(fail(PfcStatus::NullPointer, format!("{what} is null")));
    }
    p.write(v);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pfc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (always
/// NUL-terminated when `len > 0`) and returns the full message length, or 0
/// when there is no error.
#[no_mangle]
pub unsafe extern "C" fn pfc_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Configuration with every default filled in.
#[no_mangle]
pub extern "C" fn pfc_config_new() -> *mut PfcConfig {
    Box::into_raw(Box::new(PfcConfig(ExperimentConfig::default())))
}

/// Reads a key-value configuration file.
#[no_mangle]
pub unsafe extern "C" fn pfc_config_load(
    path: *const c_char,
    out_cfg: *mut *mut PfcConfig,
) -> PfcStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let cfg = lift(ExperimentConfig::load(Path::new(path)))?;
        out(out_cfg, Box::into_raw(Box::new(PfcConfig(cfg))), "out_cfg")
    })
}

/// Sets one key, using the same names as the configuration file.
#[no_mangle]
pub unsafe extern "C" fn pfc_config_set(
    cfg: *mut PfcConfig,
    key: *const c_char,
    value: *const c_char,
) -> PfcStatus {
    guard(|| {
        let cfg = obj_mut(cfg, "cfg")?;
        let key = str_arg(key, "key")?;
        let value = str_arg(value, "value")?;
        cfg.0
            .set(key, value)
            .map_err(|m| fail(PfcStatus::Config, m))
    })
}

/// Writes the full configuration snapshot into `buf` and stores its length
/// (excluding the NUL) in `out_len`. Returns `BufferTooSmall` when
/// `len <= *out_len`; call with a null buffer to query the size.
#[no_mangle]
pub unsafe extern "C" fn pfc_config_to_text(
    cfg: *const PfcConfig,
    buf: *mut c_char,
    len: usize,
    out_len: *mut usize,
) -> PfcStatus {
    guard(|| {
        let text = obj(cfg, "cfg")?.0.to_text();
        out(out_len, text.len(), "out_len")?;
        if buf.is_null() || len <= text.len() {
            return Err(fail(PfcStatus::BufferTooSmall, "buffer too small"));
        }
        ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
        *buf.add(text.len()) = 0;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pfc_config_free(cfg: *mut PfcConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the condition selected by `experiment.schedule` and
/// `experiment.lesion`, loading the dataset named in the configuration.
#[no_mangle]
pub unsafe extern "C" fn pfc_run_experiment(
    cfg: *const PfcConfig,
    out_result: *mut *mut PfcResult,
) -> PfcStatus {
    guard(|| {
        let cfg = &obj(cfg, "cfg")?.0;
        if out_result.is_null() {
            return Err(fail(PfcStatus::NullPointer, "out_result is null"));
        }
        let stimuli = lift(cfg.load_stimuli())?;
        let (summary, _) = lift(run_experiment(cfg, &stimuli))?;
        out(
            out_result,
            Box::into_raw(Box::new(PfcResult { summary })),
            "out_result",
        )
    })
}

/// Accuracy for one category; `NotFound` when it was never presented.
#[no_mangle]
pub unsafe extern "C" fn pfc_result_accuracy(
    res: *const PfcResult,
    category: PfcCategory,
    out_acc: *mut f64,
) -> PfcStatus {
    guard(|| {
        let res = obj(res, "res")?;
        let tally = res
            .summary
            .tallies
            .get(&category.into())
            .ok_or_else(|| fail(PfcStatus::NotFound, "category not presented"))?;
        out(out_acc, tally.accuracy(), "out_acc")
    })
}

/// Correct and total trial counts for one category.
#[no_mangle]
pub unsafe extern "C" fn pfc_result_counts(
    res: *const PfcResult,
    category: PfcCategory,
    out_correct: *mut usize,
    out_total: *mut usize,
) -> PfcStatus {
    guard(|| {
        let res = obj(res, "res")?;
        let tally = res
            .summary
            .tallies
            .get(&category.into())
            .ok_or_else(|| fail(PfcStatus::NotFound, "category not presented"))?;
        out(out_correct, tally.correct, "out_correct")?;
        out(out_total, tally.total, "out_total")
    })
}

/// Index of the response neuron calibrated as the target neuron.
#[no_mangle]
pub unsafe extern "C" fn pfc_result_target_neuron(
    res: *const PfcResult,
    out_index: *mut usize,
) -> PfcStatus {
    guard(|| {
        let res = obj(res, "res")?;
        out(out_index, res.summary.assignment.target_neuron, "out_index")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pfc_result_free(res: *mut PfcResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Builds an untrained network from the configuration's network section.
#[no_mangle]
pub unsafe extern "C" fn pfc_network_new(
    cfg: *const PfcConfig,
    seed: u64,
    out_net: *mut *mut PfcNetwork,
) -> PfcStatus {
    guard(|| {
        let cfg = obj(cfg, "cfg")?;
        if out_net.is_null() {
            return Err(fail(PfcStatus::NullPointer, "out_net is null"));
        }
        let net = lift(build_network(&cfg.0.network, seed))?;
        out(out_net, Box::into_raw(Box::new(PfcNetwork(net))), "out_net")
    })
}

/// Number of memory-layer neurons.
#[no_mangle]
pub unsafe extern "C" fn pfc_network_memory_size(
    net: *const PfcNetwork,
    out_n: *mut usize,
) -> PfcStatus {
    guard(|| {
        let net = obj(net, "net")?;
        out(out_n, net.0.cfg.n_mem, "out_n")
    })
}

/// Enables or disables plasticity.
#[no_mangle]
pub unsafe extern "C" fn pfc_network_set_learning(net: *mut PfcNetwork, on: bool) -> PfcStatus {
    guard(|| {
        obj_mut(net, "net")?.0.learning = on;
        Ok(())
    })
}

/// Advances one tick. `inputs` lists the input neurons (0..784) firing this
/// tick. Indices of memory neurons that fired are written to `mem_out` (room
/// for `mem_cap`), their count to `out_n_mem`; `out_resp` receives a bit mask
/// of response neurons that fired (bit 0 and bit 1).
#[no_mangle]
pub unsafe extern "C" fn pfc_network_tick(
    net: *mut PfcNetwork,
    inputs: *const u32,
    n_inputs: usize,
    mem_out: *mut u32,
    mem_cap: usize,
    out_n_mem: *mut usize,
    out_resp: *mut u32,
) -> PfcStatus {
    guard(|| {
        let net = obj_mut(net, "net")?;
        let inputs: &[u32] = if n_inputs == 0 {
            &[]
        } else if inputs.is_null() {
            return Err(fail(PfcStatus::NullPointer, "inputs is null"));
        } else {
            std::slice::from_raw_parts(inputs, n_inputs)
        };
        if let Some(&bad) = inputs.iter().find(|&&i| i as usize >= N_INPUT) {
            return Err(fail(
                PfcStatus::InvalidArgument,
                format!("input index {bad} outside 0..{N_INPUT}"),
            ));
        }
        let report = net.0.tick(inputs);
        if !out_n_mem.is_null() {
            *out_n_mem = report.memory.len();
        }
        if !out_resp.is_null() {
            *out_resp = report.response.iter().fold(0, |m, &r| m | (1 << r));
        }
        if !mem_out.is_null() {
            for (k, &j) in report.memory.iter().take(mem_cap).enumerate() {
                *mem_out.add(k) = j as u32;
            }
        }
        if report.memory.len() > mem_cap && !mem_out.is_null() {
            return Err(fail(
                PfcStatus::BufferTooSmall,
                "mem_out too small for this tick",
            ));
        }
        Ok(())
    })
}

/// Effective input-to-memory weight (0 for a lesioned synapse).
#[no_mangle]
pub unsafe extern "C" fn pfc_network_input_weight(
    net: *const PfcNetwork,
    pre: usize,
    post: usize,
    out_w: *mut f64,
) -> PfcStatus {
    guard(|| {
        let net = obj(net, "net")?;
        let p = &net.0.input_memory;
        if pre >= p.n_pre || post >= p.n_post {
            return Err(fail(
                PfcStatus::InvalidArgument,
                "synapse index out of range",
            ));
        }
        out(out_w, p.effective_weight(pre, post), "out_w")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pfc_network_free(net: *mut PfcNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn last_error() -> String {
        let mut buf = vec![0 as c_char; 256];
        let n = unsafe { pfc_last_error(buf.as_mut_ptr(), buf.len()) };
        assert!(n > 0);
        unsafe { CStr::from_ptr(buf.as_ptr()) }
            .to_string_lossy()
            .into_owned()
    }

    #[test]
    fn config_set_and_snapshot() {
        let cfg = pfc_config_new();
        let k = CString::new("network.n_mem").unwrap();
        let v = CString::new("12").unwrap();
        unsafe {
            assert_eq!(pfc_config_set(cfg, k.as_ptr(), v.as_ptr()), PfcStatus::Ok);
            let mut len = 0usize;
            assert_eq!(
                pfc_config_to_text(cfg, ptr::null_mut(), 0, &mut len),
                PfcStatus::BufferTooSmall
            );
            let mut buf = vec![0 as c_char; len + 1];
            assert_eq!(
                pfc_config_to_text(cfg, buf.as_mut_ptr(), buf.len(), &mut len),
                PfcStatus::Ok
            );
            let text = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
            assert!(text.contains("network.n_mem = 12\n"));
            pfc_config_free(cfg);
        }
    }

    #[test]
    fn bad_key_reports_config_error() {
        let cfg = pfc_config_new();
        let k = CString::new("no.such.key").unwrap();
        let v = CString::new("1").unwrap();
        unsafe {
            assert_eq!(
                pfc_config_set(cfg, k.as_ptr(), v.as_ptr()),
                PfcStatus::Config
            );
            pfc_config_free(cfg);
        }
        assert!(last_error().contains("no.such.key"));
    }

    #[test]
    fn null_handles_are_rejected() {
        let mut acc = 0.0;
        unsafe {
            assert_eq!(
                pfc_result_accuracy(ptr::null(), PfcCategory::Target, &mut acc),
                PfcStatus::NullPointer
            );
            assert_eq!(
                pfc_network_set_learning(ptr::null_mut(), true),
                PfcStatus::NullPointer
            );
            pfc_network_free(ptr::null_mut());
            pfc_config_free(ptr::null_mut());
            pfc_result_free(ptr::null_mut());
        }
    }

    #[test]
    fn missing_dataset_is_an_error() {
        let cfg = pfc_config_new();
        let k = CString::new("dataset.images").unwrap();
        let v = CString::new("/nonexistent/images.gz").unwrap();
        let k2 = CString::new("dataset.labels").unwrap();
        let v2 = CString::new("/nonexistent/labels.gz").unwrap();
        let mut res = ptr::null_mut();
        unsafe {
            pfc_config_set(cfg, k.as_ptr(), v.as_ptr());
            pfc_config_set(cfg, k2.as_ptr(), v2.as_ptr());
            assert_eq!(pfc_run_experiment(cfg, &mut res), PfcStatus::Io);
            assert!(res.is_null());
            pfc_config_free(cfg);
        }
    }

    #[test]
    fn network_ticks_and_validates_inputs() {
        let cfg = pfc_config_new();
        let mut net = ptr::null_mut();
        unsafe {
            assert_eq!(pfc_network_new(cfg, 7, &mut net), PfcStatus::Ok);
            let mut n = 0usize;
            pfc_network_memory_size(net, &mut n);
            let mut mem = vec![0u32; n];
            let mut fired = 99usize;
            let mut resp = 99u32;
            assert_eq!(
                pfc_network_tick(
                    net,
                    ptr::null(),
                    0,
                    mem.as_mut_ptr(),
                    n,
                    &mut fired,
                    &mut resp
                ),
                PfcStatus::Ok
            );
            assert_eq!((fired, resp), (0, 0));
            let bad = [784u32];
            assert_eq!(
                pfc_network_tick(
                    net,
                    bad.as_ptr(),
                    1,
                    mem.as_mut_ptr(),
                    n,
                    &mut fired,
                    &mut resp
                ),
                PfcStatus::InvalidArgument
            );
            let mut w = -1.0;
            assert_eq!(pfc_network_input_weight(net, 0, 0, &mut w), PfcStatus::Ok);
            assert!(w >= 0.0);
            pfc_network_free(net);
            pfc_config_free(cfg);
        }
    }

    #[test]
    fn version_is_nul_terminated() {
        let v = unsafe { CStr::from_ptr(pfc_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
