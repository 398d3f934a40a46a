//! C ABI surface over the benchmark harness: opaque configuration and
//! result handles with integer status codes. The matching header is
//! `include/uwnav.h`; every function is panic-safe at the boundary.

use libc::{c_char, c_double, c_int, size_t};
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use uwnav::harness::{bench, flops, write_artifacts, BenchResult, FlopsKind, RunConfig};

pub const UWNAV_OK: c_int = 0;
pub const UWNAV_ERR_NULL: c_int = 1;
pub const UWNAV_ERR_UTF8: c_int = 2;
pub const UWNAV_ERR_CONFIG: c_int = 3;
pub const UWNAV_ERR_RUNTIME: c_int = 4;
pub const UWNAV_ERR_INDEX: c_int = 5;
pub const UWNAV_ERR_BUFFER: c_int = 6;
pub const UWNAV_ERR_IO: c_int = 7;

/// Opaque benchmark configuration.
pub struct UwnavConfig(RunConfig);

/// Opaque benchmark result.
pub struct UwnavResult(BenchResult);

fn guarded(body: impl FnOnce() -> c_int) -> c_int {
    catch_unwind(AssertUnwindSafe(body)).unwrap_or(UWNAV_ERR_RUNTIME)
}

unsafe fn path_arg(raw: *const c_char) -> Result<PathBuf, c_int> {
    if raw.is_null() {
        return Err(UWNAV_ERR_NULL);
    }
    match unsafe { CStr::from_ptr(raw) }.to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => Err(UWNAV_ERR_UTF8),
    }
}

/// Reference nine-filter setup with the given seed.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn uwnav_config_new(seed: u64, out: *mut *mut UwnavConfig) -> c_int {
    guarded(|| {
        if out.is_null() {
            return UWNAV_ERR_NULL;
        }
        let cfg = Box::new(UwnavConfig(RunConfig::reference(seed)));
        unsafe { *out = Box::into_raw(cfg) };
        UWNAV_OK
    })
}

/// Load a TOML configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable storage for
/// one pointer.
#[no_mangle]
pub unsafe extern "C" fn uwnav_config_load(path: *const c_char, out: *mut *mut UwnavConfig) -> c_int {
    guarded(|| {
        if out.is_null() {
            return UWNAV_ERR_NULL;
        }
        let path = match unsafe { path_arg(path) } {
            Ok(p) => p,
            Err(code) => return code,
        };
        match RunConfig::load(&path) {
            Ok(cfg) => {
                unsafe { *out = Box::into_raw(Box::new(UwnavConfig(cfg))) };
                UWNAV_OK
            }
            Err(_) => UWNAV_ERR_CONFIG,
        }
    })
}

/// # Safety
/// `cfg` must be a live handle from `uwnav_config_new`/`uwnav_config_load`.
#[no_mangle]
pub unsafe extern "C" fn uwnav_config_set_runs(cfg: *mut UwnavConfig, runs: size_t) -> c_int {
    guarded(|| {
        let Some(cfg) = (unsafe { cfg.as_mut() }) else {
            return UWNAV_ERR_NULL;
        };
        if runs == 0 {
            return UWNAV_ERR_CONFIG;
        }
        cfg.0.mc_runs = runs;
        UWNAV_OK
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn uwnav_config_set_seed(cfg: *mut UwnavConfig, seed: u64) -> c_int {
    guarded(|| {
        let Some(cfg) = (unsafe { cfg.as_mut() }) else {
            return UWNAV_ERR_NULL;
        };
        cfg.0.seed = seed;
        UWNAV_OK
    })
}

/// Truth-integration step in seconds.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn uwnav_config_set_dt(cfg: *mut UwnavConfig, dt: c_double) -> c_int {
    guarded(|| {
        let Some(cfg) = (unsafe { cfg.as_mut() }) else {
            return UWNAV_ERR_NULL;
        };
        if !(dt > 0.0 && dt <= 1.0) {
            return UWNAV_ERR_CONFIG;
        }
        cfg.0.dt_truth = dt;
        UWNAV_OK
    })
}

/// # Safety
/// `cfg` must be a handle from this library or null; it is consumed.
#[no_mangle]
pub unsafe extern "C" fn uwnav_config_free(cfg: *mut UwnavConfig) {
    if !cfg.is_null() {
        drop(unsafe { Box::from_raw(cfg) });
    }
}

/// Run the Monte-Carlo benchmark described by `cfg`.
///
/// # Safety
/// `cfg` must be a live handle and `out` writable storage for one
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn uwnav_bench(cfg: *const UwnavConfig, out: *mut *mut UwnavResult) -> c_int {
    guarded(|| {
        let Some(cfg) = (unsafe { cfg.as_ref() }) else {
            return UWNAV_ERR_NULL;
        };
        if out.is_null() {
            return UWNAV_ERR_NULL;
        }
        if cfg.0.validate().is_err() {
            return UWNAV_ERR_CONFIG;
        }
        match bench(&cfg.0) {
            Ok(result) => {
                unsafe { *out = Box::into_raw(Box::new(UwnavResult(result))) };
                UWNAV_OK
            }
            Err(_) => UWNAV_ERR_RUNTIME,
        }
    })
}

/// # Safety
/// `result` must be a live handle; null yields zero.
#[no_mangle]
pub unsafe extern "C" fn uwnav_result_filter_count(result: *const UwnavResult) -> size_t {
    unsafe { result.as_ref() }.map_or(0, |r| r.0.filters.len())
}

/// Copy the NUL-terminated label of filter `index` into `buf`.
///
/// # Safety
/// `result` must be a live handle and `buf` writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn uwnav_result_label(
    result: *const UwnavResult,
    index: size_t,
    buf: *mut c_char,
    len: size_t,
) -> c_int {
    guarded(|| {
        let Some(result) = (unsafe { result.as_ref() }) else {
            return UWNAV_ERR_NULL;
        };
        if buf.is_null() {
            return UWNAV_ERR_NULL;
        }
        let Some(filter) = result.0.filters.get(index) else {
            return UWNAV_ERR_INDEX;
        };
        let label = CString::new(filter.spec.label()).expect("labels have no NUL");
        let bytes = label.as_bytes_with_nul();
        if bytes.len() > len {
            return UWNAV_ERR_BUFFER;
        }
        unsafe {
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, bytes.len());
        }
        UWNAV_OK
    })
}

/// Copy the nine per-state ARMSE values of filter `index` into `out`.
///
/// # Safety
/// `result` must be a live handle and `out` writable for nine doubles.
#[no_mangle]
pub unsafe extern "C" fn uwnav_result_armse(
    result: *const UwnavResult,
    index: size_t,
    out: *mut c_double,
) -> c_int {
    guarded(|| {
        let Some(result) = (unsafe { result.as_ref() }) else {
            return UWNAV_ERR_NULL;
        };
        if out.is_null() {
            return UWNAV_ERR_NULL;
        }
        let Some(filter) = result.0.filters.get(index) else {
            return UWNAV_ERR_INDEX;
        };
        unsafe { std::ptr::copy_nonoverlapping(filter.armse.as_ptr(), out, 9) };
        UWNAV_OK
    })
}

/// Total covariance-factorization failures of filter `index`, written to
/// `out`.
///
/// # Safety
/// `result` must be a live handle and `out` writable for one value.
#[no_mangle]
pub unsafe extern "C" fn uwnav_result_factorization_failures(
    result: *const UwnavResult,
    index: size_t,
    out: *mut size_t,
) -> c_int {
    guarded(|| {
        let Some(result) = (unsafe { result.as_ref() }) else {
            return UWNAV_ERR_NULL;
        };
        if out.is_null() {
            return UWNAV_ERR_NULL;
        }
        let Some(filter) = result.0.filters.get(index) else {
            return UWNAV_ERR_INDEX;
        };
        unsafe { *out = filter.stats.factorization_failures };
        UWNAV_OK
    })
}

/// Write the ARMSE/RMSE/flops CSV artifacts into `dir`.
///
/// # Safety
/// `result` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn uwnav_result_write_csv(
    result: *const UwnavResult,
    dir: *const c_char,
) -> c_int {
    guarded(|| {
        let Some(result) = (unsafe { result.as_ref() }) else {
            return UWNAV_ERR_NULL;
        };
        let dir = match unsafe { path_arg(dir) } {
            Ok(p) => p,
            Err(code) => return code,
        };
        match write_artifacts(&result.0, &dir) {
            Ok(()) => UWNAV_OK,
            Err(_) => UWNAV_ERR_IO,
        }
    })
}

/// # Safety
/// `result` must be a handle from this library or null; it is consumed.
#[no_mangle]
pub unsafe extern "C" fn uwnav_result_free(result: *mut UwnavResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}

/// Closed-form per-step flop count. `kind` indexes the filters as
/// 0 PCKF, 1 CKF, 2 UKF, 3 NSKF, 4 MC-PCKF, 5 MC-CKF, 6 MC-UKF,
/// 7 MC-NSKF; negative return means an unknown kind.
#[no_mangle]
pub extern "C" fn uwnav_flops(kind: c_int, n: size_t, m: size_t, t: size_t) -> c_double {
    let kind = match kind {
        0 => FlopsKind::Pckf,
        1 => FlopsKind::Ckf,
        2 => FlopsKind::Ukf,
        3 => FlopsKind::Nskf,
        4 => FlopsKind::McPckf,
        5 => FlopsKind::McCkf,
        6 => FlopsKind::McUkf,
        7 => FlopsKind::McNskf,
        _ => return -1.0,
    };
    flops(kind, n, m, t)
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn uwnav_status_message(status: c_int) -> *const c_char {
    let msg: &'static [u8] = match status {
        UWNAV_OK => b"ok\0",
        UWNAV_ERR_NULL => b"null argument\0",
        UWNAV_ERR_UTF8 => b"string argument is not valid UTF-8\0",
        UWNAV_ERR_CONFIG => b"invalid configuration\0",
        UWNAV_ERR_RUNTIME => b"benchmark execution failed\0",
        UWNAV_ERR_INDEX => b"filter index out of range\0",
        UWNAV_ERR_BUFFER => b"buffer too small\0",
        UWNAV_ERR_IO => b"could not write artifacts\0",
        _ => b"unknown status\0",
    };
    msg.as_ptr().cast()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn small_config() -> *mut UwnavConfig {
        let mut cfg = ptr::null_mut();
        assert_eq!(unsafe { uwnav_config_new(7, &mut cfg) }, UWNAV_OK);
        assert_eq!(unsafe { uwnav_config_set_runs(cfg, 1) }, UWNAV_OK);
        assert_eq!(unsafe { uwnav_config_set_dt(cfg, 0.5) }, UWNAV_OK);
        cfg
    }

    #[test]
    fn null_arguments_are_rejected() {
        let mut out = ptr::null_mut();
        assert_eq!(unsafe { uwnav_config_new(0, ptr::null_mut()) }, UWNAV_ERR_NULL);
        assert_eq!(unsafe { uwnav_bench(ptr::null(), &mut out) }, UWNAV_ERR_NULL);
        assert_eq!(unsafe { uwnav_config_set_runs(ptr::null_mut(), 5) }, UWNAV_ERR_NULL);
        assert_eq!(unsafe { uwnav_result_filter_count(ptr::null()) }, 0);
        unsafe {
            uwnav_config_free(ptr::null_mut());
            uwnav_result_free(ptr::null_mut());
        }
    }

    #[test]
    fn invalid_settings_are_rejected() {
        let cfg = small_config();
        assert_eq!(unsafe { uwnav_config_set_runs(cfg, 0) }, UWNAV_ERR_CONFIG);
        assert_eq!(unsafe { uwnav_config_set_dt(cfg, -1.0) }, UWNAV_ERR_CONFIG);
        unsafe { uwnav_config_free(cfg) };
    }

    #[test]
    fn bench_round_trip() {
        let cfg = small_config();
        let mut result = ptr::null_mut();
        assert_eq!(unsafe { uwnav_bench(cfg, &mut result) }, UWNAV_OK);
        let count = unsafe { uwnav_result_filter_count(result) };
        assert_eq!(count, 9);

        let mut label = [0 as c_char; 32];
        assert_eq!(
            unsafe { uwnav_result_label(result, 0, label.as_mut_ptr(), label.len()) },
            UWNAV_OK
        );
        let text = unsafe { CStr::from_ptr(label.as_ptr()) }.to_str().unwrap();
        assert_eq!(text, "PCKF");
        assert_eq!(
            unsafe { uwnav_result_label(result, 0, label.as_mut_ptr(), 2) },
            UWNAV_ERR_BUFFER
        );
        assert_eq!(
            unsafe { uwnav_result_label(result, count, label.as_mut_ptr(), label.len()) },
            UWNAV_ERR_INDEX
        );

        let mut armse = [0.0; 9];
        assert_eq!(unsafe { uwnav_result_armse(result, 0, armse.as_mut_ptr()) }, UWNAV_OK);
        assert!(armse.iter().all(|v| v.is_finite() && *v >= 0.0));
        assert!(armse[0] > 0.0 && armse[0] < 1000.0);

        let mut failures = usize::MAX;
        assert_eq!(
            unsafe { uwnav_result_factorization_failures(result, 0, &mut failures) },
            UWNAV_OK
        );
        assert_eq!(failures, 0);

        unsafe {
            uwnav_result_free(result);
            uwnav_config_free(cfg);
        }
    }

    #[test]
    fn flops_and_messages() {
        assert!(uwnav_flops(0, 9, 7, 1) > 0.0);
        assert!(uwnav_flops(4, 9, 7, 1) > uwnav_flops(0, 9, 7, 1));
        assert_eq!(uwnav_flops(99, 9, 7, 1), -1.0);
        let msg = unsafe { CStr::from_ptr(uwnav_status_message(UWNAV_OK)) };
        assert_eq!(msg.to_str().unwrap(), "ok");
        let unknown = unsafe { CStr::from_ptr(uwnav_status_message(1234)) };
        assert_eq!(unknown.to_str().unwrap(), "unknown status");
    }
}
