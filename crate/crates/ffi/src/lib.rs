//! C ABI over `yaoyao-core`.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free` function. Every fallible call returns a [`YyStatus`];
//! on failure [`yy_last_error_message`] describes the error for the calling
//! thread. Point clouds passed in are in standard coordinates, row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use yaoyao::{CoordinateSystem, Error, HalfSpace, PartitionTree, SolverConfig, WeightedPointCloud};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum YyStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    SolverFailure = 3,
    Precondition = 4,
    Panic = 5,
}

/// A weighted point cloud.
pub struct YyCloud(WeightedPointCloud);

/// A computed partition.
pub struct YyPartition(PartitionTree);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> YyStatus {
    if e.is_solver_failure() {
        YyStatus::SolverFailure
    } else if matches!(e, Error::Precondition(_)) {
        YyStatus::Precondition
    } else {
        YyStatus::InvalidInput
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> YyStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => YyStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            YyStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            YyStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn reference<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn string<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Core(Error::InvalidInput(format!("{what} is not valid UTF-8"))))
}

fn check_dim(expected: usize, got: usize) -> Result<(), Failure> {
    if expected == got {
        Ok(())
    } else {
        Err(Failure::Core(Error::DimensionMismatch { expected, got }))
    }
}

fn write_signs(signs: &yaoyao::SignSequence, out: *mut i8) {
    for (i, s) in signs.as_slice().iter().enumerate() {
        // SAFETY: caller provides `dim` writable slots
        unsafe { *out.add(i) = *s };
    }
}

/// The message for the last failed call on this thread. Valid until the next
/// call into this library from the same thread; never null.
#[no_mangle]
pub extern "C" fn yy_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a cloud of `count` points of dimension `dim` from `coords`
/// (`count * dim` values). `weights` may be null for unit weights.
///
/// # Safety
/// `coords` must point to `count * dim` doubles, `weights` (if not null) to
/// `count` doubles, and `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn yy_cloud_new(
    dim: usize,
    coords: *const f64,
    weights: *const f64,
    count: usize,
    out: *mut *mut YyCloud,
) -> YyStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let total = dim
            .checked_mul(count)
            .ok_or_else(|| Failure::Core(Error::InvalidInput("cloud size overflows".into())))?;
        let coords = slice(coords, total, "coords")?.to_vec();
        let weights = if weights.is_null() {
            vec![1.0; count]
        } else {
            slice(weights, count, "weights")?.to_vec()
        };
        let cloud = WeightedPointCloud::from_parts(dim, coords, weights, (0..count as u64).collect())?;
        *out = Box::into_raw(Box::new(YyCloud(cloud)));
        Ok(())
    })
}

/// # Safety
/// `cloud` must be null or a handle from [`yy_cloud_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn yy_cloud_free(cloud: *mut YyCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// Computes the partition of `cloud`. `config_json` may be null for the
/// default solver configuration.
///
/// # Safety
/// `cloud` must be a live handle, `config_json` null or a NUL-terminated
/// string, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn yy_partition_compute(
    cloud: *const YyCloud,
    config_json: *const c_char,
    out: *mut *mut YyPartition,
) -> YyStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let cloud = &reference(cloud, "cloud")?.0;
        let cfg = if config_json.is_null() {
            SolverConfig::default()
        } else {
            SolverConfig::from_json(string(config_json, "config_json")?)?
        };
        let tree = yaoyao::compute_center_partition(cloud, &CoordinateSystem::standard(cloud.dim()), &cfg)?;
        *out = Box::into_raw(Box::new(YyPartition(tree)));
        Ok(())
    })
}

/// Parses a partition from its JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn yy_partition_from_json(json: *const c_char, out: *mut *mut YyPartition) -> YyStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let tree = PartitionTree::from_json(string(json, "json")?)?;
        *out = Box::into_raw(Box::new(YyPartition(tree)));
        Ok(())
    })
}

/// Serializes a partition; release the string with [`yy_string_free`].
///
/// # Safety
/// `partition` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn yy_partition_to_json(partition: *const YyPartition, out: *mut *mut c_char) -> YyStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let json = reference(partition, "partition")?.0.to_json()?;
        *out = CString::new(json)
            .map_err(|_| Failure::Core(Error::InvalidInput("interior NUL".into())))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn yy_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `partition` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn yy_partition_free(partition: *mut YyPartition) {
    if !partition.is_null() {
        drop(Box::from_raw(partition));
    }
}

/// Dimension of the partition, or 0 for a null handle.
///
/// # Safety
/// `partition` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn yy_partition_dim(partition: *const YyPartition) -> usize {
    partition.as_ref().map_or(0, |p| p.0.dim())
}

/// Writes the center (ambient coordinates) into `out[0..len]`; `len` must
/// equal the dimension.
///
/// # Safety
/// `partition` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn yy_partition_center(partition: *const YyPartition, out: *mut f64, len: usize) -> YyStatus {
    guard(|| {
        let tree = &reference(partition, "partition")?.0;
        check_dim(tree.dim(), len)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        for (i, x) in tree.center_ambient().into_iter().enumerate() {
            *out.add(i) = x;
        }
        Ok(())
    })
}

/// Locates `point` (length `len` = dimension) and writes the region's signs
/// (each -1 or +1) into `signs_out[0..len]`.
///
/// # Safety
/// `point` must hold `len` doubles and `signs_out` `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn yy_partition_region_of_point(
    partition: *const YyPartition,
    point: *const f64,
    len: usize,
    signs_out: *mut i8,
) -> YyStatus {
    guard(|| {
        let tree = &reference(partition, "partition")?.0;
        check_dim(tree.dim(), len)?;
        let p = slice(point, len, "point")?;
        if signs_out.is_null() {
            return Err(Failure::Null("signs_out"));
        }
        let y = tree.system().to_coords(p)?;
        write_signs(&tree.region_of_point(&y)?, signs_out);
        Ok(())
    })
}

/// For the closed half-space `{normal . x >= offset}`, which must contain
/// the center, writes the signs of a region contained in it.
///
/// # Safety
/// `normal` must hold `len` doubles and `signs_out` `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn yy_partition_witness(
    partition: *const YyPartition,
    normal: *const f64,
    offset: f64,
    len: usize,
    signs_out: *mut i8,
) -> YyStatus {
    guard(|| {
        let tree = &reference(partition, "partition")?.0;
        check_dim(tree.dim(), len)?;
        let a = slice(normal, len, "normal")?;
        if signs_out.is_null() {
            return Err(Failure::Null("signs_out"));
        }
        let h = tree.system().halfspace_to_coords(&HalfSpace::new(a.to_vec(), offset)?)?;
        write_signs(&tree.witness_region(&h)?, signs_out);
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn error_message_defaults_to_empty() {
        let msg = unsafe { CStr::from_ptr(yy_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "");
    }

    #[test]
    fn null_arguments_are_reported() {
        let mut out = ptr::null_mut();
        let st = unsafe { yy_cloud_new(2, ptr::null(), ptr::null(), 3, &mut out) };
        assert_eq!(st, YyStatus::NullPointer);
        assert!(out.is_null());
        let msg = unsafe { CStr::from_ptr(yy_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("coords"));
        assert_eq!(unsafe { yy_partition_dim(ptr::null()) }, 0);
    }
}
