//! C ABI for the calculus library.
//!
//! Conventions:
//! * Objects are opaque handles created by `_new`/`_load` constructors and
//!   released by the matching `_free`; `_free` accepts null.
//! * Functions returning [`PsidoStatus`] leave their output parameters
//!   untouched on failure; `psido_last_error_message` describes the most
//!   recent failure on the calling thread (the pointer stays valid until the
//!   next failure on that thread).
//! * Complex samples cross the boundary as interleaved `re, im` doubles in
//!   row-major lattice order, matching the on-disk layout.
//! * No call unwinds across the boundary: internal panics are caught and
//!   reported as `Panic`.
//!
//! The header `include/psido.h` is generated from this file at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use psido::compose::{composition_expansion, moyal_product, MoyalMode};
use psido::geometry::{Density, Frame};
use psido::grid::{
    read_gridfn, read_kernel, read_symbol, write_gridfn, write_kernel, write_symbol, ClassMeta,
    GridFn, GridSpec, KernelGrid, SymbolGrid,
};
use psido::models::{check_h_psi, ManifoldModel};
use psido::quantize::{
    apply_operator, kernel_from_symbol, lambda_convert, symbol_from_kernel, QuantizationSpec,
};
use psido::verify::{
    emit_report, verify_bounded_geometry, verify_c_sigma, verify_h_v, verify_linearization_class,
};
use psido::Error;

/// Result of every fallible call.  `Numeric` and `Config` align with the CLI
/// process exit codes for the same failures.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PsidoStatus {
    Ok = 0,
    /// Numeric failure (singular matrix, divergent solve, resolution...).
    Numeric = 2,
    /// Bad configuration or malformed data.
    Config = 3,
    /// A required pointer argument was null.
    NullPointer = 4,
    /// Internal invariant violation caught at the boundary.
    Panic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean = msg.replace('\0', " ");
    LAST_ERROR.with(|c| *c.borrow_mut() = CString::new(clean).unwrap_or_default());
}

fn fail(e: Error) -> PsidoStatus {
    set_error(&e.to_string());
    match e.exit_code() {
        3 => PsidoStatus::Config,
        _ => PsidoStatus::Numeric,
    }
}

fn null_arg(what: &str) -> PsidoStatus {
    set_error(&format!("null pointer: {what}"));
    PsidoStatus::NullPointer
}

/// Run `f`, mapping library errors and panics onto status codes.
fn catch(f: impl FnOnce() -> Result<(), Error>) -> PsidoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PsidoStatus::Ok,
        Ok(Err(e)) => fail(e),
        Err(_) => {
            set_error("internal panic");
            PsidoStatus::Panic
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Error> {
    if p.is_null() {
        return Err(Error::Config(format!("{what} must not be null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::Config(format!("{what} is not valid UTF-8")))
}

/// A geometry: model name plus its parameters.
pub struct PsidoModel {
    inner: ManifoldModel,
}

/// A pinned quantization: model, frame, density, ordering parameter.
pub struct PsidoSpec {
    inner: QuantizationSpec,
}

/// A sampled function on a base lattice.
pub struct PsidoGridFn {
    inner: GridFn,
}

/// A symbol sampled on base x covariable lattices.
pub struct PsidoSymbol {
    inner: SymbolGrid,
}

/// An operator kernel sampled on a product lattice.
pub struct PsidoKernel {
    inner: KernelGrid,
}

/// Library version string; static storage, never freed.
#[no_mangle]
pub extern "C" fn psido_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Description of the most recent failure on this thread.  Valid until the
/// next failing call on the same thread; empty string if nothing failed yet.
#[no_mangle]
pub extern "C" fn psido_last_error_message() -> *const c_char {
    LAST_ERROR.with(|c| c.borrow().as_ptr())
}

// ---------------------------------------------------------------- models --

/// Create a model: `euclidean_standard`, `euclidean_deformed`,
/// `hyperbolic_exp`, or `hyperbolic_frame_flat`.  `sigma` and `deformation`
/// only matter for the deformed model.
///
/// # Safety
/// `name` must be a valid C string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn psido_model_new(
    name: *const c_char,
    dim: usize,
    sigma: f64,
    deformation: f64,
    out: *mut *mut PsidoModel,
) -> PsidoStatus {
    if out.is_null() {
        return null_arg("out");
    }
    catch(|| {
        let name = c_str(name, "model name")?;
        let inner = ManifoldModel::from_name(name, dim, sigma, deformation)?;
        *out = Box::into_raw(Box::new(PsidoModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from `psido_model_new` (or be null).
#[no_mangle]
pub unsafe extern "C" fn psido_model_free(model: *mut PsidoModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Dimension of the model, 0 if `model` is null.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn psido_model_dim(model: *const PsidoModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.dim())
}

/// Randomized spot check of the midpoint-consistency identity of the model's
/// linearization.  Writes the largest residual and whether it clears the
/// 1e-7 gate.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn psido_check_h_psi(
    model: *const PsidoModel,
    samples: usize,
    seed: u64,
    max_residual: *mut f64,
    pass: *mut i32,
) -> PsidoStatus {
    let Some(model) = model.as_ref() else {
        return null_arg("model");
    };
    if max_residual.is_null() || pass.is_null() {
        return null_arg("output");
    }
    catch(|| {
        let check = check_h_psi(&model.inner, samples, seed)?;
        *max_residual = check.max_residual;
        *pass = check.pass as i32;
        Ok(())
    })
}

// ----------------------------------------------------------------- specs --

/// Create a quantization spec.  `base` (length `dim`) may be null for the
/// origin; `basis` (length `dim * dim`, row-major) may be null for the
/// identity.  `density_kind`: 0 Riemannian, 1 Lebesgue in the frame chart.
///
/// # Safety
/// Non-null array arguments must have the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn psido_spec_new(
    model: *const PsidoModel,
    base: *const f64,
    basis: *const f64,
    lambda: f64,
    density_kind: i32,
    out: *mut *mut PsidoSpec,
) -> PsidoStatus {
    let Some(model) = model.as_ref() else {
        return null_arg("model");
    };
    if out.is_null() {
        return null_arg("out");
    }
    catch(|| {
        let dim = model.inner.dim();
        let base = if base.is_null() {
            vec![0.0; dim]
        } else {
            std::slice::from_raw_parts(base, dim).to_vec()
        };
        let frame = if basis.is_null() {
            Frame::identity(dim, base)
        } else {
            let entries = std::slice::from_raw_parts(basis, dim * dim);
            Frame::new(base, DMatrix::from_row_slice(dim, dim, entries))?
        };
        let density = match density_kind {
            0 => Density::Riemannian,
            1 => Density::FrameLebesgue(frame.clone()),
            other => {
                return Err(Error::Config(format!(
                    "unknown density kind {other} (0 riemannian, 1 frame-lebesgue)"
                )))
            }
        };
        let inner = QuantizationSpec::new(model.inner.clone(), frame, density, lambda)?;
        *out = Box::into_raw(Box::new(PsidoSpec { inner }));
        Ok(())
    })
}

/// # Safety
/// `spec` must come from `psido_spec_new` (or be null).
#[no_mangle]
pub unsafe extern "C" fn psido_spec_free(spec: *mut PsidoSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

// ------------------------------------------------------------- grid data --

unsafe fn complex_in(values: *const f64, len: usize) -> Result<Vec<Complex64>, Error> {
    if values.is_null() {
        return Err(Error::Config("sample array must not be null".into()));
    }
    let raw = std::slice::from_raw_parts(values, 2 * len);
    Ok(raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
}

fn complex_out(data: &[Complex64], buf: *mut f64, capacity_pairs: usize) -> Result<(), Error> {
    if buf.is_null() {
        return Err(Error::Config("output buffer must not be null".into()));
    }
    if capacity_pairs < data.len() {
        return Err(Error::Config(format!(
            "buffer holds {capacity_pairs} complex samples, {} needed",
            data.len()
        )));
    }
    let raw = unsafe { std::slice::from_raw_parts_mut(buf, 2 * data.len()) };
    for (i, z) in data.iter().enumerate() {
        raw[2 * i] = z.re;
        raw[2 * i + 1] = z.im;
    }
    Ok(())
}

/// Create a sampled function from `n^dim` interleaved complex samples on the
/// uniform lattice of half-width `extent`.
///
/// # Safety
/// `values` must hold `2 * n^dim` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn psido_gridfn_new(
    dim: usize,
    extent: f64,
    n: usize,
    values: *const f64,
    out: *mut *mut PsidoGridFn,
) -> PsidoStatus {
    if out.is_null() {
        return null_arg("out");
    }
    catch(|| {
        let spec = GridSpec::new(dim, extent, n)?;
        let data = complex_in(values, spec.len())?;
        *out = Box::into_raw(Box::new(PsidoGridFn {
            inner: GridFn { spec, data },
        }));
        Ok(())
    })
}

/// # Safety
/// `f` must come from a gridfn constructor (or be null).
#[no_mangle]
pub unsafe extern "C" fn psido_gridfn_free(f: *mut PsidoGridFn) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Number of complex samples, 0 on null.
///
/// # Safety
/// `f` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn psido_gridfn_len(f: *const PsidoGridFn) -> usize {
    f.as_ref().map_or(0, |f| f.inner.data.len())
}

/// Lattice shape of a sampled function.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn psido_gridfn_shape(
    f: *const PsidoGridFn,
    dim: *mut usize,
    extent: *mut f64,
    n: *mut usize,
) -> PsidoStatus {
    let Some(f) = f.as_ref() else {
        return null_arg("gridfn");
    };
    if dim.is_null() || extent.is_null() || n.is_null() {
        return null_arg("output");
    }
    *dim = f.inner.spec.dim;
    *extent = f.inner.spec.extent;
    *n = f.inner.spec.n;
    PsidoStatus::Ok
}

/// Copy all samples out as interleaved doubles.
///
/// # Safety
/// `buf` must hold at least `2 * capacity_pairs` doubles.
#[no_mangle]
pub unsafe extern "C" fn psido_gridfn_read(
    f: *const PsidoGridFn,
    buf: *mut f64,
    capacity_pairs: usize,
) -> PsidoStatus {
    let Some(f) = f.as_ref() else {
        return null_arg("gridfn");
    };
    catch(|| complex_out(&f.inner.data, buf, capacity_pairs))
}

/// Load a sampled function from the library's grid file format.
///
/// # Safety
/// `path` must be a valid C string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn psido_gridfn_load(
    path: *const c_char,
    out: *mut *mut PsidoGridFn,
) -> PsidoStatus {
    if out.is_null() {
        return null_arg("out");
    }
    catch(|| {
        let inner = read_gridfn(Path::new(c_str(path, "path")?))?;
        *out = Box::into_raw(Box::new(PsidoGridFn { inner }));
        Ok(())
    })
}

/// Write a sampled function; refuses to overwrite unless `force` is nonzero.
///
/// # Safety
/// `f` must be live; `path` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn psido_gridfn_save(
    f: *const PsidoGridFn,
    path: *const c_char,
    force: i32,
) -> PsidoStatus {
    let Some(f) = f.as_ref() else {
        return null_arg("gridfn");
    };
    catch(|| write_gridfn(Path::new(c_str(path, "path")?), &f.inner, &[], force != 0))
}

/// Create a symbol from `base_n^dim * cov_n^dim` interleaved complex samples
/// (base-major).  `sigma`, `l`, `m` annotate the growth class.
///
/// # Safety
/// `values` must hold `2 * base_n^dim * cov_n^dim` doubles; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn psido_symbol_new(
    dim: usize,
    base_extent: f64,
    base_n: usize,
    cov_extent: f64,
    cov_n: usize,
    sigma: f64,
    l: f64,
    m: f64,
    values: *const f64,
    out: *mut *mut PsidoSymbol,
) -> PsidoStatus {
    if out.is_null() {
        return null_arg("out");
    }
    catch(|| {
        let base = GridSpec::new(dim, base_extent, base_n)?;
        let cov = GridSpec::new(dim, cov_extent, cov_n)?;
        let data = complex_in(values, base.len() * cov.len())?;
        let class = ClassMeta { sigma, l, m };
        *out = Box::into_raw(Box::new(PsidoSymbol {
            inner: SymbolGrid { base, cov, class, data },
        }));
        Ok(())
    })
}

/// # Safety
/// `a` must come from a symbol constructor (or be null).
#[no_mangle]
pub unsafe extern "C" fn psido_symbol_free(a: *mut PsidoSymbol) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Number of complex samples, 0 on null.
///
/// # Safety
/// `a` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn psido_symbol_len(a: *const PsidoSymbol) -> usize {
    a.as_ref().map_or(0, |a| a.inner.data.len())
}

/// Lattice shape of a symbol.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn psido_symbol_shape(
    a: *const PsidoSymbol,
    dim: *mut usize,
    base_extent: *mut f64,
    base_n: *mut usize,
    cov_extent: *mut f64,
    cov_n: *mut usize,
) -> PsidoStatus {
    let Some(a) = a.as_ref() else {
        return null_arg("symbol");
    };
    if dim.is_null() || base_extent.is_null() || base_n.is_null() || cov_extent.is_null() || cov_n.is_null() {
        return null_arg("output");
    }
    *dim = a.inner.base.dim;
    *base_extent = a.inner.base.extent;
    *base_n = a.inner.base.n;
    *cov_extent = a.inner.cov.extent;
    *cov_n = a.inner.cov.n;
    PsidoStatus::Ok
}

/// Copy all samples out as interleaved doubles (base-major).
///
/// # Safety
/// `buf` must hold at least `2 * capacity_pairs` doubles.
#[no_mangle]
pub unsafe extern "C" fn psido_symbol_read(
    a: *const PsidoSymbol,
    buf: *mut f64,
    capacity_pairs: usize,
) -> PsidoStatus {
    let Some(a) = a.as_ref() else {
        return null_arg("symbol");
    };
    catch(|| complex_out(&a.inner.data, buf, capacity_pairs))
}

/// # Safety
/// `path` must be a valid C string; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn psido_symbol_load(
    path: *const c_char,
    out: *mut *mut PsidoSymbol,
) -> PsidoStatus {
    if out.is_null() {
        return null_arg("out");
    }
    catch(|| {
        let inner = read_symbol(Path::new(c_str(path, "path")?))?;
        *out = Box::into_raw(Box::new(PsidoSymbol { inner }));
        Ok(())
    })
}

/// # Safety
/// `a` must be live; `path` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn psido_symbol_save(
    a: *const PsidoSymbol,
    path: *const c_char,
    force: i32,
) -> PsidoStatus {
    let Some(a) = a.as_ref() else {
        return null_arg("symbol");
    };
    catch(|| write_symbol(Path::new(c_str(path, "path")?), &a.inner, &[], force != 0))
}

/// # Safety
/// `k` must come from a kernel constructor (or be null).
#[no_mangle]
pub unsafe extern "C" fn psido_kernel_free(k: *mut PsidoKernel) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

/// Number of complex samples, 0 on null.
///
/// # Safety
/// `k` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn psido_kernel_len(k: *const PsidoKernel) -> usize {
    k.as_ref().map_or(0, |k| k.inner.data.len())
}

/// Copy all samples out as interleaved doubles (first-lattice-major).
///
/// # Safety
/// `buf` must hold at least `2 * capacity_pairs` doubles.
#[no_mangle]
pub unsafe extern "C" fn psido_kernel_read(
    k: *const PsidoKernel,
    buf: *mut f64,
    capacity_pairs: usize,
) -> PsidoStatus {
    let Some(k) = k.as_ref() else {
        return null_arg("kernel");
    };
    catch(|| complex_out(&k.inner.data, buf, capacity_pairs))
}

/// # Safety
/// `path` must be a valid C string; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn psido_kernel_load(
    path: *const c_char,
    out: *mut *mut PsidoKernel,
) -> PsidoStatus {
    if out.is_null() {
        return null_arg("out");
    }
    catch(|| {
        let inner = read_kernel(Path::new(c_str(path, "path")?))?;
        *out = Box::into_raw(Box::new(PsidoKernel { inner }));
        Ok(())
    })
}

/// # Safety
/// `k` must be live; `path` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn psido_kernel_save(
    k: *const PsidoKernel,
    path: *const c_char,
    force: i32,
) -> PsidoStatus {
    let Some(k) = k.as_ref() else {
        return null_arg("kernel");
    };
    catch(|| write_kernel(Path::new(c_str(path, "path")?), &k.inner, &[], force != 0))
}

// ------------------------------------------------------------ operations --

/// Apply the operator of symbol `a` to the sampled function `v`.
///
/// # Safety
/// All handles must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn psido_apply(
    spec: *const PsidoSpec,
    a: *const PsidoSymbol,
    v: *const PsidoGridFn,
    out: *mut *mut PsidoGridFn,
) -> PsidoStatus {
    let (Some(spec), Some(a), Some(v)) = (spec.as_ref(), a.as_ref(), v.as_ref()) else {
        return null_arg("spec/symbol/input");
    };
    if out.is_null() {
        return null_arg("out");
    }
    catch(|| {
        let inner = apply_operator(&spec.inner, &a.inner, &v.inner)?;
        *out = Box::into_raw(Box::new(PsidoGridFn { inner }));
        Ok(())
    })
}

/// Build the Schwartz kernel of the operator of symbol `a`.
///
/// # Safety
/// All handles must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn psido_kernel_from_symbol(
    spec: *const PsidoSpec,
    a: *const PsidoSymbol,
    out: *mut *mut PsidoKernel,
) -> PsidoStatus {
    let (Some(spec), Some(a)) = (spec.as_ref(), a.as_ref()) else {
        return null_arg("spec/symbol");
    };
    if out.is_null() {
        return null_arg("out");
    }
    catch(|| {
        let inner = kernel_from_symbol(&spec.inner, &a.inner)?;
        *out = Box::into_raw(Box::new(PsidoKernel { inner }));
        Ok(())
    })
}

/// Recover the symbol of a kernel on a fresh base lattice of half-width
/// `extent` and size `n`; `sigma`, `l`, `m` annotate the output class.
///
/// # Safety
/// All handles must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn psido_symbol_from_kernel(
    spec: *const PsidoSpec,
    k: *const PsidoKernel,
    extent: f64,
    n: usize,
    sigma: f64,
    l: f64,
    m: f64,
    out: *mut *mut PsidoSymbol,
) -> PsidoStatus {
    let (Some(spec), Some(k)) = (spec.as_ref(), k.as_ref()) else {
        return null_arg("spec/kernel");
    };
    if out.is_null() {
        return null_arg("out");
    }
    catch(|| {
        let base = GridSpec::new(spec.inner.dim(), extent, n)?;
        let class = ClassMeta { sigma, l, m };
        let inner = symbol_from_kernel(&spec.inner, &k.inner, base, class)?;
        *out = Box::into_raw(Box::new(PsidoSymbol { inner }));
        Ok(())
    })
}

/// Symbol of the operator product via the kernel route.  `symmetrized`
/// nonzero averages the extreme orderings instead of using the spec's.
///
/// # Safety
/// All handles must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn psido_moyal(
    spec: *const PsidoSpec,
    a: *const PsidoSymbol,
    b: *const PsidoSymbol,
    symmetrized: i32,
    out: *mut *mut PsidoSymbol,
) -> PsidoStatus {
    let (Some(spec), Some(a), Some(b)) = (spec.as_ref(), a.as_ref(), b.as_ref()) else {
        return null_arg("spec/symbols");
    };
    if out.is_null() {
        return null_arg("out");
    }
    catch(|| {
        let mode = if symmetrized != 0 {
            MoyalMode::Symmetrized
        } else {
            MoyalMode::Lambda
        };
        let inner = moyal_product(&spec.inner, &a.inner, &b.inner, mode)?;
        *out = Box::into_raw(Box::new(PsidoSymbol { inner }));
        Ok(())
    })
}

/// Truncated expansion of the product symbol (order 0, 1, or 2; the spec
/// must sit at ordering parameter 0).
///
/// # Safety
/// All handles must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn psido_expansion(
    spec: *const PsidoSpec,
    a: *const PsidoSymbol,
    b: *const PsidoSymbol,
    order: usize,
    out: *mut *mut PsidoSymbol,
) -> PsidoStatus {
    let (Some(spec), Some(a), Some(b)) = (spec.as_ref(), a.as_ref(), b.as_ref()) else {
        return null_arg("spec/symbols");
    };
    if out.is_null() {
        return null_arg("out");
    }
    catch(|| {
        let inner = composition_expansion(&spec.inner, &a.inner, &b.inner, order)?;
        *out = Box::into_raw(Box::new(PsidoSymbol { inner }));
        Ok(())
    })
}

/// Re-express a symbol at ordering parameter `lambda_to`, keeping `order`
/// correction terms.  The source ordering is the spec's.
///
/// # Safety
/// All handles must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn psido_lambda_convert(
    spec: *const PsidoSpec,
    a: *const PsidoSymbol,
    lambda_to: f64,
    order: usize,
    out: *mut *mut PsidoSymbol,
) -> PsidoStatus {
    let (Some(spec), Some(a)) = (spec.as_ref(), a.as_ref()) else {
        return null_arg("spec/symbol");
    };
    if out.is_null() {
        return null_arg("out");
    }
    catch(|| {
        let inner = lambda_convert(&spec.inner, &a.inner, lambda_to, order)?;
        *out = Box::into_raw(Box::new(PsidoSymbol { inner }));
        Ok(())
    })
}

// ---------------------------------------------------------- verification --

/// Run one hypothesis suite on the model with identity frames:
/// `transitions` (frames at the origin and one unit along the first axis),
/// `linearization`, `invertibility`, or `composition-control`.
/// `eps`/`eta` shape the invertibility sweep and are ignored elsewhere.
/// If `report_path` is non-null the report and a CSV of raw samples are
/// written there (existing files are overwritten).  `verdict` receives 1 if
/// every sub-check passed.
///
/// # Safety
/// `model` must be live; strings valid; `verdict` valid.
#[no_mangle]
pub unsafe extern "C" fn psido_verify(
    model: *const PsidoModel,
    suite: *const c_char,
    sigma: f64,
    max_order: usize,
    eps: f64,
    eta: f64,
    report_path: *const c_char,
    verdict: *mut i32,
) -> PsidoStatus {
    let Some(model) = model.as_ref() else {
        return null_arg("model");
    };
    if verdict.is_null() {
        return null_arg("verdict");
    }
    catch(|| {
        let suite = c_str(suite, "suite")?;
        let dim = model.inner.dim();
        let origin = Frame::identity(dim, vec![0.0; dim]);
        let report = match suite {
            "transitions" => {
                let mut offset = vec![0.0; dim];
                offset[0] = 1.0;
                let frames = [origin, Frame::identity(dim, offset)];
                verify_bounded_geometry(&model.inner, &frames, sigma, max_order)?
            }
            "linearization" => verify_linearization_class(&model.inner, &origin, sigma)?,
            "invertibility" => verify_h_v(&model.inner, &origin, sigma, eps, eta)?,
            "composition-control" => verify_c_sigma(&model.inner, &origin, sigma)?,
            other => return Err(Error::Config(format!("unknown suite '{other}'"))),
        };
        if !report_path.is_null() {
            let path = c_str(report_path, "report path")?;
            emit_report(std::slice::from_ref(&report), Path::new(path))?;
        }
        *verdict = report.verdict as i32;
        Ok(())
    })
}
