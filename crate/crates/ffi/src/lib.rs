//! C interface to the `shiftbeam` solver.
//!
//! Objects are opaque handles created by `sb_*_new`/`sb_*_build` style
//! functions and released with the matching `*_free`. Every fallible call
//! returns an [`SbStatus`]; on failure [`sb_last_error`] describes the
//! problem. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use shiftbeam::errors::{compute_reference, energy_distance};
use shiftbeam::fem::{assemble, solve, DiscreteSpace, PairField};
use shiftbeam::mesh::{Mesh1D, MeshParams, MeshSpec};
use shiftbeam::problem::{example_by_name, BcOrder, Coefficients, ProblemSpec};
use shiftbeam::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Assumption = 3,
    OutOfDomain = 4,
    Mesh = 5,
    Singular = 6,
    Domination = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

impl From<&Error> for SbStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::Config { .. } | Error::Parse(_) | Error::SpaceMismatch(_) => SbStatus::InvalidInput,
            Error::Assumption(_) => SbStatus::Assumption,
            Error::HistoryDomain(_) | Error::OutOfDomain(_) => SbStatus::OutOfDomain,
            Error::Mesh(_) => SbStatus::Mesh,
            Error::Singular(_) => SbStatus::Singular,
            Error::Domination(_) => SbStatus::Domination,
            Error::Io(_) => SbStatus::Io,
        }
    }
}

/// Problem data: coefficients, ε and boundary condition order.
pub struct SbProblem(ProblemSpec);

/// A mesh of `[0, 2]`.
pub struct SbMesh(Arc<Mesh1D>);

/// A discrete solution `(u_h, w_h)`.
pub struct SbSolution(PairField);

/// `u, u′, w, w′` at one point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SbFieldValue {
    pub u: f64,
    pub du: f64,
    pub w: f64,
    pub dw: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), SbStatus>) -> SbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SbStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            SbStatus::Panic
        }
    }
}

fn fail(e: Error) -> SbStatus {
    let s = SbStatus::from(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> SbStatus {
    set_error(format!("null pointer: {what}"));
    SbStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, SbStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(Error::InvalidInput(format!("{what} is not UTF-8"))))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, SbStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, SbStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn sb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Built-in example `"ex1"` or `"ex2"` at the given ε.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sb_problem_example(name: *const c_char, epsilon: f64, out: *mut *mut SbProblem) -> SbStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let out = out_arg(out, "out")?;
        let spec = example_by_name(name, epsilon).map_err(fail)?;
        *out = Box::into_raw(Box::new(SbProblem(spec)));
        Ok(())
    })
}

/// Constant-coefficient problem with history `Φ = 0`; `m` is 1 or 2.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sb_problem_constant(
    epsilon: f64,
    m: u32,
    b: f64,
    c: f64,
    d: f64,
    f: f64,
    out: *mut *mut SbProblem,
) -> SbStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let bc = BcOrder::from_int(m).map_err(fail)?;
        let spec = ProblemSpec::new("constant", epsilon, bc, Coefficients::constant(b, c, d, f)).map_err(fail)?;
        *out = Box::into_raw(Box::new(SbProblem(spec)));
        Ok(())
    })
}

/// Coercivity constants `β` and `δ` of the problem.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sb_problem_constants(p: *const SbProblem, beta: *mut f64, delta: *mut f64) -> SbStatus {
    guard(|| {
        let p = ref_arg(p, "problem")?;
        *out_arg(beta, "beta")? = p.0.beta;
        *out_arg(delta, "delta")? = p.0.delta;
        Ok(())
    })
}

/// # Safety
/// `p` must come from `sb_problem_*` and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sb_problem_free(p: *mut SbProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Layer-adapted mesh with `n` cells for degree `q`. `label` names the
/// boundary and inner families, e.g. `"BS-BS"` or `"BS-weakShishkin"`;
/// `sigma ≤ 0` selects the default `q + 1`.
///
/// # Safety
/// `problem` must be a live handle, `label` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sb_mesh_build(
    problem: *const SbProblem,
    label: *const c_char,
    n: usize,
    q: usize,
    sigma: f64,
    out: *mut *mut SbMesh,
) -> SbStatus {
    guard(|| {
        let p = ref_arg(problem, "problem")?;
        let label = str_arg(label, "label")?;
        let out = out_arg(out, "out")?;
        let family: MeshSpec = label.parse().map_err(fail)?;
        let mut params = MeshParams::new(n, p.0.epsilon, p.0.beta, q);
        if sigma > 0.0 {
            params = params.with_sigma(sigma);
        }
        let mesh = Mesh1D::build(family, params).map_err(fail)?;
        *out = Box::into_raw(Box::new(SbMesh(Arc::new(mesh))));
        Ok(())
    })
}

/// Number of cells; 0 for a null handle.
///
/// # Safety
/// `mesh` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sb_mesh_n_cells(mesh: *const SbMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.n_cells())
}

/// Copies the `n_cells + 1` nodes into `buf`.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sb_mesh_nodes(mesh: *const SbMesh, buf: *mut f64, len: usize) -> SbStatus {
    guard(|| {
        let m = ref_arg(mesh, "mesh")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let nodes = m.0.nodes();
        if len < nodes.len() {
            set_error(format!("buffer holds {len} values, {} needed", nodes.len()));
            return Err(SbStatus::BufferTooSmall);
        }
        ptr::copy_nonoverlapping(nodes.as_ptr(), buf, nodes.len());
        Ok(())
    })
}

/// # Safety
/// `m` must come from `sb_mesh_build` and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sb_mesh_free(m: *mut SbMesh) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Solves the problem with degree-`q` elements on `mesh`.
///
/// # Safety
/// Handles must be live, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sb_solve(problem: *const SbProblem, mesh: *const SbMesh, q: usize, out: *mut *mut SbSolution) -> SbStatus {
    guard(|| {
        let p = ref_arg(problem, "problem")?;
        let m = ref_arg(mesh, "mesh")?;
        let out = out_arg(out, "out")?;
        let space = DiscreteSpace::new(m.0.clone(), q, p.0.m).map_err(fail)?;
        let sol = assemble(&p.0, &space).and_then(|s| solve(&s)).map_err(fail)?;
        *out = Box::into_raw(Box::new(SbSolution(sol)));
        Ok(())
    })
}

/// `u_h, u_h′, w_h, w_h′` at `x ∈ [0, 2]`.
///
/// # Safety
/// `sol` must be live, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sb_solution_eval(sol: *const SbSolution, x: f64, out: *mut SbFieldValue) -> SbStatus {
    guard(|| {
        let s = ref_arg(sol, "solution")?;
        let out = out_arg(out, "out")?;
        let v = s.0.eval(x).map_err(fail)?;
        *out = SbFieldValue {
            u: v.u,
            du: v.du,
            w: v.w,
            dw: v.dw,
        };
        Ok(())
    })
}

/// Energy-norm distance to a reference solution of degree `q_ref` on
/// `n_ref` Bakhvalov-S cells.
///
/// # Safety
/// Handles must be live, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sb_energy_error(
    problem: *const SbProblem,
    sol: *const SbSolution,
    q_ref: usize,
    n_ref: usize,
    out: *mut f64,
) -> SbStatus {
    guard(|| {
        let p = ref_arg(problem, "problem")?;
        let s = ref_arg(sol, "solution")?;
        let out = out_arg(out, "out")?;
        let reference = compute_reference(&p.0, q_ref, n_ref, MeshSpec::BS_BS).map_err(fail)?;
        reference
            .check_dominates(s.0.degree(), s.0.mesh().n_cells())
            .map_err(fail)?;
        *out = energy_distance(&p.0, &reference.field, &s.0);
        Ok(())
    })
}

/// # Safety
/// `s` must come from `sb_solve` and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sb_solution_free(s: *mut SbSolution) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}
