//! C interface to `treealgebra`.
//!
//! Trees and measures cross the boundary as opaque handles created by
//! `ta_*` constructors and released with the matching `*_free` function.
//! Every fallible call returns a [`TaStatus`]; on failure a description is
//! available from [`ta_last_error_message`] on the same thread. Points are
//! passed as one `double` per schema feature, with categorical features given
//! as the level index.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use treealgebra::combine::{affine_combination, combine_many, CombineBudget, DEFAULT_MAX_NODES};
use treealgebra::geometry::Measure;
use treealgebra::io::{tree_from_json_str, tree_to_json_string};
use treealgebra::measures::{
    forest_distance, scalar_mean, tree_correlation, tree_covariance, tree_distance, tree_inner_product, tree_variance,
};
use treealgebra::tree::{FeatureKind, FeatureSchema, FeatureValue, Tree};
use treealgebra::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidInput = 4,
    SchemaMismatch = 5,
    LeafKindMismatch = 6,
    BudgetExceeded = 7,
    UnsupportedGeometry = 8,
    DegenerateCorrelation = 9,
    Internal = 10,
}

/// Opaque tree handle.
pub struct TaTree(Tree);

/// Opaque probability measure handle.
pub struct TaMeasure(Measure);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

struct Failure(TaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse(_) => TaStatus::ParseError,
            Error::SchemaMismatch(_) => TaStatus::SchemaMismatch,
            Error::LeafKindMismatch(_) => TaStatus::LeafKindMismatch,
            Error::BudgetExceeded { .. } => TaStatus::BudgetExceeded,
            Error::UnsupportedGeometry(_) | Error::UnboundedLp => TaStatus::UnsupportedGeometry,
            Error::DegenerateCorrelation(_) => TaStatus::DegenerateCorrelation,
            _ => TaStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(TaStatus::NullArgument, format!("{} is null", what))
}

/// Runs `body`, converting errors and panics into a status.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => TaStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(&format!("internal error: {}", message));
            TaStatus::Internal
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn tree_list(trees: *const *const TaTree, len: usize, what: &str) -> Result<Vec<Tree>, Failure> {
    if len == 0 {
        return Ok(Vec::new());
    }
    if trees.is_null() {
        return Err(null(what));
    }
    std::slice::from_raw_parts(trees, len)
        .iter()
        .map(|p| borrow(*p, what).map(|t| t.0.clone()))
        .collect()
}

fn point_from(schema: &FeatureSchema, coords: &[f64]) -> Result<Vec<FeatureValue>, Failure> {
    if coords.len() != schema.len() {
        return Err(Error::LengthMismatch {
            expected: schema.len(),
            actual: coords.len(),
        }
        .into());
    }
    schema
        .features()
        .iter()
        .zip(coords)
        .map(|(f, &x)| match &f.kind {
            FeatureKind::Numeric { .. } => Ok(FeatureValue::Numeric(x)),
            FeatureKind::Categorical { levels } => {
                if x.fract() == 0.0 && x >= 0.0 && (x as usize) < levels.len() {
                    Ok(FeatureValue::Level(x as usize))
                } else {
                    Err(Failure(
                        TaStatus::InvalidInput,
                        format!("{} is not a level index of feature '{}'", x, f.name),
                    ))
                }
            }
        })
        .collect()
}

/// Message describing the last failure on this thread, or null. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ta_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a tree file (JSON text, NUL-terminated).
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ta_tree_from_json(json: *const c_char, out: *mut *mut TaTree) -> TaStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure(TaStatus::InvalidUtf8, e.to_string()))?;
        let tree = tree_from_json_str(text)?;
        write_out(out, Box::into_raw(Box::new(TaTree(tree))), "out")
    })
}

/// Serializes a tree; release the string with [`ta_string_free`].
///
/// # Safety
/// `tree` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ta_tree_to_json(tree: *const TaTree, out: *mut *mut c_char) -> TaStatus {
    guard(|| {
        let tree = borrow(tree, "tree")?;
        let text =
            CString::new(tree_to_json_string(&tree.0)).map_err(|e| Failure(TaStatus::Internal, e.to_string()))?;
        write_out(out, text.into_raw(), "out")
    })
}

/// # Safety
/// `s` must come from this library and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ta_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `tree` must come from this library and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ta_tree_free(tree: *mut TaTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Number of nodes in the tree.
///
/// # Safety
/// `tree` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ta_tree_node_count(tree: *const TaTree, out: *mut usize) -> TaStatus {
    guard(|| write_out(out, borrow(tree, "tree")?.0.len(), "out"))
}

/// Value of a scalar tree at a point of `len` coordinates.
///
/// # Safety
/// `point` must reference `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ta_tree_evaluate_scalar(
    tree: *const TaTree,
    point: *const f64,
    len: usize,
    out: *mut f64,
) -> TaStatus {
    guard(|| {
        let tree = &borrow(tree, "tree")?.0;
        if point.is_null() && len > 0 {
            return Err(null("point"));
        }
        let coords = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(point, len)
        };
        let p = point_from(tree.schema(), coords)?;
        let value = tree.evaluate(&p)?;
        let x = value
            .as_scalar()
            .ok_or_else(|| Failure::from(Error::LeafKindMismatch(format!("tree has {} leaves", value.kind()))))?;
        write_out(out, x, "out")
    })
}

/// Uniform measure on the domain box.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ta_measure_uniform(out: *mut *mut TaMeasure) -> TaStatus {
    guard(|| write_out(out, Box::into_raw(Box::new(TaMeasure(Measure::UniformBox))), "out"))
}

/// Empirical measure on the schema of `schema_source`. `points` holds
/// `n_points` rows of `n_features` coordinates; `weights` may be null for
/// equal weights, otherwise `n_points` non-negative values summing to one.
///
/// # Safety
/// Pointers must reference arrays of the stated sizes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ta_measure_empirical(
    schema_source: *const TaTree,
    points: *const f64,
    n_points: usize,
    n_features: usize,
    weights: *const f64,
    out: *mut *mut TaMeasure,
) -> TaStatus {
    guard(|| {
        let schema = borrow(schema_source, "schema_source")?.0.schema();
        if points.is_null() {
            return Err(null("points"));
        }
        let flat = std::slice::from_raw_parts(points, n_points * n_features);
        let rows = if n_features == 0 {
            Vec::new()
        } else {
            flat.chunks(n_features)
                .map(|row| point_from(schema, row))
                .collect::<Result<Vec<_>, _>>()?
        };
        let weights = (!weights.is_null()).then(|| std::slice::from_raw_parts(weights, n_points).to_vec());
        let measure = Measure::empirical(schema, rows, weights)?;
        write_out(out, Box::into_raw(Box::new(TaMeasure(measure))), "out")
    })
}

/// # Safety
/// `measure` must come from this library and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ta_measure_free(measure: *mut TaMeasure) {
    if !measure.is_null() {
        drop(Box::from_raw(measure));
    }
}

unsafe fn pair_quantity(
    a: *const TaTree,
    b: *const TaTree,
    measure: *const TaMeasure,
    out: *mut f64,
    f: fn(&Tree, &Tree, &Measure) -> treealgebra::Result<f64>,
) -> TaStatus {
    guard(|| {
        let (a, b) = (&borrow(a, "a")?.0, &borrow(b, "b")?.0);
        let m = &borrow(measure, "measure")?.0;
        write_out(out, f(a, b, m)?, "out")
    })
}

unsafe fn single_quantity(
    tree: *const TaTree,
    measure: *const TaMeasure,
    out: *mut f64,
    f: fn(&Tree, &Measure) -> treealgebra::Result<f64>,
) -> TaStatus {
    guard(|| {
        let t = &borrow(tree, "tree")?.0;
        let m = &borrow(measure, "measure")?.0;
        write_out(out, f(t, m)?, "out")
    })
}

/// L2 distance between two trees.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ta_tree_distance(
    a: *const TaTree,
    b: *const TaTree,
    measure: *const TaMeasure,
    out: *mut f64,
) -> TaStatus {
    pair_quantity(a, b, measure, out, tree_distance)
}

/// Integral of the product of two scalar trees.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ta_tree_inner_product(
    a: *const TaTree,
    b: *const TaTree,
    measure: *const TaMeasure,
    out: *mut f64,
) -> TaStatus {
    pair_quantity(a, b, measure, out, tree_inner_product)
}

/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ta_tree_covariance(
    a: *const TaTree,
    b: *const TaTree,
    measure: *const TaMeasure,
    out: *mut f64,
) -> TaStatus {
    pair_quantity(a, b, measure, out, tree_covariance)
}

/// Fails with `DegenerateCorrelation` when either tree is constant.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ta_tree_correlation(
    a: *const TaTree,
    b: *const TaTree,
    measure: *const TaMeasure,
    out: *mut f64,
) -> TaStatus {
    pair_quantity(a, b, measure, out, tree_correlation)
}

/// Mean of a scalar tree.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ta_tree_mean(tree: *const TaTree, measure: *const TaMeasure, out: *mut f64) -> TaStatus {
    single_quantity(tree, measure, out, scalar_mean)
}

/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ta_tree_variance(tree: *const TaTree, measure: *const TaMeasure, out: *mut f64) -> TaStatus {
    single_quantity(tree, measure, out, tree_variance)
}

/// Combines `n` trees into one. With `weights` null the result has tuple
/// leaves; otherwise it is the tree of `Σ weights[i]·trees[i]`. A
/// `max_nodes` of zero selects the default budget.
///
/// # Safety
/// `trees` (and `weights` when non-null) must reference `n` elements;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ta_combine(
    trees: *const *const TaTree,
    n: usize,
    weights: *const f64,
    max_nodes: usize,
    out: *mut *mut TaTree,
) -> TaStatus {
    guard(|| {
        let trees = tree_list(trees, n, "trees")?;
        let mut budget = CombineBudget::new(if max_nodes == 0 { DEFAULT_MAX_NODES } else { max_nodes });
        let combined = if weights.is_null() {
            combine_many(&trees, &mut budget)?
        } else {
            let w = std::slice::from_raw_parts(weights, n);
            affine_combination(&trees, w, &mut budget)?
        };
        write_out(out, Box::into_raw(Box::new(TaTree(combined))), "out")
    })
}

/// Distance between the sum of `nf` trees and the sum of `ng` trees.
///
/// # Safety
/// Arrays must reference the stated number of live handles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ta_forest_distance(
    f: *const *const TaTree,
    nf: usize,
    g: *const *const TaTree,
    ng: usize,
    measure: *const TaMeasure,
    out: *mut f64,
) -> TaStatus {
    guard(|| {
        let f = tree_list(f, nf, "f")?;
        let g = tree_list(g, ng, "g")?;
        let m = &borrow(measure, "measure")?.0;
        write_out(out, forest_distance(&f, &g, m)?, "out")
    })
}
