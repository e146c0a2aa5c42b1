//! C ABI over the `scnplus` library.
//!
//! Models are opaque `ScnModel` handles created by `scn_model_train` or
//! `scn_model_load` and released with `scn_model_free`. Every fallible call
//! returns an `ScnStatus`; on failure a message is kept per thread and can be
//! copied out with `scn_last_error_message`. Matrices are dense, row-major
//! `double` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ndarray::ArrayView2;
use scnplus::dataset::{split_privileged_count, DataTable, FeatureSplit, Preprocessor, TargetEncoding, TaskKind};
use scnplus::{train, Activation, LupiParams, Model, ScnError, TrainConfig, TrainData, Variant};

/// Opaque trained model.
pub struct ScnModel {
    inner: Model,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Data = 3,
    Io = 4,
    TrainingAborted = 5,
    Format = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScnVariant {
    Scn = 0,
    ScnPlus = 1,
    Irvfl = 2,
    IrvflPlus = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScnTask {
    Regression = 0,
    Classification = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScnActivation {
    Sigmoid = 0,
    Tanh = 1,
}

/// Training settings; fill with `scn_train_options_default` first.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ScnTrainOptions {
    pub variant: ScnVariant,
    pub task: ScnTask,
    pub activation: ScnActivation,
    pub l_max: usize,
    /// Training RMSE tolerance; 0 grows to `l_max`.
    pub epsilon: f64,
    pub c: f64,
    pub gamma: f64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &ScnError) -> ScnStatus {
    match e {
        ScnError::Io { .. } => ScnStatus::Io,
        ScnError::Parameter(_) => ScnStatus::InvalidArgument,
        ScnError::TrainingAborted(_) | ScnError::Degenerate(_) | ScnError::Experiment(_) => {
            ScnStatus::TrainingAborted
        }
        ScnError::Serde(_) => ScnStatus::Format,
        _ => ScnStatus::Data,
    }
}

struct Fail(ScnStatus, String);

impl From<ScnError> for Fail {
    fn from(e: ScnError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ScnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ScnStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ScnStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(ScnStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(ScnStatus::InvalidArgument, msg.into())
}

/// # Safety
/// `ptr` must be null or point to `len` readable values.
unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// # Safety
/// `ptr` must be null or point to `rows * cols` readable doubles.
unsafe fn matrix<'a>(ptr: *const f64, rows: usize, cols: usize, what: &str) -> Result<ArrayView2<'a, f64>, Fail> {
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| invalid(format!("{what}: size overflow")))?;
    let data = slice(ptr, len, what)?;
    ArrayView2::from_shape((rows, cols), data).map_err(|e| invalid(format!("{what}: {e}")))
}

/// # Safety
/// `ptr` must be null or a valid NUL-terminated string.
unsafe fn path_arg(ptr: *const c_char) -> Result<String, Fail> {
    if ptr.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map(str::to_string)
        .map_err(|_| invalid("path is not valid UTF-8"))
}

/// # Safety
/// `model` must be null or a handle returned by this library and not yet freed.
unsafe fn model_ref<'a>(model: *const ScnModel) -> Result<&'a Model, Fail> {
    model.as_ref().map(|m| &m.inner).ok_or_else(|| null("model"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn scn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// NUL-terminated when `len > 0`). Returns the untruncated message length
/// excluding the terminator, or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn scn_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Writes the library defaults (SCN+, regression, sigmoid, `l_max` 100,
/// `epsilon` 0, C 0.1, gamma 1e5, seed 0).
///
/// # Safety
/// `opts` must be null or point to writable `ScnTrainOptions`.
#[no_mangle]
pub unsafe extern "C" fn scn_train_options_default(opts: *mut ScnTrainOptions) -> ScnStatus {
    guard(|| {
        let opts = opts.as_mut().ok_or_else(|| null("opts"))?;
        let lupi = LupiParams::default();
        *opts = ScnTrainOptions {
            variant: ScnVariant::ScnPlus,
            task: ScnTask::Regression,
            activation: ScnActivation::Sigmoid,
            l_max: 100,
            epsilon: 0.0,
            c: lupi.c,
            gamma: lupi.gamma,
            seed: 0,
        };
        Ok(())
    })
}

fn train_config(o: &ScnTrainOptions) -> Result<TrainConfig, Fail> {
    let variant = match o.variant {
        ScnVariant::Scn => Variant::Scn,
        ScnVariant::ScnPlus => Variant::ScnPlus,
        ScnVariant::Irvfl => Variant::Irvfl,
        ScnVariant::IrvflPlus => Variant::IrvflPlus,
    };
    if o.l_max == 0 {
        return Err(invalid("l_max must be at least 1"));
    }
    let mut cfg = TrainConfig::new(variant);
    cfg.l_max = o.l_max;
    cfg.epsilon = o.epsilon;
    cfg.seed = o.seed;
    cfg.activation = match o.activation {
        ScnActivation::Sigmoid => Activation::Sigmoid,
        ScnActivation::Tanh => Activation::Tanh,
    };
    cfg.lupi = LupiParams::new(o.c, o.gamma)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Trains on raw attribute rows `z` (`n_rows` x `n_cols`) and one target per
/// row: a real value for regression, a class id for classification.
/// Normalization and target encoding are fitted on these rows.
///
/// `privileged` lists the attribute columns reserved for training only
/// (sorted or not); the rest form the normal view. When `privileged` is null
/// and `n_privileged` is 0 a seeded half split is drawn. Pass a non-null
/// pointer with `n_privileged = 0` to use every column as normal.
///
/// # Safety
/// Pointers must be null or reference arrays of the stated sizes; `out` must
/// point to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn scn_model_train(
    z: *const f64,
    n_rows: usize,
    n_cols: usize,
    targets: *const f64,
    privileged: *const usize,
    n_privileged: usize,
    opts: *const ScnTrainOptions,
    out: *mut *mut ScnModel,
) -> ScnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let opts = opts.as_ref().ok_or_else(|| null("opts"))?;
        let cfg = train_config(opts)?;
        let z = matrix(z, n_rows, n_cols, "z")?;
        let t = slice(targets, n_rows, "targets")?;
        let split = if privileged.is_null() && n_privileged == 0 {
            split_privileged_count(n_cols, opts.seed)?
        } else {
            let mut p = slice(privileged, n_privileged, "privileged")?.to_vec();
            p.sort_unstable();
            p.dedup();
            let normal = (0..n_cols).filter(|j| !p.contains(j)).collect();
            let s = FeatureSplit {
                seed: opts.seed,
                normal,
                privileged: p,
            };
            s.validate(n_cols)?;
            s
        };
        let task = match opts.task {
            ScnTask::Regression => TaskKind::Regression,
            ScnTask::Classification => TaskKind::Classification,
        };
        if task == TaskKind::Classification && t.iter().any(|v| v.fract() != 0.0 || !v.is_finite()) {
            return Err(invalid("class ids must be finite integers"));
        }
        let labels = t.iter().map(|v| v.to_string()).collect();
        let table = DataTable::new(z.to_owned(), labels)?;
        let rows: Vec<usize> = (0..n_rows).collect();
        let pre = Preprocessor::fit(&table, &rows, split, task)?;
        let d = pre.prepare(&table, &rows)?;
        let data = TrainData {
            x: d.x.view(),
            x_priv: Some(d.x_priv.view()),
            t: d.t.view(),
        };
        let (net, _) = train(data, &cfg)?;
        let model = Model::new(net, pre)?;
        *out = Box::into_raw(Box::new(ScnModel { inner: model }));
        Ok(())
    })
}

/// Number of outputs per row written by `scn_model_predict`: 1 for
/// regression, the class count for classification.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn scn_model_n_outputs(model: *const ScnModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.network.n_outputs)
}

/// Attribute count expected by `scn_model_predict` (normal plus privileged).
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn scn_model_n_attributes(model: *const ScnModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.preprocessor.n_attributes())
}

/// Hidden node count.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn scn_model_n_nodes(model: *const ScnModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.network.n_nodes())
}

/// Predicts for `n_rows` raw attribute rows. Writes `n_rows * n_outputs`
/// values row-major into `out`: regression values in original target units,
/// or one score per class for classification. Privileged columns are never
/// read.
///
/// # Safety
/// `z` must hold `n_rows * n_cols` doubles and `out` must have room for
/// `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn scn_model_predict(
    model: *const ScnModel,
    z: *const f64,
    n_rows: usize,
    n_cols: usize,
    out: *mut f64,
    out_len: usize,
) -> ScnStatus {
    guard(|| {
        let m = model_ref(model)?;
        let z = matrix(z, n_rows, n_cols, "z")?;
        let scores = m.predict(z)?;
        if out.is_null() && !scores.is_empty() {
            return Err(null("out"));
        }
        if out_len < scores.len() {
            return Err(Fail(
                ScnStatus::BufferTooSmall,
                format!("output needs {} values, buffer holds {out_len}", scores.len()),
            ));
        }
        let targets = &m.preprocessor.targets;
        for (k, v) in scores.iter().enumerate() {
            *out.add(k) = match targets {
                TargetEncoding::Regression { .. } => targets.decode_regression(*v).unwrap_or(*v),
                TargetEncoding::Classification { .. } => *v,
            };
        }
        Ok(())
    })
}

/// Predicted class index per row (ties to the lowest index); use
/// `scn_model_class_label` to map it back to the training label.
///
/// # Safety
/// `z` must hold `n_rows * n_cols` doubles and `out` room for `n_rows` values.
#[no_mangle]
pub unsafe extern "C" fn scn_model_predict_class(
    model: *const ScnModel,
    z: *const f64,
    n_rows: usize,
    n_cols: usize,
    out: *mut usize,
) -> ScnStatus {
    guard(|| {
        let m = model_ref(model)?;
        if !matches!(m.preprocessor.targets, TargetEncoding::Classification { .. }) {
            return Err(invalid("class prediction needs a classification model"));
        }
        let z = matrix(z, n_rows, n_cols, "z")?;
        let scores = m.predict(z)?;
        if out.is_null() && n_rows > 0 {
            return Err(null("out"));
        }
        for (k, c) in scnplus::dataset::argmax_rows(scores.view()).into_iter().enumerate() {
            *out.add(k) = c;
        }
        Ok(())
    })
}

/// Copies the label of class `index` into `buf` as a NUL-terminated string.
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn scn_model_class_label(
    model: *const ScnModel,
    index: usize,
    buf: *mut c_char,
    len: usize,
) -> ScnStatus {
    guard(|| {
        let m = model_ref(model)?;
        let TargetEncoding::Classification { class_labels } = &m.preprocessor.targets else {
            return Err(invalid("not a classification model"));
        };
        let label = class_labels
            .get(index)
            .ok_or_else(|| invalid(format!("class index {index} out of range")))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len <= label.len() {
            return Err(Fail(ScnStatus::BufferTooSmall, format!("label needs {} bytes", label.len() + 1)));
        }
        ptr::copy_nonoverlapping(label.as_ptr().cast::<c_char>(), buf, label.len());
        *buf.add(label.len()) = 0;
        Ok(())
    })
}

/// Writes the model as JSON, in the same format as the command-line tool.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn scn_model_save(model: *const ScnModel, path: *const c_char) -> ScnStatus {
    guard(|| {
        let m = model_ref(model)?;
        m.save(path_arg(path)?)?;
        Ok(())
    })
}

/// Reads a model JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn scn_model_load(path: *const c_char, out: *mut *mut ScnModel) -> ScnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let model = Model::load(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(ScnModel { inner: model }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `model` must be null or a live handle, and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn scn_model_free(model: *mut ScnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
