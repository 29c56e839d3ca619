//! C ABI over the `robustdata` library.
//!
//! Networks and datasets cross the boundary as opaque handles created by
//! `rd_*_new` / `rd_*_load` and released with the matching `rd_*_free`.
//! Every fallible call returns an [`RdStatus`]; on failure a message is
//! available from [`rd_last_error`] on the same thread. Panics never unwind
//! into the caller: they are reported as [`RdStatus::Panic`].
//!
//! Buffers are passed as pointer plus length. A null pointer is accepted
//! only together with a zero length.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use robustdata::attacks::{self, AttackConfig, Classifier};
use robustdata::datasets::{self, Dataset};
use robustdata::nn::{self, Checkpoint, Network, TrainConfig};
use robustdata::profiler::{self, Measure};
use robustdata::{objectives, rng, stats, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    Io = 4,
    Parse = 5,
    Checkpoint = 6,
    Panic = 7,
}

/// ℓ∞ PGD parameters. `target_class < 0` means untargeted.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdAttackConfig {
    pub epsilon: f64,
    pub step_size: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub random_start: bool,
    pub target_class: i64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RdAttackResult {
    pub success: bool,
    /// First fooling iteration; 0 for inputs already misclassified, the
    /// iteration budget if the attack never succeeded.
    pub kappa: usize,
    pub loss: f64,
}

/// Scoring rule used by [`rd_quality_rank`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdMeasure {
    Stability = 0,
    Probability = 1,
    MinPerturbation = 2,
    LearningOrder = 3,
}

/// Opaque classifier handle.
pub struct RdNetwork {
    ckpt: Checkpoint,
}

/// Opaque dataset handle.
pub struct RdDataset {
    data: Dataset,
}

struct Failure {
    status: RdStatus,
    message: String,
}

impl Failure {
    fn new(status: RdStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn null(what: &str) -> Self {
        Self::new(RdStatus::NullPointer, format!("`{what}` is null"))
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(RdStatus::InvalidArgument, message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } | Error::OutputExists(_) => RdStatus::Io,
            Error::Parse { .. } | Error::Json(_) => RdStatus::Parse,
            Error::Checkpoint(_) => RdStatus::Checkpoint,
            Error::Shape(_) | Error::LayerDim { .. } => RdStatus::Shape,
            _ => RdStatus::InvalidArgument,
        };
        Self::new(status, e.to_string())
    }
}

type FfiResult<T = ()> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> FfiResult) -> RdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RdStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(&fail.message);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            RdStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, what: &str) -> FfiResult<&'a mut [T]> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn reference<'a, T>(ptr: *const T, what: &str) -> FfiResult<&'a T> {
    ptr.as_ref().ok_or_else(|| Failure::null(what))
}

unsafe fn out_ref<'a, T>(ptr: *mut T, what: &str) -> FfiResult<&'a mut T> {
    ptr.as_mut().ok_or_else(|| Failure::null(what))
}

unsafe fn path(ptr: *const c_char) -> FfiResult<PathBuf> {
    if ptr.is_null() {
        return Err(Failure::null("path"));
    }
    let s = CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure::invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

fn check_input(net: &Network, x: &[f64], label: usize) -> FfiResult {
    if x.len() != net.input_dim() {
        return Err(Failure::new(
            RdStatus::Shape,
            format!("input has length {} but the network expects {}", x.len(), net.input_dim()),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Failure::invalid("input contains a non-finite value"));
    }
    if label >= net.class_count() {
        return Err(Failure::invalid(format!(
            "label {label} out of range for {} classes",
            net.class_count()
        )));
    }
    Ok(())
}

fn check_output_len(len: usize, expected: usize, what: &str) -> FfiResult {
    if len != expected {
        return Err(Failure::new(
            RdStatus::Shape,
            format!("`{what}` has length {len}, expected {expected}"),
        ));
    }
    Ok(())
}

fn attack_config(cfg: &RdAttackConfig, classes: usize) -> FfiResult<AttackConfig> {
    let target_class = if cfg.target_class < 0 {
        None
    } else if (cfg.target_class as u64) < classes as u64 {
        Some(cfg.target_class as usize)
    } else {
        return Err(Failure::invalid(format!(
            "target class {} out of range for {classes} classes",
            cfg.target_class
        )));
    };
    let out = AttackConfig {
        epsilon: cfg.epsilon,
        step_size: cfg.step_size,
        iterations: cfg.iterations,
        restarts: cfg.restarts,
        random_start: cfg.random_start,
        target_class,
    };
    out.validate("attack")?;
    Ok(out)
}

/// Static description of a status code. Never null.
#[no_mangle]
pub extern "C" fn rd_status_message(status: RdStatus) -> *const c_char {
    let s: &'static CStr = match status {
        RdStatus::Ok => c"ok",
        RdStatus::NullPointer => c"null pointer argument",
        RdStatus::InvalidArgument => c"invalid argument",
        RdStatus::Shape => c"shape mismatch",
        RdStatus::Io => c"i/o error",
        RdStatus::Parse => c"parse error",
        RdStatus::Checkpoint => c"bad checkpoint",
        RdStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Message of the most recent failure on the calling thread, or an empty
/// string. The pointer stays valid until the next failing call on this
/// thread.
#[no_mangle]
pub extern "C" fn rd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Desk-scale PGD-10: radius 0.1, step 0.025, one random start.
#[no_mangle]
pub extern "C" fn rd_attack_config_default() -> RdAttackConfig {
    let d = AttackConfig::default();
    RdAttackConfig {
        epsilon: d.epsilon,
        step_size: d.step_size,
        iterations: d.iterations,
        restarts: d.restarts,
        random_start: d.random_start,
        target_class: -1,
    }
}

/// Fresh ReLU network with `hidden_len` hidden layers, initialised from
/// `seed`.
///
/// # Safety
/// `hidden` must point to `hidden_len` readable values; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rd_network_new(
    input_dim: usize,
    hidden: *const usize,
    hidden_len: usize,
    class_count: usize,
    seed: u64,
    out: *mut *mut RdNetwork,
) -> RdStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let hidden = slice(hidden, hidden_len, "hidden")?;
        let network = Network::new(input_dim, hidden, class_count, seed)?;
        *out = Box::into_raw(Box::new(RdNetwork {
            ckpt: Checkpoint {
                network,
                train: TrainConfig::default(),
            },
        }));
        Ok(())
    })
}

/// Loads a checkpoint written by the CLI or [`rd_network_save`].
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rd_network_load(path: *const c_char, out: *mut *mut RdNetwork) -> RdStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let ckpt = nn::load_checkpoint(&self::path(path)?)?;
        *out = Box::into_raw(Box::new(RdNetwork { ckpt }));
        Ok(())
    })
}

/// # Safety
/// `net` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rd_network_save(net: *const RdNetwork, path: *const c_char) -> RdStatus {
    guard(|| {
        let net = reference(net, "net")?;
        nn::save_checkpoint(&self::path(path)?, &net.ckpt)?;
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `net` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rd_network_free(net: *mut RdNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Input dimension, or 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rd_network_input_dim(net: *const RdNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.ckpt.network.input_dim())
}

/// Number of classes, or 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rd_network_class_count(net: *const RdNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.ckpt.network.class_count())
}

/// Writes the logits of `x` into `logits_out` (length = class count).
///
/// # Safety
/// Buffers must match their stated lengths.
#[no_mangle]
pub unsafe extern "C" fn rd_network_logits(
    net: *const RdNetwork,
    x: *const f64,
    x_len: usize,
    logits_out: *mut f64,
    logits_len: usize,
) -> RdStatus {
    guard(|| {
        let net = &reference(net, "net")?.ckpt.network;
        let x = slice(x, x_len, "x")?;
        check_input(net, x, 0)?;
        let out = slice_mut(logits_out, logits_len, "logits_out")?;
        check_output_len(out.len(), net.class_count(), "logits_out")?;
        out.copy_from_slice(&Classifier::logits(net, x));
        Ok(())
    })
}

/// Untargeted or targeted cross-entropy PGD with `cfg.restarts` restarts
/// drawn from `seed`. The adversarial point goes to `adv_out` (length =
/// input dimension).
///
/// # Safety
/// Pointers must be valid and buffers must match their stated lengths.
#[no_mangle]
pub unsafe extern "C" fn rd_pgd(
    net: *const RdNetwork,
    x: *const f64,
    x_len: usize,
    label: usize,
    cfg: *const RdAttackConfig,
    seed: u64,
    adv_out: *mut f64,
    adv_len: usize,
    result: *mut RdAttackResult,
) -> RdStatus {
    guard(|| {
        let net = &reference(net, "net")?.ckpt.network;
        let x = slice(x, x_len, "x")?;
        check_input(net, x, label)?;
        let cfg = attack_config(reference(cfg, "cfg")?, net.class_count())?;
        let adv = slice_mut(adv_out, adv_len, "adv_out")?;
        check_output_len(adv.len(), net.input_dim(), "adv_out")?;
        let result = out_ref(result, "result")?;
        let o = attacks::pgd_multi_restart(net, x, label, &cfg, &mut rng::stream(seed, &[]));
        adv.copy_from_slice(&o.adversarial);
        *result = RdAttackResult {
            success: o.success,
            kappa: o.kappa,
            loss: o.loss,
        };
        Ok(())
    })
}

/// Single signed-gradient step of radius `epsilon`.
///
/// # Safety
/// Pointers must be valid and buffers must match their stated lengths.
#[no_mangle]
pub unsafe extern "C" fn rd_fgsm(
    net: *const RdNetwork,
    x: *const f64,
    x_len: usize,
    label: usize,
    epsilon: f64,
    adv_out: *mut f64,
    adv_len: usize,
    result: *mut RdAttackResult,
) -> RdStatus {
    guard(|| {
        let net = &reference(net, "net")?.ckpt.network;
        let x = slice(x, x_len, "x")?;
        check_input(net, x, label)?;
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Failure::invalid("epsilon must lie in [0, 1]"));
        }
        let adv = slice_mut(adv_out, adv_len, "adv_out")?;
        check_output_len(adv.len(), net.input_dim(), "adv_out")?;
        let result = out_ref(result, "result")?;
        let o = attacks::fgsm(net, x, label, epsilon);
        adv.copy_from_slice(&o.adversarial);
        *result = RdAttackResult {
            success: o.success,
            kappa: o.kappa,
            loss: o.loss,
        };
        Ok(())
    })
}

/// Smallest grid radius `j * step <= eps_max` at which iterative FGSM
/// changes the prediction. `found_out` is false (and the radius `eps_max`)
/// when none does.
///
/// # Safety
/// Pointers must be valid and `x` must hold `x_len` values.
#[no_mangle]
pub unsafe extern "C" fn rd_min_perturbation(
    net: *const RdNetwork,
    x: *const f64,
    x_len: usize,
    label: usize,
    step: f64,
    eps_max: f64,
    radius_out: *mut f64,
    found_out: *mut bool,
) -> RdStatus {
    guard(|| {
        let net = &reference(net, "net")?.ckpt.network;
        let x = slice(x, x_len, "x")?;
        check_input(net, x, label)?;
        let radius_out = out_ref(radius_out, "radius_out")?;
        let found_out = out_ref(found_out, "found_out")?;
        let (r, found) = attacks::min_perturbation(net, x, label, step, eps_max)?;
        *radius_out = r;
        *found_out = found;
        Ok(())
    })
}

/// Loads a dataset file in the CLI's delimited format.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rd_dataset_load(path: *const c_char, out: *mut *mut RdDataset) -> RdStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let data = datasets::load_delimited(&self::path(path)?)?;
        *out = Box::into_raw(Box::new(RdDataset { data }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rd_dataset_free(ds: *mut RdDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of examples, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rd_dataset_len(ds: *const RdDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.data.len())
}

/// Feature dimension, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rd_dataset_dim(ds: *const RdDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.data.dim())
}

/// Copies example `index` (file order).
///
/// # Safety
/// Pointers must be valid and `features_out` must hold `features_len`
/// values.
#[no_mangle]
pub unsafe extern "C" fn rd_dataset_example(
    ds: *const RdDataset,
    index: usize,
    features_out: *mut f64,
    features_len: usize,
    label_out: *mut usize,
    id_out: *mut u64,
) -> RdStatus {
    guard(|| {
        let ds = &reference(ds, "ds")?.data;
        let e = ds
            .examples()
            .get(index)
            .ok_or_else(|| Failure::invalid(format!("index {index} out of range for {} examples", ds.len())))?;
        let f = slice_mut(features_out, features_len, "features_out")?;
        check_output_len(f.len(), ds.dim(), "features_out")?;
        let label_out = out_ref(label_out, "label_out")?;
        let id_out = out_ref(id_out, "id_out")?;
        f.copy_from_slice(&e.features);
        *label_out = e.label;
        *id_out = e.id;
        Ok(())
    })
}

/// Clean accuracy on `ds` when `cfg` is null, PGD robust accuracy
/// otherwise. Example `i` is attacked with a stream derived from `seed` and
/// its id.
///
/// # Safety
/// `net` and `ds` must be live handles, `cfg` null or valid, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rd_accuracy(
    net: *const RdNetwork,
    ds: *const RdDataset,
    cfg: *const RdAttackConfig,
    seed: u64,
    out: *mut f64,
) -> RdStatus {
    guard(|| {
        let net = &reference(net, "net")?.ckpt.network;
        let ds = &reference(ds, "ds")?.data;
        let out = out_ref(out, "out")?;
        if ds.dim() != net.input_dim() || ds.classes() > net.class_count() {
            return Err(Failure::new(RdStatus::Shape, "dataset does not fit the network"));
        }
        if ds.is_empty() {
            return Err(Failure::invalid("dataset is empty"));
        }
        let cfg = match cfg.as_ref() {
            Some(c) => Some(attack_config(c, net.class_count())?),
            None => None,
        };
        let correct = ds
            .examples()
            .iter()
            .filter(|e| match &cfg {
                None => !attacks::misclassified(net, &e.features, e.label),
                Some(c) => {
                    let mut r = rng::stream(seed, &[e.id]);
                    !attacks::pgd_multi_restart(net, &e.features, e.label, c, &mut r).success
                }
            })
            .count();
        *out = correct as f64 / ds.len() as f64;
        Ok(())
    })
}

/// Spearman's ρ between two score vectors of length `n` (ties broken by
/// position).
///
/// # Safety
/// `a` and `b` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rd_spearman(a: *const f64, b: *const f64, n: usize, out: *mut f64) -> RdStatus {
    guard(|| {
        let a = slice(a, n, "a")?;
        let b = slice(b, n, "b")?;
        let out = out_ref(out, "out")?;
        *out = stats::spearman(a, b)?;
        Ok(())
    })
}

/// Quality ranks `1..=n` for `scores` under `measure`: rank 1 is the
/// lowest-quality example. `ranks_out[i]` belongs to `ids[i]`; ids must be
/// distinct.
///
/// # Safety
/// `ids`, `scores` and `ranks_out` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn rd_quality_rank(
    ids: *const u64,
    scores: *const f64,
    n: usize,
    measure: RdMeasure,
    ranks_out: *mut f64,
) -> RdStatus {
    guard(|| {
        let ids = slice(ids, n, "ids")?;
        let scores = slice(scores, n, "scores")?;
        let out = slice_mut(ranks_out, n, "ranks_out")?;
        let measure = match measure {
            RdMeasure::Stability => Measure::Stability,
            RdMeasure::Probability => Measure::Probability,
            RdMeasure::MinPerturbation => Measure::MinPerturbation,
            RdMeasure::LearningOrder => Measure::LearningOrder,
        };
        let ranking = profiler::quality_rank(ids, scores, measure)?;
        for (o, id) in out.iter_mut().zip(ids) {
            *o = ranking.rank_of(*id).expect("id was ranked");
        }
        Ok(())
    })
}

/// Batch-mean-normalised GAIRAT weights for `n` attack counts out of
/// `k_max` iterations.
///
/// # Safety
/// `kappas` and `weights_out` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn rd_gairat_weights(
    kappas: *const usize,
    n: usize,
    k_max: usize,
    lambda: f64,
    weights_out: *mut f64,
) -> RdStatus {
    guard(|| {
        let kappas = slice(kappas, n, "kappas")?;
        let out = slice_mut(weights_out, n, "weights_out")?;
        out.copy_from_slice(&objectives::gairat_weights(kappas, k_max, lambda)?);
        Ok(())
    })
}
