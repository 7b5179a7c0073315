//! C ABI over the wordaxes library.
//!
//! Models and dimensions are opaque heap handles created by `*_load` or
//! `*_extract` and released with the matching `*_free`. Every fallible
//! function returns a [`WaxStatus`]; on failure a description is available
//! from [`wax_last_error_message`] on the same thread. Strings returned to
//! the caller must be released with [`wax_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use libc::{c_char, size_t};
use wordaxes::dimension::{dim_similarity, extract, AnchorLexicon, Extracted, Method, SvmOptions};
use wordaxes::embedding::{load_model, EmbeddingModel};
use wordaxes::vecmath::{analogy, cosine, nearest_neighbors, Embeddings};
use wordaxes::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Format = 5,
    Config = 6,
    OutOfVocabulary = 7,
    Empty = 8,
    Degenerate = 9,
    DimensionMismatch = 10,
    BufferTooSmall = 11,
    Panic = 12,
    Other = 13,
}

/// A loaded embedding model with its unit-normalized vectors.
pub struct WaxModel {
    model: EmbeddingModel,
    emb: Embeddings,
}

/// A semantic dimension or linear classifier.
pub struct WaxDimension {
    inner: Extracted,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> WaxStatus {
    match e {
        Error::Io { .. } => WaxStatus::Io,
        Error::Parse { .. } | Error::Json(_) => WaxStatus::Parse,
        Error::Format(_) => WaxStatus::Format,
        Error::Config(_) => WaxStatus::Config,
        Error::OutOfVocabulary(_) => WaxStatus::OutOfVocabulary,
        Error::Empty(_) => WaxStatus::Empty,
        Error::Degenerate(_) => WaxStatus::Degenerate,
        Error::DimensionMismatch { .. } => WaxStatus::DimensionMismatch,
        _ => WaxStatus::Other,
    }
}

struct Fail(WaxStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> WaxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WaxStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            WaxStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(WaxStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(WaxStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(WaxStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(WaxStatus::NullPointer, format!("{name} is null")))
}

fn word_vector<'a>(m: &'a WaxModel, word: &str) -> Result<&'a [f32], Fail> {
    m.model
        .vector(word)
        .ok_or_else(|| Error::OutOfVocabulary(word.to_string()).into())
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message for the most recent failure on this thread, or NULL.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wax_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wax_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn wax_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a model in native, word2vec binary or text format.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wax_model_load(path: *const c_char, out: *mut *mut WaxModel) -> WaxStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let model = load_model(Path::new(path))?;
        let emb = Embeddings::new(&model);
        *out = Box::into_raw(Box::new(WaxModel { model, emb }));
        Ok(())
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from [`wax_model_load`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn wax_model_free(model: *mut WaxModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Vocabulary size, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wax_model_vocab_size(model: *const WaxModel) -> size_t {
    model.as_ref().map_or(0, |m| m.model.len())
}

/// Vector dimensionality, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wax_model_dim(model: *const WaxModel) -> size_t {
    model.as_ref().map_or(0, |m| m.model.dim())
}

/// Copies the word at `index` into `buf` (NUL-terminated). `needed`
/// receives the required size including the terminator.
///
/// # Safety
/// `buf` must point to `len` writable bytes (or be NULL with `len` 0).
#[no_mangle]
pub unsafe extern "C" fn wax_model_word(
    model: *const WaxModel,
    index: size_t,
    buf: *mut c_char,
    len: size_t,
    needed: *mut size_t,
) -> WaxStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        if index >= m.model.len() {
            return Err(Error::IndexOutOfRange { index, len: m.model.len() }.into());
        }
        let word = m.model.vocab().word(index as u32).as_bytes();
        if let Some(n) = needed.as_mut() {
            *n = word.len() + 1;
        }
        if buf.is_null() || len < word.len() + 1 {
            return Err(Fail(WaxStatus::BufferTooSmall, format!("need {} bytes", word.len() + 1)));
        }
        ptr::copy_nonoverlapping(word.as_ptr(), buf.cast::<u8>(), word.len());
        *buf.add(word.len()) = 0;
        Ok(())
    })
}

/// Copies the raw (unnormalized) vector of `word` into `out[0..len]`;
/// `len` must equal the model dimension.
///
/// # Safety
/// `out` must point to `len` writable floats.
#[no_mangle]
pub unsafe extern "C" fn wax_model_word_vector(
    model: *const WaxModel,
    word: *const c_char,
    out: *mut f32,
    len: size_t,
) -> WaxStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let word = str_arg(word, "word")?;
        if out.is_null() {
            return Err(Fail(WaxStatus::NullPointer, "out is null".into()));
        }
        let v = word_vector(m, word)?;
        if len != v.len() {
            return Err(Error::DimensionMismatch { expected: v.len(), actual: len }.into());
        }
        ptr::copy_nonoverlapping(v.as_ptr(), out, len);
        Ok(())
    })
}

/// Cosine similarity of two words.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wax_model_cosine(
    model: *const WaxModel,
    a: *const c_char,
    b: *const c_char,
    out: *mut f64,
) -> WaxStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let out = out_arg(out, "out")?;
        let va = word_vector(m, str_arg(a, "a")?)?;
        let vb = word_vector(m, str_arg(b, "b")?)?;
        *out = cosine(va, vb)?;
        Ok(())
    })
}

/// The `k` nearest neighbors of `word` as a JSON array of
/// `{"word", "index", "similarity"}` objects, written to `*out_json`.
///
/// # Safety
/// Pointers must be valid; free the result with [`wax_string_free`].
#[no_mangle]
pub unsafe extern "C" fn wax_model_neighbors(
    model: *const WaxModel,
    word: *const c_char,
    k: size_t,
    out_json: *mut *mut c_char,
) -> WaxStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let out = out_arg(out_json, "out_json")?;
        *out = ptr::null_mut();
        let hits = nearest_neighbors(&m.emb, str_arg(word, "word")?, k, &Default::default())?;
        *out = to_c_string(serde_json::to_string(&hits).map_err(Error::from)?);
        Ok(())
    })
}

/// Solves `a : b :: c : ?` and writes the answer as a new string.
///
/// # Safety
/// Pointers must be valid; free the result with [`wax_string_free`].
#[no_mangle]
pub unsafe extern "C" fn wax_model_analogy(
    model: *const WaxModel,
    a: *const c_char,
    b: *const c_char,
    c: *const c_char,
    out_word: *mut *mut c_char,
    out_similarity: *mut f64,
) -> WaxStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let out = out_arg(out_word, "out_word")?;
        *out = ptr::null_mut();
        let r = analogy(&m.emb, str_arg(a, "a")?, str_arg(b, "b")?, str_arg(c, "c")?)?;
        if let Some(s) = out_similarity.as_mut() {
            *s = r.similarity;
        }
        *out = to_c_string(r.word);
        Ok(())
    })
}

/// Extracts a dimension from a lexicon file. `method` is `larsen`,
/// `bolukbasi` or `svm`.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wax_dimension_extract(
    model: *const WaxModel,
    lexicon_path: *const c_char,
    method: *const c_char,
    out: *mut *mut WaxDimension,
) -> WaxStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let m = ref_arg(model, "model")?;
        let lex = AnchorLexicon::load(Path::new(str_arg(lexicon_path, "lexicon_path")?))?;
        let method: Method = str_arg(method, "method")?.parse()?;
        let inner = extract(&m.emb, &lex, method, &SvmOptions::default())?;
        *out = Box::into_raw(Box::new(WaxDimension { inner }));
        Ok(())
    })
}

/// Loads a dimension JSON file written by the command-line tool.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wax_dimension_load(path: *const c_char, out: *mut *mut WaxDimension) -> WaxStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = Path::new(str_arg(path, "path")?);
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let inner: Extracted = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        *out = Box::into_raw(Box::new(WaxDimension { inner }));
        Ok(())
    })
}

/// Writes a dimension as JSON.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wax_dimension_save(dim: *const WaxDimension, path: *const c_char) -> WaxStatus {
    guard(|| {
        let d = ref_arg(dim, "dim")?;
        let path = Path::new(str_arg(path, "path")?);
        let json = serde_json::to_string_pretty(&d.inner).map_err(Error::from)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))?;
        Ok(())
    })
}

/// Releases a dimension. NULL is ignored.
///
/// # Safety
/// `dim` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn wax_dimension_free(dim: *mut WaxDimension) {
    if !dim.is_null() {
        drop(Box::from_raw(dim));
    }
}

/// Signed score of `word`: cosine with the axis, or the SVM decision value.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wax_dimension_project(
    model: *const WaxModel,
    dim: *const WaxDimension,
    word: *const c_char,
    out: *mut f64,
) -> WaxStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let d = ref_arg(dim, "dim")?;
        let out = out_arg(out, "out")?;
        *out = d.inner.scorer().score(&m.emb, str_arg(word, "word")?)?;
        Ok(())
    })
}

/// Cosine between two axes. Classifiers are rejected with
/// `WAX_STATUS_CONFIG`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wax_dimension_similarity(
    a: *const WaxDimension,
    b: *const WaxDimension,
    out: *mut f64,
) -> WaxStatus {
    guard(|| {
        let a = ref_arg(a, "a")?;
        let b = ref_arg(b, "b")?;
        let out = out_arg(out, "out")?;
        match (a.inner.dimension(), b.inner.dimension()) {
            (Some(da), Some(db)) => {
                *out = dim_similarity(da, db)?;
                Ok(())
            }
            _ => Err(Error::Config("similarity needs two axes, not classifiers".into()).into()),
        }
    })
}
