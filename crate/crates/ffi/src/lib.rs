//! C interface to accentkit.
//!
//! Every fallible function returns an [`AkStatus`]. On failure the message
//! for the calling thread is available from [`ak_last_error`] until the next
//! failing call. Objects are opaque handles released with their `_free`
//! function; strings handed out are released with [`ak_string_free`].
//! Panics never cross the boundary and are reported as `AK_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use accentkit::gop::{categorize, score_corpus_with_bounds, Bounds, QuantizerConfig, ScoreReport};
use accentkit::io::{parse_alignments, parse_phone_map, parse_posteriors, write_intensity_records};
use accentkit::renderer::{
    frame_csv, load_params, phoneme_csv, render, save_params, RenderOutput, RendererConfig, RendererParams,
};
use accentkit::types::{AlignmentSet, IntensityCategory, PhonemeInventory, PosteriorSet};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    InvalidArgument = 5,
    Render = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AkCategory {
    Slight = 0,
    Average = 1,
    Strong = 2,
}

pub struct AkInventory(PhonemeInventory);
pub struct AkPosteriors(PosteriorSet);
pub struct AkAlignments(AlignmentSet);
pub struct AkScores(ScoreReport);
pub struct AkParams(RendererParams);
pub struct AkRender {
    ids: Vec<usize>,
    scores: Vec<f64>,
    output: RenderOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

type Failure = (AkStatus, String);

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AkStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AkStatus::Panic
        }
    }
}

fn fail<E: std::fmt::Display>(status: AkStatus) -> impl Fn(E) -> Failure {
    move |e| (status, e.to_string())
}

fn null(what: &str) -> Failure {
    (AkStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (AkStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = CString::new(s).map_err(fail(AkStatus::InvalidArgument))?.into_raw();
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, len: usize) -> Result<(), Failure> {
    if len != src.len() {
        return Err((
            AkStatus::InvalidArgument,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    if len > 0 {
        if buf.is_null() {
            return Err(null("buffer"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, len);
    }
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ak_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ak_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ak_inventory_parse(text: *const c_char, out: *mut *mut AkInventory) -> AkStatus {
    guard(|| {
        let inv = parse_phone_map(read_str(text, "text")?).map_err(fail(AkStatus::Parse))?;
        put(out, AkInventory(inv))
    })
}

/// # Safety
/// `inv` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ak_inventory_num_phones(inv: *const AkInventory) -> usize {
    inv.as_ref().map_or(0, |i| i.0.phones().len())
}

/// # Safety
/// `inv` must be null or a handle from [`ak_inventory_parse`], freed once.
#[no_mangle]
pub unsafe extern "C" fn ak_inventory_free(inv: *mut AkInventory) {
    free(inv)
}

/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ak_posteriors_parse(text: *const c_char, out: *mut *mut AkPosteriors) -> AkStatus {
    guard(|| {
        let set = parse_posteriors(read_str(text, "text")?).map_err(fail(AkStatus::Parse))?;
        put(out, AkPosteriors(set))
    })
}

/// # Safety
/// `set` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ak_posteriors_len(set: *const AkPosteriors) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `set` must be null or a handle from [`ak_posteriors_parse`], freed once.
#[no_mangle]
pub unsafe extern "C" fn ak_posteriors_free(set: *mut AkPosteriors) {
    free(set)
}

/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ak_alignments_parse(text: *const c_char, out: *mut *mut AkAlignments) -> AkStatus {
    guard(|| {
        let set = parse_alignments(read_str(text, "text")?).map_err(fail(AkStatus::Parse))?;
        put(out, AkAlignments(set))
    })
}

/// # Safety
/// `set` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ak_alignments_num_segments(set: *const AkAlignments) -> usize {
    set.as_ref().map_or(0, |s| s.0.num_segments())
}

/// # Safety
/// `set` must be null or a handle from [`ak_alignments_parse`], freed once.
#[no_mangle]
pub unsafe extern "C" fn ak_alignments_free(set: *mut AkAlignments) {
    free(set)
}

unsafe fn score(
    post: *const AkPosteriors,
    align: *const AkAlignments,
    inv: *const AkInventory,
    config: QuantizerConfig,
    frozen: Option<(f64, f64)>,
    out: *mut *mut AkScores,
) -> AkStatus {
    guard(|| {
        let post = handle(post, "posteriors")?;
        let align = handle(align, "alignments")?;
        let inv = handle(inv, "inventory")?;
        let frozen = frozen
            .map(|(lo, hi)| Bounds::new(lo, hi))
            .transpose()
            .map_err(fail(AkStatus::InvalidArgument))?;
        let report = score_corpus_with_bounds(&post.0, &align.0, &inv.0, &config, frozen).map_err(|e| {
            let status = match e {
                accentkit::gop::GopError::Config(_) => AkStatus::InvalidArgument,
                _ => AkStatus::Validation,
            };
            (status, e.to_string())
        })?;
        put(out, AkScores(report))
    })
}

/// Scores a corpus, normalizing over the batch between the given
/// percentiles (0 and 100 for plain min-max).
///
/// # Safety
/// Input handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ak_score(
    post: *const AkPosteriors,
    align: *const AkAlignments,
    inv: *const AkInventory,
    clip_low_pct: f64,
    clip_high_pct: f64,
    out: *mut *mut AkScores,
) -> AkStatus {
    let config = QuantizerConfig::default().with_clip(clip_low_pct, clip_high_pct);
    score(post, align, inv, config, None, out)
}

/// Scores a corpus with fixed normalization bounds in GoP units.
///
/// # Safety
/// Input handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ak_score_frozen(
    post: *const AkPosteriors,
    align: *const AkAlignments,
    inv: *const AkInventory,
    lo: f64,
    hi: f64,
    out: *mut *mut AkScores,
) -> AkStatus {
    score(post, align, inv, QuantizerConfig::default(), Some((lo, hi)), out)
}

/// # Safety
/// `scores` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ak_scores_len(scores: *const AkScores) -> usize {
    scores.as_ref().map_or(0, |s| s.0.records.len())
}

/// # Safety
/// `scores` must be live; `lo` and `hi` writable.
#[no_mangle]
pub unsafe extern "C" fn ak_scores_bounds(scores: *const AkScores, lo: *mut f64, hi: *mut f64) -> AkStatus {
    guard(|| {
        let s = handle(scores, "scores")?;
        if lo.is_null() || hi.is_null() {
            return Err(null("output pointer"));
        }
        *lo = s.0.bounds.lo;
        *hi = s.0.bounds.hi;
        Ok(())
    })
}

/// # Safety
/// `scores` must be live; the three outputs writable.
#[no_mangle]
pub unsafe extern "C" fn ak_scores_record(
    scores: *const AkScores,
    index: usize,
    lpp: *mut f64,
    gop: *mut f64,
    intensity: *mut f64,
) -> AkStatus {
    guard(|| {
        let s = handle(scores, "scores")?;
        let r = s.0.records.get(index).ok_or_else(|| {
            (
                AkStatus::InvalidArgument,
                format!("record {index} out of range for {}", s.0.records.len()),
            )
        })?;
        if lpp.is_null() || gop.is_null() || intensity.is_null() {
            return Err(null("output pointer"));
        }
        *lpp = r.lpp;
        *gop = r.gop;
        *intensity = r.intensity;
        Ok(())
    })
}

/// Intensity table as tab-separated text.
///
/// # Safety
/// `scores` must be live; `out` writable. Free the string with
/// [`ak_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ak_scores_tsv(scores: *const AkScores, out: *mut *mut c_char) -> AkStatus {
    guard(|| put_string(out, write_intensity_records(&handle(scores, "scores")?.0.records)))
}

/// # Safety
/// `scores` must be null or a handle from a scoring call, freed once.
#[no_mangle]
pub unsafe extern "C" fn ak_scores_free(scores: *mut AkScores) {
    free(scores)
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ak_categorize(intensity: f64, out: *mut AkCategory) -> AkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = match categorize(intensity).map_err(fail(AkStatus::InvalidArgument))? {
            IntensityCategory::Slight => AkCategory::Slight,
            IntensityCategory::Average => AkCategory::Average,
            IntensityCategory::Strong => AkCategory::Strong,
        };
        Ok(())
    })
}

/// Seeded toy-sized renderer parameters.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ak_params_init_toy(seed: u64, out: *mut *mut AkParams) -> AkStatus {
    guard(|| {
        let p = RendererParams::init(&RendererConfig::toy(), seed).map_err(fail(AkStatus::InvalidArgument))?;
        put(out, AkParams(p))
    })
}

/// # Safety
/// `text` must be a NUL-terminated checkpoint; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ak_params_load(text: *const c_char, out: *mut *mut AkParams) -> AkStatus {
    guard(|| {
        let p = load_params(read_str(text, "text")?).map_err(fail(AkStatus::Parse))?;
        put(out, AkParams(p))
    })
}

/// # Safety
/// `params` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ak_params_save(params: *const AkParams, out: *mut *mut c_char) -> AkStatus {
    guard(|| put_string(out, save_params(&handle(params, "params")?.0)))
}

/// # Safety
/// `params` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn ak_params_free(params: *mut AkParams) {
    free(params)
}

/// Renders `n` phonemes. `ids` and `scores` may be null when `n` is 0.
///
/// # Safety
/// `params` must be live; `ids` and `scores` must point to `n` values.
#[no_mangle]
pub unsafe extern "C" fn ak_render(
    params: *const AkParams,
    ids: *const usize,
    scores: *const f64,
    n: usize,
    out: *mut *mut AkRender,
) -> AkStatus {
    guard(|| {
        let p = handle(params, "params")?;
        let ids = slice(ids, n, "ids")?.to_vec();
        let scores = slice(scores, n, "scores")?.to_vec();
        let output = render(&ids, &scores, &p.0).map_err(fail(AkStatus::Render))?;
        put(out, AkRender { ids, scores, output })
    })
}

/// # Safety
/// `r` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ak_render_num_phonemes(r: *const AkRender) -> usize {
    r.as_ref().map_or(0, |r| r.ids.len())
}

/// # Safety
/// `r` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ak_render_num_frames(r: *const AkRender) -> usize {
    r.as_ref().map_or(0, |r| r.output.num_frames())
}

/// # Safety
/// `r` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ak_render_mel_channels(r: *const AkRender) -> usize {
    r.as_ref().map_or(0, |r| r.output.mel.cols())
}

/// Copies the per-phoneme pitch; `len` must equal the phoneme count.
///
/// # Safety
/// `r` must be live; `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn ak_render_pitch(r: *const AkRender, buf: *mut f64, len: usize) -> AkStatus {
    guard(|| copy_out(&handle(r, "render")?.output.pitch, buf, len))
}

/// # Safety
/// `r` must be live; `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn ak_render_energy(r: *const AkRender, buf: *mut f64, len: usize) -> AkStatus {
    guard(|| copy_out(&handle(r, "render")?.output.energy, buf, len))
}

/// # Safety
/// `r` must be live; `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn ak_render_durations(r: *const AkRender, buf: *mut usize, len: usize) -> AkStatus {
    guard(|| copy_out(&handle(r, "render")?.output.durations, buf, len))
}

/// Copies the row-major `frames x channels` mel matrix.
///
/// # Safety
/// `r` must be live; `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn ak_render_mel(r: *const AkRender, buf: *mut f64, len: usize) -> AkStatus {
    guard(|| copy_out(handle(r, "render")?.output.mel.data(), buf, len))
}

/// # Safety
/// `r` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ak_render_phoneme_csv(r: *const AkRender, out: *mut *mut c_char) -> AkStatus {
    guard(|| {
        let r = handle(r, "render")?;
        put_string(out, phoneme_csv(&r.ids, &r.scores, &r.output))
    })
}

/// # Safety
/// `r` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ak_render_frame_csv(r: *const AkRender, out: *mut *mut c_char) -> AkStatus {
    guard(|| put_string(out, frame_csv(&handle(r, "render")?.output)))
}

/// # Safety
/// `r` must be null or a handle from [`ak_render`], freed once.
#[no_mangle]
pub unsafe extern "C" fn ak_render_free(r: *mut AkRender) {
    free(r)
}
