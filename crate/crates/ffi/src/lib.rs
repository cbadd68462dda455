//! C interface to `meanspec`.
//!
//! Objects cross the boundary as opaque handles created by `ms_*_new`-style
//! constructors and released with the matching `ms_*_free`. Every fallible
//! call returns an [`MsStatus`]; on failure the message is available from
//! [`ms_last_error`] until the next failing call on the same thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use meanspec::census::{census, CensusConfig, Convention};
use meanspec::cli::{grid_solve, parse_domain, DomainArg};
use meanspec::heat::{lemma4_tail, spectral_heat_mass, strip_coefficients_exact};
use meanspec::mc::{mc_survival, HalfSpace, McConfig};
use meanspec::spectra::{enumerate_ball3, enumerate_box, enumerate_disk, DomainSpec, Shape, Spectrum};
use meanspec::Error;

/// Status codes; positive values match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsStatus {
    Ok = 0,
    InvalidInput = 2,
    Convergence = 3,
    Resolution = 4,
    Insufficient = 5,
    Sampling = 6,
    Io = 7,
    NullPointer = -1,
    Panic = -2,
}

/// A domain description.
pub struct MsDomain(DomainSpec);

/// A computed spectrum with mean values.
pub struct MsSpectrum(Spectrum);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MsStatus {
    match e.exit_code() {
        2 => MsStatus::InvalidInput,
        3 => MsStatus::Convergence,
        4 => MsStatus::Resolution,
        5 => MsStatus::Insufficient,
        6 => MsStatus::Sampling,
        _ => MsStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), MsStatus>) -> MsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside meanspec".into());
            MsStatus::Panic
        }
    }
}

fn lift<T>(r: meanspec::Result<T>) -> Result<T, MsStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null(what: &str) -> MsStatus {
    set_error(format!("{what} is null"));
    MsStatus::NullPointer
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, MsStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failure on this thread, or null. Owned by the library.
#[no_mangle]
pub extern "C" fn ms_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ms_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a descriptor such as `"disk:1"` or `"box:1x2"`.
#[no_mangle]
pub unsafe extern "C" fn ms_domain_parse(desc: *const c_char, out: *mut *mut MsDomain) -> MsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        if desc.is_null() {
            return Err(null("desc"));
        }
        let s = CStr::from_ptr(desc).to_str().map_err(|_| {
            set_error("descriptor is not UTF-8".into());
            MsStatus::InvalidInput
        })?;
        match lift(parse_domain(s))? {
            DomainArg::Domain(d) => {
                *out = Box::into_raw(Box::new(MsDomain(d)));
                Ok(())
            }
            DomainArg::HalfSpace => {
                set_error("halfspace has no spectrum".into());
                Err(MsStatus::InvalidInput)
            }
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn ms_domain_free(domain: *mut MsDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// Volume `|Ω|` of the domain.
#[no_mangle]
pub unsafe extern "C" fn ms_domain_volume(domain: *const MsDomain, out: *mut f64) -> MsStatus {
    guard(|| {
        let d = domain.as_ref().ok_or_else(|| null("domain"))?;
        *out_ref(out, "out")? = d.0.volume;
        Ok(())
    })
}

/// First `n` modes of a box, disk or ball from closed forms.
#[no_mangle]
pub unsafe extern "C" fn ms_spectrum_exact(domain: *const MsDomain, n: usize, out: *mut *mut MsSpectrum) -> MsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let d = domain.as_ref().ok_or_else(|| null("domain"))?;
        let s = match &d.0.shape {
            Shape::Box { lengths } => enumerate_box(lengths, n),
            Shape::Disk { radius } => enumerate_disk(*radius, n),
            Shape::Ball3 { radius } => enumerate_ball3(*radius, n),
            _ => Err(Error::InvalidInput("no closed form for this domain".into())),
        };
        *out = Box::into_raw(Box::new(MsSpectrum(lift(s)?)));
        Ok(())
    })
}

/// First `n` modes of the finite-difference operator at spacing `h`.
#[no_mangle]
pub unsafe extern "C" fn ms_spectrum_grid(
    domain: *const MsDomain,
    h: f64,
    n: usize,
    seed: u64,
    out: *mut *mut MsSpectrum,
) -> MsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let d = domain.as_ref().ok_or_else(|| null("domain"))?;
        let run = lift(grid_solve(&d.0, Some(h), n, seed))?;
        *out = Box::into_raw(Box::new(MsSpectrum(run.spectrum)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ms_spectrum_free(spectrum: *mut MsSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Number of modes; zero for a null handle.
#[no_mangle]
pub unsafe extern "C" fn ms_spectrum_len(spectrum: *const MsSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.len())
}

/// Eigenvalue and mean of mode `index` (0-based).
#[no_mangle]
pub unsafe extern "C" fn ms_spectrum_mode(
    spectrum: *const MsSpectrum,
    index: usize,
    lambda: *mut f64,
    mean: *mut f64,
) -> MsStatus {
    guard(|| {
        let s = spectrum.as_ref().ok_or_else(|| null("spectrum"))?;
        let m = s.0.modes.get(index).ok_or_else(|| {
            set_error(format!("index {index} out of range for {} modes", s.0.len()));
            MsStatus::InvalidInput
        })?;
        *out_ref(lambda, "lambda")? = m.lambda;
        *out_ref(mean, "mean")? = m.mean;
        Ok(())
    })
}

/// Number of nonzero-mean modes among all modes of the spectrum.
/// `convention`: 0 canonical, 1 cluster.
#[no_mangle]
pub unsafe extern "C" fn ms_census_count(spectrum: *const MsSpectrum, convention: c_int, out: *mut usize) -> MsStatus {
    guard(|| {
        let s = spectrum.as_ref().ok_or_else(|| null("spectrum"))?;
        let conv = match convention {
            0 => Convention::Canonical,
            1 => Convention::Cluster,
            _ => {
                set_error(format!("unknown convention {convention}"));
                return Err(MsStatus::InvalidInput);
            }
        };
        let r = lift(census(&s.0, &CensusConfig::default_for(&s.0).with_convention(conv)))?;
        *out_ref(out, "out")? = r.counting.last().copied().unwrap_or(0);
        Ok(())
    })
}

/// Spectral heat mass of the width-`eps` boundary strip at time `t`, for an
/// exact spectrum.
#[no_mangle]
pub unsafe extern "C" fn ms_heat_mass(
    spectrum: *const MsSpectrum,
    eps: f64,
    t: f64,
    value: *mut f64,
    bound: *mut f64,
) -> MsStatus {
    guard(|| {
        let s = spectrum.as_ref().ok_or_else(|| null("spectrum"))?;
        let strip = lift(strip_coefficients_exact(&s.0, eps))?;
        let v = lift(spectral_heat_mass(&strip, &s.0, t))?;
        *out_ref(value, "value")? = v.value;
        *out_ref(bound, "bound")? = v.truncation_bound;
        Ok(())
    })
}

/// Survival probability of Brownian motion started at distance `eps` from a
/// half-space boundary, after time `t`.
#[no_mangle]
pub unsafe extern "C" fn ms_halfspace_survival(
    eps: f64,
    t: f64,
    n_paths: usize,
    seed: u64,
    value: *mut f64,
    stderr: *mut f64,
) -> MsStatus {
    guard(|| {
        let cfg = McConfig {
            n_paths,
            dt: Some((eps / 10.0).powi(2)),
            seed,
            bridge_correction: true,
        };
        let c = lift(mc_survival(&HalfSpace, &[eps], &[t], &cfg))?;
        *out_ref(value, "value")? = c.estimates[0].value;
        *out_ref(stderr, "stderr")? = c.estimates[0].stderr;
        Ok(())
    })
}

/// Tail sum `Σ e^{−c k^{2/d} eps²} / √(c k^{2/d})` over `c k^{2/d} >= B`.
#[no_mangle]
pub unsafe extern "C" fn ms_gamma_tail(
    c_weyl: f64,
    d: usize,
    eps: f64,
    c_cutoff: f64,
    sum: *mut f64,
    ratio: *mut f64,
) -> MsStatus {
    guard(|| {
        let r = lift(lemma4_tail(c_weyl, d, eps, c_cutoff))?;
        *out_ref(sum, "sum")? = r.sum;
        *out_ref(ratio, "ratio")? = r.ratio;
        Ok(())
    })
}

/// `k`-th positive zero of `J_order`.
#[no_mangle]
pub unsafe extern "C" fn ms_bessel_zero(order: u32, k: u32, out: *mut f64) -> MsStatus {
    guard(|| {
        *out_ref(out, "out")? = lift(meanspec::special::bessel_zero(order, k))?;
        Ok(())
    })
}
