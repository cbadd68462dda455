//! Spectral heat mass of boundary-strip initial data, the two-time gap,
//! heat content against its small-time expansion, and the tail sum used to
//! truncate the spectral argument.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;

use crate::eigen::EigResult;
use crate::error::{Error, Result};
use crate::grid::{strip_cells, GridMask};
use crate::special::{self, bessel_j};
use crate::spectra::{interval_mode_inner_integral, ModeLabel, Shape, Source, Spectrum};

/// `⟨f, φ_k⟩` for the indicator `f` of `{x : d(x, Ω^c) <= eps}`.
#[derive(Debug, Clone, Serialize)]
pub struct StripData {
    pub eps: f64,
    pub coefficients: Vec<f64>,
    pub strip_measure: f64,
}

impl StripData {
    /// `strip_measure − Σ c_k²`, the squared norm of the omitted part of `f`.
    pub fn omitted_norm2(&self) -> f64 {
        let s: f64 = self.coefficients.iter().map(|c| c * c).sum();
        (self.strip_measure - s).max(0.0)
    }
}

/// Coefficients of an exact spectrum, computed as `mean − ∫_{inner} φ` where
/// the inner set `{d(x, Ω^c) > eps}` is a shrunken box, disk or ball.
pub fn strip_coefficients_exact(spectrum: &Spectrum, eps: f64) -> Result<StripData> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    if spectrum.modes.iter().any(|m| m.source != Source::Exact) {
        return Err(Error::InvalidInput("exact strip coefficients need an exact spectrum".into()));
    }
    let shape = &spectrum.domain.shape;
    let inner_measure = inner_volume(shape, eps)?;
    let strip_measure = spectrum.domain.volume - inner_measure;
    let mut coefficients = Vec::with_capacity(spectrum.len());
    for m in &spectrum.modes {
        let inner = if m.mean == 0.0 { 0.0 } else { inner_integral(shape, &m.label, m.lambda, eps)? };
        coefficients.push(m.mean - inner);
    }
    Ok(StripData {
        eps,
        coefficients,
        strip_measure,
    })
}

fn inner_volume(shape: &Shape, eps: f64) -> Result<f64> {
    Ok(match shape {
        Shape::Box { lengths } => lengths.iter().map(|l| (l - 2.0 * eps).max(0.0)).product(),
        Shape::Disk { radius } => PI * (radius - eps).max(0.0).powi(2),
        Shape::Ball3 { radius } => 4.0 / 3.0 * PI * (radius - eps).max(0.0).powi(3),
        Shape::Product { base, length } => inner_volume(base, eps)? * (length - 2.0 * eps).max(0.0),
        _ => {
            return Err(Error::InvalidInput(
                "exact strip coefficients exist for boxes, disks, balls and products".into(),
            ))
        }
    })
}

/// `∫_{d(x,Ω^c) > eps} φ` for a mode with nonnegative mean.
fn inner_integral(shape: &Shape, label: &ModeLabel, lambda: f64, eps: f64) -> Result<f64> {
    match (shape, label) {
        (Shape::Box { lengths }, ModeLabel::Box(a)) => Ok(lengths
            .iter()
            .zip(a)
            .map(|(&l, &ai)| interval_mode_inner_integral(l, ai, eps))
            .product()),
        (Shape::Disk { radius }, ModeLabel::Disk { m: 0, .. }) => {
            let a = radius - eps;
            if a <= 0.0 {
                return Ok(0.0);
            }
            let z = radius * lambda.sqrt();
            let j1z = bessel_j(1, z)?;
            Ok(2.0 * PI.sqrt() * a * bessel_j(1, z * a / radius)? / (z * j1z))
        }
        (Shape::Ball3 { radius }, ModeLabel::Ball3 { l: 0, k, .. }) => {
            let a = radius - eps;
            if a <= 0.0 {
                return Ok(0.0);
            }
            let alpha = *k as f64 * PI / radius;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let c = sign / (2.0 * PI * radius).sqrt();
            Ok(4.0 * PI * c * (-a * (alpha * a).cos() / alpha + (alpha * a).sin() / (alpha * alpha)))
        }
        (Shape::Product { base, length }, ModeLabel::Tensor { base: bl, a }) => {
            let base_lambda = lambda - (*a as f64 * PI / length).powi(2);
            Ok(inner_integral(base, bl, base_lambda, eps)? * interval_mode_inner_integral(*length, *a, eps))
        }
        _ => Ok(0.0),
    }
}

/// Coefficients `h² Σ_{strip} φ_k` of grid modes (vectors as returned by the
/// solver, after the sign flip of the census).
pub fn strip_coefficients_grid(mask: &GridMask, result: &EigResult, eps: f64) -> Result<StripData> {
    if eps < 4.0 * mask.h * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!(
            "eps = {eps} is below 4h = {}",
            4.0 * mask.h
        )));
    }
    let strip = strip_cells(mask, eps)?;
    let h2 = mask.h * mask.h;
    let coefficients = result
        .vectors
        .iter()
        .map(|v| h2 * strip.indices.iter().map(|&i| v[i]).sum::<f64>())
        .collect();
    Ok(StripData {
        eps,
        coefficients,
        strip_measure: strip.measure,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HeatValue {
    pub value: f64,
    /// Bound on the omitted modes' contribution.
    pub truncation_bound: f64,
}

/// Truncated sums must have a tail bound at most this fraction of the value.
pub const TRUNCATION_REL: f64 = 0.01;

/// `M(t) = Σ e^{−λ_k t} ⟨f, φ_k⟩ ∫φ_k` with the tail bounded by
/// `e^{−λ_max t} √(|f|² − Σ c_k²) √(|Ω| − Σ mean_k²)`.
pub fn spectral_heat_mass(strip: &StripData, spectrum: &Spectrum, t: f64) -> Result<HeatValue> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("t must be positive, got {t}")));
    }
    if strip.coefficients.len() != spectrum.len() {
        return Err(Error::InvalidInput("strip data and spectrum differ in length".into()));
    }
    let mut value = 0.0;
    for (c, m) in strip.coefficients.iter().zip(&spectrum.modes) {
        value += (-m.lambda * t).exp() * c * m.mean;
    }
    let mean_gap = mean_gap(spectrum);
    let bound = (-spectrum.max_lambda() * t).exp() * strip.omitted_norm2().sqrt() * mean_gap.sqrt();
    if bound > TRUNCATION_REL * value.abs() {
        return Err(Error::InsufficientSpectrum(format!(
            "tail bound {bound:.3e} exceeds {TRUNCATION_REL} of the value {value:.3e} at t = {t} (λ_max = {})",
            spectrum.max_lambda()
        )));
    }
    Ok(HeatValue {
        value,
        truncation_bound: bound,
    })
}

fn mean_gap(spectrum: &Spectrum) -> f64 {
    let s: f64 = spectrum.modes.iter().map(|m| m.mean * m.mean).sum();
    (spectrum.domain.volume - s).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Spectral,
    MonteCarlo,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Spectral => "spectral",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HeatSample {
    pub t: f64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatCurve {
    pub samples: Vec<HeatSample>,
    pub method: Method,
    /// Largest truncation bound over the samples (spectral only).
    pub truncation_bound: f64,
}

impl HeatCurve {
    /// CSV with columns `t,value,stderr,method`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,value,stderr,method\n");
        for p in &self.samples {
            let _ = writeln!(s, "{},{},{},{}", p.t, p.value, p.stderr, self.method.name());
        }
        s
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidInput("empty time list".into()));
    }
    if times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidInput("times must be positive".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("times must be strictly increasing".into()));
    }
    Ok(())
}

pub fn spectral_heat_curve(strip: &StripData, spectrum: &Spectrum, times: &[f64]) -> Result<HeatCurve> {
    check_times(times)?;
    let mut samples = Vec::with_capacity(times.len());
    let mut bound: f64 = 0.0;
    for &t in times {
        let v = spectral_heat_mass(strip, spectrum, t)?;
        bound = bound.max(v.truncation_bound);
        samples.push(HeatSample {
            t,
            value: v.value,
            stderr: 0.0,
        });
    }
    Ok(HeatCurve {
        samples,
        method: Method::Spectral,
        truncation_bound: bound,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HeatGapParams {
    pub c1: f64,
    pub c2: f64,
}

impl Default for HeatGapParams {
    fn default() -> Self {
        Self { c1: 1.0, c2: 100.0 }
    }
}

impl HeatGapParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c2 >= self.c1 && self.c2.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "need 0 < c1 <= c2, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapRow {
    pub eps: f64,
    pub m1: f64,
    pub m2: f64,
    pub gap: f64,
    /// `gap / eps`, an empirical value of the constant `c_3`.
    pub ratio: f64,
    pub strip_measure: f64,
}

/// `M(c1 eps²) − M(c2 eps²)`.
pub fn lemma1_gap(strip: &StripData, spectrum: &Spectrum, params: &HeatGapParams) -> Result<GapRow> {
    params.validate()?;
    let e2 = strip.eps * strip.eps;
    let m1 = spectral_heat_mass(strip, spectrum, params.c1 * e2)?.value;
    let m2 = if params.c2 == params.c1 {
        m1
    } else {
        spectral_heat_mass(strip, spectrum, params.c2 * e2)?.value
    };
    let gap = m1 - m2;
    Ok(GapRow {
        eps: strip.eps,
        m1,
        m2,
        gap,
        ratio: gap / strip.eps,
        strip_measure: strip.strip_measure,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GapSweep {
    pub rows: Vec<GapRow>,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

pub fn lemma1_sweep(spectrum: &Spectrum, eps_list: &[f64], params: &HeatGapParams) -> Result<GapSweep> {
    let rows = eps_list
        .iter()
        .map(|&e| lemma1_gap(&strip_coefficients_exact(spectrum, e)?, spectrum, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(gap_summary(rows))
}

pub fn gap_summary(rows: Vec<GapRow>) -> GapSweep {
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    GapSweep {
        rows,
        min_ratio,
        max_ratio,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HeatContent {
    pub t: f64,
    /// `Σ mean_k² e^{−λ_k t}`.
    pub value: f64,
    pub truncation_bound: f64,
    /// Small-time expansion: three terms for disk and ball, two for boxes.
    pub expansion: f64,
    pub residual: f64,
    pub terms: usize,
}

/// Heat content `∫ e^{tΔ} 1` from an exact spectrum.
pub fn heat_content(spectrum: &Spectrum, t: f64) -> Result<HeatContent> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("t must be positive, got {t}")));
    }
    if spectrum.modes.iter().any(|m| m.source != Source::Exact) {
        return Err(Error::InvalidInput("heat content needs an exact spectrum".into()));
    }
    let dom = &spectrum.domain;
    let gap = mean_gap(spectrum);
    if gap > 0.01 * dom.volume {
        return Err(Error::InsufficientSpectrum(format!(
            "Parseval gap {gap:.3e} exceeds 1% of |Ω| = {}",
            dom.volume
        )));
    }
    let value: f64 = spectrum.modes.iter().map(|m| m.mean * m.mean * (-m.lambda * t).exp()).sum();
    let bound = (-spectrum.max_lambda() * t).exp() * gap;
    if bound > TRUNCATION_REL * value {
        return Err(Error::InsufficientSpectrum(format!(
            "heat-content tail bound {bound:.3e} too large at t = {t}"
        )));
    }
    let two = dom.volume - 2.0 / PI.sqrt() * dom.perimeter * t.sqrt();
    let (expansion, terms) = match &dom.shape {
        Shape::Disk { radius } | Shape::Ball3 { radius } => {
            let d = dom.dim as f64;
            (two + (d - 1.0) / 2.0 * t * dom.perimeter / radius, 3)
        }
        _ => (two, 2),
    };
    Ok(HeatContent {
        t,
        value,
        truncation_bound: bound,
        expansion,
        residual: value - expansion,
        terms,
    })
}

/// Result of the tail-sum estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailSum {
    pub b: f64,
    pub k_start: u64,
    pub terms: u64,
    pub sum: f64,
    /// `sum / √eps`.
    pub ratio: f64,
}

const ANCHOR: u64 = 4096;
/// Above this index one Newton step per term gives cube roots to 1e-15.
const NEWTON_FROM: f64 = 16_777_216.0;

/// `Σ_{k : c k^{2/d} >= B} e^{−c k^{2/d} eps²} / √(c k^{2/d})` with
/// `B = (c_cutoff / eps²) log(1/eps)`, summed term by term until a term drops
/// below `1e-18` of the running sum.
pub fn lemma4_tail(c_weyl: f64, d: usize, eps: f64, c_cutoff: f64) -> Result<TailSum> {
    if !(c_weyl > 0.0 && c_cutoff > 0.0) || d == 0 {
        return Err(Error::InvalidInput("c_weyl, c_cutoff and d must be positive".into()));
    }
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(Error::InvalidInput(format!("eps must lie in (0, 0.1], got {eps}")));
    }
    let b = c_cutoff / (eps * eps) * (1.0 / eps).ln();
    let p = 2.0 / d as f64;
    let x_of = |k: u64| -> f64 {
        match d {
            2 => k as f64,
            3 => (k as f64).cbrt().powi(2),
            4 => (k as f64).sqrt(),
            _ => (k as f64).powf(p),
        }
    };
    // smallest k with c k^{2/d} >= B
    let mut k = ((b / c_weyl).powf(d as f64 / 2.0).floor() as u64).max(1);
    while k > 1 && c_weyl * x_of(k - 1) >= b {
        k -= 1;
    }
    while c_weyl * x_of(k) < b {
        k += 1;
    }
    let k_start = k;
    let ce2 = c_weyl * eps * eps;
    let sc = c_weyl.sqrt();
    let mut sum = 0.0;
    let mut terms = 0u64;
    loop {
        // exact anchor, then a block of terms by recurrence
        let mut x = x_of(k);
        let mut e = (-ce2 * x).exp();
        let mut q = if d == 3 { (k as f64).cbrt() } else { 0.0 };
        let mut block = 0.0;
        let mut last = 0.0;
        for j in 0..ANCHOR {
            let term = e / (sc * x.sqrt());
            block += term;
            last = term;
            let kn = (k + j + 1) as f64;
            let xn = match d {
                2 => kn,
                3 if kn < NEWTON_FROM => {
                    q = kn.cbrt();
                    q * q
                }
                3 => {
                    // one Newton step for the cube root from the previous root
                    q += (kn - q * q * q) / (3.0 * q * q);
                    q * q
                }
                4 => kn.sqrt(),
                _ => kn.powf(p),
            };
            let delta = ce2 * (xn - x);
            e *= if delta < 1e-3 {
                1.0 - delta * (1.0 - delta / 2.0 * (1.0 - delta / 3.0 * (1.0 - delta / 4.0)))
            } else {
                (-delta).exp()
            };
            x = xn;
        }
        sum += block;
        terms += ANCHOR;
        k += ANCHOR;
        if last < 1e-18 * sum || sum == 0.0 && last == 0.0 {
            break;
        }
    }
    Ok(TailSum {
        b,
        k_start,
        terms,
        sum,
        ratio: sum / eps.sqrt(),
    })
}

/// Integral counterpart of [`lemma4_tail`]:
/// `c^{−1/2} (d/2) (c eps²)^{(1−d)/2} Γ((d−1)/2, B eps²)`.
pub fn lemma4_integral(c_weyl: f64, d: usize, eps: f64, c_cutoff: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidInput("the integral form needs d >= 2".into()));
    }
    let b = c_cutoff / (eps * eps) * (1.0 / eps).ln();
    let s = (d as f64 - 1.0) / 2.0;
    let ce2 = c_weyl * eps * eps;
    Ok(d as f64 / 2.0 * ce2.powf(-s) * special::upper_gamma(s, b * eps * eps)? / c_weyl.sqrt())
}

/// Cutoff `λ_max` that makes `e^{−λ_max t}` negligible down to `t_min`.
pub fn required_lambda(t_min: f64, rel: f64) -> f64 {
    (1.0 / rel).ln() / t_min + 60.0 / t_min
}
