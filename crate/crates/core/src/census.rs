//! Mean-value census: zero/nonzero classification under two conventions, the
//! counting function `N_A(n)`, the lower-bound margin, Parseval partial sums,
//! the `√λ |mean|` constant, boundary-strip mass exponents and Weyl fits.

use std::f64::consts::PI;

use serde::Serialize;

use crate::eigen::EigResult;
use crate::error::{Error, Result};
use crate::grid::GridMask;
use crate::spectra::{weyl_constant, DomainSpec, EigenMode, ModeLabel, Sector, Source, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Each mode of the computed basis is flagged independently.
    Canonical,
    /// One flag per degeneracy cluster, set when the projection of the
    /// constant function onto the eigenspace is nonzero.
    Cluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum ZeroTolPolicy {
    /// `|mean| > zero_tol_abs`.
    Fixed,
    /// `|mean| > c_tol · h² · √λ`.
    DiscretizationScaled { c_tol: f64, h: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CensusConfig {
    pub convention: Convention,
    pub zero_tol_abs: f64,
    pub zero_tol_policy: ZeroTolPolicy,
}

impl CensusConfig {
    /// Canonical convention, fixed tolerance `1e-9`.
    pub fn exact() -> Self {
        Self {
            convention: Convention::Canonical,
            zero_tol_abs: 1e-9,
            zero_tol_policy: ZeroTolPolicy::Fixed,
        }
    }

    /// Cluster convention, tolerance `10 h² √λ`.
    pub fn grid(h: f64) -> Self {
        Self {
            convention: Convention::Cluster,
            zero_tol_abs: 1e-9,
            zero_tol_policy: ZeroTolPolicy::DiscretizationScaled { c_tol: 10.0, h },
        }
    }

    pub fn default_for(spectrum: &Spectrum) -> Self {
        match (spectrum.modes.first().map(|m| m.source), &spectrum.domain.shape) {
            (Some(Source::Grid), _) => {
                let h = grid_spacing(spectrum).unwrap_or(0.0);
                Self::grid(h)
            }
            _ => Self::exact(),
        }
    }

    pub fn with_convention(mut self, convention: Convention) -> Self {
        self.convention = convention;
        self
    }

    fn tol(&self, lambda: f64) -> f64 {
        match self.zero_tol_policy {
            ZeroTolPolicy::Fixed => self.zero_tol_abs,
            ZeroTolPolicy::DiscretizationScaled { c_tol, h } => {
                (c_tol * h * h * lambda.sqrt()).max(self.zero_tol_abs)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zero_tol_abs > 0.0) {
            return Err(Error::InvalidInput("zero_tol_abs must be positive".into()));
        }
        if let ZeroTolPolicy::DiscretizationScaled { c_tol, h } = self.zero_tol_policy {
            if !(c_tol > 0.0 && h > 0.0) {
                return Err(Error::InvalidInput("c_tol and h must be positive".into()));
            }
        }
        Ok(())
    }
}

fn grid_spacing(spectrum: &Spectrum) -> Option<f64> {
    match &spectrum.domain.shape {
        crate::spectra::Shape::Mask { h, .. } => Some(*h),
        _ => None,
    }
}

/// Builds a grid spectrum from solver output. Each vector is flipped so that
/// its mean `h² Σ φ_i` is nonnegative.
pub fn grid_spectrum(domain: DomainSpec, mask: &GridMask, result: &mut EigResult) -> Result<Spectrum> {
    if result.vectors.iter().any(|v| v.len() != mask.count()) {
        return Err(Error::InvalidInput("eigenvector length does not match the mask".into()));
    }
    let h2 = mask.h * mask.h;
    let mut modes = Vec::with_capacity(result.values.len());
    for (k, v) in result.vectors.iter_mut().enumerate() {
        let mut mean = h2 * v.iter().sum::<f64>();
        if mean < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
            mean = -mean;
        }
        modes.push(EigenMode {
            lambda: result.values[k],
            mean,
            label: ModeLabel::Grid { index: k },
            source: Source::Grid,
            residual: result.residuals[k],
        });
    }
    // values are already ascending; keep the solver order
    let cluster_tol = cluster_tol_of(result);
    let mut spec = Spectrum::assemble(domain, modes, 0.0, cluster_tol, Sector::Full);
    spec.clusters = result.clusters.clone();
    Ok(spec)
}

fn cluster_tol_of(result: &EigResult) -> f64 {
    // recover the gap used by the solver: the largest within-cluster relative gap
    let mut tol: f64 = 0.0;
    for r in &result.clusters {
        for i in r.start + 1..r.end {
            let a = result.values[i - 1];
            let b = result.values[i];
            tol = tol.max((b - a).abs() / b.abs());
        }
    }
    tol.max(1e-6)
}

/// Fills in means: exact spectra already carry closed forms, grid spectra need
/// their vectors and mask.
pub fn compute_means(
    spectrum: Spectrum,
    vectors: Option<&mut EigResult>,
    mask: Option<&GridMask>,
) -> Result<Spectrum> {
    let grid = spectrum.modes.iter().any(|m| m.source == Source::Grid);
    if !grid {
        return Ok(spectrum);
    }
    match (vectors, mask) {
        (Some(v), Some(m)) => grid_spectrum(spectrum.domain, m, v),
        _ => Err(Error::InvalidInput(
            "grid spectra need eigenvectors and the mask to compute means".into(),
        )),
    }
}

/// Per-mode flags. Under the cluster convention the flag of a cluster sits on
/// its first mode.
pub fn classify(spectrum: &Spectrum, config: &CensusConfig) -> Vec<bool> {
    let mut flags = vec![false; spectrum.len()];
    match config.convention {
        Convention::Canonical => {
            for (f, m) in flags.iter_mut().zip(&spectrum.modes) {
                *f = m.mean.abs() > config.tol(m.lambda);
            }
        }
        Convention::Cluster => {
            for r in &spectrum.clusters {
                let norm = spectrum.modes[r.clone()].iter().map(|m| m.mean * m.mean).sum::<f64>().sqrt();
                let lambda = spectrum.modes[r.end - 1].lambda;
                if norm > config.tol(lambda) {
                    flags[r.start] = true;
                }
            }
        }
    }
    flags
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub n_lo: usize,
    pub n_hi: usize,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

/// Least squares of `log y` against `log x`.
pub fn loglog_fit(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Some((slope, icpt.exp(), rms))
}

fn top_half_fit(seq: &[f64]) -> Option<ExponentFit> {
    let n_hi = seq.len();
    let n_lo = (n_hi / 2).max(1);
    let pts: Vec<(f64, f64)> = (n_lo..=n_hi).map(|n| (n as f64, seq[n - 1])).collect();
    loglog_fit(&pts).map(|(exponent, prefactor, residual)| ExponentFit {
        exponent,
        prefactor,
        n_lo,
        n_hi,
        residual,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginSummary {
    /// `(n, m(n))` for `n` in `[10, n_max]`, thinned geometrically.
    pub samples: Vec<(usize, f64)>,
    /// Minimum of `m(n)` over `n >= 100` (over `n >= 10` when `n_max < 100`).
    pub min_over_100: f64,
    pub positive_from_10: bool,
    pub trend_slope: f64,
    pub at_100: f64,
    pub at_max: f64,
}

/// `m(n) = N_A(n) (log n)^{d/2} / n^{1/(2d)}`.
pub fn margin_value(count: usize, n: usize, d: usize) -> f64 {
    let nf = n as f64;
    count as f64 * nf.ln().powf(d as f64 / 2.0) / nf.powf(1.0 / (2.0 * d as f64))
}

pub fn theorem_margin(counting: &[usize], d: usize) -> MarginSummary {
    let n_max = counting.len();
    let m = |n: usize| margin_value(counting[n - 1], n, d);
    let lo = if n_max >= 100 { 100 } else { 10.min(n_max.max(1)) };
    let mut min_over_100 = f64::INFINITY;
    let mut positive = true;
    for n in 10.min(n_max)..=n_max {
        if n == 0 {
            continue;
        }
        let v = m(n);
        if n >= 10 && v <= 0.0 {
            positive = false;
        }
        if n >= lo {
            min_over_100 = min_over_100.min(v);
        }
    }
    let mut samples = Vec::new();
    let mut n = 10usize;
    while n <= n_max {
        samples.push((n, m(n)));
        n = ((n as f64) * 1.05).ceil() as usize;
    }
    if n_max >= 10 && samples.last().map(|s| s.0) != Some(n_max) {
        samples.push((n_max, m(n_max)));
    }
    let seq: Vec<f64> = (1..=n_max).map(m).collect();
    let trend_slope = top_half_fit(&seq).map_or(f64::NAN, |f| f.exponent);
    MarginSummary {
        samples,
        min_over_100,
        positive_from_10: positive,
        trend_slope,
        at_100: if n_max >= 100 { m(100) } else { f64::NAN },
        at_max: if n_max >= 1 { m(n_max) } else { f64::NAN },
    }
}

/// Partial sums `S(n) = Σ_{k<=n} mean_k²`.
pub fn parseval_partial(spectrum: &Spectrum) -> Vec<f64> {
    let mut s = 0.0;
    spectrum
        .modes
        .iter()
        .map(|m| {
            s += m.mean * m.mean;
            s
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct HtConstant {
    pub value: f64,
    /// First (0-based) index attaining the maximum to relative `1e-12`.
    pub argmax: usize,
}

/// `max_k √λ_k |mean_k|`.
pub fn ht_constant(spectrum: &Spectrum) -> HtConstant {
    let vals: Vec<f64> = spectrum.modes.iter().map(|m| m.lambda.sqrt() * m.mean.abs()).collect();
    let value = vals.iter().cloned().fold(0.0, f64::max);
    let argmax = vals.iter().position(|&v| v >= value * (1.0 - 1e-12)).unwrap_or(0);
    HtConstant { value, argmax }
}

#[derive(Debug, Clone, Serialize)]
pub struct WeylModel {
    pub d: usize,
    /// `c` fitted with the exponent fixed at `2/d`.
    pub c_weyl: f64,
    /// `4π² / (ω_d |Ω|)^{2/d}`.
    pub c_analytic: f64,
    /// Free exponent of `λ_k ≈ c k^p`.
    pub exponent: f64,
    pub c_free: f64,
    pub n_lo: usize,
    pub n_hi: usize,
}

/// Log-log fit of `λ_k` against `k` on the upper half of the index range.
pub fn weyl_fit(spectrum: &Spectrum) -> Result<WeylModel> {
    if spectrum.sector != Sector::Full {
        return Err(Error::InvalidInput("Weyl fit needs a full spectrum".into()));
    }
    let lam = spectrum.lambdas();
    let d = spectrum.domain.dim;
    let fit = top_half_fit(&lam).ok_or_else(|| Error::InvalidInput("too few modes for a Weyl fit".into()))?;
    let p = 2.0 / d as f64;
    let (lo, hi) = (fit.n_lo, fit.n_hi);
    let mean_log: f64 = (lo..=hi).map(|k| lam[k - 1].ln() - p * (k as f64).ln()).sum::<f64>() / (hi - lo + 1) as f64;
    Ok(WeylModel {
        d,
        c_weyl: mean_log.exp(),
        c_analytic: weyl_constant(d, spectrum.domain.volume),
        exponent: fit.exponent,
        c_free: fit.prefactor,
        n_lo: lo,
        n_hi: hi,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusReport {
    pub config: CensusConfig,
    pub n: usize,
    pub dim: usize,
    pub flags: Vec<bool>,
    /// `N_A(n)` for `n = 1..=n_max`.
    pub counting: Vec<usize>,
    pub density: Vec<f64>,
    pub fitted_exponent: Option<ExponentFit>,
    pub margin: MarginSummary,
    pub parseval_partial: Vec<f64>,
    pub parseval_gap: f64,
    pub ht_constant: HtConstant,
    pub weyl: Option<WeylModel>,
}

pub fn census(spectrum: &Spectrum, config: &CensusConfig) -> Result<CensusReport> {
    config.validate()?;
    if spectrum.sector != Sector::Full {
        return Err(Error::InvalidInput("census needs a full spectrum".into()));
    }
    let flags = classify(spectrum, config);
    let mut c = 0usize;
    let counting: Vec<usize> = flags
        .iter()
        .map(|&f| {
            c += f as usize;
            c
        })
        .collect();
    let density = counting.iter().enumerate().map(|(i, &c)| c as f64 / (i + 1) as f64).collect();
    let counts_f: Vec<f64> = counting.iter().map(|&c| c as f64).collect();
    let parseval = parseval_partial(spectrum);
    let parseval_gap = spectrum.domain.volume - parseval.last().cloned().unwrap_or(0.0);
    Ok(CensusReport {
        config: *config,
        n: spectrum.len(),
        dim: spectrum.domain.dim,
        margin: theorem_margin(&counting, spectrum.domain.dim),
        fitted_exponent: top_half_fit(&counts_f),
        flags,
        counting,
        density,
        parseval_partial: parseval,
        parseval_gap,
        ht_constant: ht_constant(spectrum),
        weyl: if spectrum.len() >= 4 { weyl_fit(spectrum).ok() } else { None },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryMassFit {
    pub mode: usize,
    pub eps_grid: Vec<f64>,
    /// `∫_{strip} φ²`.
    pub strip_l2: Vec<f64>,
    /// `|∫_{strip} φ|`.
    pub strip_l1: Vec<f64>,
    pub alpha_l1: f64,
    pub alpha_l2: f64,
    pub fit_residual: f64,
}

/// Strip masses of one grid mode and their log-log exponents in `eps`.
pub fn boundary_mass_fit(vector: &[f64], mask: &GridMask, mode: usize, eps_grid: &[f64]) -> Result<BoundaryMassFit> {
    if vector.len() != mask.count() {
        return Err(Error::InvalidInput("vector length does not match the mask".into()));
    }
    if eps_grid.len() < 4 {
        return Err(Error::InvalidInput("need at least 4 eps values".into()));
    }
    let mut eps: Vec<f64> = eps_grid.to_vec();
    eps.sort_by(f64::total_cmp);
    if eps[eps.len() - 1] < 8.0 * eps[0] * (1.0 - 1e-12) {
        return Err(Error::InvalidInput("eps values must span a factor of at least 8".into()));
    }
    let lo = 4.0 * mask.h;
    let hi = mask.inradius() / 2.0;
    if eps[0] < lo * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!("eps = {} below 4h = {lo}", eps[0])));
    }
    if eps[eps.len() - 1] > hi * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "eps = {} above half the inradius {hi}",
            eps[eps.len() - 1]
        )));
    }
    let dist = mask.unknown_distances();
    let h2 = mask.h * mask.h;
    let mut l2 = Vec::with_capacity(eps.len());
    let mut l1 = Vec::with_capacity(eps.len());
    for &e in &eps {
        let (mut s2, mut s1) = (0.0, 0.0);
        for (v, d) in vector.iter().zip(&dist) {
            if *d <= e * (1.0 + 1e-12) {
                s2 += v * v;
                s1 += v;
            }
        }
        l2.push(s2 * h2);
        l1.push((s1 * h2).abs());
    }
    let p2: Vec<(f64, f64)> = eps.iter().cloned().zip(l2.iter().cloned()).collect();
    let p1: Vec<(f64, f64)> = eps.iter().cloned().zip(l1.iter().cloned()).collect();
    let (alpha_l2, _, r2) = loglog_fit(&p2).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
    let (alpha_l1, _, r1) = loglog_fit(&p1).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
    Ok(BoundaryMassFit {
        mode,
        eps_grid: eps,
        strip_l2: l2,
        strip_l1: l1,
        alpha_l1,
        alpha_l2,
        fit_residual: r1.max(r2),
    })
}

/// `(2/π)√n`: radial-mode count among the first `n` disk modes.
pub fn disk_radial_count_estimate(n: usize) -> f64 {
    2.0 / PI * (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{discrete_rectangle_eigenvalues, smallest_eigs, EigSolveConfig};
    use crate::grid::{assemble_dirichlet, rasterize};
    use crate::spectra::{cluster_ranges, enumerate_box, enumerate_disk};
    use std::sync::Arc;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn interval_means_and_counting() {
        let s = enumerate_box(&[1.0], 101).unwrap();
        for m in &s.modes {
            let ModeLabel::Box(a) = &m.label else { panic!() };
            let q = simpson(|x| 2f64.sqrt() * (a[0] as f64 * PI * x).sin(), 0.0, 1.0, 40_000);
            assert!((q.abs() - m.mean).abs() < 1e-10);
        }
        let r = census(&s, &CensusConfig::exact()).unwrap();
        for n in 1..=101 {
            assert_eq!(r.counting[n - 1], n.div_ceil(2));
        }
    }

    #[test]
    fn degenerate_square_clusters() {
        let s = enumerate_box(&[1.0, 1.0], 6).unwrap();
        let canon = classify(&s, &CensusConfig::exact());
        let clus = classify(&s, &CensusConfig::exact().with_convention(Convention::Cluster));
        // cluster {(1,2),(2,1)} is indices 1..3, {(1,3),(3,1)} is 4..6
        assert_eq!(s.clusters[1], 1..3);
        assert_eq!(s.clusters[3], 4..6);
        assert_eq!(canon[1..3].iter().filter(|f| **f).count(), 0);
        assert_eq!(clus[1..3].iter().filter(|f| **f).count(), 0);
        assert_eq!(canon[4..6].iter().filter(|f| **f).count(), 2);
        assert_eq!(clus[4..6].iter().filter(|f| **f).count(), 1);
        // rotated basis: all mean concentrated in one vector
        let (a, b) = (s.modes[4].mean, s.modes[5].mean);
        let nrm = (a * a + b * b).sqrt();
        let (c, sn) = (a / nrm, b / nrm);
        let rotated = [c * a + sn * b, -sn * a + c * b];
        assert!((rotated[0] - nrm).abs() < 1e-15 && rotated[1].abs() < 1e-15);
    }

    #[test]
    fn sign_flip_invariance() {
        let mut s = enumerate_box(&[1.0, 1.3], 40).unwrap();
        let before = classify(&s, &CensusConfig::exact().with_convention(Convention::Cluster));
        for m in s.modes.iter_mut().step_by(3) {
            m.mean = -m.mean;
        }
        for conv in [Convention::Cluster, Convention::Canonical] {
            let cfg = CensusConfig::exact().with_convention(conv);
            let after = classify(&s, &cfg);
            if conv == Convention::Cluster {
                assert_eq!(before, after);
            }
        }
    }

    #[test]
    fn cluster_count_never_exceeds_canonical() {
        let s = enumerate_box(&[1.0, 1.0, 1.0], 2000).unwrap();
        let canon = classify(&s, &CensusConfig::exact());
        let clus = classify(&s, &CensusConfig::exact().with_convention(Convention::Cluster));
        for r in &s.clusters {
            let a = canon[r.clone()].iter().filter(|f| **f).count();
            let b = clus[r.clone()].iter().filter(|f| **f).count();
            assert!(b <= a);
        }
    }

    #[test]
    fn margins() {
        let s = enumerate_box(&[1.0, 1.0], 20_000).unwrap();
        let r = census(&s, &CensusConfig::exact()).unwrap();
        assert!(r.margin.min_over_100 > 10.0);
        assert!(r.margin.positive_from_10);
        let d = enumerate_disk(1.0, 10_000).unwrap();
        let r = census(&d, &CensusConfig::exact()).unwrap();
        assert!(r.margin.at_max / r.margin.at_100 > 5.0);
        assert!(r.counting[9_999] > r.counting[4_999]);
    }

    #[test]
    fn parseval_sums() {
        let s = enumerate_box(&[1.0], 1000).unwrap();
        let p = parseval_partial(&s);
        assert!(p[999] >= 0.999 && p[999] <= 1.0);
        // partial-sum oracle Σ_{a odd <= 1000} 8/(aπ)²
        let oracle: f64 = (1..=1000).step_by(2).map(|a| 8.0 / (a as f64 * PI).powi(2)).sum();
        assert!((p[999] - oracle).abs() < 1e-12);
        let sq = enumerate_box(&[1.0, 1.0], 10_000).unwrap();
        let p = parseval_partial(&sq);
        assert!(p.windows(2).all(|w| w[1] >= w[0]));
        assert!((0.97..=1.0).contains(&p[9_999]));
    }

    #[test]
    fn ht_constants() {
        let s = enumerate_box(&[1.0], 50).unwrap();
        let c = ht_constant(&s);
        assert!((c.value - 2.0 * 2f64.sqrt()).abs() < 1e-10);
        assert_eq!(c.argmax, 0);
        let sq = enumerate_box(&[1.0, 1.0], 500).unwrap();
        let c = ht_constant(&sq);
        assert!((c.value - 8.0 * 2f64.sqrt() / PI).abs() < 1e-10);
        assert_eq!(c.argmax, 0);
        let d = enumerate_disk(1.0, 200).unwrap();
        let c = ht_constant(&d);
        assert!((c.value - 2.0 * PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn weyl_fits() {
        let d = enumerate_disk(1.0, 5000).unwrap();
        let w = weyl_fit(&d).unwrap();
        assert!((0.9..=1.1).contains(&w.exponent));
        let sq = enumerate_box(&[1.0, 1.0], 5000).unwrap();
        let w = weyl_fit(&sq).unwrap();
        assert!((w.c_weyl - 4.0 * PI).abs() < 0.15 * 4.0 * PI);
        assert!((w.c_analytic - 4.0 * PI).abs() < 1e-12);
        let iv = enumerate_box(&[1.0], 1000).unwrap();
        let w = weyl_fit(&iv).unwrap();
        assert!((w.exponent - 2.0).abs() < 1e-9);
        assert!((w.c_free - PI * PI).abs() < 1e-6);
        assert!((w.c_weyl - PI * PI).abs() < 1e-9);
    }

    fn square_grid(n: usize, m: usize) -> (Arc<GridMask>, Spectrum, EigResult) {
        let h = 1.0 / n as f64;
        let mask = Arc::new(rasterize(&DomainSpec::boxed(&[1.0, 1.0]).unwrap(), h).unwrap());
        let op = assemble_dirichlet(&mask);
        let mut cfg = EigSolveConfig::new(m);
        cfg.weight = h * h;
        let mut res = smallest_eigs(&op, &cfg).unwrap();
        let spec = grid_spectrum(DomainSpec::mask(mask.clone()), &mask, &mut res).unwrap();
        (mask, spec, res)
    }

    #[test]
    fn grid_ground_state_mean() {
        let (_, s, res) = square_grid(128, 3);
        assert!((s.modes[0].mean - 8.0 / (PI * PI)).abs() < 0.01 * 8.0 / (PI * PI));
        assert!(s.modes.iter().all(|m| m.mean >= 0.0));
        assert!(res.vectors[0].iter().sum::<f64>() > 0.0);
        let err = compute_means(s.clone(), None, None);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn grid_cluster_flags_match_exact() {
        let n = 96;
        let h = 1.0 / n as f64;
        let (_, g, _) = square_grid(n, 50);
        let gflags = classify(&g, &CensusConfig::grid(h));
        // exact labels clustered by the discrete degeneracy structure
        let ex = enumerate_box(&[1.0, 1.0], 80).unwrap();
        let discrete = |m: &EigenMode| {
            let ModeLabel::Box(a) = &m.label else { panic!() };
            let s = |k: u32| (k as f64 * PI * h / 2.0).sin().powi(2);
            4.0 / (h * h) * (s(a[0]) + s(a[1]))
        };
        let mut modes: Vec<(f64, f64)> = ex.modes.iter().map(|m| (discrete(m), m.mean)).collect();
        modes.sort_by(|a, b| a.0.total_cmp(&b.0));
        modes.truncate(50);
        let clusters = cluster_ranges(modes.iter().map(|m| m.0), 1e-6);
        let exact_vals = discrete_rectangle_eigenvalues(n - 1, n - 1, h);
        for (k, m) in modes.iter().enumerate() {
            assert!((m.0 - exact_vals[k]).abs() < 1e-9 * m.0);
        }
        assert_eq!(clusters, g.clusters);
        for r in &clusters {
            let exact_nz = modes[r.clone()].iter().any(|m| m.1 != 0.0);
            assert_eq!(gflags[r.start], exact_nz, "cluster {r:?}");
        }
    }

    #[test]
    fn boundary_mass_square_ground_state() {
        let n = 256;
        let (mask, _, res) = square_grid(n, 1);
        // half-integer multiples of h: the lattice strip then covers exactly width eps
        let h = 1.0 / n as f64;
        let eps = [4.5 * h, 9.5 * h, 19.5 * h, 39.5 * h];
        let fit = boundary_mass_fit(&res.vectors[0], &mask, 0, &eps).unwrap();
        assert!(fit.strip_l2.windows(2).all(|w| w[1] >= w[0]));
        assert!(*fit.strip_l2.last().unwrap() <= 1.0);
        assert!(fit.alpha_l2 >= 0.4);
        // analytic strip mass of 4 sin²(πx) sin²(πy) over the frame of width e
        let g = |e: f64| 2.0 * (e - (2.0 * PI * e).sin() / (2.0 * PI));
        let analytic = |e: f64| 1.0 - (1.0 - g(e)).powi(2);
        let pts: Vec<(f64, f64)> = eps.iter().map(|&e| (e, analytic(e))).collect();
        let (slope, _, _) = loglog_fit(&pts).unwrap();
        assert!((fit.alpha_l2 - slope).abs() < 0.1, "{} vs {slope}", fit.alpha_l2);
        assert!(matches!(
            boundary_mass_fit(&res.vectors[0], &mask, 0, &[0.001, 0.01, 0.02, 0.04]),
            Err(Error::Resolution(_))
        ));
    }
}
