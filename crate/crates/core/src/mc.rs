//! Absorbed Brownian motion: survival probabilities and the heat mass of
//! strip data by Monte Carlo.
//!
//! Each path draws its increments from ChaCha8 stream `3i`, its bridge
//! uniforms from stream `3i + 1` and its start point from stream `3i + 2`,
//! all under the configured seed, so results do not depend on the number of
//! worker threads and runs with and without the bridge test are coupled path
//! for path.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{strip_cells, GridMask};
use crate::heat::{HeatCurve, HeatSample, Method};
use crate::spectra::{DomainSpec, Shape};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct McConfig {
    pub n_paths: usize,
    /// Step size; `None` means `(eps/10)²`.
    pub dt: Option<f64>,
    pub seed: u64,
    pub bridge_correction: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            dt: None,
            seed: 0,
            bridge_correction: true,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 1000 {
            return Err(Error::InvalidInput(format!("n_paths must be >= 1000, got {}", self.n_paths)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
            }
        }
        Ok(())
    }

    pub fn step(&self, eps: f64) -> f64 {
        self.dt.unwrap_or((eps / 10.0).powi(2))
    }
}

/// An open region with a distance-to-boundary function.
pub trait Region: Send + Sync {
    fn dim(&self) -> usize;
    fn contains(&self, x: &[f64]) -> bool;
    /// Distance from an inside point to the complement.
    fn distance(&self, x: &[f64]) -> f64;
    /// Box `[lo, hi]` containing the region.
    fn bbox(&self) -> (Vec<f64>, Vec<f64>);
    /// Measure of `{x : distance(x) <= eps}`.
    fn strip_measure(&self, eps: f64) -> Result<f64>;
}

/// `{x : x_0 > 0}` in one dimension; the other coordinates never matter.
#[derive(Debug, Clone, Copy)]
pub struct HalfSpace;

impl Region for HalfSpace {
    fn dim(&self) -> usize {
        1
    }
    fn contains(&self, x: &[f64]) -> bool {
        x[0] > 0.0
    }
    fn distance(&self, x: &[f64]) -> f64 {
        x[0].max(0.0)
    }
    fn bbox(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0], vec![f64::INFINITY])
    }
    fn strip_measure(&self, eps: f64) -> Result<f64> {
        Ok(eps)
    }
}

/// Ball of the given radius centred at the origin, in 2 or 3 dimensions.
#[derive(Debug, Clone, Copy)]
pub struct BallRegion {
    pub radius: f64,
    pub dim: usize,
}

impl Region for BallRegion {
    fn dim(&self) -> usize {
        self.dim
    }
    fn contains(&self, x: &[f64]) -> bool {
        x.iter().map(|v| v * v).sum::<f64>() < self.radius * self.radius
    }
    fn distance(&self, x: &[f64]) -> f64 {
        (self.radius - x.iter().map(|v| v * v).sum::<f64>().sqrt()).max(0.0)
    }
    fn bbox(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![-self.radius; self.dim], vec![self.radius; self.dim])
    }
    fn strip_measure(&self, eps: f64) -> Result<f64> {
        let inner = (self.radius - eps).max(0.0);
        Ok(match self.dim {
            2 => PI * (self.radius.powi(2) - inner.powi(2)),
            _ => 4.0 / 3.0 * PI * (self.radius.powi(3) - inner.powi(3)),
        })
    }
}

/// `∏ [0, L_i]`.
#[derive(Debug, Clone)]
pub struct BoxRegion {
    pub lengths: Vec<f64>,
}

impl Region for BoxRegion {
    fn dim(&self) -> usize {
        self.lengths.len()
    }
    fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lengths).all(|(v, l)| *v > 0.0 && v < l)
    }
    fn distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.lengths)
            .map(|(v, l)| v.min(l - v))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }
    fn bbox(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0; self.lengths.len()], self.lengths.clone())
    }
    fn strip_measure(&self, eps: f64) -> Result<f64> {
        let full: f64 = self.lengths.iter().product();
        let inner: f64 = self.lengths.iter().map(|l| (l - 2.0 * eps).max(0.0)).product();
        Ok(full - inner)
    }
}

#[derive(Debug, Clone)]
pub struct PolygonRegion {
    pub vertices: Vec<[f64; 2]>,
}

/// Points per axis of the midpoint rule used for polygon strip measures.
const POLYGON_QUADRATURE: usize = 2048;

impl Region for PolygonRegion {
    fn dim(&self) -> usize {
        2
    }
    fn contains(&self, x: &[f64]) -> bool {
        let v = &self.vertices;
        let mut inside = false;
        let mut j = v.len() - 1;
        for i in 0..v.len() {
            let (a, b) = (v[i], v[j]);
            if (a[1] > x[1]) != (b[1] > x[1]) && x[0] < (b[0] - a[0]) * (x[1] - a[1]) / (b[1] - a[1]) + a[0] {
                inside = !inside;
            }
            j = i;
        }
        inside
    }
    fn distance(&self, x: &[f64]) -> f64 {
        let v = &self.vertices;
        let mut best = f64::INFINITY;
        for i in 0..v.len() {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
            let s = (((x[0] - a[0]) * ex + (x[1] - a[1]) * ey) / (ex * ex + ey * ey)).clamp(0.0, 1.0);
            let (dx, dy) = (x[0] - a[0] - s * ex, x[1] - a[1] - s * ey);
            best = best.min((dx * dx + dy * dy).sqrt());
        }
        best
    }
    fn bbox(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; 2];
        let mut hi = vec![f64::NEG_INFINITY; 2];
        for p in &self.vertices {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        (lo, hi)
    }
    fn strip_measure(&self, eps: f64) -> Result<f64> {
        let (lo, hi) = self.bbox();
        let n = POLYGON_QUADRATURE;
        let (hx, hy) = ((hi[0] - lo[0]) / n as f64, (hi[1] - lo[1]) / n as f64);
        let count: usize = (0..n)
            .into_par_iter()
            .map(|j| {
                let y = lo[1] + (j as f64 + 0.5) * hy;
                (0..n)
                    .filter(|&i| {
                        let p = [lo[0] + (i as f64 + 0.5) * hx, y];
                        self.contains(&p) && self.distance(&p) <= eps
                    })
                    .count()
            })
            .sum();
        Ok(count as f64 * hx * hy)
    }
}

/// Union of the `h × h` cells around the inside lattice points; distances are
/// those of the lattice distance field at the nearest point.
#[derive(Debug, Clone)]
pub struct MaskRegion {
    pub mask: Arc<GridMask>,
}

impl MaskRegion {
    fn nearest(&self, x: &[f64]) -> Option<usize> {
        let m = &self.mask;
        let i = ((x[0] - m.origin[0]) / m.h).round();
        let j = ((x[1] - m.origin[1]) / m.h).round();
        if i < 0.0 || j < 0.0 || i >= m.nx as f64 || j >= m.ny as f64 {
            return None;
        }
        let k = j as usize * m.nx + i as usize;
        m.inside[k].then_some(k)
    }
}

impl Region for MaskRegion {
    fn dim(&self) -> usize {
        2
    }
    fn contains(&self, x: &[f64]) -> bool {
        self.nearest(x).is_some()
    }
    fn distance(&self, x: &[f64]) -> f64 {
        self.nearest(x).map_or(0.0, |k| (self.mask.distance[k] - 0.5 * self.mask.h).max(0.0))
    }
    fn bbox(&self) -> (Vec<f64>, Vec<f64>) {
        let m = &self.mask;
        let half = 0.5 * m.h;
        (
            vec![m.origin[0] - half, m.origin[1] - half],
            vec![
                m.origin[0] + (m.nx as f64 - 0.5) * m.h,
                m.origin[1] + (m.ny as f64 - 0.5) * m.h,
            ],
        )
    }
    fn strip_measure(&self, eps: f64) -> Result<f64> {
        Ok(strip_cells(&self.mask, eps)?.measure)
    }
}

impl MaskRegion {
    /// Strip membership on the lattice, matching [`strip_cells`].
    fn in_strip(&self, x: &[f64], eps: f64) -> bool {
        self.nearest(x)
            .is_some_and(|k| self.mask.distance[k] <= eps * (1.0 + 1e-12))
    }
}

/// Region for a domain description; masks and polygons in the plane, boxes of
/// any dimension, disks and 3-balls.
pub fn region_for(domain: &DomainSpec) -> Result<Box<dyn Region>> {
    Ok(match &domain.shape {
        Shape::Box { lengths } => Box::new(BoxRegion {
            lengths: lengths.clone(),
        }),
        Shape::Disk { radius } => Box::new(BallRegion {
            radius: *radius,
            dim: 2,
        }),
        Shape::Ball3 { radius } => Box::new(BallRegion {
            radius: *radius,
            dim: 3,
        }),
        Shape::Polygon { vertices } => Box::new(PolygonRegion {
            vertices: vertices.clone(),
        }),
        Shape::Mask { mask, .. } => Box::new(MaskRegion { mask: mask.clone() }),
        Shape::Product { .. } => {
            return Err(Error::InvalidInput("Monte Carlo is not available for product domains".into()))
        }
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Survival fractions at each of `times`, for paths of standard Brownian
/// motion started at `start`.
#[derive(Debug, Clone, Serialize)]
pub struct SurvivalCurve {
    pub times: Vec<f64>,
    pub survivors: Vec<u64>,
    pub n_paths: usize,
    pub estimates: Vec<Estimate>,
}

fn binomial(count: u64, n: usize) -> Estimate {
    let p = count as f64 / n as f64;
    Estimate {
        value: p,
        stderr: (p * (1.0 - p) / n as f64).sqrt(),
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_grid(times: &[f64], dt: f64) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidInput("empty time list".into()));
    }
    if times.iter().any(|t| !(*t > 0.0 && t.is_finite())) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("times must be positive and strictly increasing".into()));
    }
    if times[0] < 10.0 * dt * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!(
            "t = {} is below 10 dt = {}",
            times[0],
            10.0 * dt
        )));
    }
    Ok(())
}

/// Runs one path from `x` through `times`, returning how many of the times it
/// survives.
fn run_path(
    region: &dyn Region,
    x: &mut [f64],
    times: &[f64],
    dt: f64,
    bridge: bool,
    steps_rng: &mut ChaCha8Rng,
    bridge_rng: &mut ChaCha8Rng,
) -> usize {
    let mut prev_t = 0.0;
    let mut d_before = region.distance(x);
    for (n, &t) in times.iter().enumerate() {
        let steps = ((t - prev_t) / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = (t - prev_t) / steps as f64;
        let sd = h.sqrt();
        for _ in 0..steps {
            for v in x.iter_mut() {
                let z: f64 = steps_rng.sample(StandardNormal);
                *v += sd * z;
            }
            if !region.contains(x) {
                return n;
            }
            let d_after = region.distance(x);
            if bridge {
                let u: f64 = bridge_rng.random();
                if u < (-2.0 * d_before * d_after / h).exp() {
                    return n;
                }
            }
            d_before = d_after;
        }
        prev_t = t;
    }
    times.len()
}

/// Survival curve of standard Brownian motion started at `start`, killed on
/// leaving the region.
pub fn mc_survival(region: &dyn Region, start: &[f64], times: &[f64], config: &McConfig) -> Result<SurvivalCurve> {
    config.validate()?;
    if start.len() != region.dim() || !region.contains(start) {
        return Err(Error::InvalidInput("start point must be an inside point of matching dimension".into()));
    }
    let dt = config.dt.unwrap_or((region.distance(start) / 10.0).powi(2));
    check_grid(times, dt)?;
    let survived = |i: usize| {
        let mut x = start.to_vec();
        let mut a = stream_rng(config.seed, 3 * i as u64);
        let mut b = stream_rng(config.seed, 3 * i as u64 + 1);
        run_path(region, &mut x, times, dt, config.bridge_correction, &mut a, &mut b)
    };
    let survivors = tally(config.n_paths, times.len(), survived);
    Ok(SurvivalCurve {
        times: times.to_vec(),
        estimates: survivors.iter().map(|&c| binomial(c, config.n_paths)).collect(),
        survivors,
        n_paths: config.n_paths,
    })
}

/// `counts[j]` = number of paths surviving past `times[j]`.
fn tally(n_paths: usize, n_times: usize, survived: impl Fn(usize) -> usize + Sync) -> Vec<u64> {
    const CHUNK: usize = 1024;
    let n_chunks = n_paths.div_ceil(CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut hist = vec![0u64; n_times + 1];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_paths) {
                hist[survived(i)] += 1;
            }
            hist
        })
        .reduce(
            || vec![0u64; n_times + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
        .iter()
        .rev()
        .scan(0u64, |acc, &h| {
            *acc += h;
            Some(*acc)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .skip(1)
        .collect()
}

/// Minimum acceptable rejection-sampling efficiency for strip starts.
pub const MIN_EFFICIENCY: f64 = 1e-4;

fn sample_strip(region: &dyn Region, eps: f64, lo: &[f64], hi: &[f64], rng: &mut ChaCha8Rng, mask: Option<&MaskRegion>) -> Option<Vec<f64>> {
    let budget = (10.0 / MIN_EFFICIENCY) as usize;
    let mut x = vec![0.0; lo.len()];
    for _ in 0..budget {
        for (a, v) in x.iter_mut().enumerate() {
            *v = lo[a] + (hi[a] - lo[a]) * rng.random::<f64>();
        }
        let accept = match mask {
            Some(m) => m.in_strip(&x, eps),
            None => region.contains(&x) && region.distance(&x) <= eps,
        };
        if accept {
            return Some(x);
        }
    }
    None
}

/// `∫_Ω e^{tΔ} 1_{d(·,Ω^c) <= eps}`: strip measure times the survival
/// fraction of paths started uniformly in the strip. The semigroup `e^{tΔ}`
/// is Brownian motion run for time `2t`.
pub fn mc_heat_mass(domain: &DomainSpec, eps: f64, times: &[f64], config: &McConfig) -> Result<HeatCurve> {
    config.validate()?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let region = region_for(domain)?;
    let mask_region = match &domain.shape {
        Shape::Mask { mask, .. } => Some(MaskRegion { mask: mask.clone() }),
        _ => None,
    };
    let dt = config.step(eps);
    let bm_times: Vec<f64> = times.iter().map(|t| 2.0 * t).collect();
    check_grid(&bm_times, dt)?;
    let strip = region.strip_measure(eps)?;
    let (lo, hi) = region.bbox();
    let bbox_measure: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    if strip / bbox_measure < MIN_EFFICIENCY {
        return Err(Error::Sampling(format!(
            "strip fills {:.2e} of the bounding box, below {MIN_EFFICIENCY}",
            strip / bbox_measure
        )));
    }
    let failed = std::sync::atomic::AtomicBool::new(false);
    let survived = |i: usize| {
        let mut c = stream_rng(config.seed, 3 * i as u64 + 2);
        let Some(mut x) = sample_strip(region.as_ref(), eps, &lo, &hi, &mut c, mask_region.as_ref()) else {
            failed.store(true, std::sync::atomic::Ordering::Relaxed);
            return 0;
        };
        let mut a = stream_rng(config.seed, 3 * i as u64);
        let mut b = stream_rng(config.seed, 3 * i as u64 + 1);
        run_path(region.as_ref(), &mut x, &bm_times, dt, config.bridge_correction, &mut a, &mut b)
    };
    let survivors = tally(config.n_paths, times.len(), survived);
    if failed.into_inner() {
        return Err(Error::Sampling("rejection sampling exhausted its budget".into()));
    }
    let samples = times
        .iter()
        .zip(&survivors)
        .map(|(&t, &c)| {
            let e = binomial(c, config.n_paths);
            HeatSample {
                t,
                value: strip * e.value,
                stderr: strip * e.stderr,
            }
        })
        .collect();
    Ok(HeatCurve {
        samples,
        method: Method::MonteCarlo,
        truncation_bound: 0.0,
    })
}

/// `2Φ(eps/√t) − 1`, the survival probability of a half-line.
pub fn halfspace_survival(eps: f64, t: f64) -> f64 {
    2.0 * crate::special::normal_cdf(eps / t.sqrt()) - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat::{spectral_heat_mass, strip_coefficients_exact};
    use crate::spectra::disk_mean_carrying;

    fn cfg(n: usize, seed: u64, bridge: bool) -> McConfig {
        McConfig {
            n_paths: n,
            dt: None,
            seed,
            bridge_correction: bridge,
        }
    }

    #[test]
    fn halfspace_reflection() {
        let c = mc_survival(&HalfSpace, &[0.1], &[0.0025, 0.01, 0.04], &cfg(100_000, 1, true)).unwrap();
        for (t, e) in c.times.iter().zip(&c.estimates) {
            let exact = halfspace_survival(0.1, *t);
            assert!((e.value - exact).abs() <= 3.0 * e.stderr, "t={t}: {} vs {exact}", e.value);
        }
        assert!((halfspace_survival(0.1, 0.01) - 0.682_689_49).abs() < 1e-8);
    }

    #[test]
    fn survival_is_monotone_and_tends_to_one() {
        let times: Vec<f64> = (1..=20).map(|i| 5e-4 * i as f64).collect();
        let c = mc_survival(&BallRegion { radius: 1.0, dim: 2 }, &[0.95, 0.0], &times, &cfg(2000, 3, true)).unwrap();
        assert!(c.survivors.windows(2).all(|w| w[1] <= w[0]));
        let early = mc_survival(&HalfSpace, &[0.1], &[1e-5], &McConfig { dt: Some(1e-7), ..cfg(2000, 3, true) }).unwrap();
        assert!(early.estimates[0].value > 0.999);
    }

    #[test]
    fn bridge_never_increases_survival() {
        let times = [0.005, 0.01, 0.02];
        let region = BoxRegion { lengths: vec![1.0, 1.0] };
        for seed in 0..3 {
            let with = mc_survival(&region, &[0.1, 0.5], &times, &cfg(2000, seed, true)).unwrap();
            let without = mc_survival(&region, &[0.1, 0.5], &times, &cfg(2000, seed, false)).unwrap();
            for (a, b) in with.survivors.iter().zip(&without.survivors) {
                assert!(a <= b);
            }
        }
    }

    #[test]
    fn coarse_step_and_small_sample_rejected() {
        let c = McConfig { dt: Some(0.01), ..cfg(1000, 0, true) };
        assert!(matches!(mc_survival(&HalfSpace, &[0.1], &[0.05], &c), Err(Error::Resolution(_))));
        assert!(mc_survival(&HalfSpace, &[0.1], &[0.05], &cfg(10, 0, true)).is_err());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_survival(&HalfSpace, &[0.1], &[0.01], &cfg(5000, 9, true)).unwrap().survivors)
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn disk_heat_mass_matches_spectral() {
        let dom = DomainSpec::disk(1.0).unwrap();
        let eps = 0.05;
        let t = 0.0025;
        let mc = mc_heat_mass(&dom, eps, &[t], &cfg(100_000, 5, true)).unwrap();
        let spec = disk_mean_carrying(1.0, 400).unwrap();
        let strip = strip_coefficients_exact(&spec, eps).unwrap();
        let sp = spectral_heat_mass(&strip, &spec, t).unwrap();
        let s = mc.samples[0];
        assert!((s.value - sp.value).abs() <= 3.0 * s.stderr, "{} ± {} vs {}", s.value, s.stderr, sp.value);
    }

    #[test]
    fn whole_square_follows_boundary_loss() {
        let dom = DomainSpec::boxed(&[1.0, 1.0]).unwrap();
        let t = 1e-4;
        let c = McConfig { dt: Some(2e-6), ..cfg(20_000, 2, true) };
        let mc = mc_heat_mass(&dom, 1.0, &[t], &c).unwrap();
        let expected = 1.0 - 2.0 / PI.sqrt() * 4.0 * t.sqrt();
        let s = mc.samples[0];
        assert!((s.value - expected).abs() <= 3.0 * s.stderr + 1e-3, "{} vs {expected}", s.value);
    }

    #[test]
    fn polygon_and_mask_strips() {
        let sq = PolygonRegion {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        };
        assert!((sq.strip_measure(0.1).unwrap() - 0.36).abs() < 2e-3);
        assert!(sq.contains(&[0.5, 0.5]) && !sq.contains(&[1.5, 0.5]));
        assert!((sq.distance(&[0.2, 0.5]) - 0.2).abs() < 1e-15);
        let mask = crate::grid::rasterize(&DomainSpec::boxed(&[1.0, 1.0]).unwrap(), 1.0 / 32.0).unwrap();
        let dom = DomainSpec::mask(Arc::new(mask));
        let mc = mc_heat_mass(&dom, 0.2, &[0.01], &cfg(2000, 1, true)).unwrap();
        assert!(mc.samples[0].value > 0.0);
    }
}
