//! Exact Dirichlet spectra on boxes, the disk and the 3D ball, with the mean
//! value of every normalised eigenfunction, plus tensor composition with an
//! interval.
//!
//! Every spectrum is sorted by eigenvalue; eigenvalues that agree to a relative
//! `1e-12` are treated as ties and ordered lexicographically by label, so the
//! output is reproducible bit for bit.

use std::f64::consts::PI;
use std::ops::Range;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridMask;
use crate::special;

/// Relative gap below which two exact eigenvalues count as equal.
pub const EXACT_TIE_TOL: f64 = 1e-12;
/// Default cap on the number of candidate modes generated during enumeration.
pub const DEFAULT_BUDGET: usize = 20_000_000;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Box {
        lengths: Vec<f64>,
    },
    Disk {
        radius: f64,
    },
    Ball3 {
        radius: f64,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    Mask {
        nx: usize,
        ny: usize,
        h: f64,
        #[serde(skip)]
        mask: Arc<GridMask>,
    },
    /// `base × [0, length]`
    Product {
        base: std::boxed::Box<Shape>,
        length: f64,
    },
}

/// A domain together with its volume `|Ω|` and boundary measure `H^{d-1}(∂Ω)`.
#[derive(Debug, Clone, Serialize)]
pub struct DomainSpec {
    pub shape: Shape,
    pub volume: f64,
    pub perimeter: f64,
    pub dim: usize,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive, got {v}")))
    }
}

impl DomainSpec {
    pub fn boxed(lengths: &[f64]) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::InvalidInput("box needs at least one side".into()));
        }
        for &l in lengths {
            positive("box side", l)?;
        }
        let volume: f64 = lengths.iter().product();
        let perimeter = if lengths.len() == 1 {
            2.0
        } else {
            2.0 * (0..lengths.len())
                .map(|i| {
                    lengths
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, l)| l)
                        .product::<f64>()
                })
                .sum::<f64>()
        };
        Ok(Self {
            shape: Shape::Box {
                lengths: lengths.to_vec(),
            },
            volume,
            perimeter,
            dim: lengths.len(),
        })
    }

    pub fn disk(radius: f64) -> Result<Self> {
        positive("radius", radius)?;
        Ok(Self {
            shape: Shape::Disk { radius },
            volume: PI * radius * radius,
            perimeter: 2.0 * PI * radius,
            dim: 2,
        })
    }

    pub fn ball3(radius: f64) -> Result<Self> {
        positive("radius", radius)?;
        Ok(Self {
            shape: Shape::Ball3 { radius },
            volume: 4.0 / 3.0 * PI * radius.powi(3),
            perimeter: 4.0 * PI * radius * radius,
            dim: 3,
        })
    }

    /// A simple polygon; orientation is irrelevant.
    pub fn polygon(vertices: &[[f64; 2]]) -> Result<Self> {
        crate::grid::validate_polygon(vertices)?;
        let n = vertices.len();
        let mut area2 = 0.0;
        let mut perim = 0.0;
        for i in 0..n {
            let p = vertices[i];
            let q = vertices[(i + 1) % n];
            area2 += p[0] * q[1] - q[0] * p[1];
            perim += ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
        }
        Ok(Self {
            shape: Shape::Polygon {
                vertices: vertices.to_vec(),
            },
            volume: 0.5 * area2.abs(),
            perimeter: perim,
            dim: 2,
        })
    }

    /// A rasterised domain. Volume is the lattice measure `count · h²` and the
    /// perimeter is the length of the lattice boundary.
    pub fn mask(mask: Arc<GridMask>) -> Self {
        Self {
            volume: mask.measure(),
            perimeter: mask.lattice_perimeter(),
            dim: 2,
            shape: Shape::Mask {
                nx: mask.nx,
                ny: mask.ny,
                h: mask.h,
                mask,
            },
        }
    }

    fn product(base: &DomainSpec, length: f64) -> Self {
        Self {
            shape: Shape::Product {
                base: std::boxed::Box::new(base.shape.clone()),
                length,
            },
            volume: base.volume * length,
            perimeter: base.perimeter * length + 2.0 * base.volume,
            dim: base.dim + 1,
        }
    }

    /// Largest distance from an interior point to the boundary, where known.
    pub fn inradius(&self) -> Option<f64> {
        match &self.shape {
            Shape::Box { lengths } => lengths.iter().cloned().reduce(f64::min).map(|l| l / 2.0),
            Shape::Disk { radius } | Shape::Ball3 { radius } => Some(*radius),
            Shape::Mask { mask, .. } => Some(mask.inradius()),
            _ => None,
        }
    }
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    PI.powf(half) / special::gamma(half + 1.0)
}

/// Leading Weyl constant `c` in `λ_k ≈ c k^{2/d}`: `4π² / (ω_d |Ω|)^{2/d}`.
pub fn weyl_constant(d: usize, volume: f64) -> f64 {
    4.0 * PI * PI / (unit_ball_volume(d) * volume).powf(2.0 / d as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Cos,
    Sin,
}

/// Symmetry label of a mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum ModeLabel {
    /// Box mode `∏ sin(a_i π x_i / L_i)`.
    Box(Vec<u32>),
    /// Disk mode `J_m(j_{m,k} r / R) · {cos, sin}(m θ)`.
    Disk { m: u32, k: u32, branch: Branch },
    /// Ball mode `j_l(z_{l,k} r / R) · Y_l^m`.
    Ball3 { l: u32, k: u32, m: i32 },
    /// Numerical mode, by position in the solver output.
    Grid { index: usize },
    /// Product of a base mode with the interval mode `sin(a π t / L)`.
    Tensor {
        base: std::boxed::Box<ModeLabel>,
        a: u32,
    },
}

impl ModeLabel {
    fn key(&self, out: &mut Vec<i64>) {
        match self {
            ModeLabel::Box(a) => out.extend(a.iter().map(|&v| v as i64)),
            ModeLabel::Disk { m, k, branch } => {
                out.extend([*m as i64, *k as i64, *branch as i64]);
            }
            ModeLabel::Ball3 { l, k, m } => out.extend([*l as i64, *k as i64, *m as i64]),
            ModeLabel::Grid { index } => out.push(*index as i64),
            ModeLabel::Tensor { base, a } => {
                base.key(out);
                out.push(*a as i64);
            }
        }
    }

    pub fn sort_key(&self) -> Vec<i64> {
        let mut v = Vec::with_capacity(4);
        self.key(&mut v);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Exact,
    Grid,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenMode {
    pub lambda: f64,
    /// `∫_Ω φ dx` for the L²-normalised mode, sign chosen nonnegative.
    pub mean: f64,
    pub label: ModeLabel,
    pub source: Source,
    pub residual: f64,
}

/// Whether a spectrum lists every mode up to its largest eigenvalue, or only
/// the symmetry sector that can carry a nonzero mean (all omitted modes below
/// the largest eigenvalue then have mean exactly zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Full,
    MeanCarrying,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub domain: DomainSpec,
    pub modes: Vec<EigenMode>,
    /// Contiguous index ranges of (numerically) equal eigenvalues.
    pub clusters: Vec<Range<usize>>,
    pub cluster_tol: f64,
    pub sector: Sector,
}

impl Spectrum {
    /// Sorts `modes`, breaking ties (relative gap `<= tie_tol`) by label, and
    /// groups them into clusters with relative gap `<= cluster_tol`.
    pub fn assemble(
        domain: DomainSpec,
        mut modes: Vec<EigenMode>,
        tie_tol: f64,
        cluster_tol: f64,
        sector: Sector,
    ) -> Self {
        sort_modes(&mut modes, tie_tol);
        let clusters = cluster_ranges(modes.iter().map(|m| m.lambda), cluster_tol);
        Self {
            domain,
            modes,
            clusters,
            cluster_tol,
            sector,
        }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.mean).collect()
    }

    pub fn max_lambda(&self) -> f64 {
        self.modes.last().map_or(0.0, |m| m.lambda)
    }

    /// Cluster id of every mode.
    pub fn cluster_ids(&self) -> Vec<usize> {
        let mut ids = vec![0; self.modes.len()];
        for (c, r) in self.clusters.iter().enumerate() {
            for i in r.clone() {
                ids[i] = c;
            }
        }
        ids
    }

    /// The first `n` modes, clusters recomputed.
    pub fn truncated(&self, n: usize) -> Spectrum {
        let modes: Vec<EigenMode> = self.modes.iter().take(n).cloned().collect();
        let clusters = cluster_ranges(modes.iter().map(|m| m.lambda), self.cluster_tol);
        Spectrum {
            domain: self.domain.clone(),
            modes,
            clusters,
            cluster_tol: self.cluster_tol,
            sector: self.sector,
        }
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (b - a).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn sort_modes(modes: &mut [EigenMode], tie_tol: f64) {
    modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let mut start = 0;
    for i in 1..=modes.len() {
        if i == modes.len() || rel_gap(modes[i - 1].lambda, modes[i].lambda) > tie_tol {
            if i - start > 1 {
                modes[start..i].sort_by_key(|m| m.label.sort_key());
            }
            start = i;
        }
    }
}

pub(crate) fn cluster_ranges(lambdas: impl Iterator<Item = f64>, tol: f64) -> Vec<Range<usize>> {
    let values: Vec<f64> = lambdas.collect();
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || rel_gap(values[i - 1], values[i]) > tol {
            out.push(start..i);
            start = i;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Closed-form mean values
// ---------------------------------------------------------------------------

/// `∫_0^L √(2/L) sin(aπx/L) dx`.
pub fn interval_mode_mean(length: f64, a: u32) -> f64 {
    if a % 2 == 0 {
        0.0
    } else {
        2.0 * (2.0 * length).sqrt() / (a as f64 * PI)
    }
}

/// `∫_ε^{L-ε} √(2/L) sin(aπx/L) dx`, zero when `2ε >= L`.
pub fn interval_mode_inner_integral(length: f64, a: u32, eps: f64) -> f64 {
    if 2.0 * eps >= length || a % 2 == 0 {
        return 0.0;
    }
    let theta = a as f64 * PI * eps / length;
    (2.0 / length).sqrt() * length / (a as f64 * PI) * 2.0 * theta.cos()
}

pub fn box_mode_mean(lengths: &[f64], a: &[u32]) -> f64 {
    lengths
        .iter()
        .zip(a)
        .map(|(&l, &ai)| interval_mode_mean(l, ai))
        .product()
}

fn box_lambda(lengths: &[f64], a: &[u32]) -> f64 {
    let equal = lengths.iter().all(|&l| l == lengths[0]);
    if equal {
        let s: u64 = a.iter().map(|&v| v as u64 * v as u64).sum();
        PI * PI * s as f64 / (lengths[0] * lengths[0])
    } else {
        let mut terms: Vec<f64> = lengths
            .iter()
            .zip(a)
            .map(|(&l, &ai)| (ai as f64 / l).powi(2))
            .collect();
        terms.sort_by(f64::total_cmp);
        PI * PI * terms.iter().sum::<f64>()
    }
}

/// Mean of the radial disk mode `J_0(z r/R)`, normalised: `2√π R / z`.
pub fn disk_radial_mean(radius: f64, zero: f64) -> f64 {
    2.0 * PI.sqrt() * radius / zero
}

/// Mean of the radial ball mode `sin(kπr/R)/r`, normalised: `4 R^{3/2} / (√(2π) k)`.
pub fn ball3_radial_mean(radius: f64, k: u32) -> f64 {
    4.0 * radius.powf(1.5) / ((2.0 * PI).sqrt() * k as f64)
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

fn check_budget(count: usize, budget: usize, what: &str) -> Result<()> {
    if count > budget {
        Err(Error::Budget(format!(
            "{what}: more than {budget} candidate modes"
        )))
    } else {
        Ok(())
    }
}

/// Leading-order Weyl estimate of `λ_n` inflated by `1.25`.
fn initial_cut(d: usize, volume: f64, n: usize, lambda_floor: f64) -> f64 {
    1.25 * weyl_constant(d, volume) * (n as f64).powf(2.0 / d as f64) + 2.0 * lambda_floor
}

/// The `n` smallest Dirichlet modes of the box `∏ [0, L_i]`, `1 <= d <= 4`.
pub fn enumerate_box(lengths: &[f64], n: usize) -> Result<Spectrum> {
    enumerate_box_with_budget(lengths, n, DEFAULT_BUDGET)
}

pub fn enumerate_box_with_budget(lengths: &[f64], n: usize, budget: usize) -> Result<Spectrum> {
    let domain = DomainSpec::boxed(lengths)?;
    if lengths.len() > 4 {
        return Err(Error::InvalidInput("boxes are limited to d <= 4".into()));
    }
    if n == 0 {
        return Err(Error::InvalidInput("n must be >= 1".into()));
    }
    let floor = box_lambda(lengths, &vec![1; lengths.len()]);
    let mut cut = initial_cut(lengths.len(), domain.volume, n, floor);
    loop {
        let tuples = box_tuples_below(lengths, cut, budget, false)?;
        if tuples.len() >= n {
            let modes = tuples
                .into_iter()
                .map(|a| box_mode(lengths, a))
                .collect::<Vec<_>>();
            let mut spec = Spectrum::assemble(domain, modes, EXACT_TIE_TOL, EXACT_TIE_TOL, Sector::Full);
            spec.modes.truncate(n);
            spec.clusters = cluster_ranges(spec.modes.iter().map(|m| m.lambda), EXACT_TIE_TOL);
            return Ok(spec);
        }
        cut *= 1.5;
    }
}

/// All odd-index box modes (the only ones with nonzero mean) with `λ <= lambda_max`.
pub fn box_mean_carrying(lengths: &[f64], lambda_max: f64) -> Result<Spectrum> {
    let domain = DomainSpec::boxed(lengths)?;
    let tuples = box_tuples_below(lengths, lambda_max, DEFAULT_BUDGET, true)?;
    let modes = tuples.into_iter().map(|a| box_mode(lengths, a)).collect();
    Ok(Spectrum::assemble(
        domain,
        modes,
        EXACT_TIE_TOL,
        EXACT_TIE_TOL,
        Sector::MeanCarrying,
    ))
}

fn box_mode(lengths: &[f64], a: Vec<u32>) -> EigenMode {
    EigenMode {
        lambda: box_lambda(lengths, &a),
        mean: box_mode_mean(lengths, &a),
        label: ModeLabel::Box(a),
        source: Source::Exact,
        residual: 0.0,
    }
}

fn box_tuples_below(lengths: &[f64], cut: f64, budget: usize, odd_only: bool) -> Result<Vec<Vec<u32>>> {
    let d = lengths.len();
    let limit = cut / (PI * PI);
    // smallest possible contribution of dims i.. (all indices 1)
    let mut tail_min = vec![0.0; d + 1];
    for i in (0..d).rev() {
        tail_min[i] = tail_min[i + 1] + (1.0 / lengths[i]).powi(2);
    }
    let step = if odd_only { 2 } else { 1 };
    let mut out = Vec::new();
    let mut current = vec![0u32; d];
    fn rec(
        i: usize,
        used: f64,
        lengths: &[f64],
        limit: f64,
        tail_min: &[f64],
        step: u32,
        current: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
        budget: usize,
    ) -> Result<()> {
        let d = lengths.len();
        if i == d {
            out.push(current.clone());
            return check_budget(out.len(), budget, "box enumeration");
        }
        let mut a = 1u32;
        loop {
            let t = (a as f64 / lengths[i]).powi(2);
            if used + t + tail_min[i + 1] > limit * (1.0 + 1e-12) {
                break;
            }
            current[i] = a;
            rec(i + 1, used + t, lengths, limit, tail_min, step, current, out, budget)?;
            a += step;
        }
        Ok(())
    }
    rec(0, 0.0, lengths, limit, &tail_min, step, &mut current, &mut out, budget)?;
    // the loose bound above admits values marginally over the cut
    out.retain(|a| box_lambda(lengths, a) <= cut);
    Ok(out)
}

/// The `n` smallest Dirichlet modes of the disk of radius `R`. Each angular
/// frequency `m >= 1` appears twice (cosine and sine branch).
pub fn enumerate_disk(radius: f64, n: usize) -> Result<Spectrum> {
    enumerate_disk_with_budget(radius, n, DEFAULT_BUDGET)
}

pub fn enumerate_disk_with_budget(radius: f64, n: usize, budget: usize) -> Result<Spectrum> {
    let domain = DomainSpec::disk(radius)?;
    if n == 0 {
        return Err(Error::InvalidInput("n must be >= 1".into()));
    }
    let floor = (2.404_825_557_695_773 / radius).powi(2);
    let mut cut = initial_cut(2, domain.volume, n, floor);
    loop {
        let x_max = radius * cut.sqrt();
        let mut modes = Vec::new();
        let mut m = 0usize;
        while (m as f64) < x_max {
            let zeros = special::bessel_zeros_below(m, x_max)?;
            if zeros.is_empty() {
                break;
            }
            for (k, z) in zeros.iter().enumerate() {
                let lambda = (z / radius).powi(2);
                let k = k as u32 + 1;
                if m == 0 {
                    modes.push(EigenMode {
                        lambda,
                        mean: disk_radial_mean(radius, *z),
                        label: ModeLabel::Disk {
                            m: 0,
                            k,
                            branch: Branch::Cos,
                        },
                        source: Source::Exact,
                        residual: 0.0,
                    });
                } else {
                    for branch in [Branch::Cos, Branch::Sin] {
                        modes.push(EigenMode {
                            lambda,
                            mean: 0.0,
                            label: ModeLabel::Disk {
                                m: m as u32,
                                k,
                                branch,
                            },
                            source: Source::Exact,
                            residual: 0.0,
                        });
                    }
                }
            }
            check_budget(modes.len(), budget, "disk enumeration")?;
            m += 1;
        }
        if modes.len() >= n {
            let mut spec = Spectrum::assemble(domain, modes, EXACT_TIE_TOL, EXACT_TIE_TOL, Sector::Full);
            spec.modes.truncate(n);
            spec.clusters = cluster_ranges(spec.modes.iter().map(|m| m.lambda), EXACT_TIE_TOL);
            return Ok(spec);
        }
        cut *= 1.3;
    }
}

/// The first `count` radial disk modes, the only ones with nonzero mean.
pub fn disk_mean_carrying(radius: f64, count: usize) -> Result<Spectrum> {
    let domain = DomainSpec::disk(radius)?;
    let x_max = (count as f64 + 1.0) * PI;
    let zeros = special::bessel_zeros_below(0, x_max)?;
    let modes = zeros
        .iter()
        .take(count)
        .enumerate()
        .map(|(k, &z)| EigenMode {
            lambda: (z / radius).powi(2),
            mean: disk_radial_mean(radius, z),
            label: ModeLabel::Disk {
                m: 0,
                k: k as u32 + 1,
                branch: Branch::Cos,
            },
            source: Source::Exact,
            residual: 0.0,
        })
        .collect();
    Ok(Spectrum::assemble(
        domain,
        modes,
        EXACT_TIE_TOL,
        EXACT_TIE_TOL,
        Sector::MeanCarrying,
    ))
}

/// The `n` smallest Dirichlet modes of the ball of radius `R` in `R^3`; each
/// `(l, k)` carries `2l + 1` modes.
pub fn enumerate_ball3(radius: f64, n: usize) -> Result<Spectrum> {
    enumerate_ball3_with_budget(radius, n, DEFAULT_BUDGET)
}

pub fn enumerate_ball3_with_budget(radius: f64, n: usize, budget: usize) -> Result<Spectrum> {
    let domain = DomainSpec::ball3(radius)?;
    if n == 0 {
        return Err(Error::InvalidInput("n must be >= 1".into()));
    }
    let floor = (PI / radius).powi(2);
    let mut cut = initial_cut(3, domain.volume, n, floor);
    loop {
        let x_max = radius * cut.sqrt();
        let mut modes = Vec::new();
        let mut l = 0usize;
        while (l as f64) < x_max {
            let zeros = special::sph_bessel_zeros_below(l, x_max)?;
            if zeros.is_empty() {
                break;
            }
            for (k, z) in zeros.iter().enumerate() {
                let lambda = (z / radius).powi(2);
                let k = k as u32 + 1;
                for m in -(l as i32)..=(l as i32) {
                    let mean = if l == 0 {
                        ball3_radial_mean(radius, k)
                    } else {
                        0.0
                    };
                    modes.push(EigenMode {
                        lambda,
                        mean,
                        label: ModeLabel::Ball3 { l: l as u32, k, m },
                        source: Source::Exact,
                        residual: 0.0,
                    });
                }
            }
            check_budget(modes.len(), budget, "ball enumeration")?;
            l += 1;
        }
        if modes.len() >= n {
            let mut spec = Spectrum::assemble(domain, modes, EXACT_TIE_TOL, EXACT_TIE_TOL, Sector::Full);
            spec.modes.truncate(n);
            spec.clusters = cluster_ranges(spec.modes.iter().map(|m| m.lambda), EXACT_TIE_TOL);
            return Ok(spec);
        }
        cut *= 1.3;
    }
}

/// The first `count` radial ball modes `λ = (kπ/R)²`.
pub fn ball3_mean_carrying(radius: f64, count: usize) -> Result<Spectrum> {
    let domain = DomainSpec::ball3(radius)?;
    let modes = (1..=count as u32)
        .map(|k| EigenMode {
            lambda: (k as f64 * PI / radius).powi(2),
            mean: ball3_radial_mean(radius, k),
            label: ModeLabel::Ball3 { l: 0, k, m: 0 },
            source: Source::Exact,
            residual: 0.0,
        })
        .collect();
    Ok(Spectrum::assemble(
        domain,
        modes,
        EXACT_TIE_TOL,
        EXACT_TIE_TOL,
        Sector::MeanCarrying,
    ))
}

/// Spectrum of `base × [0, L]`: modes `λ_base + (aπ/L)²` with mean
/// `mean_base · mean_interval(a)`. Fails when `base` does not reach far enough
/// to make the first `n` composed modes complete.
pub fn tensor_compose(base: &Spectrum, length: f64, n: usize) -> Result<Spectrum> {
    positive("interval length", length)?;
    if base.sector != Sector::Full {
        return Err(Error::InvalidInput(
            "tensor composition needs a full base spectrum".into(),
        ));
    }
    if base.is_empty() || n == 0 {
        return Err(Error::InvalidInput("empty base spectrum or n = 0".into()));
    }
    let step = (PI / length).powi(2);
    // base is complete strictly below its largest eigenvalue
    let bound = base.max_lambda() + step;
    let mut modes = Vec::new();
    for bm in &base.modes {
        let mut a = 1u32;
        loop {
            let lambda = bm.lambda + (a as f64 * PI / length).powi(2);
            if lambda >= bound {
                break;
            }
            let label = match &bm.label {
                ModeLabel::Box(v) => {
                    let mut v = v.clone();
                    v.push(a);
                    ModeLabel::Box(v)
                }
                other => ModeLabel::Tensor {
                    base: std::boxed::Box::new(other.clone()),
                    a,
                },
            };
            modes.push(EigenMode {
                lambda,
                mean: bm.mean * interval_mode_mean(length, a),
                label,
                source: bm.source,
                residual: bm.residual,
            });
            a += 1;
        }
    }
    if modes.len() < n {
        return Err(Error::IncompleteBase(format!(
            "base reaches λ = {} which yields only {} complete composed modes, {} requested",
            base.max_lambda(),
            modes.len(),
            n
        )));
    }
    let domain = match &base.domain.shape {
        Shape::Box { lengths } => {
            let mut l = lengths.clone();
            l.push(length);
            DomainSpec::boxed(&l)?
        }
        _ => DomainSpec::product(&base.domain, length),
    };
    let mut spec = Spectrum::assemble(domain, modes, EXACT_TIE_TOL, base.cluster_tol, Sector::Full);
    spec.modes.truncate(n);
    spec.clusters = cluster_ranges(spec.modes.iter().map(|m| m.lambda), spec.cluster_tol);
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    fn label_of(spec: &Spectrum, i: usize) -> Vec<i64> {
        spec.modes[i].label.sort_key()
    }

    #[test]
    fn unit_square_ground_state_and_parity() {
        let s = enumerate_box(&[1.0, 1.0], 10).unwrap();
        assert!((s.modes[0].lambda - 2.0 * PI * PI).abs() < 1e-12);
        // 2D tensor quadrature of 2 sin(πx) sin(πy)
        let q1 = simpson(|x| (2.0f64).sqrt() * (PI * x).sin(), 0.0, 1.0, 2000);
        assert!((s.modes[0].mean - q1 * q1).abs() < 1e-10);
        assert!((s.modes[0].mean - 8.0 / (PI * PI)).abs() < 1e-14);
        let order: Vec<Vec<i64>> = (0..6).map(|i| label_of(&s, i)).collect();
        assert_eq!(
            order,
            vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2], vec![1, 3], vec![3, 1]]
        );
        assert_eq!(s.modes[1].mean, 0.0);
        assert_eq!(s.clusters[1], 1..3);
    }

    #[test]
    fn cube_ground_state() {
        let s = enumerate_box(&[1.0, 1.0, 1.0], 1).unwrap();
        assert!((s.modes[0].lambda - 3.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn square_nonzero_fraction() {
        let s = enumerate_box(&[1.0, 1.0], 20_000).unwrap();
        let nz = s.modes.iter().filter(|m| m.mean != 0.0).count();
        let frac = nz as f64 / 20_000.0;
        assert!((0.23..=0.27).contains(&frac), "{frac}");
    }

    #[test]
    fn box_enumeration_is_complete() {
        for lengths in [vec![1.0, 1.0], vec![1.0, 2.3], vec![1.0, 1.0, 1.0], vec![0.7, 1.1, 1.3, 0.9]] {
            let n = 400;
            let s = enumerate_box(&lengths, n).unwrap();
            let top = s.max_lambda();
            // brute force: every tuple with λ <= top
            let mut count = 0usize;
            let d = lengths.len();
            let amax = 80u32;
            let mut idx = vec![1u32; d];
            loop {
                if box_lambda(&lengths, &idx) <= top * (1.0 - 1e-12) {
                    count += 1;
                }
                let mut i = 0;
                while i < d {
                    idx[i] += 1;
                    if idx[i] <= amax {
                        break;
                    }
                    idx[i] = 1;
                    i += 1;
                }
                if i == d {
                    break;
                }
            }
            let below = s.modes.iter().filter(|m| m.lambda <= top * (1.0 - 1e-12)).count();
            assert_eq!(count, below, "{lengths:?}");
        }
    }

    #[test]
    fn rerun_with_larger_cut_preserves_prefix() {
        let small = enumerate_box(&[1.0, 1.7], 500).unwrap();
        let large = enumerate_box(&[1.0, 1.7], 550).unwrap();
        for i in 0..500 {
            assert_eq!(small.modes[i].label, large.modes[i].label);
            assert_eq!(small.modes[i].lambda, large.modes[i].lambda);
        }
        let small = enumerate_disk(1.0, 300).unwrap();
        let large = enumerate_disk(1.0, 330).unwrap();
        for i in 0..300 {
            assert_eq!(small.modes[i].label, large.modes[i].label);
        }
        let small = enumerate_ball3(1.0, 300).unwrap();
        let large = enumerate_ball3(1.0, 330).unwrap();
        for i in 0..300 {
            assert_eq!(small.modes[i].label, large.modes[i].label);
        }
    }

    #[test]
    fn disk_values_and_means() {
        let s = enumerate_disk(1.0, 50).unwrap();
        let z01 = special::bessel_zero(0, 1).unwrap();
        assert!((s.modes[0].lambda - z01 * z01).abs() < 1e-10);
        assert!((s.modes[0].lambda - 5.78319).abs() < 1e-5);
        assert!((s.modes[0].mean - 1.474_081).abs() < 1e-5);
        for m in &s.modes {
            if let ModeLabel::Disk { m: order, .. } = m.label {
                assert_eq!(order == 0, m.mean != 0.0);
            }
        }
        // second and third modes: the m=1 pair
        assert_eq!(s.clusters[1], 1..3);
    }

    #[test]
    fn disk_radial_mean_matches_quadrature() {
        for (k, &radius) in [(1u32, 1.0), (2, 1.0), (5, 1.0), (3, 0.7)].iter().map(|(k, r)| (*k, r)) {
            let z = special::bessel_zero(0, k).unwrap();
            let j1 = special::bessel_j(1, z).unwrap();
            let norm2 = simpson(
                |r| special::bessel_j(0, z * r / radius).unwrap().powi(2) * 2.0 * PI * r,
                0.0,
                radius,
                4000,
            );
            assert!((norm2 - PI * radius * radius * j1 * j1).abs() < 1e-10);
            let mean = simpson(
                |r| special::bessel_j(0, z * r / radius).unwrap() * 2.0 * PI * r,
                0.0,
                radius,
                4000,
            ) / norm2.sqrt();
            let closed = disk_radial_mean(radius, z);
            assert!((mean.abs() - closed).abs() < 1e-8 * closed, "k={k}");
        }
    }

    #[test]
    fn ball_values_and_means() {
        let s = enumerate_ball3(1.0, 200).unwrap();
        assert!((s.modes[0].lambda - PI * PI).abs() < 1e-12);
        for m in &s.modes {
            if let ModeLabel::Ball3 { l, k, .. } = m.label {
                if l == 0 {
                    assert!((m.mean - 1.595_769_121_605_731 / k as f64).abs() < 1e-12);
                } else {
                    assert_eq!(m.mean, 0.0);
                }
            }
        }
        for k in 1..6u32 {
            let a = k as f64 * PI;
            let norm2 = simpson(|r| (a * r).sin().powi(2) * 4.0 * PI, 0.0, 1.0, 4000);
            let mean = simpson(|r| (a * r).sin() * r * 4.0 * PI, 0.0, 1.0, 4000) / norm2.sqrt();
            assert!((mean.abs() - ball3_radial_mean(1.0, k)).abs() < 1e-8);
        }
        // p-mode multiplicity
        let p = s.modes.iter().filter(|m| matches!(m.label, ModeLabel::Ball3 { l: 1, k: 1, .. })).count();
        assert_eq!(p, 3);
    }

    #[test]
    fn box_means_match_tensor_quadrature_and_normalisation() {
        let lengths = [1.0, 1.6];
        let s = enumerate_box(&lengths, 60).unwrap();
        for m in s.modes.iter().step_by(3) {
            let ModeLabel::Box(a) = &m.label else { panic!() };
            let mut mean = 1.0;
            let mut norm = 1.0;
            for (l, ai) in lengths.iter().zip(a) {
                let f = |x: f64| (2.0 / l).sqrt() * (*ai as f64 * PI * x / l).sin();
                mean *= simpson(f, 0.0, *l, 4000);
                norm *= simpson(|x| f(x) * f(x), 0.0, *l, 4000);
            }
            assert!((norm - 1.0).abs() < 1e-8);
            assert!((mean - m.mean).abs() <= 1e-8 * m.mean.abs().max(1e-300) + 1e-13);
        }
    }

    #[test]
    fn weyl_ratio_close_to_one() {
        for (spec, d) in [
            (enumerate_box(&[1.0, 1.0], 20_000).unwrap(), 2usize),
            (enumerate_disk(1.0, 5_000).unwrap(), 2),
            (enumerate_ball3(1.0, 60_000).unwrap(), 3),
        ] {
            let lam = spec.max_lambda();
            let n = spec.len() as f64;
            let hd = d as f64 / 2.0;
            let ratio = n * (4.0 * PI).powf(hd) * special::gamma(hd + 1.0) / (spec.domain.volume * lam.powf(hd));
            assert!((ratio - 1.0).abs() < 0.05, "d={d} ratio={ratio}");
        }
    }

    #[test]
    fn tensor_of_interval_recovers_square() {
        let base = enumerate_box(&[1.0], 200).unwrap();
        let comp = tensor_compose(&base, 1.0, 300).unwrap();
        let direct = enumerate_box(&[1.0, 1.0], 300).unwrap();
        for (a, b) in comp.modes.iter().zip(&direct.modes) {
            assert_eq!(a.label, b.label);
            assert!((a.lambda - b.lambda).abs() <= 1e-12 * b.lambda);
            assert!((a.mean - b.mean).abs() <= 1e-14);
        }
        for m in &comp.modes {
            let ModeLabel::Box(a) = &m.label else { panic!() };
            if a[1] % 2 == 0 {
                assert_eq!(m.mean, 0.0);
            }
        }
    }

    #[test]
    fn tensor_of_disk_half_zero() {
        let base = enumerate_disk(1.0, 800).unwrap();
        let comp = tensor_compose(&base, 1.0, 5000).unwrap();
        let zero = comp.modes.iter().filter(|m| m.mean == 0.0).count();
        assert!(zero as f64 / 5000.0 >= 0.5);
        let dmax = comp.clusters.iter().map(|r| r.len()).max().unwrap();
        assert!(zero + dmax >= 2500);
    }

    #[test]
    fn tensor_incomplete_base_is_rejected() {
        let base = enumerate_box(&[1.0], 5).unwrap();
        assert!(matches!(
            tensor_compose(&base, 1.0, 1000),
            Err(Error::IncompleteBase(_))
        ));
    }

    #[test]
    fn budget_error() {
        assert!(matches!(
            enumerate_box_with_budget(&[1.0, 1.0], 10_000, 1000),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn domain_metadata() {
        let b = DomainSpec::boxed(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(b.volume, 6.0);
        assert_eq!(b.perimeter, 2.0 * (6.0 + 3.0 + 2.0));
        let d = DomainSpec::disk(2.0).unwrap();
        assert!((d.volume - 4.0 * PI).abs() < 1e-14);
        assert!(DomainSpec::disk(-1.0).is_err());
        assert!((weyl_constant(2, 1.0) - 4.0 * PI).abs() < 1e-12);
    }
}
