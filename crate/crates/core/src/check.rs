//! The acceptance suite: twelve numbered criteria plus a preflight of the
//! Bessel zero table used by the disk checks.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::census::{census, classify, parseval_partial, ht_constant, CensusConfig, Convention};
use crate::cli::{grid_solve, mean_carrying_for};
use crate::eigen::discrete_rectangle_eigenvalues;
use crate::error::Result;
use crate::heat::{
    heat_content, lemma1_sweep, lemma4_integral, lemma4_tail, spectral_heat_mass, strip_coefficients_exact,
    HeatGapParams,
};
use crate::mc::{halfspace_survival, mc_heat_mass, mc_survival, HalfSpace, McConfig};
use crate::spectra::{
    box_mean_carrying, enumerate_ball3, enumerate_box, enumerate_disk, weyl_constant, DomainSpec, ModeLabel, Spectrum,
};
use crate::special::bessel_zero;

/// `(order, k, j_{order,k})`, the zeros behind the first ten disk eigenvalues.
pub const BESSEL_TABLE: [(u32, u32, f64); 10] = [
    (0, 1, 2.404_825_557_695_773),
    (1, 1, 3.831_705_970_207_512),
    (2, 1, 5.135_622_301_840_683),
    (0, 2, 5.520_078_110_286_311),
    (3, 1, 6.380_161_895_923_984),
    (1, 2, 7.015_586_669_815_619),
    (4, 1, 7.588_342_434_503_805),
    (2, 2, 8.417_244_140_399_865),
    (0, 3, 8.653_727_912_911_012),
    (5, 1, 8.771_483_815_959_954),
];

pub const CRITERIA: [(usize, &str); 12] = [
    (1, "cube fraction"),
    (2, "disk/ball scaling"),
    (3, "theorem margin"),
    (4, "parseval"),
    (5, "mean bound constant"),
    (6, "reflection principle"),
    (7, "heat gap"),
    (8, "heat content"),
    (9, "gamma tail"),
    (10, "numerical spectrum fidelity"),
    (11, "degeneracy conventions"),
    (12, "determinism"),
];

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub only: Option<Vec<usize>>,
    pub seed: u64,
    /// Reference zeros; replaced in tests to inject faults.
    pub bessel_table: Vec<(u32, u32, f64)>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            only: None,
            seed: 20_240_601,
            bessel_table: BESSEL_TABLE.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    /// `0` is the Bessel preflight.
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Outcome {
    /// Result line without timing.
    pub fn summary(&self) -> String {
        format!(
            "[{}] {:>2} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub outcomes: Vec<Outcome>,
}

impl CheckSummary {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failed(&self) -> Vec<&Outcome> {
        self.outcomes.iter().filter(|o| !o.passed).collect()
    }

    /// Timing-free report, identical across reruns.
    pub fn report(&self) -> String {
        let mut s: String = self.outcomes.iter().map(|o| o.summary() + "\n").collect();
        let failed: Vec<String> = self.failed().iter().map(|o| format!("{} {}", o.id, o.name)).collect();
        s += &format!(
            "{} of {} passed{}\n",
            self.outcomes.len() - failed.len(),
            self.outcomes.len(),
            if failed.is_empty() {
                String::new()
            } else {
                format!("; failed: {}", failed.join(", "))
            }
        );
        s
    }
}

type Check = (bool, String);

fn within(v: f64, lo: f64, hi: f64) -> bool {
    v >= lo && v <= hi
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

pub fn bessel_preflight(opts: &CheckOptions) -> Result<Check> {
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for &(m, k, v) in &opts.bessel_table {
        let z = bessel_zero(m, k)?;
        let e = rel(z, v);
        worst = worst.max(e);
        if e > 1e-12 {
            bad.push(format!("j({m},{k}) = {z} vs table {v}"));
        }
    }
    Ok((
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} zeros agree, worst relative error {worst:.1e}", opts.bessel_table.len())
        } else {
            bad.join("; ")
        },
    ))
}

fn c1_cube_fraction() -> Result<Check> {
    let sq = census(&enumerate_box(&[1.0, 1.0], 20_000)?, &CensusConfig::exact())?;
    let cube = census(&enumerate_box(&[1.0, 1.0, 1.0], 50_000)?, &CensusConfig::exact())?;
    let (a, b) = (*sq.density.last().unwrap(), *cube.density.last().unwrap());
    Ok((
        within(a, 0.23, 0.27) && within(b, 0.105, 0.145),
        format!("square fraction {a:.4} in [0.23, 0.27], cube fraction {b:.4} in [0.105, 0.145]"),
    ))
}

fn c2_scaling() -> Result<Check> {
    let disk = census(&enumerate_disk(1.0, 10_000)?, &CensusConfig::exact())?;
    let ball = census(&enumerate_ball3(1.0, 20_000)?, &CensusConfig::exact())?;
    let ed = disk.fitted_exponent.as_ref().map_or(f64::NAN, |f| f.exponent);
    let eb = ball.fitted_exponent.as_ref().map_or(f64::NAN, |f| f.exponent);
    let count = *disk.counting.last().unwrap() as f64;
    let target = 2.0 / PI * 100.0;
    Ok((
        within(ed, 0.45, 0.55) && rel(count, target) <= 0.2 && within(eb, 0.28, 0.40),
        format!(
            "disk exponent {ed:.4}, N_A(10000) = {count} vs {target:.1}, ball exponent {eb:.4}"
        ),
    ))
}

fn c3_margin(seed: u64) -> Result<Check> {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut add = |name: &str, spec: &Spectrum| -> Result<()> {
        let r = census(spec, &CensusConfig::default_for(spec))?;
        let m = &r.margin;
        let pass = m.positive_from_10 && m.at_max > m.at_100;
        ok &= pass;
        parts.push(format!(
            "{name} m(100) = {:.3}, m({}) = {:.3}, positive {}",
            m.at_100, r.n, m.at_max, m.positive_from_10
        ));
        Ok(())
    };
    add("square", &enumerate_box(&[1.0, 1.0], 20_000)?)?;
    add("disk", &enumerate_disk(1.0, 10_000)?)?;
    let l = DomainSpec::polygon(&[[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]])?;
    let run = grid_solve(&l, Some(1.0 / 256.0), 200, seed)?;
    add("L-shape", &run.spectrum)?;
    Ok((ok, parts.join("; ")))
}

fn monotone(s: &[f64]) -> bool {
    s.windows(2).all(|w| w[1] >= w[0])
}

fn c4_parseval() -> Result<Check> {
    let i = parseval_partial(&enumerate_box(&[1.0], 1000)?);
    let s = parseval_partial(&enumerate_box(&[1.0, 1.0], 10_000)?);
    let d = parseval_partial(&enumerate_disk(1.0, 10_000)?);
    let (a, b, c) = (*i.last().unwrap(), *s.last().unwrap(), d.last().unwrap() / PI);
    Ok((
        a >= 0.999 && within(b, 0.97, 1.0) && within(c, 0.97, 1.0) && monotone(&i) && monotone(&s) && monotone(&d),
        format!("interval {a:.6}, square {b:.6}, disk/π {c:.6}"),
    ))
}

fn c5_ht() -> Result<Check> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, lengths, exact) in [
        ("interval", vec![1.0], 2.0 * SQRT_2),
        ("square", vec![1.0, 1.0], 8.0 * SQRT_2 / PI),
    ] {
        let a = ht_constant(&enumerate_box(&lengths, 1000)?);
        let b = ht_constant(&enumerate_box(&lengths, 2000)?);
        let pass = (a.value - exact).abs() <= 1e-10 && (b.value - exact).abs() <= 1e-10 && b.argmax <= a.argmax;
        ok &= pass;
        parts.push(format!(
            "{name} {:.12} vs {exact:.12} (argmax {} -> {})",
            b.value, a.argmax, b.argmax
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn c6_reflection(seed: u64) -> Result<Check> {
    let times = [0.0025, 0.01, 0.04];
    let cfg = McConfig {
        n_paths: 100_000,
        dt: None,
        seed,
        bridge_correction: true,
    };
    let c = mc_survival(&HalfSpace, &[0.1], &times, &cfg)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (t, e) in times.iter().zip(&c.estimates) {
        let exact = halfspace_survival(0.1, *t);
        let z = (e.value - exact) / e.stderr;
        ok &= z.abs() <= 3.0;
        parts.push(format!("t={t}: {:.5} vs {exact:.5} ({z:+.2} se)", e.value));
    }
    Ok((ok, parts.join("; ")))
}

fn c7_gap(seed: u64) -> Result<Check> {
    let disk = DomainSpec::disk(1.0)?;
    let spec = mean_carrying_for(&disk, 0.02 * 0.02)?;
    let sweep = lemma1_sweep(&spec, &[0.02, 0.04, 0.08], &HeatGapParams::default())?;
    let positive = sweep.rows.iter().all(|r| r.ratio > 0.0);
    let band = sweep.max_ratio / sweep.min_ratio;
    let (eps, t) = (0.05, 0.0025);
    let sp = spectral_heat_mass(&strip_coefficients_exact(&spec, eps)?, &spec, t)?;
    let cfg = McConfig {
        n_paths: 100_000,
        dt: None,
        seed,
        bridge_correction: true,
    };
    let mc = mc_heat_mass(&disk, eps, &[t], &cfg)?.samples[0];
    let z = (mc.value - sp.value) / mc.stderr;
    let ratios: Vec<String> = sweep.rows.iter().map(|r| format!("{:.4}", r.ratio)).collect();
    Ok((
        positive && band <= 2.5 && z.abs() <= 3.0,
        format!(
            "gap/eps [{}], max/min {band:.3}; MC {:.6} vs spectral {:.6} ({z:+.2} se)",
            ratios.join(", "),
            mc.value,
            sp.value
        ),
    ))
}

fn c8_content() -> Result<Check> {
    let disk = mean_carrying_for(&DomainSpec::disk(1.0)?, 1e-4)?;
    let mut scaled = Vec::new();
    for i in 0..=8 {
        let t = 1e-4 * 10f64.powf(i as f64 / 4.0);
        scaled.push(heat_content(&disk, t)?.residual.abs() / t.powf(1.5));
    }
    let mx = scaled.iter().cloned().fold(0.0, f64::max);
    let mn = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let sq = box_mean_carrying(&[1.0, 1.0], crate::heat::required_lambda(1e-5, 1e-3))?;
    let target = 8.0 / PI.sqrt();
    let mut worst: f64 = 0.0;
    for t in [1e-5, 2e-5, 5e-5, 1e-4] {
        let h = heat_content(&sq, t)?;
        worst = worst.max(rel((1.0 - h.value) / t.sqrt(), target));
    }
    Ok((
        mx / mn <= 10.0 && worst <= 0.05,
        format!("disk |r|/t^1.5 max/min {:.3}; square slope worst deviation {:.4}", mx / mn, worst),
    ))
}

fn c9_tail() -> Result<Check> {
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [2usize, 3] {
        let c = weyl_constant(d, 1.0);
        for eps in [1e-2, 1e-3] {
            let s = lemma4_tail(c, d, eps, 2.0)?;
            ok &= s.ratio <= 0.1;
            let mut part = format!("d={d} eps={eps}: sum/√eps {:.4}", s.ratio);
            if d == 3 {
                let i = lemma4_integral(c, d, eps, 2.0)?;
                let e = rel(s.sum, i);
                ok &= e <= 0.01;
                part += &format!(", sum vs integral {e:.2e}");
            }
            parts.push(part);
        }
    }
    Ok((ok, parts.join("; ")))
}

fn c10_fidelity(opts: &CheckOptions) -> Result<Check> {
    let h = 1.0 / 256.0;
    let sq_dom = DomainSpec::boxed(&[1.0, 1.0])?;
    let sq = grid_solve(&sq_dom, Some(h), 20, opts.seed)?;
    let exact = enumerate_box(&[1.0, 1.0], 20)?;
    let mut disc = discrete_rectangle_eigenvalues(255, 255, h);
    disc.truncate(20);
    let mut worst_cont: f64 = 0.0;
    let mut worst_disc: f64 = 0.0;
    for (k, m) in sq.spectrum.modes.iter().enumerate() {
        worst_cont = worst_cont.max(rel(m.lambda, exact.modes[k].lambda));
        worst_disc = worst_disc.max(rel(m.lambda, disc[k]));
    }
    let disk = grid_solve(&DomainSpec::disk(1.0)?, Some(h), 10, opts.seed)?;
    let mut bessel: Vec<f64> = Vec::new();
    for &(m, _, z) in &opts.bessel_table {
        let mult = if m == 0 { 1 } else { 2 };
        bessel.extend(std::iter::repeat_n(z * z, mult));
    }
    bessel.sort_by(f64::total_cmp);
    let worst_disk = disk
        .spectrum
        .modes
        .iter()
        .zip(&bessel)
        .map(|(m, b)| rel(m.lambda, *b))
        .fold(0.0, f64::max);
    // means compared per eigenspace: only the projection is basis independent
    let exact10 = exact.truncated(10);
    let mut worst_mean: f64 = 0.0;
    let mut same_clusters = true;
    for r in &exact10.clusters {
        let grid_cluster = sq.result.clusters.iter().any(|g| g == r);
        same_clusters &= grid_cluster;
        let norm = |s: &Spectrum| s.modes[r.clone()].iter().map(|m| m.mean * m.mean).sum::<f64>().sqrt();
        let (g, e) = (norm(&sq.spectrum), norm(&exact10));
        // symmetric zero-mean eigenspaces must stay at round-off level
        worst_mean = worst_mean.max(if e > 0.0 { rel(g, e) } else if g <= 1e-6 { 0.0 } else { f64::INFINITY });
    }
    Ok((
        worst_cont <= 5e-3 && worst_disc <= 1e-7 && worst_disk <= 1e-2 && worst_mean <= 0.02 && same_clusters,
        format!(
            "square vs continuum {worst_cont:.2e}, vs discrete {worst_disc:.2e}; disk vs Bessel {worst_disk:.2e}; \
             square means {worst_mean:.2e}, clusters match {same_clusters}"
        ),
    ))
}

fn c11_conventions() -> Result<Check> {
    let spec = enumerate_box(&[1.0, 1.0], 10)?;
    let count = |a: u32, b: u32, conv: Convention| -> Option<usize> {
        let k = spec.modes.iter().position(|m| m.label == ModeLabel::Box(vec![a, b]))?;
        let r = spec.clusters.iter().find(|r| r.contains(&k))?;
        let flags = classify(&spec, &CensusConfig::exact().with_convention(conv));
        Some(flags[r.clone()].iter().filter(|&&f| f).count())
    };
    let v = [
        count(1, 3, Convention::Canonical),
        count(1, 3, Convention::Cluster),
        count(1, 2, Convention::Canonical),
        count(1, 2, Convention::Cluster),
    ];
    Ok((
        v == [Some(2), Some(1), Some(0), Some(0)],
        format!(
            "{{(1,3),(3,1)}}: canonical {:?}, cluster {:?}; {{(1,2),(2,1)}}: canonical {:?}, cluster {:?}",
            v[0], v[1], v[2], v[3]
        ),
    ))
}

fn c12_determinism(seed: u64) -> Result<Check> {
    let dir = std::env::temp_dir().join(format!("meanspec-check-{}-{seed}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let poly = dir.join("l.poly");
    std::fs::write(&poly, "0 0\n2 0\n2 1\n1 1\n1 2\n0 2\n")?;
    let seed_s = seed.to_string();
    let cases: Vec<(&str, Vec<String>, Vec<usize>)> = vec![
        ("spectrum", vec!["spectrum".into(), "disk:1".into(), "--n".into(), "100".into()], vec![1, 1]),
        ("census", vec!["census".into(), "box:1x1".into(), "--n".into(), "2000".into()], vec![1, 1]),
        (
            "grid",
            vec![
                "spectrum".into(),
                format!("poly:{}", poly.display()),
                "--grid-h".into(),
                "0.03125".into(),
                "--n".into(),
                "20".into(),
            ],
            vec![1, 1],
        ),
        ("heat", vec!["heat".into(), "disk:1".into(), "--eps".into(), "0.05".into()], vec![1, 1]),
        (
            "mc-halfspace",
            vec![
                "mc".into(),
                "halfspace".into(),
                "--eps".into(),
                "0.1".into(),
                "--t".into(),
                "0.0025,0.01".into(),
                "--paths".into(),
                "20000".into(),
            ],
            vec![1, 2, 4, 8],
        ),
        (
            "mc-disk",
            vec![
                "mc".into(),
                "disk:1".into(),
                "--eps".into(),
                "0.05".into(),
                "--t".into(),
                "0.0025".into(),
                "--paths".into(),
                "5000".into(),
            ],
            vec![1, 3, 8],
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, args, threads) in cases {
        let mut outputs = Vec::new();
        for (rep, th) in threads.iter().enumerate() {
            let out = dir.join(format!("{name}-{rep}"));
            let mut argv: Vec<String> = vec!["meanspec".into()];
            argv.extend(args.iter().cloned());
            argv.extend(["--seed".into(), seed_s.clone(), "--threads".into(), th.to_string()]);
            argv.extend(["--output".into(), out.display().to_string()]);
            let code = crate::cli::run(argv);
            if code != 0 {
                ok = false;
                parts.push(format!("{name}: exit {code}"));
                break;
            }
            outputs.push(read_tree(&out)?);
        }
        let same = outputs.windows(2).all(|w| w[0] == w[1]);
        ok &= same;
        parts.push(format!("{name} x{} identical {same}", outputs.len()));
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok((ok, parts.join("; ")))
}

/// File contents, or the sorted contents of a directory's files.
fn read_tree(p: &std::path::Path) -> Result<Vec<(String, Vec<u8>)>> {
    if p.is_dir() {
        let mut v = Vec::new();
        for e in std::fs::read_dir(p)? {
            let e = e?;
            v.push((e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path())?));
        }
        v.sort();
        Ok(v)
    } else {
        Ok(vec![(String::new(), std::fs::read(p)?)])
    }
}

/// Runs one criterion; errors count as failures.
pub fn run_criterion(id: usize, opts: &CheckOptions) -> Outcome {
    let start = Instant::now();
    let res = match id {
        0 => bessel_preflight(opts),
        1 => c1_cube_fraction(),
        2 => c2_scaling(),
        3 => c3_margin(opts.seed),
        4 => c4_parseval(),
        5 => c5_ht(),
        6 => c6_reflection(opts.seed),
        7 => c7_gap(opts.seed),
        8 => c8_content(),
        9 => c9_tail(),
        10 => c10_fidelity(opts),
        11 => c11_conventions(),
        12 => c12_determinism(opts.seed),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let (passed, detail) = res.unwrap_or_else(|e| (false, format!("error: {e}")));
    let name = if id == 0 {
        "bessel table".to_string()
    } else {
        CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1).to_string()
    };
    Outcome {
        id,
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs the preflight and the selected criteria, printing one line each.
pub fn run(opts: &CheckOptions, out: &mut dyn Write) -> Result<CheckSummary> {
    let mut ids = vec![0];
    ids.extend(CRITERIA.iter().map(|c| c.0).filter(|id| opts.only.as_ref().is_none_or(|o| o.contains(id))));
    let mut outcomes = Vec::new();
    for id in ids {
        let o = run_criterion(id, opts);
        writeln!(out, "{} ({:.1} s)", o.summary(), o.seconds)?;
        outcomes.push(o);
    }
    let summary = CheckSummary { outcomes };
    let tail = summary.report();
    write!(out, "{}", tail.lines().last().map(|l| format!("{l}\n")).unwrap_or_default())?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrupted_table_fails_the_preflight() {
        let mut opts = CheckOptions::default();
        opts.bessel_table[3].2 += 1e-6;
        let o = run_criterion(0, &opts);
        assert!(!o.passed);
        assert!(o.summary().contains("bessel table"));
        assert!(run_criterion(0, &CheckOptions::default()).passed);
    }

    #[test]
    fn conventions_criterion() {
        assert!(run_criterion(11, &CheckOptions::default()).passed);
    }
}
