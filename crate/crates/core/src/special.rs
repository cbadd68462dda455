//! Special functions used throughout the crate.
//!
//! Integer-order Bessel functions of the first kind, the positive zeros of
//! `J_m` and of the spherical Bessel functions `j_l`, the standard normal CDF
//! and the upper incomplete gamma function. Everything here is a pure function
//! of its arguments.
//!
//! `bessel_j` uses the power series for `x <= 12` and Miller's backward
//! recurrence (normalised with `J_0 + 2 sum J_2k = 1`) above that. The series
//! is not used for larger `x` because its terms grow like `exp(x)` before they
//! cancel, which costs all significant digits at high order.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// Largest Bessel order accepted by the public entry points.
pub const MAX_BESSEL_ORDER: u32 = 200;
/// Largest spherical Bessel order accepted by the public entry points.
pub const MAX_SPH_ORDER: u32 = 100;

const SERIES_LIMIT: f64 = 12.0;

/// Consecutive positive zeros of `J_nu` (and of `j_l`) are more than two apart
/// for every order used here, so a unit scan step cannot hide a sign change.
const SCAN_STEP: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalTolerances {
    pub abs_tol: f64,
    pub max_terms: usize,
    pub newton_max_iter: usize,
}

impl Default for EvalTolerances {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_terms: 500,
            newton_max_iter: 60,
        }
    }
}

impl EvalTolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidInput("abs_tol must be positive".into()));
        }
        if self.max_terms < 50 {
            return Err(Error::InvalidInput("max_terms must be at least 50".into()));
        }
        if self.newton_max_iter < 8 {
            return Err(Error::InvalidInput(
                "newton_max_iter must be at least 8".into(),
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Gamma function
// ---------------------------------------------------------------------------

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `s > 0`.
pub fn ln_gamma(s: f64) -> f64 {
    if s < 0.5 {
        // reflection
        (PI / (PI * s).sin()).ln() - ln_gamma(1.0 - s)
    } else {
        let z = s - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
    }
}

/// Gamma function for `s > 0`.
pub fn gamma(s: f64) -> f64 {
    if s < 0.5 {
        PI / ((PI * s).sin() * gamma(1.0 - s))
    } else {
        let z = s - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
    }
}

// ---------------------------------------------------------------------------
// Incomplete gamma and the normal CDF
// ---------------------------------------------------------------------------

/// Upper incomplete gamma `Γ(s, x) = ∫_x^∞ t^{s-1} e^{-t} dt` for `0 < s <= 50`.
///
/// Continued fraction for `x > s + 1`, otherwise `Γ(s)` minus the lower-gamma
/// series.
pub fn upper_gamma(s: f64, x: f64) -> Result<f64> {
    upper_gamma_with(s, x, &EvalTolerances::default())
}

pub fn upper_gamma_with(s: f64, x: f64, tol: &EvalTolerances) -> Result<f64> {
    if !(s > 0.0 && s <= 50.0) {
        return Err(Error::InvalidInput(format!(
            "upper_gamma requires 0 < s <= 50, got {s}"
        )));
    }
    if !(x >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "upper_gamma requires x >= 0, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(gamma(s));
    }
    let prefactor = (s * x.ln() - x).exp();
    if x > s + 1.0 {
        Ok(prefactor * gamma_continued_fraction(s, x, tol.max_terms.max(1000)))
    } else {
        let lower = prefactor * lower_gamma_series(s, x, tol.max_terms.max(1000));
        Ok((gamma(s) - lower).max(0.0))
    }
}

/// Series `Σ x^n / (s (s+1) ... (s+n))`; multiply by `x^s e^{-x}` for `γ(s, x)`.
fn lower_gamma_series(s: f64, x: f64, max_terms: usize) -> f64 {
    let mut denom = s;
    let mut term = 1.0 / s;
    let mut sum = term;
    for _ in 0..max_terms {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum
}

/// Modified Lentz evaluation of the continued fraction for `Γ(s, x) e^x x^{-s}`.
fn gamma_continued_fraction(s: f64, x: f64, max_terms: usize) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=max_terms {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Complementary error function, via `erfc(z) = Γ(1/2, z²)/√π` for `z >= 0`.
pub fn erfc(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z >= 0.0 {
        let g = upper_gamma(0.5, z * z).unwrap_or(0.0);
        g / PI.sqrt()
    } else {
        2.0 - erfc(-z)
    }
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let tail = 0.5 * erfc(x.abs() / std::f64::consts::SQRT_2);
    let v = if x >= 0.0 { 1.0 - tail } else { tail };
    v.clamp(0.0, 1.0)
}

// ---------------------------------------------------------------------------
// Bessel functions of the first kind
// ---------------------------------------------------------------------------

/// `J_order(x)` for `x >= 0`, `order <= 200`.
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    check_order(order, MAX_BESSEL_ORDER)?;
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidInput(format!(
            "bessel_j requires finite x >= 0, got {x}"
        )));
    }
    Ok(bessel_j_raw(order as usize, x))
}

fn check_order(order: u32, max: u32) -> Result<()> {
    if order > max {
        Err(Error::UnsupportedOrder { order, max })
    } else {
        Ok(())
    }
}

pub(crate) fn bessel_j_raw(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x <= SERIES_LIMIT {
        bessel_series(n, x)
    } else {
        let mut out = vec![0.0; n + 1];
        bessel_miller(n, x, &mut out);
        out[n]
    }
}

/// `(J_n(x), J_n'(x))`.
pub(crate) fn bessel_j_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if x == 0.0 {
        let v = if n == 0 { 1.0 } else { 0.0 };
        let d = if n == 1 { 0.5 } else { 0.0 };
        return (v, d);
    }
    if x <= SERIES_LIMIT {
        let j = bessel_series(n, x);
        let jp1 = bessel_series(n + 1, x);
        let d = if n == 0 {
            -jp1
        } else {
            0.5 * (bessel_series(n - 1, x) - jp1)
        };
        (j, d)
    } else {
        let mut out = vec![0.0; n + 2];
        bessel_miller(n + 1, x, &mut out);
        let d = if n == 0 {
            -out[1]
        } else {
            0.5 * (out[n - 1] - out[n + 1])
        };
        (out[n], d)
    }
}

fn bessel_series(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for i in 1..=n {
        term *= half / i as f64;
    }
    if term == 0.0 {
        return 0.0;
    }
    let q = half * half;
    let mut sum = term;
    for k in 1..200 {
        term *= -q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Fills `out[0..=n_hi]` with `J_0(x) .. J_{n_hi}(x)` by backward recurrence.
fn bessel_miller(n_hi: usize, x: f64, out: &mut [f64]) {
    const BIG: f64 = 1e200;
    const SMALL: f64 = 1e-200;
    let top = n_hi.max(x.ceil() as usize);
    let start = top + 20 + (40.0 * top as f64).sqrt() as usize;
    let mut j_next = 0.0; // J_{k+1}
    let mut j_cur = 1.0; // J_k
    let mut sum = 0.0;
    for k in (1..=start).rev() {
        let j_prev = 2.0 * k as f64 / x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        let idx = k - 1;
        if idx <= n_hi {
            out[idx] = j_cur;
        }
        if idx > 0 && idx % 2 == 0 {
            sum += 2.0 * j_cur;
        }
        if j_cur.abs() > BIG {
            j_cur *= SMALL;
            j_next *= SMALL;
            sum *= SMALL;
            if idx <= n_hi {
                for v in &mut out[idx..=n_hi] {
                    *v *= SMALL;
                }
            }
        }
    }
    sum += j_cur;
    let inv = 1.0 / sum;
    for v in &mut out[..=n_hi] {
        *v *= inv;
    }
}

// ---------------------------------------------------------------------------
// Spherical Bessel functions
// ---------------------------------------------------------------------------

/// `(j_l(x), j_l'(x))` from the closed trigonometric forms, generated by the
/// upward recurrence from `sin x / x`. Accurate for `x >= l`, which covers
/// every zero.
pub(crate) fn sph_bessel_with_derivative(l: usize, x: f64) -> (f64, f64) {
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    if l == 0 {
        let j1 = s / (x * x) - c / x;
        return (j0, -j1);
    }
    let mut prev = j0;
    let mut cur = s / (x * x) - c / x;
    for n in 1..l {
        let next = (2 * n + 1) as f64 / x * cur - prev;
        prev = cur;
        cur = next;
    }
    let deriv = prev - (l + 1) as f64 / x * cur;
    (cur, deriv)
}

/// Spherical Bessel function `j_l(x)`, evaluated through the closed form.
pub fn sph_bessel_j(l: u32, x: f64) -> Result<f64> {
    check_order(l, MAX_SPH_ORDER)?;
    if !(x > 0.0) {
        return Err(Error::InvalidInput(format!(
            "sph_bessel_j requires x > 0, got {x}"
        )));
    }
    Ok(sph_bessel_with_derivative(l as usize, x).0)
}

// ---------------------------------------------------------------------------
// Zeros
// ---------------------------------------------------------------------------

/// Safeguarded Newton iteration on a sign-change bracket `[a, b]`.
fn refine_root<F>(f: &F, mut a: f64, mut b: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let fa = f(a).0;
    let fb = f(b).0;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Convergence {
            what: "root refinement (no sign change)".into(),
            best_residuals: vec![fa.abs().min(fb.abs())],
        });
    }
    let neg_at_a = fa < 0.0;
    let mut x = 0.5 * (a + b);
    // Newton steps are cheap relative to the scan; allow generous bisection.
    for _ in 0..(max_iter + 200) {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == neg_at_a {
            a = x;
        } else {
            b = x;
        }
        let newton = x - fx / dfx;
        let next = if newton.is_finite() && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if (next - x).abs() <= 2e-16 * x.abs().max(1.0) || (b - a) <= 4e-16 * x.abs().max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Convergence {
        what: "root refinement".into(),
        best_residuals: vec![f(x).0.abs()],
    })
}

/// Every root of `f` in `(start, x_max]`, found by unit-step sign-change
/// scanning followed by safeguarded Newton. `f(start)` must be nonzero.
fn scan_roots<F>(f: &F, start: f64, x_max: f64, max_iter: usize) -> Result<Vec<f64>>
where
    F: Fn(f64) -> (f64, f64),
{
    let mut roots = Vec::new();
    let mut a = start;
    let mut fa = f(a).0;
    while a < x_max {
        let b = a + SCAN_STEP;
        let fb = f(b).0;
        if fb == 0.0 || fa.signum() != fb.signum() {
            let r = refine_root(f, a, b, max_iter)?;
            if r > x_max {
                break;
            }
            roots.push(r);
        }
        a = b;
        fa = fb;
    }
    Ok(roots)
}

/// The `k`-th root of `f` above `start` by scanning.
fn scan_nth_root<F>(f: &F, start: f64, k: usize, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let mut a = start;
    let mut fa = f(a).0;
    let mut found = 0usize;
    let ceiling = start + 10.0 * (k as f64 + 10.0) + 1e3;
    while a < ceiling {
        let b = a + SCAN_STEP;
        let fb = f(b).0;
        if fb == 0.0 || fa.signum() != fb.signum() {
            found += 1;
            if found == k {
                return refine_root(f, a, b, max_iter);
            }
        }
        a = b;
        fa = fb;
    }
    Err(Error::Convergence {
        what: format!("scan for root {k}"),
        best_residuals: vec![],
    })
}

/// Number of sign changes of `f` on `(start, end)` sampled on the unit grid.
fn count_roots_below<F>(f: &F, start: f64, end: f64) -> usize
where
    F: Fn(f64) -> (f64, f64),
{
    let mut a = start;
    let mut fa = f(a).0;
    let mut found = 0;
    while a + SCAN_STEP < end {
        let b = a + SCAN_STEP;
        let fb = f(b).0;
        if fb == 0.0 || fa.signum() != fb.signum() {
            found += 1;
        }
        a = b;
        fa = fb;
    }
    let fe = f(end).0;
    if fe != 0.0 && fa.signum() != fe.signum() {
        found += 1;
    }
    found
}

/// McMahon's leading-order asymptotic for the `k`-th zero of `J_nu`.
pub fn mcmahon_guess(nu: f64, k: usize) -> f64 {
    let beta = (k as f64 + 0.5 * nu - 0.25) * PI;
    let mu = 4.0 * nu * nu;
    beta - (mu - 1.0) / (8.0 * beta)
}

/// Transition-region guess for low zeros of high order: `nu + |a_k| (nu/2)^{1/3} + ...`.
fn airy_guess(nu: f64, k: usize) -> f64 {
    let t = 3.0 * PI * (4.0 * k as f64 - 1.0) / 8.0;
    let ak = t.powf(2.0 / 3.0) * (1.0 + 5.0 / (48.0 * t * t));
    nu + ak * (nu / 2.0).cbrt() + 0.15 * ak * ak * (nu / 2.0).cbrt().recip()
}

fn zero_guess(nu: f64, k: usize) -> f64 {
    if nu > 2.0 * k as f64 {
        airy_guess(nu, k)
    } else {
        mcmahon_guess(nu, k)
    }
}

/// Guess, Newton on the `±π/2` bracket around it, then confirm the zero index
/// by counting sign changes below it; fall back to a full scan if either step
/// fails.
fn locate_zero<F>(f: &F, nu: f64, start: f64, k: usize, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let g = zero_guess(nu, k).max(start + 1e-3);
    let lo = (g - FRAC_PI_2).max(start);
    let hi = g + FRAC_PI_2;
    if let Ok(root) = refine_root(f, lo, hi, max_iter) {
        if root > start && count_roots_below(f, start, root - 0.25) == k - 1 {
            return Ok(root);
        }
    }
    scan_nth_root(f, start, k, max_iter)
}

/// The `k`-th positive zero `j_{order,k}` of `J_order`.
pub fn bessel_zero(order: u32, k: u32) -> Result<f64> {
    bessel_zero_with(order, k, &EvalTolerances::default())
}

pub fn bessel_zero_with(order: u32, k: u32, tol: &EvalTolerances) -> Result<f64> {
    check_order(order, MAX_BESSEL_ORDER)?;
    if k == 0 {
        return Err(Error::InvalidInput("zero index k must be >= 1".into()));
    }
    let n = order as usize;
    let f = |x: f64| bessel_j_with_derivative(n, x);
    locate_zero(&f, order as f64, bessel_scan_start(n), k as usize, tol.newton_max_iter)
}

fn bessel_scan_start(n: usize) -> f64 {
    // j_{n,1} > n, and J_0 has no zero below 2.4
    (n as f64).max(0.5)
}

/// All positive zeros of `J_order` that do not exceed `x_max`, in ascending
/// order. Used for spectrum enumeration, where completeness matters more than
/// the order cap of the public single-zero entry point.
pub fn bessel_zeros_below(order: usize, x_max: f64) -> Result<Vec<f64>> {
    let start = bessel_scan_start(order);
    if x_max <= start {
        return Ok(Vec::new());
    }
    let f = |x: f64| bessel_j_with_derivative(order, x);
    scan_roots(&f, start, x_max, EvalTolerances::default().newton_max_iter)
}

/// The `k`-th positive zero of the spherical Bessel function `j_l`.
pub fn sph_bessel_zero(l: u32, k: u32) -> Result<f64> {
    check_order(l, MAX_SPH_ORDER)?;
    if k == 0 {
        return Err(Error::InvalidInput("zero index k must be >= 1".into()));
    }
    if l == 0 {
        return Ok(k as f64 * PI);
    }
    let n = l as usize;
    let f = |x: f64| sph_bessel_with_derivative(n, x);
    locate_zero(
        &f,
        l as f64 + 0.5,
        sph_scan_start(n),
        k as usize,
        EvalTolerances::default().newton_max_iter,
    )
}

fn sph_scan_start(l: usize) -> f64 {
    // zeros of j_l are zeros of J_{l+1/2}, all above l + 1/2
    l as f64 + 0.5
}

/// All positive zeros of `j_l` not exceeding `x_max`.
pub fn sph_bessel_zeros_below(l: usize, x_max: f64) -> Result<Vec<f64>> {
    if l == 0 {
        let count = (x_max / PI).floor() as usize;
        return Ok((1..=count).map(|k| k as f64 * PI).collect());
    }
    let start = sph_scan_start(l);
    if x_max <= start {
        return Ok(Vec::new());
    }
    let f = |x: f64| sph_bessel_with_derivative(l, x);
    scan_roots(&f, start, x_max, EvalTolerances::default().newton_max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let fa = f(a);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if (f(m) < 0.0) == (fa < 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// Bessel's integral `(1/π) ∫_0^π cos(nτ - x sin τ) dτ`; the trapezoid rule
    /// is spectrally accurate for this periodic integrand.
    fn series_oracle(n: u32, x: f64) -> f64 {
        let m = 2000;
        let h = PI / m as f64;
        let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
        let mut s = 0.5 * (f(0.0) + f(PI));
        for i in 1..m {
            s += f(i as f64 * h);
        }
        s * h / PI
    }

    #[test]
    fn bessel_j_trivial_values() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        for m in 1..10 {
            assert_eq!(bessel_j(m, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn bessel_j0_root_matches_integral_bisection() {
        let root = bisect(|x| series_oracle(0, x), 2.0, 3.0);
        assert!((root - 2.404_825_557_695_773).abs() < 1e-9);
        assert!(bessel_j(0, 2.404826).unwrap().abs() < 1e-6);
        assert!(bessel_j(0, root).unwrap().abs() < 1e-12);
    }

    #[test]
    fn bessel_j_matches_integral_oracle() {
        for n in [0u32, 1, 2, 5, 10] {
            for &x in &[0.3, 1.0, 4.5, 9.0, 11.9, 17.0, 33.3] {
                let a = bessel_j(n, x).unwrap();
                let b = series_oracle(n, x);
                assert!((a - b).abs() < 1e-12, "n={n} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn bessel_j_continuous_across_crossover() {
        for n in [0usize, 1, 3, 7, 15, 30] {
            let below = bessel_series(n, SERIES_LIMIT);
            let mut out = vec![0.0; n + 1];
            bessel_miller(n, SERIES_LIMIT, &mut out);
            assert!((below - out[n]).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn bessel_three_term_recurrence() {
        for m in 1..=20u32 {
            let mut x = 0.5;
            while x <= 50.0 {
                let lhs = bessel_j(m - 1, x).unwrap() + bessel_j(m + 1, x).unwrap();
                let rhs = 2.0 * m as f64 / x * bessel_j(m, x).unwrap();
                assert!((lhs - rhs).abs() < 1e-9, "m={m} x={x}");
                x += 0.37;
            }
        }
    }

    #[test]
    fn bessel_large_argument_matches_hankel_asymptotic() {
        // J_0(x) ~ sqrt(2/(pi x)) [P cos(chi) - Q sin(chi)], chi = x - pi/4
        for &x in &[60.0, 120.0, 250.0] {
            let chi = x - PI / 4.0;
            let p = 1.0 - 9.0 / (128.0 * x * x);
            let q = -1.0 / (8.0 * x) + 75.0 / (1024.0 * x * x * x);
            let approx = (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin());
            assert!((bessel_j(0, x).unwrap() - approx).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn unsupported_order() {
        assert!(matches!(
            bessel_j(201, 1.0),
            Err(Error::UnsupportedOrder { .. })
        ));
    }

    #[test]
    fn first_zeros_match_bisection_oracle() {
        let z01 = bisect(|x| series_oracle(0, x), 2.0, 3.0);
        let z11 = bisect(|x| series_oracle(1, x), 3.5, 4.2);
        assert!((bessel_zero(0, 1).unwrap() - z01).abs() < 1e-11);
        assert!((bessel_zero(1, 1).unwrap() - z11).abs() < 1e-11);
        assert!((z01 - 2.404826).abs() < 1e-6);
        assert!((z11 - 3.831706).abs() < 1e-6);
    }

    #[test]
    fn zeros_interlace() {
        let mut table = Vec::new();
        for m in 0..=21u32 {
            let row: Vec<f64> = (1..=51).map(|k| bessel_zero(m, k).unwrap()).collect();
            table.push(row);
        }
        for m in 0..=20 {
            for k in 0..50 {
                let a = table[m][k];
                let b = table[m + 1][k];
                let c = table[m][k + 1];
                assert!(a < b && b < c, "m={m} k={}", k + 1);
                assert!(bessel_j_raw(m, a).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_zero_agrees_with_scan_for_high_order() {
        for m in [50usize, 120, 200] {
            let scanned = bessel_zeros_below(m, m as f64 + 40.0).unwrap();
            for (k, z) in scanned.iter().enumerate().take(5) {
                let single = bessel_zero(m as u32, k as u32 + 1).unwrap();
                assert!((single - z).abs() < 1e-9, "m={m} k={}", k + 1);
            }
        }
    }

    #[test]
    fn sph_zeros() {
        for k in 1..=10 {
            assert_eq!(sph_bessel_zero(0, k).unwrap(), k as f64 * PI);
        }
        let tan_root = bisect(|x| x.tan() - x, 4.0, 4.6);
        assert!((sph_bessel_zero(1, 1).unwrap() - tan_root).abs() < 1e-10);
        assert!((tan_root - 4.493409).abs() < 1e-6);
        // j_2 from its explicit trigonometric form
        let j2 = |x: f64| (3.0 / (x * x) - 1.0) * x.sin() / x - 3.0 * x.cos() / (x * x);
        let z21 = bisect(j2, 5.0, 6.5);
        assert!((sph_bessel_zero(2, 1).unwrap() - z21).abs() < 1e-10);
        for l in 0..=100u32 {
            assert!(sph_bessel_zero(l, 1).unwrap() > l as f64);
        }
    }

    #[test]
    fn sph_zeros_interlace() {
        for l in 0..15u32 {
            for k in 1..20u32 {
                let a = sph_bessel_zero(l, k).unwrap();
                let b = sph_bessel_zero(l + 1, k).unwrap();
                let c = sph_bessel_zero(l, k + 1).unwrap();
                assert!(a < b && b < c, "l={l} k={k}");
            }
        }
    }

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

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        let oracle = 0.5 + simpson(|z| (-z * z / 2.0).exp() / (2.0 * PI).sqrt(), 0.0, 1.0, 2000);
        assert!((normal_cdf(1.0) - oracle).abs() < 1e-12);
        assert!((normal_cdf(1.0) - 0.841_344_7).abs() < 1e-7);
        let mut prev = 0.0;
        let mut x = -10.0;
        while x <= 10.0 {
            let v = normal_cdf(x);
            assert!((v + normal_cdf(-x) - 1.0).abs() < 1e-14);
            assert!(v >= prev && (0.0..=1.0).contains(&v));
            prev = v;
            x += 0.05;
        }
    }

    #[test]
    fn upper_gamma_identities() {
        for &x in &[0.0, 0.1, 1.0, 2.5, 7.0, 30.0] {
            let v = upper_gamma(1.0, x).unwrap();
            assert!((v - (-x as f64).exp()).abs() <= 1e-13 * (-x as f64).exp().max(1e-300));
        }
        for &s in &[0.5, 1.0, 1.5, 3.2, 10.0, 25.0, 49.0] {
            for &x in &[0.2, 1.0, 3.0, 10.0, 40.0] {
                let lhs = upper_gamma(s + 1.0, x).unwrap();
                let rhs = s * upper_gamma(s, x).unwrap() + (s * (x as f64).ln() - x).exp();
                assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs(), "s={s} x={x}");
            }
        }
    }

    #[test]
    fn upper_gamma_at_zero_matches_quadrature() {
        // Γ(s) = 2 ∫_0^∞ u^{2s-1} e^{-u²} du
        for &s in &[0.5, 1.0, 1.5, 2.5, 4.0] {
            let quad = 2.0 * simpson(|u| u.powf(2.0 * s - 1.0) * (-u * u).exp(), 0.0, 12.0, 20000);
            let g = upper_gamma(s, 0.0).unwrap();
            assert!((g - quad).abs() <= 1e-9 * g, "s={s}: {g} vs {quad}");
        }
    }

    #[test]
    fn upper_gamma_asymptotic_ratio() {
        for &s in &[0.5, 1.0, 1.5] {
            let mut prev_dev = f64::INFINITY;
            let mut a = 5.0;
            while a <= 100.0 {
                let ratio = upper_gamma(s, a).unwrap() / (a.powf(s - 1.0) * (-a as f64).exp());
                let dev = (ratio - 1.0).abs();
                assert!(ratio > 0.0 && ratio < 1.5);
                assert!(dev <= prev_dev + 1e-12, "s={s} a={a}");
                prev_dev = dev;
                a += 5.0;
            }
            assert!(prev_dev < 0.01);
        }
    }

    #[test]
    fn tolerance_validation() {
        assert!(EvalTolerances::default().validate().is_ok());
        let bad = EvalTolerances {
            max_terms: 10,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
