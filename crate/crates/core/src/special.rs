//! Special functions needed by the harmonic Green's function.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Complex gamma function.
///
/// Lanczos for `Re z >= 1/2`, reflection below. Non-positive integers are poles.
pub fn gamma_fn(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite(format!("gamma argument {z}")));
    }
    let nearest = z.re.round();
    if nearest <= 0.0 && (z - nearest).norm() <= 1e-14 * nearest.abs().max(1.0) {
        return Err(Error::GammaPole { re: z.re, im: z.im });
    }
    if z.re < 0.5 {
        // sin(pi z) with the integer part removed first to keep the phase accurate
        let k = nearest;
        let sign = if (k as i64) % 2 == 0 { 1.0 } else { -1.0 };
        let s = (PI * (z - k)).sin() * sign;
        let g = lanczos(Complex64::new(1.0, 0.0) - z);
        Ok(Complex64::new(PI, 0.0) / (s * g))
    } else {
        Ok(lanczos(z))
    }
}

fn lanczos(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS_COEFFS[0], 0.0);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    let log_part = (z + 0.5) * t.ln() - t;
    (2.0 * PI).sqrt() * log_part.exp() * acc
}

/// `D_ν(z)` in the factored form `mantissa · exp(log_scale)`.
///
/// Both parts are complex when ν is. Keeping them apart lets callers form
/// products of several parabolic-cylinder values without over/underflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledValue {
    pub mantissa: Complex64,
    pub log_scale: Complex64,
}

impl ScaledValue {
    pub fn value(&self) -> Result<Complex64> {
        let v = self.mantissa * self.log_scale.exp();
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::SpecialFunction {
                function: "parabolic_cylinder_D",
                detail: format!("overflow: log magnitude {:.3e}", self.log_scale.re),
            })
        }
    }
}

const ASYMPTOTIC_TOL: f64 = 1e-17;
const TAYLOR_TOL: f64 = 1e-18;
const MAX_TAYLOR_TERMS: usize = 400;
const MAX_STEP: f64 = 0.5;
const RESCALE_ABOVE: f64 = 1e100;

/// Parabolic-cylinder function `D_ν(z)` for real `ν`.
pub fn parabolic_cylinder_d(nu: f64, z: f64) -> Result<f64> {
    Ok(parabolic_cylinder_d_complex(Complex64::new(nu, 0.0), z)?.re)
}

/// `D_ν(z)` for complex order and real argument.
pub fn parabolic_cylinder_d_complex(nu: Complex64, z: f64) -> Result<Complex64> {
    parabolic_cylinder_d_scaled(nu, z)?.value()
}

/// `D_ν(z)` returned in scaled form.
///
/// The recessive solution of Weber's equation `y'' = (z²/4 − ν − ½) y` is
/// seeded from its large-`z` asymptotic series at a point `Z` where the series
/// has converged to ~1e-17, then carried inward to `z` by Taylor steps of the
/// ODE (stable, since the solution grows in that direction). For `z ≥ Z` the
/// asymptotic series is used directly. Switchover: `Z = max(8, 2√(|ν|+1) + 6)`,
/// moved outward by 25% until the series converges.
pub fn parabolic_cylinder_d_scaled(nu: Complex64, z: f64) -> Result<ScaledValue> {
    if !(z.is_finite() && nu.re.is_finite() && nu.im.is_finite()) {
        return Err(Error::NonFinite(format!("D_nu with nu = {nu}, z = {z}")));
    }
    let mut start = (2.0 * (nu.norm() + 1.0).sqrt() + 6.0).max(8.0);
    if z > start {
        start = z;
    }
    let (mut y, mut dy, mut log_scale) = loop {
        if let Some(seed) = asymptotic_seed(nu, start) {
            break seed;
        }
        start *= 1.25;
        if start > 1e4 {
            return Err(Error::SpecialFunction {
                function: "parabolic_cylinder_D",
                detail: format!("asymptotic series failed to converge for nu = {nu}"),
            });
        }
    };

    let a = nu + 0.5;
    let mut at = start;
    while at > z {
        let q0 = Complex64::new(at * at / 4.0, 0.0) - a;
        let h_mag = (2.0 / (q0.norm() + 1.0).sqrt()).min(MAX_STEP).min(at - z);
        let (y1, dy1) = taylor_step(y, dy, at, -h_mag, a)?;
        y = y1;
        dy = dy1;
        at -= h_mag;
        let m = y.norm();
        if m > RESCALE_ABOVE || (m < 1.0 / RESCALE_ABOVE && m > 0.0) {
            y /= m;
            dy /= m;
            log_scale += m.ln();
        }
    }
    if !(y.re.is_finite() && y.im.is_finite()) {
        return Err(Error::SpecialFunction {
            function: "parabolic_cylinder_D",
            detail: format!("non-finite continuation at z = {z}, nu = {nu}"),
        });
    }
    Ok(ScaledValue {
        mantissa: y,
        log_scale,
    })
}

/// Asymptotic series at `z`; returns (mantissa, derivative mantissa, log scale)
/// or `None` if it has not converged.
fn asymptotic_seed(nu: Complex64, z: f64) -> Option<(Complex64, Complex64, Complex64)> {
    let inv2z2 = 1.0 / (2.0 * z * z);
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    // d/dz of the sum: each term ∝ z^(-2k)
    let mut dsum = Complex64::new(0.0, 0.0);
    let mut prev = f64::INFINITY;
    for k in 0..200usize {
        let kf = k as f64;
        term = -term * (nu - 2.0 * kf) * (nu - 2.0 * kf - 1.0) * (inv2z2 / (kf + 1.0));
        let mag = term.norm();
        sum += term;
        dsum += term * (-2.0 * (kf + 1.0) / z);
        if mag <= ASYMPTOTIC_TOL * sum.norm() {
            let y = sum;
            let dy = sum * (nu / z - z / 2.0) + dsum;
            let log_scale = nu * z.ln() - z * z / 4.0;
            return Some((y, dy, log_scale));
        }
        if mag > prev && k > 2 {
            return None;
        }
        prev = mag;
    }
    None
}

/// One Taylor step of `y'' = (z²/4 − a) y` from `z0` to `z0 + h`.
fn taylor_step(
    y: Complex64,
    dy: Complex64,
    z0: f64,
    h: f64,
    a: Complex64,
) -> Result<(Complex64, Complex64)> {
    let q0 = Complex64::new(z0 * z0 / 4.0, 0.0) - a;
    let q1h = z0 / 2.0 * h;
    let h2 = h * h;
    let q2h2 = 0.25 * h2;
    // b[j] = c_j h^j; window holds b[j-1], b[j-2], b[j-3], b[j-4]
    let zero = Complex64::new(0.0, 0.0);
    let mut window = [dy * h, y, zero, zero];
    let mut value = y + window[0];
    let mut deriv = dy;
    let scale = y.norm() + window[0].norm();
    let mut quiet = 0;
    for j in 2..MAX_TAYLOR_TERMS {
        let jf = j as f64;
        let b = h2 * (q0 * window[1] + window[2] * q1h + window[3] * q2h2) / (jf * (jf - 1.0));
        value += b;
        deriv += b * (jf / h);
        if b.norm() <= TAYLOR_TOL * scale.max(value.norm()) {
            quiet += 1;
            if quiet >= 4 {
                return Ok((value, deriv));
            }
        } else {
            quiet = 0;
        }
        window = [b, window[0], window[1], window[2]];
    }
    Err(Error::SpecialFunction {
        function: "parabolic_cylinder_D",
        detail: format!("Taylor step did not converge at z = {z0}"),
    })
}

/// Orthonormal Hermite functions `φ_n(s) = (2ⁿ n! √π)^(-1/2) H_n(s) e^(−s²/2)`.
///
/// Evaluated by the three-term recurrence
/// `φ_{n+1} = √(2/(n+1)) s φ_n − √(n/(n+1)) φ_{n−1}` on a rescaled pair, so
/// neither factorials nor the Gaussian prefactor overflow; values that
/// genuinely underflow come out as 0.
#[derive(Debug, Clone)]
pub struct HermiteFunctions {
    s: f64,
    n: usize,
    prev: f64,
    cur: f64,
    log_scale: f64,
}

impl HermiteFunctions {
    pub fn new(s: f64) -> Self {
        Self {
            s,
            n: 0,
            prev: 0.0,
            cur: 1.0,
            log_scale: -0.25 * PI.ln() - 0.5 * s * s,
        }
    }
}

impl Iterator for HermiteFunctions {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.cur * self.log_scale.exp();
        let n = self.n as f64;
        let next =
            (2.0 / (n + 1.0)).sqrt() * self.s * self.cur - (n / (n + 1.0)).sqrt() * self.prev;
        self.prev = self.cur;
        self.cur = next;
        self.n += 1;
        let m = self.cur.abs().max(self.prev.abs());
        if m > 1e150 {
            self.prev /= m;
            self.cur /= m;
            self.log_scale += m.ln();
        }
        Some(out)
    }
}

pub fn hermite_function(n: usize, s: f64) -> f64 {
    HermiteFunctions::new(s).nth(n).unwrap_or(0.0)
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
