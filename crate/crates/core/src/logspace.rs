//! Complex numbers stored as `(ln|z|, arg z)` so that products of many small
//! factors never underflow.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Below this `ln|z|` the linear-scale value is reported as zero and flagged.
pub const LN_UNDERFLOW: f64 = -745.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub ln_abs: f64,
    pub phase: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        ln_abs: f64::NEG_INFINITY,
        phase: 0.0,
    };
    pub const ONE: LogValue = LogValue {
        ln_abs: 0.0,
        phase: 0.0,
    };

    pub fn from_ln(ln_abs: f64) -> Self {
        LogValue { ln_abs, phase: 0.0 }
    }

    /// `e^{i phase}`
    pub fn unit(phase: f64) -> Self {
        LogValue {
            ln_abs: 0.0,
            phase: wrap_phase(phase),
        }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z.re == 0.0 && z.im == 0.0 {
            return Self::ZERO;
        }
        // Non-negative reals keep phase exactly zero.
        let phase = if z.im == 0.0 && z.re > 0.0 { 0.0 } else { z.arg() };
        LogValue {
            ln_abs: z.norm().ln(),
            phase,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    /// `true` when the value is non-zero but too small for `f64`.
    pub fn underflows(&self) -> bool {
        !self.is_zero() && self.ln_abs < LN_UNDERFLOW
    }

    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        polar(self.ln_abs.exp(), self.phase)
    }

    pub fn mul(self, other: LogValue) -> LogValue {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        LogValue {
            ln_abs: self.ln_abs + other.ln_abs,
            phase: wrap_phase(self.phase + other.phase),
        }
    }

    /// `self^k` for a non-negative integer power; `0^0 = 1`.
    pub fn powi(self, k: usize) -> LogValue {
        if k == 0 {
            return Self::ONE;
        }
        if self.is_zero() {
            return Self::ZERO;
        }
        LogValue {
            ln_abs: self.ln_abs * k as f64,
            phase: wrap_phase(self.phase * k as f64),
        }
    }

    pub fn scale_ln(self, ln_factor: f64) -> LogValue {
        if self.is_zero() {
            return self;
        }
        LogValue {
            ln_abs: self.ln_abs + ln_factor,
            phase: self.phase,
        }
    }

    pub fn conj(self) -> LogValue {
        LogValue {
            ln_abs: self.ln_abs,
            phase: if self.phase == 0.0 { 0.0 } else { wrap_phase(-self.phase) },
        }
    }

    pub fn add(self, other: LogValue) -> LogValue {
        sum(&[self, other]).value
    }
}

/// `mag · e^{i phase}`, exact on the real axis.
pub fn polar(mag: f64, phase: f64) -> Complex64 {
    if phase == 0.0 {
        Complex64::new(mag, 0.0)
    } else if phase.abs() == PI {
        Complex64::new(-mag, 0.0)
    } else {
        Complex64::from_polar(mag, phase)
    }
}

fn wrap_phase(p: f64) -> f64 {
    if p == 0.0 {
        return 0.0;
    }
    let w = p.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Result of a log-space summation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSum {
    pub value: LogValue,
    /// Terms carried different phases, so cancellation may have cost precision.
    pub mixed_phase: bool,
}

/// Stable sum of log-represented terms.
///
/// Same-phase terms reduce to a log-sum-exp and keep full relative precision.
/// Mixed phases are rescaled by the largest magnitude and accumulated with
/// Neumaier compensation.
pub fn sum(terms: &[LogValue]) -> LogSum {
    let mut max_ln = f64::NEG_INFINITY;
    let mut first_phase: Option<f64> = None;
    let mut mixed = false;
    for t in terms.iter().filter(|t| !t.is_zero()) {
        max_ln = max_ln.max(t.ln_abs);
        match first_phase {
            None => first_phase = Some(t.phase),
            Some(p) if p != t.phase => mixed = true,
            _ => {}
        }
    }
    let Some(phase0) = first_phase else {
        return LogSum {
            value: LogValue::ZERO,
            mixed_phase: false,
        };
    };
    if max_ln == f64::INFINITY {
        return LogSum {
            value: LogValue {
                ln_abs: f64::INFINITY,
                phase: phase0,
            },
            mixed_phase: mixed,
        };
    }
    if !mixed {
        let mut acc = Neumaier::default();
        for t in terms.iter().filter(|t| !t.is_zero()) {
            acc.add(Complex64::new((t.ln_abs - max_ln).exp(), 0.0));
        }
        let s = acc.total().re;
        return LogSum {
            value: LogValue {
                ln_abs: max_ln + s.ln(),
                phase: phase0,
            },
            mixed_phase: false,
        };
    }
    let mut acc = Neumaier::default();
    for t in terms.iter().filter(|t| !t.is_zero()) {
        acc.add(polar((t.ln_abs - max_ln).exp(), t.phase));
    }
    let z = acc.total();
    let value = LogValue::from_complex(z).scale_ln(max_ln);
    LogSum {
        value,
        mixed_phase: true,
    }
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct Neumaier {
    sum: Complex64,
    comp: Complex64,
}

impl Neumaier {
    pub fn add(&mut self, x: Complex64) {
        self.sum.re = step(self.sum.re, x.re, &mut self.comp.re);
        self.sum.im = step(self.sum.im, x.im, &mut self.comp.im);
    }

    pub fn total(&self) -> Complex64 {
        self.sum + self.comp
    }
}

fn step(sum: f64, x: f64, comp: &mut f64) -> f64 {
    let t = sum + x;
    if sum.abs() >= x.abs() {
        *comp += (sum - t) + x;
    } else {
        *comp += (x - t) + sum;
    }
    t
}

/// `ln C(n, k)` for all `k` in `0..=n`, built from a running log-factorial table.
pub fn ln_binomial_row(n: usize) -> Vec<f64> {
    let ln_fact = ln_factorials(n);
    (0..=n)
        .map(|k| ln_fact[n] - ln_fact[k] - ln_fact[n - k])
        .collect()
}

pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = Neumaier::default();
    out.push(0.0);
    for k in 1..=n {
        acc.add(Complex64::new((k as f64).ln(), 0.0));
        out.push(acc.total().re);
    }
    out
}

/// Error of Stirling's formula, `ln n! - (n + 1/2) ln n + n - ln √(2π)`.
fn stirling_error(n: usize, ln_fact_small: &[f64]) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let x = n as f64;
    if n <= 15 {
        return ln_fact_small[n] - (x + 0.5) * x.ln() + x - 0.5 * (2.0 * PI).ln();
    }
    let xx = x * x;
    if n > 500 {
        (S0 - S1 / xx) / x
    } else if n > 80 {
        (S0 - (S1 - S2 / xx) / xx) / x
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / xx) / xx) / xx) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / xx) / xx) / xx) / xx) / x
    }
}

/// Deviance term `x ln(x/m) + m - x`, computed without cancellation near `x = m`.
fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// `ln P(X = k)` for `X ~ Binomial(n, p)`, `k = 0..=n`.
///
/// Uses the saddle-point expansion, so every entry carries full relative
/// precision even when `ln n!` is far larger than the result.
pub fn ln_binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    if p <= 0.0 || q <= 0.0 {
        let hit = if p <= 0.0 { 0 } else { n };
        return (0..=n).map(|k| if k == hit { 0.0 } else { f64::NEG_INFINITY }).collect();
    }
    let ln_fact_small = ln_factorials(15);
    let nf = n as f64;
    let ln_q_pow = if p < 0.1 { nf * (-p).ln_1p() } else { nf * q.ln() };
    let ln_p_pow = if q < 0.1 { nf * (-q).ln_1p() } else { nf * p.ln() };
    let se_n = stirling_error(n, &ln_fact_small);
    (0..=n)
        .map(|k| {
            if k == 0 {
                return ln_q_pow;
            }
            if k == n {
                return ln_p_pow;
            }
            let x = k as f64;
            let lc = se_n
                - stirling_error(k, &ln_fact_small)
                - stirling_error(n - k, &ln_fact_small)
                - deviance(x, nf * p)
                - deviance(nf - x, nf * q);
            let lf = (2.0 * PI).ln() + x.ln() + (-x / nf).ln_1p();
            lc - 0.5 * lf
        })
        .collect()
}

/// `x ln(x/y)` with the conventions `0 ln 0 = 0` and `x ln(x/0) = +inf`.
pub fn xlogx_over_y(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y == 0.0 {
        f64::INFINITY
    } else {
        x * (x / y).ln()
    }
}

/// Relative entropy `D(q || p)` between Bernoulli laws.
pub fn bernoulli_relative_entropy(q: f64, p: f64) -> f64 {
    xlogx_over_y(q, p) + xlogx_over_y(1.0 - q, 1.0 - p)
}
