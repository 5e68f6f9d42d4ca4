//! Adaptive Gauss–Kronrod quadrature of log-space integrands over `ℝ^d`.
//!
//! Integrals are returned as logarithms so that Gram entries spanning many
//! orders of magnitude keep full relative precision.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208109052987,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

/// Breakpoints sit at `±σ·2^k` around the peak, `σ` from the curvature.
const BREAK_GROWTH: f64 = 2.0;

const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Scan range `[-range, range]` used to locate the bulk of the integrand.
    pub scan_range: f64,
    pub scan_step: f64,
    /// Integrand values below `max - cutoff` (in log space) are dropped.
    pub cutoff: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_subdivisions: 2000,
            scan_range: 60.0,
            scan_step: 4.0,
            cutoff: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogIntegral {
    pub log_value: f64,
    pub rel_error: f64,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut fv = [(0.0, 0.0); 10];
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let x = h * XGK[j];
        fv[j] = (f(c - x), f(c + x));
        let s = fv[j].0 + fv[j].1;
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    // QUADPACK's error scaling
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs());
    }
    let asc = asc * h.abs();
    let mut error = ((kronrod - gauss) * h).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    Segment {
        a,
        b,
        value: kronrod * h,
        error,
    }
}

/// Adaptive integration of a nonnegative function on `[a, b]`.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    pieces: usize,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    let pieces = pieces.max(1);
    let width = (b - a) / pieces as f64;
    let breaks: Vec<f64> = (0..=pieces)
        .map(|i| if i == pieces { b } else { a + i as f64 * width })
        .collect();
    integrate_breaks(f, &breaks, cfg)
}

/// Adaptive integration over consecutive intervals of `breaks`.
pub fn integrate_breaks(
    f: impl Fn(f64) -> f64,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    let mut heap: BinaryHeap<Segment> = breaks.windows(2).map(|w| gk21(&f, w[0], w[1])).collect();
    let mut splits = 0;
    loop {
        let total: f64 = heap.iter().map(|s| s.value).sum();
        let err: f64 = heap.iter().map(|s| s.error).sum();
        if err <= cfg.rel_tol * total.abs() || total == 0.0 {
            return Ok((total, if total != 0.0 { err / total.abs() } else { 0.0 }));
        }
        if splits >= cfg.max_subdivisions {
            return Err(Error::Quadrature {
                achieved: err / total.abs(),
                requested: cfg.rel_tol,
            });
        }
        let worst = heap.pop().expect("nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        heap.push(gk21(&f, worst.a, mid));
        heap.push(gk21(&f, mid, worst.b));
        splits += 1;
    }
}

fn golden_max(h: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = h(x1);
    let mut f2 = h(x2);
    for _ in 0..60 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = h(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = h(x1);
        }
        if b - a < 1e-4 {
            break;
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `log ∫_ℝ exp(h(x)) dx` for a unimodal log-integrand with exponentially
/// decaying tails. The peak is bracketed on the scan grid, so a bump
/// narrower than `scan_step` away from the main mode can be missed.
pub fn log_integrate_line(h: impl Fn(f64) -> f64, cfg: &QuadratureConfig) -> Result<LogIntegral> {
    let n = (2.0 * cfg.scan_range / cfg.scan_step).round() as usize;
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..=n {
        let x = -cfg.scan_range + i as f64 * cfg.scan_step;
        let v = h(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    if best.1 == f64::NEG_INFINITY {
        return Ok(LogIntegral {
            log_value: f64::NEG_INFINITY,
            rel_error: 0.0,
        });
    }
    let (xpk, hmax) = {
        let (x, v) = golden_max(&h, best.0 - cfg.scan_step, best.0 + cfg.scan_step);
        if v > best.1 {
            (x, v)
        } else {
            best
        }
    };
    let e = 1e-3;
    let curvature = (2.0 * hmax - h(xpk - e) - h(xpk + e)) / (e * e);
    let sigma = if curvature > 0.0 {
        curvature.sqrt().recip().clamp(1e-3, 1.0)
    } else {
        1.0
    };
    // tails: grow the step geometrically until the integrand falls below
    // the cutoff, keeping the points as breakpoints for the adaptive pass
    let limit = 700.0;
    let walk = |dir: f64| {
        let mut pts = Vec::new();
        let mut step = sigma;
        loop {
            let x = xpk + dir * step;
            pts.push(x);
            if step > limit || h(x) <= hmax - cfg.cutoff {
                return pts;
            }
            step *= BREAK_GROWTH;
        }
    };
    let mut breaks: Vec<f64> = walk(-1.0).into_iter().rev().collect();
    breaks.push(xpk);
    breaks.extend(walk(1.0));
    let (value, rel_error) = integrate_breaks(|x| (h(x) - hmax).exp(), &breaks, cfg)?;
    Ok(LogIntegral {
        log_value: hmax + value.ln(),
        rel_error,
    })
}

/// `log ∫_{ℝ^d} exp(h(x)) dx` by nesting one-dimensional integrals, the last
/// coordinate innermost.
pub fn log_integrate(
    h: &(dyn Fn(&[f64]) -> f64 + Sync),
    d: usize,
    cfg: &QuadratureConfig,
) -> Result<LogIntegral> {
    let mut prefix = Vec::with_capacity(d);
    nested(h, d, &mut prefix, cfg)
}

fn nested(
    h: &(dyn Fn(&[f64]) -> f64 + Sync),
    d: usize,
    prefix: &mut Vec<f64>,
    cfg: &QuadratureConfig,
) -> Result<LogIntegral> {
    if prefix.len() + 1 == d {
        let base = prefix.clone();
        return log_integrate_line(
            |x| {
                let mut p = base.clone();
                p.push(x);
                h(&p)
            },
            cfg,
        );
    }
    let inner_cfg = QuadratureConfig {
        rel_tol: cfg.rel_tol * 1e-2,
        ..*cfg
    };
    let worst = std::cell::Cell::new(0.0f64);
    let failure = std::cell::RefCell::new(None);
    let base = prefix.clone();
    let outer = log_integrate_line(
        |x| {
            let mut p = base.clone();
            p.push(x);
            match nested(h, d, &mut p, &inner_cfg) {
                Ok(r) => {
                    worst.set(worst.get().max(r.rel_error));
                    r.log_value
                }
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NEG_INFINITY
                }
            }
        },
        cfg,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(LogIntegral {
        log_value: outer.log_value,
        rel_error: outer.rel_error + worst.get(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian() {
        let r = log_integrate_line(|x| -x * x, &QuadratureConfig::default()).unwrap();
        assert!((r.log_value - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-12);
    }

    #[test]
    fn narrow_offset_peak() {
        // ∫ exp(-400 (x-13.3)^2) dx = sqrt(pi/400)
        let r = log_integrate_line(
            |x| -400.0 * (x - 13.3).powi(2),
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert!((r.log_value - 0.5 * (std::f64::consts::PI / 400.0).ln()).abs() < 1e-11);
    }

    #[test]
    fn beta_function_in_log_coordinates() {
        // ∫_0^∞ s^k (1+s)^{-(n+2)} ds = B(k+1, n-k+1); with s = e^{2x}, ds = 2 e^{2x} dx
        let (k, n) = (3.0, 10.0);
        let h = |x: f64| (2.0 * k + 2.0) * x - (n + 2.0) * (2.0 * x).exp().ln_1p() + 2f64.ln();
        let r = log_integrate_line(h, &QuadratureConfig::default()).unwrap();
        // B(4, 8) = 3! 7! / 11!
        let exact = (6.0f64 * 5040.0 / 39916800.0).ln();
        assert!((r.log_value - exact).abs() < 1e-11);
    }

    #[test]
    fn two_dimensional_product() {
        let h = |x: &[f64]| -x[0] * x[0] - 2.0 * (x[1] - 1.0).powi(2);
        let r = log_integrate(&h, 2, &QuadratureConfig::default()).unwrap();
        let exact = 0.5 * std::f64::consts::PI.ln() + 0.5 * (std::f64::consts::PI / 2.0).ln();
        assert!((r.log_value - exact).abs() < 1e-10);
    }

    #[test]
    fn kinked_integrand_converges() {
        let r = log_integrate_line(|x| -x.abs(), &QuadratureConfig::default()).unwrap();
        assert!((r.log_value - 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn non_convergence_is_reported() {
        let cfg = QuadratureConfig {
            max_subdivisions: 1,
            rel_tol: 1e-15,
            ..Default::default()
        };
        let r = integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, 1, &cfg);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
