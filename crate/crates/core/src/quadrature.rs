//! Adaptive Gauss–Kronrod (G10/K21) quadrature for real and complex
//! integrands, and Gauss–Legendre rules.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};

// Kronrod abscissae on [0, 1]; odd indices are the 10-point Gauss nodes.
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
    0.123491976262065851077208980251680,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// Values the integrator can accumulate.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    const ZERO: Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    const ZERO: Self = 0.0;
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    const ZERO: Self = Complex64 { re: 0.0, im: 0.0 };
    fn magnitude(self) -> f64 {
        self.re.hypot(self.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Cap on the number of subintervals.
    pub max_intervals: usize,
    /// Uniform panels to start from (useful for oscillatory integrands).
    pub initial_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rtol: 1e-10,
            atol: 0.0,
            max_intervals: 200_000,
            initial_panels: 1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    /// Sum of per-interval |K21 − G10| estimates.
    pub error: f64,
    /// `∫|f|`, used to set a roundoff floor on the tolerance.
    pub abs_integral: f64,
    pub intervals: usize,
    pub converged: bool,
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
    abs: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> Panel<T> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[10];
    let mut g = T::ZERO;
    let mut abs = fc.magnitude() * WGK[10];
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        let pair = f1 + f2;
        k = k + pair * WGK[j];
        abs += (f1.magnitude() + f2.magnitude()) * WGK[j];
        if j % 2 == 1 {
            g = g + pair * WG[j / 2];
        }
    }
    let value = k * h;
    let error = ((k - g) * h).magnitude();
    let error = if error.is_nan() { f64::INFINITY } else { error };
    Panel {
        a,
        b,
        value,
        error,
        abs: abs * h.abs(),
    }
}

/// Adaptive quadrature on `[a, b]`. Never fails; check `converged`.
///
/// The tolerance is `max(rtol·|I|, atol, 50·ε·∫|f|)`; the last term stops
/// refinement once cancellation noise dominates the estimate.
pub fn gauss_kronrod<T: QuadValue, F: FnMut(f64) -> T>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult<T> {
    let panels = opts.initial_panels.max(1);
    let mut heap = BinaryHeap::with_capacity(panels * 2);
    let width = (b - a) / panels as f64;
    for p in 0..panels {
        let lo = a + width * p as f64;
        let hi = if p + 1 == panels { b } else { a + width * (p + 1) as f64 };
        heap.push(kronrod21(&mut f, lo, hi));
    }
    let totals = |heap: &BinaryHeap<Panel<T>>| {
        let mut v = T::ZERO;
        let mut e = 0.0;
        let mut s = 0.0;
        for p in heap.iter() {
            v = v + p.value;
            e += p.error;
            s += p.abs;
        }
        (v, e, s)
    };
    let tolerance = |v: T, s: f64| (opts.rtol * v.magnitude()).max(opts.atol).max(50.0 * f64::EPSILON * s);

    let (mut value, mut error, mut abs) = totals(&heap);
    while error > tolerance(value, abs) && heap.len() < opts.max_intervals {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // interval cannot be split further in floating point
            heap.push(worst);
            break;
        }
        let left = kronrod21(&mut f, worst.a, mid);
        let right = kronrod21(&mut f, mid, worst.b);
        value = value - worst.value + left.value + right.value;
        error += left.error + right.error - worst.error;
        abs += left.abs + right.abs - worst.abs;
        heap.push(left);
        heap.push(right);
    }
    // running sums drift; recompute once at the end
    let (value, error, abs) = totals(&heap);
    QuadResult {
        value,
        error,
        abs_integral: abs,
        intervals: heap.len(),
        converged: error <= tolerance(value, abs),
    }
}

/// Like [`gauss_kronrod`] but turns non-convergence into an error.
pub fn integrate<T: QuadValue, F: FnMut(f64) -> T>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<T> {
    let r = gauss_kronrod(f, a, b, opts);
    if r.converged {
        Ok(r.value)
    } else {
        Err(Error::Quadrature {
            achieved: r.error,
            requested: (opts.rtol * r.value.magnitude()).max(opts.atol),
        })
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
