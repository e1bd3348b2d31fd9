//! The distributional kernel k with u = F k, represented as delta components
//! plus a smooth part, and the antilinear conjugation
//! (K f)(x) = sum_j c_j conj(f(a_j - x)) + int k_s(x + y) conj(f(y)) dy
//! applied to grid functions.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{conjugate_node_weights, GridFn, LATTICE_TOL};
use crate::special::{bessel_j0, gamma_complex};
use crate::unimodular::UnimodularFunction;

type RealToCplx = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Smooth (function) part of the kernel, with its discontinuities as
/// (location, right limit minus left limit) pairs. The evaluator returns the
/// mean of the one-sided limits at a jump point.
#[derive(Clone)]
pub struct SmoothPart {
    pub eval: RealToCplx,
    pub jumps: Vec<(f64, Complex64)>,
}

/// k = sum_j c_j delta(x - a_j) + smooth(x).
#[derive(Clone)]
pub struct KernelRep {
    pub deltas: Vec<(Complex64, f64)>,
    pub smooth: Option<SmoothPart>,
    /// True iff u is symmetric; then all components are real.
    pub real_valued: bool,
    /// The smooth part vanishes below this point (NEG_INFINITY if unbounded).
    pub support_min: f64,
    /// Decay rate lambda of pure-exponential K-image tails, when the kernel
    /// has one (Blaschke-type kernels); None otherwise.
    pub tail_rate: Option<f64>,
    /// True for kernels with oscillatory growth of the Gamma-ratio type
    /// (phase 2 e^{s/2}); quadrature is only trusted up to the argument
    /// where one grid step resolves half a radian of phase.
    pub oscillatory_growth: bool,
}

impl std::fmt::Debug for KernelRep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelRep")
            .field("deltas", &self.deltas)
            .field("has_smooth", &self.smooth.is_some())
            .field("real_valued", &self.real_valued)
            .field("support_min", &self.support_min)
            .finish()
    }
}

impl KernelRep {
    pub fn smooth_at(&self, x: f64) -> Complex64 {
        match &self.smooth {
            Some(s) => (s.eval)(x),
            None => Complex64::default(),
        }
    }

    /// Largest kernel argument whose oscillation the spacing h still
    /// resolves; infinite for non-oscillatory kernels.
    pub fn resolution_cap(&self, h: f64) -> f64 {
        if self.oscillatory_growth {
            2.0 * (0.5 / h).ln()
        } else {
            f64::INFINITY
        }
    }
}

/// Closed-form kernel of a registry function.
pub fn kernel_of(u: &UnimodularFunction) -> Result<KernelRep> {
    match u.id.as_str() {
        "pw" => {
            let a = u.params[0];
            Ok(KernelRep {
                deltas: vec![(Complex64::new(1.0, 0.0), 2.0 * a)],
                smooth: None,
                real_valued: true,
                support_min: 2.0 * a,
                tail_rate: None,
                oscillatory_growth: false,
            })
        }
        "mobius" => Ok(KernelRep {
            deltas: vec![(Complex64::new(-1.0, 0.0), 0.0)],
            smooth: Some(SmoothPart {
                eval: Arc::new(|x: f64| {
                    if x > 0.0 {
                        Complex64::new(2.0 * (-x).exp(), 0.0)
                    } else if x == 0.0 {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::default()
                    }
                }),
                jumps: vec![(0.0, Complex64::new(2.0, 0.0))],
            }),
            real_valued: true,
            support_min: 0.0,
            tail_rate: Some(1.0),
            oscillatory_growth: false,
        }),
        "blaschke" | "product" => {
            let (shift, zeros) = if u.id == "blaschke" {
                (0.0, u.params.as_slice())
            } else {
                (2.0 * u.params[0], &u.params[1..])
            };
            let zeros: Vec<Complex64> = zeros
                .chunks(2)
                .map(|p| Complex64::new(p[0], p[1]))
                .collect();
            // Partial fractions of u - 1 at the simple poles conj(w_j):
            // F^{-1}[1/(z - p)] = -i e^{-i p x} 1_{x>0} for Im p < 0.
            let mut terms: Vec<(Complex64, Complex64)> = Vec::new();
            for (j, w) in zeros.iter().enumerate() {
                let p = w.conj();
                let mut rho = Complex64::new(1.0, 0.0);
                for (k, v) in zeros.iter().enumerate() {
                    rho *= p - v;
                    if k != j {
                        rho /= p - v.conj();
                    }
                }
                terms.push((Complex64::new(0.0, -1.0) * rho, Complex64::new(0.0, -1.0) * p));
            }
            // smooth(x) = sum coeff_j * exp(rate_j * (x - shift)) on x > shift
            let at_edge: Complex64 = terms.iter().map(|(c, _)| c).sum();
            let terms2 = terms.clone();
            let real = u.symmetric;
            let tail = zeros.iter().map(|w| w.im).fold(f64::INFINITY, f64::min);
            Ok(KernelRep {
                deltas: vec![(Complex64::new(1.0, 0.0), shift)],
                smooth: Some(SmoothPart {
                    eval: Arc::new(move |x: f64| {
                        let s = x - shift;
                        if s > 0.0 {
                            terms2.iter().map(|(c, r)| c * (r * s).exp()).sum()
                        } else if s == 0.0 {
                            at_edge / 2.0
                        } else {
                            Complex64::default()
                        }
                    }),
                    jumps: vec![(shift, at_edge)],
                }),
                real_valued: real,
                support_min: shift,
                tail_rate: Some(tail),
                oscillatory_growth: false,
            })
        }
        "gamma_ratio" => Ok(KernelRep {
            deltas: vec![],
            smooth: Some(SmoothPart {
                eval: Arc::new(|x: f64| {
                    let e = (x / 2.0).exp();
                    Complex64::new(e * bessel_j0(2.0 * e), 0.0)
                }),
                jumps: vec![],
            }),
            real_valued: true,
            support_min: f64::NEG_INFINITY,
            tail_rate: None,
            oscillatory_growth: true,
        }),
        other => Err(Error::NoClosedForm(other.into())),
    }
}

/// Smooth kernel samples recovered from the shifted-line inverse transform
/// k_s(x) = (1/2pi) int_{Im z = c} [u(z) - deltas](z) e^{-izx} dz.
pub struct NumericKernel {
    xi: Vec<f64>,
    f: Vec<Complex64>,
    dxi: f64,
    c: f64,
}

impl NumericKernel {
    pub fn eval(&self, x: f64) -> Complex64 {
        let mut acc = Complex64::default();
        let n = self.xi.len();
        for (j, (&xi, &fj)) in self.xi.iter().zip(self.f.iter()).enumerate() {
            let w = if j == 0 || j + 1 == n { 0.5 } else { 1.0 };
            acc += fj * Complex64::new(0.0, -xi * x).exp() * w;
        }
        acc *= self.dxi;
        // The truncated 1/xi tails are themselves trapezoid sums; Abel
        // summation of sum_m f(Xi + m d) q^m with q = e^{-i d x} captures
        // them without resolving the oscillation.
        let d = self.dxi;
        let one = Complex64::new(1.0, 0.0);
        let q_hi = Complex64::new(0.0, -d * x).exp();
        if x.abs() > 1e-3 && (one - q_hi).norm() > 1e-6 {
            let fp_hi = (3.0 * self.f[n - 1] - 4.0 * self.f[n - 2] + self.f[n - 3]) / (2.0 * d);
            let fp_lo = (-3.0 * self.f[0] + 4.0 * self.f[1] - self.f[2]) / (2.0 * d);
            let xi_max = self.xi[n - 1];
            let e_hi = Complex64::new(0.0, -xi_max * x).exp();
            let e_lo = Complex64::new(0.0, xi_max * x).exp();
            let g_hi = q_hi / (one - q_hi);
            acc += d * e_hi * (self.f[n - 1] * (0.5 + g_hi) + fp_hi * d * g_hi * g_hi / q_hi);
            let q_lo = Complex64::new(0.0, d * x).exp();
            let g_lo = q_lo / (one - q_lo);
            acc += d * e_lo * (self.f[0] * (0.5 + g_lo) - fp_lo * d * g_lo * g_lo / q_lo);
        }
        acc * (self.c * x).exp() / (2.0 * std::f64::consts::PI)
    }
}

/// Sample the smooth kernel part of an inner u by quadrature on the line
/// Im z = c, after subtracting the delta transforms analytically.
pub fn numeric_kernel(
    u: &UnimodularFunction,
    deltas: &[(Complex64, f64)],
    c: f64,
    window: (f64, f64),
    n: usize,
) -> Result<NumericKernel> {
    if !u.inner {
        return Err(Error::NotInner);
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::StripTooNarrow(c));
    }
    let span = window.0.abs().max(window.1.abs()) + 4.0;
    let dxi = std::f64::consts::PI / span; // alias period 2 pi / dxi covers the window
    let deltas = deltas.to_vec();
    let mut xi = Vec::with_capacity(n);
    let mut f = Vec::with_capacity(n);
    let half = n as i64 / 2;
    for j in -half..=half {
        let x = j as f64 * dxi;
        let z = Complex64::new(x, c);
        let mut v = u.eval_cont(z);
        for (coeff, a) in &deltas {
            v -= coeff * (Complex64::new(0.0, *a) * z).exp();
        }
        xi.push(x);
        f.push(v);
    }
    Ok(NumericKernel { xi, f, dxi, c })
}

/// The conjugation applied to a grid function, evaluated on the node range
/// [out_lo, out_hi] of the same grid.
///
/// Delta components are exact index reflections; a delta whose reflection
/// would land between nodes of the support is a hard error. The smooth part
/// is a composite trapezoid over the support, assembled as an FFT
/// correlation against the kernel sample row.
pub fn apply_k(k: &KernelRep, f: &GridFn, out_lo: usize, out_hi: usize) -> Result<GridFn> {
    let grid = f.grid().clone();
    assert!(out_lo <= out_hi && out_hi < grid.len());
    let h = grid.spacing();
    let mut vals = vec![Complex64::default(); out_hi - out_lo + 1];
    let lo_f = f.lo();
    let hi_f = f.hi();

    if let Some(smooth) = &k.smooth {
        // A discontinuity of the smooth part must fall on the lattice when it
        // crosses the interior of the quadrature range, or the trapezoid
        // loses its order there.
        for &(s, _) in &smooth.jumps {
            let r_f = (s - 2.0 * grid.left()) / h;
            let aligned = (r_f - r_f.round()).abs() <= LATTICE_TOL.max(1e-12 * r_f.abs());
            if aligned {
                continue;
            }
            let crosses = (out_lo as f64) < r_f - (lo_f as f64) && r_f - (hi_f as f64) < (out_hi as f64);
            if crosses {
                return Err(Error::DeltaOffGrid {
                    location: s,
                    offset: (r_f - r_f.round()).abs(),
                });
            }
        }
        let (w_lo, w) = conjugate_node_weights(f);
        let cap = k.resolution_cap(h);
        let arg = |p: usize| 2.0 * grid.left() + p as f64 * h;
        let p_min = out_lo + w_lo;
        let p_max = out_hi + w_lo + w.len() - 1;
        let krow: Vec<Complex64> = (p_min..=p_max)
            .map(|p| {
                let s = arg(p);
                if s <= cap {
                    k.smooth_at(s)
                } else {
                    Complex64::default()
                }
            })
            .collect();
        // out[i] = sum_j krow[(i - out_lo) + (j - w_lo)] w[j - w_lo]
        let conv = fft_correlate(&krow, &w);
        for (i, v) in vals.iter_mut().enumerate() {
            *v += conv[i];
        }
    }

    let mut jumps: Vec<(usize, Complex64)> = Vec::new();
    for &(c, a) in &k.deltas {
        let r_f = (a - 2.0 * grid.left()) / h;
        let r = r_f.round();
        let aligned = (r_f - r).abs() <= LATTICE_TOL.max(1e-12 * r_f.abs());
        // Contribution exists for output i with r - i inside the support.
        let i_min = (r_f - hi_f as f64 - 0.5).ceil().max(out_lo as f64);
        let i_max = (r_f - lo_f as f64 + 0.5).floor().min(out_hi as f64);
        if i_min > i_max {
            continue;
        }
        if !aligned {
            return Err(Error::DeltaOffGrid {
                location: a,
                offset: (r_f - r).abs(),
            });
        }
        let r = r as i64;
        for i in i_min as usize..=i_max as usize {
            let j = r - i as i64;
            if j >= lo_f as i64 && j <= hi_f as i64 {
                vals[i - out_lo] += c * f.val(j as usize).conj();
            }
        }
        // Jump bookkeeping at images of the support edges and interior jumps.
        let mut sources: Vec<usize> = vec![lo_f, hi_f];
        sources.extend(f.interior_jumps().map(|(e, _)| e));
        sources.sort_unstable();
        sources.dedup();
        for e in sources {
            let i_star = r - e as i64;
            if i_star < out_lo as i64 || i_star > out_hi as i64 {
                continue;
            }
            let i_star = i_star as usize;
            // Stored output value is the left limit: c conj(f right limit).
            let corr = c * (f.limit_right(e) - f.val(e)).conj();
            vals[i_star - out_lo] += corr;
            jumps.push((i_star, -c * f.jump_at(e).conj()));
        }
    }

    let mut out = GridFn::new(grid, out_lo, vals);
    for (i, j) in jumps {
        if i > out_lo && i < out_hi && j.norm() > 0.0 {
            out.add_jump(i, j);
        }
    }
    Ok(out)
}

/// Correlation out[m] = sum_q a[m + q] b[q] for m in 0..(a.len() - b.len() + 1),
/// via FFT convolution with the reversed second factor.
pub fn fft_correlate(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let out_len = a.len() - b.len() + 1;
    let m = (a.len() + b.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    let ifft = planner.plan_fft_inverse(m);
    let mut fa = vec![Complex64::default(); m];
    fa[..a.len()].copy_from_slice(a);
    let mut fb = vec![Complex64::default(); m];
    for (q, &v) in b.iter().enumerate() {
        fb[b.len() - 1 - q] = v;
    }
    fft.process(&mut fa);
    fft.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(fb.iter()) {
        *x *= y;
    }
    ifft.process(&mut fa);
    let scale = 1.0 / m as f64;
    (0..out_len)
        .map(|i| fa[i + b.len() - 1] * scale)
        .collect()
}

/// Shared test helper: the Gamma-ratio boundary value on the real line,
/// independent of the registry closure.
pub fn gamma_ratio_boundary(x: f64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let half = Complex64::new(0.5, 0.0);
    gamma_complex(half + i * x).unwrap() / gamma_complex(half - i * x).unwrap()
}
