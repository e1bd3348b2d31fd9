//! Compression K[t] = P_t K P_t on a truncated grid: assembly, operator-norm
//! estimation, and the antilinear solves (1 +/- K[t]) x = b.
//!
//! The smooth kernel samples k(x_i + x_j) form a Hankel row, so applications
//! are FFT correlations. For real kernels the antilinear solve splits into
//! two real SPD systems handled by conjugate gradients; complex kernels fall
//! back to the dense real 2N x 2N block formulation with a pivoted LU.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Grid, LATTICE_TOL};
use crate::kernel::KernelRep;

/// Norm margin below 1 required before a solve is attempted.
pub const DEFAULT_NORM_MARGIN: f64 = 1e-3;

/// Relative residual bound enforced on every solve.
pub const SOLVE_RESIDUAL_BOUND: f64 = 1e-10;

/// Per-t grid construction: anchored at t, margins in x, spacing h.
#[derive(Debug, Clone)]
pub struct GridPolicy {
    pub left_margin: f64,
    pub right_margin: f64,
    pub h: f64,
}

impl GridPolicy {
    pub fn new(left_margin: f64, right_margin: f64, h: f64) -> GridPolicy {
        GridPolicy {
            left_margin,
            right_margin,
            h,
        }
    }

    /// Default desk-scale policy: [t - 40, t + 12] at h = 2^-7.
    pub fn default_policy() -> GridPolicy {
        GridPolicy::new(40.0, 12.0, 1.0 / 128.0)
    }

    pub fn grid_at(&self, t: f64) -> Result<(Arc<Grid>, usize)> {
        let grid = Arc::new(Grid::anchored(t, self.left_margin, self.right_margin, self.h)?);
        let ti = grid.index_exact(t)?;
        Ok((grid, ti))
    }
}

/// Discretized K[t], acting antilinearly on vectors over the nodes
/// 0..=t_index of its grid.
pub struct CompressedOperator {
    grid: Arc<Grid>,
    t_index: usize,
    /// Delta reflections (coefficient, r) with image j = r - i.
    deltas: Vec<(Complex64, i64)>,
    /// Smooth kernel samples at 2*left + p*h, p in 0..=2*t_index; empty when
    /// the kernel has no smooth part over the window.
    krow: Vec<Complex64>,
    weights: Vec<f64>,
    real: bool,
    fft: Option<MatvecFft>,
    norm_cache: std::sync::OnceLock<f64>,
}

struct MatvecFft {
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    krow_spec: Vec<Complex64>,
    m: usize,
}

/// Assemble the compression of k at the grid node t.
pub fn compress(k: &KernelRep, grid: &Arc<Grid>, t: f64) -> Result<CompressedOperator> {
    let t_index = grid.index_exact(t)?;
    let n = t_index + 1;
    let h = grid.spacing();
    let two_left = 2.0 * grid.left();

    let mut krow = Vec::new();
    if let Some(smooth) = &k.smooth {
        for &(s, _) in &smooth.jumps {
            let r_f = (s - two_left) / h;
            let aligned = (r_f - r_f.round()).abs() <= LATTICE_TOL.max(1e-12 * r_f.abs());
            if !aligned && r_f > 0.0 && r_f < 2.0 * t_index as f64 {
                return Err(Error::DeltaOffGrid {
                    location: s,
                    offset: (r_f - r_f.round()).abs(),
                });
            }
        }
        let cap = k.resolution_cap(h);
        krow = (0..=2 * t_index)
            .map(|p| {
                let s = two_left + p as f64 * h;
                if s <= cap {
                    (smooth.eval)(s)
                } else {
                    Complex64::default()
                }
            })
            .collect();
        if krow.iter().all(|v| v.norm() == 0.0) {
            krow.clear();
        }
    }

    let mut deltas = Vec::new();
    for &(c, a) in &k.deltas {
        let r_f = (a - two_left) / h;
        let r = r_f.round();
        if r_f < -0.5 || r_f > 2.0 * t_index as f64 - 0.5 {
            continue; // reflection cannot land inside the strict window
        }
        if (r_f - r).abs() > LATTICE_TOL.max(1e-12 * r_f.abs()) {
            return Err(Error::DeltaOffGrid {
                location: a,
                offset: (r_f - r).abs(),
            });
        }
        deltas.push((c, r as i64));
    }

    let mut weights = vec![h; n];
    weights[0] = h / 2.0;
    weights[n - 1] = h / 2.0;

    let real = k.real_valued;
    let fft = if krow.is_empty() {
        None
    } else {
        let m = (3 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        let ifft = planner.plan_fft_inverse(m);
        // Reversed kernel row so correlation becomes convolution.
        let mut kr = vec![Complex64::default(); m];
        for (p, &v) in krow.iter().enumerate() {
            kr[krow.len() - 1 - p] = v;
        }
        fft.process(&mut kr);
        Some(MatvecFft {
            fft,
            ifft,
            krow_spec: kr,
            m,
        })
    };

    Ok(CompressedOperator {
        grid: grid.clone(),
        t_index,
        deltas,
        krow,
        weights,
        real,
        fft,
        norm_cache: std::sync::OnceLock::new(),
    })
}

impl CompressedOperator {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn t_index(&self) -> usize {
        self.t_index
    }

    pub fn dim(&self) -> usize {
        self.t_index + 1
    }

    pub fn is_zero(&self) -> bool {
        self.krow.is_empty() && self.deltas.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The antilinear action: (T x)_i = sum_d c conj(x_{r-i})
    /// + sum_j krow[i+j] w_j conj(x_j). Delta reflections carry no weight.
    pub fn apply_antilinear(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        let g: Vec<Complex64> = x.iter().map(|v| v.conj()).collect();
        let mut out = if self.fft.is_some() {
            let gw: Vec<Complex64> = g
                .iter()
                .zip(self.weights.iter())
                .map(|(v, w)| v * *w)
                .collect();
            self.smooth_apply(&gw)
        } else {
            vec![Complex64::default(); n]
        };
        for &(c, r) in &self.deltas {
            for i in 0..n {
                let j = r - i as i64;
                if j >= 0 && j <= self.t_index as i64 && !self.is_corner(i, j) {
                    out[i] += c * g[j as usize];
                }
            }
        }
        out
    }

    // The strict projection P_t does not see the point x = t itself; the
    // only grid entry this distinguishes is a delta reflection landing on
    // the corner node pair (t, t).
    fn is_corner(&self, i: usize, j: i64) -> bool {
        i == self.t_index && j == self.t_index as i64
    }

    fn smooth_apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        let mut out = vec![Complex64::default(); n];
        if let Some(fftm) = &self.fft {
            let mut buf = vec![Complex64::default(); fftm.m];
            buf[..n].copy_from_slice(v);
            fftm.fft.process(&mut buf);
            for (x, y) in buf.iter_mut().zip(fftm.krow_spec.iter()) {
                *x *= y;
            }
            fftm.ifft.process(&mut buf);
            let scale = 1.0 / fftm.m as f64;
            // out[i] = sum_j krow[i + j] v[j] = conv(v, rev krow)[len(krow) - 1 - i]
            let top = self.krow.len() - 1;
            for i in 0..n {
                out[i] = buf[top - i] * scale;
            }
        }
        out
    }

    /// Symmetrized core S = D^{1/2} (krow Hankel) D^{1/2} + delta
    /// anti-diagonals; shares the operator norm with the antilinear action.
    fn sym_apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let d: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        let scaled: Vec<Complex64> = v.iter().zip(d.iter()).map(|(x, s)| x * *s).collect();
        let mut out = self.smooth_apply(&scaled);
        for (o, s) in out.iter_mut().zip(d.iter()) {
            *o *= *s;
        }
        let n = self.dim();
        for &(c, r) in &self.deltas {
            for i in 0..n {
                let j = r - i as i64;
                if j >= 0 && j <= self.t_index as i64 && !self.is_corner(i, j) {
                    out[i] += c * v[j as usize];
                }
            }
        }
        out
    }
}

/// Largest singular value of the compression, by power iteration on S* S
/// with a fixed start vector; deterministic across runs.
pub fn operator_norm(op: &CompressedOperator) -> f64 {
    *op.norm_cache.get_or_init(|| {
        if op.is_zero() {
            return 0.0;
        }
        let n = op.dim();
        let mut v: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(1.0 + 0.3 * (1.7 * i as f64).sin(), 0.0))
            .collect();
        let norm0 = l2(&v);
        for x in v.iter_mut() {
            *x /= norm0;
        }
        let mut lambda = 0.0_f64;
        for _ in 0..30_000 {
            let sv = op.sym_apply(&v);
            let mut ssv = op.sym_apply(&sv.iter().map(|x| x.conj()).collect::<Vec<_>>());
            for x in ssv.iter_mut() {
                *x = x.conj();
            }
            let nl = l2(&ssv);
            if nl == 0.0 {
                return 0.0;
            }
            for x in ssv.iter_mut() {
                *x /= nl;
            }
            let change = (nl - lambda).abs();
            lambda = nl;
            v = ssv;
            if change <= 1e-13 * lambda {
                break;
            }
        }
        lambda.sqrt()
    })
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn check_margin(op: &CompressedOperator, t: f64, margin: f64) -> Result<()> {
    let norm = operator_norm(op);
    if norm > 1.0 - margin {
        return Err(Error::NearSingular { t, norm, margin });
    }
    Ok(())
}

/// Solve x + sign * K[t] x = rhs (K[t] acting antilinearly), enforcing the
/// default norm margin.
pub fn solve_pm(op: &CompressedOperator, rhs: &[Complex64], sign: f64) -> Result<Vec<Complex64>> {
    solve_pm_with(op, rhs, sign, Some(DEFAULT_NORM_MARGIN))
}

/// Margin None disables the near-singularity gate (explicit caller override).
pub fn solve_pm_with(
    op: &CompressedOperator,
    rhs: &[Complex64],
    sign: f64,
    margin: Option<f64>,
) -> Result<Vec<Complex64>> {
    assert!(sign == 1.0 || sign == -1.0, "sign must be +1 or -1");
    assert_eq!(rhs.len(), op.dim());
    if let Some(m) = margin {
        check_margin(op, op.grid.node(op.t_index), m)?;
    }
    let x = if op.is_zero() {
        rhs.to_vec()
    } else if op.real {
        solve_real_cg(op, rhs, sign)?
    } else {
        solve_dense_block(op, rhs, sign)?
    };
    // Residual contract, checked in-code on every return.
    let tx = op.apply_antilinear(&x);
    let mut rnorm = 0.0;
    for i in 0..x.len() {
        rnorm += (x[i] + sign * tx[i] - rhs[i]).norm_sqr();
    }
    let rnorm = rnorm.sqrt();
    let bound = SOLVE_RESIDUAL_BOUND * l2(rhs).max(1e-300);
    if rnorm > bound {
        return Err(Error::ResidualCheck {
            residual: rnorm,
            bound,
        });
    }
    Ok(x)
}

/// Real-kernel path: split into real and imaginary parts, each solving the
/// SPD system (I +/- S) y = D^{1/2} b by conjugate gradients.
fn solve_real_cg(op: &CompressedOperator, rhs: &[Complex64], sign: f64) -> Result<Vec<Complex64>> {
    let n = op.dim();
    let d: Vec<f64> = op.weights.iter().map(|w| w.sqrt()).collect();
    let mut out = vec![Complex64::default(); n];
    for part in 0..2 {
        let sgn = if part == 0 { sign } else { -sign };
        let b: Vec<Complex64> = (0..n)
            .map(|i| {
                let v = if part == 0 { rhs[i].re } else { rhs[i].im };
                Complex64::new(v * d[i], 0.0)
            })
            .collect();
        let bnorm = l2(&b);
        if bnorm == 0.0 {
            continue;
        }
        let apply = |v: &[Complex64]| -> Vec<Complex64> {
            let mut sv = op.sym_apply(v);
            for (o, x) in sv.iter_mut().zip(v.iter()) {
                *o = x + sgn * *o;
            }
            sv
        };
        let y = cg(&apply, &b, 1e-14 * bnorm, 20 * n + 2000);
        for i in 0..n {
            let v = y[i].re / d[i];
            if part == 0 {
                out[i].re = v;
            } else {
                out[i].im = v;
            }
        }
    }
    Ok(out)
}

fn cg(
    apply: &dyn Fn(&[Complex64]) -> Vec<Complex64>,
    b: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> Vec<Complex64> {
    let n = b.len();
    let mut x = vec![Complex64::default(); n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rs: f64 = r.iter().map(|v| v.norm_sqr()).sum();
    let mut best = rs;
    let mut stagnant = 0;
    for _ in 0..max_iter {
        if rs.sqrt() <= tol {
            break;
        }
        let ap = apply(&p);
        let pap: f64 = p.iter().zip(ap.iter()).map(|(a, b)| (a.conj() * b).re).sum();
        if pap <= 0.0 {
            break; // loss of positive definiteness; residual gate will decide
        }
        let alpha = rs / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new: f64 = r.iter().map(|v| v.norm_sqr()).sum();
        if rs_new < 0.999 * best {
            best = rs_new;
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant > 80 {
                break; // floating-point floor reached
            }
        }
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    x
}

/// General path: real-linear block system
/// [[I + s Re M, s Im M], [s Im M, I - s Re M]] [Re x; Im x] = [Re b; Im b]
/// with M = C D, solved by a pivoted dense LU.
fn solve_dense_block(
    op: &CompressedOperator,
    rhs: &[Complex64],
    sign: f64,
) -> Result<Vec<Complex64>> {
    let n = op.dim();
    if n > 4200 {
        return Err(Error::Unsupported(format!(
            "dense block solve capped at 4200 unknowns, got {n}"
        )));
    }
    let m2 = 2 * n;
    let mut a = vec![0.0_f64; m2 * m2];
    // Columns of M = C D: weighted Hankel part plus unweighted reflections.
    let mut basis = vec![Complex64::default(); n];
    for j in 0..n {
        basis[j] = Complex64::new(1.0, 0.0);
        let mut col = op.smooth_apply(&basis);
        basis[j] = Complex64::default();
        for v in col.iter_mut() {
            *v *= op.weights[j];
        }
        for &(c, r) in &op.deltas {
            let i = r - j as i64;
            if i >= 0 && (i as usize) < n && !op.is_corner(i as usize, j as i64) {
                col[i as usize] += c;
            }
        }
        for i in 0..n {
            let (re, im) = (col[i].re, col[i].im);
            a[i * m2 + j] += sign * re;
            a[i * m2 + (n + j)] += sign * im;
            a[(n + i) * m2 + j] += sign * im;
            a[(n + i) * m2 + (n + j)] -= sign * re;
        }
    }
    for i in 0..m2 {
        a[i * m2 + i] += 1.0;
    }
    let mut b = vec![0.0_f64; m2];
    for i in 0..n {
        b[i] = rhs[i].re;
        b[n + i] = rhs[i].im;
    }
    lu_solve_in_place(&mut a, &mut b, m2)?;
    Ok((0..n).map(|i| Complex64::new(b[i], b[n + i])).collect())
}

fn lu_solve_in_place(a: &mut [f64], b: &mut [f64], n: usize) -> Result<()> {
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best < 1e-300 {
            return Err(Error::Unsupported("singular block system".into()));
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let inv = 1.0 / a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] * inv;
            if f == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for k in col + 1..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row * n + k] * b[k];
        }
        b[row] = s / a[row * n + row];
    }
    Ok(())
}

/// Operator norms along a t scan; the sequence must be nondecreasing up to
/// discretization noise.
pub fn norm_scan(
    k: &KernelRep,
    t_values: &[f64],
    policy: &GridPolicy,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(t_values.len());
    let mut prev: Option<(f64, f64)> = None;
    for &t in t_values {
        let (grid, _) = policy.grid_at(t)?;
        let op = compress(k, &grid, t)?;
        let norm = operator_norm(&op);
        if let Some((tp, np)) = prev {
            if t > tp && norm < np - 1e-8 {
                return Err(Error::NormMonotonicityViolated {
                    t_prev: tp,
                    prev: np,
                    t,
                    cur: norm,
                });
            }
        }
        prev = Some((t, norm));
        out.push((t, norm));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kernel_of;
    use crate::unimodular::make_function;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn op_for(id: &str, params: &[f64], t: f64, policy: &GridPolicy) -> CompressedOperator {
        let u = make_function(id, params).unwrap();
        let k = kernel_of(&u).unwrap();
        let (grid, _) = policy.grid_at(t).unwrap();
        compress(&k, &grid, t).unwrap()
    }

    #[test]
    fn pw_compression_zero_below_t0() {
        let policy = GridPolicy::new(8.0, 4.0, 1.0 / 128.0);
        let op = op_for("pw", &[1.0], 0.5, &policy);
        assert!(op.is_zero());
        assert_eq!(operator_norm(&op), 0.0);
    }

    #[test]
    fn mobius_compression_zero_for_negative_t() {
        let policy = GridPolicy::new(8.0, 4.0, 1.0 / 128.0);
        let op = op_for("mobius", &[], -0.5, &policy);
        assert!(op.is_zero());
    }

    #[test]
    fn pw_reflection_norm_is_one_above_a() {
        let policy = GridPolicy::new(8.0, 4.0, 1.0 / 128.0);
        let op = op_for("pw", &[1.0], 1.5, &policy);
        let norm = operator_norm(&op);
        assert!((norm - 1.0).abs() <= 1e-6, "norm = {norm}");
    }

    #[test]
    fn gamma_compression_spot_value_and_norm() {
        let u = make_function("gamma_ratio", &[]).unwrap();
        let k = kernel_of(&u).unwrap();
        // M[i][j] at x = y = -1 is k(-2) * w.
        let policy = GridPolicy::new(20.0, 4.0, 1.0 / 64.0);
        let (grid, _) = policy.grid_at(0.0).unwrap();
        let op = compress(&k, &grid, 0.0).unwrap();
        let i = grid.index_of(-1.0).unwrap();
        let e = vec![Complex64::default(); op.dim()]
            .iter()
            .enumerate()
            .map(|(j, _)| {
                if j == i {
                    c(1.0, 0.0)
                } else {
                    Complex64::default()
                }
            })
            .collect::<Vec<_>>();
        let col = op.apply_antilinear(&e);
        let want = k.smooth_at(-2.0) * op.weights()[i];
        assert!((col[i] - want).norm() < 1e-12);
        let norm = operator_norm(&op);
        assert!(norm > 0.0 && norm < 1.0, "norm = {norm}");
    }

    #[test]
    fn gamma_norm_grid_consistency() {
        // Norm at t = -2 agrees between two resolutions to 1e-4.
        let u = make_function("gamma_ratio", &[]).unwrap();
        let k = kernel_of(&u).unwrap();
        let mut norms = Vec::new();
        for h in [1.0 / 64.0, 1.0 / 128.0] {
            let policy = GridPolicy::new(30.0, 4.0, h);
            let (grid, _) = policy.grid_at(-2.0).unwrap();
            let op = compress(&k, &grid, -2.0).unwrap();
            norms.push(operator_norm(&op));
        }
        assert!(
            (norms[0] - norms[1]).abs() < 1e-4,
            "norms disagree: {norms:?}"
        );
        assert!(norms[1] > 0.0 && norms[1] < 1.0);
    }

    #[test]
    fn solve_identity_when_operator_zero() {
        let policy = GridPolicy::new(8.0, 4.0, 1.0 / 128.0);
        let op = op_for("pw", &[1.0], 0.5, &policy);
        let rhs: Vec<Complex64> = (0..op.dim()).map(|i| c(i as f64, -0.5)).collect();
        let x = solve_pm(&op, &rhs, 1.0).unwrap();
        for (a, b) in x.iter().zip(rhs.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn solve_residual_contract_gamma() {
        let policy = GridPolicy::new(25.0, 4.0, 1.0 / 64.0);
        let op = op_for("gamma_ratio", &[], 0.0, &policy);
        let rhs = vec![c(1.0, 0.0); op.dim()];
        for sign in [1.0, -1.0] {
            let x = solve_pm(&op, &rhs, sign).unwrap();
            // residual verified inside solve_pm; basic sanity on the output
            assert!(x.iter().all(|v| v.re.is_finite()));
            assert!(x.iter().any(|v| (v - c(1.0, 0.0)).norm() > 1e-3));
        }
    }

    #[test]
    fn near_singular_reported() {
        let policy = GridPolicy::new(8.0, 4.0, 1.0 / 128.0);
        let op = op_for("pw", &[1.0], 1.5, &policy);
        let rhs = vec![c(1.0, 0.0); op.dim()];
        assert!(matches!(
            solve_pm(&op, &rhs, 1.0),
            Err(Error::NearSingular { .. })
        ));
    }

    #[test]
    fn neumann_series_equivalence_on_small_instances() {
        // Random small dense antilinear systems with norm <= 0.5: solve_pm
        // must match the brute-force Neumann sum x = sum (-s T)^n rhs.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..6 {
            let n = 5 + (trial % 4);
            let grid = Arc::new(Grid::new(0.0, 0.5, n + 2).unwrap());
            let t = grid.node(n - 1);
            // Build a random real symmetric Hankel kernel via a fake KernelRep.
            let row: Vec<f64> = (0..2 * n - 1).map(|_| rng.gen_range(-0.2..0.2)).collect();
            let row2 = row.clone();
            let left = grid.left();
            let h = grid.spacing();
            let k = KernelRep {
                deltas: vec![],
                smooth: Some(crate::kernel::SmoothPart {
                    eval: Arc::new(move |x: f64| {
                        let p = ((x - 2.0 * left) / h).round() as i64;
                        if p >= 0 && (p as usize) < row2.len() {
                            c(row2[p as usize], 0.0)
                        } else {
                            Complex64::default()
                        }
                    }),
                    jumps: vec![],
                }),
                real_valued: true,
                support_min: f64::NEG_INFINITY,
                tail_rate: None,
                oscillatory_growth: false,
            };
            let op = compress(&k, &grid, t).unwrap();
            if operator_norm(&op) > 0.5 {
                continue;
            }
            let rhs: Vec<Complex64> = (0..op.dim())
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            for sign in [1.0, -1.0] {
                let direct = solve_pm(&op, &rhs, sign).unwrap();
                let mut acc = rhs.clone();
                let mut term = rhs.clone();
                for _ in 0..200 {
                    let tt = op.apply_antilinear(&term);
                    term = tt.iter().map(|v| -sign * v).collect();
                    for i in 0..acc.len() {
                        acc[i] += term[i];
                    }
                }
                let diff: f64 = direct
                    .iter()
                    .zip(acc.iter())
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(diff <= 1e-8, "Neumann mismatch {diff} (sign {sign})");
            }
        }
    }

    #[test]
    fn dense_block_matches_cg_on_real_kernel() {
        // Force the dense path by marking the kernel complex; answers agree.
        let u = make_function("gamma_ratio", &[]).unwrap();
        let mut k = kernel_of(&u).unwrap();
        let policy = GridPolicy::new(6.0, 2.0, 1.0 / 16.0);
        let (grid, _) = policy.grid_at(-1.0).unwrap();
        let op_real = compress(&k, &grid, -1.0).unwrap();
        k.real_valued = false;
        let op_cplx = compress(&k, &grid, -1.0).unwrap();
        let rhs: Vec<Complex64> = (0..op_real.dim())
            .map(|i| c((i as f64 * 0.1).sin(), (i as f64 * 0.07).cos()))
            .collect();
        let a = solve_pm(&op_real, &rhs, -1.0).unwrap();
        let b = solve_pm(&op_cplx, &rhs, -1.0).unwrap();
        let diff: f64 = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-9, "paths disagree by {diff}");
    }

    #[test]
    fn norm_scan_patterns() {
        let policy = GridPolicy::new(8.0, 4.0, 1.0 / 128.0);
        let scans = norm_scan(
            &kernel_of(&make_function("pw", &[1.0]).unwrap()).unwrap(),
            &[0.0, 0.5, 0.9375, 1.125, 1.5],
            &policy,
        )
        .unwrap();
        let want = [0.0, 0.0, 0.0, 1.0, 1.0];
        for ((t, norm), w) in scans.iter().zip(want.iter()) {
            assert!((norm - w).abs() <= 1e-3, "pw norm at t = {t}: {norm}");
        }
        let scans = norm_scan(
            &kernel_of(&make_function("mobius", &[]).unwrap()).unwrap(),
            &[-1.0, -0.5],
            &policy,
        )
        .unwrap();
        assert!(scans.iter().all(|(_, n)| *n == 0.0));
    }

    #[test]
    fn gamma_norms_increase() {
        let policy = GridPolicy::new(30.0, 4.0, 1.0 / 64.0);
        let k = kernel_of(&make_function("gamma_ratio", &[]).unwrap()).unwrap();
        let rows = norm_scan(&k, &[-2.0, -1.0, 0.0, 1.0], &policy).unwrap();
        for pair in rows.windows(2) {
            assert!(pair[1].1 > pair[0].1, "strictly increasing: {rows:?}");
        }
        assert!(rows.iter().all(|(_, n)| *n < 1.0), "{rows:?}");
    }

    #[test]
    fn complex_symmetry_of_weighted_kernel_matrix() {
        let u = make_function("gamma_ratio", &[]).unwrap();
        let k = kernel_of(&u).unwrap();
        let policy = GridPolicy::new(6.0, 2.0, 1.0 / 8.0);
        let (grid, _) = policy.grid_at(0.0).unwrap();
        let op = compress(&k, &grid, 0.0).unwrap();
        let n = op.dim();
        let d: Vec<f64> = op.weights().iter().map(|w| w.sqrt()).collect();
        let mut s = vec![0.0; n * n];
        let mut e = vec![Complex64::default(); n];
        for j in 0..n {
            e[j] = c(1.0, 0.0);
            let col = op.sym_apply(&e);
            e[j] = Complex64::default();
            for i in 0..n {
                s[i * n + j] = col[i].re;
            }
        }
        let _ = d;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((s[i * n + j] - s[j * n + i]).abs());
            }
        }
        assert!(worst <= 1e-10, "asymmetry {worst}");
    }
}
