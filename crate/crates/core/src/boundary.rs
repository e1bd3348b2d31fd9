//! Boundary functions Phi, Psi of the compression equations, the Hamiltonian
//! H(t) built from their diagonal values, and the phi+- distributions.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFn};
use crate::kernel::{apply_k, KernelRep};
use crate::operator::{compress, solve_pm, GridPolicy};
use crate::unimodular::UnimodularFunction;

/// Phi(t,.) and Psi(t,.) on the window, with diagonal values and tail
/// constants: Phi solves Phi + K P_t Phi = 1, Psi solves Psi - K P_t Psi = 1.
#[derive(Debug, Clone)]
pub struct BoundarySolution {
    pub t: f64,
    pub t_index: usize,
    pub phi: GridFn,
    pub psi: GridFn,
    pub phi_diag: Complex64,
    pub psi_diag: Complex64,
    /// Limits at +infinity: 1 - u(0) and 1 + u(0).
    pub tail_phi: Complex64,
    pub tail_psi: Complex64,
    /// Last node whose value the quadrature resolves (right window edge for
    /// non-oscillatory kernels).
    pub x_end: usize,
    /// True when the kernel phase outruns the grid before the window edge.
    pub oscillation_capped: bool,
}

impl BoundarySolution {
    pub fn grid(&self) -> &Arc<Grid> {
        self.phi.grid()
    }
}

/// Last node index where K-images of functions supported down to the left
/// window edge are trustworthy: the oscillation-resolution cap of the
/// kernel, and the delta image a - L of the truncated left edge (beyond it
/// a reflection silently reads zero-extended samples).
pub fn reliable_end(k: &KernelRep, grid: &Arc<Grid>, t_index: usize) -> usize {
    let h = grid.spacing();
    let t = grid.node(t_index);
    let mut x_max = k.resolution_cap(h) - t;
    for &(_, a) in &k.deltas {
        x_max = x_max.min(a - grid.left() - h);
    }
    if x_max.is_infinite() {
        return grid.len() - 1;
    }
    let i = ((x_max - grid.left()) / h).floor();
    (i.max(t_index as f64) as usize).min(grid.len() - 1)
}

fn delta_near_diagonal(k: &KernelRep, t: f64, h: f64) -> Option<f64> {
    k.deltas
        .iter()
        .map(|&(_, a)| a)
        .find(|a| (a - 2.0 * t).abs() < 0.5 * h)
}

/// Solve both compression equations at the grid node t and extend the
/// solutions across the whole window.
pub fn solve_phi_psi(
    k: &KernelRep,
    u: &UnimodularFunction,
    grid: &Arc<Grid>,
    t: f64,
) -> Result<BoundarySolution> {
    let op = compress(k, grid, t)?;
    let ti = op.t_index();
    let n = grid.len();
    let ones = vec![Complex64::new(1.0, 0.0); ti + 1];
    let g = solve_pm(&op, &ones, 1.0)?;
    let h = solve_pm(&op, &ones, -1.0)?;

    let g_fn = GridFn::new(grid.clone(), 0, g);
    let h_fn = GridFn::new(grid.clone(), 0, h);
    let kg = apply_k(k, &g_fn, 0, n - 1)?;
    let kh = apply_k(k, &h_fn, 0, n - 1)?;

    let one = Complex64::new(1.0, 0.0);
    let stitch = |sub: &GridFn, image: &GridFn, sign: f64| -> GridFn {
        // sign = -1: Phi = 1 - K g beyond t; sign = +1: Psi = 1 + K h.
        let vals: Vec<Complex64> = (0..n)
            .map(|i| {
                if i <= ti {
                    sub.val(i)
                } else {
                    one + sign * image.val(i)
                }
            })
            .collect();
        let mut out = GridFn::new(grid.clone(), 0, vals);
        for (i, j) in image.interior_jumps() {
            if i > ti && i < n - 1 {
                out.add_jump(i, sign * j);
            }
        }
        // A K-image jump can sit exactly at x = t (inner symbols at t = 0);
        // the solution then has distinct one-sided limits there.
        let right_at_t = one + sign * image.limit_right(ti);
        let seam = right_at_t - sub.val(ti);
        if ti > 0 && ti < n - 1 && seam.norm() > 1e-12 * (one.norm() + sub.val(ti).norm()) {
            out.add_jump(ti, seam);
        }
        out
    };
    let phi = stitch(&g_fn, &kg, -1.0);
    let psi = stitch(&h_fn, &kh, 1.0);

    // Diagonal values by the equation's own right member at x = t.
    let phi_diag = one - kg.val(ti);
    let psi_diag = one + kh.val(ti);
    for (which, v) in [("Phi", phi_diag), ("Psi", psi_diag)] {
        if v.norm() < 1e-10 {
            return Err(Error::K3Violation {
                which,
                value: v.norm(),
            });
        }
    }

    let x_end = reliable_end(k, grid, ti);
    Ok(BoundarySolution {
        t,
        t_index: ti,
        phi,
        psi,
        phi_diag,
        psi_diag,
        tail_phi: one - u.u0,
        tail_psi: one + u.u0,
        x_end,
        oscillation_capped: x_end + 1 < n,
    })
}

/// Diagonal values only; avoids the full-window extension so it works at
/// any anchored t, aligned or not.
pub fn solve_diagonals(
    k: &KernelRep,
    grid: &Arc<Grid>,
    t: f64,
) -> Result<(Complex64, Complex64)> {
    let op = compress(k, grid, t)?;
    let ti = op.t_index();
    let ones = vec![Complex64::new(1.0, 0.0); ti + 1];
    let g = solve_pm(&op, &ones, 1.0)?;
    let h = solve_pm(&op, &ones, -1.0)?;
    let kg = op.apply_antilinear(&g);
    let kh = op.apply_antilinear(&h);
    let one = Complex64::new(1.0, 0.0);
    let phi_diag = one - kg[ti];
    let psi_diag = one + kh[ti];
    for (which, v) in [("Phi", phi_diag), ("Psi", psi_diag)] {
        if v.norm() < 1e-10 {
            return Err(Error::K3Violation {
                which,
                value: v.norm(),
            });
        }
    }
    Ok((phi_diag, psi_diag))
}

/// One Hamiltonian sample H(t) = [[alpha, beta], [beta, gamma]].
#[derive(Debug, Clone, Copy)]
pub struct HamiltonianSample {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Sign of Re(Phi conj(Psi)); H is positive definite iff +1.
    pub definite_sign: i8,
    pub re_phipsibar: f64,
}

impl HamiltonianSample {
    pub fn det(&self) -> f64 {
        self.alpha * self.gamma - self.beta * self.beta
    }

    pub fn identity(t: f64) -> HamiltonianSample {
        HamiltonianSample {
            t,
            alpha: 1.0,
            beta: 0.0,
            gamma: 1.0,
            definite_sign: 1,
            re_phipsibar: 1.0,
        }
    }
}

/// H(t) from the diagonal values: alpha = |Phi|^2 / Re(Phi conj(Psi)),
/// gamma = |Psi|^2 / Re(Phi conj(Psi)), beta = Im(Phi conj(Psi)) / Re(..).
pub fn hamiltonian_from_diag(
    t: f64,
    phi_diag: Complex64,
    psi_diag: Complex64,
    require_positive: bool,
) -> Result<HamiltonianSample> {
    let cross = phi_diag * psi_diag.conj();
    let denom = cross.re;
    if denom.abs() < 1e-300 || !denom.is_finite() {
        return Err(Error::DegenerateDiagonal);
    }
    if require_positive && denom <= 0.0 {
        return Err(Error::K7Violation(denom));
    }
    Ok(HamiltonianSample {
        t,
        alpha: phi_diag.norm_sqr() / denom,
        beta: cross.im / denom,
        gamma: psi_diag.norm_sqr() / denom,
        definite_sign: if denom > 0.0 { 1 } else { -1 },
        re_phipsibar: denom,
    })
}

/// A distribution on the window: delta components plus a grid function.
#[derive(Debug, Clone)]
pub struct DistFn {
    pub deltas: Vec<(Complex64, f64)>,
    pub fun: GridFn,
}

impl DistFn {
    /// int f(x) e^{izx} dx over [node a, node b], deltas inside included.
    pub fn fourier(&self, z: Complex64, a: usize, b: usize) -> Complex64 {
        let grid = self.fun.grid();
        let mut acc = crate::grid::fourier_integral(&self.fun, z, a, b);
        let (xa, xb) = (grid.node(a), grid.node(b));
        for &(c, loc) in &self.deltas {
            if loc >= xa - 1e-12 && loc <= xb + 1e-12 {
                acc += c * (Complex64::new(0.0, 1.0) * z * loc).exp();
            }
        }
        acc
    }

    pub fn conj(&self) -> DistFn {
        let grid = self.fun.grid().clone();
        let lo = self.fun.lo();
        let vals: Vec<Complex64> = (lo..=self.fun.hi()).map(|i| self.fun.val(i).conj()).collect();
        let mut fun = GridFn::new(grid, lo, vals);
        for (i, j) in self.fun.interior_jumps() {
            fun.add_jump(i, j.conj());
        }
        DistFn {
            deltas: self.deltas.iter().map(|&(c, a)| (c.conj(), a)).collect(),
            fun,
        }
    }
}

/// Solutions of phi+- +- K P_t phi+- = K delta_t.
#[derive(Debug, Clone)]
pub struct PhiPmPair {
    pub t: f64,
    pub plus: DistFn,
    pub minus: DistFn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiPmMethod {
    /// Solve against the right-hand side K delta_t directly.
    Direct,
    /// Assemble from x-derivatives of Phi and Psi.
    Derivative,
}

pub fn solve_phi_pm(
    k: &KernelRep,
    u: &UnimodularFunction,
    grid: &Arc<Grid>,
    t: f64,
    method: PhiPmMethod,
) -> Result<PhiPmPair> {
    match method {
        PhiPmMethod::Direct => solve_phi_pm_direct(k, grid, t),
        PhiPmMethod::Derivative => {
            let bs = solve_phi_psi(k, u, grid, t)?;
            phi_pm_from_derivatives(&bs)
        }
    }
}

fn solve_phi_pm_direct(k: &KernelRep, grid: &Arc<Grid>, t: f64) -> Result<PhiPmPair> {
    let op = compress(k, grid, t)?;
    let ti = op.t_index();
    let n = grid.len();
    let h = grid.spacing();
    if let Some(a) = delta_near_diagonal(k, t, h) {
        return Err(Error::DeltaAtDiagonal(a - t));
    }

    // (K delta_t)(x) = sum c delta(x - (a - t)) + k_s(x + t).
    let mut deltas_left = Vec::new();
    let mut deltas_right = Vec::new();
    for &(c, a) in &k.deltas {
        if a - t <= t {
            deltas_left.push((c, a - t));
        } else {
            deltas_right.push((c, a - t));
        }
    }
    if !deltas_left.is_empty() && !op.is_zero() {
        return Err(Error::DeltaInCompression(deltas_left[0].1));
    }

    let cap = k.resolution_cap(h);
    let sample_shift = |i: usize| -> Complex64 {
        let s = grid.node(i) + t;
        if s <= cap {
            k.smooth_at(s)
        } else {
            Complex64::default()
        }
    };
    let rhs: Vec<Complex64> = (0..=ti).map(sample_shift).collect();

    let build = |sign: f64| -> Result<DistFn> {
        let p = solve_pm(&op, &rhs, sign)?;
        let p_fn = GridFn::new(grid.clone(), 0, p);
        let kp = apply_k(k, &p_fn, 0, n - 1)?;
        // phi(x) = (K delta_t)(x) - sign (K p)(x) on x > t, p on x <= t.
        let vals: Vec<Complex64> = (0..n)
            .map(|i| {
                if i <= ti {
                    p_fn.val(i)
                } else {
                    sample_shift(i) - sign * kp.val(i)
                }
            })
            .collect();
        let mut fun = GridFn::new(grid.clone(), 0, vals);
        for (i, j) in kp.interior_jumps() {
            if i > ti && i < n - 1 {
                fun.add_jump(i, -sign * j);
            }
        }
        // Jumps of the shifted kernel itself.
        if let Some(smooth) = &k.smooth {
            for &(s, jl) in &smooth.jumps {
                if let Some(i) = grid.index_of(s - t) {
                    if i > ti && i < n - 1 {
                        // stored sample is the mean; restore the left-limit
                        // convention and record the jump
                        let half = jl / 2.0;
                        fun.set_val(i, fun.val(i) - half);
                        fun.add_jump(i, jl);
                    }
                }
            }
        }
        // deltas passing through a vanishing compression keep x <= t support
        let mut deltas = deltas_right.clone();
        if op.is_zero() {
            deltas.extend(deltas_left.iter().copied());
        }
        Ok(DistFn { deltas, fun })
    };

    Ok(PhiPmPair {
        t,
        plus: build(1.0)?,
        minus: build(-1.0)?,
    })
}

/// phi+ = [Re Phi_d dPsi/dx - i Im Psi_d dPhi/dx] / Re(conj(Psi_d) Phi_d),
/// phi- = [i Im Phi_d dPsi/dx - Re Psi_d dPhi/dx] / Re(conj(Psi_d) Phi_d);
/// jumps of Phi, Psi become delta components of the derivative.
pub fn phi_pm_from_derivatives(bs: &BoundarySolution) -> Result<PhiPmPair> {
    let r = (bs.psi_diag.conj() * bs.phi_diag).re;
    if r.abs() < 1e-300 {
        return Err(Error::DegenerateDiagonal);
    }
    // Phi and Psi change analytic piece at x = t; keep stencils one-sided.
    let dphi = derivative_with_breaks(&bs.phi, bs.x_end, &[bs.t_index]);
    let dpsi = derivative_with_breaks(&bs.psi, bs.x_end, &[bs.t_index]);
    let i = Complex64::new(0.0, 1.0);
    let cp_psi = Complex64::from(bs.phi_diag.re / r);
    let cp_phi = -i * bs.psi_diag.im / r;
    let cm_psi = i * bs.phi_diag.im / r;
    let cm_phi = Complex64::from(-bs.psi_diag.re / r);
    let combine = |c_psi: Complex64, c_phi: Complex64| -> DistFn {
        let fun = dpsi.fun.axpy(c_psi, &dphi.fun, c_phi).unwrap();
        let mut deltas: Vec<(Complex64, f64)> =
            dpsi.deltas.iter().map(|&(c, a)| (c_psi * c, a)).collect();
        deltas.extend(dphi.deltas.iter().map(|&(c, a)| (c_phi * c, a)));
        DistFn { deltas, fun }
    };
    Ok(PhiPmPair {
        t: bs.t,
        plus: combine(cp_psi, cp_phi),
        minus: combine(cm_psi, cm_phi),
    })
}

/// Second-order finite differences with one-sided stencils at the window
/// edges and on either side of each jump; jumps become delta components.
/// Stored samples at a jump node keep the left-side derivative.
fn derivative_with_breaks(f: &GridFn, x_end: usize, extra_breaks: &[usize]) -> DistFn {
    let grid = f.grid().clone();
    let h = grid.spacing();
    let lo = f.lo();
    let hi = f.hi().min(x_end);
    let mut jump_nodes: Vec<usize> = f.interior_jumps().map(|(i, _)| i).collect();
    jump_nodes.extend_from_slice(extra_breaks);
    jump_nodes.sort_unstable();
    jump_nodes.dedup();
    let deltas: Vec<(Complex64, f64)> = f
        .interior_jumps()
        .filter(|(_, j)| j.norm() > 0.0)
        .map(|(i, j)| (j, grid.node(i)))
        .collect();
    // Smooth pieces are separated at jump nodes; the stored value at a jump
    // node (left limit) belongs to the piece below it.
    let piece = |n: usize| jump_nodes.partition_point(|&b| b < n);
    let stencil = |i: usize| -> Complex64 {
        let pc = piece(i);
        let ok = |j: usize| j >= lo && j <= hi && piece(j) == pc;
        if i > lo && ok(i - 1) && ok(i + 1) {
            (f.val(i + 1) - f.val(i - 1)) / (2.0 * h)
        } else if ok(i + 1) && ok(i + 2) {
            (-3.0 * f.val(i) + 4.0 * f.val(i + 1) - f.val(i + 2)) / (2.0 * h)
        } else if i >= lo + 2 && ok(i - 1) && ok(i - 2) {
            (3.0 * f.val(i) - 4.0 * f.val(i - 1) + f.val(i - 2)) / (2.0 * h)
        } else if ok(i + 1) {
            (f.val(i + 1) - f.val(i)) / h
        } else if i > lo && ok(i - 1) {
            (f.val(i) - f.val(i - 1)) / h
        } else {
            Complex64::default()
        }
    };
    let vals: Vec<Complex64> = (lo..=hi).map(stencil).collect();
    let mut fun = GridFn::new(grid.clone(), lo, vals);
    for (b, jump) in f.interior_jumps() {
        if b <= lo || b >= hi {
            continue;
        }
        // Right-side derivative at the jump node, for the jump map.
        let right0 = f.val(b) + jump;
        let d_right = if b + 2 <= hi && piece(b + 1) == piece(b + 2) {
            (-3.0 * right0 + 4.0 * f.val(b + 1) - f.val(b + 2)) / (2.0 * h)
        } else if b + 1 <= hi {
            (f.val(b + 1) - right0) / h
        } else {
            fun.val(b)
        };
        let d = d_right - fun.val(b);
        if d.norm() > 0.0 {
            fun.add_jump(b, d);
        }
    }
    DistFn {
        deltas,
        fun,
    }
}

/// Hamiltonian samples along a t scan (diagonal-only solves); per-t failures
/// are collected, not fatal.
pub fn scan_hamiltonian(
    k: &KernelRep,
    u: &UnimodularFunction,
    policy: &GridPolicy,
    t_values: &[f64],
) -> Vec<(f64, Result<HamiltonianSample>)> {
    let _ = u;
    t_values
        .iter()
        .map(|&t| {
            let row = (|| {
                let (grid, _) = policy.grid_at(t)?;
                let (pd, psd) = solve_diagonals(k, &grid, t)?;
                hamiltonian_from_diag(t, pd, psd, false)
            })();
            (t, row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kernel_of;
    use crate::unimodular::{make_function, oracle_for};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn setup(id: &str, params: &[f64], t: f64, policy: &GridPolicy) -> (KernelRep, UnimodularFunction, Arc<Grid>) {
        let u = make_function(id, params).unwrap();
        let k = kernel_of(&u).unwrap();
        let (grid, _) = policy.grid_at(t).unwrap();
        (k, u, grid)
    }

    #[test]
    fn pw_phi_psi_closed_form() {
        // Phi(t,x) = 1 - 1_{[0,inf)}(x - (2a - t)), Psi = 1 + same, t < a.
        let policy = GridPolicy::new(8.0, 6.0, 1.0 / 128.0);
        let t = 0.5;
        let (k, u, grid) = setup("pw", &[1.0], t, &policy);
        let bs = solve_phi_psi(&k, &u, &grid, t).unwrap();
        assert!((bs.phi_diag - c(1.0, 0.0)).norm() < 1e-12);
        assert!((bs.psi_diag - c(1.0, 0.0)).norm() < 1e-12);
        for &x in &[-1.0, 0.0, 1.0, 1.25, 1.75, 2.5, 4.0] {
            let i = grid.index_of(x).unwrap();
            let step = if x >= 1.5 { 1.0 } else { 0.0 };
            assert!(
                (bs.phi.val(i) - c(1.0 - step, 0.0)).norm() < 1e-12,
                "Phi({x}) = {}",
                bs.phi.val(i)
            );
            assert!((bs.psi.val(i) - c(1.0 + step, 0.0)).norm() < 1e-12);
        }
        // The jump is recorded at x = 2a - t.
        let j = grid.index_of(1.5).unwrap();
        assert!((bs.phi.jump_at(j) - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn mobius_phi_closed_form() {
        // Phi(t,x) = 1 - 1_{(-t,inf)}(x)(1 - 2 e^{-x-t}) at t = -1.
        let policy = GridPolicy::new(8.0, 8.0, 1.0 / 128.0);
        let t = -1.0;
        let (k, u, grid) = setup("mobius", &[], t, &policy);
        let bs = solve_phi_psi(&k, &u, &grid, t).unwrap();
        assert!((bs.phi_diag - c(1.0, 0.0)).norm() < 1e-12);
        for &x in &[-2.0, 0.5, 1.25, 2.0, 4.0] {
            let i = grid.index_of(x).unwrap();
            let want = if x > 1.0 {
                1.0 - (1.0 - 2.0 * (-x - t).exp())
            } else {
                1.0
            };
            assert!(
                (bs.phi.val(i) - c(want, 0.0)).norm() < 1e-5,
                "Phi({x}) = {} want {want}",
                bs.phi.val(i)
            );
        }
        assert!((bs.tail_phi).norm() < 1e-14);
        assert!((bs.tail_psi - c(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn gamma_diagonals_match_oracle() {
        let policy = GridPolicy::default_policy();
        let oracle = oracle_for("gamma_ratio", &[]).unwrap();
        for &t in &[-1.0, 0.0, 0.5] {
            let (k, u, grid) = setup("gamma_ratio", &[], t, &policy);
            let bs = solve_phi_psi(&k, &u, &grid, t).unwrap();
            let want_p = oracle.phi_diag.as_ref().unwrap()(t);
            let want_s = oracle.psi_diag.as_ref().unwrap()(t);
            assert!(
                (bs.phi_diag - want_p).norm() <= 1e-3 * want_p.norm(),
                "Phi({t},{t}) = {} want {want_p}",
                bs.phi_diag
            );
            assert!(
                (bs.psi_diag - want_s).norm() <= 1e-3 * want_s.norm(),
                "Psi({t},{t}) = {} want {want_s}",
                bs.psi_diag
            );
            // Symmetric u: solutions are real.
            assert!(bs.phi_diag.im.abs() < 1e-10 && bs.psi_diag.im.abs() < 1e-10);
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let h = hamiltonian_from_diag(0.0, c(1.0, 0.0), c(1.0, 0.0), true).unwrap();
        assert!((h.alpha - 1.0).abs() < 1e-15 && h.beta.abs() < 1e-15 && (h.gamma - 1.0).abs() < 1e-15);

        let h = hamiltonian_from_diag(0.0, c(1.0, 1.0), c(1.0, 0.0), true).unwrap();
        assert!((h.alpha - 2.0).abs() < 1e-14);
        assert!((h.beta - 1.0).abs() < 1e-14);
        assert!((h.gamma - 1.0).abs() < 1e-14);
        assert!((h.det() - 1.0).abs() < 1e-13);

        let e2 = (2.0f64).exp();
        let h = hamiltonian_from_diag(0.0, c(1.0 / e2, 0.0), c(e2, 0.0), true).unwrap();
        assert!((h.alpha - (-4.0f64).exp()).abs() < 1e-15);
        assert!(h.beta.abs() < 1e-15);
        assert!((h.gamma - (4.0f64).exp()).abs() < 1e-11);

        assert!(matches!(
            hamiltonian_from_diag(0.0, c(0.0, 1.0), c(1.0, 0.0), true),
            Err(Error::DegenerateDiagonal)
        ));
        assert!(matches!(
            hamiltonian_from_diag(0.0, c(-1.0, 0.0), c(1.0, 0.0), true),
            Err(Error::K7Violation(_))
        ));
    }

    proptest! {
        #[test]
        fn lemma_equations_solved_by_closed_form(
            pr in -2.0..2.0f64, pi in -2.0..2.0f64,
            sr in -2.0..2.0f64, si in -2.0..2.0f64,
        ) {
            let phi = c(pr, pi);
            let psi = c(sr, si);
            prop_assume!(phi.norm() > 0.1 && psi.norm() > 0.1);
            prop_assume!((phi * psi.conj()).re.abs() > 1e-3);
            let h = hamiltonian_from_diag(0.0, phi, psi, false).unwrap();
            // Psi = -i beta Psi + gamma Phi and Phi = alpha Psi + i beta Phi.
            let i = c(0.0, 1.0);
            let r1 = (psi - (-i * h.beta * psi + h.gamma * phi)).norm();
            let r2 = (phi - (h.alpha * psi + i * h.beta * phi)).norm();
            prop_assert!(r1 <= 1e-12 * psi.norm().max(1.0));
            prop_assert!(r2 <= 1e-12 * phi.norm().max(1.0));
            prop_assert!((h.det() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn scan_pw_is_identity() {
        let policy = GridPolicy::new(8.0, 4.0, 1.0 / 128.0);
        let u = make_function("pw", &[1.0]).unwrap();
        let k = kernel_of(&u).unwrap();
        let ts: Vec<f64> = (0..20).map(|i| -1.0 + 0.1 * i as f64).collect();
        for (t, row) in scan_hamiltonian(&k, &u, &policy, &ts) {
            let h = row.unwrap();
            assert!(
                (h.alpha - 1.0).abs() < 1e-6
                    && h.beta.abs() < 1e-6
                    && (h.gamma - 1.0).abs() < 1e-6,
                "H({t}) != I"
            );
        }
    }

    #[test]
    fn scan_gamma_matches_oracle_and_k7_constant() {
        let policy = GridPolicy::default_policy();
        let u = make_function("gamma_ratio", &[]).unwrap();
        let k = kernel_of(&u).unwrap();
        let oracle = oracle_for("gamma_ratio", &[]).unwrap();
        let ts = [-1.0, 0.0, 0.5];
        for (t, row) in scan_hamiltonian(&k, &u, &policy, &ts) {
            let h = row.unwrap();
            let want = oracle.h_closed.as_ref().unwrap()(t);
            assert!((h.alpha - want[0][0]).abs() <= 1e-3 * want[0][0], "alpha({t})");
            assert!((h.gamma - want[1][1]).abs() <= 1e-3 * want[1][1], "gamma({t})");
            assert!(h.beta.abs() <= 1e-9, "beta({t}) = {}", h.beta);
            assert!((h.det() - 1.0).abs() <= 1e-9);
            // Prop 7.4 surrogate: Re(Phi conj(Psi)) stays at 1.
            assert!((h.re_phipsibar - 1.0).abs() <= 1e-3, "K7 value at {t}");
        }
    }

    #[test]
    fn phi_pm_pw_is_pure_reflection() {
        // K[t] = 0 below a, so phi+- = K delta_t = delta at 2a - t.
        let policy = GridPolicy::new(8.0, 6.0, 1.0 / 128.0);
        let t = 0.5;
        let (k, u, grid) = setup("pw", &[1.0], t, &policy);
        let pm = solve_phi_pm(&k, &u, &grid, t, PhiPmMethod::Direct).unwrap();
        assert_eq!(pm.plus.deltas.len(), 1);
        assert!((pm.plus.deltas[0].1 - 1.5).abs() < 1e-12);
        assert!((pm.plus.deltas[0].0 - c(1.0, 0.0)).norm() < 1e-12);
        assert!(pm.plus.fun.max_abs() < 1e-12);
        assert!(pm.minus.fun.max_abs() < 1e-12);
    }

    #[test]
    fn gamma_phi_pm_matches_bessel_closed_form() {
        // phi+-(t,x) = sqrt(ab)(1 +- d/db) I0(2 sqrt(a(a-b))), a = e^t, b = e^x.
        use crate::special::{bessel_i0, bessel_i1, bessel_j0, bessel_j1};
        let closed = |sign: f64, t: f64, x: f64| -> f64 {
            let a = t.exp();
            let b = x.exp();
            let sab = (a * b).sqrt();
            if b <= a {
                let w = 2.0 * (a * (a - b)).sqrt();
                let di = if w < 1e-12 { a } else { 2.0 * a * bessel_i1(w) / w };
                sab * (bessel_i0(w) - sign * di)
            } else {
                let v = 2.0 * (a * (b - a)).sqrt();
                let dj = if v < 1e-12 { a } else { 2.0 * a * bessel_j1(v) / v };
                sab * (bessel_j0(v) - sign * dj)
            }
        };
        let policy = GridPolicy::default_policy();
        let t = 0.0;
        let (k, u, grid) = setup("gamma_ratio", &[], t, &policy);
        for method in [PhiPmMethod::Direct, PhiPmMethod::Derivative] {
            let pm = solve_phi_pm(&k, &u, &grid, t, method).unwrap();
            for &x in &[-1.0, -0.25, 0.5, 1.5, 3.0] {
                let i = grid.index_of(x).unwrap();
                let scale = closed(1.0, t, x).abs().max(closed(-1.0, t, x).abs()).max(1.0);
                let got_p = pm.plus.fun.val(i);
                let got_m = pm.minus.fun.val(i);
                assert!(
                    (got_p.re - closed(1.0, t, x)).abs() <= 2e-3 * scale,
                    "{method:?} phi+({x}) = {got_p} want {}",
                    closed(1.0, t, x)
                );
                assert!(
                    (got_m.re - closed(-1.0, t, x)).abs() <= 2e-3 * scale,
                    "{method:?} phi-({x}) = {got_m} want {}",
                    closed(-1.0, t, x)
                );
            }
        }
    }

    #[test]
    fn phi_pm_methods_agree() {
        // Grid-norm agreement where both discretizations resolve the kernel
        // phase (h * local frequency <= 0.1).
        let h = 1.0 / 256.0;
        let policy = GridPolicy::new(40.0, 12.0, h);
        let t = -0.5;
        let (k, u, grid) = setup("gamma_ratio", &[], t, &policy);
        let d = solve_phi_pm(&k, &u, &grid, t, PhiPmMethod::Direct).unwrap();
        let v = solve_phi_pm(&k, &u, &grid, t, PhiPmMethod::Derivative).unwrap();
        let lo = grid.index_of(t).unwrap();
        let x_res = 2.0 * (0.02 / h).ln() - t;
        let hi = ((x_res - grid.left()) / h).floor() as usize;
        let mut diff2 = 0.0;
        let mut scale2 = 0.0;
        for i in lo..=hi {
            diff2 += (d.plus.fun.val(i) - v.plus.fun.val(i)).norm_sqr()
                + (d.minus.fun.val(i) - v.minus.fun.val(i)).norm_sqr();
            scale2 += d.plus.fun.val(i).norm_sqr() + d.minus.fun.val(i).norm_sqr();
        }
        let rel = (diff2 / scale2).sqrt();
        assert!(rel <= 1e-4, "methods differ by {rel} in the grid norm");
    }

    #[test]
    fn phi_pm_direct_residual() {
        // Residual of phi+ + K P_t phi+ = K delta_t on the grid.
        let policy = GridPolicy::default_policy();
        let t = 0.0;
        let (k, u, grid) = setup("gamma_ratio", &[], t, &policy);
        let pm = solve_phi_pm(&k, &u, &grid, t, PhiPmMethod::Direct).unwrap();
        let ti = grid.index_of(t).unwrap();
        let n = grid.len();
        let proj = pm.plus.fun.restrict(0, ti);
        let kproj = apply_k(&k, &proj, 0, n - 1).unwrap();
        let x_end = reliable_end(&k, &grid, ti);
        let mut worst: f64 = 0.0;
        for i in 0..=x_end {
            let rhs = k.smooth_at(grid.node(i) + t);
            let r = (pm.plus.fun.val(i) + kproj.val(i) - rhs).norm();
            worst = worst.max(r);
        }
        assert!(worst <= 1e-6 * 60.0, "residual {worst}");
    }

    #[test]
    fn pde_residual_first_order_in_refinement() {
        // -d/dt [Psi; i Phi] = J H(t) (i d/dx) [Psi; i Phi] away from x = t,
        // i.e. dPsi/dt = i beta dPsi/dx - gamma dPhi/dx (real symmetric case:
        // dPsi/dt = -gamma dPhi/dx) and dPhi/dt = -alpha dPsi/dx.
        let u = make_function("gamma_ratio", &[]).unwrap();
        let k = kernel_of(&u).unwrap();
        let t = 0.0;
        let mut resid = Vec::new();
        for (h, dt) in [(1.0 / 32.0, 1.0 / 16.0), (1.0 / 64.0, 1.0 / 32.0)] {
            let policy = GridPolicy::new(30.0, 6.0, h);
            let (grid, _) = policy.grid_at(t).unwrap();
            let bs0 = solve_phi_psi(&k, &u, &grid, t).unwrap();
            // Same x lattice for neighbours: anchored grids at t +- dt with dt
            // a multiple of h share nodes.
            let bsp = solve_phi_psi(&k, &u, &grid, t + dt).unwrap();
            let bsm = solve_phi_psi(&k, &u, &grid, t - dt).unwrap();
            let hm = hamiltonian_from_diag(t, bs0.phi_diag, bs0.psi_diag, true).unwrap();
            let dphi = derivative_with_breaks(&bs0.phi, bs0.x_end, &[]);
            let dpsi = derivative_with_breaks(&bs0.psi, bs0.x_end, &[]);
            let ti = grid.index_of(t).unwrap();
            let mut worst: f64 = 0.0;
            for i in (0..bs0.x_end).step_by(8) {
                if (i as i64 - ti as i64).abs() < 8 {
                    continue; // diagonal neighborhood excluded
                }
                let dps_dt = (bsp.psi.val(i) - bsm.psi.val(i)) / (2.0 * dt);
                let dph_dt = (bsp.phi.val(i) - bsm.phi.val(i)) / (2.0 * dt);
                let r1 = (dps_dt + hm.gamma * dphi.fun.val(i)).norm();
                let r2 = (dph_dt + hm.alpha * dpsi.fun.val(i)).norm();
                worst = worst.max(r1.max(r2));
            }
            resid.push(worst);
        }
        assert!(
            resid[1] <= resid[0] / 1.5,
            "no first-order decay: {resid:?}"
        );
    }

    #[test]
    fn symmetric_solutions_are_real() {
        let policy = GridPolicy::new(20.0, 6.0, 1.0 / 64.0);
        for (id, params, t) in [("mobius", vec![], -1.0), ("gamma_ratio", vec![], -0.5)] {
            let (k, u, grid) = setup(id, &params, t, &policy);
            let bs = solve_phi_psi(&k, &u, &grid, t).unwrap();
            for i in 0..grid.len() {
                assert!(bs.phi.val(i).im.abs() <= 1e-10, "{id}: Im Phi != 0");
                assert!(bs.psi.val(i).im.abs() <= 1e-10, "{id}: Im Psi != 0");
            }
        }
    }
}
