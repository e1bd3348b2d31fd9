//! Reproducing-kernel side of the chain: Y vectors, the kernel j(t;z,w) by
//! the explicit formula and by Gram integrals, the identity checks tying
//! phi+- to the boundary data, and t0 diagnostics.

use std::sync::Arc;

use num_complex::Complex64;

use crate::boundary::{
    reliable_end, solve_phi_pm, solve_phi_psi, DistFn, PhiPmMethod,
};
use crate::error::{Error, Result};
use crate::evolution::{ab_direct, AbState};
use crate::grid::{integrate_pair, Grid, GridFn};
use crate::kernel::{apply_k, KernelRep};
use crate::operator::{compress, operator_norm, solve_pm, GridPolicy, DEFAULT_NORM_MARGIN};
use crate::unimodular::UnimodularFunction;

/// The reproducing vector Y_z^t together with the auxiliary solutions
/// a_z^t, b_z^t it is assembled from.
#[derive(Debug, Clone)]
pub struct YVector {
    pub t: f64,
    pub z: Complex64,
    pub a: GridFn,
    pub b: GridFn,
    /// (a + b)/2 restricted to [t, x_end].
    pub y: GridFn,
    pub a_at_t: Complex64,
    pub b_at_t: Complex64,
    pub t_index: usize,
    pub x_end: usize,
}

/// Assemble a_z^t, b_z^t and Y_z^t = (1 - P_t)(a + b)/2:
/// a = e_z + K(1-P_t)e_z - K (1+K[t])^{-1} P_t K (1-P_t) e_z, and the
/// b-analogue with the signs flipped.
pub fn y_vector(
    k: &KernelRep,
    u: &UnimodularFunction,
    grid: &Arc<Grid>,
    t: f64,
    z: Complex64,
) -> Result<YVector> {
    let _ = u;
    if !(z.im > 0.0) {
        return Err(Error::DomainError(format!(
            "Y vectors require Im z > 0, got z = {z}"
        )));
    }
    let op = compress(k, grid, t)?;
    let ti = op.t_index();
    let n = grid.len();
    let iz = Complex64::new(0.0, 1.0) * z;
    let e_z = GridFn::from_fn(grid.clone(), 0, n - 1, |x| (iz * x).exp());
    let tail = e_z.restrict(ti, n - 1);
    let k_tail = apply_k(k, &tail, 0, n - 1)?;
    let rhs: Vec<Complex64> = (0..=ti).map(|i| k_tail.val(i)).collect();

    let one = Complex64::new(1.0, 0.0);
    let branch = |sign: f64| -> Result<GridFn> {
        let v = solve_pm(&op, &rhs, sign)?;
        let v_fn = GridFn::new(grid.clone(), 0, v);
        let kv = apply_k(k, &v_fn, 0, n - 1)?;
        // e_z + sign * K tail - K v
        e_z.axpy(one, &k_tail, Complex64::from(sign))?
            .axpy(one, &kv, -one)
    };
    let a = branch(1.0)?;
    let b = branch(-1.0)?;
    let x_end = reliable_end(k, grid, ti);
    let sum = a.axpy(Complex64::from(0.5), &b, Complex64::from(0.5))?;
    let y = sum.restrict(ti, x_end);
    if k.tail_rate.is_none() && !k.oscillatory_growth {
        let edge = y.val(x_end).norm();
        let peak = y.max_abs();
        // Window-truncation junk sits at the |e_z(X)| scale; a peak of that
        // size means Y has vanished (the chain ended), not that the window
        // is short.
        let junk_scale = (-z.im * grid.node(x_end)).exp();
        if peak > 100.0 * junk_scale && edge > 1e-4 * peak {
            return Err(Error::TailNotDecayed(format!(
                "|Y({})| = {edge:.3e} against peak {peak:.3e}",
                grid.node(x_end)
            )));
        }
    }
    Ok(YVector {
        t,
        z,
        a_at_t: a.val(ti),
        b_at_t: b.val(ti),
        a,
        b,
        y,
        t_index: ti,
        x_end,
    })
}

/// j(t;z,w) by the explicit formula
/// (conj(Atilde(z)) Btilde(w) - Atilde(w) conj(Btilde(z))) / (pi (w - conj z)).
pub fn j_formula(ab_z: &AbState, ab_w: &AbState) -> Result<Complex64> {
    if (ab_z.t - ab_w.t).abs() > 1e-12 {
        return Err(Error::GridMismatch("j_formula needs matching t".into()));
    }
    let d = ab_w.z - ab_z.z.conj();
    if d.norm() < 1e-12 {
        return Err(Error::DiagonalSingularity(d.norm()));
    }
    let num = ab_z.a_tilde.conj() * ab_w.b_tilde - ab_w.a_tilde * ab_z.b_tilde.conj();
    Ok(num / (std::f64::consts::PI * d))
}

/// j(t;z,w) = (1/2pi) <Y_w, Y_z> by the Gram integral over [t, x_end] plus
/// the analytic exponential-tail correction when the kernel declares one.
pub fn j_gram(y_z: &YVector, y_w: &YVector, k: &KernelRep) -> Result<Complex64> {
    if !Arc::ptr_eq(y_z.y.grid(), y_w.y.grid()) || y_z.t_index != y_w.t_index {
        return Err(Error::GridMismatch("Y vectors on different grids".into()));
    }
    let lo = y_z.t_index;
    let hi = y_z.x_end.min(y_w.x_end);
    let mut acc = integrate_pair(&y_w.y, &y_z.y, lo, hi);
    if let Some(rate) = k.tail_rate {
        let grid = y_z.y.grid();
        let x_end = grid.node(hi);
        let cw = y_w.y.val(hi) * (rate * x_end).exp();
        let cz = y_z.y.val(hi) * (rate * x_end).exp();
        acc += cw * cz.conj() * (-2.0 * rate * x_end).exp() / (2.0 * rate);
    }
    Ok(acc / (2.0 * std::f64::consts::PI))
}

/// Residuals of the three identity families at one z.
#[derive(Debug, Clone, Copy)]
pub struct IdentityResiduals {
    pub z: Complex64,
    /// (d/dx - iz)(a + b) against the phi+- combination.
    pub r_513: f64,
    /// Boundary-value identity with the conjugate phi- transform.
    pub r_518: f64,
    /// Boundary-value identity with the conjugate phi+ transform.
    pub r_519: f64,
    /// Fourier-side identity for phi+ against Atilde, Btilde.
    pub r_533: f64,
    /// Fourier-side identity for phi- against Atilde, Btilde.
    pub r_534: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.r_513
            .max(self.r_518)
            .max(self.r_519)
            .max(self.r_533)
            .max(self.r_534)
    }
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub t: f64,
    pub rows: Vec<IdentityResiduals>,
}

impl IdentityReport {
    pub fn max(&self) -> f64 {
        self.rows.iter().map(|r| r.max()).fold(0.0, f64::max)
    }
}

/// Evaluate all identity residuals at t over a list of upper-half-plane
/// probes. Exact inputs may be supplied for sensitivity experiments through
/// [`identity_residuals_at`].
pub fn identity_suite(
    k: &KernelRep,
    u: &UnimodularFunction,
    grid: &Arc<Grid>,
    t: f64,
    z_samples: &[Complex64],
) -> Result<IdentityReport> {
    let bs = solve_phi_psi(k, u, grid, t)?;
    let pm = solve_phi_pm(k, u, grid, t, PhiPmMethod::Direct)?;
    let fd_end = fd_resolved_end(k, grid, t);
    let mut rows = Vec::with_capacity(z_samples.len());
    for &z in z_samples {
        let y = y_vector(k, u, grid, t, z)?;
        let ab = ab_direct(&bs, z)?;
        rows.push(identity_residuals_at(
            &y, &ab, &pm.plus, &pm.minus, &bs.phi_diag, &bs.psi_diag, fd_end,
        ));
    }
    Ok(IdentityReport { t, rows })
}

/// Last node where stencils of width a few h still resolve the kernel
/// phase (h * local frequency <= 0.1); everything for plain kernels.
pub fn fd_resolved_end(k: &KernelRep, grid: &Arc<Grid>, t: f64) -> usize {
    let n = grid.len() - 1;
    if !k.oscillatory_growth {
        return n;
    }
    let h = grid.spacing();
    let x_res = 2.0 * (0.1 / h).ln() - t;
    let i = ((x_res - grid.left()) / h).floor();
    (i.max(0.0) as usize).min(n)
}

/// Residuals from prepared building blocks; exposed so tests can perturb one
/// input and watch the detectors fire.
pub fn identity_residuals_at(
    y: &YVector,
    ab: &AbState,
    phi_plus: &DistFn,
    phi_minus: &DistFn,
    phi_diag: &Complex64,
    psi_diag: &Complex64,
    fd_end: usize,
) -> IdentityResiduals {
    let z = y.z;
    let t = y.t;
    let grid = y.y.grid().clone();
    let iz = Complex64::new(0.0, 1.0) * z;
    let i = Complex64::new(0.0, 1.0);
    let ti = y.t_index;
    let xe = y.x_end;
    let e_izt = (iz * t).exp();

    let coef_plus = ((y.a_at_t + y.b_at_t) - (y.a_at_t - y.b_at_t).conj()) / 2.0;
    let coef_minus = ((y.a_at_t + y.b_at_t) + (y.a_at_t - y.b_at_t).conj()) / 2.0;

    // (c_513): (d/dx - iz)(a + b) = coef_plus phi+ - coef_minus phi-.
    let sum = y
        .a
        .axpy(Complex64::from(1.0), &y.b, Complex64::from(1.0))
        .unwrap();
    let r_513 = {
        let h = grid.spacing();
        let mut jump_nodes: Vec<usize> = sum.interior_jumps().map(|(n, _)| n).collect();
        jump_nodes.push(ti);
        jump_nodes.sort_unstable();
        let near_jump =
            |idx: usize| jump_nodes.iter().any(|&b| (idx as i64 - b as i64).abs() <= 3);
        let mut worst = 0.0_f64;
        let mut scale = 1e-30_f64;
        for idx in ti + 3..xe.min(fd_end).saturating_sub(3) {
            if near_jump(idx) {
                continue;
            }
            // fourth-order centered first derivative
            let d = (sum.val(idx - 2) - 8.0 * sum.val(idx - 1) + 8.0 * sum.val(idx + 1)
                - sum.val(idx + 2))
                / (12.0 * h);
            let lhs = d - iz * sum.val(idx);
            let rhs = coef_plus * phi_plus.fun.val(idx) - coef_minus * phi_minus.fun.val(idx);
            worst = worst.max((lhs - rhs).norm());
            scale = scale.max(lhs.norm()).max(rhs.norm());
        }
        // Delta components: jumps of (a+b) against the phi+- deltas.
        let mut locations: Vec<f64> = sum
            .interior_jumps()
            .filter(|&(n, _)| n > ti && n <= xe)
            .map(|(n, _)| grid.node(n))
            .collect();
        for (_, loc) in phi_plus
            .deltas
            .iter()
            .chain(phi_minus.deltas.iter())
        {
            let loc = *loc;
            if loc > t && !locations.iter().any(|l| (l - loc).abs() < 1e-9) {
                locations.push(loc);
            }
        }
        for loc in locations {
            let lhs = grid
                .index_of(loc)
                .map(|n| sum.jump_at(n))
                .unwrap_or_default();
            let delta_at = |d: &DistFn| -> Complex64 {
                d.deltas
                    .iter()
                    .filter(|(_, a)| (a - loc).abs() < 1e-9)
                    .map(|(c, _)| *c)
                    .sum()
            };
            let rhs = coef_plus * delta_at(phi_plus) - coef_minus * delta_at(phi_minus);
            worst = worst.max((lhs - rhs).norm());
            scale = scale.max(lhs.norm()).max(rhs.norm());
        }
        worst / scale
    };

    // Fourier transforms of phi+- over (t, infinity).
    let f_plus = phi_plus.fourier(z, ti, xe);
    let f_minus = phi_minus.fourier(z, ti, xe);
    let f_plus_conj = phi_plus.conj().fourier(z, ti, xe);
    let f_minus_conj = phi_minus.conj().fourier(z, ti, xe);

    let norm_by = |lhs: Complex64, rhs: Complex64| -> f64 {
        (lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1e-30)
    };

    // (c_518)/(c_519)
    let r_518 = norm_by(coef_plus, e_izt - f_minus_conj);
    let r_519 = norm_by(coef_minus, e_izt + f_plus_conj);

    // (c_533)/(c_534)
    let r = (psi_diag.conj() * phi_diag).re;
    let rhs_533 = (phi_diag.re * ab.a_tilde - psi_diag.im * ab.b_tilde) / r;
    let r_533 = norm_by((e_izt + f_plus) / 2.0, rhs_533);
    let rhs_534 = (-i * phi_diag.im * ab.a_tilde + ab.minus_i_b() * psi_diag.re) / r;
    let r_534 = norm_by((e_izt - f_minus) / 2.0, rhs_534);

    IdentityResiduals {
        z,
        r_513,
        r_518,
        r_519,
        r_533,
        r_534,
    }
}

/// One t row of the diagnostics scan.
#[derive(Debug, Clone)]
pub struct T0Row {
    pub t: f64,
    pub norm: f64,
    pub j_diag: Option<f64>,
    pub y_norm: Option<f64>,
    pub err: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum K8Hint {
    /// ||Y_z^t|| tends to zero at the end of the chain.
    YNormVanishes,
    /// ||Y_z^t|| approaches a positive limit.
    PositiveLimit,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct T0Report {
    pub rows: Vec<T0Row>,
    /// None encodes the +infinity sentinel: no endpoint inside the scan.
    pub t0_estimate: Option<f64>,
    pub k8: K8Hint,
}

/// Scan ||K[t]||, j(t;z,z) and ||Y_z^t|| over t and estimate the chain
/// endpoint: the first t where j drops below the relative threshold or the
/// norm margin fails.
pub fn t0_diagnostics(
    k: &KernelRep,
    u: &UnimodularFunction,
    policy: &GridPolicy,
    t_values: &[f64],
    z_probe: Complex64,
) -> Result<T0Report> {
    let mut rows = Vec::with_capacity(t_values.len());
    let mut t0_estimate: Option<f64> = None;
    let mut j_first: Option<f64> = None;
    let mut last_two: Vec<(f64, f64)> = Vec::new();
    for &t in t_values {
        let (grid, _) = policy.grid_at(t)?;
        let op = compress(k, &grid, t)?;
        let norm = operator_norm(&op);
        if norm > 1.0 - DEFAULT_NORM_MARGIN {
            if t0_estimate.is_none() {
                t0_estimate = Some(t);
            }
            rows.push(T0Row {
                t,
                norm,
                j_diag: None,
                y_norm: None,
                err: Some("norm margin violated".into()),
            });
            continue;
        }
        match y_vector(k, u, &grid, t, z_probe) {
            Ok(y) => {
                let j = j_gram(&y, &y, k)?.re;
                let y_norm = (2.0 * std::f64::consts::PI * j.max(0.0)).sqrt();
                let eps = 1e-6 * j_first.unwrap_or(j).abs();
                if j_first.is_none() {
                    j_first = Some(j);
                }
                if t0_estimate.is_none() && j < eps {
                    t0_estimate = Some(t);
                }
                last_two.push((t, j));
                if last_two.len() > 2 {
                    last_two.remove(0);
                }
                rows.push(T0Row {
                    t,
                    norm,
                    j_diag: Some(j),
                    y_norm: Some(y_norm),
                    err: None,
                });
            }
            Err(e) => rows.push(T0Row {
                t,
                norm,
                j_diag: None,
                y_norm: None,
                err: Some(e.to_string()),
            }),
        }
    }
    let k8 = match (t0_estimate, j_first, last_two.as_slice()) {
        (Some(t0), Some(j0), [(t1, j1), (t2, j2)]) if (t2 - t1).abs() > 1e-12 => {
            let j_ext = j2 + (t0 - t2) * (j2 - j1) / (t2 - t1);
            if j_ext <= 0.05 * j0 {
                K8Hint::YNormVanishes
            } else {
                K8Hint::PositiveLimit
            }
        }
        (None, _, _) => K8Hint::Inconclusive,
        _ => K8Hint::Inconclusive,
    };
    Ok(T0Report {
        rows,
        t0_estimate,
        k8,
    })
}
