//! The entire-function data of the chain: Atilde, Btilde by the half-line
//! Fourier transform of Psi and Phi, their evolution under the lacunary
//! canonical system, theta, and the M-weighted functions A, B, E.

use num_complex::Complex64;

use crate::boundary::{BoundarySolution, HamiltonianSample};
use crate::error::{Error, Result};
use crate::grid::fourier_integral;
use crate::unimodular::UnimodularFunction;

/// Default cap on h * |Re z| before the half-line quadrature is distrusted.
pub const OSCILLATION_CAP: f64 = 0.1;

/// Budget for the ODE step-doubling error estimate, relative.
pub const ODE_ERROR_BUDGET: f64 = 2e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbPath {
    Direct,
    Ode,
}

/// Atilde(t,z) and Btilde(t,z).
#[derive(Debug, Clone, Copy)]
pub struct AbState {
    pub t: f64,
    pub z: Complex64,
    pub a_tilde: Complex64,
    pub b_tilde: Complex64,
    pub path: AbPath,
}

impl AbState {
    pub fn minus_i_b(&self) -> Complex64 {
        Complex64::new(0.0, -1.0) * self.b_tilde
    }
}

/// Atilde = (-iz/2) int_t^inf Psi e^{izx} dx with the constant tail
/// integrated analytically (Psi - tail is square integrable), likewise
/// -i Btilde from Phi.
pub fn ab_direct(bs: &BoundarySolution, z: Complex64) -> Result<AbState> {
    let grid = bs.grid().clone();
    let h = grid.spacing();
    if h * z.re.abs() > OSCILLATION_CAP {
        return Err(Error::OscillationUnderResolved(
            h * z.re.abs(),
            OSCILLATION_CAP,
        ));
    }
    let iz = Complex64::new(0.0, 1.0) * z;
    let ti = bs.t_index;
    let xe = bs.x_end;
    let t = bs.t;
    let x_end = grid.node(xe);
    // int_t^{xe} (f - tail) e^{izx} dx + tail (e^{iz xe} - e^{izt}) / (iz)
    // + tail-at-infinity handled by the analytic constant term below.
    let half = |f: &crate::grid::GridFn, tail: Complex64| -> Complex64 {
        let osc = fourier_integral(f, z, ti, xe);
        let const_part = if z.norm() < 1e-14 {
            tail * (x_end - t)
        } else {
            tail * ((iz * x_end).exp() - (iz * t).exp()) / iz
        };
        let decayed = osc - const_part;
        -iz / 2.0 * decayed + tail * (iz * t).exp() / 2.0
    };

    let a_tilde = half(&bs.psi, bs.tail_psi);
    let mib = half(&bs.phi, bs.tail_phi);
    let b_tilde = Complex64::new(0.0, 1.0) * mib;

    // Window-truncation estimate from the residual at the last reliable node.
    let scale = a_tilde.norm().max(b_tilde.norm()).max(1e-30);
    let resid = (bs.psi.val(xe) - bs.tail_psi)
        .norm()
        .max((bs.phi.val(xe) - bs.tail_phi).norm());
    let est = if z.im > 1e-12 {
        resid * (-z.im * (x_end - t)).exp() * z.norm() / (2.0 * z.im)
    } else if bs.oscillation_capped {
        // Oscillatory-kernel remainder: one more local phase period.
        resid * 0.5 * ((x_end + t) / 2.0).exp().recip() * z.norm().max(1.0)
    } else {
        resid * z.norm().max(1.0)
    };
    if est > 3e-3 * scale {
        return Err(Error::TailNotDecayed(format!(
            "|boundary residual| = {resid:.3e} at x = {x_end:.2} implies tail error {est:.3e} \
             against magnitude {scale:.3e}; enlarge the window"
        )));
    }

    Ok(AbState {
        t,
        z,
        a_tilde,
        b_tilde,
        path: AbPath::Direct,
    })
}

/// Initial data for an inner symbol at t = 0: Atilde = (1 + u)/2,
/// -i Btilde = (1 - u)/2.
pub fn ab_inner_initial(u: &UnimodularFunction, z: Complex64) -> Result<AbState> {
    if !u.inner {
        return Err(Error::NotInner);
    }
    let uz = u.eval_cont(z);
    let one = Complex64::new(1.0, 0.0);
    Ok(AbState {
        t: 0.0,
        z,
        a_tilde: (one + uz) / 2.0,
        b_tilde: Complex64::new(0.0, 1.0) * (one - uz) / 2.0,
        path: AbPath::Direct,
    })
}

fn interp_h(samples: &[HamiltonianSample], t: f64) -> Result<(f64, f64, f64)> {
    let first = samples.first().ok_or_else(|| {
        Error::Unsupported("empty Hamiltonian sample list".into())
    })?;
    let last = samples.last().unwrap();
    let tol = 1e-9;
    if t < first.t - tol || t > last.t + tol {
        return Err(Error::Unsupported(format!(
            "t = {t} outside the sampled Hamiltonian range [{}, {}]",
            first.t, last.t
        )));
    }
    let idx = samples.partition_point(|s| s.t <= t);
    let (a, b) = if idx == 0 {
        (first, first)
    } else if idx >= samples.len() {
        (last, last)
    } else {
        (&samples[idx - 1], &samples[idx])
    };
    if (b.t - a.t).abs() < 1e-15 {
        return Ok((a.alpha, a.beta, a.gamma));
    }
    let w = (t - a.t) / (b.t - a.t);
    Ok((
        a.alpha + w * (b.alpha - a.alpha),
        a.beta + w * (b.beta - a.beta),
        a.gamma + w * (b.gamma - a.gamma),
    ))
}

fn rk4_sweep(
    samples: &[HamiltonianSample],
    init: &AbState,
    t_target: f64,
    dt: f64,
) -> Result<(Complex64, Complex64)> {
    let z = init.z;
    // -d/dt [A; B] = z J H [A; B]  =>  A' = z (beta A + gamma B),
    // B' = -z (alpha A + beta B).
    let rhs = |t: f64, a: Complex64, b: Complex64| -> Result<(Complex64, Complex64)> {
        let (al, be, ga) = interp_h(samples, t)?;
        Ok((z * (be * a + ga * b), -z * (al * a + be * b)))
    };
    let span = t_target - init.t;
    let steps = ((span.abs() / dt).ceil() as usize).max(1);
    let step = span / steps as f64;
    let mut a = init.a_tilde;
    let mut b = init.b_tilde;
    let mut t = init.t;
    for _ in 0..steps {
        let (k1a, k1b) = rhs(t, a, b)?;
        let (k2a, k2b) = rhs(t + step / 2.0, a + k1a * (step / 2.0), b + k1b * (step / 2.0))?;
        let (k3a, k3b) = rhs(t + step / 2.0, a + k2a * (step / 2.0), b + k2b * (step / 2.0))?;
        let (k4a, k4b) = rhs(t + step, a + k3a * step, b + k3b * step)?;
        a += (k1a + 2.0 * k2a + 2.0 * k3a + k4a) * (step / 6.0);
        b += (k1b + 2.0 * k2b + 2.0 * k3b + k4b) * (step / 6.0);
        t += step;
    }
    Ok((a, b))
}

/// Evolve an initial state to t_target by fixed-step RK4 on the lacunary
/// canonical system, with H linearly interpolated between samples. A
/// step-doubling estimate guards the budget.
pub fn ab_ode(
    samples: &[HamiltonianSample],
    init: &AbState,
    t_target: f64,
    dt: f64,
) -> Result<AbState> {
    if !(dt > 0.0) {
        return Err(Error::Unsupported("ODE step must be positive".into()));
    }
    if (t_target - init.t).abs() < 1e-15 {
        return Ok(AbState {
            path: AbPath::Ode,
            ..*init
        });
    }
    let fine = rk4_sweep(samples, init, t_target, dt)?;
    let coarse = rk4_sweep(samples, init, t_target, 2.0 * dt)?;
    let est = ((fine.0 - coarse.0).norm().max((fine.1 - coarse.1).norm())) / 15.0;
    let scale = fine.0.norm().max(fine.1.norm()).max(1e-30);
    if est > ODE_ERROR_BUDGET * scale {
        return Err(Error::StepSizeTooCoarse {
            estimate: est / scale,
            budget: ODE_ERROR_BUDGET,
        });
    }
    Ok(AbState {
        t: t_target,
        z: init.z,
        a_tilde: fine.0,
        b_tilde: fine.1,
        path: AbPath::Ode,
    })
}

/// theta, A, B, E at one (t, z).
#[derive(Debug, Clone, Copy)]
pub struct EntireData {
    pub t: f64,
    pub z: Complex64,
    pub a: Complex64,
    pub b: Complex64,
    pub e: Complex64,
    pub theta: Complex64,
}

/// theta = (Atilde + i Btilde) / (Atilde - i Btilde); A = M Atilde,
/// B = M Btilde, E = A - iB.
pub fn theta_and_e(ab: &AbState, u: &UnimodularFunction) -> Result<EntireData> {
    let i = Complex64::new(0.0, 1.0);
    let denom = ab.a_tilde - i * ab.b_tilde;
    if denom.norm() < 1e-140 {
        return Err(Error::DivisionByZero(format!(
            "E vanishes at t = {}, z = {}",
            ab.t, ab.z
        )));
    }
    let theta = (ab.a_tilde + i * ab.b_tilde) / denom;
    let m = u.m_eval(ab.z);
    let a = m * ab.a_tilde;
    let b = m * ab.b_tilde;
    Ok(EntireData {
        t: ab.t,
        z: ab.z,
        a,
        b,
        e: a - i * b,
        theta,
    })
}

/// Max over real samples of |Atilde - u conj(Atilde)| + |Btilde - u conj(Btilde)|,
/// normalized by the largest |Atilde|, |Btilde| seen.
pub fn functional_equation_residual(
    bs: &BoundarySolution,
    u: &UnimodularFunction,
    x_samples: &[f64],
) -> Result<f64> {
    let mut worst = 0.0_f64;
    let mut scale = 1e-30_f64;
    for &x in x_samples {
        let ab = ab_direct(bs, Complex64::new(x, 0.0))?;
        let ux = u.eval_real(x);
        let ra = (ab.a_tilde - ux * ab.a_tilde.conj()).norm();
        let rb = (ab.b_tilde - ux * ab.b_tilde.conj()).norm();
        worst = worst.max(ra + rb);
        scale = scale.max(ab.a_tilde.norm()).max(ab.b_tilde.norm());
    }
    Ok(worst / scale)
}
