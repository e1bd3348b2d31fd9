//! Special functions backing the function registry: the complex gamma
//! function, real Bessel functions J0, J1, I0, I1, and the modified Bessel
//! function of the second kind with complex order.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Lanczos coefficients, g = 607/128, 15 terms (Godfrey's set).
const LANCZOS_G: f64 = 4.7421875;
const LANCZOS: [f64; 15] = [
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
];

/// Gamma function for complex argument, relative error around 1e-13 for
/// moderate |Im z|.
pub fn gamma_complex(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(Error::PoleAtNonpositiveInteger(z.re));
    }
    if z.re < 0.5 {
        // Reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z).
        let s = (PI * z).sin();
        if s.norm() == 0.0 {
            return Err(Error::PoleAtNonpositiveInteger(z.re));
        }
        return Ok(PI / (s * gamma_complex(Complex64::new(1.0, 0.0) - z)?));
    }
    let zm = z - 1.0;
    let mut a = Complex64::new(LANCZOS[0], 0.0);
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (zm + k as f64);
    }
    let t = zm + LANCZOS_G + 0.5;
    Ok((2.0 * PI).sqrt() * t.powc(zm + 0.5) * (-t).exp() * a)
}

fn bessel_j_series(mu2: u32, x: f64) -> f64 {
    // J_nu for nu = 0, 1 via the ascending series; mu2 = nu.
    let nu = mu2 as f64;
    let q = -x * x / 4.0;
    let mut term = if mu2 == 0 { 1.0 } else { x / 2.0 };
    let mut sum = term;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * (k + nu));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-30) {
            break;
        }
    }
    sum
}

fn bessel_j_asymptotic(nu: u32, x: f64) -> f64 {
    // Hankel expansion; usable for x >= 12 to ~1e-12.
    let mu = 4.0 * (nu as f64) * (nu as f64);
    let chi = x - (nu as f64 / 2.0 + 0.25) * PI;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut best = f64::INFINITY;
    for k in 1..40u32 {
        let kf = k as f64;
        a *= (mu - (2.0 * kf - 1.0) * (2.0 * kf - 1.0)) / (kf * 8.0 * x);
        if a.abs() > best {
            break; // divergent tail of the asymptotic series
        }
        best = a.abs();
        let signed = if (k / 2) % 2 == 0 { a } else { -a };
        if k % 2 == 1 {
            q += signed;
        } else {
            p += signed;
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Bessel function of the first kind, order 0.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 12.0 {
        bessel_j_series(0, ax)
    } else {
        bessel_j_asymptotic(0, ax)
    }
}

/// Bessel function of the first kind, order 1.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= 12.0 {
        bessel_j_series(1, ax)
    } else {
        bessel_j_asymptotic(1, ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn bessel_i_series(nu: u32, x: f64) -> f64 {
    let nuf = nu as f64;
    let q = x * x / 4.0;
    let mut term = if nu == 0 { 1.0 } else { x / 2.0 };
    let mut sum = term;
    for k in 1..400 {
        let k = k as f64;
        term *= q / (k * (k + nuf));
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

fn bessel_i_asymptotic(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu as f64) * (nu as f64);
    let mut sum = 1.0;
    let mut a = 1.0;
    let mut best = f64::INFINITY;
    for k in 1..40u32 {
        let kf = k as f64;
        a *= -(mu - (2.0 * kf - 1.0) * (2.0 * kf - 1.0)) / (kf * 8.0 * x);
        if a.abs() > best {
            break;
        }
        best = a.abs();
        sum += a;
        if a.abs() < 1e-17 {
            break;
        }
    }
    x.exp() / (2.0 * PI * x).sqrt() * sum
}

/// Modified Bessel function of the first kind, order 0.
pub fn bessel_i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 18.0 {
        bessel_i_series(0, ax)
    } else {
        bessel_i_asymptotic(0, ax)
    }
}

/// Modified Bessel function of the first kind, order 1.
pub fn bessel_i1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= 18.0 {
        bessel_i_series(1, ax)
    } else {
        bessel_i_asymptotic(1, ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// Documented bound on |Im nu| for [`bessel_k_complex_order`].
pub const BESSEL_K_IM_NU_MAX: f64 = 20.0;

/// Modified Bessel function of the second kind with complex order nu and
/// real argument x > 0, via K_nu(x) = int_0^inf exp(-x cosh s) cosh(nu s) ds.
///
/// The integrand is analytic and even in s, so the half-line trapezoid sum
/// converges geometrically in the step size.
pub fn bessel_k_complex_order(nu: Complex64, x: f64) -> Result<Complex64> {
    if !(x > 0.0) {
        return Err(Error::DomainError(format!(
            "bessel_k_complex_order requires x > 0, got {x}"
        )));
    }
    if nu.im.abs() > BESSEL_K_IM_NU_MAX {
        return Err(Error::DomainError(format!(
            "|Im nu| = {} exceeds the supported bound {BESSEL_K_IM_NU_MAX}",
            nu.im.abs()
        )));
    }
    // Stop once x cosh s underflows the integrand.
    let s_max = ((746.0 + 40.0 * nu.re.abs().max(1.0)) / x).acosh();
    let ds = 5e-3 / (nu.im.abs() / 3.0).max(1.0);
    let n = (s_max / ds).ceil() as usize;
    let mut acc = Complex64::new(0.5, 0.0); // s = 0 term: e^{-x} cosh(0) / 2 weights
    let mut acc_sum = Complex64::default();
    for j in 1..=n {
        let s = j as f64 * ds;
        let w = (-x * (s.cosh() - 1.0)).exp();
        if w == 0.0 {
            break;
        }
        acc_sum += w * (nu * s).cosh();
    }
    acc += acc_sum;
    Ok(acc * ds * (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gamma_classical_values() {
        assert_relative_eq!(
            gamma_complex(c(1.0, 0.0)).unwrap().re,
            1.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            gamma_complex(c(0.5, 0.0)).unwrap().re,
            PI.sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            gamma_complex(c(6.0, 0.0)).unwrap().re,
            120.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn gamma_modulus_identity_on_critical_line() {
        // |Gamma(1/2 + iy)|^2 = pi / cosh(pi y), evaluated independently.
        for &y in &[0.25, 1.0, 5.0, 20.0, 50.0] {
            let g = gamma_complex(c(0.5, y)).unwrap();
            let expect = (PI / (PI * y).cosh()).sqrt();
            assert_relative_eq!(g.norm(), expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn gamma_reference_points() {
        // mpmath, 30 digits
        let cases = [
            (
                c(0.5, 3.0),
                c(0.0214456705524306460595528022516, 0.00686536483726167791423849381986),
            ),
            (
                c(4.0, 10.0),
                c(0.000771534294239966260273770868278, -0.00101908279904171236942760315663),
            ),
            (
                c(-1.5, 0.5),
                c(0.937916662787885050967336979631, 0.34920566814780486859408038374),
            ),
            (
                c(0.5, -25.0),
                c(1.05114715175323461063554012641e-17, 1.94397468197768306327086767537e-17),
            ),
        ];
        for (z, want) in cases {
            let got = gamma_complex(z).unwrap();
            assert!(
                (got - want).norm() <= 1e-12 * want.norm(),
                "Gamma({z}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn gamma_recurrence() {
        for &z in &[c(0.3, 2.0), c(2.5, -7.0), c(0.5, 40.0), c(-0.7, 1.3)] {
            let g1 = gamma_complex(z + 1.0).unwrap();
            let g0 = gamma_complex(z).unwrap();
            assert!(((g1 - z * g0) / g1).norm() <= 1e-11, "recurrence at {z}");
        }
    }

    #[test]
    fn gamma_pole_detection() {
        assert!(matches!(
            gamma_complex(c(0.0, 0.0)),
            Err(Error::PoleAtNonpositiveInteger(_))
        ));
        assert!(matches!(
            gamma_complex(c(-3.0, 0.0)),
            Err(Error::PoleAtNonpositiveInteger(_))
        ));
    }

    #[test]
    fn bessel_j_reference_points() {
        // mpmath, 30 digits
        let cases0 = [
            (0.0, 1.0),
            (0.5, 0.9384698072408129042284046736),
            (3.0, -0.260051954901933437624154695977),
            (11.0, -0.171190300407196088345827333585),
            (14.5, 0.0875448680103762229059048450825),
            (50.0, 0.0558123276692518150047504785294),
            (403.25, 0.0374528571885678906881792794235),
        ];
        for (x, want) in cases0 {
            let got = bessel_j0(x);
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(0.02),
                "J0({x}) = {got}, want {want}"
            );
        }
        let cases1 = [
            (0.5, 0.242268457674873886383954576142),
            (11.0, -0.176785298956721501137731079483),
            (29.0, 0.00693420455926525124815393403118),
        ];
        for (x, want) in cases1 {
            let got = bessel_j1(x);
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(0.02),
                "J1({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn bessel_i_reference_points() {
        assert_relative_eq!(bessel_i0(0.0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(
            bessel_i0(0.3),
            1.02262687935159698943576986396,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            bessel_i0(7.0),
            168.593908510289698857326627188,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            bessel_i0(19.0),
            16446190.4406117108220206046187,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            bessel_i1(0.3),
            0.151693840003592774589087035741,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            bessel_i1(19.0),
            16007373.7858369954983738115809,
            max_relative = 1e-12
        );
    }

    #[test]
    fn bessel_k_half_integer_closed_form() {
        // K_{1/2}(x) = sqrt(pi/(2x)) e^{-x}
        for &x in &[0.5, 1.0, 2.0, 3.3] {
            let want = (PI / (2.0 * x)).sqrt() * (-x).exp();
            let got = bessel_k_complex_order(c(0.5, 0.0), x).unwrap();
            assert_relative_eq!(got.re, want, max_relative = 1e-11);
            assert!(got.im.abs() < 1e-14);
        }
        // K_{3/2}(x) = sqrt(pi/(2x)) e^{-x} (1 + 1/x)
        let got = bessel_k_complex_order(c(1.5, 0.0), 2.0).unwrap();
        assert_relative_eq!(
            got.re,
            0.179906657952092171052054752455,
            max_relative = 1e-11
        );
    }

    #[test]
    fn bessel_k_complex_order_reference_points() {
        // mpmath, 30 digits
        let cases = [
            (c(0.5, 1.0), 2.0, c(0.0954371824042672888135254921079, 0.0203662591911833474870154475795)),
            (c(0.5, -0.7), 1.5, c(0.197548996183575955307236981038, -0.0371607874945905155167794335217)),
            (c(0.5, 2.0), 0.7357588823428847, c(0.0243818364071977398558313536153, 0.0962359190318414522824574843929)),
            (c(0.5, 6.0), 2.0, c(4.29870952017247067557320812627e-6, -9.82338254738268621204199695688e-5)),
        ];
        for (nu, x, want) in cases {
            let got = bessel_k_complex_order(nu, x).unwrap();
            assert!(
                (got - want).norm() <= 1e-10 * want.norm().max(1e-12),
                "K({nu}, {x}) = {got}, want {want}"
            );
        }
        // Large |Im nu|: the value sits deep under the integrand scale, so
        // the cancellation floor grows like e^{pi |Im nu| / 2} * eps.
        let want = c(4.23342960714618356702768151341e-9, -6.2538750472831006721668866004e-9);
        let got = bessel_k_complex_order(c(0.5, 12.0), 2.0).unwrap();
        assert!(
            (got - want).norm() <= 1e-7 * want.norm(),
            "K(0.5+12i, 2) = {got}, want {want}"
        );
    }

    #[test]
    fn bessel_k_symmetric_in_order() {
        let a = bessel_k_complex_order(c(0.5, 1.3), 2.2).unwrap();
        let b = bessel_k_complex_order(c(0.5, -1.3), 2.2).unwrap();
        assert!((a - b.conj()).norm() < 1e-13);
    }

    #[test]
    fn bessel_k_domain_errors() {
        assert!(bessel_k_complex_order(c(0.5, 0.0), 0.0).is_err());
        assert!(bessel_k_complex_order(c(0.5, 0.0), -1.0).is_err());
        assert!(bessel_k_complex_order(c(0.5, 25.0), 1.0).is_err());
    }
}
