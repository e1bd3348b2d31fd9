//! Subcommand bodies: each builds the registry objects from the config,
//! fans the scan out over a worker pool, and emits one table.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::output::{Cell, Table};
use ucs_core::boundary::{hamiltonian_from_diag, solve_diagonals, solve_phi_psi, HamiltonianSample};
use ucs_core::chain::{j_formula, j_gram, t0_diagnostics, y_vector};
use ucs_core::evolution::{ab_direct, ab_ode, AbState};
use ucs_core::kernel::{kernel_of, KernelRep};
use ucs_core::operator::{compress, operator_norm};
use ucs_core::unimodular::{make_function, registry_ids, UnimodularFunction};
use ucs_core::{Error, Result};

pub struct Prepared {
    pub u: UnimodularFunction,
    pub k: KernelRep,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let u = make_function(&cfg.function_id, &cfg.params)?;
    let k = kernel_of(&u)?;
    Ok(Prepared { u, k })
}

/// Run a closure over items on a pool sized by the config knob (or the
/// UCS_JOBS environment variable); results keep input order.
pub fn fan_out<T, R, F>(cfg: &RunConfig, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send + Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = if cfg.jobs > 0 {
        cfg.jobs
    } else {
        std::env::var("UCS_JOBS")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0)
    };
    if jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("worker pool");
        pool.install(|| items.par_iter().map(|t| f(t)).collect())
    } else {
        items.par_iter().map(|t| f(t)).collect()
    }
}

fn err_cell<E: std::fmt::Display>(e: &E) -> Cell {
    Cell::Text(e.to_string())
}

/// `norm-scan`: rows (t, ||K[t]||); exit success iff every t passes the
/// margin.
pub fn cmd_norm_scan(cfg: &RunConfig) -> Result<(Table, bool)> {
    let p = prepare(cfg)?;
    let policy = cfg.policy();
    let rows = fan_out(cfg, cfg.t_values(), |&t| -> Result<(f64, f64)> {
        let (grid, _) = policy.grid_at(t)?;
        let op = compress(&p.k, &grid, t)?;
        Ok((t, operator_norm(&op)))
    });
    let mut table = Table::new(vec!["t", "norm"]);
    let mut all_margin = true;
    for row in rows {
        let (t, norm) = row?;
        all_margin &= norm <= 1.0 - ucs_core::operator::DEFAULT_NORM_MARGIN;
        table.push(vec![Cell::Float(t), Cell::Float(norm)]);
    }
    Ok((table, all_margin))
}

/// `hamiltonian`: rows (t, alpha, beta, gamma, re_phipsibar, err).
pub fn cmd_hamiltonian(cfg: &RunConfig) -> Result<(Table, bool)> {
    let p = prepare(cfg)?;
    let policy = cfg.policy();
    let rows = fan_out(cfg, cfg.t_values(), |&t| {
        let res: Result<HamiltonianSample> = (|| {
            let (grid, _) = policy.grid_at(t)?;
            let (pd, sd) = solve_diagonals(&p.k, &grid, t)?;
            hamiltonian_from_diag(t, pd, sd, false)
        })();
        (t, res)
    });
    let mut table = Table::new(vec!["t", "alpha", "beta", "gamma", "re_phipsibar", "err"]);
    let mut ok = true;
    for (t, res) in rows {
        match res {
            Ok(h) => table.push(vec![
                Cell::Float(t),
                Cell::Float(h.alpha),
                Cell::Float(h.beta),
                Cell::Float(h.gamma),
                Cell::Float(h.re_phipsibar),
                Cell::Empty,
            ]),
            Err(e) => {
                ok = false;
                table.push(vec![
                    Cell::Float(t),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    err_cell(&e),
                ]);
            }
        }
    }
    Ok((table, ok))
}

/// Dense Hamiltonian samples for the ODE path, one solve per step.
pub fn hamiltonian_samples(
    p: &Prepared,
    cfg: &RunConfig,
    t_from: f64,
    t_to: f64,
    dt: f64,
) -> Result<Vec<HamiltonianSample>> {
    let policy = cfg.policy();
    let n = ((t_to - t_from) / dt).round() as usize;
    let ts: Vec<f64> = (0..=n).map(|k| t_from + k as f64 * dt).collect();
    let rows = fan_out(cfg, ts, |&t| -> Result<HamiltonianSample> {
        let (grid, _) = policy.grid_at(t)?;
        let (pd, sd) = solve_diagonals(&p.k, &grid, t)?;
        hamiltonian_from_diag(t, pd, sd, false)
    });
    rows.into_iter().collect()
}

/// `evolve`: A and B (M-weighted) per (t, z), direct and ODE paths.
pub fn cmd_evolve(cfg: &RunConfig) -> Result<(Table, bool)> {
    let p = prepare(cfg)?;
    let policy = cfg.policy();
    let ts = cfg.t_values();
    let t0 = *ts.first().ok_or_else(|| Error::Config("empty scan".into()))?;
    let dt = (cfg.t_step / 8.0).min(0.01);
    let samples = hamiltonian_samples(&p, cfg, t0, *ts.last().unwrap(), dt)?;
    let mut work: Vec<(f64, Complex64)> = Vec::new();
    for &t in &ts {
        for &z in &cfg.probes {
            work.push((t, z));
        }
    }
    let rows = fan_out(cfg, work, |&(t, z)| {
        let direct: Result<AbState> = (|| {
            let (grid, _) = policy.grid_at(t)?;
            let bs = solve_phi_psi(&p.k, &p.u, &grid, t)?;
            ab_direct(&bs, z)
        })();
        let ode: Result<AbState> = (|| {
            let (grid, _) = policy.grid_at(t0)?;
            let bs = solve_phi_psi(&p.k, &p.u, &grid, t0)?;
            let init = ab_direct(&bs, z)?;
            ab_ode(&samples, &init, t, dt)
        })();
        (t, z, direct, ode)
    });
    let mut table = Table::new(vec![
        "t", "re_z", "im_z", "re_A", "im_A", "re_B", "im_B", "path", "err",
    ]);
    let mut ok = true;
    for (t, z, direct, ode) in rows {
        for (path, res) in [("direct", direct), ("ode", ode)] {
            match res {
                Ok(ab) => {
                    let m = p.u.m_eval(z);
                    let a = m * ab.a_tilde;
                    let b = m * ab.b_tilde;
                    table.push(vec![
                        Cell::Float(t),
                        Cell::Float(z.re),
                        Cell::Float(z.im),
                        Cell::Float(a.re),
                        Cell::Float(a.im),
                        Cell::Float(b.re),
                        Cell::Float(b.im),
                        Cell::Text(path.into()),
                        Cell::Empty,
                    ]);
                }
                Err(e) => {
                    ok = false;
                    table.push(vec![
                        Cell::Float(t),
                        Cell::Float(z.re),
                        Cell::Float(z.im),
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Text(path.into()),
                        err_cell(&e),
                    ]);
                }
            }
        }
    }
    Ok((table, ok))
}

/// `rkernel`: j by both routes over t and probe pairs (z, w).
pub fn cmd_rkernel(cfg: &RunConfig) -> Result<(Table, bool)> {
    let p = prepare(cfg)?;
    let policy = cfg.policy();
    let mut work: Vec<(f64, Complex64, Complex64)> = Vec::new();
    for &t in &cfg.t_values() {
        for &z in &cfg.probes {
            for &w in &cfg.probes {
                work.push((t, z, w));
            }
        }
    }
    type JRow = (f64, Complex64, Complex64, Result<(Complex64, Complex64)>);
    let rows: Vec<JRow> = fan_out(cfg, work, |&(t, z, w)| {
        let res = (|| {
            let (grid, _) = policy.grid_at(t)?;
            let bs = solve_phi_psi(&p.k, &p.u, &grid, t)?;
            let jf = j_formula(&ab_direct(&bs, z)?, &ab_direct(&bs, w)?)?;
            let yz = y_vector(&p.k, &p.u, &grid, t, z)?;
            let yw = y_vector(&p.k, &p.u, &grid, t, w)?;
            let jg = j_gram(&yz, &yw, &p.k)?;
            Ok((jf, jg))
        })();
        (t, z, w, res)
    });
    let mut table = Table::new(vec![
        "t",
        "re_z",
        "im_z",
        "re_w",
        "im_w",
        "re_j_formula",
        "im_j_formula",
        "re_j_gram",
        "im_j_gram",
        "err",
    ]);
    let mut ok = true;
    for (t, z, w, res) in rows {
        match res {
            Ok((jf, jg)) => table.push(vec![
                Cell::Float(t),
                Cell::Float(z.re),
                Cell::Float(z.im),
                Cell::Float(w.re),
                Cell::Float(w.im),
                Cell::Float(jf.re),
                Cell::Float(jf.im),
                Cell::Float(jg.re),
                Cell::Float(jg.im),
                Cell::Empty,
            ]),
            Err(e) => {
                ok = false;
                table.push(vec![
                    Cell::Float(t),
                    Cell::Float(z.re),
                    Cell::Float(z.im),
                    Cell::Float(w.re),
                    Cell::Float(w.im),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    err_cell(&e),
                ]);
            }
        }
    }
    Ok((table, ok))
}

/// `t0-scan`: norm, j(t;z,z), ||Y|| per t plus the endpoint estimate row.
pub fn cmd_t0(cfg: &RunConfig) -> Result<(Table, bool)> {
    let p = prepare(cfg)?;
    let z = *cfg
        .probes
        .first()
        .ok_or_else(|| Error::Config("t0-scan needs one probe".into()))?;
    let rep = t0_diagnostics(&p.k, &p.u, &cfg.policy(), &cfg.t_values(), z)?;
    let mut table = Table::new(vec!["t", "norm", "j_diag", "y_norm", "t0_estimate", "k8", "err"]);
    let t0_cell = match rep.t0_estimate {
        Some(t0) => Cell::Float(t0),
        None => Cell::Text("inf".into()),
    };
    let k8 = Cell::Text(format!("{:?}", rep.k8));
    for row in &rep.rows {
        table.push(vec![
            Cell::Float(row.t),
            Cell::Float(row.norm),
            row.j_diag.map(Cell::Float).unwrap_or(Cell::Empty),
            row.y_norm.map(Cell::Float).unwrap_or(Cell::Empty),
            t0_cell.clone(),
            k8.clone(),
            row.err
                .as_ref()
                .map(|e| Cell::Text(e.clone()))
                .unwrap_or(Cell::Empty),
        ]);
    }
    Ok((table, true))
}

/// `list-functions`: the registry with parameter shapes and flags.
pub fn cmd_list_functions() -> Table {
    let mut table = Table::new(vec!["id", "params", "symmetric", "inner"]);
    let shapes = [
        ("pw", "a > 0"),
        ("mobius", "(none)"),
        ("blaschke", "re1, im1, ... zeros in the upper half-plane"),
        ("gamma_ratio", "(none)"),
        ("product", "a >= 0 followed by Blaschke zeros"),
    ];
    for (id, shape) in shapes {
        let probe: Vec<f64> = match id {
            "pw" => vec![1.0],
            "blaschke" => vec![0.0, 1.0],
            "product" => vec![0.5, 0.0, 1.0],
            _ => vec![],
        };
        let u = make_function(id, &probe).expect("registry probe");
        table.push(vec![
            Cell::Text(id.into()),
            Cell::Text(shape.into()),
            Cell::Text(u.symmetric.to_string()),
            Cell::Text(u.inner.to_string()),
        ]);
    }
    debug_assert_eq!(shapes.len(), registry_ids().len());
    table
}
