//! Command-line front end: evaluate curves, coefficient tables, moments,
//! consistency suites and simulations, emitting diff-able CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 2 usage error, 3 tolerance breach in the
//! consistency suite, 4 numerical failure.

use crate::laws::Laws;
use crate::{coeffs, simulate, Error, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;

/// Evaluate height/diameter laws of stable Lévy trees and verify them.
#[derive(Parser, Debug)]
#[command(name = "levytree", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy)]
struct Grid {
    min: f64,
    max: f64,
    count: usize,
    log: bool,
}

impl Grid {
    fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|i| {
                let t = i as f64 / (self.count - 1) as f64;
                if self.log {
                    self.min * (self.max / self.min).powf(t)
                } else {
                    self.min + (self.max - self.min) * t
                }
            })
            .collect()
    }
}

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() < 3 || parts.len() > 4 {
        return Err("grid spec is min:max:count[:log]".into());
    }
    let min: f64 = parts[0].parse().map_err(|_| "bad grid minimum")?;
    let max: f64 = parts[1].parse().map_err(|_| "bad grid maximum")?;
    let count: usize = parts[2].parse().map_err(|_| "bad grid count")?;
    let log = match parts.get(3) {
        None => false,
        Some(&"log") => true,
        Some(&"linear") => false,
        Some(other) => return Err(format!("unknown spacing {other:?}")),
    };
    if count < 2 && min != max {
        return Err("grid count must be at least 2".into());
    }
    if log && (min <= 0.0 || max <= 0.0) {
        return Err("log spacing needs positive endpoints".into());
    }
    Ok(Grid {
        min,
        max,
        count,
        log,
    })
}

#[derive(Args, Debug)]
struct Common {
    /// Stable index γ in (1, 2].
    #[arg(long, default_value_t = 2.0)]
    gamma: f64,
    /// Output path; "-" writes to stdout.
    #[arg(long, default_value = "-")]
    out: PathBuf,
    /// Override the solver/quadrature absolute tolerance.
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Override the solver/quadrature relative tolerance.
    #[arg(long)]
    rel_tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Height or diameter tail of the normalized tree on an r-grid.
    Tail {
        #[command(flatten)]
        common: Common,
        /// "height" or "diam".
        #[arg(long)]
        kind: String,
        /// r-grid as min:max:count[:log].
        #[arg(long, value_parser = parse_grid)]
        grid: Grid,
    },
    /// Diameter density under the excursion measure on an s-grid.
    Density {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_grid)]
        grid: Grid,
    },
    /// Conditional law of the diameter given the total height.
    Conditional {
        #[command(flatten)]
        common: Common,
        /// Conditioning height r.
        #[arg(long)]
        height: f64,
        /// y-grid as min:max:count[:log].
        #[arg(long, value_parser = parse_grid)]
        grid: Grid,
    },
    /// Joint Laplace functional L1(y, z) on a product grid.
    Joint {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_grid)]
        y_grid: Grid,
        #[arg(long, value_parser = parse_grid)]
        z_grid: Grid,
    },
    /// First moments (and their ratio) at one index or along a γ-grid.
    Moments {
        #[command(flatten)]
        common: Common,
        /// Optional γ-grid min:max:count; overrides --gamma.
        #[arg(long, value_parser = parse_grid)]
        gamma_grid: Option<Grid>,
    },
    /// Coefficient tables as JSON.
    Coeffs {
        #[command(flatten)]
        common: Common,
        /// Truncation order of the series and recursions.
        #[arg(long, default_value_t = 25)]
        order: usize,
    },
    /// Dual-route consistency suite; exits 3 on any tolerance breach.
    Consistency {
        #[command(flatten)]
        common: Common,
    },
    /// Asymptotic-exponent table on an r-grid with the small-r constants.
    Table1 {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_grid)]
        grid: Grid,
    },
    /// Conditioned Galton-Watson experiment; report as JSON.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Tree size (number of vertices).
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        /// Number of replicas.
        #[arg(long, default_value_t = 100_000)]
        replicas: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write per-replica `replica,gamma_disc,d_disc` rows here.
        #[arg(long)]
        per_replica: Option<PathBuf>,
    },
}

/// Run the CLI; returns the process exit code.
pub fn run<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Ok(workers) = std::env::var("LEVYTREE_WORKERS") {
        if let Ok(k) = workers.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            4
        }
    }
}

fn laws_for(common: &Common) -> Result<Laws> {
    let mut solver = crate::branching::SolverConfig::default();
    let mut quad = crate::stablefn::QuadratureConfig {
        abs_tol: 1e-300,
        rel_tol: 1e-12,
        max_subdivisions: 8000,
        small_x_switch: None,
    };
    if let Some(a) = common.abs_tol {
        solver.abs_tol = a;
        quad.abs_tol = a;
    }
    if let Some(r) = common.rel_tol {
        solver.rel_tol = r;
        quad.rel_tol = r;
    }
    Laws::with_config(common.gamma, solver, quad)
}

fn provenance(gamma: f64) -> String {
    format!(
        "# levytree v{} gamma={gamma} abs_tol=1e-12 rel_tol=1e-12\n",
        env!("CARGO_PKG_VERSION")
    )
}

fn provenance_no_gamma() -> String {
    format!(
        "# levytree v{} abs_tol=1e-12 rel_tol=1e-12\n",
        env!("CARGO_PKG_VERSION")
    )
}

fn write_out(path: &PathBuf, data: &str) -> Result<()> {
    if path.as_os_str() == "-" {
        std::io::stdout().write_all(data.as_bytes())?;
    } else {
        std::fs::write(path, data)?;
    }
    Ok(())
}

fn json_out<T: Serialize>(path: &PathBuf, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Validation(format!("serialization failed: {e}")))?;
    s.push('\n');
    write_out(path, &s)
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Tail { common, kind, grid } => {
            let laws = laws_for(&common)?;
            let mut curve = crate::laws::TailCurve {
                kind: match kind.as_str() {
                    "height" => "height_tail".into(),
                    "diam" => "diam_tail".into(),
                    other => {
                        return Err(Error::Validation(format!(
                            "unknown tail kind {other:?} (use height or diam)"
                        )))
                    }
                },
                grid: grid.points(),
                values: Vec::new(),
            };
            for &r in &curve.grid {
                curve.values.push(if kind == "height" {
                    laws.nr_height_tail(r)?
                } else {
                    laws.nr_diam_tail(r)?
                });
            }
            let mut out = provenance(common.gamma);
            out.push_str("r,value\n");
            for (r, v) in curve.grid.iter().zip(&curve.values) {
                out.push_str(&format!("{r},{v}\n"));
            }
            write_out(&common.out, &out)?;
            Ok(0)
        }
        Command::Density { common, grid } => {
            let laws = laws_for(&common)?;
            let mut out = provenance(common.gamma);
            out.push_str("s,value\n");
            for s in grid.points() {
                out.push_str(&format!("{s},{}\n", laws.diam_density(s)?));
            }
            write_out(&common.out, &out)?;
            Ok(0)
        }
        Command::Conditional {
            common,
            height,
            grid,
        } => {
            let laws = laws_for(&common)?;
            let mut out = provenance(common.gamma);
            out.push_str("y,value\n");
            for y in grid.points() {
                out.push_str(&format!(
                    "{y},{}\n",
                    laws.cond_diam_given_height(y, height)?
                ));
            }
            write_out(&common.out, &out)?;
            Ok(0)
        }
        Command::Joint {
            common,
            y_grid,
            z_grid,
        } => {
            let laws = laws_for(&common)?;
            let mut out = provenance(common.gamma);
            out.push_str("y,z,value\n");
            for y in y_grid.points() {
                for z in z_grid.points() {
                    if y == 0.0 && z == 0.0 {
                        continue;
                    }
                    out.push_str(&format!("{y},{z},{}\n", laws.l1(y, z)?));
                }
            }
            write_out(&common.out, &out)?;
            Ok(0)
        }
        Command::Moments { common, gamma_grid } => {
            let gammas = match gamma_grid {
                Some(g) => g.points(),
                None => vec![common.gamma],
            };
            let mut out = String::from(
                "# levytree moments; columns: gamma, mean height, mean diameter, ratio\n",
            );
            out.push_str(&provenance_no_gamma());
            out.push_str("gamma,mean_height,mean_diam,ratio\n");
            for g in gammas {
                let laws = Laws::new(g)?;
                let rep = laws.moment_report()?;
                out.push_str(&format!(
                    "{g},{},{},{}\n",
                    rep.mean_height, rep.mean_diam, rep.ratio
                ));
            }
            write_out(&common.out, &out)?;
            Ok(0)
        }
        Command::Coeffs { common, order } => {
            let tables = coeffs::coeff_tables(common.gamma, order)?;
            json_out(&common.out, &tables)?;
            Ok(0)
        }
        Command::Consistency { common } => {
            let report = consistency_suite(common.gamma)?;
            let breach = report.iter().any(|c| !c.pass);
            json_out(&common.out, &report)?;
            Ok(if breach { 3 } else { 0 })
        }
        Command::Table1 { common, grid } => {
            let laws = laws_for(&common)?;
            let t = laws.table1(&grid.points())?;
            let mut out = provenance(common.gamma);
            out.push_str(&format!("# lambda_cr={}\n", t.lambda_cr));
            if let (Some(c), Some(cp)) = (t.c_small, t.cprime_small) {
                out.push_str(&format!("# C_small={c}\n# Cprime_small={cp}\n"));
            }
            if let Some((p1, p2)) = t.brownian_small_r_prefactors {
                out.push_str(&format!(
                    "# small_r_prefactor_height={p1}\n# small_r_prefactor_diam={p2}\n"
                ));
            }
            out.push_str("r,height_large_r,diam_large_r,height_small_r,diam_small_r\n");
            for (i, r) in t.grid.iter().enumerate() {
                out.push_str(&format!(
                    "{r},{},{},{},{}\n",
                    t.height_large_r[i], t.diam_large_r[i], t.height_small_r[i], t.diam_small_r[i]
                ));
            }
            write_out(&common.out, &out)?;
            Ok(0)
        }
        Command::Simulate {
            common,
            n,
            replicas,
            seed,
            per_replica,
        } => {
            let (report, stats) =
                simulate::run_experiment_with_stats(common.gamma, n, replicas, seed)?;
            if let Some(path) = per_replica {
                let mut out = provenance(common.gamma);
                out.push_str("replica,gamma_disc,d_disc\n");
                for (i, (h, d)) in stats.iter().enumerate() {
                    out.push_str(&format!("{i},{h},{d}\n"));
                }
                write_out(&path, &out)?;
            }
            json_out(&common.out, &report)?;
            Ok(0)
        }
    }
}

/// One record of the dual-route consistency suite.
#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyCheck {
    pub check: String,
    pub gamma: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn check(list: &mut Vec<ConsistencyCheck>, name: &str, gamma: f64, observed: f64, tol: f64) {
    list.push(ConsistencyCheck {
        check: name.into(),
        gamma,
        observed,
        tolerance: tol,
        pass: observed.abs() <= tol,
    });
}

/// The dual-route suite at one index: solver residuals, series-vs-closed
/// forms, transform identities, moment routes, and the forward Laplace
/// comparison.
pub fn consistency_suite(gamma: f64) -> Result<Vec<ConsistencyCheck>> {
    let laws = Laws::new(gamma)?;
    let mut out = Vec::new();

    // implicit solver forward residual on a y-grid; once w − 1 drops toward
    // one ulp of 1, substitute φ back instead of the full w (the equation is
    // the same, but 1 + φ cannot carry φ's precision)
    let mut worst = 0.0f64;
    for i in 0..40 {
        let y = 0.05 * (300.0f64).powf(i as f64 / 39.0);
        let phi = laws.br.phi(y)?;
        let resid = if phi > 1e-6 {
            (laws.br.tail_integral(1.0 + phi)? - y).abs() / (1.0 + y)
        } else {
            (laws.br.tail_integral_from_phi(phi)? - y).abs() / (1.0 + y)
        };
        worst = worst.max(resid);
    }
    check(&mut out, "w_forward_residual", gamma, worst, 1e-10);

    // density normalization and transform identities
    let mass = laws.sd.total_mass()?;
    check(&mut out, "density_mass_minus_one", gamma, mass - 1.0, 1e-8);
    let alpha = (gamma - 1.0) / gamma;
    let mut worst = 0.0f64;
    for &lam in &[0.5f64, 1.0, 2.0, 5.0] {
        let e = (-gamma * lam.powf(alpha)).exp();
        worst = worst.max((laws.sd.laplace_density(lam)? - e).abs());
        worst = worst.max((laws.sd.laplace_theta(lam)? - lam.powf(1.0 / gamma) * e).abs());
        worst = worst.max((laws.sd.laplace_density_deriv(lam)? - lam * e).abs());
    }
    check(&mut out, "kernel_laplace_identities", gamma, worst, 1e-6);

    // moment routes
    let h = laws.moment_height()?;
    check(
        &mut out,
        "moment_height_routes",
        gamma,
        (h.series - h.quadrature) / h.series,
        1e-8,
    );
    let d = laws.moment_diam()?;
    if gamma >= 1.3 {
        check(
            &mut out,
            "moment_diam_routes",
            gamma,
            (d.series - d.quadrature) / d.quadrature,
            1e-6,
        );
    }

    // diameter expansion against the direct functional at moderate y
    let y = 3.0;
    let direct = laws.l1(y, 0.0)?;
    check(
        &mut out,
        "l1_series_route",
        gamma,
        laws.l1_series(y) - direct,
        1e-8,
    );

    // forward Laplace comparison of the series-built tails
    let rep = laws.laplace_crosscheck(&[1.0, 2.0, 5.0, 10.0])?;
    check(&mut out, "laplace_crosscheck", gamma, rep.max_rel_err, 1e-4);

    if gamma == 2.0 {
        // closed-form identities special to the Brownian index
        let mut worst = 0.0f64;
        for i in 0..=20 {
            let r = 0.8 + 2.2 * i as f64 / 20.0;
            worst = worst
                .max((laws.height_tail_series(r)? - crate::laws::brownian_height_tail(r)).abs());
        }
        for i in 0..=20 {
            let r = 1.6 + 4.4 * i as f64 / 20.0;
            worst =
                worst.max((laws.diam_tail_series(r)? - crate::laws::brownian_diam_tail(r)).abs());
        }
        check(&mut out, "brownian_series_identity", gamma, worst, 1e-12);
        let comp = (crate::laws::brownian_height_tail(1.2)
            + crate::laws::brownian_height_cdf_small(1.2)
            - 1.0)
            .abs()
            .max(
                (crate::laws::brownian_diam_tail(1.5) + crate::laws::brownian_diam_cdf_small(1.5)
                    - 1.0)
                    .abs(),
            );
        check(&mut out, "brownian_complementarity", gamma, comp, 1e-8);
    }

    Ok(out)
}
