// SPDX-License-Identifier: Apache-2.0

mod continuum;
mod error;
mod fixture;
mod graph;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use continuum::Formula;
use error::CliError;
use graph::Method;
use report::{exit_code, write_reports, Format, Report};
use verify::Suite;

/// Verifies heat-kernel gluing and cutting formulas on graphs and 1D geometries.
#[derive(Parser, Debug)]
#[command(name = "heatglue", version)]
struct Cli {
    /// Report format: JSON lines or CSV.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    /// A case passes when its residual is at most max(tol, bound).
    #[arg(long, default_value_t = 1e-8, global = true)]
    tol: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Graph fixtures: gluing, path sums, Schur cuts.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Two intervals glued at a point.
    #[command(subcommand)]
    Interval(IntervalCmd),
    /// Two half-lines glued at the origin.
    #[command(subcommand)]
    Ray(RayCmd),
    /// Circle cut into arcs.
    #[command(subcommand)]
    Circle(CircleCmd),
    /// Finite cylinders over a circle.
    #[command(subcommand)]
    Cylinder(CylinderCmd),
    /// Dirichlet-to-Neumann spectra.
    #[command(subcommand)]
    Dn(DnCmd),
    /// Seeded random verification suites.
    Verify(VerifyArgs),
}

#[derive(Subcommand, Debug)]
enum GraphCmd {
    /// Glue the two sides of a decomposition back together.
    Glue {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, value_enum, default_value_t = Method::Assembled)]
        method: Method,
        #[arg(long, default_value_t = 40)]
        kmax: usize,
    },
    /// Heat kernel entry as a sum over paths.
    Pathsum {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1e-10)]
        eps: f64,
    },
    /// Dirichlet Green's function through the Schur complement.
    Cut {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated vertex labels.
        #[arg(long, value_delimiter = ',', required = true)]
        interface: Vec<String>,
        #[arg(long)]
        m2: f64,
    },
}

#[derive(Subcommand, Debug)]
enum IntervalCmd {
    /// Glue [0, L1] and [L1, L1+L2]; points are offsets into the second piece.
    Glue(IntervalGlueArgs),
}

#[derive(Args, Debug)]
struct IntervalGlueArgs {
    /// Interval-pair fixture; replaces L1, L2, x, y and t.
    #[arg(long, conflicts_with_all = ["l1", "l2", "x", "y", "t"])]
    input: Option<PathBuf>,
    #[arg(long = "L1")]
    l1: Option<f64>,
    #[arg(long = "L2")]
    l2: Option<f64>,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    y: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, value_enum, default_value_t = Formula::First)]
    formula: Formula,
    #[arg(long, default_value_t = 6)]
    nmax: usize,
}

#[derive(Subcommand, Debug)]
enum RayCmd {
    /// Glue two half-lines into the line.
    Glue {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
        #[arg(long)]
        t: f64,
    },
}

#[derive(Subcommand, Debug)]
enum CircleCmd {
    /// Cut a circle at two points into two arcs.
    Cut {
        #[arg(long = "L")]
        l: f64,
        /// Two cut points `p,q`.
        #[arg(long, value_delimiter = ',', required = true)]
        cuts: Vec<f64>,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 4)]
        kmax: usize,
    },
}

#[derive(Subcommand, Debug)]
enum CylinderCmd {
    /// Product structure of cylinder kernels and interval gluing times a circle.
    Check {
        #[arg(long = "L1")]
        l1: f64,
        #[arg(long = "L2")]
        l2: f64,
        #[arg(long = "Lgamma")]
        l_gamma: f64,
        #[arg(long)]
        t: f64,
    },
}

#[derive(Subcommand, Debug)]
enum DnCmd {
    /// Dirichlet-to-Neumann spectrum at one end of a finite cylinder.
    Cylinder {
        #[arg(long = "L")]
        l: f64,
        #[arg(long)]
        m2: f64,
        #[arg(long, default_value_t = 8)]
        kmax: usize,
        /// Circumference of the cross-section circle.
        #[arg(long = "Lgamma", default_value_t = 2.0 * std::f64::consts::PI)]
        l_gamma: f64,
    },
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cases per suite; each suite has its own default.
    #[arg(long)]
    cases: Option<usize>,
}

fn required(name: &str, v: Option<f64>) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Input(format!("--{name} is required without --input")))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("HEATGLUE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("HEATGLUE_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(e.to_string()))
}

fn run(cli: &Cli) -> Result<Vec<Report>, CliError> {
    let tol = cli.tol;
    if !(tol >= 0.0) {
        return Err(CliError::Input(format!("--tol must be >= 0, got {tol}")));
    }
    Ok(match &cli.command {
        Command::Graph(GraphCmd::Glue { input, t, method, kmax }) => {
            graph::glue(&fixture::load_graph(input)?, *t, *method, *kmax, tol)?
        }
        Command::Graph(GraphCmd::Pathsum { input, u, v, t, eps }) => {
            vec![graph::pathsum(&fixture::load_graph(input)?, u, v, *t, *eps, tol)?]
        }
        Command::Graph(GraphCmd::Cut { input, interface, m2 }) => {
            graph::cut(&fixture::load_graph(input)?, interface, *m2, tol)?
        }
        Command::Interval(IntervalCmd::Glue(a)) => match &a.input {
            Some(path) => {
                let fx = fixture::load_interval(path)?;
                fx.cases
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let mut r = continuum::interval_glue(
                            fx.l1,
                            fx.l2,
                            c.x,
                            c.y,
                            c.t,
                            a.formula,
                            a.nmax,
                            Some(c.reference),
                            tol,
                        )?;
                        r.case = format!("{}:{i:03}", r.case);
                        r.inputs["fixture"] = fx.name.clone().into();
                        Ok(r)
                    })
                    .collect::<Result<_, CliError>>()?
            }
            None => vec![continuum::interval_glue(
                required("L1", a.l1)?,
                required("L2", a.l2)?,
                required("x", a.x)?,
                required("y", a.y)?,
                required("t", a.t)?,
                a.formula,
                a.nmax,
                None,
                tol,
            )?],
        },
        Command::Ray(RayCmd::Glue { x, y, t }) => vec![continuum::ray_glue(*x, *y, *t, tol)?],
        Command::Circle(CircleCmd::Cut { l, cuts, x, y, t, kmax }) => {
            if cuts.len() != 2 {
                return Err(CliError::Input(format!("--cuts takes two points p,q, got {}", cuts.len())));
            }
            vec![continuum::circle_cut(*l, (cuts[0], cuts[1]), *x, *y, *t, *kmax, tol)?]
        }
        Command::Cylinder(CylinderCmd::Check { l1, l2, l_gamma, t }) => {
            let points = continuum::cylinder_points(*l1, *l2);
            let gamma = [(0.0, 0.0), (0.1 * l_gamma, 0.6 * l_gamma), (0.45 * l_gamma, 0.2 * l_gamma)];
            continuum::cylinder_check(*l1, *l2, *l_gamma, *t, &points, &gamma, tol)?
        }
        Command::Dn(DnCmd::Cylinder { l, m2, kmax, l_gamma }) => continuum::dn(*l, *m2, *kmax, *l_gamma, tol)?,
        Command::Verify(v) => {
            configure_threads()?;
            verify::run(v.suite, v.seed, v.cases, tol)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let reports = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("heatglue: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    match write_reports(std::io::stdout().lock(), &reports, cli.format) {
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
        Err(e) => {
            eprintln!("heatglue: {e}");
            return ExitCode::from(e.exit_code());
        }
        Ok(()) => {}
    }
    ExitCode::from(exit_code(&reports))
}
