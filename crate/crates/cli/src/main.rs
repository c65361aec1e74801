use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use equipart_cli::config::{parse_spacing, Backend, DirectionConfig, DomainConfig, RunConfig};
use equipart_cli::pipeline;

#[derive(Parser)]
#[command(
    name = "equipart",
    version,
    about = "Second variation of spectral partition energies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Zero threshold constant: tau = c0 * h for discrete counts.
    #[arg(long)]
    tol_zero: Option<f64>,
    /// Zero threshold for closed-form spectra.
    #[arg(long)]
    tol_exact: Option<f64>,
    /// Criticality tolerance.
    #[arg(long)]
    tol_crit: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainKind {
    Square,
    Rect,
    Torus,
}

#[derive(Subcommand)]
enum Command {
    /// Equal k-partition of a circle.
    Circle {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
        length: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form analysis of a rectangle mode.
    Square {
        #[arg(long, num_args = 2, value_names = ["M", "N"], default_values_t = [3, 1])]
        mode: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        height: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Finite-difference analysis.
    Grid {
        #[arg(long, value_enum, default_value = "square")]
        domain: DomainKind,
        #[arg(long, num_args = 2, value_names = ["M", "N"], default_values_t = [3, 1])]
        mode: Vec<usize>,
        /// Grid spacing, e.g. `1/60`.
        #[arg(long, default_value = "1/60", value_parser = parse_spacing)]
        h: f64,
        /// Height of the rectangle (`rect` only).
        #[arg(long, default_value_t = 0.8)]
        height: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Energy along a deformation of the strip interfaces.
    Descent {
        #[arg(long, num_args = 2, value_names = ["M", "N"], default_values_t = [3, 1])]
        mode: Vec<usize>,
        /// `k` for the k-th DtN eigenvector, or `random[:seed]`.
        #[arg(long, default_value = "1")]
        direction: Vec<DirectionConfig>,
        /// Comma-separated parameters.
        #[arg(long, default_value = "0,0.02,0.1", value_delimiter = ',')]
        t: Vec<f64>,
        #[arg(long, value_parser = parse_spacing)]
        h: Option<f64>,
        #[arg(long)]
        t0: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a named preset.
    Verify {
        #[arg(long)]
        preset: String,
        #[command(flatten)]
        common: Common,
    },
    /// Generic run: start from a preset or a backend and override fields.
    Run {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        backend: Option<Backend>,
        #[arg(long, num_args = 2, value_names = ["M", "N"])]
        mode: Option<Vec<usize>>,
        #[arg(long, value_parser = parse_spacing)]
        h: Option<f64>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        direction: Vec<DirectionConfig>,
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
}

fn apply_common(c: &mut RunConfig, common: Common) {
    c.out = common.out;
    c.thresholds.c0 = common.tol_zero.unwrap_or(c.thresholds.c0);
    c.thresholds.exact_zero = common.tol_exact.unwrap_or(c.thresholds.exact_zero);
    c.thresholds.criticality = common.tol_crit.or(c.thresholds.criticality);
}

fn pair(v: &[usize]) -> (usize, usize) {
    (v[0], v[1])
}

fn build(command: Command) -> Result<RunConfig, Box<dyn std::error::Error>> {
    let config = match command {
        Command::Circle { k, length, common } => {
            let mut c = RunConfig::base(Backend::Circle);
            c.name = format!("circle-{k}");
            c.domain = DomainConfig::Circle {
                circumference: length,
                k,
            };
            c.mode = (k, 0);
            apply_common(&mut c, common);
            c
        }
        Command::Square { mode, height, common } => {
            let mut c = RunConfig::base(Backend::Separable);
            c.domain = DomainConfig::Rectangle { width: 1.0, height };
            c.mode = pair(&mode);
            apply_common(&mut c, common);
            c
        }
        Command::Grid {
            domain,
            mode,
            h,
            height,
            common,
        } => {
            let mut c = RunConfig::base(Backend::Grid);
            c.domain = match domain {
                DomainKind::Square => DomainConfig::Rectangle {
                    width: 1.0,
                    height: 1.0,
                },
                DomainKind::Rect => DomainConfig::Rectangle { width: 1.0, height },
                DomainKind::Torus => DomainConfig::Torus {
                    width: 1.0,
                    height: 1.0,
                },
            };
            c.mode = pair(&mode);
            c.h = h;
            apply_common(&mut c, common);
            c
        }
        Command::Descent {
            mode,
            direction,
            t,
            h,
            t0,
            common,
        } => {
            let mut c = RunConfig::base(Backend::Strip);
            c.mode = pair(&mode);
            c.deformation.directions = direction;
            c.deformation.t = t;
            c.deformation.h = h.unwrap_or(c.deformation.h);
            c.deformation.t0 = t0.unwrap_or(c.deformation.t0);
            apply_common(&mut c, common);
            c
        }
        Command::Verify { preset, common } => {
            let mut c = RunConfig::preset(&preset)?;
            apply_common(&mut c, common);
            c
        }
        Command::Run {
            preset,
            backend,
            mode,
            h,
            k,
            direction,
            t,
            common,
        } => {
            let mut c = match (&preset, backend) {
                (Some(p), _) => RunConfig::preset(p)?,
                (None, Some(b)) => RunConfig::base(b),
                (None, None) => return Err("run needs --preset or --backend".into()),
            };
            if let Some(b) = backend {
                c.backend = b;
            }
            if let Some(m) = mode {
                c.mode = pair(&m);
            }
            if let Some(h) = h {
                c.h = h;
                c.deformation.h = c.deformation.h.min(h);
            }
            if let Some(k) = k {
                c.domain = DomainConfig::Circle {
                    circumference: 2.0 * std::f64::consts::PI,
                    k,
                };
                c.mode = (k, 0);
            }
            if !direction.is_empty() {
                c.deformation.directions = direction;
            }
            if let Some(t) = t {
                c.deformation.t = t;
            }
            apply_common(&mut c, common);
            c
        }
    };
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match build(cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pipeline::run(&config) {
        Ok(outcome) => {
            for s in &outcome.sections {
                println!("{}", s.to_table());
            }
            println!("config_hash={}", config.hash());
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.passed() {
                println!("result=pass");
                ExitCode::SUCCESS
            } else {
                println!("result=fail");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        super::Cli::command().debug_assert();
    }
}
