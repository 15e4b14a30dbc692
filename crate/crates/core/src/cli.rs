//! Command-line entry point.
//!
//! Exit codes: 0 on success, 1 for bad input (usage, config, I/O), 2 when the
//! numerics fail (instability or divergence).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config_with_overrides, SimConfig};
use crate::emcore::{EMState, Scheme, Simulation};
use crate::error::{Error, Result};
use crate::harness::{
    cfl_study, convergence_study, format_cfl_table, format_csv, format_longtime_table, format_table, longtime_study,
    StudyPlan,
};
use crate::snapshot::{auto_range, read_snapshot, write_heatmap, write_snapshot, SnapshotHeader};

#[derive(Debug, Parser)]
#[command(name = "pecfdtd", version, about = "2D TMz FDTD around level-set PEC obstacles")]
struct Cli {
    /// Worker threads for sweeps and studies (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation and write terminal snapshots and heatmaps.
    Run(Common),
    /// Grid refinement study against a fine reference run.
    Convergence(Common),
    /// Relative error against the reference CFL for each CFL in the list.
    CflStudy(Common),
    /// Reference-free max norm at several final times.
    Longtime(Common),
    /// Compare two snapshot files node by node.
    SnapshotDiff {
        a: PathBuf,
        b: PathBuf,
        /// Exit 1 if the largest difference exceeds this.
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// `section.key=value`, applied after the file; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.threads {
        Some(0) => Err(Error::param("--threads", "must be >= 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command)),
            Err(e) => Err(Error::param("--threads", e.to_string())),
        },
        None => dispatch(&cli.command),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                eprintln!("hint: lower solver.cfl or refine grid.resolution");
                2
            } else {
                1
            }
        }
    }
}

fn load(c: &Common) -> Result<SimConfig> {
    let text = fs::read_to_string(&c.config)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", c.config.display()))))?;
    let cfg = parse_config_with_overrides(&text, &c.overrides)?;
    fs::create_dir_all(&c.out)?;
    Ok(cfg)
}

fn dispatch(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Run(c) => {
            let cfg = load(c)?;
            let mut sim = Simulation::from_config(&cfg)?;
            let state = sim.run(Scheme::Bfecc)?;
            write_outputs(&cfg, &state, &c.out)?;
            println!(
                "t = {} after {} steps, max |Ez| = {:.6e}",
                state.time,
                sim.params().steps,
                state.ez.max_abs()
            );
        }
        Command::Convergence(c) => {
            let cfg = load(c)?;
            let reports = convergence_study(&StudyPlan::from_config(&cfg))?;
            let table = format_table(&reports);
            fs::write(c.out.join("convergence.txt"), &table)?;
            fs::write(c.out.join("convergence.csv"), format_csv(&reports))?;
            print!("{table}");
        }
        Command::CflStudy(c) => {
            let cfg = load(c)?;
            let rows = cfl_study(&StudyPlan::from_config(&cfg), &cfg.study.cfl_list, cfg.study.reference_cfl)?;
            let (table, csv) = format_cfl_table(&rows);
            fs::write(c.out.join("cfl_study.txt"), &table)?;
            fs::write(c.out.join("cfl_study.csv"), csv)?;
            print!("{table}");
        }
        Command::Longtime(c) => {
            let cfg = load(c)?;
            let rows = longtime_study(&StudyPlan::from_config(&cfg), &cfg.study.t_list)?;
            let (table, csv) = format_longtime_table(&rows);
            fs::write(c.out.join("longtime.txt"), &table)?;
            fs::write(c.out.join("longtime.csv"), csv)?;
            print!("{table}");
        }
        Command::SnapshotDiff { a, b, tolerance } => {
            let (ha, fa) = read_snapshot(a)?;
            let (hb, fb) = read_snapshot(b)?;
            if (ha.nx, ha.ny) != (hb.nx, hb.ny) {
                return Err(Error::Misaligned(format!(
                    "{} is {}x{} but {} is {}x{}",
                    a.display(),
                    ha.nx,
                    ha.ny,
                    b.display(),
                    hb.nx,
                    hb.ny
                )));
            }
            let n = fa.values().len() as f64;
            let (mut max, mut sum) = (0.0f64, 0.0);
            for (x, y) in fa.values().iter().zip(fb.values()) {
                let d = (x - y).abs();
                max = max.max(d);
                sum += d;
            }
            println!("max_abs_diff {max:e}");
            println!("mean_abs_diff {:e}", sum / n);
            if let Some(tol) = tolerance {
                if !(max <= *tol) {
                    return Err(Error::param("--tolerance", format!("max difference {max:e} exceeds {tol:e}")));
                }
            }
        }
    }
    Ok(())
}

fn write_outputs(cfg: &SimConfig, state: &EMState, out: &Path) -> Result<()> {
    for name in &cfg.output.snapshots {
        let field = match name.as_str() {
            "Ez" => &state.ez,
            "Hx" => &state.hx,
            _ => &state.hy,
        };
        let header = SnapshotHeader::for_field(field, state.time, name.as_str());
        write_snapshot(field, &header, &out.join(format!("{}.txt", name.as_str())))?;
        if cfg.output.heatmap {
            let range = cfg.output.heatmap_range.unwrap_or_else(|| auto_range(field));
            write_heatmap(field, &out.join(format!("{}.ppm", name.as_str())), range)?;
        }
    }
    Ok(())
}
