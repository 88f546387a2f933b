//! Command-line front end for the wavelet regularity toolkit: regularity
//! queries, root optimization, table reproduction, spectral factorization,
//! and plot-data emission.
//!
//! Conventions: stdout carries data only, stderr carries diagnostics.
//! Exit codes: 0 success, 1 usage/file/computation error, 2 infeasible
//! design, 3 orthonormality (Cohen) check failure.

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use wavereg_core::{
    optimize, phi_samples, phihat_product, regularity, solve_by_roots, spectral_factorize,
    spectral_factorize_ladder, DesignParams, Error, ScalingFilter, SqMagnitude, StartSpec,
};

#[derive(Parser)]
#[command(
    name = "wavereg",
    about = "Design and analysis of maximally Sobolev-regular orthonormal wavelet filters",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the Sobolev regularity report of a design.
    Exponent {
        /// Filter half-length N (the filter has 2N taps).
        #[arg(long)]
        n: Option<usize>,
        /// Number of prescribed double roots on (pi/2, pi).
        #[arg(long, default_value_t = 0)]
        nz: usize,
        /// Comma-separated root locations.
        #[arg(long, value_delimiter = ',')]
        roots: Vec<f64>,
        /// Scaling-filter coefficient file (one coefficient per line).
        #[arg(long)]
        coeffs: Option<PathBuf>,
        /// Design description file: JSON {"N": .., "nz": .., "roots": [..]}.
        #[arg(long)]
        design: Option<PathBuf>,
    },
    /// Multi-start search for the regularity-maximizing root locations.
    Optimize {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        nz: usize,
        /// Number of low-discrepancy starts (default depends on nz).
        #[arg(long)]
        starts: Option<usize>,
        /// Explicit seed roots (one start), comma-separated.
        #[arg(long, value_delimiter = ',')]
        seed_roots: Vec<f64>,
    },
    /// Spectral factorization: emit the 2N filter coefficients.
    Factor {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        nz: usize,
        #[arg(long, value_delimiter = ',')]
        roots: Vec<f64>,
        #[arg(long)]
        design: Option<PathBuf>,
        /// Working precision in significant digits; default runs the
        /// 30/60-digit ladder with cross-validation.
        #[arg(long, env = "WAVEREG_PRECISION")]
        precision: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce the best-exponent table: rows 2N = 2..=2*max-n, columns nz.
    Table {
        /// Largest half-length N (rows run over 2N = 2, 4, ..., 2N_max).
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// Restrict to a single nz column (0..=4); default all columns.
        #[arg(long)]
        nz: Option<usize>,
        /// Starts per optimized cell (default depends on nz).
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate s0 over a root-location grid.
    Scan {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        nz: usize,
        /// Grid points per root axis.
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Scaling-function samples on the dyadic grid (cascade refinement).
    Phi {
        #[arg(long)]
        coeffs: PathBuf,
        /// Refinement levels: outputs on a grid of spacing 2^-levels.
        #[arg(long, default_value_t = 8)]
        levels: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// |phihat| via the truncated infinite product of m0 factors.
    Phihat {
        #[arg(long)]
        coeffs: PathBuf,
        /// Number of frequency samples on [0, 10 pi].
        #[arg(long, default_value_t = 512)]
        grid: usize,
        /// Truncation depth of the infinite product.
        #[arg(long, default_value_t = 30)]
        levels: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Deserialize)]
struct DesignFile {
    #[serde(rename = "N")]
    n: usize,
    nz: usize,
    #[serde(default)]
    roots: Vec<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Exponent {
            n,
            nz,
            roots,
            coeffs,
            design,
        } => cmd_exponent(n, nz, roots, coeffs, design),
        Command::Optimize {
            n,
            nz,
            starts,
            seed_roots,
        } => cmd_optimize(n, nz, starts, seed_roots),
        Command::Factor {
            n,
            nz,
            roots,
            design,
            precision,
            out,
        } => cmd_factor(n, nz, roots, design, precision, out),
        Command::Table { n, nz, starts, out } => cmd_table(n, nz, starts, out),
        Command::Scan {
            n,
            nz,
            grid,
            out,
            format,
        } => cmd_scan(n, nz, grid, out, format),
        Command::Phi {
            coeffs,
            levels,
            out,
            format,
        } => cmd_phi(&coeffs, levels, out, format),
        Command::Phihat {
            coeffs,
            grid,
            levels,
            out,
            format,
        } => cmd_phihat(&coeffs, grid, levels, out, format),
    }
}

/// Builds the squared magnitude from whichever input route was given:
/// coefficient file, design JSON, or explicit --n/--nz/--roots.
fn load_sq(
    n: Option<usize>,
    nz: usize,
    roots: Vec<f64>,
    coeffs: Option<&Path>,
    design: Option<&Path>,
) -> Result<SqMagnitude, String> {
    if let Some(path) = coeffs {
        let c = read_coeff_file(path)?;
        return SqMagnitude::from_filter_coeffs(&c).map_err(|e| e.to_string());
    }
    let (n, nz, roots) = if let Some(path) = design {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let d: DesignFile = serde_json::from_str(&text)
            .map_err(|e| format!("cannot parse {}: {e}", path.display()))?;
        (d.n, d.nz, d.roots)
    } else {
        let n = n.ok_or("one of --n, --coeffs, --design is required")?;
        (n, nz, roots)
    };
    let params = DesignParams::new(n, nz, roots).map_err(|e| e.to_string())?;
    solve_by_roots(&params).map_err(|e| e.to_string())
}

fn read_coeff_file(path: &Path) -> Result<Vec<f64>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut c = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        c.push(
            line.parse::<f64>()
                .map_err(|e| format!("{}:{}: {e}", path.display(), i + 1))?,
        );
    }
    if c.is_empty() {
        return Err(format!("{}: no coefficients", path.display()));
    }
    Ok(c)
}

fn cmd_exponent(
    n: Option<usize>,
    nz: usize,
    roots: Vec<f64>,
    coeffs: Option<PathBuf>,
    design: Option<PathBuf>,
) -> Result<ExitCode, String> {
    let sq = load_sq(n, nz, roots, coeffs.as_deref(), design.as_deref())?;
    let report = regularity(&sq).map_err(|e| e.to_string())?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?
    );
    if !report.feasible {
        return Ok(ExitCode::from(2));
    }
    if !report.cohen {
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_optimize(
    n: usize,
    nz: usize,
    starts: Option<usize>,
    seed_roots: Vec<f64>,
) -> Result<ExitCode, String> {
    let spec = if seed_roots.is_empty() {
        StartSpec::Count(starts.unwrap_or_else(|| optimize::default_start_count(nz)))
    } else {
        StartSpec::Seeds(vec![seed_roots])
    };
    let result = wavereg_core::optimize_roots(n, nz, spec, None).map_err(|e| e.to_string())?;
    println!(
        "{}",
        serde_json::to_string_pretty(&result).map_err(|e| e.to_string())?
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_factor(
    n: Option<usize>,
    nz: usize,
    roots: Vec<f64>,
    design: Option<PathBuf>,
    precision: Option<u32>,
    out: Option<PathBuf>,
) -> Result<ExitCode, String> {
    let sq = load_sq(n, nz, roots, None, design.as_deref())?;
    let result = match precision {
        Some(digits) => spectral_factorize(&sq, digits),
        None => spectral_factorize_ladder(&sq),
    };
    let filter = match result {
        Ok(f) => f,
        Err(Error::Infeasible { min }) => {
            eprintln!("error: design is infeasible (min |m0|^2 = {min:.3e})");
            return Ok(ExitCode::from(2));
        }
        Err(e) => return Err(e.to_string()),
    };
    let body = coeff_lines(&filter.c_f64());
    emit(out.as_deref(), &body)?;
    Ok(ExitCode::SUCCESS)
}

/// One coefficient per line, scientific notation, 16 significant digits.
fn coeff_lines(c: &[f64]) -> String {
    let mut s = String::new();
    for &v in c {
        s.push_str(&format!("{v:.15e}\n"));
    }
    s
}

fn cmd_table(
    n_max: usize,
    nz: Option<usize>,
    starts: Option<usize>,
    out: Option<PathBuf>,
) -> Result<ExitCode, String> {
    if n_max < 1 {
        return Err("--n must be at least 1".into());
    }
    let columns: Vec<usize> = match nz {
        Some(z) if z <= 4 => vec![z],
        Some(z) => return Err(format!("--nz {z} out of range 0..=4")),
        None => (0..=4).collect(),
    };
    let mut csv = String::from("2N");
    for z in &columns {
        csv.push_str(&format!(",nz{z}"));
    }
    csv.push('\n');
    let mut sidecar: Vec<serde_json::Value> = Vec::new();

    for n in 1..=n_max {
        csv.push_str(&format!("{}", 2 * n));
        for &z in &columns {
            // A cell needs M = N - 2 nz >= 1 vanishing moments.
            if n < 2 * z + 1 {
                csv.push(',');
                continue;
            }
            let cell = table_cell(n, z, starts);
            match cell {
                Ok((s0, roots)) => {
                    csv.push_str(&format!(",{s0:.2}"));
                    sidecar.push(serde_json::json!({
                        "2N": 2 * n, "nz": z, "s0": s0, "roots": roots,
                    }));
                }
                Err(e) => {
                    eprintln!("warning: cell 2N={} nz={z}: {e}", 2 * n);
                    csv.push_str(",NA");
                }
            }
        }
        csv.push('\n');
    }

    match out {
        Some(path) => {
            write_atomic(&path, csv.as_bytes())?;
            let sidecar_path = path.with_extension("json");
            let json =
                serde_json::to_string_pretty(&sidecar).map_err(|e| e.to_string())?;
            write_atomic(&sidecar_path, json.as_bytes())?;
            println!("{}  sha256:{}", path.display(), sha256_hex(csv.as_bytes()));
            println!(
                "{}  sha256:{}",
                sidecar_path.display(),
                sha256_hex(json.as_bytes())
            );
        }
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn table_cell(n: usize, nz: usize, starts: Option<usize>) -> Result<(f64, Vec<f64>), String> {
    if nz == 0 {
        let params = DesignParams::new(n, 0, vec![]).map_err(|e| e.to_string())?;
        let sq = solve_by_roots(&params).map_err(|e| e.to_string())?;
        let rep = regularity(&sq).map_err(|e| e.to_string())?;
        return Ok((rep.s0, vec![]));
    }
    let count = starts.unwrap_or_else(|| optimize::default_start_count(nz));
    let res = wavereg_core::optimize_roots(n, nz, StartSpec::Count(count), None)
        .map_err(|e| e.to_string())?;
    Ok((res.best_s0, res.best_roots))
}

fn cmd_scan(
    n: usize,
    nz: usize,
    grid: usize,
    out: Option<PathBuf>,
    format: Format,
) -> Result<ExitCode, String> {
    if nz < 1 {
        return Err("scan needs --nz >= 1".into());
    }
    if grid < 2 {
        return Err("--grid must be at least 2".into());
    }
    let lo = PI / 2.0 + 0.02;
    let hi = PI - 0.02;
    let axis: Vec<f64> = (0..grid)
        .map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64)
        .collect();
    let grids = vec![axis; nz];
    let rows = wavereg_core::scan(n, nz, &grids);

    let body = match format {
        Format::Csv => {
            let mut s = String::new();
            for k in 1..=nz {
                s.push_str(&format!("z{k},"));
            }
            s.push_str("s0,feasible\n");
            for row in &rows {
                for z in &row.roots {
                    s.push_str(&format!("{z:.12},"));
                }
                s.push_str(&format!("{:.12},{}\n", row.s0, row.feasible));
            }
            s
        }
        Format::Json => {
            serde_json::to_string_pretty(&rows).map_err(|e| e.to_string())? + "\n"
        }
    };
    emit(out.as_deref(), &body)?;
    Ok(ExitCode::SUCCESS)
}

fn load_filter(coeffs: &Path) -> Result<ScalingFilter, String> {
    let c = read_coeff_file(coeffs)?;
    let sq = SqMagnitude::from_filter_coeffs(&c).map_err(|e| e.to_string())?;
    // Re-factorize to carry the coefficients in extended precision with a
    // validated orthonormality residual.
    spectral_factorize(&sq, 30).map_err(|e| e.to_string())
}

fn cmd_phi(
    coeffs: &Path,
    levels: u32,
    out: Option<PathBuf>,
    format: Format,
) -> Result<ExitCode, String> {
    let filter = load_filter(coeffs)?;
    let samples = phi_samples(&filter, levels).map_err(|e| e.to_string())?;
    emit(out.as_deref(), &xy_body(&samples, "x,phi", format)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_phihat(
    coeffs: &Path,
    grid: usize,
    levels: u32,
    out: Option<PathBuf>,
    format: Format,
) -> Result<ExitCode, String> {
    if grid < 2 {
        return Err("--grid must be at least 2".into());
    }
    let filter = load_filter(coeffs)?;
    let xi: Vec<f64> = (0..grid)
        .map(|i| 10.0 * PI * i as f64 / (grid - 1) as f64)
        .collect();
    let samples = phihat_product(&filter, &xi, levels);
    emit(out.as_deref(), &xy_body(&samples, "xi,abs_phihat", format)?)?;
    Ok(ExitCode::SUCCESS)
}

fn xy_body(samples: &[(f64, f64)], header: &str, format: Format) -> Result<String, String> {
    match format {
        Format::Csv => {
            let mut s = String::from(header);
            s.push('\n');
            for (x, y) in samples {
                s.push_str(&format!("{x:.12},{y:.12}\n"));
            }
            Ok(s)
        }
        Format::Json => {
            let keys: Vec<&str> = header.split(',').collect();
            let rows: Vec<serde_json::Value> = samples
                .iter()
                .map(|(x, y)| serde_json::json!({ keys[0]: x, keys[1]: y }))
                .collect();
            Ok(serde_json::to_string_pretty(&rows).map_err(|e| e.to_string())? + "\n")
        }
    }
}

/// Writes to the output path atomically (and prints the path with a
/// checksum), or to stdout when no path was given.
fn emit(out: Option<&Path>, body: &str) -> Result<(), String> {
    match out {
        Some(path) => {
            write_atomic(path, body.as_bytes())?;
            println!("{}  sha256:{}", path.display(), sha256_hex(body.as_bytes()));
            Ok(())
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), String> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .map_err(|e| format!("cannot create temp file near {}: {e}", path.display()))?;
    tmp.write_all(bytes)
        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    tmp.persist(path)
        .map_err(|e| format!("cannot move into place {}: {e}", path.display()))?;
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
