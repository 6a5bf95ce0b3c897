use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use yangian_core::coeffs::EpsConvention;
use yangian_core::loopalg::QVariant;
use yangian_core::morphisms::{HalfTermSign, IotaCorner, XMinusReading};
use yangian_core::runner::{verify, RunConfig, Target};
use yangian_core::vertexmodes::W2Variant;
use yangian_core::Rational;

#[derive(Parser)]
#[command(name = "yangian", about = "Exact checks of affine Yangian homomorphisms on truncated vacuum modules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one target (or `all`) and write a JSON report.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// ev, psi, psi1, psi2, phi, psi1-psi2-commute, ev-psi1-compose,
    /// phi-psi1-compose, coset, appendix, proof-identities or all
    target: Target,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    degree: usize,
    #[arg(long, default_value_t = 4)]
    points: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Explicit parameter point as hbar,eps (repeatable); overrides sampling.
    #[arg(long = "point", value_parser = parse_point)]
    explicit_points: Vec<(Rational, Rational)>,
    /// maim (eps = hbar alpha) or u8 (eps = -hbar alpha)
    #[arg(long, default_value = "maim")]
    eps_convention: EpsConvention,
    /// upper-left or lower-right; omitted scans both corners and conventions
    #[arg(long)]
    iota_corner: Option<IotaCorner>,
    /// printed or shifted
    #[arg(long, default_value = "shifted")]
    q_variant: QVariant,
    /// printed or mirrored closed form for the X- image at index 0
    #[arg(long, default_value = "printed")]
    xminus_reading: XMinusReading,
    /// literal or derivative reading of the alpha-term of W2
    #[arg(long, default_value = "literal")]
    w2_variant: W2Variant,
    /// evaluation or displayed sign of the half term in the W-algebra H_{i,1}
    #[arg(long, default_value = "evaluation")]
    half_term: HalfTermSign,
    /// Skip the recorded runs of alternative readings.
    #[arg(long)]
    no_scan: bool,
    /// Only the reduced generating pairs in the commutation check.
    #[arg(long)]
    reduced_only: bool,
    #[arg(long, default_value_t = 50)]
    appendix_samples: usize,
    #[arg(long, default_value_t = 5_000_000)]
    basis_cap: u128,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "yangian-report.json")]
    output: PathBuf,
}

fn parse_point(s: &str) -> Result<(Rational, Rational), String> {
    let (h, e) = s.split_once(',').ok_or("expected hbar,eps")?;
    let h: Rational = h.trim().parse().map_err(|e| format!("{e}"))?;
    let e: Rational = e.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((h, e))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Command::Verify(a) = cli.command;
    let cfg = RunConfig {
        target: a.target,
        n: a.n,
        m: a.m,
        degree: a.degree,
        points: a.points,
        seed: a.seed,
        explicit_points: a.explicit_points,
        eps_convention: a.eps_convention,
        iota_corner: a.iota_corner,
        q_variant: a.q_variant,
        xminus_reading: a.xminus_reading,
        w2_variant: a.w2_variant,
        half_term: a.half_term,
        scan_alternatives: !a.no_scan,
        full_grid: !a.reduced_only,
        appendix_samples: a.appendix_samples,
        basis_cap: a.basis_cap,
        threads: a.threads,
        output: Some(a.output.clone()),
    };
    let out = verify(&cfg);
    if let Some(r) = &out.report {
        for s in &r.suites {
            println!(
                "{:<48} {:?} {:>6} instances {:>5} failing {:>8} ms ({:?})",
                s.check.name,
                s.status,
                s.check.instances.len(),
                s.failure_count,
                s.check.wall_ms,
                s.role
            );
        }
        for c in &r.negative_controls {
            println!(
                "control {:<40} {:?} ({} of {} failing)",
                format!("{} [{}]", c.suite, c.mutation),
                c.status,
                c.failing_instances,
                c.total_instances
            );
        }
        for f in &r.findings {
            println!("finding {}: {} ({})", f.name, f.value, if f.ok { "ok" } else { "not ok" });
        }
        println!("report: {}", a.output.display());
    }
    if let Some(e) = &out.error {
        eprintln!("error: {e}");
    }
    println!("exit {}", out.exit_code);
    ExitCode::from(out.exit_code as u8)
}
