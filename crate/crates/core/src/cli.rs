//! Command-line surface. Exit codes: 0 criterion applies, 1 usage or
//! computation error, 3 a condition definitely fails, 4 inconclusive.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::certificates::{self, CertifyConfig, FailedCondition, PrimeCertificate};
use crate::iwasawa::{self, EscalationPolicy};
use crate::scan::{self, ReportFormat, ScanConfig};
use crate::vandiver;

pub const EXIT_APPLIES: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAILS: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "pseudonull", version, about = "Pseudo-null conjecture certificates along the cyclotomic tower")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify one prime
    Check {
        p: u64,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        config: CliConfig,
    },
    /// Certify every prime in [from, to)
    Scan {
        #[arg(long)]
        from: u64,
        #[arg(long)]
        to: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
        /// sidecar checkpoint, default <out>.ckpt
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// print the summary as JSON
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        config: CliConfig,
    },
    /// Dump the branch power series: index, value, valuation
    Series {
        p: u64,
        k: u64,
        #[arg(long, default_value_t = 2)]
        prec: u32,
        #[arg(long, default_value_t = 1)]
        level: u32,
        /// default min(p^level, 32)
        #[arg(long)]
        trunc: Option<usize>,
    },
    /// Generator and relation counts g, s with r_2
    Gs {
        p: u64,
        n: u32,
        #[arg(long, default_value_t = 0)]
        alpha: u64,
        /// also print the formula with r_2 = (p^n + p^(n-1))/2
        #[arg(long)]
        paper_verbatim: bool,
    },
    /// Render a certificate file
    Report {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Markdown,
}

#[derive(Debug, Clone, Args)]
pub struct CliConfig {
    /// starting p-adic precision N
    #[arg(long)]
    pub prec: Option<u32>,
    /// starting Stickelberger level n
    #[arg(long)]
    pub level: Option<u32>,
    /// series truncation M
    #[arg(long)]
    pub trunc: Option<usize>,
    #[arg(long, default_value_t = vandiver::DEFAULT_MAX_WITNESSES)]
    pub max_witnesses: usize,
    #[arg(long, default_value_t = certificates::DEFAULT_N_MAX)]
    pub n_max: u32,
}

impl CliConfig {
    pub fn to_certify(&self) -> Result<CertifyConfig> {
        let mut policy = EscalationPolicy::default();
        if let Some(prec) = self.prec {
            if prec == 0 {
                bail!("--prec must be at least 1");
            }
            policy.prec = prec;
        }
        if let Some(level) = self.level {
            if level == 0 {
                bail!("--level must be at least 1");
            }
            policy.level = level;
        }
        if let Some(trunc) = self.trunc {
            if trunc < 2 {
                bail!("--trunc must be at least 2");
            }
            policy.max_trunc = trunc;
        }
        if self.max_witnesses == 0 {
            bail!("--max-witnesses must be at least 1");
        }
        if self.n_max == 0 {
            bail!("--n-max must be at least 1");
        }
        Ok(CertifyConfig {
            policy,
            max_witnesses: self.max_witnesses,
            n_max: self.n_max,
        })
    }
}

pub fn exit_code(cert: &PrimeCertificate) -> i32 {
    let failed = &cert.theorem1.failed_conditions;
    if cert.theorem1.applies {
        EXIT_APPLIES
    } else if failed.iter().any(|f| *f != FailedCondition::Inconclusive) {
        EXIT_FAILS
    } else {
        EXIT_INCONCLUSIVE
    }
}

/// Parses `args` and runs the command, writing data to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_ERROR;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_APPLIES;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Check { p, json, config } => {
            let cfg = config.to_certify()?;
            let cert = certificates::certify(p, &cfg)?;
            if json {
                writeln!(out, "{}", serde_json::to_string(&cert)?)?;
            } else {
                write!(out, "{}", render_table(&cert))?;
            }
            Ok(exit_code(&cert))
        }
        Command::Scan {
            from,
            to,
            jobs,
            out: path,
            checkpoint,
            json,
            config,
        } => {
            let mut cfg = ScanConfig::new(from, to, path);
            cfg.jobs = jobs;
            cfg.checkpoint = checkpoint;
            cfg.certify = config.to_certify()?;
            let summary = scan::scan(&cfg)?;
            if json {
                writeln!(out, "{}", serde_json::to_string(&summary)?)?;
            } else {
                write!(out, "{}", scan::summary_block(&summary))?;
            }
            Ok(EXIT_APPLIES)
        }
        Command::Series { p, k, prec, level, trunc } => {
            let size = p
                .checked_pow(level)
                .with_context(|| format!("p^{level} overflows"))?;
            let trunc = trunc.unwrap_or(size.min(32) as usize);
            let series = iwasawa::build_series(p, k, level, prec, trunc)?;
            writeln!(
                out,
                "# p={p} k={k} level={level} prec={prec} trunc={trunc} effective_precision={}",
                series.effective_precision()
            )?;
            for (j, c) in series.coefficients().iter().enumerate() {
                let v = c.valuation().map_or("inf".to_string(), |v| v.to_string());
                writeln!(out, "{j} {} {v}", c.value())?;
            }
            Ok(EXIT_APPLIES)
        }
        Command::Gs {
            p,
            n,
            alpha,
            paper_verbatim,
        } => {
            let (g, s, r2) = certificates::lemma2_gs(p, n, alpha)?;
            writeln!(out, "g={g} s={s} r2={r2}")?;
            if paper_verbatim {
                let (g, s, r2) = certificates::lemma2_gs_printed(p, n, alpha)?;
                writeln!(out, "printed formula: g={g} s={s} r2={r2}")?;
            } else {
                writeln!(
                    out,
                    "note: r2 = (p^n - p^(n-1))/2, half the degree of Q(zeta_p^n); the printed (p^n + p^(n-1))/2 is shown with --paper-verbatim"
                )?;
            }
            Ok(EXIT_APPLIES)
        }
        Command::Report { input, format } => {
            let format = match format {
                Format::Csv => ReportFormat::Csv,
                Format::Markdown => ReportFormat::Markdown,
            };
            write!(out, "{}", scan::report(&input, format)?)?;
            Ok(EXIT_APPLIES)
        }
    }
}

/// Fixed-width rendering of a certificate.
pub fn render_table(cert: &PrimeCertificate) -> String {
    let mut s = String::new();
    let verdict = if cert.theorem1.applies { "applies" } else { "does not apply" };
    s.push_str(&format!("p = {}\n", cert.p));
    s.push_str(&format!("{:<22}{}\n", "regular", cert.is_regular));
    s.push_str(&format!("{:<22}{}\n", "index of irregularity", cert.index_of_irregularity));
    s.push_str(&format!("{:<22}{}\n", "lambda_p (minus part)", cert.lambda_p));
    s.push_str(&format!("{:<22}{} ({})\n", "criterion", verdict, cert.theorem1.reason));
    if !cert.pairs.is_empty() {
        s.push_str(&format!(
            "\n{:>6} {:>6} {:>4} {:>4} {:>4} {:>5} {:>8} {:<13} {}\n",
            "k", "j", "mu", "lam", "a", "m", "c mod p", "vandiver", "witnesses"
        ));
        for pair in &pair_rows(cert) {
            s.push_str(pair);
        }
    }
    s.push_str(&format!("\n{:>4} {:>22} {:>6} {:>22}\n", "n", "g", "s", "r_2"));
    for row in &cert.lemma2_table {
        s.push_str(&format!("{:>4} {:>22} {:>6} {:>22}\n", row.n, row.g, row.s, row.r_2));
    }
    if cert.alpha_conditional {
        s.push_str("alpha is conditional on an unverified Vandiver hypothesis\n");
    }
    if let Some(note) = &cert.theorem2_note {
        s.push_str(&format!("\n{note}\n"));
    }
    s
}

fn pair_rows(cert: &PrimeCertificate) -> Vec<String> {
    cert.pairs
        .iter()
        .map(|pair| {
            let status = format!("{:?}", pair.vandiver.status).to_uppercase();
            let qs = pair
                .vandiver
                .witnesses
                .iter()
                .map(|w| w.q.to_string())
                .collect::<Vec<_>>()
                .join(",");
            match &pair.invariants {
                Some(inv) => format!(
                    "{:>6} {:>6} {:>4} {:>4} {:>4} {:>5} {:>8} {:<13} {}\n",
                    pair.k,
                    pair.j,
                    inv.mu,
                    inv.lambda,
                    inv.a,
                    if inv.m_is_lower_bound { format!(">={}", inv.m) } else { inv.m.to_string() },
                    inv.c_mod_p.map_or("-".into(), |c| c.to_string()),
                    status,
                    qs
                ),
                None => format!(
                    "{:>6} {:>6} {:>4} {:>4} {:>4} {:>5} {:>8} {:<13} {}\n",
                    pair.k, pair.j, "?", "?", "?", "?", "?", status, qs
                ),
            }
        })
        .collect()
}
