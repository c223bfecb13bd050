//! `cga`: verification runs and report emission.
//!
//! Exit status: 0 when every checked relation and state is exact, 1 on a
//! verification failure, 2 on a configuration error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgAction, Parser, ValueEnum};

use cga_core::realizations::{build_free_general, build_osc_l1, build_xi0, Convention, ParamValue};
use cga_core::report::{Document, Record, Section, Status};
use cga_core::scalar::{parse_rational, rat, rat_int, Rational};
use cga_core::spectrum::{
    continuous_section, ground_state_check, ladder_relations_check, spectrum_by_quanta, spectrum_table,
    SpectrumFamily,
};
use cga_core::verify::{
    calibrate_constants, structure_table_general, structure_table_l1, compare_general_l1, general_sign_report,
    jacobi_section, l1_suite, omega_rigidity, verify_dilation, verify_general_invariant, verify_similarity,
    verify_subalgebra_structure, verify_table, xi0_invariance, Picture,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Verify,
    Onshell,
    Spectrum,
    Similarity,
    Infinite,
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Onshell => "onshell",
            Command::Spectrum => "spectrum",
            Command::Similarity => "similarity",
            Command::Infinite => "infinite",
            Command::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Markdown,
}

#[derive(Debug, Parser)]
#[command(name = "cga", version, about = "Exact verification reports for differential realizations of conformal Galilei algebras")]
struct Cli {
    #[arg(value_enum, default_value_t = Command::All)]
    command: Command,
    /// free-l1, osc-l1, free-general(L), xi0(W1,W2,N) or ladder(L)
    #[arg(long)]
    family: Option<String>,
    /// `symbolic` or an exact rational `p/q`
    #[arg(long, default_value = "symbolic")]
    gamma: String,
    #[arg(long, default_value = "symbolic")]
    xi: String,
    #[arg(long, default_value = "1")]
    omega1: String,
    #[arg(long, default_value = "1")]
    omega2: String,
    /// Deformation parameter of the invariant equation (onshell only)
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    l: Option<u32>,
    /// Mode cutoff of the infinite family
    #[arg(long, default_value_t = 3)]
    n: u32,
    /// Highest level (for xi0: highest number of quanta)
    #[arg(long, default_value_t = 6)]
    emax: u32,
    /// Zero-mode cutoff
    #[arg(long, default_value_t = 3)]
    k: u32,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Report path; defaults to `<dir>/<command>.<ext>` under the report
    /// directory, else standard output
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, env = "CGA_REPORT_DIR")]
    report_dir: Option<PathBuf>,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    calibrate: bool,
}

/// Bad user input; exit status 2.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(ConfigError(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum FamilySel {
    FreeL1,
    OscL1,
    FreeGeneral(u32),
    Xi0(Rational, Rational, u32),
    Ladder(u32),
}

fn parse_rat(flag: &str, s: &str) -> Result<Rational> {
    parse_rational(s).map_err(|e| config(format!("--{flag}: {e}")))
}

fn parse_param(flag: &str, s: &str) -> Result<ParamValue> {
    if s == "symbolic" {
        return Ok(ParamValue::Symbolic);
    }
    let r = parse_rat(flag, s)?;
    if r == rat_int(0) {
        bail!(ConfigError(format!("--{flag} must be nonzero")));
    }
    Ok(ParamValue::Value(r))
}

fn parse_ell(s: &str) -> Result<u32> {
    let l: u32 = s.trim().parse().map_err(|_| config(format!("invalid l `{s}`")))?;
    if l == 0 {
        bail!(ConfigError("l must be at least 1".into()));
    }
    Ok(l)
}

fn parse_family(s: &str) -> Result<FamilySel> {
    let s = s.trim();
    match s {
        "free-l1" => return Ok(FamilySel::FreeL1),
        "osc-l1" => return Ok(FamilySel::OscL1),
        _ => {}
    }
    let (head, args) = s
        .strip_suffix(')')
        .and_then(|r| r.split_once('('))
        .ok_or_else(|| config(format!("unknown family `{s}`")))?;
    let args: Vec<&str> = args.split(',').map(str::trim).collect();
    match (head, args.as_slice()) {
        ("free-general", [l]) => Ok(FamilySel::FreeGeneral(parse_ell(l)?)),
        ("ladder", [l]) => Ok(FamilySel::Ladder(parse_ell(l)?)),
        ("xi0", [w1, w2, n]) => {
            let w1 = parse_rat("family", w1)?;
            let w2 = parse_rat("family", w2)?;
            if w1 == rat_int(0) || w2 == rat_int(0) {
                bail!(ConfigError("frequencies must be nonzero".into()));
            }
            let n = n.parse().map_err(|_| config(format!("invalid cutoff `{n}`")))?;
            Ok(FamilySel::Xi0(w1, w2, n))
        }
        _ => Err(config(format!("unknown family `{s}`"))),
    }
}

#[derive(Clone)]
struct Run {
    gamma: ParamValue,
    xi: ParamValue,
    omega1: Rational,
    omega2: Rational,
    omega: Option<Rational>,
    l: Option<u32>,
    n: u32,
    emax: u32,
    k: u32,
    calibrate: bool,
}

impl Run {
    fn from_cli(cli: &Cli) -> Result<Self> {
        let omega1 = parse_rat("omega1", &cli.omega1)?;
        let omega2 = parse_rat("omega2", &cli.omega2)?;
        if omega1 == rat_int(0) || omega2 == rat_int(0) {
            bail!(ConfigError("frequencies must be nonzero".into()));
        }
        if cli.l == Some(0) {
            bail!(ConfigError("l must be at least 1".into()));
        }
        Ok(Self {
            gamma: parse_param("gamma", &cli.gamma)?,
            xi: parse_param("xi", &cli.xi)?,
            omega1,
            omega2,
            omega: cli.omega.as_deref().map(|s| parse_rat("omega", s)).transpose()?,
            l: cli.l,
            n: cli.n,
            emax: cli.emax,
            k: cli.k,
            calibrate: cli.calibrate,
        })
    }

    fn convention(&self) -> Convention {
        if self.calibrate {
            Convention::Corrected
        } else {
            Convention::Verbatim
        }
    }

    fn xi0_default(&self) -> FamilySel {
        FamilySel::Xi0(self.omega1.clone(), self.omega2.clone(), self.n)
    }

    fn verify(&self, fam: &FamilySel) -> Result<Vec<Section>> {
        let conv = self.convention();
        let mut out = Vec::new();
        match fam {
            FamilySel::FreeL1 | FamilySel::OscL1 => {
                let picture = if *fam == FamilySel::FreeL1 { Picture::Free } else { Picture::Osc };
                let built = match picture {
                    Picture::Free => cga_core::realizations::build_free_l1(&self.gamma, &self.xi)?,
                    Picture::Osc => build_osc_l1(&self.gamma, &self.xi)?,
                };
                let table = structure_table_l1(&built)?;
                let fam = if self.calibrate {
                    let (cal, s) = calibrate_constants(&built, &table)?;
                    out.push(s);
                    built.shifted(&cal.deltas)?
                } else {
                    out.push(verify_table(&built, &table)?);
                    built
                };
                out.push(jacobi_section(&fam)?);
            }
            FamilySel::FreeGeneral(l) => {
                let built = build_free_general(*l, conv)?;
                let table = structure_table_general(*l);
                if self.calibrate {
                    out.push(calibrate_constants(&built, &table)?.1);
                } else {
                    out.push(verify_table(&built, &table)?);
                }
                out.push(jacobi_section(&built)?);
                if *l == 1 {
                    out.push(compare_general_l1(conv)?);
                }
            }
            FamilySel::Xi0(w1, w2, n) => {
                let built = build_xi0(w1, w2, &self.gamma, *n, conv)?;
                out.push(verify_subalgebra_structure(&built, *n)?);
            }
            FamilySel::Ladder(l) => out.push(verify_general_invariant(*l, conv)?),
        }
        Ok(out)
    }

    fn onshell(&self, fam: &FamilySel) -> Result<Vec<Section>> {
        if let Some(omega) = &self.omega {
            let picture = match fam {
                FamilySel::FreeL1 => Picture::Free,
                FamilySel::OscL1 => Picture::Osc,
                _ => bail!(ConfigError("--omega needs family free-l1 or osc-l1".into())),
            };
            return Ok(vec![omega_rigidity(picture, omega)?]);
        }
        match fam {
            FamilySel::FreeL1 => Ok(l1_suite(Picture::Free, &self.gamma, &self.xi, self.calibrate)?.split_off(1)),
            FamilySel::OscL1 => Ok(l1_suite(Picture::Osc, &self.gamma, &self.xi, self.calibrate)?.split_off(1)),
            FamilySel::Xi0(w1, w2, n) => Ok(xi0_invariance(&build_xi0(w1, w2, &self.gamma, *n, self.convention())?)?),
            _ => Err(config("onshell needs family free-l1, osc-l1 or xi0(W1,W2,N)")),
        }
    }

    fn spectrum(&self, fam: &FamilySel) -> Result<Vec<Section>> {
        let (sf, by_quanta) = match fam {
            FamilySel::OscL1 => (SpectrumFamily::osc(&self.gamma, &self.xi)?, false),
            FamilySel::Ladder(l) | FamilySel::FreeGeneral(l) => (SpectrumFamily::ladder(*l)?, false),
            FamilySel::Xi0(w1, w2, _) => (SpectrumFamily::xi0(w1, w2, &self.gamma)?, true),
            FamilySel::FreeL1 => return Err(config("the free picture has no Fock states; use osc-l1")),
        };
        let mut ground = Section::new("ground state", sf.name()).with_params(&sf.params());
        let offender = ground_state_check(&sf.annihilators()?, &sf.ground_state())?;
        let status = if offender.is_none() { Status::Exact } else { Status::Failed };
        ground.push(
            Record::new(&sf.name(), "annihilators on 1", "0", status)
                .residual(offender.map_or_else(|| "0".to_string(), |o| format!("{o} does not annihilate 1"))),
        );
        let emax = rat_int(i64::from(self.emax));
        let table = if by_quanta {
            spectrum_by_quanta(&sf, self.emax, self.k)?
        } else {
            spectrum_table(&sf, &emax, self.k)?
        };
        let mut spec = table.to_section();
        if matches!(fam, FamilySel::OscL1) {
            for e in 0..=self.emax {
                let got = table.multiplicities.get(&rat_int(i64::from(e))).copied().unwrap_or(0);
                let want = u64::from(e) + 1;
                let status = if got == want { Status::Exact } else { Status::Failed };
                spec.push(
                    Record::new(&sf.name(), format!("multiplicity({e})"), want.to_string(), status)
                        .residual(if got == want { "0".into() } else { got.to_string() }),
                );
            }
        }
        let mut out = vec![ground, ladder_relations_check(&sf)?, spec];
        if matches!(fam, FamilySel::OscL1) {
            let lambdas = [rat_int(0), rat_int(1), rat(7, 3), rat(-1, 4)];
            out.push(continuous_section(&self.gamma, &self.xi, &lambdas)?);
        }
        Ok(out)
    }

    fn similarity(&self) -> Result<Vec<Section>> {
        Ok(vec![verify_similarity()?, verify_dilation()?, compare_general_l1(self.convention())?])
    }

    fn infinite(&self, fam: &FamilySel) -> Result<Vec<Section>> {
        let FamilySel::Xi0(w1, w2, n) = fam else {
            return Err(config("infinite needs family xi0(W1,W2,N)"));
        };
        let built = build_xi0(w1, w2, &self.gamma, *n, self.convention())?;
        let mut out = vec![verify_subalgebra_structure(&built, *n)?];
        out.extend(xi0_invariance(&built)?);
        out.push(ladder_relations_check(&SpectrumFamily::Xi0(built))?);
        Ok(out)
    }

    fn all(&self) -> Result<Vec<Section>> {
        let mut out = Vec::new();
        for fam in [FamilySel::FreeL1, FamilySel::OscL1] {
            out.extend(self.verify(&fam)?);
            out.extend(self.onshell(&fam)?);
        }
        out.extend(self.similarity()?);
        for l in 1..=4 {
            out.push(verify_general_invariant(l, self.convention())?);
            // [verbatim, corrected]; keep the one matching the run
            let mut signs = general_sign_report(l)?;
            out.push(if self.calibrate { signs.pop() } else { signs.into_iter().next() }.expect("two sections"));
        }
        let spectrum = Run { emax: 6, omega: None, ..self.clone() };
        out.extend(spectrum.spectrum(&FamilySel::OscL1)?);
        for l in 2..=4 {
            out.extend(spectrum.spectrum(&FamilySel::Ladder(l))?);
        }
        for (w1, w2) in [(1, 1), (2, 3)] {
            let fam = FamilySel::Xi0(rat_int(w1), rat_int(w2), 3);
            out.extend(self.infinite(&fam)?);
        }
        Ok(out)
    }
}

fn select_family(cli: &Cli, run: &Run) -> Result<FamilySel> {
    if let Some(f) = &cli.family {
        let fam = parse_family(f)?;
        return Ok(match (fam, run.l) {
            (FamilySel::FreeGeneral(_), Some(l)) => FamilySel::FreeGeneral(l),
            (FamilySel::Ladder(_), Some(l)) => FamilySel::Ladder(l),
            (f, _) => f,
        });
    }
    Ok(match (cli.command, run.l) {
        (Command::Infinite, _) => run.xi0_default(),
        (Command::Spectrum, Some(l)) if l > 1 => FamilySel::Ladder(l),
        (Command::Verify, Some(l)) if l > 1 => FamilySel::FreeGeneral(l),
        _ => FamilySel::OscL1,
    })
}

fn execute(cli: &Cli) -> Result<Document> {
    let run = Run::from_cli(cli)?;
    let fam = select_family(cli, &run)?;
    let sections = match cli.command {
        Command::Verify => run.verify(&fam)?,
        Command::Onshell => run.onshell(&fam)?,
        Command::Spectrum => run.spectrum(&fam)?,
        Command::Similarity => run.similarity()?,
        Command::Infinite => run.infinite(&fam)?,
        Command::All => run.all()?,
    };
    Ok(Document::new(cli.command.name(), sections))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).with_context(|| format!("temporary file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let doc = match execute(&cli) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e:#}");
            return if e.downcast_ref::<ConfigError>().is_some() { ExitCode::from(2) } else { ExitCode::from(1) };
        }
    };
    let (text, ext) = match cli.format {
        Format::Json => (doc.to_json(), "json"),
        Format::Markdown => (doc.to_markdown(), "md"),
    };
    let target = cli
        .output
        .clone()
        .or_else(|| cli.report_dir.as_ref().map(|d| d.join(format!("{}.{ext}", cli.command.name()))));
    match target {
        Some(path) => {
            if let Err(e) = write_atomic(&path, &text) {
                eprintln!("error: {e:#}");
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    let failed: usize = doc.sections.iter().map(|s| s.failures().count() + s.errors.len()).sum();
    let failed_rows: usize = doc.sections.iter().map(|s| s.spectrum.iter().filter(|r| !r.verified).count()).sum();
    let records: usize = doc.sections.iter().map(|s| s.records.len() + s.spectrum.len()).sum();
    if doc.passed {
        eprintln!("{}: passed ({records} checks)", cli.command.name());
        ExitCode::SUCCESS
    } else {
        eprintln!("{}: FAILED ({} of {records} checks)", cli.command.name(), failed + failed_rows);
        for s in &doc.sections {
            for r in s.failures().take(10) {
                eprintln!("  {} / {}: {}", s.family, s.name, r.lhs);
            }
        }
        ExitCode::from(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_names() {
        assert_eq!(parse_family("free-l1").unwrap(), FamilySel::FreeL1);
        assert_eq!(parse_family("ladder(3)").unwrap(), FamilySel::Ladder(3));
        assert_eq!(
            parse_family("xi0(2, 3, 3)").unwrap(),
            FamilySel::Xi0(rat_int(2), rat_int(3), 3)
        );
        for bad in ["free", "ladder(0)", "xi0(0,1,1)", "ladder(x)", "xi0(1,1)"] {
            let e = parse_family(bad).unwrap_err();
            assert!(e.downcast_ref::<ConfigError>().is_some(), "{bad}");
        }
    }

    #[test]
    fn params() {
        assert_eq!(parse_param("gamma", "symbolic").unwrap(), ParamValue::Symbolic);
        assert_eq!(parse_param("gamma", "-3/4").unwrap(), ParamValue::Value(rat(-3, 4)));
        assert!(parse_param("gamma", "0").is_err());
        assert!(parse_param("gamma", "0.5").is_err());
    }
}
