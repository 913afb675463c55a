use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use hsum::boolean_space::{BinMatrix, BinVec, FieldBasis, FieldSpec};
use hsum::hidden_sum::{
    find_hidden_sums, format_group_spec, parse_group_spec, toy_generators, toy_sum,
    verify_generators, CoordinateMap,
};
use hsum::reproduce::{self, Options};
use hsum::toy_cipher::{
    builtin_toy_spec, toy_basis, toy_brick, CipherConfig, CipherSpec, KeySchedule, Oracle,
    PermutationSchedule, RotateSchedule, DEFAULT_ROUNDS,
};
use hsum::trapdoor::{
    reconstruct_cp, reconstruct_cpcc, verify_global_deduction, AttackReport, SpotChecks,
};
use hsum::vbf::{analyze, FunctionSpec, Vbf};

#[derive(Parser)]
#[command(
    name = "hsum",
    version,
    about = "Vectorial Boolean function analysis and hidden-sum trapdoor toolkit"
)]
struct Cli {
    /// Report format
    #[arg(long, global = true, env = "HSUM_FORMAT", value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Shorthand for --format json
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Differential and coset properties of an S-box
    Analyze(AnalyzeArgs),
    /// Check that a set of affine generators induces a hidden sum
    HiddenVerify(HiddenVerifyArgs),
    /// Search for product hidden sums making a cipher's rounds affine
    HiddenSearch(HiddenSearchArgs),
    /// Encrypt one block
    Encrypt(CryptArgs),
    /// Decrypt one block
    Decrypt(CryptArgs),
    /// Reconstruct the encryption function from chosen queries
    Attack(AttackArgs),
    /// Run every acceptance check
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// S-box text file or JSON function spec
    file: Option<PathBuf>,
    /// Analyze a builtin function instead of a file
    #[arg(long, value_enum, conflicts_with_all = ["file", "power"])]
    builtin: Option<Builtin>,
    /// Analyze x^D over GF(2^m)
    #[arg(long, value_name = "D", requires = "m", conflicts_with = "file")]
    power: Option<u64>,
    #[arg(long)]
    m: Option<usize>,
    /// Field modulus as a binary string, highest degree first
    #[arg(long)]
    modulus: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    /// The toy cipher S-box
    Toy,
}

#[derive(Args)]
struct HiddenVerifyArgs {
    /// Group spec file; defaults to the toy generators
    file: Option<PathBuf>,
}

#[derive(Args)]
struct CipherArgs {
    /// Cipher config (JSON); defaults to the builtin toy cipher
    #[arg(long)]
    cipher: Option<PathBuf>,
    /// Override the round count
    #[arg(long)]
    rounds: Option<usize>,
    /// Key schedule for the builtin cipher
    #[arg(long, value_enum, default_value_t = Schedule::Rotate)]
    schedule: Schedule,
    /// Seed for randomized schedules and keys
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Schedule {
    Rotate,
    /// Seeded random permutation of the key space per round
    Custom,
}

#[derive(Args)]
struct HiddenSearchArgs {
    #[command(flatten)]
    cipher: CipherArgs,
    /// Replace every brick with x^D over the brick field
    #[arg(long, value_name = "D")]
    brick_power: Option<u64>,
}

#[derive(Args)]
struct CryptArgs {
    #[command(flatten)]
    cipher: CipherArgs,
    /// Key in hex
    #[arg(long)]
    key: String,
    /// Plaintext block in hex (encrypt)
    #[arg(long)]
    pt: Option<String>,
    /// Ciphertext block in hex (decrypt)
    #[arg(long)]
    ct: Option<String>,
}

#[derive(Args)]
struct AttackArgs {
    #[command(flatten)]
    cipher: CipherArgs,
    #[arg(long, value_enum, default_value_t = Mode::Cp)]
    mode: Mode,
    /// Key in hex, or "random"
    #[arg(long, default_value = "random")]
    key: String,
    /// Spot checks after the chosen-plaintext phase: a count or "all"
    #[arg(long, default_value = "3")]
    spot_checks: String,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Cp,
    Cpcc,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Round counts for the cipher checks
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 20, 100])]
    rounds: Vec<usize>,
    /// Replace the toy mixing layer with a matrix file
    #[arg(long)]
    mixing: Option<PathBuf>,
    /// Run only these criteria
    #[arg(long, value_delimiter = ',')]
    only: Vec<usize>,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

/// A user-facing input problem (exit code 2).
#[derive(Debug)]
struct InputError(anyhow::Error);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for InputError {}

fn input<T, E: Into<anyhow::Error>>(r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| InputError(e.into()).into())
}

fn read(path: &Path) -> Result<String> {
    input(std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())))
}

struct Out {
    json: bool,
}

impl Out {
    fn emit<T: Serialize + std::fmt::Display>(&self, value: &T) -> Result<()> {
        let text = if self.json {
            serde_json::to_string_pretty(value)?
        } else {
            value.to_string()
        };
        let mut stdout = std::io::stdout().lock();
        match writeln!(stdout, "{text}") {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => Ok(r?),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = Out {
        json: cli.json || cli.format == Format::Json,
    };
    match run(cli.command, &out) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InputError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(command: Command, out: &Out) -> Result<bool> {
    match command {
        Command::Analyze(a) => cmd_analyze(a, out),
        Command::HiddenVerify(a) => cmd_hidden_verify(a, out),
        Command::HiddenSearch(a) => cmd_hidden_search(a, out),
        Command::Encrypt(a) => cmd_crypt(a, true, out),
        Command::Decrypt(a) => cmd_crypt(a, false, out),
        Command::Attack(a) => cmd_attack(a, out),
        Command::Reproduce(a) => cmd_reproduce(a, out),
    }
}

fn cmd_analyze(a: AnalyzeArgs, out: &Out) -> Result<bool> {
    let f = if let Some(Builtin::Toy) = a.builtin {
        toy_brick(&toy_basis())
    } else if let Some(d) = a.power {
        let m = a.m.expect("required by clap");
        let fs = match &a.modulus {
            Some(s) => input(FieldSpec::from_binary_str(s))?,
            None => input(FieldSpec::standard(m))?,
        };
        if fs.degree() != m {
            bail!(InputError(anyhow::anyhow!(
                "modulus has degree {}, expected {m}",
                fs.degree()
            )));
        }
        input(Vbf::from_power(d, &fs, &FieldBasis::ascending(m)))?
    } else if let Some(path) = &a.file {
        let text = read(path)?;
        let parsed = if text.trim_start().starts_with('{') {
            FunctionSpec::from_json(&text).and_then(|s| s.build())
        } else {
            Vbf::parse_sbox_text(&text)
        };
        input(parsed.with_context(|| path.display().to_string()))?
    } else {
        bail!(InputError(anyhow::anyhow!(
            "give a file, --builtin or --power"
        )));
    };
    out.emit(&analyze(&f))?;
    Ok(true)
}

fn cmd_hidden_verify(a: HiddenVerifyArgs, out: &Out) -> Result<bool> {
    let gens = match &a.file {
        Some(p) => input(parse_group_spec(&read(p)?).with_context(|| p.display().to_string()))?,
        None => toy_generators(),
    };
    let report = verify_generators(&gens);
    out.emit(&report)?;
    Ok(report.passed())
}

fn load_cipher(a: &CipherArgs) -> Result<CipherSpec> {
    let spec = match &a.cipher {
        Some(p) => input(CipherConfig::load(p))?,
        None => {
            let spec = builtin_toy_spec();
            let rounds = a.rounds.unwrap_or(DEFAULT_ROUNDS);
            let schedule: Arc<dyn KeySchedule> = match a.schedule {
                Schedule::Rotate => Arc::new(RotateSchedule::new(spec.width())),
                Schedule::Custom => {
                    Arc::new(PermutationSchedule::new(spec.width(), rounds, a.seed))
                }
            };
            input(spec.with_schedule(schedule))?
        }
    };
    match a.rounds {
        Some(r) if r != spec.rounds() => input(spec.with_rounds(r)),
        _ => Ok(spec),
    }
}

fn parse_block(s: &str, width: usize, what: &str) -> Result<BinVec> {
    input(BinVec::from_hex(s, width).with_context(|| format!("invalid {what} {s:?}")))
}

#[derive(Serialize)]
struct BlockOutput {
    input: String,
    output: String,
}

impl std::fmt::Display for BlockOutput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.output)
    }
}

fn cmd_crypt(a: CryptArgs, forward: bool, out: &Out) -> Result<bool> {
    let spec = load_cipher(&a.cipher)?;
    let d = spec.width();
    let key = parse_block(&a.key, d, "key")?;
    let text = if forward {
        a.pt.as_deref()
    } else {
        a.ct.as_deref()
    };
    let Some(text) = text else {
        bail!(InputError(anyhow::anyhow!(
            "missing --{}",
            if forward { "pt" } else { "ct" }
        )));
    };
    let x = parse_block(text, d, "block")?;
    let y = if forward {
        spec.encrypt_bits(key.bits(), x.bits())
    } else {
        spec.decrypt_bits(key.bits(), x.bits())
    };
    out.emit(&BlockOutput {
        input: x.to_hex(),
        output: BinVec::from_bits(y, d).to_hex(),
    })?;
    Ok(true)
}

#[derive(Serialize)]
struct SearchOutput {
    count: usize,
    sums: Vec<String>,
    contains_toy_sum: bool,
}

impl std::fmt::Display for SearchOutput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{} hidden sum(s) found; toy sum among them: {}",
            self.count, self.contains_toy_sum
        )?;
        for (i, s) in self.sums.iter().enumerate() {
            write!(f, "# sum {i}\n{s}")?;
        }
        Ok(())
    }
}

fn cmd_hidden_search(a: HiddenSearchArgs, out: &Out) -> Result<bool> {
    let mut spec = load_cipher(&a.cipher)?;
    if let Some(d) = a.brick_power {
        let m = spec.brick_width();
        let fs = input(FieldSpec::standard(m))?;
        let basis = if m == 3 {
            toy_basis()
        } else {
            FieldBasis::ascending(m)
        };
        let brick = input(Vbf::from_power(d, &fs, &basis))?;
        spec = input(spec.with_bricks(vec![brick; spec.brick_count()]))?;
    }
    let widths = vec![spec.brick_width(); spec.brick_count()];
    let found = input(find_hidden_sums(&[spec.lambda_gamma_table()], &widths))?;
    let toy = (spec.width() == 6).then(toy_sum);
    let report = SearchOutput {
        count: found.len(),
        contains_toy_sum: toy.is_some_and(|t| found.contains(&t)),
        sums: found
            .iter()
            .map(|hs| format_group_spec(hs.group().generators()))
            .collect(),
    };
    out.emit(&report)?;
    Ok(true)
}

fn cmd_attack(a: AttackArgs, out: &Out) -> Result<bool> {
    let spec = load_cipher(&a.cipher)?;
    let d = spec.width();
    if d != 6 {
        bail!(InputError(anyhow::anyhow!(
            "the attack needs the toy hidden sum; block width is {d}"
        )));
    }
    let key = if a.key == "random" {
        ChaCha8Rng::seed_from_u64(a.cipher.seed).gen_range(0..1u64 << d)
    } else {
        parse_block(&a.key, d, "key")?.bits()
    };
    let spot = match a.spot_checks.as_str() {
        "all" => SpotChecks::Exhaustive,
        "0" => SpotChecks::None,
        n => SpotChecks::Random {
            count: input(
                n.parse::<usize>()
                    .context("--spot-checks expects a count or \"all\""),
            )?,
            seed: a.cipher.seed,
        },
    };
    let coords = CoordinateMap::standard(toy_sum()).expect("standard basis");
    let mut enc = Oracle::encrypt(&spec, key);
    let attempt = match a.mode {
        Mode::Cp => reconstruct_cp(&mut enc, &coords, spot),
        Mode::Cpcc => {
            let mut dec = Oracle::decrypt(&spec, key);
            reconstruct_cpcc(&mut enc, &mut dec, &coords)
        }
    };
    let (repr, transcript) = match attempt {
        Ok(r) => r,
        Err(e) => {
            eprintln!("attack failed: {e}");
            return Ok(false);
        }
    };
    let mut verifier = Oracle::encrypt(&spec, key);
    let check = verify_global_deduction(&repr, &mut verifier);
    let report = AttackReport::new(&repr, &transcript, &check);
    out.emit(&report)?;
    Ok(report.passed)
}

#[derive(Serialize)]
struct ReproduceOutput {
    results: Vec<reproduce::CheckResult>,
    passed: bool,
}

impl std::fmt::Display for ReproduceOutput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in &self.results {
            writeln!(f, "{r}")?;
        }
        write!(
            f,
            "{}",
            if self.passed {
                "all checks passed"
            } else {
                "some checks FAILED"
            }
        )
    }
}

fn cmd_reproduce(a: ReproduceArgs, out: &Out) -> Result<bool> {
    let mixing = match &a.mixing {
        Some(p) => Some(input(
            BinMatrix::parse_text(&read(p)?).with_context(|| p.display().to_string()),
        )?),
        None => None,
    };
    if let Some(bad) = a.only.iter().find(|&&i| i == 0 || i > reproduce::CRITERIA) {
        bail!(InputError(anyhow::anyhow!("no criterion {bad}")));
    }
    let opts = Options {
        rounds: a.rounds,
        mixing,
        seed: a.seed,
    };
    let results = reproduce::run(&opts, &a.only);
    let passed = reproduce::all_acceptable(&results);
    out.emit(&ReproduceOutput { results, passed })?;
    Ok(passed)
}
