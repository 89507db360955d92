use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ashvss::codec::{self, schema, CodecError};
use ashvss::lattice::{bits, LweParams};
use ashvss::setsys::{build_merged_system, verify_with, GrolmuszParams, SetSystem, VerifyConfig};
use ashvss::sim::{run_simulation, CorruptionMode, SimulationConfig};
use ashvss::tokens::{combine_tokens, membership_test, AccessStructureInstance, TokenEncoder, TokenPack};
use ashvss::vss::{reconstruct_detailed, verify_shares, Dealer, Secret, ShareBundle, VssError, VssParams};
use ashvss::Streams;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Parser)]
#[command(name = "ashvss", version, about = "Access-structure-hiding verifiable secret sharing")]
struct Cli {
    /// Root seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
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
    /// Build or check restricted-intersection set-systems.
    #[command(subcommand)]
    Setsys(SetsysCmd),
    /// Generate or test access-structure tokens.
    #[command(subcommand)]
    Tokens(TokensCmd),
    /// Deal shares of a secret, one file per party.
    Deal(DealArgs),
    /// Recover the secret from a coalition's share files.
    Reconstruct {
        #[arg(long, value_delimiter = ',', required = true)]
        shares: Vec<PathBuf>,
    },
    /// Check each share against a claimed secret.
    Verify {
        #[arg(long, value_delimiter = ',', required = true)]
        shares: Vec<PathBuf>,
        #[arg(long)]
        secret: u64,
    },
    /// Run corrupted-share trials and report detection rates.
    Simulate(SimArgs),
}

#[derive(Args, Clone)]
struct SystemArgs {
    #[arg(long, default_value_t = 15)]
    m: u64,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    l: usize,
    #[arg(long, default_value_t = 3)]
    t: usize,
}

impl SystemArgs {
    fn params(&self) -> Result<GrolmuszParams, CliError> {
        GrolmuszParams::new(self.m, self.n, self.t, self.l).map_err(validation)
    }
}

#[derive(Subcommand)]
enum SetsysCmd {
    Build {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        out: PathBuf,
    },
    Verify {
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        t: usize,
        #[arg(long, default_value_t = 2)]
        l: usize,
        /// Sampled families per arity above 2.
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
}

#[derive(Subcommand)]
enum TokensCmd {
    Gen {
        #[arg(long)]
        parties: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        omega: Vec<usize>,
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 7)]
        extra_prime: u64,
        #[arg(long)]
        out: PathBuf,
    },
    Test {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        subset: Vec<usize>,
    },
}

#[derive(Args)]
struct DealArgs {
    #[arg(long)]
    secret: u64,
    /// Minimal authorized subsets, e.g. "1,2,3;2,4,5".
    #[arg(long)]
    gamma0: String,
    #[arg(long)]
    parties: usize,
    #[arg(long)]
    outdir: PathBuf,
    #[command(flatten)]
    lwe: LweArgs,
}

#[derive(Args)]
struct LweArgs {
    #[arg(long = "lwe-n", default_value_t = 4)]
    n: usize,
    /// Defaults to n(1 + bits(q)).
    #[arg(long)]
    w: Option<usize>,
    #[arg(long, default_value_t = 31)]
    p: u64,
    #[arg(long, default_value_t = 31 << 18)]
    q: u64,
    /// Defaults to q.
    #[arg(long)]
    q_prime: Option<u64>,
    #[arg(long)]
    sigma_cap: Option<i64>,
    #[arg(long, default_value_t = 1000)]
    retry_cap: u32,
}

impl LweArgs {
    fn params(&self) -> LweParams {
        let mut p = LweParams::with_modulus(self.n, self.p, self.q);
        p.w = self.w.unwrap_or(self.n * (1 + bits(self.q)));
        p.q_prime = self.q_prime.unwrap_or(self.q);
        p.sigma_cap = self.sigma_cap;
        p.retry_cap = self.retry_cap;
        p
    }
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 1)]
    malicious: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value = "encoding-replacement")]
    mode: CorruptionMode,
    #[arg(long, default_value_t = 5)]
    parties: usize,
    #[arg(long, default_value = "1,2,3")]
    gamma0: String,
    #[arg(long, default_value_t = 3)]
    secret: u64,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct TokenFile {
    instance: AccessStructureInstance,
    packs: Vec<TokenPack>,
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Protocol(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Protocol(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

impl From<VssError> for CliError {
    fn from(e: VssError) -> Self {
        if e.is_protocol_failure() {
            CliError::Protocol(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        validation(e)
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn parse_list(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| validation(format!("bad party id {x:?}: {e}"))))
        .collect()
}

fn parse_gamma(s: &str) -> Result<Vec<Vec<usize>>, CliError> {
    s.split(';').filter(|g| !g.trim().is_empty()).map(parse_list).collect()
}

struct Out {
    format: Format,
    quiet: bool,
}

impl Out {
    /// Prints the canonical document in JSON mode, `text` otherwise.
    fn emit(&self, doc: &[u8], text: impl FnOnce() -> String) {
        if self.quiet {
            return;
        }
        let mut stdout = std::io::stdout().lock();
        let _ = match self.format {
            Format::Json => writeln!(stdout, "{}", String::from_utf8_lossy(doc)),
            Format::Text => writeln!(stdout, "{}", text()),
        };
    }
}

fn load_bundles(paths: &[PathBuf]) -> Result<Vec<ShareBundle>, CliError> {
    paths.iter().map(|p| Ok(ShareBundle::from_bytes(&read(p)?)?)).collect()
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out = Out { format: cli.format, quiet: cli.quiet };
    let streams = Streams::new(cli.seed);
    match cli.command {
        Command::Setsys(SetsysCmd::Build { system, out: path }) => {
            let h = build_merged_system(&system.params()?).map_err(validation)?;
            let bytes = codec::to_bytes(schema::SET_SYSTEM, &h)?;
            write(&path, &bytes)?;
            let summary = json!({"sets": h.len(), "universe": h.universe(), "size_classes": h.size_classes()});
            out.emit(&codec::to_bytes(schema::SET_SYSTEM, &summary)?, || {
                format!(
                    "{} sets over {} points, sizes {:?} -> {}",
                    h.len(),
                    h.universe(),
                    h.size_classes(),
                    path.display()
                )
            });
        }
        Command::Setsys(SetsysCmd::Verify { file, t, l, samples }) => {
            let h: SetSystem = codec::from_bytes(schema::SET_SYSTEM, &read(&file)?)?;
            let cfg = VerifyConfig { samples, seed: cli.seed, ..VerifyConfig::default() };
            let r = verify_with(&h, t, l, &cfg);
            out.emit(&codec::to_bytes(schema::VERIFICATION, &r)?, || {
                format!(
                    "{} sets, size classes {:?}, {} pairs and {} families checked, {} violations",
                    r.sets, r.size_classes, r.pairs_checked, r.families_sampled, r.violations
                )
            });
            if !r.is_clean() {
                return Err(validation(format!("{} fails the intersection checks", file.display())));
            }
        }
        Command::Tokens(TokensCmd::Gen { parties, omega, system, extra_prime, out: path }) => {
            let params = system.params()?;
            let h = build_merged_system(&params).map_err(validation)?;
            let hp =
                build_merged_system(&params.with_extra_prime(extra_prime).map_err(validation)?).map_err(validation)?;
            let enc = TokenEncoder::new(h, &hp).map_err(validation)?;
            let (instance, packs) = enc.encode(parties, &omega, 0, &mut streams.rng("tokens")).map_err(validation)?;
            let file = TokenFile { instance, packs };
            write(&path, &codec::to_bytes(schema::TOKEN_INSTANCE, &file)?)?;
            let summary = json!({"parties": parties, "omega": file.instance.omega, "width": file.instance.width()});
            out.emit(&codec::to_bytes(schema::TOKEN_INSTANCE, &summary)?, || {
                format!("{parties} token packs of width {} -> {}", file.instance.width(), path.display())
            });
        }
        Command::Tokens(TokensCmd::Test { file, subset }) => {
            let f: TokenFile = codec::from_bytes(schema::TOKEN_INSTANCE, &read(&file)?)?;
            if let Some(&p) = subset.iter().find(|&&p| p == 0 || p > f.packs.len()) {
                return Err(validation(format!("party {p} is outside 1..={}", f.packs.len())));
            }
            let packs: Vec<&TokenPack> = f.packs.iter().filter(|t| subset.contains(&t.party)).collect();
            let member =
                membership_test(&combine_tokens(&packs).map_err(validation)?, f.instance.m, f.instance.m_prime);
            let report = json!({"subset": subset, "authorized": member});
            out.emit(&codec::to_bytes(schema::TOKEN_PACK, &report)?, || {
                format!("{subset:?}: {}", if member { "authorized" } else { "unauthorized" })
            });
        }
        Command::Deal(args) => {
            let gamma0 = parse_gamma(&args.gamma0)?;
            let params = VssParams { lwe: args.lwe.params(), ..VssParams::desk() };
            let k = Secret::new(args.secret, params.lwe.p)?;
            let dealer = Dealer::new(params)?;
            let dealing = dealer.deal(&k, &gamma0, args.parties, &mut streams.rng("deal"))?;
            fs::create_dir_all(&args.outdir).map_err(|e| CliError::Io(format!("{}: {e}", args.outdir.display())))?;
            let width = args.parties.to_string().len();
            let mut files = Vec::new();
            for b in &dealing.bundles {
                let path = args.outdir.join(format!("share-{:0width$}.json", b.party));
                write(&path, &b.to_bytes())?;
                files.push(path.display().to_string());
            }
            let summary = json!({"dealing": dealing.view.dealing, "instances": gamma0.len(), "files": files});
            out.emit(&codec::to_bytes(schema::SHARE, &summary)?, || {
                format!("dealt {} shares over {} instances into {}", files.len(), gamma0.len(), args.outdir.display())
            });
        }
        Command::Reconstruct { shares } => {
            let r = reconstruct_detailed(&load_bundles(&shares)?)?;
            out.emit(&codec::to_bytes(schema::RECONSTRUCTION, &r)?, || {
                format!("k = {} (instance {}, ‖E‖∞ = {})", r.secret.value(), r.instance, r.error_norm)
            });
        }
        Command::Verify { shares, secret } => {
            let bundles = load_bundles(&shares)?;
            let p = bundles.first().map_or(31, |b| b.public.lwe.p);
            let v = verify_shares(&bundles, &Secret::new(secret, p)?)?;
            out.emit(&codec::to_bytes(schema::VERDICTS, &v)?, || {
                v.verdicts
                    .iter()
                    .map(|(party, ok)| format!("party {party}: {}", if *ok { "pass" } else { "FAIL" }))
                    .collect::<Vec<_>>()
                    .join("\n")
            });
            if !v.all_pass() {
                return Err(CliError::Protocol(format!("flagged parties {:?}", v.flagged())));
            }
        }
        Command::Simulate(args) => {
            let mut cfg = SimulationConfig::desk(args.malicious, args.mode, args.trials, cli.seed);
            cfg.parties = args.parties;
            cfg.gamma0 = parse_gamma(&args.gamma0)?;
            cfg.secret = args.secret;
            let r = run_simulation(&cfg)?;
            let bytes = codec::to_bytes(schema::SIMULATION, &r)?;
            if let Some(path) = &args.out {
                write(path, &bytes)?;
            }
            out.emit(&bytes, || {
                let rate = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.4}"));
                format!(
                    "{} trials: detected {} (rate {}), recovered {}, unauthorized {}, per-check acceptance {}",
                    r.trials,
                    r.detected,
                    rate(r.detection_rate),
                    r.recovered,
                    r.unauthorized,
                    rate(r.per_check_acceptance)
                )
            });
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Validation(m) | CliError::Protocol(m) | CliError::Io(m)) = &e;
            eprintln!("error: {m}");
            ExitCode::from(e.code())
        }
    }
}
