use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use densegen::bttree::displacement_oracle;
use densegen::density::{certify_dense, verify_certificate, CertifyConfig, DensityCertificate};
use densegen::experiments::{
    density_experiment, normalize_experiment, normalize_tuple, treeaut_experiment, trial_rng, DensityFamily,
    ExperimentConfig, TupleFamily,
};
use densegen::localfield::{FieldSpec, Valuation};
use densegen::nielsen::{
    membership_o, reduce_to_elliptic, MarkedTuple, NielsenWord, SearchConfig, DEFAULT_SCAN_RADIUS,
};
use densegen::prg::{check_census_budget, orbit_census, FiniteKind, FiniteMatrixGroup, DEFAULT_TUPLE_BUDGET};
use densegen::psl2::{LengthLaw, ProjectiveMatrix};
use densegen::treeaut::TreePortrait;
use densegen::Error;

#[derive(Parser)]
#[command(
    name = "densegen",
    version,
    about = "Dense generation in PSL2 over local fields and tree automorphism groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify an element as elliptic or hyperbolic and cross-check against the tree.
    Classify(ClassifyArgs),
    /// Find a Nielsen word making the first entry of a tuple elliptic.
    Reduce(ReduceArgs),
    /// Normalize a tuple so its first two entries generate a non-compact group (or run the experiment).
    Normalize(NormalizeArgs),
    /// Search for a density certificate of a tuple.
    Certify(CertifyArgs),
    /// Certify random (hyperbolic, elliptic, ...) tuples and report the certified fraction.
    ExperimentDensity(DensityArgs),
    /// Exercise portrait algebra on the regular tree.
    ExperimentTreeaut(TreeArgs),
    /// Orbits of the product replacement graph of SL2(F_p) or PSL2(F_p).
    PrgCensus(CensusArgs),
    /// Re-check certificates, words or experiment records.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct FieldArg {
    /// Field as kind:p:N, e.g. padic:5:32 or laurent:3:32.
    #[arg(long, default_value = "padic:5:32")]
    field: FieldSpec,
}

#[derive(Args)]
struct TupleInput {
    /// Element encoding (four entries joined by `|`); repeat for each tuple entry.
    #[arg(long = "element")]
    elements: Vec<String>,
    /// File with one element encoding per line (`-` for stdin).
    #[arg(long)]
    tuple: Option<PathBuf>,
}

impl TupleInput {
    fn is_empty(&self) -> bool {
        self.elements.is_empty() && self.tuple.is_none()
    }

    fn read(&self, spec: FieldSpec) -> Result<Vec<ProjectiveMatrix>, CliError> {
        let mut lines: Vec<String> = self.elements.clone();
        if let Some(path) = &self.tuple {
            let text = read_input(path)?;
            lines.extend(
                text.lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(String::from),
            );
        }
        if lines.is_empty() {
            return Err(CliError::Usage("no tuple given (use --element or --tuple)".into()));
        }
        Ok(lines
            .iter()
            .map(|l| ProjectiveMatrix::decode(spec, l))
            .collect::<Result<_, _>>()?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Sampler {
    Hyperbolic,
    Elliptic,
    Compact,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    field: FieldArg,
    #[arg(long, conflicts_with_all = ["seed", "portrait"])]
    element: Option<String>,
    /// Draw the element from a sampler with this seed.
    #[arg(long, conflicts_with = "portrait")]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "hyperbolic")]
    sampler: Sampler,
    #[arg(long, default_value = "geometric:0.5:6", value_parser = parse_law)]
    law: LengthLaw,
    /// Serialized tree portrait.
    #[arg(long)]
    portrait: Option<PathBuf>,
}

#[derive(Args)]
struct ReduceArgs {
    #[command(flatten)]
    field: FieldArg,
    #[command(flatten)]
    input: TupleInput,
    #[arg(long, default_value_t = SearchConfig::DEFAULT_BUDGET)]
    budget: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeFamily {
    AllElliptic,
    Mixed,
    Alternating,
}

#[derive(Args)]
struct NormalizeArgs {
    #[command(flatten)]
    field: FieldArg,
    #[command(flatten)]
    input: TupleInput,
    #[arg(long, default_value_t = SearchConfig::DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long, default_value_t = DEFAULT_SCAN_RADIUS)]
    radius: u32,
    /// Tuple length of sampled tuples (experiment mode).
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, value_enum, default_value = "alternating")]
    family: NormalizeFamily,
    #[arg(long, default_value = "geometric:0.5:6", value_parser = parse_law)]
    law: LengthLaw,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    field: FieldArg,
    #[command(flatten)]
    input: TupleInput,
    /// Word-length budget L.
    #[arg(long, default_value_t = 6)]
    words: usize,
    /// Congruence level of the non-discreteness witness.
    #[arg(long, default_value_t = 1)]
    level: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DensityKind {
    Generic,
    Subfield,
}

#[derive(Args)]
struct DensityArgs {
    #[command(flatten)]
    field: FieldArg,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 6)]
    words: usize,
    #[arg(long, default_value_t = 1)]
    level: u32,
    #[arg(long, value_enum, default_value = "generic")]
    family: DensityKind,
    #[arg(long, default_value = "geometric:0.5:6", value_parser = parse_law)]
    law: LengthLaw,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct TreeArgs {
    /// Branching parameter: vertices have degree q + 1.
    #[arg(long, default_value_t = 2)]
    q: u32,
    #[arg(long, default_value_t = 12)]
    depth: u32,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct CensusArgs {
    #[arg(long, default_value = "sl2")]
    group: FiniteKind,
    #[arg(long)]
    p: u32,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Largest number of tuples to enumerate.
    #[arg(long, default_value_t = DEFAULT_TUPLE_BUDGET)]
    limit: u128,
    /// Lift the tuple limit to the index-width maximum.
    #[arg(long)]
    allow_large: bool,
    /// Emit one CSV row per orbit instead of the text report.
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    /// First entry elliptic.
    Elliptic,
    /// First two entries generate a non-compact group.
    O,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    field: FieldArg,
    #[command(flatten)]
    input: TupleInput,
    /// Certificate text to re-check against the tuple.
    #[arg(long, conflicts_with_all = ["word", "records"])]
    certificate: Option<PathBuf>,
    /// Nielsen word to apply to the tuple.
    #[arg(long, conflicts_with = "records", allow_hyphen_values = true)]
    word: Option<String>,
    #[arg(long, value_enum, default_value = "o")]
    target: Target,
    #[arg(long, default_value_t = DEFAULT_SCAN_RADIUS)]
    radius: u32,
    /// JSON-lines output of experiment-density or normalize.
    #[arg(long)]
    records: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Usage(String),
    Io(String),
    Rejected(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Rejected(_) => 1,
            CliError::Core(e) if e.is_refusal() => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::Io(m) | CliError::Rejected(m) => f.write_str(m),
        }
    }
}

fn parse_law(s: &str) -> Result<LengthLaw, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || format!("length law `{s}` is not fixed:M or geometric:THETA:MAX");
    match parts.as_slice() {
        ["fixed", m] => {
            let m: u32 = m.parse().map_err(|_| bad())?;
            if m == 0 {
                return Err("fixed length law needs M ≥ 1".into());
            }
            Ok(LengthLaw::Fixed(m))
        }
        ["geometric", theta, max] => {
            let theta: f64 = theta.parse().map_err(|_| bad())?;
            let max: u32 = max.parse().map_err(|_| bad())?;
            if !(theta > 0.0 && theta <= 1.0) || max == 0 {
                return Err(bad());
            }
            Ok(LengthLaw::Geometric { theta, max })
        }
        _ => Err(bad()),
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::Io(format!("stdin: {e}")))?;
    } else {
        text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(text)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn classify(a: ClassifyArgs) -> Result<String, CliError> {
    if let Some(path) = &a.portrait {
        let g = TreePortrait::deserialize(&read_input(path)?)?;
        let class = g.classify()?;
        return Ok(format!("{class}, depth {}\n", g.depth()));
    }
    let spec = a.field.field;
    let mut prefix = String::new();
    let g = match (&a.element, a.seed) {
        (Some(text), _) => ProjectiveMatrix::decode(spec, text)?,
        (None, Some(seed)) => {
            let mut rng = trial_rng(seed, 0);
            let g = match a.sampler {
                Sampler::Hyperbolic => ProjectiveMatrix::sample_hyperbolic(spec, &mut rng, a.law),
                Sampler::Elliptic => ProjectiveMatrix::sample_elliptic(spec, &mut rng),
                Sampler::Compact => ProjectiveMatrix::sample_compact(spec, &mut rng),
            };
            prefix = format!("{}\n", g.encode());
            g
        }
        (None, None) => return Err(CliError::Usage("give --element, --seed or --portrait".into())),
    };
    let class = g.classify()?;
    let oracle = displacement_oracle(&g)?;
    let vtr = match g.trace().valuation() {
        Valuation::Infinite { .. } => "inf".to_string(),
        Valuation::Finite(v) => v.to_string(),
    };
    let line = format!("{class}, v(tr)={vtr}");
    if oracle != class {
        return Err(CliError::Rejected(format!(
            "{prefix}{line}, oracle disagrees ({oracle})"
        )));
    }
    Ok(format!("{prefix}{line}, oracle agrees\n"))
}

fn reduce(a: ReduceArgs) -> Result<String, CliError> {
    let t = MarkedTuple::new(a.input.read(a.field.field)?)?;
    let w = reduce_to_elliptic(&t, a.budget)?;
    Ok(format!("{w}\n"))
}

fn experiment_config(field: FieldSpec, run: &RunArgs) -> ExperimentConfig {
    ExperimentConfig {
        field,
        trials: run.trials,
        seed: run.seed,
        threads: run.threads,
        ..Default::default()
    }
}

fn normalize(a: NormalizeArgs) -> Result<(String, Option<PathBuf>), CliError> {
    let spec = a.field.field;
    if !a.input.is_empty() {
        let t = MarkedTuple::new(a.input.read(spec)?)?;
        let (r, n, verified) = normalize_tuple(&t, a.budget, a.radius)?;
        if !verified {
            return Err(CliError::Rejected(format!(
                "{} (membership check failed)",
                r.concat(&n)
            )));
        }
        return Ok((format!("{}\n", r.concat(&n)), a.run.out));
    }
    let cfg = ExperimentConfig {
        k: a.k,
        length_law: a.law,
        budget: a.budget,
        scan_radius: a.radius,
        ..experiment_config(spec, &a.run)
    };
    let family = match a.family {
        NormalizeFamily::AllElliptic => TupleFamily::AllElliptic,
        NormalizeFamily::Mixed => TupleFamily::Mixed,
        NormalizeFamily::Alternating => TupleFamily::Alternating,
    };
    Ok((normalize_experiment(&cfg, family)?.to_jsonl(), a.run.out))
}

fn certify(a: CertifyArgs) -> Result<String, CliError> {
    let gens = a.input.read(a.field.field)?;
    let cert = certify_dense(
        &gens,
        CertifyConfig {
            word_length: a.words,
            level: a.level,
        },
    )?;
    Ok(with_newline(cert.to_string()))
}

fn experiment_density(a: DensityArgs) -> Result<String, CliError> {
    let cfg = ExperimentConfig {
        k: a.k,
        word_length: a.words,
        level: a.level,
        length_law: a.law,
        ..experiment_config(a.field.field, &a.run)
    };
    let family = match a.family {
        DensityKind::Generic => DensityFamily::Generic,
        DensityKind::Subfield => DensityFamily::Subfield,
    };
    Ok(density_experiment(&cfg, family)?.to_jsonl())
}

fn experiment_treeaut(a: TreeArgs) -> Result<String, CliError> {
    let field = FieldSpec::padic(5, FieldSpec::DEFAULT_PRECISION)?;
    let cfg = ExperimentConfig {
        q: a.q,
        depth: a.depth,
        ..experiment_config(field, &a.run)
    };
    Ok(treeaut_experiment(&cfg)?.to_jsonl())
}

fn prg_census(a: CensusArgs) -> Result<String, CliError> {
    let limit = if a.allow_large { u32::MAX as u128 } else { a.limit };
    check_census_budget(a.group, a.p, a.k, limit)?;
    let group = FiniteMatrixGroup::new(a.group, a.p)?;
    let report = orbit_census(&group, a.k, limit)?;
    Ok(with_newline(if a.csv { report.to_csv() } else { report.to_text() }))
}

fn check_word(t: &MarkedTuple<ProjectiveMatrix>, word: &NielsenWord, target: Target) -> Result<bool, CliError> {
    let image = t.apply_word(word)?;
    Ok(match target {
        Target::Elliptic => image.entries()[0].classify()?.is_elliptic(),
        Target::O => membership_o(&image, 1, 2)?,
    })
}

fn verify_record(v: &Value) -> Result<Option<Vec<String>>, CliError> {
    let obj = match v.as_object() {
        Some(o) if !o.contains_key("summary") => o,
        _ => return Ok(None),
    };
    let field = || -> Result<FieldSpec, CliError> {
        let s = obj
            .get("field")
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::Usage("record without field".into()))?;
        Ok(s.parse()?)
    };
    let strings = |key: &str| -> Vec<String> {
        obj.get(key)
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(|x| x.as_str().map(String::from)).collect())
            .unwrap_or_default()
    };
    if let Some(text) = obj.get("certificate").and_then(Value::as_str) {
        let spec = field()?;
        let gens = strings("generators")
            .iter()
            .map(|g| ProjectiveMatrix::decode(spec, g))
            .collect::<Result<Vec<_>, _>>()?;
        let cert: DensityCertificate = text.parse()?;
        return Ok(Some(verify_certificate(&gens, &cert)?));
    }
    if let Some(word) = obj.get("word").and_then(Value::as_str) {
        let spec = field()?;
        let entries = strings("tuple")
            .iter()
            .map(|g| ProjectiveMatrix::decode(spec, g))
            .collect::<Result<Vec<_>, _>>()?;
        let t = MarkedTuple::new(entries)?;
        let ok = check_word(&t, &word.parse()?, Target::O)?;
        let claimed = obj.get("verified").and_then(Value::as_bool).unwrap_or(false);
        let mut problems = Vec::new();
        if !ok {
            problems.push(format!("word `{word}` does not reach the normal form"));
        }
        if ok != claimed {
            problems.push(format!("record claims verified = {claimed}"));
        }
        return Ok(Some(problems));
    }
    Ok(None)
}

fn verify(a: VerifyArgs) -> Result<String, CliError> {
    if let Some(path) = &a.records {
        let text = read_input(path)?;
        let (mut checked, mut skipped) = (0u64, 0u64);
        let mut failures = Vec::new();
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let v: Value = serde_json::from_str(line).map_err(|e| CliError::Usage(format!("line {}: {e}", n + 1)))?;
            match verify_record(&v)? {
                None => skipped += 1,
                Some(problems) => {
                    checked += 1;
                    failures.extend(problems.into_iter().map(|p| format!("line {}: {p}", n + 1)));
                }
            }
        }
        let summary = format!(
            "{checked} records checked, {skipped} skipped, {} problems",
            failures.len()
        );
        if failures.is_empty() {
            return Ok(format!("{summary}\n"));
        }
        return Err(CliError::Rejected(format!("{}\n{summary}", failures.join("\n"))));
    }
    if let Some(path) = &a.certificate {
        let cert: DensityCertificate = read_input(path)?.parse()?;
        let gens = a.input.read(cert.spec)?;
        let problems = verify_certificate(&gens, &cert)?;
        if problems.is_empty() {
            return Ok("certificate verified\n".into());
        }
        return Err(CliError::Rejected(problems.join("\n")));
    }
    if let Some(word) = &a.word {
        let word: NielsenWord = word.parse()?;
        let t = MarkedTuple::new(a.input.read(a.field.field)?)?;
        if check_word(&t, &word, a.target)? {
            return Ok("word verified\n".into());
        }
        return Err(CliError::Rejected(format!("word `{word}` does not reach the target")));
    }
    Err(CliError::Usage("give --certificate, --word or --records".into()))
}

fn run(cli: Cli) -> Result<(String, Option<PathBuf>), CliError> {
    Ok(match cli.command {
        Command::Classify(a) => (classify(a)?, None),
        Command::Reduce(a) => (reduce(a)?, None),
        Command::Normalize(a) => normalize(a)?,
        Command::Certify(a) => {
            let out = a.out.clone();
            (certify(a)?, out)
        }
        Command::ExperimentDensity(a) => {
            let out = a.run.out.clone();
            (experiment_density(a)?, out)
        }
        Command::ExperimentTreeaut(a) => {
            let out = a.run.out.clone();
            (experiment_treeaut(a)?, out)
        }
        Command::PrgCensus(a) => {
            let out = a.out.clone();
            (prg_census(a)?, out)
        }
        Command::Verify(a) => (verify(a)?, None),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli).and_then(|(text, out)| emit(out.as_deref(), &text));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("densegen: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
