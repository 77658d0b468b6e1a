//! The `ltd` command line.
//!
//! Exit statuses: 0 on success (an empty result is still a success), 1 on
//! usage errors, 2 when an input file cannot be read, parsed or validated.
//! Data goes to the output stream; warnings and summaries go to the
//! diagnostic stream.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::discovery::{
    discover_with, explain, latent_to_table, statements_from_table, DiscoveryRequest,
    Execution, PredicateMode, DEFAULT_MAX_DEPTH,
};
use crate::matcher::{build_lexicon, Lexicon};
use crate::ontology::{load_ontology, ConceptId, Direction, Ontology};
use crate::rdf::{self, MintingPolicy, DEFAULT_BASE};
use crate::tabular::{load_table, write_table, Table, TableError};

pub const BASE_IRI_ENV: &str = "LTD_BASE_IRI";

#[derive(Debug, Parser)]
#[command(name = "ltd", version, propagate_version = true)]
#[command(about = "Discover latent tables between unrelated relational tables through an ontology")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Connect two table columns through the ontology and write the latent table.
    Discover(DiscoverArgs),
    /// Shortest path between two concepts, or everything reachable from one.
    Closure(ClosureArgs),
    /// Show how a piece of text resolves against the ontology lexicon.
    Match(MatchArgs),
    /// Turn a latent table file into N-Triples.
    EmitRdf(EmitRdfArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Qualifier,
    Path,
}

#[derive(Debug, Args)]
struct DiscoverArgs {
    /// Left table as PATH:COLUMN (or just PATH with --left-column).
    #[arg(long, value_name = "PATH:COLUMN")]
    left: String,
    /// Right table as PATH:COLUMN (or just PATH with --right-column).
    #[arg(long, value_name = "PATH:COLUMN")]
    right: String,
    #[arg(long)]
    left_column: Option<String>,
    #[arg(long)]
    right_column: Option<String>,
    /// Right-table column to show as the object instead of the matched cell.
    #[arg(long, value_name = "COLUMN")]
    project: Option<String>,
    #[arg(long)]
    ontology: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH as u32, value_parser = clap::value_parser!(u32).range(1..))]
    max_depth: u32,
    #[arg(long, value_enum, default_value_t = ModeArg::Qualifier)]
    mode: ModeArg,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Append `path` and `source_rows` columns.
    #[arg(long)]
    provenance: bool,
    /// Follow links only in their stored direction.
    #[arg(long)]
    directed: bool,
    /// Print the inference chain of every row to the diagnostic stream.
    #[arg(long)]
    explain: bool,
    /// Disable parallel matching.
    #[arg(long)]
    serial: bool,
}

#[derive(Debug, Args)]
struct ClosureArgs {
    #[arg(long)]
    ontology: PathBuf,
    #[arg(long)]
    from: String,
    #[arg(long)]
    to: Option<String>,
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    max_depth: usize,
    #[arg(long)]
    directed: bool,
}

#[derive(Debug, Args)]
struct MatchArgs {
    #[arg(long)]
    ontology: PathBuf,
    #[arg(long)]
    term: String,
}

#[derive(Debug, Args)]
struct EmitRdfArgs {
    /// Latent table file written by `discover`; `-` or absent reads stdin.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, env = BASE_IRI_ENV, default_value = DEFAULT_BASE)]
    base: String,
    /// Emit objects as plain literals instead of IRIs.
    #[arg(long)]
    literal_objects: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Input(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Input(_) => 2,
        }
    }
}

type CmdResult = Result<(), Failure>;

fn input_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

fn io_err(e: io::Error) -> Failure {
    Failure::Input(format!("write failed: {e}"))
}

/// Fully resolved options for a `discover` run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub left_path: PathBuf,
    pub left_column: String,
    pub right_path: PathBuf,
    pub right_column: String,
    pub ontology: PathBuf,
    pub projection: Option<String>,
    pub max_depth: usize,
    pub predicate_mode: PredicateMode,
    pub direction: Direction,
    pub delimiter: u8,
    pub out: Option<PathBuf>,
    pub provenance: bool,
}

/// Splits `table.csv:Column`. An explicit column (from `--left-column` and
/// friends) takes the whole spec as the path.
pub fn split_table_spec(spec: &str, column: Option<&str>) -> Result<(PathBuf, String), String> {
    if let Some(c) = column {
        return Ok((PathBuf::from(spec), unquote(c).to_string()));
    }
    let (path, col) = spec
        .split_once(':')
        .ok_or_else(|| format!("`{spec}` needs a column: use PATH:COLUMN or the long-form column flag"))?;
    let col = unquote(col);
    if path.is_empty() || col.trim().is_empty() {
        return Err(format!("`{spec}` needs both a path and a column"));
    }
    Ok((PathBuf::from(path), col.to_string()))
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    for q in ['"', '\''] {
        if s.len() >= 2 && s.starts_with(q) && s.ends_with(q) {
            return &s[1..s.len() - 1];
        }
    }
    s
}

fn delimiter_byte(c: char) -> Result<u8, Failure> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| Failure::Usage(format!("delimiter must be a single ASCII character, got {c:?}")))
}

fn table_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn open(path: &Path) -> Result<File, Failure> {
    File::open(path).map_err(|e| input_err(path, e))
}

fn read_ontology(path: &Path) -> Result<Ontology, Failure> {
    load_ontology(open(path)?).map_err(|e| input_err(path, e))
}

fn read_table(path: &Path, delimiter: u8) -> Result<Table, Failure> {
    load_table(open(path)?, &table_name(path), delimiter).map_err(|e| input_err(path, e))
}

fn with_output(
    out: Option<&Path>,
    stdout: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> CmdResult {
    match out {
        Some(p) => {
            let mut file = File::create(p).map_err(|e| input_err(p, e))?;
            f(&mut file).map_err(io_err)?;
            file.flush().map_err(io_err)
        }
        None => f(stdout).map_err(io_err),
    }
}

impl DiscoverArgs {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let (left_path, left_column) =
            split_table_spec(&self.left, self.left_column.as_deref()).map_err(Failure::Usage)?;
        let (right_path, right_column) =
            split_table_spec(&self.right, self.right_column.as_deref()).map_err(Failure::Usage)?;
        let config = RunConfig {
            left_path,
            left_column,
            right_path,
            right_column,
            ontology: self.ontology.clone(),
            projection: self.project.as_deref().map(|p| unquote(p).to_string()),
            max_depth: self.max_depth as usize,
            predicate_mode: match self.mode {
                ModeArg::Qualifier => PredicateMode::Qualifier,
                ModeArg::Path => PredicateMode::Path,
            },
            direction: if self.directed {
                Direction::Stored
            } else {
                Direction::Undirected
            },
            delimiter: delimiter_byte(self.delimiter)?,
            out: self.out.clone(),
            provenance: self.provenance,
        };
        for p in [&config.left_path, &config.right_path, &config.ontology] {
            open(p)?;
        }
        Ok(config)
    }
}

fn cmd_discover(args: &DiscoverArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    let config = args.resolve()?;
    let onto = read_ontology(&config.ontology)?;
    let left = read_table(&config.left_path, config.delimiter)?;
    let right = read_table(&config.right_path, config.delimiter)?;

    let mut req = DiscoveryRequest::new(&config.left_column, &config.right_column)
        .with_max_depth(config.max_depth)
        .with_mode(config.predicate_mode)
        .with_direction(config.direction);
    req.projection = config.projection.clone();
    let exec = if args.serial {
        Execution::Serial
    } else {
        Execution::Parallel
    };
    let latent =
        discover_with(&req, &left, &right, &onto, exec).map_err(|e| Failure::Input(e.to_string()))?;

    let table = latent_to_table(&latent, config.provenance);
    with_output(config.out.as_deref(), stdout, |w| {
        write_table(&table, w, config.delimiter).map_err(|e| match e {
            TableError::Io(io) => io,
            other => io::Error::other(other.to_string()),
        })
    })?;

    if args.explain {
        for row in &latent.rows {
            writeln!(stderr, "{}", explain(&latent, row, &onto)).map_err(io_err)?;
        }
    }
    if latent.rows.is_empty() {
        writeln!(
            stderr,
            "warning: latent table is empty (no connected pairs within max depth {})",
            config.max_depth
        )
        .map_err(io_err)?;
    }
    let s = latent.stats;
    writeln!(
        stderr,
        "{}",
        serde_json::json!({
            "rows_emitted": s.rows_emitted,
            "pairs_examined": s.pairs_examined,
            "paths_found": s.paths_found,
        })
    )
    .map_err(io_err)
}

/// Exact id, then case-insensitive id, then an exact lexicon term.
fn resolve_concept(o: &Ontology, lex: &Lexicon, input: &str) -> Result<ConceptId, Failure> {
    if let Some(c) = o.concept(input) {
        return Ok(c.id.clone());
    }
    let folded: Vec<&ConceptId> = o
        .concepts()
        .iter()
        .map(|c| &c.id)
        .filter(|id| id.as_str().eq_ignore_ascii_case(input))
        .collect();
    if let [only] = folded.as_slice() {
        return Ok((*only).clone());
    }
    if let Some((id, _)) = lex.get(input) {
        return Ok(id.clone());
    }
    Err(Failure::Input(format!(
        "unknown concept `{input}` (nearest: {})",
        o.nearest_ids(input, 3).join(", ")
    )))
}

fn display_id(id: &ConceptId) -> String {
    id.as_str().to_lowercase()
}

fn cmd_closure(args: &ClosureArgs, stdout: &mut dyn Write) -> CmdResult {
    let onto = read_ontology(&args.ontology)?;
    let lex = build_lexicon(&onto).map_err(|e| input_err(&args.ontology, e))?;
    let dir = if args.directed {
        Direction::Stored
    } else {
        Direction::Undirected
    };
    let from = resolve_concept(&onto, &lex, &args.from)?;
    let query_err = |e: crate::ontology::OntologyError| Failure::Input(e.to_string());

    match &args.to {
        Some(to) => {
            let to = resolve_concept(&onto, &lex, to)?;
            if args.max_depth == 0 {
                return Err(Failure::Usage("--max-depth must be at least 1 with --to".into()));
            }
            match onto
                .shortest_path_in(dir, from.as_str(), to.as_str(), args.max_depth)
                .map_err(query_err)?
            {
                Some(p) => {
                    let ids: Vec<String> = p.nodes.iter().map(display_id).collect();
                    writeln!(stdout, "{} (depth {})", ids.join(" -> "), p.depth())
                }
                None => writeln!(stdout, "no path"),
            }
            .map_err(io_err)
        }
        None => {
            let mut reached: Vec<(usize, String)> = onto
                .reachable_by_depth_in(dir, from.as_str(), args.max_depth)
                .map_err(query_err)?
                .into_iter()
                .map(|(id, depth)| (depth, display_id(&id)))
                .collect();
            reached.sort();
            for (depth, id) in reached {
                writeln!(stdout, "{id} (depth {depth})").map_err(io_err)?;
            }
            Ok(())
        }
    }
}

fn cmd_match(args: &MatchArgs, stdout: &mut dyn Write) -> CmdResult {
    let onto = read_ontology(&args.ontology)?;
    let lex = build_lexicon(&onto).map_err(|e| input_err(&args.ontology, e))?;
    let Some(m) = lex.match_cell(&args.term) else {
        return writeln!(stdout, "no match").map_err(io_err);
    };
    let label = onto
        .concept(m.concept.as_str())
        .map(|c| c.label.as_str())
        .unwrap_or_default();
    write!(
        stdout,
        "concept: {}\nlabel: {label}\nkind: {}\nmatched: {}\nqualifier: {}\n",
        display_id(&m.concept),
        m.kind.as_str(),
        m.matched_tokens().join(" "),
        m.qualifier.join(" "),
    )
    .map_err(io_err)
}

fn cmd_emit_rdf(args: &EmitRdfArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    let policy = MintingPolicy::new(&args.base, args.literal_objects)
        .map_err(|e| Failure::Usage(format!("--base: {e}")))?;
    let delimiter = delimiter_byte(args.delimiter)?;
    let input = args
        .input
        .clone()
        .filter(|p| p.as_os_str() != "-")
        .unwrap_or_else(|| PathBuf::from("<stdin>"));
    let table = match &args.input {
        Some(p) if p.as_os_str() != "-" => read_table(p, delimiter)?,
        _ => load_table(io::stdin().lock(), "stdin", delimiter).map_err(|e| input_err(&input, e))?,
    };
    let statements = statements_from_table(&table).map_err(|e| input_err(&input, e))?;
    let refs: Vec<(&str, &str, &str)> = statements
        .iter()
        .map(|(s, p, o)| (s.as_str(), p.as_str(), o.as_str()))
        .collect();
    let triples =
        rdf::statements_to_triples(refs.iter().copied(), &policy).map_err(|e| input_err(&input, e))?;

    with_output(args.out.as_deref(), stdout, |w| rdf::write_ntriples(&triples, w))?;

    for c in rdf::slug_collisions(refs.iter().copied(), &policy) {
        writeln!(
            stderr,
            "warning: terms {} all mint to <{}>",
            c.terms
                .iter()
                .map(|t| format!("{t:?}"))
                .collect::<Vec<_>>()
                .join(", "),
            c.iri
        )
        .map_err(io_err)?;
    }
    writeln!(stderr, "{}", serde_json::json!({ "triples": triples.len() })).map_err(io_err)
}

/// Runs one invocation and returns its exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    1
                }
            };
        }
    };

    let result = match &cli.command {
        Command::Discover(a) => cmd_discover(a, stdout, stderr),
        Command::Closure(a) => cmd_closure(a, stdout),
        Command::Match(a) => cmd_match(a, stdout),
        Command::EmitRdf(a) => cmd_emit_rdf(a, stdout, stderr),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let msg = match &f {
                Failure::Usage(m) => format!("usage error: {m}"),
                Failure::Input(m) => format!("error: {m}"),
            };
            let _ = writeln!(stderr, "{msg}");
            f.code()
        }
    }
}
