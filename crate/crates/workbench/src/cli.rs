//! The `glc3d` command line: `render`, `eval`, `search` and `serve`.
//!
//! Exit statuses: 0 success, 2 usage, 3 file access, 4 parse or validation,
//! 5 configuration, 6 unknown name, 7 internal contract.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use glc3d_core::formats::{rule_from_bytes, ModelDocument};
use glc3d_core::linear_model::{search_discriminant, SearchParams};
use glc3d_core::scene::{self, SceneBuilder};
use glc3d_core::{canonical, Dataset, Error, LayoutConfig, LinearModel, Placement, Rule, ViewKind};
use thiserror::Error as ThisError;

use crate::http;
use crate::report::stats_table;
use crate::session::{check_model, check_rule, load_dataset, SessionError, SessionStore};

#[derive(Debug, Parser)]
#[command(name = "glc3d", version, about = "Lossless 3-D General Line Coordinate workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a scene file from a dataset.
    Render(RenderArgs),
    /// Print coverage statistics of a rule.
    Eval(EvalArgs),
    /// Search a one-vs-rest linear discriminant and write it as a model file.
    Search(SearchArgs),
    /// Run the HTTP session service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the class label column.
    #[arg(long, default_value = "class")]
    pub class_column: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ViewArg {
    Spc2d,
    Spc3d,
    Stc,
    Glcl,
    Glc3sl,
}

impl From<ViewArg> for ViewKind {
    fn from(v: ViewArg) -> Self {
        match v {
            ViewArg::Spc2d => ViewKind::Spc2d,
            ViewArg::Spc3d => ViewKind::Spc3d,
            ViewArg::Stc => ViewKind::Stc,
            ViewArg::Glcl => ViewKind::Glcl,
            ViewArg::Glc3sl => ViewKind::Glc3sl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlacementArg {
    AnchoredPlane,
    Free3d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub view: ViewArg,
    /// Model file; required by spc3d, glcl and glc3sl.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Rule file; repeat for several rules.
    #[arg(long)]
    pub rule: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub cube_size: f64,
    #[arg(long, default_value_t = 0.25)]
    pub cube_spacing: f64,
    #[arg(long, value_enum, default_value = "anchored-plane")]
    pub placement: PlacementArg,
    /// Seed for free-3d GLC-L segment directions.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Case id whose regression planes are added to the scene.
    #[arg(long)]
    pub reference: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub rule: PathBuf,
    /// Model file, needed when the rule references a discriminant.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Class placed on the `f(x) >= T` side.
    #[arg(long = "class", visible_alias = "target-class")]
    pub target_class: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to write the model file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Address to bind.
    #[arg(long, env = http::ADDR_ENV, default_value = http::DEFAULT_ADDR)]
    pub addr: String,
    /// Directory for session snapshots; sessions found there are restored.
    #[arg(long, env = "GLC3D_SNAPSHOT_DIR")]
    pub snapshot_dir: Option<PathBuf>,
}

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("cannot read '{}': {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write '{}': {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: Error },
    #[error(transparent)]
    Core(#[from] Error),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("server: {0}")]
    Server(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        let core = match self {
            CliError::Read { .. } | CliError::Write { .. } | CliError::Server(_) => return 3,
            CliError::Session(_) => return 3,
            CliError::File { source, .. } => source,
            CliError::Core(e) => e,
        };
        match core {
            Error::Io(_) => 3,
            Error::Parse { .. } | Error::Validation(_) => 4,
            Error::Config(_) => 5,
            Error::Lookup { .. } => 6,
            Error::Contract(_) => 7,
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

fn write(path: &Path, bytes: &[u8]) -> CliResult {
    fs::write(path, bytes).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

fn in_file<T>(path: &Path, r: glc3d_core::Result<T>) -> CliResult<T> {
    r.map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

/// Loads and normalizes the dataset named by `args`.
pub fn load(args: &DataArgs) -> CliResult<Dataset> {
    let bytes = read(&args.data)?;
    let (_, normalized) = in_file(&args.data, load_dataset(&bytes, &args.class_column))?;
    Ok(normalized)
}

pub fn load_model(path: &Path, dataset: &Dataset) -> CliResult<ModelDocument> {
    let text = String::from_utf8_lossy(&read(path)?).into_owned();
    let doc = in_file(path, ModelDocument::parse(&text))?;
    in_file(path, check_model(&doc.model, dataset))?;
    Ok(doc)
}

pub fn load_rule(path: &Path, dataset: &Dataset) -> CliResult<Rule> {
    let rule = in_file(path, rule_from_bytes(&read(path)?))?;
    in_file(path, check_rule(&rule, dataset))?;
    Ok(rule)
}

pub fn render(args: &RenderArgs) -> CliResult {
    let dataset = load(&args.data)?;
    let model: Option<LinearModel> = match &args.model {
        Some(p) => Some(load_model(p, &dataset)?.model),
        None => None,
    };
    let rules = args.rule.iter().map(|p| load_rule(p, &dataset)).collect::<CliResult<Vec<_>>>()?;
    let placement = match args.placement {
        PlacementArg::AnchoredPlane => Placement::AnchoredPlane,
        PlacementArg::Free3d => Placement::Free3d,
    };
    let layout = LayoutConfig {
        cube_size: args.cube_size,
        cube_spacing: args.cube_spacing,
        ..LayoutConfig::default()
    }
    .with_placement(placement)
    .with_seed(args.seed);
    let mut builder = SceneBuilder::new(&dataset, args.view.into())
        .model(model.as_ref())
        .rules(&rules)
        .layout(layout);
    if let Some(id) = args.reference {
        builder = builder.reference_case(id);
    }
    let scene = builder.build()?;
    write(&args.out, &scene::serialize(&scene))
}

pub fn eval(args: &EvalArgs, out: &mut dyn Write) -> CliResult {
    let dataset = load(&args.data)?;
    let rule = load_rule(&args.rule, &dataset)?;
    let model = match &args.model {
        Some(p) => Some(load_model(p, &dataset)?.model),
        None => None,
    };
    let stats = rule.evaluate(&dataset, model.as_ref())?;
    let text = match args.format {
        Format::Text => stats_table(&stats).into_bytes(),
        Format::Json => canonical::to_bytes(&stats),
    };
    out.write_all(&text).map_err(|source| CliError::Write { path: "<stdout>".into(), source })
}

pub fn search(args: &SearchArgs, out: &mut dyn Write) -> CliResult {
    let dataset = load(&args.data)?;
    if !dataset.class_labels().contains(&args.target_class) {
        return Err(Error::Lookup {
            kind: "class",
            name: args.target_class.clone(),
            valid: dataset.class_labels().to_vec(),
        }
        .into());
    }
    let params = SearchParams::default().with_seed(args.seed);
    let (model, stats) = search_discriminant(&dataset, &args.target_class, &params)?;
    let doc = ModelDocument::new(model, Some(args.target_class.clone()));
    write(&args.out, doc.to_text().as_bytes())?;
    let text = match args.format {
        Format::Text => stats_table(&stats).into_bytes(),
        Format::Json => canonical::to_bytes(&stats),
    };
    out.write_all(&text).map_err(|source| CliError::Write { path: "<stdout>".into(), source })
}

pub fn serve(args: &ServeArgs) -> CliResult {
    let store = match &args.snapshot_dir {
        Some(dir) => SessionStore::restore(dir.clone())?,
        None => SessionStore::new(None),
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(CliError::Server)?;
    runtime
        .block_on(http::serve(&args.addr, Arc::new(store)))
        .map_err(CliError::Server)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Render(a) => render(&a),
        Command::Eval(a) => eval(&a, out),
        Command::Search(a) => search(&a, out),
        Command::Serve(a) => serve(&a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes() {
        let missing = CliError::Read {
            path: "x.csv".into(),
            source: std::io::Error::from(std::io::ErrorKind::NotFound),
        };
        assert_eq!(missing.exit_code(), 3);
        assert!(missing.to_string().contains("x.csv"));
        assert_eq!(CliError::Core(Error::Config("no model".into())).exit_code(), 5);
        assert_eq!(CliError::Core(Error::Validation("dim".into())).exit_code(), 4);
    }

    #[test]
    fn search_accepts_target_class_alias() {
        let cli = Cli::try_parse_from([
            "glc3d", "search", "--data", "d.csv", "--target-class", "A", "--out", "m.txt",
        ])
        .unwrap();
        match cli.command {
            Command::Search(a) => assert_eq!(a.target_class, "A"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
