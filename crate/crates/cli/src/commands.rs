use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use resyduo_core::persist::{load_model, save_model};
use resyduo_core::tuning::nested_cross_validate;
use resyduo_core::{
    apply_cutoff, atomic_write, build_projection, build_similarity_model, cross_validate, generate_synthetic_corpus,
    grid_search, parse_corpus, Corpus, CutoffConfig, CvSettings, EvaluationReport, Execution, GridSpec, KnnConfig,
    ProjectionKind, RatingMatrix, RecommendationList, SimilarityModel, SynthParams, TuningResult,
};
use resyduo_service::models::{corpus_path, matrix_path, model_path};
use resyduo_service::{recommend_type1, recommend_type2, recommend_type3, AppState};

use crate::args::*;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Synth(a) => synth(a),
        Command::Build(a) => build(a),
        Command::Train(a) => train(a),
        Command::GridSearch(a) => grid(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Recommend(a) => recommend(a),
        Command::Serve(a) => serve(a),
    }
}

fn exec(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

/// `explicit`, else `file` inside the data directory.
fn resolve(explicit: Option<PathBuf>, data: &Option<PathBuf>, file: impl FnOnce(&Path) -> PathBuf, what: &str) -> Result<PathBuf> {
    match (explicit, data) {
        (Some(p), _) => Ok(p),
        (None, Some(dir)) => Ok(file(dir)),
        (None, None) => Err(CliError::Usage(format!("{what}: pass a path or --data-dir"))),
    }
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    Ok(parse_corpus(&std::fs::read(path)?)?)
}

fn write_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    atomic_write(path, corpus.to_json().as_bytes())?;
    Ok(())
}

/// Writes to `out` atomically, or to standard output.
fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => atomic_write(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cutoff(args: &CutoffArgs) -> Result<CutoffConfig> {
    Ok(CutoffConfig::new(args.v_cutoff, args.h_cutoff)?.with_fixpoint(args.fixpoint))
}

fn knn_config(args: &KnnArgs) -> Result<KnnConfig> {
    Ok(KnnConfig::new(args.sim, args.mode, args.min_support, args.k)?)
}

fn cv_settings(cv: &CvArgs, cutoff: CutoffConfig) -> CvSettings {
    CvSettings {
        cutoff,
        folds: cv.folds,
        n: cv.n,
        seed: cv.seed,
        exec: exec(cv.sequential),
    }
}

fn source_matrix(src: &MatrixSource) -> Result<(RatingMatrix, String)> {
    let (matrix, tag) = match (&src.matrix, &src.corpus, &src.data_dir) {
        (Some(path), _, _) => (RatingMatrix::load(path)?, path.display().to_string()),
        (None, Some(path), _) => {
            let kind = src.kind.ok_or_else(|| CliError::Usage("--corpus needs --kind".into()))?;
            (build_projection(&load_corpus(path)?, kind)?, kind.to_string())
        }
        (None, None, Some(dir)) => {
            let kind = src.kind.ok_or_else(|| CliError::Usage("--data-dir needs --kind".into()))?;
            (RatingMatrix::load(&matrix_path(dir, kind))?, kind.to_string())
        }
        (None, None, None) => return Err(CliError::Usage("pass --matrix, --corpus or --data-dir".into())),
    };
    let matrix = if src.positive_only { matrix.positive_only() } else { matrix };
    Ok((matrix, tag))
}

fn ingest(args: IngestArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let out = resolve(args.out, &args.data.data_dir, corpus_path, "ingest output")?;
    write_corpus(&corpus, &out)?;
    tracing::info!(projects = corpus.len(), path = %out.display(), "corpus written");
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let params = SynthParams {
        n_projects: args.projects,
        n_tags: args.tags,
        n_components: args.components,
        n_libraries: args.libraries,
        block_count: args.blocks,
        noise: args.noise,
        seed: args.seed,
    };
    let corpus = generate_synthetic_corpus(&params)?;
    let out = resolve(args.out, &args.data.data_dir, corpus_path, "synth output")?;
    write_corpus(&corpus, &out)?;
    tracing::info!(projects = corpus.len(), path = %out.display(), "synthetic corpus written");
    Ok(())
}

fn build(args: BuildArgs) -> Result<()> {
    let data = &args.data.data_dir;
    let input = resolve(args.corpus, data, corpus_path, "build corpus")?;
    let out = resolve(args.out, data, |d| matrix_path(d, args.kind), "build output")?;
    let projected = build_projection(&load_corpus(&input)?, args.kind)?;
    let projected = if args.positive_only { projected.positive_only() } else { projected };
    let reduced = apply_cutoff(&projected, cutoff(&args.cutoff)?)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    reduced.save(&out)?;
    tracing::info!(
        kind = %args.kind,
        rows = reduced.n_rows(),
        cols = reduced.n_cols(),
        dropped_rows = projected.n_rows() - reduced.n_rows(),
        dropped_cols = projected.n_cols() - reduced.n_cols(),
        "matrix written to {}",
        out.display()
    );
    Ok(())
}

fn kind_path(
    explicit: Option<PathBuf>,
    kind: Option<ProjectionKind>,
    data: &Option<PathBuf>,
    file: fn(&Path, ProjectionKind) -> PathBuf,
    what: &str,
) -> Result<PathBuf> {
    match (explicit, kind, data) {
        (Some(p), _, _) => Ok(p),
        (None, Some(kind), Some(dir)) => Ok(file(dir, kind)),
        _ => Err(CliError::Usage(format!("{what}: pass a path, or --kind with --data-dir"))),
    }
}

fn train(args: TrainArgs) -> Result<()> {
    let data = &args.data.data_dir;
    let input = kind_path(args.matrix, args.kind, data, matrix_path, "train matrix")?;
    let out = kind_path(args.out, args.kind, data, model_path, "train output")?;
    let config = knn_config(&args.knn)?;
    let model = build_similarity_model(RatingMatrix::load(&input)?, config, exec(args.sequential))?;
    save_model(&model, &out)?;
    tracing::info!(%config, path = %out.display(), "model written");
    Ok(())
}

fn render_report(report: &EvaluationReport, format: Format) -> String {
    match format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.to_csv(),
        Format::Text => {
            let mut out = String::new();
            if let Some(config) = report.config {
                writeln!(out, "config: {config}").unwrap();
            }
            writeln!(out, "cutoff: {}  folds: {}  n: {}  seed: {}", report.cutoff, report.folds, report.n, report.seed)
                .unwrap();
            for f in &report.per_fold {
                writeln!(
                    out,
                    "fold {:>2}  precision {:.4}  recall {:.4}  success {:.4}  mae {:.4}  rmse {:.4}  [{}]",
                    f.fold + 1,
                    f.accuracy.precision,
                    f.accuracy.recall,
                    f.accuracy.success_rate,
                    f.ranking.mae,
                    f.ranking.rmse,
                    f.config
                )
                .unwrap();
            }
            let a = &report.average;
            writeln!(
                out,
                "average  precision {:.4}  recall {:.4}  success {:.4}  mae {:.4}  rmse {:.4}",
                a.precision, a.recall, a.success_rate, a.mae, a.rmse
            )
            .unwrap();
            out
        }
    }
}

fn render_tuning(result: &TuningResult, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(result).expect("tuning results are serializable") + "\n",
        Format::Csv => result.scoreboard_csv(),
        Format::Text => {
            let mut out = String::new();
            for (i, e) in result.scoreboard.iter().enumerate() {
                match &e.error {
                    None => writeln!(out, "{:>2}  {}  {} {:.6}", i + 1, e.config, result.criterion, e.score),
                    Some(err) => writeln!(out, "{:>2}  {}  failed: {err}", i + 1, e.config),
                }
                .unwrap();
            }
            writeln!(out, "best: {}  {} {:.6}", result.best, result.criterion, result.best_score).unwrap();
            out
        }
    }
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let (matrix, tag) = source_matrix(&args.source)?;
    let settings = cv_settings(&args.cv, cutoff(&args.cutoff)?);
    let mut report = cross_validate(&matrix, knn_config(&args.knn)?, &settings)?;
    report.dataset_tag = tag;
    emit(&args.output.out, &render_report(&report, args.output.format))
}

fn grid(args: GridArgs) -> Result<()> {
    let (matrix, tag) = source_matrix(&args.source)?;
    let settings = cv_settings(&args.cv, cutoff(&args.cutoff)?);
    let spec = GridSpec::standard();
    let text = if args.nested {
        let mut report = nested_cross_validate(&matrix, &spec, &settings, args.criterion, args.inner_folds)?;
        report.dataset_tag = tag;
        render_report(&report, args.output.format)
    } else {
        let result = grid_search(&matrix, &spec, &settings, args.criterion)?;
        tracing::info!(best = %result.best, score = result.best_score, "grid search done");
        render_tuning(&result, args.output.format)
    };
    emit(&args.output.out, &text)
}

fn load_one(args: &RecommendArgs) -> Result<SimilarityModel> {
    match (&args.model, &args.matrix, &args.data.data_dir) {
        (Some(model), Some(matrix), _) => Ok(load_model(model, RatingMatrix::load(matrix)?, args.force)?),
        (None, None, Some(dir)) => Ok(load_model(
            &model_path(dir, args.kind),
            RatingMatrix::load(&matrix_path(dir, args.kind))?,
            args.force,
        )?),
        _ => Err(CliError::Usage("pass --model with --matrix, or --data-dir".into())),
    }
}

fn render_list(list: &RecommendationList, key: &str, format: Format) -> String {
    match format {
        Format::Json => {
            let items: Vec<_> = list
                .entries
                .iter()
                .map(|e| serde_json::json!({ key: e.item, "score": e.score }))
                .collect();
            serde_json::to_string_pretty(&serde_json::json!({ "items": items })).expect("lists are serializable") + "\n"
        }
        Format::Csv => {
            let mut out = format!("rank,{key},score\n");
            for (i, e) in list.entries.iter().enumerate() {
                writeln!(out, "{},{},{}", i + 1, e.item, e.score).unwrap();
            }
            out
        }
        Format::Text => {
            let mut out = String::new();
            for (i, e) in list.entries.iter().enumerate() {
                writeln!(out, "{:>3}. {}  {:.6}", i + 1, e.item, e.score).unwrap();
            }
            out
        }
    }
}

fn recommend(args: RecommendArgs) -> Result<()> {
    let model = load_one(&args)?;
    let (list, key) = match args.kind {
        ProjectionKind::T => (recommend_type1(&model, &args.tags, args.n)?, "id"),
        ProjectionKind::P => (recommend_type2(&model, &args.components, args.n)?, "id"),
        ProjectionKind::L => (recommend_type3(&model, &args.components, args.n)?, "name"),
    };
    emit(&args.output.out, &render_list(&list, key, args.output.format))
}

fn serve(args: ServeArgs) -> Result<()> {
    let state = AppState::from_data_dir(&args.data_dir, args.force)?;
    let addr = SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(resyduo_service::serve(addr, state))?;
    Ok(())
}
