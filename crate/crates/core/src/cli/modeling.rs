use std::path::{Path, PathBuf};

use serde::Serialize;

use super::render::{bar_chart, num, opt, table};
use super::{check_schema, input_err, read_upstream, AblateArgs, CliError, Context, ExplainArgs, ModelKind, TrainArgs};
use crate::explain::{
    ablation_run, correlation_vs_ranking, explain_rows, model_trees, AblationRow, CorrelationVsRanking, ExplainError,
    ShapAttribution, ShapRanking,
};
use crate::learn::{
    cross_validate, evaluate, CvReport, Dataset, EvalMetrics, ForestParams, ForestVariant, ModelArtifact, ModelSpec,
    TreeParams, SCHEMA_VERSION,
};
use crate::seed;
use crate::stats::pearson_matrix;

/// Largest tolerated |sum of attributions + base - prediction|.
const EFFICIENCY_TOLERANCE: f64 = 1e-9;

fn load_features(ctx: &Context, path: Option<&Path>) -> Result<Dataset, CliError> {
    let path = path.map_or_else(|| ctx.path("features.csv"), Path::to_path_buf);
    let text = read_upstream(&path, "feature matrix", "analyze")?;
    let data = Dataset::from_csv(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if !data.has_frozen_schema() {
        log::warn!("{} does not use the standard 18-column schema", path.display());
    }
    Ok(data)
}

fn load_model(ctx: &Context, path: Option<&PathBuf>) -> Result<ModelArtifact, CliError> {
    let path = path.cloned().unwrap_or_else(|| ctx.path("model.json"));
    let text = read_upstream(&path, "model", "train")?;
    let value = check_schema(&text, &path)?;
    serde_json::from_value(value).map_err(|e| CliError::Input(format!("{} is not a model file: {e}", path.display())))
}

fn spec_for(kind: ModelKind, args: &TrainArgs) -> ModelSpec {
    let tree = TreeParams { max_depth: args.max_depth, min_samples_split: args.min_samples_split };
    let forest = |variant| ModelSpec::Forest(ForestParams { n_trees: args.trees, tree, ..ForestParams::new(variant) });
    match kind {
        ModelKind::Dt => ModelSpec::Tree(tree),
        ModelKind::Rf => forest(ForestVariant::RandomForest),
        ModelKind::Et => forest(ForestVariant::ExtraTrees),
        ModelKind::Bagging => forest(ForestVariant::Bagging),
        ModelKind::Knn => ModelSpec::Knn { k: args.neighbors },
    }
}

/// The balanced training and test portions every modeling command works on.
fn training_split(
    data: &Dataset,
    test_fraction: Option<f64>,
    seed: u64,
) -> Result<(Dataset, Option<Dataset>), CliError> {
    let balanced = data.balanced(seed);
    match test_fraction {
        Some(f) if f > 0.0 => {
            if f >= 1.0 {
                return Err(CliError::Input(format!("test fraction {f} must be below 1")));
            }
            let (train, test) = balanced.stratified_split(f, seed).map_err(input_err)?;
            Ok((train, Some(test)))
        }
        _ => Ok((balanced, None)),
    }
}

#[derive(Debug, Serialize)]
struct TrainReport {
    schema_version: u32,
    model: String,
    spec: ModelSpec,
    seed: u64,
    rows: usize,
    train_rows: usize,
    test_rows: usize,
    cv: CvReport,
    test: Option<EvalMetrics>,
    suite: Vec<CvReport>,
}

pub(super) fn train(ctx: &Context, args: &TrainArgs) -> Result<(), CliError> {
    let data = load_features(ctx, args.features.as_deref())?;
    let test_fraction = (args.test_fraction > 0.0).then_some(args.test_fraction);
    let (train, test) = training_split(&data, test_fraction, ctx.seed)?;
    let spec = spec_for(args.model, args);
    let cv_seed = seed::derive(ctx.seed, "cv");

    let cv = cross_validate(&train, &spec, args.folds, cv_seed).map_err(input_err)?;
    let model = spec.fit(&train, seed::derive(ctx.seed, "fit")).map_err(input_err)?;
    if let Some(trees) = model.trees() {
        for (i, t) in trees.iter().enumerate() {
            t.check().map_err(|e| CliError::Invariant(format!("tree {i}: {e}")))?;
        }
    }
    let test_metrics = match &test {
        Some(t) => {
            let probs =
                t.rows.iter().map(|x| model.predict_proba(x)).collect::<Result<Vec<_>, _>>().map_err(input_err)?;
            Some(evaluate(&t.labels, &probs, 0.5).map_err(input_err)?)
        }
        None => None,
    };

    let mut suite = Vec::new();
    if args.suite {
        for kind in [ModelKind::Dt, ModelKind::Rf, ModelKind::Et, ModelKind::Bagging, ModelKind::Knn] {
            if kind == args.model {
                suite.push(cv.clone());
            } else {
                suite.push(cross_validate(&train, &spec_for(kind, args), args.folds, cv_seed).map_err(input_err)?);
            }
        }
    }

    let artifact = ModelArtifact {
        schema_version: SCHEMA_VERSION,
        feature_names: data.feature_names.clone(),
        spec: spec.clone(),
        seed: ctx.seed,
        test_fraction,
        model,
    };
    ctx.write_json("model.json", &artifact)?;

    let report = TrainReport {
        schema_version: SCHEMA_VERSION,
        model: spec.name(),
        spec,
        seed: ctx.seed,
        rows: data.len(),
        train_rows: train.len(),
        test_rows: test.as_ref().map_or(0, Dataset::len),
        cv,
        test: test_metrics,
        suite,
    };
    ctx.write_json("train.json", &report)?;
    let text = render_train(&report);
    ctx.write("train.txt", &text)?;
    print!("{text}");
    Ok(())
}

fn cv_row(cv: &CvReport) -> Vec<String> {
    let pm = |m: f64, s: f64| format!("{} ± {}", num(m, 3), num(s, 3));
    vec![
        cv.model.clone(),
        pm(cv.mean.accuracy, cv.std.accuracy),
        pm(cv.mean.precision, cv.std.precision),
        pm(cv.mean.recall, cv.std.recall),
        pm(cv.mean.f1, cv.std.f1),
        match (cv.mean.auc, cv.std.auc) {
            (Some(m), Some(s)) => pm(m, s),
            _ => "n/a".into(),
        },
    ]
}

const METRIC_HEADERS: [&str; 6] = ["model", "accuracy", "precision", "recall", "f1", "auc"];

fn render_train(r: &TrainReport) -> String {
    let mut out = format!(
        "{} trained on {} of {} rows (balanced), {} held out, seed {}\n\n",
        r.model, r.train_rows, r.rows, r.test_rows, r.seed
    );
    out.push_str(&format!("{}-fold cross-validation (mean ± sd)\n", r.cv.folds));
    out.push_str(&table(&METRIC_HEADERS, &[cv_row(&r.cv)]));
    if let Some(t) = &r.test {
        out.push_str("\nHeld-out test set\n");
        let row = vec![
            r.model.clone(),
            num(t.accuracy, 3),
            num(t.precision, 3),
            num(t.recall, 3),
            num(t.f1, 3),
            opt(t.auc, 3),
        ];
        out.push_str(&table(&METRIC_HEADERS, &[row]));
    }
    if !r.suite.is_empty() {
        out.push_str("\nModel comparison\n");
        let rows: Vec<Vec<String>> = r.suite.iter().map(cv_row).collect();
        out.push_str(&table(&METRIC_HEADERS, &rows));
    }
    out
}

fn explain_err(e: ExplainError) -> CliError {
    match e {
        ExplainError::NoTrees => CliError::Input("explanations need a tree-based model (dt, rf, et or bagging)".into()),
        other => CliError::Input(other.to_string()),
    }
}

/// Attributions for every row plus the resulting ranking, with the
/// efficiency identity verified on each row.
fn attribute(artifact: &ModelArtifact, data: &Dataset) -> Result<(Vec<ShapAttribution>, ShapRanking), CliError> {
    if artifact.feature_names != data.feature_names {
        return Err(CliError::Input(format!(
            "feature columns {:?} do not match the model's {:?}",
            data.feature_names, artifact.feature_names
        )));
    }
    let trees = model_trees(&artifact.model).map_err(explain_err)?;
    let attributions = explain_rows(&trees, &data.rows).map_err(explain_err)?;
    for (id, a) in data.ids.iter().zip(&attributions) {
        let gap = a.efficiency_gap();
        if gap.abs() > EFFICIENCY_TOLERANCE {
            return Err(CliError::Invariant(format!("attributions for {id} miss the prediction by {gap:e}")));
        }
    }
    let ranking = ShapRanking::from_attributions(&data.feature_names, &attributions).map_err(explain_err)?;
    Ok((attributions, ranking))
}

#[derive(Debug, Serialize)]
struct ExplainReport {
    schema_version: u32,
    model: String,
    rows: usize,
    base_value: f64,
    ranking: ShapRanking,
    correlation_vs_ranking: CorrelationVsRanking,
}

pub(super) fn explain(ctx: &Context, args: &ExplainArgs) -> Result<(), CliError> {
    let artifact = load_model(ctx, args.model.as_ref())?;
    let data = load_features(ctx, args.features.as_deref())?;
    let (attributions, ranking) = attribute(&artifact, &data)?;

    let mut csv = String::from("id,feature,feature_value,shap\n");
    for ((id, row), a) in data.ids.iter().zip(&data.rows).zip(&attributions) {
        for ((name, x), phi) in data.feature_names.iter().zip(row).zip(&a.values) {
            csv.push_str(&format!("{id},{name},{x},{phi}\n"));
        }
    }
    ctx.write("shap_values.csv", &csv)?;

    let corr = pearson_matrix(&data.feature_names, &data.rows).map_err(input_err)?;
    let proximity = correlation_vs_ranking(&corr, &ranking).map_err(explain_err)?;
    let report = ExplainReport {
        schema_version: SCHEMA_VERSION,
        model: artifact.spec.name(),
        rows: data.len(),
        base_value: attributions[0].base_value,
        ranking,
        correlation_vs_ranking: proximity,
    };
    ctx.write_json("explain.json", &report)?;
    ctx.write(
        "shap_importance.svg",
        &bar_chart(
            "Mean |SHAP| per feature",
            &report.ranking.features,
            &[("mean |SHAP|".to_string(), report.ranking.mean_abs.clone())],
            "mean |SHAP|",
        ),
    )?;

    let mut text = format!(
        "{} attributions over {} rows, base value {}\n\n",
        report.model,
        report.rows,
        num(report.base_value, 4)
    );
    let rows: Vec<Vec<String>> = report
        .ranking
        .features
        .iter()
        .zip(&report.ranking.mean_abs)
        .enumerate()
        .map(|(i, (f, v))| vec![(i + 1).to_string(), f.clone(), num(*v, 5)])
        .collect();
    text.push_str(&table(&["rank", "feature", "mean |SHAP|"], &rows));
    text.push_str(&format!(
        "\nCorrelation vs rank proximity: Kendall tau-b = {}\n",
        opt(report.correlation_vs_ranking.kendall_tau_b, 3)
    ));
    for p in report.correlation_vs_ranking.pairs.iter().take(5) {
        text.push_str(&format!(
            "  {} ~ {}: |r| = {}, rank distance {}\n",
            p.a,
            p.b,
            opt(p.abs_correlation, 3),
            p.rank_distance
        ));
    }
    ctx.write("explain.txt", &text)?;
    print!("{text}");
    Ok(())
}

#[derive(Debug, Serialize)]
struct AblationReport {
    schema_version: u32,
    model: String,
    folds: usize,
    ranking: ShapRanking,
    rows: Vec<AblationRow>,
}

pub(super) fn ablate(ctx: &Context, args: &AblateArgs) -> Result<(), CliError> {
    let artifact = load_model(ctx, args.model.as_ref())?;
    let data = load_features(ctx, args.features.as_deref())?;
    let (_, ranking) = attribute(&artifact, &data)?;
    let (train, _) = training_split(&data, artifact.test_fraction, artifact.seed)?;
    let rows = ablation_run(&train, &ranking, &artifact.spec, args.folds, seed::derive(artifact.seed, "cv"))
        .map_err(explain_err)?;
    let report = AblationReport {
        schema_version: SCHEMA_VERSION,
        model: artifact.spec.name(),
        folds: args.folds,
        ranking,
        rows,
    };
    ctx.write_json("ablation.json", &report)?;

    let scored: Vec<&AblationRow> = report.rows.iter().filter(|r| r.report.is_some()).collect();
    let labels: Vec<String> = scored.iter().map(|r| r.label.clone()).collect();
    let acc: Vec<f64> = scored.iter().map(|r| r.report.as_ref().map_or(0.0, |c| c.mean.accuracy)).collect();
    ctx.write(
        "ablation.svg",
        &bar_chart(
            "Accuracy after dropping low-ranked features",
            &labels,
            &[("accuracy".to_string(), acc)],
            "mean accuracy",
        ),
    )?;

    let mut text = format!("{} ablation, {}-fold cross-validation\n\n", report.model, report.folds);
    let mut headers = vec!["setting", "kept"];
    headers.extend(&METRIC_HEADERS[1..]);
    let table_rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.label.clone(), r.kept.len().to_string()];
            match &r.report {
                Some(cv) => row.extend(cv_row(cv).into_iter().skip(1)),
                None => row.push(r.note.clone().unwrap_or_default()),
            }
            row
        })
        .collect();
    text.push_str(&table(&headers, &table_rows));
    ctx.write("ablation.txt", &text)?;
    print!("{text}");
    Ok(())
}
