use serde::Serialize;

use super::analyze::{extract_all, load_corpus_artifact};
use super::render::num;
use super::{CliError, Context, TopicsArgs};
use crate::corpus::Label;
use crate::learn::SCHEMA_VERSION;
use crate::seed;
use crate::topics::{
    document_tokens, lda_fit, select_k, top_words_per_topic, topic_grid, AnnotatedDoc, GridAxis, KSelection, LdaParams,
};

#[derive(Debug, Serialize)]
struct ClassTopics {
    label: Label,
    n_docs: usize,
    k: usize,
    selection: Option<KSelection>,
    topics: Vec<Vec<(String, f64)>>,
}

#[derive(Debug, Serialize)]
struct GridCell {
    cell: String,
    n_docs: usize,
    topics: Option<Vec<Vec<(String, f64)>>>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct Grid {
    axis: GridAxis,
    k: usize,
    cells: Vec<GridCell>,
}

#[derive(Debug, Serialize)]
struct TopicsReport {
    schema_version: u32,
    iterations: usize,
    classes: Vec<ClassTopics>,
    grids: Vec<Grid>,
}

fn topic_err(label: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("topic model for {label}: {e}"))
}

pub(super) fn run(ctx: &Context, args: &TopicsArgs) -> Result<(), CliError> {
    let corpus = load_corpus_artifact(ctx, args.corpus.as_deref())?;
    let features = extract_all(&corpus, &ctx.lexicons);
    let docs: Vec<AnnotatedDoc> = corpus
        .records()
        .iter()
        .filter_map(|r| {
            let f = features.get(&r.id)?;
            Some(AnnotatedDoc {
                label: r.label(),
                sentiment: f.sentiment.category,
                emotion: f.emotions.dominant,
                tokens: document_tokens(&r.text, &ctx.lexicons),
            })
        })
        .collect();

    let mut classes = Vec::new();
    for label in Label::CLASSES {
        let class_docs: Vec<Vec<String>> = docs.iter().filter(|d| d.label == label).map(|d| d.tokens.clone()).collect();
        let base = LdaParams {
            iterations: args.iterations,
            ..LdaParams::new(2, seed::derive(ctx.seed, &format!("topics/{label}")))
        };
        let selection = match args.k {
            Some(_) => None,
            None => Some(
                select_k(&class_docs, &args.k_grid, args.holdout, &base).map_err(|e| topic_err(label.as_str(), e))?,
            ),
        };
        let k = args.k.or(selection.as_ref().map(|s| s.chosen)).expect("k fixed or selected");
        let model = lda_fit(&class_docs, &LdaParams { k, ..base }).map_err(|e| topic_err(label.as_str(), e))?;
        log::info!("{label}: {k} topics over {} documents", class_docs.len());
        classes.push(ClassTopics {
            label,
            n_docs: class_docs.len(),
            k,
            selection,
            topics: top_words_per_topic(&model, args.top_n),
        });
    }

    let mut grids = Vec::new();
    if !args.no_grids {
        let k = args.k.unwrap_or_else(|| classes.iter().map(|c| c.k).min().expect("two classes"));
        for axis in [GridAxis::Sentiment, GridAxis::Emotion] {
            let params = LdaParams {
                iterations: args.iterations,
                ..LdaParams::new(k, seed::derive(ctx.seed, &format!("topics/grid/{}", axis.as_str())))
            };
            let cells = topic_grid(&docs, axis, &params)
                .into_iter()
                .map(|(filter, res)| {
                    let n_docs = docs.iter().filter(|d| filter.matches(d)).count();
                    match res {
                        Ok(ct) => GridCell {
                            cell: ct.description.clone(),
                            n_docs,
                            topics: Some(top_words_per_topic(&ct.model, args.top_n)),
                            error: None,
                        },
                        Err(e) => {
                            log::warn!("{e}");
                            GridCell { cell: filter.describe(), n_docs, topics: None, error: Some(e.to_string()) }
                        }
                    }
                })
                .collect();
            grids.push(Grid { axis, k, cells });
        }
    }

    let report = TopicsReport { schema_version: SCHEMA_VERSION, iterations: args.iterations, classes, grids };
    ctx.write_json("topics.json", &report)?;
    let text = render(&report);
    ctx.write("topics.txt", &text)?;
    print!("{text}");
    Ok(())
}

fn words(topic: &[(String, f64)]) -> String {
    topic.iter().map(|(w, _)| w.as_str()).collect::<Vec<_>>().join(" ")
}

fn render(r: &TopicsReport) -> String {
    let mut out = String::new();
    for c in &r.classes {
        out.push_str(&format!("{} ({} documents, k = {})\n", c.label, c.n_docs, c.k));
        if let Some(sel) = &c.selection {
            let scores: Vec<String> = sel.scores.iter().map(|(k, ll)| format!("k={k}: {}", num(*ll, 4))).collect();
            out.push_str(&format!("  held-out log-likelihood per token: {}\n", scores.join(", ")));
        }
        for (t, topic) in c.topics.iter().enumerate() {
            out.push_str(&format!("  topic {}: {}\n", t + 1, words(topic)));
        }
        out.push('\n');
    }
    for g in &r.grids {
        out.push_str(&format!("Class x {} grid (k = {})\n", g.axis.as_str(), g.k));
        for cell in &g.cells {
            match (&cell.topics, &cell.error) {
                (Some(topics), _) => {
                    out.push_str(&format!("  {} ({} documents)\n", cell.cell, cell.n_docs));
                    for (t, topic) in topics.iter().enumerate() {
                        out.push_str(&format!("    topic {}: {}\n", t + 1, words(topic)));
                    }
                }
                (None, err) => out.push_str(&format!(
                    "  {} ({} documents): skipped, {}\n",
                    cell.cell,
                    cell.n_docs,
                    err.as_deref().unwrap_or("no model")
                )),
            }
        }
        out.push('\n');
    }
    out
}
