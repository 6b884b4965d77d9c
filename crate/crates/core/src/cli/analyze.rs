use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::render::{bar_chart, num, opt, table};
use super::{input_err, read_upstream, AnalyzeArgs, CliError, Context};
use crate::affect::{Emotion, SentimentCategory};
use crate::corpus::{parse_jsonl, vaccine_mentions, Corpus, Label};
use crate::learn::{build_feature_matrix, SkipEntry, TweetFeatures, FEATURE_NAMES, SCHEMA_VERSION};
use crate::lexicon::Lexicons;
use crate::stats::{
    fleiss_kappa, hashtag_report, ks_two_sample, lower_median, mean, pearson_matrix, visibility_summary,
    word_frequencies, word_rank_agreement, ClassVisibility, CorrelationMatrix, HashtagReport, KappaResult,
    WordAgreement,
};

/// Columns compared between classes: the syntactic counts plus TTR.
const KS_COLUMNS: usize = 11;

pub(super) fn load_corpus_artifact(ctx: &Context, path: Option<&Path>) -> Result<Corpus, CliError> {
    let path = path.map_or_else(|| ctx.path("corpus.jsonl"), Path::to_path_buf);
    let text = read_upstream(&path, "corpus", "ingest")?;
    parse_jsonl(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Per-tweet features for every labeled record that survives extraction.
pub(super) fn extract_all(corpus: &Corpus, lexicons: &Lexicons) -> BTreeMap<String, TweetFeatures> {
    corpus
        .records()
        .par_iter()
        .filter(|r| r.label().is_labeled())
        .filter_map(|r| match TweetFeatures::extract(r, lexicons) {
            Ok(f) => Some((r.id.clone(), f)),
            Err(e) => {
                log::warn!("feature extraction failed for {}: {e}", r.id);
                None
            }
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct KsRow {
    feature: String,
    d: f64,
    p_value: f64,
    median_misleading: Option<f64>,
    median_non_misleading: Option<f64>,
    mean_misleading: Option<f64>,
    mean_non_misleading: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ClassDistribution {
    label: Label,
    n: usize,
    /// Share of tweets per sentiment category.
    sentiment: BTreeMap<SentimentCategory, f64>,
    /// Share of tweets per dominant emotion; "none" when no emotion word occurs.
    dominant_emotion: BTreeMap<String, f64>,
    /// Mean normalized score per emotion.
    mean_emotion_scores: BTreeMap<Emotion, f64>,
    /// Tweets mentioning each vaccine.
    vaccine_mentions: BTreeMap<String, usize>,
}

#[derive(Debug, Serialize)]
struct AnalyzeReport {
    schema_version: u32,
    n_rows: usize,
    skipped: Vec<SkipEntry>,
    ks: Vec<KsRow>,
    classes: Vec<ClassDistribution>,
    top_words: BTreeMap<Label, Vec<(String, u64)>>,
    word_agreement: WordAgreement,
    hashtags: HashtagReport,
    visibility: Option<Vec<ClassVisibility>>,
    annotator_agreement: Option<KappaResult>,
}

#[derive(Debug, Serialize)]
struct CorrelationReport {
    schema_version: u32,
    matrix: CorrelationMatrix,
}

fn share_map<K: Ord>(counts: BTreeMap<K, usize>, n: usize) -> BTreeMap<K, f64> {
    counts.into_iter().map(|(k, c)| (k, c as f64 / n as f64)).collect()
}

fn read_ratings(path: &Path) -> Result<Vec<Vec<u64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            rec.iter()
                .map(|v| {
                    v.parse::<u64>()
                        .map_err(|_| CliError::Input(format!("{} line {}: bad count {v:?}", path.display(), i + 2)))
                })
                .collect()
        })
        .collect()
}

pub(super) fn run(ctx: &Context, args: &AnalyzeArgs) -> Result<(), CliError> {
    let corpus = load_corpus_artifact(ctx, args.corpus.as_deref())?;
    for label in Label::CLASSES {
        if corpus.count(label) == 0 {
            return Err(CliError::Input(format!("class {label} has no tweets; both classes are needed")));
        }
    }
    let lex = &ctx.lexicons;
    let features = extract_all(&corpus, lex);
    let build = build_feature_matrix(&corpus, &features).map_err(input_err)?;
    let data = &build.dataset;
    ctx.write("features.csv", &data.to_csv())?;

    let mut ks = Vec::with_capacity(KS_COLUMNS);
    for (j, name) in FEATURE_NAMES.iter().take(KS_COLUMNS).enumerate() {
        let (mut m, mut nm) = (Vec::new(), Vec::new());
        for (row, &y) in data.rows.iter().zip(&data.labels) {
            if y {
                m.push(row[j])
            } else {
                nm.push(row[j])
            }
        }
        let res = ks_two_sample(&m, &nm).map_err(|e| CliError::Input(format!("KS test on {name}: {e}")))?;
        ks.push(KsRow {
            feature: name.to_string(),
            d: res.d,
            p_value: res.p_value,
            median_misleading: lower_median(&m),
            median_non_misleading: lower_median(&nm),
            mean_misleading: mean(&m),
            mean_non_misleading: mean(&nm),
        });
    }

    let vaccines = lex.vaccines.canonical_names();
    let mut classes = Vec::new();
    let mut emotion_csv = String::from("id,label,happiness,fear,anger,surprise,sadness,dominant\n");
    for label in Label::CLASSES {
        let members: Vec<_> = corpus.of_class(label).filter(|r| features.contains_key(&r.id)).collect();
        let n = members.len();
        if n == 0 {
            return Err(CliError::Input(format!("class {label} has no tweets with extractable features")));
        }
        let mut sentiment: BTreeMap<SentimentCategory, usize> =
            SentimentCategory::ALL.iter().map(|c| (*c, 0)).collect();
        let mut dominant: BTreeMap<String, usize> =
            Emotion::COLUMNS.iter().map(|e| (e.to_string(), 0)).chain([("none".to_string(), 0)]).collect();
        let mut score_sums = [0.0; 5];
        let mut mentions: BTreeMap<String, usize> = vaccines.iter().map(|v| (v.clone(), 0)).collect();
        for r in &members {
            let f = &features[&r.id];
            *sentiment.entry(f.sentiment.category).or_insert(0) += 1;
            let dom = f.emotions.dominant.map_or("none".to_string(), |e| e.to_string());
            *dominant.entry(dom.clone()).or_insert(0) += 1;
            for (s, v) in score_sums.iter_mut().zip(f.emotions.scores) {
                *s += v;
            }
            for v in vaccine_mentions(&r.text, &lex.vaccines) {
                *mentions.entry(v).or_insert(0) += 1;
            }
            let scores: Vec<String> = f.emotions.scores.iter().map(f64::to_string).collect();
            emotion_csv.push_str(&format!("{},{},{},{dom}\n", csv_field(&r.id), label.short(), scores.join(",")));
        }
        classes.push(ClassDistribution {
            label,
            n,
            sentiment: share_map(sentiment, n),
            dominant_emotion: share_map(dominant, n),
            mean_emotion_scores: Emotion::COLUMNS.iter().zip(score_sums).map(|(e, s)| (*e, s / n as f64)).collect(),
            vaccine_mentions: mentions,
        });
    }
    ctx.write("emotion_scores.csv", &emotion_csv)?;

    let freq_m = word_frequencies(&corpus, Label::Misleading, lex);
    let freq_nm = word_frequencies(&corpus, Label::NonMisleading, lex);
    let word_agreement = word_rank_agreement(&freq_m, &freq_nm, args.top_words);
    let top_words: BTreeMap<Label, Vec<(String, u64)>> =
        [(Label::Misleading, &freq_m), (Label::NonMisleading, &freq_nm)]
            .into_iter()
            .map(|(l, f)| (l, crate::stats::rank_words(f).into_iter().take(args.top_words).collect()))
            .collect();

    let visibility = match visibility_summary(&corpus) {
        Ok(v) => Some(v),
        Err(e) => {
            log::warn!("visibility summary skipped: {e}");
            None
        }
    };
    let annotator_agreement = match &args.ratings {
        Some(path) => {
            let counts = read_ratings(path)?;
            Some(fleiss_kappa(&counts).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?)
        }
        None => None,
    };

    let report = AnalyzeReport {
        schema_version: SCHEMA_VERSION,
        n_rows: data.len(),
        skipped: build.skipped.clone(),
        ks,
        classes,
        top_words,
        word_agreement,
        hashtags: hashtag_report(&corpus),
        visibility,
        annotator_agreement,
    };
    ctx.write_json("analyze.json", &report)?;

    let matrix = pearson_matrix(&data.feature_names, &data.rows).map_err(input_err)?;
    for w in &matrix.warnings {
        log::warn!("{w}");
    }
    ctx.write_json("correlation.json", &CorrelationReport { schema_version: SCHEMA_VERSION, matrix })?;

    write_charts(ctx, &report)?;
    let text = render(&report);
    ctx.write("analyze.txt", &text)?;
    print!("{text}");
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_charts(ctx: &Context, report: &AnalyzeReport) -> Result<(), CliError> {
    let sentiment_cats: Vec<String> = SentimentCategory::ALL.iter().map(|c| c.as_str().to_string()).collect();
    let series: Vec<(String, Vec<f64>)> = report
        .classes
        .iter()
        .map(|c| (c.label.to_string(), SentimentCategory::ALL.iter().map(|s| c.sentiment[s]).collect()))
        .collect();
    ctx.write("sentiment.svg", &bar_chart("Sentiment by class", &sentiment_cats, &series, "share of tweets"))?;

    let emotion_cats: Vec<String> = Emotion::COLUMNS.iter().map(|e| e.to_string()).collect();
    let series: Vec<(String, Vec<f64>)> = report
        .classes
        .iter()
        .map(|c| (c.label.to_string(), emotion_cats.iter().map(|e| c.dominant_emotion[e]).collect()))
        .collect();
    ctx.write("emotion.svg", &bar_chart("Dominant emotion by class", &emotion_cats, &series, "share of tweets"))
}

fn render(r: &AnalyzeReport) -> String {
    let mut out = format!("Feature matrix: {} rows, {} skipped\n\n", r.n_rows, r.skipped.len());

    out.push_str("Kolmogorov-Smirnov, misleading vs non-misleading\n");
    let rows: Vec<Vec<String>> =
        r.ks.iter()
            .map(|k| {
                vec![
                    k.feature.clone(),
                    num(k.d, 4),
                    format!("{:.3e}", k.p_value),
                    opt(k.median_misleading, 3),
                    opt(k.median_non_misleading, 3),
                    opt(k.mean_misleading, 3),
                    opt(k.mean_non_misleading, 3),
                ]
            })
            .collect();
    out.push_str(&table(&["feature", "D", "p-value", "median M", "median NM", "mean M", "mean NM"], &rows));

    out.push_str("\nSentiment share\n");
    let rows: Vec<Vec<String>> = r
        .classes
        .iter()
        .map(|c| {
            let mut row = vec![c.label.to_string()];
            row.extend(SentimentCategory::ALL.iter().map(|s| format!("{:.1}%", 100.0 * c.sentiment[s])));
            row
        })
        .collect();
    out.push_str(&table(&["class", "positive", "negative", "neutral"], &rows));

    out.push_str("\nDominant emotion share\n");
    let mut headers = vec!["class"];
    headers.extend(Emotion::COLUMNS.iter().map(|e| e.as_str()));
    headers.push("none");
    let rows: Vec<Vec<String>> = r
        .classes
        .iter()
        .map(|c| {
            let mut row = vec![c.label.to_string()];
            row.extend(headers[1..].iter().map(|e| format!("{:.1}%", 100.0 * c.dominant_emotion[*e])));
            row
        })
        .collect();
    out.push_str(&table(&headers, &rows));

    out.push_str("\nMean emotion scores\n");
    let rows: Vec<Vec<String>> = r
        .classes
        .iter()
        .map(|c| {
            let mut row = vec![c.label.to_string()];
            row.extend(c.mean_emotion_scores.values().map(|v| num(*v, 4)));
            row
        })
        .collect();
    let mut headers = vec!["class"];
    headers.extend(r.classes[0].mean_emotion_scores.keys().map(|e| e.as_str()));
    out.push_str(&table(&headers, &rows));

    out.push_str(&format!(
        "\nTop-word rank agreement (top {} per class, {} words): Kendall tau-b = {}\n",
        r.word_agreement.k,
        r.word_agreement.words.len(),
        opt(r.word_agreement.kendall_tau_b, 3)
    ));
    for (label, words) in &r.top_words {
        let list: Vec<String> = words.iter().take(15).map(|(w, c)| format!("{w} ({c})")).collect();
        out.push_str(&format!("  {label}: {}\n", list.join(", ")));
    }

    out.push_str("\nHashtags\n");
    for c in &r.hashtags.classes {
        let unique: Vec<String> = c.unique.iter().take(10).map(|(t, n)| format!("#{t} ({n})")).collect();
        let co: Vec<String> = c
            .co_hashtags
            .iter()
            .filter(|p| p.repeated)
            .take(5)
            .map(|p| format!("#{} + #{} ({})", p.pair.0, p.pair.1, p.count))
            .collect();
        out.push_str(&format!("  {}: {} distinct\n", c.label, c.distinct_hashtags));
        out.push_str(&format!("    unique: {}\n", if unique.is_empty() { "-".into() } else { unique.join(", ") }));
        out.push_str(&format!("    repeated pairs: {}\n", if co.is_empty() { "-".into() } else { co.join(", ") }));
    }

    out.push_str("\nVaccine mentions (tweets)\n");
    let names: Vec<&String> = r.classes[0].vaccine_mentions.keys().collect();
    let rows: Vec<Vec<String>> = names
        .iter()
        .map(|v| {
            let mut row = vec![v.to_string()];
            row.extend(r.classes.iter().map(|c| c.vaccine_mentions[*v].to_string()));
            row
        })
        .collect();
    out.push_str(&table(&["vaccine", "misleading", "non-misleading"], &rows));

    if let Some(vis) = &r.visibility {
        out.push_str("\nVisibility (median / mean)\n");
        let rows: Vec<Vec<String>> = vis
            .iter()
            .map(|v| {
                let cell = |f: &crate::stats::FieldSummary| format!("{} / {}", opt(f.median, 1), opt(f.mean, 2));
                vec![v.label.to_string(), cell(&v.retweets), cell(&v.replies), cell(&v.likes)]
            })
            .collect();
        out.push_str(&table(&["class", "retweets", "replies", "likes"], &rows));
    }
    if let Some(k) = &r.annotator_agreement {
        out.push_str(&format!("\nFleiss' kappa: {}\n", num(k.kappa, 3)));
    }
    out
}
