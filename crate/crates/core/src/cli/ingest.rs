use std::collections::BTreeMap;

use serde::Serialize;

use super::render::table;
use super::{input_err, CliError, Context, FormatArg, IngestArgs};
use crate::corpus::{clean_text, load_corpus, Corpus, Format, Label};
use crate::learn::{SkipEntry, SCHEMA_VERSION};

#[derive(Debug, Serialize)]
struct IngestSummary {
    schema_version: u32,
    input: String,
    records: usize,
    class_counts: BTreeMap<Label, usize>,
    /// Misleading over Non-Misleading count.
    class_ratio: Option<f64>,
    skipped: Vec<SkipEntry>,
}

pub(super) fn run(ctx: &Context, args: &IngestArgs) -> Result<(), CliError> {
    let format = match args.format {
        Some(FormatArg::Jsonl) => Format::Jsonl,
        Some(FormatArg::Csv) => Format::Csv,
        None => Format::from_path(&args.input),
    };
    let corpus =
        load_corpus(&args.input, format).map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))?;

    let mut kept = Vec::new();
    let mut skipped = Vec::new();
    for rec in corpus.records() {
        match clean_text(&rec.text) {
            Ok(_) => kept.push(rec.clone()),
            Err(e) => {
                log::warn!("skipping tweet {}: {e}", rec.id);
                skipped.push(SkipEntry { id: rec.id.clone(), reason: e.to_string() });
            }
        }
    }
    let corpus = Corpus::new(kept).map_err(input_err)?;
    ctx.write("corpus.jsonl", &corpus.to_jsonl())?;

    let (m, nm) = (corpus.count(Label::Misleading), corpus.count(Label::NonMisleading));
    let summary = IngestSummary {
        schema_version: SCHEMA_VERSION,
        input: args.input.display().to_string(),
        records: corpus.len(),
        class_counts: corpus.class_counts().clone(),
        class_ratio: (nm > 0).then(|| m as f64 / nm as f64),
        skipped,
    };
    ctx.write_json("ingest_summary.json", &summary)?;

    let rows: Vec<Vec<String>> = summary.class_counts.iter().map(|(l, c)| vec![l.to_string(), c.to_string()]).collect();
    let mut text = format!("Ingested {} records from {}\n\n", summary.records, summary.input);
    text.push_str(&table(&["class", "records"], &rows));
    if !summary.skipped.is_empty() {
        text.push_str(&format!("\nSkipped {} records:\n", summary.skipped.len()));
        for s in &summary.skipped {
            text.push_str(&format!("  {}: {}\n", s.id, s.reason));
        }
    }
    ctx.write("ingest_summary.txt", &text)?;
    print!("{text}");
    Ok(())
}
