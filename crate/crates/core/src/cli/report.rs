use std::fs;

use super::{check_sidecar, input_err, CliError, Context};

/// Report sections in pipeline order: (title, text file, json sidecar).
const SECTIONS: [(&str, &str, &str); 6] = [
    ("Corpus", "ingest_summary.txt", "ingest_summary.json"),
    ("Feature analysis", "analyze.txt", "analyze.json"),
    ("Topics", "topics.txt", "topics.json"),
    ("Classification", "train.txt", "train.json"),
    ("Explanations", "explain.txt", "explain.json"),
    ("Ablation", "ablation.txt", "ablation.json"),
];

pub(super) fn run(ctx: &Context) -> Result<(), CliError> {
    let mut out = String::from("# vaxlens report\n");
    let mut found = 0;
    for (title, txt, json) in SECTIONS {
        let path = ctx.path(txt);
        if !path.exists() {
            log::info!("no {txt}; section {title:?} omitted");
            continue;
        }
        check_sidecar(&ctx.path(json))?;
        let body = fs::read_to_string(&path).map_err(input_err)?;
        out.push_str(&format!("\n## {title}\n\n```text\n{}\n```\n", body.trim_end()));
        found += 1;
    }
    if found == 0 {
        return Err(CliError::Precondition(format!(
            "no reports found in {}; run the pipeline subcommands first",
            ctx.out.display()
        )));
    }
    ctx.write("report.md", &out)?;
    println!("wrote {} sections to {}", found, ctx.path("report.md").display());
    Ok(())
}
