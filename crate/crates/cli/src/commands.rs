use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use narrative_core::analysis::{
    localization_histogram, match_class_mentions, merge_histograms, nouns_per_caption_histogram, richness_report,
    LexiconTagger, SkipCounts,
};
use narrative_core::corpus::{
    format_num, parse_boxes_jsonl, parse_narrative_line, parse_timed_words_json, parse_trace_json, serialize_narrative,
};
use narrative_core::features::{sinusoid_encoding, trace_feature_sequence};
use narrative_core::labelmap::{narrative_to_labelmap, parse_mask_library};
use narrative_core::{
    align, build_narrative, quality_gate, tokenize, AutomaticTranscript, BoundingBox, CaptionScores, Histogram2D,
    HistogramConfig, LocalizedNarrative, ManualTranscript, NarrativeMeta, QcVerdict,
};
use rayon::prelude::*;
use serde_json::json;

use crate::args::*;
use crate::{data_err, read_file, write_file, CliError};

type Out = Result<String, CliError>;

pub fn dispatch(cli: &Cli) -> Out {
    let strict = cli.strict;
    match &cli.command {
        Command::Align(a) => run_align(a),
        Command::Build(b) => run_build(b),
        Command::Qc(q) => run_qc(q, strict),
        Command::Features(f) => run_features(f, strict),
        Command::Eval(e) => run_eval(e, strict),
        Command::Stats(s) => run_stats(s, strict),
        Command::Hist(h) => run_hist(h, strict),
        Command::Labelmap(l) => run_labelmap(l, strict),
    }
}

fn load_pair(p: &PairArgs) -> Result<(AutomaticTranscript, ManualTranscript), CliError> {
    let a = parse_timed_words_json(&read_file(&p.auto)?).map_err(|e| data_err(&p.auto, e))?;
    let m = ManualTranscript::from_caption(read_file(&p.manual)?.trim());
    Ok((a, m))
}

fn check_threshold(t: f64) -> Result<(), CliError> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--threshold must be a finite value >= 0, got {t}")))
    }
}

/// Narratives of a corpus file, each with its 1-based line number.
struct Corpus {
    items: Vec<(usize, LocalizedNarrative)>,
    skipped: usize,
}

fn load_corpus(path: &Path, strict: bool) -> Result<Corpus, CliError> {
    let text = read_file(path)?;
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let parsed: Vec<_> = lines
        .par_iter()
        .map(|&(n, l)| (n, parse_narrative_line::<f64>(l, n)))
        .collect();
    let mut items = Vec::with_capacity(parsed.len());
    let mut skipped = 0;
    for (n, r) in parsed {
        match r {
            Ok(x) => items.push((n, x)),
            Err(e) if strict => return Err(data_err(path, e)),
            Err(e) => {
                eprintln!("{}: skipping {e}", path.display());
                skipped += 1;
            }
        }
    }
    Ok(Corpus { items, skipped })
}

/// Applies `f` to every narrative in parallel, keeping input order. Failures
/// abort in strict mode and are skipped (and counted) otherwise.
fn map_corpus<U, F>(path: &Path, corpus: &Corpus, strict: bool, f: F) -> Result<(Vec<U>, usize), CliError>
where
    U: Send,
    F: Fn(usize, &LocalizedNarrative) -> Result<U, CliError> + Sync,
{
    let results: Vec<_> = corpus.items.par_iter().map(|(n, x)| (*n, f(*n, x))).collect();
    let mut out = Vec::with_capacity(results.len());
    let mut skipped = corpus.skipped;
    for (n, r) in results {
        match r {
            Ok(u) => out.push(u),
            Err(e) if strict => return Err(data_err(path, format!("line {n}: {e}"))),
            Err(e) => {
                eprintln!("{}: skipping line {n}: {e}", path.display());
                skipped += 1;
            }
        }
    }
    Ok((out, skipped))
}

fn summary(cmd: &str, processed: usize, skipped: usize) {
    eprintln!("narr {cmd}: {processed} processed, {skipped} skipped");
}

fn to_json_line(v: &serde_json::Value) -> String {
    let mut s = v.to_string();
    s.push('\n');
    s
}

fn run_align(args: &PairArgs) -> Out {
    let (a, m) = load_pair(args)?;
    let mu = align(&a, &m)?;
    let pairs: Vec<_> = mu
        .assignment
        .iter()
        .zip(&mu.per_pair_cost)
        .enumerate()
        .map(|(i, (&j, &cost))| json!({"auto": i, "manual": j, "auto_word": a.words[i].text, "manual_word": m.words[j], "cost": cost}))
        .collect();
    Ok(to_json_line(&json!({
        "total_cost": mu.total_cost,
        "assignment": mu.assignment,
        "pairs": pairs,
    })))
}

fn run_build(args: &BuildArgs) -> Out {
    check_threshold(args.threshold)?;
    let (a, m) = load_pair(&args.pair)?;
    let trace = parse_trace_json(&read_file(&args.trace)?).map_err(|e| data_err(&args.trace, e))?;
    let meta = NarrativeMeta {
        dataset_id: args.dataset_id.clone(),
        image_id: args.image_id.clone(),
        annotator_id: args.annotator_id.clone(),
    };
    let n = build_narrative(&a, &m, &trace, meta, args.threshold)?;
    let qc = n.qc.as_ref().expect("build always gates");
    eprintln!(
        "narr build: qc {} (normalized distance {}, threshold {})",
        if qc.pass { "pass" } else { "fail" },
        format_num(qc.normalized_distance),
        format_num(qc.threshold)
    );
    let mut line = serialize_narrative(&n)?;
    line.push('\n');
    Ok(line)
}

fn verdict_json(v: &QcVerdict) -> serde_json::Value {
    json!({
        "raw_distance": v.raw_distance,
        "normalized_distance": v.normalized_distance,
        "threshold": v.threshold,
        "pass": v.pass,
        "reason": v.reason.map(|r| r.as_str()),
    })
}

fn run_qc(args: &QcArgs, strict: bool) -> Out {
    check_threshold(args.threshold)?;
    if let (Some(auto), Some(manual)) = (&args.auto, &args.manual) {
        let (a, m) = load_pair(&PairArgs { auto: auto.clone(), manual: manual.clone() })?;
        return Ok(to_json_line(&verdict_json(&quality_gate(&a, &m, args.threshold)?)));
    }
    let path = args.corpus.as_ref().expect("clap enforces --corpus or --auto");
    let corpus = load_corpus(path, strict)?;
    let (regated, skipped) = map_corpus(path, &corpus, strict, |_, n| {
        let mut n = n.clone();
        if let Some(qc) = n.qc.as_mut() {
            qc.threshold = args.threshold;
            qc.pass = qc.reason.is_none() && qc.normalized_distance <= args.threshold;
        }
        Ok(n)
    })?;
    let (mut pass, mut fail, mut ungated) = (0, 0, 0);
    let mut out = String::new();
    for n in &regated {
        match &n.qc {
            Some(qc) if qc.pass => pass += 1,
            Some(_) => fail += 1,
            None => ungated += 1,
        }
        if args.pass_only && !n.qc.as_ref().is_some_and(|q| q.pass) {
            continue;
        }
        out.push_str(&serialize_narrative(n)?);
        out.push('\n');
    }
    eprintln!("narr qc: {pass} pass, {fail} fail, {ungated} without verdict");
    summary("qc", regated.len(), skipped);
    Ok(out)
}

fn run_features(args: &FeaturesArgs, strict: bool) -> Out {
    if !(args.segment_duration > 0.0 && args.segment_duration.is_finite()) {
        return Err(CliError::Usage("--segment-duration must be positive".into()));
    }
    if !(args.delta >= 0.0 && args.delta.is_finite()) {
        return Err(CliError::Usage("--delta must be >= 0".into()));
    }
    if !args.sinusoid_dim.is_multiple_of(2) {
        return Err(CliError::Usage("--sinusoid-dim must be even".into()));
    }
    let corpus = load_corpus(&args.corpus, strict)?;
    let (records, skipped) = map_corpus(&args.corpus, &corpus, strict, |_, n| {
        let boxes = trace_feature_sequence(&n.traces, args.segment_duration, args.delta)?;
        let mut s = String::from("{");
        for (key, val) in [("dataset_id", &n.dataset_id), ("image_id", &n.image_id), ("annotator_id", &n.annotator_id)] {
            let _ = write!(s, "\"{key}\":{},", serde_json::to_string(val).expect("string"));
        }
        let _ = write!(
            s,
            "\"segment_duration\":{},\"delta\":{},\"boxes\":[",
            format_num(args.segment_duration),
            format_num(args.delta)
        );
        push_rows(&mut s, boxes.iter().map(|b| b.to_array().to_vec()));
        s.push(']');
        if args.sinusoid_dim > 0 {
            s.push_str(",\"time_encoding\":[");
            let enc = (0..boxes.len())
                .map(|k| sinusoid_encoding::<f64>(k, args.sinusoid_dim))
                .collect::<Result<Vec<_>, _>>()?;
            push_rows(&mut s, enc.into_iter());
            s.push(']');
        }
        s.push_str("}\n");
        Ok(s)
    })?;
    summary("features", records.len(), skipped);
    Ok(records.concat())
}

fn push_rows(s: &mut String, rows: impl Iterator<Item = Vec<f64>>) {
    for (k, row) in rows.enumerate() {
        if k > 0 {
            s.push(',');
        }
        s.push('[');
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&format_num(*v));
        }
        s.push(']');
    }
}

fn scores_json(s: &CaptionScores) -> serde_json::Value {
    json!({"rouge_l": s.rouge_l, "rouge_1_f1": s.rouge_1_f1, "bleu1": s.bleu1, "bleu4": s.bleu4})
}

fn run_eval(args: &EvalArgs, strict: bool) -> Out {
    let preds = load_corpus(&args.pred, strict)?;
    let refs = load_corpus(&args.reference, strict)?;
    let mut by_image: HashMap<&str, &str> = HashMap::new();
    for (_, r) in &refs.items {
        by_image.entry(r.image_id.as_str()).or_insert(r.caption.as_str());
    }
    let mut matched = Vec::new();
    let mut unmatched = Vec::new();
    for (_, p) in &preds.items {
        match by_image.get(p.image_id.as_str()) {
            Some(&r) => matched.push((p.image_id.as_str(), p.caption.as_str(), r)),
            None => unmatched.push(p.image_id.as_str()),
        }
    }
    for id in &unmatched {
        eprintln!("narr eval: no reference for image `{id}`");
    }
    let rows: Vec<(&str, CaptionScores)> = matched
        .par_iter()
        .map(|&(id, c, r)| (id, CaptionScores::compute(&tokenize(c), &tokenize(r))))
        .collect();
    let scores: Vec<CaptionScores> = rows.iter().map(|(_, s)| *s).collect();
    let mean = CaptionScores::mean(&scores)
        .ok_or_else(|| CliError::Data("no prediction shares an image_id with the references".into()))?;

    let width = rows.iter().map(|(id, _)| id.len()).max().unwrap_or(0).max("image_id".len());
    let mut out = format!("{:<width$}  {:>8}  {:>10}  {:>8}  {:>8}\n", "image_id", "rouge_l", "rouge_1_f1", "bleu1", "bleu4");
    let mut line = |id: &str, s: &CaptionScores| {
        let _ = writeln!(
            out,
            "{id:<width$}  {:>8.4}  {:>10.4}  {:>8.4}  {:>8.4}",
            s.rouge_l, s.rouge_1_f1, s.bleu1, s.bleu4
        );
    };
    for (id, s) in &rows {
        line(id, s);
    }
    line("mean", &mean);

    if let Some(path) = &args.json {
        let images: Vec<_> = rows
            .iter()
            .map(|(id, s)| {
                let mut v = scores_json(s);
                v["image_id"] = json!(id);
                v
            })
            .collect();
        let record = json!({"count": rows.len(), "mean": scores_json(&mean), "images": images, "unmatched": unmatched});
        write_file(path, to_json_line(&record).as_bytes())?;
    }
    summary("eval", rows.len(), preds.skipped + refs.skipped + unmatched.len());
    Ok(out)
}

fn run_stats(args: &StatsArgs, strict: bool) -> Out {
    let corpus = load_corpus(&args.corpus, strict)?;
    let captions: Vec<&str> = corpus.items.iter().map(|(_, n)| n.caption.as_str()).collect();
    let report = richness_report(&captions, &LexiconTagger)?;
    let nouns = nouns_per_caption_histogram(&captions, &LexiconTagger);
    let pass = corpus.items.iter().filter(|(_, n)| n.qc.as_ref().is_some_and(|q| q.pass)).count();
    let gated = corpus.items.iter().filter(|(_, n)| n.qc.is_some()).count();

    let mut out = String::new();
    let fields = [
        ("mean_words", report.mean_words),
        ("mean_nouns", report.mean_nouns),
        ("mean_pronouns", report.mean_pronouns),
        ("mean_adjectives", report.mean_adjectives),
        ("mean_adpositions", report.mean_adpositions),
        ("mean_verbs", report.mean_verbs),
    ];
    let _ = writeln!(out, "captions\t{}", report.captions);
    for (k, v) in fields {
        let _ = writeln!(out, "{k}\t{v:.4}");
    }
    let _ = writeln!(out, "qc_pass\t{pass}\nqc_fail\t{}", gated - pass);
    out.push_str("nouns_per_caption\n");
    for (k, c) in &nouns {
        let _ = writeln!(out, "  {k}\t{c}");
    }
    if let Some(path) = &args.json {
        let mut record = serde_json::Map::new();
        record.insert("captions".into(), json!(report.captions));
        for (k, v) in fields {
            record.insert(k.into(), json!(v));
        }
        record.insert("qc_pass".into(), json!(pass));
        record.insert("qc_fail".into(), json!(gated - pass));
        let hist: BTreeMap<String, u64> = nouns.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        record.insert("nouns_per_caption".into(), json!(hist));
        write_file(path, to_json_line(&serde_json::Value::Object(record)).as_bytes())?;
    }
    summary("stats", corpus.items.len(), corpus.skipped);
    Ok(out)
}

fn run_hist(args: &HistArgs, strict: bool) -> Out {
    if !(args.extent > 0.0 && args.extent.is_finite()) || args.bins == 0 {
        return Err(CliError::Usage("--extent must be positive and --bins non-zero".into()));
    }
    let boxes_text = read_file(&args.boxes)?;
    let boxes = parse_boxes_jsonl::<f64, _>(boxes_text.as_bytes()).map_err(|e| data_err(&args.boxes, e))?;
    let mut by_image: HashMap<String, Vec<BoundingBox>> = HashMap::new();
    for b in boxes {
        by_image.entry(b.image_id).or_default().push(b.bbox);
    }
    let classes: Vec<String> = if args.classes.is_empty() {
        let mut all: Vec<String> = by_image
            .values()
            .flatten()
            .filter_map(|b| b.class_name.clone())
            .collect();
        all.sort();
        all.dedup();
        all
    } else {
        args.classes.iter().map(|c| c.trim().to_lowercase()).filter(|c| !c.is_empty()).collect()
    };
    let config = HistogramConfig {
        x_range: (-args.extent, args.extent),
        y_range: (-args.extent, args.extent),
        bins: args.bins,
    };
    let corpus = load_corpus(&args.corpus, strict)?;
    let no_boxes = Vec::new();
    let (parts, skipped) = map_corpus(&args.corpus, &corpus, strict, |_, n| {
        let mentions = match_class_mentions(n, &classes);
        let boxes = by_image.get(&n.image_id).unwrap_or(&no_boxes);
        Ok(localization_histogram(&mentions, boxes, config)?)
    })?;
    let mut hist = Histogram2D::new(config)?;
    let mut skips = SkipCounts::default();
    for (h, s) in &parts {
        hist = merge_histograms(&hist, h)?;
        skips = skips + *s;
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        "# bins {} range [{}, {}]; rows v low to high, columns u low to high",
        hist.bins, -args.extent, args.extent
    );
    let _ = writeln!(
        out,
        "# total {} out_of_range {} within_box {}",
        hist.total, hist.out_of_range, hist.within_box
    );
    let _ = writeln!(
        out,
        "# skipped mentions: no_box {} empty_segment {} degenerate_box {}",
        skips.no_box, skips.empty_segment, skips.degenerate_box
    );
    for row in hist.counts.chunks(hist.bins) {
        let cells: Vec<String> = row.iter().map(u64::to_string).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    if let Some(path) = &args.json {
        let rows: Vec<&[u64]> = hist.counts.chunks(hist.bins).collect();
        let record = json!({
            "bins": hist.bins,
            "x_range": [hist.x_range.0, hist.x_range.1],
            "y_range": [hist.y_range.0, hist.y_range.1],
            "counts": rows,
            "total": hist.total,
            "out_of_range": hist.out_of_range,
            "within_box": hist.within_box,
            "skipped": {"no_box": skips.no_box, "empty_segment": skips.empty_segment, "degenerate_box": skips.degenerate_box},
        });
        write_file(path, to_json_line(&record).as_bytes())?;
    }
    summary("hist", parts.len(), skipped);
    Ok(out)
}

fn run_labelmap(args: &LabelmapArgs, strict: bool) -> Out {
    if args.width == 0 || args.height == 0 {
        return Err(CliError::Usage("--width and --height must be positive".into()));
    }
    let lib_text = read_file(&args.library)?;
    let lib = parse_mask_library(lib_text.as_bytes()).map_err(|e| data_err(&args.library, e))?;
    let classes: Vec<String> = lib.class_names().map(str::to_string).collect();
    std::fs::create_dir_all(&args.out_dir).map_err(|e| data_err(&args.out_dir, e))?;
    let corpus = load_corpus(&args.corpus, strict)?;
    let (rows, skipped) = map_corpus(&args.corpus, &corpus, strict, |line, n| {
        let outcome = narrative_to_labelmap(n, &classes, &lib, args.width, args.height)?;
        let mut pgm = Vec::new();
        outcome.map.write_pgm(&mut pgm).map_err(|e| CliError::Data(e.to_string()))?;
        write_file(&args.out_dir.join(format!("{line}.pgm")), &pgm)?;
        write_file(&args.out_dir.join(format!("{line}.legend.tsv")), outcome.map.legend().as_bytes())?;
        Ok(format!(
            "{line}\t{}\t{}\t{}\n",
            n.image_id,
            outcome.steps.len(),
            outcome.map.labelled_count()
        ))
    })?;
    summary("labelmap", rows.len(), skipped);
    Ok(format!("line\timage_id\tpastes\tlabelled_cells\n{}", rows.concat()))
}
