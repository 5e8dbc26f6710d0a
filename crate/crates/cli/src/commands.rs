use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use dialectkit::analysis::{
    cluster_dialects, count_terms, default_groups, read_valence_csv, top_valence_words, valence_vectors,
    write_valence_csv, RankedTerm, MSA_GROUP,
};
use dialectkit::evalkit::{evaluate, PredictionRow, RegionMap};
use dialectkit::fixture::{
    cascade_fixture, dialect_corpus, variant_corpus, CascadeFixtureConfig, DialectCorpusConfig, VariantCorpusConfig,
};
use dialectkit::gazetteer::Gazetteer;
use dialectkit::lintext::{self, load_model, Preset};
use dialectkit::pipeline::{run_cascade, write_corpus_tsv, CascadeConfig, ModelClassifier, ObsceneLexicon};
use dialectkit::records::{read_jsonl, read_labeled_tsv, write_tsv_row, LabeledText, TweetRecord, UserProfile};
use dialectkit::textnorm::{normalize_tweet, NormalizationConfig};
use dialectkit::weaklabel::{balance_classes, build_weak_corpus, holdout_split, write_weak_tsv, VariantLabel};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{input_path, output_path, RunConfig};
use crate::{
    ClusterArgs, EvalArgs, FilterArgs, FixtureArgs, FixtureKind, NormalizeArgs, TrainArgs, ValenceArgs,
    WeaklabelArgs, Invalid,
};

type Result<T> = anyhow::Result<T>;

/// Tags an error as a validation failure about `what`.
fn invalid<E: std::fmt::Display>(what: impl std::fmt::Display) -> impl FnOnce(E) -> anyhow::Error {
    move |e| Invalid(format!("{what}: {e}")).into()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    body(&mut w).and_then(|_| w.flush()).with_context(|| format!("writing {}", path.display()))
}

fn pretty_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn read_labeled(path: &Path, field: &str) -> Result<Vec<LabeledText>> {
    read_labeled_tsv(open(path)?).map_err(invalid(format!("`paths.{field}` {}", path.display())))
}

/// Reads a JSONL stream, skipping rows that fail to parse; returns the
/// rows and the number skipped.
fn read_rows<T>(path: &Path) -> Result<(Vec<T>, usize)>
where
    T: serde::de::DeserializeOwned + dialectkit::records::Validate,
{
    let mut rows = Vec::new();
    let mut malformed = 0;
    for row in read_jsonl::<_, T>(open(path)?) {
        match row {
            Ok(r) => rows.push(r),
            Err(dialectkit::records::RecordError::Io { line, source }) => {
                return Err(anyhow::Error::new(source).context(format!("{} line {line}", path.display())));
            }
            Err(_) => malformed += 1,
        }
    }
    Ok((rows, malformed))
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

pub fn normalize(cfg: &RunConfig, a: NormalizeArgs) -> Result<Value> {
    let mut norm = cfg.normalize;
    norm.replace_relative_pronouns |= a.mask_pronouns;
    norm.replace_mentions &= !a.keep_mentions;
    norm.replace_urls &= !a.keep_urls;
    norm.replace_digits &= !a.keep_digits;
    norm.replace_emoji &= !a.keep_emoji;
    norm.replace_newlines &= !a.keep_newlines;
    norm.segment_hashtags &= !a.keep_hashtags;
    let input = input_path(&Some(a.input), &None, "input")?;
    let lines: Vec<String> = open(&input)?
        .lines()
        .collect::<std::io::Result<_>>()
        .with_context(|| format!("reading {}", input.display()))?;
    let out: Vec<String> = lines.par_iter().map(|l| normalize_tweet(l, &norm)).collect();
    write_file(&a.output, |w| out.iter().try_for_each(|l| writeln!(w, "{l}")))?;
    Ok(json!({"lines": out.len(), "output": path_str(&a.output)}))
}

pub fn weaklabel(cfg: &RunConfig, a: WeaklabelArgs) -> Result<Value> {
    let tweets = input_path(&a.tweets, &cfg.paths.tweets, "tweets")?;
    let output = output_path(&a.output, &cfg.paths.output_dir, "weak.tsv", "--output")?;
    let balance = a.balance || cfg.weaklabel.balance;
    let holdout = a.holdout_per_class.unwrap_or(cfg.weaklabel.holdout_per_class);
    let norm = NormalizationConfig {
        replace_relative_pronouns: true,
        ..cfg.normalize
    };
    let rows = read_jsonl::<_, TweetRecord>(open(&tweets)?);
    let (mut records, stats) = build_weak_corpus(rows, norm).map_err(invalid("weaklabel"))?;
    if balance {
        records = balance_classes(records, cfg.seed);
    }
    let mut summary = json!({"stats": stats, "balanced": balance});
    if holdout > 0 {
        let test_out = output_path(&a.holdout_output, &cfg.paths.output_dir, "weak.test.tsv", "--holdout-output")?;
        let (train, test) = holdout_split(records, holdout, cfg.seed);
        write_file(&test_out, |w| write_weak_tsv(w, &test))?;
        summary["holdout"] = json!({"records": test.len(), "output": path_str(&test_out)});
        records = train;
    }
    write_file(&output, |w| write_weak_tsv(w, &records))?;
    let msa = records.iter().filter(|r| r.label == VariantLabel::Msa).count();
    summary["records"] = json!({"MSA": msa, "DA": records.len() - msa});
    summary["output"] = json!(path_str(&output));
    Ok(summary)
}

pub fn train(cfg: &RunConfig, a: TrainArgs) -> Result<Value> {
    let preset: Preset = a
        .preset
        .map(Preset::from)
        .or(cfg.train.preset)
        .ok_or_else(|| Invalid("missing `train.preset` (or --preset): expected msa-da, c37 or cw26".into()))?;
    let corpus_path = input_path(&a.corpus, &cfg.paths.corpus, "corpus")?;
    let model_out = output_path(&a.model_out, &cfg.paths.output_dir, &format!("{preset}.qdlm"), "--model-out")?;

    let t = &cfg.train;
    let mut features = preset.feature_config();
    let mut tc = preset.train_config();
    tc.seed = cfg.seed;
    if let Some(v) = a.learning_rate.or(t.learning_rate) {
        tc.learning_rate = v;
    }
    if let Some(v) = a.epochs.or(t.epochs) {
        tc.epochs = v;
    }
    if let Some(v) = a.loss.map(Into::into).or(t.loss) {
        tc.loss = v;
    }
    if let Some(v) = a.l2.or(t.l2) {
        tc.l2 = v;
    }
    if let Some(v) = a.lr_decay.or(t.lr_decay) {
        tc.lr_decay = v;
    }
    if let Some(v) = a.embed_dim.or(t.embed_dim) {
        features.embed_dim = v;
    }
    if let Some(v) = a.hash_buckets.or(t.hash_buckets) {
        features.hash_buckets = v;
    }
    tc.validate().map_err(invalid("train"))?;
    features.validate().map_err(invalid("train"))?;

    let corpus = read_labeled(&corpus_path, "corpus")?;
    let pairs = corpus.iter().map(|d| (d.text.as_str(), d.label.as_str()));
    let (model, report) = lintext::train(pairs, features, tc).map_err(|e| match e {
        lintext::LintextError::Io { .. } => anyhow::Error::new(e),
        other => invalid(format!("`paths.corpus` {}", corpus_path.display()))(other),
    })?;
    if let Some(dir) = model_out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    lintext::save_model(&model, &model_out)?;
    Ok(json!({
        "preset": preset.name(),
        "documents": report.documents,
        "labels": model.labels(),
        "epochs": tc.epochs,
        "final_loss": report.epoch_losses.last(),
        "model": path_str(&model_out),
    }))
}

pub fn filter(cfg: &RunConfig, a: FilterArgs) -> Result<Value> {
    let p = &cfg.paths;
    let profiles_path = input_path(&a.profiles, &p.profiles, "profiles")?;
    let tweets_path = input_path(&a.tweets, &p.tweets, "tweets")?;
    let model_path = input_path(&a.model, &p.model, "model")?;
    let obscene_path = input_path(&a.obscene, &p.obscene, "obscene")?;
    let gazetteer_path = match a.gazetteer.as_ref().or(p.gazetteer.as_ref()) {
        Some(g) => Some(input_path(&Some(g.clone()), &None, "gazetteer")?),
        None => None,
    };
    let out_dir = a
        .output_dir
        .clone()
        .or_else(|| p.output_dir.clone())
        .ok_or_else(|| Invalid("missing `paths.output_dir` (or --output-dir)".into()))?;

    let f = &cfg.filter;
    let cascade = CascadeConfig {
        n_per_country: a.n_per_country.unwrap_or(f.n_per_country),
        dialectal_threshold: a.dialectal_threshold.unwrap_or(f.dialectal_threshold),
        vulgar_threshold: a.vulgar_threshold.unwrap_or(f.vulgar_threshold),
        min_confidence: a.min_confidence.unwrap_or(f.min_confidence),
        normalization: cfg.normalize,
        classifier_normalization: NormalizationConfig {
            replace_relative_pronouns: true,
            ..cfg.normalize
        },
    };
    cascade.validate().map_err(invalid("filter"))?;

    let gz = match gazetteer_path {
        Some(path) => Gazetteer::from_path(&path).map_err(invalid(format!("`paths.gazetteer` {}", path.display())))?,
        None => Gazetteer::shipped(),
    };
    let model = load_model(&model_path).map_err(invalid(format!("`paths.model` {}", model_path.display())))?;
    let classifier =
        ModelClassifier::new(&model).map_err(invalid(format!("`paths.model` {}", model_path.display())))?;
    let obscene_text = std::fs::read_to_string(&obscene_path)
        .with_context(|| format!("reading {}", obscene_path.display()))?;
    let lexicon =
        ObsceneLexicon::parse(&obscene_text).map_err(invalid(format!("`paths.obscene` {}", obscene_path.display())))?;
    let (profiles, bad_profiles) = read_rows::<UserProfile>(&profiles_path)?;
    let (tweets, bad_tweets) = read_rows::<TweetRecord>(&tweets_path)?;

    let out = run_cascade(&profiles, &tweets, &gz, &classifier, &lexicon, &cascade).map_err(invalid("filter"))?;

    write_file(&out_dir.join("verdicts.jsonl"), |w| {
        for v in &out.verdicts {
            serde_json::to_writer(&mut *w, v)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })?;
    write_file(&out_dir.join("corpus.tsv"), |w| write_corpus_tsv(w, &out.corpus))?;
    let stats = pretty_json(&out.stats)?;
    write_file(&out_dir.join("stats.json"), |w| w.write_all(stats.as_bytes()))?;
    let counts = pretty_json(&out.counts)?;
    write_file(&out_dir.join("counts.json"), |w| w.write_all(counts.as_bytes()))?;

    Ok(json!({
        "malformed_profiles": bad_profiles,
        "malformed_tweets": bad_tweets,
        "users": out.counts.users,
        "retained": out.counts.retained,
        "tweets_emitted": out.counts.tweets_emitted,
        "total": out.stats.total(),
        "output_dir": path_str(&out_dir),
    }))
}

pub fn valence(cfg: &RunConfig, a: ValenceArgs) -> Result<Value> {
    let corpus_path = input_path(&a.corpus, &cfg.paths.corpus, "corpus")?;
    let msa_path = input_path(&a.msa_corpus, &cfg.paths.msa_corpus, "msa_corpus")?;
    let output = output_path(&a.output, &cfg.paths.output_dir, "valence.csv", "--output")?;
    let v = &cfg.valence;
    let top_k = a.top_k.unwrap_or(v.top_k);
    let top_n = a.top_words.unwrap_or(v.top_words);
    let min_count = a.min_count.unwrap_or(v.min_count);
    if top_k == 0 {
        return Err(Invalid("`valence.top_k` must be at least 1".into()).into());
    }

    let corpus = read_labeled(&corpus_path, "corpus")?;
    let msa: Vec<LabeledText> = read_labeled(&msa_path, "msa_corpus")?
        .into_iter()
        .filter(|d| d.label == VariantLabel::Msa.as_str())
        .collect();
    let known = default_groups();
    if let Some(bad) = corpus.iter().find(|d| !known.contains(&d.label) || d.label == MSA_GROUP) {
        return Err(Invalid(format!("`paths.corpus`: `{}` is not a country code", bad.label)).into());
    }
    // only groups with text take part; an empty group has no valence signal
    let groups: Vec<String> = known
        .into_iter()
        .filter(|g| {
            if g == MSA_GROUP {
                !msa.is_empty()
            } else {
                corpus.iter().any(|d| &d.label == g)
            }
        })
        .collect();
    let rows = corpus
        .iter()
        .map(|d| (d.label.as_str(), d.text.as_str()))
        .chain(msa.iter().map(|d| (MSA_GROUP, d.text.as_str())));
    let counts = count_terms(groups.clone(), rows).map_err(invalid("valence"))?;
    let vm = valence_vectors(&counts, top_k);
    let mut csv = Vec::new();
    write_valence_csv(&vm, &mut csv)?;
    write_file(&output, |w| w.write_all(&csv))?;

    let mut summary = json!({
        "groups": groups,
        "vocabulary": counts.vocabulary_size(),
        "terms": vm.terms.len(),
        "output": path_str(&output),
    });
    let top_out = a
        .top_words_output
        .clone()
        .or_else(|| cfg.paths.output_dir.as_ref().map(|d| d.join("top_words.json")));
    if let Some(top_out) = top_out {
        let mut top: BTreeMap<&str, Vec<RankedTerm>> = BTreeMap::new();
        for g in &groups {
            top.insert(g, top_valence_words(&counts, g, top_n, min_count)?);
        }
        let body = pretty_json(&top)?;
        write_file(&top_out, |w| w.write_all(body.as_bytes()))?;
        summary["top_words"] = json!(path_str(&top_out));
    }
    Ok(summary)
}

pub fn cluster(cfg: &RunConfig, a: ClusterArgs) -> Result<Value> {
    let default_csv = cfg.paths.output_dir.as_ref().map(|d| d.join("valence.csv"));
    let valence_path = input_path(&a.valence, &default_csv, "output_dir/valence.csv")?;
    let prefix = output_path(&a.output, &cfg.paths.output_dir, "dendrogram", "--output")?;
    let linkage = a.linkage.map(Into::into).unwrap_or(cfg.cluster.linkage);
    let metric = a.metric.map(Into::into).unwrap_or(cfg.cluster.metric);
    let vm = read_valence_csv(open(&valence_path)?).map_err(invalid(format!("valence {}", valence_path.display())))?;
    let d = cluster_dialects(&vm, linkage, metric).map_err(invalid(format!("valence {}", valence_path.display())))?;
    let nwk = with_suffix(&prefix, "nwk");
    let js = with_suffix(&prefix, "json");
    let newick = d.to_newick();
    write_file(&nwk, |w| writeln!(w, "{newick}"))?;
    let body = d.to_json();
    write_file(&js, |w| writeln!(w, "{body}"))?;
    Ok(json!({
        "linkage": linkage.to_string(),
        "metric": metric.to_string(),
        "groups": vm.groups.len(),
        "terms": vm.terms.len(),
        "newick": path_str(&nwk),
        "json": path_str(&js),
    }))
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn eval(cfg: &RunConfig, a: EvalArgs) -> Result<Value> {
    let model_path = input_path(&a.model, &cfg.paths.model, "model")?;
    let test_path = input_path(&a.test, &cfg.paths.test, "test")?;
    let report_path = output_path(&a.report, &cfg.paths.output_dir, "eval.json", "--report")?;
    let bin_width = a.bin_width.unwrap_or(cfg.eval.bin_width);
    if bin_width == 0 {
        return Err(Invalid("`eval.bin_width` must be at least 1".into()).into());
    }
    let regions = match a.regions.as_ref().or(cfg.paths.regions.as_ref()) {
        Some(r) => {
            let r = input_path(&Some(r.clone()), &None, "regions")?;
            let text = std::fs::read_to_string(&r).with_context(|| format!("reading {}", r.display()))?;
            RegionMap(serde_json::from_str(&text).map_err(invalid(format!("`paths.regions` {}", r.display())))?)
        }
        None => RegionMap::default(),
    };
    let model = load_model(&model_path).map_err(invalid(format!("`paths.model` {}", model_path.display())))?;
    let test = read_labeled(&test_path, "test")?;
    if let Some(bad) = test.iter().find(|d| model.label_index(&d.label).is_none()) {
        return Err(Invalid(format!("`paths.test`: label `{}` is unknown to the model", bad.label)).into());
    }
    let rows: Vec<PredictionRow> = test
        .par_iter()
        .map(|d| PredictionRow {
            gold: d.label.clone(),
            predicted: model.predict(&d.text).label,
            text: d.text.clone(),
        })
        .collect();
    let report = evaluate(&rows, Some(model.labels()), &regions, bin_width).map_err(invalid("eval"))?;
    let body = pretty_json(&report)?;
    write_file(&report_path, |w| w.write_all(body.as_bytes()))?;
    let stem = report_path.with_extension("");
    let cm_path = with_suffix(&stem, "confusion.csv");
    write_file(&cm_path, |w| report.confusion.write_csv(w))?;
    let pred_path = with_suffix(&stem, "predictions.tsv");
    write_file(&pred_path, |w| {
        rows.iter().try_for_each(|r| write_tsv_row(w, &[&r.gold, &r.predicted, &r.text]))
    })?;
    Ok(json!({
        "examples": report.examples,
        "accuracy": report.accuracy,
        "macro_f1": report.macro_f1,
        "report": path_str(&report_path),
        "confusion": path_str(&cm_path),
        "predictions": path_str(&pred_path),
    }))
}

pub fn fixture(cfg: &RunConfig, a: FixtureArgs) -> Result<Value> {
    let seed = cfg.seed;
    let write_docs = |docs: &[LabeledText]| -> Result<()> {
        write_file(&a.output, |w| docs.iter().try_for_each(|d| write_tsv_row(w, &[&d.label, &d.text])))
    };
    match a.kind {
        FixtureKind::Variant => {
            let c = VariantCorpusConfig {
                docs: a.docs.unwrap_or(VariantCorpusConfig::default().docs),
                seed,
                ..Default::default()
            };
            let docs = variant_corpus(&c);
            write_docs(&docs)?;
            Ok(json!({"kind": "variant", "docs": docs.len(), "output": path_str(&a.output)}))
        }
        FixtureKind::Dialect => {
            let d = DialectCorpusConfig::default();
            let c = DialectCorpusConfig {
                classes: a.classes.unwrap_or(d.classes),
                docs_per_class: a.docs_per_class.unwrap_or(d.docs_per_class),
                tokens_per_doc: a.tokens_per_doc.unwrap_or(d.tokens_per_doc),
                marker_rate: a.marker_rate.unwrap_or(d.marker_rate),
                skew: a.skew.unwrap_or(d.skew),
                seed,
                ..d
            };
            if c.classes < 2 || c.classes > 18 {
                return Err(Invalid(format!("--classes must be in 2..=18, got {}", c.classes)).into());
            }
            if !(0.0..1.0).contains(&c.skew) || !(0.0..=1.0).contains(&c.marker_rate) {
                return Err(Invalid("--skew must be in [0, 1) and --marker-rate in [0, 1]".into()).into());
            }
            let docs = dialect_corpus(&c);
            write_docs(&docs)?;
            Ok(json!({"kind": "dialect", "docs": docs.len(), "output": path_str(&a.output)}))
        }
        FixtureKind::Cascade => {
            let fx = cascade_fixture(&CascadeFixtureConfig { seed, ..Default::default() });
            fx.write_to_dir(&a.output)
                .with_context(|| format!("writing {}", a.output.display()))?;
            Ok(json!({
                "kind": "cascade",
                "profiles": fx.profiles.len(),
                "tweets": fx.tweets.len(),
                "output": path_str(&a.output),
            }))
        }
    }
}
