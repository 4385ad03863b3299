use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use proxyexp::explain::{
    cosine_importance_extract, dump_importance_extract, linear_extract, load_explanations, save_explanations,
};
use proxyexp::metrics::{faithfulness_report, faithfulness_table, label_report, label_table, true_labels};
use proxyexp::plausibility::{
    classify_explanations, evaluate_models, load_annotations, loo_evaluate, save_annotations, train_classifier,
    ClassifierOptions,
};
use proxyexp::proxy::{grid_search_alpha, train_proxy};
use proxyexp::synth::{generate_corpus, generate_plausibility_fixture, PlausibilityFixtureConfig};
use proxyexp::{
    baselines::train_logistic, corpus::tokenize, CodeSpace, Corpus, Document, EmbeddingTable, Explanation,
    FaithfulnessReport, ImportanceDump, LabelReport, LinearModel, LogisticBaseline, PredictionMatrix, Protocol,
    ProxyModel, Split, SplitAssignment, SynthConfig, TrainConfig, Vocabulary,
};

use crate::{
    Cli, Command, DataArgs, EvalArgs, EvalFaithfulnessArgs, EvalLabelsArgs, ExplainArgs, ModeArg, PlausibilityArgs,
    ProtocolArg, Source, SynthArgs, TrainArgs, TrainLogisticArgs, TrainProxyArgs,
};

/// A flag combination that cannot run; exits with status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Synth(a) => synth(a, seed),
        Command::TrainProxy(a) => train_proxy_cmd(a, seed),
        Command::TrainLogistic(a) => train_logistic_cmd(a, seed),
        Command::EvalFaithfulness(a) => eval_faithfulness(a),
        Command::EvalLabels(a) => eval_labels(a),
        Command::Explain(a) => explain(a),
        Command::Plausibility(a) => plausibility(a, seed),
    }
}

fn require_inputs<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            anyhow::bail!("input file {} does not exist", p.display());
        }
    }
    Ok(())
}

fn require_output(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            anyhow::bail!("output directory {} does not exist", dir.display())
        }
        _ => Ok(()),
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    println!("{text}");
    if let Some(path) = out {
        fs::write(path, format!("{text}\n")).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

struct Data {
    corpus: Corpus,
    splits: SplitAssignment,
    codes: CodeSpace,
    vocab: Vocabulary,
}

impl DataArgs {
    fn paths(&self) -> [&Path; 3] {
        [&self.corpus, &self.splits, &self.codes]
    }

    fn load(&self) -> Result<Data> {
        let corpus = Corpus::load(&self.corpus)?;
        let codes = CodeSpace::load(&self.codes)?;
        corpus.check_labels(&codes)?;
        let splits = SplitAssignment::load(&self.splits, &corpus)?;
        let train = splits.select(&corpus, Split::Train);
        let vocab = Vocabulary::build(train.iter().map(|d| d.tokens.as_slice()), self.min_doc_freq)?;
        Ok(Data { corpus, splits, codes, vocab })
    }
}

impl TrainArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            alpha: self.alpha,
            epochs: self.epochs,
            eta0: self.eta0,
            power_t: self.power_t,
            clamp_eps: self.clamp_eps,
            seed,
            binary_features: self.binary_features,
        }
    }
}

fn synth(a: SynthArgs, seed: u64) -> Result<()> {
    let config = SynthConfig {
        seed,
        vocab_size: a.vocab_size,
        n_docs: a.n_docs,
        min_doc_len: a.min_doc_len,
        max_doc_len: a.max_doc_len,
        n_codes: a.n_codes,
        noise_sd: a.noise_sd,
        ..SynthConfig::default()
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    let data = generate_corpus(&config)?;
    data.corpus.save(a.out.join("corpus.jsonl"))?;
    data.codes.save(a.out.join("codes.tsv"))?;
    data.splits.save(a.out.join("splits.tsv"), &data.corpus)?;
    data.predictions.save(a.out.join("predictions.jsonl"))?;
    fs::write(a.out.join("planted.json"), format!("{}\n", data.planted.to_json()?))?;
    if a.plausibility {
        let fixture = generate_plausibility_fixture(&PlausibilityFixtureConfig { seed, ..Default::default() })?;
        fixture.embeddings.save(a.out.join("embeddings.txt"))?;
        fixture.codes.save(a.out.join("annotation_codes.tsv"))?;
        save_annotations(a.out.join("annotations.jsonl"), &fixture.annotations)?;
    }
    eprintln!(
        "wrote {} documents, {} codes to {}",
        data.corpus.len(),
        data.codes.len(),
        a.out.display()
    );
    Ok(())
}

fn train_proxy_cmd(a: TrainProxyArgs, seed: u64) -> Result<()> {
    if a.grid && a.alpha_grid.is_empty() {
        return Err(usage("--alpha-grid is empty"));
    }
    if a.train.epochs == 0 {
        return Err(usage("--epochs must be >= 1"));
    }
    require_inputs(a.data.paths().into_iter().chain([a.predictions.as_path()]))?;
    require_output(&a.out)?;
    let data = a.data.load()?;
    let predictions = PredictionMatrix::load(&a.predictions, &data.codes)?;
    let mut config = a.train.config(seed);
    if a.grid {
        let g = grid_search_alpha(&data.corpus, &predictions, &data.splits, &data.vocab, &config, &a.alpha_grid)?;
        for (alpha, mse) in &g.scores {
            eprintln!("alpha {alpha:e}: validation mse {mse:.6e}");
        }
        eprintln!("chosen alpha {:e}", g.best_alpha);
        config.alpha = g.best_alpha;
    }
    let model = train_proxy(&data.corpus, &predictions, &data.splits, &data.vocab, &config)?;
    model.save(&a.out)?;
    Ok(())
}

fn train_logistic_cmd(a: TrainLogisticArgs, seed: u64) -> Result<()> {
    if a.train.epochs == 0 {
        return Err(usage("--epochs must be >= 1"));
    }
    require_inputs(a.data.paths())?;
    require_output(&a.out)?;
    let data = a.data.load()?;
    let model = train_logistic(&data.corpus, &data.splits, &data.vocab, data.codes.codes(), &a.train.config(seed))?;
    model.save(&a.out)?;
    Ok(())
}

/// Named prediction matrices over the evaluation documents, in report order.
fn candidates(eval: &EvalArgs, data: &Data, docs: &[&Document]) -> Result<Vec<(String, PredictionMatrix)>> {
    let mut out = Vec::new();
    if let Some(path) = &eval.logistic {
        let m = LogisticBaseline::load(path, &data.vocab)?;
        check_codes(&m.0, &data.codes, path)?;
        out.push(("Logistic".to_owned(), m.predict_matrix(docs)?));
    }
    if let Some(path) = &eval.proxy {
        let m = ProxyModel::load(path, &data.vocab)?;
        check_codes(&m.0, &data.codes, path)?;
        out.push(("Proxy".to_owned(), m.predict_matrix(docs)?));
    }
    for (name, path) in &eval.candidates {
        let m = PredictionMatrix::load(path, &data.codes)?;
        out.push((name.clone(), m.subset(docs.iter().map(|d| d.doc_id.as_str()))?));
    }
    Ok(out)
}

fn check_codes(model: &LinearModel, codes: &CodeSpace, path: &Path) -> Result<()> {
    if model.codes != codes.codes() {
        anyhow::bail!("{}: model codes differ from the code list", path.display());
    }
    Ok(())
}

fn eval_inputs(eval: &EvalArgs) -> Vec<&Path> {
    let mut paths: Vec<&Path> = eval.data.paths().to_vec();
    paths.extend(eval.proxy.as_deref());
    paths.extend(eval.logistic.as_deref());
    paths.extend(eval.candidates.iter().map(|(_, p)| p.as_path()));
    paths
}

fn check_eval_outputs(eval: &EvalArgs) -> Result<()> {
    if eval.proxy.is_none() && eval.logistic.is_none() && eval.candidates.is_empty() {
        return Err(usage("nothing to evaluate: pass --proxy, --logistic or --candidate"));
    }
    for p in eval.out.iter().chain(&eval.table) {
        require_output(p)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Row<R> {
    model: String,
    #[serde(flatten)]
    report: R,
}

#[derive(Serialize)]
struct Report<R> {
    split: Split,
    n_docs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    rows: Vec<Row<R>>,
}

fn eval_docs(data: &Data, split: Split) -> Result<Vec<&Document>> {
    let docs = data.splits.select(&data.corpus, split);
    if docs.is_empty() {
        anyhow::bail!("the {split} split is empty");
    }
    Ok(docs)
}

fn eval_faithfulness(a: EvalFaithfulnessArgs) -> Result<()> {
    check_eval_outputs(&a.eval)?;
    let mut inputs = eval_inputs(&a.eval);
    inputs.push(&a.predictions);
    require_inputs(inputs)?;
    let data = a.eval.data.load()?;
    let split: Split = a.eval.split.into();
    let docs = eval_docs(&data, split)?;
    let blackbox = PredictionMatrix::load(&a.predictions, &data.codes)?.subset(docs.iter().map(|d| d.doc_id.as_str()))?;
    let mut rows = Vec::new();
    for (model, m) in candidates(&a.eval, &data, &docs)? {
        let report = faithfulness_report(&m, &blackbox, a.threshold).with_context(|| format!("evaluating {model}"))?;
        rows.push(Row { model, report });
    }
    if let Some(path) = &a.eval.table {
        let table: Vec<(&str, &FaithfulnessReport)> = rows.iter().map(|r| (r.model.as_str(), &r.report)).collect();
        fs::write(path, faithfulness_table(&table))?;
    }
    let report = Report {
        split,
        n_docs: docs.len(),
        threshold: Some(a.threshold),
        rows,
    };
    emit_json(&report, a.eval.out.as_deref())
}

fn eval_labels(a: EvalLabelsArgs) -> Result<()> {
    check_eval_outputs(&a.eval)?;
    if a.ks.contains(&0) {
        return Err(usage("--k values must be >= 1"));
    }
    require_inputs(eval_inputs(&a.eval))?;
    let data = a.eval.data.load()?;
    let split: Split = a.eval.split.into();
    let docs = eval_docs(&data, split)?;
    let mut rows = Vec::new();
    for (model, m) in candidates(&a.eval, &data, &docs)? {
        let truth = true_labels(&data.corpus, &m)?;
        let report = label_report(&m, &truth, &a.ks).with_context(|| format!("evaluating {model}"))?;
        rows.push(Row { model, report });
    }
    if let Some(path) = &a.eval.table {
        let table: Vec<(&str, &LabelReport)> = rows.iter().map(|r| (r.model.as_str(), &r.report)).collect();
        fs::write(path, label_table(&table))?;
    }
    let report = Report {
        split,
        n_docs: docs.len(),
        threshold: None,
        rows,
    };
    emit_json(&report, a.eval.out.as_deref())
}

enum Extractor {
    Linear(LinearModel, proxyexp::explain::ImportanceMode),
    Dump(ImportanceDump),
    Cosine(EmbeddingTable),
}

fn explain(a: ExplainArgs) -> Result<()> {
    let source_file: &Path = match a.source {
        Source::Proxy | Source::Logistic => a.model.as_deref().ok_or_else(|| usage("--model is required for this source"))?,
        Source::Dump => a.dump.as_deref().ok_or_else(|| usage("--source dump requires --dump"))?,
        Source::Cosine => a
            .embeddings
            .as_deref()
            .ok_or_else(|| usage("--source cosine requires --embeddings"))?,
    };
    require_inputs(a.data.paths().into_iter().chain([source_file]))?;
    require_output(&a.out)?;
    let data = a.data.load()?;
    let mode = match a.mode {
        ModeArg::Coefficient => proxyexp::explain::ImportanceMode::Coefficient,
        ModeArg::CountWeighted => proxyexp::explain::ImportanceMode::CountWeighted,
    };
    let extractor = match a.source {
        Source::Proxy => Extractor::Linear(ProxyModel::load(source_file, &data.vocab)?.0, mode),
        Source::Logistic => Extractor::Linear(LogisticBaseline::load(source_file, &data.vocab)?.0, mode),
        Source::Dump => Extractor::Dump(ImportanceDump::load(source_file, &data.corpus)?),
        Source::Cosine => Extractor::Cosine(EmbeddingTable::load(source_file)?),
    };
    let name = a.name.clone().unwrap_or_else(|| {
        match a.source {
            Source::Proxy => "proxy",
            Source::Logistic => "logistic",
            Source::Dump => "dump",
            Source::Cosine => "cosine",
        }
        .to_owned()
    });

    let docs: Vec<&Document> = if a.docs.is_empty() {
        data.splits.select(&data.corpus, a.split.into())
    } else {
        a.docs
            .iter()
            .map(|id| data.corpus.get(id).ok_or_else(|| anyhow::anyhow!("document {id:?} not in corpus")))
            .collect::<Result<_>>()?
    };
    for c in &a.codes_filter {
        if data.codes.index_of(c).is_none() {
            anyhow::bail!("code {c:?} not in the code list");
        }
    }

    let mut explanations = Vec::new();
    for doc in docs {
        let codes: Vec<&str> = if a.all_codes {
            data.codes.codes().iter().map(String::as_str).collect()
        } else if !a.codes_filter.is_empty() {
            a.codes_filter.iter().map(String::as_str).collect()
        } else {
            data.codes
                .codes()
                .iter()
                .filter(|c| doc.true_codes.contains(*c))
                .map(String::as_str)
                .collect()
        };
        for code in codes {
            let e = extract_one(&extractor, &data, doc, code, &name)
                .with_context(|| format!("explaining ({}, {code})", doc.doc_id))?;
            explanations.push(e);
        }
    }
    save_explanations(&a.out, &explanations)?;
    eprintln!("wrote {} explanations to {}", explanations.len(), a.out.display());
    Ok(())
}

fn extract_one(extractor: &Extractor, data: &Data, doc: &Document, code: &str, name: &str) -> Result<Explanation> {
    Ok(match extractor {
        Extractor::Linear(model, mode) => {
            let c = model
                .code_index(code)
                .ok_or_else(|| anyhow::anyhow!("model has no code {code:?}"))?;
            linear_extract(&model.regressors[c], &data.vocab, doc, code, name, *mode)?
        }
        Extractor::Dump(dump) => dump_importance_extract(dump, doc, code, name)?,
        Extractor::Cosine(table) => {
            let desc = data.codes.description(code).expect("validated code");
            let mut e = cosine_importance_extract(doc, code, &tokenize(desc), table)?;
            e.model = name.to_owned();
            e
        }
    })
}

#[derive(Serialize)]
struct LooReport {
    protocol: &'static str,
    n_annotations: usize,
    folds: usize,
    accuracy: f64,
    auc: Option<f64>,
}

fn plausibility(a: PlausibilityArgs, seed: u64) -> Result<()> {
    if a.protocol == ProtocolArg::Full && a.explanations.is_empty() {
        return Err(usage("--protocol full needs at least one --explanations file"));
    }
    if a.protocol != ProtocolArg::Full && !a.explanations.is_empty() {
        return Err(usage("--explanations is only used with --protocol full"));
    }
    if a.bootstrap == 0 {
        return Err(usage("--bootstrap must be >= 1"));
    }
    let inputs: Vec<&Path> = [a.annotations.as_path(), a.embeddings.as_path(), a.codes.as_path()]
        .into_iter()
        .chain(a.explanations.iter().map(PathBuf::as_path))
        .collect();
    require_inputs(inputs)?;
    if let Some(p) = &a.out {
        require_output(p)?;
    }
    let records = load_annotations(&a.annotations)?;
    let table = EmbeddingTable::load(&a.embeddings)?;
    let codes = CodeSpace::load(&a.codes)?;
    let opts = ClassifierOptions { l2: a.l2, ..ClassifierOptions::default() };
    match a.protocol {
        ProtocolArg::E1 | ProtocolArg::E2 => {
            let (protocol, name) = if a.protocol == ProtocolArg::E1 {
                (Protocol::E1, "e1")
            } else {
                (Protocol::E2, "e2")
            };
            let r = loo_evaluate(&records, protocol, &codes, &table, &opts)?;
            let report = LooReport {
                protocol: name,
                n_annotations: records.len(),
                folds: r.folds,
                accuracy: r.accuracy,
                auc: r.auc,
            };
            emit_json(&report, a.out.as_deref())
        }
        ProtocolArg::Full => {
            let clf = train_classifier(&records, &codes, &table, &opts)?;
            let mut explanations = Vec::new();
            for path in &a.explanations {
                explanations.extend(load_explanations(path)?);
            }
            let probs = classify_explanations(&clf, &explanations, &codes, &table)?;
            let summary = evaluate_models(&probs, a.target_rate, a.bootstrap, a.level, seed)?;
            emit_json(&summary, a.out.as_deref())
        }
    }
}
