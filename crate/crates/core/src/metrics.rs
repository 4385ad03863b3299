//! Faithfulness and label-quality metrics.
//!
//! Matrix-shaped inputs are row-major slices with one row per document and
//! one column per code. Correlations in [`faithfulness_report`] are pooled
//! over every `(document, code)` entry rather than averaged per code.
//! Kendall's tau-b and ROC AUC are computed from exact integer pair counts,
//! so they agree with brute-force pair enumeration up to the final division.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::blackbox::{binarize, PredictionMatrix};
use crate::corpus::Corpus;
use crate::error::{check_len, Error, Result};

pub const DEFAULT_KS: [usize; 2] = [8, 15];
/// Candidate outputs are thresholded here to produce F1 predictions.
pub const F1_THRESHOLD: f64 = 0.5;

fn check_finite(xs: &[f64]) -> Result<()> {
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in metric input"));
    }
    Ok(())
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    check_len(x.len(), y.len())?;
    if x.len() < 2 {
        return Err(Error::invalid("correlations need at least two points"));
    }
    check_finite(x)?;
    check_finite(y)
}

/// Product-moment correlation. If exactly one input is constant the result is 0.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    match (sxx == 0.0, syy == 0.0) {
        (true, true) => Err(Error::UndefinedCorrelation("both inputs are constant")),
        (true, false) | (false, true) => Ok(0.0),
        _ => Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)),
    }
}

/// 1-based ranks; tied values share their mean rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Number of tied pairs, summed over runs of equal keys in sorted order.
fn tied_pairs<T, F: Fn(&T, &T) -> bool>(sorted: &[T], eq: F) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if eq(&w[0], &w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts `v` and returns the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Tie-corrected Kendall rank correlation in O(n log n) (Knight's algorithm).
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as u64;
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n0 = n * (n - 1) / 2;
    let n1 = tied_pairs(&pairs, |a, b| a.0 == b.0);
    let n3 = tied_pairs(&pairs, |a, b| a.0 == b.0 && a.1 == b.1);
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(ys.len());
    let discordant = merge_count(&mut ys, &mut buf);
    let n2 = tied_pairs(&ys, |a, b| a == b);
    if n1 == n0 || n2 == n0 {
        return Err(Error::UndefinedCorrelation("all pairs are tied in one input"));
    }
    let numerator = n0 as i128 - n1 as i128 - n2 as i128 + n3 as i128 - 2 * discordant as i128;
    let denom = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    Ok((numerator as f64 / denom).clamp(-1.0, 1.0))
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Single-class input yields [`Error::Degenerate`].
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_len(scores.len(), labels.len())?;
    check_finite(scores)?;
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Degenerate);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the Mann-Whitney U statistic
    let mut u2 = 0u128;
    let mut neg_below = 0u64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let pos = order[i..=j].iter().filter(|&&k| labels[k]).count() as u64;
        let neg = (j - i + 1) as u64 - pos;
        u2 += u128::from(pos) * u128::from(2 * neg_below + neg);
        neg_below += neg;
        i = j + 1;
    }
    Ok(u2 as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroAuc {
    pub value: f64,
    /// Codes with a single class among the rows, left out of the mean.
    pub skipped: usize,
}

fn column<T: Copy>(values: &[T], n_codes: usize, c: usize) -> Vec<T> {
    values.iter().skip(c).step_by(n_codes).copied().collect()
}

fn check_matrix(len_a: usize, len_b: usize, n_codes: usize) -> Result<()> {
    check_len(len_a, len_b)?;
    if n_codes == 0 || !len_a.is_multiple_of(n_codes) {
        return Err(Error::invalid(format!("{len_a} entries do not form rows of {n_codes} codes")));
    }
    Ok(())
}

pub fn macro_auc(scores: &[f64], labels: &[bool], n_codes: usize) -> Result<MacroAuc> {
    check_matrix(scores.len(), labels.len(), n_codes)?;
    let mut sum = 0.0;
    let mut used = 0usize;
    for c in 0..n_codes {
        match roc_auc(&column(scores, n_codes, c), &column(labels, n_codes, c)) {
            Ok(v) => {
                sum += v;
                used += 1;
            }
            Err(Error::Degenerate) => {}
            Err(e) => return Err(e),
        }
    }
    if used == 0 {
        return Err(Error::Degenerate);
    }
    Ok(MacroAuc {
        value: sum / used as f64,
        skipped: n_codes - used,
    })
}

pub fn micro_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    roc_auc(scores, labels)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Counts {
    pub fn tally(pred: &[bool], truth: &[bool]) -> Self {
        let mut c = Counts::default();
        for (&p, &t) in pred.iter().zip(truth) {
            match (p, t) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => {}
            }
        }
        c
    }

    pub fn f1(&self) -> f64 {
        f1(self.tp, self.fp, self.fn_)
    }
}

/// `2tp / (2tp + fp + fn)`, or 0 when the denominator is 0.
pub fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

pub fn macro_f1(pred: &[bool], truth: &[bool], n_codes: usize) -> Result<f64> {
    check_matrix(pred.len(), truth.len(), n_codes)?;
    let total: f64 = (0..n_codes)
        .map(|c| Counts::tally(&column(pred, n_codes, c), &column(truth, n_codes, c)).f1())
        .sum();
    Ok(total / n_codes as f64)
}

pub fn micro_f1(pred: &[bool], truth: &[bool]) -> Result<f64> {
    check_len(pred.len(), truth.len())?;
    Ok(Counts::tally(pred, truth).f1())
}

/// Mean over documents of the fraction of the `k` top-scored codes that are
/// true. Equal scores are ordered by ascending code index.
pub fn precision_at_k(scores: &[f64], truth: &[bool], n_codes: usize, k: usize) -> Result<f64> {
    check_matrix(scores.len(), truth.len(), n_codes)?;
    check_finite(scores)?;
    if k == 0 || k > n_codes {
        return Err(Error::invalid(format!("k = {k} must lie in 1..={n_codes}")));
    }
    let n_docs = scores.len() / n_codes;
    if n_docs == 0 {
        return Err(Error::invalid("precision@k over zero documents"));
    }
    let mut order: Vec<usize> = Vec::with_capacity(n_codes);
    let mut total = 0.0;
    for d in 0..n_docs {
        let row = &scores[d * n_codes..(d + 1) * n_codes];
        let hits = &truth[d * n_codes..(d + 1) * n_codes];
        order.clear();
        order.extend(0..n_codes);
        let by_rank = |a: &usize, b: &usize| -> Ordering { row[*b].total_cmp(&row[*a]).then(a.cmp(b)) };
        if k < n_codes {
            order.select_nth_unstable_by(k - 1, by_rank);
        }
        let correct = order[..k].iter().filter(|&&c| hits[c]).count();
        total += correct as f64 / k as f64;
    }
    Ok(total / n_docs as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaithfulnessReport {
    pub spearman: f64,
    pub pearson: f64,
    pub kendall: f64,
    pub macro_auc: f64,
    pub micro_auc: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub macro_auc_skipped: usize,
}

/// Compares a candidate's outputs with the black box's probabilities.
///
/// Classification metrics use the black box binarized at `threshold` as
/// pseudo-labels and the candidate binarized at [`F1_THRESHOLD`].
pub fn faithfulness_report(
    candidate: &PredictionMatrix,
    blackbox: &PredictionMatrix,
    threshold: f64,
) -> Result<FaithfulnessReport> {
    candidate.check_aligned(blackbox)?;
    let n_codes = candidate.n_codes();
    let pseudo = binarize(blackbox, threshold)?;
    let pred = binarize(candidate, F1_THRESHOLD)?;
    let (c, b) = (candidate.values(), blackbox.values());
    let macro_ = macro_auc(c, pseudo.values(), n_codes)?;
    Ok(FaithfulnessReport {
        spearman: spearman(c, b)?,
        pearson: pearson(c, b)?,
        kendall: kendall_tau_b(c, b)?,
        macro_auc: macro_.value,
        micro_auc: micro_auc(c, pseudo.values())?,
        macro_f1: macro_f1(pred.values(), pseudo.values(), n_codes)?,
        micro_f1: micro_f1(pred.values(), pseudo.values())?,
        macro_auc_skipped: macro_.skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelReport {
    pub macro_auc: f64,
    pub micro_auc: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub precision_at_8: Option<f64>,
    pub precision_at_15: Option<f64>,
    /// Every requested k that fits the code count.
    pub precision_at: BTreeMap<usize, f64>,
    pub macro_auc_skipped: usize,
}

/// Row-major true-label matrix aligned to `matrix`.
pub fn true_labels(corpus: &Corpus, matrix: &PredictionMatrix) -> Result<Vec<bool>> {
    let mut out = Vec::with_capacity(matrix.n_docs() * matrix.n_codes());
    for id in matrix.doc_ids() {
        let doc = corpus
            .get(id)
            .ok_or_else(|| Error::invalid(format!("document {id:?} not in corpus")))?;
        out.extend(matrix.codes().iter().map(|c| doc.true_codes.contains(c)));
    }
    Ok(out)
}

pub fn label_report(candidate: &PredictionMatrix, truth: &[bool], ks: &[usize]) -> Result<LabelReport> {
    let n_codes = candidate.n_codes();
    let scores = candidate.values();
    check_matrix(scores.len(), truth.len(), n_codes)?;
    let pred = binarize(candidate, F1_THRESHOLD)?;
    let macro_ = macro_auc(scores, truth, n_codes)?;
    let mut precision_at = BTreeMap::new();
    for &k in ks.iter().filter(|&&k| k >= 1 && k <= n_codes) {
        precision_at.insert(k, precision_at_k(scores, truth, n_codes, k)?);
    }
    Ok(LabelReport {
        macro_auc: macro_.value,
        micro_auc: micro_auc(scores, truth)?,
        macro_f1: macro_f1(pred.values(), truth, n_codes)?,
        micro_f1: micro_f1(pred.values(), truth)?,
        precision_at_8: precision_at.get(&8).copied(),
        precision_at_15: precision_at.get(&15).copied(),
        precision_at,
        macro_auc_skipped: macro_.skipped,
    })
}

/// Tab-separated rows laid out like a model-vs-black-box comparison table.
pub fn faithfulness_table(rows: &[(&str, &FaithfulnessReport)]) -> String {
    let mut out = String::from("Model\tSpearman\tPearson\tKendall\tMacro AUC\tMicro AUC\tMacro F1\tMicro F1\n");
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "{name}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}",
            r.spearman, r.pearson, r.kendall, r.macro_auc, r.micro_auc, r.macro_f1, r.micro_f1
        );
    }
    out
}

pub fn label_table(rows: &[(&str, &LabelReport)]) -> String {
    let ks: Vec<usize> = rows
        .first()
        .map(|(_, r)| r.precision_at.keys().copied().collect())
        .unwrap_or_default();
    let mut out = String::from("Model\tMacro AUC\tMicro AUC\tMacro F1\tMicro F1");
    for k in &ks {
        let _ = write!(out, "\tP@{k}");
    }
    out.push('\n');
    for (name, r) in rows {
        let _ = write!(
            out,
            "{name}\t{:.3}\t{:.3}\t{:.3}\t{:.3}",
            r.macro_auc, r.micro_auc, r.macro_f1, r.micro_f1
        );
        for k in &ks {
            match r.precision_at.get(k) {
                Some(v) => {
                    let _ = write!(out, "\t{v:.3}");
                }
                None => out.push_str("\t-"),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn pearson_examples() {
        assert!(close(pearson(&[1., 2., 3.], &[2., 4., 6.]).unwrap(), 1.0));
        assert!(close(pearson(&[1., 2., 3.], &[3., 2., 1.]).unwrap(), -1.0));
        assert!(close(pearson(&[1., 2., 3., 4.], &[1., 3., 2., 4.]).unwrap(), 0.8));
        assert!(pearson(&[1., 2.], &[1.]).is_err());
        assert!(matches!(pearson(&[1., 1.], &[2., 2.]), Err(Error::UndefinedCorrelation(_))));
        assert_eq!(pearson(&[1., 1., 1.], &[1., 2., 3.]).unwrap(), 0.0);
    }

    #[test]
    fn spearman_examples() {
        assert!(close(spearman(&[1., 2., 3.], &[1., 3., 2.]).unwrap(), 0.5));
        let x = [0.1, 0.5, 2.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.ln() * 3.0 + 1.0).collect();
        assert!(close(spearman(&x, &y).unwrap(), 1.0));
        assert_eq!(average_ranks(&[1., 1., 2.]), vec![1.5, 1.5, 3.0]);
        let expected = pearson(&[1.5, 1.5, 3.0], &[1., 2., 3.]).unwrap();
        assert!(close(spearman(&[1., 1., 2.], &[1., 2., 3.]).unwrap(), expected));
    }

    #[test]
    fn kendall_examples() {
        assert!(close(kendall_tau_b(&[3., 1., 2.], &[3., 1., 2.]).unwrap(), 1.0));
        assert!(close(kendall_tau_b(&[1., 2., 3.], &[1., 3., 2.]).unwrap(), 1.0 / 3.0));
        assert!(kendall_tau_b(&[1., 1., 1.], &[1., 2., 3.]).is_err());
    }

    #[test]
    fn auc_examples() {
        assert!(close(roc_auc(&[0.9, 0.8, 0.3, 0.2], &[true, false, true, false]).unwrap(), 0.75));
        assert_eq!(roc_auc(&[0.9, 0.8, 0.1], &[true, true, false]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.4; 4], &[true, false, true, false]).unwrap(), 0.5);
        assert!(matches!(roc_auc(&[0.1, 0.2], &[true, true]), Err(Error::Degenerate)));
    }

    #[test]
    fn macro_and_micro_auc() {
        // code 0 perfectly ordered, code 1 all ties
        let scores = [0.9, 0.5, 0.1, 0.5];
        let labels = [true, true, false, false];
        let m = macro_auc(&scores, &labels, 2).unwrap();
        assert!(close(m.value, 0.75));
        assert_eq!(m.skipped, 0);

        let labels = [true, false, false, false];
        let m = macro_auc(&scores, &labels, 2).unwrap();
        assert_eq!(m.skipped, 1);
        assert_eq!(m.value, 1.0);
        assert!(macro_auc(&scores, &[false; 4], 2).is_err());

        // pooled: positive 0.9 against negatives 0.5, 0.1, 0.5
        assert!(close(micro_auc(&scores, &labels).unwrap(), 1.0));
    }

    #[test]
    fn f1_examples() {
        assert!(close(f1(2, 1, 2), 4.0 / 7.0));
        assert_eq!(f1(0, 0, 0), 0.0);
        let t = [true, false, true, true];
        assert_eq!(micro_f1(&t, &t).unwrap(), 1.0);
        assert_eq!(macro_f1(&t, &t, 2).unwrap(), 1.0);
    }

    #[test]
    fn single_code_micro_f1_equals_code_f1() {
        let p = [true, false, true, false, true];
        let t = [true, true, false, false, true];
        assert_eq!(micro_f1(&p, &t).unwrap(), macro_f1(&p, &t, 1).unwrap());
    }

    #[test]
    fn precision_at_k_examples() {
        // codes a, b, c; top-2 = {a, b}, true = {a}
        let p = precision_at_k(&[0.9, 0.8, 0.1], &[true, false, false], 3, 2).unwrap();
        assert!(close(p, 0.5));
        assert_eq!(precision_at_k(&[0.9, 0.8, 0.1], &[false; 3], 3, 2).unwrap(), 0.0);
        // tie between codes 1 and 2 goes to code 1
        let p = precision_at_k(&[0.1, 0.5, 0.5], &[false, true, false], 3, 1).unwrap();
        assert_eq!(p, 1.0);
        assert!(precision_at_k(&[0.1, 0.2], &[true, false], 2, 3).is_err());
    }

    fn matrix(rows: &[&[f64]]) -> PredictionMatrix {
        let n = rows[0].len();
        PredictionMatrix::new(
            (0..n).map(|i| format!("c{i}")).collect(),
            rows.iter().enumerate().map(|(i, r)| (format!("d{i}"), r.to_vec())).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_candidate_is_perfectly_faithful() {
        let bb = matrix(&[&[0.9, 0.1], &[0.2, 0.7], &[0.6, 0.05]]);
        let r = faithfulness_report(&bb, &bb, 0.5).unwrap();
        assert!(close(r.pearson, 1.0) && close(r.spearman, 1.0) && close(r.kendall, 1.0));
        assert_eq!(r.micro_auc, 1.0);
        assert_eq!(r.micro_f1, 1.0);
    }

    #[test]
    fn log_shift_keeps_rank_correlation() {
        let bb = matrix(&[&[0.9, 0.1], &[0.2, 0.7], &[0.6, 0.05]]);
        let shifted: Vec<Vec<f64>> = (0..3).map(|d| bb.row(d).iter().map(|p| p * (-1.0f64).exp()).collect()).collect();
        let cand = matrix(&shifted.iter().map(Vec::as_slice).collect::<Vec<_>>());
        let r = faithfulness_report(&cand, &bb, 0.5).unwrap();
        assert!(close(r.spearman, 1.0));
        assert!(close(r.kendall, 1.0));
    }

    #[test]
    fn perfect_label_predictor() {
        let cand = matrix(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let truth = vec![true, false, false, true, true, true];
        let r = label_report(&cand, &truth, &[1, 2]).unwrap();
        assert_eq!((r.macro_auc, r.micro_auc, r.macro_f1, r.micro_f1), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(r.precision_at_8, None);
        assert_eq!(r.precision_at[&1], 1.0);
    }

    proptest! {
        #[test]
        fn correlations_are_symmetric_and_bounded(
            pts in proptest::collection::vec((-5i32..5, -5i32..5), 3..40)
        ) {
            let x: Vec<f64> = pts.iter().map(|p| f64::from(p.0)).collect();
            let y: Vec<f64> = pts.iter().map(|p| f64::from(p.1)).collect();
            for f in [pearson, spearman, kendall_tau_b] {
                if let (Ok(a), Ok(b)) = (f(&x, &y), f(&y, &x)) {
                    prop_assert!((a - b).abs() < 1e-12);
                    prop_assert!((-1.0..=1.0).contains(&a));
                }
            }
        }

        #[test]
        fn rank_metrics_ignore_increasing_transforms(
            pts in proptest::collection::vec((-20i32..20, -20i32..20, proptest::bool::ANY), 3..40)
        ) {
            let x: Vec<f64> = pts.iter().map(|p| f64::from(p.0)).collect();
            let y: Vec<f64> = pts.iter().map(|p| f64::from(p.1)).collect();
            let tx: Vec<f64> = x.iter().map(|v| (v / 7.0).exp() * 2.0 + 1.0).collect();
            if let (Ok(a), Ok(b)) = (spearman(&x, &y), spearman(&tx, &y)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            if let (Ok(a), Ok(b)) = (kendall_tau_b(&x, &y), kendall_tau_b(&tx, &y)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let labels: Vec<bool> = pts.iter().map(|p| p.2).collect();
            if let (Ok(a), Ok(b)) = (roc_auc(&x, &labels), roc_auc(&tx, &labels)) {
                prop_assert_eq!(a, b);
            }
        }
    }
}
