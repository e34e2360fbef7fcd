//! Confusion matrices and one-vs-rest classification metrics.

use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        ConfusionMatrix {
            k,
            counts: vec![0; k * k],
        }
    }

    pub fn from_counts(k: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != k * k {
            return Err(Error::shape("confusion matrix", format!("{} counts for k = {k}", counts.len())));
        }
        Ok(ConfusionMatrix { k, counts })
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn accumulate(&mut self, true_class: usize, predicted_class: usize) -> Result<()> {
        if true_class >= self.k || predicted_class >= self.k {
            return Err(Error::contract(format!(
                "pair ({true_class}, {predicted_class}) out of range for {} classes",
                self.k
            )));
        }
        self.counts[true_class * self.k + predicted_class] += 1;
        Ok(())
    }

    pub fn get(&self, true_class: usize, predicted_class: usize) -> u64 {
        self.counts[true_class * self.k + predicted_class]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|c| self.get(c, c)).sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        (0..self.k).map(|p| self.get(c, p)).sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        (0..self.k).map(|t| self.get(t, c)).sum()
    }

    /// Elementwise sum, for combining evaluation shards.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.k != self.k {
            return Err(Error::contract(format!("cannot merge k = {} into k = {}", other.k, self.k)));
        }
        self.counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
        Ok(())
    }

    /// Header `true\predicted,<labels...>`, then one row per true class.
    pub fn to_csv(&self, labels: &[String]) -> String {
        let mut out = String::from("true\\predicted");
        for l in labels.iter().take(self.k) {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (t, label) in labels.iter().enumerate().take(self.k) {
            out.push_str(label);
            for p in 0..self.k {
                out.push_str(&format!(",{}", self.get(t, p)));
            }
            out.push('\n');
        }
        out
    }
}

/// Ratio names whose denominator was zero for a class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Undefined {
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
    pub specificity: bool,
    pub fpr: bool,
}

impl Undefined {
    pub fn any(&self) -> bool {
        self.precision || self.recall || self.f1 || self.specificity || self.fpr
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClassMetrics {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub specificity: f64,
    pub fpr: f64,
    pub accuracy: f64,
    pub undefined: Undefined,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AverageMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub specificity: f64,
    pub fpr: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub per_class: Vec<ClassMetrics>,
    /// Unweighted mean over classes.
    pub macro_average: AverageMetrics,
}

/// `num / den`, or 0 with `flag` set when `den == 0`.
fn ratio(num: f64, den: f64, flag: &mut bool) -> f64 {
    if den == 0.0 {
        *flag = true;
        0.0
    } else {
        num / den
    }
}

/// One-vs-rest metrics per class. Zero denominators yield 0 and set the matching flag.
pub fn class_metrics(tp: u64, fp: u64, fn_: u64, tn: u64) -> ClassMetrics {
    let mut u = Undefined::default();
    let (tpf, fpf, fnf, tnf) = (tp as f64, fp as f64, fn_ as f64, tn as f64);
    let precision = ratio(tpf, tpf + fpf, &mut u.precision);
    let recall = ratio(tpf, tpf + fnf, &mut u.recall);
    let f1 = ratio(2.0 * precision * recall, precision + recall, &mut u.f1);
    let specificity = ratio(tnf, tnf + fpf, &mut u.specificity);
    let fpr = ratio(fpf, fpf + tnf, &mut u.fpr);
    let total = tpf + fpf + fnf + tnf;
    let accuracy = if total == 0.0 { 0.0 } else { (tpf + tnf) / total };
    ClassMetrics {
        tp,
        fp,
        fn_,
        tn,
        precision,
        recall,
        f1,
        specificity,
        fpr,
        accuracy,
        undefined: u,
    }
}

pub fn compute_metrics(matrix: &ConfusionMatrix) -> Result<Metrics> {
    let total = matrix.total();
    if total == 0 {
        return Err(Error::contract("no samples scored"));
    }
    let per_class: Vec<ClassMetrics> = (0..matrix.num_classes())
        .map(|c| {
            let tp = matrix.get(c, c);
            let fn_ = matrix.row_sum(c) - tp;
            let fp = matrix.col_sum(c) - tp;
            class_metrics(tp, fp, fn_, total - tp - fn_ - fp)
        })
        .collect();
    let n = per_class.len() as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / n;
    let macro_average = AverageMetrics {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
        specificity: mean(|m| m.specificity),
        fpr: mean(|m| m.fpr),
        accuracy: mean(|m| m.accuracy),
    };
    Ok(Metrics { per_class, macro_average })
}

impl Metrics {
    /// `class,precision,recall,f1,specificity,fpr,accuracy`, one row per class, then `average`.
    pub fn to_csv(&self, labels: &[String]) -> String {
        let mut out = String::from("class,precision,recall,f1,specificity,fpr,accuracy\n");
        for (m, label) in self.per_class.iter().zip(labels) {
            out.push_str(&format!(
                "{label},{},{},{},{},{},{}\n",
                m.precision, m.recall, m.f1, m.specificity, m.fpr, m.accuracy
            ));
        }
        let a = &self.macro_average;
        out.push_str(&format!(
            "average,{},{},{},{},{},{}\n",
            a.precision, a.recall, a.f1, a.specificity, a.fpr, a.accuracy
        ));
        out
    }
}
