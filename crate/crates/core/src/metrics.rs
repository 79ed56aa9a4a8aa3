//! Threshold-level classification and group fairness metrics.
//!
//! A row is predicted positive when its score is strictly greater than the
//! threshold. Group 0 is the unprivileged group, group 1 the privileged one.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Counts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn predicted_positive(&self) -> usize {
        self.tp + self.fp
    }

    pub fn actual_positive(&self) -> usize {
        self.tp + self.fn_
    }

    fn record(&mut self, label: u8, positive: bool) {
        match (label == 1, positive) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }
}

/// Confusion counts split by protected group.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GroupConfusion {
    pub groups: [Counts; 2],
}

impl GroupConfusion {
    pub fn group(&self, z: u8) -> &Counts {
        &self.groups[z as usize]
    }

    pub fn overall(&self) -> Counts {
        let [a, b] = self.groups;
        Counts {
            tp: a.tp + b.tp,
            fp: a.fp + b.fp,
            tn: a.tn + b.tn,
            fn_: a.fn_ + b.fn_,
        }
    }

    fn check_nonempty(&self) -> Result<()> {
        for z in 0..2u8 {
            if self.group(z).total() == 0 {
                return Err(Error::GroupEmpty(z));
            }
        }
        Ok(())
    }

    /// P(Ȳ=1 | Z=z).
    pub fn positive_rate<T: Scalar>(&self, z: u8) -> Result<T> {
        let g = self.group(z);
        if g.total() == 0 {
            return Err(Error::GroupEmpty(z));
        }
        Ok(T::of_usize(g.predicted_positive()) / T::of_usize(g.total()))
    }

    pub fn tpr<T: Scalar>(&self, z: u8) -> Result<T> {
        let g = self.group(z);
        if g.actual_positive() == 0 {
            return Err(Error::UndefinedTpr(z));
        }
        Ok(T::of_usize(g.tp) / T::of_usize(g.actual_positive()))
    }
}

fn check_lengths(a: usize, b: usize, c: usize) -> Result<()> {
    if a != b || b != c {
        return Err(Error::Input(format!("length mismatch: {a}, {b}, {c}")));
    }
    Ok(())
}

pub fn confusion_by_group<T: Scalar>(
    labels: &[u8],
    protected: &[u8],
    scores: &[T],
    threshold: T,
) -> Result<GroupConfusion> {
    check_lengths(labels.len(), protected.len(), scores.len())?;
    if !(threshold >= T::zero() && threshold <= T::one()) {
        return Err(Error::Parameter(format!("threshold {threshold} outside [0, 1]")));
    }
    let mut c = GroupConfusion::default();
    for ((&y, &z), &s) in labels.iter().zip(protected).zip(scores) {
        c.groups[z as usize].record(y, s > threshold);
    }
    c.check_nonempty()?;
    Ok(c)
}

/// Minimum of the two ratios of group positive-prediction rates.
///
/// Returns 1 when neither group receives a positive prediction and 0 when
/// exactly one does not.
pub fn disparate_impact<T: Scalar>(c: &GroupConfusion) -> Result<T> {
    let r0: T = c.positive_rate(0)?;
    let r1: T = c.positive_rate(1)?;
    Ok(match (r0 == T::zero(), r1 == T::zero()) {
        (true, true) => T::one(),
        (true, false) | (false, true) => T::zero(),
        _ => (r0 / r1).min(r1 / r0),
    })
}

/// One minus the absolute gap between group true positive rates.
pub fn equality_of_opportunity<T: Scalar>(c: &GroupConfusion) -> Result<T> {
    c.check_nonempty()?;
    let t0: T = c.tpr(0)?;
    let t1: T = c.tpr(1)?;
    Ok(T::one() - (t0 - t1).abs())
}

pub fn statistical_parity_difference<T: Scalar>(c: &GroupConfusion) -> Result<T> {
    let r0: T = c.positive_rate(0)?;
    let r1: T = c.positive_rate(1)?;
    Ok((r1 - r0).abs())
}

/// Area under the ROC curve as the Mann-Whitney statistic with midranks.
pub fn auc<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<T> {
    if scores.len() != labels.len() {
        return Err(Error::Input(format!(
            "length mismatch: {} scores, {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("NaN score"));

    // Sum of (doubled) midranks of positives; ranks start at 1.
    let mut doubled_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let doubled_midrank = (i + 1 + j + 1) as u128;
        let positives = order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as u128;
        doubled_rank_sum += doubled_midrank * positives;
        i = j + 1;
    }
    // U = R⁺ − n⁺(n⁺+1)/2, kept in doubled integer arithmetic until the end.
    let n_pos_u = n_pos as u128;
    let doubled_u = doubled_rank_sum - n_pos_u * (n_pos_u + 1);
    Ok(T::of(doubled_u as f64) / (T::two() * T::of_usize(n_pos) * T::of_usize(n_neg)))
}

/// Mean squared difference between scores and labels.
pub fn brier<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<T> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(Error::Input("brier needs equal, nonempty inputs".into()));
    }
    let sum: T = scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| {
            let e = s - T::of(f64::from(y));
            e * e
        })
        .sum();
    Ok(sum / T::of_usize(scores.len()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdMetrics<T> {
    pub accuracy: T,
    /// TP / (TP + FP), 1 when nothing is predicted positive.
    pub precision: T,
    pub tpr: [T; 2],
    pub positive_rate: [T; 2],
    pub di: T,
    pub eo: T,
    pub spd: T,
}

impl<T: Scalar> ThresholdMetrics<T> {
    pub fn from_confusion(c: &GroupConfusion) -> Result<Self> {
        let all = c.overall();
        let accuracy = T::of_usize(all.tp + all.tn) / T::of_usize(all.total());
        let precision = if all.predicted_positive() == 0 {
            T::one()
        } else {
            T::of_usize(all.tp) / T::of_usize(all.predicted_positive())
        };
        Ok(Self {
            accuracy,
            precision,
            tpr: [c.tpr(0)?, c.tpr(1)?],
            positive_rate: [c.positive_rate(0)?, c.positive_rate(1)?],
            di: disparate_impact(c)?,
            eo: equality_of_opportunity(c)?,
            spd: statistical_parity_difference(c)?,
        })
    }
}

pub fn threshold_metrics<T: Scalar>(
    labels: &[u8],
    protected: &[u8],
    scores: &[T],
    threshold: T,
) -> Result<ThresholdMetrics<T>> {
    ThresholdMetrics::from_confusion(&confusion_by_group(labels, protected, scores, threshold)?)
}
