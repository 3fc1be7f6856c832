//! Scoring metrics: ROC/AUC via the rank statistic, ROC curve export,
//! and the ISO presentation-attack error rates.

use crate::error::{Error, Result};

/// Class label of a scored sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Target,
    Anomaly,
}

/// Scores paired with labels; larger score means more target-like.
#[derive(Debug, Clone)]
pub struct ScoredSet {
    pub scores: Vec<f64>,
    pub labels: Vec<Label>,
    /// Attack-instrument species per sample; required for anomalies when
    /// computing presentation-attack metrics, ignored for targets.
    pub species: Option<Vec<String>>,
}

impl ScoredSet {
    pub fn new(scores: Vec<f64>, labels: Vec<Label>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Shape {
                context: "scored set",
                expected: format!("{} labels", scores.len()),
                got: format!("{}", labels.len()),
            });
        }
        Ok(Self { scores, labels, species: None })
    }

    pub fn with_species(mut self, species: Vec<String>) -> Result<Self> {
        if species.len() != self.scores.len() {
            return Err(Error::Shape {
                context: "species tags",
                expected: format!("{}", self.scores.len()),
                got: format!("{}", species.len()),
            });
        }
        self.species = Some(species);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == Label::Target).count();
        (pos, self.len() - pos)
    }
}

/// Area under the ROC curve with targets as the positive class.
///
/// Computed as the normalized rank-sum statistic with midrank tie
/// handling, so tied target/anomaly pairs contribute one half.
pub fn roc_auc(s: &ScoredSet) -> Result<f64> {
    let (pos, neg) = s.class_counts();
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "AUC needs both classes; got {pos} targets and {neg} anomalies"
        )));
    }
    if s.scores.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidData("scores contain NaN".into()));
    }
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s.scores[a].partial_cmp(&s.scores[b]).unwrap());

    // midranks over ties, 1-based
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && s.scores[order[j + 1]] == s.scores[order[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if s.labels[idx] == Label::Target {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let pos_f = pos as f64;
    let u = rank_sum_pos - pos_f * (pos_f + 1.0) / 2.0;
    Ok(u / (pos_f * neg as f64))
}

/// ROC curve as (false-positive rate, true-positive rate) points,
/// beginning at (0,0) and ending at (1,1); thresholds sweep from high
/// to low scores, grouping ties.
pub fn roc_curve(s: &ScoredSet) -> Result<Vec<(f64, f64)>> {
    let (pos, neg) = s.class_counts();
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(
            "ROC curve needs both classes".into(),
        ));
    }
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s.scores[b].partial_cmp(&s.scores[a]).unwrap());
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && s.scores[order[j + 1]] == s.scores[order[i]] {
            j += 1;
        }
        for &idx in &order[i..=j] {
            match s.labels[idx] {
                Label::Target => tp += 1,
                Label::Anomaly => fp += 1,
            }
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        i = j + 1;
    }
    Ok(points)
}

/// Presentation-attack detection report at one operating threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct PadReport {
    /// Worst attack-acceptance rate across instrument species.
    pub apcer: f64,
    /// Bona fide rejection rate.
    pub bpcer: f64,
    /// `(apcer + bpcer) / 2`.
    pub acer: f64,
    pub per_species: Vec<(String, f64)>,
}

/// Attack/bona-fide error rates at a threshold: samples scoring strictly
/// above the threshold are accepted as bona fide.
///
/// Per species, APCER is the fraction of that species' attacks accepted;
/// the reported APCER is the maximum over species. BPCER is the fraction
/// of targets scored at or below the threshold.
pub fn pad_metrics(s: &ScoredSet, threshold: f64) -> Result<PadReport> {
    let species = s.species.as_ref().ok_or(Error::MissingSpecies(0))?;
    let mut target_total = 0usize;
    let mut target_rejected = 0usize;
    let mut groups: Vec<(String, usize, usize)> = Vec::new(); // name, accepted, total
    for i in 0..s.len() {
        match s.labels[i] {
            Label::Target => {
                target_total += 1;
                if s.scores[i] <= threshold {
                    target_rejected += 1;
                }
            }
            Label::Anomaly => {
                let tag = species[i].trim();
                if tag.is_empty() {
                    return Err(Error::MissingSpecies(i));
                }
                let accepted = usize::from(s.scores[i] > threshold);
                match groups.iter_mut().find(|(name, _, _)| name == tag) {
                    Some((_, acc, tot)) => {
                        *acc += accepted;
                        *tot += 1;
                    }
                    None => groups.push((tag.to_string(), accepted, 1)),
                }
            }
        }
    }
    if target_total == 0 || groups.is_empty() {
        return Err(Error::UndefinedMetric(
            "presentation-attack metrics need targets and at least one attack species".into(),
        ));
    }
    let per_species: Vec<(String, f64)> = groups
        .into_iter()
        .map(|(name, acc, tot)| (name, acc as f64 / tot as f64))
        .collect();
    let apcer = per_species
        .iter()
        .map(|(_, r)| *r)
        .fold(f64::NEG_INFINITY, f64::max);
    let bpcer = target_rejected as f64 / target_total as f64;
    Ok(PadReport {
        apcer,
        bpcer,
        acer: (apcer + bpcer) / 2.0,
        per_species,
    })
}

/// Threshold at the equal-error-rate point: minimizes the gap between
/// the overall attack-acceptance rate and the bona fide rejection rate
/// over midpoints of adjacent distinct scores (ties go to the lower
/// threshold).
pub fn eer_threshold(s: &ScoredSet) -> Result<f64> {
    let (pos, neg) = s.class_counts();
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(
            "threshold selection needs both classes".into(),
        ));
    }
    let mut sorted: Vec<f64> = s.scores.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();
    let mut candidates = Vec::with_capacity(sorted.len() + 1);
    candidates.push(sorted[0] - 1.0);
    for w in sorted.windows(2) {
        candidates.push(0.5 * (w[0] + w[1]));
    }
    candidates.push(sorted[sorted.len() - 1] + 1.0);

    let mut best = (f64::INFINITY, f64::NEG_INFINITY);
    for &thr in &candidates {
        let mut far = 0usize; // anomalies accepted
        let mut frr = 0usize; // targets rejected
        for i in 0..s.len() {
            match s.labels[i] {
                Label::Anomaly if s.scores[i] > thr => far += 1,
                Label::Target if s.scores[i] <= thr => frr += 1,
                _ => {}
            }
        }
        let gap = (far as f64 / neg as f64 - frr as f64 / pos as f64).abs();
        if gap < best.0 {
            best = (gap, thr);
        }
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    /// Brute-force pair-counting reference: ties count one half.
    fn auc_oracle(s: &ScoredSet) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..s.len() {
            if s.labels[i] != Label::Target {
                continue;
            }
            for j in 0..s.len() {
                if s.labels[j] != Label::Anomaly {
                    continue;
                }
                pairs += 1.0;
                if s.scores[i] > s.scores[j] {
                    wins += 1.0;
                } else if s.scores[i] == s.scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    fn set(scores: &[f64], labels: &[Label]) -> ScoredSet {
        ScoredSet::new(scores.to_vec(), labels.to_vec()).unwrap()
    }

    #[test]
    fn auc_separated_tied_and_mixed() {
        use Label::*;
        let perfect = set(&[0.9, 0.8, 0.1, 0.2], &[Target, Target, Anomaly, Anomaly]);
        assert_eq!(roc_auc(&perfect).unwrap(), 1.0);

        let all_equal = set(&[0.5, 0.5, 0.5, 0.5], &[Target, Target, Anomaly, Anomaly]);
        assert_eq!(roc_auc(&all_equal).unwrap(), 0.5);

        // 3 of 4 pairs correctly ordered
        let mixed = set(&[0.9, 0.8, 0.85, 0.1], &[Target, Target, Anomaly, Anomaly]);
        assert_eq!(roc_auc(&mixed).unwrap(), 0.75);
    }

    #[test]
    fn auc_single_class_errors() {
        let only_pos = set(&[0.1, 0.2], &[Label::Target, Label::Target]);
        assert!(matches!(
            roc_auc(&only_pos),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn auc_matches_pair_counting_oracle_exactly() {
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        for _ in 0..300 {
            let m = rng.gen_range(2..60);
            let mut labels = Vec::with_capacity(m);
            let mut scores = Vec::with_capacity(m);
            for _ in 0..m {
                labels.push(if rng.gen_bool(0.5) { Label::Target } else { Label::Anomaly });
                // coarse grid forces plenty of ties
                scores.push((rng.gen_range(0..8) as f64) / 4.0);
            }
            let s = ScoredSet::new(scores, labels).unwrap();
            let (pos, neg) = s.class_counts();
            if pos == 0 || neg == 0 {
                continue;
            }
            assert_eq!(roc_auc(&s).unwrap(), auc_oracle(&s));
        }
    }

    #[test]
    fn auc_invariances() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..50 {
            let m = rng.gen_range(4..40);
            let mut labels: Vec<Label> = (0..m)
                .map(|i| if i % 2 == 0 { Label::Target } else { Label::Anomaly })
                .collect();
            labels.shuffle(&mut rng);
            let scores: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let s = ScoredSet::new(scores.clone(), labels.clone()).unwrap();
            let auc = roc_auc(&s).unwrap();

            // monotone transform
            let transformed: Vec<f64> = scores.iter().map(|v| (0.5 * v).exp() + 3.0).collect();
            let st = ScoredSet::new(transformed, labels.clone()).unwrap();
            assert_eq!(roc_auc(&st).unwrap(), auc);

            // negation flips
            let negated: Vec<f64> = scores.iter().map(|v| -v).collect();
            let sn = ScoredSet::new(negated, labels).unwrap();
            assert!((roc_auc(&sn).unwrap() - (1.0 - auc)).abs() < 1e-12);
        }
    }

    #[test]
    fn roc_curve_endpoints_and_area() {
        use Label::*;
        let s = set(&[0.9, 0.4, 0.6, 0.2], &[Target, Target, Anomaly, Anomaly]);
        let curve = roc_curve(&s).unwrap();
        assert_eq!(curve.first(), Some(&(0.0, 0.0)));
        assert_eq!(curve.last(), Some(&(1.0, 1.0)));
        // trapezoid area equals the rank AUC on tie-free scores
        let mut area = 0.0;
        for w in curve.windows(2) {
            area += (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0;
        }
        assert!((area - roc_auc(&s).unwrap()).abs() < 1e-12);
    }

    fn pad_set() -> ScoredSet {
        use Label::*;
        ScoredSet::new(
            vec![0.9, 0.8, 0.3, 0.7, 0.2, 0.6],
            vec![Target, Target, Anomaly, Anomaly, Anomaly, Anomaly],
        )
        .unwrap()
        .with_species(vec![
            String::new(),
            String::new(),
            "print".into(),
            "print".into(),
            "replay".into(),
            "replay".into(),
        ])
        .unwrap()
    }

    #[test]
    fn pad_threshold_extremes() {
        let s = pad_set();
        let low = pad_metrics(&s, -10.0).unwrap();
        assert_eq!(low.apcer, 1.0);
        assert_eq!(low.bpcer, 0.0);
        assert_eq!(low.acer, 0.5);

        let high = pad_metrics(&s, 10.0).unwrap();
        assert_eq!(high.apcer, 0.0);
        assert_eq!(high.bpcer, 1.0);
    }

    #[test]
    fn pad_worst_species_and_acer() {
        // threshold 0.5: print accepts 1/2, replay accepts 1/2? scores:
        // print {0.3, 0.7} -> 0.7 accepted (0.5), replay {0.2, 0.6} -> 0.6 accepted
        let s = pad_set();
        let report = pad_metrics(&s, 0.5).unwrap();
        assert_eq!(report.apcer, 0.5);
        assert_eq!(report.bpcer, 0.0);
        assert_eq!(report.acer, 0.25);

        // two species with different rates: worst one defines APCER
        use Label::*;
        let uneven = ScoredSet::new(
            vec![0.95, 0.9, 0.8, 0.1, 0.85, 0.82, 0.05, 0.04, 0.03],
            vec![
                Target, Target, Anomaly, Anomaly, Anomaly, Anomaly, Anomaly, Anomaly, Anomaly,
            ],
        )
        .unwrap()
        .with_species(vec![
            String::new(),
            String::new(),
            "a".into(),
            "a".into(),
            "b".into(),
            "b".into(),
            "b".into(),
            "b".into(),
            "b".into(),
        ])
        .unwrap();
        let report = pad_metrics(&uneven, 0.5).unwrap();
        // species a: 1/2 accepted; species b: 2/5 accepted
        assert_eq!(report.apcer, 0.5);
        assert_eq!(report.bpcer, 0.0);
        assert_eq!(report.acer, 0.25);
    }

    #[test]
    fn pad_missing_species_errors() {
        use Label::*;
        let s = ScoredSet::new(vec![0.9, 0.1], vec![Target, Anomaly]).unwrap();
        assert!(matches!(pad_metrics(&s, 0.5), Err(Error::MissingSpecies(_))));
        let s2 = ScoredSet::new(vec![0.9, 0.1], vec![Target, Anomaly])
            .unwrap()
            .with_species(vec!["x".into(), "".into()])
            .unwrap();
        assert!(matches!(pad_metrics(&s2, 0.5), Err(Error::MissingSpecies(1))));
    }

    #[test]
    fn eer_threshold_separates_clean_data() {
        use Label::*;
        let s = set(&[0.9, 0.8, 0.2, 0.1], &[Target, Target, Anomaly, Anomaly]);
        let thr = eer_threshold(&s).unwrap();
        assert!(thr > 0.2 && thr < 0.8, "threshold {thr}");
        let species = vec![String::new(), String::new(), "a".into(), "a".into()];
        let tagged = s.with_species(species).unwrap();
        let report = pad_metrics(&tagged, thr).unwrap();
        assert_eq!(report.acer, 0.0);
    }
}
