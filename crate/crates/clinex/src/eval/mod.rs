//! Scoring for both tasks: order alignment with five alignment-weighted F1
//! metrics (match, desc, reason, type, prov) and observation
//! precision/recall/F1, plus report rendering.
//!
//! Order scoring first aligns reference and hypothesis orders one-to-one by
//! maximizing total description token-set overlap (an exact assignment, not
//! a greedy pass), then aggregates each sub-metric over the aligned pairs:
//! precision normalizes by the hypothesis count, recall by the reference
//! count, and unmatched orders contribute zero everywhere. That construction
//! makes `match` an upper bound on every content metric by design.

mod assignment;
pub mod report;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{MedicalOrder, Observation};
use crate::retrieval::tokenize;

pub use report::{render_obs_report, render_order_report, ReportFormat};

/// Matching decisions run on weights quantized to this grid so optimal
/// totals are exact integer arithmetic (reported overlaps stay full f64).
const WEIGHT_SCALE: f64 = (1u64 << 20) as f64;

fn quantize(w: f64) -> i64 {
    (w * WEIGHT_SCALE).round() as i64
}

/// Token-set F1 of two strings under the shared tokenizer. Both empty token
/// sets count as perfect agreement, exactly one empty as zero.
pub fn token_set_f1(a: &str, b: &str) -> f64 {
    let a: BTreeSet<String> = tokenize(a).into_iter().collect();
    let b: BTreeSet<String> = tokenize(b).into_iter().collect();
    set_f1(&a, &b)
}

fn set_f1<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        (false, false) => {
            let inter = a.intersection(b).count();
            2.0 * inter as f64 / (a.len() + b.len()) as f64
        }
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// One-to-one alignment between reference and hypothesis orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    /// (ref_index, hyp_index, description token-set F1), ref-ascending.
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_refs: Vec<usize>,
    pub unmatched_hyps: Vec<usize>,
}

/// Align orders by maximizing summed description word overlap. Zero-overlap
/// pairs are never matched. Among equally optimal assignments the result
/// prefers lower ref index, then lower hyp index.
pub fn align_orders(refs: &[MedicalOrder], hyps: &[MedicalOrder]) -> Alignment {
    let overlaps: Vec<Vec<f64>> = refs
        .iter()
        .map(|r| hyps.iter().map(|h| token_set_f1(&r.description, &h.description)).collect())
        .collect();
    let weights: Vec<Vec<i64>> = overlaps
        .iter()
        .map(|row| row.iter().map(|&w| quantize(w)).collect())
        .collect();

    let optimal = assignment::max_weight_assignment(&weights).0;

    // Lexicographic refinement: walk refs in order and pin the lowest hyp
    // whose commitment still allows the optimal total.
    let mut pairs = Vec::new();
    let mut fixed_total = 0i64;
    let mut free_hyps: Vec<usize> = (0..hyps.len()).collect();
    let mut free_refs: Vec<usize> = (0..refs.len()).collect();

    for i in 0..refs.len() {
        free_refs.retain(|&r| r != i);
        let mut chosen = None;
        for (pos, &j) in free_hyps.iter().enumerate() {
            if weights[i][j] == 0 {
                continue;
            }
            let mut rest_cols = free_hyps.clone();
            rest_cols.remove(pos);
            let rest = assignment::max_weight_total(&weights, &free_refs, &rest_cols);
            if fixed_total + weights[i][j] + rest == optimal {
                chosen = Some((pos, j));
                break;
            }
        }
        if let Some((pos, j)) = chosen {
            fixed_total += weights[i][j];
            free_hyps.remove(pos);
            pairs.push((i, j, overlaps[i][j]));
        }
    }

    let matched_refs: BTreeSet<usize> = pairs.iter().map(|p| p.0).collect();
    let matched_hyps: BTreeSet<usize> = pairs.iter().map(|p| p.1).collect();
    Alignment {
        pairs,
        unmatched_refs: (0..refs.len()).filter(|i| !matched_refs.contains(i)).collect(),
        unmatched_hyps: (0..hyps.len()).filter(|j| !matched_hyps.contains(j)).collect(),
    }
}

/// Total description overlap of an alignment on the quantized grid; this is
/// the quantity the matcher maximizes.
pub fn alignment_total(alignment: &Alignment) -> i64 {
    alignment.pairs.iter().map(|&(_, _, w)| quantize(w)).sum()
}

/// The five order metrics, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderScores {
    #[serde(rename = "match")]
    pub match_: f64,
    pub desc: f64,
    pub reason: f64,
    #[serde(rename = "type")]
    pub type_: f64,
    pub prov: f64,
}

fn reason_overlap(a: Option<&str>, b: Option<&str>) -> f64 {
    token_set_f1(a.unwrap_or(""), b.unwrap_or(""))
}

fn provenance_f1(a: &[u32], b: &[u32]) -> f64 {
    let a: BTreeSet<u32> = a.iter().copied().collect();
    let b: BTreeSet<u32> = b.iter().copied().collect();
    set_f1(&a, &b)
}

/// Score an aligned document. Each pair contributes per sub-metric (match:
/// 1, desc/reason: token-set F1, type: equality, prov: set F1); sums are
/// normalized by |hyps| for precision and |refs| for recall and combined
/// harmonically. Two empty lists are perfect vacuous agreement.
pub fn score_orders(refs: &[MedicalOrder], hyps: &[MedicalOrder], alignment: &Alignment) -> OrderScores {
    if refs.is_empty() && hyps.is_empty() {
        return OrderScores { match_: 1.0, desc: 1.0, reason: 1.0, type_: 1.0, prov: 1.0 };
    }

    let mut sums = [0.0f64; 5];
    for &(ri, hi, desc_overlap) in &alignment.pairs {
        let (r, h) = (&refs[ri], &hyps[hi]);
        sums[0] += 1.0;
        sums[1] += desc_overlap;
        sums[2] += reason_overlap(r.reason.as_deref(), h.reason.as_deref());
        sums[3] += if r.order_type == h.order_type { 1.0 } else { 0.0 };
        sums[4] += provenance_f1(&r.provenance, &h.provenance);
    }

    let f1 = |sum: f64| {
        let p = if hyps.is_empty() { 0.0 } else { sum / hyps.len() as f64 };
        let r = if refs.is_empty() { 0.0 } else { sum / refs.len() as f64 };
        harmonic(p, r)
    };
    OrderScores {
        match_: f1(sums[0]),
        desc: f1(sums[1]),
        reason: f1(sums[2]),
        type_: f1(sums[3]),
        prov: f1(sums[4]),
    }
}

/// Convenience: align then score.
pub fn evaluate_orders(refs: &[MedicalOrder], hyps: &[MedicalOrder]) -> (Alignment, OrderScores) {
    let alignment = align_orders(refs, hyps);
    let scores = score_orders(refs, hyps, &alignment);
    (alignment, scores)
}

/// Observation precision/recall/F1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObsScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Score observations: a true positive needs equal row key AND equal
/// canonical value (set equality for multi-select). Duplicates match with
/// multiplicity.
pub fn score_observations(refs: &[Observation], hyps: &[Observation]) -> ObsScores {
    if refs.is_empty() && hyps.is_empty() {
        return ObsScores { precision: 1.0, recall: 1.0, f1: 1.0 };
    }
    let key = |o: &Observation| -> String {
        format!(
            "{}\u{0}{}",
            o.row_key,
            serde_json::to_string(&o.value).expect("value serializes")
        )
    };
    let mut counts: std::collections::BTreeMap<String, (usize, usize)> = Default::default();
    for r in refs {
        counts.entry(key(r)).or_default().0 += 1;
    }
    for h in hyps {
        counts.entry(key(h)).or_default().1 += 1;
    }
    let tp: usize = counts.values().map(|&(r, h)| r.min(h)).sum();
    let precision = if hyps.is_empty() { 0.0 } else { tp as f64 / hyps.len() as f64 };
    let recall = if refs.is_empty() { 0.0 } else { tp as f64 / refs.len() as f64 };
    ObsScores { precision, recall, f1: harmonic(precision, recall) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CanonicalValue, OrderType};

    fn order(desc: &str) -> MedicalOrder {
        MedicalOrder {
            description: desc.into(),
            order_type: OrderType::Lab,
            reason: None,
            provenance: vec![],
        }
    }

    fn obs(key: &str, value: CanonicalValue) -> Observation {
        Observation { row_key: key.into(), raw_span: String::new(), value }
    }

    // Hand-computed token-set F1: ref {ct, of, chest} vs hyp {chest, ct}
    // gives P=1.0, R=2/3, F1=0.8.
    #[test]
    fn description_overlap_hand_case() {
        let alignment = align_orders(&[order("CT of chest")], &[order("chest CT")]);
        assert_eq!(alignment.pairs.len(), 1);
        let (ri, hi, f1) = alignment.pairs[0];
        assert_eq!((ri, hi), (0, 0));
        assert!((f1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn zero_overlap_stays_unmatched() {
        let alignment = align_orders(&[order("amoxicillin")], &[order("chest x-ray")]);
        assert!(alignment.pairs.is_empty());
        assert_eq!(alignment.unmatched_refs, vec![0]);
        assert_eq!(alignment.unmatched_hyps, vec![0]);
    }

    #[test]
    fn alignment_prefers_lower_indices_on_ties() {
        // Two identical refs and hyps: every matching is optimal, so the
        // tie-break must produce (0,0) and (1,1).
        let refs = vec![order("cbc panel"), order("cbc panel")];
        let hyps = vec![order("cbc panel"), order("cbc panel")];
        let alignment = align_orders(&refs, &hyps);
        assert_eq!(alignment.pairs[0].0, 0);
        assert_eq!(alignment.pairs[0].1, 0);
        assert_eq!(alignment.pairs[1].0, 1);
        assert_eq!(alignment.pairs[1].1, 1);
    }

    #[test]
    fn alignment_is_globally_optimal_not_greedy() {
        // A greedy ref-major pass would hand ref0 its first-best hyp0
        // (overlap 2/3) and leave ref1 with nothing, total 2/3. The optimal
        // assignment is ref0-hyp1 (2/3) plus ref1-hyp0 (1.0), total 5/3.
        let refs = vec![order("chest ct"), order("chest")];
        let hyps = vec![order("chest"), order("ct")];
        let alignment = align_orders(&refs, &hyps);
        assert_eq!(alignment.pairs.len(), 2);
        assert_eq!((alignment.pairs[0].0, alignment.pairs[0].1), (0, 1));
        assert_eq!((alignment.pairs[1].0, alignment.pairs[1].1), (1, 0));
        let total: f64 = alignment.pairs.iter().map(|p| p.2).sum();
        assert!((total - 5.0 / 3.0).abs() < 1e-9, "total {total}");
    }

    // Hand arithmetic: 2 refs, 3 hyps, both refs matched:
    // match = hm(2/3, 2/2) = 0.8.
    #[test]
    fn match_score_hand_case() {
        let refs = vec![order("cbc"), order("chest xray")];
        let hyps = vec![order("cbc"), order("chest xray"), order("mri brain")];
        let (alignment, scores) = evaluate_orders(&refs, &hyps);
        assert_eq!(alignment.pairs.len(), 2);
        assert!((scores.match_ - 0.8).abs() < 1e-9);
    }

    // Set-F1 hand arithmetic: prov ref {45,46} vs hyp {45}: 2*1/(2+1) = 2/3.
    #[test]
    fn provenance_pair_contribution() {
        assert!((provenance_f1(&[45, 46], &[45]) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identical_lists_score_one_everywhere() {
        let refs = vec![
            MedicalOrder {
                description: "CT of Chest".into(),
                order_type: OrderType::Imaging,
                reason: Some("infection".into()),
                provenance: vec![45, 46],
            },
            MedicalOrder {
                description: "amoxicillin".into(),
                order_type: OrderType::Medication,
                reason: None,
                provenance: vec![12],
            },
        ];
        let (_, scores) = evaluate_orders(&refs, &refs.clone());
        for v in [scores.match_, scores.desc, scores.reason, scores.type_, scores.prov] {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuous_case_is_all_ones_and_one_sided_empty_is_zero() {
        let (_, scores) = evaluate_orders(&[], &[]);
        assert_eq!(scores.match_, 1.0);
        assert_eq!(scores.prov, 1.0);

        let refs = vec![order("cbc")];
        let (_, scores) = evaluate_orders(&refs, &[]);
        assert_eq!(scores.match_, 0.0);
        assert_eq!(scores.desc, 0.0);
    }

    #[test]
    fn absent_reasons_agree_one_sided_absence_scores_zero() {
        assert_eq!(reason_overlap(None, None), 1.0);
        assert_eq!(reason_overlap(Some("infection"), None), 0.0);
        assert_eq!(reason_overlap(None, Some("infection")), 0.0);
        assert_eq!(reason_overlap(Some("infection"), Some("infection")), 1.0);
    }

    #[test]
    fn sub_metrics_never_exceed_match() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let vocab = ["cbc", "chest", "ct", "xray", "panel", "lipid", "mri", "brain"];
        let types = [OrderType::Medication, OrderType::Lab, OrderType::Followup, OrderType::Imaging];
        fn make(rng: &mut rand_chacha::ChaCha8Rng, vocab: &[&str], types: &[OrderType], n: usize) -> Vec<MedicalOrder> {
            (0..n)
                .map(|_| {
                    let k = rng.gen_range(1..=3);
                    let desc: Vec<String> =
                        (0..k).map(|_| vocab[rng.gen_range(0..vocab.len())].to_string()).collect();
                    let mut order = MedicalOrder {
                        description: desc.join(" "),
                        order_type: types[rng.gen_range(0..4)],
                        reason: if rng.gen_bool(0.5) {
                            Some(vocab[rng.gen_range(0..vocab.len())].to_string())
                        } else {
                            None
                        },
                        provenance: (0..rng.gen_range(0..3)).map(|_| rng.gen_range(1..20)).collect(),
                    };
                    order.normalize();
                    order
                })
                .collect()
        }
        for _ in 0..300 {
            let nr = rng.gen_range(0..5);
            let nh = rng.gen_range(0..5);
            let refs = make(&mut rng, &vocab, &types, nr);
            let hyps = make(&mut rng, &vocab, &types, nh);
            let (_, s) = evaluate_orders(&refs, &hyps);
            for (name, v) in [("desc", s.desc), ("reason", s.reason), ("type", s.type_), ("prov", s.prov)] {
                assert!(
                    v <= s.match_ + 1e-12,
                    "{name}={v} exceeds match={} for refs={refs:?} hyps={hyps:?}",
                    s.match_
                );
            }
        }
    }

    #[test]
    fn hyp_order_permutation_does_not_change_scores() {
        let refs = vec![order("cbc panel"), order("chest xray"), order("mri brain")];
        let hyps = vec![order("chest xray"), order("cbc"), order("brain mri scan")];
        let (_, base) = evaluate_orders(&refs, &hyps);
        let mut shuffled = hyps.clone();
        shuffled.rotate_left(1);
        let (_, rotated) = evaluate_orders(&refs, &shuffled);
        assert_eq!(base, rotated);
    }

    #[test]
    fn observation_scoring_identity_and_empty() {
        let refs: Vec<Observation> = (0..5)
            .map(|i| obs(&format!("Row {i}"), CanonicalValue::Number(i as f64)))
            .collect();
        let s = score_observations(&refs, &refs.clone());
        assert_eq!(s.f1, 1.0);

        let s = score_observations(&refs, &[]);
        assert_eq!(s.f1, 0.0);

        let s = score_observations(&[], &[]);
        assert_eq!(s.f1, 1.0);
    }

    // Counting oracle: refs has 4, hyps has 3 correct + 1 wrong value.
    #[test]
    fn observation_scoring_partial() {
        let refs = vec![
            obs("Pulse rate", CanonicalValue::Number(88.0)),
            obs("Pain present", CanonicalValue::Bool(true)),
            obs("Urine colour", CanonicalValue::Text("dark yellow".into())),
            obs("Respiration rate", CanonicalValue::Number(16.0)),
        ];
        let hyps = vec![
            obs("Pulse rate", CanonicalValue::Number(88.0)),
            obs("Pain present", CanonicalValue::Bool(true)),
            obs("Urine colour", CanonicalValue::Text("dark yellow".into())),
            obs("Respiration rate", CanonicalValue::Number(22.0)),
        ];
        let s = score_observations(&refs, &hyps);
        assert!((s.precision - 0.75).abs() < 1e-12);
        assert!((s.recall - 0.75).abs() < 1e-12);
        assert!((s.f1 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn multi_select_values_compare_as_sets() {
        let a = obs("Wound care", CanonicalValue::set(vec!["cleaned".into(), "dressed".into()]));
        let b = obs("Wound care", CanonicalValue::set(vec!["dressed".into(), "cleaned".into()]));
        let s = score_observations(&[a], &[b]);
        assert_eq!(s.f1, 1.0);
    }

    #[test]
    fn duplicate_observations_match_with_multiplicity() {
        let r = obs("Pain present", CanonicalValue::Bool(true));
        let s = score_observations(&[r.clone(), r.clone()], std::slice::from_ref(&r));
        assert!((s.recall - 0.5).abs() < 1e-12);
        assert!((s.precision - 1.0).abs() < 1e-12);
    }
}
