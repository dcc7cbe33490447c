use grfkit::maskfusion::BinaryMask;
use grfkit::metrics::{confusion, dsc, fne, fpe, iou};
use proptest::prelude::*;

/// Recall and specificity counted directly from the pixels.
fn naive(pred: &BinaryMask, gt: &BinaryMask) -> (f64, f64, f64, f64) {
    let p = pred.bits();
    let g = gt.bits();
    let inter = p.iter().zip(g).filter(|(a, b)| **a && **b).count() as f64;
    let union = p.iter().zip(g).filter(|(a, b)| **a || **b).count() as f64;
    let sizes = (p.iter().filter(|b| **b).count() + g.iter().filter(|b| **b).count()) as f64;
    let gt_pos = g.iter().filter(|b| **b).count() as f64;
    let gt_neg = g.len() as f64 - gt_pos;
    let true_neg = p.iter().zip(g).filter(|(a, b)| !**a && !**b).count() as f64;
    let iou = if union == 0.0 { 1.0 } else { inter / union };
    let dsc = if sizes == 0.0 { 1.0 } else { 2.0 * inter / sizes };
    let recall = if gt_pos == 0.0 { 1.0 } else { inter / gt_pos };
    let specificity = if gt_neg == 0.0 { 1.0 } else { true_neg / gt_neg };
    (iou, dsc, 1.0 - specificity, 1.0 - recall)
}

fn pair() -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
    (proptest::collection::vec(any::<bool>(), 64), proptest::collection::vec(any::<bool>(), 64))
        .prop_map(|(a, b)| (BinaryMask::new(8, 8, a).unwrap(), BinaryMask::new(8, 8, b).unwrap()))
}

proptest! {
    #[test]
    fn matches_naive_counting((pred, gt) in pair()) {
        let c = confusion(&pred, &gt).unwrap();
        prop_assert_eq!(c.total(), 64);
        let (i, d, fp, fn_) = naive(&pred, &gt);
        prop_assert!((iou(&c) - i).abs() < 1e-12);
        prop_assert!((dsc(&c) - d).abs() < 1e-12);
        prop_assert!((fpe(&c) - fp).abs() < 1e-12);
        prop_assert!((fne(&c) - fn_).abs() < 1e-12);
    }

    #[test]
    fn overlap_metrics_are_symmetric((pred, gt) in pair()) {
        let a = confusion(&pred, &gt).unwrap();
        let b = confusion(&gt, &pred).unwrap();
        prop_assert_eq!(iou(&a), iou(&b));
        prop_assert_eq!(dsc(&a), dsc(&b));
    }

    #[test]
    fn dice_iou_relation((pred, gt) in pair()) {
        let c = confusion(&pred, &gt).unwrap();
        let (i, d) = (iou(&c), dsc(&c));
        prop_assert!(0.0 <= i && i <= d && d <= 1.0);
        prop_assert!((d - 2.0 * i / (1.0 + i)).abs() < 1e-12);
    }
}
