//! Property tests for the box geometry primitives.

use detfuse::geometry::{iou, rescale, BBox, ImageMeta};
use proptest::prelude::*;

fn arb_box() -> impl Strategy<Value = BBox> {
    (
        0.0f64..500.0,
        0.0f64..500.0,
        0.0f64..200.0,
        0.0f64..200.0,
        0u32..5,
        0.0f64..=1.0,
    )
        .prop_map(|(x, y, w, h, class_id, confidence)| BBox {
            x_min: x,
            y_min: y,
            x_max: x + w,
            y_max: y + h,
            class_id,
            confidence,
        })
}

proptest! {
    #[test]
    fn iou_is_symmetric(a in arb_box(), b in arb_box()) {
        prop_assert_eq!(iou(&a, &b), iou(&b, &a));
    }

    #[test]
    fn iou_self_is_one_for_non_degenerate(a in arb_box()) {
        prop_assume!(a.area() > 0.0);
        prop_assert_eq!(iou(&a, &a), 1.0);
    }

    #[test]
    fn iou_is_bounded(a in arb_box(), b in arb_box()) {
        let v = iou(&a, &b);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn rescale_round_trips(
        b in arb_box(),
        w1 in 1u32..4000, h1 in 1u32..4000,
        w2 in 1u32..4000, h2 in 1u32..4000,
    ) {
        let m1 = ImageMeta::new("i", w1, h1).unwrap();
        let m2 = ImageMeta::new("i", w2, h2).unwrap();
        let back = rescale(&rescale(&b, &m1, &m2).unwrap(), &m2, &m1).unwrap();
        prop_assert!((back.x_min - b.x_min).abs() <= 1e-9);
        prop_assert!((back.y_min - b.y_min).abs() <= 1e-9);
        prop_assert!((back.x_max - b.x_max).abs() <= 1e-9);
        prop_assert!((back.y_max - b.y_max).abs() <= 1e-9);
        prop_assert_eq!(back.class_id, b.class_id);
        prop_assert_eq!(back.confidence, b.confidence);
    }

    #[test]
    fn iou_invariant_under_common_uniform_rescale(
        a in arb_box(), b in arb_box(), factor in 1u32..8
    ) {
        let from = ImageMeta::new("i", 1000, 1000).unwrap();
        let to = ImageMeta::new("i", 1000 * factor, 1000 * factor).unwrap();
        let (sa, sb) = (
            rescale(&a, &from, &to).unwrap(),
            rescale(&b, &from, &to).unwrap(),
        );
        prop_assert!((iou(&a, &b) - iou(&sa, &sb)).abs() <= 1e-12);
    }
}
