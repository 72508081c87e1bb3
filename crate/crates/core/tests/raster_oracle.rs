use dotedge::detector::count_in_rect;
use dotedge::geometry::{OrientedRect, Point};
use dotedge::rng::{stream, Domain};
use dotedge::synthesis::{rasterize_edge, EdgeSpec};
use dotedge::BinaryImage;
use proptest::prelude::*;
use rand::Rng;

/// Pixels whose center is within half the width of the axis segment, by
/// projecting onto the infinite line and clamping the along coordinate to a
/// half-open interval.
fn brute_force_edge(spec: &EdgeSpec, canvas: (usize, usize)) -> Vec<(u32, u32)> {
    let (s, c) = spec.angle.sin_cos();
    let a = Point::new(spec.midpoint.x - 0.5 * spec.length * c, spec.midpoint.y - 0.5 * spec.length * s);
    let mut out = Vec::new();
    for y in 0..canvas.1 {
        for x in 0..canvas.0 {
            let (px, py) = (x as f64 + 0.5 - a.x, y as f64 + 0.5 - a.y);
            let along = px * c + py * s;
            let signed = py * c - px * s;
            if (0.0..spec.length).contains(&along) && (-0.5 * spec.width..0.5 * spec.width).contains(&signed) {
                out.push((x as u32, y as u32));
            }
        }
    }
    out
}

fn lit(img: &BinaryImage) -> Vec<(u32, u32)> {
    let mut v = img.white_pixels();
    v.sort_by_key(|&(x, y)| (y, x));
    v
}

#[test]
fn diagonal_edge_matches_distance_oracle() {
    let spec = EdgeSpec::fixed(Point::new(150.5, 150.0), std::f64::consts::FRAC_PI_4, 200.0, 1.0);
    let img = rasterize_edge(&spec, (300, 300), 0).unwrap();
    let want = brute_force_edge(&spec, (300, 300));
    assert_eq!(lit(&img), want);
    assert!((200..=290).contains(&want.len()), "{}", want.len());
}

#[test]
fn axis_aligned_edges_have_nominal_area() {
    for (angle, w) in [(0.0, 1.0), (std::f64::consts::FRAC_PI_2, 1.0), (0.0, 3.0)] {
        let spec = EdgeSpec::fixed(Point::new(150.0, 150.5), angle, 200.0, w);
        let spec = if angle == 0.0 { spec } else { EdgeSpec { midpoint: Point::new(150.5, 150.0), ..spec } };
        let img = rasterize_edge(&spec, (300, 300), 0).unwrap();
        assert_eq!(img.count_ones() as f64, 200.0 * w);
    }
}

fn brute_count(img: &BinaryImage, rect: &OrientedRect, exclude: [(u32, u32); 2]) -> u64 {
    let mut k = 0;
    for y in 0..img.height() {
        for x in 0..img.width() {
            let p = (x as u32, y as u32);
            if img.get(x, y) && !exclude.contains(&p) && rect.contains(Point::new(x as f64 + 0.5, y as f64 + 0.5)) {
                k += 1;
            }
        }
    }
    k
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn random_edges_match_oracle(
        mx in 100.0f64..200.0, my in 100.0f64..200.0,
        angle in 0.0f64..std::f64::consts::TAU,
        width in 1u32..5,
    ) {
        let spec = EdgeSpec::fixed(Point::new(mx, my), angle, 120.0, width as f64);
        let img = rasterize_edge(&spec, (300, 300), 0).unwrap();
        prop_assert_eq!(lit(&img), brute_force_edge(&spec, (300, 300)));
    }

    #[test]
    fn count_matches_full_scan(seed in 0u64..1000, w in 1u32..9, len in 3.0f64..40.0) {
        let mut rng = stream(seed, Domain::Oracle, 7);
        let mut img = BinaryImage::new(48, 40);
        for y in 0..40 {
            for x in 0..48 {
                img.set(x, y, rng.random_bool(0.3));
            }
        }
        let a = (rng.random_range(0..48u32), rng.random_range(0..40u32));
        let mut b = a;
        while b == a {
            b = (rng.random_range(0..48u32), rng.random_range(0..40u32));
        }
        let start = rng.random_range(-len..0.5);
        let rect = OrientedRect::through(a, b, start, len, w as f64);
        prop_assert_eq!(count_in_rect(&img, &rect, [a, b]), brute_count(&img, &rect, [a, b]));
    }
}
