//! 2D convex hulls in u′v′.

use crate::colorspace::UvPrime;

/// Relative tolerance below which three points count as collinear.
const COLLINEAR_EPS: f64 = 1e-12;

fn cross(o: &UvPrime, a: &UvPrime, b: &UvPrime) -> f64 {
    (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u)
}

/// Left turn by more than rounding noise.
fn turns_left(o: &UvPrime, a: &UvPrime, b: &UvPrime) -> bool {
    let scale = o.distance(a) * o.distance(b);
    cross(o, a, b) > COLLINEAR_EPS * scale
}

/// Monotone-chain hull, counter-clockwise, without (nearly) collinear
/// boundary points. Fewer than three points come back when the input is collinear.
pub fn convex_hull(points: &[UvPrime]) -> Vec<UvPrime> {
    let mut pts: Vec<UvPrime> = points.to_vec();
    pts.sort_by(|a, b| a.u.total_cmp(&b.u).then(a.v.total_cmp(&b.v)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let chain = |iter: &mut dyn Iterator<Item = &UvPrime>| {
        let mut c: Vec<UvPrime> = Vec::new();
        for p in iter {
            while c.len() >= 2 && !turns_left(&c[c.len() - 2], &c[c.len() - 1], p) {
                c.pop();
            }
            c.push(*p);
        }
        // the last point starts the other chain
        c.pop();
        c
    };
    let mut hull = chain(&mut pts.iter());
    hull.extend(chain(&mut pts.iter().rev()));
    hull
}

/// Shoelace area of a simple polygon given in order.
pub fn polygon_area(poly: &[UvPrime]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let twice: f64 = poly.iter().zip(poly.iter().cycle().skip(1)).map(|(a, b)| a.u * b.v - b.u * a.v).sum();
    twice.abs() / 2.0
}

pub fn hull_area(points: &[UvPrime]) -> f64 {
    polygon_area(&convex_hull(points))
}
