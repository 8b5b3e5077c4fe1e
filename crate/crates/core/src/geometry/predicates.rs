//! Exact orientation and in-circle tests.
//!
//! Both wrap Shewchuk's adaptive-precision predicates, so the returned sign is
//! exact for any finite `f64` input. Cocircular quadruples are resolved by a
//! symbolic perturbation of the lifting map: site `i` is lifted to
//! `x² + y² − εᵢ` with `ε₀ ≫ ε₁ ≫ …`. The perturbed triangulation is the
//! regular triangulation of those weights, which is unique, so the result does
//! not depend on insertion order.

use std::cmp::Ordering;

use robust::Coord;

use crate::topology::Point2D;

#[inline]
fn coord(p: &Point2D) -> Coord<f64> {
    Coord { x: p.x, y: p.y }
}

/// Sign of the signed area of `(a, b, c)`: `Greater` for counter-clockwise.
#[inline]
pub fn orient(a: &Point2D, b: &Point2D, c: &Point2D) -> Ordering {
    robust::orient2d(coord(a), coord(b), coord(c))
        .partial_cmp(&0.0)
        .expect("finite coordinates")
}

/// Sign of the lifted determinant `det[xᵢ, yᵢ, xᵢ² + yᵢ², 1]` over rows
/// `a, b, c, d`. For counter-clockwise `(a, b, c)`, `Greater` means `d` is
/// strictly inside the circumcircle.
#[inline]
pub fn incircle(a: &Point2D, b: &Point2D, c: &Point2D, d: &Point2D) -> Ordering {
    robust::incircle(coord(a), coord(b), coord(c), coord(d))
        .partial_cmp(&0.0)
        .expect("finite coordinates")
}

/// In-circle sign under the index-ordered symbolic perturbation. Never
/// returns `Equal` unless two of the four sites coincide or all four are
/// collinear.
pub fn incircle_perturbed(pts: &[Point2D], rows: [usize; 4]) -> Ordering {
    let [a, b, c, d] = rows.map(|i| &pts[i]);
    let exact = incircle(a, b, c, d);
    if exact != Ordering::Equal {
        return exact;
    }
    // D(ε) = D − Σ εᵢ Cᵢ where Cᵢ is the cofactor of the lifted entry of row i:
    // Cᵣ = (−1)^(r+2) · orient(remaining rows in order).
    let mut order = [0usize, 1, 2, 3];
    order.sort_by_key(|&r| rows[r]);
    for r in order {
        let rest: Vec<&Point2D> = (0..4).filter(|&k| k != r).map(|k| &pts[rows[k]]).collect();
        let minor = orient(rest[0], rest[1], rest[2]);
        if minor == Ordering::Equal {
            continue;
        }
        let cofactor = if r % 2 == 0 { minor } else { minor.reverse() };
        return cofactor.reverse();
    }
    Ordering::Equal
}
