//! Quadrature rules on the reference triangle and the reference edge.
//!
//! Triangle rules are symmetric Gauss rules stated in barycentric
//! coordinates with weights summing to 1/2 (the reference-triangle area);
//! edge rules are Gauss-Legendre on [0, 1] with weights summing to 1.

use crate::scalar::{lit, Real};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QuadratureError {
    #[error("unsupported triangle rule degree {0} (supported: 1..=6)")]
    TriangleDegree(usize),
    #[error("unsupported edge rule degree {0} (supported: 1..=11)")]
    EdgeDegree(usize),
}

/// A fixed quadrature rule.
///
/// For triangle rules `points` holds barycentric triples; for edge rules it
/// holds single coordinates on the unit interval.
#[derive(Debug, Clone)]
pub struct QuadRule<T> {
    pub points: Vec<Vec<T>>,
    pub weights: Vec<T>,
    /// Every polynomial of total degree <= `degree` is integrated exactly.
    pub degree: usize,
}

impl<T: Real> QuadRule<T> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Degree used for assembly, load vectors and indicator volume terms.
pub const DEFAULT_TRIANGLE_DEGREE: usize = 4;
/// Degree used for edge integrals.
pub const DEFAULT_EDGE_DEGREE: usize = 5;

fn orbit1<T: Real>() -> Vec<T> {
    vec![lit(1.0 / 3.0), lit(1.0 / 3.0), lit(1.0 / 3.0)]
}

fn orbit3<T: Real>(a: f64) -> Vec<Vec<T>> {
    let b = 1.0 - 2.0 * a;
    vec![
        vec![lit(b), lit(a), lit(a)],
        vec![lit(a), lit(b), lit(a)],
        vec![lit(a), lit(a), lit(b)],
    ]
}

fn orbit6<T: Real>(a: f64, b: f64) -> Vec<Vec<T>> {
    let c = 1.0 - a - b;
    [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
        .iter()
        .map(|p| p.iter().map(|&v| lit(v)).collect())
        .collect()
}

/// Symmetric rule on the reference triangle, exact at least to `degree`.
pub fn triangle_rule<T: Real>(degree: usize) -> Result<QuadRule<T>, QuadratureError> {
    let half = lit::<T>(0.5);
    let (points, weights, exact): (Vec<Vec<T>>, Vec<T>, usize) = match degree {
        1 => (vec![orbit1()], vec![half], 1),
        2 => {
            let w = lit::<T>(1.0 / 6.0);
            (orbit3(1.0 / 6.0), vec![w; 3], 2)
        }
        // Dunavant degree-4 rule: smallest positive-weight rule above 2
        3 => {
            let mut pts = orbit3(0.445_948_490_915_965);
            pts.extend(orbit3(0.091_576_213_509_771));
            let w1 = lit::<T>(0.223_381_589_678_011 * 0.5);
            let w2 = lit::<T>(0.109_951_743_655_322 * 0.5);
            (pts, vec![w1, w1, w1, w2, w2, w2], 4)
        }
        // the classical 7-point rule (degree 5) serves 4 and 5
        4 | 5 => {
            let mut pts = vec![orbit1()];
            pts.extend(orbit3(0.470_142_064_105_115));
            pts.extend(orbit3(0.101_286_507_323_456));
            let w0 = lit::<T>(0.225 * 0.5);
            let w1 = lit::<T>(0.132_394_152_788_506 * 0.5);
            let w2 = lit::<T>(0.125_939_180_544_827 * 0.5);
            (pts, vec![w0, w1, w1, w1, w2, w2, w2], 5)
        }
        6 => {
            let mut pts = orbit3(0.249_286_745_170_910);
            pts.extend(orbit3(0.063_089_014_491_502));
            pts.extend(orbit6(0.053_145_049_844_816, 0.310_352_451_033_785));
            let w1 = lit::<T>(0.116_786_275_726_379 * 0.5);
            let w2 = lit::<T>(0.050_844_906_370_207 * 0.5);
            let w3 = lit::<T>(0.082_851_075_618_374 * 0.5);
            let mut ws = vec![w1, w1, w1, w2, w2, w2];
            ws.extend(vec![w3; 6]);
            (pts, ws, 6)
        }
        d => return Err(QuadratureError::TriangleDegree(d)),
    };
    Ok(QuadRule { points, weights, degree: exact })
}

/// Gauss-Legendre rule on [0, 1], exact at least to `degree`.
pub fn edge_rule<T: Real>(degree: usize) -> Result<QuadRule<T>, QuadratureError> {
    if degree == 0 || degree > 11 {
        return Err(QuadratureError::EdgeDegree(degree));
    }
    let n = degree / 2 + 1;
    // nodes/weights on [-1, 1]
    let (xs, ws): (Vec<f64>, Vec<f64>) = match n {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 0.577_350_269_189_625_7;
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = 0.774_596_669_241_483_4;
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let a = 0.339_981_043_584_856_3;
            let b = 0.861_136_311_594_052_6;
            let wa = 0.652_145_154_862_546_2;
            let wb = 0.347_854_845_137_453_9;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        5 => {
            let a = 0.538_469_310_105_683_1;
            let b = 0.906_179_845_938_664;
            let wa = 0.478_628_670_499_366_5;
            let wb = 0.236_926_885_056_189_1;
            (vec![-b, -a, 0.0, a, b], vec![wb, wa, 0.568_888_888_888_888_9, wa, wb])
        }
        _ => {
            let a = 0.238_619_186_083_196_9;
            let b = 0.661_209_386_466_264_5;
            let c = 0.932_469_514_203_152;
            let wa = 0.467_913_934_572_691;
            let wb = 0.360_761_573_048_138_6;
            let wc = 0.171_324_492_379_170_3;
            (vec![-c, -b, -a, a, b, c], vec![wc, wb, wa, wa, wb, wc])
        }
    };
    let points = xs.iter().map(|&x| vec![lit::<T>(0.5 * (x + 1.0))]).collect();
    let weights = ws.iter().map(|&w| lit::<T>(0.5 * w)).collect();
    Ok(QuadRule { points, weights, degree: 2 * n - 1 })
}

/// Integrates `f` over the physical triangle `(p0, p1, p2)` with the given rule.
pub fn integrate_triangle<T: Real, F>(rule: &QuadRule<T>, p: [[T; 2]; 3], mut f: F) -> T
where
    F: FnMut(T, T) -> T,
{
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
    // the weights carry the reference measure 1/2, so |det| alone maps them
    let jac = det.abs();
    let mut acc = T::zero();
    for (pt, &w) in rule.points.iter().zip(&rule.weights) {
        let x = pt[0] * p[0][0] + pt[1] * p[1][0] + pt[2] * p[2][0];
        let y = pt[0] * p[0][1] + pt[1] * p[1][1] + pt[2] * p[2][1];
        acc += w * f(x, y);
    }
    acc * jac
}

/// Integrates `f` along the physical segment `a -> b`.
pub fn integrate_edge<T: Real, F>(rule: &QuadRule<T>, a: [T; 2], b: [T; 2], mut f: F) -> T
where
    F: FnMut(T, T) -> T,
{
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let mut acc = T::zero();
    for (pt, &w) in rule.points.iter().zip(&rule.weights) {
        let s = pt[0];
        let x = a[0] + s * (b[0] - a[0]);
        let y = a[1] + s * (b[1] - a[1]);
        acc += w * f(x, y);
    }
    acc * len
}

/// Composite rule for integrands with an `eps`-scale layer: the triangle is
/// recursively quartered until the local mesh size drops below
/// `max(eps, h_T / 16)`, at most 4 levels, and the base rule is applied on
/// every sub-triangle.
pub fn integrate_triangle_composite<T: Real, F>(
    rule: &QuadRule<T>,
    p: [[T; 2]; 3],
    eps: T,
    f: &mut F,
) -> T
where
    F: FnMut(T, T) -> T,
{
    let h = tri_diameter(p);
    let floor = eps.max(h / lit::<T>(16.0));
    let mut levels = 0usize;
    let mut hl = h;
    let two = lit::<T>(2.0);
    while hl > floor && levels < 4 {
        hl = hl / two;
        levels += 1;
    }
    integrate_subdivided(rule, p, levels, f)
}

fn integrate_subdivided<T: Real, F>(rule: &QuadRule<T>, p: [[T; 2]; 3], levels: usize, f: &mut F) -> T
where
    F: FnMut(T, T) -> T,
{
    if levels == 0 {
        return integrate_triangle(rule, p, f);
    }
    let m01 = mid(p[0], p[1]);
    let m12 = mid(p[1], p[2]);
    let m02 = mid(p[0], p[2]);
    integrate_subdivided(rule, [p[0], m01, m02], levels - 1, f)
        + integrate_subdivided(rule, [m01, p[1], m12], levels - 1, f)
        + integrate_subdivided(rule, [m02, m12, p[2]], levels - 1, f)
        + integrate_subdivided(rule, [m01, m12, m02], levels - 1, f)
}

fn mid<T: Real>(a: [T; 2], b: [T; 2]) -> [T; 2] {
    let half = lit::<T>(0.5);
    [(a[0] + b[0]) * half, (a[1] + b[1]) * half]
}

pub(crate) fn tri_diameter<T: Real>(p: [[T; 2]; 3]) -> T {
    let d = |a: [T; 2], b: [T; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    d(p[0], p[1]).max(d(p[1], p[2])).max(d(p[0], p[2]))
}
