//! Displacement-operator algebra in single-mode phase space.
//!
//! Two displacements compose as `D(a) D(b) = D(a + b) exp(i Im(a b*))`; a
//! piecewise-linear path is the ordered product of its increments and picks
//! up the accumulated cross phase. Phases depend only on the increments, so
//! translating a path leaves them unchanged.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{domain, Result};

pub type PhasePoint = Complex64;

/// Tolerance for the closure of a closed path.
pub const CLOSURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePath {
    points: Vec<PhasePoint>,
    closed: bool,
}

impl PhasePath {
    pub fn open(points: Vec<PhasePoint>) -> Result<Self> {
        Self::new(points, false)
    }

    /// Closed path; the last vertex must repeat the first.
    pub fn closed(points: Vec<PhasePoint>) -> Result<Self> {
        Self::new(points, true)
    }

    pub fn new(points: Vec<PhasePoint>, closed: bool) -> Result<Self> {
        if points.len() < 2 {
            return domain(format!("a path needs at least 2 points, got {}", points.len()));
        }
        if points.iter().any(|p| !(p.re.is_finite() && p.im.is_finite())) {
            return domain("path contains a non-finite point");
        }
        if closed && (points[0] - points[points.len() - 1]).norm() > CLOSURE_TOL {
            return domain("closed path must end at its starting point");
        }
        Ok(PhasePath { points, closed })
    }

    /// Closed polygon through `vertices`; the closing edge is appended.
    pub fn polygon(vertices: &[PhasePoint]) -> Result<Self> {
        let mut points = vertices.to_vec();
        if let Some(&first) = vertices.first() {
            points.push(first);
        }
        Self::closed(points)
    }

    /// Counter-clockwise circle with `segments` chords.
    pub fn circle(center: PhasePoint, radius: f64, segments: usize) -> Result<Self> {
        if segments < 2 {
            return domain("a circle needs at least 2 segments");
        }
        let mut points: Vec<PhasePoint> = (0..segments)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / segments as f64;
                center + Complex64::from_polar(radius, t)
            })
            .collect();
        points.push(points[0]);
        Self::closed(points)
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn increments(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.points.windows(2).map(|w| w[1] - w[0])
    }

    /// Same vertices in reverse order.
    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        PhasePath { points, closed: self.closed }
    }

    /// This path followed by `other`, translated so it starts where this one ends.
    pub fn concat(&self, other: &PhasePath) -> Self {
        let end = *self.points.last().expect("non-empty");
        let shift = end - other.points[0];
        let mut points = self.points.clone();
        points.extend(other.points[1..].iter().map(|p| p + shift));
        let closed = (points[0] - points[points.len() - 1]).norm() <= CLOSURE_TOL;
        PhasePath { points, closed }
    }
}

/// `D(alpha) D(beta) = D(net) exp(i phase)`; `beta` acts first.
pub fn compose_displacements(alpha: Complex64, beta: Complex64) -> (Complex64, f64) {
    (alpha + beta, (alpha * beta.conj()).im)
}

/// Net displacement and accumulated phase of the ordered increment product.
pub fn path_phase(path: &PhasePath) -> (Complex64, f64) {
    let mut prefix = Complex64::new(0.0, 0.0);
    let mut gamma = 0.0;
    let mut carry = 0.0;
    for step in path.increments() {
        // Kahan-style accumulation keeps 1e4-segment loops at round-off level
        let term = (step * prefix.conj()).im - carry;
        let t = gamma + term;
        carry = (t - gamma) - term;
        gamma = t;
        prefix += step;
    }
    (prefix, gamma)
}

/// Geometric phase of a closed loop: twice the signed enclosed area.
pub fn closed_path_phase(path: &PhasePath) -> Result<f64> {
    if !path.closed {
        return domain("closed_path_phase requires a closed path");
    }
    Ok(path_phase(path).1)
}

/// Truncated-Fock displacement `exp(alpha a^dag - alpha^* a)` on `dim` levels.
pub fn displacement_matrix(alpha: Complex64, dim: usize) -> DMatrix<Complex64> {
    let mut gen = DMatrix::<Complex64>::zeros(dim, dim);
    for n in 1..dim {
        let s = (n as f64).sqrt();
        gen[(n, n - 1)] = alpha * s;
        gen[(n - 1, n)] = -alpha.conj() * s;
    }
    gen.exp()
}

/// Largest amplitude the truncated check accepts for a given `n_max`.
pub fn displacement_check_limit(n_max: usize) -> f64 {
    (n_max as f64).sqrt() / 3.5
}

/// Max entry difference between `D(alpha) D(beta)` and
/// `D(alpha + beta) exp(i Im(alpha beta^*))` on the lowest `n_max / 2` levels
/// of an `n_max + 1` level truncation.
pub fn verify_displacement_law(alpha: Complex64, beta: Complex64, n_max: usize) -> Result<f64> {
    if n_max < 20 {
        return domain(format!("n_max must be at least 20, got {n_max}"));
    }
    let limit = displacement_check_limit(n_max);
    if alpha.norm() > limit || beta.norm() > limit {
        return domain(format!(
            "|alpha|, |beta| must not exceed {limit:.4} at n_max = {n_max} (truncation safety)"
        ));
    }
    let dim = n_max + 1;
    let lhs = displacement_matrix(alpha, dim) * displacement_matrix(beta, dim);
    let (net, phase) = compose_displacements(alpha, beta);
    let rhs = displacement_matrix(net, dim) * Complex64::from_polar(1.0, phase);
    let window = n_max / 2;
    let mut worst: f64 = 0.0;
    for r in 0..window {
        for c in 0..window {
            worst = worst.max((lhs[(r, c)] - rhs[(r, c)]).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit_square() -> PhasePath {
        PhasePath::polygon(&[c(0., 0.), c(1., 0.), c(1., 1.), c(0., 1.)]).unwrap()
    }

    #[test]
    fn compose_examples() {
        let (net, ph) = compose_displacements(c(1., 0.), c(0., 1.));
        assert_eq!(net, c(1., 1.));
        assert_eq!(ph, -1.0);
        let a = c(0.3, -0.8);
        assert_eq!(compose_displacements(a, c(0., 0.)), (a, 0.0));
        assert_eq!(compose_displacements(c(2., 0.), c(3., 0.)), (c(5., 0.), 0.0));
    }

    #[test]
    fn degenerate_segment_has_no_phase() {
        let p = PhasePath::closed(vec![c(0., 0.), c(1., 0.), c(0., 0.)]).unwrap();
        assert_eq!(path_phase(&p), (c(0., 0.), 0.0));
    }

    #[test]
    fn unit_square_orientation() {
        let sq = unit_square();
        let (net, g) = path_phase(&sq);
        assert!(net.norm() < 1e-15);
        assert!((g - 2.0).abs() < 1e-15);
        assert!((closed_path_phase(&sq.reversed()).unwrap() + 2.0).abs() < 1e-15);
    }

    #[test]
    fn circle_converges_to_twice_area() {
        let r = 0.7;
        let p = PhasePath::circle(c(0.2, -1.0), r, 10_000).unwrap();
        let (net, g) = path_phase(&p);
        assert!(net.norm() < 1e-12);
        assert!((g - 2.0 * PI * r * r).abs() < 1e-4);
    }

    #[test]
    fn forward_then_backward_cancels() {
        let sq = unit_square();
        let there_and_back = sq.concat(&sq.reversed());
        assert!(closed_path_phase(&there_and_back).unwrap().abs() < 1e-14);
    }

    #[test]
    fn path_validation() {
        assert!(PhasePath::open(vec![c(0., 0.)]).is_err());
        assert!(PhasePath::closed(vec![c(0., 0.), c(1., 0.)]).is_err());
        let open = PhasePath::open(vec![c(0., 0.), c(1., 0.)]).unwrap();
        assert!(closed_path_phase(&open).is_err());
    }

    #[test]
    fn displacement_law_examples() {
        assert!(verify_displacement_law(c(0.5, 0.), c(0., 0.3), 60).unwrap() <= 1e-8);
        assert!(verify_displacement_law(c(0., 0.), c(-0.4, 0.9), 30).unwrap() <= 1e-12);
        assert!(verify_displacement_law(c(1., 0.), c(1., 0.), 60).unwrap() <= 1e-8);
        assert_eq!(compose_displacements(c(1., 0.), c(1., 0.)).1, 0.0);
    }

    #[test]
    fn displacement_law_guards() {
        assert!(verify_displacement_law(c(0.1, 0.), c(0.1, 0.), 10).is_err());
        assert!(verify_displacement_law(c(3.0, 0.), c(0.1, 0.), 60).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn point() -> impl Strategy<Value = Complex64> {
            (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| Complex64::new(re, im))
        }

        fn open_path(min: usize, max: usize) -> impl Strategy<Value = PhasePath> {
            prop::collection::vec(point(), min..max).prop_map(|pts| PhasePath::open(pts).unwrap())
        }

        fn shoelace(v: &[Complex64]) -> f64 {
            let k = v.len();
            0.5 * (0..k).map(|i| v[i].re * v[(i + 1) % k].im - v[(i + 1) % k].re * v[i].im).sum::<f64>()
        }

        proptest! {
            #[test]
            fn concatenation_adds_cross_phase(a in open_path(2, 5), b in open_path(2, 5)) {
                let (na, ga) = path_phase(&a);
                let (nb, gb) = path_phase(&b);
                let (nab, gab) = path_phase(&a.concat(&b));
                let (net, cross) = compose_displacements(nb, na);
                prop_assert!((nab - net).norm() < 1e-12);
                prop_assert!((gab - (ga + gb + cross)).abs() < 1e-12);
            }

            #[test]
            fn three_segment_paths_compose(a in point(), b in point(), c0 in point()) {
                let p = PhasePath::open(vec![Complex64::new(0.0, 0.0), a, a + b, a + b + c0]).unwrap();
                let (ab, p1) = compose_displacements(b, a);
                let (_, p2) = compose_displacements(c0, ab);
                prop_assert!((path_phase(&p).1 - (p1 + p2)).abs() < 1e-12);
            }

            #[test]
            fn star_polygon_phase_is_twice_area(
                radii in prop::collection::vec(0.1..3.0f64, 3..24),
                center in point(),
            ) {
                // vertices at increasing angles make a simple polygon
                let k = radii.len();
                let verts: Vec<Complex64> = radii
                    .iter()
                    .enumerate()
                    .map(|(i, &r)| center + Complex64::from_polar(r, 2.0 * PI * i as f64 / k as f64))
                    .collect();
                let g = closed_path_phase(&PhasePath::polygon(&verts).unwrap()).unwrap();
                prop_assert!((g - 2.0 * shoelace(&verts)).abs() < 1e-10);
                prop_assert!(g > 0.0);
            }

            #[test]
            fn translation_invariance(path in open_path(2, 12), offset in point()) {
                let moved = PhasePath::open(path.points().iter().map(|p| p + offset).collect()).unwrap();
                let (n0, g0) = path_phase(&path);
                let (n1, g1) = path_phase(&moved);
                prop_assert!((n0 - n1).norm() < 1e-12);
                prop_assert!((g0 - g1).abs() < 1e-12);
            }

            #[test]
            fn reversal_negates_closed_phase(verts in prop::collection::vec(point(), 3..10)) {
                let p = PhasePath::polygon(&verts).unwrap();
                let g = closed_path_phase(&p).unwrap();
                prop_assert!((closed_path_phase(&p.reversed()).unwrap() + g).abs() < 1e-11);
            }
        }
    }
}
