//! Points on a square torus and Poisson sampling.

use crate::real::Real;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<F: Real = f64> {
    pub x: F,
    pub y: F,
}

/// Squared wrap-around distance on a torus of the given side.
pub fn torus_dist2<F: Real>(a: Point<F>, b: Point<F>, side: F) -> F {
    let mut dx = (a.x - b.x).abs();
    if dx > side - dx {
        dx = side - dx;
    }
    let mut dy = (a.y - b.y).abs();
    if dy > side - dy {
        dy = side - dy;
    }
    dx * dx + dy * dy
}

/// Samples a homogeneous Poisson point process on the torus: the count is
/// Poisson(density * side²), positions are i.i.d. uniform.
pub fn sample_hppp<F: Real, R: Rng>(density: F, side: F, rng: &mut R) -> Vec<Point<F>> {
    let mean = (density * side * side).as_f64();
    if mean <= 0.0 {
        return Vec::new();
    }
    let count = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    (0..count)
        .map(|_| Point {
            x: F::of(rng.gen::<f64>()) * side,
            y: F::of(rng.gen::<f64>()) * side,
        })
        .collect()
}

/// Unit-mean exponential draw (Rayleigh fading power gain).
pub fn exp1<F: Real, R: Rng>(rng: &mut R) -> F {
    let u: f64 = rng.gen(); // [0, 1)
    F::of(-(1.0 - u).ln())
}

/// Index of the nearest point to `origin`, restricted to entries whose band
/// matches when a band filter is given. Ties go to the lower index.
pub fn nearest_listening_bs<F: Real>(
    origin: Point<F>,
    bs: &[Point<F>],
    bands: Option<(&[u16], u16)>,
    side: F,
) -> Option<usize> {
    let mut best: Option<(usize, F)> = None;
    for (j, &p) in bs.iter().enumerate() {
        if let Some((assignment, wanted)) = bands {
            if assignment[j] != wanted {
                continue;
            }
        }
        let d2 = torus_dist2(origin, p, side);
        match best {
            Some((_, bd)) if d2 >= bd => {}
            _ => best = Some((j, d2)),
        }
    }
    best.map(|(j, _)| j)
}
