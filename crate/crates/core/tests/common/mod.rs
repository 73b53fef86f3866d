#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specrange_core::jointbounds::{relation_constraint, EnvelopeSource, RelationSpec};
use specrange_core::oracle::{HermMatrix, RandomProblem};
use specrange_core::{Direction, Interval, ProblemSpec, Region};

pub const INF: f64 = f64::INFINITY;

pub fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

/// `w^2 - 1 - 2 w A_1 + 2 A_2`.
pub fn sadex() -> ProblemSpec {
    ProblemSpec::parse("w^2 - 1", &["0 - 2*w", "2"]).unwrap()
}

pub fn quadrant() -> Region {
    Region::new_box(vec![iv(0.0, INF), iv(0.0, INF)]).unwrap()
}

/// The quadrant cut by `alpha_2 <= alpha_1`.
pub fn carved_quadrant() -> Region {
    let bounds = vec![iv(0.0, INF), iv(0.0, INF)];
    let c = relation_constraint(
        &RelationSpec {
            target: 1,
            terms: vec![(0, EnvelopeSource::identity(iv(0.0, INF)))],
            direction: Direction::Le,
            constant: 0.0,
        },
        &bounds,
    )
    .unwrap();
    Region::new_box(bounds).unwrap().with_constraint(c).unwrap()
}

/// `w^3 + w^2 A_1 + w A_2 + A_3`.
pub fn cube() -> ProblemSpec {
    ProblemSpec::parse("w^3", &["w^2", "w", "1"]).unwrap()
}

pub fn unit_cube() -> Region {
    Region::new_box(vec![iv(0.0, 1.0); 3]).unwrap()
}

/// `A_1 - w`.
pub fn linear() -> ProblemSpec {
    ProblemSpec::parse("0 - w", &["1"]).unwrap()
}

/// The closed-form bound `|alpha_2| <= z(alpha_1)` for the 4 x 4 pair below.
pub fn z(a: f64) -> f64 {
    if a > 1.6 && a <= 2.0 {
        a / 2.0
    } else if a > 2.0 && a < 2.5 {
        1.0
    } else {
        2.0 / 3.0 * ((4.0 - a) * (a - 1.0)).max(0.0).sqrt()
    }
}

pub fn exmat() -> (HermMatrix, HermMatrix) {
    let a1 = HermMatrix::diag(&[1.0, 2.0, 2.0, 4.0]);
    let a2 = HermMatrix::from_real_rows(&[
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[1.0, 0.0, 0.0, 0.0],
    ])
    .unwrap();
    (a1, a2)
}

/// Seeded pool of random problems: `n` in {1, 2, 3}, dimension in 1..=8, degree in 1..=3.
pub fn problem_pool(count: usize, seed: u64) -> Vec<RandomProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=3);
            let dim = rng.random_range(1..=8);
            let deg = rng.random_range(1..=3);
            RandomProblem::generate(n, dim, deg, &mut rng).unwrap()
        })
        .collect()
}

pub fn box_region(p: &RandomProblem) -> Region {
    Region::new_box(p.numerical_range_box()).unwrap()
}
