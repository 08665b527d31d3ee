//! Quadrature on the reference triangle `{(x, y) : x, y >= 0, x + y <= 1}` and the reference
//! segment `[0, 1]`. All weights are positive and sum to the reference measure.

use super::SpaceError;

/// Highest polynomial degree integrated exactly by the tabulated rules.
pub const MAX_DEGREE: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule<P> {
    pub points: Vec<P>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

pub type TriangleRule = QuadratureRule<[f64; 2]>;
pub type SegmentRule = QuadratureRule<f64>;

impl<P: Copy> QuadratureRule<P> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (P, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

struct Builder {
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

impl Builder {
    fn new() -> Self {
        Builder { points: Vec::new(), weights: Vec::new() }
    }

    /// Barycentric point `(l0, l1, l2)` maps to reference coordinates `(l1, l2)`.
    fn push(&mut self, bary: [f64; 3], weight: f64) {
        self.points.push([bary[1], bary[2]]);
        self.weights.push(weight);
    }

    fn centroid(&mut self, weight: f64) {
        let t = 1.0 / 3.0;
        self.push([t, t, t], weight);
    }

    /// The three points `(a, a, 1 - 2a)` up to permutation.
    fn orbit3(&mut self, a: f64, weight: f64) {
        let b = 1.0 - 2.0 * a;
        self.push([a, a, b], weight);
        self.push([a, b, a], weight);
        self.push([b, a, a], weight);
    }

    /// The six points `(a, b, 1 - a - b)` up to permutation.
    fn orbit6(&mut self, a: f64, b: f64, weight: f64) {
        let c = 1.0 - a - b;
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            self.push(p, weight);
        }
    }

    fn finish(self, degree: usize) -> TriangleRule {
        QuadratureRule { points: self.points, weights: self.weights, degree }
    }
}

/// Symmetric rule on the reference triangle exact for polynomials of total degree `degree`.
pub fn interior_quadrature(degree: usize) -> Result<TriangleRule, SpaceError> {
    let mut b = Builder::new();
    match degree {
        0 | 1 => b.centroid(0.5),
        2 => b.orbit3(1.0 / 6.0, 1.0 / 6.0),
        3 | 4 => {
            b.orbit3(0.445_948_490_915_964_886_318_329_3, 0.111_690_794_839_005_732_847_503_5);
            b.orbit3(0.091_576_213_509_770_743_459_571_46, 0.054_975_871_827_660_933_819_163_16);
        }
        5 => {
            let s = 15f64.sqrt();
            b.centroid(9.0 / 80.0);
            b.orbit3((6.0 - s) / 21.0, (155.0 - s) / 2400.0);
            b.orbit3((6.0 + s) / 21.0, (155.0 + s) / 2400.0);
        }
        6 => {
            b.orbit3(0.249_286_745_170_910_421_291_638_6, 0.058_393_137_863_189_683_012_644_81);
            b.orbit3(0.063_089_014_491_502_228_340_331_6, 0.025_422_453_185_103_408_460_468_4);
            b.orbit6(
                0.310_352_451_033_784_405_416_607_7,
                0.053_145_049_844_816_947_353_249_67,
                0.041_425_537_809_186_787_596_776_73,
            );
        }
        _ => return Err(SpaceError::UnsupportedDegree(degree)),
    }
    Ok(b.finish(degree))
}

/// Gauss-Legendre rule on `[0, 1]` exact for polynomials of degree `degree`.
pub fn facet_quadrature(degree: usize) -> Result<SegmentRule, SpaceError> {
    if degree > MAX_DEGREE {
        return Err(SpaceError::UnsupportedDegree(degree));
    }
    // Nodes and weights on [-1, 1].
    let (nodes, weights): (Vec<f64>, Vec<f64>) = match degree / 2 + 1 {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let x = 1.0 / 3f64.sqrt();
            (vec![-x, x], vec![1.0, 1.0])
        }
        3 => {
            let x = 0.6f64.sqrt();
            (vec![-x, 0.0, x], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        _ => {
            let r = (6.0f64 / 5.0).sqrt();
            let inner = (3.0 / 7.0 - 2.0 / 7.0 * r).sqrt();
            let outer = (3.0 / 7.0 + 2.0 / 7.0 * r).sqrt();
            let s = 30f64.sqrt();
            let (wi, wo) = ((18.0 + s) / 36.0, (18.0 - s) / 36.0);
            (vec![-outer, -inner, inner, outer], vec![wo, wi, wi, wo])
        }
    };
    Ok(QuadratureRule {
        points: nodes.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        weights: weights.iter().map(|w| 0.5 * w).collect(),
        degree,
    })
}
