use proptest::prelude::*;
use tresca_core::space::{ElementBasis, TriangleGeometry};

fn geometry(p: [f64; 6]) -> Option<TriangleGeometry> {
    let g = TriangleGeometry::new([[p[0], p[1]], [p[2], p[3]], [p[4], p[5]]]);
    (g.det > 1e-2).then_some(g)
}

proptest! {
    #[test]
    fn partition_of_unity(p in prop::array::uniform6(-2.0f64..2.0), s in 0.0f64..1.0, t in 0.0f64..1.0, order in 1usize..=2) {
        let Some(g) = geometry(p) else { return Ok(()); };
        let r = if s + t > 1.0 { [1.0 - s, 1.0 - t] } else { [s, t] };
        let b = ElementBasis::evaluate(order, &g, r);
        let sum: f64 = b.values[..b.len].iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        for c in 0..2 {
            let gs: f64 = b.gradients[..b.len].iter().map(|x| x[c]).sum();
            prop_assert!(gs.abs() < 1e-9 * (1.0 + g.grad_bary.iter().map(|x| x[c].abs()).sum::<f64>()));
        }
    }

    #[test]
    fn basis_reproduces_linear_functions(p in prop::array::uniform6(-2.0f64..2.0), s in 0.0f64..0.5, t in 0.0f64..0.5) {
        let Some(g) = geometry(p) else { return Ok(()); };
        let b = ElementBasis::evaluate(2, &g, [s, t]);
        // node points: vertices then edge midpoints opposite vertex k
        let v = g.points;
        let mid = |a: usize, c: usize| [(v[a][0] + v[c][0]) / 2.0, (v[a][1] + v[c][1]) / 2.0];
        let nodes = [v[0], v[1], v[2], mid(1, 2), mid(2, 0), mid(0, 1)];
        let f = |x: [f64; 2]| 0.3 + 2.0 * x[0] - x[1];
        let interp: f64 = nodes.iter().zip(&b.values).map(|(n, w)| w * f(*n)).sum();
        prop_assert!((interp - f(g.map([s, t]))).abs() < 1e-10);
    }
}
