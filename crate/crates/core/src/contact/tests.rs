use super::*;
use crate::elasticity::h1_norm;
use crate::mesh::{benchmark_tagging, build_unit_square_mesh, BoundaryFacet, BoundaryTag, Mesh};

fn benchmark(n: usize, data: ContactData) -> ContactProblem {
    let mesh = Arc::new(build_unit_square_mesh(n, &benchmark_tagging()).unwrap());
    let space = Arc::new(FeSpace::new(mesh, 2).unwrap());
    ContactProblem::new(space, Material::new(1.0, 0.3).unwrap(), data).unwrap()
}

fn benchmark_data() -> ContactData {
    ContactData::constant([0.0, 0.0], -0.1, 0.2, 1e-3)
}

#[test]
fn gamma_examples() {
    let p = benchmark(4, benchmark_data());
    let f = p.contact_facets()[0].facet;
    let zero = DiscreteSolution::zero(p.space().clone());
    assert!((p.gamma_n(&zero, f, 0.3) - 400.0).abs() < 1e-10);
    assert_eq!(p.gamma_t(&zero, f, 0.3), 0.0);

    let p0 = benchmark(4, ContactData::constant([0.0, 0.0], 0.0, 0.2, 1e-3));
    assert_eq!(p0.gamma_n(&zero, f, 0.5), 0.0);
    let at_gap = DiscreteSolution::interpolate(p.space().clone(), |_| [-0.1, 0.0]);
    assert!(p.gamma_n(&at_gap, f, 0.7).abs() < 1e-10);

    let slide = DiscreteSolution::interpolate(p.space().clone(), |_| [0.0, 1e-4]);
    assert!((p.gamma_t(&slide, f, 0.2) - 0.4).abs() < 1e-12);
}

#[test]
fn classify_examples() {
    let p = benchmark(4, benchmark_data());
    let zero = DiscreteSolution::zero(p.space().clone());
    let a = classify(&p, &zero, ActiveSetMode::PerQuadraturePoint);
    let total = a.points().count();
    assert_eq!(total, 4 * 3);
    assert_eq!((a.contact_count(), a.stick_count()), (total, total));

    let p = benchmark(4, ContactData::constant([0.0, 0.0], -0.1, 0.0, 1e-3));
    assert_eq!(classify(&p, &zero, ActiveSetMode::PerQuadraturePoint).stick_count(), 0);

    let p = benchmark(4, ContactData::constant([0.0, 0.0], 10.0, 0.2, 1e-3));
    for mode in [ActiveSetMode::PerQuadraturePoint, ActiveSetMode::FacetMean] {
        assert_eq!(classify(&p, &zero, mode).contact_count(), 0);
    }
}

fn all_states(p: &ContactProblem, in_contact: bool, sticking: bool) -> ActiveSet {
    ActiveSet {
        facets: p
            .contact_facets()
            .iter()
            .map(|c| vec![PointState { in_contact, sticking, gamma_t: 0.0, slip_direction: 0.0 }; c.points.len()])
            .collect(),
    }
}

#[test]
fn inactive_terms_are_negative_semidefinite() {
    let p = benchmark(4, benchmark_data());
    let (dk, _) = assemble_nitsche(&p, &all_states(&p, false, false), element_pattern(p.space()));
    assert!(dk.symmetry_defect() <= 1e-12 * dk.max_abs());
    for k in 0..20 {
        let u: Vec<f64> = (0..p.space().total_dofs()).map(|i| ((i * 7 + k * 13) % 17) as f64 - 8.0).collect();
        assert!(dk.quadratic_form(&u) <= 1e-12 * dk.max_abs());
    }
}

#[test]
fn zero_gap_full_contact_has_no_load() {
    let p = benchmark(4, ContactData::constant([0.0, 0.0], 0.0, 0.2, 1e-3));
    let (_, b) = assemble_nitsche(&p, &all_states(&p, true, true), element_pattern(p.space()));
    assert!(b.iter().all(|&v| v == 0.0));
}

/// One P1 triangle with the contact facet x = 1 of length 1.
fn one_facet_problem() -> ContactProblem {
    let mesh = Mesh::new(
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]],
        vec![[0, 1, 2]],
        vec![
            BoundaryFacet { vertices: [0, 1], tag: BoundaryTag::Neumann },
            BoundaryFacet { vertices: [1, 2], tag: BoundaryTag::Contact },
            BoundaryFacet { vertices: [2, 0], tag: BoundaryTag::Neumann },
        ],
    )
    .unwrap();
    let space = Arc::new(FeSpace::new(Arc::new(mesh), 1).unwrap());
    ContactProblem::new(space, Material::new(1.0, 0.3).unwrap(), ContactData::constant([0.0, 0.0], 0.0, 0.2, 0.1))
        .unwrap()
}

#[test]
fn one_facet_hand_quadrature() {
    let p = one_facet_problem();
    assert_eq!(p.normal(), [1.0, 0.0]);
    let m = *p.material();
    let pattern = element_pattern(p.space());
    let (dk, _) = assemble_nitsche(&p, &all_states(&p, true, true), pattern.clone());
    // u = (1, 0): u_n = 1, sigma = 0, so only (1 / (alpha h)) u_n^2 survives.
    let translation = p.space().interpolate(|_| [1.0, 0.0]);
    assert!((dk.quadratic_form(&translation) - 1.0 / 0.1).abs() < 1e-12);
    // u = (x, 0): u_n = 1 on x = 1, sigma_n = 2 mu + lambda, u_t = sigma_t = 0.
    let stretch = p.space().interpolate(|x| [x[0], 0.0]);
    let expected = 1.0 / 0.1 - 2.0 * (2.0 * m.mu + m.lambda);
    assert!((dk.quadratic_form(&stretch) - expected).abs() < 1e-12);
    let (dk, _) = assemble_nitsche(&p, &all_states(&p, false, false), pattern);
    let expected = -0.1 * (2.0 * m.mu + m.lambda).powi(2);
    assert!((dk.quadratic_form(&stretch) - expected).abs() < 1e-12);
}

#[test]
fn slip_load_follows_frozen_direction() {
    let p = one_facet_problem();
    let mut active = all_states(&p, false, false);
    for s in active.facets.iter_mut().flatten() {
        s.slip_direction = 1.0;
    }
    let (_, b) = assemble_nitsche(&p, &active, element_pattern(p.space()));
    // Tested with v = (0, 1): v_t = 1, sigma_t(v) = 0, so (b, v) = -kappa * |facet|.
    let v = p.space().interpolate(|_| [0.0, 1.0]);
    let bv: f64 = b.iter().zip(&v).map(|(a, b)| a * b).sum();
    assert!((bv + 0.2).abs() < 1e-14);
}

#[test]
fn no_contact_gives_zero_in_one_iteration() {
    let p = benchmark(4, ContactData::constant([0.0, 0.0], 10.0, 0.0, 1e-3));
    let r = solve_fixed_point(&p, &SolverConfig::default()).unwrap();
    assert_eq!(r.iterations, 1);
    assert!(r.solution.coefficients.iter().all(|&v| v == 0.0));
}

#[test]
fn coarse_benchmark_sticks_fully() {
    let p = benchmark(4, benchmark_data());
    let r = solve_fixed_point(&p, &SolverConfig::default()).unwrap();
    assert_eq!(r.iterations, 2);
    assert_eq!(r.active_set.stick_count(), r.active_set.points().count());
    assert_eq!(r.active_set.contact_count(), r.active_set.points().count());
    // Full stick and contact is the clamped displacement (-0.1, 0) on x = 0.5 up to O(alpha);
    // that Dirichlet problem has H1 norm 0.125709752003283 on this mesh (independent P2 code).
    let norm = h1_norm(&r.solution);
    assert!(((norm - 0.125709752003283) / 0.125709752003283).abs() < 1e-4, "{norm}");
    assert_eq!(classify(&p, &r.solution, SolverConfig::default().mode), r.active_set);
    assert!(system_matrix(&p, &r.active_set).symmetry_defect() <= 1e-12 * system_matrix(&p, &r.active_set).max_abs());
    for &d in p.space().dirichlet_dofs() {
        assert_eq!(r.solution.coefficients[d], 0.0);
    }
    let lambda = recover_multipliers(&p, &r.solution);
    assert!(lambda.min_normal() > 0.0);
    assert!(lambda.max_abs_tangential() <= 0.2);
}

#[test]
fn large_alpha_is_reported_as_singular() {
    let p = benchmark(4, ContactData::constant([0.0, 0.0], 10.0, 0.2, 1e3));
    match solve_fixed_point(&p, &SolverConfig::default()) {
        Err(ContactError::SingularSystem { iteration: 1, .. }) => {}
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn invalid_inputs() {
    let mesh = Arc::new(build_unit_square_mesh(2, &benchmark_tagging()).unwrap());
    let space = Arc::new(FeSpace::new(mesh, 2).unwrap());
    let m = Material::new(1.0, 0.3).unwrap();
    assert!(matches!(
        ContactProblem::new(space.clone(), m, ContactData::constant([0.0; 2], 0.0, 0.2, 0.0)),
        Err(ContactError::InvalidAlpha(_))
    ));
    assert!(matches!(
        ContactProblem::new(space.clone(), m, ContactData::constant([0.0; 2], 0.0, -1.0, 1e-3)),
        Err(ContactError::NegativeFriction { .. })
    ));
    let p = ContactProblem::new(space, m, benchmark_data()).unwrap();
    let bad = SolverConfig { tolerance: 0.0, ..SolverConfig::default() };
    assert!(matches!(solve_fixed_point(&p, &bad), Err(ContactError::InvalidTolerance(_))));
    let bad = SolverConfig { max_iterations: 0, ..SolverConfig::default() };
    assert!(matches!(solve_fixed_point(&p, &bad), Err(ContactError::InvalidMaxIterations)));
    let once = SolverConfig { max_iterations: 1, ..SolverConfig::default() };
    match solve_fixed_point(&p, &once) {
        Err(ContactError::NotConverged { history }) => assert_eq!(history.len(), 1),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn multiplier_elimination() {
    use super::multipliers::eliminate;
    assert_eq!(eliminate(-3.0, 0.1, 0.2), (0.0, 0.1));
    assert_eq!(eliminate(2.0, 0.5, 0.2), (2.0, 0.2));
    assert_eq!(eliminate(2.0, -0.5, 0.2), (2.0, -0.2));
    assert_eq!(eliminate(2.0, 0.0, 0.0), (2.0, 0.0));
}
