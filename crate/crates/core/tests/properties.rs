use blenderlab::axioms::{alpha_admissible, certify_blender, CertifyOptions, Status};
use blenderlab::central_reduction::{BranchPolicy, CentralIfs};
use blenderlab::disks::{classify_position, graph_transform, PositionClass, UUDisk};
use blenderlab::folding::{image_fold, locate_tangency, make_quadratic_fold, LocateOptions};
use blenderlab::geometry::{in_cone, op_norm, AmbientPoint, ConeKind, ConeParams, Dims};
use blenderlab::map::{periodic_point, Saddle};
use blenderlab::model::{default_instance, Branch};
use blenderlab::perturbation::Bump;
use proptest::prelude::*;

const D11: Dims = Dims { s: 1, u: 1 };

fn word(bits: &[bool]) -> Vec<Branch> {
    bits.iter().map(|&b| if b { Branch::B } else { Branch::A }).collect()
}

fn cone_kind() -> impl Strategy<Value = ConeKind> {
    prop_oneof![Just(ConeKind::S), Just(ConeKind::U), Just(ConeKind::UU)]
}

proptest! {
    #[test]
    fn cones_grow_with_opening(v in prop::collection::vec(-1.0f64..1.0, 3), kind in cone_kind(), a in 0.01f64..0.99, b in 0.01f64..0.99) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if in_cone(&v, D11, kind, lo).unwrap() {
            prop_assert!(in_cone(&v, D11, kind, hi).unwrap());
        }
    }

    #[test]
    fn stable_and_unstable_cones_are_transverse(v in prop::collection::vec(-1.0f64..1.0, 4), alpha in 0.01f64..0.99) {
        let d = Dims { s: 2, u: 1 };
        prop_assume!(v.iter().any(|x| *x != 0.0));
        prop_assert!(!(in_cone(&v, d, ConeKind::S, alpha).unwrap() && in_cone(&v, d, ConeKind::U, alpha).unwrap()));
    }

    #[test]
    fn strong_unstable_cone_lies_in_unstable_cone(v in prop::collection::vec(-1.0f64..1.0, 5), alpha in 0.01f64..0.99) {
        let d = Dims { s: 2, u: 2 };
        if in_cone(&v, d, ConeKind::UU, alpha).unwrap() {
            prop_assert!(in_cone(&v, d, ConeKind::U, alpha).unwrap());
        }
    }

    #[test]
    fn covering_endpoints_are_exact(lambda in 1.01f64..1.99, frac in 0.001f64..0.999) {
        let mu = frac * (lambda - 1.0) * 0.125;
        let ifs = CentralIfs::new(lambda, mu);
        let c = ifs.covering_check().unwrap();
        prop_assert!(c.certified);
        let sup_j = mu / (lambda - 1.0);
        prop_assert!((lambda * ifs.i1_end() - sup_j).abs() <= 2.0 * f64::EPSILON * sup_j);
        prop_assert!((lambda * ifs.i2_start() - mu).abs() <= 2.0 * f64::EPSILON * mu);
    }

    #[test]
    fn central_orbits_stay_in_the_superposition_interval(x in 0.0f64..=1.0, prefer_b in any::<bool>()) {
        let ifs = CentralIfs::new(1.2, 0.02);
        let policy = if prefer_b { BranchPolicy::PreferB } else { BranchPolicy::PreferA };
        let it = ifs.itinerary(x * ifs.superposition_end(), 300, policy).unwrap();
        prop_assert!(it.orbit.iter().all(|&y| (0.0..=ifs.superposition_end()).contains(&y)));
    }

    #[test]
    fn periodic_points_return(bits in prop::collection::vec(any::<bool>(), 1..12)) {
        let m = default_instance();
        let w = word(&bits);
        let p = periodic_point(&m, &w).unwrap();
        prop_assert!(m.cube().contains(&p, 0.0));
        let mut x = p.clone();
        for b in &w {
            let (y, used) = m.apply(&x).unwrap();
            prop_assert_eq!(used, *b);
            x = y;
        }
        prop_assert!(x.distance(&p) < 1e-10);
    }

    #[test]
    fn graph_transform_contracts_slopes(xs in -1.0f64..1.0, xc in -0.1f64..0.1, k in -0.0125f64..0.0125) {
        prop_assume!(k != 0.0);
        let m = default_instance();
        let d = UUDisk::tilted(vec![xs], xc, &[k]);
        for b in Branch::BOTH {
            prop_assert!(graph_transform(&d, b, &m).lip() < d.lip());
        }
    }

    #[test]
    fn position_laws_hold(xs in -1.0f64..1.0, xc in -0.12f64..0.12, k in -0.0125f64..0.0125) {
        let m = default_instance();
        let d = UUDisk::tilted(vec![xs], xc, &[k]);
        let (Ok(p), Ok(a), Ok(b)) = (
            classify_position(&d, &m),
            classify_position(&graph_transform(&d, Branch::A, &m), &m),
            classify_position(&graph_transform(&d, Branch::B, &m), &m),
        ) else {
            return Err(TestCaseError::reject("within the position tolerance"));
        };
        if p.class.right_of_p() {
            prop_assert!(a.class.right_of_p());
        }
        if p.class.left_of_q() {
            prop_assert!(b.class.left_of_q());
        }
        if matches!(p.class, PositionClass::LeftOfP | PositionClass::MeetsP) {
            prop_assert_eq!(b.class, PositionClass::LeftOfP);
        }
        if matches!(p.class, PositionClass::RightOfQ | PositionClass::MeetsQ) {
            prop_assert_eq!(a.class, PositionClass::RightOfQ);
        }
        if p.class == PositionClass::Between {
            prop_assert!(a.class == PositionClass::Between || b.class == PositionClass::Between);
        }
    }

    #[test]
    fn central_branch_choice_keeps_flat_disks_between(xs in -1.0f64..1.0, x in 0.001f64..0.999) {
        let m = default_instance();
        let ifs = CentralIfs::new(m.lambda, m.mu);
        let xc = x * ifs.superposition_end();
        let d = UUDisk::flat(vec![xs], xc, 1);
        let b = ifs.choose_branch(xc, BranchPolicy::Midpoint).unwrap();
        let img = graph_transform(&d, b, &m);
        if let Ok(p) = classify_position(&img, &m) {
            prop_assert!(matches!(p.class, PositionClass::Between | PositionClass::MeetsP | PositionClass::MeetsQ));
        }
    }

    #[test]
    fn bump_bound_dominates_value_and_derivative(
        c in prop::collection::vec(-1.0f64..1.0, 3),
        x in prop::collection::vec(-1.0f64..1.0, 3),
        amp in prop::collection::vec(-1e-3f64..1e-3, 3),
        radius in 0.05f64..1.0,
    ) {
        let b = Bump { center: AmbientPoint::new(vec![c[0]], 0.1 * c[1], vec![c[2]]), radius, amplitude: amp };
        let p = AmbientPoint::new(vec![x[0]], 0.1 * x[1], vec![x[2]]);
        let bound = b.c1_bound();
        let v = b.value(&p);
        prop_assert!(v.iter().map(|t| t * t).sum::<f64>().sqrt() <= bound * (1.0 + 1e-12));
        prop_assert!(op_norm(&b.jacobian(&p)) <= bound * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn narrower_cones_stay_certified(s in 0.0f64..1.0, r in 0.0f64..1.0) {
        let m = default_instance();
        let opts = CertifyOptions { samples_per_class: 20, ..Default::default() };
        let (alpha, alpha_prime) = (0.00625, 0.004375);
        prop_assert_eq!(certify_blender(&m, Some(ConeParams::new(alpha, alpha_prime).unwrap()), &opts).unwrap().status, Status::Certified);
        // beta <= alpha, alpha' <= beta' < beta
        let beta = alpha_prime + (alpha - alpha_prime) * (0.01 + 0.99 * s);
        let beta_prime = alpha_prime + (beta - alpha_prime) * 0.99 * r;
        let c = certify_blender(&m, Some(ConeParams::new(beta, beta_prime).unwrap()), &opts).unwrap();
        prop_assert_eq!(c.status, Status::Certified);
    }

    #[test]
    fn image_folds_stay_valid(apex in 0.002f64..0.098, lip_frac in 0.0f64..1.0, q in any::<bool>()) {
        let m = default_instance();
        let saddle = if q { Saddle::Q } else { Saddle::P };
        let fold = make_quadratic_fold(&m, saddle, apex, lip_frac * alpha_admissible(&m), 65).unwrap();
        let step = image_fold(&fold, &m).unwrap();
        step.fold.validate(&m).unwrap();
        prop_assert!(step.window[0] >= fold.window[0] && step.window[1] <= fold.window[1]);
    }

    #[test]
    fn tangency_windows_are_nested(apex in 0.01f64..0.09, lip_frac in 0.0f64..1.0) {
        let m = default_instance();
        let fold = make_quadratic_fold(&m, Saddle::P, apex, lip_frac * alpha_admissible(&m), 65).unwrap();
        let r = locate_tangency(&fold, &m, &LocateOptions { n_iter: 25, tol: 0.0, alpha: None }).unwrap();
        for w in r.parameter_intervals.windows(2) {
            prop_assert!(w[1][0] >= w[0][0] && w[1][1] <= w[0][1]);
        }
        prop_assert!(r.interval_width < 1.0);
        prop_assert!(r.cone_margin > 0.0);
        prop_assert!(r.residual_angle < 1e-6);
    }
}
