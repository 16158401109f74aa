use ncretract::corpus::{generate, GenerateKind, GenerateParams};
use ncretract::instance::Instance;
use ncretract::sampling::Sampler;
use ncretract::verify::{kadison_schwarz, verify_expectation};
use ncretract::{AlgebraSignature, Element, Element32, Tolerance};
use proptest::prelude::*;

fn signature() -> impl Strategy<Value = AlgebraSignature> {
    prop::collection::vec(1usize..=3, 1..=3).prop_map(|b| AlgebraSignature::new(b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cstar_identity(s in signature(), seed in any::<u64>()) {
        let x: Element = Sampler::new(seed).element(&s);
        let n = x.operator_norm();
        let lhs = (&x.adjoint() * &x).operator_norm();
        prop_assert!((lhs - n * n).abs() <= 1e-9 * (1.0 + n * n));
    }

    #[test]
    fn cstar_identity_single_precision(s in signature(), seed in any::<u64>()) {
        let x: Element32 = Sampler::new(seed).element(&s);
        let n = x.operator_norm();
        let lhs = (&x.adjoint() * &x).operator_norm();
        prop_assert!((lhs - n * n).abs() <= 1e-4 * (1.0 + n * n));
    }

    #[test]
    fn norm_is_submultiplicative(s in signature(), seed in any::<u64>()) {
        let mut sampler = Sampler::new(seed);
        let x: Element = sampler.element(&s);
        let y: Element = sampler.element(&s);
        prop_assert!((&x * &y).operator_norm() <= x.operator_norm() * y.operator_norm() * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn instance_round_trips_through_toml(blocks in prop::collection::vec(1usize..=3, 1..=3), seed in any::<u64>()) {
        let params = GenerateParams { blocks: Some(blocks), ..Default::default() };
        for kind in [GenerateKind::Pinching, GenerateKind::Central, GenerateKind::DensePerturbed] {
            for inst in generate(kind, &params, 1, seed).unwrap() {
                let back = Instance::parse(&inst.to_toml().unwrap()).unwrap();
                prop_assert_eq!(&back, &inst);
            }
        }
    }

    #[test]
    fn generated_expectations_satisfy_kadison_schwarz(blocks in prop::collection::vec(1usize..=3, 1..=3), seed in any::<u64>()) {
        let tol = Tolerance::default();
        let params = GenerateParams { blocks: Some(blocks), ..Default::default() };
        let inst = generate(GenerateKind::Pinching, &params, 1, seed).unwrap().remove(0);
        let map = inst.build(&tol).unwrap().map;
        prop_assert!(verify_expectation(&map, &tol, seed).holds());
        let mut sampler = Sampler::new(seed);
        for _ in 0..16 {
            let x: Element = sampler.unit_element(map.signature());
            let s = kadison_schwarz(&map, &x, &tol).unwrap();
            prop_assert!(s.defect_min_eigenvalue >= -tol.psd_tol);
            prop_assert!(s.gap >= -tol.eq_tol);
        }
    }
}
