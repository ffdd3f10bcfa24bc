use proptest::prelude::*;

use pvrbf::characteristics::sweep_curve;
use pvrbf::dataset::{parse_dataset, write_dataset, Dataset, Sample};
use pvrbf::rbf::{gaussian_activation, Affine};
use pvrbf::{
    DiodeCircuit, FiveParamModel, InputPoint, InputScaling, KernelMode, ModuleModel, OutputKind, RbfNeuron,
    RbfSurrogate, ThermalContext, TwoDiodeModel,
};

fn module_params() -> impl Strategy<Value = FiveParamModel> {
    (0.5..10.0f64, -12.0..-6.0f64, 1.0..2.0f64, 0.0..1.0f64, 50.0..1000.0f64, 273.15..348.15f64)
        .prop_map(|(iph, log_i0, a, rs, rsh, t)| {
            FiveParamModel::new(iph, 10f64.powf(log_i0), a, rs, rsh, ThermalContext::new(36, t).unwrap()).unwrap()
        })
}

fn mode() -> impl Strategy<Value = KernelMode> {
    prop_oneof![Just(KernelMode::SumOfSquares), Just(KernelMode::ProductOfSquares)]
}

fn neurons(max: usize) -> impl Strategy<Value = Vec<RbfNeuron>> {
    prop::collection::vec(
        (-5.0..5.0f64, 0.0..30.0f64, 200.0..1000.0f64).prop_map(|(w, v, g)| RbfNeuron::new(w, v, g)),
        1..=max,
    )
}

fn scaled() -> InputScaling {
    InputScaling {
        v: Affine::min_max(0.0, 30.0),
        g: Affine::min_max(200.0, 1000.0),
        t: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn newton_and_bisection_agree(m in module_params(), frac in 0.0..1.1f64) {
        let v = (frac * m.open_circuit_voltage().unwrap()).min(100.0);
        let newton = m.solve_current(v, 1e-12).unwrap();
        let bisect = m.solve_current_bisect(v, 1e-12).unwrap();
        prop_assert!((newton - bisect).abs() < 1e-6);
        prop_assert!(m.residual(v, newton).unwrap().abs() < 1e-9);
    }

    #[test]
    fn current_decreases_with_voltage(m in module_params(), v in 0.0..40.0f64, dv in 0.01..5.0f64) {
        let a = m.solve_current(v, 1e-12).unwrap();
        let b = m.solve_current(v + dv, 1e-12).unwrap();
        prop_assert!(b < a);
    }

    #[test]
    fn two_diode_with_idle_second_diode_matches(m in module_params(), frac in 0.0..1.0f64) {
        let two = TwoDiodeModel::from_five_param(&m);
        let v = frac * m.open_circuit_voltage().unwrap();
        let a = m.solve_current(v, 1e-12).unwrap();
        let b = two.solve_current(v, 1e-12).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn activation_in_unit_interval(
        ns in neurons(1),
        sigma in 0.05..3.0f64,
        m in mode(),
        v in 0.0..30.0f64,
        g in 200.0..1000.0f64,
    ) {
        let a = gaussian_activation(&InputPoint::new(v, g), &ns[0], sigma, m, &scaled());
        prop_assert!(a > 0.0 && a <= 1.0);
        let at_centre = gaussian_activation(&InputPoint::new(ns[0].centroid_v, ns[0].centroid_g), &ns[0], sigma, m, &scaled());
        prop_assert_eq!(at_centre, 1.0);
    }

    #[test]
    fn neuron_order_is_irrelevant(
        ns in neurons(8),
        sigma in 0.1..2.0f64,
        m in mode(),
        bias in -1.0..1.0f64,
        v in 0.0..30.0f64,
        g in 200.0..1000.0f64,
    ) {
        let fwd = RbfSurrogate::new(ns.clone(), sigma, m, scaled(), OutputKind::Current, bias).unwrap();
        let mut rev = ns;
        rev.reverse();
        let bwd = RbfSurrogate::new(rev, sigma, m, scaled(), OutputKind::Current, bias).unwrap();
        let x = InputPoint::new(v, g);
        let (a, b) = (fwd.evaluate(&x).unwrap(), bwd.evaluate(&x).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn scaling_matches_prescaled_identity_network(
        ns in neurons(6),
        sigma in 0.1..2.0f64,
        m in mode(),
        v in 0.0..30.0f64,
        g in 200.0..1000.0f64,
    ) {
        let s = scaled();
        let raw = RbfSurrogate::new(ns.clone(), sigma, m, s, OutputKind::Current, 0.0).unwrap();
        let pre: Vec<_> = ns
            .iter()
            .map(|n| RbfNeuron::new(n.weight, s.v.apply(n.centroid_v), s.g.apply(n.centroid_g)))
            .collect();
        let ident = RbfSurrogate::new(pre, sigma, m, InputScaling::identity(), OutputKind::Current, 0.0).unwrap();
        let a = raw.evaluate(&InputPoint::new(v, g)).unwrap();
        let b = ident.evaluate(&InputPoint::new(s.v.apply(v), s.g.apply(g))).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn dataset_csv_round_trip(
        rows in prop::collection::vec((0.0..1500.0f64, -5.0..60.0f64, -50.0..200.0f64), 1..40),
        power in any::<bool>(),
    ) {
        let kind = if power { OutputKind::Power } else { OutputKind::Current };
        let samples = rows
            .into_iter()
            .map(|(g, v, y)| Sample { irradiance: g, voltage: v, temperature: None, target: y })
            .collect();
        let d = Dataset::new(kind, samples, "proptest").unwrap();
        let mut buf = Vec::new();
        write_dataset(&d, &mut buf).unwrap();
        let back = parse_dataset(std::str::from_utf8(&buf).unwrap(), kind).unwrap();
        prop_assert_eq!(back.samples, d.samples);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn swept_power_is_voltage_times_current(m in module_params(), g in 100.0..1200.0f64) {
        let module = ModuleModel::five_param(m, 1000.0).unwrap();
        let c = sweep_curve(&module, g, m.thermal.temperature(), 30.0, 61).unwrap();
        for p in c.points() {
            prop_assert_eq!(p.p, p.v * p.i);
        }
    }
}
