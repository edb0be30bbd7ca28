use drtl_core::tlg::monte_carlo;
use drtl_core::{DeviceModel, ThresholdGate, Variation};

#[test]
fn failure_rate_grows_with_sigma() {
    let gate = ThresholdGate::and(2);
    for dev in [DeviceModel::ideal(), DeviceModel::mtj(3.0)] {
        let rates: Vec<_> = [0.05, 0.1, 0.2, 0.3, 0.5]
            .iter()
            .map(|&sigma| monte_carlo(&gate, &dev, Variation::Gaussian { sigma }, 20_000, 9).unwrap())
            .collect();
        for w in rates.windows(2) {
            let slack = 3.0 * (w[0].std_err().powi(2) + w[1].std_err().powi(2)).sqrt();
            assert!(w[1].rate() + slack >= w[0].rate(), "{}: {rates:?}", dev.name);
        }
        assert!(
            rates.last().unwrap().rate() > rates[0].rate(),
            "{}: {rates:?}",
            dev.name
        );
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let gate = ThresholdGate::or(2);
    let dev = DeviceModel::mtj(4.0);
    let v = Variation::Gaussian { sigma: 0.25 };
    let a = monte_carlo(&gate, &dev, v, 10_000, 42).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| monte_carlo(&gate, &dev, v, 10_000, 42).unwrap());
    assert_eq!(a, b);
}
