use qplab_core::functions::{MeromorphicPotential, ToeplitzKernel};
use qplab_core::localization::{bad_set, orbit_count};
use qplab_core::spectral::*;
use qplab_core::torus::{Frequency, TorusPoint};

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn main() {
    let potential = MeromorphicPotential::maryland();
    let kernel = ToeplitzKernel::geometric(0.5, 1.0, 12).unwrap();
    let freq = Frequency::new(GOLDEN, 0.1, 2.0).unwrap();
    let spec = OperatorSpec::new(potential, kernel, 0.05, freq).unwrap();

    let (m, result) = good_shift(&spec, TorusPoint::new(0.1), 0.0, 100).unwrap();
    let d = result.decay.unwrap();
    println!("good_shift N=100: m={m} rate={:.12} offset={:.12} r2={:.12}", d.rate, d.offset, d.r2);

    let avg = avg_logdet_check(&spec, 0.0, 64, 2048).unwrap();
    println!("avgdet N=64 grid=2048: lhs={:.12} rhs={:.12} margin={:.12}", avg.lhs, avg.rhs, avg.margin);

    let avg_big = avg_logdet_check(&spec, 1e4, 64, 1024).unwrap();
    println!("avgdet E=1e4: margin={:.12}", avg_big.margin);

    let set = bad_set(&spec, 0.0, 32, 512, 0.6, 12.0).unwrap();
    println!("badset N=32: fraction={}", set.fraction);
    let oc = orbit_count(&set, TorusPoint::new(0.1), &freq, 4096, 0.1);
    println!("orbit N1=4096: count={} ratio={:.12} sanity={}", oc.count, oc.ratio, oc.sanity_ok);
}
