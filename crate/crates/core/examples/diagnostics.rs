//! Diagnostics around the estimator: the CLT of the empirical estimator,
//! the oracle bound against simulated MSE, the moment condition and the
//! variance of the connection probability.

use localdeg::analysis::{
    bound_report, check_moment_condition, clt_check, estimate_sigma2, sbm_sigma2, BoundSettings, CltSource,
};
use localdeg::model::{FeatureDistribution, GraphModel};
use localdeg::{ConnectionFunction, Rcm, SbmSpec, SeedStream, WeightScheme};

fn main() -> localdeg::Result<()> {
    let stream = SeedStream::new(2);

    for (n, p) in [(100, 0.01), (10_000, 0.01), (10_000, 0.3)] {
        let r = clt_check(&CltSource::Binomial { p }, n, 10_000, stream.fork("clt"))?;
        println!("CLT n={n:>6} p={p:<5} KS = {:.4}", r.ks_distance);
    }

    let spec = SbmSpec::running_example();
    println!("\nsigma^2 (running example) = {:.6}", sbm_sigma2(&spec)?);
    let rcm = Rcm::new(FeatureDistribution::uniform_cube(2)?, ConnectionFunction::hard_threshold(0.2)?);
    let s2 = estimate_sigma2(&rcm, 200_000, stream.fork("sigma"))?;
    println!("sigma^2 (unit square, alpha 0.2) = {:.6} +- {:.6}", s2.value, s2.std_error);
    for n in [100, 1000] {
        let mc = check_moment_condition(&rcm, n, 2_000, stream.fork("moment"))?;
        println!("moment ratio at n={n}: {:.3e}", mc.ratio);
    }

    let model = GraphModel::Sbm(spec);
    let settings = BoundSettings { k0: 0, k_max: 3, replicates: 2_000, sigma_samples: 0, truth_samples: 0 };
    let rows = bound_report(&model, &WeightScheme::Geometric { gamma: 0.1 }, settings, stream.fork("bound"))?;
    println!("\n k  bound/C        mse            se");
    for r in rows {
        println!("{:>2}  {:<14.6e} {:<14.6e} {:.2e}", r.k, r.rhs, r.mse, r.mse_se);
    }
    Ok(())
}
