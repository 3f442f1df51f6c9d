//! Random connection model over a population-weighted city table.
//!
//! Writes a small synthetic city CSV to a temporary directory, builds the
//! empirical feature law from it and computes the exact local connection
//! probability of one city within a 2 degree radius.

use std::fs;

use localdeg::io::{city_coordinates, city_distribution, load_cities};
use localdeg::mccv::estimate_with_mccv;
use localdeg::model::{EdgeMode, TruthRequest};
use localdeg::{ConnectionFunction, Rcm, SeedStream, SplitPlan, WeightScheme};
use rand::Rng;

fn main() -> localdeg::Result<()> {
    let dir = std::env::temp_dir().join("localdeg-city-example");
    fs::create_dir_all(&dir)?;
    let path = dir.join("cities.csv");

    let mut rng = SeedStream::new(5).fork("table").rng();
    let mut csv = String::from("name,country,population,latitude,longitude\n");
    for i in 0..400 {
        let lat: f64 = rng.random_range(40.0..50.0);
        let lon: f64 = rng.random_range(0.0..15.0);
        let pop: f64 = 1_000.0 + rng.random::<f64>().powi(4) * 2_000_000.0;
        csv.push_str(&format!("town{i},XX,{pop:.0},{lat:.4},{lon:.4}\n"));
    }
    fs::write(&path, csv)?;

    let cities = load_cities(&path)?;
    let origin = city_coordinates(&cities, "town0")?;
    let rcm = Rcm::new(city_distribution(&cities)?, ConnectionFunction::hard_threshold(2.0)?);
    let stream = SeedStream::new(5);
    let truth = rcm.truth(&origin, TruthRequest::EmpiricalExact, stream.fork("truth"))?;
    println!("{} cities, origin {:?}, exact p(x) = {:.5}", cities.len(), origin, truth.value);

    let g = rcm.sample_graph(300, &origin, EdgeMode::Undirected, &mut stream.fork("graph").rng())?;
    let plan = SplitPlan::new(50, stream.fork("splits").seed());
    for scheme in WeightScheme::standard(0.1) {
        let est = estimate_with_mccv(&g, &scheme, &plan)?;
        println!("{:<16} m = {:>3}  estimate {:.5}", scheme.label(), est.selected_m, est.estimate);
    }
    Ok(())
}
