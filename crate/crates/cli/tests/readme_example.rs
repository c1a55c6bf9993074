use mulsum::free_energy::{asymptotic_free_energy, SeriesControl, SymmetricFreeEnergy};
use mulsum::lattice::{BoxSpec, ChainCensus, MultiplierVector};
use mulsum::rate::{legendre_rate, SolverControl};

#[test]
fn readme_example_compiles_and_runs() -> Result<(), mulsum::Error> {
    let p = MultiplierVector::new(&[2, 3])?;
    let n = BoxSpec::new(&[12, 12])?;

    let census = ChainCensus::closed_form(&n, &p)?;
    assert_eq!(
        census
            .rows()
            .iter()
            .map(|r| r.ell * r.count_free)
            .sum::<u64>(),
        n.volume()
    );

    let (value, tail) = asymptotic_free_energy(0.3, &p, 1.0, SeriesControl::default())?;
    println!("F(1.0) = {value} (+/- {tail})");

    let rate = legendre_rate(&SymmetricFreeEnergy, 0.2, SolverControl::default())?;
    println!("I(0.2) = {}", rate.value);
    Ok(())
}
