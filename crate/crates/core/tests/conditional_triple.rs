use tvslab::analytic::{TvsParams, LAMBDA};
use tvslab::chaos::{conditional_three_point_mc, conditional_three_point_rhs, ChaosBuilder};
use tvslab::geometry::{point, Point, Region};
use tvslab::lattice::{GffSample, LatticeDomain};
use tvslab::tvs::{Level, TvsApprox};

const CENTRES: [(f64, f64); 3] = [(0.35, 0.0), (-0.175, 0.303), (-0.175, -0.303)];

fn regions() -> [Region; 3] {
    CENTRES.map(|(x, y)| Region::disc(point(x, y), 0.08))
}

// Components laid out by hand so that every region node lies in a component;
// the resampled cosine product then estimates exactly the component formula.
fn check(d: &LatticeDomain, tvs: &TvsApprox, outer: u64) {
    let b = ChaosBuilder::new(d, 0.3, 0.05).unwrap();
    let rhs = conditional_three_point_rhs(d, tvs, &regions(), 0.3, 500).unwrap();
    assert!(rhs.rhs >= rhs.lower_bound - 1e-12 * rhs.h_integral.abs());
    let mc = conditional_three_point_mc(d, &GffSample::zero(d), tvs, &b, &regions(), 400, 72, outer).unwrap();
    assert!(mc.within(rhs.rhs, 3.0), "{mc:?} vs {rhs:?}");
}

fn membership(d: &LatticeDomain, discs: &[(Point, f64)]) -> Vec<Option<usize>> {
    (0..d.node_count())
        .map(|u| discs.iter().position(|&(c, r)| (d.position(u) - c).norm() < r))
        .collect()
}

#[test]
fn triple_in_one_component() {
    let d = LatticeDomain::new(128).unwrap();
    let p = TvsParams::symmetric(2.0 * LAMBDA).unwrap();
    let m = membership(&d, &[(point(0.0, 0.0), 0.6)]);
    let tvs = TvsApprox::from_membership(&d, p, &m, &[Level::Upper]).unwrap();
    check(&d, &tvs, 0);
}

#[test]
fn triple_across_components_with_mixed_labels() {
    let d = LatticeDomain::new(128).unwrap();
    let p = TvsParams::symmetric(2.0 * LAMBDA).unwrap();
    let discs = CENTRES.map(|(x, y)| (point(x, y), 0.25));
    let m = membership(&d, &discs);
    let tvs = TvsApprox::from_membership(&d, p, &m, &[Level::Upper, Level::Lower, Level::Upper]).unwrap();
    check(&d, &tvs, 1);
}
