use tvslab::analytic::{TvsParams, LAMBDA};
use tvslab::chaos::{conditional_one_point, ChaosBuilder};
use tvslab::geometry::{point, Region};
use tvslab::lattice::{GffSample, LatticeDomain};
use tvslab::rng::task_rng;
use tvslab::stats::Estimate;
use tvslab::tvs::{extract_tvs, RadiusMode};

fn negated(d: &LatticeDomain, s: &GffSample) -> GffSample {
    GffSample::from_values(d, s.fluctuation().iter().map(|v| -v).collect(), -s.boundary_shift()).unwrap()
}

#[test]
fn negated_field_conjugates_pairings_and_flips_labels() {
    let d = LatticeDomain::new(128).unwrap();
    let p = TvsParams::symmetric(2.0 * LAMBDA).unwrap();
    let b = ChaosBuilder::new(&d, 0.3, 0.06).unwrap();
    let u = Region::disc(point(0.1, -0.1), 0.3);
    for k in 0..4 {
        let s = d.sample_gff(&mut task_rng(31, k));
        let m = negated(&d, &s);
        let (x, y) = (b.pair_region(&d, &s, &u).unwrap(), b.pair_region(&d, &m, &u).unwrap());
        assert!((x.conj() - y).norm() <= 1e-12 * x.norm());

        let (t, r) = (extract_tvs(&d, &s, &p).unwrap(), extract_tvs(&d, &m, &p).unwrap());
        assert_eq!(t.reached(), r.reached());
        for v in 0..d.node_count() {
            match (t.harmonic_value(v), r.harmonic_value(v)) {
                (Some(h), Some(g)) => assert!((h + g).abs() < 1e-12, "node {v}: {h} vs {g}"),
                (None, None) => {}
                other => panic!("node {v}: {other:?}"),
            }
        }
    }
}

// With a = b the labels ±a are exchangeable, so the imaginary part of the
// conditional target has mean zero over the ensemble.
#[test]
fn conditional_target_imaginary_part_averages_out() {
    let d = LatticeDomain::new(128).unwrap();
    let p = TvsParams::symmetric(2.0 * LAMBDA).unwrap();
    let b = ChaosBuilder::new(&d, 0.3, 0.06).unwrap();
    let u = Region::disc(point(0.0, 0.0), 0.3);
    let mode = RadiusMode::Koebe { factor: 2.0 };
    let mut re = Vec::new();
    let mut im = Vec::new();
    for k in 0..60 {
        let s = d.sample_gff(&mut task_rng(32, k));
        let m = negated(&d, &s);
        let t = extract_tvs(&d, &s, &p).unwrap();
        let x = conditional_one_point(&d, &s, &t, &b, &u, 2, mode, 5, k).unwrap().target;
        let y = conditional_one_point(&d, &m, &extract_tvs(&d, &m, &p).unwrap(), &b, &u, 2, mode, 5, k)
            .unwrap()
            .target;
        assert!((x.conj() - y).norm() <= 1e-12 * x.norm().max(1e-300));
        re.push(x.re);
        im.push(x.im);
    }
    let e = Estimate::from_samples(&im);
    assert!(e.within(0.0, 3.0), "{e:?}");
    assert!(Estimate::from_samples(&re).mean > 0.0);
}
