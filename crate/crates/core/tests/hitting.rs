use tvslab::analytic::{TvsParams, LAMBDA};
use tvslab::estimators::{one_point_probability, two_point_probability, RadiusOutcome};
use tvslab::geometry::point;
use tvslab::lattice::LatticeDomain;
use tvslab::stats::Estimate;
use tvslab::tvs::{extract_tvs, nesting_check, EdgeModel};
use tvslab::Error;

fn outcome(r: tvslab::Result<f64>) -> RadiusOutcome {
    match r {
        Ok(t) => Some(t),
        Err(Error::OnFrontier) => None,
        Err(e) => panic!("{e}"),
    }
}

// A wider band reaches more, so hitting frequencies grow with the band and
// with ε.
#[test]
fn one_point_frequencies_are_monotone_in_band_and_radius() {
    let d = LatticeDomain::new(128).unwrap();
    let narrow = TvsParams::symmetric(LAMBDA).unwrap();
    let wide = TvsParams::symmetric(2.0 * LAMBDA).unwrap();
    let z = point(0.05, -0.1);
    let pairs = d
        .sample_ensemble(150, 61, |_, s| {
            assert!(nesting_check(&d, s, &narrow, &wide, EdgeModel::Linear)?);
            let n = extract_tvs(&d, s, &narrow)?;
            let w = extract_tvs(&d, s, &wide)?;
            Ok((outcome(n.radius_law(&d, z)), outcome(w.radius_law(&d, z))))
        })
        .unwrap();
    let radii = [0.2, 0.1, 0.05];
    let (n_out, w_out): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let pn = one_point_probability(&n_out, z, &radii, &narrow).unwrap();
    let pw = one_point_probability(&w_out, z, &radii, &wide).unwrap();
    for (a, b) in pn.iter().zip(&pw) {
        assert!(
            b.estimate.mean >= a.estimate.mean,
            "ε {}: wide {} narrow {}",
            a.eps,
            b.estimate.mean,
            a.estimate.mean
        );
    }
    for rows in [&pn, &pw] {
        for w in rows.windows(2) {
            assert!(w[1].estimate.mean <= w[0].estimate.mean);
        }
    }
}

// Far apart points: the joint frequency is close to the product of marginals.
#[test]
fn distant_points_hit_nearly_independently() {
    let d = LatticeDomain::new(256).unwrap();
    let p = TvsParams::symmetric(LAMBDA).unwrap();
    let (x, y) = (point(-0.45, 0.0), point(0.45, 0.0));
    let delta = 0.06;
    let dist = d
        .sample_ensemble(300, 62, |_, s| {
            let t = extract_tvs(&d, s, &p)?;
            Ok((t.distance_to_set(&d, x)?, t.distance_to_set(&d, y)?))
        })
        .unwrap();
    let res = two_point_probability(&dist, x, y, &[delta], &p, 0.9 * p.sigma_critical()).unwrap();
    let joint = res.rows[0].1;
    let hx: Vec<f64> = dist.iter().map(|d| (d.0 <= delta) as u8 as f64).collect();
    let hy: Vec<f64> = dist.iter().map(|d| (d.1 <= delta) as u8 as f64).collect();
    let product = Estimate::from_samples(&hx).mean * Estimate::from_samples(&hy).mean;
    assert!(joint.mean <= 1.0);
    assert!(joint.within(product, 3.0), "{joint:?} vs {product}");
}
