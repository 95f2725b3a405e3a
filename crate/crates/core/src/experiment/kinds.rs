use std::f64::consts::{PI, SQRT_2};

use super::config::{ExperimentConfig, ExperimentKind, RadiusChoice, KOEBE_CALIBRATION_NODES, TWO_POINT_MAX_DELTA};
use super::report::RowSink;
use crate::analytic::{
    disc_conformal_radius, disc_green, exit_laplace, exit_survival, expected_measure_mass, TvsParams, DEFAULT_TOL,
};
use crate::brownian::ExitSimulator;
use crate::chaos::{
    conditional_one_point, conditional_three_point_mc, conditional_three_point_rhs, cosine_triple,
    lattice_conditional_mean, pairing_moments, ChaosBuilder,
};
use crate::estimators::{
    box_count, content_functional, hitting_exponent, minkowski_measure, one_point_probability, richardson,
    two_point_probability, Profile, RadiusField, RadiusOutcome,
};
use crate::geometry::{point, Point, Region};
use crate::lattice::{circle_average, GffSample, LatticeDomain};
use crate::rng::task_rng;
use crate::stats::{covariance, ks_distance, ks_distance_censored, Estimate};
use crate::tvs::{calibrate_koebe_factor, extract_tvs, RadiusMode, TvsApprox};
use crate::{Error, Result};

/// Times at which the exit-law survival function is compared.
pub const EXIT_TIMES: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
/// Largest step of the Brownian exit simulation.
pub const EXIT_MAX_DT: f64 = 0.02;
/// Point pairs for the covariance check, all with `|z − w| > 0.1`.
pub const COVARIANCE_PAIRS: [((f64, f64), (f64, f64)); 5] = [
    ((0.1, 0.0), (-0.2, 0.1)),
    ((0.3, 0.2), (0.0, -0.3)),
    ((-0.4, 0.0), (-0.1, 0.25)),
    ((0.2, -0.2), (0.45, 0.1)),
    ((0.0, 0.4), (-0.3, -0.1)),
];
/// Hitting radii `e^{−1.5}, …, e^{−3}` of the one-point experiment.
pub const ONE_POINT_LOG_RADII: [f64; 4] = [1.5, 2.0, 2.5, 3.0];
/// Largest accepted KS distance of the radius law.
pub const RADIUS_KS_LIMIT: f64 = 0.08;
pub const TWO_POINT_DELTAS: [f64; 3] = [TWO_POINT_MAX_DELTA, 0.02, 0.012];
/// Half-width of the square window for box counting.
pub const BOX_WINDOW: f64 = 0.5;
/// Window sizes `u` and offsets `δ` of the content-lemma check.
pub const CONTENT_STEPS: [f64; 3] = [0.1, 0.05, 0.025];
/// Segment carrying the synthetic radius field of the content-lemma check.
pub const CONTENT_SEGMENT: ((f64, f64), (f64, f64)) = ((-0.25, 0.0), (0.25, 0.0));

/// Three discs of radius 0.08 centred on the circle of radius 0.35.
pub fn triple_regions() -> [Region; 3] {
    [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0].map(|t| Region::disc(Point::from_polar(0.35, t), 0.08))
}

pub(crate) fn execute(cfg: &ExperimentConfig, sink: &mut RowSink) -> Result<()> {
    let params = cfg.params()?;
    match cfg.experiment {
        ExperimentKind::ExitLaw => exit_law(cfg, &params, sink),
        ExperimentKind::ContentLemma => content_lemma(sink),
        kind => {
            let domain = LatticeDomain::new(cfg.lattice_n)?;
            match kind {
                ExperimentKind::Covariance => gff_covariance(cfg, &domain, sink),
                ExperimentKind::ChaosMoments => chaos_moments(cfg, &domain, sink),
                ExperimentKind::ConditionalOnePoint => conditional_one(cfg, &domain, &params, sink),
                ExperimentKind::ConditionalThreePoint => conditional_three(cfg, &domain, &params, sink),
                ExperimentKind::Dimension => dimension(cfg, &domain, &params, sink),
                ExperimentKind::OnePoint => one_point(cfg, &domain, &params, sink),
                ExperimentKind::TwoPoint => two_point(cfg, &domain, &params, sink),
                ExperimentKind::Minkowski => minkowski(cfg, &domain, &params, sink),
                ExperimentKind::ExitLaw | ExperimentKind::ContentLemma => unreachable!(),
            }
        }
    }
}

fn exit_law(cfg: &ExperimentConfig, params: &TvsParams, sink: &mut RowSink) -> Result<()> {
    let law = params.exit_law();
    let sim = ExitSimulator::new(law.interval_length(), law.start(), EXIT_MAX_DT)?;
    let taus = sim.sample(cfg.samples, cfg.seed);
    for t in EXIT_TIMES {
        let alive: Vec<f64> = taus.iter().map(|&x| if x > t { 1.0 } else { 0.0 }).collect();
        sink.proportion(
            "survival",
            Some(t),
            &Estimate::from_samples(&alive),
            exit_survival(&law, t)?,
            3.0,
        );
    }
    let ks = ks_distance(&taus, |t| law.cdf(t));
    // 99% quantile of the KS statistic, floored at the absolute tolerance 0.01
    let limit = (1.63 / (cfg.samples as f64).sqrt()).max(0.01);
    sink.push("ks", None, ks, None, Some(0.0), Some(ks <= limit));
    let sigma = sink.sigma.expect("resolved");
    let weights: Vec<f64> = taus.iter().map(|&t| (0.5 * sigma * sigma * t).exp()).collect();
    sink.estimate(
        "laplace",
        Some(sigma),
        &Estimate::from_samples(&weights),
        exit_laplace(params, sigma, 0.0)?,
        3.0,
    );
    if sigma > params.sigma_critical() / SQRT_2 {
        sink.notes.push(format!(
            "sigma = {sigma} exceeds sigma_c/sqrt(2): exp(sigma^2 tau/2) has infinite variance and its SE is unreliable"
        ));
    }
    Ok(())
}

fn gff_covariance(cfg: &ExperimentConfig, domain: &LatticeDomain, sink: &mut RowSink) -> Result<()> {
    let eps = sink.eps.expect("resolved");
    let points: Vec<Point> = COVARIANCE_PAIRS
        .iter()
        .flat_map(|&((zx, zy), (wx, wy))| [point(zx, zy), point(wx, wy)])
        .collect();
    let values = domain.sample_ensemble(cfg.samples, cfg.seed, |_, s| {
        points
            .iter()
            .map(|&z| circle_average(domain, s, z, eps))
            .collect::<Result<Vec<f64>>>()
    })?;
    for (k, pair) in points.chunks(2).enumerate() {
        let xs: Vec<f64> = values.iter().map(|v| v[2 * k]).collect();
        let ys: Vec<f64> = values.iter().map(|v| v[2 * k + 1]).collect();
        sink.estimate(
            "cov",
            Some(k as f64),
            &covariance(&xs, &ys),
            disc_green(pair[0], pair[1])?,
            3.0,
        );
    }
    Ok(())
}

fn chaos_moments(cfg: &ExperimentConfig, domain: &LatticeDomain, sink: &mut RowSink) -> Result<()> {
    let builder = ChaosBuilder::new(domain, sink.sigma.expect("resolved"), sink.eps.expect("resolved"))?;
    let region = Region::disc(point(0.0, 0.0), cfg.region_radius);
    let m = pairing_moments(domain, &builder, &region, cfg.samples, cfg.seed)?;
    sink.estimate("first-re", Some(cfg.region_radius), &m.first.re, m.first_target, 3.0);
    sink.estimate("first-im", Some(cfg.region_radius), &m.first.im, 0.0, 3.0);
    let tol = (3.0 * m.second.se).max(0.05 * m.second_target);
    sink.push(
        "second",
        Some(cfg.region_radius),
        m.second.mean,
        Some(m.second.se),
        Some(m.second_target),
        Some((m.second.mean - m.second_target).abs() <= tol),
    );
    let t = cosine_triple(domain, &builder, &triple_regions(), cfg.samples, cfg.seed)?;
    sink.estimate("triple", None, &t.estimate, t.target, 3.0);
    Ok(())
}

/// Field sample and extracted set of outer sample `k`.
fn outer_sample(
    cfg: &ExperimentConfig,
    domain: &LatticeDomain,
    params: &TvsParams,
    k: u64,
) -> Result<(GffSample, TvsApprox)> {
    let s = domain.sample_gff(&mut task_rng(cfg.seed, k));
    let tvs = extract_tvs(domain, &s, params)?;
    Ok((s, tvs))
}

fn radius_mode(cfg: &ExperimentConfig, domain: &LatticeDomain, tvs: &TvsApprox) -> Result<RadiusMode> {
    Ok(match cfg.radius_mode {
        RadiusChoice::Exact => RadiusMode::Exact,
        RadiusChoice::Koebe => match calibrate_koebe_factor(domain, tvs, KOEBE_CALIBRATION_NODES) {
            Ok(f) => cfg.radius_mode.mode(f),
            // every node reached: there is nothing to measure a radius on
            Err(Error::Degenerate(_)) => cfg.radius_mode.mode(1.0),
            Err(e) => return Err(e),
        },
    })
}

/// Share of outer samples whose conditional estimate must agree for the run to pass.
pub const CONDITIONAL_AGREEMENT: f64 = 0.85;

fn conditional_one(
    cfg: &ExperimentConfig,
    domain: &LatticeDomain,
    params: &TvsParams,
    sink: &mut RowSink,
) -> Result<()> {
    let builder = ChaosBuilder::new(domain, sink.sigma.expect("resolved"), sink.eps.expect("resolved"))?;
    let region = Region::disc(point(0.0, 0.0), cfg.region_radius);
    sink.notes.push(format!("radius mode: {:?}", cfg.radius_mode));
    let mut agree = 0;
    let mut lattice_agree = 0;
    for k in 0..cfg.samples as u64 {
        let (s, tvs) = outer_sample(cfg, domain, params, k)?;
        let mode = radius_mode(cfg, domain, &tvs)?;
        let res = conditional_one_point(
            domain,
            &s,
            &tvs,
            &builder,
            &region,
            cfg.inner_resamples,
            mode,
            cfg.seed,
            k,
        )?;
        let lattice = lattice_conditional_mean(domain, &s, &tvs, &builder, &region, usize::MAX)?;
        let at = Some(k as f64);
        let e = res.estimate;
        sink.push("re", at, e.re.mean, Some(e.re.se), Some(res.target.re), None);
        sink.push("im", at, e.im.mean, Some(e.im.se), Some(res.target.im), None);
        sink.push("lattice-re", at, e.re.mean, Some(e.re.se), Some(lattice.re), None);
        sink.push("lattice-im", at, e.im.mean, Some(e.im.se), Some(lattice.im), None);
        agree += e.within(res.target, 3.0) as usize;
        lattice_agree += e.within(lattice, 3.0) as usize;
    }
    let m = cfg.samples as f64;
    let share = agree as f64 / m;
    sink.push(
        "agreement",
        None,
        share,
        None,
        Some(CONDITIONAL_AGREEMENT),
        Some(share >= CONDITIONAL_AGREEMENT),
    );
    sink.push(
        "lattice-agreement",
        None,
        lattice_agree as f64 / m,
        None,
        Some(CONDITIONAL_AGREEMENT),
        None,
    );
    Ok(())
}

fn conditional_three(
    cfg: &ExperimentConfig,
    domain: &LatticeDomain,
    params: &TvsParams,
    sink: &mut RowSink,
) -> Result<()> {
    let sigma = sink.sigma.expect("resolved");
    let builder = ChaosBuilder::new(domain, sigma, sink.eps.expect("resolved"))?;
    let regions = triple_regions();
    for k in 0..cfg.samples as u64 {
        let (s, tvs) = outer_sample(cfg, domain, params, k)?;
        let rhs = conditional_three_point_rhs(domain, &tvs, &regions, sigma, cfg.max_points)?;
        let mc = conditional_three_point_mc(domain, &s, &tvs, &builder, &regions, cfg.inner_resamples, cfg.seed, k)?;
        sink.estimate("triple", Some(k as f64), &mc, rhs.rhs, 3.0);
        sink.push(
            "lower-bound",
            Some(k as f64),
            rhs.rhs,
            None,
            Some(rhs.lower_bound),
            Some(rhs.rhs >= rhs.lower_bound - 1e-12 * rhs.h_integral.abs()),
        );
    }
    Ok(())
}

fn dimension(cfg: &ExperimentConfig, domain: &LatticeDomain, params: &TvsParams, sink: &mut RowSink) -> Result<()> {
    let results = domain.sample_ensemble(cfg.samples, cfg.seed, |_, s| {
        let tvs = extract_tvs(domain, s, params)?;
        Ok(box_count(domain, &tvs, BOX_WINDOW).ok())
    })?;
    let fitted: Vec<_> = results.iter().flatten().collect();
    if fitted.is_empty() {
        return Err(Error::Degenerate("no sample had enough occupied boxes to fit".into()));
    }
    if fitted.len() < results.len() {
        sink.notes.push(format!(
            "{} samples had too few occupied boxes and were skipped",
            results.len() - fitted.len()
        ));
    }
    for (i, &scale) in fitted[0].scales.iter().enumerate() {
        let counts: Vec<f64> = fitted.iter().map(|r| r.counts[i] as f64).collect();
        let e = Estimate::from_samples(&counts);
        sink.push("count", Some(scale), e.mean, Some(e.se), None, None);
    }
    let slopes: Vec<f64> = fitted.iter().map(|r| r.slope).collect();
    let e = Estimate::from_samples(&slopes);
    let d = params.dimension();
    sink.push(
        "slope",
        None,
        e.mean,
        Some(e.se),
        Some(d),
        Some((e.mean - d).abs() <= 0.1),
    );
    Ok(())
}

fn one_point(cfg: &ExperimentConfig, domain: &LatticeDomain, params: &TvsParams, sink: &mut RowSink) -> Result<()> {
    let z = point(cfg.z_x, cfg.z_y);
    let outcomes: Vec<RadiusOutcome> = domain.sample_ensemble(cfg.samples, cfg.seed, |_, s| {
        match extract_tvs(domain, s, params)?.radius_law(domain, z) {
            Ok(t) => Ok(Some(t)),
            Err(Error::OnFrontier) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    let radii = ONE_POINT_LOG_RADII.map(|t| (-t).exp());
    let rows = one_point_probability(&outcomes, z, &radii, params)?;
    for r in &rows {
        sink.proportion("hit", Some(r.eps), &r.estimate, r.series, 3.0);
        sink.push(
            "hit-leading",
            Some(r.eps),
            r.estimate.mean,
            Some(r.estimate.se),
            Some(r.leading),
            None,
        );
    }
    let target = 2.0 - params.dimension();
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps, r.estimate.mean)).collect();
    match hitting_exponent(&pairs) {
        Ok(slope) => sink.push(
            "exponent",
            None,
            slope,
            None,
            Some(target),
            Some((slope - target).abs() <= 0.1),
        ),
        Err(_) => sink.push("exponent", None, f64::NAN, None, Some(target), Some(false)),
    }
    // beyond ln(r_𝔻(z) n/8) the nearest node may already be reached, so the
    // law is compared below that level only
    let law = params.exit_law();
    let cutoff = (disc_conformal_radius(z) * cfg.lattice_n as f64 / 8.0).ln();
    let observed: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let ks = ks_distance_censored(&observed, outcomes.len(), cutoff, |t| law.cdf(t));
    sink.push(
        "radius-ks",
        Some(cutoff),
        ks,
        None,
        Some(0.0),
        Some(ks <= RADIUS_KS_LIMIT),
    );
    let frontier = outcomes.iter().filter(|o| o.is_none()).count();
    sink.notes
        .push(format!("{frontier} samples had z on the set at lattice resolution"));
    Ok(())
}

fn two_point(cfg: &ExperimentConfig, domain: &LatticeDomain, params: &TvsParams, sink: &mut RowSink) -> Result<()> {
    let x = point(-0.5 * cfg.separation, 0.0);
    let y = point(0.5 * cfg.separation, 0.0);
    let distances = domain.sample_ensemble(cfg.samples, cfg.seed, |_, s| {
        let tvs = extract_tvs(domain, s, params)?;
        Ok((tvs.distance_to_set(domain, x)?, tvs.distance_to_set(domain, y)?))
    })?;
    let sigma = sink.sigma.expect("resolved");
    let res = two_point_probability(&distances, x, y, &TWO_POINT_DELTAS, params, sigma)?;
    for (delta, e) in &res.rows {
        let hx: Vec<f64> = distances.iter().map(|d| (d.0 <= *delta) as u8 as f64).collect();
        let hy: Vec<f64> = distances.iter().map(|d| (d.1 <= *delta) as u8 as f64).collect();
        let product = Estimate::from_samples(&hx).mean * Estimate::from_samples(&hy).mean;
        sink.push("joint", Some(*delta), e.mean, Some(e.se), None, Some(e.mean <= 1.0));
        sink.push("marginal-product", Some(*delta), product, None, None, None);
    }
    let sc = params.sigma_critical();
    let target = sc * sc;
    sink.push(
        "slope",
        None,
        res.slope,
        None,
        Some(target),
        Some(res.slope >= target - 0.15),
    );
    sink.notes
        .push(format!("bound exponent at sigma = {sigma}: {}", res.predicted));
    Ok(())
}

fn minkowski(cfg: &ExperimentConfig, domain: &LatticeDomain, params: &TvsParams, sink: &mut RowSink) -> Result<()> {
    sink.delta = Some(cfg.delta);
    sink.notes.push(format!("radius mode: {:?}", cfg.radius_mode));
    let masses = domain.sample_ensemble(cfg.samples, cfg.seed, |_, s| {
        let tvs = extract_tvs(domain, s, params)?;
        let radii = tvs.radius_field(domain, radius_mode(cfg, domain, &tvs)?)?;
        minkowski_measure(domain, &radii, params, cfg.delta, |_| 1.0)
    })?;
    let e = Estimate::from_samples(&masses);
    let target = expected_measure_mass(params, cfg.delta, |_| 1.0, DEFAULT_TOL)?;
    let tol = (3.0 * e.se).max(0.1 * target);
    sink.push(
        "mass",
        Some(cfg.delta),
        e.mean,
        Some(e.se),
        Some(target),
        Some((e.mean - target).abs() <= tol),
    );
    let limit = expected_measure_mass(params, 0.0, |_| 1.0, DEFAULT_TOL)?;
    sink.push("limit-constant", Some(0.0), limit, None, None, None);
    Ok(())
}

/// `(𝔐(J_u^{σ_c}), 1)` and `(2/σ_c)(𝔐(F_δ), 1)` on the distance field of a
/// segment (σ_c = √2 for a set of dimension one), Richardson-extrapolated.
pub fn content_lemma_values() -> Result<([f64; 3], [f64; 3], f64, f64)> {
    let ((x0, y0), (x1, y1)) = CONTENT_SEGMENT;
    let field = RadiusField::Segment {
        from: point(x0, y0),
        to: point(x1, y1),
    };
    let mut window = [0.0; 3];
    let mut minkowski = [0.0; 3];
    for (i, &t) in CONTENT_STEPS.iter().enumerate() {
        window[i] = content_functional(&field, &Profile::Window { u: t, sigma: SQRT_2 }, |_| 1.0)?;
        minkowski[i] = 2.0 / SQRT_2
            * content_functional(
                &field,
                &Profile::Minkowski {
                    delta: t,
                    sigma_c: SQRT_2,
                },
                |_| 1.0,
            )?;
    }
    let (w, w_spread) = richardson(window);
    let (m, m_spread) = richardson(minkowski);
    let ratio = w / m;
    let spread = ratio * (w_spread / w + m_spread / m);
    Ok((window, minkowski, ratio, spread))
}

fn content_lemma(sink: &mut RowSink) -> Result<()> {
    let (window, minkowski, ratio, spread) = content_lemma_values()?;
    for (i, &t) in CONTENT_STEPS.iter().enumerate() {
        sink.push("window", Some(t), window[i], None, None, None);
        sink.push("minkowski", Some(t), minkowski[i], None, None, None);
    }
    sink.push(
        "ratio",
        None,
        ratio,
        Some(spread),
        Some(1.0),
        Some((ratio - 1.0).abs() <= 0.02),
    );
    Ok(())
}
