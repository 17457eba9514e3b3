//! Frozen values of the default radial setup, each also recomputed by an
//! independent route.

use freebound::config::RunConfig;
use freebound::pipeline::{radial_setup, RadialSetup};
use freebound::radial::shooting::{flat_hat, ShootOptions};
use freebound::radial::ProblemParams;

const LAMBDA_STAR: f64 = 1.956_073_334_767_201_5;
const DELTA: f64 = 4.543_224_521_193_85e-5;
const EDGE_CONSTANT: f64 = 5.675_371_368_319_805e-2;
const REFERENCE_RADIUS: f64 = 20.475_433_139_083_33;
const REFERENCE_CENTER: f64 = 9.351_190_488_768_275;

fn setup() -> RadialSetup {
    radial_setup(&RunConfig::default()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn frozen_constants() {
    let r = setup();
    assert!(rel(r.lambda_star, LAMBDA_STAR) <= 1e-12, "{}", r.lambda_star);
    assert!(rel(r.lambda0, 1.5 * LAMBDA_STAR) <= 1e-12);
    assert!(rel(r.barrier.delta, DELTA) <= 1e-12, "{}", r.barrier.delta);
    assert!(rel(r.barrier.edge_constant, EDGE_CONSTANT) <= 1e-11, "{}", r.barrier.edge_constant);
    assert!(rel(r.barrier.l1, 1.5 + EDGE_CONSTANT) <= 1e-14);
    assert!(rel(r.reference.radius, REFERENCE_RADIUS) <= 1e-9, "{}", r.reference.radius);
    assert!(rel(r.reference.center_value, REFERENCE_CENTER) <= 1e-12);
}

#[test]
fn delta_from_the_closed_form_root() {
    // F(s) = s^{α+1}/(α+1) - λ₀ s^{β+1}/(β+1) vanishes at s^{β-α} = (β+1)/((α+1)λ₀)
    let (a, b) = (0.1f64, 0.2f64);
    let s = ((b + 1.0) / ((a + 1.0) * 1.5 * LAMBDA_STAR)).powf(1.0 / (b - a));
    assert!(rel(0.9 * s, DELTA) <= 1e-12);
    // with N ≥ 2 the flat hat starts above the root to pay for the friction term
    assert!(((b + 1.0) / (a + 1.0)).powf(1.0 / (b - a)) < REFERENCE_CENTER);
}

#[test]
fn edge_constant_by_simpson() {
    // C = ∫₀^δ ds / √(2F(s)); s = δ t^10 makes t^{10(β-α)} = t and leaves a
    // t^{3.5} factor, smooth enough for Simpson
    let (a, b, lam) = (0.1f64, 0.2f64, 1.5 * LAMBDA_STAR);
    let f = |s: f64| s.powf(a + 1.0) / (a + 1.0) - lam * s.powf(b + 1.0) / (b + 1.0);
    let k = 10.0;
    let g = |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        let s = DELTA * t.powf(k);
        DELTA * k * t.powf(k - 1.0) / (2.0 * f(s)).sqrt()
    };
    let n = 20_000;
    let hstep = 1.0 / n as f64;
    let mut sum = g(0.0) + g(1.0);
    for i in 1..n {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * hstep);
    }
    let c = sum * hstep / 3.0;
    assert!(rel(c, EDGE_CONSTANT) <= 1e-10, "{c}");
}

#[test]
fn lambda_star_by_bisection_on_the_radius() {
    // no scaling law here: shoot directly until the support radius is 1
    let opts = ShootOptions::default();
    let radius = |lam: f64| flat_hat(&ProblemParams::new(4, 0.1, 0.2, lam).unwrap(), &opts).unwrap().radius;
    let (mut lo, mut hi) = (1.5, 2.5);
    assert!(radius(lo) > 1.0 && radius(hi) < 1.0);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if radius(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!(rel(0.5 * (lo + hi), LAMBDA_STAR) <= 1e-8, "{lo} {hi}");
}
