use rigidity_core::joining::*;
use rigidity_core::{FlowParams, Frequency, RoofFunction, TrigPoly};

fn flow(jump: f64) -> FlowParams {
    FlowParams::new(Frequency::golden(), RoofFunction::new(jump, TrigPoly::sin(1, 0.1).plus_constant(1.0)).unwrap()).unwrap()
}

#[test]
fn constant_partner_reproduces_marginal() {
    let (a, b) = (flow(1.0), flow(2.0));
    let ob = Observable::cos(1).plus(&Observable::height().scaled(0.5));
    let r = product_birkhoff_correlation(&a, &b, &Observable::constant(1.0), &ob, 1e5, 2, 4).unwrap();
    for row in &r.rows {
        assert_eq!(row.joint, row.marginal_b);
        assert!((row.marginal_b - r.mean_b).abs() < 1e-3, "{} vs {}", row.marginal_b, r.mean_b);
    }
}

#[test]
fn diagonal_statistic_matches_quadrature_variance() {
    let a = FlowParams::new(Frequency::golden(), RoofFunction::linear(1.0, 1.0).unwrap()).unwrap();
    let obs = Observable::cos(1);
    let r = self_joining_control(&a, &obs, 1e5, 2, 8).unwrap();
    let v = variance(&obs, &a);
    assert!((r.control.unwrap() - v).abs() <= 0.1 * v);
    assert_eq!(r.banner(), EVIDENCE_BANNER);
}

#[test]
fn parallel_and_serial_starts_agree() {
    let (a, b) = (flow(1.0), flow(2.0));
    let (oa, ob) = (Observable::cos(1).centered(&a), Observable::sin(1).centered(&b));
    let all = product_birkhoff_correlation(&a, &b, &oa, &ob, 300.0, 6, 40).unwrap();
    for row in &all.rows {
        let one = product_birkhoff_correlation(&a, &b, &oa, &ob, 300.0, 1, row.seed).unwrap();
        assert_eq!(one.rows[0], *row);
    }
}
