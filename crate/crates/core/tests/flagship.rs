use cycfit::classgroup::narrow_class_group;
use cycfit::cyc_ideals::{sample_continuing, sample_with, RunStatus, SampleConfig};
use cycfit::field_ctx::AbelianFieldCtx;
use cycfit::fitting::fitting_of_p_group;

// Q(sqrt 257) has class group cyclic of order 3; at N = 3 the sampled
// ideals should reach Fitt_0 = (3) and Fitt_1 = Fitt_2 = (1).
#[test]
fn sampled_ideals_reach_the_fitting_ideals_for_257() {
    let group = narrow_class_group(257, 1 << 20).unwrap();
    assert_eq!(group.p_part(3), vec![3]);
    let ctx = AbelianFieldCtx::build(3, 257, 0, 3).unwrap();
    let mut prior = None;
    for i in 0..3 {
        let target = fitting_of_p_group(&[1], i, 3, 3).unwrap().chain_exponent().unwrap();
        let mut cfg = SampleConfig::new(i, 500, 1);
        cfg.oracle = Some(vec![1]);
        let run = sample_continuing(&ctx, &cfg, prior.as_ref()).unwrap();
        assert_eq!(run.status, RunStatus::Complete, "i = {i}");
        assert_eq!(run.ideal_exponent, target, "i = {i}");
        prior = Some(run);
    }
    assert_eq!(prior.unwrap().ideal_exponent, 0);
}

#[test]
fn blind_sampling_is_reproducible() {
    let ctx = AbelianFieldCtx::build(3, 257, 0, 2).unwrap();
    let cfg = SampleConfig::new(0, 40, 7);
    let a = sample_with(&ctx, &cfg).unwrap();
    let b = sample_with(&ctx, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.evaluations <= 40);
}
