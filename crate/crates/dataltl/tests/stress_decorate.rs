use dataltl::decorate::{
    build_s_decoration, check_all_conditions, check_cover, conditions_imply_truth,
};
use dataltl::generate::{random_complete_word, random_restricted_uneq, FormulaShape, SplitMix64};
use dataltl::herd::HerdLabels;

#[test]
fn big_random_sweep() {
    let mut rng = SplitMix64::new(0xB16_5EED);
    let shape = FormulaShape {
        props: vec!["p".into(), "q".into()],
        attrs: vec!["a".into()],
        max_depth: 2,
        allow_class: false,
        allow_extended: true,
        max_shift: 0,
    };
    let mut checked = 0usize;
    for trial in 0..20000 {
        let len = 1 + (rng.below(15) as usize);
        let w = random_complete_word(&mut rng, &["p", "q"], &["a"], len, 6);
        let f = random_restricted_uneq(&mut rng, &shape, 2);
        let Ok(labels) = HerdLabels::from_truth(&w, &f) else {
            continue;
        };
        let dec = build_s_decoration(&labels);
        for (s, report) in check_all_conditions(&labels, &dec).into_iter().enumerate() {
            if let Some((name, v)) = report.first_failure() {
                panic!(
                    "trial {trial}: slice {s} condition {name} failed: {v}\nvalues {:?}\npsi {:?}\ntau {:?}\nrho_eq {:?}\nrho_neq {:?}\ndelta {}",
                    labels.values, labels.psi, labels.tau, labels.rho_eq, labels.rho_neq, labels.delta
                );
            }
        }
        if let Err(v) = check_cover(&labels, &dec) {
            panic!(
                "trial {trial}: cover failed: {v}\nvalues {:?}\npsi {:?}\ntau {:?}\ndelta {}",
                labels.values, labels.psi, labels.tau, labels.delta
            );
        }
        assert!(conditions_imply_truth(&labels, &dec));
        checked += 1;
    }
    assert!(checked >= 2000, "only {checked} label families checked");
}
