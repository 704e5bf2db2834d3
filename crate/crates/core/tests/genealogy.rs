use std::sync::OnceLock;

use primegame_core::engine::{seed, Engine, MemorySink, VariantRule};
use primegame_core::genealogy::GenealogyForest;

fn forest() -> &'static GenealogyForest {
    static F: OnceLock<GenealogyForest> = OnceLock::new();
    F.get_or_init(|| {
        let start = seed(VariantRule::floor());
        let mut sink = MemorySink::starting_at(&start);
        Engine::new(0).unwrap().run(start, 72, &mut sink).unwrap();
        GenealogyForest::from_sink(&sink).unwrap()
    })
}

fn check(
    found: Option<primegame_core::genealogy::Instance>,
    stage: usize,
    ordinal: usize,
    mult: &[u64],
    offsets: &[u64],
) {
    let f = found.expect("instance within horizon");
    assert_eq!((f.stage, f.index + 1), (stage, ordinal), "{}", f.notation());
    assert_eq!(f.multipliers, mult);
    assert_eq!(f.offsets_u64(), offsets);
}

#[test]
fn first_tuplets() {
    let f = forest();
    check(f.find_tuplets(2).unwrap(), 4, 1, &[11], &[4, 10]);
    check(f.find_tuplets(3).unwrap(), 7, 1, &[19], &[10, 12, 16]);
    check(f.find_tuplets(4).unwrap(), 9, 2, &[29], &[6, 14, 24, 26]);
    check(
        f.find_tuplets(5).unwrap(),
        46,
        18,
        &[211],
        &[42, 110, 140, 144, 194],
    );
    check(
        f.find_tuplets(6).unwrap(),
        69,
        69,
        &[349],
        &[18, 40, 234, 262, 292, 298],
    );
    assert!(f.find_tuplets(7).unwrap().is_none());
}

#[test]
fn tuplet_stage_grows_with_size() {
    let f = forest();
    let stages: Vec<usize> = (2..=6)
        .map(|k| f.find_tuplets(k).unwrap().unwrap().stage)
        .collect();
    assert!(stages.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn order_two_descendants() {
    let f = forest();
    check(
        f.descendants_of_order(2, 3).unwrap(),
        6,
        1,
        &[17, 19],
        &[162, 164, 168],
    );
    check(
        f.descendants_of_order(2, 4).unwrap(),
        7,
        1,
        &[19, 23],
        &[246, 284, 384, 386],
    );
    check(
        f.descendants_of_order(2, 5).unwrap(),
        21,
        5,
        &[79, 83],
        &[3504, 3520, 5190, 5200, 5224],
    );
    // Multipliers 43·47 follow p_13 = 41, so the member sits at stage 13.
    check(
        f.descendants_of_order(2, 6).unwrap(),
        13,
        4,
        &[43, 47],
        &[102, 108, 582, 598, 1428, 1450],
    );
    for (c, stage, ordinal, first, last) in [
        (7, 34, 7, 754, 12484),
        (10, 47, 16, 13650, 38340),
        (12, 55, 27, 45742, 68590),
    ] {
        let i = f.descendants_of_order(2, c).unwrap().unwrap();
        assert_eq!((i.stage, i.index + 1, i.offsets.len()), (stage, ordinal, c));
        let o = i.offsets_u64();
        assert_eq!((o[0], o[c - 1]), (first, last));
    }
}

#[test]
fn order_three_quadruplet() {
    check(
        forest().descendants_of_order(3, 4).unwrap(),
        6,
        1,
        &[17, 19, 23],
        &[3742, 3780, 3880, 3882],
    );
}

#[test]
fn notation_matches_listing_style() {
    let i = forest().find_tuplets(2).unwrap().unwrap();
    assert_eq!(i.notation(), "(1st prime of stage 4)*11+ {4, 10}");
}

#[test]
fn survivors_are_bounded_by_population() {
    let f = forest();
    for s in 1..=72 {
        assert!(f.survivors(s, 72).unwrap() <= f.n(s));
    }
    assert_eq!(f.survivors(72, 72).unwrap(), f.n(72));
    let csv = f.survivors_csv(72).unwrap();
    assert!(csv.starts_with("s,p,n,n_star\n1,2,1,1\n"));
    assert_eq!(csv.lines().count(), 73);
}
