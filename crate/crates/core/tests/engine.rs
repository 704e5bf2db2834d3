use std::sync::OnceLock;

use primegame_core::decimal::{parse_decimal, to_scientific};
use primegame_core::engine::*;
use primegame_core::ntcore::{is_probable_prime, nth_prime, primorial};
use proptest::prelude::*;
use rug::{Integer, Rational};

const COUNTS_TO_60: [usize; 60] = [
    1, 1, 1, 1, 2, 2, 3, 3, 4, 6, 4, 5, 5, 9, 11, 10, 12, 8, 6, 11, 5, 4, 6, 3, 2, 1, 3, 1, 1, 3,
    2, 5, 6, 12, 21, 19, 15, 16, 24, 18, 18, 17, 14, 24, 24, 28, 30, 36, 49, 44, 52, 53, 55, 67,
    69, 72, 81, 79, 85, 83,
];

fn run_to_60() -> &'static MemorySink {
    static RUN: OnceLock<MemorySink> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = seed(VariantRule::floor());
        let mut sink = MemorySink::starting_at(&start);
        Engine::new(0).unwrap().run(start, 60, &mut sink).unwrap();
        sink
    })
}

#[test]
fn counts_to_60() {
    let counts: Vec<usize> = run_to_60().states.iter().map(|s| s.n()).collect();
    assert_eq!(counts, COUNTS_TO_60);
    for st in &run_to_60().states {
        st.validate(true).unwrap();
    }
}

#[test]
fn bottleneck_at_29() {
    let st = &run_to_60().states[28];
    assert_eq!((st.s, st.p, st.n()), (29, 109, 1));
    assert_eq!(
        st.a.to_string(),
        "350842542483891235293716663559065020274899073"
    );
    assert_eq!(
        export_checkpoint(st),
        "a=350842542483891235293716663559065020274899073; d=[0]\n"
    );
}

#[test]
fn offsets_and_parents_to_stage_11() {
    // Child minus parent·p, and parent index, stage by stage.
    let want: [(&[u64], &[usize]); 10] = [
        (&[1], &[0]),
        (&[2], &[0]),
        (&[4], &[0]),
        (&[4, 10], &[0, 0]),
        (&[2, 8], &[0, 1]),
        (&[8, 2, 14], &[0, 1, 1]),
        (&[10, 12, 16], &[0, 0, 0]),
        (&[16, 8, 16, 18], &[0, 1, 2, 2]),
        (&[16, 6, 14, 24, 26, 10], &[0, 1, 1, 1, 1, 2]),
        (&[14, 24, 6, 14], &[1, 1, 3, 3]),
    ];
    let run = run_to_60();
    assert_eq!(run.states[0].members(), [Integer::from(2)]);
    for (i, (offsets, parents)) in want.iter().enumerate() {
        let s = i + 1;
        let prev = run.states[s - 1].members();
        let cur = run.states[s].members();
        let p = run.states[s].p;
        assert_eq!(run.parents[s], *parents, "stage {}", s + 1);
        let got: Vec<u64> = cur
            .iter()
            .zip(&run.parents[s])
            .map(|(q, &j)| Integer::from(q - &prev[j] * p).to_u64().unwrap())
            .collect();
        assert_eq!(got, *offsets, "stage {}", s + 1);
    }
}

#[test]
fn telescoping_ancestors() {
    let run = run_to_60();
    for s in (2..=60).step_by(7) {
        let st = &run.states[s - 1];
        let ps = primorial(st.p);
        for (i, q) in st.members().iter().enumerate() {
            let mut idx = i;
            for r in (1..s).rev() {
                idx = run.parents[r][idx];
                let anc = &run.states[r - 1].members()[idx];
                let pr = primorial(nth_prime(r));
                let (t, _) = Integer::from(q * &pr).div_rem_floor(ps.clone());
                assert_eq!(&t, anc, "s = {s}, r = {r}");
            }
        }
    }
}

#[test]
fn y_bounds_contain_constant_and_respect_lemma() {
    let run = run_to_60();
    // The printed digits are a truncation, so they fix y only to within one unit in the last place.
    let y = parse_decimal("1.2541961015780119362776795549142134237798692").unwrap();
    let ulp = Rational::from((1, Integer::from(Integer::u_pow_u(10, 43))));
    let b = y_bounds(&run.states[59]);
    assert!(b.y_min() < Rational::from(&y + &ulp) && y < b.y_max());
    assert_eq!(
        b.min.render(80).0,
        "1.25419610157801193627767955491421342377986921804262219583272255460886469942875144"
    );
    for st in &run.states {
        let b = y_bounds(st);
        assert!(
            b.y_min() >= 1 && b.y_max() <= (3, 2),
            "stage {}",
            st.s
        );
    }
}

#[test]
fn sibling_gap_at_44() {
    let st = &run_to_60().states[43];
    assert_eq!(st.p, 193);
    let m = st.members();
    let pair = (0..m.len())
        .flat_map(|i| (i + 1..m.len()).map(move |j| (i, j)))
        .find(|&(i, j)| Integer::from(&m[j] - &m[i]) == 58)
        .expect("siblings 58 apart");
    let gap = &split_offsets(st, &[pair.0, pair.1])[0];
    assert_eq!(*gap, Rational::from((58, primorial(193))));
    assert_eq!(to_scientific(gap, 23), "2.9151240074564259119817e-76");
}

#[test]
fn sieve_matches_unsieved_prp() {
    let run = run_to_60();
    for s in 1..20 {
        let st = &run.states[s - 1];
        let p_next = nth_prime(s + 1);
        let sieve = StageSieve::new(p_next);
        for q in st.members() {
            let (lo, len, exclude) = VariantRule::floor().window(&q, p_next);
            let sieved = sieve.primes_in(&lo, len, exclude);
            let plain: Vec<Integer> = children(&q, p_next, VariantRule::floor(), false)
                .into_iter()
                .filter(is_probable_prime)
                .collect();
            assert_eq!(sieved, plain, "stage {}", s + 1);
        }
    }
}

#[test]
fn window_width_and_parity() {
    for st in &run_to_60().states[..30] {
        let p = nth_prime(st.s + 1);
        for q in st.members() {
            let all = children(&q, p, VariantRule::floor(), false);
            assert_eq!(all.len() as u64, p - 1);
            let mut keep = vec![true; all.len()];
            let (lo, _, _) = VariantRule::floor().window(&q, p);
            StageSieve::new(p).sieve(&lo, &mut keep);
            for (x, k) in all.iter().zip(keep) {
                if k {
                    assert!(x.is_odd() || *x == 2);
                }
            }
        }
    }
}

#[test]
fn round_variant_dies_at_24() {
    let start = seed(VariantRule::round());
    let mut sink = MemorySink::starting_at(&start);
    let out = Engine::new(0).unwrap().run(start, 40, &mut sink).unwrap();
    let counts: Vec<usize> = sink.states.iter().map(|s| s.n()).collect();
    assert_eq!(
        counts,
        [2, 2, 2, 2, 1, 1, 2, 3, 6, 4, 1, 3, 5, 4, 2, 2, 2, 4, 5, 5, 2, 2, 1]
    );
    assert_eq!(out.extinct_at(), Some(24));
    assert_eq!(
        out.last().a.to_string(),
        "206780313999369083332356327764879"
    );
}

#[test]
fn resume_equals_fresh_run() {
    let dir = tempfile::tempdir().unwrap();
    let cp = CheckpointDir::new(dir.path(), true).unwrap();
    let engine = Engine::new(1).unwrap();
    let mut sink = cp;
    engine
        .run(seed(VariantRule::floor()), 30, &mut sink)
        .unwrap();
    let cp = CheckpointDir::new(dir.path(), true).unwrap();
    assert_eq!(cp.latest_stage().unwrap(), Some(30));
    let s30 = cp.load_stage(30, VariantRule::floor(), true).unwrap();
    let resumed = engine.run(s30, 35, &mut NullSink).unwrap();
    assert_eq!(resumed.last(), &run_to_60().states[34]);
    assert_eq!(cp.load_parents(30).unwrap(), run_to_60().parents[29]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn thread_count_does_not_change_steps(s in 1usize..50, threads in 2usize..5) {
        let st = &run_to_60().states[s - 1];
        let one = Engine::new(1).unwrap().step(st);
        let many = Engine::new(threads).unwrap().step(st);
        match (one, many) {
            (StepOutcome::Advanced { state: a, parents: pa }, StepOutcome::Advanced { state: b, parents: pb }) => {
                prop_assert_eq!(a, b);
                prop_assert_eq!(pa, pb);
            }
            _ => prop_assert!(false, "floor game does not die before 60"),
        }
    }

    #[test]
    fn checkpoint_round_trip(s in 1usize..=60) {
        let st = &run_to_60().states[s - 1];
        let text = export_checkpoint(st);
        let back = import_checkpoint(&text, VariantRule::floor(), Some(s), true).unwrap();
        prop_assert_eq!(&back, st);
        let inferred = import_checkpoint(&text, VariantRule::floor(), None, false).unwrap();
        prop_assert_eq!(inferred.s, s);
    }

    #[test]
    fn parents_csv_round_trip(v in prop::collection::vec(0usize..1000, 0..50)) {
        let mut v = v;
        v.sort_unstable();
        prop_assert_eq!(read_parents_csv(&write_parents_csv(&v)).unwrap(), v);
    }
}
