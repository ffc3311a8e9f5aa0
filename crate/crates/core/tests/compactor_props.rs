use proptest::prelude::*;
use relquant_core::compactor::{count_important, ElasticCompactor};
use relquant_core::frac::BinaryFraction;
use relquant_core::Error;

#[derive(Clone, Debug)]
enum Op {
    Insert(Vec<u16>),
    Resize(usize),
    Reset,
}

fn op(k: usize) -> impl Strategy<Value = Op> {
    prop_oneof![
        6 => prop::collection::vec(any::<u16>(), 0..3 * k).prop_map(Op::Insert),
        3 => (1usize..12).prop_map(move |b| Op::Resize(b * k)),
        1 => Just(Op::Reset),
    ]
}

fn case() -> impl Strategy<Value = (usize, usize, u64, Vec<Op>)> {
    (prop::sample::select(vec![2usize, 3, 4, 8]), 1usize..10, any::<u64>())
        .prop_flat_map(|(k, b, seed)| (Just(k), Just(b * k), Just(seed), prop::collection::vec(op(k), 1..60)))
}

/// `shadow + 2^-l >= 1`.
fn exhausted(shadow: &BinaryFraction, l: usize) -> bool {
    let mut s = shadow.clone();
    s.add_pow2(l);
    s.int_part() >= 1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn progress_and_important_compactions((k, s, seed, ops) in case()) {
        let mut c = ElasticCompactor::new(k, s, seed).unwrap().instrumented();
        let mut inserted: Vec<u16> = Vec::new();
        for op in ops {
            match op {
                Op::Insert(mut xs) => {
                    xs.truncate(c.capacity());
                    let batch = xs.clone();
                    match c.insert_batch(xs) {
                        Ok(_) => inserted.extend(batch),
                        Err(Error::CapacityExhausted) => break,
                        Err(e) => panic!("{e}"),
                    }
                }
                Op::Resize(t) => {
                    let shadow = c.instrumentation().unwrap().shadow.clone();
                    match c.resize(t) {
                        Ok(_) => {}
                        Err(Error::CapacityExhausted) => {
                            prop_assert!(exhausted(&shadow, t.div_ceil(k)));
                            break;
                        }
                        Err(e) => panic!("{e}"),
                    }
                }
                Op::Reset => c.reset(),
            }
            let instr = c.instrumentation().unwrap();
            prop_assert!(c.z() <= &instr.shadow);
            prop_assert_eq!(c.z().int_part(), 0);
            prop_assert!(!instr.unsafe_release);
            prop_assert!(c.len() <= c.capacity());
            prop_assert!(c.items().windows(2).all(|w| w[0] <= w[1]));
        }
        let instr = c.instrumentation().unwrap();
        for x in [0u16, 100, 1000, 20000, u16::MAX] {
            let n = count_important(&instr.compactions, &x) as u128;
            let rank = inserted.iter().filter(|y| **y <= x).count() as u128;
            let t = c.important_reset_count(&x).unwrap() as u128;
            let bound = rank + t * instr.max_stored as u128;
            prop_assert!(n * k as u128 <= bound, "x={} n={} k={} bound={}", x, n, k, bound);
        }
    }

    #[test]
    fn compaction_halves_suffix(len in 0usize..40, start in 1usize..6, seed in any::<u64>()) {
        let k = 4;
        let mut c = ElasticCompactor::new(k, 40, seed).unwrap();
        let keys: Vec<u32> = (0..len as u32).collect();
        c.load(keys.clone(), BinaryFraction::zero()).unwrap();
        let out = c.compact(start).unwrap();
        let cut = ((start - 1) * k).min(len);
        prop_assert_eq!(c.items(), &keys[..cut]);
        let suffix = len - cut;
        prop_assert!(out.len() == suffix / 2 || out.len() == suffix.div_ceil(2));
        prop_assert!(out.iter().all(|y| (*y as usize) >= cut));
    }
}
