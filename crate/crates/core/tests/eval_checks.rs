use relquant_core::eval::adversary::{build_adversary_stream, KeepSmallest};
use relquant_core::eval::generators::{band_of, gen_stream, GenKind, TreeParams};
use relquant_core::eval::oracle::RankOracle;

#[test]
fn tree_instance_bands_occupy_disjoint_rank_ranges() {
    let n = 100_000;
    let stream = gen_stream(GenKind::TreeInstance, n, 21, TreeParams::default()).unwrap();
    assert_eq!(stream.len(), n);
    let oracle = RankOracle::new(&stream);
    let bands = stream.iter().map(|k| band_of(*k)).max().unwrap() as usize + 1;
    let mut lo = vec![u64::MAX; bands];
    let mut hi = vec![0u64; bands];
    let mut count = vec![0u64; bands];
    for k in &stream {
        let b = band_of(*k) as usize;
        let r = oracle.exact_rank(k);
        lo[b] = lo[b].min(r);
        hi[b] = hi[b].max(r);
        count[b] += 1;
    }
    let mut start = 0;
    for b in 0..bands {
        assert_eq!(lo[b], start, "band {b}");
        assert!(hi[b] < start + count[b]);
        start += count[b];
    }
    // Deeper bands are larger.
    assert!(count.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn tree_instance_custom_shape() {
    let p = TreeParams {
        batch: Some(3),
        pauses: Some(2),
    };
    let v = gen_stream(GenKind::TreeInstance, 1000, 4, p).unwrap();
    assert_eq!(v.len(), 1000);
    assert!(gen_stream(GenKind::TreeInstance, 10, 4, TreeParams { batch: Some(0), pauses: None }).is_err());
}

#[test]
fn adversary_against_keep_two_smallest() {
    let k = 6;
    let t = build_adversary_stream(k, &|_| KeepSmallest::new(2), 200, 3).unwrap();
    assert_eq!(t.stream.len(), 63);
    assert!(t.objective >= 0.1 * f64::from(k) * 0.8, "objective {}", t.objective);
    assert!(t.query_rank <= u64::from(k));
    let again = build_adversary_stream(k, &|_| KeepSmallest::new(2), 200, 3).unwrap();
    assert_eq!(t, again);
    for p in &t.probes {
        assert_eq!(p.ambiguous, (0.4..=0.6).contains(&p.probability));
        assert_eq!(p.remembered, p.probability >= 0.5);
    }
}
