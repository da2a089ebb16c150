use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use classtab::arith::{factor, isqrt};
use classtab::bigmul::{multiply, BundleParams, PrimeBasis, StagingConfig};
use classtab::classnum::{sieve_fundamental, ClassRecord, Provenance};
use classtab::group::resolve_with_seed;
use classtab::qform::{count_classes, group_table, reduced_forms, QuadForm};
use classtab::series::{convolve_naive, generate};
use classtab::stats;
use classtab::trace::solution_count;
use classtab::{CoeffTable, SeriesKind};

fn discriminants(max_abs: u64) -> impl Iterator<Item = i64> {
    (3..=max_abs)
        .filter(|d| d % 4 == 0 || d % 4 == 3)
        .map(|d| -(d as i64))
}

/// `(a, b, c) -> (c, -b, a)` and `(a, b, c) -> (a, b + 2a, a + b + c)`.
fn swap(f: QuadForm) -> QuadForm {
    QuadForm { a: f.c, b: -f.b, c: f.a }
}

fn shift(f: QuadForm, k: i64) -> QuadForm {
    QuadForm {
        a: f.a,
        b: f.b + 2 * k * f.a,
        c: f.a * k * k + f.b * k + f.c,
    }
}

#[test]
fn composition_commutes_on_all_small_discriminants() {
    for d in discriminants(5000) {
        let forms = reduced_forms(d).unwrap();
        for f in &forms {
            for g in &forms {
                let fg = f.compose(g).unwrap();
                assert_eq!(fg, g.compose(f).unwrap(), "Δ = {d}");
                assert!(fg.is_reduced() && fg.discriminant() == d);
            }
        }
    }
}

#[test]
fn composition_associates_on_small_discriminants() {
    for d in discriminants(600) {
        let forms = reduced_forms(d).unwrap();
        for f in &forms {
            for g in &forms {
                let fg = f.compose(g).unwrap();
                for k in &forms {
                    assert_eq!(
                        fg.compose(k).unwrap(),
                        f.compose(&g.compose(k).unwrap()).unwrap(),
                        "Δ = {d}"
                    );
                }
            }
        }
    }
}

#[test]
fn form_counts_match_group_orders() {
    for d in discriminants(5000) {
        let h = count_classes(d).unwrap();
        assert_eq!(reduced_forms(d).unwrap().len() as u64, h);
        assert_eq!(group_table(d).unwrap().order(), h, "Δ = {d}");
    }
}

#[test]
fn two_rank_follows_genus_theory() {
    let fund = sieve_fundamental(20_000);
    for abs in fund.iter() {
        let g = group_table(-(abs as i64)).unwrap();
        let primes = factor(abs).len();
        assert_eq!(g.p_rank(2), primes - 1, "|Δ| = {abs}");
        assert_eq!(g.order() % 2 == 0, primes > 1);
    }
}

#[test]
fn solution_counts_exhaustive() {
    // counts[d] = #{(t, n) : t >= 1, n <= X, t^2 - 8n = -d}, grown one X at a time
    let mut counts = vec![0u64; 1001];
    for x in 1..=1000u64 {
        for t in 1..=isqrt(8 * x) {
            let d = 8 * x - t * t;
            if d <= 1000 {
                counts[d as usize] += 1;
            }
        }
        for (d, &c) in counts.iter().enumerate() {
            assert_eq!(solution_count(-(d as i64), x), c, "Δ = -{d}, X = {x}");
        }
    }
}

#[test]
fn squared_series_match_self_convolution() {
    let n = 1 << 16;
    for kind in [SeriesKind::Theta3Sq, SeriesKind::NablaSq, SeriesKind::NablaQ2Sq] {
        let base = generate(kind.base().unwrap(), n, 1 << 12).unwrap();
        let sq = generate(kind, n, 1 << 12).unwrap().resized(n).unwrap();
        let naive = convolve_naive(&base.resized(n).unwrap(), &base.resized(n).unwrap(), n).unwrap();
        assert_eq!(sq.to_vec().unwrap(), naive.to_vec().unwrap(), "{kind:?}");
    }
}

#[test]
fn resolve_ignores_the_seed() {
    let fund: Vec<u64> = sieve_fundamental(1_000_000).iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for &abs in fund.choose_multiple(&mut rng, 1000) {
        let h = count_classes(-(abs as i64)).unwrap();
        let rec = ClassRecord::new(abs, h, Provenance::Enumeration);
        let runs: Vec<Vec<u64>> = [0u64, 1, 0xdead_beef]
            .iter()
            .map(|&s| resolve_with_seed(&rec, s).unwrap().divisors)
            .collect();
        assert_eq!(runs[0], runs[1], "|Δ| = {abs}");
        assert_eq!(runs[0], runs[2], "|Δ| = {abs}");
        assert_eq!(runs[0].iter().product::<u64>(), h);
        assert_eq!(runs[0], group_table(-(abs as i64)).unwrap().divisors(), "|Δ| = {abs}");
    }
}

#[test]
fn cohen_lenstra_checkpoints_are_monotone() {
    let recs: Vec<ClassRecord> = sieve_fundamental(20_000)
        .iter()
        .map(|abs| {
            let g = group_table(-(abs as i64)).unwrap();
            ClassRecord {
                abs_disc: abs,
                h: g.order(),
                divisors: g.into_divisors(),
                provenance: Provenance::Enumeration,
            }
        })
        .collect();
    let checkpoints: Vec<u64> = (1..=20).map(|i| i * 1000).collect();
    let rows = stats::cohen_lenstra(&recs, &checkpoints).unwrap();
    for w in rows.windows(2) {
        let (a, b) = (&w[0].counts, &w[1].counts);
        assert!(a.total <= b.total && a.cyclic_odd <= b.cyclic_odd);
        for i in 0..a.divisible.len() {
            assert!(a.divisible[i] <= b.divisible[i]);
            for r in 0..a.rank[i].len() {
                assert!(a.rank[i][r] <= b.rank[i][r]);
            }
        }
    }
    for row in &rows {
        assert_eq!(row.counts, stats::cl_counts_direct(&recs, row.x).unwrap());
    }
}

fn small_disc() -> impl Strategy<Value = i64> {
    (3u64..200_000)
        .prop_filter("discriminant", |d| d % 4 == 0 || d % 4 == 3)
        .prop_map(|d| -(d as i64))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn reduction_is_canonical(d in small_disc(), pick in any::<prop::sample::Index>(), moves in prop::collection::vec(-3i64..=3, 0..8)) {
        let forms = reduced_forms(d).unwrap();
        let f = forms[pick.index(forms.len())];
        prop_assert_eq!(f.reduce(), f);
        let mut g = f;
        for k in moves {
            g = if k == 0 { swap(g) } else { shift(g, k) };
        }
        prop_assert_eq!(g.discriminant(), d);
        let r = g.reduce();
        prop_assert_eq!(r, f);
        prop_assert_eq!(r.reduce(), r);
    }

    #[test]
    fn composition_associates(d in small_disc(), i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>(), k in any::<prop::sample::Index>()) {
        let forms = reduced_forms(d).unwrap();
        let (f, g, h) = (forms[i.index(forms.len())], forms[j.index(forms.len())], forms[k.index(forms.len())]);
        prop_assert_eq!(f.compose(&g).unwrap().compose(&h).unwrap(), f.compose(&g.compose(&h).unwrap()).unwrap());
        prop_assert!(f.compose(&f.inverse()).unwrap().is_principal());
    }

    #[test]
    fn series_ignore_partition_size(kind in prop::sample::select(SeriesKind::ALL.to_vec()), n in 1usize..5000, s1 in 1usize..700, s2 in 1usize..700) {
        let a = generate(kind, n, s1).unwrap().resized(n).unwrap();
        let b = generate(kind, n, s2).unwrap().resized(n).unwrap();
        prop_assert_eq!(a.to_vec().unwrap(), b.to_vec().unwrap());
    }

    #[test]
    fn theta3_prefix_sum(n in 1usize..100_000) {
        let t = generate(SeriesKind::Theta3, n, 4096).unwrap().resized(n).unwrap();
        let sum: u64 = t.to_vec().unwrap().iter().sum();
        prop_assert_eq!(sum, 1 + 2 * isqrt(n as u64 - 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn multiply_matches_naive(seed in any::<u64>(), lf in 1usize..=1 << 13, lg in 1usize..=1 << 13, bits in 1u32..26, b_log in 0u32..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let max = (1u64 << bits) - 1;
        let f = CoeffTable::from_values((0..lf).map(|_| rand::Rng::gen_range(&mut rng, 0..=max)).collect());
        let g = CoeffTable::from_values((0..lg).map(|_| rand::Rng::gen_range(&mut rng, 0..=max)).collect());
        let out = lf.max(lg);
        let params = BundleParams::for_inputs(&f, &g, 1 << b_log).unwrap();
        let basis = PrimeBasis::with_capacity(params.product_bits()).unwrap();
        let fast = multiply(&f, &g, params, &basis, &StagingConfig::in_memory()).unwrap();
        let naive = convolve_naive(&f, &g, out).unwrap();
        prop_assert_eq!(fast.to_vec().unwrap(), naive.to_vec().unwrap());
    }
}
