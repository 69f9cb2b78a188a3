//! Property tests over generated inputs.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_verbalization, random_vocabulary};
use verbalign::dataset::{bucket, inject_noise, split, BucketScheme, KpiBucketLabel, MediaRecord, PromptFields, Schema};
use verbalign::ddpo::{advantages, rollout, DenoisingMdp, GaussianPolicy, MeanFunction, PolicyKind, State, ContextSource};
use verbalign::metrics::{
    colors_coverage_rmse, colors_iou, colors_rgb_distance, colors_similarity, full_report,
    objects_iou, RgbTable, WordVectors,
};
use verbalign::reward::{
    compose_scoring_text, mock_tokenize, reward_batch, reward_of, score, top_k, MockBackend,
    RetryPolicy, RewardOptions, RewardRequest, Scope, ScoreTransform, TokenScores,
};
use verbalign::verbalization::{
    parse_verbalization, serialize_verbalization, Resolution, ValidationMode, Verbalization,
};

fn verbalization(seed: u64) -> Verbalization {
    random_verbalization(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn provider(seed: u64) -> WordVectors {
    let mut p = WordVectors::new(3);
    for (w, v) in random_vocabulary(&mut ChaCha8Rng::seed_from_u64(seed)) {
        p.insert(w, v).unwrap();
    }
    p
}

fn records(likes: &[u64], groups: &[Option<u8>]) -> Vec<MediaRecord> {
    likes
        .iter()
        .zip(groups)
        .enumerate()
        .map(|(i, (&v, g))| {
            let mut r = common::listing4();
            r.id = format!("r{i:03}");
            r.account = format!("acc{}", i % 3);
            r.kpis = [("likes".to_string(), v)].into();
            r.media_group = g.map(|g| format!("acc{}-g{g}", i % 3));
            r
        })
        .collect()
}

fn request(v: Verbalization) -> RewardRequest {
    RewardRequest {
        prompt: PromptFields::of(&common::listing2()),
        target_kpis: common::kpis(4, 15, 885),
        verbalization: v,
        schema: Schema::Stock,
    }
}

proptest! {
    #[test]
    fn serialization_round_trips(seed in any::<u64>()) {
        let v = verbalization(seed);
        let text = serialize_verbalization(&v);
        let parsed = parse_verbalization(&text, ValidationMode::Strict).unwrap();
        prop_assert_eq!(&parsed.verbalization, &v);
        prop_assert_eq!(serialize_verbalization(&parsed.verbalization), text);
    }

    #[test]
    fn lenient_accepts_what_strict_accepts(seed in any::<u64>()) {
        let text = serialize_verbalization(&verbalization(seed));
        let lenient = parse_verbalization(&text, ValidationMode::Lenient).unwrap();
        prop_assert!(lenient.repairs.is_empty());
    }

    #[test]
    fn set_metrics_are_symmetric_and_bounded(a in any::<u64>(), b in any::<u64>()) {
        let (x, y) = (verbalization(a), verbalization(b));
        prop_assert_eq!(colors_iou(&x, &y), colors_iou(&y, &x));
        prop_assert_eq!(objects_iou(&x, &y), objects_iou(&y, &x));
        for v in [colors_iou(&x, &y), objects_iou(&x, &y)].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn errors_are_non_negative_and_vanish_on_agreement(a in any::<u64>(), b in any::<u64>(), p in any::<u64>()) {
        let (x, y) = (verbalization(a), verbalization(b));
        let words = provider(p);
        let table = RgbTable::default();
        let res = Resolution::new(1000, 800);
        let r = full_report(&x, &y, res, &words, &table).unwrap().values();
        for k in [2, 3, 4, 7, 8] {
            if let Some(v) = r[k] {
                prop_assert!(v >= 0.0);
            }
        }
        let same = full_report(&x, &x, res, &words, &table).unwrap();
        for v in [same.colors_coverage_rmse, same.tones_coverage_rmse] {
            prop_assert!(v.is_none_or(|v| v == 0.0));
        }
    }

    #[test]
    fn thresholds_gate_monotonically(a in any::<u64>(), b in any::<u64>(), p in any::<u64>(), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let (x, y) = (verbalization(a), verbalization(b));
        let words = provider(p);
        let table = RgbTable::default();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(colors_similarity(&x, &y, &words, hi).contributing <= colors_similarity(&x, &y, &words, lo).contributing);
        prop_assert!(colors_rgb_distance(&x, &y, &table, lo).contributing <= colors_rgb_distance(&x, &y, &table, hi).contributing);
    }

    #[test]
    fn coverage_error_grows_with_perturbation(seed in any::<u64>(), d1 in 0.0f64..0.5, d2 in 0.0f64..0.5) {
        let gt = verbalization(seed);
        prop_assume!(!gt.colors.is_empty());
        let (small, large) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let shift = |d: f64| {
            let mut p = gt.clone();
            let c = &mut p.colors[0];
            c.coverage = if c.coverage >= 0.5 { c.coverage - d } else { c.coverage + d };
            p
        };
        let e1 = colors_coverage_rmse(&gt, &shift(small)).unwrap();
        let e2 = colors_coverage_rmse(&gt, &shift(large)).unwrap();
        prop_assert!(e2 >= e1);
    }

    #[test]
    fn bucketing_ignores_record_order(
        data in proptest::collection::vec((0u64..30, proptest::option::of(0u8..4)), 1..80),
        perm_seed in any::<u64>(),
    ) {
        let (likes, groups): (Vec<u64>, Vec<Option<u8>>) = data.into_iter().unzip();
        let recs = records(&likes, &groups);
        let mut shuffled = recs.clone();
        rand::seq::SliceRandom::shuffle(&mut shuffled[..], &mut ChaCha8Rng::seed_from_u64(perm_seed));
        for scheme in [BucketScheme::twitter(), BucketScheme::StockThreeWay] {
            let a = bucket(&recs, scheme, "likes").unwrap();
            let b = bucket(&shuffled, scheme, "likes").unwrap();
            prop_assert_eq!(&a.labels, &b.labels);
            prop_assert_eq!(&a.unlabeled, &b.unlabeled);
        }
    }

    #[test]
    fn raising_a_count_never_demotes_high_to_low(
        likes in proptest::collection::vec(0u64..50, 2..60),
        pick in any::<prop::sample::Index>(),
        raise in 1u64..100,
    ) {
        let groups = vec![None; likes.len()];
        let i = pick.index(likes.len());
        let before = bucket(&records(&likes, &groups), BucketScheme::twitter(), "likes").unwrap();
        let mut raised = likes.clone();
        raised[i] += raise;
        let after = bucket(&records(&raised, &groups), BucketScheme::twitter(), "likes").unwrap();
        let id = format!("r{i:03}");
        if before.label(&id) == Some(KpiBucketLabel::High) {
            prop_assert_ne!(after.label(&id), Some(KpiBucketLabel::Low));
        }
    }

    #[test]
    fn media_groups_share_labels(data in proptest::collection::vec((0u64..30, proptest::option::of(0u8..4)), 1..80)) {
        let (likes, groups): (Vec<u64>, Vec<Option<u8>>) = data.into_iter().unzip();
        let recs = records(&likes, &groups);
        let a = bucket(&recs, BucketScheme::twitter(), "likes").unwrap();
        for x in &recs {
            for y in &recs {
                if x.media_group.is_some() && x.media_group == y.media_group {
                    prop_assert_eq!(a.label(&x.id), a.label(&y.id));
                }
            }
        }
    }

    #[test]
    fn split_is_disjoint_and_sized(likes in proptest::collection::vec(0u64..1000, 30..120), k in 1usize..4, seed in any::<u64>()) {
        let groups = vec![None; likes.len()];
        let a = bucket(&records(&likes, &groups), BucketScheme::StockThreeWay, "likes").unwrap();
        let s = split(&a, k, seed).unwrap();
        prop_assert_eq!(s.test.len(), 3 * k);
        prop_assert!(s.test.iter().all(|id| !s.train.contains(id)));
        prop_assert_eq!(s.test.len() + s.train.len(), likes.len());
        prop_assert_eq!(split(&a, k, seed).unwrap(), s);
    }

    #[test]
    fn noise_is_reproducible_and_banded(v in 0u64..1_000_000, seed in any::<u64>(), f in 0.0f64..0.9) {
        let kpis = [("likes".to_string(), v)].into();
        let a = inject_noise(&kpis, f, seed).unwrap();
        prop_assert_eq!(&a, &inject_noise(&kpis, f, seed).unwrap());
        let x = a["likes"] as f64;
        prop_assert!(x >= (v as f64 * (1.0 - f)).round() - 1.0 && x <= (v as f64 * (1.0 + f)).round() + 1.0);
    }

    #[test]
    fn sum_prob_is_strictly_monotone(
        probs in proptest::collection::vec(0.01f64..0.99, 2..30),
        pick in any::<prop::sample::Index>(),
        bump in 0.01f64..1.0,
    ) {
        let n = probs.len();
        let k = pick.index(n);
        let logprobs: Vec<f64> = probs.iter().map(|p| p.ln()).collect();
        let mut raised = logprobs.clone();
        raised[k] = (probs[k] + bump * (1.0 - probs[k])).ln();
        let s = |l: Vec<f64>| {
            let t = TokenScores::new(vec!["t".into(); n], l, 0).unwrap();
            (
                score(&t, ScoreTransform::SumProb, Scope::FullText).unwrap(),
                score(&t, ScoreTransform::SumLogprob, Scope::FullText).unwrap(),
            )
        };
        let (p0, l0) = s(logprobs);
        let (p1, l1) = s(raised);
        prop_assert!(p1 > p0 && l1 > l0);
        prop_assert!((0.0..=n as f64).contains(&p0) && l0 <= 0.0);
    }

    #[test]
    fn top_k_ignores_candidate_order(
        rewards in proptest::collection::vec(-5i32..5, 1..40),
        perm_seed in any::<u64>(),
        k_pick in any::<prop::sample::Index>(),
    ) {
        let rewards: Vec<f64> = rewards.into_iter().map(f64::from).collect();
        let k = k_pick.index(rewards.len()) + 1;
        let mut order: Vec<usize> = (0..rewards.len()).collect();
        rand::seq::SliceRandom::shuffle(&mut order[..], &mut ChaCha8Rng::seed_from_u64(perm_seed));
        let permuted: Vec<f64> = order.iter().map(|&i| rewards[i]).collect();
        let a: Vec<f64> = top_k(&rewards, k).unwrap().iter().map(|r| r.reward).collect();
        let b: Vec<f64> = top_k(&permuted, k).unwrap().iter().map(|r| r.reward).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn scoring_text_is_deterministic_and_split_at_the_completion(seed in any::<u64>()) {
        let req = request(verbalization(seed));
        let a = compose_scoring_text(&req).unwrap();
        prop_assert_eq!(&a, &compose_scoring_text(&req).unwrap());
        prop_assert_eq!(a.completion_text(), serialize_verbalization(&req.verbalization));
        prop_assert!(a.prefix().ends_with("Output: "));
    }

    #[test]
    fn mock_token_offsets_point_into_the_text(seed in any::<u64>()) {
        let text = compose_scoring_text(&request(verbalization(seed))).unwrap().text;
        let chars: Vec<char> = text.chars().collect();
        for (tok, start) in mock_tokenize(&text) {
            let end = start + tok.chars().count();
            prop_assert_eq!(chars[start..end].iter().collect::<String>(), tok);
        }
    }

    #[test]
    fn advantages_are_standardized(rewards in proptest::collection::vec(-100.0f64..100.0, 2..64)) {
        let (a, fallback) = advantages(&rewards, true);
        let n = a.len() as f64;
        let mean = a.iter().sum::<f64>() / n;
        prop_assert!(mean.abs() <= 1e-9);
        if !fallback {
            let std = (a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!((std - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn transitions_replace_the_representation(c in proptest::collection::vec(-3.0f64..3.0, 2), x in proptest::collection::vec(-3.0f64..3.0, 2), a in proptest::collection::vec(-3.0f64..3.0, 2), t in 1usize..6) {
        let mdp = DenoisingMdp::new(5, 2, ContextSource::Normal { dim: 2, scale: 1.0 }).unwrap();
        let s = State { context: c.clone(), steps_left: t, x };
        prop_assert_eq!(mdp.transition(&s, &a), State { context: c, steps_left: t - 1, x: a.clone() });
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn batch_reward_matches_sequential(seeds in proptest::collection::vec(any::<u64>(), 1..12), in_flight in 1usize..6) {
        let reqs: Vec<RewardRequest> = seeds.iter().map(|s| request(verbalization(*s))).collect();
        let backend = MockBackend::length_keyed();
        let options = RewardOptions { in_flight, retry: RetryPolicy::immediate(1), ..RewardOptions::default() };
        let batch = reward_batch(&reqs, &backend, &options).unwrap();
        for (r, b) in reqs.iter().zip(&batch) {
            prop_assert_eq!(reward_of(r, &backend, &options).unwrap(), *b);
        }
    }

    #[test]
    fn rollouts_are_reproducible(seed in any::<u64>(), n in 1usize..16) {
        let mdp = DenoisingMdp::new(3, 2, ContextSource::Normal { dim: 2, scale: 1.0 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mean = MeanFunction::init(PolicyKind::Tanh { hidden: 4 }, mdp.feature_dim(), 2, &mut rng);
        let policy = GaussianPolicy::new(mean, 0.3).unwrap();
        prop_assert_eq!(rollout(&mdp, &policy, n, seed), rollout(&mdp, &policy, n, seed));
    }
}
