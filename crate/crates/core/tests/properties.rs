//! Randomized invariants checked against brute-force oracles.

use std::collections::{BTreeMap, BTreeSet};

use forge_core::augment::{
    conditional_mirror, identity_triplet, make_bidirectional_pair, random_overlay, AugmentOp, AugmentationSpec,
    Direction, DirectionalBlocklist, TemplateBank,
};
use forge_core::filters::{
    align_pair, estimate_homography_dlt, iou, ransac_homography, reprojection_rmse, BoundingBox, Homography, PointPair,
    RansacConfig,
};
use forge_core::fixtures::natural_image_variant;
use forge_core::grounding::{
    enforce_frequency_cap, kmeans, rank_order, retrieve_topk, softmax, softmax_sample, EmbeddingVector, GroundingResult,
    VectorIndex,
};
use forge_core::manifest::{parse_jsonl, to_jsonl_bytes};
use forge_core::preference::{dpo_loss, spearman_rho, strict_dominance_pairs, CandidateSource, DpoSample, ScoredCandidate};
use forge_core::scheduler::{batch_size_for, mix_tasks, plan_batches, MixRatio, PlanItem, TaskKind, TaskSource};
use forge_core::triplet_graph::{
    background_removal_target, composite_masked, composite_transitions, invert_triplets, Edit, EditSet,
    TemplateComposer, TemplateInverter, DEFAULT_FILL,
};
use forge_core::validate::validate_triplet;
use forge_core::{AssessorScore, ImageBuffer, InstructionOrigin, InstructionRecord, Mask, Provenance, TripletRecord};
use proptest::prelude::*;

fn provenance() -> impl Strategy<Value = Provenance> {
    prop::sample::select(vec![
        Provenance::Mined,
        Provenance::Inverted,
        Provenance::Composite,
        Provenance::Augmented,
        Provenance::Identity,
        Provenance::External,
    ])
}

fn origin() -> impl Strategy<Value = InstructionOrigin> {
    prop::sample::select(vec![
        InstructionOrigin::RealUser,
        InstructionOrigin::Synthetic,
        InstructionOrigin::Inverted,
        InstructionOrigin::Composite,
        InstructionOrigin::Template,
    ])
}

/// Quarter-point grades are exact in binary floating point.
fn grade() -> impl Strategy<Value = f64> {
    (0u32..=20).prop_map(|q| f64::from(q) / 4.0)
}

prop_compose! {
    fn record()(
        id in "[ a-z0-9]{0,6}",
        src in prop::sample::select(vec!["", " ", "a.ppm", "b.ppm", "c.ppm"]),
        tgt in prop::sample::select(vec!["", "a.ppm", "b.ppm", "c.ppm"]),
        text in "[ a-zé\t]{0,10}",
        origin in origin(),
        usage in 0u64..5,
        prov in provenance(),
        scores in prop::option::of((grade(), grade())),
        lineage in prop::collection::vec("[ a-z0-9]{0,6}", 0..3),
    ) -> TripletRecord {
        let mut instruction = InstructionRecord::new("i", text, origin);
        instruction.usage_count = usage;
        let mut r = TripletRecord::new(id, src, instruction, tgt, prov).with_lineage(lineage);
        if let Some((a, e)) = scores {
            r = r.with_scores(AssessorScore::new(a, e).unwrap());
        }
        r
    }
}

/// Independent restatement of the per-record invariants.
fn brute_force_valid(r: &TripletRecord) -> bool {
    let filled = |s: &str| !s.trim().is_empty();
    let refs_ok = if r.provenance == Provenance::Identity { r.source_ref == r.target_ref } else { r.source_ref != r.target_ref };
    filled(&r.id)
        && filled(&r.instruction.text)
        && filled(&r.source_ref)
        && filled(&r.target_ref)
        && refs_ok
        && !r.lineage.contains(&r.id)
}

fn image(max: usize) -> impl Strategy<Value = ImageBuffer> {
    (1..=max, 1..=max).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), w * h * 3).prop_map(move |d| ImageBuffer::from_raw(w, h, 3, d).unwrap())
    })
}

fn image_and_mask(max: usize) -> impl Strategy<Value = (ImageBuffer, ImageBuffer, Mask)> {
    (1..=max, 1..=max).prop_flat_map(|(w, h)| {
        let px = prop::collection::vec(any::<u8>(), w * h * 3);
        (px.clone(), px, prop::collection::vec(any::<bool>(), w * h)).prop_map(move |(a, b, m)| {
            (
                ImageBuffer::from_raw(w, h, 3, a).unwrap(),
                ImageBuffer::from_raw(w, h, 3, b).unwrap(),
                Mask::from_bits(w, h, m).unwrap(),
            )
        })
    })
}

fn int_box() -> impl Strategy<Value = (u32, u32, u32, u32)> {
    (0u32..64, 0u32..64).prop_flat_map(|(x0, y0)| (Just(x0), Just(y0), x0 + 1..=64, y0 + 1..=64))
}

fn raster_iou(a: (u32, u32, u32, u32), b: (u32, u32, u32, u32)) -> f64 {
    let inside = |r: (u32, u32, u32, u32), x: u32, y: u32| x >= r.0 && y >= r.1 && x < r.2 && y < r.3;
    let (mut inter, mut union) = (0u32, 0u32);
    for y in 0..64 {
        for x in 0..64 {
            inter += u32::from(inside(a, x, y) && inside(b, x, y));
            union += u32::from(inside(a, x, y) || inside(b, x, y));
        }
    }
    f64::from(inter) / f64::from(union)
}

fn bbox(r: (u32, u32, u32, u32)) -> BoundingBox<f64> {
    BoundingBox::new(r.0.into(), r.1.into(), r.2.into(), r.3.into()).unwrap()
}

prop_compose! {
    fn homography()(
        a in -0.3..0.3f64, b in -0.3..0.3f64, c in -50.0..50.0f64,
        d in -0.3..0.3f64, e in -0.3..0.3f64, f in -50.0..50.0f64,
        g in -5e-4..5e-4f64, h in -5e-4..5e-4f64,
    ) -> Homography<f64> {
        Homography::new([[1.0 + a, b, c], [d, 1.0 + e, f], [g, h, 1.0]]).unwrap()
    }
}

fn points(n: usize) -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((0.0..640.0f64, 0.0..480.0f64).prop_map(|(x, y)| [x, y]), n)
}

fn project(h: &Homography<f64>, p: [f64; 2]) -> [f64; 2] {
    let m = h.matrix();
    let w = m[2][0] * p[0] + m[2][1] * p[1] + m[2][2];
    [(m[0][0] * p[0] + m[0][1] * p[1] + m[0][2]) / w, (m[1][0] * p[0] + m[1][1] * p[1] + m[1][2]) / w]
}

fn candidates(scores: &[(u32, f64, f64)]) -> Vec<ScoredCandidate> {
    scores
        .iter()
        .enumerate()
        .map(|(i, &(ctx, a, e))| ScoredCandidate {
            triplet_id: format!("c{i:03}"),
            context_id: format!("ctx{ctx}"),
            scores: AssessorScore::new(a, e).unwrap(),
            source: CandidateSource::OnPolicy,
        })
        .collect()
}

fn pair_set(c: &[ScoredCandidate]) -> BTreeSet<(String, String, String)> {
    strict_dominance_pairs(c, 0.0).unwrap().into_iter().map(|p| (p.context_id, p.winner_id, p.loser_id)).collect()
}

/// Sample whose `beta * (delta_w - delta_l)` equals `z` exactly in real arithmetic.
fn sample_at(z: f64) -> DpoSample<f64> {
    let big = (1.0 + z.abs()).sqrt();
    let (rw, rl) = if z >= 0.0 { (big, 1.0) } else { (1.0, big) };
    DpoSample { eps: vec![0.0], eps_ref_w: vec![rw], eps_theta_w: vec![1.0], eps_ref_l: vec![rl], eps_theta_l: vec![1.0], beta: 1.0 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn manifest_round_trip_is_byte_stable(records in prop::collection::vec(record(), 0..8)) {
        let bytes = to_jsonl_bytes(&records).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        let parsed: Vec<TripletRecord> = parse_jsonl(&text).unwrap().into_iter().map(|l| l.value).collect();
        prop_assert_eq!(&parsed, &records);
        prop_assert_eq!(to_jsonl_bytes(&parsed).unwrap(), bytes);
    }

    #[test]
    fn validate_matches_brute_force(r in record()) {
        prop_assert_eq!(validate_triplet(&r).is_empty(), brute_force_valid(&r));
    }

    #[test]
    fn softmax_sums_to_one_and_ignores_shifts(
        scores in prop::collection::vec(-50.0..50.0f64, 1..30),
        shift in -100.0..100.0f64,
        seed in any::<u64>(),
    ) {
        let p = softmax(&scores);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
        let q = softmax(&shifted);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
        let named: Vec<(String, f64)> = scores.iter().enumerate().map(|(i, s)| (format!("u{i}"), *s)).collect();
        prop_assert_eq!(softmax_sample(&named, seed).unwrap(), softmax_sample(&named, seed).unwrap());
    }

    #[test]
    fn frequency_cap_matches_counting_oracle(users in prop::collection::vec(0u8..12, 0..300), cap in 1usize..5) {
        let stream: Vec<GroundingResult> = users
            .iter()
            .enumerate()
            .map(|(i, u)| GroundingResult {
                artificial_id: format!("a{i}"),
                chosen_user_id: format!("u{u}"),
                similarity: 0.9,
                sampled_probability: 0.5,
            })
            .collect();
        let (kept, rejected) = enforce_frequency_cap(&stream, cap).unwrap();
        let mut seen: BTreeMap<u8, usize> = BTreeMap::new();
        let oracle: Vec<String> = users
            .iter()
            .enumerate()
            .filter(|(_, u)| {
                let c = seen.entry(**u).or_default();
                *c += 1;
                *c <= cap
            })
            .map(|(i, _)| format!("a{i}"))
            .collect();
        prop_assert_eq!(kept.iter().map(|k| k.artificial_id.clone()).collect::<Vec<_>>(), oracle);
        prop_assert_eq!(kept.len() + rejected.len(), stream.len());
    }

    #[test]
    fn topk_matches_full_sort(
        vectors in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 4), 1..200),
        query in prop::collection::vec(-1.0..1.0f64, 4),
        k in 1usize..30,
    ) {
        prop_assume!(query.iter().any(|v| v.abs() > 1e-3));
        prop_assume!(vectors.iter().all(|v| v.iter().any(|x| x.abs() > 1e-3)));
        let entries: Vec<(String, EmbeddingVector<f64>)> = vectors
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("e{i:03}"), EmbeddingVector::normalized(v.clone()).unwrap()))
            .collect();
        let q = EmbeddingVector::normalized(query).unwrap();
        let mut oracle: Vec<(String, f64)> = entries.iter().map(|(id, v)| (id.clone(), q.cosine(v))).collect();
        oracle.sort_by(rank_order);
        oracle.truncate(k);
        let index = VectorIndex::build(entries).unwrap();
        prop_assert_eq!(retrieve_topk(&index, &q, k).unwrap(), oracle);
    }

    #[test]
    fn kmeans_objective_never_increases(
        points in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 3), 4..60),
        k in 1usize..5,
        seed in any::<u64>(),
    ) {
        let r = kmeans(&points, k.min(points.len()), seed, 50).unwrap();
        for w in r.objective_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", r.objective_history);
        }
    }

    #[test]
    fn bootstrap_counts_and_composite_refs(n in 1usize..=64) {
        let edits: Vec<Edit> = (0..n)
            .map(|i| Edit {
                triplet_id: format!("e{i}"),
                instruction: InstructionRecord::new(format!("i{i}"), format!("edit {i}"), InstructionOrigin::Synthetic),
                target_ref: format!("y{i}"),
            })
            .collect();
        let targets: BTreeSet<String> = edits.iter().map(|e| e.target_ref.clone()).collect();
        let set = EditSet::new("x", edits).unwrap();
        prop_assert_eq!(invert_triplets(&set, &TemplateInverter).records.len(), n);
        let comps = composite_transitions(&set, &TemplateComposer).records;
        prop_assert_eq!(comps.len(), n * (n - 1));
        for c in &comps {
            prop_assert!(targets.contains(&c.source_ref) && targets.contains(&c.target_ref));
            prop_assert_ne!(&c.source_ref, &c.target_ref);
        }
    }

    #[test]
    fn composite_is_idempotent_and_background_keeps_mask((orig, edited, mask) in image_and_mask(12)) {
        let once = composite_masked(&orig, &edited, &mask).unwrap();
        prop_assert_eq!(composite_masked(&once, &edited, &mask).unwrap(), once);

        let bg = background_removal_target(&orig, std::slice::from_ref(&mask), DEFAULT_FILL).unwrap();
        let (w, h) = orig.dims();
        let mut preserved = 0;
        for y in 0..h {
            for x in 0..w {
                if mask.get(x, y) {
                    prop_assert_eq!(bg.pixel(x, y), orig.pixel(x, y));
                    preserved += 1;
                } else {
                    prop_assert_eq!(bg.pixel(x, y), &DEFAULT_FILL[..]);
                }
            }
        }
        prop_assert_eq!(preserved, mask.count());
    }

    #[test]
    fn iou_matches_raster_oracle(a in int_box(), b in int_box()) {
        let (ba, bb) = (bbox(a), bbox(b));
        let v = iou(&ba, &bb);
        prop_assert_eq!(v, iou(&bb, &ba));
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(iou(&ba, &ba), 1.0);
        prop_assert!((v - raster_iou(a, b)).abs() <= 1e-12);
    }

    #[test]
    fn dlt_recovers_noiseless_homographies(h in homography(), src in points(12)) {
        let pairs: Vec<PointPair<f64>> = src.iter().map(|&p| PointPair { src: p, dst: project(&h, p) }).collect();
        prop_assume!(estimate_homography_dlt(&pairs).is_ok());
        let est = estimate_homography_dlt(&pairs).unwrap();
        prop_assert!(reprojection_rmse(&est.homography, &pairs) <= 1e-6);
    }

    #[test]
    fn align_with_identity_is_byte_exact(img in image(16)) {
        prop_assert_eq!(align_pair(&img, &Homography::identity(), img.dims()).unwrap(), img);
    }

    #[test]
    fn mirror_is_an_involution(img in image(16), seed in any::<u64>()) {
        let blocklist = DirectionalBlocklist::new(["left"]).unwrap();
        let t = identity_triplet("p", &img, seed, &TemplateBank::bundled()).unwrap();
        let once = conditional_mirror(&t, &blocklist).unwrap();
        let twice = conditional_mirror(&once, &blocklist).unwrap();
        prop_assert_eq!(twice.source, img.clone());
        prop_assert_eq!(twice.target, img);
    }

    #[test]
    fn reverse_source_is_forward_target(img in image(16), sigma in 0.5..4.0f64, seed in any::<u64>()) {
        let spec = AugmentationSpec::new(AugmentOp::Blur, Direction::Forward, sigma, seed).unwrap();
        let Ok(pair) = make_bidirectional_pair("b", &img, &spec, &TemplateBank::bundled()) else {
            return Ok(());
        };
        prop_assert_eq!(&pair.reverse.source, &pair.forward.target);
        prop_assert_eq!(&pair.reverse.target, &pair.forward.source);
        prop_assert_eq!(&pair.reverse.record.source_ref, &pair.forward.record.target_ref);
    }

    #[test]
    fn dominance_matches_brute_force_and_is_a_strict_order(
        scores in prop::collection::vec((0u32..3, grade(), grade()), 0..60),
    ) {
        let c = candidates(&scores);
        let got = pair_set(&c);
        let mut oracle = BTreeSet::new();
        for w in &c {
            for l in &c {
                if w.context_id == l.context_id
                    && w.scores.instruction_adherence > l.scores.instruction_adherence
                    && w.scores.aesthetic > l.scores.aesthetic
                {
                    oracle.insert((w.context_id.clone(), w.triplet_id.clone(), l.triplet_id.clone()));
                }
            }
        }
        for (ctx, w, l) in &got {
            prop_assert_ne!(w, l);
            prop_assert!(!got.contains(&(ctx.clone(), l.clone(), w.clone())));
        }
        prop_assert_eq!(got, oracle);
    }

    #[test]
    fn dominance_is_translation_invariant(
        scores in prop::collection::vec((0u32..2, 0u32..=16, 0u32..=16), 0..40),
        shift in 0u32..=4,
    ) {
        let quarter = |q: u32| f64::from(q) / 4.0;
        let base: Vec<(u32, f64, f64)> = scores.iter().map(|&(c, a, e)| (c, quarter(a), quarter(e))).collect();
        let moved: Vec<(u32, f64, f64)> =
            scores.iter().map(|&(c, a, e)| (c, quarter(a + shift), quarter(e + shift))).collect();
        prop_assert_eq!(pair_set(&candidates(&base)), pair_set(&candidates(&moved)));
    }

    #[test]
    fn dpo_loss_is_nonnegative_and_decreasing(z1 in -30.0..30.0f64, gap in 1e-3..10.0f64) {
        let lo = dpo_loss(&sample_at(z1)).unwrap().loss;
        let hi = dpo_loss(&sample_at(z1 + gap)).unwrap().loss;
        prop_assert!(lo >= 0.0 && hi >= 0.0);
        prop_assert!(hi < lo, "loss({}) = {hi} not below loss({z1}) = {lo}", z1 + gap);
    }

    #[test]
    fn spearman_depends_only_on_ranks(
        pairs in prop::collection::vec((-5i32..5, -100.0..100.0f64), 3..40),
    ) {
        let p: Vec<f64> = pairs.iter().map(|(a, _)| f64::from(*a)).collect();
        let l: Vec<f64> = pairs.iter().map(|(_, b)| *b).collect();
        let Ok(rho) = spearman_rho(&p, &l) else { return Ok(()) };
        let up: Vec<f64> = p.iter().map(|x| x.powi(3) + 2.0 * x).collect();
        let down: Vec<f64> = l.iter().map(|x| -(x / 10.0).exp()).collect();
        prop_assert!((spearman_rho(&up, &l).unwrap() - rho).abs() <= 1e-12);
        prop_assert!((spearman_rho(&p, &down).unwrap() + rho).abs() <= 1e-12);
    }

    #[test]
    fn plan_is_a_partition_within_budget(
        dims in prop::collection::vec((prop::sample::select(vec![64u32, 128, 200, 512]), prop::sample::select(vec![64u32, 96, 300])), 0..120),
        budget in 200_000u64..2_000_000,
        seed in any::<u64>(),
    ) {
        let items: Vec<PlanItem> = dims
            .iter()
            .enumerate()
            .map(|(i, &(width, height))| PlanItem { id: format!("p{i}"), width, height, task: TaskKind::Edit })
            .collect();
        let plan = plan_batches(&items, budget, seed).unwrap();
        let mut seen: Vec<String> = Vec::new();
        for b in &plan.batches {
            prop_assert!(u64::from(b.dims[0]) * u64::from(b.dims[1]) * b.ids.len() as u64 <= budget);
            seen.extend(b.ids.iter().cloned());
        }
        let mut want: Vec<String> = items.iter().map(|i| i.id.clone()).collect();
        seen.sort();
        want.sort();
        prop_assert_eq!(seen, want);
    }

    #[test]
    fn smaller_images_get_larger_batches(a in (1u32..3000, 1u32..3000), b in (1u32..3000, 1u32..3000), budget in 1u64..1u64 << 40) {
        let (small, large) = if u64::from(a.0) * u64::from(a.1) <= u64::from(b.0) * u64::from(b.1) { (a, b) } else { (b, a) };
        prop_assert!(batch_size_for(small.0, small.1, budget) >= batch_size_for(large.0, large.1, budget));
    }

    #[test]
    fn mix_counts_follow_the_ratio(t2i in 0.0..100.0f64, edit in 0.0..100.0f64, count in 0usize..500, seed in any::<u64>()) {
        prop_assume!(t2i + edit > 0.0);
        let ratio = MixRatio::new(t2i, edit).unwrap();
        let stream = |p: &'static str| (0..).map(move |i| TaskSource { id: format!("{p}{i}"), prompt: "x".into() });
        let out = mix_tasks(&mut stream("e"), &mut stream("t"), &ratio, count, seed).unwrap();
        let n_t2i = out.iter().filter(|m| m.task == TaskKind::T2i).count();
        prop_assert_eq!(out.len(), count);
        prop_assert!((n_t2i as f64 - count as f64 * t2i / (t2i + edit)).abs() <= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ransac_is_deterministic_and_tolerance_monotone(
        h in homography(),
        src in points(60),
        noise in prop::collection::vec((-0.5..0.5f64, -0.5..0.5f64), 60),
        junk in points(60),
        seed in any::<u64>(),
        tols in (0.5..3.0f64, 0.0..3.0f64),
    ) {
        // every third point is an outlier; the rest carry sub-pixel noise
        let pairs: Vec<PointPair<f64>> = (0..60)
            .map(|i| {
                let dst = if i % 3 == 0 {
                    junk[i]
                } else {
                    let d = project(&h, src[i]);
                    [d[0] + noise[i].0, d[1] + noise[i].1]
                };
                PointPair { src: src[i], dst }
            })
            .collect();
        let run = |tol: f64| ransac_homography(&pairs, &RansacConfig { iterations: 300, inlier_tol: tol, seed });
        let (Ok(a), Ok(b)) = (run(tols.0), run(tols.0)) else { return Ok(()) };
        prop_assert_eq!(&a, &b);
        let Ok(wider) = run(tols.0 + tols.1) else {
            return Err(TestCaseError::fail("a wider tolerance lost the model"));
        };
        prop_assert!(wider.inlier_count() >= a.inlier_count(), "{} < {}", wider.inlier_count(), a.inlier_count());
    }

    #[test]
    fn overlay_changes_nothing_outside_its_mask(variant in 0u64..50, seed in any::<u64>()) {
        let img = natural_image_variant(96, 72, variant);
        let o = random_overlay(&img, seed).unwrap();
        let (w, h) = img.dims();
        for y in 0..h {
            for x in 0..w {
                if !o.mask.get(x, y) {
                    prop_assert_eq!(o.image.pixel(x, y), img.pixel(x, y));
                }
            }
        }
    }
}
