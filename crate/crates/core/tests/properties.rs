//! Randomized invariants over the text pipeline, numeric kernels, and the
//! checkpoint format.

use echotext_core::kernel::softmax_xent;
use echotext_core::metrics::oov_count;
use echotext_core::model::{CnnModel, ModelConfig};
use echotext_core::rng::{derive_seed, seeded};
use echotext_core::synth::{generate, SynthSpec};
use echotext_core::tensor::ActivationKind;
use echotext_core::text::{build_vocab, encode, tokenize, Vocabulary, PAD_ID};
use echotext_core::train::{adadelta_step, mc_split};
use echotext_core::transfer::Checkpoint;

use proptest::prelude::*;

const DETACHED: [char; 8] = ['.', ',', '!', '?', '\'', '"', '(', ')'];

proptest! {
    // No failure-persistence files: integration test binaries have no
    // source root to drop them next to, and reruns should stay hermetic.
    #![proptest_config(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn tokenize_is_deterministic_lowercase_and_detaches(s in ".{0,80}") {
        let a = tokenize(&s);
        let b = tokenize(&s);
        prop_assert_eq!(&a, &b);
        for tok in &a {
            prop_assert!(!tok.is_empty());
            prop_assert_eq!(tok.to_lowercase(), tok.clone());
            prop_assert!(!tok.chars().any(char::is_whitespace));
            let is_single_punct = tok.chars().count() == 1
                && DETACHED.contains(&tok.chars().next().unwrap());
            if !is_single_punct {
                prop_assert!(
                    !tok.chars().any(|c| DETACHED.contains(&c)),
                    "token `{}` mixes text and detached punctuation", tok
                );
            }
        }
    }

    #[test]
    fn encode_respects_bounds_and_pads_the_tail(
        toks in prop::collection::vec("[a-z]{1,5}", 0..30),
        max_len in 1usize..20,
        min_extra in 0usize..10,
    ) {
        let min_len = (max_len + min_extra).min(max_len).max(1);
        let vocab = Vocabulary::from_words(vec!["aa".into(), "bb".into()]);
        let enc = encode(&toks, &vocab, max_len, min_len);
        prop_assert_eq!(enc.true_length, toks.len().max(1).min(max_len));
        prop_assert_eq!(enc.token_ids.len(), enc.true_length.max(min_len));
        for (p, id) in enc.token_ids.iter().enumerate() {
            prop_assert!((*id as usize) < vocab.size() + 2);
            if p >= enc.true_length {
                prop_assert_eq!(*id, PAD_ID);
            } else {
                prop_assert_ne!(*id, PAD_ID);
            }
        }
    }

    #[test]
    fn softmax_is_a_distribution_even_for_huge_logits(
        logits in prop::collection::vec(-1e3f64..1e3, 1..8),
        raw_label in 0usize..8,
    ) {
        let label = raw_label % logits.len();
        let (loss, probs) = softmax_xent(&logits, label).unwrap();
        prop_assert!(loss.is_finite());
        prop_assert!(loss >= -1e-12);
        let sum: f64 = probs.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9, "probs sum to {}", sum);
        for p in &probs {
            prop_assert!((0.0..=1.0 + 1e-12).contains(p));
        }
        prop_assert!((probs[label] - (-loss).exp()).abs() < 1e-9);
    }

    #[test]
    fn oov_is_zero_on_self_bounded_and_monotone(
        target in prop::collection::hash_set("[a-z]{1,4}", 0..30),
        source in prop::collection::hash_set("[a-z]{1,4}", 0..30),
        extra in prop::collection::hash_set("[a-z]{1,4}", 0..10),
    ) {
        let tv = Vocabulary::from_words(target.iter().cloned().collect());
        let sv = Vocabulary::from_words(source.iter().cloned().collect());
        prop_assert_eq!(oov_count(&tv, &tv), 0);
        let oov = oov_count(&tv, &sv);
        prop_assert!(oov <= tv.size());

        let bigger: Vec<String> = source.union(&extra).cloned().collect();
        let sv_big = Vocabulary::from_words(bigger);
        prop_assert!(oov_count(&tv, &sv_big) <= oov, "adding source words must not raise OOV");
    }

    #[test]
    fn vocab_frequencies_are_non_increasing(
        sentences in prop::collection::vec(prop::collection::vec("[a-c]{1,2}", 1..6), 1..12),
    ) {
        let v = build_vocab(&sentences, 1);
        let count = |w: &str| sentences.iter().flatten().filter(|t| *t == w).count();
        let counts: Vec<usize> = v.words().iter().map(|w| count(w)).collect();
        for pair in counts.windows(2) {
            prop_assert!(pair[0] >= pair[1], "vocabulary out of frequency order: {:?}", counts);
        }
    }

    #[test]
    fn mc_split_partitions_the_index_range(n in 10usize..200, tf in 0.05f64..0.5) {
        let want_test = (tf * n as f64).floor() as usize;
        let result = mc_split(n, tf, &mut seeded(n as u64));
        if want_test == 0 {
            prop_assert!(result.is_err(), "an empty test split must be rejected");
            return Ok(());
        }
        let (train, test) = result.unwrap();
        prop_assert_eq!(test.len(), want_test);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn adadelta_matches_scalar_recomputation(
        v in -2.0f64..2.0,
        g in -1.0f64..1.0,
        ag in 0.0f64..0.5,
        au in 0.0f64..0.5,
        rho in 0.5f64..0.99,
    ) {
        use echotext_core::tensor::{DenseTensor, ParamTensor};
        let eps = 1e-6;
        let mut p = ParamTensor::new("p", DenseTensor::from_vec(&[1], vec![v]).unwrap(), true);
        p.grad.data_mut()[0] = g;
        p.acc_grad_sq.data_mut()[0] = ag;
        p.acc_update_sq.data_mut()[0] = au;
        adadelta_step(&mut p, rho, eps).unwrap();

        let ag2 = rho * ag + (1.0 - rho) * g * g;
        let delta = -((au + eps) / (ag2 + eps)).sqrt() * g;
        prop_assert!((p.value.data()[0] - (v + delta)).abs() < 1e-12);
        prop_assert!((p.acc_grad_sq.data()[0] - ag2).abs() < 1e-12);
        prop_assert!((p.acc_update_sq.data()[0] - (rho * au + (1.0 - rho) * delta * delta)).abs() < 1e-12);
        prop_assert_eq!(p.grad.data()[0], 0.0);
    }

    #[test]
    fn derived_seeds_do_not_collide_across_streams(base in any::<u64>()) {
        let seeds: Vec<u64> = (0..64).map(|s| derive_seed(base, s)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), seeds.len());
    }

    #[test]
    fn synth_rows_are_balanced_and_tokenizable(classes in 2usize..5, seed in any::<u64>()) {
        let spec = SynthSpec::default_with(classes, 40, seed);
        let rows = generate(&spec, None).unwrap();
        prop_assert_eq!(rows.clone(), generate(&spec, None).unwrap());
        for (label, text) in &rows {
            prop_assert!(*label < classes);
            let toks = tokenize(text);
            prop_assert!(!toks.is_empty());
            // Synthetic tokens must survive the tokenizer untouched.
            prop_assert_eq!(toks.join(" "), text.clone());
        }
        for c in 0..classes {
            let n = rows.iter().filter(|(l, _)| *l == c).count();
            prop_assert!((n as i64 - (40 / classes) as i64).abs() <= 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn checkpoints_round_trip_for_random_shapes(
        seed in any::<u64>(),
        d in 2usize..5,
        maps in 1usize..4,
        hidden in 1usize..4,
        classes in 2usize..4,
    ) {
        let cfg = ModelConfig {
            d,
            region_sizes: vec![1, 2],
            feature_maps: maps,
            hidden_units: hidden,
            num_classes: classes,
            conv_activation: ActivationKind::Tanh,
            hidden_activation: ActivationKind::Iden,
            dropout_rate: 0.5,
            l2_cap: 3.0,
            dropout_pooled: true,
            dropout_hidden: false,
        };
        let vocab = Vocabulary::from_words(vec!["aa".into(), "bb".into(), "cc".into()]);
        let model: CnnModel<f32> = CnnModel::init_random(cfg, &vocab, &mut seeded(seed)).unwrap();
        let ckpt = Checkpoint::from_model(&model, &vocab, "prop");
        let bytes = ckpt.to_bytes().unwrap();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes().unwrap(), bytes);
        prop_assert_eq!(back.tensors.len(), ckpt.tensors.len());
        for (a, b) in ckpt.tensors.iter().zip(&back.tensors) {
            prop_assert_eq!(&a.name, &b.name);
            prop_assert_eq!(&a.shape, &b.shape);
            prop_assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}
