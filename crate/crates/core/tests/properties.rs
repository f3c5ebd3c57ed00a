use pertcrf_core::corpus::{filter_long, shannon_index, shuffle_split};
use pertcrf_core::crf::{backward, forward, marginals, viterbi, Lattice};
use pertcrf_core::features::extract_forms;
use pertcrf_core::{Corpus, FeatureTemplate, Fraction, Sentence, SplitSpec, TemplateId, Token};
use proptest::prelude::*;

fn lattice_strategy() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (1usize..6, 1usize..5).prop_flat_map(|(n, l)| {
        (
            Just(l),
            prop::collection::vec(-20.0f64..20.0, n * l),
            prop::collection::vec(-20.0f64..20.0, l * l),
        )
    })
}

fn corpus_strategy() -> impl Strategy<Value = Corpus> {
    prop::collection::vec(prop::collection::vec(("[a-c]{1,3}", "[NVA]", any::<bool>()), 1..6), 3..40).prop_map(
        |sents| {
            sents
                .into_iter()
                .map(|toks| {
                    Sentence::new(toks.into_iter().map(|(f, p, e)| Token::new(f, p, e).unwrap()).collect()).unwrap()
                })
                .collect()
        },
    )
}

proptest! {
    #[test]
    fn marginals_are_distributions((l, e, t) in lattice_strategy()) {
        let lat = Lattice::new(l, e, t);
        let (a, z) = forward(&lat);
        let (b, zb) = backward(&lat);
        prop_assert!((z - zb).abs() <= 1e-9 * z.abs().max(1.0));
        let m = marginals(&lat, &a, &b, z);
        for pos in 0..lat.len() {
            let s: f64 = m.unary(pos).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
            prop_assert!(m.unary(pos).iter().all(|&p| (-1e-12..=1.0 + 1e-12).contains(&p)));
            if pos > 0 {
                // Pairwise marginals sum to the unary marginals on both sides.
                for y in 0..l {
                    let row: f64 = (0..l).map(|b| m.pairwise(pos)[y * l + b]).sum();
                    let col: f64 = (0..l).map(|a| m.pairwise(pos)[a * l + y]).sum();
                    prop_assert!((row - m.unary(pos - 1)[y]).abs() < 1e-9);
                    prop_assert!((col - m.unary(pos)[y]).abs() < 1e-9);
                }
            }
        }
        let (path, score) = viterbi(&lat);
        prop_assert!((lat.path_score(&path) - score).abs() < 1e-9);
        prop_assert!(score <= z + 1e-9);
    }

    #[test]
    fn split_is_a_partition(corpus in corpus_strategy(), seed in any::<u64>()) {
        let spec = SplitSpec::new(seed, Fraction::new(1, 10).unwrap(), Fraction::new(1, 10).unwrap()).unwrap();
        match shuffle_split(&corpus, &spec) {
            Ok(split) => {
                let (tr, va, te) = spec.sizes(corpus.len());
                prop_assert_eq!((split.test.len(), split.valid.len(), split.train.len()), (te, va, tr));
                let mut all: Vec<Sentence> = split.train.sentences().to_vec();
                all.extend(split.valid.sentences().iter().cloned());
                all.extend(split.test.sentences().iter().cloned());
                let mut expected = corpus.sentences().to_vec();
                let key = |s: &Sentence| format!("{s:?}");
                all.sort_by_key(key);
                expected.sort_by_key(key);
                prop_assert_eq!(all, expected);
                prop_assert_eq!(shuffle_split(&corpus, &spec).unwrap(), split);
            }
            Err(_) => {
                let (tr, va, te) = spec.sizes(corpus.len());
                prop_assert!(tr == 0 || va == 0 || te == 0);
            }
        }
    }

    #[test]
    fn filter_keeps_short_sentences(corpus in corpus_strategy(), max in 1usize..6) {
        let kept = filter_long(&corpus, max);
        prop_assert!(kept.sentences().iter().all(|s| s.len() <= max));
        let expected = corpus.sentences().iter().filter(|s| s.len() <= max).count();
        prop_assert_eq!(kept.len(), expected);
    }

    #[test]
    fn shannon_index_is_bounded(counts in prop::collection::vec(0u64..1000, 1..20)) {
        match shannon_index(counts.iter().copied()) {
            Ok(h) => {
                let k = counts.iter().filter(|&&c| c > 0).count() as f64;
                prop_assert!(h >= -1e-12 && h <= k.ln() + 1e-12);
            }
            Err(_) => prop_assert!(counts.contains(&0)),
        }
    }

    #[test]
    fn crf1_feature_count_is_fixed(words in prop::collection::vec("[a-zā]{1,6}", 1..8)) {
        let forms: Vec<&str> = words.iter().map(String::as_str).collect();
        let feats = extract_forms(&forms, &FeatureTemplate::new(TemplateId::Crf1), None).unwrap();
        prop_assert_eq!(feats.len(), words.len());
        prop_assert!(feats.iter().all(|f| f.len() == 11));
    }
}
