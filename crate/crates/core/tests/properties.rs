mod common;

use chunktagger::chunker::{strip_attachments, BoundarySpec, Chunker, ChunkerConfig, StripConfig, UnknownPosPolicy};
use chunktagger::corpus::{parse_bracketed, parse_sentence, Node, Phrase, Sentence, Treebank};
use chunktagger::encoding::{decode_tags, encode_sentence, normalize, Depth, Dims, EncodingScheme, Relation, StructuralTag};
use chunktagger::eval::{cross_validate, score, EvalReport};
use chunktagger::model::{ChunkModel, TagId};
use chunktagger::synth::{grammar_corpus, is_encodable, random_sentence, GrammarConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{brute_force, random_model, Tables};

fn depth_strategy() -> impl Strategy<Value = Depth> {
    prop_oneof![Just(Depth::Two), Just(Depth::Three)]
}

fn dims_strategy() -> impl Strategy<Value = Dims> {
    prop_oneof![Just(Dims::R), Just(Dims::RT), Just(Dims::RCG), Just(Dims::RTC), Just(Dims::RTCG)]
}

fn sentence(seed: u64, depth: Depth) -> Sentence {
    random_sentence(&mut ChaCha8Rng::seed_from_u64(seed), depth)
}

fn relabel(children: &[Node]) -> Vec<Node> {
    children
        .iter()
        .map(|c| match c {
            Node::Leaf(i) => Node::Leaf(*i),
            Node::Phrase(p) => Node::Phrase(Phrase::new(format!("{}Z", p.label), relabel(&p.children))),
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn codec_round_trips_encodable_trees(seed in any::<u64>(), depth in depth_strategy(), dims in dims_strategy()) {
        let s = sentence(seed, depth);
        let scheme = EncodingScheme::new(dims, depth);
        let tags = encode_sentence(&s, &scheme).unwrap();
        prop_assert_eq!(tags.len(), s.len());
        prop_assert_eq!(tags[0].relation, Relation::One);
        let d = decode_tags(s.tokens(), &tags, &scheme).unwrap();
        prop_assert_eq!(d.repairs, 0);
        if dims.category {
            prop_assert_eq!(&d.sentence, &s);
        } else {
            // without categories the labels are lost but the shape survives
            let relations: Vec<Relation> = encode_sentence(&d.sentence, &scheme).unwrap().iter().map(|t| t.relation).collect();
            prop_assert_eq!(relations, tags.iter().map(|t| t.relation).collect::<Vec<_>>());
        }
    }

    #[test]
    fn decoding_arbitrary_tags_is_well_formed(rels in prop::collection::vec(0usize..7, 1..20), depth in depth_strategy()) {
        let tokens = parse_sentence(&(0..rels.len()).map(|i| format!("w{i}/P")).collect::<Vec<_>>().join(" ")).unwrap().tokens().to_vec();
        let tags: Vec<StructuralTag> = rels.iter().map(|&r| StructuralTag::relation_only(Relation::ALL[r])).collect();
        let scheme = EncodingScheme::new(Dims::R, depth);
        let d = decode_tags(&tokens, &tags, &scheme).unwrap();
        prop_assert!(d.sentence.structural_depth() <= depth.levels());
        if d.repairs == 0 {
            let again: Vec<Relation> = encode_sentence(&d.sentence, &scheme).unwrap().iter().map(|t| t.relation).collect();
            prop_assert_eq!(again, tags.iter().map(|t| t.relation).collect::<Vec<_>>());
        }
    }

    #[test]
    fn depth_two_normal_form_is_encodable_and_stable(seed in any::<u64>()) {
        let s = sentence(seed, Depth::Three);
        let n = normalize(&s, Depth::Two);
        prop_assert!(is_encodable(&n, Depth::Two));
        prop_assert_eq!(normalize(&n, Depth::Two), n.clone());
        prop_assert_eq!(n.tokens(), s.tokens());
    }

    #[test]
    fn bracketed_text_round_trips(seed in any::<u64>(), depth in depth_strategy()) {
        let s = sentence(seed, depth);
        let back = parse_sentence(&s.to_string()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn stripping_is_idempotent(seed in any::<u64>(), adverbs in any::<bool>()) {
        let cfg = StripConfig {
            focus_adverbs: if adverbs { vec!["ADV".into()] } else { vec![] },
            noun_pos_prefixes: vec!["N".into()],
            ..StripConfig::default()
        };
        let s = sentence(seed, Depth::Three);
        let once = strip_attachments(&s, &cfg);
        prop_assert_eq!(strip_attachments(&once, &cfg), once.clone());
        prop_assert_eq!(once.tokens(), s.tokens());
    }

    #[test]
    fn self_score_is_perfect(seed in any::<u64>()) {
        let tb = Treebank::new(vec![sentence(seed, Depth::Three)]);
        let r = score(&tb, &tb).unwrap();
        prop_assert_eq!(r.tag_accuracy, 1.0);
        prop_assert_eq!(r.labelled_precision, 1.0);
        prop_assert_eq!(r.top_level_recall, 1.0);
    }

    #[test]
    fn precision_recall_duality_and_bounds(a in any::<u64>(), b in any::<u64>()) {
        let g = sentence(a, Depth::Three);
        // a prediction over the same tokens: decode the tags of another tree
        let other = sentence(b, Depth::Three);
        let scheme = EncodingScheme::new(Dims::RTC, Depth::Three);
        let mut tags = encode_sentence(&other, &scheme).unwrap();
        tags.resize(g.len(), StructuralTag { relation: Relation::Zero, ..tags[0].clone() });
        let p = decode_tags(g.tokens(), &tags, &scheme).unwrap().sentence;
        let (gt, pt) = (Treebank::new(vec![g]), Treebank::new(vec![p]));
        let x = score(&gt, &pt).unwrap();
        let y = score(&pt, &gt).unwrap();
        prop_assert_eq!(x.bracketing_precision, y.bracketing_recall);
        prop_assert_eq!(x.labelled_precision, y.labelled_recall);
        prop_assert_eq!(x.top_level_precision, y.top_level_recall);
        prop_assert!(x.labelled_precision <= x.bracketing_precision);
        prop_assert!(x.labelled_recall <= x.bracketing_recall);
        for v in [x.tag_accuracy, x.bracketing_precision, x.bracketing_recall, x.top_level_precision, x.boundary_accuracy] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn tag_accuracy_ignores_labels(a in any::<u64>(), rels in prop::collection::vec(0usize..7, 1..20)) {
        let g = sentence(a, Depth::Three);
        let tags: Vec<StructuralTag> = (0..g.len()).map(|i| StructuralTag::relation_only(Relation::ALL[rels[i % rels.len()]])).collect();
        let p = decode_tags(g.tokens(), &tags, &EncodingScheme::new(Dims::R, Depth::Three)).unwrap().sentence;
        let relabelled = Sentence::new(g.tokens().to_vec(), relabel(p.forest())).unwrap();
        let gt = Treebank::new(vec![g]);
        let x = score(&gt, &Treebank::new(vec![p])).unwrap();
        let y = score(&gt, &Treebank::new(vec![relabelled])).unwrap();
        prop_assert_eq!(x.tag_accuracy, y.tag_accuracy);
    }

    #[test]
    fn transitions_sum_to_one(seed in any::<u64>(), k in 1usize..12, with_pos in any::<bool>(), h2 in 0u32..13, h1 in 0u32..13) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, k, &["A", "B", "C"], with_pos);
        let n = m.tagset_size() as TagId;
        let (h2, h1) = (h2 % (n + 1), h1 % (n + 1));
        let total: f64 = (0..=n).map(|s| m.transition_prob(h2, h1, s).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!((m.weights().sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn viterbi_matches_brute_force(seed in any::<u64>(), k in 1usize..8, pos in prop::collection::vec(0usize..3, 1..5)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, k, &["A", "B", "C"], true);
        let seq: Vec<&str> = pos.iter().map(|&i| ["A", "B", "C"][i]).collect();
        let (best, _, _) = brute_force(&m, &Tables::new(&m), &seq);
        match m.viterbi_decode(&seq, None) {
            Ok(path) if best == f64::NEG_INFINITY => prop_assert_eq!(path.score, best),
            Ok(path) => prop_assert!((path.score - best).abs() < 1e-9, "viterbi {} brute force {}", path.score, best),
            Err(_) => prop_assert_eq!(best, f64::NEG_INFINITY),
        }
    }

    #[test]
    fn model_text_round_trips(seed in any::<u64>(), k in 1usize..12, with_pos in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, k, &["A", "B", "C"], with_pos);
        let text = m.to_text();
        let back = ChunkModel::from_text(&text).unwrap();
        prop_assert_eq!(back.to_text(), text);
        prop_assert_eq!(back, m);
    }
}

fn grammar_chunker(dims: &str) -> (Chunker, Treebank) {
    let tb = grammar_corpus(&GrammarConfig { sentences: 400, ..GrammarConfig::default() }, 3);
    let config = ChunkerConfig::new(dims.parse().unwrap());
    (Chunker::train(&tb, config).unwrap(), tb)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interactive_output_respects_spans(idx in 0usize..400, cuts in prop::collection::vec(any::<bool>(), 40), dims in prop_oneof![Just("r"), Just("rt"), Just("rtc"), Just("rtcg")]) {
        let (chunker, tb) = grammar_chunker(dims);
        let s = &tb.sentences()[idx];
        let mut spans = Vec::new();
        let mut start = None;
        for i in 0..s.len() {
            match (start, cuts[i % cuts.len()]) {
                (None, true) => start = Some(i),
                (Some(a), true) => { spans.push(a..i); start = Some(i); }
                (Some(a), false) if i % 3 == 0 => { spans.push(a..i); start = None; }
                _ => {}
            }
        }
        if let Some(a) = start { spans.push(a..s.len()); }
        let out = chunker.tag_interactive(s.tokens(), &BoundarySpec::new(spans.clone(), s.len()).unwrap()).unwrap();
        prop_assert_eq!(out.sentence.chunk_spans(), spans);
    }

    #[test]
    fn standalone_output_is_valid(idx in 0usize..400, dims in prop_oneof![Just("r"), Just("rt"), Just("rtc"), Just("rtcg")]) {
        let (chunker, tb) = grammar_chunker(dims);
        let s = &tb.sentences()[idx];
        let out = chunker.tag_standalone(s.tokens()).unwrap();
        prop_assert_eq!(out.sentence.tokens(), s.tokens());
        prop_assert!(out.sentence.structural_depth() <= 3);
        prop_assert!(parse_sentence(&out.sentence.to_string()).is_ok());
    }
}

#[test]
fn averaged_report_lies_within_fold_range() {
    let tb = grammar_corpus(&GrammarConfig { sentences: 300, ..GrammarConfig::default() }, 9);
    let cv = cross_validate(&tb, &ChunkerConfig::new("rtc".parse().unwrap()), 10, 4).unwrap();
    let field = |r: &EvalReport| [r.tag_accuracy, r.bracketing_precision, r.labelled_recall, r.top_level_precision, r.boundary_accuracy];
    for k in 0..5 {
        let vals: Vec<f64> = cv.folds.iter().map(|r| field(r)[k]).collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = field(&cv.mean)[k];
        assert!(lo - 1e-12 <= mean && mean <= hi + 1e-12);
        let hand = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((hand - mean).abs() < 1e-12);
    }
    assert_eq!(cv, cross_validate(&tb, &ChunkerConfig::new("rtc".parse().unwrap()), 10, 4).unwrap());
}

#[test]
fn beats_majority_baseline() {
    use std::collections::HashMap;
    let tb = grammar_corpus(&GrammarConfig { sentences: 500, ..GrammarConfig::default() }, 21);
    let (train_part, test_part) = tb.sentences().split_at(450);
    let scheme = EncodingScheme::new(Dims::RTC, Depth::Three);
    let chunker = Chunker::train(&tb.with_sentences(train_part.to_vec()), ChunkerConfig::new(scheme.clone())).unwrap();
    // majority relation per POS
    let mut freq: HashMap<(String, Relation), usize> = HashMap::new();
    for s in train_part {
        for (t, tag) in s.tokens().iter().zip(encode_sentence(s, &scheme).unwrap()) {
            *freq.entry((t.pos().to_string(), tag.relation)).or_default() += 1;
        }
    }
    let majority = |pos: &str| Relation::ALL.iter().copied().max_by_key(|r| freq.get(&(pos.to_string(), *r)).copied().unwrap_or(0)).unwrap();
    let (mut model_ok, mut base_ok, mut total) = (0, 0, 0);
    for s in test_part {
        let gold = encode_sentence(s, &scheme).unwrap();
        let out = chunker.tag_standalone(s.tokens()).unwrap();
        let pred = encode_sentence(&out.sentence, &scheme).unwrap();
        for i in 0..s.len() {
            total += 1;
            model_ok += usize::from(pred[i].relation == gold[i].relation);
            base_ok += usize::from(majority(s.tokens()[i].pos()) == gold[i].relation);
        }
    }
    assert!(model_ok > base_ok, "model {model_ok} baseline {base_ok} of {total}");
}

#[test]
fn standalone_matches_brute_force_tags() {
    let tb = parse_bracketed("(NP a/ART b/NN) c/V\n(NP a/ART (AP d/ADV e/ADJA) b/NN) c/V\nc/V (PP f/APPR b/NN)").unwrap();
    let mut config = ChunkerConfig::new("rtc".parse().unwrap());
    config.unknown_pos_policy = UnknownPosPolicy::Uniform;
    let chunker = Chunker::train(&tb, config).unwrap();
    let m = chunker.model();
    let tables = Tables::new(m);
    for line in ["a/ART b/NN c/V", "c/V f/APPR a/ART b/NN", "a/ART d/ADV e/ADJA b/NN"] {
        let s = parse_sentence(line).unwrap();
        let pos: Vec<&str> = s.tokens().iter().map(|t| t.pos()).collect();
        let (_, _, arg) = brute_force(m, &tables, &pos);
        let tags: Vec<StructuralTag> = arg.iter().map(|&id| m.tag(id).unwrap().clone()).collect();
        let expected = decode_tags(s.tokens(), &tags, m.scheme()).unwrap().sentence;
        assert_eq!(chunker.tag_standalone(s.tokens()).unwrap().sentence, expected);
    }
}
