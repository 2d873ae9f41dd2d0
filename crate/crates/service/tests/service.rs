use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use chunktagger::corpus::parse_bracketed;
use chunktagger::encoding::{Depth, Dims};
use chunktagger::synth::{grammar_corpus, GrammarConfig};
use chunktagger::{Chunker, ChunkerConfig, EncodingScheme, Treebank};
use chunktagger_service::{router, AppState, ProposeResponse, TreeNode, UnknownPos};
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

const FIGURE: &str = "(NP ein/ART (AP (PP in/APPR (MPN Tel/NE Aviv/NE)) lebender/ADJA) Maler/NN)";

fn toy_corpus() -> Treebank {
    let text = format!(
        "{FIGURE}\n{FIGURE}\n(NP der/ART Maler/NN) malt/VVFIN (NP ein/ART Bild/NN)\n(PP in/APPR (NP der/ART Stadt/NN))\n"
    );
    parse_bracketed(&text).unwrap()
}

fn app_for(tb: &Treebank, dims: Dims, policy: UnknownPos) -> Router {
    let chunker = Chunker::train(tb, ChunkerConfig::new(EncodingScheme::new(dims, Depth::Three))).unwrap();
    router(AppState::new(Some(chunker.model().clone()), policy))
}

fn toy_app() -> Router {
    app_for(&toy_corpus(), Dims::RTCG, UnknownPos::Unk)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b)),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn propose(app: &Router, body: Value) -> (StatusCode, Value) {
    let (s, b) = call(app, "POST", "/v1/propose", Some(body.to_string())).await;
    (s, serde_json::from_slice(&b).unwrap())
}

fn tokens_of(line: &str) -> Value {
    let s = parse_bracketed(line).unwrap().sentences()[0].clone();
    Value::Array(s.tokens().iter().map(|t| json!({"form": t.form(), "pos": t.pos()})).collect())
}

fn top_spans(forest: &[TreeNode]) -> Vec<(usize, usize)> {
    forest
        .iter()
        .filter_map(|n| match n {
            TreeNode::Phrase { start, end, .. } => Some((*start, *end)),
            TreeNode::Token { .. } => None,
        })
        .collect()
}

#[tokio::test]
async fn figure_sentence_gets_its_internal_structure() {
    let app = toy_app();
    let (status, body) = propose(&app, json!({"schema_version": 1, "tokens": tokens_of(FIGURE), "spans": [{"start": 0, "end": 6}]})).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let resp: ProposeResponse = serde_json::from_value(body).unwrap();
    // the model was trained on this very tree, so the proposal is the tree
    assert_eq!(resp.bracketed, FIGURE);
    assert_eq!(resp.repair_count, 0);
    let TreeNode::Phrase { label, children, .. } = &resp.forest[0] else { panic!("no phrase") };
    assert_eq!(label, "NP");
    let TreeNode::Phrase { label, children: ap, .. } = &children[1] else { panic!("no AP") };
    assert_eq!(label, "AP");
    let TreeNode::Phrase { label, children: pp, start, end } = &ap[0] else { panic!("no PP") };
    assert_eq!((label.as_str(), *start, *end), ("PP", 1, 4));
    assert!(matches!(&pp[1], TreeNode::Phrase { label, .. } if label == "MPN"));
    assert_eq!(resp.tags[4], "++|ADJA|AP|N");
    assert_eq!(resp.chunks.len(), 1);
    assert_eq!(resp.chunks[0].label, "NP");
    assert!(resp.chunks[0].log_prob.unwrap() <= 0.0);
}

#[tokio::test]
async fn no_spans_gives_a_bare_forest() {
    let app = toy_app();
    let (status, body) = propose(&app, json!({"tokens": tokens_of(FIGURE)})).await;
    assert_eq!(status, StatusCode::OK);
    let resp: ProposeResponse = serde_json::from_value(body).unwrap();
    assert_eq!(resp.forest.len(), 6);
    assert!(resp.forest.iter().all(|n| matches!(n, TreeNode::Token { .. })));
    assert_eq!(resp.bracketed, "ein/ART in/APPR Tel/NE Aviv/NE lebender/ADJA Maler/NN");
}

#[tokio::test]
async fn malformed_requests_are_rejected_with_400() {
    let app = toy_app();
    let toks = tokens_of(FIGURE);
    let bad = [
        json!({"tokens": toks, "spans": [{"start": 0, "end": 3}, {"start": 2, "end": 5}]}),
        json!({"tokens": toks, "spans": [{"start": 2, "end": 2}]}),
        json!({"tokens": toks, "spans": [{"start": 4, "end": 9}]}),
        json!({"tokens": [], "spans": []}),
        json!({"tokens": toks, "schema_version": 2}),
        json!({"tokens": [{"form": "a b", "pos": "ART"}]}),
        json!({"tokens": toks, "spans": [{"start": 0}]}),
        json!({"tokens": toks, "spans": [{"start": -1, "end": 2}]}),
        json!({"tokens": toks, "surprise": true}),
    ];
    for b in bad {
        let (status, body) = propose(&app, b.clone()).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{b}");
        assert_eq!(body["error"], "bad_request");
        assert_eq!(body["schema_version"], 1);
    }
    let (status, _) = call(&app, "POST", "/v1/propose", Some("{not json".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unknown_pos_is_422_only_when_rejecting() {
    let strict = app_for(&toy_corpus(), Dims::RTCG, UnknownPos::Reject);
    let toks = json!([{"form": "ein", "pos": "ART"}, {"form": "Ding", "pos": "XY"}]);
    let (status, body) = propose(&strict, json!({"tokens": toks, "spans": [{"start": 0, "end": 2}]})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "unknown_pos");

    let lenient = toy_app();
    let (status, _) = propose(&lenient, json!({"tokens": toks, "spans": [{"start": 0, "end": 2}]})).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = propose(&lenient, json!({"tokens": toks, "unknown_pos": "reject"})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, body) = propose(&strict, json!({"tokens": toks, "unknown_pos": "uniform"})).await;
    assert_eq!(status, StatusCode::OK);
    // the model was trained with an unknown symbol, which covers the word
    assert_eq!(body["uniform_positions"], json!([]));
    assert!(body["tags"][1].as_str().unwrap().contains("|UNK"), "{body}");
}

#[tokio::test]
async fn without_a_model_everything_but_health_is_503() {
    let app = router(AppState::new(None, UnknownPos::Unk));
    let (status, body) = propose(&app, json!({"tokens": tokens_of(FIGURE)})).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(body["error"], "no_model");
    let (status, _) = call(&app, "GET", "/v1/model", None).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    let (status, body) = call(&app, "GET", "/v1/health", None).await;
    assert_eq!(status, StatusCode::OK);
    let health: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(health["model_loaded"], false);
    assert_eq!(health["status"], "ok");
}

#[tokio::test]
async fn model_info_describes_the_model() {
    let app = toy_app();
    let (status, body) = call(&app, "GET", "/v1/model", None).await;
    assert_eq!(status, StatusCode::OK);
    let info: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(info["dims"], "rtcg");
    assert_eq!(info["depth"], 3);
    assert_eq!(info["order"], 3);
    assert_eq!(info["training_sentences"], 4);
    assert_eq!(info["schema_version"], 1);
    let l = &info["lambda"];
    let sum = l["unigram"].as_f64().unwrap() + l["bigram"].as_f64().unwrap() + l["trigram"].as_f64().unwrap();
    assert!((sum - 1.0).abs() < 1e-12);

    let corpus = grammar_corpus(&GrammarConfig { sentences: 300, ..GrammarConfig::default() }, 5);
    let r_only = app_for(&corpus, Dims::R, UnknownPos::Unk);
    let (_, body) = call(&r_only, "GET", "/v1/model", None).await;
    let info: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(info["dims"], "r");
    assert!(info["tagset_size"].as_u64().unwrap() <= 7);
}

/// Random non-overlapping spans over `n` tokens.
fn random_spans(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if rng.gen_bool(0.5) {
            let end = rng.gen_range(i + 1..=n.min(i + 6));
            out.push((i, end));
            i = end;
        } else {
            i += 1;
        }
    }
    out
}

#[tokio::test]
async fn responses_keep_boundaries_and_are_deterministic() {
    let corpus = grammar_corpus(&GrammarConfig { sentences: 400, ..GrammarConfig::default() }, 9);
    let app = app_for(&corpus, Dims::RTCG, UnknownPos::Unk);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for s in corpus.sentences().iter().take(150) {
        let spans = random_spans(&mut rng, s.len());
        let body = json!({
            "tokens": s.tokens().iter().map(|t| json!({"form": t.form(), "pos": t.pos()})).collect::<Vec<_>>(),
            "spans": spans.iter().map(|&(a, b)| json!({"start": a, "end": b})).collect::<Vec<_>>(),
        })
        .to_string();
        let (status, first) = call(&app, "POST", "/v1/propose", Some(body.clone())).await;
        assert_eq!(status, StatusCode::OK);
        let (_, second) = call(&app, "POST", "/v1/propose", Some(body)).await;
        assert_eq!(first, second);
        let resp: ProposeResponse = serde_json::from_slice(&first).unwrap();
        assert_eq!(top_spans(&resp.forest), spans);
        // the bracketed rendering agrees with the JSON tree
        let reparsed = parse_bracketed(&resp.bracketed).unwrap();
        let spans_text: Vec<(usize, usize)> = reparsed.sentences()[0].chunk_spans().iter().map(|r| (r.start, r.end)).collect();
        assert_eq!(spans_text, spans);
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_requests_match_sequential_ones() {
    let corpus = grammar_corpus(&GrammarConfig { sentences: 300, ..GrammarConfig::default() }, 2);
    let app = app_for(&corpus, Dims::RTC, UnknownPos::Unk);
    let bodies: Vec<String> = corpus
        .sentences()
        .iter()
        .take(40)
        .map(|s| {
            json!({
                "tokens": s.tokens().iter().map(|t| json!({"form": t.form(), "pos": t.pos()})).collect::<Vec<_>>(),
                "spans": s.chunk_spans().iter().map(|r| json!({"start": r.start, "end": r.end})).collect::<Vec<_>>(),
            })
            .to_string()
        })
        .collect();
    let mut expected = Vec::new();
    for b in &bodies {
        expected.push(call(&app, "POST", "/v1/propose", Some(b.clone())).await);
    }
    let handles: Vec<_> = bodies
        .iter()
        .cloned()
        .map(|b| {
            let app = app.clone();
            tokio::spawn(async move { call(&app, "POST", "/v1/propose", Some(b)).await })
        })
        .collect();
    for (h, e) in handles.into_iter().zip(expected) {
        assert_eq!(h.await.unwrap(), e);
    }
}
