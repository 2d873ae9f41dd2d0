//! HTTP front end for interactive chunking.
//!
//! `POST /v1/propose` takes POS-tagged tokens plus annotator-marked chunk
//! spans and returns the proposed structure inside each span. `GET /v1/model`
//! describes the loaded model and `GET /v1/health` reports liveness. The model
//! is loaded once and shared read-only by all requests.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chunktagger::chunker::{ChunkError, Mode, UnknownPosPolicy};
use chunktagger::{BoundarySpec, ChunkModel, Chunker, ChunkerConfig, Node, Token};
use serde::{Deserialize, Serialize};

/// Version stamped on every body; requests may name it and must then match.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnknownPos {
    Unk,
    Uniform,
    Reject,
}

impl From<UnknownPos> for UnknownPosPolicy {
    fn from(u: UnknownPos) -> Self {
        match u {
            UnknownPos::Unk => UnknownPosPolicy::Unk,
            UnknownPos::Uniform => UnknownPosPolicy::Uniform,
            UnknownPos::Reject => UnknownPosPolicy::Reject,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenIn {
    pub form: String,
    pub pos: String,
}

/// Half-open token range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposeRequest {
    #[serde(default)]
    pub schema_version: Option<u32>,
    pub tokens: Vec<TokenIn>,
    #[serde(default)]
    pub spans: Vec<Span>,
    /// Overrides the service's unknown-POS policy for this request.
    #[serde(default)]
    pub unknown_pos: Option<UnknownPos>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeNode {
    Phrase {
        label: String,
        start: usize,
        end: usize,
        children: Vec<TreeNode>,
    },
    Token {
        index: usize,
        form: String,
        pos: String,
        tag: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkOut {
    pub start: usize,
    pub end: usize,
    pub label: String,
    /// `null` when the chunk has probability zero.
    pub log_prob: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposeResponse {
    pub schema_version: u32,
    pub forest: Vec<TreeNode>,
    pub tags: Vec<String>,
    pub bracketed: String,
    pub repair_count: usize,
    pub log_prob: Option<f64>,
    pub chunks: Vec<ChunkOut>,
    /// Positions decoded with uniform emission because of an unknown POS.
    pub uniform_positions: Vec<usize>,
    /// Spans without a constrained analysis, returned as flat chunks.
    pub infeasible_spans: Vec<Span>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lambda {
    pub unigram: f64,
    pub bigram: f64,
    pub trigram: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub schema_version: u32,
    pub dims: String,
    pub depth: usize,
    pub order: usize,
    pub tagset_size: usize,
    pub pos_alphabet_size: usize,
    pub trained_with_unk: bool,
    pub training_sentences: usize,
    pub training_tokens: usize,
    pub lambda: Lambda,
    pub unknown_pos: UnknownPos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub schema_version: u32,
    pub status: String,
    pub model_loaded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub schema_version: u32,
    pub error: String,
    pub message: String,
}

/// An error response: status plus a JSON body.
#[derive(Debug)]
pub struct ApiError(StatusCode, &'static str, String);

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError(StatusCode::BAD_REQUEST, "bad_request", message.into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            schema_version: SCHEMA_VERSION,
            error: self.1.to_string(),
            message: self.2,
        };
        (self.0, Json(body)).into_response()
    }
}

fn no_model() -> ApiError {
    ApiError(StatusCode::SERVICE_UNAVAILABLE, "no_model", "no model is loaded".into())
}

/// Shared, immutable service state.
#[derive(Debug, Clone)]
pub struct AppState {
    chunker: Option<Arc<Chunker>>,
    unknown_pos: UnknownPos,
}

impl AppState {
    pub fn new(model: Option<ChunkModel>, unknown_pos: UnknownPos) -> Self {
        let chunker = model.map(|m| {
            let mut cfg = ChunkerConfig::new(m.scheme().clone());
            cfg.mode = Mode::Interactive;
            cfg.unknown_pos_policy = unknown_pos.into();
            Arc::new(Chunker::new(m, cfg))
        });
        AppState { chunker, unknown_pos }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/propose", post(propose))
        .route("/v1/model", get(model_info))
        .route("/v1/health", get(health))
        .with_state(state)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn tree(nodes: &[Node], tokens: &[Token], tags: &[String]) -> Vec<TreeNode> {
    nodes
        .iter()
        .map(|n| match n {
            Node::Leaf(i) => TreeNode::Token {
                index: *i,
                form: tokens[*i].form().to_string(),
                pos: tokens[*i].pos().to_string(),
                tag: tags[*i].clone(),
            },
            Node::Phrase(p) => {
                let span = p.span();
                TreeNode::Phrase {
                    label: p.label.clone(),
                    start: span.start,
                    end: span.end,
                    children: tree(&p.children, tokens, tags),
                }
            }
        })
        .collect()
}

/// The pure part of `/v1/propose`.
pub fn handle_propose(state: &AppState, req: ProposeRequest) -> Result<ProposeResponse, ApiError> {
    let chunker = state.chunker.as_ref().ok_or_else(no_model)?;
    if let Some(v) = req.schema_version {
        if v != SCHEMA_VERSION {
            return Err(ApiError::bad_request(format!("unsupported schema_version {v}")));
        }
    }
    if req.tokens.is_empty() {
        return Err(ApiError::bad_request("no tokens"));
    }
    let tokens = req
        .tokens
        .iter()
        .map(|t| Token::new(t.form.as_str(), t.pos.as_str()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    let spans = BoundarySpec::new(req.spans.iter().map(|s| s.start..s.end).collect(), tokens.len())
        .map_err(|e| ApiError::bad_request(e.to_string()))?;

    let override_chunker;
    let chunker: &Chunker = match req.unknown_pos {
        Some(u) if UnknownPosPolicy::from(u) != chunker.config().unknown_pos_policy => {
            let mut cfg = chunker.config().clone();
            cfg.unknown_pos_policy = u.into();
            override_chunker = Chunker::new(chunker.model().clone(), cfg);
            &override_chunker
        }
        _ => chunker,
    };

    let tagged = chunker.tag_interactive(&tokens, &spans).map_err(|e| match e {
        ChunkError::UnknownPos { .. } => ApiError(StatusCode::UNPROCESSABLE_ENTITY, "unknown_pos", e.to_string()),
        other => ApiError(StatusCode::INTERNAL_SERVER_ERROR, "internal", other.to_string()),
    })?;
    let tags: Vec<String> = tagged.tags.iter().map(|t| t.to_string()).collect();
    Ok(ProposeResponse {
        schema_version: SCHEMA_VERSION,
        forest: tree(tagged.sentence.forest(), tagged.sentence.tokens(), &tags),
        bracketed: tagged.sentence.to_string(),
        tags,
        repair_count: tagged.repairs,
        log_prob: finite(tagged.score),
        chunks: tagged
            .chunk_scores
            .iter()
            .map(|c| ChunkOut {
                start: c.span.start,
                end: c.span.end,
                label: c.label.clone(),
                log_prob: finite(c.log_prob),
            })
            .collect(),
        uniform_positions: tagged.uniform_positions,
        infeasible_spans: tagged
            .infeasible_spans
            .iter()
            .map(|r| Span { start: r.start, end: r.end })
            .collect(),
    })
}

/// The pure part of `/v1/model`.
pub fn handle_model_info(state: &AppState) -> Result<ModelInfo, ApiError> {
    let m = state.chunker.as_ref().ok_or_else(no_model)?.model();
    let w = m.weights();
    Ok(ModelInfo {
        schema_version: SCHEMA_VERSION,
        dims: m.scheme().dims.to_string(),
        depth: m.scheme().depth.levels(),
        order: m.order().number(),
        tagset_size: m.tagset_size(),
        pos_alphabet_size: m.pos_alphabet().len(),
        trained_with_unk: m.trained_with_unk(),
        training_sentences: m.training_sentences(),
        training_tokens: m.training_tokens(),
        lambda: Lambda {
            unigram: w.unigram,
            bigram: w.bigram,
            trigram: w.trigram,
        },
        unknown_pos: state.unknown_pos,
    })
}

async fn propose(State(state): State<AppState>, body: Result<Json<ProposeRequest>, JsonRejection>) -> Result<Json<ProposeResponse>, ApiError> {
    // malformed bodies are a client error whatever axum would have said
    let Json(req) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    handle_propose(&state, req).map(Json)
}

async fn model_info(State(state): State<AppState>) -> Result<Json<ModelInfo>, ApiError> {
    handle_model_info(&state).map(Json)
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    Json(Health {
        schema_version: SCHEMA_VERSION,
        status: "ok".into(),
        model_loaded: state.chunker.is_some(),
    })
}
