//! Python bindings: training, tagging, encoding and the evaluation protocols.
//!
//! Treebanks travel as bracketed text, tokens as `(form, pos)` tuples and
//! spans as `(start, end)` tuples with `end` exclusive.

use std::collections::BTreeMap;

use chunktagger::chunker::{Attachment, Mode, UnknownPosPolicy};
use chunktagger::corpus::{parse_bracketed, parse_sentence, Token};
use chunktagger::encoding::{decode_tags, encode_sentence, Depth, StructuralTag};
use chunktagger::eval::{cross_validate as run_cross_validation, evaluate as run_evaluation, learning_curve as run_learning_curve};
use chunktagger::model::{Order, TagId};
use chunktagger::synth::{grammar_corpus, GrammarConfig};
use chunktagger::{BoundarySpec, ChunkModel, Chunker, ChunkerConfig, EncodingScheme, EvalReport};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn scheme(dims: &str, depth: usize) -> PyResult<EncodingScheme> {
    let depth = Depth::from_levels(depth).ok_or_else(|| value_err(format!("depth must be 2 or 3, got {depth}")))?;
    Ok(EncodingScheme::new(dims.parse().map_err(value_err)?, depth))
}

fn policy(name: &str) -> PyResult<UnknownPosPolicy> {
    match name {
        "unk" => Ok(UnknownPosPolicy::Unk),
        "uniform" => Ok(UnknownPosPolicy::Uniform),
        "reject" => Ok(UnknownPosPolicy::Reject),
        _ => Err(value_err(format!("unknown_pos must be unk, uniform or reject, got `{name}`"))),
    }
}

fn mode(name: &str) -> PyResult<Mode> {
    match name {
        "standalone" => Ok(Mode::Standalone),
        "interactive" => Ok(Mode::Interactive),
        _ => Err(value_err(format!("mode must be standalone or interactive, got `{name}`"))),
    }
}

/// Settings shared by training and the evaluation protocols.
#[allow(clippy::too_many_arguments)]
fn config(dims: &str, depth: usize, order: usize, no_attach: bool, unknown_pos: &str, mode_name: &str, focus_adverbs: Vec<String>) -> PyResult<ChunkerConfig> {
    let mut cfg = ChunkerConfig::new(scheme(dims, depth)?);
    cfg.order = Order::from_number(order).ok_or_else(|| value_err(format!("order must be 1, 2 or 3, got {order}")))?;
    cfg.unknown_pos_policy = policy(unknown_pos)?;
    cfg.mode = mode(mode_name)?;
    if no_attach {
        cfg.attachment = Attachment::Stripped;
    }
    cfg.strip.focus_adverbs = focus_adverbs;
    Ok(cfg)
}

fn tokens(pairs: Vec<(String, String)>) -> PyResult<Vec<Token>> {
    pairs.into_iter().map(|(f, p)| Token::new(f, p).map_err(value_err)).collect()
}

/// An evaluation report as a Python dict.
type Report = BTreeMap<String, f64>;

fn report_dict(r: &EvalReport) -> Report {
    [
        ("tag_accuracy", r.tag_accuracy),
        ("bracketing_precision", r.bracketing_precision),
        ("bracketing_recall", r.bracketing_recall),
        ("labelled_precision", r.labelled_precision),
        ("labelled_recall", r.labelled_recall),
        ("top_level_precision", r.top_level_precision),
        ("top_level_recall", r.top_level_recall),
        ("boundary_accuracy", r.boundary_accuracy),
        ("repair_count", r.repair_count as f64),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Result of tagging one sentence.
#[pyclass(frozen, name = "Tagged", module = "chunktagger_py")]
pub struct PyTagged {
    /// The analysis in bracketed notation.
    #[pyo3(get)]
    pub bracketed: String,
    #[pyo3(get)]
    pub tags: Vec<String>,
    #[pyo3(get)]
    pub repairs: usize,
    #[pyo3(get)]
    pub log_prob: f64,
    /// `(start, end, label, log_prob)` per top-level chunk.
    #[pyo3(get)]
    pub chunks: Vec<(usize, usize, String, f64)>,
    #[pyo3(get)]
    pub uniform_positions: Vec<usize>,
    #[pyo3(get)]
    pub infeasible_spans: Vec<(usize, usize)>,
}

#[pymethods]
impl PyTagged {
    fn __repr__(&self) -> String {
        format!("Tagged({:?}, repairs={})", self.bracketed, self.repairs)
    }
}

/// A trained model with the settings used to apply it.
#[pyclass(frozen, name = "Model", module = "chunktagger_py")]
pub struct PyModel {
    chunker: Chunker,
}

impl PyModel {
    fn wrap(model: ChunkModel) -> Self {
        let cfg = ChunkerConfig::new(model.scheme().clone());
        PyModel {
            chunker: Chunker::new(model, cfg),
        }
    }

    fn with_policy(&self, unknown_pos: Option<&str>) -> PyResult<Option<Chunker>> {
        let Some(name) = unknown_pos else { return Ok(None) };
        let mut cfg = self.chunker.config().clone();
        cfg.unknown_pos_policy = policy(name)?;
        Ok(Some(Chunker::new(self.chunker.model().clone(), cfg)))
    }
}

#[pymethods]
impl PyModel {
    /// Trains on a bracketed treebank.
    #[staticmethod]
    #[pyo3(signature = (treebank, dims = "rtcg", depth = 3, order = 3, no_attach = false, unknown_pos = "unk", focus_adverbs = Vec::new()))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        treebank: &str,
        dims: &str,
        depth: usize,
        order: usize,
        no_attach: bool,
        unknown_pos: &str,
        focus_adverbs: Vec<String>,
    ) -> PyResult<Self> {
        let cfg = config(dims, depth, order, no_attach, unknown_pos, "standalone", focus_adverbs)?;
        let tb = parse_bracketed(treebank).map_err(value_err)?;
        let chunker = py.detach(|| Chunker::train(&tb, cfg)).map_err(value_err)?;
        Ok(PyModel { chunker })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        ChunkModel::from_text(text).map(PyModel::wrap).map_err(value_err)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| value_err(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    fn to_text(&self) -> String {
        self.chunker.model().to_text()
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        std::fs::write(&path, self.to_text()).map_err(|e| value_err(format!("{}: {e}", path.display())))
    }

    #[getter]
    fn dims(&self) -> String {
        self.chunker.model().scheme().dims.to_string()
    }

    #[getter]
    fn depth(&self) -> usize {
        self.chunker.model().scheme().depth.levels()
    }

    #[getter]
    fn order(&self) -> usize {
        self.chunker.model().order().number()
    }

    #[getter]
    fn tagset_size(&self) -> usize {
        self.chunker.model().tagset_size()
    }

    /// Interpolation weights `(unigram, bigram, trigram)`.
    #[getter]
    fn lambdas(&self) -> (f64, f64, f64) {
        let w = self.chunker.model().weights();
        (w.unigram, w.bigram, w.trigram)
    }

    #[getter]
    fn training_sentences(&self) -> usize {
        self.chunker.model().training_sentences()
    }

    /// The tag alphabet; a tag's id is its index plus one, 0 being the
    /// sentence boundary.
    fn tags(&self) -> Vec<String> {
        self.chunker.model().alphabet().iter().map(|t| t.to_string()).collect()
    }

    /// P(tag | prev2, prev1) over tag ids.
    fn transition_prob(&self, prev2: TagId, prev1: TagId, tag: TagId) -> PyResult<f64> {
        self.chunker.model().transition_prob(prev2, prev1, tag).map_err(value_err)
    }

    /// Chunks one sentence. With `spans` the annotator's chunk boundaries are
    /// kept and only structure and labels are proposed.
    #[pyo3(signature = (tokens, spans = None, unknown_pos = None))]
    fn tag(&self, py: Python<'_>, tokens: Vec<(String, String)>, spans: Option<Vec<(usize, usize)>>, unknown_pos: Option<&str>) -> PyResult<PyTagged> {
        let toks = self::tokens(tokens)?;
        let boundaries = spans
            .map(|s| BoundarySpec::new(s.into_iter().map(|(a, b)| a..b).collect(), toks.len()))
            .transpose()
            .map_err(value_err)?;
        let custom = self.with_policy(unknown_pos)?;
        let chunker = custom.as_ref().unwrap_or(&self.chunker);
        let t = py.detach(|| chunker.tag(&toks, boundaries.as_ref())).map_err(value_err)?;
        Ok(PyTagged {
            bracketed: t.sentence.to_string(),
            tags: t.tags.iter().map(|x| x.to_string()).collect(),
            repairs: t.repairs,
            log_prob: t.score,
            chunks: t.chunk_scores.iter().map(|c| (c.span.start, c.span.end, c.label.clone(), c.log_prob)).collect(),
            uniform_positions: t.uniform_positions,
            infeasible_spans: t.infeasible_spans.iter().map(|r| (r.start, r.end)).collect(),
        })
    }

    /// Scores the model on a bracketed gold treebank.
    #[pyo3(signature = (gold, mode = "standalone", no_attach = false, focus_adverbs = Vec::new()))]
    fn evaluate(&self, py: Python<'_>, gold: &str, mode: &str, no_attach: bool, focus_adverbs: Vec<String>) -> PyResult<Report> {
        let tb = parse_bracketed(gold).map_err(value_err)?;
        let mut cfg = self.chunker.config().clone();
        cfg.mode = self::mode(mode)?;
        cfg.attachment = if no_attach { Attachment::Stripped } else { Attachment::Full };
        cfg.strip.focus_adverbs = focus_adverbs;
        let chunker = Chunker::new(self.chunker.model().clone(), cfg);
        let report = py.detach(|| run_evaluation(&chunker, &tb)).map_err(value_err)?;
        Ok(report_dict(&report))
    }

    fn __repr__(&self) -> String {
        format!("Model(dims={:?}, depth={}, order={}, tags={})", self.dims(), self.depth(), self.order(), self.tagset_size())
    }
}

/// Structural tags of one bracketed sentence.
#[pyfunction]
#[pyo3(signature = (sentence, dims = "rtcg", depth = 3))]
fn encode(sentence: &str, dims: &str, depth: usize) -> PyResult<Vec<String>> {
    let scheme = scheme(dims, depth)?;
    let s = parse_sentence(sentence).map_err(value_err)?;
    Ok(encode_sentence(&s, &scheme).map_err(value_err)?.iter().map(|t| t.to_string()).collect())
}

/// Rebuilds a bracketed sentence from tokens and tags; returns it with the
/// number of repairs needed.
#[pyfunction]
#[pyo3(signature = (tokens, tags, dims = "rtcg", depth = 3))]
fn decode(tokens: Vec<(String, String)>, tags: Vec<String>, dims: &str, depth: usize) -> PyResult<(String, usize)> {
    let scheme = scheme(dims, depth)?;
    let tags = tags
        .iter()
        .map(|t| StructuralTag::parse(t, scheme.dims).map_err(value_err))
        .collect::<PyResult<Vec<_>>>()?;
    let d = decode_tags(&self::tokens(tokens)?, &tags, &scheme).map_err(value_err)?;
    Ok((d.sentence.to_string(), d.repairs))
}

/// Shuffled k-fold cross-validation; returns the per-fold reports and their
/// unweighted mean.
#[pyfunction]
#[pyo3(signature = (treebank, folds = 10, seed = 1, dims = "rtcg", depth = 3, order = 3, no_attach = false, mode = "standalone"))]
#[allow(clippy::too_many_arguments)]
fn cross_validate(
    py: Python<'_>,
    treebank: &str,
    folds: usize,
    seed: u64,
    dims: &str,
    depth: usize,
    order: usize,
    no_attach: bool,
    mode: &str,
) -> PyResult<(Vec<Report>, Report)> {
    let cfg = config(dims, depth, order, no_attach, "unk", mode, Vec::new())?;
    let tb = parse_bracketed(treebank).map_err(value_err)?;
    let cv = py.detach(|| run_cross_validation(&tb, &cfg, folds, seed)).map_err(value_err)?;
    Ok((cv.folds.iter().map(report_dict).collect(), report_dict(&cv.mean)))
}

/// Held-out reports for each training-set size.
#[pyfunction]
#[pyo3(signature = (treebank, sizes, seed = 1, dims = "rtcg", depth = 3, order = 3, no_attach = false, mode = "standalone"))]
#[allow(clippy::too_many_arguments)]
fn learning_curve(
    py: Python<'_>,
    treebank: &str,
    sizes: Vec<usize>,
    seed: u64,
    dims: &str,
    depth: usize,
    order: usize,
    no_attach: bool,
    mode: &str,
) -> PyResult<Vec<(usize, Report)>> {
    let cfg = config(dims, depth, order, no_attach, "unk", mode, Vec::new())?;
    let tb = parse_bracketed(treebank).map_err(value_err)?;
    let lc = py.detach(|| run_learning_curve(&tb, &cfg, &sizes, seed)).map_err(value_err)?;
    Ok(lc.points.iter().map(|(n, r)| (*n, report_dict(r))).collect())
}

/// A seeded synthetic treebank in bracketed notation.
#[pyfunction]
#[pyo3(signature = (sentences = 2000, seed = 0))]
fn synthetic_corpus(sentences: usize, seed: u64) -> String {
    grammar_corpus(&GrammarConfig { sentences, ..GrammarConfig::default() }, seed).to_bracketed()
}

#[pymodule]
fn chunktagger_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyTagged>()?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    m.add_function(wrap_pyfunction!(learning_curve, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_corpus, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    #[test]
    fn module_round_trip_through_the_interpreter() {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "chunktagger_py").unwrap();
            chunktagger_py(&m).unwrap();
            let globals = pyo3::types::PyDict::new(py);
            globals.set_item("ct", m).unwrap();
            let code = CString::new(
                r#"
fig = "(NP ein/ART (AP (PP in/APPR (MPN Tel/NE Aviv/NE)) lebender/ADJA) Maler/NN)"
tags = ct.encode(fig)
assert tags[4] == "++|ADJA|AP|N", tags
toks = [("ein", "ART"), ("in", "APPR"), ("Tel", "NE"), ("Aviv", "NE"), ("lebender", "ADJA"), ("Maler", "NN")]
assert ct.decode(toks, tags) == (fig, 0)
m = ct.Model.train(fig + "\n" + fig + "\n", dims="rtcg")
assert m.tag(toks, spans=[(0, 6)]).bracketed == fig
assert ct.Model.from_text(m.to_text()).tags() == m.tags()
try:
    ct.Model.train(fig, depth=5)
    raise AssertionError("depth 5 accepted")
except ValueError:
    pass
"#,
            )
            .unwrap();
            py.run(&code, Some(&globals), None).unwrap();
        });
    }
}
