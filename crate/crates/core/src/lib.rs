//! A chunk tagger: recognises the boundaries, internal structure and
//! category of depth-limited phrases (NPs, PPs, APs) in POS-tagged text.
//!
//! Trees are turned into per-word *structural tags* (the relation between a
//! word's parent chain and its left neighbour's, optionally enriched with the
//! POS tag, the parent category and a grandparent flag). A second-order
//! Markov model over those tags is trained from a treebank and decoded with
//! Viterbi, either freely (stand-alone mode) or with annotator-supplied chunk
//! boundaries (interactive mode).
//!
//! ```
//! use chunktagger::corpus::parse_bracketed;
//! use chunktagger::encoding::{encode_sentence, EncodingScheme};
//!
//! let tb = parse_bracketed(
//!     "(NP ein/ART (AP (PP in/APPR (MPN Tel/NE Aviv/NE)) lebender/ADJA) Maler/NN)",
//! )
//! .unwrap();
//! let scheme: EncodingScheme = "rtcg".parse().unwrap();
//! let tags = encode_sentence(&tb.sentences()[0], &scheme).unwrap();
//! assert_eq!(tags[3].to_string(), "0|NE|MPN|N");
//! assert_eq!(tags[4].to_string(), "++|ADJA|AP|N");
//! ```

pub mod chunker;
pub mod corpus;
pub mod encoding;
pub mod eval;
pub mod model;
pub mod synth;

pub use chunker::{BoundarySpec, Chunker, ChunkerConfig, Tagged};
pub use corpus::{Node, Phrase, Sentence, Token, Treebank};
pub use encoding::{EncodingScheme, Relation, StructuralTag};
pub use eval::EvalReport;
pub use model::ChunkModel;

