//! Entity resolution across two entity types: television shows taken from
//! an electronic program guide and social-network fanpages.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! 1. [`epg`] parses XMLTV listings and aggregates them into unique shows.
//! 2. [`pages`] loads fanpage fixtures and performs blocking with a capped
//!    top-k search.
//! 3. [`features`] computes the twelve hook features for a show/page pair.
//! 4. [`score`] and [`learners`] turn feature vectors into match decisions.
//! 5. [`evaluation`] runs stratified cross-validation and reports
//!    precision, recall and F-measure.
//! 6. [`graph`] keeps the bipartite show/page graph, derives page
//!    coreference edges, and selects pages for each show.

pub mod epg;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod graph;
pub mod learners;
pub mod pages;
pub mod score;

pub use epg::{EpgRecord, Show, ShowKey};
pub use error::{Error, Result};
pub use evaluation::{EvalReport, GoldLabel, Mode};
pub use features::{ChannelDirectory, EngagementMaxima, FeatureVector};
pub use graph::{BipartiteGraph, CoreferenceEdge};
pub use learners::{CostMatrix, Dataset, LearnerSpec, Model, ModelKind};
pub use pages::{CandidateEdge, FanPage, PageStore, SearchIndex, SearchProvider};
pub use score::ScoreConfig;
