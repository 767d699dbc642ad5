//! Semantic networks of speeches.
//!
//! A yearly corpus of speeches is reduced to per-document topic prevalences,
//! pairs of speakers are linked when their prevalences share enough
//! information, and the resulting networks are measured and partitioned
//! into communities with the map equation.
//!
//! ```
//! use semnet::graph::{Graph, density};
//!
//! let mut g = Graph::new(vec!["A".into(), "B".into(), "C".into()]).unwrap();
//! g.add_edge(0, 1, 0.9).unwrap();
//! assert!((density(&g).unwrap() - 1.0 / 3.0).abs() < 1e-12);
//! ```

pub mod corpus;
pub mod error;
pub mod graph;
pub mod infomap;
pub mod infomet;
pub mod pipeline;
pub mod topics;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/topics.md")]
    mod topics {}
    #[doc = include_str!("../../../book/src/nmi.md")]
    mod nmi {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/map-equation.md")]
    mod map_equation {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
