//! Differentially private frequency sketches under continual observation.
//!
//! The crate provides:
//!
//! * [`binary_mechanism`]: the Gaussian binary-tree counter and its
//!   `n`-counter composition;
//! * [`sketch`]: non-private Count-Min / Count Sketch baselines and a
//!   CMS + min-heap heavy-hitter tracker;
//! * [`private_sketch`]: the punctual and lazy private sketches that release
//!   a noisy counter grid after every arrival;
//! * [`heavy_hitters`]: private heavy hitters over a lazy CMS;
//! * [`streamgen`] and [`bench`](mod@bench): synthetic/trace streams, exact oracles and
//!   the experiment harness behind the `codp` binary.
//!
//! ```
//! use codp_sketch::{LazySketch, PrivacyParams, SketchKind};
//!
//! let params = PrivacyParams::new(1.0, 1e-3).unwrap();
//! let mut sketch = LazySketch::new(SketchKind::Cms, 3, 64, 10_000, params, 42).unwrap();
//! for key in 0..10_000u64 {
//!     sketch.update(key % 10).unwrap();
//! }
//! let estimate = sketch.query(3);
//! assert!((estimate - 1000.0).abs() < 2000.0);
//! ```

pub mod bench;
pub mod binary_mechanism;
pub mod error;
pub mod hashing;
pub mod heavy_hitters;
pub mod noise;
pub mod private_sketch;
pub mod sketch;
pub mod streamgen;

pub use binary_mechanism::{GaussBm, GaussBmCounter, PrivateCounters, TreeNode};
pub use error::{Error, Result};
pub use heavy_hitters::{HhConfig, HhReport, LazyHeavyHitters};
pub use noise::{calibrate_sigma, GaussianSampler, NoiseScale, PrivacyParams};
pub use private_sketch::{LazySketch, PunctualSketch, ReleasedSketch, SketchSpec, Variant};
pub use sketch::{HeapHeavyHitters, PlainSketch, SketchKind};
