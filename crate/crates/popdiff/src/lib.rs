//! Popular differences for three-term arithmetic progressions.
//!
//! A function `f: G -> [0, 1]` of mean `α` has a popular difference `d != 0` when
//! `E_x f(x) f(x+d) f(x+2d) >= α³ - ε`. This crate computes per-difference densities
//! exactly, builds functions and sets where no difference is popular, and runs the
//! Bohr-set density-increment search that finds one.
//!
//! | module | contents |
//! |---|---|
//! | [`group`] | domains, DFT, total and per-difference 3-AP densities |
//! | [`model`] | the five-frequency model function `g_α` and smoothness checks |
//! | [`product`] | multi-level random modification on `Z_{m_1} × ... × Z_{m_s}` |
//! | [`behrend`] | progression-free sets and low-AP-density subsets of `Z_n` |
//! | [`interval`] | transfer to `[1, N]` and random sampling of a set |
//! | [`bohr`] | Bohr sets, regularity, the inequality suite and the upper search |
//! | [`io`], [`cli`] | JSON/CSV artifacts and the `popdiff` command line |
//!
//! Examples, each runnable with `cargo run --release --example <name>`:
//!
//! - `model_function`: spectrum and moments of `g_α`
//! - `oracle_scan`: spectral identity against the triple loop, sparse against dense profiles
//! - `product_construction`: the certified product construction with its level log
//! - `behrend_sets`: `r_3(N)` by search, the digit construction, low-AP subsets
//! - `interval_construction`: `[1, N]` construction and sampled set
//! - `bohr_inequalities`: regular Bohr sets and the inequality suite
//! - `upper_search`: increment search against brute force
//! - `cli_pipeline`: construct, scan and verify through [`cli::run`]
//!
//! ```
//! use popdiff::group::{total_3ap_density, ap_profile, Norm};
//! use popdiff::model::build_model_fn;
//!
//! let g = build_model_fn(0.25, 101).unwrap();
//! let lambda = total_3ap_density(&g.values).unwrap();
//! assert!((lambda - 31.0 / 32.0 * 0.25f64.powi(3)).abs() < 1e-12);
//! let (d, _) = ap_profile(&g.values, Norm::Group).unwrap().max_nonzero().unwrap();
//! assert_eq!(d, 1);
//! ```

pub mod error;
pub mod group;
pub mod model;
pub mod product;
pub mod behrend;
pub mod interval;
pub mod bohr;
pub mod io;
pub mod cli;

pub use error::{Error, Result};
