//! Multicolor box-ball system through path encodings and Pitman transforms.

#![allow(non_snake_case)]

pub mod carrier;
pub mod classify;
pub mod continuum;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod pitman;
pub mod random;
pub mod rng;
pub mod simplex;
pub mod stats;

pub use carrier::{apply_Ti_direct, carrier_from_heights, run_carrier, CarrierTrace};
pub use dynamics::{
    apply_Ti, apply_Ti_inverse, apply_word, apply_word_config, cross_height_check, parse_word,
    Letter, Route,
};
pub use error::{BbsError, Result};
pub use lattice::{
    decode, encode, height, height_via_projection, permute_zero_i, Boundary, Configuration,
    PathEncoding, Symbol,
};
pub use pitman::{
    in_domain, pitman_alpha, pitman_inverse, pitman_one_sided, pitman_two_sided, Decision,
    Direction, DomainSet, ScalarPath, Tail, VectorPath, VectorTail,
};
pub use simplex::{build_simplex_basis, SimplexBasis};
