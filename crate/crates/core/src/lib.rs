//! Dyadic harmonic analysis on sampled grids: the Walsh–Paley system and
//! its fast transform, dyadic martingale transforms and weighted
//! Walsh–Carleson maximal operators, Walsh–Fourier summability means, weight
//! conditions near the top dyadic scale, and block constructions that
//! witness divergence.

pub mod error;
pub mod experiment;
pub mod grid;
pub mod index;
pub mod martingale;
pub mod random;
pub mod sequence;
pub mod summability;
pub mod transform;
pub mod walsh;
pub mod weights;
pub mod witness;

pub use error::{Error, Result};
pub use grid::{resolution_cap, set_resolution_cap, DyadicGrid, Norms};
pub use index::WalshIndex;
pub use martingale::{
    carleson_kernel, carleson_max, cond_exp, doob_max, h1_norm, mdiff, mtransform, square_function,
    IndexSet, TransformResult,
};
pub use summability::{make_matrix, MatrixFamily, SummabilityMatrix, TailSums};
pub use transform::{fwht, inverse_fwht, xor_convolve, SpectrumVector};
pub use walsh::{dirichlet, fejer, fejer_sum, partial_sum, rademacher, walsh, Kernel, KernelGrid};
pub use weights::{ConeSpec, OmegaRule, OrderSampler, WeightFamily};
pub use witness::{
    choose_n, e_a_member, f0_demo, lemma1_scale, lemma2_poly, witness_eval, witness_poly, BlockParams, DyadicSet,
    F0Schedule, GammaRule, WitnessReport,
};
