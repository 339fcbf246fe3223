//! Spectral localizer for a non-Hermitian generator `A` and a diagonal
//! position operator `X`:
//!
//! `L(x₀, λ₀) = Re(A − λ₀) ⊗ σx + Im(A − λ₀) ⊗ σy + κ (X − x₀) ⊗ σz`
//!
//! with `Re(B) = (B + B†)/2` and `Im(B) = (B − B†)/2i`. The local index is
//! half the signature of `L` and the localizer gap is its smallest singular
//! value.

mod hatano_nelson;
mod probe;
mod sweep;

pub use hatano_nelson::{bloch_winding, hatano_nelson, hatano_nelson_positions, BLOCH_SAMPLES};
pub use probe::{
    alt_localizer_index, build_alt_localizer, build_localizer, local_index, signature, LocalizerOptions,
    LocalizerProbe, LocalizerSample, PositionSuperoperator, DEFAULT_KAPPA, DEFAULT_ZERO_TOL_REL,
};
pub use sweep::{
    default_kappa_list, default_plane_grid, default_position_grid, extract_islands, sweep_kappa, sweep_position,
    sweep_spectral, Adjacency, ComplexGrid, Island, KappaStability, KappaSweep, SweepAxis, SweepResult,
};
