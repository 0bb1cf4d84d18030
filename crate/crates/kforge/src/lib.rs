//! Desk-scale exact-arithmetic engine for the anticyclotomic Euler-system to
//! Kolyvagin-system pipeline.
//!
//! The crate computes first group cohomology of finitely presented finite
//! groups acting on free modules over `Z/p^N` (and finite free extensions),
//! realizes the finite / singular / transverse local conditions at Kolyvagin
//! primes together with the finite-singular isomorphism, packages the full
//! abstract key-formula data (group chains, local chains, the cocycles `x`,
//! `y` and the constants `M`, `M1`, `delta`, `d`), and runs Kolyvagin descent
//! on mock ring-class towers, verifying the K1/K2 compatibilities with the
//! twist automorphisms `theta_ell`.
//!
//! Everything is exact: the coefficient rings are `Z/p^N` with tracked
//! precision, canonical linear algebra is done in Howell form, and division
//! by powers of `p` lowers the precision instead of rounding.
//!
//! Entry points:
//! - [`coeff`]: rings, ring elements, matrices, Howell form, exact division.
//! - [`groups`]: finitely presented finite groups, `Tr` and `D` operators.
//! - [`cohom`]: cocycles, `H^1`, restriction/corestriction/inflation,
//!   Shapiro maps and semi-local localization.
//! - [`localmodel`]: finite models of local Galois groups at Kolyvagin
//!   primes, `alpha`/`beta` evaluation maps and the finite-singular map.
//! - [`keyformula`]: validated key-formula instances and the formula check.
//! - [`eulersys`]: mock towers, Euler-system axioms, Kolyvagin descent,
//!   K1/K2 verification and the Iwasawa-layer variant.
//! - [`sieve`]: the Kolyvagin/admissible prime sieve over coefficient data.
//! - [`cli`]: the batch front-end used by the `kforge` binary.

pub mod cli;
pub mod coeff;
pub mod cohom;
pub mod eulersys;
pub mod groups;
pub mod keyformula;
pub mod localmodel;
pub mod report;
pub mod sieve;
