//! Representation of primes by positive definite integral quadratic forms.

pub mod audit;
pub mod escalate;
pub mod forms;
pub mod goodvec;
mod lattice;
pub mod local;
pub mod primes;
pub mod reference;
pub mod prooflib;
pub mod sieve;

pub use forms::{parse_form, DiagonalForm, Form, FormError, FormValue, GramForm};
pub use sieve::{build_sieve, represents_direct, ExcludedFamily, RepresentationSieve, SieveError};
