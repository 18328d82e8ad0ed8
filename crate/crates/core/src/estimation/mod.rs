//! Estimating distortion constants between two metrics on the same points.

pub mod gh;
pub mod modulus;

pub use gh::{
    diameter_lower_bound, gh_bruteforce, gh_upper_identity, gh_via_common_net, identity_bound, CommonNetBound,
    GhBound, GhMethod, BRUTEFORCE_LIMIT,
};
pub use modulus::{
    bilipschitz_constant, dominance_front, fit_hoelder, fit_modulus, qs_quotients, quotient_front, verify_modulus,
    HoelderFit, ModulusCheck, ModulusFamily, ModulusFit, Quotient, QuotientSet, TripleSampling,
};
