//! Exact and asymptotic distribution of the chordal query complexity.

pub mod bell;
pub mod identities;
pub mod lambert;
pub mod moments;
pub mod pgf;
pub mod polynomial;
pub mod qanalog;

pub use bell::{bell, bell_numbers};
pub use identities::{verify_q_identities, IdentityCheck, QIdentityReport};
pub use lambert::{asymptotic_moments, lambert_w, AsymptoticMoments};
pub use moments::{exact_moments, ExactMoments};
pub use pgf::{pgf_closed_form_1, pgf_closed_form_1_exact, pgf_closed_form_2, pgf_polynomial, ClosedForm1};
pub use polynomial::{complexity_polynomial, ComplexityPolynomial};
pub use qanalog::{q_exp, q_factorial, q_int, q_pochhammer, q_pochhammer_inf};
