//! Holds the `acceptance` test target, which runs every acceptance criterion
//! at full scale and prints one PASS/FAIL line per criterion:
//!
//! ```text
//! cargo test -p acluster-verify --test acceptance
//! cargo test -p acluster-verify --test acceptance -- theorem4
//! ```
//!
//! It lives in its own package so that it runs after the unit and
//! integration tests of every other package in a workspace test run.
