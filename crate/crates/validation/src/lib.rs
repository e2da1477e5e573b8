//! Holds the `acceptance` test target; run it with
//! `cargo test -p superradiance-validation --test acceptance`.
