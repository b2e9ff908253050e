//! Acceptance criteria for `mg1-core`; run with `cargo test -p mg1-validation --test acceptance`.
