//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use reallot_core::domains::sample_profile;
use reallot_core::{DomainSpec, Instance, Profile};

/// `count` profiles drawn from `spec` with seeds `0..count`.
pub fn profiles(spec: &DomainSpec, count: u64) -> Vec<Profile> {
    let instance = Arc::new(Instance::standard(spec.n()).expect("n >= 3"));
    (0..count)
        .map(|seed| sample_profile(spec, &instance, seed).expect("valid spec"))
        .collect()
}
