//! Runtime trade-off search for λ-conditioned offline RL policies.
//!
//! A trained policy `π(s, λ)` exposes one knob: λ in `[0, 1]` interpolates
//! between imitating the behavioral policy (λ = 0) and maximizing the
//! pessimistic model return (λ = 1). This crate searches that knob at
//! deployment time and scores the search:
//!
//! - [`landscape`]: black-box `λ → return` targets and the brute-force oracle.
//! - [`lion`]: a small end-to-end pipeline that trains real λ-conditioned
//!   policies on a toy control task.
//! - [`search`]: seven search strategies behind one ask/tell protocol.
//! - [`metrics`]: final return, return under budget and the two regrets.
//! - [`harness`]: batch experiments, sweeps and reports.

pub mod harness;
pub mod landscape;
pub mod lion;
pub mod metrics;
pub mod rng;
pub mod search;
