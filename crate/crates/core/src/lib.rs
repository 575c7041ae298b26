//! Mean-field game of botnet defense: a population of agents, each either
//! infected (`I`) or susceptible (`S`) and running one of `d` protection
//! strategies, moves between strategies at rate `λ` to minimise a
//! discounted cost, while a botnet herder and infected peers drive
//! infection and agents recover on their own.
//!
//! States are ordered `(1I, 1S, 2I, 2S, …)` everywhere, in memory and in
//! output files; strategies are 0-based in the API and 1-based in configs,
//! labels and file headers.
//!
//! * [`model`] — parameters, the kinetic (population) field, the HJB
//!   (value) field and best responses.
//! * [`stationary`] — the `Single(i)` and `Mixed(i,k)` candidates: fixed
//!   points, spectra, exact and large-λ values, consistency margins, and
//!   enumeration of all equilibria.
//! * [`dynamics`] — RK4 forward/backward integration and the finite-horizon
//!   turnpike around a `Single(i)` equilibrium.
//! * [`finite_n`] — Gillespie simulation of the `N`-agent chain and its
//!   distance to the mean-field path.
//! * [`config`], [`run`] — JSON scenarios and the files a run writes.
//!
//! Each capability has a runnable example under `examples/`.

pub mod config;
pub mod dynamics;
pub mod finite_n;
pub mod model;
pub mod run;
pub mod stationary;
