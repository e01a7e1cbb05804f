//! Reconstruction of reduced Landau-de Gennes material parameters from
//! observed nematic order-parameter fields.
//!
//! The forward problem -alpha Laplace(Q) + (|Q|^2 - beta) Q = 0 on the unit
//! square is discretized with P1 finite elements and solved by Newton's
//! method; the inverse problem samples the Bayesian posterior of (alpha,
//! beta) with a random-walk Metropolis-Hastings chain and post-processes it
//! with the usual convergence diagnostics (burn-in, autocovariance-based CLT
//! variance, Kolmogorov-Smirnov stationarity batches).

pub mod bayes;
pub mod experiments;
pub mod mcmc;
pub mod mesh;
pub mod model;
pub mod solver;
pub mod stats;
