pub mod calculus;
pub mod cli;
pub mod cohomology;
pub mod configspace;
pub mod decomposition;
pub mod error;
pub mod interaction;
pub mod linalg;
pub mod locale;
pub mod rational;
