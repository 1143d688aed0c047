pub mod chebyshev;
pub mod cli;
pub mod error;
pub mod functional;
pub mod global;
pub mod instances;
pub mod local;
pub mod lp;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod regpath;
