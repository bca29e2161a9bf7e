pub mod datasetkit;
pub mod evalkit;
pub mod expressive;
pub mod gmfix;
pub mod renderkit;
pub mod seed;
pub mod smf;
