pub mod agent;
pub mod dataset;
pub mod dist;
pub mod experiment;
pub mod metrics;
pub mod sim;
pub mod svm;
pub mod wsn;
