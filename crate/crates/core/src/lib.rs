pub mod acceptance;
pub mod curves;
pub mod exact;
pub mod factory;
pub mod localmodel;
pub mod obstruction;
pub mod report;
