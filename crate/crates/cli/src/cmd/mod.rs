pub mod augment;
pub mod evaluate;
pub mod report;
pub mod simulate;
pub mod train;
