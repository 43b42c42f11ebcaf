//! Command modules.

pub mod build_entity;
pub mod db;
pub mod fuse;
pub mod simulate;
pub mod train_g2g;
