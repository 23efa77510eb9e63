#![allow(dead_code)]

pub mod agree;
pub mod diff;
pub mod gen;
pub mod oracle;
pub mod props;
pub mod search;
