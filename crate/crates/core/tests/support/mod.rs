#![allow(dead_code)]

pub mod virasoro;
