//! Estimate-verification functionals evaluated on discrete solutions.

pub mod holder;
