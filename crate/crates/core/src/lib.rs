// SPDX-License-Identifier: Apache-2.0

//! Porting SystemVerilog security assertions between RTL designs, injecting
//! rule-based hardware Trojans, and measuring how many the ported assertions
//! catch.

pub mod expr;
pub mod lexer;
pub mod rtl;
pub mod sva;
pub mod graph;
pub mod sim;
pub mod rng;
pub mod translate;
pub mod trojan;
pub mod metrics;
pub mod campaign;
