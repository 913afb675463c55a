//! Vectorial Boolean functions, hidden sums and a toy translation-based cipher.

pub mod boolean_space;
pub mod corpus;
pub mod hidden_sum;
pub mod reproduce;
pub mod toy_cipher;
pub mod trapdoor;
pub mod vbf;
