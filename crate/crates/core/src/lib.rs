//! Streaming postpartum-depression screening core.
//!
//! Questionnaire records are one-hot encoded, filtered by a variance
//! threshold learned on a cold-start prefix, and scored prequentially by
//! incremental classifiers. Counterfactual explanations and the dialogue
//! state machine live here too. Everything is `no_std` + `alloc`; file
//! formats, network and the CLI are in the `ppd` crate.

#![no_std]

extern crate alloc;

pub mod dialogue;
pub mod eval;
pub mod explain;
pub mod features;
pub mod learners;
pub mod record;
