//! Batch CSV ingestion, persisted state and decision tables.

pub mod batch;
pub mod state;
pub mod table;

pub use batch::{ingest_batch, match_batch, read_batch, BatchTable};
pub use state::{decode_state, encode_state, load_state, save_state, StateLock, TestState, STATE_VERSION};
pub use table::{decision_matrix, render_decision_table, Cell};
