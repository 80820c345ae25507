pub mod info_state;
pub mod nl_frontend;
pub mod plan_engine;
pub mod plan_library;
pub mod semantics;
pub mod service;
pub mod speech_acts;
pub mod syntax;
pub mod task_model;
