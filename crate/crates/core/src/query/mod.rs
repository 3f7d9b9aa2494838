//! Operation-chain queries over the scene graph: instruction grammar,
//! chain wire format, executor, relaxation and target retrieval.

mod chain;
mod exec;
mod grammar;
mod retrieve;

pub use chain::{
    compile_chain, parse_chain, relax_chain, AttributeKey, Method, Op, OpChain, QueryOp,
    MAX_RELAX_LEVEL,
};
pub use exec::{execute_chain, QueryResult, TraceRecord};
pub use grammar::{parse_instruction, render_instruction};
pub use retrieve::{
    retrieve_target, retrieve_target_with, select_best, target_confirmed, Retrieval, MAX_TRIAL,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error("operation chain is empty")]
    EmptyChain,
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("{method}: bad arity: {message}")]
    BadArity { method: String, message: String },
    #[error("{method}: invalid argument: {message}")]
    InvalidArgument { method: String, message: String },
    #[error("chain must start with a name lookup or a graph-wide scan, got `{0}`")]
    NotSourceOp(String),
    #[error("malformed chain document: {0}")]
    Malformed(String),
    #[error("goal cannot be compiled: {0}")]
    InvalidGoal(String),
    #[error("relaxation level {0} out of range 1..=3")]
    RelaxLevel(usize),
    #[error("instruction parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("unknown landmark `{name}` at byte {position}")]
    UnknownLandmark { position: usize, name: String },
}
