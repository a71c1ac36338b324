//! Prompting generators and reading their answers.

mod client;
mod parse;
mod prompt;
mod replay;
mod synthetic;

pub use client::{query_endpoint, EndpointConfig};
pub use parse::{normalize_item, parse_response, GeneratorResponse, ParseStatus};
pub use prompt::{build_prompt, PromptBundle, SCENARIO_CLOSE_TAG, SCENARIO_OPEN_TAG};
pub use replay::{ReplayEntry, ReplayStore};
pub use synthetic::{synthetic_category, synthetic_generator, synthetic_template_count};
