use serde::{Deserialize, Serialize};

use crate::scenario::{render_table, GroupScenario};

pub const SCENARIO_OPEN_TAG: &str = "<group_scenario>";
pub const SCENARIO_CLOSE_TAG: &str = "</group_scenario>";

const GOAL: &str = "You are an expert in making and explaining group recommendations based on the knowledge base provided below.";
const FORMAT: &str = "The information includes users (user_id) and information on items they like (item_x). The rating is a scale from 0 to 100. When referring to items, use item_value.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_text: String,
    pub scenario_block: String,
    pub format_instructions: String,
    pub full_text: String,
}

fn format_instructions(k: usize) -> String {
    format!(
        "Recommend the top {k} items for the whole group. Provide an explanation and example of your \
         recommendation procedure, which someone with no knowledge of recommender systems could understand. \
         Only return a JSON object containing the 'recommendation' (top {k} item list) and 'explanation' keys, \
         for example: {{\"recommendation\": [\"item_1\", \"item_2\"], \"explanation\": \"...\"}}"
    )
}

pub fn build_prompt(scenario: &GroupScenario, k: usize) -> PromptBundle {
    let system_text = format!("{GOAL}\n{FORMAT}");
    let scenario_block = format!("{SCENARIO_OPEN_TAG}\n{}{SCENARIO_CLOSE_TAG}", render_table(scenario));
    let format_instructions = format_instructions(k);
    let full_text = format!("{system_text}\n\n{scenario_block}\n\n{format_instructions}");
    PromptBundle { system_text, scenario_block, format_instructions, full_text }
}
