//! Prompt templates shipped with the crate.
//!
//! Judge templates use the placeholders `{question}`, `{correct_answers}`,
//! `{incorrect_answers}`, `{candidate_answer}` / `{answer}`; generation
//! templates use `{examples}` and `{input}` (MBPP: `{task_description}`,
//! `{test_cases}`).

/// Truthfulness judge: expects a JSON object with a Correct/Wrong verdict.
pub const JUDGE_TRUTHFULNESS: &str = include_str!("../assets/judge_truthfulness.txt");

/// Informativeness judge: expects a bare Yes/No.
pub const JUDGE_INFORMATIVENESS: &str = include_str!("../assets/judge_informativeness.txt");

/// Claim-level summary hallucination judge (template asset only; claim
/// decomposition pipelines are out of scope here).
pub const JUDGE_SUMMARY_HALLUCINATION: &str =
    include_str!("../assets/judge_summary_hallucination.txt");

/// Context-grounded QA judge.
pub const JUDGE_QA_GROUNDED: &str = include_str!("../assets/judge_qa_grounded.txt");

pub const GEN_TRUTHFULQA: &str = include_str!("../assets/gen_truthfulqa.txt");
pub const GEN_QA: &str = include_str!("../assets/gen_qa.txt");
pub const GEN_XSUM: &str = include_str!("../assets/gen_xsum.txt");
pub const GEN_SAMSUM: &str = include_str!("../assets/gen_samsum.txt");
pub const GEN_MBPP: &str = include_str!("../assets/gen_mbpp.txt");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn judge_templates_carry_their_placeholders() {
        for placeholder in [
            "{question}",
            "{correct_answers}",
            "{incorrect_answers}",
            "{candidate_answer}",
        ] {
            assert!(JUDGE_TRUTHFULNESS.contains(placeholder), "{placeholder}");
        }
        assert!(JUDGE_INFORMATIVENESS.contains("{question}"));
        assert!(JUDGE_INFORMATIVENESS.contains("{answer}"));
        assert!(JUDGE_SUMMARY_HALLUCINATION.contains("{context}"));
        assert!(JUDGE_SUMMARY_HALLUCINATION.contains("{summary}"));
        assert!(JUDGE_QA_GROUNDED.contains("{ground_truth}"));
    }

    #[test]
    fn generation_templates_carry_their_placeholders() {
        for template in [GEN_TRUTHFULQA, GEN_QA] {
            assert!(template.contains("{examples}"));
            assert!(template.contains("{input}"));
        }
        assert!(GEN_XSUM.contains("{input}"));
        assert!(GEN_SAMSUM.contains("{input}"));
        assert!(GEN_MBPP.contains("{task_description}"));
        assert!(GEN_MBPP.contains("{test_cases}"));
    }
}
