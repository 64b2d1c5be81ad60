#pragma once

// Prompt template catalog. Bodies are stored as the exact text the model
// receives; rendering is byte-exact placeholder substitution and nothing
// else. Recognized placeholders: {claim} {query} {content} {cell} {k}.

#include <array>
#include <map>
#include <string>
#include <string_view>

#include "factpipe/errors.hpp"

namespace factpipe {

enum class TemplateId {
  Decomposition,
  VerifiabilityClassification,
  QueryGeneration,
  ContentRetrieval,
  VerdictPrediction,
  ExplanationJudge,
};

inline constexpr std::array<TemplateId, 6> kAllTemplates = {
    TemplateId::Decomposition,        TemplateId::VerifiabilityClassification,
    TemplateId::QueryGeneration,      TemplateId::ContentRetrieval,
    TemplateId::VerdictPrediction,    TemplateId::ExplanationJudge,
};

inline std::string to_string(TemplateId id) {
  switch (id) {
    case TemplateId::Decomposition: return "Decomposition";
    case TemplateId::VerifiabilityClassification: return "VerifiabilityClassification";
    case TemplateId::QueryGeneration: return "QueryGeneration";
    case TemplateId::ContentRetrieval: return "ContentRetrieval";
    case TemplateId::VerdictPrediction: return "VerdictPrediction";
    default: return "ExplanationJudge";
  }
}

using Bindings = std::map<std::string, std::string>;

namespace prompts {

inline constexpr std::string_view kDecomposition =
    R"PROMPT(You are given a problem description and a claim. The task is to define all the predicates in the claim and return them in JSON format, as shown in the example below.
Below is the example Claim: Howard University Hospital and Providence Hospital are both located in Washington, D.C.
{ "response": "Predicates:
Location(Howard_University_Hospital, Washington_D.C.) ::: Verify Howard University Hospital is located in Washington, D.C.
Location(Providence_Hospital, Washington_D.C.) ::: Verify Providence Hospital is located in Washington, D.C.

Below is the Claim: In 1959, former Chilean boxer Alfredo Cornejo Cuevas (born June 6, 1933) won the gold medal in the welterweight division at the Pan American Games (held in Chicago, United States, from August 27 to September 7) in Chicago, United States, and the world amateur welterweight title in Mexico City.
{ "response": "Predicates:
Born(Alfredo_Cornejo_Cuevas, June 6 1933) ::: Verify that Alfredo Cornejo Cuevas was born June 6, 1933.
Won(Alfredo_Cornejo_Cuevas, the gold medal in the welterweight division at the Pan American Games in 1959) ::: Verify that Alfredo Cornejo Cuevas won the gold medal in the welterweight division at the Pan American Games in 1959.
Held(The Pan American Games in 1959, Chicago United States) ::: Verify that the Pan American Games in 1959 were held in Chicago, United States.
Won(Alfredo_Cornejo_Cuevas, the world amateur welterweight title in Mexico City) ::: Verify that Alfredo Cornejo Cuevas won the world amateur welterweight title in Mexico City.

Below is the Claim: {claim})PROMPT";

inline constexpr std::string_view kVerifiabilityClassification =
    R"PROMPT(You are an expert in claim verification. Your task is to determine whether a given claim is verifiable or non-verifiable.
A verifiable claim is a factual statement that can be checked against objective evidence from reliable sources. It makes specific assertions about the world that can be proven true or false through investigation.

A non-verifiable claim is one that cannot be objectively verified because it:
- Expresses a subjective opinion, preference, or personal experience
- Makes vague or ambiguous statements without specific details
- Refers to future events that haven't occurred yet
- Makes normative or ethical judgments about what "should" be
- Contains hypothetical scenarios or counterfactuals
Examples:
Verifiable: "The average global temperature increased by 0.8°C between 1880 and 2012."
Non-verifiable: "Climate change is the most important issue facing humanity today."
Verifiable: "The film 'Parasite' won the Academy Award for Best Picture in 2020."
Non-verifiable: "Parasite deserved to win the Academy Award for Best Picture."
Please analyze the following claim and classify it as either VERIFIABLE or NON-VERIFIABLE. Provide a brief explanation for your classification.
Claim: {claim}
Classification:)PROMPT";

inline constexpr std::string_view kQueryGeneration =
    R"PROMPT(For each input subclaim, generate {k} Google search question(s) that could be used to find evidence to verify the subclaim.
The questions should be diverse, exploring different aspects or perspectives related to the subclaim, while remaining clear and concise. Follow these guidelines:
1. Use Specific Keywords: Include precise terms related to entities and relationships in the claim.
2. Incorporate Synonyms and Related Terms: Use alternative phrasings to overcome vocabulary mismatches.
3. Vary Specificity: Generate both specific queries targeting exact details and broader queries that may capture contextual information.
4. Consider Different Angles: Approach the claim from multiple perspectives to ensure comprehensive evidence gathering.
5. Maintain Simplicity: Keep questions straightforward and directly relevant to the claim.

Return the output in JSON format like this:
[{
    "claim": "Location(Howard Hospital, Washington D.C.) ::: Verify Howard University Hospital is located in Washington, D.C.",
    "questions": ["Where is Howard Hospital located?"]
}]

Input subclaim: {claim})PROMPT";

inline constexpr std::string_view kContentRetrieval =
    R"PROMPT(You are a helpful assistant who extracts information from text.
Given the following query and text content, extract only the sentences or phrases that directly
relate to the query. Do not include any information that is not relevant.
If the content contains no relevant information, return None.

Query: {query}

Content:
{content}

Relevant Information:)PROMPT";

inline constexpr std::string_view kVerdictPrediction =
    R"PROMPT(You are an AI assistant responsible for determining whether a subclaim is supported by retrieved evidence.

    ## Provided Information:
    This is a claim to do fact-checking:
    {claim}
    Here is the given subclaims, its subquestions, and retrieved evidence for each subquestion:
    {cell}

    ## Decision-Making Process:

    1. Analyze the Retrieved Evidence
    - Review all provided evidence relevant to the subclaim.
    - Assess the credibility, consistency, and reliability of each piece of evidence.

    2. Apply a Voting System for Classification
    - If multiple sources strongly support the subclaim, classify it as "supported".
    - If multiple sources contradict the subclaim, classify it as "not_supported".
    - If the evidence is mixed, insufficient, or inconclusive, classify it as "not_supported".

    3. Provide a Justification
    - Clearly explain why the subclaim is classified as "supported" or "not_supported".
    - Reference key pieces of evidence that influenced your decision.
    - If the evidence is inconclusive, explain the limitations or uncertainties.
    - Remember to adjust not to include " for later parse
    ## Response Format:
    Your response must be a structured JSON object:

    ```json
    {
        "label": "supported" or "not_supported",
        "explanation": "A concise, evidence-based summary supporting your decision."
    }
    ```)PROMPT";

inline constexpr std::string_view kExplanationJudge =
    R"PROMPT(You are an expert evaluator for automated fact-check explanations. Your task is to:

- Review the original claim, its label, and the explanations produced by 4 methods. Each method may produce a different label; consider this when evaluating Soundness.
- Evaluate each explanation according to 3 criteria:

  1. Coverage: To what extent the explanation includes all the salient and relevant information necessary to verify the claim.
  2. Soundness: The logical consistency of the explanation; whether it supports or contradicts its own label and the original claim.
  3. Readability: The clarity and coherence of the explanation; how easily a human can follow and understand it.

- Provide a **ranking (1 for best, 4 for worst)** for each criterion.
Here is the input:
{cell}
The output should be in the format
{
  "ranking": {
    "Coverage": { "1": "<method>", "2": "<method>", "3": "<method>", "4": "<method>" },
    "Soundness": { "1": "<method>", "2": "<method>", "3": "<method>", "4": "<method>" },
    "Readability": { "1": "<method>", "2": "<method>", "3": "<method>", "4": "<method>" }
  }
})PROMPT";

}  // namespace prompts

struct PromptTemplate {
  TemplateId name;
  std::string_view body;
};

inline const PromptTemplate& get_template(TemplateId id) {
  static const std::array<PromptTemplate, 6> catalog = {{
      {TemplateId::Decomposition, prompts::kDecomposition},
      {TemplateId::VerifiabilityClassification, prompts::kVerifiabilityClassification},
      {TemplateId::QueryGeneration, prompts::kQueryGeneration},
      {TemplateId::ContentRetrieval, prompts::kContentRetrieval},
      {TemplateId::VerdictPrediction, prompts::kVerdictPrediction},
      {TemplateId::ExplanationJudge, prompts::kExplanationJudge},
  }};
  return catalog[static_cast<std::size_t>(id)];
}

inline constexpr std::array<std::string_view, 5> kKnownPlaceholders = {"claim", "query", "content",
                                                                       "cell", "k"};

// Byte-exact substitution of the recognized placeholders that occur in the
// body. A placeholder present in the body without a binding is an error;
// extra bindings are ignored.
inline std::string render(const PromptTemplate& tmpl, const Bindings& bindings) {
  std::string out(tmpl.body);
  for (auto placeholder : kKnownPlaceholders) {
    std::string token = "{" + std::string(placeholder) + "}";
    auto pos = out.find(token);
    if (pos == std::string::npos) continue;
    auto it = bindings.find(std::string(placeholder));
    if (it == bindings.end()) throw MissingBinding(std::string(placeholder));
    while (pos != std::string::npos) {
      out.replace(pos, token.size(), it->second);
      pos = out.find(token, pos + it->second.size());
    }
  }
  return out;
}

inline std::string render(TemplateId id, const Bindings& bindings) {
  return render(get_template(id), bindings);
}

}  // namespace factpipe
