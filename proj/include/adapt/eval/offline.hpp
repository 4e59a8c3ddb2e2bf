#pragma once

#include "adapt/bench/dataset.hpp"
#include "adapt/llm/gateway.hpp"

namespace adapt::eval {

// Deterministic stand-ins for every model role so the whole benchmark can run
// without network access:
//  - learner: records each first-person sentence of a turn as a fact;
//  - responder: a generic answer that mentions the stored facts and
//    preferences found in the system prompt;
//  - summarizer: keeps the first sentence of each turn;
//  - judge: labels a trait incorporated when the response matches its stems,
//    scores 3 plus one per incorporated trait, capped at 5;
//  - synthesizer: bench::install_scripted_synthesizer.
void install_offline_presets(llm::Gateway& gateway, const bench::TraitPool& pool);

void install_scripted_judge(llm::Gateway& gateway, const bench::TraitPool& pool);

}  // namespace adapt::eval
