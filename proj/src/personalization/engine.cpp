#include "adapt/personalization/engine.hpp"

#include "adapt/common/errors.hpp"
#include "adapt/common/util.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

namespace adapt::assets {
extern const std::string_view personalization_v1;
extern const std::string_view summarizer_v1;
}  // namespace adapt::assets

namespace adapt::personalization {

using memory::InsightKind;
using memory::InsightRecord;

namespace {

const std::vector<std::string>& presentation_markers() {
    static const std::vector<std::string> markers = {
        "code",     "exampl",  "concis",   "short",  "brief",    "detail",  "depth",
        "technical", "citation", "source", "link",   "url",      "analog",  "jargon",
        "defin",    "introduct", "step",   "format", "prose",    "verbos",  "implement",
        "simpl",    "bullet",   "explan",  "diagram", "terminolog", "thorough", "basic"};
    return markers;
}

bool has_marker(const std::string& lowered, std::string_view marker) {
    return lowered.find(marker) != std::string::npos;
}

std::vector<std::string> template_placeholders(std::string_view line) {
    static const std::regex re(R"(\{([a-z_]+)\})");
    std::vector<std::string> names;
    std::string s(line);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
        names.push_back((*it)[1].str());
    }
    return names;
}

// Renders line by line; a line whose placeholders all render empty is dropped.
std::string render_lines(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    std::size_t start = 0;
    while (start < tmpl.size()) {
        auto end = tmpl.find('\n', start);
        bool has_newline = end != std::string_view::npos;
        if (!has_newline) end = tmpl.size();
        auto line = tmpl.substr(start, end - start);
        start = end + 1;

        bool any_known = false;
        bool all_empty = true;
        for (const auto& name : template_placeholders(line)) {
            auto it = vars.find(name);
            if (it == vars.end()) continue;
            any_known = true;
            if (!it->second.empty()) all_empty = false;
        }
        if (any_known && all_empty) continue;
        out += render_template(line, vars);
        if (has_newline) out += '\n';
    }
    return out;
}

std::string_view profile_section() {
    auto tmpl = personalization_prompt_template();
    auto begin = tmpl.find("### User Profile\n");
    begin += std::string_view("### User Profile\n").size();
    auto end = tmpl.find("\n\n", begin);
    return tmpl.substr(begin, end - begin + 1);
}

std::string capitalize_key(std::string key) {
    std::replace(key.begin(), key.end(), '_', ' ');
    if (!key.empty() && key[0] >= 'a' && key[0] <= 'z') key[0] = static_cast<char>(key[0] - 'a' + 'A');
    return key;
}

ProfileFields profile_fields(const std::optional<memory::UserProfile>& profile) {
    static const std::vector<std::string> known = {"role", "expertise_level", "language",
                                                   "response_style", "verbosity"};
    ProfileFields fields;
    if (!profile) return fields;
    const auto& attrs = profile->static_attrs;
    auto get = [&](const std::string& key) {
        auto it = attrs.find(key);
        return it == attrs.end() ? std::string() : trim(it->second);
    };
    std::string extras;
    for (const auto& [key, value] : attrs) {
        if (std::find(known.begin(), known.end(), key) != known.end() || trim(value).empty()) continue;
        if (!extras.empty()) extras += '\n';
        extras += "- " + capitalize_key(key) + ": " + trim(value);
    }
    for (const char* key : {"role", "expertise_level", "language", "response_style"}) {
        fields.emplace_back(key, get(key));
    }
    fields.emplace_back("profile_extras", extras);
    fields.emplace_back("verbosity", get("verbosity"));
    return fields;
}

std::map<std::string, std::string> as_vars(const ProfileFields& fields) {
    std::map<std::string, std::string> vars;
    for (const char* key :
         {"role", "expertise_level", "language", "response_style", "profile_extras", "verbosity"}) {
        vars[key] = "";
    }
    for (const auto& [k, v] : fields) vars[k] = v;
    return vars;
}

std::string render_profile_block(const ProfileFields& fields) {
    return render_lines(profile_section(), as_vars(fields));
}

std::string bullet_list(const std::vector<ScoredInsight>& items) {
    std::string out;
    for (const auto& item : items) {
        if (!out.empty()) out += '\n';
        out += "- " + item.insight.content;
    }
    return out;
}

std::vector<std::string> split_nonempty_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        line = trim(line);
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        if (!out.empty()) out += '\n';
        out += l;
    }
    return out;
}

std::string bulletize(const std::string& line) { return line.starts_with("- ") ? line : "- " + line; }

}  // namespace

std::vector<std::string> ContextBundle::selected_ids() const {
    std::vector<std::string> ids;
    for (const auto* list : {&facts, &preferences, &behaviors}) {
        for (const auto& s : *list) ids.push_back(s.insight.insight_id);
    }
    return ids;
}

bool is_presentation_preference(std::string_view content) {
    auto lowered = to_lower(content);
    return std::any_of(presentation_markers().begin(), presentation_markers().end(),
                       [&](const std::string& m) { return has_marker(lowered, m); });
}

std::size_t insight_cost(const InsightRecord& insight, const llm::TokenCounter& counter) {
    return counter("- " + insight.content);
}

std::size_t turn_cost(const memory::TurnRecord& turn, const llm::TokenCounter& counter) {
    return counter("User: " + turn.user_message + "\nAssistant: " + turn.assistant_message);
}

std::string fit_to_budget(std::string_view text, std::size_t budget, const llm::TokenCounter& counter) {
    if (counter(text) <= budget) return std::string(text);
    std::size_t lo = 0;
    std::size_t hi = utf8_length(text);
    while (lo < hi) {
        std::size_t mid = lo + (hi - lo + 1) / 2;
        if (counter(utf8_prefix(text, mid)) <= budget) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    return utf8_prefix(text, lo);
}

PersonalizationEngine::PersonalizationEngine(memory::MemoryStore& store,
                                             std::shared_ptr<RelevanceScorer> scorer)
    : store_(store), scorer_(scorer ? std::move(scorer) : std::make_shared<LexicalScorer>()) {}

ContextBundle PersonalizationEngine::select_context(const std::string& user_id,
                                                    const std::string& query_text,
                                                    const BudgetAllocation& allocation,
                                                    const llm::TokenCounter& counter,
                                                    const SessionView* session) const {
    ContextBundle bundle;
    bundle.user_id = user_id;
    const auto profile = store_.get_profile(user_id);

    // Preferences slot: profile fields first, then ranked insights.
    const std::size_t pref_allowed = allocation.preferences;
    for (auto& field : profile_fields(profile)) {
        auto candidate = bundle.profile_fields;
        candidate.push_back(field);
        if (counter(render_profile_block(candidate)) > pref_allowed) {
            break;
        }
        bundle.profile_fields = std::move(candidate);
    }
    bundle.profile_block = render_profile_block(bundle.profile_fields);
    std::size_t pref_used = bundle.profile_block.empty() ? 0 : counter(bundle.profile_block);

    auto candidates = store_.query_insights(user_id, {});
    auto relevance = scorer_->score(query_text, candidates);
    std::vector<ScoredInsight> ranked;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        auto& c = candidates[i];
        bool eligible = c.kind != InsightKind::preference || relevance[i] > 0.0 ||
                        is_presentation_preference(c.content);
        if (!eligible) continue;
        double score = relevance[i] * c.confidence;
        ranked.push_back({std::move(c), relevance[i], score});
    }
    std::sort(ranked.begin(), ranked.end(), [](const ScoredInsight& a, const ScoredInsight& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.insight.created_at != b.insight.created_at) return a.insight.created_at > b.insight.created_at;
        return a.insight.insight_id < b.insight.insight_id;
    });
    for (auto& r : ranked) {
        auto cost = insight_cost(r.insight, counter);
        if (pref_used + cost > pref_allowed) break;
        pref_used += cost;
        switch (r.insight.kind) {
            case InsightKind::fact: bundle.facts.push_back(std::move(r)); break;
            case InsightKind::preference: bundle.preferences.push_back(std::move(r)); break;
            case InsightKind::behavior: bundle.behaviors.push_back(std::move(r)); break;
        }
    }

    // History slot: verbatim tail in the first half, summary in the rest.
    const std::size_t hist_allowed = allocation.history;
    std::size_t hist_used = 0;
    if (session != nullptr) {
        std::size_t half = hist_allowed / 2;
        std::size_t start = session->turns.size();
        while (start > 0) {
            auto cost = turn_cost(session->turns[start - 1], counter);
            if (hist_used + cost > half) break;
            hist_used += cost;
            --start;
        }
        bundle.recent_turns.assign(session->turns.begin() + static_cast<long>(start),
                                   session->turns.end());
    }

    const std::size_t summary_allowed = hist_allowed - hist_used;
    std::string in_session;
    if (session != nullptr && !trim(session->summary.text).empty()) {
        in_session = fit_to_budget("- Earlier in this conversation: " + trim(session->summary.text),
                                   summary_allowed, counter);
    }
    // Cross-session topic lines, newest first until the slot is full.
    std::vector<std::string> newest_first;
    auto assemble = [&](const std::vector<std::string>& cross) {
        std::vector<std::string> lines;
        if (!in_session.empty()) lines.push_back(in_session);
        lines.insert(lines.end(), cross.rbegin(), cross.rend());
        return join_lines(lines);
    };
    if (profile) {
        auto history = split_nonempty_lines(profile->dynamic_state.recent_context);
        for (auto it = history.rbegin(); it != history.rend(); ++it) {
            newest_first.push_back(bulletize(*it));
            if (counter(assemble(newest_first)) > summary_allowed) {
                newest_first.pop_back();
                break;
            }
        }
    }
    bundle.session_summary = assemble(newest_first);
    if (!bundle.session_summary.empty()) hist_used += counter(bundle.session_summary);

    bundle.budget_report["preferences"] = {pref_used, pref_allowed};
    bundle.budget_report["history"] = {hist_used, hist_allowed};
    bundle.budget_report["tools"] = {0, allocation.tools};
    return bundle;
}

std::string_view personalization_prompt_template() { return assets::personalization_v1; }

std::string adaptation_instruction(const ContextBundle& bundle) {
    std::string pool;
    for (const auto& p : bundle.preferences) pool += to_lower(p.insight.content) + "\n";
    std::string expertise;
    for (const auto& [key, value] : bundle.profile_fields) {
        if (key == "expertise_level") expertise = to_lower(value);
        if (key == "response_style" || key == "verbosity" || key == "profile_extras") {
            pool += to_lower(value) + "\n";
        }
    }
    auto has = [&](std::initializer_list<std::string_view> markers) {
        return std::any_of(markers.begin(), markers.end(),
                           [&](std::string_view m) { return has_marker(pool, m); });
    };
    auto expertise_has = [&](std::initializer_list<std::string_view> markers) {
        return std::any_of(markers.begin(), markers.end(),
                           [&](std::string_view m) { return expertise.find(m) != std::string::npos; });
    };

    const bool define_terms =
        has({"jargon"}) || (has({"defin"}) && !has({"without defin", "no defin"}));
    const bool basics = expertise_has({"beginner", "novice", "new"}) || has({"basic", "beginner", "simple", "simpler"});
    const bool expert = expertise_has({"expert", "advanced", "senior"});
    const bool concise = has({"concis", "short", "brief"});

    std::vector<std::string> directives;
    if (has({"code"})) directives.push_back("Lead with code examples");
    if (has({"analog"})) directives.push_back("Start with analogies and conceptual explanations");
    if (!define_terms && has({"technical", "depth", "implementation"})) {
        directives.push_back("Use technical terminology without definition");
    }
    if (define_terms) directives.push_back("Define technical terms on first use");
    if (expert && !basics) directives.push_back("Assume familiarity with core concepts in the user's field");
    if (basics && !expert) directives.push_back("Build from basics to complexity");
    if (!basics && has({"introduct"})) directives.push_back("Avoid introductory explanations");
    if (has({"citation", "url", "source"})) directives.push_back("Include citation URLs and source links");
    if (concise) directives.push_back("Keep answers concise");
    if (!concise && has({"detailed", "thorough"})) directives.push_back("Give detailed, thorough answers");
    if (has({"bullet"})) directives.push_back("Use bullet points");
    if (has({"step-by-step", "step by step"})) directives.push_back("Explain step by step");

    std::string out = "Adapt your response style based on user preferences.";
    for (const auto& d : directives) out += " " + d + ".";
    return out;
}

std::string compose_system_prompt(const ContextBundle& bundle) {
    auto vars = as_vars(bundle.profile_fields);
    vars["facts"] = bullet_list(bundle.facts);
    vars["preferences"] = bullet_list(bundle.preferences);
    vars["behaviors"] = bullet_list(bundle.behaviors);
    vars["summary"] = bundle.session_summary;
    auto out = render_lines(personalization_prompt_template(), vars);
    if (!out.ends_with('\n')) out += '\n';
    out += '\n';
    out += adaptation_instruction(bundle);
    out += '\n';
    return out;
}

std::string_view summarizer_prompt_template() { return assets::summarizer_v1; }

SessionSummary compress_history(const SessionSummary& summary,
                                const std::vector<memory::TurnRecord>& new_turns,
                                std::size_t budget_tokens, const llm::Gateway& gateway) {
    std::vector<const memory::TurnRecord*> fresh;
    for (const auto& t : new_turns) {
        if (t.turn_index > summary.covers_through_turn) fresh.push_back(&t);
    }
    if (fresh.empty()) throw PreconditionError("compress_history needs at least one uncovered turn");

    std::string turns_text;
    for (const auto* t : fresh) {
        if (!turns_text.empty()) turns_text += "\n\n";
        turns_text += "Turn " + std::to_string(t->turn_index) + "\nUser: " + t->user_message +
                      "\nAssistant: " + t->assistant_message;
    }

    llm::ChatRequest request;
    request.role = llm::Role::summarizer;
    request.messages = {{llm::Speaker::user,
                         render_template(summarizer_prompt_template(),
                                         {{"summary", summary.text.empty() ? "(none)" : summary.text},
                                          {"turns", turns_text},
                                          {"budget", std::to_string(budget_tokens)}})}};
    auto counter = [&gateway](std::string_view s) { return gateway.count_tokens(s); };
    try {
        auto text = trim(gateway.complete(request));
        if (counter(text) > budget_tokens) {
            request.messages.push_back({llm::Speaker::assistant, text});
            request.messages.push_back(
                {llm::Speaker::user, "Shorten the summary to at most " + std::to_string(budget_tokens) +
                                         " tokens. Reply with the summary only."});
            text = trim(gateway.complete(request));
            text = fit_to_budget(text, budget_tokens, counter);
        }
        SessionSummary out;
        out.text = std::move(text);
        out.covers_through_turn = fresh.back()->turn_index;
        out.token_length = counter(out.text);
        return out;
    } catch (const Error& e) {
        spdlog::warn("history compression failed, keeping previous summary: {}", e.what());
        auto out = summary;
        out.degraded = true;
        return out;
    }
}

}  // namespace adapt::personalization
