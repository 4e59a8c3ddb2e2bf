#include "adapt/eval/offline.hpp"

#include "adapt/common/errors.hpp"
#include "adapt/common/util.hpp"

#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace adapt::eval {

using nlohmann::json;

namespace {

std::string between(const std::string& text, std::string_view open, std::string_view close) {
    auto begin = text.find(open);
    if (begin == std::string::npos) return "";
    begin += open.size();
    auto end = close.empty() ? std::string::npos : text.find(close, begin);
    return text.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
}

std::vector<std::string> sentences(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        cur.push_back(c);
        if (c == '.' || c == '!' || c == '?' || c == '\n') {
            if (auto s = trim(cur); !s.empty()) out.push_back(s);
            cur.clear();
        }
    }
    if (auto s = trim(cur); !s.empty()) out.push_back(s);
    return out;
}

bool first_person(std::string_view sentence) {
    static const std::set<std::string> markers = {"i", "i'm", "i've", "i'd", "i'll", "my", "me", "we", "our", "we're"};
    for (const auto& token : tokenize(sentence)) {
        if (markers.count(token) != 0) return true;
    }
    return false;
}

std::vector<std::string> bullets(const std::string& block) {
    std::vector<std::string> out;
    std::istringstream in(block);
    for (std::string line; std::getline(in, line);) {
        line = trim(line);
        if (line.starts_with("- ")) out.push_back(line.substr(2));
    }
    return out;
}

std::string learner_reply(const llm::ChatRequest& request) {
    const auto& prompt = request.messages.front().text;
    auto message = between(prompt, "User message: ", "\nAssistant response: ");
    json drafts = json::array();
    for (const auto& s : sentences(message)) {
        if (!first_person(s)) continue;
        drafts.push_back({{"type", "fact"}, {"content", "User mentioned: " + s}, {"confidence", 0.8}});
    }
    return drafts.dump();
}

std::string responder_reply(const llm::ChatRequest& request) {
    std::string system;
    if (!request.messages.empty() && request.messages.front().speaker == llm::Speaker::system) {
        system = request.messages.front().text;
    }
    auto known = bullets(between(system, "**Facts:**", "### Recent Conversation Summary"));
    std::string reply = "Here is a practical answer to \"" + llm::last_user_text(request) + "\".";
    if (!known.empty()) {
        std::string joined;
        for (const auto& k : known) joined += (joined.empty() ? "" : "; ") + k;
        reply += " I've tailored it to what I know about you: " + joined + ".";
    }
    return reply;
}

std::string summarizer_reply(const llm::ChatRequest& request) {
    const auto& prompt = request.messages.front().text;
    std::string out = trim(between(prompt, "Current summary:\n", "\n\nNew turns:"));
    if (out == "(none)") out.clear();
    std::istringstream in(between(prompt, "New turns:\n", "\n\nReply with"));
    for (std::string line; std::getline(in, line);) {
        if (!line.starts_with("User: ")) continue;
        auto first = sentences(line.substr(6));
        if (first.empty()) continue;
        out += (out.empty() ? "" : " ") + std::string("User asked: ") + first.front();
    }
    return out;
}

}  // namespace

void install_scripted_judge(llm::Gateway& gateway, const bench::TraitPool& pool) {
    auto handler = [pool](const llm::ChatRequest& request) {
        const auto& prompt = request.messages.front().text;
        auto traits = bullets(between(prompt, "USER TRAITS\n", "\n\nCURRENT QUERY"));
        auto response = between(prompt, "ASSISTANT RESPONSE\n", "\n\nPersonalization Score");
        json labels = json::object();
        int incorporated = 0;
        for (const auto& line : traits) {
            auto id = line.substr(0, line.find(':'));
            bool used = false;
            try {
                used = bench::mentions_trait(response, pool.at(id));
            } catch (const NotFoundError&) {
            }
            labels[id] = used ? "incorporated" : "neutral";
            incorporated += used ? 1 : 0;
        }
        int score = std::min(5, 3 + incorporated);
        return json{{"score", score},
                    {"trait_labels", labels},
                    {"rationale", std::to_string(incorporated) + " trait(s) reflected in the response"}}
            .dump();
    };
    gateway.register_handler(llm::Matcher::substring("USER TRAITS"), handler, llm::Role::judge);
}

void install_offline_presets(llm::Gateway& gateway, const bench::TraitPool& pool) {
    gateway.register_handler(llm::Matcher::substring("User message: "), learner_reply, llm::Role::learner);
    gateway.register_handler(llm::Matcher::substring(""), responder_reply, llm::Role::responder);
    gateway.register_handler(llm::Matcher::substring("New turns:"), summarizer_reply, llm::Role::summarizer);
    install_scripted_judge(gateway, pool);
    bench::install_scripted_synthesizer(gateway, pool);
}

}  // namespace adapt::eval
