#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace adapt {

using Millis = std::int64_t;

// Wall clock, integer milliseconds since the Unix epoch (UTC).
Millis now_ms();

// 128 random bits rendered as 32 lowercase hex characters.
std::string random_id();

std::string to_lower(std::string_view s);

// Case-folded alphanumeric tokens in order of appearance. Apostrophes inside a
// word are kept ("don't"), everything else splits.
std::vector<std::string> tokenize(std::string_view text);

bool is_stopword(std::string_view token);

// tokenize() minus stopwords.
std::vector<std::string> content_tokens(std::string_view text);

// Number of UTF-8 code points.
std::size_t utf8_length(std::string_view s);

// Longest prefix of `s` holding at most `max_code_points` code points.
std::string utf8_prefix(std::string_view s, std::size_t max_code_points);

std::string trim(std::string_view s);

// Single pass over `tmpl`: each "{name}" with `name` in `vars` is replaced;
// all other braces are copied through. Substituted text is never rescanned.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

// Whole-file read; throws IoError.
std::string read_file(const std::filesystem::path& path);

// Write to a sibling temp file, fsync, then rename over `path`. Creates parent
// directories. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace adapt
