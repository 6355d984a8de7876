#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dbn/model.hpp"
#include "dbn/tbn.hpp"

namespace dbn {

using AnyModel = std::variant<HmmModel, ChmmModel, Tbn2Model>;

/// Parses a model document and validates it. Schema problems raise
/// ParseError naming the JSON field path, e.g. `chains[1].emit`.
AnyModel parse_model(std::string_view json_text);
AnyModel load_model(const std::filesystem::path& path);

/// Serializes with round-trip precision for every probability.
std::string model_to_json(const AnyModel& model);
void save_model(const AnyModel& model, const std::filesystem::path& path);

/// "0 1 0" -> {0, 1, 0}. Missing or negative entries are rejected.
ObsSequence parse_obs_line(std::string_view line);

/// "0,1 1,1 0,0" -> {{0,1},{1,1},{0,0}}.
MultiObsSequence parse_multi_obs_line(std::string_view line);

/// One sequence per non-blank line. Errors carry the line number.
std::vector<ObsSequence> read_obs(std::istream& in);
std::vector<MultiObsSequence> read_multi_obs(std::istream& in);
std::vector<ObsSequence> load_obs(const std::filesystem::path& path);
std::vector<MultiObsSequence> load_multi_obs(const std::filesystem::path& path);

std::string format_obs_line(const ObsSequence& seq);
std::string format_multi_obs_line(const MultiObsSequence& seq);

}  // namespace dbn
