#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "freqctl/grid_model.hpp"

namespace freqctl {

/// Malformed scenario text. The message names the offending line/column or field path.
class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parse a scenario document. Node indices in the document are 1-based.
///
/// Lines carry either `"b"` (susceptance) or `"reactance"`, never both.
/// `message_interval` is a positive number, `null`, or `"continuous"`.
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);

/// Serialize to the same schema; lines are written with `"b"`.
std::string dump_scenario(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

}  // namespace freqctl
