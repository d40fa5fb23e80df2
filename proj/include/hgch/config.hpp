#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hgch/model.hpp"
#include "hgch/train.hpp"

namespace hgch::config {

// Everything a run needs, resolved with precedence defaults < file < flags.
struct RunConfig {
    model::ModelConfig model;
    train::TrainConfig train;
    std::vector<int> ks = {10, 20};  // ranking cutoffs reported by eval
    std::string dataset_dir;
    std::string run_dir;

    void validate() const;  // throws ConfigError
};

// Applies one dotted key such as "train.lr" or "model.curvature.also_view".
// `where` names the source (file:line or flag) in error messages.
void apply_key(RunConfig& c, std::string_view key, std::string_view value,
               const std::string& where);

// Overlays an INI file: section [model]/[train]/[eval]/[data], key = value
// lines. Unknown sections or keys are errors, not warnings.
void apply_file(RunConfig& c, const std::filesystem::path& path);

std::vector<int> parse_ks(std::string_view text, const std::string& where);

// INI snapshot with every key explicit; apply_file on it reproduces `c`
std::string resolved_text(const RunConfig& c);

}  // namespace hgch::config
