#pragma once

#include <string>

#include "dcfit/simharness.hpp"

namespace dcfit {

// Parses the campaign configuration document (INI-style sections with
// key = value lines, '#' comments). Unknown sections or keys are rejected;
// every violation found is reported, not just the first. A `preset` key
// (desk or paper) is applied before any explicit overrides. After parsing,
// every field of the result is explicit, and
// parse_config_text(config_to_text(c)) reproduces c. A missing seed is a
// violation unless the caller will inject one (require_seed = false).
SimConfig parse_config_text(const std::string& text, bool require_seed = true);

SimConfig read_config_file(const std::string& path, bool require_seed = true);

// Canonical serialization of a fully resolved configuration.
// (Declared in simharness.hpp as well; defined once.)

// Learner library tokens: mean | logistic | gam(splines,ridge) |
// forest(trees,min_leaf) | net(hidden,epochs,learning_rate), separated by
// commas.
LearnerLibrary parse_library(const std::string& text);
std::string library_to_text(const LearnerLibrary& library);

}  // namespace dcfit
