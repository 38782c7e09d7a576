#pragma once

#include <iosfwd>
#include <string>

#include "strokeless/training.hpp"

namespace strokeless::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

/// Parses argv and dispatches one subcommand. Results go to `out`;
/// diagnostics and help text for usage errors go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Applies a flat JSON object whose keys are TrainConfig field names
/// (loss weights as lambda_t, lambda_m, lambda_s, lambda_r).
void apply_train_config_json(TrainConfig& cfg, const std::string& json_text);

}  // namespace strokeless::cli
