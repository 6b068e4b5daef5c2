#pragma once

#include <optional>
#include <string>
#include <vector>

#include "seqtune/config.hpp"

namespace seqtune {

// Process exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigInvalid = 2;
inline constexpr int kExitStopUnmet = 3;
inline constexpr int kExitNumericalAbort = 4;
inline constexpr int kExitIdentityFailure = 5;

struct CommandOptions {
    std::optional<std::string> out_dir;    // overrides config "out"
    std::optional<std::uint64_t> seed;     // overrides train.seed
    std::optional<std::vector<double>> betas;
    // Verification test hook: offset added to log Z inside the affine
    // identity check. Nonzero values must make cmd_verify fail.
    double corrupt_log_z = 0.0;
};

int cmd_enumerate(const ExperimentConfig& config, const CommandOptions& opts = {});
int cmd_oracle(const ExperimentConfig& config, const CommandOptions& opts = {});
int cmd_train(const ExperimentConfig& config, const CommandOptions& opts = {});
int cmd_verify(const ExperimentConfig& config, const CommandOptions& opts = {});
int cmd_sweep(const ExperimentConfig& config, const CommandOptions& opts = {});

/// Load the config and dispatch; maps configuration problems to exit code 2.
int run_command(const std::string& name, const std::string& config_path,
                const CommandOptions& opts);

}  // namespace seqtune
