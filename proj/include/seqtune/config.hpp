#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqtune/jsonio.hpp"
#include "seqtune/oracle.hpp"
#include "seqtune/policy.hpp"
#include "seqtune/reward.hpp"
#include "seqtune/trainer.hpp"

namespace seqtune {

/// Invalid or ill-formed experiment configuration; commands report it as
/// exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PriorSpec {
    enum class Scheme { UniformLogits, GaussianLogits, File };
    Scheme scheme = Scheme::UniformLogits;
    double sigma = 1.0;
    std::uint64_t seed = 0;
    std::string path;
};

/// One experiment, fully described by a single JSON document.
struct ExperimentConfig {
    SequenceSpace space;
    PriorSpec prior;
    Reward reward;
    TrainConfig train;  // carries the objective spec
    std::string out_dir;
    std::vector<double> betas;  // sweep / verify grid
    Json echo;                  // the document as parsed

    TabularPolicy make_prior() const;
};

ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const std::string& path);

Reward parse_reward(const Json& spec, const SequenceSpace& space);
ObjectiveSpec parse_objective(const Json& spec);

/// Policy snapshot: vocabulary, max length, and the logit table flattened
/// row-major in prefix order.
Json policy_snapshot(const TabularPolicy& policy);
TabularPolicy policy_from_snapshot(const Json& snapshot);

Json identity_report_json(const IdentityReport& report);

}  // namespace seqtune
