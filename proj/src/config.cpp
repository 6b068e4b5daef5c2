#include "seqtune/config.hpp"

#include <algorithm>
#include <cmath>

namespace seqtune {

namespace {

// Exact oracles enumerate the whole space; keep it desk-scale.
constexpr Index kMaxSpaceSize = 1'000'000;

const Json& require(const Json& doc, const std::string& key,
                    const std::string& where) {
    if (!doc.contains(key)) {
        throw ConfigError(where + ": missing field \"" + key + "\"");
    }
    return doc.at(key);
}

double require_number(const Json& doc, const std::string& key,
                      const std::string& where) {
    const Json& v = require(doc, key, where);
    if (!v.is_number()) {
        throw ConfigError(where + ": \"" + key + "\" must be a number");
    }
    return v.get<double>();
}

Index require_int(const Json& doc, const std::string& key,
                  const std::string& where) {
    const Json& v = require(doc, key, where);
    if (!v.is_number_integer()) {
        throw ConfigError(where + ": \"" + key + "\" must be an integer");
    }
    return v.get<Index>();
}

std::string require_string(const Json& doc, const std::string& key,
                           const std::string& where) {
    const Json& v = require(doc, key, where);
    if (!v.is_string()) {
        throw ConfigError(where + ": \"" + key + "\" must be a string");
    }
    return v.get<std::string>();
}

SequenceSpace parse_space(const Json& doc) {
    if (!doc.is_object()) throw ConfigError("space: must be an object");
    const Json& syms = require(doc, "symbols", "space");
    if (!syms.is_array() || syms.empty()) {
        throw ConfigError("space: \"symbols\" must be a non-empty array");
    }
    std::vector<std::string> symbols;
    for (const Json& s : syms) {
        if (!s.is_string()) throw ConfigError("space: symbols must be strings");
        symbols.push_back(s.get<std::string>());
    }
    const std::string eos = require_string(doc, "eos", "space");
    const auto it = std::find(symbols.begin(), symbols.end(), eos);
    if (it == symbols.end()) {
        throw ConfigError("space: eos symbol \"" + eos + "\" not in symbols");
    }
    const Index max_len = require_int(doc, "max_len", "space");
    try {
        SequenceSpace space(Vocab(symbols, it - symbols.begin()), max_len);
        if (space.size() > kMaxSpaceSize) {
            throw ConfigError("space: size " + std::to_string(space.size()) +
                              " exceeds the exact-enumeration limit of " +
                              std::to_string(kMaxSpaceSize));
        }
        return space;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("space: ") + e.what());
    }
}

PriorSpec parse_prior(const Json& doc) {
    if (!doc.is_object()) throw ConfigError("prior: must be an object");
    PriorSpec spec;
    const std::string scheme = require_string(doc, "scheme", "prior");
    if (scheme == "uniform-logits") {
        spec.scheme = PriorSpec::Scheme::UniformLogits;
    } else if (scheme == "gaussian-logits") {
        spec.scheme = PriorSpec::Scheme::GaussianLogits;
        spec.sigma = require_number(doc, "sigma", "prior");
        if (spec.sigma < 0.0) throw ConfigError("prior: sigma must be >= 0");
        spec.seed = static_cast<std::uint64_t>(require_int(doc, "seed", "prior"));
    } else if (scheme == "file") {
        spec.scheme = PriorSpec::Scheme::File;
        spec.path = require_string(doc, "path", "prior");
    } else {
        throw ConfigError("prior: unknown scheme \"" + scheme + "\"");
    }
    return spec;
}

}  // namespace

Reward parse_reward(const Json& spec, const SequenceSpace& space) {
    if (!spec.is_object()) throw ConfigError("reward: must be an object");
    const std::string kind = require_string(spec, "kind", "reward");
    try {
        if (kind == "token-count") {
            return Reward::token_count(require_string(spec, "token", "reward"),
                                       require_number(spec, "weight", "reward"));
        }
        if (kind == "contains-substring") {
            return Reward::contains_substring(
                require_string(spec, "substring", "reward"),
                require_number(spec, "bonus", "reward"));
        }
        if (kind == "length-penalty") {
            return Reward::length_penalty(
                require_number(spec, "per_token", "reward"));
        }
        if (kind == "table") {
            std::vector<double> values(static_cast<std::size_t>(space.size()), 0.0);
            if (spec.contains("values")) {
                const Json& arr = spec.at("values");
                if (!arr.is_array() ||
                    static_cast<Index>(arr.size()) != space.size()) {
                    throw ConfigError(
                        "reward: \"values\" must list one value per sequence (" +
                        std::to_string(space.size()) + ")");
                }
                for (std::size_t i = 0; i < values.size(); ++i) {
                    values[i] = arr.at(i).get<double>();
                }
            } else if (spec.contains("entries")) {
                const double fallback =
                    spec.contains("default") ? spec.at("default").get<double>() : 0.0;
                std::fill(values.begin(), values.end(), fallback);
                for (const Json& e : spec.at("entries")) {
                    const Sequence x =
                        space.parse(require_string(e, "seq", "reward entry"));
                    values[static_cast<std::size_t>(space.index_of(x))] =
                        require_number(e, "r", "reward entry");
                }
            } else {
                throw ConfigError("reward: table needs \"values\" or \"entries\"");
            }
            return Reward::table(std::move(values));
        }
        if (kind == "composite") {
            const Json& terms = require(spec, "terms", "reward");
            if (!terms.is_array() || terms.empty()) {
                throw ConfigError("reward: composite needs a non-empty \"terms\" array");
            }
            std::vector<std::pair<double, Reward>> parsed;
            for (const Json& t : terms) {
                parsed.emplace_back(require_number(t, "weight", "composite term"),
                                    parse_reward(require(t, "reward", "composite term"),
                                                 space));
            }
            return Reward::composite(std::move(parsed));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("reward: ") + e.what());
    }
    throw ConfigError("reward: unknown kind \"" + kind + "\"");
}

ObjectiveSpec parse_objective(const Json& spec) {
    if (!spec.is_object()) throw ConfigError("objective: must be an object");
    ObjectiveSpec out;
    const std::string kind = require_string(spec, "kind", "objective");
    if (kind == "pure-rl") {
        out.kind = ObjectiveKind::PureRL;
    } else if (kind == "klrl") {
        out.kind = ObjectiveKind::KLRL;
    } else if (kind == "gdc") {
        out.kind = ObjectiveKind::GDC;
    } else if (kind == "mle") {
        out.kind = ObjectiveKind::MLE;
    } else {
        throw ConfigError("objective: unknown kind \"" + kind + "\"");
    }
    if (out.kind == ObjectiveKind::KLRL || out.kind == ObjectiveKind::GDC) {
        out.beta = require_number(spec, "beta", "objective");
    }
    if (spec.contains("estimator")) {
        const Json& est = spec.at("estimator");
        const std::string type = require_string(est, "type", "estimator");
        if (type == "exact") {
            out.estimator.kind = EstimatorKind::Exact;
        } else if (type == "mc") {
            out.estimator.kind = EstimatorKind::MonteCarlo;
            out.estimator.batch_size = require_int(est, "batch", "estimator");
            if (est.contains("baseline")) {
                const std::string b = est.at("baseline").get<std::string>();
                if (b == "none") {
                    out.estimator.baseline = BaselineKind::None;
                } else if (b == "batch-mean") {
                    out.estimator.baseline = BaselineKind::BatchMean;
                } else {
                    throw ConfigError("estimator: unknown baseline \"" + b + "\"");
                }
            }
        } else {
            throw ConfigError("estimator: unknown type \"" + type + "\"");
        }
    }
    if (spec.contains("gdc_weighting")) {
        const std::string w = spec.at("gdc_weighting").get<std::string>();
        if (w == "exact-Z") {
            out.gdc_weighting = GdcWeighting::ExactZ;
        } else if (w == "self-normalized") {
            out.gdc_weighting = GdcWeighting::SelfNormalized;
        } else {
            throw ConfigError("objective: unknown gdc_weighting \"" + w + "\"");
        }
    }
    try {
        out.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("objective: ") + e.what());
    }
    return out;
}

namespace {

TrainConfig parse_train(const Json& doc, const ObjectiveSpec& objective,
                        const Json& objective_json, const SequenceSpace& space) {
    if (!doc.is_object()) throw ConfigError("train: must be an object");
    TrainConfig cfg;
    cfg.objective = objective;
    cfg.steps = require_int(doc, "steps", "train");
    cfg.lr = require_number(doc, "lr", "train");
    if (doc.contains("lr_decay")) {
        cfg.lr_decay = doc.at("lr_decay").get<double>();
    }
    cfg.seed = static_cast<std::uint64_t>(require_int(doc, "seed", "train"));
    if (doc.contains("log_every")) {
        cfg.log_every = doc.at("log_every").get<Index>();
    }
    if (doc.contains("stop_when")) {
        const Json& sw = doc.at("stop_when");
        cfg.stop_when = StopRule{require_string(sw, "metric", "stop_when"),
                                 require_number(sw, "threshold", "stop_when")};
    }
    if (objective.kind == ObjectiveKind::MLE) {
        const Json& data = require(objective_json, "dataset", "objective");
        if (!data.is_array() || data.empty()) {
            throw ConfigError("objective: mle needs a non-empty \"dataset\" array");
        }
        for (const Json& s : data) {
            try {
                cfg.dataset.push_back(space.parse(s.get<std::string>()));
            } catch (const std::exception& e) {
                throw ConfigError(std::string("objective: dataset: ") + e.what());
            }
        }
    }
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("train: ") + e.what());
    }
    return cfg;
}

}  // namespace

ExperimentConfig parse_config(const Json& doc) {
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    SequenceSpace space = parse_space(require(doc, "space", "config"));
    ExperimentConfig cfg{space,
                         PriorSpec{},
                         parse_reward(require(doc, "reward", "config"), space),
                         TrainConfig{},
                         "",
                         {},
                         doc};
    if (doc.contains("prior")) {
        cfg.prior = parse_prior(doc.at("prior"));
    }
    if (doc.contains("objective")) {
        cfg.train.objective = parse_objective(doc.at("objective"));
    }
    if (doc.contains("train")) {
        cfg.train = parse_train(doc.at("train"), cfg.train.objective,
                                doc.contains("objective") ? doc.at("objective")
                                                          : Json::object(),
                                space);
    }
    if (doc.contains("out")) {
        cfg.out_dir = doc.at("out").get<std::string>();
    }
    if (doc.contains("betas")) {
        const Json& arr = doc.at("betas");
        if (!arr.is_array()) throw ConfigError("config: \"betas\" must be an array");
        for (const Json& b : arr) {
            cfg.betas.push_back(b.get<double>());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    Json doc;
    try {
        doc = read_json_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return parse_config(doc);
}

TabularPolicy ExperimentConfig::make_prior() const {
    switch (prior.scheme) {
        case PriorSpec::Scheme::UniformLogits:
            return uniform_logits_prior(space);
        case PriorSpec::Scheme::GaussianLogits:
            return gaussian_logits_prior(space, prior.sigma, prior.seed);
        case PriorSpec::Scheme::File: {
            Json snapshot;
            try {
                snapshot = read_json_file(prior.path);
                TabularPolicy policy = policy_from_snapshot(snapshot);
                if (!(policy.space() == space)) {
                    throw ConfigError("prior: snapshot space does not match config");
                }
                return policy;
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                throw ConfigError(std::string("prior: ") + e.what());
            }
        }
    }
    throw ConfigError("prior: invalid scheme");
}

Json policy_snapshot(const TabularPolicy& policy) {
    const SequenceSpace& space = policy.space();
    Json vocab;
    vocab["symbols"] = space.vocab().symbols;
    vocab["eos_index"] = space.vocab().eos_index;
    Json out;
    out["vocab"] = vocab;
    out["max_len"] = space.max_len();
    Json logits = Json::array();
    for (Index r = 0; r < policy.num_rows(); ++r) {
        for (Index c = 0; c < policy.num_tokens(); ++c) {
            logits.push_back(policy.logits()(r, c));
        }
    }
    out["logits"] = std::move(logits);
    return out;
}

Json identity_report_json(const IdentityReport& report) {
    Json out;
    out["residual_affine_identity"] = report.residual_affine_identity;
    out["residual_reward_reshaping"] = report.residual_reward_reshaping;
    out["elbo_gap_violation"] = report.elbo_gap_violation;
    out["log_Z"] = report.log_z;
    out["beta"] = report.beta;
    return out;
}

TabularPolicy policy_from_snapshot(const Json& snapshot) {
    const Json& vocab = require(snapshot, "vocab", "policy snapshot");
    std::vector<std::string> symbols;
    for (const Json& s : require(vocab, "symbols", "policy snapshot")) {
        symbols.push_back(s.get<std::string>());
    }
    const Index eos = require_int(vocab, "eos_index", "policy snapshot");
    const Index max_len = require_int(snapshot, "max_len", "policy snapshot");
    SequenceSpace space{Vocab(symbols, eos), max_len};
    const Json& flat = require(snapshot, "logits", "policy snapshot");
    const Index rows = space.num_prefixes();
    const Index cols = space.vocab().size();
    if (!flat.is_array() || static_cast<Index>(flat.size()) != rows * cols) {
        throw ConfigError("policy snapshot: logits length must be " +
                          std::to_string(rows * cols));
    }
    Mat logits(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            logits(r, c) = flat.at(static_cast<std::size_t>(r * cols + c)).get<double>();
        }
    }
    return TabularPolicy(space, std::move(logits));
}

}  // namespace seqtune
