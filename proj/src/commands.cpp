#include "seqtune/commands.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "seqtune/oracle.hpp"
#include "seqtune/svg.hpp"

namespace seqtune {

namespace {

// Acceptance thresholds for the identity suite.
constexpr double kIdentityTol = 1e-8;
constexpr double kElboViolationTol = 1e-9;
constexpr int kVerifyPolicies = 100;

std::filesystem::path resolve_out_dir(const ExperimentConfig& config,
                                      const CommandOptions& opts) {
    const std::string dir = opts.out_dir.value_or(config.out_dir);
    if (dir.empty()) {
        throw ConfigError("config: no output directory (\"out\" or --out)");
    }
    std::filesystem::create_directories(dir);
    return dir;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
        quoted += c;
        if (c == '"') quoted += '"';
    }
    quoted += '"';
    return quoted;
}

std::vector<double> resolve_betas(const ExperimentConfig& config,
                                  const CommandOptions& opts,
                                  std::vector<double> fallback) {
    std::vector<double> betas = opts.betas.value_or(
        config.betas.empty() ? std::move(fallback) : config.betas);
    if (betas.empty()) {
        throw ConfigError("config: no betas given (\"betas\" or --betas)");
    }
    for (double b : betas) {
        if (!(b > 0.0)) throw ConfigError("config: betas must be > 0");
    }
    return betas;
}

double objective_beta(const ExperimentConfig& config) {
    const ObjectiveKind kind = config.train.objective.kind;
    return (kind == ObjectiveKind::KLRL || kind == ObjectiveKind::GDC)
               ? config.train.objective.beta
               : 1.0;
}

Json metrics_to_json(const MetricsRow& row) {
    const auto num = [](double v) {
        return std::isfinite(v) ? Json(v) : Json(nullptr);
    };
    Json out;
    out["step"] = row.step;
    out["objective"] = num(row.objective_value);
    out["expected_reward"] = num(row.expected_reward);
    out["kl_to_prior"] = num(row.kl_to_prior);
    out["kl_to_target"] = num(row.kl_to_target);
    out["fwd_kl_from_target"] = num(row.fwd_kl_from_target);
    out["entropy"] = num(row.entropy);
    out["elbo_gap"] = row.elbo_gap.has_value() ? num(*row.elbo_gap) : Json(nullptr);
    out["argmax_mass"] = num(row.argmax_mass);
    out["support_size"] = row.support_size;
    out["max_prob"] = num(row.max_prob);
    return out;
}

}  // namespace

int cmd_enumerate(const ExperimentConfig& config, const CommandOptions& opts) {
    const auto out_dir = resolve_out_dir(config, opts);
    std::ostringstream csv;
    csv << "index,sequence,reward\n";
    config.space.for_each_sequence([&](Index i, const Sequence& x) {
        csv << i << "," << csv_field(config.space.render(x)) << ","
            << format_double(config.reward(config.space, x)) << "\n";
    });
    write_text_file((out_dir / "sequences.csv").string(), csv.str());
    return kExitOk;
}

int cmd_oracle(const ExperimentConfig& config, const CommandOptions& opts) {
    const auto out_dir = resolve_out_dir(config, opts);
    const TabularPolicy prior = config.make_prior();
    const double beta = objective_beta(config);
    const TargetDistribution target = gibbs_posterior(prior, config.reward, beta);

    Json out;
    out["log_Z"] = target.log_z;
    out["beta"] = beta;
    Json posterior = Json::array();
    for (Index i = 0; i < target.probs.size(); ++i) {
        posterior.push_back(target.probs(i));
    }
    out["posterior"] = std::move(posterior);
    out["argmax_set"] = argmax_set(config.reward, config.space);
    out["entropy_of_posterior"] = entropy(target.probs);
    write_text_file((out_dir / "oracle.json").string(), dump_json(out));
    return kExitOk;
}

int cmd_train(const ExperimentConfig& config, const CommandOptions& opts) {
    const auto out_dir = resolve_out_dir(config, opts);
    TrainConfig train_cfg = config.train;
    if (opts.seed.has_value()) train_cfg.seed = *opts.seed;

    const TabularPolicy prior = config.make_prior();
    const Trajectory traj = train(prior, prior, config.reward, train_cfg);

    std::ostringstream csv;
    csv << "step,objective,expected_reward,kl_to_prior,kl_to_target,"
           "fwd_kl_from_target,entropy,elbo_gap,argmax_mass,support_size,"
           "max_prob\n";
    for (const MetricsRow& row : traj.rows) {
        csv << row.step << "," << format_double(row.objective_value) << ","
            << format_double(row.expected_reward) << ","
            << format_double(row.kl_to_prior) << ","
            << format_double(row.kl_to_target) << ","
            << format_double(row.fwd_kl_from_target) << ","
            << format_double(row.entropy) << ","
            << (row.elbo_gap.has_value() ? format_double(*row.elbo_gap) : "")
            << "," << format_double(row.argmax_mass) << "," << row.support_size
            << "," << format_double(row.max_prob) << "\n";
    }
    write_text_file((out_dir / "metrics.csv").string(), csv.str());
    write_text_file((out_dir / "policy.json").string(),
                    dump_json(policy_snapshot(traj.final_policy)));

    const char* status = nullptr;
    switch (traj.status) {
        case TrainStatus::Completed: status = "completed"; break;
        case TrainStatus::StoppedEarly: status = "stopped_early"; break;
        case TrainStatus::AbortNonFinite: status = "abort_non_finite"; break;
        case TrainStatus::AbortNonMonotone: status = "abort_non_monotone"; break;
    }
    Json summary;
    summary["status"] = status;
    summary["steps_run"] = traj.rows.empty() ? 0 : traj.rows.back().step;
    summary["final"] = traj.rows.empty() ? Json(nullptr)
                                         : metrics_to_json(traj.rows.back());
    summary["config"] = config.echo;
    if (opts.seed.has_value()) summary["seed_override"] = *opts.seed;
    write_text_file((out_dir / "summary.json").string(), dump_json(summary));

    if (traj.status == TrainStatus::AbortNonFinite ||
        traj.status == TrainStatus::AbortNonMonotone) {
        return kExitNumericalAbort;
    }
    if (train_cfg.stop_when.has_value() && !traj.stop_rule_satisfied) {
        return kExitStopUnmet;
    }
    return kExitOk;
}

int cmd_verify(const ExperimentConfig& config, const CommandOptions& opts) {
    const auto out_dir = resolve_out_dir(config, opts);
    const std::vector<double> betas = resolve_betas(config, opts, {0.1, 1.0, 10.0});
    const std::uint64_t seed = opts.seed.value_or(config.train.seed);

    const TabularPolicy prior = config.make_prior();
    const Vec prior_lp = prior.log_distribution();
    const Vec prior_dist = prior_lp.array().exp();
    const Vec reward_values = config.reward.values(config.space);

    // Corrupted affine residual: same identity, log Z deliberately offset.
    const auto corrupted_affine = [&](const TabularPolicy& policy,
                                      double beta) {
        const TargetDistribution target =
            gibbs_posterior(config.space, prior_lp, reward_values, beta);
        const Vec dist = policy.distribution();
        const double objective =
            klrl_objective(dist, prior_dist, reward_values, beta);
        const double kl = kl_divergence(dist, target.probs);
        return std::abs(objective -
                        (beta * (target.log_z + opts.corrupt_log_z) - beta * kl));
    };

    bool pass = true;
    Json results = Json::array();
    for (double beta : betas) {
        // Same policy set for every beta: deterministic in the seed.
        Rng rng(seed);
        const TargetDistribution target =
            gibbs_posterior(config.space, prior_lp, reward_values, beta);
        const TabularPolicy optimal =
            TabularPolicy::from_distribution(config.space, target.probs);

        double max_affine = 0.0;
        double max_reshaping = 0.0;
        double max_violation = 0.0;
        IdentityReport optimal_case{};
        const double sigmas[] = {0.3, 1.0, 3.0};
        for (int i = 0; i <= kVerifyPolicies; ++i) {
            TabularPolicy policy = optimal;
            if (i < kVerifyPolicies) {
                const double sigma = sigmas[i % 3];
                Mat logits(config.space.num_prefixes(), config.space.vocab().size());
                for (Index r = 0; r < logits.rows(); ++r) {
                    for (Index c = 0; c < logits.cols(); ++c) {
                        logits(r, c) = sigma * rng.normal();
                    }
                }
                policy = TabularPolicy(config.space, std::move(logits));
            }
            IdentityReport report =
                verify_identities(policy, prior, config.reward, beta);
            if (opts.corrupt_log_z != 0.0) {
                report.residual_affine_identity = corrupted_affine(policy, beta);
            }
            max_affine = std::max(max_affine, report.residual_affine_identity);
            max_reshaping = std::max(max_reshaping, report.residual_reward_reshaping);
            max_violation = std::max(max_violation, report.elbo_gap_violation);
            if (i == kVerifyPolicies) optimal_case = report;
        }

        const double optimal_gap = std::abs(
            klrl_objective(optimal.distribution(), prior_dist, reward_values, beta) -
            beta * target.log_z);

        const bool beta_pass = max_affine < kIdentityTol &&
                               max_reshaping < kIdentityTol &&
                               max_violation <= kElboViolationTol &&
                               optimal_gap < kIdentityTol;
        pass = pass && beta_pass;

        Json r;
        r["beta"] = beta;
        r["log_Z"] = target.log_z;
        r["max_residual_affine_identity"] = max_affine;
        r["max_residual_reward_reshaping"] = max_reshaping;
        r["max_elbo_gap_violation"] = max_violation;
        r["optimal_policy_objective_gap"] = optimal_gap;
        r["optimal_policy_case"] = identity_report_json(optimal_case);
        r["pass"] = beta_pass;
        results.push_back(std::move(r));
    }

    Json out;
    out["num_random_policies"] = kVerifyPolicies;
    out["seed"] = seed;
    Json tol;
    tol["identity"] = kIdentityTol;
    tol["elbo_violation"] = kElboViolationTol;
    out["tolerance"] = std::move(tol);
    out["results"] = std::move(results);
    out["pass"] = pass;
    write_text_file((out_dir / "verify.json").string(), dump_json(out));
    return pass ? kExitOk : kExitIdentityFailure;
}

int cmd_sweep(const ExperimentConfig& config, const CommandOptions& opts) {
    const auto out_dir = resolve_out_dir(config, opts);
    std::vector<double> betas = resolve_betas(config, opts, {});
    const TabularPolicy prior = config.make_prior();
    const std::vector<SweepRow> rows = beta_sweep(prior, config.reward, betas);

    std::ostringstream csv;
    csv << "beta,expected_reward,kl_to_prior,entropy\n";
    for (const SweepRow& row : rows) {
        csv << format_double(row.beta) << "," << format_double(row.expected_reward)
            << "," << format_double(row.kl_to_prior) << ","
            << format_double(row.entropy) << "\n";
    }
    write_text_file((out_dir / "sweep.csv").string(), csv.str());
    write_text_file((out_dir / "sweep.svg").string(), sweep_chart_svg(rows));
    return kExitOk;
}

int run_command(const std::string& name, const std::string& config_path,
                const CommandOptions& opts) {
    try {
        const ExperimentConfig config = load_config(config_path);
        if (name == "enumerate") return cmd_enumerate(config, opts);
        if (name == "oracle") return cmd_oracle(config, opts);
        if (name == "train") return cmd_train(config, opts);
        if (name == "verify") return cmd_verify(config, opts);
        if (name == "sweep") return cmd_sweep(config, opts);
        std::cerr << "unknown command: " << name << "\n";
        return kExitConfigInvalid;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigInvalid;
    } catch (const Json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigInvalid;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigInvalid;
    }
}

}  // namespace seqtune
