// Acceptance suite: one line per criterion, every threshold pinned in code.
// Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "seqtune/commands.hpp"
#include "seqtune/oracle.hpp"
#include "seqtune/trainer.hpp"
#include "test_support.hpp"

using namespace seqtune;
using namespace seqtune::testing;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;
fs::path g_out_root;

std::string config_path(const std::string& name) {
    return (fs::path(SEQTUNE_CONFIG_DIR) / name).string();
}

fs::path out_dir(const std::string& name) {
    const fs::path dir = g_out_root / name;
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream out;
    out << f.rdbuf();
    return out.str();
}

void criterion(int number, const std::string& label, double time_limit_s,
               const std::function<bool(std::string&)>& body) {
    std::string detail;
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (elapsed > time_limit_s) {
        ok = false;
        detail += (detail.empty() ? "" : "; ") + std::string("over time limit");
    }
    if (!ok) ++g_failures;
    std::printf("%s  criterion %d: %s (%.2fs/%gs)%s%s\n", ok ? "PASS" : "FAIL",
                number, label.c_str(), elapsed, time_limit_s,
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
}

Json summary_of(const fs::path& dir) {
    return Json::parse(slurp(dir / "summary.json"));
}

double final_metric(const Json& summary, const std::string& name) {
    const Json& v = summary.at("final").at(name);
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                       : v.get<double>();
}

// ---------------------------------------------------------------------------
// criterion bodies
// ---------------------------------------------------------------------------

bool identity_suite(std::string& detail) {
    CommandOptions opts;
    opts.out_dir = out_dir("verify").string();
    const int code = run_command("verify", config_path("default.json"), opts);
    if (code != kExitOk) {
        detail = "verify exit code " + std::to_string(code);
        return false;
    }
    const Json report = Json::parse(slurp(out_dir("verify") / "verify.json"));
    double worst = 0.0;
    for (const Json& r : report.at("results")) {
        worst = std::max(worst, r.at("max_residual_affine_identity").get<double>());
        worst = std::max(worst, r.at("max_residual_reward_reshaping").get<double>());
    }
    detail = "max residual " + format_double(worst);
    return worst < 1e-8;
}

bool gibbs_convergence(std::string& detail) {
    CommandOptions opts;
    opts.out_dir = out_dir("klrl").string();
    const int code = run_command("train", config_path("default.json"), opts);
    if (code != kExitOk) {
        detail = "train exit code " + std::to_string(code);
        return false;
    }
    const Json summary = summary_of(out_dir("klrl"));
    const double kl = final_metric(summary, "kl_to_target");

    const ExperimentConfig config = load_config(config_path("default.json"));
    const TargetDistribution target =
        gibbs_posterior(config.make_prior(), config.reward, 1.0);
    const double gap =
        std::abs(final_metric(summary, "objective") - target.log_z);
    detail = "kl_to_target " + format_double(kl) + ", |J - beta log Z| " +
             format_double(gap);
    return kl < 1e-6 && gap < 1e-5;
}

bool collapse(std::string& detail) {
    CommandOptions opts;
    opts.out_dir = out_dir("purerl").string();
    if (run_command("train", config_path("purerl_collapse.json"), opts) !=
        kExitOk) {
        detail = "unique-argmax run failed";
        return false;
    }
    const Json summary = summary_of(out_dir("purerl"));
    const double entropy_final = final_metric(summary, "entropy");
    const double mass = final_metric(summary, "argmax_mass");

    opts.out_dir = out_dir("purerl_tied").string();
    if (run_command("train", config_path("purerl_tied.json"), opts) != kExitOk) {
        detail = "tied run failed";
        return false;
    }
    const ExperimentConfig tied_config =
        load_config(config_path("purerl_tied.json"));
    const TabularPolicy final_policy = policy_from_snapshot(
        Json::parse(slurp(out_dir("purerl_tied") / "policy.json")));
    const std::vector<Index> tie_set =
        argmax_set(tied_config.reward, tied_config.space);
    const Vec dist = final_policy.distribution();
    bool contained = true;
    for (Index i = 0; i < dist.size(); ++i) {
        if (dist(i) > 1e-6 &&
            std::find(tie_set.begin(), tie_set.end(), i) == tie_set.end()) {
            contained = false;
        }
    }
    detail = "entropy " + format_double(entropy_final) + ", argmax_mass " +
             format_double(mass) + ", tied support contained " +
             (contained ? "yes" : "no");
    return entropy_final < 0.01 && mass > 0.999 && contained;
}

bool dissociation(std::string& detail) {
    struct Run {
        const char* name;
        Json summary;
    };
    std::vector<Run> runs;
    for (const char* name : {"purerl", "klrl", "gdc"}) {
        CommandOptions opts;
        opts.out_dir = (out_dir("dissociation") / name).string();
        const int code = run_command(
            "train", config_path(std::string("dissociation/") + name + ".json"),
            opts);
        if (code != kExitOk) {
            detail = std::string(name) + " exit code " + std::to_string(code);
            return false;
        }
        runs.push_back({name, summary_of(out_dir("dissociation") / name)});
    }

    const ExperimentConfig config =
        load_config(config_path("dissociation/klrl.json"));
    const double target_entropy =
        entropy(gibbs_posterior(config.make_prior(), config.reward, 1.0).probs);

    // Three-way outcome table.
    std::ostringstream table;
    table << "method,entropy,kl_to_target,fwd_kl_from_target\n";
    for (const Run& run : runs) {
        table << run.name << "," << format_double(final_metric(run.summary, "entropy"))
              << "," << format_double(final_metric(run.summary, "kl_to_target"))
              << ","
              << format_double(final_metric(run.summary, "fwd_kl_from_target"))
              << "\n";
    }
    write_text_file((out_dir("dissociation") / "outcome.csv").string(),
                    table.str());

    const double gdc_fwd_kl = final_metric(runs[2].summary, "fwd_kl_from_target");
    const double purerl_entropy = final_metric(runs[0].summary, "entropy");
    const double klrl_entropy_gap =
        std::abs(final_metric(runs[1].summary, "entropy") - target_entropy);
    detail = "gdc fwd KL " + format_double(gdc_fwd_kl) + ", pure-rl entropy " +
             format_double(purerl_entropy) + ", klrl |H - H*| " +
             format_double(klrl_entropy_gap);
    return gdc_fwd_kl < 1e-3 && purerl_entropy < 0.05 && klrl_entropy_gap < 0.05;
}

bool estimator_unbiasedness(std::string& detail) {
    const ExperimentConfig config = load_config(config_path("default.json"));
    const TabularPolicy policy = config.make_prior();
    const TabularPolicy& prior = policy;
    const TargetDistribution target =
        gibbs_posterior(prior, config.reward, 1.0);
    const int batches = 200;
    const Index batch_size = 512;
    Rng unused(0);

    // Per-coordinate z of the batch-mean gradients against the exact gradient.
    const auto pass_fraction = [&](const Mat& exact,
                                   const std::function<Mat(Rng&)>& draw,
                                   std::uint64_t seed) {
        Rng rng(seed);
        Mat sum = Mat::Zero(exact.rows(), exact.cols());
        Mat sum_sq = sum;
        for (int b = 0; b < batches; ++b) {
            const Mat g = draw(rng);
            sum += g;
            sum_sq += g.cwiseProduct(g);
        }
        int pass = 0;
        const double n = batches;
        for (Index r = 0; r < exact.rows(); ++r) {
            for (Index c = 0; c < exact.cols(); ++c) {
                const double mean = sum(r, c) / n;
                const double var =
                    (sum_sq(r, c) - sum(r, c) * sum(r, c) / n) / (n - 1.0);
                const double se = std::sqrt(std::max(var, 0.0) / n);
                if (se == 0.0 ? mean == exact(r, c)
                              : std::abs(mean - exact(r, c)) <= 4.0 * se) {
                    ++pass;
                }
            }
        }
        return static_cast<double>(pass) / static_cast<double>(exact.size());
    };

    ObjectiveSpec exact_pure{ObjectiveKind::PureRL, 1.0, {}, GdcWeighting::ExactZ};
    ObjectiveSpec exact_klrl{ObjectiveKind::KLRL, 1.0, {}, GdcWeighting::ExactZ};
    ObjectiveSpec exact_gdc{ObjectiveKind::GDC, 1.0, {}, GdcWeighting::ExactZ};
    ObjectiveSpec mc_pure = exact_pure;
    mc_pure.estimator = {EstimatorKind::MonteCarlo, batch_size, BaselineKind::None};
    ObjectiveSpec mc_klrl = exact_klrl;
    mc_klrl.estimator = mc_pure.estimator;
    ObjectiveSpec mc_gdc = exact_gdc;
    mc_gdc.estimator = mc_pure.estimator;

    const double frac_pure = pass_fraction(
        grad_pure_rl(policy, config.reward, exact_pure, unused).grad,
        [&](Rng& r) {
            return grad_pure_rl(policy, config.reward, mc_pure, r).grad;
        },
        1001);
    const double frac_klrl = pass_fraction(
        grad_klrl(policy, prior, config.reward, exact_klrl, unused).grad,
        [&](Rng& r) {
            return grad_klrl(policy, prior, config.reward, mc_klrl, r).grad;
        },
        1002);
    const double frac_gdc = pass_fraction(
        grad_gdc(policy, target, exact_gdc, unused).grad,
        [&](Rng& r) { return grad_gdc(policy, target, mc_gdc, r).grad; }, 1003);

    detail = "z-pass fractions " + format_double(frac_pure) + " / " +
             format_double(frac_klrl) + " / " + format_double(frac_gdc);
    return frac_pure >= 0.95 && frac_klrl >= 0.95 && frac_gdc >= 0.95;
}

bool gradient_correctness(std::string& detail) {
    const ExperimentConfig config = load_config(config_path("default.json"));
    const SequenceSpace& space = config.space;
    const TabularPolicy prior = config.make_prior();
    const TargetDistribution target =
        gibbs_posterior(prior, config.reward, 1.0);
    const Vec reward_values = config.reward.values(space);
    Dataset data;
    space.for_each_sequence([&](Index i, const Sequence& x) {
        if (i % 2 == 0) data.push_back(x);
    });
    Rng rng(31);
    Rng unused(0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const TabularPolicy policy =
            gaussian_logits_prior(space, 1.0, rng.next_u64());

        ObjectiveSpec spec{ObjectiveKind::PureRL, 1.0, {}, GdcWeighting::ExactZ};
        worst = std::max(
            worst, relative_error(
                       grad_pure_rl(policy, config.reward, spec, unused).grad,
                       finite_difference(
                           [&](const TabularPolicy& p) {
                               return expected_value(p.distribution(), reward_values);
                           },
                           policy)));

        spec.kind = ObjectiveKind::KLRL;
        worst = std::max(
            worst,
            relative_error(
                grad_klrl(policy, prior, config.reward, spec, unused).grad,
                finite_difference(
                    [&](const TabularPolicy& p) {
                        return klrl_objective(p, prior, config.reward, 1.0);
                    },
                    policy)));

        spec.kind = ObjectiveKind::GDC;
        worst = std::max(
            worst, relative_error(grad_gdc(policy, target, spec, unused).grad,
                                  finite_difference(
                                      [&](const TabularPolicy& p) {
                                          return -kl_divergence(target.probs,
                                                                p.distribution());
                                      },
                                      policy)));

        worst = std::max(
            worst, relative_error(grad_mle(policy, data).grad,
                                  finite_difference(
                                      [&](const TabularPolicy& p) {
                                          double ll = 0.0;
                                          for (const Sequence& x : data) {
                                              ll += p.log_prob(x);
                                          }
                                          return ll / static_cast<double>(data.size());
                                      },
                                      policy)));
    }
    detail = "worst relative error " + format_double(worst);
    return worst < 1e-4;
}

bool tempering(std::string& detail) {
    CommandOptions opts;
    opts.out_dir = out_dir("sweep").string();
    if (run_command("sweep", config_path("sweep.json"), opts) != kExitOk) {
        detail = "sweep failed";
        return false;
    }
    std::istringstream in(slurp(out_dir("sweep") / "sweep.csv"));
    std::string line;
    std::getline(in, line);  // header
    double last_reward = std::numeric_limits<double>::infinity();
    double last_kl = std::numeric_limits<double>::infinity();
    double final_kl = std::numeric_limits<double>::infinity();
    bool monotone = true;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        std::string field;
        std::getline(fields, field, ',');
        std::getline(fields, field, ',');
        const double reward = std::stod(field);
        std::getline(fields, field, ',');
        const double kl = std::stod(field);
        monotone = monotone && reward <= last_reward + 1e-12 &&
                   kl <= last_kl + 1e-12;
        last_reward = reward;
        last_kl = kl;
        final_kl = kl;
    }
    detail = "monotone " + std::string(monotone ? "yes" : "no") +
             ", kl at beta 1e6 " + format_double(final_kl);
    return monotone && final_kl < 1e-9;
}

bool micro_instance(std::string& detail) {
    CommandOptions opts;
    opts.out_dir = out_dir("micro").string();
    if (run_command("oracle", config_path("two_sequence.json"), opts) != kExitOk) {
        detail = "oracle failed";
        return false;
    }
    const Json out = Json::parse(slurp(out_dir("micro") / "oracle.json"));
    const double z = std::exp(out.at("log_Z").get<double>());
    const double p0 = out.at("posterior").at(0).get<double>();
    const double p1 = out.at("posterior").at(1).get<double>();
    detail = "Z " + format_double(z) + ", posterior (" + format_double(p0) +
             ", " + format_double(p1) + ")";
    return std::abs(z - 2.0) < 1e-12 && std::abs(p0 - 0.75) < 1e-12 &&
           std::abs(p1 - 0.25) < 1e-12;
}

bool determinism(std::string& detail) {
    struct Job {
        const char* command;
        const char* config;
        std::vector<const char*> files;
    };
    const std::vector<Job> jobs = {
        {"enumerate", "default.json", {"sequences.csv"}},
        {"oracle", "two_sequence.json", {"oracle.json"}},
        {"train", "default.json", {"metrics.csv", "summary.json", "policy.json"}},
        {"train", "dissociation/gdc.json",
         {"metrics.csv", "summary.json", "policy.json"}},
        {"verify", "default.json", {"verify.json"}},
        {"sweep", "sweep.json", {"sweep.csv", "sweep.svg"}},
    };
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const fs::path dir_a = out_dir("determinism_a_" + std::to_string(j));
        const fs::path dir_b = out_dir("determinism_b_" + std::to_string(j));
        for (const fs::path& dir : {dir_a, dir_b}) {
            CommandOptions opts;
            opts.out_dir = dir.string();
            const int code = run_command(jobs[j].command,
                                         config_path(jobs[j].config), opts);
            if (code != kExitOk) {
                detail = std::string(jobs[j].command) + " exit code " +
                         std::to_string(code);
                return false;
            }
        }
        for (const char* file : jobs[j].files) {
            if (slurp(dir_a / file) != slurp(dir_b / file)) {
                detail = std::string(jobs[j].command) + "/" + file + " differs";
                return false;
            }
        }
    }
    detail = "all reruns byte-identical";
    return true;
}

}  // namespace

int main() {
    g_out_root = fs::temp_directory_path() /
                 ("seqtune_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(g_out_root);
    fs::create_directories(g_out_root);

    criterion(1, "identity suite over beta {0.1, 1, 10}", 5.0, identity_suite);
    criterion(2, "penalized training converges to the tilted posterior", 10.0,
              gibbs_convergence);
    criterion(3, "pure reward maximisation collapses onto the argmax set", 10.0,
              collapse);
    criterion(4, "three-way dissociation on one instance", 60.0, dissociation);
    criterion(5, "Monte-Carlo gradient estimators are unbiased", 30.0,
              estimator_unbiasedness);
    criterion(6, "analytic gradients match finite differences", 30.0,
              gradient_correctness);
    criterion(7, "tempering trade-off is monotone", 2.0, tempering);
    criterion(8, "worked two-sequence instance", 1.0, micro_instance);
    criterion(9, "reruns are byte-identical", 120.0, determinism);

    if (g_failures == 0) {
        std::printf("acceptance: all 9 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) failed\n", g_failures);
    return 1;
}
