#ifndef FG_STUDY_HPP
#define FG_STUDY_HPP

// Replication engine for the simulation experiments: generate data from a
// scenario, fit every requested method, score and summarize.

#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fg/baselines.hpp"
#include "fg/ecm.hpp"
#include "fg/gibbs.hpp"

namespace fg {

/// Invalid study configuration; the message carries the line and field.
class ConfigError : public DomainError {
public:
    using DomainError::DomainError;
};

struct Scenario {
    std::string name;  // E1a, E1b, E2, E3, E4
    std::size_t default_n;
    std::optional<FgParams> fg_truth;  // set for E1a / E1b
    std::string reference_tag;         // set for E2-E4
};

/// Throws ConfigError for unknown names.
Scenario scenario_by_name(const std::string& name);

inline const std::vector<std::string> kStudyMethods = {"fg_ecm", "fg_bayes", "nm_em"};

struct StudyConfig {
    std::string scenario = "E1b";
    std::size_t n = 0;  // 0 selects the scenario default
    int n_reps = 200;
    std::vector<std::string> methods = {"fg_ecm"};
    std::uint64_t seed = 20240101;
    std::string output_path;
    bool paper = false;
    std::size_t kl_eval = 50000;
    EcmConfig ecm;
    McmcConfig mcmc = desk_mcmc();

    static McmcConfig desk_mcmc();

    std::size_t sample_size() const;
    void validate() const;
    /// Switches to full replication scale (1000 replicates).
    void apply_paper_mode();

    /// key = value lines, '#' comments. Unknown keys and malformed values
    /// raise ConfigError naming the line.
    static StudyConfig parse(std::istream& in, const std::string& source);
    static StudyConfig load(const std::string& path);
    nlohmann::json to_json() const;
};

/// One fitted method on one replicate.
struct ReplicateRecord {
    int replicate = 0;
    std::string method;
    std::string status = "ok";  // ok | nonconverged | error
    std::string message;
    /// FG methods: theta, sigma1, sigma2, w. NM: mu1, mu2, s1, s2, w.
    std::vector<double> estimates;
    std::vector<double> std_errors;  // FG only; sandwich se or posterior sd
    double loglik = 0.0;
    double kl = std::numeric_limits<double>::quiet_NaN();
    double max_rhat = std::numeric_limits<double>::quiet_NaN();
};

struct ParamSummaryRow {
    std::string param;
    double truth = std::numeric_limits<double>::quiet_NaN();
    double point_est = 0.0;  // mean of estimates
    double sd_hat = 0.0;     // mean of estimated sds
    double sd = 0.0;         // empirical sd of estimates
    double mcse_point_est = 0.0;
    double mcse_sd_hat = 0.0;
    double mcse_sd = 0.0;
};

struct BoxplotStats {
    std::size_t n = 0;
    double min = 0, lower_whisker = 0, q1 = 0, median = 0, q3 = 0, upper_whisker = 0, max = 0, mean = 0;
};

struct MethodSummary {
    std::string method;
    int n_ok = 0;
    int n_nonconverged = 0;
    int n_error = 0;
    double nonconvergence_rate = 0.0;
    std::vector<ParamSummaryRow> params;
    std::optional<BoxplotStats> kl;
    double max_rhat = std::numeric_limits<double>::quiet_NaN();
};

struct StudySummary {
    StudyConfig config;
    std::vector<MethodSummary> methods;
    std::vector<ReplicateRecord> records;

    const MethodSummary& method(const std::string& name) const;
    nlohmann::json to_json() const;
};

/// Fully determined by cfg (including its seed). Writes replicates.csv,
/// summary.json and kl_boxplot.csv under cfg.output_path when it is set.
StudySummary run_study(const StudyConfig& cfg);

BoxplotStats boxplot_stats(std::vector<double> v);

std::string replicates_csv(const StudySummary& s);
std::string kl_boxplot_csv(const StudySummary& s);

}  // namespace fg

#endif
