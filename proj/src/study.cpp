#include "fg/study.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "fg/io.hpp"
#include "fg/parallel.hpp"
#include "fg/rng.hpp"

namespace fg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string> kFgNames = {"theta", "sigma1", "sigma2", "w"};
const std::vector<std::string> kNmNames = {"mu1", "mu2", "s1", "s2", "w"};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& value, const std::string& where) {
    T out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError(where + ": cannot parse '" + value + "' as a number");
    return out;
}

bool parse_bool(const std::string& value, const std::string& where) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError(where + ": expected true or false, got '" + value + "'");
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? kNaN : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return kNaN;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double quantile7(const std::vector<double>& sorted, double q) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

nlohmann::json maybe_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

struct Truth {
    LogDensity logpdf;
    std::function<std::vector<double>(std::size_t, std::uint64_t)> sample;
    std::vector<double> fg_values;  // empty unless the truth is FG
};

Truth make_truth(const Scenario& sc) {
    if (sc.fg_truth) {
        const FgParams p = *sc.fg_truth;
        return {[p](double x) { return fg_logpdf(x, p); },
                [p](std::size_t n, std::uint64_t seed) { return fg_sample(p, n, seed).values; },
                {p.theta(), p.sigma1(), p.sigma2(), p.w()}};
    }
    const ReferenceDensity ref = reference_density(sc.reference_tag);
    return {ref.logpdf, [ref](std::size_t n, std::uint64_t seed) { return ref.sample(n, seed); }, {}};
}

std::vector<ReplicateRecord> run_replicate(const StudyConfig& cfg, const Truth& truth, int rep) {
    const std::size_t n = cfg.sample_size();
    const std::uint64_t data_seed =
        derive_seed(cfg.seed, {hash_tag(cfg.scenario), static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)});
    const DataSample y{truth.sample(n, data_seed), cfg.scenario};
    const std::vector<double> oracle = truth.sample(cfg.kl_eval, derive_seed(data_seed, {hash_tag("kl-oracle")}));

    std::vector<ReplicateRecord> out;
    for (const std::string& method : cfg.methods) {
        ReplicateRecord r;
        r.replicate = rep;
        r.method = method;
        const std::uint64_t method_seed = derive_seed(data_seed, {hash_tag(method)});
        try {
            if (method == "fg_ecm") {
                EcmConfig e = cfg.ecm;
                e.seed = method_seed;
                const FitResult f = fit_ecm(y, e);
                const FgParams& p = f.params;
                r.estimates = {p.theta(), p.sigma1(), p.sigma2(), p.w()};
                r.std_errors.assign(4, kNaN);
                if (f.vcov_ok)
                    for (int k = 0; k < 4; ++k) r.std_errors[static_cast<std::size_t>(k)] = std::sqrt(f.vcov(k, k));
                else
                    r.message = f.vcov_error;
                r.loglik = f.loglik;
                r.kl = empirical_kl(truth.logpdf, [&](double x) { return fg_logpdf(x, p); }, oracle, method).d_kl;
                if (!f.converged) r.status = "nonconverged";
            } else if (method == "fg_bayes") {
                McmcConfig m = cfg.mcmc;
                m.seed = method_seed;
                const PosteriorDraws d = run_mcmc(y, PriorSpec{}, m);
                const FgParams p = posterior_median_params(d);
                r.estimates = {p.theta(), p.sigma1(), p.sigma2(), p.w()};
                for (const auto& name : kFgNames) r.std_errors.push_back(d.summaries[static_cast<std::size_t>(d.column(name))].sd);
                r.loglik = fg_loglik(y.values, p);
                r.max_rhat = d.max_rhat();
                r.kl = empirical_kl(truth.logpdf, [&](double x) { return fg_logpdf(x, p); }, oracle, method).d_kl;
                if (!(r.max_rhat < 1.05)) {
                    r.status = "nonconverged";
                    r.message = "max Rhat " + format_double(r.max_rhat) + " >= 1.05";
                }
            } else {
                EcmConfig e = cfg.ecm;
                e.seed = method_seed;
                const NormalMixFit f = fit_normal_mixture_em(y, e);
                const NormalMixParams& p = f.params;
                r.estimates = {p.mu1, p.mu2, p.s1, p.s2, p.w};
                r.loglik = f.loglik;
                r.kl = empirical_kl(truth.logpdf, [&](double x) { return normal_mix_logpdf(x, p); }, oracle, method).d_kl;
                if (!f.converged) {
                    r.status = "nonconverged";
                    r.message = f.degenerate ? "degenerate component" : "iteration limit reached";
                }
            }
        } catch (const std::exception& e) {
            r.status = "error";
            r.message = e.what();
        }
        out.push_back(std::move(r));
    }
    return out;
}

MethodSummary summarize_method(const std::string& method, const std::vector<ReplicateRecord>& records,
                               const std::vector<double>& fg_truth) {
    MethodSummary s;
    s.method = method;
    std::vector<const ReplicateRecord*> ok;
    std::vector<double> kl;
    for (const auto& r : records) {
        if (r.method != method) continue;
        if (std::isfinite(r.max_rhat)) s.max_rhat = std::isnan(s.max_rhat) ? r.max_rhat : std::max(s.max_rhat, r.max_rhat);
        if (r.status == "ok") {
            ++s.n_ok;
            ok.push_back(&r);
            kl.push_back(r.kl);
        } else if (r.status == "nonconverged") {
            ++s.n_nonconverged;
        } else {
            ++s.n_error;
        }
    }
    const int total = s.n_ok + s.n_nonconverged + s.n_error;
    s.nonconvergence_rate = total > 0 ? static_cast<double>(s.n_nonconverged) / total : kNaN;

    const bool is_nm = method == "nm_em";
    const auto& names = is_nm ? kNmNames : kFgNames;
    for (std::size_t k = 0; k < names.size(); ++k) {
        ParamSummaryRow row;
        row.param = names[k];
        if (!is_nm && k < fg_truth.size()) row.truth = fg_truth[k];
        std::vector<double> est;
        std::vector<double> se;
        for (const auto* r : ok) {
            est.push_back(r->estimates[k]);
            if (!is_nm && std::isfinite(r->std_errors[k])) se.push_back(r->std_errors[k]);
        }
        const double R = static_cast<double>(est.size());
        row.point_est = mean_of(est);
        row.sd = sd_of(est);
        row.mcse_point_est = row.sd / std::sqrt(R);
        row.mcse_sd = R > 1 ? row.sd / std::sqrt(2.0 * (R - 1.0)) : kNaN;
        row.sd_hat = is_nm ? kNaN : mean_of(se);
        row.mcse_sd_hat = is_nm ? kNaN : sd_of(se) / std::sqrt(static_cast<double>(se.size()));
        s.params.push_back(row);
    }
    if (!kl.empty()) s.kl = boxplot_stats(kl);
    return s;
}

nlohmann::json boxplot_json(const BoxplotStats& b) {
    return {{"n", b.n},
            {"min", maybe_number(b.min)},
            {"lower_whisker", maybe_number(b.lower_whisker)},
            {"q1", maybe_number(b.q1)},
            {"median", maybe_number(b.median)},
            {"q3", maybe_number(b.q3)},
            {"upper_whisker", maybe_number(b.upper_whisker)},
            {"max", maybe_number(b.max)},
            {"mean", maybe_number(b.mean)}};
}

}  // namespace

Scenario scenario_by_name(const std::string& name) {
    if (name == "E1a") return {"E1a", 50, FgParams(1.0, 1.0, 1.0, 0.4), ""};
    if (name == "E1b") return {"E1b", 200, FgParams(0.0, 1.0, 5.0, 0.5), ""};
    if (name == "E2") return {"E2", 200, std::nullopt, "laplace(0,2)"};
    if (name == "E3") return {"E3", 200, std::nullopt, "gumbelmax_mix(0;2,6;0.5)"};
    if (name == "E4") return {"E4", 200, std::nullopt, "student_t(5)"};
    throw ConfigError("unknown scenario '" + name + "' (expected E1a, E1b, E2, E3 or E4)");
}

McmcConfig StudyConfig::desk_mcmc() {
    McmcConfig m;
    m.n_iter = 5000;
    m.burn_in = 1500;
    m.n_chains = 4;
    return m;
}

std::size_t StudyConfig::sample_size() const { return n != 0 ? n : scenario_by_name(scenario).default_n; }

void StudyConfig::validate() const {
    const Scenario sc = scenario_by_name(scenario);
    if (n_reps < 1) throw ConfigError("n_reps must be at least 1");
    if (sample_size() < 5) throw ConfigError("sample size n must be at least 5");
    if (kl_eval < 1) throw ConfigError("kl_eval must be at least 1");
    if (methods.empty()) throw ConfigError("at least one method is required");
    std::set<std::string> seen;
    for (const auto& m : methods) {
        if (std::find(kStudyMethods.begin(), kStudyMethods.end(), m) == kStudyMethods.end())
            throw ConfigError("unknown method '" + m + "' (expected fg_ecm, fg_bayes or nm_em)");
        if (!seen.insert(m).second) throw ConfigError("method '" + m + "' listed twice");
    }
    if (paper) {
        const std::size_t nn = sample_size();
        const bool ok = sc.name == "E1b" ? (nn == 100 || nn == 200) : nn == sc.default_n;
        if (!ok) throw ConfigError("paper mode requires the published sample size for " + sc.name);
    }
    ecm.validate();
    mcmc.validate();
}

void StudyConfig::apply_paper_mode() {
    paper = true;
    n_reps = 1000;
    mcmc = McmcConfig{};
}

StudyConfig StudyConfig::parse(std::istream& in, const std::string& source) {
    struct Entry {
        std::string where, key, value;
    };
    std::vector<Entry> entries;
    std::string line;
    int line_no = 0;
    bool paper = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        Entry e{where, trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
        if (e.key == "paper") paper = parse_bool(e.value, where + ": field 'paper'");
        entries.push_back(std::move(e));
    }

    StudyConfig c;
    if (paper) c.apply_paper_mode();
    bool methods_set = false;
    for (const auto& [where, key, value] : entries) {
        const std::string field = where + ": field '" + key + "'";
        if (key == "scenario") {
            try {
                scenario_by_name(value);
            } catch (const ConfigError& e) {
                throw ConfigError(field + ": " + e.what());
            }
            c.scenario = value;
        } else if (key == "n") {
            c.n = parse_number<std::size_t>(value, field);
        } else if (key == "n_reps") {
            c.n_reps = parse_number<int>(value, field);
        } else if (key == "methods") {
            c.methods.clear();
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) {
                item = trim(item);
                if (!item.empty()) c.methods.push_back(item);
            }
            methods_set = true;
        } else if (key == "seed") {
            c.seed = parse_number<std::uint64_t>(value, field);
        } else if (key == "output_path") {
            c.output_path = value;
        } else if (key == "paper") {
        } else if (key == "kl_eval") {
            c.kl_eval = parse_number<std::size_t>(value, field);
        } else if (key == "ecm.max_iter") {
            c.ecm.max_iter = parse_number<int>(value, field);
        } else if (key == "ecm.tol") {
            c.ecm.tol = parse_number<double>(value, field);
        } else if (key == "ecm.n_starts") {
            c.ecm.n_starts = parse_number<int>(value, field);
        } else if (key == "mcmc.n_iter") {
            c.mcmc.n_iter = parse_number<int>(value, field);
        } else if (key == "mcmc.burn_in") {
            c.mcmc.burn_in = parse_number<int>(value, field);
        } else if (key == "mcmc.thin") {
            c.mcmc.thin = parse_number<int>(value, field);
        } else if (key == "mcmc.n_chains") {
            c.mcmc.n_chains = parse_number<int>(value, field);
        } else {
            throw ConfigError(where + ": unknown field '" + key + "'");
        }
    }
    if (!methods_set && c.scenario != "E1a" && c.scenario != "E1b") c.methods = kStudyMethods;
    try {
        c.validate();
    } catch (const DomainError& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return c;
}

StudyConfig StudyConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open study config " + path);
    return parse(in, path);
}

nlohmann::json StudyConfig::to_json() const {
    return {{"scenario", scenario},
            {"n", sample_size()},
            {"n_reps", n_reps},
            {"methods", methods},
            {"seed", seed},
            {"output_path", output_path},
            {"paper", paper},
            {"kl_eval", kl_eval},
            {"ecm", {{"max_iter", ecm.max_iter}, {"tol", ecm.tol}, {"n_starts", ecm.n_starts}}},
            {"mcmc",
             {{"n_iter", mcmc.n_iter}, {"burn_in", mcmc.burn_in}, {"thin", mcmc.thin}, {"n_chains", mcmc.n_chains}}}};
}

const MethodSummary& StudySummary::method(const std::string& name) const {
    for (const auto& m : methods)
        if (m.method == name) return m;
    throw DomainError("method " + name + " not part of this study");
}

nlohmann::json StudySummary::to_json() const {
    nlohmann::json j;
    j["config"] = config.to_json();
    j["methods"] = nlohmann::json::array();
    for (const auto& m : methods) {
        nlohmann::json jm = {{"method", m.method},
                             {"n_ok", m.n_ok},
                             {"n_nonconverged", m.n_nonconverged},
                             {"n_error", m.n_error},
                             {"nonconvergence_rate", maybe_number(m.nonconvergence_rate)},
                             {"max_rhat", maybe_number(m.max_rhat)}};
        jm["params"] = nlohmann::json::array();
        for (const auto& p : m.params) {
            jm["params"].push_back({{"param", p.param},
                                    {"truth", maybe_number(p.truth)},
                                    {"point_est", maybe_number(p.point_est)},
                                    {"sd_hat", maybe_number(p.sd_hat)},
                                    {"sd", maybe_number(p.sd)},
                                    {"mcse_point_est", maybe_number(p.mcse_point_est)},
                                    {"mcse_sd_hat", maybe_number(p.mcse_sd_hat)},
                                    {"mcse_sd", maybe_number(p.mcse_sd)}});
        }
        jm["kl"] = m.kl ? boxplot_json(*m.kl) : nlohmann::json(nullptr);
        j["methods"].push_back(jm);
    }
    return j;
}

BoxplotStats boxplot_stats(std::vector<double> v) {
    if (v.empty()) throw DomainError("boxplot of an empty sample");
    std::sort(v.begin(), v.end());
    BoxplotStats b;
    b.n = v.size();
    b.min = v.front();
    b.max = v.back();
    b.q1 = quantile7(v, 0.25);
    b.median = quantile7(v, 0.5);
    b.q3 = quantile7(v, 0.75);
    b.mean = mean_of(v);
    const double iqr = b.q3 - b.q1;
    b.lower_whisker = *std::lower_bound(v.begin(), v.end(), b.q1 - 1.5 * iqr);
    b.upper_whisker = *(std::upper_bound(v.begin(), v.end(), b.q3 + 1.5 * iqr) - 1);
    return b;
}

std::string replicates_csv(const StudySummary& s) {
    std::ostringstream out;
    out << "replicate,method,status,param,estimate,sd,loglik,kl,max_rhat,message\n";
    for (const auto& r : s.records) {
        auto msg = r.message;
        std::replace(msg.begin(), msg.end(), '"', '\'');
        const std::string tail = format_double(r.loglik) + "," + format_double(r.kl) + "," +
                                 format_double(r.max_rhat) + ",\"" + msg + "\"\n";
        if (r.estimates.empty()) {
            out << r.replicate << "," << r.method << "," << r.status << ",,,," << tail;
            continue;
        }
        const auto& names = r.method == "nm_em" ? kNmNames : kFgNames;
        for (std::size_t k = 0; k < r.estimates.size(); ++k) {
            const double se = k < r.std_errors.size() ? r.std_errors[k] : kNaN;
            out << r.replicate << "," << r.method << "," << r.status << "," << names[k] << ","
                << format_double(r.estimates[k]) << "," << format_double(se) << "," << tail;
        }
    }
    return out.str();
}

std::string kl_boxplot_csv(const StudySummary& s) {
    std::ostringstream out;
    out << "scenario,method,n,min,lower_whisker,q1,median,q3,upper_whisker,max,mean\n";
    for (const auto& m : s.methods) {
        if (!m.kl) continue;
        const BoxplotStats& b = *m.kl;
        out << s.config.scenario << "," << m.method << "," << b.n;
        for (double v : {b.min, b.lower_whisker, b.q1, b.median, b.q3, b.upper_whisker, b.max, b.mean})
            out << "," << format_double(v);
        out << "\n";
    }
    return out.str();
}

StudySummary run_study(const StudyConfig& cfg) {
    cfg.validate();
    const Truth truth = make_truth(scenario_by_name(cfg.scenario));

    std::vector<std::vector<ReplicateRecord>> per_rep(static_cast<std::size_t>(cfg.n_reps));
    parallel_for(per_rep.size(), [&](std::size_t i) { per_rep[i] = run_replicate(cfg, truth, static_cast<int>(i)); });

    StudySummary s;
    s.config = cfg;
    for (auto& rs : per_rep)
        for (auto& r : rs) s.records.push_back(std::move(r));
    for (const auto& m : cfg.methods) s.methods.push_back(summarize_method(m, s.records, truth.fg_values));

    if (!cfg.output_path.empty()) {
        const std::filesystem::path dir(cfg.output_path);
        write_file_atomic((dir / "replicates.csv").string(), replicates_csv(s));
        write_file_atomic((dir / "summary.json").string(), s.to_json().dump(2) + "\n");
        write_file_atomic((dir / "kl_boxplot.csv").string(), kl_boxplot_csv(s));
    }
    return s;
}

}  // namespace fg
