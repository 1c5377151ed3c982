#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fg/study.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

fg::StudyConfig parse(const std::string& text) {
    std::istringstream in(text);
    return fg::StudyConfig::parse(in, "study.cfg");
}

std::string config_error(const std::string& text) {
    try {
        (void)parse(text);
    } catch (const fg::ConfigError& e) {
        return e.what();
    }
    return "";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fg::StudyConfig small(const std::string& scenario, int reps) {
    fg::StudyConfig c;
    c.scenario = scenario;
    c.n_reps = reps;
    c.kl_eval = 2000;
    c.seed = 99;
    return c;
}

}  // namespace

TEST_CASE("scenarios carry the published settings") {
    const auto a = fg::scenario_by_name("E1a");
    CHECK(a.default_n == 50);
    CHECK(a.fg_truth->theta() == 1.0);
    CHECK(a.fg_truth->w() == 0.4);
    const auto b = fg::scenario_by_name("E1b");
    CHECK(b.fg_truth->sigma2() == 5.0);
    CHECK(fg::scenario_by_name("E4").reference_tag == "student_t(5)");
    CHECK_FALSE(fg::scenario_by_name("E3").fg_truth.has_value());
    CHECK_THROWS_AS(fg::scenario_by_name("E5"), fg::ConfigError);
}

TEST_CASE("config files parse with defaults and paper mode") {
    const auto c = parse("# desk run\nscenario = E1b\nn = 100\nn_reps = 20\nseed = 7\nmethods = fg_ecm, nm_em\n");
    CHECK(c.scenario == "E1b");
    CHECK(c.sample_size() == 100);
    CHECK(c.n_reps == 20);
    CHECK(c.seed == 7);
    CHECK(c.methods == std::vector<std::string>{"fg_ecm", "nm_em"});
    CHECK(c.mcmc.n_iter == 5000);

    CHECK(parse("scenario = E3\n").methods == fg::kStudyMethods);
    CHECK(parse("scenario = E1a\n").sample_size() == 50);

    const auto p = parse("scenario = E1b\npaper = true\n");
    CHECK(p.n_reps == 1000);
    CHECK(p.mcmc.n_iter == fg::McmcConfig{}.n_iter);
    CHECK(parse("paper = true\nn_reps = 5\n").n_reps == 5);
}

TEST_CASE("config errors name the line and the field") {
    CHECK(config_error("scenario = E1b\nbogus = 1\n").find("study.cfg:2") != std::string::npos);
    CHECK(config_error("scenario = E1b\nbogus = 1\n").find("bogus") != std::string::npos);
    const auto bad_n = config_error("n_reps = ten\n");
    CHECK(bad_n.find("study.cfg:1") != std::string::npos);
    CHECK(bad_n.find("n_reps") != std::string::npos);
    CHECK(config_error("scenario = E9\n").find("scenario") != std::string::npos);
    CHECK(config_error("just text\n").find("study.cfg:1") != std::string::npos);
    CHECK_FALSE(config_error("methods = fg_ecm, lasso\n").empty());
    CHECK_FALSE(config_error("n_reps = 0\n").empty());
    CHECK_FALSE(config_error("scenario = E1a\nn = 80\npaper = true\n").empty());
    CHECK_FALSE(config_error("mcmc.burn_in = 9000\n").empty());
    CHECK_THROWS_AS(fg::StudyConfig::load("/nonexistent/study.cfg"), fg::ConfigError);
}

TEST_CASE("boxplot statistics use type-7 quartiles and 1.5 IQR whiskers") {
    const auto b = fg::boxplot_stats({9, 1, 2, 3, 4, 5, 6, 7, 8, 100});
    CHECK(b.n == 10);
    CHECK(b.q1 == doctest::Approx(3.25));
    CHECK(b.median == doctest::Approx(5.5));
    CHECK(b.q3 == doctest::Approx(7.75));
    CHECK(b.lower_whisker == 1.0);
    CHECK(b.upper_whisker == 9.0);
    CHECK(b.max == 100.0);
    CHECK(b.mean == doctest::Approx(14.5));
}

TEST_CASE("identical configs give byte-identical outputs") {
    const fs::path root = fs::temp_directory_path() / "fgtest_study_det";
    fs::remove_all(root);
    auto cfg = small("E1a", 3);
    cfg.methods = {"fg_ecm", "nm_em"};
    cfg.output_path = (root / "a").string();
    const auto s1 = fg::run_study(cfg);
    std::vector<std::string> first;
    for (const char* f : {"replicates.csv", "summary.json", "kl_boxplot.csv"}) {
        REQUIRE(fs::exists(root / "a" / f));
        first.push_back(slurp(root / "a" / f));
    }
    const auto s2 = fg::run_study(cfg);
    int k = 0;
    for (const char* f : {"replicates.csv", "summary.json", "kl_boxplot.csv"}) CHECK(slurp(root / "a" / f) == first[k++]);
    CHECK(s1.to_json() == s2.to_json());
    CHECK(slurp(root / "a" / "summary.json").find("timing") == std::string::npos);
    fs::remove_all(root);

    auto single = small("E1a", 3);
    const auto s3 = fg::run_study(single);
    for (int r = 0; r < 3; ++r) CHECK(s3.records[r].estimates == s1.records[2 * r].estimates);
}

TEST_CASE("summaries agree with the replicate records") {
    auto cfg = small("E1b", 12);
    const auto s = fg::run_study(cfg);
    const auto& m = s.method("fg_ecm");
    std::vector<double> w, kl;
    for (const auto& r : s.records)
        if (r.status == "ok") {
            w.push_back(r.estimates[3]);
            kl.push_back(r.kl);
        }
    REQUIRE(m.n_ok == static_cast<int>(w.size()));
    CHECK(m.n_ok + m.n_nonconverged + m.n_error == 12);
    const auto& row = m.params[3];
    CHECK(row.param == "w");
    CHECK(row.truth == 0.5);
    CHECK(row.point_est == doctest::Approx(oracle::mean(w)).epsilon(1e-12));
    CHECK(row.sd == doctest::Approx(oracle::sd(w)).epsilon(1e-12));
    CHECK(row.mcse_point_est == doctest::Approx(oracle::sd(w) / std::sqrt(w.size())).epsilon(1e-12));
    REQUIRE(m.kl.has_value());
    CHECK(m.kl->median == doctest::Approx(oracle::median(kl)).epsilon(1e-12));
    for (double v : kl) CHECK(v > -0.05);

    const std::string csv = fg::replicates_csv(s);
    CHECK(csv.rfind("replicate,method,status,param", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 12 * 4);
    CHECK(fg::kl_boxplot_csv(s).find("E1b,fg_ecm,") != std::string::npos);
    CHECK_THROWS_AS(s.method("nm_em"), fg::DomainError);
}

TEST_CASE("excluded replicates are accounted for") {
    auto cfg = small("E4", 30);
    cfg.methods = {"fg_ecm", "nm_em"};
    const auto s = fg::run_study(cfg);
    for (const auto& m : s.methods) {
        const int in_kl = m.kl ? static_cast<int>(m.kl->n) : 0;
        INFO(m.method << " ok " << m.n_ok << " nonconverged " << m.n_nonconverged << " error " << m.n_error);
        CHECK(in_kl + m.n_nonconverged + m.n_error == 30);
        CHECK(m.nonconvergence_rate == doctest::Approx(m.n_nonconverged / 30.0));
    }
    int records = 0;
    for (const auto& r : s.records) {
        ++records;
        if (r.status != "ok") CHECK_FALSE(r.message.empty());
    }
    CHECK(records == 60);
}

TEST_CASE("estimate spread shrinks like root n") {
    auto cfg = small("E1b", 200);
    cfg.kl_eval = 100;
    cfg.n = 100;
    const double sd100 = fg::run_study(cfg).method("fg_ecm").params[3].sd;
    cfg.n = 200;
    const double sd200 = fg::run_study(cfg).method("fg_ecm").params[3].sd;
    INFO("sd(w) at n=100: " << sd100 << ", at n=200: " << sd200);
    CHECK(sd100 / sd200 == doctest::Approx(std::sqrt(2.0)).epsilon(0.2));
}
