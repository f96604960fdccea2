#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "survml/hpo.hpp"

using namespace survml;

namespace {

double num(const ParamMap& p, const std::string& k) { return std::get<double>(p.at(k)); }

Trial completed(std::size_t index, ParamMap params, double value) {
  Trial t;
  t.index = index;
  t.params = std::move(params);
  t.value = value;
  return t;
}

Cohort small_cohort(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n = 200;
  cfg.d = 3;
  cfg.beta = {1, 0, 0};
  cfg.seed = seed;
  return synth_cohort(cfg).cohort;
}

}  // namespace

TEST_SUITE("hpo") {
  TEST_CASE("parameter specs parse and format") {
    const ParamSpec f = parse_param_spec("lr", "float:0.01:0.3:log");
    CHECK(f.kind == ParamKind::Float);
    CHECK(f.log);
    CHECK(f.low == 0.01);
    CHECK(parse_param_spec("lr", format_param_spec(f)) == f);
    const ParamSpec i = parse_param_spec("depth", "int:1:5");
    CHECK(i.kind == ParamKind::Int);
    const ParamSpec c = parse_param_spec("dist", "cat:normal|logistic");
    CHECK(c.choices == std::vector<std::string>{"normal", "logistic"});
    CHECK_THROWS_AS(parse_param_spec("x", "float:2:1"), ConfigError);
    CHECK_THROWS_AS(parse_param_spec("x", "cat:"), ConfigError);
    CHECK_THROWS_AS(parse_param_spec("x", "float:0:1:log"), ConfigError);
    CHECK_THROWS_AS(parse_param_spec("x", "gauss:0:1"), ConfigError);
  }

  TEST_CASE("default spaces are valid and use known parameters") {
    for (Family f : all_families()) {
      const SearchSpace s = default_space(f);
      CHECK_FALSE(s.empty());
      const ParamMap defaults = default_params(f);
      for (const auto& p : s) {
        CHECK_NOTHROW(p.validate());
        CHECK(defaults.contains(p.name));
      }
    }
  }

  TEST_CASE("random sampler is uniform, deterministic and in bounds") {
    const SearchSpace space{parse_param_spec("x", "float:0:1")};
    Rng rng(1);
    double mean = 0.0;
    for (int i = 0; i < 10000; ++i) mean += num(sample_random(space, rng), "x");
    mean /= 10000.0;
    CHECK(mean >= 0.48);
    CHECK(mean <= 0.52);
    Rng a(5), b(5);
    CHECK(sample_random(space, a) == sample_random(space, b));
    const SearchSpace one{parse_param_spec("c", "cat:only")};
    Rng r(2);
    for (int i = 0; i < 20; ++i) CHECK(std::get<std::string>(sample_random(one, r).at("c")) == "only");
  }

  TEST_CASE("log-scaled and integer parameters stay in bounds") {
    const SearchSpace space{parse_param_spec("lr", "float:0.001:10:log"), parse_param_spec("n", "int:3:7"),
                            parse_param_spec("d", "cat:a|b|c")};
    Rng rng(3);
    double below_one = 0;
    for (int i = 0; i < 2000; ++i) {
      const ParamMap p = sample_random(space, rng);
      CHECK(in_space(space, p));
      CHECK(num(p, "n") == std::round(num(p, "n")));
      below_one += num(p, "lr") < 1.0;
    }
    CHECK(below_one / 2000.0 == doctest::Approx(0.75).epsilon(0.05));
  }

  TEST_CASE("TPE good group size") {
    CHECK(tpe_good_count(8, 0.25) == 2);
    CHECK(tpe_good_count(1, 0.25) == 1);
    CHECK(tpe_good_count(10, 1.0) == 10);
  }

  TEST_CASE("TPE behaves as random during startup") {
    const SearchSpace space{parse_param_spec("x", "float:0:1"), parse_param_spec("c", "cat:a|b")};
    std::vector<Trial> history;
    Rng pre(0);
    for (std::size_t i = 0; i < 9; ++i) history.push_back(completed(i, sample_random(space, pre), static_cast<double>(i)));
    Rng a(42), b(42);
    CHECK(sample_tpe(space, history, {}, a) == sample_random(space, b));
  }

  TEST_CASE("all samplers respect bounds, including degenerate TPE") {
    const SearchSpace space{parse_param_spec("x", "float:0.1:0.9"), parse_param_spec("lr", "float:0.01:1:log"),
                            parse_param_spec("n", "int:1:4"), parse_param_spec("c", "cat:a|b|c")};
    for (SamplerId s : {SamplerId::Random, SamplerId::Tpe, SamplerId::CmaEs}) {
      Study study;
      study.space = space;
      study.sampler = s;
      study.seed = 9;
      optimize(study, [](const ParamMap& p, std::vector<double>&) { return -std::abs(std::get<double>(p.at("x")) - 0.3); },
               60);
      for (const auto& t : study.trials) CHECK(in_space(space, t.params));
    }
    std::vector<Trial> history;
    Rng pre(1);
    for (std::size_t i = 0; i < 20; ++i) history.push_back(completed(i, sample_random(space, pre), std::sin(double(i))));
    TpeConfig all_good;
    all_good.gamma = 1.0;
    Rng rng(2);
    for (int i = 0; i < 20; ++i) CHECK(in_space(space, sample_tpe(space, history, all_good, rng)));
  }

  TEST_CASE("CMA-ES first generation and covariance stay well formed") {
    const SearchSpace space{parse_param_spec("a", "float:0:1"), parse_param_spec("b", "float:0:1"),
                            parse_param_spec("c", "float:0:1")};
    const CmaesState s0 = cmaes_state(space, {}, {});
    CHECK(s0.population == 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(3.0))));
    CHECK(s0.mean.isApprox(Eigen::VectorXd::Constant(3, 0.5)));
    CHECK(s0.sigma == 0.2);

    Study study;
    study.space = space;
    study.sampler = SamplerId::CmaEs;
    study.seed = 3;
    auto sphere = [](const ParamMap& p, std::vector<double>&) {
      double s = 0;
      for (const char* k : {"a", "b", "c"}) s += std::pow(std::get<double>(p.at(k)) - 0.2, 2);
      return -s;
    };
    for (std::size_t n = 7; n <= 70; n += 7) {
      optimize(study, sphere, n);
      const CmaesState st = cmaes_state(space, study.trials, {});
      CHECK((st.cov - st.cov.transpose()).norm() < 1e-12);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(st.cov);
      CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
    const SearchSpace cats{parse_param_spec("c", "cat:a|b")};
    Rng rng(1);
    CHECK_THROWS_AS(sample_cmaes(cats, {}, {}, rng), ConfigError);
  }

  TEST_CASE("CMA-ES notes categorical parameters") {
    const SearchSpace space{parse_param_spec("x", "float:0:1"), parse_param_spec("c", "cat:a|b")};
    Rng rng(1);
    std::string note;
    const ParamMap p = sample_cmaes(space, {}, {}, rng, &note);
    CHECK(in_space(space, p));
    CHECK_FALSE(note.empty());
  }

  TEST_CASE("best value is nondecreasing in the trial count and resume continues") {
    const SearchSpace space{parse_param_spec("x", "float:0:1")};
    auto f = [](const ParamMap& p, std::vector<double>&) { return -std::pow(std::get<double>(p.at("x")) - 0.7, 2); };
    Study full;
    full.space = space;
    full.sampler = SamplerId::Tpe;
    full.seed = 4;
    optimize(full, f, 40);
    double best = -1e9;
    for (const auto& t : full.trials) {
      best = std::max(best, *t.value);
      Study prefix = full;
      prefix.trials.resize(t.index + 1);
      CHECK(*prefix.trials[*prefix.best_index()].value == best);
    }
    Study part = full;
    part.trials.resize(15);
    optimize(part, f, 40);
    CHECK(part == full);
  }

  TEST_CASE("failed trials are recorded and the study continues") {
    Study study;
    study.space = {parse_param_spec("x", "float:0:1")};
    study.seed = 1;
    optimize(study,
             [](const ParamMap& p, std::vector<double>&) -> double {
               if (std::get<double>(p.at("x")) < 0.5) throw FitError("too small");
               return 1.0;
             },
             20);
    std::size_t failed = 0;
    for (const auto& t : study.trials) {
      CHECK(t.ok() != !t.failure.empty());
      failed += !t.ok();
    }
    CHECK(failed > 0);
    CHECK(study.trials[*study.best_index()].ok());
  }

  TEST_CASE("a parameter ignored by the objective does not shift the best value") {
    const SearchSpace space{parse_param_spec("x", "float:0:1"), parse_param_spec("dummy", "cat:a|b")};
    std::vector<double> best_a, best_b;
    for (std::uint64_t run = 0; run < 50; ++run) {
      Study study;
      study.space = space;
      study.sampler = SamplerId::Tpe;
      study.seed = 1000 + run;
      optimize(study, [](const ParamMap& p, std::vector<double>&) { return -std::pow(std::get<double>(p.at("x")) - 0.4, 2); },
               25);
      for (const auto& t : study.trials) {
        (std::get<std::string>(t.params.at("dummy")) == "a" ? best_a : best_b).push_back(*t.value);
      }
    }
    CHECK(oracle::ks_pvalue(best_a, best_b) > 0.01);
  }

  TEST_CASE("cross-validated study") {
    const Cohort c = small_cohort(3);
    const SearchSpace space{parse_param_spec("n_rounds", "int:5:20"), parse_param_spec("max_depth", "int:1:3")};
    const Study one = run_study(c, Family::GbCox, space, SamplerId::Random, 1, 3, 7);
    REQUIRE(one.trials.size() == 1);
    CHECK(one.best_index() == 0u);
    CHECK(one.trials[0].fold_values.size() == 3);

    const Study a = run_study(c, Family::GbCox, space, SamplerId::Tpe, 4, 3, 11);
    const Study b = run_study(c, Family::GbCox, space, SamplerId::Tpe, 4, 3, 11);
    CHECK(a == b);
    double mean = 0;
    for (double v : a.trials[0].fold_values) mean += v;
    CHECK(*a.trials[0].value == doctest::Approx(mean / 3.0).epsilon(1e-12));

    StudyOptions resume;
    Study partial = a;
    partial.trials.resize(2);
    resume.resume = partial;
    CHECK(run_study(c, Family::GbCox, space, SamplerId::Tpe, 4, 3, 11, resume) == a);
    resume.resume->seed = 12;
    CHECK_THROWS_AS(run_study(c, Family::GbCox, space, SamplerId::Tpe, 4, 3, 11, resume), ConfigError);

    CHECK_THROWS_AS(run_study(c, Family::GbCox, space, SamplerId::Tpe, 0, 3, 11), ConfigError);
    CHECK_THROWS_AS(run_study(c, Family::GbCox, space, SamplerId::Tpe, 2, 1, 11), ConfigError);
  }
}
