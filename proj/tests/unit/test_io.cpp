#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "pfode/io.hpp"

using namespace pfode;
namespace fs = std::filesystem;

namespace {

std::string error_path(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

}  // namespace

TEST(IoMixture, RoundTripIsExact) {
  for (const auto& name : preset_names()) {
    const GaussianMixture gm = make_preset(name);
    const Json j = to_json(gm);
    const GaussianMixture back = mixture_from_json(Json::parse(j.dump()));
    ASSERT_EQ(back.components().size(), gm.components().size());
    for (std::size_t k = 0; k < gm.components().size(); ++k) {
      EXPECT_EQ(back.components()[k].weight, gm.components()[k].weight);
      EXPECT_EQ(back.components()[k].mean, gm.components()[k].mean);
      EXPECT_EQ(back.components()[k].cov, gm.components()[k].cov);
    }
  }
}

TEST(IoMixture, ErrorPaths) {
  const Json good = to_json(make_preset("anisotropic-2d"));
  Json j = good;
  j["components"][1]["cov"][0] = {1.0};
  EXPECT_EQ(error_path([&] { mixture_from_json(j); }), "components[1].cov[0]");
  j = good;
  j["components"][0]["mean"] = {1.0};
  EXPECT_EQ(error_path([&] { mixture_from_json(j); }), "components[0].mean");
  j = good;
  j["colour"] = "red";
  EXPECT_EQ(error_path([&] { mixture_from_json(j); }), "colour");
  j = good;
  j["components"][0]["weight"] = 0.9;
  EXPECT_EQ(error_path([&] { mixture_from_json(j); }), "components");
}

TEST(IoConfig, RoundTripIsExact) {
  ExperimentConfig c;
  c.mixture = "preset:trimodal-1d";
  c.parameterization = Parameterization(Kind::VP, 0.003, 50.0, 18.0, 0.2);
  c.policy = SolverPolicy::step(1.0 / 3.0, CurvatureSource::Lookahead);
  c.eta = EtaSchedule{0.01, 0.1 + 1e-17, 1.5};
  c.resample = ResampleSpec{0.25, 12};
  c.samples = 0;
  c.seed = 18446744073709551615ull;
  c.output_dir = "runs/a";
  const std::string text = to_json(c).dump(2);
  const ExperimentConfig back = config_from_json(Json::parse(text));
  EXPECT_EQ(back, c);
  EXPECT_EQ(to_json(back).dump(2), text);
}

TEST(IoConfig, ErrorPaths) {
  const Json base = to_json(ExperimentConfig{});
  Json j = base;
  j["eta"]["min"] = -1.0;
  EXPECT_EQ(error_path([&] { config_from_json(j); }), "eta");
  j = base;
  j["eta"]["mn"] = 0.1;
  EXPECT_EQ(error_path([&] { config_from_json(j); }), "eta.mn");
  j = base;
  j["policy"] = {{"lambda", "step"}, {"tau_k", "big"}};
  EXPECT_EQ(error_path([&] { config_from_json(j); }), "policy.tau_k");
  j = base;
  j["policy"] = {{"lambda", "bogus"}};
  EXPECT_EQ(error_path([&] { config_from_json(j); }), "policy.lambda");
  j = base;
  j["parameterization"] = "karras";
  EXPECT_EQ(error_path([&] { config_from_json(j); }), "parameterization");
  j = base;
  j["samples"] = -3;
  EXPECT_EQ(error_path([&] { config_from_json(j); }), "samples");
  j = base;
  j["seed"] = 1.5;
  EXPECT_EQ(error_path([&] { config_from_json(j); }), "seed");
  j = base;
  j.erase("mixture");
  EXPECT_EQ(error_path([&] { config_from_json(j); }), "mixture");
  j = base;
  j["schema_version"] = 99;
  EXPECT_EQ(error_path([&] { config_from_json(j); }), "schema_version");
  j = base;
  j["resample"] = {{"q", 0.25}, {"N", 0}};
  EXPECT_EQ(error_path([&] { config_from_json(j); }), "resample.N");
}

TEST(IoSchedule, RoundTripIsExact) {
  const GaussianMixture gm = make_preset("bimodal-1d");
  const auto p = Parameterization::vp();
  ScheduleFile f{p, EtaSchedule{}, ResampleSpec{0.25, 10}, build_schedule(gm, p, EtaSchedule{}, 32, 1).schedule};
  const std::string text = to_json(f).dump(2);
  const ScheduleFile back = schedule_from_json(Json::parse(text));
  EXPECT_EQ(back.schedule.times, f.schedule.times);
  EXPECT_EQ(back.schedule.sigmas, f.schedule.sigmas);
  EXPECT_EQ(back.schedule.total_nfe, f.schedule.total_nfe);
  EXPECT_EQ(back.parameterization, p);
  EXPECT_EQ(to_json(back).dump(2), text);
}

TEST(IoSchedule, RejectsCorruptFiles) {
  const auto p = Parameterization::edm();
  const ScheduleFile f{p, EtaSchedule{}, std::nullopt, edm_reference_grid(p, 5)};
  Json j = to_json(f);
  j["times"][2] = j["times"][1];
  EXPECT_EQ(error_path([&] { schedule_from_json(j); }), "times");
  j = to_json(f);
  j["times"].push_back(0.0);
  EXPECT_EQ(error_path([&] { schedule_from_json(j); }), "times");
  j = to_json(f);
  j["per_step"] = {{{"eta_used", 0.1}}};
  EXPECT_EQ(error_path([&] { schedule_from_json(j); }), "per_step[0].s_hat");
  j = to_json(f);
  j["sigmas"][0] = "x";
  EXPECT_EQ(error_path([&] { schedule_from_json(j); }), "sigmas[0]");

  const fs::path dir = fs::temp_directory_path() / "pfode_io_test";
  fs::create_directories(dir);
  std::ofstream(dir / "broken.json") << "{\"times\": [1, 0";
  EXPECT_THROW(read_json(dir / "broken.json"), ConfigError);
  EXPECT_THROW(read_json(dir / "missing.json"), ConfigError);
}

TEST(IoModel, LoadsPresetsFilesAndConstants) {
  const Model m = load_model("preset:bimodal-1d");
  ASSERT_NE(m.mixture, nullptr);
  EXPECT_EQ(m.denoiser->dim(), 1);
  const Model c = load_model("constant:1,-2");
  EXPECT_EQ(c.mixture, nullptr);
  EXPECT_EQ(c.denoiser->dim(), 2);
  const fs::path dir = fs::temp_directory_path() / "pfode_io_test";
  fs::create_directories(dir);
  write_json(dir / "mix.json", to_json(make_preset("anisotropic-2d")));
  const Model f = load_model("mix.json", dir);
  ASSERT_NE(f.mixture, nullptr);
  EXPECT_EQ(f.denoiser->dim(), 2);
  EXPECT_THROW(load_model("preset:none"), Error);
  EXPECT_THROW(load_model("constant:1,a"), ConfigError);
  EXPECT_THROW(load_model("nope.json", dir), ConfigError);
}

TEST(IoFormat, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 80.0, 1e-300, -2.5e17, 0.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
}
