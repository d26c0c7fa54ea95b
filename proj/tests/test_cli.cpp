#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <sys/wait.h>

#include "common.hpp"
#include "tables.hpp"

using namespace notchlab;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr merged into stdout when requested.
Run run(const std::string& args, bool merge_stderr = false) {
  const std::string cmd = std::string(NOTCHLAB_CLI) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

const std::string kDevice = std::string("--device ") + NOTCHLAB_DATA + "/reference_device.json";

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("notchlab_cli_" + name)).string();
}

}  // namespace

TEST(Cli, NotchPrintsGigahertz) {
  const auto r = run("notch " + kDevice + " --pair MTL");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("8.278 GHz"), std::string::npos) << r.out;
}

TEST(Cli, NotchCsvHasBisectionColumn) {
  const auto r = run("notch " + kDevice + " --format csv");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("pair,notch_hz,bisection_hz\nMTL,8.277685", 0), 0u) << r.out;
}

TEST(Cli, BadDeviceExitsTwoNamingField) {
  auto j = parse_json_text(read_text(NOTCHLAB_DATA "/reference_device.json"), "device");
  j["geometry"][1]["l_p_short_um"] = -1;
  const auto path = temp_path("bad.json");
  write_text(path, j.dump());
  const auto r = run("z21 --device " + path, true);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("l_p_short_um"), std::string::npos) << r.out;
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("notch " + kDevice + " --unknown-flag").code, 2);
  EXPECT_EQ(run("modes " + kDevice + " --state gg").code, 2);
  EXPECT_EQ(run("notch " + kDevice + " --pair Cap").code, 2);
  EXPECT_EQ(run("notch --device /nonexistent.json").code, 2);
}

TEST(Cli, NumericalFailureExitsThree) {
  auto j = parse_json_text(read_text(NOTCHLAB_DATA "/reference_device.json"), "device");
  // An uncoupled channel with its filter exactly at the probe frequency makes the node a short.
  j["channels"] = json::array({{{"name", "A"}, {"f_r_g_mhz", 10300}, {"f_p_mhz", 10400}, {"j_mhz", 0},
                                {"kappa_p_mhz", 50}, {"chi_mhz", -5}}});
  j.erase("qubits");
  j.erase("shunt");
  const auto path = temp_path("pole.json");
  write_text(path, j.dump());
  EXPECT_EQ(run("reflect --device " + path + " --fmin 10.4e9 --fmax 10.5e9 --points 2").code, 3);
}

TEST(Cli, ModesMatchTable) {
  const auto path = temp_path("modes.json");
  const auto r = run("modes " + kDevice + " --state gggg --out " + path);
  ASSERT_EQ(r.code, 0);
  const auto j = parse_json_text(read_text(path), "modes");
  ASSERT_EQ(j.size(), 8u);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& row = tables::kNormalModes[k];
    for (const auto& m : j) {
      if (m["channel"] != "Q" + std::to_string(k + 1)) continue;
      const bool readout = m["character"] == "readout";
      EXPECT_NEAR(m["f_hz"].get<double>() / 1e6, readout ? row.f_r : row.f_p, 5.0);
      EXPECT_NEAR(m["kappa_hz"].get<double>() / 1e6, readout ? row.kappa_r_g : row.kappa_p_g, 5.0);
    }
  }
}

TEST(Cli, DeterministicAcrossThreadCounts) {
  const std::string args = "reflect " + kDevice + " --state gegg --points 301 --noise 0.01 --seed 5";
  const auto a = run(args);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, run(args).out);
  setenv("NOTCHLAB_THREADS", "1", 1);
  const auto single = run(args);
  unsetenv("NOTCHLAB_THREADS");
  EXPECT_EQ(a.out, single.out);
  EXPECT_EQ(run("z21 " + kDevice + " --points 11 --format json").out,
            run("z21 " + kDevice + " --points 11 --format json").out);
}

TEST(Cli, TraceCsvShape) {
  const auto r = run("simulate " + kDevice +
                     " --pulse '{\"shape\":\"rectangular\",\"f_mhz\":10357,\"amplitude\":100,\"duration_ns\":20}'");
  ASSERT_EQ(r.code, 0);
  const auto header = r.out.substr(0, r.out.find('\n'));
  EXPECT_EQ(std::count(header.begin(), header.end(), ',') + 1, 2 + 4 * 4 + 2);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1 + 21);
}

TEST(Cli, ReflectFeedsFit) {
  const auto g = temp_path("g.csv"), e = temp_path("e.csv");
  ASSERT_EQ(run("reflect " + kDevice + " --state gggg --noise 0.01 --seed 1 --out " + g).code, 0);
  ASSERT_EQ(run("reflect " + kDevice + " --state eeee --noise 0.01 --seed 2 --out " + e).code, 0);
  const auto r = run("fit " + kDevice + " --spectrum-g " + g + " --spectrum-e " + e);
  ASSERT_EQ(r.code, 0);
  const auto j = parse_json_text(r.out, "fit");
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_NEAR(j["channels"][1]["chi_mhz"].get<double>(), -9.9, 0.2);
  EXPECT_TRUE(j["stderr"]["Q2"]["chi_hz"].is_number());
  EXPECT_TRUE(j["stderr"]["Q2"]["gamma_r_hz"].is_null());
}

TEST(Cli, BudgetAndCalibrate) {
  const auto b = run(std::string("budget --input ") + NOTCHLAB_DATA + "/reference_budget.json");
  ASSERT_EQ(b.code, 0);
  const auto j = parse_json_text(b.out, "budget");
  EXPECT_NEAR(100.0 * j["channels"][1]["eps_cl_q"].get<double>(), 0.33, 0.005);
  EXPECT_NEAR(1.0 - j["channels"][1]["f"].get<double>(), 0.00095, 1e-9);
  const auto c = run("calibrate " + kDevice + " --input " + NOTCHLAB_DATA + "/q2_stark.json");
  ASSERT_EQ(c.code, 0);
  EXPECT_EQ(std::count(c.out.begin(), c.out.end(), '\n'), 4);
}
