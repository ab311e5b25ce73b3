// Copyright 2026 The inner-series Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "inner/pipeline.hpp"
#include "inner/selftest.hpp"
#include "test_util.hpp"

using namespace inner;
using test::expect_errc;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_run_config(in);
}

std::string small_process_ini(const fs::path& out) {
  return "[run]\nseed = 5\n[input]\nkind = process\nframes = 20000\n"
         "[atlas]\ntarget_count = 40\nmin_occupancy = 200\n[output]\ndir = " +
         out.string() + "\n";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(INNER_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = test::read_file(e.path());
  return out;
}

}  // namespace

TEST_CASE("config parsing reads every section") {
  const auto c = parse(
      "[run]\nseed = 42\n"
      "[input]\nkind = synth\nscore = runs\ntotal_s = 90\npitch_lo = 50\npitch_hi = 70\n"
      "note_gap_s = 0.3\ninstrument = violin\ntranspose = 6\nsample_rate = 16000\n"
      "[frontend]\nwindow_ms = 25\nhop_ms = 5\nn_channels = 13\nf_min = 300\nf_max = 4000\n"
      "fft_size = 1024\nlog_floor = 1e-8\n"
      "[prep]\nretain_dims = 2\npc1_floor = -12.5\ntrim_fraction = 0.01\nrefit_after_truncation = false\n"
      "[atlas]\ntarget_count = 300\nmin_occupancy = 150\n"
      "[model]\nrelative_gap_tol = 1e-4\n"
      "[inner]\nsmoothing_sigma_frames = 12.5\n"
      "[output]\ndir = somewhere\n");
  CHECK(c.seed == 42);
  CHECK(c.input.kind == InputKind::kSynth);
  CHECK(c.input.total_s == 90.0);
  CHECK(c.input.pitch_lo == 50);
  CHECK(c.input.instrument == "violin");
  CHECK(c.input.transpose == 6);
  CHECK(c.frontend.n_channels == 13);
  CHECK(c.frontend.f_min == 300.0);
  CHECK(c.frontend.fft_size == 1024);
  CHECK(c.frontend.log_floor == 1e-8);
  CHECK(c.prep.pc1_floor == -12.5);
  CHECK_FALSE(c.prep.refit_after_truncation);
  CHECK(c.target_count == 300);
  CHECK(c.min_occupancy == 150);
  CHECK(c.solve.relative_gap_tol == 1e-4);
  CHECK(c.smoothing_sigma_frames == 12.5);
  CHECK(c.output_dir == "somewhere");

  // The canonical text parses back to itself.
  const std::string text = serialize_run_config(c);
  CHECK(serialize_run_config(parse(text)) == text);
  CHECK(serialize_run_config(c, false).find("[output]") == std::string::npos);
}

TEST_CASE("defaults survive an empty config") {
  const auto c = parse("");
  CHECK(c.input.kind == InputKind::kSynth);
  CHECK(c.target_count == 1000);
  CHECK(c.min_occupancy == 200);
  CHECK(c.frontend.n_channels == 15);
  CHECK(c.prep.trim_fraction == 0.005);
  CHECK(c.smoothing_sigma_frames == 2.5);
}

TEST_CASE("config errors are reported as bad configuration") {
  expect_errc(Errc::kBadConfig, [] { parse("[atlas]\ntarget_cnt = 3\n"); });
  expect_errc(Errc::kBadConfig, [] { parse("[colour]\nhue = 3\n"); });
  expect_errc(Errc::kBadConfig, [] { parse("seed = 3\n"); });
  expect_errc(Errc::kBadConfig, [] { parse("[atlas]\ntarget_count = many\n"); });
  expect_errc(Errc::kBadConfig, [] { parse("[atlas]\ntarget_count = -4\n"); });
  expect_errc(Errc::kBadConfig, [] { parse("[input]\nkind = video\n"); });
  expect_errc(Errc::kBadConfig, [] { parse("[input]\nkind = state\n"); });
  expect_errc(Errc::kBadConfig, [] { parse("[frontend]\nf_max = 9000\n"); });
  expect_errc(Errc::kBadConfig, [] { parse("[prep]\nrefit_after_truncation = maybe\n"); });
  expect_errc(Errc::kBadConfig, [] { parse("[prep]\ntrim_fraction = 0.5\n"); });
  expect_errc(Errc::kBadConfig, [] { parse("[input\nkind = synth\n"); });
  expect_errc(Errc::kIoError, [] { load_run_config("/nonexistent/run.ini"); });
}

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("derive writes a consistent, reproducible artifact set") {
  const auto out = test::scratch_dir("pipeline") / "derive";
  const auto config = parse(small_process_ini(out));
  const auto artifacts = cmd_derive(config);
  CHECK(artifacts.files.size() == 5);  // no features for a process input
  CHECK(artifacts.manifest == out / "manifest.json");
  CHECK(artifacts.config_hash == sha256_hex(serialize_run_config(config, false)));

  std::ifstream mf(artifacts.manifest);
  const auto manifest = nlohmann::json::parse(mf);
  CHECK(manifest["library_version"] == kLibraryVersion);
  CHECK(manifest["seed"] == 5);
  CHECK(manifest["config_hash"] == artifacts.config_hash);
  CHECK(manifest["harmonization_components"] == 1);
  CHECK(manifest["neighborhoods"].get<int>() > 10);
  CHECK(manifest["solve"]["solved"].get<int>() > 10);
  REQUIRE(manifest["artifacts"].size() == 5);
  for (const auto& entry : manifest["artifacts"]) {
    const std::string body = test::read_file(out / entry["file"].get<std::string>());
    CHECK(entry["bytes"].get<std::size_t>() == body.size());
    CHECK(entry["sha256"] == sha256_hex(body));
  }
  // The saved config reproduces the run.
  CHECK(load_run_config(out / "config.ini").seed == 5);
  CHECK(serialize_run_config(load_run_config(out / "config.ini")) ==
        test::read_file(out / "config.ini"));

  const auto first = snapshot(out);
  cmd_derive(load_run_config(out / "config.ini"));
  CHECK(snapshot(out) == first);

  const auto inner = load_inner_csv(out / "inner.csv");
  CHECK(inner.size() == 20000);
  CHECK(inner.valid_count() > 15000);
}

TEST_CASE("the output directory can be overridden from the environment") {
  const auto base = test::scratch_dir("pipeline");
  const auto config = parse(small_process_ini(base / "configured"));
  ::setenv(kOutputDirEnv, (base / "overridden").c_str(), 1);
  const auto artifacts = cmd_derive(config);
  ::unsetenv(kOutputDirEnv);
  CHECK(artifacts.output_dir == base / "overridden");
  CHECK(fs::exists(base / "overridden" / "manifest.json"));
  CHECK_FALSE(fs::exists(base / "configured"));
}

TEST_CASE("a failing run leaves nothing behind") {
  const auto dir = test::scratch_dir("pipeline");
  test::write_file(dir / "short.score", "60 0 0.3 1\n");
  const auto out = dir / "short_out";
  const std::string ini = "[input]\nkind = synth\nscore = listing\nscore_path = " +
                          (dir / "short.score").string() + "\n[output]\ndir = " + out.string() + "\n";
  expect_errc(Errc::kClipTooShort, [&] { cmd_derive(parse(ini)); });
  CHECK((!fs::exists(out) || fs::is_empty(out)));
}

TEST_CASE("audio inputs write features and wav input runs the loaded clip") {
  const auto dir = test::scratch_dir("pipeline");
  InputConfig input;
  input.total_s = 40.0;
  const auto clip = render_input_audio(input, 3);
  write_wav(dir / "clip.wav", clip);
  const std::string common = "[run]\nseed = 3\n[atlas]\ntarget_count = 30\nmin_occupancy = 200\n";
  const auto synth = cmd_derive(parse(common + "[input]\nkind = synth\ntotal_s = 40\n[output]\ndir = " +
                                      (dir / "synth").string() + "\n"));
  CHECK(synth.files.size() == 6);
  CHECK(fs::exists(dir / "synth" / "features.csv"));
  cmd_derive(parse(common + "[input]\nkind = wav\npath = " + (dir / "clip.wav").string() +
                   "\n[output]\ndir = " + (dir / "wav").string() + "\n"));
  std::ostringstream expected_features;
  write_features_csv(expected_features, mel_log_features(clip, FrontendConfig{}));
  CHECK(test::read_file(dir / "synth" / "features.csv") == expected_features.str());

  // Quantization changes near-silent channels, so the wav run is checked
  // against an in-memory run on the decoded clip rather than the synth run.
  const auto direct = run_from_audio(load_wav(dir / "clip.wav"), FrontendConfig{}, PrepConfig{},
                                     {30, 200, 3}, SolveOptions{}, 2.5);
  std::ostringstream expected_inner;
  write_inner_csv(expected_inner, direct.inner);
  CHECK(test::read_file(dir / "wav" / "inner.csv") == expected_inner.str());
}

TEST_CASE("comparing a series with itself is perfect") {
  const auto dir = test::scratch_dir("pipeline");
  const auto out = dir / "self";
  cmd_derive(parse(small_process_ini(out)));
  const auto report = cmd_compare(out / "inner.csv", out / "inner.csv", dir / "self_cmp");
  CHECK(report.chosen_p == SignedPermutation::identity(2));
  for (double p : report.per_component_pearson) CHECK(p == doctest::Approx(1.0));
  CHECK(report.total_rmse == 0.0);
  CHECK(fs::exists(dir / "self_cmp" / "report.csv"));
  CHECK(fs::exists(dir / "self_cmp" / "overlay.svg"));
  const std::string svg = test::read_file(dir / "self_cmp" / "overlay.svg");
  CHECK(svg.find("stroke=\"black\"") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);

  // a against -a.
  auto neg = load_inner_csv(out / "inner.csv");
  neg.weights = -neg.weights;
  std::ofstream(dir / "neg.csv") << [&] {
    std::ostringstream os;
    write_inner_csv(os, neg);
    return os.str();
  }();
  const auto flipped = cmd_compare(out / "inner.csv", dir / "neg.csv", dir / "neg_cmp");
  CHECK(flipped.chosen_p == SignedPermutation::negated_identity(2));
  CHECK(flipped.total_rmse == 0.0);
  CHECK(test::read_file(dir / "neg_cmp" / "report.csv").rfind("chosen_p,perm=1,2;signs=-1,-1\n", 0) == 0);
}

TEST_CASE("command line exit codes") {
  const auto dir = test::scratch_dir("pipeline");
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("") == 2);
  CHECK(run_cli("derive") == 2);
  CHECK(run_cli("frobnicate") == 2);

  test::write_file(dir / "bad.ini", "[atlas]\nbogus = 1\n");
  CHECK(run_cli("derive --config " + (dir / "bad.ini").string()) == 2);
  CHECK(run_cli("derive --config " + (dir / "missing.ini").string()) == 3);

  std::ofstream(dir / "line.csv") << [] {
    std::ostringstream os;
    write_state_csv(os, constant_velocity_state(400));
    return os.str();
  }();
  test::write_file(dir / "line.ini", "[input]\nkind = state\npath = " + (dir / "line.csv").string() +
                                         "\n[prep]\ntrim_fraction = 0\n[atlas]\ntarget_count = 1\n"
                                         "min_occupancy = 100\n[output]\ndir = " +
                                         (dir / "line_out").string() + "\n");
  CHECK(run_cli("derive --config " + (dir / "line.ini").string()) == 4);

  test::write_file(dir / "one.score", "60 0 0.3 1\n");
  test::write_file(dir / "short.ini", "[input]\nkind = synth\nscore = listing\nscore_path = " +
                                          (dir / "one.score").string() + "\n[output]\ndir = " +
                                          (dir / "short_cli").string() + "\n");
  CHECK(run_cli("derive --config " + (dir / "short.ini").string()) == 5);

  CHECK(run_cli("synth --total-s 5 --out " + (dir / "s.wav").string()) == 0);
  CHECK(load_wav(dir / "s.wav").samples.size() == 80000);
  CHECK(run_cli("synth --total-s 5 --out " + (dir / "s2.wav").string()) == 0);
  CHECK(test::read_file(dir / "s.wav") == test::read_file(dir / "s2.wav"));
  CHECK(run_cli("synth --total-s 20 --transpose 6 --out " + (dir / "t6.wav").string()) == 0);
  CHECK(run_cli("synth --pitch-hi 124 --transpose 6 --out " + (dir / "x.wav").string()) == 2);
  CHECK(run_cli("synth --instrument tuba --out " + (dir / "t.wav").string()) == 2);
}

TEST_CASE("selftest passes, and fails when the whitening is broken") {
  SelftestOptions options;
  const auto checks = run_selftest(options);
  CHECK(checks.size() >= 8);
  std::ostringstream table;
  CHECK(print_selftest_table(table, checks));
  CHECK(table.str().find("FAIL") == std::string::npos);

  options.inject_missigned_whitening = true;
  std::ostringstream broken;
  CHECK_FALSE(print_selftest_table(broken, run_selftest(options)));
  CHECK(run_cli("selftest --level fast") == 0);
  CHECK(run_cli("selftest --inject-fault missigned-whitening") == 1);
}
