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

// inner: derive, compare and synthesize inner time series.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "inner/error.hpp"
#include "inner/pipeline.hpp"
#include "inner/selftest.hpp"

namespace {

int run_derive(const std::string& config_path) {
  const auto config = inner::load_run_config(config_path);
  const auto artifacts = inner::cmd_derive(config);
  std::cout << "wrote " << artifacts.files.size() + 1 << " files to "
            << artifacts.output_dir.string() << "\nconfig sha256 " << artifacts.config_hash
            << '\n';
  return 0;
}

int run_compare(const std::string& a, const std::string& b, const std::string& out) {
  const auto report = inner::cmd_compare(a, b, out);
  std::cout << "chosen_p " << report.chosen_p.to_string() << "  overlap "
            << report.overlap_frames << " frames\n";
  for (std::size_t i = 0; i < report.per_component_pearson.size(); ++i) {
    std::printf("w%zu  pearson %.4f  rmse %.4g\n", i + 1, report.per_component_pearson[i],
                report.per_component_rmse[i]);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensor-independent inner time series from local velocity statistics"};
  app.set_version_flag("--version", std::string(inner::kLibraryVersion));
  app.require_subcommand(1);

  std::string config_path;
  auto* derive = app.add_subcommand("derive", "run the full pipeline from a config file");
  derive->add_option("--config", config_path, "INI run configuration")->required();

  std::string path_a, path_b, compare_out;
  auto* compare = app.add_subcommand("compare", "align two inner series and report agreement");
  compare->add_option("--a", path_a, "reference inner.csv")->required();
  compare->add_option("--b", path_b, "inner.csv aligned onto --a")->required();
  compare->add_option("--out", compare_out, "directory for report.csv and overlay.svg")
      ->required();

  inner::InputConfig synth_input;
  std::uint64_t synth_seed = 1;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "render a score to 16-bit mono WAV");
  synth->add_option("--score", synth_input.score, "runs | listing")
      ->check(CLI::IsMember({"runs", "listing"}));
  synth->add_option("--score-file", synth_input.score_path, "listing file (--score listing)");
  synth->add_option("--total-s", synth_input.total_s, "runs score length in seconds");
  synth->add_option("--pitch-lo", synth_input.pitch_lo, "lowest MIDI pitch of the runs");
  synth->add_option("--pitch-hi", synth_input.pitch_hi, "highest MIDI pitch of the runs");
  synth->add_option("--gap", synth_input.note_gap_s, "onset spacing in seconds");
  synth->add_option("--instrument", synth_input.instrument, "piano | violin")
      ->check(CLI::IsMember({"piano", "violin"}));
  synth->add_option("--transpose", synth_input.transpose, "semitones added to every pitch");
  synth->add_option("--sample-rate", synth_input.sample_rate, "Hz");
  synth->add_option("--seed", synth_seed, "phase, noise and score seed");
  synth->add_option("--out", synth_out, "output WAV")->required();

  std::string level = "fast";
  std::string fault;
  auto* selftest = app.add_subcommand("selftest", "run the built-in oracle checks");
  selftest->add_option("--level", level, "fast | full")->check(CLI::IsMember({"fast", "full"}));
  selftest->add_option("--inject-fault", fault, "deliberately break a stage")
      ->check(CLI::IsMember({"missigned-whitening"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : inner::exit_code(inner::Errc::kBadConfig);
  }

  try {
    if (*derive) return run_derive(config_path);
    if (*compare) return run_compare(path_a, path_b, compare_out);
    if (*synth) {
      if (synth_input.score == "listing" && synth_input.score_path.empty()) {
        throw inner::Error(inner::Errc::kBadConfig, "--score listing needs --score-file");
      }
      const auto score = inner::input_score(synth_input, synth_seed);
      const auto clip = inner::render_input_audio(synth_input, synth_seed);
      inner::write_wav(synth_out, clip);
      std::printf("wrote %s  duration %.3f s  events %zu\n", synth_out.c_str(),
                  static_cast<double>(clip.samples.size()) / clip.sample_rate,
                  score.events.size());
      return 0;
    }
    if (*selftest) {
      inner::SelftestOptions options;
      options.level = level == "full" ? inner::SelftestLevel::kFull : inner::SelftestLevel::kFast;
      options.inject_missigned_whitening = fault == "missigned-whitening";
      return inner::print_selftest_table(std::cout, inner::run_selftest(options)) ? 0 : 1;
    }
  } catch (const inner::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return inner::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
