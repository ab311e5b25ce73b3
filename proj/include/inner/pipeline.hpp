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

// End-to-end runs: configuration, staged execution and persisted artifacts.

#ifndef INNER_PIPELINE_HPP_
#define INNER_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "inner/embedding_prep.hpp"
#include "inner/inner_series.hpp"
#include "inner/local_model.hpp"
#include "inner/signal_frontend.hpp"
#include "inner/state_space.hpp"
#include "inner/synthetic_process.hpp"

namespace inner {

inline constexpr const char* kLibraryVersion = "0.1.0";

/// Environment variable overriding the configured output directory.
inline constexpr const char* kOutputDirEnv = "INNER_OUTPUT_DIR";

enum class InputKind { kWav, kSynth, kState, kProcess };

struct InputConfig {
  InputKind kind = InputKind::kSynth;
  std::filesystem::path path;  // wav / state CSV
  // synth
  std::string score = "runs";  // runs | listing
  std::filesystem::path score_path;
  double total_s = 1200.0;
  int pitch_lo = 48;
  int pitch_hi = 84;
  double note_gap_s = 0.4;
  std::string instrument = "piano";  // piano | violin
  int transpose = 0;
  int sample_rate = 16000;
  // process
  std::size_t frames = 300000;
  std::string observer = "identity";  // identity | warped
  double observer_angle_deg = 35.0;
  double observer_scale = 2.0;
};

struct RunConfig {
  std::uint64_t seed = 1;
  InputConfig input;
  FrontendConfig frontend;
  PrepConfig prep;
  std::size_t target_count = 1000;
  std::size_t min_occupancy = 200;
  SolveOptions solve;
  double smoothing_sigma_frames = 2.5;
  std::filesystem::path output_dir = "out";

  AtlasParams atlas_params() const { return {target_count, min_occupancy, seed}; }
  /// Throws BadConfig on any out-of-range field.
  void validate() const;
};

/// Parses `key = value` lines grouped under `[section]` headers; unknown keys
/// are rejected.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical text form. The output section is omitted when `with_output` is
/// false; that form is what the manifest hash covers.
std::string serialize_run_config(const RunConfig& config, bool with_output = true);

std::string sha256_hex(const std::string& bytes);

struct SolveStats {
  std::size_t solved = 0;
  std::size_t singular = 0;
  std::size_t degenerate = 0;
  std::size_t insufficient = 0;
};

struct PipelineResult {
  std::optional<FeatureSeries> features;
  StateSamples state;
  VelocitySeries velocity;
  Atlas atlas;
  FieldOfFrames field;
  InnerSeries inner_raw;
  InnerSeries inner;
  SolveStats stats;
};

/// Solves every atlas neighborhood; neighborhoods whose statistics are
/// singular, degenerate or too sparse are skipped. Throws the first such
/// error when no neighborhood solves.
std::vector<LocalFrame> solve_neighborhoods(const VelocitySeries& velocity, const Atlas& atlas,
                                            const SolveOptions& options, SolveStats* stats);

/// state -> velocity -> atlas -> frames -> harmonized field -> inner series.
PipelineResult run_from_state(StateSamples state, const AtlasParams& atlas_params,
                              const SolveOptions& options, double smoothing_sigma_frames);

/// Frontend and embedding preparation, then run_from_state.
PipelineResult run_from_audio(const AudioClip& clip, const FrontendConfig& frontend,
                              const PrepConfig& prep, const AtlasParams& atlas_params,
                              const SolveOptions& options, double smoothing_sigma_frames);

/// The score of a synth input, transposition applied.
ScoreSpec input_score(const InputConfig& input, std::uint64_t seed);
/// The audio a synth input renders.
AudioClip render_input_audio(const InputConfig& input, std::uint64_t seed);

/// Runs the configured pipeline in memory.
PipelineResult run_config(const RunConfig& config);

struct RunArtifacts {
  std::filesystem::path output_dir;
  std::vector<std::filesystem::path> files;
  std::filesystem::path manifest;
  std::string config_hash;
};

/// Runs and persists features (audio inputs only), state, atlas, frames,
/// inner, the canonical config and a manifest. Nothing is left behind on
/// failure.
RunArtifacts cmd_derive(const RunConfig& config);

/// Aligns b to a and writes report.csv and overlay.svg into out_dir.
ComparisonReport cmd_compare(const std::filesystem::path& inner_a,
                             const std::filesystem::path& inner_b,
                             const std::filesystem::path& out_dir);

InnerSeries load_inner_csv(const std::filesystem::path& path);

}  // namespace inner

#endif  // INNER_PIPELINE_HPP_
