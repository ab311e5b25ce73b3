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

// Audio ingestion, score synthesis and Mel filterbank log-power features.

#ifndef INNER_SIGNAL_FRONTEND_HPP_
#define INNER_SIGNAL_FRONTEND_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

namespace inner {

/// Mono audio, amplitudes nominally in [-1, 1].
struct AudioClip {
  int sample_rate = 16000;
  std::vector<double> samples;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

struct FrontendConfig {
  double window_ms = 25.0;
  double hop_ms = 5.0;
  int n_channels = 15;
  double f_min = 0.0;
  double f_max = 8000.0;
  int fft_size = 0;  // 0: smallest power of two holding the window
  double log_floor = 1e-10;

  /// 15 channels over 0-8000 Hz.
  static FrontendConfig wideband() { return {}; }
  /// 13 channels over 300-4000 Hz.
  static FrontendConfig narrowband() {
    FrontendConfig c;
    c.n_channels = 13;
    c.f_min = 300.0;
    c.f_max = 4000.0;
    return c;
  }

  int window_samples(int sample_rate) const;
  int hop_samples(int sample_rate) const;
  int resolved_fft_size(int sample_rate) const;
  /// Throws BadConfig when the configuration cannot be used at this rate.
  void validate(int sample_rate) const;
};

/// Per-frame filterbank log-energies. Row i of `frames` is frame i.
struct FeatureSeries {
  std::vector<double> frame_times;
  Eigen::MatrixXd frames;
  double hop_s = 0.0;

  std::size_t size() const { return frame_times.size(); }
  int channels() const { return static_cast<int>(frames.cols()); }
};

struct NoteEvent {
  int midi_pitch = 69;
  double onset_s = 0.0;
  double duration_s = 0.4;
  double excitation = 1.0;

  bool operator==(const NoteEvent&) const = default;
};

struct ScoreSpec {
  std::vector<NoteEvent> events;
  /// Rendered clip length; 0 renders up to the end of the last release.
  double total_s = 0.0;

  bool operator==(const ScoreSpec&) const = default;
  void validate() const;
};

struct Envelope {
  double attack_s = 0.005;
  double decay_s = 0.25;  // exponential time constant towards sustain
  double sustain_level = 0.1;
  double release_s = 0.05;
};

struct InstrumentSpec {
  std::vector<double> harmonic_amplitudes;
  Envelope envelope;
  /// Standard deviation of added white noise relative to the rendered peak.
  double noise_floor = 0.0;

  /// Harmonics 1..8 at 1/h with a fast decay.
  static InstrumentSpec piano();
  /// Odd-rich harmonic profile with a sustained envelope.
  static InstrumentSpec violin();
  void validate() const;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);
double midi_to_hz(int midi_pitch);

AudioClip load_wav(const std::filesystem::path& path);
/// 16-bit PCM mono. Samples are scaled by 32768 and clamped.
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

AudioClip synthesize_score(const ScoreSpec& score, const InstrumentSpec& instrument,
                           int sample_rate, std::uint64_t seed);
ScoreSpec transpose_score(const ScoreSpec& score, int semitones);
ScoreSpec random_runs_score(std::uint64_t seed, double total_s, int pitch_lo,
                            int pitch_hi, double note_gap_s);

/// Reads a whitespace-separated listing, one `pitch onset duration excitation`
/// event per line; '#' starts a comment.
ScoreSpec parse_score_listing(std::istream& in);

/// K x (fft_size/2 + 1) triangular Mel weights.
Eigen::MatrixXd mel_filterbank(const FrontendConfig& config, int sample_rate);

/// Hamming window of the given length.
std::vector<double> hamming_window(int length);

FeatureSeries mel_log_features(const AudioClip& clip, const FrontendConfig& config);

/// CSV with header `time_s,c1,...,cK`.
void write_features_csv(std::ostream& out, const FeatureSeries& features);

}  // namespace inner

#endif  // INNER_SIGNAL_FRONTEND_HPP_
