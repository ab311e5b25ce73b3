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

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

#include "inner/error.hpp"
#include "inner/signal_frontend.hpp"
#include "test_util.hpp"

using namespace inner;
using test::expect_errc;

namespace {

void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}
void put32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

// Hand-assembled RIFF/WAVE bytes, independent of write_wav.
std::string wav_bytes(int channels, int rate, int bits, const std::vector<std::int16_t>& pcm,
                      std::uint16_t format = 1) {
  std::string data;
  for (auto v : pcm) put16(data, static_cast<std::uint16_t>(v));
  std::string s = "RIFF";
  put32(s, static_cast<std::uint32_t>(36 + data.size()));
  s += "WAVEfmt ";
  put32(s, 16);
  put16(s, format);
  put16(s, static_cast<std::uint16_t>(channels));
  put32(s, static_cast<std::uint32_t>(rate));
  put32(s, static_cast<std::uint32_t>(rate * channels * bits / 8));
  put16(s, static_cast<std::uint16_t>(channels * bits / 8));
  put16(s, static_cast<std::uint16_t>(bits));
  s += "data";
  put32(s, static_cast<std::uint32_t>(data.size()));
  return s + data;
}

std::filesystem::path write_bytes(const std::string& name, const std::string& bytes) {
  const auto path = test::scratch_dir("frontend") / name;
  std::ofstream(path, std::ios::binary) << bytes;
  return path;
}

// Frequency of the strongest component between lo and hi, by brute-force
// DTFT evaluation on a 1 Hz grid.
double dominant_frequency(const AudioClip& clip, double lo, double hi, std::size_t first,
                          std::size_t count) {
  double best_f = 0.0;
  double best_p = -1.0;
  for (double f = lo; f <= hi; f += 1.0) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const double t = static_cast<double>(first + i) / clip.sample_rate;
      acc += clip.samples[first + i] * std::polar(1.0, -2.0 * std::numbers::pi * f * t);
    }
    if (std::norm(acc) > best_p) {
      best_p = std::norm(acc);
      best_f = f;
    }
  }
  return best_f;
}

ScoreSpec single_note(int pitch, double duration = 0.5) {
  ScoreSpec s;
  s.events.push_back({pitch, 0.0, duration, 1.0});
  return s;
}

}  // namespace

TEST_CASE("wav mono header passthrough and full-scale negative sample") {
  std::vector<std::int16_t> pcm(16000, 0);
  pcm[0] = -32768;
  pcm[1] = 16384;
  const auto clip = load_wav(write_bytes("mono.wav", wav_bytes(1, 16000, 16, pcm)));
  CHECK(clip.sample_rate == 16000);
  REQUIRE(clip.samples.size() == 16000);
  CHECK(clip.samples[0] == -1.0);
  CHECK(clip.samples[1] == 0.5);
}

TEST_CASE("wav stereo is averaged sample by sample") {
  std::vector<std::int16_t> pcm;
  std::vector<double> expected;
  for (int i = 0; i < 500; ++i) {
    const auto a = static_cast<std::int16_t>((i * 131) % 65536 - 32768);
    const auto b = static_cast<std::int16_t>(30000 - i * 97);
    pcm.push_back(a);
    pcm.push_back(b);
    expected.push_back((a / 32768.0 + b / 32768.0) / 2.0);
  }
  const auto clip = load_wav(write_bytes("stereo.wav", wav_bytes(2, 8000, 16, pcm)));
  CHECK(clip.sample_rate == 8000);
  REQUIRE(clip.samples.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(clip.samples[i] == expected[i]);
}

TEST_CASE("wav rejects unsupported and corrupt files") {
  expect_errc(Errc::kUnsupportedFormat,
              [] { load_wav(write_bytes("u8.wav", wav_bytes(1, 8000, 8, {1, 2, 3, 4}))); });
  expect_errc(Errc::kUnsupportedFormat,
              [] { load_wav(write_bytes("float.wav", wav_bytes(1, 8000, 16, {1, 2}, 3))); });
  expect_errc(Errc::kCorruptHeader, [] { load_wav(write_bytes("junk.wav", "RIFX....nonsense")); });
  expect_errc(Errc::kCorruptHeader, [] {
    const auto full = wav_bytes(1, 8000, 16, {1, 2, 3});
    load_wav(write_bytes("cut.wav", full.substr(0, 30)));
  });
  expect_errc(Errc::kIoError, [] { load_wav("/nonexistent/dir/missing.wav"); });
}

TEST_CASE("wav write then load round-trips to 16-bit precision") {
  AudioClip clip{16000, {}};
  for (int i = 0; i < 1000; ++i) clip.samples.push_back(0.8 * std::sin(0.01 * i));
  const auto path = test::scratch_dir("frontend") / "round.wav";
  write_wav(path, clip);
  const auto back = load_wav(path);
  REQUIRE(back.samples.size() == clip.samples.size());
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    CHECK(std::abs(back.samples[i] - clip.samples[i]) <= 0.5 / 32768.0 + 1e-15);
  }
}

TEST_CASE("equal temperament and mel scale") {
  CHECK(midi_to_hz(69) == doctest::Approx(440.0).epsilon(1e-15));
  CHECK(midi_to_hz(81) == doctest::Approx(880.0).epsilon(1e-15));
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)).epsilon(1e-15));
  for (double f : {0.0, 55.0, 1000.0, 7999.0}) {
    CHECK(mel_to_hz(hz_to_mel(f)) == doctest::Approx(f).epsilon(1e-12));
  }
}

TEST_CASE("synthesized note peaks at its fundamental; an octave up doubles it") {
  const auto piano = InstrumentSpec::piano();
  const auto a4 = synthesize_score(single_note(69), piano, 16000, 3);
  CHECK(dominant_frequency(a4, 200.0, 2000.0, 400, 3200) == 440.0);
  const auto a5 = synthesize_score(transpose_score(single_note(69), 12), piano, 16000, 3);
  CHECK(dominant_frequency(a5, 200.0, 2000.0, 400, 3200) == 880.0);
}

TEST_CASE("synthesis is peak-normalized and deterministic") {
  const auto score = random_runs_score(5, 6.0, 50, 70, 0.4);
  const auto a = synthesize_score(score, InstrumentSpec::violin(), 16000, 9);
  const auto b = synthesize_score(score, InstrumentSpec::violin(), 16000, 9);
  CHECK(a.samples == b.samples);
  double peak = 0.0;
  for (double s : a.samples) peak = std::max(peak, std::abs(s));
  CHECK(peak == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(a.duration_s() == doctest::Approx(6.0).epsilon(1e-9));

  const auto dir = test::scratch_dir("frontend");
  write_wav(dir / "d1.wav", a);
  write_wav(dir / "d2.wav", b);
  CHECK(test::read_file(dir / "d1.wav") == test::read_file(dir / "d2.wav"));
}

TEST_CASE("synthesis rejects empty and inaudible scores") {
  expect_errc(Errc::kEmptyScore,
              [] { synthesize_score(ScoreSpec{}, InstrumentSpec::piano(), 16000, 1); });
  // Every harmonic of pitch 127 (12.5 kHz) lies above the 4 kHz Nyquist.
  expect_errc(Errc::kEmptyScore,
              [] { synthesize_score(single_note(127), InstrumentSpec::piano(), 8000, 1); });
}

TEST_CASE("transposition shifts pitches and nothing else") {
  const auto score = random_runs_score(2, 20.0, 48, 84, 0.4);
  CHECK(transpose_score(score, 0) == score);
  CHECK(transpose_score(transpose_score(score, 6), -6) == score);
  const auto up = transpose_score(score, 6);
  for (std::size_t i = 0; i < score.events.size(); ++i) {
    CHECK(up.events[i].midi_pitch == score.events[i].midi_pitch + 6);
    CHECK(up.events[i].onset_s == score.events[i].onset_s);
    CHECK(up.events[i].excitation == score.events[i].excitation);
  }
  CHECK(transpose_score(single_note(60), 6).events[0].midi_pitch == 66);
  expect_errc(Errc::kPitchOutOfRange, [] { transpose_score(single_note(125), 6); });
}

TEST_CASE("runs score structure") {
  const auto score = random_runs_score(17, 120.0, 48, 84, 0.4);
  REQUIRE(score.events.size() > 100);
  CHECK(score.total_s == 120.0);
  CHECK(score == random_runs_score(17, 120.0, 48, 84, 0.4));
  CHECK_FALSE(score == random_runs_score(18, 120.0, 48, 84, 0.4));
  std::size_t steps = 0;
  for (std::size_t i = 0; i < score.events.size(); ++i) {
    const auto& e = score.events[i];
    const double slot = e.onset_s / 0.4;
    CHECK(std::abs(slot - std::round(slot)) < 1e-9);
    CHECK(e.midi_pitch >= 48);
    CHECK(e.midi_pitch <= 84);
    CHECK(e.onset_s + e.duration_s <= 120.0 + 1e-9);
    if (i > 0 && std::abs(e.onset_s - score.events[i - 1].onset_s - 0.4) < 1e-9) {
      CHECK(std::abs(e.midi_pitch - score.events[i - 1].midi_pitch) == 1);
      ++steps;
    }
  }
  CHECK(steps > score.events.size() / 2);
  expect_errc(Errc::kInvalidRange, [] { random_runs_score(1, 10.0, 60, 60, 0.4); });
  expect_errc(Errc::kInvalidRange, [] { random_runs_score(1, 0.3, 48, 84, 0.4); });
}

TEST_CASE("score listing parser") {
  std::istringstream in("# pitch onset duration excitation\n60 0 0.4 1\n\n62 0.4 0.4 0.5  # soft\n");
  const auto s = parse_score_listing(in);
  REQUIRE(s.events.size() == 2);
  CHECK(s.events[1] == NoteEvent{62, 0.4, 0.4, 0.5});
  std::istringstream bad("60 0 zero 1\n");
  expect_errc(Errc::kParseError, [&] { parse_score_listing(bad); });
  std::istringstream backwards("60 1 0.4 1\n61 0.5 0.4 1\n");
  expect_errc(Errc::kInvalidRange, [&] { parse_score_listing(backwards); });
}

TEST_CASE("frontend configuration validation") {
  FrontendConfig c;
  CHECK(c.window_samples(16000) == 400);
  CHECK(c.hop_samples(16000) == 80);
  CHECK(c.resolved_fft_size(16000) == 512);
  CHECK_NOTHROW(c.validate(16000));
  CHECK_NOTHROW(FrontendConfig::narrowband().validate(16000));
  auto bad = c;
  bad.hop_ms = 30.0;
  expect_errc(Errc::kBadConfig, [&] { bad.validate(16000); });
  bad = c;
  bad.f_max = 9000.0;
  expect_errc(Errc::kBadConfig, [&] { bad.validate(16000); });
  bad = c;
  bad.fft_size = 300;
  expect_errc(Errc::kBadConfig, [&] { bad.validate(16000); });
  bad = c;
  bad.n_channels = 0;
  expect_errc(Errc::kBadConfig, [&] { bad.validate(16000); });
}

TEST_CASE("filterbank triangles partition unity between the outer peaks") {
  for (const auto& config : {FrontendConfig::wideband(), FrontendConfig::narrowband()}) {
    const auto bank = mel_filterbank(config, 16000);
    CHECK(bank.rows() == config.n_channels);
    CHECK(bank.cols() == 257);
    CHECK(bank.minCoeff() >= 0.0);
    CHECK(bank.maxCoeff() <= 1.0);
    const double m_lo = hz_to_mel(config.f_min);
    const double step = (hz_to_mel(config.f_max) - m_lo) / (config.n_channels + 1);
    for (int b = 0; b < bank.cols(); ++b) {
      const double m = hz_to_mel(b * 16000.0 / 512);
      if (m >= m_lo + step && m <= m_lo + config.n_channels * step) {
        CHECK(bank.col(b).sum() == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("features of a 1 kHz tone match a direct DFT and triangle oracle") {
  const int rate = 16000;
  AudioClip clip{rate, {}};
  for (int i = 0; i < 2000; ++i) {
    clip.samples.push_back(0.5 * std::sin(2.0 * std::numbers::pi * 1000.0 * i / rate));
  }
  const FrontendConfig config;
  const auto fs = mel_log_features(clip, config);
  REQUIRE(fs.size() == (2000 - 400) / 80 + 1);
  CHECK(fs.hop_s == doctest::Approx(0.005));

  // Oracle: naive DFT of the Hamming-windowed frame, triangles built from
  // mel-spaced edge frequencies.
  const int n_fft = 512;
  std::vector<double> edges;
  const double lo = 2595.0 * std::log10(1.0 + 0.0 / 700.0);
  const double hi = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
  for (int j = 0; j < 17; ++j) {
    const double m = lo + j * (hi - lo) / 16.0;
    edges.push_back(700.0 * (std::pow(10.0, m / 2595.0) - 1.0));
  }
  for (std::size_t frame : {std::size_t{0}, std::size_t{7}, fs.size() - 1}) {
    std::vector<double> power(n_fft / 2 + 1);
    for (int k = 0; k <= n_fft / 2; ++k) {
      std::complex<double> acc = 0.0;
      for (int j = 0; j < 400; ++j) {
        const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * j / 399.0);
        acc += w * clip.samples[frame * 80 + j] *
               std::polar(1.0, -2.0 * std::numbers::pi * k * j / n_fft);
      }
      power[k] = std::norm(acc);
    }
    for (int c = 0; c < 15; ++c) {
      const double ml = hz_to_mel(edges[c]);
      const double mc = hz_to_mel(edges[c + 1]);
      const double mh = hz_to_mel(edges[c + 2]);
      double energy = 0.0;
      for (int k = 0; k <= n_fft / 2; ++k) {
        const double m = hz_to_mel(k * 16000.0 / n_fft);
        double weight = 0.0;
        if (m >= ml && m <= mc) weight = (m - ml) / (mc - ml);
        if (m > mc && m <= mh) weight = (mh - m) / (mh - mc);
        energy += weight * power[k];
      }
      const double expected = std::log(std::max(energy, 1e-10));
      CHECK(fs.frames(static_cast<Eigen::Index>(frame), c) ==
            doctest::Approx(expected).epsilon(1e-9));
    }
    CHECK(fs.frame_times[frame] == doctest::Approx((frame * 80 + 200) / 16000.0).epsilon(1e-15));
  }
}

TEST_CASE("silence sits on the log floor and gain shifts every channel by 2 log c") {
  AudioClip silent{16000, std::vector<double>(4000, 0.0)};
  const auto quiet = mel_log_features(silent, FrontendConfig{});
  CHECK(quiet.frames.maxCoeff() == std::log(1e-10));
  CHECK(quiet.frames.minCoeff() == std::log(1e-10));

  const auto clip = synthesize_score(single_note(57, 0.3), InstrumentSpec::violin(), 16000, 4);
  AudioClip louder = clip;
  for (double& s : louder.samples) s *= 0.5;
  const auto a = mel_log_features(clip, FrontendConfig{});
  const auto b = mel_log_features(louder, FrontendConfig{});
  for (Eigen::Index i = 0; i < a.frames.rows(); ++i)
    for (Eigen::Index c = 0; c < a.frames.cols(); ++c) {
      if (b.frames(i, c) > std::log(1e-10) + 1.0) {
        CHECK(b.frames(i, c) - a.frames(i, c) == doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-9));
      }
    }
}

TEST_CASE("clips shorter than one window are rejected") {
  AudioClip tiny{16000, std::vector<double>(399, 0.1)};
  expect_errc(Errc::kClipTooShort, [&] { mel_log_features(tiny, FrontendConfig{}); });
}

TEST_CASE("features csv layout") {
  AudioClip clip{16000, std::vector<double>(480, 0.0)};
  std::ostringstream out;
  write_features_csv(out, mel_log_features(clip, FrontendConfig::narrowband()));
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  CHECK(header == "time_s,c1,c2,c3,c4,c5,c6,c7,c8,c9,c10,c11,c12,c13");
  int rows = 0;
  while (std::getline(in, row)) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("frame times advance by exactly one hop") {
  AudioClip clip{16000, std::vector<double>(16000 * 3, 0.0)};
  const auto fs = mel_log_features(clip, FrontendConfig{});
  REQUIRE(fs.size() == (48000 - 400) / 80 + 1);
  for (std::size_t i = 1; i < fs.size(); ++i) {
    CHECK(std::abs(fs.frame_times[i] - fs.frame_times[i - 1] - 0.005) <= 1e-9);
  }
}

TEST_CASE("filterbank support is exactly the configured band") {
  const auto config = FrontendConfig::narrowband();
  const auto bank = mel_filterbank(config, 16000);
  for (int b = 0; b < bank.cols(); ++b) {
    const double f = b * 16000.0 / 512;
    if (f < config.f_min || f > config.f_max) {
      CHECK(bank.col(b).sum() == 0.0);
    } else if (f > config.f_min && f < config.f_max) {
      CHECK(bank.col(b).sum() > 0.0);
    }
  }
}

TEST_CASE("synthesis and scores are pure functions of their inputs") {
  CHECK(random_runs_score(3, 30.0, 48, 84, 0.4) == random_runs_score(3, 30.0, 48, 84, 0.4));
  const auto score = random_runs_score(3, 30.0, 48, 84, 0.4);
  CHECK(synthesize_score(score, InstrumentSpec::piano(), 16000, 2).samples ==
        synthesize_score(score, InstrumentSpec::piano(), 16000, 2).samples);
  CHECK(score.events[0].onset_s == 0.0);
  CHECK(score.events[1].onset_s == doctest::Approx(0.4));
  CHECK(score.events[2].onset_s == doctest::Approx(0.8));
}

TEST_CASE("instrument validation") {
  auto bad = InstrumentSpec::piano();
  bad.harmonic_amplitudes = {0.0, 0.0};
  expect_errc(Errc::kBadConfig, [&] { bad.validate(); });
  bad = InstrumentSpec::violin();
  bad.envelope.sustain_level = 1.5;
  expect_errc(Errc::kBadConfig, [&] { bad.validate(); });
}
