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

#include "inner/signal_frontend.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>

#include <fftw3.h>

#include "inner/csv.hpp"
#include "inner/error.hpp"
#include "inner/rng.hpp"

namespace inner {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

// The FFTW planner is not reentrant; execution with a private plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(static_cast<std::size_t>(n));
    out_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }

  /// Power spectrum |X_k|^2 for k = 0..n/2.
  void power(Eigen::Ref<Eigen::VectorXd> out) {
    fftw_execute(plan_);
    for (int k = 0; k <= n_ / 2; ++k) {
      out[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    }
  }

 private:
  int n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

double envelope_level(const Envelope& env, double tau, double duration) {
  auto held = [&](double t) {
    if (t < 0.0) return 0.0;
    if (env.attack_s > 0.0 && t < env.attack_s) return t / env.attack_s;
    const double since = t - env.attack_s;
    if (env.decay_s <= 0.0) return env.sustain_level;
    return env.sustain_level + (1.0 - env.sustain_level) * std::exp(-since / env.decay_s);
  };
  if (tau < duration) return held(tau);
  if (env.release_s <= 0.0) return 0.0;
  const double r = (tau - duration) / env.release_s;
  return r >= 1.0 ? 0.0 : held(duration) * (1.0 - r);
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

double midi_to_hz(int midi_pitch) {
  return 440.0 * std::exp2((static_cast<double>(midi_pitch) - 69.0) / 12.0);
}

int FrontendConfig::window_samples(int sample_rate) const {
  return static_cast<int>(std::lround(window_ms * sample_rate / 1000.0));
}

int FrontendConfig::hop_samples(int sample_rate) const {
  return static_cast<int>(std::lround(hop_ms * sample_rate / 1000.0));
}

int FrontendConfig::resolved_fft_size(int sample_rate) const {
  if (fft_size > 0) return fft_size;
  int n = 1;
  while (n < window_samples(sample_rate)) n <<= 1;
  return n;
}

void FrontendConfig::validate(int sample_rate) const {
  auto fail = [](const std::string& what) { throw Error(Errc::kBadConfig, what); };
  if (sample_rate <= 0) fail("sample rate must be positive");
  if (!(window_ms > 0.0) || !(hop_ms > 0.0)) fail("window and hop must be positive");
  if (hop_ms > window_ms) fail("hop must not exceed the window");
  if (window_samples(sample_rate) < 2 || hop_samples(sample_rate) < 1) {
    fail("window or hop shorter than one sample");
  }
  if (n_channels < 1) fail("need at least one channel");
  if (!(f_min >= 0.0) || !(f_min < f_max) || f_max > sample_rate / 2.0) {
    fail("need 0 <= f_min < f_max <= sample_rate/2");
  }
  const int n = resolved_fft_size(sample_rate);
  if ((n & (n - 1)) != 0 || n < window_samples(sample_rate)) {
    fail("fft_size must be a power of two no smaller than the window");
  }
  if (!(log_floor > 0.0)) fail("log_floor must be positive");
}

void ScoreSpec::validate() const {
  double last_onset = 0.0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.midi_pitch < 0 || e.midi_pitch > 127) {
      throw Error(Errc::kPitchOutOfRange, "pitch " + std::to_string(e.midi_pitch));
    }
    if (!(e.duration_s > 0.0) || !(e.onset_s >= 0.0)) {
      throw Error(Errc::kInvalidRange, "event needs onset >= 0 and duration > 0");
    }
    if (!(e.excitation > 0.0 && e.excitation <= 1.0)) {
      throw Error(Errc::kInvalidRange, "excitation must lie in (0, 1]");
    }
    if (i > 0 && e.onset_s < last_onset) {
      throw Error(Errc::kInvalidRange, "onsets must be non-decreasing");
    }
    last_onset = e.onset_s;
  }
  if (!(total_s >= 0.0)) throw Error(Errc::kInvalidRange, "total_s must be >= 0");
}

InstrumentSpec InstrumentSpec::piano() {
  InstrumentSpec s;
  for (int h = 1; h <= 8; ++h) s.harmonic_amplitudes.push_back(1.0 / h);
  s.envelope = {0.005, 0.25, 0.1, 0.05};
  return s;
}

InstrumentSpec InstrumentSpec::violin() {
  InstrumentSpec s;
  for (int h = 1; h <= 10; ++h) {
    s.harmonic_amplitudes.push_back((h % 2 == 1 ? 1.0 : 0.25) / h);
  }
  s.envelope = {0.03, 0.1, 0.8, 0.08};
  return s;
}

void InstrumentSpec::validate() const {
  const bool any_positive = std::any_of(harmonic_amplitudes.begin(), harmonic_amplitudes.end(),
                                        [](double a) { return a > 0.0; });
  const bool all_nonneg = std::all_of(harmonic_amplitudes.begin(), harmonic_amplitudes.end(),
                                      [](double a) { return a >= 0.0; });
  if (!any_positive || !all_nonneg) {
    throw Error(Errc::kBadConfig, "harmonic amplitudes must be >= 0 with one positive");
  }
  const auto& e = envelope;
  if (e.attack_s < 0.0 || e.decay_s < 0.0 || e.release_s < 0.0 || e.sustain_level < 0.0 ||
      e.sustain_level > 1.0) {
    throw Error(Errc::kBadConfig, "invalid envelope");
  }
  if (!(noise_floor >= 0.0)) throw Error(Errc::kBadConfig, "noise floor must be >= 0");
}

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoError, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t size = bytes.size();

  if (size < 12 || std::memcmp(data, "RIFF", 4) != 0 || std::memcmp(data + 8, "WAVE", 4) != 0) {
    throw Error(Errc::kCorruptHeader, "missing RIFF/WAVE signature");
  }
  int channels = 0;
  int bits = 0;
  int rate = 0;
  bool have_fmt = false;
  const unsigned char* pcm = nullptr;
  std::size_t pcm_bytes = 0;

  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const unsigned char* chunk = data + pos;
    const std::size_t len = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16 || body + len > size) throw Error(Errc::kCorruptHeader, "short fmt chunk");
      std::uint16_t format = read_u16(data + body);
      if (format == 0xFFFE && len >= 26) format = read_u16(data + body + 24);
      if (format != 1) throw Error(Errc::kUnsupportedFormat, "not PCM");
      channels = read_u16(data + body + 2);
      rate = static_cast<int>(read_u32(data + body + 4));
      bits = read_u16(data + body + 14);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      pcm = data + body;
      pcm_bytes = std::min(len, size - body);
      break;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt || pcm == nullptr) throw Error(Errc::kCorruptHeader, "missing fmt or data chunk");
  if (bits != 16) throw Error(Errc::kUnsupportedFormat, std::to_string(bits) + "-bit samples");
  if (channels != 1 && channels != 2) {
    throw Error(Errc::kUnsupportedFormat, std::to_string(channels) + " channels");
  }
  if (rate <= 0) throw Error(Errc::kCorruptHeader, "zero sample rate");

  const std::size_t frame_bytes = 2 * static_cast<std::size_t>(channels);
  const std::size_t n = pcm_bytes / frame_bytes;
  if (n == 0) throw Error(Errc::kCorruptHeader, "no samples");

  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* f = pcm + i * frame_bytes;
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      acc += static_cast<std::int16_t>(read_u16(f + 2 * c)) / 32768.0;
    }
    clip.samples[i] = acc / channels;
  }
  return clip;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  std::string out;
  out.reserve(44 + 2 * static_cast<std::size_t>(n));
  out += "RIFF";
  put_u32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, 2 * n);
  for (double s : clip.samples) {
    const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f.write(out.data(), static_cast<std::streamsize>(out.size()))) {
    throw Error(Errc::kIoError, "cannot write " + path.string());
  }
}

AudioClip synthesize_score(const ScoreSpec& score, const InstrumentSpec& instrument,
                           int sample_rate, std::uint64_t seed) {
  score.validate();
  instrument.validate();
  if (sample_rate <= 0) throw Error(Errc::kBadConfig, "sample rate must be positive");
  if (score.events.empty()) throw Error(Errc::kEmptyScore, "score has no events");

  const double nyquist = sample_rate / 2.0;
  const auto& env = instrument.envelope;
  double end_s = score.total_s;
  if (end_s <= 0.0) {
    for (const auto& e : score.events) {
      end_s = std::max(end_s, e.onset_s + e.duration_s + env.release_s);
    }
  }
  const auto n = static_cast<std::size_t>(std::ceil(end_s * sample_rate));
  if (n == 0) throw Error(Errc::kEmptyScore, "zero-length rendering");

  CounterRng phases(seed, "synth.phase");
  CounterRng noise(seed, "synth.noise");
  std::vector<double> out(n, 0.0);
  bool audible = false;

  for (const auto& e : score.events) {
    const double f0 = midi_to_hz(e.midi_pitch);
    std::vector<std::pair<double, double>> partials;  // (omega, amplitude)
    std::vector<double> phase;
    for (std::size_t h = 0; h < instrument.harmonic_amplitudes.size(); ++h) {
      const double f = f0 * static_cast<double>(h + 1);
      const double amp = instrument.harmonic_amplitudes[h];
      const double ph = 2.0 * std::numbers::pi * phases.uniform();
      if (f >= nyquist || amp <= 0.0) continue;
      partials.emplace_back(2.0 * std::numbers::pi * f / sample_rate, amp);
      phase.push_back(ph);
    }
    if (partials.empty()) continue;
    audible = true;

    const auto first = static_cast<std::size_t>(std::floor(e.onset_s * sample_rate));
    const auto last = std::min(
        n, static_cast<std::size_t>(std::ceil((e.onset_s + e.duration_s + env.release_s) *
                                              sample_rate)));
    for (std::size_t i = first; i < last; ++i) {
      const double tau = static_cast<double>(i) / sample_rate - e.onset_s;
      const double level = e.excitation * envelope_level(env, tau, e.duration_s);
      if (level == 0.0) continue;
      const double k = static_cast<double>(i - first);
      double acc = 0.0;
      for (std::size_t p = 0; p < partials.size(); ++p) {
        acc += partials[p].second * std::sin(partials[p].first * k + phase[p]);
      }
      out[i] += level * acc;
    }
  }
  if (!audible) throw Error(Errc::kEmptyScore, "every partial lies above Nyquist");

  double peak = 0.0;
  for (double s : out) peak = std::max(peak, std::abs(s));
  if (peak == 0.0) throw Error(Errc::kEmptyScore, "silent rendering");
  if (instrument.noise_floor > 0.0) {
    const double noise_std = instrument.noise_floor * peak;
    for (double& s : out) s += noise_std * noise.normal();
    peak = 0.0;
    for (double s : out) peak = std::max(peak, std::abs(s));
  }
  const double gain = 0.9 / peak;
  for (double& s : out) s *= gain;

  return AudioClip{sample_rate, std::move(out)};
}

ScoreSpec transpose_score(const ScoreSpec& score, int semitones) {
  ScoreSpec out = score;
  for (auto& e : out.events) {
    const int p = e.midi_pitch + semitones;
    if (p < 0 || p > 127) {
      throw Error(Errc::kPitchOutOfRange, "transposed pitch " + std::to_string(p));
    }
    e.midi_pitch = p;
  }
  return out;
}

ScoreSpec random_runs_score(std::uint64_t seed, double total_s, int pitch_lo, int pitch_hi,
                            double note_gap_s) {
  if (pitch_lo < 0 || pitch_hi > 127 || pitch_lo >= pitch_hi) {
    throw Error(Errc::kInvalidRange, "need 0 <= pitch_lo < pitch_hi <= 127");
  }
  if (!(note_gap_s > 0.0) || !(total_s > note_gap_s)) {
    throw Error(Errc::kInvalidRange, "need total_s > note_gap_s > 0");
  }
  constexpr int kMinRun = 24;
  constexpr int kMaxRun = 48;
  constexpr int kRestSlots = 2;

  CounterRng rng(seed, "score.runs");
  ScoreSpec score;
  score.total_s = total_s;
  const int span = pitch_hi - pitch_lo + 1;
  long slot = 0;
  auto onset_of = [&](long s) { return static_cast<double>(s) * note_gap_s; };

  while (onset_of(slot) + note_gap_s <= total_s) {
    const int length = std::min(span, kMinRun + static_cast<int>(rng.below(kMaxRun - kMinRun + 1)));
    const int step = rng.uniform() < 0.5 ? 1 : -1;
    const int room = span - length;
    const int offset = static_cast<int>(rng.below(static_cast<std::uint64_t>(room) + 1));
    int pitch = step > 0 ? pitch_lo + offset : pitch_hi - offset;
    for (int k = 0; k < length && onset_of(slot) + note_gap_s <= total_s; ++k, ++slot) {
      NoteEvent e;
      e.midi_pitch = pitch;
      e.onset_s = onset_of(slot);
      e.duration_s = note_gap_s;
      e.excitation = rng.uniform(0.35, 1.0);
      score.events.push_back(e);
      pitch += step;
    }
    slot += kRestSlots;
  }
  return score;
}

ScoreSpec parse_score_listing(std::istream& in) {
  ScoreSpec score;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string tok;
    std::vector<std::string> toks;
    while (fields >> tok) toks.push_back(tok);
    if (toks.empty()) continue;
    if (toks.size() == 2 && toks[0] == "total_s") {
      score.total_s = csv::parse_double(toks[1]);
      continue;
    }
    if (toks.size() != 4) {
      throw Error(Errc::kParseError, "score line " + std::to_string(line_no) +
                                         ": expected 'pitch onset duration excitation'");
    }
    NoteEvent e;
    e.midi_pitch = static_cast<int>(csv::parse_int(toks[0]));
    e.onset_s = csv::parse_double(toks[1]);
    e.duration_s = csv::parse_double(toks[2]);
    e.excitation = csv::parse_double(toks[3]);
    score.events.push_back(e);
  }
  score.validate();
  return score;
}

Eigen::MatrixXd mel_filterbank(const FrontendConfig& config, int sample_rate) {
  config.validate(sample_rate);
  const int n_fft = config.resolved_fft_size(sample_rate);
  const int bins = n_fft / 2 + 1;
  const int k = config.n_channels;
  const double mel_lo = hz_to_mel(config.f_min);
  const double mel_hi = hz_to_mel(config.f_max);
  std::vector<double> edges(static_cast<std::size_t>(k) + 2);
  for (int j = 0; j < k + 2; ++j) edges[j] = mel_lo + j * (mel_hi - mel_lo) / (k + 1);

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k, bins);
  for (int b = 0; b < bins; ++b) {
    const double f = static_cast<double>(b) * sample_rate / n_fft;
    if (f < config.f_min || f > config.f_max) continue;
    const double m = hz_to_mel(f);
    for (int c = 0; c < k; ++c) {
      const double lo = edges[c];
      const double mid = edges[c + 1];
      const double hi = edges[c + 2];
      if (m >= lo && m <= mid) {
        w(c, b) = (m - lo) / (mid - lo);
      } else if (m > mid && m <= hi) {
        w(c, b) = (hi - m) / (hi - mid);
      }
    }
  }
  return w;
}

std::vector<double> hamming_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  if (length == 1) {
    w[0] = 1.0;
    return w;
  }
  for (int i = 0; i < length; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (length - 1));
  }
  return w;
}

FeatureSeries mel_log_features(const AudioClip& clip, const FrontendConfig& config) {
  config.validate(clip.sample_rate);
  const int rate = clip.sample_rate;
  const int win = config.window_samples(rate);
  const int hop = config.hop_samples(rate);
  const int n_fft = config.resolved_fft_size(rate);
  const auto len = static_cast<long>(clip.samples.size());
  if (len < win) {
    throw Error(Errc::kClipTooShort, std::to_string(len) + " samples, window needs " +
                                         std::to_string(win));
  }
  const long n_frames = (len - win) / hop + 1;

  const Eigen::MatrixXd bank = mel_filterbank(config, rate);
  const std::vector<double> window = hamming_window(win);
  RealFft fft(n_fft);
  Eigen::VectorXd power(n_fft / 2 + 1);
  const double log_floor = std::log(config.log_floor);

  FeatureSeries fs;
  fs.hop_s = static_cast<double>(hop) / rate;
  fs.frame_times.resize(static_cast<std::size_t>(n_frames));
  fs.frames.resize(n_frames, config.n_channels);
  const double t0 = 0.5 * win / rate;

  double* in = fft.input();
  for (long i = 0; i < n_frames; ++i) {
    const double* seg = clip.samples.data() + i * hop;
    for (int j = 0; j < win; ++j) in[j] = seg[j] * window[j];
    std::fill(in + win, in + n_fft, 0.0);
    fft.power(power);
    const Eigen::VectorXd energy = bank * power;
    for (int c = 0; c < config.n_channels; ++c) {
      fs.frames(i, c) = energy[c] > config.log_floor ? std::log(energy[c]) : log_floor;
    }
    fs.frame_times[i] = t0 + static_cast<double>(i) * fs.hop_s;
  }
  return fs;
}

void write_features_csv(std::ostream& out, const FeatureSeries& features) {
  out << "time_s";
  for (int c = 1; c <= features.channels(); ++c) out << ",c" << c;
  out << '\n';
  for (std::size_t i = 0; i < features.size(); ++i) {
    out << csv::format(features.frame_times[i]);
    for (int c = 0; c < features.channels(); ++c) {
      out << ',' << csv::format(features.frames(static_cast<Eigen::Index>(i), c));
    }
    out << '\n';
  }
}

}  // namespace inner
