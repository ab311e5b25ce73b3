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

#include "inner/pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "inner/csv.hpp"
#include "inner/error.hpp"

namespace inner {

namespace {

std::string exact(double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

const char* kind_name(InputKind k) {
  switch (k) {
    case InputKind::kWav: return "wav";
    case InputKind::kSynth: return "synth";
    case InputKind::kState: return "state";
    case InputKind::kProcess: return "process";
  }
  return "?";
}

// Reads typed values out of the parsed tree and remembers which keys were
// consumed so that leftovers can be reported.
class Reader {
 public:
  explicit Reader(const boost::property_tree::ptree& tree) : tree_(tree) {}

  template <typename T, typename Parse>
  void get(const std::string& section, const std::string& key, T& out, Parse parse) {
    const auto path = boost::property_tree::ptree::path_type(section + "/" + key, '/');
    const auto node = tree_.get_optional<std::string>(path);
    if (!node) return;
    used_.insert(section + "/" + key);
    try {
      out = parse(trim(*node));
    } catch (const Error&) {
      throw Error(Errc::kBadConfig, "[" + section + "] " + key + " = '" + *node + "'");
    }
  }
  void number(const std::string& s, const std::string& k, double& out) {
    get(s, k, out, [](const std::string& v) { return csv::parse_double(v); });
  }
  void integer(const std::string& s, const std::string& k, int& out) {
    get(s, k, out, [](const std::string& v) { return static_cast<int>(csv::parse_int(v)); });
  }
  void count(const std::string& s, const std::string& k, std::size_t& out) {
    get(s, k, out, [](const std::string& v) {
      const long x = csv::parse_int(v);
      if (x < 0) throw Error(Errc::kParseError, "negative");
      return static_cast<std::size_t>(x);
    });
  }
  void text(const std::string& s, const std::string& k, std::string& out) {
    get(s, k, out, [](const std::string& v) { return v; });
  }
  void flag(const std::string& s, const std::string& k, bool& out) {
    get(s, k, out, [](const std::string& v) {
      if (v == "true" || v == "1") return true;
      if (v == "false" || v == "0") return false;
      throw Error(Errc::kParseError, "not a boolean");
    });
  }

  void reject_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) {
        throw Error(Errc::kBadConfig, "key '" + section + "' outside any section");
      }
      for (const auto& [key, value] : body) {
        if (!used_.count(section + "/" + key)) {
          throw Error(Errc::kBadConfig, "unknown key [" + section + "] " + key);
        }
      }
    }
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }

  const boost::property_tree::ptree& tree_;
  std::set<std::string> used_;
};

std::string write_to_string(const auto& writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

StateSamples prepare_state(StateSamples s, const PrepConfig& prep) {
  s = trim_outliers(std::move(s), prep.trim_fraction);
  return normalize_variance(std::move(s));
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(Errc::kBadConfig, what); };
  if (input.kind == InputKind::kWav || input.kind == InputKind::kState) {
    if (input.path.empty()) fail("input.path is required for this input kind");
  }
  if (input.kind == InputKind::kSynth) {
    if (input.score != "runs" && input.score != "listing") fail("input.score must be runs|listing");
    if (input.score == "listing" && input.score_path.empty()) fail("input.score_path is required");
    if (input.instrument != "piano" && input.instrument != "violin") {
      fail("input.instrument must be piano|violin");
    }
    if (input.sample_rate <= 0) fail("input.sample_rate must be positive");
    frontend.validate(input.sample_rate);
  }
  if (input.kind == InputKind::kProcess) {
    if (input.frames < 3) fail("input.frames must be >= 3");
    if (input.observer != "identity" && input.observer != "warped") {
      fail("input.observer must be identity|warped");
    }
    if (!(input.observer_scale > 0.0)) fail("input.observer_scale must be positive");
  }
  if (!(prep.trim_fraction >= 0.0 && prep.trim_fraction < 0.5)) fail("prep.trim_fraction");
  if (prep.retain_dims < 1) fail("prep.retain_dims must be >= 1");
  if (target_count < 1) fail("atlas.target_count must be >= 1");
  if (!(solve.relative_gap_tol >= 0.0)) fail("model.relative_gap_tol must be >= 0");
  if (!(smoothing_sigma_frames >= 0.0)) fail("inner.smoothing_sigma_frames must be >= 0");
}

RunConfig parse_run_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(Errc::kBadConfig, e.message() + " at line " + std::to_string(e.line()));
  }
  RunConfig c;
  Reader r(tree);
  long seed = static_cast<long>(c.seed);
  r.get("run", "seed", seed, [](const std::string& v) {
    const long x = csv::parse_int(v);
    if (x < 0) throw Error(Errc::kParseError, "negative");
    return x;
  });
  c.seed = static_cast<std::uint64_t>(seed);

  std::string kind = kind_name(c.input.kind);
  r.text("input", "kind", kind);
  if (kind == "wav") c.input.kind = InputKind::kWav;
  else if (kind == "synth") c.input.kind = InputKind::kSynth;
  else if (kind == "state") c.input.kind = InputKind::kState;
  else if (kind == "process") c.input.kind = InputKind::kProcess;
  else throw Error(Errc::kBadConfig, "input.kind must be wav|synth|state|process");
  std::string path = c.input.path.string();
  r.text("input", "path", path);
  c.input.path = path;
  r.text("input", "score", c.input.score);
  std::string score_path = c.input.score_path.string();
  r.text("input", "score_path", score_path);
  c.input.score_path = score_path;
  r.number("input", "total_s", c.input.total_s);
  r.integer("input", "pitch_lo", c.input.pitch_lo);
  r.integer("input", "pitch_hi", c.input.pitch_hi);
  r.number("input", "note_gap_s", c.input.note_gap_s);
  r.text("input", "instrument", c.input.instrument);
  r.integer("input", "transpose", c.input.transpose);
  r.integer("input", "sample_rate", c.input.sample_rate);
  r.count("input", "frames", c.input.frames);
  r.text("input", "observer", c.input.observer);
  r.number("input", "observer_angle_deg", c.input.observer_angle_deg);
  r.number("input", "observer_scale", c.input.observer_scale);

  r.number("frontend", "window_ms", c.frontend.window_ms);
  r.number("frontend", "hop_ms", c.frontend.hop_ms);
  r.integer("frontend", "n_channels", c.frontend.n_channels);
  r.number("frontend", "f_min", c.frontend.f_min);
  r.number("frontend", "f_max", c.frontend.f_max);
  r.integer("frontend", "fft_size", c.frontend.fft_size);
  r.number("frontend", "log_floor", c.frontend.log_floor);

  r.integer("prep", "retain_dims", c.prep.retain_dims);
  r.number("prep", "pc1_floor", c.prep.pc1_floor);
  r.number("prep", "trim_fraction", c.prep.trim_fraction);
  r.flag("prep", "refit_after_truncation", c.prep.refit_after_truncation);

  r.count("atlas", "target_count", c.target_count);
  r.count("atlas", "min_occupancy", c.min_occupancy);
  r.number("model", "relative_gap_tol", c.solve.relative_gap_tol);
  r.number("inner", "smoothing_sigma_frames", c.smoothing_sigma_frames);

  std::string out = c.output_dir.string();
  r.text("output", "dir", out);
  c.output_dir = out;

  r.reject_unknown();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoError, "cannot read config " + path.string());
  return parse_run_config(in);
}

std::string serialize_run_config(const RunConfig& c, bool with_output) {
  std::ostringstream os;
  os << "[run]\nseed = " << c.seed << "\n\n";
  os << "[input]\nkind = " << kind_name(c.input.kind) << '\n';
  switch (c.input.kind) {
    case InputKind::kWav:
    case InputKind::kState:
      os << "path = " << c.input.path.string() << '\n';
      break;
    case InputKind::kSynth:
      os << "score = " << c.input.score << '\n';
      if (c.input.score == "listing") os << "score_path = " << c.input.score_path.string() << '\n';
      os << "total_s = " << exact(c.input.total_s) << '\n'
         << "pitch_lo = " << c.input.pitch_lo << '\n'
         << "pitch_hi = " << c.input.pitch_hi << '\n'
         << "note_gap_s = " << exact(c.input.note_gap_s) << '\n'
         << "instrument = " << c.input.instrument << '\n'
         << "transpose = " << c.input.transpose << '\n'
         << "sample_rate = " << c.input.sample_rate << '\n';
      break;
    case InputKind::kProcess:
      os << "frames = " << c.input.frames << '\n'
         << "observer = " << c.input.observer << '\n'
         << "observer_angle_deg = " << exact(c.input.observer_angle_deg) << '\n'
         << "observer_scale = " << exact(c.input.observer_scale) << '\n';
      break;
  }
  os << "\n[frontend]\nwindow_ms = " << exact(c.frontend.window_ms) << '\n'
     << "hop_ms = " << exact(c.frontend.hop_ms) << '\n'
     << "n_channels = " << c.frontend.n_channels << '\n'
     << "f_min = " << exact(c.frontend.f_min) << '\n'
     << "f_max = " << exact(c.frontend.f_max) << '\n'
     << "fft_size = " << c.frontend.fft_size << '\n'
     << "log_floor = " << exact(c.frontend.log_floor) << '\n';
  os << "\n[prep]\nretain_dims = " << c.prep.retain_dims << '\n'
     << "pc1_floor = " << exact(c.prep.pc1_floor) << '\n'
     << "trim_fraction = " << exact(c.prep.trim_fraction) << '\n'
     << "refit_after_truncation = " << (c.prep.refit_after_truncation ? "true" : "false") << '\n';
  os << "\n[atlas]\ntarget_count = " << c.target_count << '\n'
     << "min_occupancy = " << c.min_occupancy << '\n';
  os << "\n[model]\nrelative_gap_tol = " << exact(c.solve.relative_gap_tol) << '\n';
  os << "\n[inner]\nsmoothing_sigma_frames = " << exact(c.smoothing_sigma_frames) << '\n';
  if (with_output) os << "\n[output]\ndir = " << c.output_dir.string() << '\n';
  return os.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::kIoError, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::vector<LocalFrame> solve_neighborhoods(const VelocitySeries& velocity, const Atlas& atlas,
                                            const SolveOptions& options, SolveStats* stats) {
  SolveStats local;
  std::vector<LocalFrame> frames;
  std::optional<Error> first;
  for (const auto& nb : atlas.neighborhoods) {
    try {
      const auto corr =
          local_correlations(gather_velocities(velocity, nb.members), atlas.min_occupancy);
      LocalFrame f = solve_frame(corr, options, nb.id);
      f.occupancy = nb.members.size();
      frames.push_back(std::move(f));
      ++local.solved;
    } catch (const Error& e) {
      switch (e.code()) {
        case Errc::kSingularC2: ++local.singular; break;
        case Errc::kDegenerateSpectrum: ++local.degenerate; break;
        case Errc::kInsufficientData: ++local.insufficient; break;
        default: throw;
      }
      if (!first) first = e;
    }
  }
  if (stats != nullptr) *stats = local;
  if (frames.empty()) {
    if (first) throw *first;
    throw Error(Errc::kEmptyField, "atlas has no neighborhoods");
  }
  return frames;
}

PipelineResult run_from_state(StateSamples state, const AtlasParams& atlas_params,
                              const SolveOptions& options, double smoothing_sigma_frames) {
  PipelineResult r;
  r.state = std::move(state);
  r.velocity = estimate_velocity(r.state);
  r.atlas = build_atlas(r.state, atlas_params);
  r.field = harmonize_field(r.atlas, solve_neighborhoods(r.velocity, r.atlas, options, &r.stats));
  r.inner_raw = derive_inner(r.state, r.velocity, r.field, r.atlas);
  r.inner = smoothing_sigma_frames > 0.0 ? gaussian_smooth(r.inner_raw, smoothing_sigma_frames)
                                         : r.inner_raw;
  return r;
}

PipelineResult run_from_audio(const AudioClip& clip, const FrontendConfig& frontend,
                              const PrepConfig& prep, const AtlasParams& atlas_params,
                              const SolveOptions& options, double smoothing_sigma_frames) {
  FeatureSeries features = mel_log_features(clip, frontend);
  if (features.size() < std::max<std::size_t>(atlas_params.min_occupancy, 3)) {
    throw Error(Errc::kClipTooShort,
                std::to_string(features.size()) + " frames, need at least " +
                    std::to_string(std::max<std::size_t>(atlas_params.min_occupancy, 3)));
  }
  StateSamples state = prepare_embedding(features, prep);
  PipelineResult r = run_from_state(std::move(state), atlas_params, options, smoothing_sigma_frames);
  r.features = std::move(features);
  return r;
}

ScoreSpec input_score(const InputConfig& input, std::uint64_t seed) {
  ScoreSpec score;
  if (input.score == "listing") {
    std::ifstream in(input.score_path);
    if (!in) throw Error(Errc::kIoError, "cannot read score " + input.score_path.string());
    score = parse_score_listing(in);
  } else {
    score = random_runs_score(seed, input.total_s, input.pitch_lo, input.pitch_hi,
                              input.note_gap_s);
  }
  return transpose_score(score, input.transpose);
}

AudioClip render_input_audio(const InputConfig& input, std::uint64_t seed) {
  const ScoreSpec score = input_score(input, seed);
  const InstrumentSpec instrument =
      input.instrument == "violin" ? InstrumentSpec::violin() : InstrumentSpec::piano();
  return synthesize_score(score, instrument, input.sample_rate, seed);
}

PipelineResult run_config(const RunConfig& config) {
  config.validate();
  const AtlasParams atlas = config.atlas_params();
  switch (config.input.kind) {
    case InputKind::kWav:
      return run_from_audio(load_wav(config.input.path), config.frontend, config.prep, atlas,
                            config.solve, config.smoothing_sigma_frames);
    case InputKind::kSynth:
      return run_from_audio(render_input_audio(config.input, config.seed), config.frontend,
                            config.prep, atlas, config.solve, config.smoothing_sigma_frames);
    case InputKind::kState: {
      std::ifstream in(config.input.path);
      if (!in) throw Error(Errc::kIoError, "cannot read " + config.input.path.string());
      return run_from_state(prepare_state(read_state_csv(in), config.prep), atlas, config.solve,
                            config.smoothing_sigma_frames);
    }
    case InputKind::kProcess: {
      ProcessParams p;
      p.frames = config.input.frames;
      p.seed = config.seed;
      StateSamples s = simulate_process(p);
      if (config.input.observer == "warped") {
        s = observe_warped(s, config.input.observer_angle_deg * std::numbers::pi / 180.0,
                           config.input.observer_scale);
      }
      return run_from_state(prepare_state(std::move(s), config.prep), atlas, config.solve,
                            config.smoothing_sigma_frames);
    }
  }
  throw Error(Errc::kBadConfig, "unknown input kind");
}

RunArtifacts cmd_derive(const RunConfig& config) {
  RunConfig effective = config;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    effective.output_dir = env;
  }
  const PipelineResult result = run_config(effective);

  // Everything is rendered before the first file is touched.
  std::vector<std::pair<std::string, std::string>> files;
  if (result.features) {
    files.emplace_back("features.csv", write_to_string([&](std::ostream& os) {
                         write_features_csv(os, *result.features);
                       }));
  }
  files.emplace_back("state.csv",
                     write_to_string([&](std::ostream& os) { write_state_csv(os, result.state); }));
  files.emplace_back("atlas.csv",
                     write_to_string([&](std::ostream& os) { write_atlas_csv(os, result.atlas); }));
  files.emplace_back("frames.csv",
                     write_to_string([&](std::ostream& os) { write_frames_csv(os, result.field); }));
  files.emplace_back("inner.csv",
                     write_to_string([&](std::ostream& os) { write_inner_csv(os, result.inner); }));
  files.emplace_back("config.ini", serialize_run_config(effective));

  RunArtifacts artifacts;
  artifacts.output_dir = effective.output_dir;
  artifacts.config_hash = sha256_hex(serialize_run_config(effective, false));

  nlohmann::ordered_json manifest;
  manifest["library_version"] = kLibraryVersion;
  manifest["seed"] = effective.seed;
  manifest["config_hash"] = artifacts.config_hash;
  manifest["config_file"] = "config.ini";
  manifest["neighborhoods"] = result.atlas.size();
  manifest["coverage"] = result.atlas.coverage;
  manifest["solve"] = {{"solved", result.stats.solved},
                       {"singular_c2", result.stats.singular},
                       {"degenerate_spectrum", result.stats.degenerate},
                       {"insufficient_data", result.stats.insufficient}};
  manifest["harmonization_components"] = result.field.component_count;
  auto& list = manifest["artifacts"] = nlohmann::ordered_json::array();
  for (const auto& [name, body] : files) {
    list.push_back({{"file", name}, {"bytes", body.size()}, {"sha256", sha256_hex(body)}});
  }
  files.emplace_back("manifest.json", manifest.dump(2) + "\n");

  std::vector<std::filesystem::path> written;
  try {
    std::filesystem::create_directories(effective.output_dir);
    for (const auto& [name, body] : files) {
      const auto path = effective.output_dir / name;
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      written.push_back(path);
      if (!out.write(body.data(), static_cast<std::streamsize>(body.size())) || !out.flush()) {
        throw Error(Errc::kIoError, "cannot write " + path.string());
      }
    }
  } catch (const std::filesystem::filesystem_error& e) {
    for (const auto& p : written) std::filesystem::remove(p);
    throw Error(Errc::kIoError, e.what());
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) std::filesystem::remove(p, ec);
    throw;
  }
  artifacts.files.assign(written.begin(), written.end() - 1);
  artifacts.manifest = written.back();
  return artifacts;
}

InnerSeries load_inner_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoError, "cannot read " + path.string());
  return read_inner_csv(in);
}

ComparisonReport cmd_compare(const std::filesystem::path& inner_a,
                             const std::filesystem::path& inner_b,
                             const std::filesystem::path& out_dir) {
  const InnerSeries a = load_inner_csv(inner_a);
  const InnerSeries b = load_inner_csv(inner_b);
  const auto [p, report] = best_alignment(a, b);
  const std::string report_csv =
      write_to_string([&](std::ostream& os) { write_report_csv(os, report); });
  const std::string svg = write_to_string(
      [&](std::ostream& os) { write_overlay_svg(os, a, apply_alignment(p, b)); });
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::kIoError, "cannot create " + out_dir.string());
  for (const auto& [name, body] :
       {std::pair<const char*, const std::string&>{"report.csv", report_csv},
        std::pair<const char*, const std::string&>{"overlay.svg", svg}}) {
    std::ofstream out(out_dir / name, std::ios::binary | std::ios::trunc);
    if (!out.write(body.data(), static_cast<std::streamsize>(body.size()))) {
      throw Error(Errc::kIoError, "cannot write " + (out_dir / name).string());
    }
  }
  return report;
}

}  // namespace inner
