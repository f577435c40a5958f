#pragma once

// File formats: matrix files (text header + little-endian float32 payload),
// speech regions, segment labels, flat `key = value` configs, model
// checkpoints, loss traces and partition dumps.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ocdgalp/error.hpp"
#include "ocdgalp/gat.hpp"
#include "ocdgalp/lpa.hpp"
#include "ocdgalp/matrix.hpp"
#include "ocdgalp/timeline.hpp"

namespace ocdgalp {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline std::string format_seconds(TimeMs ms) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", to_seconds(ms));
  return buf;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void append_f32(std::string& out, double value) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
}

inline double read_f32(const std::string& in, std::size_t offset) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b)
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + b])) << (8 * b);
  return static_cast<double>(std::bit_cast<float>(bits));
}

// Splits "key: value" header lines up to the `data:` line. Returns the offset
// of the binary payload.
inline std::size_t read_header(const std::string& text, const std::string& magic,
                               std::vector<std::pair<std::string, std::string>>& fields) {
  std::size_t pos = 0;
  auto next_line = [&](std::string& line) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) throw DataError("truncated header");
    line = text.substr(pos, nl - pos);
    pos = nl + 1;
  };
  std::string line;
  next_line(line);
  if (line != magic) throw DataError("expected '" + magic + "' header, got '" + line + "'");
  for (;;) {
    next_line(line);
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) throw DataError("malformed header line '" + line + "'");
    std::string key = line.substr(0, colon);
    std::string value = line.substr(colon + 1);
    if (!value.empty() && value.front() == ' ') value.erase(0, 1);
    if (key == "data") {
      if (value != "float32-le") throw DataError("unsupported payload encoding '" + value + "'");
      return pos;
    }
    fields.emplace_back(std::move(key), std::move(value));
  }
}

inline std::size_t parse_count(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw DataError("bad integer for " + key);
    return static_cast<std::size_t>(v);
  } catch (const std::logic_error&) {
    throw DataError("bad integer for " + key + ": '" + value + "'");
  }
}

inline double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw DataError("bad number for " + key);
    return v;
  } catch (const std::logic_error&) {
    throw DataError("bad number for " + key + ": '" + value + "'");
  }
}

}  // namespace detail

// A K x D matrix with one segment-table row per matrix row. `kind` is
// "embeddings" or "affinity" (then D == K).
struct MatrixFile {
  std::string kind = "embeddings";
  SegmentTable segments;
  Matrix values;
};

inline constexpr const char* kMatrixMagic = "ocdgalp-matrix 1";

inline std::string encode_matrix_file(const MatrixFile& file) {
  if (file.segments.size() != file.values.rows())
    throw DimensionError(dims_message("segment rows vs matrix rows", file.values.rows(),
                                      file.segments.size()));
  std::string out = std::string(kMatrixMagic) + "\n";
  out += "kind: " + file.kind + "\n";
  out += "K: " + std::to_string(file.values.rows()) + "\n";
  out += "D: " + std::to_string(file.values.cols()) + "\n";
  for (const auto& s : file.segments)
    out += "segment: " + s.recording + " " + format_seconds(s.span.start) + " " +
           format_seconds(s.span.end) + "\n";
  out += "data: float32-le\n";
  for (double v : file.values.data()) detail::append_f32(out, v);
  return out;
}

inline MatrixFile decode_matrix_file(const std::string& bytes) {
  std::vector<std::pair<std::string, std::string>> fields;
  const std::size_t payload = detail::read_header(bytes, kMatrixMagic, fields);
  MatrixFile file;
  std::size_t k = 0, d = 0;
  bool has_k = false, has_d = false;
  for (const auto& [key, value] : fields) {
    if (key == "kind") {
      file.kind = value;
    } else if (key == "K") {
      k = detail::parse_count(key, value);
      has_k = true;
    } else if (key == "D") {
      d = detail::parse_count(key, value);
      has_d = true;
    } else if (key == "segment") {
      std::istringstream in(value);
      std::string rec, start, end;
      if (!(in >> rec >> start >> end)) throw DataError("malformed segment line '" + value + "'");
      const std::size_t node = file.segments.size();
      file.segments.push_back({rec,
                               {to_ms(detail::parse_real("segment start", start)),
                                to_ms(detail::parse_real("segment end", end))},
                               node});
    } else {
      throw DataError("unknown header key '" + key + "'");
    }
  }
  if (!has_k || !has_d) throw DataError("matrix header must carry K and D");
  if (file.segments.size() != k)
    throw DataError("header declares K = " + std::to_string(k) + " but lists " +
                    std::to_string(file.segments.size()) + " segments");
  if (bytes.size() - payload != 4 * k * d)
    throw DataError("payload holds " + std::to_string(bytes.size() - payload) +
                    " bytes, expected " + std::to_string(4 * k * d));
  file.values = Matrix(k, d);
  for (std::size_t n = 0; n < k * d; ++n) file.values.data()[n] = detail::read_f32(bytes, payload + 4 * n);
  return file;
}

// recording<TAB>start<TAB>end per line.
inline std::string encode_regions(const SpeechRegions& regions) {
  std::string out;
  for (const auto& [rec, spans] : regions.recordings())
    for (const auto& s : spans)
      out += rec + "\t" + format_seconds(s.start) + "\t" + format_seconds(s.end) + "\n";
  return out;
}

inline SpeechRegions decode_regions(const std::string& text) {
  SpeechRegions regions;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::vector<TimeSpan>> pending;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string rec, start, end, extra;
    if (!(fields >> rec)) continue;
    if (!(fields >> start >> end) || (fields >> extra))
      throw DataError("regions line " + std::to_string(line_no) + ": expected 3 fields");
    pending[rec].push_back({to_ms(detail::parse_real("region start", start)),
                            to_ms(detail::parse_real("region end", end))});
  }
  for (auto& [rec, spans] : pending)
    for (const auto& s : spans) regions.add(rec, s);
  return regions;
}

// segment-index<TAB>speaker[,speaker...]; indices follow the matrix file rows.
inline std::string encode_labels(const std::vector<std::vector<std::string>>& labels) {
  std::string out;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    out += std::to_string(n) + "\t";
    for (std::size_t s = 0; s < labels[n].size(); ++s) out += (s ? "," : "") + labels[n][s];
    out += "\n";
  }
  return out;
}

inline std::vector<std::vector<std::string>> decode_labels(const std::string& text) {
  std::vector<std::vector<std::string>> labels;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("labels line missing tab: '" + line + "'");
    const std::size_t idx = detail::parse_count("label index", line.substr(0, tab));
    if (idx != labels.size()) throw DataError("labels must be listed in index order");
    std::vector<std::string> speakers;
    std::istringstream list(line.substr(tab + 1));
    for (std::string s; std::getline(list, s, ',');)
      if (!s.empty()) speakers.push_back(s);
    if (speakers.empty()) throw DataError("segment " + std::to_string(idx) + " has no speaker");
    labels.push_back(std::move(speakers));
  }
  return labels;
}

// Flat `key = value` text; `#` starts a comment.
using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline std::string encode_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

inline constexpr const char* kModelMagic = "ocdgalp-model 1";

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kLinear: return "linear";
    case Activation::kElu: return "elu";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "linear";
}

inline Activation parse_activation(const std::string& s) {
  if (s == "linear") return Activation::kLinear;
  if (s == "elu") return Activation::kElu;
  if (s == "sigmoid") return Activation::kSigmoid;
  throw DataError("unknown activation '" + s + "'");
}

inline std::string encode_checkpoint(const GatModel& model) {
  std::string out = std::string(kModelMagic) + "\n";
  out += "dims:";
  for (std::size_t d : model.dims) out += " " + std::to_string(d);
  out += "\ngat_layers: " + std::to_string(model.gat_layers.size()) + "\n";
  out += "gat_activation: " + activation_name(model.gat_activation) + "\n";
  out += "head_activations:";
  for (const auto& l : model.scoring_head.layers) out += " " + activation_name(l.activation);
  out += "\nleaky_slope: " + format_double(model.gat_layers.empty()
                                               ? 0.2
                                               : model.gat_layers.front().leaky_slope) + "\n";
  out += "epsilon: " + format_double(model.epsilon) + "\n";
  out += "seed: " + std::to_string(model.seed) + "\n";
  out += "data: float32-le\n";
  for (const auto& block : parameter_blocks(model))
    for (double v : block) detail::append_f32(out, v);
  return out;
}

inline GatModel decode_checkpoint(const std::string& bytes) {
  std::vector<std::pair<std::string, std::string>> fields;
  const std::size_t payload = detail::read_header(bytes, kModelMagic, fields);
  std::vector<std::size_t> dims;
  std::size_t gat_layers = 0;
  double epsilon = 0.5, slope = 0.2;
  std::uint64_t seed = 0;
  Activation gat_act = Activation::kElu;
  std::vector<Activation> head_acts;
  for (const auto& [key, value] : fields) {
    std::istringstream in(value);
    if (key == "dims") {
      for (std::string t; in >> t;) dims.push_back(detail::parse_count("dims", t));
    } else if (key == "gat_layers") {
      gat_layers = detail::parse_count(key, value);
    } else if (key == "gat_activation") {
      gat_act = parse_activation(value);
    } else if (key == "head_activations") {
      for (std::string t; in >> t;) head_acts.push_back(parse_activation(t));
    } else if (key == "leaky_slope") {
      slope = detail::parse_real(key, value);
    } else if (key == "epsilon") {
      epsilon = detail::parse_real(key, value);
    } else if (key == "seed") {
      seed = detail::parse_count(key, value);
    } else {
      throw DataError("unknown checkpoint key '" + key + "'");
    }
  }
  GatModel model;
  try {
    model = init_model(dims, gat_layers, epsilon, seed);
  } catch (const ConfigError& e) {
    throw DataError(std::string("invalid checkpoint architecture: ") + e.what());
  }
  model.gat_activation = gat_act;
  for (auto& l : model.gat_layers) l.leaky_slope = slope;
  if (!head_acts.empty()) {
    if (head_acts.size() != model.scoring_head.layers.size())
      throw DataError("head activation count does not match the architecture");
    for (std::size_t l = 0; l < head_acts.size(); ++l)
      model.scoring_head.layers[l].activation = head_acts[l];
  }
  std::size_t offset = payload;
  for (auto block : parameter_blocks(model)) {
    if (offset + 4 * block.size() > bytes.size()) throw DataError("checkpoint payload truncated");
    for (double& v : block) {
      v = detail::read_f32(bytes, offset);
      offset += 4;
    }
  }
  if (offset != bytes.size()) throw DataError("checkpoint payload has trailing bytes");
  return model;
}

// epoch<TAB>loss per line.
inline std::string encode_loss_trace(const std::vector<double>& trace) {
  std::string out;
  char buf[64];
  for (std::size_t e = 0; e < trace.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu\t%.9g\n", e, trace[e]);
    out += buf;
  }
  return out;
}

// node<TAB>community:belonging[,community:belonging...]
inline std::string encode_partition(const CommunityPartition& partition) {
  std::string out;
  char buf[64];
  for (std::size_t u = 0; u < partition.labels.size(); ++u) {
    out += std::to_string(u) + "\t";
    const auto& entries = partition.labels[u].entries;
    for (std::size_t e = 0; e < entries.size(); ++e) {
      std::snprintf(buf, sizeof buf, "%s%zu:%.6f", e ? "," : "", entries[e].community,
                    entries[e].belonging);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace ocdgalp
