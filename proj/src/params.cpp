#include "treefed/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace treefed {

void FlatParams::validate() const {
  std::size_t expect = 0;
  for (const auto& span : layout) {
    if (span.offset != expect) {
      throw Error(ErrorCode::LayoutMismatch,
                  "layer '" + span.name + "' offset not contiguous");
    }
    expect += span.length;
  }
  if (expect != values.size()) {
    throw Error(ErrorCode::LayoutMismatch,
                "layout lengths do not cover value vector");
  }
}

std::span<const double> FlatParams::layer(const std::string& name) const {
  for (const auto& span : layout) {
    if (span.name == name) {
      return {values.data() + span.offset, span.length};
    }
  }
  throw Error(ErrorCode::LayoutMismatch, "unknown layer '" + name + "'");
}

std::span<double> FlatParams::layer(const std::string& name) {
  for (const auto& span : layout) {
    if (span.name == name) {
      return {values.data() + span.offset, span.length};
    }
  }
  throw Error(ErrorCode::LayoutMismatch, "unknown layer '" + name + "'");
}

bool FlatParams::has_layer(const std::string& name) const {
  for (const auto& span : layout) {
    if (span.name == name) return true;
  }
  return false;
}

FlatParams make_params(const std::vector<std::pair<std::string, std::size_t>>& layers,
                       std::size_t sample_count) {
  FlatParams p;
  std::size_t offset = 0;
  for (const auto& [name, length] : layers) {
    p.layout.push_back({name, offset, length});
    offset += length;
  }
  p.values.assign(offset, 0.0);
  p.sample_count = sample_count;
  return p;
}

void LayerPartition::check_covers(const FlatParams& params) const {
  for (const auto& name : fixed_layers) {
    if (variable_layers.count(name) != 0) {
      throw Error(ErrorCode::PartitionMismatch,
                  "layer '" + name + "' in both partition sides");
    }
  }
  std::size_t covered = 0;
  for (const auto& span : params.layout) {
    bool in_fixed = fixed_layers.count(span.name) != 0;
    bool in_var = variable_layers.count(span.name) != 0;
    if (!in_fixed && !in_var) {
      throw Error(ErrorCode::PartitionMismatch,
                  "layer '" + span.name + "' not covered by partition");
    }
    ++covered;
  }
  if (covered != fixed_layers.size() + variable_layers.size()) {
    throw Error(ErrorCode::PartitionMismatch,
                "partition names unknown to layout");
  }
}

double cosine_similarity(const FlatParams& a, const FlatParams& b) {
  if (!a.same_layout(b)) {
    throw Error(ErrorCode::LayoutMismatch, "cosine_similarity: layouts differ");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorCode::ZeroVector, "cosine_similarity: zero-norm vector");
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

FlatParams weighted_average(const std::vector<FlatParams>& models) {
  if (models.empty()) {
    throw Error(ErrorCode::EmptyInput, "weighted_average: empty model list");
  }
  const FlatParams& first = models.front();
  std::size_t total = 0;
  for (const auto& m : models) {
    if (!m.same_layout(first)) {
      throw Error(ErrorCode::LayoutMismatch, "weighted_average: layouts differ");
    }
    total += m.sample_count;
  }
  if (total == 0) {
    throw Error(ErrorCode::ZeroTotalWeight, "weighted_average: total weight 0");
  }
  FlatParams out;
  out.layout = first.layout;
  out.sample_count = total;
  out.values.assign(first.values.size(), 0.0);
  const double inv_total = 1.0 / static_cast<double>(total);
  for (const auto& m : models) {
    const double w = static_cast<double>(m.sample_count) * inv_total;
    for (std::size_t i = 0; i < m.values.size(); ++i) {
      out.values[i] += w * m.values[i];
    }
  }
  return out;
}

std::pair<ParamView, ParamView> split(const FlatParams& params,
                                      const LayerPartition& partition) {
  partition.check_covers(params);
  ParamView fixed, variable;
  for (const auto& span : params.layout) {
    if (partition.fixed_layers.count(span.name) != 0) {
      fixed.spans.push_back(span);
      fixed.total_length += span.length;
    } else {
      variable.spans.push_back(span);
      variable.total_length += span.length;
    }
  }
  return {fixed, variable};
}

std::uint64_t checksum(const FlatParams& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_byte = [&h](unsigned char b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  auto mix_u64 = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(v >> (8 * i)));
  };
  for (const auto& span : params.layout) {
    for (char c : span.name) mix_byte(static_cast<unsigned char>(c));
    mix_u64(span.offset);
    mix_u64(span.length);
  }
  mix_u64(params.sample_count);
  for (double v : params.values) mix_u64(std::bit_cast<std::uint64_t>(v));
  return h;
}

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw Error(ErrorCode::IoError, "truncated params stream");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw Error(ErrorCode::IoError, "truncated params stream");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_params(std::ostream& out, const FlatParams& params) {
  write_u32(out, static_cast<std::uint32_t>(params.layout.size()));
  for (const auto& span : params.layout) {
    write_u32(out, static_cast<std::uint32_t>(span.name.size()));
    out.write(span.name.data(), static_cast<std::streamsize>(span.name.size()));
    write_u64(out, span.offset);
    write_u64(out, span.length);
  }
  write_u64(out, params.sample_count);
  write_u64(out, params.values.size());
  for (double v : params.values) write_u64(out, std::bit_cast<std::uint64_t>(v));
}

FlatParams read_params(std::istream& in) {
  FlatParams p;
  std::uint32_t n_layers = read_u32(in);
  p.layout.reserve(n_layers);
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    LayerSpan span;
    std::uint32_t name_len = read_u32(in);
    span.name.resize(name_len);
    in.read(span.name.data(), name_len);
    if (!in) throw Error(ErrorCode::IoError, "truncated params stream");
    span.offset = read_u64(in);
    span.length = read_u64(in);
    p.layout.push_back(std::move(span));
  }
  p.sample_count = read_u64(in);
  std::uint64_t n_values = read_u64(in);
  p.values.resize(n_values);
  for (std::uint64_t i = 0; i < n_values; ++i) {
    p.values[i] = std::bit_cast<double>(read_u64(in));
  }
  p.validate();
  return p;
}

void save_params(const std::string& path, const FlatParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  write_params(out, params);
}

FlatParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_params(in);
}

}  // namespace treefed
