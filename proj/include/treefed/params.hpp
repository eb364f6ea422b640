#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "treefed/error.hpp"

namespace treefed {

struct LayerSpan {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;

  bool operator==(const LayerSpan&) const = default;
};

// A model's full parameter vector with a named-layer index map. The unit
// of all aggregation arithmetic. Immutable by convention once built.
struct FlatParams {
  std::vector<double> values;
  std::vector<LayerSpan> layout;
  std::size_t sample_count = 0;

  // Checks the layout invariants: contiguous, non-overlapping spans
  // starting at 0 and covering the whole value vector.
  void validate() const;

  bool same_layout(const FlatParams& other) const {
    return layout == other.layout;
  }

  std::span<const double> layer(const std::string& name) const;
  std::span<double> layer(const std::string& name);

  bool has_layer(const std::string& name) const;
};

// Convenience builder: layers as (name, length) in order.
FlatParams make_params(const std::vector<std::pair<std::string, std::size_t>>& layers,
                       std::size_t sample_count = 0);

struct LayerPartition {
  std::set<std::string> fixed_layers;
  std::set<std::string> variable_layers;

  // Throws PartitionMismatch unless the partition covers exactly the
  // layout's layer names with no overlap.
  void check_covers(const FlatParams& params) const;
};

// (a.b)/(|a||b|). Layouts must match; zero-norm vectors are rejected
// rather than defaulting to 0 so initialization bugs surface.
double cosine_similarity(const FlatParams& a, const FlatParams& b);

// Element-wise average weighted by sample_count. The result carries the
// summed sample_count.
FlatParams weighted_average(const std::vector<FlatParams>& models);

// Index ranges of a partition side, in layout order.
struct ParamView {
  std::vector<LayerSpan> spans;
  std::size_t total_length = 0;
};

// Splits a layout into fixed/variable views. Recombining the views
// reproduces the original vector exactly.
std::pair<ParamView, ParamView> split(const FlatParams& params,
                                      const LayerPartition& partition);

// FNV-1a over the layout and the raw little-endian bytes of the values.
std::uint64_t checksum(const FlatParams& params);

// Binary dump: layer table header (length-prefixed UTF-8 names, offsets,
// lengths), sample count, then little-endian 64-bit floats.
void write_params(std::ostream& out, const FlatParams& params);
FlatParams read_params(std::istream& in);

void save_params(const std::string& path, const FlatParams& params);
FlatParams load_params(const std::string& path);

}  // namespace treefed
