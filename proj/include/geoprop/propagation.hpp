#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geoprop/corpus.hpp"
#include "geoprop/temporal.hpp"

namespace geoprop {

/// follower -> followees.
class FollowGraph {
 public:
  /// Returns false (and counts it) for a self-edge or an empty id; duplicate
  /// edges collapse.
  bool add_edge(std::string_view follower, std::string_view followee);

  const std::set<std::string>* followees(std::string_view user) const;
  bool contains(std::string_view user) const;

  std::size_t edge_count() const noexcept { return edge_count_; }
  std::size_t self_edges_dropped() const noexcept { return self_edges_; }
  std::size_t duplicates_collapsed() const noexcept { return duplicates_; }
  const std::map<std::string, std::set<std::string>, std::less<>>& edges() const noexcept {
    return edges_;
  }

 private:
  std::map<std::string, std::set<std::string>, std::less<>> edges_;
  std::set<std::string, std::less<>> users_;
  std::size_t edge_count_ = 0;
  std::size_t self_edges_ = 0;
  std::size_t duplicates_ = 0;
};

/// Two-column follower,followee list; comma or tab separated, optional
/// header row.
FollowGraph load_graph(const std::filesystem::path& path);

enum class NodeKind { Root, Child };

std::string_view to_string(NodeKind kind);

struct PropagationForest {
  std::map<std::string, std::int64_t> first_post;
  std::map<std::string, NodeKind> classification;
  std::map<std::string, std::set<std::string>> parent_candidates;

  std::size_t child_count() const;
};

struct ClassifyOptions {
  /// Ignore posters that do not appear in the graph instead of counting
  /// them as roots.
  bool graph_users_only = false;
};

/// A poster is a child iff some followee's first post is strictly earlier
/// than theirs; otherwise a root.
PropagationForest classify(std::span<const Message> messages, const FollowGraph& graph,
                           const ClassifyOptions& options = {});

struct CurvePoint {
  double minutes_from_peak = 0.0;
  std::size_t cumulative_users = 0;
  std::size_t cumulative_children = 0;
  std::optional<double> child_fraction;
};

/// One checkpoint per window end: among users whose first post precedes the
/// end of window k, the fraction that are children.
std::vector<CurvePoint> child_proportion_curve(const PropagationForest& forest,
                                               const WindowSpec& spec, std::size_t peak);

void write_classification_csv(std::ostream& out, const PropagationForest& forest);
void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve);

}  // namespace geoprop
