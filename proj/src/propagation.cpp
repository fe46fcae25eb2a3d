#include "geoprop/propagation.hpp"

#include <algorithm>
#include <ostream>

#include "geoprop/error.hpp"
#include "geoprop/io.hpp"
#include "geoprop/text.hpp"

namespace geoprop {

bool FollowGraph::add_edge(std::string_view follower, std::string_view followee) {
  if (follower.empty() || followee.empty() || follower == followee) {
    ++self_edges_;
    return false;
  }
  auto it = edges_.find(follower);
  if (it == edges_.end()) it = edges_.emplace(std::string(follower), std::set<std::string>{}).first;
  if (!it->second.emplace(followee).second) {
    ++duplicates_;
    return false;
  }
  users_.emplace(follower);
  users_.emplace(followee);
  ++edge_count_;
  return true;
}

const std::set<std::string>* FollowGraph::followees(std::string_view user) const {
  const auto it = edges_.find(user);
  return it == edges_.end() ? nullptr : &it->second;
}

bool FollowGraph::contains(std::string_view user) const { return users_.find(user) != users_.end(); }

FollowGraph load_graph(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  const auto first_line = content.substr(0, content.find('\n'));
  const char delimiter = first_line.find('\t') != std::string::npos ? '\t' : ',';

  FollowGraph graph;
  const auto rows = parse_csv(content, delimiter);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != 2) {
      throw Error(ErrorKind::FormatMismatch,
                  path.string() + ": expected two columns on row " + std::to_string(i + 1));
    }
    const auto follower = text::trim(row[0]);
    const auto followee = text::trim(row[1]);
    if (i == 0 && follower == "follower_id" && followee == "followee_id") continue;
    graph.add_edge(follower, followee);
  }
  return graph;
}

std::string_view to_string(NodeKind kind) { return kind == NodeKind::Root ? "root" : "child"; }

std::size_t PropagationForest::child_count() const {
  return static_cast<std::size_t>(std::count_if(classification.begin(), classification.end(),
                                                [](const auto& e) { return e.second == NodeKind::Child; }));
}

PropagationForest classify(std::span<const Message> messages, const FollowGraph& graph,
                           const ClassifyOptions& options) {
  PropagationForest forest;
  for (const auto& m : messages) {
    if (options.graph_users_only && !graph.contains(m.user_id)) continue;
    auto [it, inserted] = forest.first_post.emplace(m.user_id, m.timestamp);
    if (!inserted) it->second = std::min(it->second, m.timestamp);
  }

  for (const auto& [user, posted] : forest.first_post) {
    std::set<std::string> parents;
    if (const auto* followees = graph.followees(user)) {
      for (const auto& v : *followees) {
        const auto it = forest.first_post.find(v);
        if (it != forest.first_post.end() && it->second < posted) parents.insert(v);
      }
    }
    forest.classification.emplace(user, parents.empty() ? NodeKind::Root : NodeKind::Child);
    if (!parents.empty()) forest.parent_candidates.emplace(user, std::move(parents));
  }
  return forest;
}

std::vector<CurvePoint> child_proportion_curve(const PropagationForest& forest,
                                               const WindowSpec& spec, std::size_t peak) {
  if (forest.first_post.empty()) throw Error(ErrorKind::EmptyForest, "no posting users");
  if (spec.width <= 0) throw Error(ErrorKind::InvalidArgument, "window width must be positive");

  std::vector<std::pair<std::int64_t, bool>> posts;  // (first post, is child)
  posts.reserve(forest.first_post.size());
  for (const auto& [user, t] : forest.first_post) {
    posts.emplace_back(t, forest.classification.at(user) == NodeKind::Child);
  }
  std::sort(posts.begin(), posts.end());

  std::vector<CurvePoint> curve;
  curve.reserve(spec.count);
  std::size_t next = 0;
  std::size_t children = 0;
  for (std::size_t k = 0; k < spec.count; ++k) {
    const std::int64_t checkpoint = spec.start(k + 1);
    while (next < posts.size() && posts[next].first < checkpoint) {
      children += posts[next].second ? 1 : 0;
      ++next;
    }
    CurvePoint point;
    const auto offset = static_cast<std::int64_t>(k) - static_cast<std::int64_t>(peak);
    point.minutes_from_peak = static_cast<double>(offset * spec.width) / 60.0;
    point.cumulative_users = next;
    point.cumulative_children = children;
    if (next > 0) point.child_fraction = static_cast<double>(children) / static_cast<double>(next);
    curve.push_back(point);
  }
  return curve;
}

void write_classification_csv(std::ostream& out, const PropagationForest& forest) {
  out << "user_id,first_post,kind,parent_candidates\n";
  for (const auto& [user, kind] : forest.classification) {
    std::string parents;
    if (const auto it = forest.parent_candidates.find(user); it != forest.parent_candidates.end()) {
      for (const auto& p : it->second) {
        if (!parents.empty()) parents.push_back(' ');
        parents += p;
      }
    }
    out << csv_escape(user) << ',' << forest.first_post.at(user) << ',' << to_string(kind) << ','
        << csv_escape(parents) << '\n';
  }
}

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve) {
  out << "minutes_from_peak,cumulative_users,cumulative_children,child_fraction\n";
  for (const auto& p : curve) {
    out << format_double(p.minutes_from_peak) << ',' << p.cumulative_users << ','
        << p.cumulative_children << ',';
    if (p.child_fraction) out << format_double(*p.child_fraction);
    out << '\n';
  }
}

}  // namespace geoprop
