#include "kandinsky/grid.hpp"

#include "kandinsky/error.hpp"

#include <string>
#include <algorithm>

namespace kandinsky {

void validate_cluster_map(const ClusterMap& map) {
  if (map.n_clusters < 1) throw ValidationError("cluster map has no clusters");
  std::vector<Index> counts(static_cast<std::size_t>(map.n_clusters), 0);
  for (Index i = 0; i < map.assignment.size(); ++i) {
    const int id = map.assignment.data()[i];
    if (id < 0 || id >= map.n_clusters)
      throw ValidationError("cluster id " + std::to_string(id) + " at flat index " +
                            std::to_string(i) + " is out of range");
    ++counts[static_cast<std::size_t>(id)];
  }
  for (std::size_t id = 0; id < counts.size(); ++id) {
    if (counts[id] == 0) throw ValidationError("cluster id " + std::to_string(id) + " is empty");
  }
}

ClusterMap compact_cluster_ids(const ClusterMap& map) {
  int max_id = -1;
  for (Index i = 0; i < map.assignment.size(); ++i) {
    if (map.assignment.data()[i] < 0) throw ValidationError("negative cluster id");
    max_id = std::max(max_id, map.assignment.data()[i]);
  }
  std::vector<int> remap(static_cast<std::size_t>(max_id + 1), -1);
  for (Index i = 0; i < map.assignment.size(); ++i)
    remap[static_cast<std::size_t>(map.assignment.data()[i])] = 0;
  int next = 0;
  for (auto& id : remap) {
    if (id == 0) id = next++;
  }
  ClusterMap out;
  out.assignment.resize(map.rows(), map.cols());
  for (Index i = 0; i < map.assignment.size(); ++i)
    out.assignment.data()[i] = remap[static_cast<std::size_t>(map.assignment.data()[i])];
  out.n_clusters = next;
  return out;
}

std::vector<Index> cluster_sizes(const ClusterMap& map) {
  std::vector<Index> counts(static_cast<std::size_t>(std::max(map.n_clusters, 0)), 0);
  for (Index i = 0; i < map.assignment.size(); ++i) {
    const int id = map.assignment.data()[i];
    if (id >= 0 && id < map.n_clusters) ++counts[static_cast<std::size_t>(id)];
  }
  return counts;
}

}  // namespace kandinsky
