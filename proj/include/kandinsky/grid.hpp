#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace kandinsky {

using Index = Eigen::Index;

/// Row/column coordinate of a pixel.
struct Pixel {
  Index row = 0;
  Index col = 0;
};

/// A stack of N images of size H x W stored in C order (image, row, col).
template <typename Scalar>
class ImageStack {
 public:
  using value_type = Scalar;

  ImageStack() = default;
  ImageStack(Index images, Index rows, Index cols)
      : images_(images), rows_(rows), cols_(cols),
        values_(static_cast<std::size_t>(images * rows * cols), Scalar{0}) {}
  ImageStack(Index images, Index rows, Index cols, std::vector<Scalar> values)
      : images_(images), rows_(rows), cols_(cols), values_(std::move(values)) {}

  Index images() const { return images_; }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index pixels_per_image() const { return rows_ * cols_; }
  Index size() const { return static_cast<Index>(values_.size()); }

  Scalar& operator()(Index image, Index row, Index col) {
    return values_[flat_index(image, row, col)];
  }
  Scalar operator()(Index image, Index row, Index col) const {
    return values_[flat_index(image, row, col)];
  }

  std::span<const Scalar> values() const { return values_; }
  std::span<Scalar> values() { return values_; }

  /// One image as a row-major H x W map.
  Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  image(Index i) const {
    return {values_.data() + i * rows_ * cols_, rows_, cols_};
  }

  bool same_shape(const auto& other) const {
    return images_ == other.images() && rows_ == other.rows() && cols_ == other.cols();
  }

  friend bool operator==(const ImageStack&, const ImageStack&) = default;

 private:
  std::size_t flat_index(Index image, Index row, Index col) const {
    return static_cast<std::size_t>((image * rows_ + row) * cols_ + col);
  }

  Index images_ = 0;
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Scalar> values_;
};

/// Per-pixel foreground probabilities f(x).
using ScoreGrid = ImageStack<float>;
/// Per-pixel binary ground truth.
using LabelGrid = ImageStack<std::uint8_t>;

/// Row-major H x W array of per-pixel values.
using PixelArray = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Assignment of each pixel to a cluster id in [0, n_clusters).
struct ClusterMap {
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> assignment;
  int n_clusters = 0;

  Index rows() const { return assignment.rows(); }
  Index cols() const { return assignment.cols(); }

  friend bool operator==(const ClusterMap& a, const ClusterMap& b) {
    return a.n_clusters == b.n_clusters && a.assignment.rows() == b.assignment.rows() &&
           a.assignment.cols() == b.assignment.cols() &&
           (a.assignment == b.assignment).all();
  }
};

/// Every id in range and every id used at least once.
void validate_cluster_map(const ClusterMap& map);

/// Renumbers the used ids to 0..k-1, preserving their relative order.
ClusterMap compact_cluster_ids(const ClusterMap& map);

/// Pixel count per cluster id.
std::vector<Index> cluster_sizes(const ClusterMap& map);

}  // namespace kandinsky
