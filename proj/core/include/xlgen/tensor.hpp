#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xlgen {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ColVector = Eigen::VectorXd;

/// A named tensor, its gradient accumulator, and the freeze group it
/// belongs to.
struct Parameter {
  std::string name;
  std::string group;
  Matrix value;
  Matrix grad;
};

/// Flat, ordered parameter list. Layers refer to entries by index so that
/// models stay copyable.
class ParameterStore {
 public:
  std::size_t add(std::string name, std::string group, Eigen::Index rows, Eigen::Index cols);

  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  std::size_t size() const { return params_.size(); }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::optional<std::size_t> find(std::string_view name) const;

  /// Group names in order of first appearance.
  std::vector<std::string> groups() const;

  /// Total scalar count.
  std::size_t numel() const;

  void zero_grad();

 private:
  std::vector<Parameter> params_;
};

}  // namespace xlgen
